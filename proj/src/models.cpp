#include "ntnkb/models.hpp"

#include <algorithm>
#include <cmath>

#include "ntnkb/error.hpp"
#include "ntnkb/random.hpp"

namespace ntnkb {

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::ntn: return "ntn";
        case ModelKind::bilinear: return "bilinear";
        case ModelKind::similarity: return "similarity";
        case ModelKind::hadamard: return "hadamard";
    }
    return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
    for (auto k : {ModelKind::ntn, ModelKind::bilinear, ModelKind::similarity, ModelKind::hadamard})
        if (to_string(k) == name) return k;
    throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

Orientation orientation_of(ModelKind kind) {
    return (kind == ModelKind::ntn || kind == ModelKind::bilinear)
               ? Orientation::higher_is_plausible
               : Orientation::lower_is_plausible;
}

ModelShape make_shape(ModelKind kind, std::size_t dimension, std::size_t slices,
                      std::size_t entities, std::size_t relations, bool share_u) {
    if (dimension == 0) throw ConfigError("dimension must be positive");
    ModelShape s{kind, dimension, slices, entities, relations, false};
    switch (kind) {
        case ModelKind::ntn:
            if (slices == 0) throw ConfigError("slice count must be positive");
            s.share_u = share_u && relations > 1;
            break;
        case ModelKind::bilinear: s.slices = 1; break;
        case ModelKind::similarity:
        case ModelKind::hadamard: s.slices = 0; break;
    }
    return s;
}

ParameterLayout::ParameterLayout(const ModelShape& shape)
    : kind_(shape.kind), d_(shape.dimension), k_(shape.slices), share_u_(shape.share_u) {
    relations_begin_ = shape.entities * d_;
    std::size_t shared = 0;
    switch (kind_) {
        case ModelKind::ntn:
            record_size_ = k_ * d_ * d_ + k_ * 2 * d_ + k_ + (share_u_ ? 0 : k_);
            shared = share_u_ ? k_ : 0;
            break;
        case ModelKind::bilinear: record_size_ = d_ * d_; break;
        case ModelKind::similarity: record_size_ = 2 * d_ * d_; break;
        case ModelKind::hadamard:
            record_size_ = d_;
            shared = 4 * d_ * d_ + 2 * d_;
            break;
    }
    shared_begin_ = relations_begin_ + shape.relations * record_size_;
    size_ = shared_begin_ + shared;
}

std::string ParameterLayout::describe(std::size_t offset) const {
    if (offset >= size_) return "out of range";
    if (offset < relations_begin_) return "entity " + std::to_string(offset / d_) + " embedding";
    if (offset >= shared_begin_) {
        const std::size_t rel = offset - shared_begin_;
        if (kind_ == ModelKind::ntn) return "shared U";
        static constexpr const char* names[] = {"W1", "W2", "Wrel1", "Wrel2"};
        if (rel < 4 * d_ * d_) return std::string("shared ") + names[rel / (d_ * d_)];
        return rel < 4 * d_ * d_ + d_ ? "shared b1" : "shared b2";
    }
    const std::size_t r = (offset - relations_begin_) / record_size_;
    const std::size_t in = (offset - relations_begin_) % record_size_;
    const std::string prefix = "relation " + std::to_string(r) + " ";
    switch (kind_) {
        case ModelKind::ntn:
            if (in < k_ * d_ * d_) return prefix + "W";
            if (in < k_ * d_ * d_ + k_ * 2 * d_) return prefix + "V";
            if (!share_u_ && in < k_ * d_ * d_ + k_ * 2 * d_ + k_) return prefix + "U";
            return prefix + "b";
        case ModelKind::bilinear: return prefix + "W";
        case ModelKind::similarity: return prefix + (in < d_ * d_ ? "W_left" : "W_right");
        case ModelKind::hadamard: return prefix + "e_R";
    }
    return prefix;
}

double quadratic_form(std::span<const double> e1, std::span<const double> M,
                      std::span<const double> e2) {
    const std::size_t d = e1.size();
    if (e2.size() != d || M.size() != d * d)
        throw ContractViolation("quadratic_form: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < d; ++j) row += M[i * d + j] * e2[j];
        acc += e1[i] * row;
    }
    return acc;
}

std::vector<double> bilinear_tensor_product(std::span<const double> e1,
                                            std::span<const double> e2,
                                            std::span<const double> W, std::size_t slices) {
    const std::size_t d = e1.size();
    if (e2.size() != d || W.size() != slices * d * d)
        throw ContractViolation("bilinear_tensor_product: shape mismatch");
    std::vector<double> h(slices);
    for (std::size_t s = 0; s < slices; ++s) h[s] = quadratic_form(e1, W.subspan(s * d * d, d * d), e2);
    return h;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

// out = M x for a d x d row-major M.
void matvec(std::span<const double> M, std::span<const double> x, std::span<double> out) {
    const std::size_t d = x.size();
    for (std::size_t i = 0; i < d; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += M[i * d + j] * x[j];
        out[i] = acc;
    }
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void require(bool ok, const char* what) {
    if (!ok) throw ContractViolation(what);
}

}  // namespace

double score_ntn(const NtnRelationView& p, std::span<const double> e1, std::span<const double> e2,
                 Activation f) {
    const std::size_t d = p.dimension;
    const std::size_t k = p.slices;
    require(e1.size() == d && e2.size() == d && p.W.size() == k * d * d && p.V.size() == k * 2 * d &&
                p.U.size() == k && p.b.size() == k,
            "score_ntn: shape mismatch");
    const auto h = bilinear_tensor_product(e1, e2, p.W, k);
    double g = 0.0;
    for (std::size_t s = 0; s < k; ++s) {
        const auto v = p.V.subspan(s * 2 * d, 2 * d);
        const double z = h[s] + dot(v.first(d), e1) + dot(v.last(d), e2) + p.b[s];
        g += p.U[s] * (f == Activation::tanh ? std::tanh(z) : z);
    }
    return g;
}

double score_bilinear(std::span<const double> W, std::span<const double> e1,
                      std::span<const double> e2) {
    return quadratic_form(e1, W, e2);
}

double score_similarity(const SimilarityRelationView& p, std::span<const double> e1,
                        std::span<const double> e2) {
    const std::size_t d = p.dimension;
    require(e1.size() == d && e2.size() == d && p.W_left.size() == d * d &&
                p.W_right.size() == d * d,
            "score_similarity: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        double u = 0.0;
        for (std::size_t j = 0; j < d; ++j) u += p.W_left[i * d + j] * e1[j];
        for (std::size_t j = 0; j < d; ++j) u -= p.W_right[i * d + j] * e2[j];
        acc += std::abs(u);
    }
    return acc;
}

namespace {

// x = (W1 e1) * (Wrel1 eR) + b1 and the mirror for y; returns x . y.
double hadamard_inner(const HadamardView& p, std::span<const double> e1,
                      std::span<const double> e2) {
    const std::size_t d = p.dimension;
    require(e1.size() == d && e2.size() == d && p.W1.size() == d * d && p.W2.size() == d * d &&
                p.Wrel1.size() == d * d && p.Wrel2.size() == d * d && p.b1.size() == d &&
                p.b2.size() == d && p.e_R.size() == d,
            "score_hadamard: shape mismatch");
    std::vector<double> a1(d), c1(d), a2(d), c2(d);
    matvec(p.W1, e1, a1);
    matvec(p.Wrel1, p.e_R, c1);
    matvec(p.W2, e2, a2);
    matvec(p.Wrel2, p.e_R, c2);
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) acc += (a1[i] * c1[i] + p.b1[i]) * (a2[i] * c2[i] + p.b2[i]);
    return acc;
}

}  // namespace

double score_hadamard(const HadamardView& p, std::span<const double> e1,
                      std::span<const double> e2) {
    return -hadamard_inner(p, e1, e2);
}

ModelParams::ModelParams(const ModelShape& shape, std::vector<double> theta)
    : shape_(shape), layout_(shape), theta_(std::move(theta)) {
    if (theta_.size() != layout_.size())
        throw ContractViolation("parameter vector has " + std::to_string(theta_.size()) +
                                " values, layout needs " + std::to_string(layout_.size()));
}

ModelParams ModelParams::initialize(const ModelShape& shape, const EmbeddingMatrix& entities,
                                    std::uint64_t seed) {
    if (entities.rows() != shape.entities || entities.dimension() != shape.dimension)
        throw ConfigError("embedding matrix does not match the model shape");
    ParameterLayout layout(shape);
    std::vector<double> theta(layout.size());
    std::copy(entities.values().begin(), entities.values().end(), theta.begin());
    const double r = 1.0 / std::sqrt(2.0 * static_cast<double>(shape.dimension));
    auto rng = Rng::derived({seed, 0x706172616d73ULL});
    for (std::size_t i = layout.relation_record(0); i < theta.size(); ++i) theta[i] = rng.symmetric(r);
    return ModelParams(shape, std::move(theta));
}

EmbeddingMatrix ModelParams::embeddings() const {
    EmbeddingMatrix m(shape_.entities, shape_.dimension);
    for (std::size_t e = 0; e < shape_.entities; ++e) {
        auto src = entity(EntityId{static_cast<std::uint32_t>(e)});
        std::copy(src.begin(), src.end(), m.row(e).begin());
    }
    return m;
}

void ModelParams::check_relation(RelationId r) const {
    if (r.index >= shape_.relations) throw ContractViolation("relation id out of range");
}

NtnRelationView ModelParams::ntn(RelationId r) const {
    check_relation(r);
    const std::size_t d = shape_.dimension, k = shape_.slices;
    const double* t = theta_.data();
    return {{t + layout_.ntn_w(r.index), k * d * d},
            {t + layout_.ntn_v(r.index), k * 2 * d},
            {t + layout_.ntn_u(r.index), k},
            {t + layout_.ntn_b(r.index), k},
            d,
            k};
}

std::span<const double> ModelParams::bilinear(RelationId r) const {
    check_relation(r);
    const std::size_t d = shape_.dimension;
    return {theta_.data() + layout_.bilinear_w(r.index), d * d};
}

SimilarityRelationView ModelParams::similarity(RelationId r) const {
    check_relation(r);
    const std::size_t d = shape_.dimension;
    return {{theta_.data() + layout_.sim_left(r.index), d * d},
            {theta_.data() + layout_.sim_right(r.index), d * d},
            d};
}

HadamardView ModelParams::hadamard(RelationId r) const {
    check_relation(r);
    const std::size_t d = shape_.dimension;
    const double* t = theta_.data();
    return {{t + layout_.had_w1(), d * d},    {t + layout_.had_w2(), d * d},
            {t + layout_.had_wrel1(), d * d}, {t + layout_.had_wrel2(), d * d},
            {t + layout_.had_b1(), d},        {t + layout_.had_b2(), d},
            {t + layout_.had_relation(r.index), d}, d};
}

double ModelParams::raw_score(RelationId r, std::span<const double> e1,
                              std::span<const double> e2) const {
    switch (shape_.kind) {
        case ModelKind::ntn: return score_ntn(ntn(r), e1, e2);
        case ModelKind::bilinear: return score_bilinear(bilinear(r), e1, e2);
        case ModelKind::similarity: return score_similarity(similarity(r), e1, e2);
        case ModelKind::hadamard: return hadamard_inner(hadamard(r), e1, e2);
    }
    return 0.0;
}

double ModelParams::plausibility(RelationId r, std::span<const double> e1,
                                 std::span<const double> e2) const {
    const double raw = raw_score(r, e1, e2);
    return orientation() == Orientation::higher_is_plausible ? raw : -raw;
}

void ModelParams::accumulate_plausibility_gradient(const Triplet& t, double scale,
                                                   std::span<double> grad) const {
    if (grad.size() != theta_.size()) throw ContractViolation("gradient buffer has wrong size");
    check_relation(t.relation);
    const std::size_t d = shape_.dimension;
    const std::size_t r = t.relation.index;
    const auto e1 = entity(t.left);
    const auto e2 = entity(t.right);
    double* g1 = grad.data() + layout_.entity(t.left.index);
    double* g2 = grad.data() + layout_.entity(t.right.index);
    const double* th = theta_.data();

    switch (shape_.kind) {
        case ModelKind::ntn: {
            const std::size_t k = shape_.slices;
            std::vector<double> w_e2(d);
            for (std::size_t s = 0; s < k; ++s) {
                const double* W = th + layout_.ntn_w(r) + s * d * d;
                const double* V = th + layout_.ntn_v(r) + s * 2 * d;
                const double u = th[layout_.ntn_u(r) + s];
                double z = th[layout_.ntn_b(r) + s];
                for (std::size_t i = 0; i < d; ++i) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < d; ++j) acc += W[i * d + j] * e2[j];
                    w_e2[i] = acc;
                    z += e1[i] * acc + V[i] * e1[i] + V[d + i] * e2[i];
                }
                const double a = std::tanh(z);
                grad[layout_.ntn_u(r) + s] += scale * a;
                const double delta = scale * u * (1.0 - a * a);
                if (delta == 0.0) continue;
                grad[layout_.ntn_b(r) + s] += delta;
                double* gW = grad.data() + layout_.ntn_w(r) + s * d * d;
                double* gV = grad.data() + layout_.ntn_v(r) + s * 2 * d;
                for (std::size_t i = 0; i < d; ++i) {
                    gV[i] += delta * e1[i];
                    gV[d + i] += delta * e2[i];
                    g1[i] += delta * (w_e2[i] + V[i]);
                    for (std::size_t j = 0; j < d; ++j) {
                        gW[i * d + j] += delta * e1[i] * e2[j];
                        g2[j] += delta * W[i * d + j] * e1[i];
                    }
                }
                for (std::size_t j = 0; j < d; ++j) g2[j] += delta * V[d + j];
            }
            break;
        }
        case ModelKind::bilinear: {
            const double* W = th + layout_.bilinear_w(r);
            double* gW = grad.data() + layout_.bilinear_w(r);
            for (std::size_t i = 0; i < d; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    gW[i * d + j] += scale * e1[i] * e2[j];
                    g2[j] += scale * W[i * d + j] * e1[i];
                    acc += W[i * d + j] * e2[j];
                }
                g1[i] += scale * acc;
            }
            break;
        }
        case ModelKind::similarity: {
            // plausibility = -sum_i |(Wl e1 - Wr e2)_i|
            const double* Wl = th + layout_.sim_left(r);
            const double* Wr = th + layout_.sim_right(r);
            double* gWl = grad.data() + layout_.sim_left(r);
            double* gWr = grad.data() + layout_.sim_right(r);
            for (std::size_t i = 0; i < d; ++i) {
                double u = 0.0;
                for (std::size_t j = 0; j < d; ++j) u += Wl[i * d + j] * e1[j];
                for (std::size_t j = 0; j < d; ++j) u -= Wr[i * d + j] * e2[j];
                const double c = -scale * sign(u);
                if (c == 0.0) continue;
                for (std::size_t j = 0; j < d; ++j) {
                    gWl[i * d + j] += c * e1[j];
                    gWr[i * d + j] -= c * e2[j];
                    g1[j] += c * Wl[i * d + j];
                    g2[j] -= c * Wr[i * d + j];
                }
            }
            break;
        }
        case ModelKind::hadamard: {
            // plausibility = -x . y, x = a1 * c1 + b1, y = a2 * c2 + b2
            const auto p = hadamard(t.relation);
            std::vector<double> a1(d), c1(d), a2(d), c2(d);
            matvec(p.W1, e1, a1);
            matvec(p.Wrel1, p.e_R, c1);
            matvec(p.W2, e2, a2);
            matvec(p.Wrel2, p.e_R, c2);
            double* gb1 = grad.data() + layout_.had_b1();
            double* gb2 = grad.data() + layout_.had_b2();
            double* gW1 = grad.data() + layout_.had_w1();
            double* gW2 = grad.data() + layout_.had_w2();
            double* gWr1 = grad.data() + layout_.had_wrel1();
            double* gWr2 = grad.data() + layout_.had_wrel2();
            double* geR = grad.data() + layout_.had_relation(r);
            for (std::size_t i = 0; i < d; ++i) {
                const double x = a1[i] * c1[i] + p.b1[i];
                const double y = a2[i] * c2[i] + p.b2[i];
                const double gx = -scale * y;
                const double gy = -scale * x;
                gb1[i] += gx;
                gb2[i] += gy;
                const double ga1 = gx * c1[i], gc1 = gx * a1[i];
                const double ga2 = gy * c2[i], gc2 = gy * a2[i];
                for (std::size_t j = 0; j < d; ++j) {
                    gW1[i * d + j] += ga1 * e1[j];
                    g1[j] += ga1 * p.W1[i * d + j];
                    gWr1[i * d + j] += gc1 * p.e_R[j];
                    geR[j] += gc1 * p.Wrel1[i * d + j];
                    gW2[i * d + j] += ga2 * e2[j];
                    g2[j] += ga2 * p.W2[i * d + j];
                    gWr2[i * d + j] += gc2 * p.e_R[j];
                    geR[j] += gc2 * p.Wrel2[i * d + j];
                }
            }
            break;
        }
    }
}

Triplet corrupted(const Triplet& t, EntityId substitute, CorruptSide side) {
    Triplet c = t;
    (side == CorruptSide::right ? c.right : c.left) = substitute;
    return c;
}

GradientSet pair_gradient(const ModelParams& params, const Triplet& correct,
                          EntityId substitute, CorruptSide side) {
    GradientSet out;
    out.values.assign(params.theta().size(), 0.0);
    const Triplet negative = corrupted(correct, substitute, side);
    const double margin = 1.0 - params.plausibility(correct) + params.plausibility(negative);
    out.loss = std::max(0.0, margin);
    // Subgradient 0 at the kink.
    if (margin <= 0.0) return out;
    params.accumulate_plausibility_gradient(correct, -1.0, out.values);
    params.accumulate_plausibility_gradient(negative, 1.0, out.values);
    out.touched_entities = {correct.left, correct.right, substitute};
    std::sort(out.touched_entities.begin(), out.touched_entities.end());
    out.touched_entities.erase(std::unique(out.touched_entities.begin(), out.touched_entities.end()),
                               out.touched_entities.end());
    return out;
}

}  // namespace ntnkb
