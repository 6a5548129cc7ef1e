#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ntnkb/embeddings.hpp"
#include "ntnkb/kb.hpp"

namespace ntnkb {

// Numeric values are the checkpoint's model-kind byte.
enum class ModelKind : std::uint8_t { ntn = 0, bilinear = 1, similarity = 2, hadamard = 3 };

enum class Orientation { higher_is_plausible, lower_is_plausible };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

// NTN and bilinear scores are plausibilities already. The baselines' raw
// scores are lower for true triplets: the similarity model's L1 distance and
// the Hadamard model's gated inner product. For those, plausibility = -raw,
// which for the Hadamard model is its negated gated inner product.
Orientation orientation_of(ModelKind kind);

struct ModelShape {
    ModelKind kind = ModelKind::ntn;
    std::size_t dimension = 0;
    std::size_t slices = 0;  // NTN slice count; 1 for bilinear, 0 for the baselines
    std::size_t entities = 0;
    std::size_t relations = 0;
    bool share_u = false;  // NTN only, and only meaningful with more than one relation

    friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

// Normalizes slices/share_u for the kind so equal models have equal shapes.
ModelShape make_shape(ModelKind kind, std::size_t dimension, std::size_t slices,
                      std::size_t entities, std::size_t relations, bool share_u = false);

// Offsets of every parameter group inside the flat vector. Order: entity
// embeddings by id, per-relation records in relation-id order, then shared
// parameters. This is also the checkpoint payload order.
class ParameterLayout {
public:
    explicit ParameterLayout(const ModelShape& shape);

    std::size_t size() const noexcept { return size_; }
    std::size_t entity(std::size_t e) const noexcept { return e * d_; }
    std::size_t relation_record(std::size_t r) const noexcept {
        return relations_begin_ + r * record_size_;
    }
    std::size_t record_size() const noexcept { return record_size_; }
    std::size_t shared_begin() const noexcept { return shared_begin_; }

    // NTN (W slices are d x d row-major, slice-major overall; V rows are
    // [V_left | V_right]).
    std::size_t ntn_w(std::size_t r) const noexcept { return relation_record(r); }
    std::size_t ntn_v(std::size_t r) const noexcept { return ntn_w(r) + k_ * d_ * d_; }
    std::size_t ntn_u(std::size_t r) const noexcept {
        return share_u_ ? shared_begin_ : ntn_v(r) + k_ * 2 * d_;
    }
    std::size_t ntn_b(std::size_t r) const noexcept {
        return ntn_v(r) + k_ * 2 * d_ + (share_u_ ? 0 : k_);
    }
    // Bilinear
    std::size_t bilinear_w(std::size_t r) const noexcept { return relation_record(r); }
    // Similarity
    std::size_t sim_left(std::size_t r) const noexcept { return relation_record(r); }
    std::size_t sim_right(std::size_t r) const noexcept { return relation_record(r) + d_ * d_; }
    // Hadamard
    std::size_t had_relation(std::size_t r) const noexcept { return relation_record(r); }
    std::size_t had_w1() const noexcept { return shared_begin_; }
    std::size_t had_w2() const noexcept { return shared_begin_ + d_ * d_; }
    std::size_t had_wrel1() const noexcept { return shared_begin_ + 2 * d_ * d_; }
    std::size_t had_wrel2() const noexcept { return shared_begin_ + 3 * d_ * d_; }
    std::size_t had_b1() const noexcept { return shared_begin_ + 4 * d_ * d_; }
    std::size_t had_b2() const noexcept { return shared_begin_ + 4 * d_ * d_ + d_; }

    // Name of the parameter group owning a flat offset, e.g. "relation 2 V".
    std::string describe(std::size_t offset) const;

private:
    ModelKind kind_;
    std::size_t d_;
    std::size_t k_;
    bool share_u_;
    std::size_t relations_begin_;
    std::size_t record_size_;
    std::size_t shared_begin_;
    std::size_t size_;
};

struct NtnRelationView {
    std::span<const double> W;  // k * d * d
    std::span<const double> V;  // k * 2d
    std::span<const double> U;  // k
    std::span<const double> b;  // k
    std::size_t dimension;
    std::size_t slices;
};

struct SimilarityRelationView {
    std::span<const double> W_left;   // d * d
    std::span<const double> W_right;  // d * d
    std::size_t dimension;
};

struct HadamardView {
    std::span<const double> W1, W2, Wrel1, Wrel2;  // d * d each
    std::span<const double> b1, b2;                // d each
    std::span<const double> e_R;                   // d, per relation
    std::size_t dimension;
};

enum class Activation { tanh, identity };

// e1^T M e2 for a d x d row-major M.
double quadratic_form(std::span<const double> e1, std::span<const double> M,
                      std::span<const double> e2);

// h_i = e1^T W^[i] e2 for every slice of a d x d x k tensor.
std::vector<double> bilinear_tensor_product(std::span<const double> e1,
                                            std::span<const double> e2,
                                            std::span<const double> W, std::size_t slices);

double score_ntn(const NtnRelationView& p, std::span<const double> e1,
                 std::span<const double> e2, Activation f = Activation::tanh);
double score_bilinear(std::span<const double> W, std::span<const double> e1,
                      std::span<const double> e2);
// L1 distance; lower is more plausible.
double score_similarity(const SimilarityRelationView& p, std::span<const double> e1,
                        std::span<const double> e2);
double score_hadamard(const HadamardView& p, std::span<const double> e1,
                      std::span<const double> e2);

class ModelParams {
public:
    ModelParams(const ModelShape& shape, std::vector<double> theta);

    // Relation and shared parameters are i.i.d. uniform on +-1/sqrt(2d).
    static ModelParams initialize(const ModelShape& shape, const EmbeddingMatrix& entities,
                                  std::uint64_t seed);

    const ModelShape& shape() const noexcept { return shape_; }
    const ParameterLayout& layout() const noexcept { return layout_; }
    Orientation orientation() const noexcept { return orientation_of(shape_.kind); }

    std::span<const double> theta() const noexcept { return theta_; }
    std::span<double> theta() noexcept { return theta_; }

    std::span<const double> entity(EntityId e) const {
        return {theta_.data() + layout_.entity(e.index), shape_.dimension};
    }
    EmbeddingMatrix embeddings() const;

    NtnRelationView ntn(RelationId r) const;
    std::span<const double> bilinear(RelationId r) const;
    SimilarityRelationView similarity(RelationId r) const;
    HadamardView hadamard(RelationId r) const;

    // Un-oriented score: L1 distance (similarity), gated inner product
    // (Hadamard), or the plausibility itself (NTN, bilinear).
    double raw_score(RelationId r, std::span<const double> e1, std::span<const double> e2) const;
    // Oriented score: higher always means more plausible.
    double plausibility(RelationId r, std::span<const double> e1,
                        std::span<const double> e2) const;
    double plausibility(const Triplet& t) const {
        return plausibility(t.relation, entity(t.left), entity(t.right));
    }

    // grad[offset] += scale * d plausibility(left, r, right) / d theta.
    void accumulate_plausibility_gradient(const Triplet& t, double scale,
                                          std::span<double> grad) const;

    // The layout is a function of the shape.
    friend bool operator==(const ModelParams& a, const ModelParams& b) {
        return a.shape_ == b.shape_ && a.theta_ == b.theta_;
    }

private:
    void check_relation(RelationId r) const;

    ModelShape shape_;
    ParameterLayout layout_;
    std::vector<double> theta_;
};

enum class CorruptSide : std::uint8_t { left, right };

// Dense gradient of one hinge term with the loss value and the entities it
// touches.
struct GradientSet {
    std::vector<double> values;  // layout-congruent with ModelParams::theta
    std::vector<EntityId> touched_entities;
    double loss = 0.0;
};

// Gradient of max(0, 1 - p(correct) + p(corrupted)) where the corrupted
// triplet replaces one side of `correct` by `substitute`.
GradientSet pair_gradient(const ModelParams& params, const Triplet& correct,
                          EntityId substitute, CorruptSide side = CorruptSide::right);

Triplet corrupted(const Triplet& t, EntityId substitute, CorruptSide side);

}  // namespace ntnkb
