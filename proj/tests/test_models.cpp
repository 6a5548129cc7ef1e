#include "doctest.h"

#include <cmath>

#include "helpers.hpp"
#include "ntnkb/error.hpp"
#include "ntnkb/gradcheck.hpp"
#include "ntnkb/models.hpp"

using namespace ntnkb;

namespace {

std::vector<double> identity(std::size_t d) {
    std::vector<double> m(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) m[i * d + i] = 1.0;
    return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Fills relation 0 of a one-relation NTN so it computes the bilinear form W.
void set_special_case(ModelParams& p, std::span<const double> W) {
    auto th = p.theta();
    const auto& L = p.layout();
    const std::size_t d = p.shape().dimension;
    std::copy(W.begin(), W.end(), th.begin() + static_cast<std::ptrdiff_t>(L.ntn_w(0)));
    std::fill_n(th.begin() + static_cast<std::ptrdiff_t>(L.ntn_v(0)), 2 * d, 0.0);
    th[L.ntn_u(0)] = 1.0;
    th[L.ntn_b(0)] = 0.0;
}

}  // namespace

TEST_CASE("bilinear tensor product") {
    std::vector<double> e1{1, 0}, e2{0, 1}, W{0, 1, 0, 0};
    CHECK(bilinear_tensor_product(e1, e2, W, 1) == std::vector<double>{1.0});

    Rng rng(1);
    auto a = testing::random_vector(rng, 3), b = testing::random_vector(rng, 3);
    auto I = identity(3);
    std::vector<double> I2(I);
    I2.insert(I2.end(), I.begin(), I.end());
    auto h = bilinear_tensor_product(a, b, I2, 2);
    CHECK(h[0] == doctest::Approx(dot(a, b)).epsilon(1e-15));
    CHECK(h[1] == h[0]);

    std::vector<double> zero(3, 0.0);
    auto Wr = testing::random_vector(rng, 18);
    for (double v : bilinear_tensor_product(zero, b, Wr, 2)) CHECK(v == 0.0);

    CHECK_THROWS_AS(bilinear_tensor_product(a, b, Wr, 3), ContractViolation);
}

TEST_CASE("tensor product is linear in each argument") {
    Rng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t d = 2 + rng.below(4), k = 1 + rng.below(3);
        auto W = testing::random_vector(rng, d * d * k);
        auto x = testing::random_vector(rng, d), y = testing::random_vector(rng, d);
        auto e = testing::random_vector(rng, d);
        const double a = rng.symmetric(2.0), b = rng.symmetric(2.0);
        std::vector<double> z(d);
        for (std::size_t i = 0; i < d; ++i) z[i] = a * x[i] + b * y[i];
        auto hz = bilinear_tensor_product(z, e, W, k);
        auto hx = bilinear_tensor_product(x, e, W, k);
        auto hy = bilinear_tensor_product(y, e, W, k);
        for (std::size_t i = 0; i < k; ++i) CHECK(std::abs(hz[i] - (a * hx[i] + b * hy[i])) <= 1e-12);
        auto gz = bilinear_tensor_product(e, z, W, k);
        auto gx = bilinear_tensor_product(e, x, W, k);
        auto gy = bilinear_tensor_product(e, y, W, k);
        for (std::size_t i = 0; i < k; ++i) CHECK(std::abs(gz[i] - (a * gx[i] + b * gy[i])) <= 1e-12);
    }
}

TEST_CASE("NTN score") {
    auto shape = make_shape(ModelKind::ntn, 2, 1, 2, 1);
    ModelParams zero(shape, std::vector<double>(ParameterLayout(shape).size(), 0.0));
    std::vector<double> e1{1, 0}, e2{0, 1};
    CHECK(zero.plausibility(RelationId{0}, e1, e2) == 0.0);

    ModelParams p = zero;
    std::vector<double> W{0, 1, 0, 0};
    set_special_case(p, W);
    CHECK(score_ntn(p.ntn(RelationId{0}), e1, e2) == std::tanh(1.0));
    CHECK(score_ntn(p.ntn(RelationId{0}), e1, e2, Activation::identity) == 1.0);
}

TEST_CASE("NTN is bounded by the sum of |U|") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        auto shape = make_shape(ModelKind::ntn, 3, 3, 2, 1);
        auto p = testing::random_params(shape, rng, 3.0);
        auto v = p.ntn(RelationId{0});
        double bound = 0.0;
        for (double u : v.U) bound += std::abs(u);
        auto e1 = testing::random_vector(rng, 3, 5.0), e2 = testing::random_vector(rng, 3, 5.0);
        CHECK(std::abs(score_ntn(v, e1, e2)) <= bound);
    }
}

TEST_CASE("bilinear score") {
    const double s = 1.0 / std::sqrt(2.0);
    std::vector<double> e{s, s};
    CHECK(score_bilinear(identity(2), e, e) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(score_bilinear(identity(2), e, std::vector<double>{0, 0}) == 0.0);
}

TEST_CASE("NTN special case equals the bilinear scorer exactly") {
    Rng rng(4);
    auto shape = make_shape(ModelKind::ntn, 4, 1, 2, 1);
    auto p = testing::random_params(shape, rng);
    double max_diff = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        auto W = testing::random_vector(rng, 16);
        set_special_case(p, W);
        auto e1 = testing::random_vector(rng, 4), e2 = testing::random_vector(rng, 4);
        const double a = score_ntn(p.ntn(RelationId{0}), e1, e2, Activation::identity);
        const double b = score_bilinear(W, e1, e2);
        max_diff = std::max(max_diff, std::abs(a - b));
    }
    CHECK(max_diff == 0.0);
}

TEST_CASE("similarity score") {
    auto I = identity(2);
    SimilarityRelationView v{I, I, 2};
    std::vector<double> e1{1, 2}, e2{0, 1};
    CHECK(score_similarity(v, e1, e1) == 0.0);
    CHECK(score_similarity(v, e1, e2) == 2.0);

    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        auto Wl = testing::random_vector(rng, 9), Wr = testing::random_vector(rng, 9);
        SimilarityRelationView r{Wl, Wr, 3};
        auto a = testing::random_vector(rng, 3);
        auto c = testing::random_vector(rng, 3), x = testing::random_vector(rng, 3);
        const double dab = score_similarity(r, a, x);
        CHECK(dab >= 0.0);
        // triangle inequality in the first argument: |Wl a - Wr x| <= |Wl a - Wl c| + |Wl c - Wr x|
        std::vector<double> diff(3, 0.0);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) diff[i] += Wl[i * 3 + j] * (a[j] - c[j]);
        double l1 = 0.0;
        for (double v2 : diff) l1 += std::abs(v2);
        CHECK(dab <= l1 + score_similarity(r, c, x) + 1e-12);
    }
}

TEST_CASE("Hadamard score") {
    auto I = identity(2);
    std::vector<double> zero2{0, 0}, ones{1, 1};
    HadamardView v{I, I, I, I, zero2, zero2, ones, 2};
    std::vector<double> e1{1, 0};
    CHECK(score_hadamard(v, e1, e1) == -1.0);

    Rng rng(6);
    auto a = testing::random_vector(rng, 2), b = testing::random_vector(rng, 2);
    CHECK(score_hadamard(v, a, b) == doctest::Approx(-dot(a, b)).epsilon(1e-15));

    HadamardView z{I, I, I, I, zero2, zero2, zero2, 2};
    CHECK(score_hadamard(z, a, b) == 0.0);
}

TEST_CASE("orientation: plausibility is the negated distance for the baselines") {
    Rng rng(7);
    for (auto kind : {ModelKind::ntn, ModelKind::bilinear, ModelKind::similarity, ModelKind::hadamard}) {
        auto shape = make_shape(kind, 3, 2, 4, 2);
        auto p = testing::random_params(shape, rng);
        auto e1 = testing::random_vector(rng, 3), e2 = testing::random_vector(rng, 3);
        const double raw = p.raw_score(RelationId{1}, e1, e2);
        const double pl = p.plausibility(RelationId{1}, e1, e2);
        if (orientation_of(kind) == Orientation::higher_is_plausible)
            CHECK(pl == raw);
        else
            CHECK(pl == -raw);
    }
    CHECK(orientation_of(ModelKind::similarity) == Orientation::lower_is_plausible);
    CHECK(orientation_of(ModelKind::ntn) == Orientation::higher_is_plausible);
}

TEST_CASE("scoring is pure") {
    Rng rng(8);
    auto shape = make_shape(ModelKind::ntn, 4, 3, 5, 2);
    auto p = testing::random_params(shape, rng);
    Triplet t{EntityId{1}, RelationId{1}, EntityId{3}};
    const double a = p.plausibility(t);
    for (int i = 0; i < 10; ++i) CHECK(p.plausibility(t) == a);
}

TEST_CASE("inactive hinge has a zero gradient") {
    auto shape = make_shape(ModelKind::bilinear, 2, 1, 2, 1);
    Triplet t{EntityId{0}, RelationId{0}, EntityId{0}};

    // e1 == e0: zero gap, loss exactly the margin
    ModelParams tie(shape, {1, 0, 1, 0, 5, 0, 0, 5});
    CHECK(pair_gradient(tie, t, EntityId{1}).loss == 1.0);

    // e1 == -e0: gap 10
    ModelParams apart(shape, {1, 0, -1, 0, 5, 0, 0, 5});
    auto g = pair_gradient(apart, t, EntityId{1});
    CHECK(g.loss == 0.0);
    for (double v : g.values) CHECK(v == 0.0);
}

TEST_CASE("NTN W gradient at special-case parameters matches the bilinear one") {
    Rng rng(9);
    const std::size_t d = 3;
    int compared = 0;
    for (int trial = 0; trial < 50; ++trial) {
        auto bshape = make_shape(ModelKind::bilinear, d, 1, 3, 1);
        auto b = testing::random_params(bshape, rng);
        Triplet t{EntityId{0}, RelationId{0}, EntityId{1}};
        auto gb = pair_gradient(b, t, EntityId{2});

        auto nshape = make_shape(ModelKind::ntn, d, 1, 3, 1);
        ModelParams n(nshape, std::vector<double>(ParameterLayout(nshape).size(), 0.0));
        std::copy(b.theta().begin(), b.theta().begin() + 3 * d, n.theta().begin());
        set_special_case(n, b.bilinear(RelationId{0}));
        auto gn = pair_gradient(n, t, EntityId{2});
        if (gb.loss == 0.0 || gn.loss == 0.0) continue;
        ++compared;

        // With tanh each term carries a (1 - g^2) factor; with it removed the
        // two models agree.
        const double c = n.plausibility(t);
        const double s = n.plausibility({t.left, t.relation, EntityId{2}});
        auto e0 = n.entity(EntityId{0}), e1 = n.entity(EntityId{1}), e2 = n.entity(EntityId{2});
        const auto& L = n.layout();
        const auto& M = b.layout();
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                const double bil = -e0[i] * e1[j] + e0[i] * e2[j];
                CHECK(gb.values[M.bilinear_w(0) + i * d + j] == doctest::Approx(bil).epsilon(1e-12));
                const double ntn = -(1 - c * c) * e0[i] * e1[j] + (1 - s * s) * e0[i] * e2[j];
                CHECK(gn.values[L.ntn_w(0) + i * d + j] == doctest::Approx(ntn).epsilon(1e-12));
            }
    }
    CHECK(compared > 10);
}

TEST_CASE("gradient check passes for every model") {
    for (auto kind : {ModelKind::ntn, ModelKind::bilinear, ModelKind::similarity, ModelKind::hadamard}) {
        GradcheckOptions opt;
        opt.kind = kind;
        opt.random_shapes = true;
        opt.trials = 20;
        opt.seed = 42;
        auto rep = run_gradcheck(opt);
        INFO(to_string(kind), " worst ", rep.worst_parameter, " err ", rep.max_relative_error);
        CHECK(rep.passed);
        CHECK(rep.max_relative_error <= 1e-5);
    }
}

TEST_CASE("gradient check catches an injected fault") {
    GradcheckOptions opt;
    opt.trials = 3;
    opt.gradient_fault = [](std::span<double> g) { g[0] += 1e-3; };
    CHECK_FALSE(run_gradcheck(opt).passed);
}

TEST_CASE("relative error floor") {
    CHECK(gradcheck_relative_error(1.0, 1.0) == 0.0);
    CHECK(gradcheck_relative_error(2.0, 1.0) == 0.5);
    CHECK(gradcheck_relative_error(1e-9, 0.0) == doctest::Approx(1e-6));
}

TEST_CASE("parameter layout") {
    auto s = make_shape(ModelKind::ntn, 3, 2, 5, 4);
    ParameterLayout L(s);
    CHECK(L.size() == 5 * 3 + 4 * (2 * 9 + 2 * 6 + 2 + 2));
    CHECK(L.describe(0).find("entity") != std::string::npos);
    auto shared = make_shape(ModelKind::ntn, 3, 2, 5, 4, true);
    CHECK(ParameterLayout(shared).size() == L.size() - 4 * 2 + 2);
    // one relation: sharing U is meaningless and normalized away
    CHECK(make_shape(ModelKind::ntn, 3, 2, 5, 1, true) == make_shape(ModelKind::ntn, 3, 2, 5, 1));
    auto h = make_shape(ModelKind::hadamard, 3, 7, 5, 4);
    CHECK(ParameterLayout(h).size() == 5 * 3 + 4 * 3 + 4 * 9 + 2 * 3);
    CHECK(parse_model_kind("similarity") == ModelKind::similarity);
    CHECK_THROWS(parse_model_kind("transe"));
}
