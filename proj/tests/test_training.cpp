#include "doctest.h"

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <map>
#include <sstream>

#include "helpers.hpp"
#include "ntnkb/error.hpp"
#include "ntnkb/lbfgs.hpp"
#include "ntnkb/synthetic.hpp"
#include "ntnkb/training.hpp"

using namespace ntnkb;

namespace {

double chi_square_p(const std::vector<std::size_t>& counts) {
    double total = 0.0;
    for (auto c : counts) total += static_cast<double>(c);
    const double expect = total / static_cast<double>(counts.size());
    double stat = 0.0;
    for (auto c : counts) stat += (static_cast<double>(c) - expect) * (static_cast<double>(c) - expect) / expect;
    boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

KnowledgeBase small_kb() {
    return build_knowledge_base({{"a", "r", "b"}, {"b", "r", "c"}, {"c", "s", "a"}, {"d", "s", "e"}},
                                {{"a", "s", "e"}}, {{"e", "r", "d"}});
}

TrainingConfig small_config(ModelKind kind) {
    TrainingConfig c;
    c.model = kind;
    c.dimension = 3;
    c.slices = 2;
    c.corruptions = 2;
    c.epochs = 3;
    c.minibatch_size = 100;
    c.seed = 5;
    return c;
}

}  // namespace

TEST_CASE("hinge term") {
    CHECK(hinge_term(2.0, 0.5) == 0.0);
    CHECK(hinge_term(0.5, 0.2) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(hinge_term(0.3, 0.3) == 1.0);
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const double a = rng.symmetric(3), b = rng.symmetric(3);
        const double h = hinge_term(a, b);
        CHECK(h >= 0.0);
        CHECK((h == 0.0) == (a - b >= 1.0));
    }
}

TEST_CASE("corruptions: forced outcome with two entities") {
    auto kb = build_knowledge_base({{"a", "r", "b"}}, {}, {});
    Rng rng(2);
    Triplet t = kb.train()[0];
    auto s = sample_corruptions(kb, t, 3, CorruptionPolicy::right, rng);
    REQUIRE(s.size() == 3);
    for (auto& c : s) CHECK(c.substitute == EntityId{0});
}

TEST_CASE("corruptions: uniform over eligible entities") {
    auto kb = build_knowledge_base({{"a", "r", "b"}, {"c", "r", "d"}, {"e", "r", "a"}}, {}, {});
    Rng rng(3);
    Triplet t = kb.train()[0];  // (a, r, b): every substitute for b is eligible
    std::vector<std::size_t> counts(kb.entity_count(), 0);
    for (auto& c : sample_corruptions(kb, t, 10000, CorruptionPolicy::right, rng)) {
        REQUIRE(c.substitute != t.right);
        counts[c.substitute.index]++;
    }
    CHECK(counts[t.right.index] == 0);
    counts.erase(counts.begin() + t.right.index);
    CHECK(chi_square_p(counts) > 0.01);
}

TEST_CASE("corruptions: deterministic, never in the KB, sides alternate") {
    auto s = make_taxonomy_fixture(7);
    auto kb = build_knowledge_base(s.train, s.dev, s.test);
    // Share of substitutes for one side that leave the KB.
    auto eligible = [&](const Triplet& t, CorruptSide side) {
        std::size_t n = 0;
        for (std::uint32_t e = 0; e < kb.entity_count(); ++e) {
            const auto replaced = side == CorruptSide::right ? t.right : t.left;
            if (EntityId{e} != replaced && !kb.contains(corrupted(t, EntityId{e}, side))) ++n;
        }
        return static_cast<double>(n) / static_cast<double>(kb.entity_count() - 1);
    };
    std::size_t strict = 0;
    for (std::size_t i = 0; i < kb.train().size(); i += 7) {
        Rng a(i), b(i);
        auto x = sample_corruptions(kb, kb.train()[i], 6, CorruptionPolicy::both, a);
        auto y = sample_corruptions(kb, kb.train()[i], 6, CorruptionPolicy::both, b);
        for (std::size_t c = 0; c < x.size(); ++c) {
            CHECK(x[c].substitute == y[c].substitute);
            CHECK(x[c].side == (c % 2 == 0 ? CorruptSide::right : CorruptSide::left));
            const auto replaced = x[c].side == CorruptSide::right ? x[c].source.right : x[c].source.left;
            CHECK(x[c].substitute != replaced);
            // With at least 20% eligible, 100 misses in a row has odds below 1e-9.
            if (eligible(x[c].source, x[c].side) >= 0.2) {
                ++strict;
                CHECK_FALSE(kb.contains(x[c].corrupted()));
            }
        }
    }
    CHECK(strict > 200);
}

TEST_CASE("corruptions need two entities") {
    auto kb = build_knowledge_base({{"a", "r", "a"}}, {}, {});
    Rng rng(0);
    CHECK_THROWS_AS(sample_corruptions(kb, kb.train()[0], 1, CorruptionPolicy::right, rng), ConfigError);
}

TEST_CASE("epoch corruptions are resampled unless frozen") {
    auto s = make_taxonomy_fixture(7);
    auto kb = build_knowledge_base(s.train, s.dev, s.test);
    TrainingConfig c;
    c.corruptions = 5;
    auto e1 = epoch_corruptions(kb, 3, 1, c), e1b = epoch_corruptions(kb, 3, 1, c);
    auto e2 = epoch_corruptions(kb, 3, 2, c);
    auto same = [](const auto& x, const auto& y) {
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i].substitute != y[i].substitute) return false;
        return true;
    };
    CHECK(same(e1, e1b));
    CHECK_FALSE(same(e1, e2));
    c.resample_corruptions = false;
    CHECK(same(epoch_corruptions(kb, 3, 1, c), epoch_corruptions(kb, 3, 9, c)));
}

TEST_CASE("objective: all hinges inactive and no regularization") {
    auto kb = build_knowledge_base({{"a", "r", "b"}}, {}, {});
    auto shape = make_shape(ModelKind::bilinear, 1, 1, 2, 1);
    // p(a, b) = 10, p(a, a) = -10
    ModelParams p(shape, {1.0, -1.0, -10.0});
    TrainingConfig c;
    c.corruptions = 3;
    c.l2_lambda = 0.0;
    std::vector<std::size_t> batch{0};
    auto v = batch_objective_and_gradient(p, kb, batch, c, 1);
    CHECK(v.value == 0.0);
    for (double g : v.gradient) CHECK(g == 0.0);

    // an optimizer started there does not move
    Objective f = [&](std::span<const double> x, std::span<double> g) {
        ModelParams q(shape, std::vector<double>(x.begin(), x.end()));
        auto o = batch_objective_and_gradient(q, kb, batch, c, 1);
        std::copy(o.gradient.begin(), o.gradient.end(), g.begin());
        return o.value;
    };
    std::vector<double> x0(p.theta().begin(), p.theta().end());
    auto r = lbfgs_minimize(f, x0);
    CHECK(r.x == x0);
}

TEST_CASE("objective: single triplet, single corruption by hand") {
    auto kb = build_knowledge_base({{"a", "r", "b"}}, {}, {});
    auto shape = make_shape(ModelKind::bilinear, 2, 1, 2, 1);
    std::vector<double> theta{0.5, -1.0, 2.0, 0.25, 1.0, 2.0, -0.5, 0.75};
    ModelParams p(shape, theta);
    TrainingConfig c;
    c.corruptions = 1;
    c.l2_lambda = 0.01;
    std::vector<std::size_t> batch{0};
    // the only substitute for b is a
    const double ea[2]{0.5, -1.0}, eb[2]{2.0, 0.25};
    auto form = [](const double* x, const double* y) {
        return x[0] * (1.0 * y[0] + 2.0 * y[1]) + x[1] * (-0.5 * y[0] + 0.75 * y[1]);
    };
    double sq = 0.0;
    for (double t : theta) sq += t * t;
    const double expect = std::max(0.0, 1.0 - form(ea, eb) + form(ea, ea)) + 0.01 * sq;
    CHECK(batch_objective_and_gradient(p, kb, batch, c, 0).value == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("batch gradient matches finite differences with frozen corruptions") {
    auto s = make_taxonomy_fixture(7);
    auto kb = build_knowledge_base(s.train, s.dev, s.test);
    std::vector<std::size_t> batch{0, 5, 17, 40, 41, 100};
    for (auto kind : {ModelKind::ntn, ModelKind::bilinear, ModelKind::similarity, ModelKind::hadamard}) {
        TrainingConfig c;
        c.model = kind;
        c.dimension = 3;
        c.slices = 2;
        c.corruptions = 3;
        c.l2_lambda = 0.01;
        Rng rng(static_cast<std::uint64_t>(kind) + 10);
        auto p = testing::random_params(
            make_shape(kind, 3, 2, kb.entity_count(), kb.relation_count()), rng, 0.7);
        auto v = batch_objective_and_gradient(p, kb, batch, c, 2);
        const double h = 1e-5;
        double worst = 0.0;
        for (std::size_t i = 0; i < p.theta().size(); ++i) {
            auto q = p;
            q.theta()[i] += h;
            const double up = batch_objective_and_gradient(q, kb, batch, c, 2).value;
            q.theta()[i] -= 2 * h;
            const double down = batch_objective_and_gradient(q, kb, batch, c, 2).value;
            const double numeric = (up - down) / (2 * h);
            worst = std::max(worst, std::abs(numeric - v.gradient[i]));
        }
        INFO(to_string(kind));
        CHECK(worst <= 1e-6);
    }
}

TEST_CASE("objective does not depend on batch order") {
    auto s = make_taxonomy_fixture(7);
    auto kb = build_knowledge_base(s.train, s.dev, s.test);
    TrainingConfig c;
    c.dimension = 4;
    c.slices = 2;
    Rng rng(4);
    auto p = testing::random_params(make_shape(ModelKind::ntn, 4, 2, 50, 3), rng);
    std::vector<std::size_t> fwd(kb.train().size());
    std::iota(fwd.begin(), fwd.end(), std::size_t{0});
    std::vector<std::size_t> rev(fwd.rbegin(), fwd.rend());
    auto a = batch_objective_and_gradient(p, kb, fwd, c, 1);
    auto b = batch_objective_and_gradient(p, kb, rev, c, 1);
    CHECK(a.value == b.value);
    CHECK(a.gradient == b.gradient);
}

TEST_CASE("non-finite parameters are named") {
    auto kb = build_knowledge_base({{"a", "r", "b"}}, {}, {});
    auto shape = make_shape(ModelKind::bilinear, 1, 1, 2, 1);
    ModelParams p(shape, {1.0, -1.0, std::nan("")});
    TrainingConfig c;
    std::vector<std::size_t> batch{0};
    try {
        batch_objective_and_gradient(p, kb, batch, c, 0);
        FAIL("expected a numerical error");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("relation 0") != std::string::npos);
    }
}

TEST_CASE("pack and unpack are exact") {
    Rng rng(6);
    auto p = testing::random_params(make_shape(ModelKind::hadamard, 4, 0, 7, 3), rng);
    auto flat = pack(p);
    CHECK(unpack(flat) == p);
    CHECK(pack(unpack(flat)).values == flat.values);
}

TEST_CASE("config validation") {
    TrainingConfig c;
    CHECK_NOTHROW(c.validate());
    c.corruptions = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.l2_lambda = -1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.epochs = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK(parse_corruption_policy("both") == CorruptionPolicy::both);
    CHECK_THROWS_AS(parse_corruption_policy("middle"), ConfigError);
}

TEST_CASE("training is deterministic and records every epoch") {
    auto kb = small_kb();
    for (auto kind : {ModelKind::ntn, ModelKind::bilinear, ModelKind::similarity, ModelKind::hadamard}) {
        auto c = small_config(kind);
        auto init = init_entity_embeddings(kb, InitMode::random, nullptr, c.seed, c.dimension);
        auto a = train(kb, c, init);
        auto b = train(kb, c, init);
        CHECK(a.params == b.params);
        CHECK(a.history.size() == c.epochs + 1);
        CHECK(a.best_epoch <= c.epochs);
        std::ostringstream m;
        write_metrics(m, a.history);
        const auto text = m.str();
        CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(c.epochs + 1));
    }
}

TEST_CASE("full-batch training with frozen corruptions never increases the objective") {
    auto s = make_taxonomy_fixture(7);
    auto kb = build_knowledge_base(s.train, s.dev, s.test);
    TrainingConfig c;
    c.dimension = 4;
    c.slices = 2;
    c.corruptions = 3;
    c.epochs = 8;
    c.minibatch_size = kb.train().size();
    c.resample_corruptions = false;
    auto init = init_entity_embeddings(kb, InitMode::random, nullptr, 0, c.dimension);
    auto r = train(kb, c, init);
    for (std::size_t e = 1; e < r.history.size(); ++e)
        CHECK(r.history[e].objective <= r.history[e - 1].objective + 1e-10);
}

TEST_CASE("the sgd fallback runs") {
    auto kb = small_kb();
    auto c = small_config(ModelKind::ntn);
    c.optimizer = OptimizerKind::sgd;
    auto init = init_entity_embeddings(kb, InitMode::random, nullptr, c.seed, c.dimension);
    CHECK(train(kb, c, init).history.size() == c.epochs + 1);
}

TEST_CASE("mismatched initial embeddings are rejected") {
    auto kb = small_kb();
    auto c = small_config(ModelKind::ntn);
    auto init = init_entity_embeddings(kb, InitMode::random, nullptr, c.seed, c.dimension + 1);
    CHECK_THROWS_AS(train(kb, c, init), ConfigError);
}
