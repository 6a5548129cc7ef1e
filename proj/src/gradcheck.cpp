#include "ntnkb/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "ntnkb/random.hpp"

namespace ntnkb {

double gradcheck_relative_error(double analytic, double numeric) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-3});
    return std::abs(analytic - numeric) / scale;
}

namespace {

// Distance of the instance to the nearest non-differentiable point.
double kink_distance(const ModelParams& p, const Triplet& pos, const Triplet& neg) {
    double dist = std::abs(1.0 - p.plausibility(pos) + p.plausibility(neg));
    if (p.shape().kind != ModelKind::similarity) return dist;
    const std::size_t d = p.shape().dimension;
    for (const auto& t : {pos, neg}) {
        const auto v = p.similarity(t.relation);
        const auto e1 = p.entity(t.left), e2 = p.entity(t.right);
        for (std::size_t i = 0; i < d; ++i) {
            double u = 0.0;
            for (std::size_t j = 0; j < d; ++j) u += v.W_left[i * d + j] * e1[j] - v.W_right[i * d + j] * e2[j];
            dist = std::min(dist, std::abs(u));
        }
    }
    return dist;
}

}  // namespace

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
    GradcheckReport report;
    auto rng = Rng::derived({options.seed, 0x67726164ULL});
    constexpr std::size_t kEntities = 4;
    constexpr std::size_t kRelations = 2;

    while (report.trials < options.trials) {
        std::size_t d = options.dimension;
        std::size_t k = options.slices;
        if (options.random_shapes) {
            d = 2 + rng.below(4);
            k = 1 + rng.below(3);
        }
        const bool share_u = options.kind == ModelKind::ntn && rng.below(2) == 1;
        const auto shape = make_shape(options.kind, d, k, kEntities, kRelations, share_u);
        std::vector<double> theta(ParameterLayout(shape).size());
        for (auto& x : theta) x = rng.symmetric(1.0);
        ModelParams params(shape, std::move(theta));

        const auto r = RelationId{static_cast<std::uint32_t>(rng.below(kRelations))};
        const Triplet pos{EntityId{0}, r, EntityId{1}};
        const auto side = rng.below(2) == 0 ? CorruptSide::right : CorruptSide::left;
        const EntityId substitute{2};
        const Triplet neg = corrupted(pos, substitute, side);

        if (kink_distance(params, pos, neg) < options.kink_exclusion ||
            1.0 - params.plausibility(pos) + params.plausibility(neg) <= 0.0) {
            // Inactive hinges have a trivially zero gradient; draw again.
            ++report.skipped;
            continue;
        }

        auto g = pair_gradient(params, pos, substitute, side);
        if (options.gradient_fault) options.gradient_fault(g.values);

        auto loss = [&] {
            return std::max(0.0, 1.0 - params.plausibility(pos) + params.plausibility(neg));
        };
        for (std::size_t i = 0; i < g.values.size(); ++i) {
            const double saved = params.theta()[i];
            params.theta()[i] = saved + options.step;
            const double up = loss();
            params.theta()[i] = saved - options.step;
            const double down = loss();
            params.theta()[i] = saved;
            const double numeric = (up - down) / (2.0 * options.step);
            const double err = gradcheck_relative_error(g.values[i], numeric);
            if (err > report.max_relative_error || !std::isfinite(err)) {
                report.max_relative_error = err;
                report.worst_trial = report.trials;
                report.worst_coordinate = i;
                report.worst_parameter = params.layout().describe(i);
            }
        }
        ++report.trials;
    }
    report.passed = report.max_relative_error <= options.tolerance;
    return report;
}

}  // namespace ntnkb
