#include "ntnkb/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "ntnkb/error.hpp"

namespace ntnkb {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

struct Trial {
    double step = 0.0;
    double value = 0.0;
    double slope = 0.0;  // directional derivative along the search direction
    std::vector<double> x;
    std::vector<double> gradient;
};

enum class SearchOutcome { strong_wolfe, sufficient_decrease, failed, non_finite };

// Line search along `direction` from (x, value, slope0). Follows the
// bracketing/zoom scheme of Nocedal & Wright, Algorithms 3.5-3.6, with a
// safeguarded cubic Hermite interpolant inside the bracket.
class LineSearch {
public:
    LineSearch(const Objective& f, std::span<const double> x, std::span<const double> direction,
               double value, double slope0, const LbfgsOptions& opt, std::size_t& evaluations)
        : f_(f), x_(x), dir_(direction), value0_(value), slope0_(slope0), opt_(opt),
          evaluations_(evaluations) {}

    SearchOutcome run(double initial_step, Trial& accepted) {
        Trial prev{0.0, value0_, slope0_, {}, {}};
        double step = initial_step;
        for (std::size_t i = 0; i < opt_.max_line_search_evaluations; ++i) {
            Trial cur = evaluate(step);
            if (!std::isfinite(cur.value) || !all_finite(cur.gradient)) return SearchOutcome::non_finite;
            if (!armijo(cur) || (i > 0 && cur.value >= prev.value))
                return zoom(std::move(prev), std::move(cur), accepted);
            if (std::abs(cur.slope) <= -opt_.c2 * slope0_) {
                accepted = std::move(cur);
                return SearchOutcome::strong_wolfe;
            }
            if (cur.slope >= 0.0) return zoom(std::move(cur), std::move(prev), accepted);
            prev = std::move(cur);
            step *= 2.0;
        }
        if (prev.step > 0.0) {
            accepted = std::move(prev);
            return SearchOutcome::sufficient_decrease;
        }
        return SearchOutcome::failed;
    }

private:
    Trial evaluate(double step) {
        Trial t;
        t.step = step;
        t.x.resize(x_.size());
        t.gradient.assign(x_.size(), 0.0);
        for (std::size_t i = 0; i < x_.size(); ++i) t.x[i] = x_[i] + step * dir_[i];
        t.value = f_(t.x, t.gradient);
        ++evaluations_;
        t.slope = dot(t.gradient, dir_);
        return t;
    }

    bool armijo(const Trial& t) const {
        return t.value <= value0_ + opt_.c1 * t.step * slope0_;
    }

    static double cubic_minimizer(const Trial& a, const Trial& b) {
        const double d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.step - b.step);
        const double disc = d1 * d1 - a.slope * b.slope;
        if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
        const double d2 = std::copysign(std::sqrt(disc), b.step - a.step);
        return b.step - (b.step - a.step) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
    }

    // lo satisfies sufficient decrease and has the lowest value seen so far;
    // the bracket [lo, hi] contains a strong-Wolfe step.
    SearchOutcome zoom(Trial lo, Trial hi, Trial& accepted) {
        for (std::size_t used = evaluations_; evaluations_ - used < opt_.max_line_search_evaluations;) {
            const double a = std::min(lo.step, hi.step);
            const double b = std::max(lo.step, hi.step);
            const double width = b - a;
            if (width <= 1e-16 * std::max(1.0, b)) break;
            double step = cubic_minimizer(lo, hi);
            if (!std::isfinite(step) || step < a + 0.1 * width || step > b - 0.1 * width)
                step = a + 0.5 * width;

            Trial cur = evaluate(step);
            if (!std::isfinite(cur.value) || !all_finite(cur.gradient)) return SearchOutcome::non_finite;
            if (!armijo(cur) || cur.value >= lo.value) {
                hi = std::move(cur);
                continue;
            }
            if (std::abs(cur.slope) <= -opt_.c2 * slope0_) {
                accepted = std::move(cur);
                return SearchOutcome::strong_wolfe;
            }
            if (cur.slope * (hi.step - lo.step) >= 0.0) hi = std::move(lo);
            lo = std::move(cur);
        }
        if (lo.step > 0.0) {
            accepted = std::move(lo);
            return SearchOutcome::sufficient_decrease;
        }
        return SearchOutcome::failed;
    }

    const Objective& f_;
    std::span<const double> x_;
    std::span<const double> dir_;
    double value0_;
    double slope0_;
    const LbfgsOptions& opt_;
    std::size_t& evaluations_;
};

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& objective, std::vector<double> x0,
                           const LbfgsOptions& options) {
    if (options.history == 0) throw ConfigError("L-BFGS history must be positive");
    LbfgsResult res;
    res.x = std::move(x0);
    res.gradient.assign(res.x.size(), 0.0);
    res.value = objective(res.x, res.gradient);
    res.evaluations = 1;
    if (!std::isfinite(res.value) || !all_finite(res.gradient))
        throw NumericalError("objective is not finite at the starting point");

    struct Pair {
        std::vector<double> s, y;
        double rho;
    };
    std::deque<Pair> memory;
    std::vector<double> direction(res.x.size());
    std::vector<double> alpha(options.history);

    if (max_abs(res.gradient) < options.gradient_tolerance) {
        res.status = LbfgsStatus::converged;
        return res;
    }

    for (res.iterations = 0; res.iterations < options.max_iterations;) {
        // Two-loop recursion: direction = -H g.
        for (std::size_t i = 0; i < direction.size(); ++i) direction[i] = -res.gradient[i];
        for (std::size_t m = memory.size(); m-- > 0;) {
            alpha[m] = memory[m].rho * dot(memory[m].s, direction);
            for (std::size_t i = 0; i < direction.size(); ++i) direction[i] -= alpha[m] * memory[m].y[i];
        }
        if (!memory.empty()) {
            const auto& last = memory.back();
            const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
            for (double& v : direction) v *= gamma;
        }
        for (std::size_t m = 0; m < memory.size(); ++m) {
            const double beta = memory[m].rho * dot(memory[m].y, direction);
            for (std::size_t i = 0; i < direction.size(); ++i)
                direction[i] += memory[m].s[i] * (alpha[m] - beta);
        }

        double slope = dot(res.gradient, direction);
        if (!(slope < 0.0)) {
            memory.clear();
            for (std::size_t i = 0; i < direction.size(); ++i) direction[i] = -res.gradient[i];
            slope = dot(res.gradient, direction);
        }
        const double initial_step =
            memory.empty() ? std::min(1.0, 1.0 / std::sqrt(dot(res.gradient, res.gradient))) : 1.0;

        Trial accepted;
        LineSearch search(objective, res.x, direction, res.value, slope, options, res.evaluations);
        const auto outcome = search.run(initial_step, accepted);
        if (outcome == SearchOutcome::non_finite) {
            res.status = LbfgsStatus::non_finite;
            res.message = "non-finite objective during line search at iteration " +
                          std::to_string(res.iterations) + "; returning last finite iterate";
            return res;
        }
        if (outcome == SearchOutcome::failed) {
            std::ostringstream msg;
            msg << "line search failed at iteration " << res.iterations
                << ": value=" << res.value << " slope=" << slope
                << " |g|_inf=" << max_abs(res.gradient) << " initial_step=" << initial_step;
            res.status = LbfgsStatus::line_search_failed;
            res.message = msg.str();
            return res;
        }
        ++res.iterations;

        Pair p{std::vector<double>(res.x.size()), std::vector<double>(res.x.size()), 0.0};
        for (std::size_t i = 0; i < res.x.size(); ++i) {
            p.s[i] = accepted.x[i] - res.x[i];
            p.y[i] = accepted.gradient[i] - res.gradient[i];
        }
        const double sy = dot(p.s, p.y);
        // Curvature pairs that would break positive definiteness are skipped.
        if (sy > 1e-10 * std::sqrt(dot(p.s, p.s) * dot(p.y, p.y)) && sy > 0.0) {
            p.rho = 1.0 / sy;
            memory.push_back(std::move(p));
            if (memory.size() > options.history) memory.pop_front();
        }
        res.x = std::move(accepted.x);
        res.gradient = std::move(accepted.gradient);
        res.value = accepted.value;

        if (max_abs(res.gradient) < options.gradient_tolerance) {
            res.status = LbfgsStatus::converged;
            return res;
        }
    }
    res.status = LbfgsStatus::max_iterations;
    return res;
}

}  // namespace ntnkb
