#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ntnkb {

// Writes the gradient at x into grad and returns the objective value.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct LbfgsOptions {
    std::size_t history = 5;
    std::size_t max_iterations = 10;
    double c1 = 1e-4;  // sufficient decrease
    double c2 = 0.9;   // strong curvature
    double gradient_tolerance = 1e-6;  // on the max-norm
    std::size_t max_line_search_evaluations = 25;
};

enum class LbfgsStatus { converged, max_iterations, line_search_failed, non_finite };

struct LbfgsResult {
    std::vector<double> x;
    double value = 0.0;
    std::vector<double> gradient;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    LbfgsStatus status = LbfgsStatus::max_iterations;
    std::string message;
};

// Limited-memory BFGS with a strong-Wolfe line search. Every accepted step
// satisfies sufficient decrease, so the returned value never exceeds the
// value at x0. Throws NumericalError if the objective is not finite at x0.
LbfgsResult lbfgs_minimize(const Objective& objective, std::vector<double> x0,
                           const LbfgsOptions& options = {});

}  // namespace ntnkb
