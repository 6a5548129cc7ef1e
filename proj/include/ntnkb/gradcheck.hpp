#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "ntnkb/models.hpp"

namespace ntnkb {

struct GradcheckOptions {
    ModelKind kind = ModelKind::ntn;
    std::size_t dimension = 4;
    std::size_t slices = 3;
    // Draw d from [2, 5] and k from [1, 3] per trial instead of the fixed sizes.
    bool random_shapes = false;
    std::uint64_t seed = 0;
    std::size_t trials = 100;
    double step = 1e-5;
    double tolerance = 1e-5;
    // Points this close to a hinge or L1 kink are skipped and redrawn.
    double kink_exclusion = 1e-8;
    // Test hook applied to every analytic gradient before comparison.
    std::function<void(std::span<double>)> gradient_fault;
};

struct GradcheckReport {
    bool passed = false;
    double max_relative_error = 0.0;
    std::size_t trials = 0;
    std::size_t skipped = 0;
    std::size_t worst_trial = 0;
    std::size_t worst_coordinate = 0;
    std::string worst_parameter;
};

// |analytic - numeric| / max(|analytic|, |numeric|, 1e-3)
double gradcheck_relative_error(double analytic, double numeric);

// Compares the analytic hinge gradient of one (correct, corrupted) pair with
// central differences over every coordinate, on random small instances.
GradcheckReport run_gradcheck(const GradcheckOptions& options);

}  // namespace ntnkb
