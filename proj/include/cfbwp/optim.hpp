#pragma once

#include <functional>
#include <span>
#include <vector>

namespace cfbwp::optim {

struct NelderMeadOptions {
    int max_iterations = 4000;
    double f_tolerance = 1e-12;
    double x_tolerance = 1e-10;
};

struct NelderMeadResult {
    std::vector<double> x;
    double fx = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Downhill simplex minimization; `step` sets the initial simplex edge per
/// coordinate. Deterministic for a given start.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::span<const double> start, std::span<const double> step,
                             const NelderMeadOptions& options = {});

}  // namespace cfbwp::optim
