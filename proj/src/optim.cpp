#include "cfbwp/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cfbwp/errors.hpp"

namespace cfbwp::optim {

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::span<const double> start, std::span<const double> step,
                             const NelderMeadOptions& options) {
    const std::size_t dim = start.size();
    if (dim == 0 || step.size() != dim) throw UsageError("nelder_mead: bad start/step sizes");

    constexpr double kReflect = 1.0;
    constexpr double kExpand = 2.0;
    constexpr double kContract = 0.5;
    constexpr double kShrink = 0.5;

    std::vector<std::vector<double>> simplex(dim + 1, std::vector<double>(start.begin(), start.end()));
    for (std::size_t i = 0; i < dim; ++i) {
        simplex[i + 1][i] += step[i] != 0.0 ? step[i] : 1e-4;
    }
    std::vector<double> fvals(dim + 1);
    for (std::size_t i = 0; i <= dim; ++i) fvals[i] = objective(simplex[i]);

    std::vector<std::size_t> rank(dim + 1);
    std::vector<double> centroid(dim), trial(dim), trial2(dim);

    int iter = 0;
    bool converged = false;
    for (; iter < options.max_iterations; ++iter) {
        std::iota(rank.begin(), rank.end(), 0);
        std::stable_sort(rank.begin(), rank.end(),
                         [&](std::size_t a, std::size_t b) { return fvals[a] < fvals[b]; });
        const std::size_t best = rank.front(), worst = rank.back();
        const std::size_t second_worst = rank[dim - 1];

        double max_coord_spread = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            double lo = simplex[best][i], hi = lo;
            for (std::size_t v = 0; v <= dim; ++v) {
                lo = std::min(lo, simplex[v][i]);
                hi = std::max(hi, simplex[v][i]);
            }
            max_coord_spread = std::max(max_coord_spread, hi - lo);
        }
        if (std::abs(fvals[worst] - fvals[best]) <= options.f_tolerance &&
            max_coord_spread <= options.x_tolerance) {
            converged = true;
            break;
        }

        for (std::size_t i = 0; i < dim; ++i) {
            double s = 0.0;
            for (std::size_t v = 0; v <= dim; ++v) {
                if (v != worst) s += simplex[v][i];
            }
            centroid[i] = s / static_cast<double>(dim);
        }

        for (std::size_t i = 0; i < dim; ++i) {
            trial[i] = centroid[i] + kReflect * (centroid[i] - simplex[worst][i]);
        }
        const double f_reflect = objective(trial);

        if (f_reflect < fvals[best]) {
            for (std::size_t i = 0; i < dim; ++i) {
                trial2[i] = centroid[i] + kExpand * (trial[i] - centroid[i]);
            }
            const double f_expand = objective(trial2);
            if (f_expand < f_reflect) {
                simplex[worst] = trial2;
                fvals[worst] = f_expand;
            } else {
                simplex[worst] = trial;
                fvals[worst] = f_reflect;
            }
            continue;
        }
        if (f_reflect < fvals[second_worst]) {
            simplex[worst] = trial;
            fvals[worst] = f_reflect;
            continue;
        }
        // Contract toward the better of worst/reflected.
        const bool outside = f_reflect < fvals[worst];
        const std::vector<double>& toward = outside ? trial : simplex[worst];
        for (std::size_t i = 0; i < dim; ++i) {
            trial2[i] = centroid[i] + kContract * (toward[i] - centroid[i]);
        }
        const double f_contract = objective(trial2);
        if (f_contract < (outside ? f_reflect : fvals[worst])) {
            simplex[worst] = trial2;
            fvals[worst] = f_contract;
            continue;
        }
        // Shrink everything toward the best vertex.
        for (std::size_t v = 0; v <= dim; ++v) {
            if (v == best) continue;
            for (std::size_t i = 0; i < dim; ++i) {
                simplex[v][i] = simplex[best][i] + kShrink * (simplex[v][i] - simplex[best][i]);
            }
            fvals[v] = objective(simplex[v]);
        }
    }

    std::size_t best = 0;
    for (std::size_t v = 1; v <= dim; ++v) {
        if (fvals[v] < fvals[best]) best = v;
    }
    return NelderMeadResult{.x = simplex[best],
                            .fx = fvals[best],
                            .iterations = iter,
                            .converged = converged};
}

}  // namespace cfbwp::optim
