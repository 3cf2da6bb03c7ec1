#include <cmath>

#include "krvi/harness.hpp"
#include "krvi/regression.hpp"
#include "krvi/rng.hpp"
#include "krvi/theory.hpp"

namespace krvi::harness {

namespace {

Point random_point(int d, Rng& rng) {
    Point p(d);
    for (int j = 0; j < d; ++j) p[j] = rng.uniform01();
    return p;
}

}  // namespace

CoverageResult coverage_trial(const ExperimentConfig& config, int trials) {
    if (trials < 100) throw InvalidInput("coverage_trial: at least 100 trials required");
    const auto spec = config.make_kernel();
    const int dim = spec.dimension();
    const double h = static_cast<double>(config.env_horizon);
    const double lambda = config.agent_lambda;
    const double delta = config.agent_delta;
    const int design_size = 40;
    const int grid_size = 128;

    // The interval is applied the way the planner applies it: to one cover
    // element, saturated at its capacity N = rho^{-alpha}. Observations and
    // queries live inside that box.
    theory::BoundParams bp;
    bp.profile = spec.eigendecay_profile(1.0);
    bp.lambda = lambda;
    bp.H = config.env_horizon;
    bp.T = design_size;
    bp.delta = delta;
    const double rho =
        std::pow(static_cast<double>(design_size), -1.0 / bp.profile.alpha);
    const double beta = theory::solve_beta(bp, design_size, design_size, rho);
    const double eps = theory::epsilon_choice(bp, design_size);

    const auto box_point = [&](Rng& rng) {
        Point p = random_point(dim, rng);
        return Point(rho * p);
    };

    // fixed RKHS target with exactly known norm <= H (inside the (H+1)-ball)
    Rng target_rng(Rng::derive_seed(config.kernel_seed, 0x636f76ull));
    kernels::KernelCombination target(spec);
    for (int j = 0; j < 6; ++j) target.centers.push_back(box_point(target_rng));
    target.weights = Vector(6);
    for (int j = 0; j < 6; ++j) target.weights[j] = target_rng.normal();
    target.normalize(h);

    // fixed dense query grid
    std::vector<Point> grid;
    grid.reserve(grid_size);
    Rng grid_rng(Rng::derive_seed(config.kernel_seed, 0x67726964ull));
    for (int q = 0; q < grid_size; ++q) grid.push_back(box_point(grid_rng));

    int covered = 0;
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng(Rng::derive_seed(config.env_seed, static_cast<std::uint64_t>(trial)));
        regression::RegressorState reg(spec, lambda);
        for (int i = 0; i < design_size; ++i) {
            const Point z = box_point(rng);
            // noise bounded in [-H/2, H/2]: (H/2)-sub-Gaussian
            reg.observe(z, target.evaluate(z) + rng.uniform(-h / 2.0, h / 2.0));
        }
        bool everywhere = true;
        for (const Point& z : grid) {
            const auto pred = reg.predict(z);
            if (std::abs(target.evaluate(z) - pred.mean) > beta * pred.stddev + eps) {
                everywhere = false;
                break;
            }
        }
        covered += everywhere ? 1 : 0;
    }

    CoverageResult result;
    result.trials = trials;
    result.rate = static_cast<double>(covered) / static_cast<double>(trials);
    result.beta = beta;
    result.epsilon = eps;
    result.design_size = design_size;
    return result;
}

}  // namespace krvi::harness
