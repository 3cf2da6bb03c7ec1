#include <cmath>

#include "krvi/harness.hpp"

namespace krvi::harness {

namespace {

SlopeFit least_squares(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = static_cast<double>(xs.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    SlopeFit fit;
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw InsufficientData("fit: degenerate abscissae");
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss_res = 0.0, ss_tot = 0.0;
    const double mean_y = sy / n;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double pred = fit.intercept + fit.slope * xs[i];
        ss_res += (ys[i] - pred) * (ys[i] - pred);
        ss_tot += (ys[i] - mean_y) * (ys[i] - mean_y);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

}  // namespace

SlopeFit fit_regret_exponent(const std::vector<double>& cumulative_regret,
                             double burn_in_fraction) {
    if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) {
        throw InvalidInput("fit_regret_exponent: burn-in fraction must lie in [0,1)");
    }
    const std::size_t n = cumulative_regret.size();
    const std::size_t start =
        static_cast<std::size_t>(burn_in_fraction * static_cast<double>(n));
    if (n - start < 50) {
        throw InsufficientData("fit_regret_exponent: fewer than 50 episodes past burn-in");
    }
    std::vector<double> xs;
    std::vector<double> ys;
    xs.reserve(n - start);
    ys.reserve(n - start);
    for (std::size_t i = start; i < n; ++i) {
        if (cumulative_regret[i] > 0.0) {
            xs.push_back(std::log(static_cast<double>(i + 1)));
            ys.push_back(std::log(cumulative_regret[i]));
        }
    }
    if (xs.size() < 10) {
        throw InsufficientData("fit_regret_exponent: fewer than 10 usable points");
    }
    return least_squares(xs, ys);
}

SlopeFit fit_loglog_geometric(const std::vector<double>& series, double t0, double ratio) {
    if (series.empty()) throw InsufficientData("fit_loglog_geometric: empty series");
    if (!(ratio > 1.0)) throw InvalidInput("fit_loglog_geometric: ratio must exceed 1");
    const auto n = static_cast<double>(series.size());
    std::vector<double> xs;
    std::vector<double> ys;
    std::size_t last_index = 0;
    auto add_checkpoint = [&](std::size_t t) {
        if (t == last_index || t < 1 || t > series.size()) return;
        last_index = t;
        const double value = series[t - 1];
        if (value > 0.0) {
            xs.push_back(std::log(static_cast<double>(t)));
            ys.push_back(std::log(value));
        }
    };
    for (double td = std::max(t0, 1.0); td <= n + 0.5; td *= ratio) {
        add_checkpoint(static_cast<std::size_t>(td + 0.5));
    }
    add_checkpoint(series.size());
    if (xs.size() < 5) throw InsufficientData("fit_loglog_geometric: fewer than 5 checkpoints");
    return least_squares(xs, ys);
}

}  // namespace krvi::harness
