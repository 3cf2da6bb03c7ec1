#include "krvi/theory.hpp"

#include <cmath>

namespace krvi::theory {

void BoundParams::validate() const {
    profile.validate();
    if (!(lambda > 0.0)) throw InvalidInput("bound params: lambda must be > 0");
    if (!(c1 > 0.0)) throw InvalidInput("bound params: c1 must be > 0");
    if (!(rho > 0.0)) throw InvalidInput("bound params: rho must be > 0");
    if (H < 1) throw InvalidInput("bound params: H must be >= 1");
    if (T < 1) throw InvalidInput("bound params: T must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("bound params: delta in (0,1)");
}

double info_gain_bound(const BoundParams& params, long long t) {
    params.validate();
    if (t < 1) throw InvalidInput("info_gain_bound: t must be >= 1");
    const auto& prof = params.profile;
    const double pt = prof.p_tilde();
    const double lam_sq = params.lambda * params.lambda;
    const double head = params.c1 * params.c1 * prof.c_p;
    const double c_dim = std::pow(head / ((pt - 1.0) * lam_sq), 1.0 / pt);
    const double d_real =
        c_dim * std::pow(static_cast<double>(t), 1.0 / pt) * std::pow(params.rho, prof.alpha / pt);
    const double d_proj = std::max(1.0, std::ceil(d_real));
    const double eps_d =
        head * std::pow(params.rho, prof.alpha) / (pt - 1.0) * std::pow(d_proj, -(pt - 1.0));
    return 0.5 * d_proj * std::log1p(static_cast<double>(t) / (lam_sq * d_proj)) +
           static_cast<double>(t) * eps_d / (2.0 * lam_sq);
}

double rkhs_covering_bound(const BoundParams& params, double R, double eps) {
    params.validate();
    if (!(R > 0.0)) throw InvalidInput("rkhs_covering_bound: R must be > 0");
    if (!(eps > 0.0) || eps > R) {
        throw DegenerateInput("rkhs_covering_bound: eps must lie in (0, R]");
    }
    const double pt = params.profile.p_tilde();
    const double base = R * R * std::pow(params.rho, params.profile.alpha) / (eps * eps);
    return params.c2 * params.c3 * std::pow(base, 1.0 / (pt - 1.0)) * (1.0 + std::log(R / eps));
}

CoveringBreakdown ucb_class_covering_breakdown(const BoundParams& params, double R, double B,
                                               double eps) {
    params.validate();
    if (!(eps > 0.0)) throw DegenerateInput("ucb_class_covering_bound: eps must be > 0");
    if (!(R > 0.0)) throw InvalidInput("ucb_class_covering_bound: R must be > 0");
    if (B < 0.0) throw InvalidInput("ucb_class_covering_bound: B must be >= 0");

    CoveringBreakdown parts;
    // RKHS ball at radius eps/3; a single element suffices once the radius
    // reaches the ball radius.
    parts.ball = (eps / 3.0 >= R) ? 0.0 : rkhs_covering_bound(params, R, eps / 3.0);
    // interval [0, B] at radius eps/3
    parts.interval = std::log1p(3.0 * B / eps);
    // uncertainty functions at radius eps/(3B), values in [0, 1]
    if (B > 0.0) {
        const double radius = eps / (3.0 * B);
        if (radius < 1.0) {
            const double pt = params.profile.p_tilde();
            const double base =
                std::pow(params.rho, params.profile.alpha) / (radius * radius);
            parts.uncertainty = params.c5 * params.c4 * params.c4 *
                                std::pow(base, 2.0 / (pt - 1.0)) *
                                (1.0 + std::log(1.0 / radius));
        }
    }
    return parts;
}

double ucb_class_covering_bound(const BoundParams& params, double R, double B, double eps) {
    return ucb_class_covering_breakdown(params, R, B, eps).total();
}

double epsilon_choice(const BoundParams& params, long long n_element) {
    if (n_element < 1) throw InvalidInput("epsilon_choice: n_element must be >= 1");
    const double log_arg = std::max(
        static_cast<double>(params.T) * params.H / params.delta, std::exp(1.0));
    return params.H * std::sqrt(std::log(log_arg)) / std::sqrt(static_cast<double>(n_element));
}

double solve_beta(const BoundParams& params, long long t, long long n_element,
                  double rho_element) {
    params.validate();
    if (t < 1) throw InvalidInput("solve_beta: t must be >= 1");
    if (n_element < 1) throw InvalidInput("solve_beta: n_element must be >= 1");
    if (!(rho_element > 0.0)) throw InvalidInput("solve_beta: rho_element must be > 0");

    BoundParams local = params;
    local.rho = rho_element;

    const double h = static_cast<double>(params.H);
    const double eps = epsilon_choice(params, n_element);
    const double gamma_t = info_gain_bound(local, t);
    const double gamma_n = info_gain_bound(local, n_element);
    const double r_norm =
        h + 1.0 + h / (2.0 * params.lambda) *
                      std::sqrt(2.0 * (gamma_n + 1.0 + std::log(2.0 / params.delta)));
    const double tail = 3.0 * std::sqrt(static_cast<double>(t)) * eps / params.lambda;
    const double log_union =
        std::log(2.0 * static_cast<double>(params.T) * h / params.delta);

    auto rhs = [&](double beta) {
        const double cov = ucb_class_covering_bound(local, r_norm, beta, eps);
        return h + 1.0 + h / std::sqrt(2.0) * std::sqrt(gamma_t + cov + 1.0 + log_union) + tail;
    };

    double beta = h + 1.0;
    for (int iter = 0; iter < 200; ++iter) {
        const double next = rhs(beta);
        if (!std::isfinite(next) || next > 1e12) {
            throw NoFixedPoint("solve_beta: iteration diverged (inconsistent parameters)");
        }
        if (std::abs(next - beta) <= 1e-9 * std::max(1.0, std::abs(beta))) {
            beta = next;
            // genuine fixed point: |beta - RHS(beta)| / beta below 1e-6
            if (std::abs(beta - rhs(beta)) > 1e-6 * std::max(1.0, std::abs(beta))) {
                throw NoFixedPoint("solve_beta: converged value fails the defining inequality");
            }
            return beta;
        }
        beta = next;
    }
    throw NoFixedPoint("solve_beta: no fixed point within 200 iterations");
}

double regret_exponent(double d, double alpha) {
    return (d + alpha / 2.0) / (d + alpha);
}

double matern_regret_exponent(double nu, double d) {
    return (nu + d) / (2.0 * nu + d);
}

RegretBound regret_bound(const BoundParams& params) {
    params.validate();
    RegretBound out;
    const double alpha = params.profile.alpha;
    // Under the Matern-style parameterization p = (2 nu + d)/d, alpha = 2 nu,
    // the domain dimension is recoverable as alpha / (p - 1).
    out.effective_dimension = alpha / (params.profile.p - 1.0);
    out.exponent = regret_exponent(out.effective_dimension, alpha);
    out.matern_exponent = matern_regret_exponent(alpha / 2.0, out.effective_dimension);
    const double h = static_cast<double>(params.H);
    const double t = static_cast<double>(params.T);
    out.value = params.c6 * h * h * std::pow(t, out.exponent) * std::log(t) *
                std::sqrt(std::log(h / params.delta));
    return out;
}

}  // namespace krvi::theory
