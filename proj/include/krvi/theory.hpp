#pragma once

#include "krvi/common.hpp"
#include "krvi/kernels.hpp"

namespace krvi::theory {

// Inputs to the analytic bound calculators. The big-O constants hidden by the
// source analysis are explicit and default to 1.
struct BoundParams {
    kernels::EigendecayProfile profile;
    double lambda = 1.0;
    double c1 = 1.0;  // uniform bound on m^{-p eta} phi_m
    double rho = 1.0;  // domain side length
    int H = 1;
    long long T = 1;
    double delta = 0.1;
    double c2 = 1.0;  // RKHS-ball covering dimension constant
    double c3 = 1.0;  // linear-model covering constant
    double c4 = 1.0;  // uncertainty-class dimension constant
    double c5 = 1.0;  // uncertainty-class covering constant
    double c6 = 1.0;  // regret bound constant

    void validate() const;
    // The uncertainty covering exponent 2/(p_tilde - 1) blows up as p_tilde
    // approaches 1; callers should surface this when reporting bounds.
    bool uncertainty_exponent_flagged() const { return profile.p_tilde() <= 3.0; }
};

// Upper bound on the maximum information gain Gamma_{k,lambda}(t) for a
// polynomial-eigendecay kernel on a cube of side rho:
//   Gamma <= (D/2) log(1 + t/(lambda^2 D)) + t eps_D / (2 lambda^2),
// with eps_D = c1^2 c_p rho^alpha D^{-(p_tilde-1)} / (p_tilde - 1) and
// D = ceil(C t^{1/p_tilde} rho^{alpha/p_tilde}), C = (c1^2 c_p /
// ((p_tilde-1) lambda^2))^{1/p_tilde}, clamped to D >= 1.
double info_gain_bound(const BoundParams& params, long long t);

// log covering number of the R-ball of the RKHS at radius eps:
//   c2 c3 (R^2 rho^alpha / eps^2)^{1/(p_tilde-1)} (1 + log(R/eps)).
double rkhs_covering_bound(const BoundParams& params, double R, double eps);

// Itemized log covering number of the optimistic value-function class
// Q(R, B), following the product decomposition into the RKHS ball (radius
// eps/3), the interval [0,B] (radius eps/3), and the uncertainty-function
// class (radius eps/(3B)).
struct CoveringBreakdown {
    double ball = 0.0;
    double interval = 0.0;
    double uncertainty = 0.0;
    double total() const { return ball + interval + uncertainty; }
};
CoveringBreakdown ucb_class_covering_breakdown(const BoundParams& params, double R, double B,
                                               double eps);
double ucb_class_covering_bound(const BoundParams& params, double R, double B, double eps);

// The per-element covering radius H sqrt(log(T H / delta)) / sqrt(N).
double epsilon_choice(const BoundParams& params, long long n_element);

// Smallest beta satisfying
//   beta >= H + 1 + (H/sqrt(2)) sqrt(Gamma(t) + log N(eps; R, beta) + 1 +
//           log(2 T H / delta)) + 3 sqrt(t) eps / lambda,
// with eps = epsilon_choice(params, n_element), Gamma and the covering bound
// evaluated on a cube of side rho_element, and R the norm bound on the ridge
// predictor from n_element observations. Found by fixed-point iteration from
// beta_0 = H + 1; throws NoFixedPoint if 200 iterations do not converge.
double solve_beta(const BoundParams& params, long long t, long long n_element,
                  double rho_element);

// (d + alpha/2) / (d + alpha), the regret exponent in the episode count.
double regret_exponent(double d, double alpha);
// (nu + d) / (2 nu + d), the same exponent under the Matern substitution.
double matern_regret_exponent(double nu, double d);

struct RegretBound {
    double value = 0.0;             // c6 H^2 T^exponent log T sqrt(log(H/delta))
    double exponent = 0.0;          // (d + alpha/2) / (d + alpha)
    double matern_exponent = 0.0;   // (nu + d) / (2 nu + d) with nu = alpha/2
    double effective_dimension = 0.0;  // d recovered as alpha / (p - 1)
};
RegretBound regret_bound(const BoundParams& params);

}  // namespace krvi::theory
