// Test-only reference implementations, kept independent of the library's
// incremental code paths: dense linear-algebra solves, recursion-based MDP
// values, and a standalone bandit loop.
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "krvi/envs.hpp"
#include "krvi/kernels.hpp"

namespace krvi::test {

struct DenseKrr {
    Eigen::VectorXd mean_weights;  // (K + lambda_eff^2 I)^{-1} y
    Eigen::MatrixXd chol;          // dense LLT factor
    std::vector<Point> points;
    kernels::KernelSpec spec;
    double lambda_eff_sq;

    DenseKrr(const kernels::KernelSpec& spec_in, double lambda_eff_sq_in,
             const std::vector<Point>& pts, const std::vector<double>& targets)
        : spec(spec_in), lambda_eff_sq(lambda_eff_sq_in) {
        points = pts;
        const Eigen::Index n = static_cast<Eigen::Index>(pts.size());
        Eigen::MatrixXd a = spec.gram(pts);
        a.diagonal().array() += lambda_eff_sq;
        Eigen::LLT<Eigen::MatrixXd> llt(a);
        chol = llt.matrixL();
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) y[i] = targets[static_cast<std::size_t>(i)];
        mean_weights = llt.solve(y);
    }

    double mean(const Point& z) const {
        const Eigen::Index n = static_cast<Eigen::Index>(points.size());
        Eigen::VectorXd k(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            k[i] = spec.evaluate(z, points[static_cast<std::size_t>(i)]);
        }
        return k.dot(mean_weights);
    }

    double stddev(const Point& z) const {
        const Eigen::Index n = static_cast<Eigen::Index>(points.size());
        Eigen::VectorXd k(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            k[i] = spec.evaluate(z, points[static_cast<std::size_t>(i)]);
        }
        const Eigen::VectorXd v = chol.triangularView<Eigen::Lower>().solve(k);
        const double b2 = spec.evaluate(z, z) - v.squaredNorm();
        return std::sqrt(std::max(0.0, b2));
    }

    // log det(I + K / lambda_eff^2)
    double log_det() const {
        const Eigen::Index n = static_cast<Eigen::Index>(points.size());
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) acc += std::log(chol(i, i));
        return 2.0 * acc - static_cast<double>(n) * std::log(lambda_eff_sq);
    }
};

// V*_h(s) by plain recursion over the action tree, no memoization; exhausts
// the |A|^(H-h+1) deterministic action assignments reachable from (h, s).
inline double expectimax_value(const envs::EpisodicMdp& mdp, int h, int s) {
    if (h > mdp.horizon) return 0.0;
    double best = -1.0;
    for (int a = 0; a < mdp.num_actions(); ++a) {
        double q = mdp.rewards[static_cast<std::size_t>(h - 1)](s, a);
        const auto& p = mdp.transitions[static_cast<std::size_t>(h - 1)];
        for (int s2 = 0; s2 < mdp.num_states(); ++s2) {
            const double w = p(mdp.row_index(s, a), s2);
            if (w > 0.0) q += w * expectimax_value(mdp, h + 1, s2);
        }
        if (q > best) best = q;
    }
    return best;
}

// V^policy_h(s) by full trajectory-tree expansion.
inline double policy_value_recursive(const envs::EpisodicMdp& mdp, const envs::Policy& policy,
                                     int h, int s) {
    if (h > mdp.horizon) return 0.0;
    const int a = policy[static_cast<std::size_t>(h - 1)][static_cast<std::size_t>(s)];
    double value = mdp.rewards[static_cast<std::size_t>(h - 1)](s, a);
    const auto& p = mdp.transitions[static_cast<std::size_t>(h - 1)];
    for (int s2 = 0; s2 < mdp.num_states(); ++s2) {
        const double w = p(mdp.row_index(s, a), s2);
        if (w > 0.0) value += w * policy_value_recursive(mdp, policy, h + 1, s2);
    }
    return value;
}

}  // namespace krvi::test
