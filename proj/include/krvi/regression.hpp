#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "krvi/common.hpp"
#include "krvi/kernels.hpp"

namespace krvi::regression {

struct Prediction {
    double mean = 0.0;
    double stddev = 0.0;
};

// Incremental kernel ridge regression.
//
// Holds the observation set, the raw targets, and an upper-triangular storage
// of the Cholesky factor of (K + lambda_eff^2 I), extended by one row per
// observation without refactorization. lambda_eff^2 = lambda^2 + 1e-10: the
// nugget guards against coincident points and is part of the regularized
// system everywhere (factorization, predictions, log-det accounting).
//
// A RegressorState is a value: copies are independent, predict() is const and
// observe()/set_targets() follow a single-writer contract.
class RegressorState {
public:
    RegressorState(kernels::KernelSpec spec, double lambda);
    RegressorState(const RegressorState& other);
    RegressorState& operator=(const RegressorState& other);
    RegressorState(RegressorState&&) noexcept = default;
    RegressorState& operator=(RegressorState&&) noexcept = default;
    ~RegressorState() = default;

    const kernels::KernelSpec& spec() const { return spec_; }
    double lambda() const { return lambda_; }
    double lambda_eff_sq() const { return lambda_eff_sq_; }
    int size() const { return n_; }
    const std::vector<Point>& points() const { return pts_; }
    const std::vector<double>& targets() const { return y_; }

    // Pre-sizes internal storage for `capacity` observations.
    void reserve(int capacity);

    // Appends one observation; extends the Cholesky factor by one row and
    // accumulates log(1 + (b_old/lambda_eff)^2) into the running log-det.
    // Throws NumericalDegeneracy on a non-positive pivot.
    void observe(const Point& z, double y);

    // Replaces the targets for the existing design points (count must match).
    // The Cholesky factor is reused; only the target solve is redone.
    void set_targets(std::vector<double> y);

    Prediction predict(const Point& z) const;

    // Gamma = 1/2 log det(I + K / lambda_eff^2), maintained incrementally.
    double information_gain() const { return 0.5 * log_det_accum_; }
    double log_det_accum() const { return log_det_accum_; }

    // ||f|| + (sigma/lambda) sqrt(2 (Gamma + 1 + log(1/delta)))
    double predictor_norm_bound(double f_norm, double sigma_sub_gaussian, double delta) const;

    // Rebuilds the factor densely; recoverable path after NumericalDegeneracy.
    void refactorize();

private:
    void ensure_capacity(int needed);
    void refresh_target_solve() const;
    // Returns v = L^{-1} k_vec(z) for the current design, via the cache.
    const Vector& solved_kernel_vector(const Point& z) const;

    kernels::KernelSpec spec_;
    double lambda_ = 1.0;
    double lambda_eff_sq_ = 1.0;
    std::vector<Point> pts_;
    std::vector<double> y_;
    int n_ = 0;
    Matrix upper_;  // transpose of the Cholesky factor, column i = row i of L
    double log_det_accum_ = 0.0;

    mutable Vector target_solve_;  // u = L^{-1} y
    mutable bool targets_dirty_ = true;

    struct CacheEntry {
        Point z;
        Vector v;  // prefix of L^{-1} k_vec(z), grown lazily
    };
    mutable std::unordered_map<std::uint64_t, std::vector<CacheEntry>> vcache_;
    mutable std::unique_ptr<std::mutex> cache_mu_;
    mutable Vector scratch_v_;
};

}  // namespace krvi::regression
