#include "krvi/regression.hpp"

#include <cmath>
#include <cstring>

namespace krvi::regression {

namespace {

constexpr double kNugget = 1e-10;
constexpr double kNegativeVarianceTol = -1e-10;
constexpr std::size_t kCacheEntryCap = 16384;

std::uint64_t hash_point(const Point& z) {
    std::uint64_t h = 1469598103934665603ull;
    const auto* bytes = reinterpret_cast<const unsigned char*>(z.data());
    const std::size_t len = sizeof(double) * static_cast<std::size_t>(z.size());
    for (std::size_t i = 0; i < len; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

RegressorState::RegressorState(kernels::KernelSpec spec, double lambda)
    : spec_(std::move(spec)),
      lambda_(lambda),
      cache_mu_(std::make_unique<std::mutex>()) {
    if (!(lambda > 0.0)) throw InvalidInput("regressor lambda must be > 0");
    lambda_eff_sq_ = lambda * lambda + kNugget;
}

RegressorState::RegressorState(const RegressorState& other)
    : spec_(other.spec_),
      lambda_(other.lambda_),
      lambda_eff_sq_(other.lambda_eff_sq_),
      pts_(other.pts_),
      y_(other.y_),
      n_(other.n_),
      upper_(other.upper_),
      log_det_accum_(other.log_det_accum_),
      target_solve_(other.target_solve_),
      targets_dirty_(other.targets_dirty_),
      vcache_(other.vcache_),
      cache_mu_(std::make_unique<std::mutex>()) {}

RegressorState& RegressorState::operator=(const RegressorState& other) {
    if (this == &other) return *this;
    spec_ = other.spec_;
    lambda_ = other.lambda_;
    lambda_eff_sq_ = other.lambda_eff_sq_;
    pts_ = other.pts_;
    y_ = other.y_;
    n_ = other.n_;
    upper_ = other.upper_;
    log_det_accum_ = other.log_det_accum_;
    target_solve_ = other.target_solve_;
    targets_dirty_ = other.targets_dirty_;
    vcache_ = other.vcache_;
    return *this;
}

void RegressorState::reserve(int capacity) {
    if (capacity > upper_.rows()) {
        Matrix grown(capacity, capacity);
        if (n_ > 0) grown.topLeftCorner(n_, n_) = upper_.topLeftCorner(n_, n_);
        upper_ = std::move(grown);
    }
    pts_.reserve(static_cast<std::size_t>(capacity));
    y_.reserve(static_cast<std::size_t>(capacity));
}

void RegressorState::ensure_capacity(int needed) {
    if (needed > upper_.rows()) {
        reserve(std::max<int>(needed, static_cast<int>(upper_.rows()) * 2 > 16
                                          ? static_cast<int>(upper_.rows()) * 2
                                          : 16));
    }
}

const Vector& RegressorState::solved_kernel_vector(const Point& z) const {
    if (vcache_.size() > kCacheEntryCap) vcache_.clear();
    auto& bucket = vcache_[hash_point(z)];
    CacheEntry* entry = nullptr;
    for (auto& e : bucket) {
        if (e.z.size() == z.size() && e.z == z) {
            entry = &e;
            break;
        }
    }
    if (entry == nullptr) {
        bucket.push_back(CacheEntry{z, Vector()});
        entry = &bucket.back();
    }
    const int from = static_cast<int>(entry->v.size());
    if (from < n_) {
        entry->v.conservativeResize(n_);
        for (int i = from; i < n_; ++i) {
            double s = spec_.evaluate(z, pts_[static_cast<std::size_t>(i)]);
            if (i > 0) s -= upper_.col(i).head(i).dot(entry->v.head(i));
            entry->v[i] = s / upper_(i, i);
        }
    }
    return entry->v;
}

void RegressorState::refresh_target_solve() const {
    target_solve_.resize(n_);
    for (int i = 0; i < n_; ++i) {
        double s = y_[static_cast<std::size_t>(i)];
        if (i > 0) s -= upper_.col(i).head(i).dot(target_solve_.head(i));
        target_solve_[i] = s / upper_(i, i);
    }
    targets_dirty_ = false;
}

void RegressorState::observe(const Point& z, double y) {
    if (z.size() != spec_.dimension()) throw InvalidInput("observe: point dimension mismatch");
    const double kzz = spec_.evaluate(z, z);
    ensure_capacity(n_ + 1);
    std::lock_guard<std::mutex> lock(*cache_mu_);

    const bool can_extend_targets = !targets_dirty_ && target_solve_.size() == n_;

    double w_sumsq = 0.0;
    if (n_ > 0) {
        const Vector& w = solved_kernel_vector(z);
        w_sumsq = w.head(n_).squaredNorm();
        upper_.col(n_).head(n_) = w.head(n_);
    }
    double b2_old = kzz - w_sumsq;
    if (b2_old < 0.0) {
        if (b2_old < kNegativeVarianceTol) {
            throw NumericalDegeneracy("observe: prior variance fell below tolerance");
        }
        b2_old = 0.0;
    }
    const double pivot_sq = kzz + lambda_eff_sq_ - w_sumsq;
    if (!(pivot_sq > 0.0)) {
        throw NumericalDegeneracy("observe: non-positive Cholesky pivot");
    }
    const double pivot = std::sqrt(pivot_sq);
    upper_(n_, n_) = pivot;

    log_det_accum_ += std::log1p(b2_old / lambda_eff_sq_);

    if (can_extend_targets) {
        target_solve_.conservativeResize(n_ + 1);
        double s = y;
        if (n_ > 0) s -= upper_.col(n_).head(n_).dot(target_solve_.head(n_));
        target_solve_[n_] = s / pivot;
    } else {
        targets_dirty_ = true;
    }

    pts_.push_back(z);
    y_.push_back(y);
    ++n_;
}

void RegressorState::set_targets(std::vector<double> y) {
    if (static_cast<int>(y.size()) != n_) {
        throw InvalidInput("set_targets: target count must match design size");
    }
    std::lock_guard<std::mutex> lock(*cache_mu_);
    y_ = std::move(y);
    targets_dirty_ = true;
}

Prediction RegressorState::predict(const Point& z) const {
    if (z.size() != spec_.dimension()) throw InvalidInput("predict: point dimension mismatch");
    const double kzz = spec_.evaluate(z, z);
    if (n_ == 0) return Prediction{0.0, std::sqrt(kzz)};

    std::lock_guard<std::mutex> lock(*cache_mu_);
    const Vector& v = solved_kernel_vector(z);
    if (targets_dirty_) refresh_target_solve();
    const double mean = v.head(n_).dot(target_solve_.head(n_));
    double b2 = kzz - v.head(n_).squaredNorm();
    if (b2 < 0.0) {
        if (b2 < kNegativeVarianceTol) {
            throw NumericalDegeneracy("predict: variance fell below tolerance");
        }
        b2 = 0.0;
    }
    return Prediction{mean, std::sqrt(b2)};
}

double RegressorState::predictor_norm_bound(double f_norm, double sigma_sub_gaussian,
                                            double delta) const {
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("predictor_norm_bound: delta in (0,1)");
    const double gamma = information_gain();
    return f_norm + sigma_sub_gaussian / lambda_ *
                        std::sqrt(2.0 * (gamma + 1.0 + std::log(1.0 / delta)));
}

void RegressorState::refactorize() {
    std::vector<Point> pts = std::move(pts_);
    std::vector<double> y = std::move(y_);
    pts_.clear();
    y_.clear();
    n_ = 0;
    log_det_accum_ = 0.0;
    targets_dirty_ = true;
    target_solve_.resize(0);
    {
        std::lock_guard<std::mutex> lock(*cache_mu_);
        vcache_.clear();
    }
    for (std::size_t i = 0; i < pts.size(); ++i) observe(pts[i], y[i]);
}

}  // namespace krvi::regression
