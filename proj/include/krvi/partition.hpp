#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "krvi/common.hpp"
#include "krvi/kernels.hpp"
#include "krvi/regression.hpp"

namespace krvi::partition {

// One recorded sample. `tag` is an opaque caller-side handle (the agent keeps
// per-step transition records and uses tags to recompute targets); it travels
// with the observation through splits.
struct Observation {
    Point z;
    double y = 0.0;
    std::int64_t tag = -1;
};

// A dyadic hypercube node. Leaves own their observations and a kernel ridge
// regressor over exactly those observations; internal nodes only route.
class CoverElement {
public:
    const Point& lower() const { return lower_; }
    double side() const { return side_; }
    int depth() const { return depth_; }
    bool is_leaf() const { return children_.empty(); }
    int obs_count() const { return static_cast<int>(obs_.size()); }
    const std::vector<Observation>& observations() const { return obs_; }
    const regression::RegressorState& regressor() const { return *regressor_; }
    regression::RegressorState& regressor() { return *regressor_; }

    // rho^{-alpha}: the maximum number of observations this leaf may hold.
    double capacity(double alpha) const;

private:
    friend class CoverTree;
    Point lower_;
    double side_ = 1.0;
    int depth_ = 0;
    std::vector<Observation> obs_;
    std::unique_ptr<regression::RegressorState> regressor_;
    std::vector<std::unique_ptr<CoverElement>> children_;
};

struct CoverStats {
    int leaf_count = 0;
    std::int64_t ever_created = 0;
    int max_depth = 0;
    std::map<int, int> depth_histogram;
};

// Adaptive dyadic cover of [0,1]^d for one MDP step. A leaf with side rho
// splits into 2^d equal children as soon as rho^{-alpha} < N + 1, where N is
// its observation count; its observations are redistributed to the children
// and each child's regressor is rebuilt from the inherited observations.
// Splitting repeats until no leaf violates the rule.
class CoverTree {
public:
    CoverTree(int dimension, double alpha, kernels::KernelSpec spec, double lambda,
              bool splitting_enabled = true);

    int dimension() const { return dimension_; }
    double alpha() const { return alpha_; }
    bool splitting_enabled() const { return splitting_enabled_; }

    // The unique leaf whose half-open box contains z. Coordinates on a shared
    // internal face belong to the higher child; 1.0 belongs to the last child.
    const CoverElement& locate(const Point& z) const;

    // Appends (z, y) to the containing leaf and runs splitting maintenance.
    void record(const Point& z, double y, std::int64_t tag = -1);

    // Prediction of the containing leaf's regressor (prior if empty).
    regression::Prediction query(const Point& z) const;

    CoverStats cover_stats() const;

    // Recomputes every stored target as target_fn(observation) and hands the
    // refreshed vectors to the leaf regressors (design points unchanged).
    void refresh_targets(const std::function<double(const Observation&)>& target_fn);

    void for_each_leaf(const std::function<void(const CoverElement&)>& fn) const;

    // Pre-sizes the root regressor; useful when splitting is disabled and the
    // root will hold the whole history.
    void reserve_root(int capacity);

    std::int64_t total_observations() const { return total_obs_; }

    static constexpr int kMaxDepth = 40;

private:
    CoverElement* locate_mutable(const Point& z);
    bool violates_rule(const CoverElement& leaf) const;
    void split(CoverElement& leaf);
    void maintain(CoverElement& leaf);
    void walk(const CoverElement& node,
              const std::function<void(const CoverElement&)>& fn) const;

    int dimension_ = 1;
    double alpha_ = 1.0;
    kernels::KernelSpec spec_;
    double lambda_ = 1.0;
    bool splitting_enabled_ = true;
    std::unique_ptr<CoverElement> root_;
    int leaf_count_ = 1;
    std::int64_t ever_created_ = 1;
    std::int64_t total_obs_ = 0;
};

}  // namespace krvi::partition
