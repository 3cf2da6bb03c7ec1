#include "krvi/partition.hpp"

#include <cmath>

namespace krvi::partition {

double CoverElement::capacity(double alpha) const {
    return std::pow(side_, -alpha);
}

CoverTree::CoverTree(int dimension, double alpha, kernels::KernelSpec spec, double lambda,
                     bool splitting_enabled)
    : dimension_(dimension),
      alpha_(alpha),
      spec_(std::move(spec)),
      lambda_(lambda),
      splitting_enabled_(splitting_enabled) {
    if (dimension < 1) throw InvalidInput("cover tree dimension must be >= 1");
    if (!(alpha > 0.0)) throw InvalidInput("cover tree alpha must be > 0");
    if (spec_.dimension() != dimension) {
        throw InvalidInput("cover tree dimension must match the kernel dimension");
    }
    root_ = std::make_unique<CoverElement>();
    root_->lower_ = Point::Zero(dimension);
    root_->side_ = 1.0;
    root_->depth_ = 0;
    root_->regressor_ = std::make_unique<regression::RegressorState>(spec_, lambda_);
}

const CoverElement& CoverTree::locate(const Point& z) const {
    return *const_cast<CoverTree*>(this)->locate_mutable(z);
}

CoverElement* CoverTree::locate_mutable(const Point& z) {
    if (z.size() != dimension_) throw InvalidInput("locate: point dimension mismatch");
    check_unit_cube(z);
    CoverElement* node = root_.get();
    while (!node->is_leaf()) {
        const double half = node->side_ * 0.5;
        std::size_t mask = 0;
        for (int j = 0; j < dimension_; ++j) {
            if (z[j] >= node->lower_[j] + half) mask |= (std::size_t{1} << j);
        }
        node = node->children_[mask].get();
    }
    return node;
}

bool CoverTree::violates_rule(const CoverElement& leaf) const {
    return leaf.capacity(alpha_) < static_cast<double>(leaf.obs_.size()) + 1.0;
}

void CoverTree::split(CoverElement& leaf) {
    if (leaf.depth_ + 1 > kMaxDepth) {
        throw ConfigError("agent.alpha",
                          "cover element split would exceed depth " +
                              std::to_string(kMaxDepth) + "; alpha is likely misconfigured");
    }
    const std::size_t fanout = std::size_t{1} << dimension_;
    const double half = leaf.side_ * 0.5;
    leaf.children_.reserve(fanout);
    for (std::size_t mask = 0; mask < fanout; ++mask) {
        auto child = std::make_unique<CoverElement>();
        child->lower_ = leaf.lower_;
        for (int j = 0; j < dimension_; ++j) {
            if (mask & (std::size_t{1} << j)) child->lower_[j] += half;
        }
        child->side_ = half;
        child->depth_ = leaf.depth_ + 1;
        child->regressor_ = std::make_unique<regression::RegressorState>(spec_, lambda_);
        leaf.children_.push_back(std::move(child));
    }
    // Children inherit the parent observations that fall in their boxes, in
    // the parent's insertion order; each child regressor is rebuilt fresh.
    for (const Observation& obs : leaf.obs_) {
        std::size_t mask = 0;
        for (int j = 0; j < dimension_; ++j) {
            if (obs.z[j] >= leaf.lower_[j] + half) mask |= (std::size_t{1} << j);
        }
        CoverElement& child = *leaf.children_[mask];
        child.regressor_->observe(obs.z, obs.y);
        child.obs_.push_back(obs);
    }
    leaf.obs_.clear();
    leaf.obs_.shrink_to_fit();
    leaf.regressor_.reset();
    leaf_count_ += static_cast<int>(fanout) - 1;
    ever_created_ += static_cast<std::int64_t>(fanout);
}

void CoverTree::maintain(CoverElement& leaf) {
    if (!violates_rule(leaf)) return;
    split(leaf);
    for (auto& child : leaf.children_) maintain(*child);
}

void CoverTree::record(const Point& z, double y, std::int64_t tag) {
    CoverElement* leaf = locate_mutable(z);
    leaf->regressor_->observe(z, y);
    leaf->obs_.push_back(Observation{z, y, tag});
    ++total_obs_;
    if (splitting_enabled_) maintain(*leaf);
}

regression::Prediction CoverTree::query(const Point& z) const {
    return locate(z).regressor_->predict(z);
}

void CoverTree::walk(const CoverElement& node,
                     const std::function<void(const CoverElement&)>& fn) const {
    if (node.is_leaf()) {
        fn(node);
        return;
    }
    for (const auto& child : node.children_) walk(*child, fn);
}

void CoverTree::for_each_leaf(const std::function<void(const CoverElement&)>& fn) const {
    walk(*root_, fn);
}

void CoverTree::reserve_root(int capacity) {
    if (root_->is_leaf()) root_->regressor_->reserve(capacity);
}

CoverStats CoverTree::cover_stats() const {
    CoverStats stats;
    stats.leaf_count = leaf_count_;
    stats.ever_created = ever_created_;
    for_each_leaf([&stats](const CoverElement& leaf) {
        stats.depth_histogram[leaf.depth_] += 1;
        if (leaf.depth_ > stats.max_depth) stats.max_depth = leaf.depth_;
    });
    return stats;
}

void CoverTree::refresh_targets(const std::function<double(const Observation&)>& target_fn) {
    std::function<void(CoverElement&)> visit = [&](CoverElement& node) {
        if (node.is_leaf()) {
            if (node.obs_.empty()) return;
            std::vector<double> fresh(node.obs_.size());
            for (std::size_t i = 0; i < node.obs_.size(); ++i) {
                fresh[i] = target_fn(node.obs_[i]);
                node.obs_[i].y = fresh[i];
            }
            node.regressor_->set_targets(std::move(fresh));
            return;
        }
        for (auto& child : node.children_) visit(*child);
    };
    visit(*root_);
}

}  // namespace krvi::partition
