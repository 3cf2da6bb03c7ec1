#pragma once

#include <optional>
#include <vector>

#include "krvi/common.hpp"
#include "krvi/envs.hpp"
#include "krvi/kernels.hpp"
#include "krvi/partition.hpp"
#include "krvi/rng.hpp"

namespace krvi::agents {

enum class BetaMode { FixedConstant, TheoryFixedPoint };

struct AgentConfig {
    double lambda = 1.0;
    BetaMode beta_mode = BetaMode::FixedConstant;
    double c_beta = 1.0;
    double delta = 0.1;
    // Splitting exponent; defaults to the kernel's eigendecay alpha.
    std::optional<double> alpha_override;
    // false = KOVI baseline: one global regressor per step (a never-splitting
    // cover tree, so both policies share every code path).
    bool partition_enabled = true;

    void validate() const;
};

// Confidence width multiplier beta_T(delta).
// FixedConstant: c_beta * H * sqrt(log(max(T H / delta, e))).
// TheoryFixedPoint: the solve_beta fixed point at the worst cover element the
// splitting rule allows (N = T observations on a cube of side T^{-1/alpha};
// the full domain for the KOVI baseline).
double beta(const AgentConfig& config, const kernels::KernelSpec& spec, int horizon,
            long long T);

// One executed transition, kept so episode planning can refresh regression
// targets with the current value estimates.
struct TransitionRecord {
    Point z;
    double reward = 0.0;
    int next_state = 0;
};

class AgentState;

// Lazily evaluated optimistic value functions for one episode:
//   q(h, z) = min(mu_h(z) + beta * b_h(z), H - h + 1)
//   v(h, s) = max(0, max_a q(h, s, a)),  v(H+1, .) = 0.
// Valid until the owning agent records new observations.
class EpisodePlan {
public:
    double q(int h, int s, int a) const;
    double q_at(int h, const Point& z) const;
    double v(int h, int s) const;
    // argmax_a q(h, s, a); ties break to the lowest action index.
    int greedy_action(int h, int s) const;

private:
    friend class AgentState;
    explicit EpisodePlan(const AgentState* agent);
    const AgentState* agent_;
    mutable std::vector<Matrix> q_memo_;  // per h: |S| x |A|, NaN = not evaluated
    mutable std::vector<Vector> v_memo_;  // per h: |S|, NaN = not evaluated
};

struct EpisodeResult {
    std::vector<int> states;        // s_1 .. s_{H+1}
    std::vector<int> actions;       // a_1 .. a_H
    std::vector<double> planned_v;  // V^t_h(s_h) for h = 1..H
    double realized_return = 0.0;
};

// Optimistic least-squares value iteration over per-step cover trees.
class AgentState {
public:
    AgentState(const envs::EpisodicMdp& mdp, const kernels::KernelSpec& spec,
               const AgentConfig& config, long long T);

    const envs::EpisodicMdp& mdp() const { return *mdp_; }
    const AgentConfig& config() const { return config_; }
    int horizon() const { return mdp_->horizon; }
    long long episode_index() const { return episode_index_; }
    double beta_value() const { return beta_; }
    double split_alpha() const { return split_alpha_; }
    const partition::CoverTree& tree(int h) const;
    const std::vector<TransitionRecord>& history(int h) const;

    // Refreshes every stored regression target backward from h = H using the
    // current value estimates, then returns the per-step Q functions.
    EpisodePlan plan_episode();

    // Plans, rolls the MDP forward for one episode acting greedily, records
    // each transition (running the splitting maintenance), and advances t.
    // When frozen_policy is given it receives the episode's greedy policy
    // tabulated over all states before any recording happens.
    EpisodeResult run_episode(Rng& rng, int initial_state,
                              envs::Policy* frozen_policy = nullptr);

private:
    friend class EpisodePlan;
    const envs::EpisodicMdp* mdp_;
    kernels::KernelSpec spec_;
    AgentConfig config_;
    long long T_ = 1;
    double beta_ = 1.0;
    double split_alpha_ = 1.0;
    long long episode_index_ = 1;
    std::vector<partition::CoverTree> trees_;                 // one per h
    std::vector<std::vector<TransitionRecord>> history_;      // one per h
};

}  // namespace krvi::agents
