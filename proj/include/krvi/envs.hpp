#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "krvi/common.hpp"
#include "krvi/kernels.hpp"
#include "krvi/rng.hpp"

namespace krvi::envs {

// How the environment picks s_1^t.
enum class InitMode { Cycle, Fixed, Random, Adversarial };

// Finite-grid episodic MDP embedded in [0,1]^{d_s} x [0,1]^{d_a}.
// Rewards are deterministic tables in [0,1]; transitions are exact row-
// stochastic tables, so V* and V^pi are computable by exact backward
// induction. Immutable after construction.
struct EpisodicMdp {
    int d_s = 1;
    int d_a = 1;
    int horizon = 1;
    std::vector<Point> state_grid;  // |S| points in [0,1]^{d_s}
    std::vector<Point> actions;     // |A| points in [0,1]^{d_a}
    std::vector<Matrix> rewards;      // per h: |S| x |A|, entries in [0,1]
    std::vector<Matrix> transitions;  // per h: (|S|*|A|) x |S|, rows sum to 1
    std::vector<double> reward_rkhs_norms;  // per h, pre-clip norm of the reward
    InitMode init_mode = InitMode::Cycle;
    int fixed_initial = 0;
    std::uint64_t init_seed = 0;

    int num_states() const { return static_cast<int>(state_grid.size()); }
    int num_actions() const { return static_cast<int>(actions.size()); }
    int joint_dim() const { return d_s + d_a; }
    int row_index(int s, int a) const { return s * num_actions() + a; }
};

struct ValueTables {
    // v_star[h-1](s) for h in 1..H (V*_{H+1} == 0 is implicit)
    std::vector<Vector> v_star;
    // q_star[h-1](s,a)
    std::vector<Matrix> q_star;
};

// Deterministic policy: policy[h-1][s] = action index.
using Policy = std::vector<std::vector<int>>;

struct SynthParams {
    int d_s = 1;
    int d_a = 1;
    int grid_per_dim = 8;
    int num_actions = 4;
    int horizon = 3;
    int num_centers = 5;
    std::uint64_t seed = 0;
    InitMode init_mode = InitMode::Cycle;
    int fixed_initial = 0;
};

// Builds a synthetic MDP whose rewards are clipped RKHS functions of unit
// norm and whose transition scores are rectified RKHS functions with a small
// uniform floor, normalized over the state grid.
EpisodicMdp synth_mdp(const kernels::KernelSpec& spec, const SynthParams& params);

// Reward-construction helper shared with tests: r(z) = clip_[0,1] f(z).
Matrix reward_table_from_combination(const EpisodicMdp& mdp,
                                     const kernels::KernelCombination& f);

// Deterministic reward plus a sample of the next state.
std::pair<double, int> step(const EpisodicMdp& mdp, int h, int s, int a, Rng& rng);

// Initial state for episode t (1-based) under the MDP's InitMode.
int initial_state(const EpisodicMdp& mdp, long long episode);

// Joint embedding of (s, a): state coordinates then action coordinates.
Point embed(const EpisodicMdp& mdp, int s, int a);

// Exact backward induction for V*, Q*.
ValueTables solve_optimal(const EpisodicMdp& mdp);

// Exact policy evaluation; returns per-h value tables (h in 1..H).
std::vector<Vector> evaluate_policy(const EpisodicMdp& mdp, const Policy& policy);

// Exact evaluation of the uniform-random policy.
std::vector<Vector> evaluate_uniform_policy(const EpisodicMdp& mdp);

// Greedy policy from Q*; ties break to the lowest action index.
Policy greedy_policy(const ValueTables& tables);

// Flat text serialization (header, grids, reward rows, transition rows).
void dump_mdp(const EpisodicMdp& mdp, std::ostream& out);
EpisodicMdp load_mdp(std::istream& in);

}  // namespace krvi::envs
