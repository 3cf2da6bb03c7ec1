#include "krvi/agents.hpp"

#include <cmath>
#include <limits>

#include "krvi/theory.hpp"

namespace krvi::agents {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

void AgentConfig::validate() const {
    if (!(lambda > 0.0)) throw InvalidInput("agent lambda must be > 0");
    if (!(c_beta > 0.0)) throw InvalidInput("agent c_beta must be > 0");
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("agent delta must lie in (0,1)");
    if (alpha_override && !(*alpha_override > 0.0)) {
        throw InvalidInput("agent alpha override must be > 0");
    }
}

double beta(const AgentConfig& config, const kernels::KernelSpec& spec, int horizon,
            long long T) {
    config.validate();
    if (T < 1) throw InvalidInput("beta: T must be >= 1");
    if (horizon < 1) throw InvalidInput("beta: horizon must be >= 1");
    const double h = static_cast<double>(horizon);
    switch (config.beta_mode) {
        case BetaMode::FixedConstant: {
            const double arg =
                std::max(static_cast<double>(T) * h / config.delta, std::exp(1.0));
            return config.c_beta * h * std::sqrt(std::log(arg));
        }
        case BetaMode::TheoryFixedPoint: {
            theory::BoundParams bp;
            bp.profile = spec.eigendecay_profile(1.0);
            bp.lambda = config.lambda;
            bp.H = horizon;
            bp.T = T;
            bp.delta = config.delta;
            const double alpha = config.alpha_override.value_or(bp.profile.alpha);
            const double rho_element =
                config.partition_enabled
                    ? std::pow(static_cast<double>(T), -1.0 / alpha)
                    : 1.0;
            return theory::solve_beta(bp, T, T, rho_element);
        }
    }
    throw InvalidInput("beta: unknown beta mode");
}

EpisodePlan::EpisodePlan(const AgentState* agent) : agent_(agent) {
    const int n_states = agent_->mdp().num_states();
    const int n_actions = agent_->mdp().num_actions();
    q_memo_.assign(agent_->horizon(), Matrix::Constant(n_states, n_actions, kNaN));
    v_memo_.assign(agent_->horizon(), Vector::Constant(n_states, kNaN));
}

double EpisodePlan::q_at(int h, const Point& z) const {
    const auto pred = agent_->trees_[static_cast<std::size_t>(h - 1)].query(z);
    const double cap = static_cast<double>(agent_->horizon() - h + 1);
    return std::min(pred.mean + agent_->beta_ * pred.stddev, cap);
}

double EpisodePlan::q(int h, int s, int a) const {
    double& slot = q_memo_[static_cast<std::size_t>(h - 1)](s, a);
    if (std::isnan(slot)) slot = q_at(h, envs::embed(agent_->mdp(), s, a));
    return slot;
}

double EpisodePlan::v(int h, int s) const {
    if (h == agent_->horizon() + 1) return 0.0;
    double& slot = v_memo_[static_cast<std::size_t>(h - 1)][s];
    if (std::isnan(slot)) {
        double best = q(h, s, 0);
        for (int a = 1; a < agent_->mdp().num_actions(); ++a) {
            best = std::max(best, q(h, s, a));
        }
        slot = std::max(0.0, best);
    }
    return slot;
}

int EpisodePlan::greedy_action(int h, int s) const {
    int best = 0;
    double best_q = q(h, s, 0);
    for (int a = 1; a < agent_->mdp().num_actions(); ++a) {
        const double qa = q(h, s, a);
        if (qa > best_q) {
            best_q = qa;
            best = a;
        }
    }
    return best;
}

AgentState::AgentState(const envs::EpisodicMdp& mdp, const kernels::KernelSpec& spec,
                       const AgentConfig& config, long long T)
    : mdp_(&mdp), spec_(spec), config_(config), T_(T) {
    config.validate();
    if (T < 1) throw InvalidInput("agent: T must be >= 1");
    if (spec.dimension() != mdp.joint_dim()) {
        throw InvalidInput("agent: kernel dimension must equal the joint state-action dimension");
    }
    split_alpha_ = config.alpha_override ? *config.alpha_override
                                         : spec.eigendecay_profile(1.0).alpha;
    beta_ = agents::beta(config, spec, mdp.horizon, T);
    trees_.reserve(static_cast<std::size_t>(mdp.horizon));
    history_.resize(static_cast<std::size_t>(mdp.horizon));
    for (int h = 1; h <= mdp.horizon; ++h) {
        trees_.emplace_back(mdp.joint_dim(), split_alpha_, spec_, config.lambda,
                            config.partition_enabled);
        if (!config.partition_enabled) {
            trees_.back().reserve_root(static_cast<int>(T) + 1);
        }
        history_[static_cast<std::size_t>(h - 1)].reserve(static_cast<std::size_t>(T));
    }
}

const partition::CoverTree& AgentState::tree(int h) const {
    return trees_[static_cast<std::size_t>(h - 1)];
}

const std::vector<TransitionRecord>& AgentState::history(int h) const {
    return history_[static_cast<std::size_t>(h - 1)];
}

EpisodePlan AgentState::plan_episode() {
    EpisodePlan plan(this);
    // Targets at h = H are pure rewards and never change. Every other level is
    // refreshed against the current V^t_{h+1}, backward so that level h+1 is
    // final before level h reads it.
    for (int h = horizon() - 1; h >= 1; --h) {
        auto& records = history_[static_cast<std::size_t>(h - 1)];
        trees_[static_cast<std::size_t>(h - 1)].refresh_targets(
            [&](const partition::Observation& obs) {
                const TransitionRecord& tr = records[static_cast<std::size_t>(obs.tag)];
                return tr.reward + plan.v(h + 1, tr.next_state);
            });
    }
    return plan;
}

EpisodeResult AgentState::run_episode(Rng& rng, int initial_state,
                                      envs::Policy* frozen_policy) {
    const EpisodePlan plan = plan_episode();
    const int n_states = mdp_->num_states();
    const int h_max = horizon();
    if (frozen_policy != nullptr) {
        frozen_policy->assign(static_cast<std::size_t>(h_max),
                              std::vector<int>(static_cast<std::size_t>(n_states), 0));
        for (int h = 1; h <= h_max; ++h) {
            for (int s = 0; s < n_states; ++s) {
                (*frozen_policy)[static_cast<std::size_t>(h - 1)][static_cast<std::size_t>(s)] =
                    plan.greedy_action(h, s);
            }
        }
    }

    EpisodeResult result;
    result.states.push_back(initial_state);
    int s = initial_state;
    for (int h = 1; h <= h_max; ++h) {
        const int a = plan.greedy_action(h, s);
        result.planned_v.push_back(plan.v(h, s));
        const auto [reward, next] = envs::step(*mdp_, h, s, a, rng);
        const double target = reward + plan.v(h + 1, next);
        auto& records = history_[static_cast<std::size_t>(h - 1)];
        const auto tag = static_cast<std::int64_t>(records.size());
        records.push_back(TransitionRecord{envs::embed(*mdp_, s, a), reward, next});
        trees_[static_cast<std::size_t>(h - 1)].record(records.back().z, target, tag);
        result.actions.push_back(a);
        result.states.push_back(next);
        result.realized_return += reward;
        s = next;
    }
    ++episode_index_;
    return result;
}

}  // namespace krvi::agents
