#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "krvi/harness.hpp"
#include "krvi/rng.hpp"

namespace krvi::harness {

std::vector<double> RegretTrace::cumulative() const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(row.cum_regret);
    return out;
}

RegretTrace run_single(const ExperimentConfig& config, std::uint64_t seed, PolicyKind kind,
                       bool partition_enabled) {
    const auto spec = config.make_kernel();
    const auto mdp = envs::synth_mdp(spec, config.synth_params());
    const auto tables = envs::solve_optimal(mdp);
    const auto oracle = envs::greedy_policy(tables);

    std::optional<agents::AgentState> agent;
    std::vector<Vector> uniform_values;
    if (kind == PolicyKind::Optimistic) {
        auto agent_cfg = config.agent_config();
        agent_cfg.partition_enabled = partition_enabled;
        agent.emplace(mdp, spec, agent_cfg, config.T);
    } else if (kind == PolicyKind::UniformRandom) {
        uniform_values = envs::evaluate_uniform_policy(mdp);
    }

    RegretTrace trace;
    trace.agent_label = config.agent_label(kind, partition_enabled);
    trace.seed = seed;
    trace.T = config.T;
    trace.horizon = mdp.horizon;
    trace.rows.reserve(static_cast<std::size_t>(config.T));

    Rng rng(Rng::derive_seed(seed, 0x657069ull));
    double cum = 0.0;
    envs::Policy frozen;
    for (long long t = 1; t <= config.T; ++t) {
        const auto started = std::chrono::steady_clock::now();
        EpisodeRow row;
        row.t = t;
        row.s1 = envs::initial_state(mdp, t);
        row.v_star = tables.v_star[0][row.s1];

        switch (kind) {
            case PolicyKind::Optimistic: {
                const auto result = agent->run_episode(rng, row.s1, &frozen);
                row.realized_return = result.realized_return;
                row.v_pi = envs::evaluate_policy(mdp, frozen)[0][row.s1];
                for (int h = 1; h <= mdp.horizon; ++h) {
                    const auto stats = agent->tree(h).cover_stats();
                    row.leaf_counts.push_back(stats.leaf_count);
                    row.ever_created.push_back(stats.ever_created);
                    row.max_depths.push_back(stats.max_depth);
                }
                break;
            }
            case PolicyKind::UniformRandom: {
                int s = row.s1;
                for (int h = 1; h <= mdp.horizon; ++h) {
                    const int a = rng.uniform_int(mdp.num_actions());
                    const auto [r, s2] = envs::step(mdp, h, s, a, rng);
                    row.realized_return += r;
                    s = s2;
                }
                row.v_pi = uniform_values[0][row.s1];
                break;
            }
            case PolicyKind::OraclePolicy: {
                int s = row.s1;
                for (int h = 1; h <= mdp.horizon; ++h) {
                    const int a = oracle[static_cast<std::size_t>(h - 1)][static_cast<std::size_t>(s)];
                    const auto [r, s2] = envs::step(mdp, h, s, a, rng);
                    row.realized_return += r;
                    s = s2;
                }
                row.v_pi = row.v_star;
                break;
            }
        }

        row.inst_regret = row.v_star - row.v_pi;
        cum += row.inst_regret;
        row.cum_regret = cum;
        row.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - started)
                          .count();
        trace.rows.push_back(std::move(row));
    }
    return trace;
}

std::vector<RegretTrace> run_experiment(const ExperimentConfig& config, std::ostream& log) {
    config.validate();
    std::filesystem::create_directories(config.output_dir);
    const PolicyKind kind = config.policy_kind();
    std::vector<RegretTrace> traces;
    for (const std::uint64_t seed : config.seeds) {
        try {
            RegretTrace trace = run_single(config, seed, kind, config.agent_partition);
            const std::string base =
                config.output_dir + "/trace_" + trace.agent_label + "_seed" +
                std::to_string(seed);
            {
                std::ofstream out(base + ".csv");
                if (!out) throw IoError("cannot write " + base + ".csv");
                write_trace_csv(trace, out);
            }
            if (kind == PolicyKind::Optimistic) {
                std::ofstream out(base + "_partition.csv");
                if (!out) throw IoError("cannot write " + base + "_partition.csv");
                write_partition_csv(trace, out);
            }
            log << "seed " << seed << ": final cumulative regret "
                << format_double(trace.final_cumulative_regret()) << "\n";
            traces.push_back(std::move(trace));
        } catch (const NumericalDegeneracy& e) {
            log << "seed " << seed << ": aborted (" << e.what() << ")\n";
        }
    }
    return traces;
}

}  // namespace krvi::harness
