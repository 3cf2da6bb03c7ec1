#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "krvi/agents.hpp"
#include "krvi/common.hpp"
#include "krvi/envs.hpp"
#include "krvi/kernels.hpp"

namespace krvi::harness {

enum class PolicyKind { Optimistic, UniformRandom, OraclePolicy };

// Flat `key = value` configuration with dotted section prefixes.
struct ExperimentConfig {
    // kernel.*
    std::string kernel_family = "matern";  // matern | squared_exponential | finite_spectrum
    double kernel_nu = 0.5;
    double kernel_lengthscale = 0.2;
    int kernel_num_features = 64;
    std::uint64_t kernel_seed = 1;
    double kernel_p = 2.0;  // finite-spectrum eigendecay profile
    double kernel_alpha = 1.0;
    double kernel_eta = 0.0;
    double kernel_c_p = 1.0;

    // env.*
    int env_d_s = 1;
    int env_d_a = 1;
    int env_grid_per_dim = 32;
    int env_num_actions = 8;
    int env_horizon = 3;
    int env_num_centers = 5;
    std::uint64_t env_seed = 7;
    std::string env_init_mode = "cycle";  // cycle | fixed | random | adversarial
    int env_fixed_initial = 0;

    // agent.*
    double agent_lambda = 1.0;
    std::string agent_beta_mode = "fixed";  // fixed | theory
    double agent_c_beta = 1.0;
    double agent_delta = 0.1;
    std::optional<double> agent_alpha;  // splitting exponent override
    bool agent_partition = true;
    std::string agent_policy = "optimistic";  // optimistic | uniform_random | oracle

    // run.*
    long long T = 1000;
    std::vector<std::uint64_t> seeds = {1};
    std::string output_dir = "out";
    std::vector<std::string> checks;  // empty = every check
    double burn_in = 0.2;

    static ExperimentConfig from_file(const std::string& path);
    static ExperimentConfig from_string(const std::string& text);
    void validate() const;

    kernels::KernelSpec make_kernel() const;
    envs::SynthParams synth_params() const;
    agents::AgentConfig agent_config() const;
    PolicyKind policy_kind() const;
    std::string agent_label(PolicyKind kind, bool partition) const;
};

struct EpisodeRow {
    long long t = 0;
    int s1 = 0;
    double realized_return = 0.0;
    double v_star = 0.0;
    double v_pi = 0.0;
    double inst_regret = 0.0;
    double cum_regret = 0.0;
    std::vector<int> leaf_counts;             // per h; empty for baselines
    std::vector<std::int64_t> ever_created;   // per h
    std::vector<int> max_depths;              // per h
    double wall_ms = 0.0;
};

struct RegretTrace {
    std::string agent_label;
    std::uint64_t seed = 0;
    long long T = 0;
    int horizon = 0;
    std::vector<EpisodeRow> rows;

    double final_cumulative_regret() const {
        return rows.empty() ? 0.0 : rows.back().cum_regret;
    }
    std::vector<double> cumulative() const;
};

// --- runner ---------------------------------------------------------------

RegretTrace run_single(const ExperimentConfig& config, std::uint64_t seed, PolicyKind kind,
                       bool partition_enabled);

// Runs the configured policy for every seed and writes per-seed CSVs under
// output_dir. Numerical failures abort the affected seed and are logged.
std::vector<RegretTrace> run_experiment(const ExperimentConfig& config, std::ostream& log);

// --- CSV ------------------------------------------------------------------

void write_trace_csv(const RegretTrace& trace, std::ostream& out);
RegretTrace read_trace_csv(std::istream& in);
// Per-(episode, h) partition statistics: episode, h, leaf_count, ever_created,
// max_depth.
void write_partition_csv(const RegretTrace& trace, std::ostream& out);
// long.csv (seed, t, cumulative_regret, leaf_total) and summary.csv (agent,
// mean final regret, fitted slope, slope CI over seeds).
void emit_plot_data(const std::vector<RegretTrace>& traces, const std::string& out_dir,
                    double burn_in);

// --- fitting ----------------------------------------------------------------

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

// Least-squares fit of log R(t) against log t over the post-burn-in tail.
// series[i] is the value at t = i + 1; nonpositive values are excluded.
SlopeFit fit_regret_exponent(const std::vector<double>& cumulative_regret,
                             double burn_in_fraction);

// Log-log slope over geometric checkpoints t0, t0*r, ... (staircase-friendly;
// used for cover-growth scaling).
SlopeFit fit_loglog_geometric(const std::vector<double>& series, double t0, double ratio);

// --- coverage ---------------------------------------------------------------

struct CoverageResult {
    double rate = 0.0;
    int trials = 0;
    double beta = 0.0;
    double epsilon = 0.0;
    int design_size = 0;
};

// Repeatedly fits ridge regressors to a fixed RKHS target under bounded noise
// and checks |f - mu| <= beta b + eps everywhere on a dense grid, with beta
// from the theory fixed point at the config's delta.
CoverageResult coverage_trial(const ExperimentConfig& config, int trials);

// --- verify -----------------------------------------------------------------

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

// Runs every module's invariant suite plus the acceptance criteria, printing
// one PASS/FAIL line per check. config.checks filters by name prefix.
std::vector<CheckResult> run_verify(const ExperimentConfig& config, std::ostream& log);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace krvi::harness
