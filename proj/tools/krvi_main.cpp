// krvi: run partitioned kernel ridge value iteration experiments, verify the
// library's invariants, and print the analytic bound tables.
#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "krvi/harness.hpp"
#include "krvi/theory.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitConfigError = 2;

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            std::optional<std::string> out_dir, std::optional<std::string> dump_env) {
    auto cfg = krvi::harness::ExperimentConfig::from_file(config_path);
    if (seed) cfg.seeds = {*seed};
    if (out_dir) cfg.output_dir = *out_dir;
    if (dump_env) {
        const auto mdp = krvi::envs::synth_mdp(cfg.make_kernel(), cfg.synth_params());
        std::ofstream out(*dump_env);
        if (!out) throw krvi::IoError("cannot write " + *dump_env);
        krvi::envs::dump_mdp(mdp, out);
        std::cout << "environment table written to " << *dump_env << "\n";
    }
    const auto traces = krvi::harness::run_experiment(cfg, std::cout);
    if (traces.empty()) {
        std::cerr << "no seed completed\n";
        return kExitCheckFailure;
    }
    krvi::harness::emit_plot_data(traces, cfg.output_dir, cfg.burn_in);
    std::cout << "wrote " << traces.size() << " trace(s) and plot data to " << cfg.output_dir
              << "\n";
    return kExitOk;
}

int cmd_verify(const std::string& config_path) {
    const auto cfg = krvi::harness::ExperimentConfig::from_file(config_path);
    const auto results = krvi::harness::run_verify(cfg, std::cout);
    int failed = 0;
    for (const auto& r : results) failed += r.pass ? 0 : 1;
    std::cout << results.size() - failed << "/" << results.size() << " checks passed\n";
    return failed == 0 ? kExitOk : kExitCheckFailure;
}

int cmd_bounds(const std::string& config_path, long long t_max) {
    const auto cfg = krvi::harness::ExperimentConfig::from_file(config_path);
    const auto spec = cfg.make_kernel();
    krvi::theory::BoundParams bp;
    bp.profile = spec.eigendecay_profile(1.0);
    bp.lambda = cfg.agent_lambda;
    bp.H = cfg.env_horizon;
    bp.T = std::max(t_max, cfg.T);
    bp.delta = cfg.agent_delta;

    const auto rb = krvi::theory::regret_bound(bp);
    std::cout << "profile: p = " << bp.profile.p << ", alpha = " << bp.profile.alpha
              << ", p_tilde = " << bp.profile.p_tilde() << ", c_p = " << bp.profile.c_p << "\n";
    std::cout << "regret exponent (d+alpha/2)/(d+alpha) = " << rb.exponent
              << "  [Matern form: " << rb.matern_exponent << "]\n";
    if (bp.uncertainty_exponent_flagged()) {
        std::cout << "note: p_tilde <= 3, the uncertainty covering exponent 2/(p_tilde-1) "
                     "is large; beta fixed points may not exist at this profile\n";
    }
    std::cout << "t,info_gain_bound,rkhs_cov_R2_eps0.5,beta_or_nan,regret_bound\n";
    for (long long t = 1; t <= t_max; t = t < 10 ? t + 1 : t * 2) {
        const double gamma = krvi::theory::info_gain_bound(bp, t);
        const double cov = krvi::theory::rkhs_covering_bound(bp, 2.0, 0.5);
        double beta = std::numeric_limits<double>::quiet_NaN();
        try {
            beta = krvi::theory::solve_beta(bp, t, t, 1.0);
        } catch (const krvi::NoFixedPoint&) {
            // reported as NaN in the table
        }
        krvi::theory::BoundParams at_t = bp;
        at_t.T = t;
        const auto rbt = krvi::theory::regret_bound(at_t);
        std::cout << t << ',' << krvi::format_double(gamma) << ',' << krvi::format_double(cov)
                  << ',' << krvi::format_double(beta) << ',' << krvi::format_double(rbt.value)
                  << "\n";
    }
    return kExitOk;
}

int cmd_coverage(const std::string& config_path, int trials) {
    const auto cfg = krvi::harness::ExperimentConfig::from_file(config_path);
    const auto res = krvi::harness::coverage_trial(cfg, trials);
    std::cout << "trials = " << res.trials << ", design size = " << res.design_size
              << ", beta = " << krvi::format_double(res.beta)
              << ", eps = " << krvi::format_double(res.epsilon) << "\n";
    std::cout << "everywhere-coverage rate = " << krvi::format_double(res.rate) << "\n";
    return kExitOk;
}

int cmd_plot_data(const std::string& in_dir, const std::string& out_dir) {
    std::vector<krvi::harness::RegretTrace> traces;
    for (const auto& entry : std::filesystem::directory_iterator(in_dir)) {
        const auto name = entry.path().filename().string();
        if (entry.path().extension() == ".csv" && name.rfind("trace_", 0) == 0 &&
            name.find("_partition") == std::string::npos) {
            std::ifstream in(entry.path());
            traces.push_back(krvi::harness::read_trace_csv(in));
        }
    }
    if (traces.empty()) {
        std::cerr << "no trace CSVs under " << in_dir << "\n";
        return kExitCheckFailure;
    }
    krvi::harness::emit_plot_data(traces, out_dir, 0.2);
    std::cout << "wrote plot data for " << traces.size() << " trace(s) to " << out_dir << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"domain-partitioned kernel ridge value iteration benchmark"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> dump_env;
    long long t_max = 2000;
    int trials = 500;
    std::string in_dir;
    std::string plot_out;

    auto* run = app.add_subcommand("run", "run the configured experiment");
    run->add_option("--config", config_path, "config file")->required();
    run->add_option("--seed", seed, "run only this seed");
    run->add_option("--out", out_dir, "output directory override");
    run->add_option("--dump-env", dump_env, "also write the generated MDP table here");

    auto* verify = app.add_subcommand("verify", "run invariant and acceptance checks");
    verify->add_option("--config", config_path, "config file")->required();

    auto* bounds = app.add_subcommand("bounds", "print analytic bound tables");
    bounds->add_option("--config", config_path, "config file")->required();
    bounds->add_option("--t-max", t_max, "largest t in the table");

    auto* coverage = app.add_subcommand("coverage", "empirical confidence coverage");
    coverage->add_option("--config", config_path, "config file")->required();
    coverage->add_option("--trials", trials, "number of trials (>= 100)");

    auto* plot = app.add_subcommand("plot-data", "summarize trace CSVs for plotting");
    plot->add_option("--in", in_dir, "directory with trace CSVs")->required();
    plot->add_option("--out", plot_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, seed, out_dir, dump_env);
        if (verify->parsed()) return cmd_verify(config_path);
        if (bounds->parsed()) return cmd_bounds(config_path, t_max);
        if (coverage->parsed()) return cmd_coverage(config_path, trials);
        if (plot->parsed()) return cmd_plot_data(in_dir, plot_out);
    } catch (const krvi::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCheckFailure;
    }
    return kExitOk;
}
