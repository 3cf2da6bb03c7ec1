#include <fstream>
#include <map>
#include <sstream>

#include "krvi/harness.hpp"

namespace krvi::harness {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

struct KeyValues {
    std::map<std::string, std::string> values;

    bool has(const std::string& key) const { return values.count(key) != 0; }

    template <typename Fn>
    void take(const std::string& key, const Fn& parse) {
        auto it = values.find(key);
        if (it == values.end()) return;
        parse(it->second);
        values.erase(it);
    }
};

double parse_double(const std::string& key, const std::string& raw) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(raw, &pos);
        if (pos != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key, "expected a number, got '" + raw + "'");
    }
}

long long parse_int(const std::string& key, const std::string& raw) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(raw, &pos);
        if (pos != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key, "expected an integer, got '" + raw + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& raw) {
    try {
        std::size_t pos = 0;
        const std::uint64_t v = std::stoull(raw, &pos);
        if (pos != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key, "expected an unsigned integer, got '" + raw + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& raw) {
    if (raw == "true" || raw == "1" || raw == "yes") return true;
    if (raw == "false" || raw == "0" || raw == "no") return false;
    throw ConfigError(key, "expected a boolean, got '" + raw + "'");
}

std::vector<std::string> split_list(const std::string& raw) {
    std::vector<std::string> out;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_string(buffer.str());
}

ExperimentConfig ExperimentConfig::from_string(const std::string& text) {
    KeyValues kv;
    std::stringstream stream(text);
    std::string line;
    int line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config:line " + std::to_string(line_no),
                              "expected 'key = value', got '" + stripped + "'");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config:line " + std::to_string(line_no), "empty key");
        }
        kv.values[key] = value;
    }

    ExperimentConfig cfg;
    kv.take("kernel.family", [&](const std::string& v) { cfg.kernel_family = v; });
    kv.take("kernel.nu", [&](const std::string& v) { cfg.kernel_nu = parse_double("kernel.nu", v); });
    kv.take("kernel.lengthscale", [&](const std::string& v) {
        cfg.kernel_lengthscale = parse_double("kernel.lengthscale", v);
    });
    kv.take("kernel.num_features", [&](const std::string& v) {
        cfg.kernel_num_features = static_cast<int>(parse_int("kernel.num_features", v));
    });
    kv.take("kernel.seed",
            [&](const std::string& v) { cfg.kernel_seed = parse_u64("kernel.seed", v); });
    kv.take("kernel.p", [&](const std::string& v) { cfg.kernel_p = parse_double("kernel.p", v); });
    kv.take("kernel.alpha",
            [&](const std::string& v) { cfg.kernel_alpha = parse_double("kernel.alpha", v); });
    kv.take("kernel.eta",
            [&](const std::string& v) { cfg.kernel_eta = parse_double("kernel.eta", v); });
    kv.take("kernel.c_p",
            [&](const std::string& v) { cfg.kernel_c_p = parse_double("kernel.c_p", v); });

    kv.take("env.d_s",
            [&](const std::string& v) { cfg.env_d_s = static_cast<int>(parse_int("env.d_s", v)); });
    kv.take("env.d_a",
            [&](const std::string& v) { cfg.env_d_a = static_cast<int>(parse_int("env.d_a", v)); });
    kv.take("env.grid_per_dim", [&](const std::string& v) {
        cfg.env_grid_per_dim = static_cast<int>(parse_int("env.grid_per_dim", v));
    });
    kv.take("env.num_actions", [&](const std::string& v) {
        cfg.env_num_actions = static_cast<int>(parse_int("env.num_actions", v));
    });
    kv.take("env.horizon", [&](const std::string& v) {
        cfg.env_horizon = static_cast<int>(parse_int("env.horizon", v));
    });
    kv.take("env.num_centers", [&](const std::string& v) {
        cfg.env_num_centers = static_cast<int>(parse_int("env.num_centers", v));
    });
    kv.take("env.seed", [&](const std::string& v) { cfg.env_seed = parse_u64("env.seed", v); });
    kv.take("env.init_mode", [&](const std::string& v) { cfg.env_init_mode = v; });
    kv.take("env.fixed_initial", [&](const std::string& v) {
        cfg.env_fixed_initial = static_cast<int>(parse_int("env.fixed_initial", v));
    });

    kv.take("agent.lambda",
            [&](const std::string& v) { cfg.agent_lambda = parse_double("agent.lambda", v); });
    kv.take("agent.beta_mode", [&](const std::string& v) { cfg.agent_beta_mode = v; });
    kv.take("agent.c_beta",
            [&](const std::string& v) { cfg.agent_c_beta = parse_double("agent.c_beta", v); });
    kv.take("agent.delta",
            [&](const std::string& v) { cfg.agent_delta = parse_double("agent.delta", v); });
    kv.take("agent.alpha",
            [&](const std::string& v) { cfg.agent_alpha = parse_double("agent.alpha", v); });
    kv.take("agent.partition",
            [&](const std::string& v) { cfg.agent_partition = parse_bool("agent.partition", v); });
    kv.take("agent.policy", [&](const std::string& v) { cfg.agent_policy = v; });

    kv.take("T", [&](const std::string& v) { cfg.T = parse_int("T", v); });
    kv.take("seeds", [&](const std::string& v) {
        cfg.seeds.clear();
        for (const auto& s : split_list(v)) cfg.seeds.push_back(parse_u64("seeds", s));
    });
    kv.take("output_dir", [&](const std::string& v) { cfg.output_dir = v; });
    kv.take("checks", [&](const std::string& v) { cfg.checks = split_list(v); });
    kv.take("burn_in", [&](const std::string& v) { cfg.burn_in = parse_double("burn_in", v); });

    if (!kv.values.empty()) {
        throw ConfigError(kv.values.begin()->first, "unknown configuration key");
    }
    cfg.validate();
    return cfg;
}

void ExperimentConfig::validate() const {
    if (kernel_family != "matern" && kernel_family != "squared_exponential" &&
        kernel_family != "finite_spectrum") {
        throw ConfigError("kernel.family", "must be matern, squared_exponential, or "
                                           "finite_spectrum");
    }
    if (!(kernel_nu > 0.0)) throw ConfigError("kernel.nu", "must be > 0");
    if (!(kernel_lengthscale > 0.0)) throw ConfigError("kernel.lengthscale", "must be > 0");
    if (kernel_num_features < 1) throw ConfigError("kernel.num_features", "must be >= 1");
    if (env_d_s < 1) throw ConfigError("env.d_s", "must be >= 1");
    if (env_d_a < 1) throw ConfigError("env.d_a", "must be >= 1");
    if (env_grid_per_dim < 2) throw ConfigError("env.grid_per_dim", "must be >= 2");
    if (env_num_actions < 1) throw ConfigError("env.num_actions", "must be >= 1");
    if (env_horizon < 1) throw ConfigError("env.horizon", "must be >= 1");
    if (env_num_centers < 1) throw ConfigError("env.num_centers", "must be >= 1");
    if (env_init_mode != "cycle" && env_init_mode != "fixed" && env_init_mode != "random" &&
        env_init_mode != "adversarial") {
        throw ConfigError("env.init_mode", "must be cycle, fixed, random, or adversarial");
    }
    if (!(agent_lambda > 0.0)) throw ConfigError("agent.lambda", "must be > 0");
    if (agent_beta_mode != "fixed" && agent_beta_mode != "theory") {
        throw ConfigError("agent.beta_mode", "must be fixed or theory");
    }
    if (!(agent_c_beta > 0.0)) throw ConfigError("agent.c_beta", "must be > 0");
    if (!(agent_delta > 0.0 && agent_delta < 1.0)) {
        throw ConfigError("agent.delta", "must lie in (0,1)");
    }
    if (agent_alpha && !(*agent_alpha > 0.0)) throw ConfigError("agent.alpha", "must be > 0");
    if (agent_policy != "optimistic" && agent_policy != "uniform_random" &&
        agent_policy != "oracle") {
        throw ConfigError("agent.policy", "must be optimistic, uniform_random, or oracle");
    }
    if (T < 1) throw ConfigError("T", "must be >= 1");
    if (seeds.empty()) throw ConfigError("seeds", "must be nonempty");
    if (!(burn_in >= 0.0 && burn_in < 1.0)) throw ConfigError("burn_in", "must lie in [0,1)");
}

kernels::KernelSpec ExperimentConfig::make_kernel() const {
    const int dim = env_d_s + env_d_a;
    if (kernel_family == "matern") {
        return kernels::KernelSpec::matern(dim, kernel_nu, kernel_lengthscale);
    }
    if (kernel_family == "squared_exponential") {
        return kernels::KernelSpec::squared_exponential(dim, kernel_lengthscale);
    }
    kernels::EigendecayProfile profile{kernel_p, kernel_alpha, kernel_eta, kernel_c_p};
    return kernels::KernelSpec::finite_spectrum(dim, profile, kernel_num_features, kernel_seed);
}

envs::SynthParams ExperimentConfig::synth_params() const {
    envs::SynthParams prm;
    prm.d_s = env_d_s;
    prm.d_a = env_d_a;
    prm.grid_per_dim = env_grid_per_dim;
    prm.num_actions = env_num_actions;
    prm.horizon = env_horizon;
    prm.num_centers = env_num_centers;
    prm.seed = env_seed;
    prm.fixed_initial = env_fixed_initial;
    if (env_init_mode == "cycle") prm.init_mode = envs::InitMode::Cycle;
    if (env_init_mode == "fixed") prm.init_mode = envs::InitMode::Fixed;
    if (env_init_mode == "random") prm.init_mode = envs::InitMode::Random;
    if (env_init_mode == "adversarial") prm.init_mode = envs::InitMode::Adversarial;
    return prm;
}

agents::AgentConfig ExperimentConfig::agent_config() const {
    agents::AgentConfig cfg;
    cfg.lambda = agent_lambda;
    cfg.beta_mode = agent_beta_mode == "theory" ? agents::BetaMode::TheoryFixedPoint
                                                : agents::BetaMode::FixedConstant;
    cfg.c_beta = agent_c_beta;
    cfg.delta = agent_delta;
    cfg.alpha_override = agent_alpha;
    cfg.partition_enabled = agent_partition;
    return cfg;
}

PolicyKind ExperimentConfig::policy_kind() const {
    if (agent_policy == "uniform_random") return PolicyKind::UniformRandom;
    if (agent_policy == "oracle") return PolicyKind::OraclePolicy;
    return PolicyKind::Optimistic;
}

std::string ExperimentConfig::agent_label(PolicyKind kind, bool partition) const {
    switch (kind) {
        case PolicyKind::UniformRandom:
            return "uniform-random";
        case PolicyKind::OraclePolicy:
            return "oracle";
        case PolicyKind::Optimistic:
            return partition ? "pi-krvi" : "kovi";
    }
    return "unknown";
}

}  // namespace krvi::harness
