#include "krvi/envs.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace krvi::envs {

namespace {

constexpr double kEpsFloor = 1e-6;

double clip01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

std::vector<Point> make_lattice(int dim, int per_dim) {
    std::vector<int> idx(dim, 0);
    std::vector<Point> grid;
    const int total = static_cast<int>(std::pow(per_dim, dim) + 0.5);
    grid.reserve(total);
    while (true) {
        Point p(dim);
        for (int j = 0; j < dim; ++j) {
            p[j] = static_cast<double>(idx[j]) / static_cast<double>(per_dim - 1);
        }
        grid.push_back(p);
        int j = dim - 1;
        while (j >= 0 && ++idx[j] == per_dim) {
            idx[j] = 0;
            --j;
        }
        if (j < 0) break;
    }
    return grid;
}

Point random_point(int dim, Rng& rng) {
    Point p(dim);
    for (int j = 0; j < dim; ++j) p[j] = rng.uniform01();
    return p;
}

kernels::KernelCombination random_combination(const kernels::KernelSpec& spec, int num_centers,
                                              Rng& rng) {
    kernels::KernelCombination f(spec);
    f.centers.reserve(num_centers);
    for (int j = 0; j < num_centers; ++j) f.centers.push_back(random_point(spec.dimension(), rng));
    f.weights = Vector(num_centers);
    for (int j = 0; j < num_centers; ++j) f.weights[j] = rng.normal();
    f.normalize(1.0);
    return f;
}

}  // namespace

Point embed(const EpisodicMdp& mdp, int s, int a) {
    if (s < 0 || s >= mdp.num_states() || a < 0 || a >= mdp.num_actions()) {
        throw InvalidInput("embed: state or action index out of range");
    }
    Point z(mdp.joint_dim());
    z.head(mdp.d_s) = mdp.state_grid[static_cast<std::size_t>(s)];
    z.tail(mdp.d_a) = mdp.actions[static_cast<std::size_t>(a)];
    return z;
}

Matrix reward_table_from_combination(const EpisodicMdp& mdp,
                                     const kernels::KernelCombination& f) {
    Matrix r(mdp.num_states(), mdp.num_actions());
    for (int s = 0; s < mdp.num_states(); ++s) {
        for (int a = 0; a < mdp.num_actions(); ++a) {
            r(s, a) = clip01(f.evaluate(embed(mdp, s, a)));
        }
    }
    return r;
}

EpisodicMdp synth_mdp(const kernels::KernelSpec& spec, const SynthParams& params) {
    if (params.grid_per_dim < 2) throw InvalidInput("synth_mdp: grid_per_dim must be >= 2");
    if (params.num_centers < 1) throw InvalidInput("synth_mdp: num_centers must be >= 1");
    if (params.num_actions < 1) throw InvalidInput("synth_mdp: num_actions must be >= 1");
    if (params.horizon < 1) throw InvalidInput("synth_mdp: horizon must be >= 1");
    if (spec.dimension() != params.d_s + params.d_a) {
        throw InvalidInput("synth_mdp: kernel dimension must equal d_s + d_a");
    }

    EpisodicMdp mdp;
    mdp.d_s = params.d_s;
    mdp.d_a = params.d_a;
    mdp.horizon = params.horizon;
    mdp.init_mode = params.init_mode;
    mdp.fixed_initial = params.fixed_initial;
    mdp.init_seed = Rng::derive_seed(params.seed, 0x696e6974ull);
    mdp.state_grid = make_lattice(params.d_s, params.grid_per_dim);

    if (params.d_a == 1) {
        mdp.actions.reserve(params.num_actions);
        for (int a = 0; a < params.num_actions; ++a) {
            Point p(1);
            p[0] = params.num_actions == 1
                       ? 0.5
                       : static_cast<double>(a) / static_cast<double>(params.num_actions - 1);
            mdp.actions.push_back(p);
        }
    } else {
        Rng rng(Rng::derive_seed(params.seed, 0x61637473ull));
        for (int a = 0; a < params.num_actions; ++a) {
            mdp.actions.push_back(random_point(params.d_a, rng));
        }
    }

    const int n_states = mdp.num_states();
    const int n_actions = mdp.num_actions();
    mdp.rewards.reserve(params.horizon);
    mdp.transitions.reserve(params.horizon);

    for (int h = 1; h <= params.horizon; ++h) {
        Rng reward_rng(Rng::derive_seed(params.seed, 2 * static_cast<std::uint64_t>(h)));
        const auto reward_f = random_combination(spec, params.num_centers, reward_rng);
        mdp.rewards.push_back(reward_table_from_combination(mdp, reward_f));
        mdp.reward_rkhs_norms.push_back(reward_f.rkhs_norm());

        // Transition scores: one rectified RKHS function per landing state,
        // sharing centers within the step; a uniform floor keeps rows positive.
        Rng trans_rng(Rng::derive_seed(params.seed, 2 * static_cast<std::uint64_t>(h) + 1));
        std::vector<Point> centers;
        centers.reserve(params.num_centers);
        for (int j = 0; j < params.num_centers; ++j) {
            centers.push_back(random_point(spec.dimension(), trans_rng));
        }
        Matrix u(params.num_centers, n_states);
        for (int j = 0; j < params.num_centers; ++j) {
            for (int s2 = 0; s2 < n_states; ++s2) u(j, s2) = trans_rng.normal();
        }

        Matrix p(n_states * n_actions, n_states);
        Vector kvec(params.num_centers);
        for (int s = 0; s < n_states; ++s) {
            for (int a = 0; a < n_actions; ++a) {
                const Point z = embed(mdp, s, a);
                for (int j = 0; j < params.num_centers; ++j) {
                    kvec[j] = spec.evaluate(z, centers[j]);
                }
                const int row = mdp.row_index(s, a);
                double total = 0.0;
                for (int s2 = 0; s2 < n_states; ++s2) {
                    const double score = std::max(0.0, u.col(s2).dot(kvec)) + kEpsFloor;
                    p(row, s2) = score;
                    total += score;
                }
                for (int s2 = 0; s2 < n_states; ++s2) p(row, s2) /= total;
            }
        }
        mdp.transitions.push_back(std::move(p));
    }

    if (params.init_mode == InitMode::Adversarial) {
        const ValueTables tables = solve_optimal(mdp);
        int best = 0;
        for (int s = 1; s < n_states; ++s) {
            if (tables.v_star[0][s] > tables.v_star[0][best]) best = s;
        }
        mdp.fixed_initial = best;
    }
    return mdp;
}

std::pair<double, int> step(const EpisodicMdp& mdp, int h, int s, int a, Rng& rng) {
    if (h < 1 || h > mdp.horizon) throw InvalidInput("step: h out of range");
    if (s < 0 || s >= mdp.num_states() || a < 0 || a >= mdp.num_actions()) {
        throw InvalidInput("step: state or action index out of range");
    }
    const double reward = mdp.rewards[static_cast<std::size_t>(h - 1)](s, a);
    const auto& row = mdp.transitions[static_cast<std::size_t>(h - 1)];
    const double u = rng.uniform01();
    double acc = 0.0;
    const int r = mdp.row_index(s, a);
    int next = mdp.num_states() - 1;
    for (int s2 = 0; s2 < mdp.num_states(); ++s2) {
        acc += row(r, s2);
        if (u < acc) {
            next = s2;
            break;
        }
    }
    return {reward, next};
}

int initial_state(const EpisodicMdp& mdp, long long episode) {
    if (episode < 1) throw InvalidInput("initial_state: episode must be >= 1");
    switch (mdp.init_mode) {
        case InitMode::Cycle:
            return static_cast<int>((episode - 1) % mdp.num_states());
        case InitMode::Fixed:
        case InitMode::Adversarial:
            return mdp.fixed_initial;
        case InitMode::Random: {
            Rng rng(Rng::derive_seed(mdp.init_seed, static_cast<std::uint64_t>(episode)));
            return rng.uniform_int(mdp.num_states());
        }
    }
    return 0;
}

ValueTables solve_optimal(const EpisodicMdp& mdp) {
    const int n_states = mdp.num_states();
    const int n_actions = mdp.num_actions();
    ValueTables tables;
    tables.v_star.assign(mdp.horizon, Vector::Zero(n_states));
    tables.q_star.assign(mdp.horizon, Matrix::Zero(n_states, n_actions));
    Vector v_next = Vector::Zero(n_states);
    for (int h = mdp.horizon; h >= 1; --h) {
        Matrix& q = tables.q_star[static_cast<std::size_t>(h - 1)];
        Vector& v = tables.v_star[static_cast<std::size_t>(h - 1)];
        const auto& p = mdp.transitions[static_cast<std::size_t>(h - 1)];
        const auto& r = mdp.rewards[static_cast<std::size_t>(h - 1)];
        for (int s = 0; s < n_states; ++s) {
            double best = 0.0;
            for (int a = 0; a < n_actions; ++a) {
                const double qa = r(s, a) + p.row(mdp.row_index(s, a)).dot(v_next);
                q(s, a) = qa;
                if (a == 0 || qa > best) best = qa;
            }
            v[s] = best;
        }
        v_next = v;
    }
    return tables;
}

std::vector<Vector> evaluate_policy(const EpisodicMdp& mdp, const Policy& policy) {
    if (static_cast<int>(policy.size()) != mdp.horizon) {
        throw InvalidInput("evaluate_policy: policy must cover every step");
    }
    const int n_states = mdp.num_states();
    std::vector<Vector> values(mdp.horizon, Vector::Zero(n_states));
    Vector v_next = Vector::Zero(n_states);
    for (int h = mdp.horizon; h >= 1; --h) {
        const auto& row = policy[static_cast<std::size_t>(h - 1)];
        if (static_cast<int>(row.size()) != n_states) {
            throw InvalidInput("evaluate_policy: policy must cover every state");
        }
        Vector& v = values[static_cast<std::size_t>(h - 1)];
        const auto& p = mdp.transitions[static_cast<std::size_t>(h - 1)];
        const auto& r = mdp.rewards[static_cast<std::size_t>(h - 1)];
        for (int s = 0; s < n_states; ++s) {
            const int a = row[static_cast<std::size_t>(s)];
            if (a < 0 || a >= mdp.num_actions()) {
                throw InvalidInput("evaluate_policy: action index out of range");
            }
            v[s] = r(s, a) + p.row(mdp.row_index(s, a)).dot(v_next);
        }
        v_next = v;
    }
    return values;
}

std::vector<Vector> evaluate_uniform_policy(const EpisodicMdp& mdp) {
    const int n_states = mdp.num_states();
    const int n_actions = mdp.num_actions();
    std::vector<Vector> values(mdp.horizon, Vector::Zero(n_states));
    Vector v_next = Vector::Zero(n_states);
    for (int h = mdp.horizon; h >= 1; --h) {
        Vector& v = values[static_cast<std::size_t>(h - 1)];
        const auto& p = mdp.transitions[static_cast<std::size_t>(h - 1)];
        const auto& r = mdp.rewards[static_cast<std::size_t>(h - 1)];
        for (int s = 0; s < n_states; ++s) {
            double acc = 0.0;
            for (int a = 0; a < n_actions; ++a) {
                acc += r(s, a) + p.row(mdp.row_index(s, a)).dot(v_next);
            }
            v[s] = acc / n_actions;
        }
        v_next = v;
    }
    return values;
}

Policy greedy_policy(const ValueTables& tables) {
    Policy policy;
    policy.reserve(tables.q_star.size());
    for (const Matrix& q : tables.q_star) {
        std::vector<int> row(static_cast<std::size_t>(q.rows()));
        for (Eigen::Index s = 0; s < q.rows(); ++s) {
            int best = 0;
            for (Eigen::Index a = 1; a < q.cols(); ++a) {
                if (q(s, a) > q(s, best)) best = static_cast<int>(a);
            }
            row[static_cast<std::size_t>(s)] = best;
        }
        policy.push_back(std::move(row));
    }
    return policy;
}

void dump_mdp(const EpisodicMdp& mdp, std::ostream& out) {
    out << "krvi-mdp 1\n";
    out << mdp.d_s << ' ' << mdp.d_a << ' ' << mdp.horizon << ' ' << mdp.num_states() << ' '
        << mdp.num_actions() << ' ' << static_cast<int>(mdp.init_mode) << ' '
        << mdp.fixed_initial << ' ' << mdp.init_seed << '\n';
    auto write_point = [&out](const Point& p) {
        for (Eigen::Index j = 0; j < p.size(); ++j) {
            out << (j ? " " : "") << format_double(p[j]);
        }
        out << '\n';
    };
    for (const Point& p : mdp.state_grid) write_point(p);
    for (const Point& p : mdp.actions) write_point(p);
    for (const Matrix& r : mdp.rewards) {
        for (Eigen::Index s = 0; s < r.rows(); ++s) {
            for (Eigen::Index a = 0; a < r.cols(); ++a) {
                out << (a ? " " : "") << format_double(r(s, a));
            }
            out << '\n';
        }
    }
    for (const Matrix& p : mdp.transitions) {
        for (Eigen::Index row = 0; row < p.rows(); ++row) {
            for (Eigen::Index s2 = 0; s2 < p.cols(); ++s2) {
                out << (s2 ? " " : "") << format_double(p(row, s2));
            }
            out << '\n';
        }
    }
}

EpisodicMdp load_mdp(std::istream& in) {
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (!in || magic != "krvi-mdp" || version != 1) {
        throw IoError("load_mdp: not a krvi-mdp v1 stream");
    }
    EpisodicMdp mdp;
    int n_states = 0;
    int n_actions = 0;
    int mode = 0;
    in >> mdp.d_s >> mdp.d_a >> mdp.horizon >> n_states >> n_actions >> mode >>
        mdp.fixed_initial >> mdp.init_seed;
    if (!in || mdp.d_s < 1 || mdp.d_a < 1 || mdp.horizon < 1 || n_states < 1 || n_actions < 1) {
        throw IoError("load_mdp: malformed header");
    }
    mdp.init_mode = static_cast<InitMode>(mode);
    auto read_point = [&in](int dim) {
        Point p(dim);
        for (int j = 0; j < dim; ++j) in >> p[j];
        return p;
    };
    for (int s = 0; s < n_states; ++s) mdp.state_grid.push_back(read_point(mdp.d_s));
    for (int a = 0; a < n_actions; ++a) mdp.actions.push_back(read_point(mdp.d_a));
    for (int h = 0; h < mdp.horizon; ++h) {
        Matrix r(n_states, n_actions);
        for (int s = 0; s < n_states; ++s) {
            for (int a = 0; a < n_actions; ++a) in >> r(s, a);
        }
        mdp.rewards.push_back(std::move(r));
    }
    for (int h = 0; h < mdp.horizon; ++h) {
        Matrix p(n_states * n_actions, n_states);
        for (int row = 0; row < n_states * n_actions; ++row) {
            for (int s2 = 0; s2 < n_states; ++s2) in >> p(row, s2);
        }
        mdp.transitions.push_back(std::move(p));
    }
    if (!in) throw IoError("load_mdp: truncated stream");
    return mdp;
}

}  // namespace krvi::envs
