#include <doctest.h>

#include <cmath>
#include <sstream>

#include "krvi/envs.hpp"
#include "krvi/rng.hpp"
#include "oracles.hpp"

using namespace krvi;
using kernels::KernelSpec;

namespace {

envs::EpisodicMdp standard_small(std::uint64_t seed = 42) {
    envs::SynthParams prm;
    prm.d_s = 1;
    prm.d_a = 1;
    prm.grid_per_dim = 10;
    prm.num_actions = 3;
    prm.horizon = 3;
    prm.num_centers = 4;
    prm.seed = seed;
    return envs::synth_mdp(KernelSpec::matern(2, 0.5, 0.3), prm);
}

}  // namespace

TEST_CASE("synth mdp structural invariants") {
    const auto mdp = standard_small();
    CHECK(mdp.num_states() == 10);
    CHECK(mdp.num_actions() == 3);
    CHECK(mdp.horizon == 3);

    for (const auto& r : mdp.rewards) {
        CHECK(r.minCoeff() >= 0.0);
        CHECK(r.maxCoeff() <= 1.0);
    }
    for (const auto& p : mdp.transitions) {
        for (Eigen::Index row = 0; row < p.rows(); ++row) {
            CHECK(std::abs(p.row(row).sum() - 1.0) < 1e-12);
            CHECK(p.row(row).minCoeff() > 0.0);
        }
    }
    CHECK_THROWS_AS(envs::synth_mdp(KernelSpec::matern(2, 0.5, 0.3),
                                    envs::SynthParams{1, 1, 1, 3, 3, 4, 0}),
                    InvalidInput);
}

TEST_CASE("single-center reward peaks at the center") {
    // weight-1 combination centered on a grid point: r(center) = k(c,c) = 1
    envs::SynthParams prm;
    prm.grid_per_dim = 5;
    prm.num_actions = 3;
    const auto spec = KernelSpec::matern(2, 0.5, 0.3);
    auto mdp = envs::synth_mdp(spec, prm);
    kernels::KernelCombination f(spec);
    f.centers = {envs::embed(mdp, 2, 1)};
    f.weights = Vector::Ones(1);
    const auto table = envs::reward_table_from_combination(mdp, f);
    CHECK(table(2, 1) == doctest::Approx(1.0));
    CHECK(table.maxCoeff() <= 1.0);
    CHECK(table.minCoeff() >= 0.0);
}

TEST_CASE("embedding is the coordinate concatenation and injective") {
    const auto mdp = standard_small();
    const Point z = envs::embed(mdp, 2, 1);
    CHECK(z.size() == 2);
    CHECK(z[0] == mdp.state_grid[2][0]);
    CHECK(z[1] == mdp.actions[1][0]);
    for (int s = 0; s < mdp.num_states(); ++s) {
        for (int a = 0; a < mdp.num_actions(); ++a) {
            CHECK(z.size() == mdp.joint_dim());
            const Point w = envs::embed(mdp, s, a);
            for (Eigen::Index j = 0; j < w.size(); ++j) {
                CHECK(w[j] >= 0.0);
                CHECK(w[j] <= 1.0);
            }
            for (int s2 = 0; s2 < mdp.num_states(); ++s2) {
                for (int a2 = 0; a2 < mdp.num_actions(); ++a2) {
                    if (s2 != s || a2 != a) {
                        CHECK(envs::embed(mdp, s2, a2) != w);
                    }
                }
            }
        }
    }
    CHECK_THROWS_AS(envs::embed(mdp, -1, 0), InvalidInput);
    CHECK_THROWS_AS(envs::embed(mdp, 0, 99), InvalidInput);
}

TEST_CASE("step returns the table reward and samples the transition row") {
    const auto mdp = standard_small();
    Rng rng(7);
    const auto [r, s2] = envs::step(mdp, 2, 4, 1, rng);
    CHECK(r == mdp.rewards[1](4, 1));
    CHECK(s2 >= 0);
    CHECK(s2 < mdp.num_states());
    CHECK_THROWS_AS(envs::step(mdp, 0, 0, 0, rng), InvalidInput);
    CHECK_THROWS_AS(envs::step(mdp, 4, 0, 0, rng), InvalidInput);

    // empirical frequencies within 3-sigma binomial bands
    const int draws = 100000;
    std::vector<int> counts(static_cast<std::size_t>(mdp.num_states()), 0);
    Rng rng2(99);
    for (int i = 0; i < draws; ++i) {
        counts[static_cast<std::size_t>(envs::step(mdp, 1, 3, 2, rng2).second)]++;
    }
    const auto& row = mdp.transitions[0];
    for (int s = 0; s < mdp.num_states(); ++s) {
        const double p = row(mdp.row_index(3, 2), s);
        const double sd = std::sqrt(p * (1.0 - p) * draws);
        CHECK(std::abs(counts[static_cast<std::size_t>(s)] - p * draws) <= 3.0 * sd + 1.0);
    }
}

TEST_CASE("deterministic one-hot rows step to their support point") {
    auto mdp = standard_small();
    auto& p = mdp.transitions[0];
    p.row(mdp.row_index(0, 0)).setZero();
    p(mdp.row_index(0, 0), 7) = 1.0;
    Rng rng(5);
    for (int i = 0; i < 10; ++i) CHECK(envs::step(mdp, 1, 0, 0, rng).second == 7);
}

TEST_CASE("solve_optimal matches recursive enumeration (10 states, 3 actions, H=3)") {
    const auto mdp = standard_small(2024);
    const auto tables = envs::solve_optimal(mdp);
    // Bellman residual is exactly the construction identity
    for (int h = 1; h <= mdp.horizon; ++h) {
        for (int s = 0; s < mdp.num_states(); ++s) {
            double best = tables.q_star[static_cast<std::size_t>(h - 1)](s, 0);
            for (int a = 0; a < mdp.num_actions(); ++a) {
                double q = mdp.rewards[static_cast<std::size_t>(h - 1)](s, a);
                if (h < mdp.horizon) {
                    q += mdp.transitions[static_cast<std::size_t>(h - 1)]
                             .row(mdp.row_index(s, a))
                             .dot(tables.v_star[static_cast<std::size_t>(h)]);
                }
                CHECK(std::abs(q - tables.q_star[static_cast<std::size_t>(h - 1)](s, a)) <=
                      1e-12);
                best = std::max(best, q);
            }
            CHECK(tables.v_star[static_cast<std::size_t>(h - 1)][s] == doctest::Approx(best));
            CHECK(tables.v_star[static_cast<std::size_t>(h - 1)][s] >= 0.0);
            CHECK(tables.v_star[static_cast<std::size_t>(h - 1)][s] <=
                  mdp.horizon - h + 1 + 1e-12);
        }
    }
    // independent oracle: depth-first expectimax without memoization
    for (int s = 0; s < mdp.num_states(); ++s) {
        CHECK(std::abs(tables.v_star[0][s] - test::expectimax_value(mdp, 1, s)) < 1e-12);
    }
}

TEST_CASE("H = 1 optimum is the per-state reward max") {
    envs::SynthParams prm;
    prm.grid_per_dim = 6;
    prm.num_actions = 4;
    prm.horizon = 1;
    const auto mdp = envs::synth_mdp(KernelSpec::matern(2, 0.5, 0.3), prm);
    const auto tables = envs::solve_optimal(mdp);
    for (int s = 0; s < mdp.num_states(); ++s) {
        CHECK(tables.v_star[0][s] == doctest::Approx(mdp.rewards[0].row(s).maxCoeff()));
    }
}

TEST_CASE("zero rewards give zero values") {
    auto mdp = standard_small();
    for (auto& r : mdp.rewards) r.setZero();
    const auto tables = envs::solve_optimal(mdp);
    for (const auto& v : tables.v_star) CHECK(v.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("policy evaluation") {
    const auto mdp = standard_small(77);
    const auto tables = envs::solve_optimal(mdp);
    const auto greedy = envs::greedy_policy(tables);

    SUBCASE("greedy policy evaluates to V* exactly") {
        const auto values = envs::evaluate_policy(mdp, greedy);
        for (int h = 1; h <= mdp.horizon; ++h) {
            for (int s = 0; s < mdp.num_states(); ++s) {
                CHECK(values[static_cast<std::size_t>(h - 1)][s] ==
                      tables.v_star[static_cast<std::size_t>(h - 1)][s]);
            }
        }
    }

    SUBCASE("a fixed policy matches the recursive expansion and Monte Carlo") {
        envs::Policy policy(3, std::vector<int>(10, 0));
        for (int h = 0; h < 3; ++h) {
            for (int s = 0; s < 10; ++s) policy[h][s] = (s + h) % mdp.num_actions();
        }
        const auto values = envs::evaluate_policy(mdp, policy);
        for (int s = 0; s < 10; ++s) {
            CHECK(std::abs(values[0][s] - test::policy_value_recursive(mdp, policy, 1, s)) <
                  1e-12);
        }
        // Monte-Carlo rollouts from state 0, 1e5 episodes, 3 standard errors
        Rng rng(2718);
        const int episodes = 100000;
        double sum = 0.0, sumsq = 0.0;
        for (int t = 0; t < episodes; ++t) {
            int s = 0;
            double ret = 0.0;
            for (int h = 1; h <= mdp.horizon; ++h) {
                const auto [r, s2] =
                    envs::step(mdp, h, s, policy[static_cast<std::size_t>(h - 1)][s], rng);
                ret += r;
                s = s2;
            }
            sum += ret;
            sumsq += ret * ret;
        }
        const double mean = sum / episodes;
        const double se =
            std::sqrt((sumsq / episodes - mean * mean) / static_cast<double>(episodes));
        CHECK(std::abs(values[0][0] - mean) <= 3.0 * se + 1e-9);
    }

    SUBCASE("H = 1 policy value is the chosen reward") {
        envs::SynthParams prm;
        prm.grid_per_dim = 6;
        prm.num_actions = 4;
        prm.horizon = 1;
        const auto m1 = envs::synth_mdp(KernelSpec::matern(2, 0.5, 0.3), prm);
        envs::Policy policy(1, std::vector<int>(m1.num_states(), 2));
        const auto values = envs::evaluate_policy(m1, policy);
        for (int s = 0; s < m1.num_states(); ++s) {
            CHECK(values[0][s] == m1.rewards[0](s, 2));
        }
    }
}

TEST_CASE("greedy ties break to the lowest action index") {
    envs::ValueTables tables;
    Matrix q(2, 3);
    q << 0.2, 0.9, 0.9,  //
        0.5, 0.1, 0.5;
    tables.q_star = {q};
    tables.v_star = {Vector::Zero(2)};
    const auto policy = envs::greedy_policy(tables);
    CHECK(policy[0][0] == 1);
    CHECK(policy[0][1] == 0);
}

TEST_CASE("uniform policy evaluation matches per-action averaging") {
    const auto mdp = standard_small(5);
    const auto values = envs::evaluate_uniform_policy(mdp);
    // H-step check against direct recursion over uniform action choices
    std::vector<Vector> expect(mdp.horizon, Vector::Zero(mdp.num_states()));
    Vector next = Vector::Zero(mdp.num_states());
    for (int h = mdp.horizon; h >= 1; --h) {
        for (int s = 0; s < mdp.num_states(); ++s) {
            double acc = 0.0;
            for (int a = 0; a < mdp.num_actions(); ++a) {
                acc += mdp.rewards[static_cast<std::size_t>(h - 1)](s, a) +
                       mdp.transitions[static_cast<std::size_t>(h - 1)]
                           .row(mdp.row_index(s, a))
                           .dot(next);
            }
            expect[static_cast<std::size_t>(h - 1)][s] = acc / mdp.num_actions();
        }
        next = expect[static_cast<std::size_t>(h - 1)];
    }
    for (int s = 0; s < mdp.num_states(); ++s) {
        CHECK(values[0][s] == doctest::Approx(expect[0][s]).epsilon(1e-14));
    }
}

TEST_CASE("initial state modes") {
    auto mdp = standard_small();
    mdp.init_mode = envs::InitMode::Cycle;
    CHECK(envs::initial_state(mdp, 1) == 0);
    CHECK(envs::initial_state(mdp, 10) == 9);
    CHECK(envs::initial_state(mdp, 11) == 0);
    mdp.init_mode = envs::InitMode::Fixed;
    mdp.fixed_initial = 4;
    CHECK(envs::initial_state(mdp, 123) == 4);
    mdp.init_mode = envs::InitMode::Random;
    const int a = envs::initial_state(mdp, 3);
    CHECK(a == envs::initial_state(mdp, 3));  // deterministic per episode
    CHECK_THROWS_AS(envs::initial_state(mdp, 0), InvalidInput);

    envs::SynthParams prm;
    prm.grid_per_dim = 6;
    prm.num_actions = 3;
    prm.init_mode = envs::InitMode::Adversarial;
    const auto adv = envs::synth_mdp(KernelSpec::matern(2, 0.5, 0.3), prm);
    const auto tables = envs::solve_optimal(adv);
    const int start = envs::initial_state(adv, 1);
    for (int s = 0; s < adv.num_states(); ++s) {
        CHECK(tables.v_star[0][start] >= tables.v_star[0][s]);
    }
}

TEST_CASE("dump and load round-trip") {
    const auto mdp = standard_small(31337);
    std::stringstream ss;
    envs::dump_mdp(mdp, ss);
    const auto back = envs::load_mdp(ss);
    CHECK(back.d_s == mdp.d_s);
    CHECK(back.horizon == mdp.horizon);
    CHECK(back.num_states() == mdp.num_states());
    CHECK(back.num_actions() == mdp.num_actions());
    for (int h = 0; h < mdp.horizon; ++h) {
        CHECK((back.rewards[static_cast<std::size_t>(h)] -
               mdp.rewards[static_cast<std::size_t>(h)])
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
        CHECK((back.transitions[static_cast<std::size_t>(h)] -
               mdp.transitions[static_cast<std::size_t>(h)])
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
    }
    std::stringstream bad("not-a-dump 1\n");
    CHECK_THROWS_AS(envs::load_mdp(bad), IoError);
}
