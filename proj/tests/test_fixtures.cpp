#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rfolive/errors.hpp"
#include "rfolive/fixtures.hpp"

using namespace rfolive;

TEST_CASE("two-branch counterexamples carry the intended values") {
    const auto t3 = rfolive_counterexample();
    CHECK(t3.name == "table3");
    CHECK(t3.reward_names == std::vector<std::string>{"R1", "R2"});
    CHECK(t3.f.size() == 8);
    CHECK(t3.f.bounds() == std::vector<double>{1.0, 1.0});
    const auto q1 = optimal_q(t3.mdp, t3.rewards[0]);
    CHECK(q1.value == 1.0);
    CHECK(q1.q[0] == LevelTable{1.0, 0.0});
    const auto q2 = optimal_q(t3.mdp, t3.rewards[1]);
    CHECK(q2.value == doctest::Approx(0.2));
    CHECK(q2.q[0][1] == doctest::Approx(0.1));

    // Q*_R - R lies in F for both rewards
    for (const auto& r : t3.rewards) {
        const auto q = optimal_q(t3.mdp, r);
        const auto shifted = ValueFunction{q.q, {}} - ValueFunction{r.levels(), {}};
        CHECK(t3.f.find(shifted).has_value());
    }

    const auto t4 = jointolive_counterexample();
    CHECK(t4.f.size() == 4);
    CHECK(t4.f.label(3) == "f_bad | 0");
    CHECK(t4.f.start_value(3, 0) == doctest::Approx(0.3));
}

TEST_CASE("JointOlive terminates immediately and misses the second reward") {
    const auto fx = jointolive_counterexample();
    const auto cfg = schedule_q(0.1, 0.1, 2, 2, std::log(4.0), std::log(2.0));
    const auto res = run_jointolive(fx.mdp, fx.f, fx.rewards, cfg);
    REQUIRE(res.trace.iterations.size() == 1);
    CHECK(res.trace.iterations[0].terminated);
    CHECK(res.selected == std::vector<std::string>{"f_R1+R | 0+R @ R1"});
    CHECK(res.constraints.records.size() == 2);
    REQUIRE(res.outcomes.size() == 2);
    CHECK(res.outcomes[0].suboptimality == doctest::Approx(0.0));
    CHECK(res.outcomes[1].policy(0, 0) == 1);
    CHECK(res.outcomes[1].suboptimality == doctest::Approx(0.1));
    CHECK(res.outcomes[1].survivors == 2);

    OliveConfig sampled = cfg;
    sampled.mode = ExecMode::sampled;
    CHECK_THROWS_AS(run_jointolive(fx.mdp, fx.f, fx.rewards, sampled), UnsupportedRequest);
}

TEST_CASE("tree family sizes and paths") {
    for (int H : {3, 4, 5}) {
        const auto fam = tree_hardness_family(H);
        CHECK(fam.size() == (std::size_t{1} << (H - 1)));
        std::uint64_t expect = 1;
        for (int h = 0; h <= H - 2; ++h) expect *= std::uint64_t{1} << (h + 1);
        CHECK(fam.feature_class_size() == expect);
        for (std::size_t i = 0; i < fam.size(); ++i) {
            const auto inst = fam.instance(i);
            int states = 0;
            for (int h = 0; h < H; ++h) states += inst.mdp.num_states(h);
            CHECK(states == (1 << (H - 1)) + 1);
            CHECK(inst.x_star == static_cast<int>(i / 2));
            CHECK(inst.a_star == static_cast<int>(i % 2));
            CHECK(inst.mdp.num_states(H - 1) == 2);
            CHECK(inst.mdp.num_actions(H - 1) == 1);
            CHECK(optimal_q(inst.mdp, inst.reward).value == 1.0);
            CHECK(oracle::policy_value(inst.mdp, oracle::uniform(inst.mdp.shape()), inst.reward) ==
                  doctest::Approx(1.0 / (1 << (H - 1))));
        }
    }
    CHECK(tree_hardness_family(4).feature_class_size() == 64);
    CHECK_THROWS_AS(tree_hardness_family(2), InvalidInput);
    CHECK_THROWS_AS(tree_hardness_family(11), UnsupportedRequest);
}

TEST_CASE("uniform exploration needs about 2^(H-1) episodes on the tree") {
    const auto inst = tree_hardness_family(4).instance(3);
    Rng rng(101);
    double total = 0.0;
    const int runs = 400;
    for (int k = 0; k < runs; ++k) total += static_cast<double>(uniform_episodes_to_plus(inst, rng));
    // geometric with p = 1/8: mean 8, sd sqrt(56); 400 runs give a standard error of 0.37
    CHECK(std::abs(total / runs - 8.0) <= 2.0);
    Rng r2(1);
    CHECK_THROWS_AS(uniform_episodes_to_plus(tree_hardness_family(10).instance(0), r2, 1), CapExceeded);
}

TEST_CASE("perturbed tree keeps linear completeness only on the instance path") {
    TreeOptions opt;
    opt.perturbed = true;
    const auto fam = tree_hardness_family(4, opt);
    const auto inst = fam.instance(5);
    const auto x = inst.mdp.next_distribution(2, inst.x_star, inst.a_star);
    CHECK(x[kTreePlusState] == doctest::Approx(0.5 + opt.eps));
    CHECK(inst.feature.dim == 2);
    Rng rng(2);
    std::vector<std::vector<std::vector<double>>> probes;
    for (int h = 0; h < 4; ++h) probes.push_back(completeness_probes(inst.feature, h, 1.0, 8, rng));
    const auto rep = check_linear_completeness(inst.mdp, inst.feature, probes);
    // off-path pairs move to x+ and x- with equal mass, which the 2-d feature
    // cannot express together with the on-path bias
    CHECK_FALSE(rep.pass);
}

TEST_CASE("contextual bandit instance") {
    const auto fx = contextual_bandit_instance(3);
    CHECK(fx.name == "bandit3");
    CHECK(fx.f.size() == 4);
    CHECK_FALSE(fx.f.is_product());
    CHECK(fx.f.label(3) == "f*");
    CHECK(check_realizability(fx.mdp, fx.f, fx.rewards).pass);
    CHECK(optimal_q(fx.mdp, fx.rewards[0]).value == doctest::Approx(0.5));
    CHECK_THROWS_AS(contextual_bandit_instance(1), InvalidInput);
}

TEST_CASE("tabular MDPs are linear with a verified one-hot certificate") {
    Rng rng(102);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = oracle::random_mdp(rng);
        const auto t = tabular_as_linear_mdp(m);
        int d = 0;
        for (int h = 0; h < m.horizon(); ++h) d = std::max(d, m.num_pairs(h));
        CHECK(t.features.dim == d);
        CHECK(t.certificate.pass);
        CHECK(t.certificate.max_residual <= 1e-12);
        CHECK(t.certificate.max_phi_norm == doctest::Approx(1.0));
        CHECK(t.certificate.max_mu_norm <= t.certificate.mu_bound + 1e-12);
    }
}

TEST_CASE("random closed instances are deterministic per seed and closed") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        Rng a(seed), b(seed);
        const auto fa = random_closed_instance(a);
        const auto fb = random_closed_instance(b);
        CHECK(fa.mdp.shape() == fb.mdp.shape());
        CHECK(fa.f.enumerate() == fb.f.enumerate());
        CHECK(fa.rewards == fb.rewards);
        CHECK(check_realizability(fa.mdp, fa.f, fa.rewards).pass);
        CHECK(check_completeness(fa.mdp, fa.f, fa.rewards).pass);
        CHECK(fa.mdp.num_states(fa.mdp.horizon()) == 1);
        for (const auto& r : fa.rewards)
            for (const auto& lvl : r.levels())
                for (double v : lvl) CHECK(v * 8.0 == std::round(v * 8.0));
    }
    Rng r(4);
    ClosedInstanceSizes bad;
    bad.budget = 0;
    CHECK_THROWS(random_closed_instance(r, bad));
}
