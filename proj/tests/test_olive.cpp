#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rfolive/errors.hpp"
#include "rfolive/fixtures.hpp"
#include "rfolive/olive.hpp"
#include "rfolive/rfolive.hpp"

using namespace rfolive;

namespace {

OliveConfig table3_config(const Fixture& fx, TieScript script = {}) {
    RewardFreeOptions opt;
    opt.script = std::move(script);
    return plan_reward_free(fx.mdp, fx.f, fx.rewards, 0.1, 0.1, Variant::q, ExecMode::exact, opt).config;
}

}  // namespace

TEST_CASE("Q-type schedule follows its closed form") {
    const double eps = 0.1, delta = 0.05, lf = 3.0, lr = 2.0;
    const int H = 3, d = 4;
    const auto c = schedule_q(eps, delta, H, d, lf, lr, 2.0);
    const double iota = 2.0 * std::log(H * d / (delta * eps));
    CHECK(c.iota == doctest::Approx(iota));
    CHECK(c.eps_actv == doctest::Approx(eps / (2 * H * H)));
    CHECK(c.eps_elim == doctest::Approx(eps / (8 * H * H * 2.0)));
    CHECK(c.n_actv == static_cast<std::size_t>(std::ceil(std::pow(H, 6) * iota / (eps * eps))));
    CHECK(c.n_elim ==
          static_cast<std::size_t>(std::ceil((std::pow(H, 6) * lf + std::pow(H, 4) * lr) * d * iota / (eps * eps))));
    CHECK(c.t_max == d * H + 1);
    CHECK(c.variant == Variant::q);
}

TEST_CASE("V-type schedule tightens thresholds by four and pays K in samples") {
    const double eps = 0.2, delta = 0.1, lf = 1.5, lr = 0.5;
    const int H = 2, d = 3, K = 4;
    const auto q = schedule_q(eps, delta, H, d, lf, lr);
    const auto v = schedule_v(eps, delta, H, d, K, lf, lr);
    CHECK(q.eps_actv / v.eps_actv == doctest::Approx(4.0));
    CHECK(q.eps_elim / v.eps_elim == doctest::Approx(4.0));
    const double iota = std::log(H * d * K / (delta * eps));
    CHECK(v.iota == doctest::Approx(iota));
    CHECK(v.n_actv == static_cast<std::size_t>(std::ceil(std::pow(H, 6) * iota / (eps * eps))));
    CHECK(v.n_elim == static_cast<std::size_t>(
                          std::ceil((std::pow(H, 6) * lf + std::pow(H, 4) * lr) * d * K * iota / (eps * eps))));
    CHECK(v.t_max == d * H + 1);
}

TEST_CASE("schedules and configs reject bad arguments") {
    CHECK_THROWS_AS(schedule_q(0.0, 0.1, 2, 1, 1, 1), ConfigError);
    CHECK_THROWS_AS(schedule_q(0.1, 0.1, 2, 0, 1, 1), ConfigError);
    CHECK_THROWS_AS(schedule_v(0.1, 0.1, 2, 1, 0, 1, 1), ConfigError);
    OliveConfig c;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.eps_actv = c.eps_elim = 0.1;
    c.t_max = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("zero-reward run on the RFOLIVE counterexample follows the scripted trace") {
    const auto fx = rfolive_counterexample();
    const auto cfg = table3_config(fx, TieScript{{}, {-1, 1}});
    CHECK(cfg.eps_actv == doctest::Approx(0.0125));
    Rng rng(0);
    const auto on = online_phase(fx.mdp, fx.f, cfg, rng);
    const auto& its = on.run.trace.iterations;
    REQUIRE(its.size() == 3);
    CHECK(on.run.terminated);

    CHECK(its[0].label == "f_R1-0 | 0");
    CHECK(its[0].v_opt == doctest::Approx(1.0));
    CHECK(its[0].level == 0);
    CHECK(its[0].errors[0] == doctest::Approx(1.0));
    CHECK(its[0].survivors_after == 3);

    CHECK(its[1].label == "f_bad-f_R2 | f_bad-0");
    CHECK(its[1].v_opt == doctest::Approx(0.2));
    CHECK(its[1].errors[0] == doctest::Approx(0.1));
    CHECK(its[1].errors[1] == doctest::Approx(0.1));
    CHECK(its[1].level == 1);
    CHECK(its[1].survivors_after == 1);

    CHECK(its[2].terminated);
    CHECK(its[2].v_opt == 0.0);
    CHECK(its[2].level == -1);

    REQUIRE(on.constraints.records.size() == 2);
    CHECK(on.constraints.records[0].level == 0);
    CHECK(on.constraints.records[1].level == 1);
    CHECK(on.run.trace.to_csv() ==
          "t,V_opt,h,survivors_before,survivors_after,terminated\n"
          "0,1,0,39,3,0\n"
          "1,0.19999999999999998,1,3,1,0\n"
          "2,0,-1,1,1,1\n");
}

TEST_CASE("default deviation picks the first active level") {
    const auto fx = rfolive_counterexample();
    Rng rng(0);
    const auto on = online_phase(fx.mdp, fx.f, table3_config(fx), rng);
    const auto& its = on.run.trace.iterations;
    REQUIRE(its.size() >= 2);
    CHECK(its[1].level == 0);
}

TEST_CASE("invalid scripts raise configuration errors") {
    const auto fx = rfolive_counterexample();
    Rng rng(0);
    // level 1 of f_R1 - 0 carries no error at iteration 0
    CHECK_THROWS_AS(online_phase(fx.mdp, fx.f, table3_config(fx, TieScript{{}, {1}}), rng), ConfigError);
    CHECK_THROWS_AS(online_phase(fx.mdp, fx.f, table3_config(fx, TieScript{{}, {7}}), rng), ConfigError);
    CHECK_THROWS_AS(online_phase(fx.mdp, fx.f, table3_config(fx, TieScript{{50}, {}}), rng), ConfigError);
}

TEST_CASE("iteration cap raises with the partial trace") {
    const auto fx = rfolive_counterexample();
    auto cfg = table3_config(fx, TieScript{{}, {-1, 1}});
    cfg.t_max = 2;
    Rng rng(0);
    try {
        (void)online_phase(fx.mdp, fx.f, cfg, rng);
        FAIL("expected CapExceeded");
    } catch (const CapExceeded& e) {
        CHECK(e.trace().iterations.size() == 2);
    }
}

TEST_CASE("reward-aware baseline on F + R returns an optimal policy") {
    const auto fx = rfolive_counterexample();
    for (std::size_t k = 0; k < fx.rewards.size(); ++k) {
        const auto& r = fx.rewards[k];
        const auto fr = reward_append(fx.f, r);
        OliveConfig cfg = schedule_q(0.1, 0.1, 2, 2, 1.0, 1.0);
        Rng rng(1);
        const auto res = run_olive(fx.mdp, fr, &r, cfg, rng);
        CHECK(res.terminated);
        CHECK(policy_value(fx.mdp, res.policy, r) == doctest::Approx(optimal_q(fx.mdp, r).value));
    }
}

TEST_CASE("sampled mode is reproducible per seed") {
    const auto fx = rfolive_counterexample();
    RewardFreeOptions opt;
    opt.n_actv = 3000;
    opt.n_elim = 3000;
    const auto cfg = plan_reward_free(fx.mdp, fx.f, fx.rewards, 0.1, 0.1, Variant::q, ExecMode::sampled, opt).config;
    CHECK(cfg.n_actv == 3000);
    Rng a(5), b(5);
    const auto ra = online_phase(fx.mdp, fx.f, cfg, a);
    const auto rb = online_phase(fx.mdp, fx.f, cfg, b);
    CHECK(ra.run.trace.to_csv() == rb.run.trace.to_csv());
    CHECK(ra.constraints.records == rb.constraints.records);
    CHECK(ra.run.terminated);
    CHECK(ra.run.trace.iterations.front().level == 0);
}
