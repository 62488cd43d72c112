// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rfolive/bellman.hpp"
#include "rfolive/dimensions.hpp"
#include "rfolive/errors.hpp"
#include "rfolive/fixtures.hpp"
#include "rfolive/harness.hpp"
#include "rfolive/io.hpp"
#include "rfolive/rfolive.hpp"

using namespace rfolive;

namespace {

// Pinned tolerances.
constexpr double kOracleTol = 1e-10;
constexpr double kExhaustiveTol = 1e-12;
constexpr double kMemberTol = 1e-9;
constexpr double kSurrogateTol = 1e-10;
constexpr double kSuboptTol = 1e-12;
constexpr double kResidualTol = 1e-9;
constexpr double kHoeffdingDelta = 0.01;

struct Outcome {
    bool pass = true;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// ---- 1 ----
Outcome oracle_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(1001);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto m = oracle::random_mdp(rng, {6, 3, 4});
        const auto& s = m.shape();
        const auto f = oracle::random_function(rng, s, 1.0, true);
        const auto r = oracle::random_reward(rng, s);
        const auto pi = oracle::random_policy(rng, s);
        const auto fixed = oracle::random_policy(rng, s);
        auto note = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };
        note(policy_value(m, pi, r), oracle::policy_value(m, oracle::follow(pi), r));
        note(policy_value(m, StochasticPolicy::uniform(s), r), oracle::policy_value(m, oracle::uniform(s), r));
        for (int h = 0; h < m.horizon(); ++h) {
            const auto d = occupancy(m, pi, h).weights;
            const auto o = oracle::occupancy(m, oracle::follow(pi), h, oracle::follow(pi));
            for (std::size_t i = 0; i < d.size(); ++i) note(d[i], o[i]);
            const auto sources = std::vector<std::pair<ActionSource, oracle::ActionDist>>{
                {ActionSource::roll_in, oracle::follow(pi)},
                {ActionSource::greedy, oracle::greedy_of(f, s)},
                {ActionSource::uniform, oracle::uniform(s)},
                {ActionSource::fixed, oracle::follow(fixed)}};
            for (const auto& [src, dist] : sources)
                for (const RewardTable* rr : {static_cast<const RewardTable*>(nullptr), &r}) {
                    BellmanErrorQuery q{&f, rr, &pi, src, &fixed, h, {}};
                    note(exact_avg_bellman_error(m, q), oracle::avg_bellman_error(m, f, rr, oracle::follow(pi), h, dist));
                }
        }
    }
    const double secs = seconds_since(t0);
    return {worst <= kOracleTol && secs < 30.0,
            "100 MDPs, max |diff| = " + fmt("%.2e", worst) + ", " + fmt("%.2f s", secs) + " (limit 30 s)"};
}

// ---- 2 ----
double integrand_width(const LayerShape& s, const ValueFunction& f, const RewardTable* r, int h) {
    auto range = [](std::span<const double> v) {
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        return *hi - *lo;
    };
    double w = range(f.levels[h]);
    if (r) w += range(r->level(h));
    if (h + 1 < s.horizon()) w += range(level_values(s, f, h + 1));
    return w;
}

Outcome estimator_concentration() {
    const std::size_t n = 20000;
    Rng rng(2002);
    int good = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto m = oracle::random_mdp(rng);
        const auto& s = m.shape();
        const auto f = oracle::random_function(rng, s);
        const auto r = oracle::random_reward(rng, s);
        const auto pi = oracle::random_policy(rng, s);
        const int h = static_cast<int>(rng.below(m.horizon()));
        const double band = std::sqrt(std::log(2.0 / kHoeffdingDelta) / (2.0 * n));
        std::vector<Trajectory> traj;
        std::vector<TransitionTuple> data;
        for (std::size_t i = 0; i < n; ++i) {
            traj.push_back(sample_trajectory(m, pi, rng));
            data.push_back(sample_switched(m, pi, h, ActionSelector::of(pi), rng, &r));
        }
        const double e0 = exact_q_error(m, f, nullptr, pi, h);
        const double er = exact_q_error(m, f, &r, pi, h);
        // the 1e-12 slack covers summation rounding when the integrand is constant
        const double w0 = integrand_width(s, f, nullptr, h) * band + 1e-12;
        const double wr = integrand_width(s, f, &r, h) * band + 1e-12;
        good += std::abs(est_onpolicy(s, traj, f, h) - e0) <= w0 && std::abs(est_q(s, data, f) - e0) <= w0 &&
                std::abs(est_q_reward(s, data, f, nullptr) - er) <= wr;
    }

    std::vector<Fixture> fixtures{rfolive_counterexample(), jointolive_counterexample()};
    for (int n_ctx : {3, 4, 5}) fixtures.push_back(contextual_bandit_instance(n_ctx));
    Rng frng(2003);
    for (const auto& inst : tree_hardness_family(4).instances()) {
        const auto& s = inst.mdp.shape();
        auto cls = FunctionClass::joint(s, {ValueFunction::zero(s), oracle::random_function(frng, s)}, {1, 1, 1, 1});
        fixtures.push_back(Fixture{"tree", inst.mdp, std::move(cls), {inst.reward}, {"R"}});
    }
    for (int i = 0; i < 5; ++i) fixtures.push_back(random_closed_instance(frng));
    double worst = 0.0;
    std::size_t cases = 0;
    bool all_exhaustive = true;
    Rng prng(2004);
    for (const auto& fx : fixtures) {
        const auto& s = fx.mdp.shape();
        std::vector<DeterministicPolicy> rollins{DeterministicPolicy::constant(s, 0)};
        for (int k = 0; k < 3; ++k) rollins.push_back(oracle::random_policy(prng, s));
        for (const auto& pi : rollins)
            for (int h = 0; h < fx.mdp.horizon(); ++h)
                for (const auto& r : fx.rewards) {
                    const auto data = oracle::exhaustive_dataset(fx.mdp, pi, h, true, &r);
                    if (data.empty()) {
                        all_exhaustive = false;
                        continue;
                    }
                    for (std::size_t id = 0; id < fx.f.size(); ++id) {
                        const auto g = fx.f.member(id) + ValueFunction{r.levels(), {}};
                        const double est = est_v_is(s, data, g, &r, greedy_policy(s, g));
                        worst = std::max(worst, std::abs(est - exact_v_error(fx.mdp, g, &r, pi, h)));
                        ++cases;
                    }
                }
    }
    return {good >= 99 && worst <= kExhaustiveTol && all_exhaustive,
            std::to_string(good) + "/100 trials in band (need 99); importance-weighted exhaustive max |diff| = " +
                fmt("%.2e", worst) + " over " + std::to_string(cases) + " cases on " +
                std::to_string(fixtures.size()) + " fixtures"};
}

// ---- 3 ----
Outcome surrogate_identity() {
    Rng rng(3003);
    int cases = 0;
    double worst_member = 0.0, worst_err = 0.0;
    bool all_members = true;
    while (cases < 50) {
        const auto fx = random_closed_instance(rng);
        if (!check_completeness(fx.mdp, fx.f, fx.rewards).pass) continue;
        const auto diff = difference_class(fx.f);
        const int H = fx.mdp.horizon();
        for (int k = 0; k < 5 && cases < 50; ++k, ++cases) {
            const auto& r = fx.rewards[rng.below(fx.rewards.size())];
            const auto g = fx.f.member(rng.below(fx.f.size())) + ValueFunction{r.levels(), {}};
            const int h = static_cast<int>(rng.below(H));
            const bool neg = rng.below(2) == 1;
            const auto sur = surrogate_zero_reward(fx.mdp, g, r, h, neg);
            const auto hit = diff.find(sur, kMemberTol);
            all_members = all_members && hit.has_value();
            if (hit) worst_member = std::max(worst_member, sup_distance(diff.member(*hit), sur));
            for (int p = 0; p < 10; ++p) {
                const auto pi = oracle::random_policy(rng, fx.mdp.shape());
                const double target = (neg ? -1.0 : 1.0) * exact_q_error(fx.mdp, g, &r, pi, h);
                for (int l = 0; l < H; ++l)
                    worst_err = std::max(worst_err, std::abs(exact_q_error(fx.mdp, sur, nullptr, pi, l) -
                                                             (l == h ? target : 0.0)));
            }
        }
    }
    return {all_members && worst_err <= kSurrogateTol,
            "50 cases, all in F-F: " + std::string(all_members ? "yes" : "no") + " (max dist " +
                fmt("%.1e", worst_member) + "), max error mismatch " + fmt("%.2e", worst_err)};
}

// ---- 4 ----
Outcome end_to_end() {
    const auto t0 = std::chrono::steady_clock::now();
    const double eps = 0.2;
    bool ok = true;
    double worst = -1.0;
    int runs = 0;
    std::string failure;
    for (Variant v : {Variant::q, Variant::v}) {
        Rng gen(4004);
        for (int draw = 0; draw < 10; ++draw) {
            const auto fx = random_closed_instance(gen, ClosedInstanceSizes{3, 2, 3, 3, 200});
            Rng rng(static_cast<std::uint64_t>(draw));
            try {
                const auto res = run_reward_free(fx.mdp, fx.f, fx.rewards, eps, 0.1, v, ExecMode::exact, rng);
                const auto iters = static_cast<int>(res.online.run.trace.iterations.size());
                if (!res.online.run.terminated || iters > res.config.t_max) {
                    ok = false;
                    failure = "no termination within T_max";
                }
                for (const auto& o : res.outcomes) {
                    worst = std::max(worst, o.suboptimality);
                    if (!o.optimal_survived || o.suboptimality > eps + kSuboptTol) {
                        ok = false;
                        failure = "draw " + std::to_string(draw) + ": suboptimality or Q* elimination";
                    }
                }
            } catch (const std::exception& e) {
                ok = false;
                failure = std::string("draw ") + std::to_string(draw) + ": " + e.what();
            }
            ++runs;
        }
    }
    const double secs = seconds_since(t0);
    ok = ok && secs < 60.0;
    return {ok, std::to_string(runs) + " runs (Q and V), max suboptimality " + fmt("%.3g", worst) +
                    " (limit 0.2), " + fmt("%.2f s", secs) + " (limit 60 s)" +
                    (failure.empty() ? "" : "; " + failure)};
}

// ---- 5 ----
Outcome counterexample() {
    const auto fx = rfolive_counterexample();
    RewardFreeOptions opt;
    opt.script.deviation = {-1, 1};
    const auto plan = plan_reward_free(fx.mdp, fx.f, fx.rewards, 0.1, 0.1, Variant::q, ExecMode::exact, opt);
    Rng rng(0);
    const auto on = online_phase(fx.mdp, fx.f, plan.config, rng);

    // (x, a) marginals of the recorded supports
    auto marginal = [](const ConstraintRecord& rec) {
        std::map<std::pair<int, int>, double> m;
        for (const auto& p : rec.support) m[{p.x, p.a}] += p.weight;
        return m;
    };
    const auto& recs = on.constraints.records;
    const bool constraints_ok = recs.size() == 2 && recs[0].level == 0 &&
                                marginal(recs[0]) == std::map<std::pair<int, int>, double>{{{0, 0}, 1.0}} &&
                                recs[1].level == 1 &&
                                marginal(recs[1]) == std::map<std::pair<int, int>, double>{{{1, 0}, 1.0}};

    OfflineOptions coarse;
    coarse.tau_off = 0.02;
    const auto r1 = evaluate_reward(fx.mdp, on.constraints, fx.f, fx.rewards[0], coarse);
    const auto r2 = evaluate_reward(fx.mdp, on.constraints, fx.f, fx.rewards[1], coarse);
    const auto r2_tight = evaluate_reward(fx.mdp, on.constraints, fx.f, fx.rewards[1], {});
    const bool coarse_ok = r2.policy(0, 0) == 1 && std::abs(r2.suboptimality - 0.1) <= kSuboptTol &&
                           std::abs(r1.suboptimality) <= kSuboptTol;
    const bool tight_ok = std::abs(r2_tight.suboptimality) <= kSuboptTol;
    return {constraints_ok && coarse_ok && tight_ok,
            std::string("constraints {(0,x0 left),(1,xB NULL)}: ") + (constraints_ok ? "yes" : "no") +
                "; tau_off=0.02: R2 action " + std::to_string(r2.policy(0, 0)) + " subopt " +
                fmt("%.12g", r2.suboptimality) + ", R1 subopt " + fmt("%.3g", r1.suboptimality) +
                "; tau_off=eps_elim/2=" + fmt("%.3g", plan.config.eps_elim / 2) + ": R2 subopt " +
                fmt("%.3g", r2_tight.suboptimality)};
}

// ---- 6 ----
Outcome jointolive() {
    const auto fx = jointolive_counterexample();
    auto cfg = schedule_q(0.1, 0.1, 2, 2, std::log(4.0), std::log(2.0));
    cfg.script.optimism = {0};  // (f_R1, R1) ahead of the tied (f_R1, R2)
    const auto joint = run_jointolive(fx.mdp, fx.f, fx.rewards, cfg);
    const bool joint_fails = joint.outcomes.size() == 2 && joint.outcomes[1].policy(0, 0) == 1 &&
                             std::abs(joint.outcomes[1].suboptimality - 0.1) <= kSuboptTol;

    Rng rng(0);
    const auto rf = run_reward_free(fx.mdp, fx.f, fx.rewards, 0.1, 0.1, Variant::q, ExecMode::exact, rng);
    bool rf_ok = rf.outcomes.size() == 2;
    for (const auto& o : rf.outcomes) rf_ok = rf_ok && std::abs(o.suboptimality) <= kSuboptTol;
    return {joint_fails && rf_ok, "JointOlive R2 subopt " + fmt("%.12g", joint.outcomes.at(1).suboptimality) +
                                      "; RFOLIVE subopts " + fmt("%.3g", rf.outcomes.at(0).suboptimality) + ", " +
                                      fmt("%.3g", rf.outcomes.at(1).suboptimality)};
}

// ---- 7 ----
Outcome dimension_separation() {
    bool ok = true;
    std::string detail;
    for (int n : {3, 4, 5}) {
        const auto fx = contextual_bandit_instance(n);
        const auto& r = fx.rewards[0];
        const auto fs = reward_append(fx.f, r).enumerate();
        const double eps = 1.0 / (2.0 * n);
        const auto q = be_dimension(fx.mdp, fs, &r, eps, Variant::q, DeMode::exhaustive);
        const auto v = be_dimension(fx.mdp, fs, &r, eps, Variant::v, DeMode::exhaustive);

        // replay the certificate against its own level's residual class
        const auto cls = bellman_residual_class(fx.mdp, fs, &r, q.level, Variant::q);
        const auto fam = rollin_distributions(fx.mdp, fs, q.level, Variant::q);
        bool replay = q.eps_prime >= eps && static_cast<int>(q.certificate.size()) == q.dimension;
        std::vector<std::vector<double>> preds;
        for (std::size_t c : q.certificate) {
            replay = replay && oracle::independent_at(fam.weights[c], preds, cls, q.eps_prime);
            preds.push_back(fam.weights[c]);
        }

        std::vector<DeterministicPolicy> pols;
        for (const auto& f : fs) pols.push_back(greedy_policy(fx.mdp.shape(), f));
        int vrank = 0;
        for (int h = 0; h < fx.mdp.horizon(); ++h)
            vrank = std::max(vrank, bellman_rank_check(error_matrix(fx.mdp, fs, pols, &r, h, Variant::v), 1).rank);
        const bool this_ok = q.dimension >= n && replay && q.dimension > v.dimension && vrank == 1;
        ok = ok && this_ok;
        detail += (detail.empty() ? "" : "; ") + std::string("N=") + std::to_string(n) + ": Q " +
                  std::to_string(q.dimension) + (replay ? " (replayed)" : " (replay failed)") + ", V " +
                  std::to_string(v.dimension) + ", V rank " + std::to_string(vrank);
    }
    return {ok, detail};
}

// ---- 8 ----
Outcome hardness_family() {
    const auto fam = tree_hardness_family(4);
    Rng prng(8008);
    bool all = true;
    double worst = 0.0;
    for (const auto& inst : fam.instances()) {
        std::vector<std::vector<std::vector<double>>> probes;
        for (int h = 0; h < 4; ++h) probes.push_back(completeness_probes(inst.feature, h, 1.0, 8, prng));
        const auto rep = check_linear_completeness(inst.mdp, inst.feature, probes, 1.0, kResidualTol);
        all = all && rep.pass && rep.max_residual <= kResidualTol;
        worst = std::max(worst, rep.max_residual);
    }
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Rng rng(seed);
        total += static_cast<double>(uniform_episodes_to_plus(fam.instance(seed % fam.size()), rng));
    }
    const double mean = total / 200.0;
    const bool ok = all && fam.feature_class_size() == 64 && fam.size() == 8 && mean >= 6.0 && mean <= 11.0;
    return {ok, "8 instances complete: " + std::string(all ? "yes" : "no") + " (max residual " +
                    fmt("%.1e", worst) + "), |Phi| = " + std::to_string(fam.feature_class_size()) +
                    ", instances = " + std::to_string(fam.size()) + ", mean episodes " + fmt("%.3f", mean) +
                    " (window [6, 11])"};
}

// ---- 9 ----
// The size bound is for one d-dimensional parameter ball of radius B = H, so
// it is checked level by level; the class cover is the product of the levels.
Outcome cover_bounds() {
    bool ok = true;
    std::string detail;
    const int H = 2;
    const double B = H;
    for (int d : {1, 2})
        for (double eps : {0.5, 0.25}) {
            const LayerShape s{{1, 2, 1}, {2, 1}};
            std::vector<std::vector<double>> phi(2);
            phi[0].assign(2 * static_cast<std::size_t>(d), 0.0);
            phi[1].assign(2 * static_cast<std::size_t>(d), 0.0);
            for (int p = 0; p < 2; ++p) {
                phi[0][static_cast<std::size_t>(p) * d + (p % d)] = 1.0;
                phi[1][static_cast<std::size_t>(p) * d] = 1.0 / std::sqrt(2.0);
                if (d == 2) phi[1][static_cast<std::size_t>(p) * d + 1] = (p ? 1.0 : -1.0) / std::sqrt(2.0);
            }
            const LinearClassSpec spec{LinearFeatureMap(d, s, phi), {B, B}, {B, B}};
            const auto c = linear_cover(spec, eps);
            Rng rng(9000 + d * 10 + static_cast<int>(eps * 4));
            std::vector<std::vector<std::vector<double>>> probes(2);
            for (int h = 0; h < 2; ++h)
                for (int k = 0; k < 500; ++k) {
                    std::vector<double> th(d);
                    double nrm = 0.0;
                    for (double& v : th) {
                        v = B * (2.0 * rng.uniform() - 1.0);
                        nrm += v * v;
                    }
                    if (nrm > B * B)
                        for (double& v : th) v *= B / std::sqrt(nrm);
                    probes[h].push_back(th);
                }
            const auto cert = verify_linear_cover(spec, c, probes);
            const double bound = std::pow(2.0 * H * H * std::sqrt(static_cast<double>(d)) / eps, d);
            std::size_t largest = 0;
            for (int h = 0; h < H; ++h) largest = std::max(largest, c.members.level_size(h));
            const bool this_ok = cert.holds() && static_cast<double>(largest) <= bound &&
                                 std::abs(cert.eps - eps) <= 1e-12;
            ok = ok && this_ok;
            detail += (detail.empty() ? "" : "; ") + std::string("d=") + std::to_string(d) + " eps=" +
                      fmt("%.2f", eps) + ": " + std::to_string(largest) + " <= " + fmt("%.0f", bound) +
                      (cert.holds() ? "" : " (certificate failed)");
        }
    return {ok, "per-level grid sizes, B = H = 2: " + detail};
}

// ---- 10 ----
Outcome determinism() {
    namespace fs = std::filesystem;
    const auto root = fs::temp_directory_path() / "rfolive_acceptance_sweep";
    fs::remove_all(root);
    harness::ExperimentConfig cfg;
    cfg.fixture = "random_closed:7";
    cfg.eps = 0.2;
    cfg.variant = Variant::v;
    const std::vector<std::uint64_t> seeds{1, 2, 3, 4};
    std::map<std::string, std::string> first;
    bool ok = true;
    int files = 0;
    for (int pass = 0; pass < 2; ++pass) {
        cfg.out_dir = root / ("run" + std::to_string(pass));
        const auto codes = harness::sweep(cfg, seeds);
        for (int c : codes) ok = ok && c == 0;
        for (const auto& e : fs::recursive_directory_iterator(cfg.out_dir)) {
            if (!e.is_regular_file()) continue;
            const auto rel = fs::relative(e.path(), cfg.out_dir).string();
            const auto body = io::read_file(e.path());
            if (pass == 0) {
                first[rel] = body;
                ++files;
            } else {
                ok = ok && first.count(rel) && first[rel] == body;
            }
        }
    }
    fs::remove_all(root);
    return {ok && files > 0, std::to_string(files) + " files compared across two sweeps of 4 seeds"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"oracle equivalence", oracle_equivalence},
        {"estimator concentration", estimator_concentration},
        {"surrogate identity", surrogate_identity},
        {"end-to-end correctness", end_to_end},
        {"counterexample regimes", counterexample},
        {"JointOlive failure", jointolive},
        {"dimension separation", dimension_separation},
        {"hardness family", hardness_family},
        {"cover bounds", cover_bounds},
        {"determinism", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("[%s] %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
