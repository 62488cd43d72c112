#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "rfolive/errors.hpp"
#include "rfolive/funclass.hpp"

namespace rfolive {

RealizabilityReport check_realizability(const LayeredMdp& mdp, const FunctionClass& f,
                                        std::span<const RewardTable> rewards, double tol) {
    RealizabilityReport report;
    report.tol = tol;
    const int H = mdp.horizon();
    for (std::size_t r = 0; r < rewards.size(); ++r) {
        auto opt = optimal_q(mdp, rewards[r]);
        std::vector<LevelTable> target(H);
        for (int h = 0; h < H; ++h) {
            target[h] = opt.q[h];
            const auto& rh = rewards[r].level(h);
            for (std::size_t i = 0; i < target[h].size(); ++i) target[h][i] -= rh[i];
        }
        if (f.is_product()) {
            for (int h = 0; h < H; ++h) {
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t k = 0; k < f.level_size(h); ++k)
                    best = std::min(best, sup_distance(f.level_table(h, k), target[h]));
                report.entries.push_back({r, h, best});
                if (best > tol) report.pass = false;
            }
        } else {
            // No product structure: the whole function has to match at once.
            double best = std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t id = 0; id < f.size(); ++id) {
                double d = 0.0;
                for (int h = 0; h < H; ++h) d = std::max(d, sup_distance(f.table(id, h), target[h]));
                if (d < best) best = d, arg = id;
            }
            for (int h = 0; h < H; ++h)
                report.entries.push_back({r, h, sup_distance(f.table(arg, h), target[h])});
            if (best > tol) report.pass = false;
        }
    }
    return report;
}

namespace {

double distance_to(const std::vector<LevelTable>& set, std::span<const double> t) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : set) best = std::min(best, sup_distance(s, t));
    return best;
}

}  // namespace

CompletenessReport check_completeness(const LayeredMdp& mdp, const FunctionClass& f,
                                      std::span<const RewardTable> rewards, double tol) {
    if (!f.is_product()) throw UnsupportedRequest("completeness is defined for product classes");
    CompletenessReport report;
    report.tol = tol;
    const int H = mdp.horizon();
    auto record = [&](ClosureKind kind, int h, std::string source, double d) {
        ++report.checked;
        if (d <= tol) return;
        report.pass = false;
        report.violations.push_back({kind, h, std::move(source), d});
    };

    for (int h = 0; h + 1 < H; ++h) {
        std::vector<LevelTable> level;
        for (std::size_t k = 0; k < f.level_size(h); ++k) level.push_back(f.level_table(h, k));
        std::vector<LevelTable> diffs;
        for (const auto& a : level)
            for (const auto& b : level) {
                LevelTable d(a.size());
                for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
                diffs.push_back(std::move(d));
            }

        const std::size_t n = f.level_size(h + 1);
        for (std::size_t k = 0; k < n; ++k) {
            const auto& next = f.level_table(h + 1, k);
            const auto& name = f.level_label(h + 1, k);
            auto b = bellman_backup(mdp, nullptr, next, h);
            record(ClosureKind::backup, h, name, distance_to(level, b));

            for (std::size_t r = 0; r < rewards.size(); ++r) {
                LevelTable shifted = next;
                const auto& rh = rewards[r].level(h + 1);
                for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += rh[i];
                auto br = bellman_backup(mdp, nullptr, shifted, h);
                record(ClosureKind::reward_backup, h, name + " + reward " + std::to_string(r), distance_to(level, br));
            }

            for (std::size_t j = 0; j < n; ++j) {
                const auto& other = f.level_table(h + 1, j);
                LevelTable d(next.size());
                for (std::size_t i = 0; i < d.size(); ++i) d[i] = next[i] - other[i];
                auto bd = bellman_backup(mdp, nullptr, d, h);
                record(ClosureKind::difference_backup, h, name + " - " + f.level_label(h + 1, j),
                       distance_to(diffs, bd));
            }
        }
    }
    return report;
}

std::vector<std::vector<double>> completeness_probes(const LinearFeatureMap& phi, int h, double bound,
                                                     int random_draws, Rng& rng) {
    const int d = phi.dim;
    const double radius = bound * std::sqrt(static_cast<double>(d));
    auto fit = [&](std::vector<double> theta) {
        double n = 0.0;
        for (double v : theta) n += v * v;
        n = std::sqrt(n);
        double scale = n > 0.0 ? radius / n : 0.0;
        double peak = sup_norm(phi.evaluate(h, theta));
        if (peak > 0.0) scale = std::min(scale, bound / peak);
        for (double& v : theta) v *= scale;
        return theta;
    };
    std::vector<std::vector<double>> probes;
    for (int i = 0; i < d; ++i)
        for (double s : {1.0, -1.0}) {
            std::vector<double> e(d, 0.0);
            e[i] = s;
            probes.push_back(fit(std::move(e)));
        }
    for (int k = 0; k < random_draws; ++k) {
        std::vector<double> dir(d);
        for (double& v : dir) v = 2.0 * rng.uniform() - 1.0;
        auto theta = fit(std::move(dir));
        const double shrink = rng.uniform();
        for (double& v : theta) v *= shrink;
        probes.push_back(std::move(theta));
    }
    return probes;
}

LinearCompletenessReport check_linear_completeness(const LayeredMdp& mdp, const LinearFeatureMap& phi,
                                                   const std::vector<std::vector<std::vector<double>>>& probes,
                                                   double bound, double tol) {
    if (phi.shape != mdp.shape()) throw InvalidInput("feature map shape does not match the MDP");
    LinearCompletenessReport report;
    const int d = phi.dim;
    report.norm_limit = bound * std::sqrt(static_cast<double>(d));
    for (int h = 0; h + 1 < mdp.horizon(); ++h) {
        const int n = mdp.num_pairs(h);
        Eigen::MatrixXd A(n, d);
        for (int i = 0; i < n; ++i) {
            auto p = phi.at(h, i);
            for (int k = 0; k < d; ++k) A(i, k) = p[k];
        }
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
        const auto& level_probes = probes.at(h + 1);
        for (std::size_t p = 0; p < level_probes.size(); ++p) {
            auto target = bellman_backup(mdp, nullptr, phi.evaluate(h + 1, level_probes[p]), h);
            Eigen::Map<const Eigen::VectorXd> y(target.data(), n);
            Eigen::VectorXd theta = cod.solve(y);
            double residual = (A * theta - y).cwiseAbs().maxCoeff();
            double norm = theta.norm();
            report.entries.push_back({h, p, residual, norm});
            report.max_residual = std::max(report.max_residual, residual);
            report.max_norm = std::max(report.max_norm, norm);
            if (residual > tol || norm > report.norm_limit + tol) report.pass = false;
        }
    }
    return report;
}

}  // namespace rfolive
