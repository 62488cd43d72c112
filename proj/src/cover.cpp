#include <algorithm>
#include <cmath>

#include "rfolive/errors.hpp"
#include "rfolive/funclass.hpp"

namespace rfolive {

bool CoverCertificate::holds() const {
    for (const auto& row : distance)
        for (double d : row)
            if (d > eps) return false;
    return true;
}

namespace {

struct GreedyCover {
    std::vector<std::size_t> centers;
    std::vector<std::size_t> nearest;  // position in `centers`
    std::vector<double> distance;
};

template <class Dist>
GreedyCover greedy_cover(std::size_t n, double eps, Dist&& dist) {
    GreedyCover g;
    for (std::size_t i = 0; i < n; ++i) {
        bool covered = std::any_of(g.centers.begin(), g.centers.end(),
                                   [&](std::size_t c) { return dist(c, i) <= eps; });
        if (!covered) g.centers.push_back(i);
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        double best_d = dist(g.centers[0], i);
        for (std::size_t c = 1; c < g.centers.size(); ++c) {
            double d = dist(g.centers[c], i);
            if (d < best_d) best_d = d, best = c;
        }
        g.nearest.push_back(best);
        g.distance.push_back(best_d);
    }
    return g;
}

}  // namespace

Cover cover(const FunctionClass& f, double eps) {
    if (eps < 0.0) throw InvalidInput("cover radius must be nonnegative");
    const int H = f.horizon();
    CoverCertificate cert;
    cert.eps = eps;
    if (f.is_product()) {
        std::vector<std::vector<LevelTable>> levels(H);
        std::vector<std::vector<std::string>> labels(H);
        for (int h = 0; h < H; ++h) {
            auto g = greedy_cover(f.level_size(h), eps, [&](std::size_t a, std::size_t b) {
                return sup_distance(f.level_table(h, a), f.level_table(h, b));
            });
            for (std::size_t c : g.centers) {
                levels[h].push_back(f.level_table(h, c));
                labels[h].push_back(f.level_label(h, c));
            }
            cert.nearest.push_back(std::move(g.nearest));
            cert.distance.push_back(std::move(g.distance));
        }
        return Cover{FunctionClass::product(f.shape(), std::move(levels), f.bounds(), std::move(labels),
                                            ZeroMember::as_given),
                     std::move(cert)};
    }
    auto members = f.enumerate();
    auto g = greedy_cover(members.size(), eps,
                          [&](std::size_t a, std::size_t b) { return sup_distance(members[a], members[b]); });
    std::vector<ValueFunction> kept;
    std::vector<std::string> labels;
    for (std::size_t c : g.centers) {
        kept.push_back(members[c]);
        labels.push_back(f.label(c));
    }
    cert.nearest.push_back(std::move(g.nearest));
    cert.distance.push_back(std::move(g.distance));
    return Cover{FunctionClass::joint(f.shape(), std::move(kept), f.bounds(), std::move(labels)), std::move(cert)};
}

// ---- linear classes ----

LinearFeatureMap::LinearFeatureMap(int d, LayerShape s, std::vector<std::vector<double>> p)
    : dim(d), shape(std::move(s)), phi(std::move(p)) {
    if (dim < 1) throw InvalidInput("feature dimension must be positive");
    if (phi.size() != static_cast<std::size_t>(shape.horizon()))
        throw InvalidInput("feature map needs one table per level");
    for (int h = 0; h < shape.horizon(); ++h) {
        if (phi[h].size() != static_cast<std::size_t>(shape.pairs(h)) * dim)
            throw InvalidInput("feature table at level " + std::to_string(h) + " has wrong size");
        for (int i = 0; i < shape.pairs(h); ++i) {
            double sq = 0.0;
            for (double v : at(h, i)) sq += v * v;
            if (std::sqrt(sq) > 1.0 + 1e-12)
                throw InvalidInput("feature norm exceeds 1 at level " + std::to_string(h));
        }
    }
}

LevelTable LinearFeatureMap::evaluate(int h, std::span<const double> theta) const {
    LevelTable out(shape.pairs(h));
    for (int i = 0; i < shape.pairs(h); ++i) {
        auto p = at(h, i);
        double s = 0.0;
        for (int k = 0; k < dim; ++k) s += p[k] * theta[k];
        out[i] = s;
    }
    return out;
}

namespace {

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

bool in_linear_class(const LinearClassSpec& spec, int h, std::span<const double> theta, const LevelTable& values) {
    const double radius = spec.norm_bounds[h] * std::sqrt(static_cast<double>(spec.features.dim));
    return norm2(theta) <= radius + 1e-12 && sup_norm(values) <= spec.value_bounds[h] + 1e-12;
}

}  // namespace

LinearCover linear_cover(const LinearClassSpec& spec, double eps) {
    if (eps < 0.0) throw InvalidInput("cover radius must be nonnegative");
    if (eps == 0.0) throw UnsupportedRequest("an exact cover of a linear ball is infinite; pass eps > 0");
    const auto& phi = spec.features;
    const int H = phi.shape.horizon();
    const int d = phi.dim;
    if (spec.norm_bounds.size() != static_cast<std::size_t>(H) || spec.value_bounds.size() != static_cast<std::size_t>(H))
        throw InvalidInput("linear class needs one norm bound and one value bound per level");

    const double pitch = eps / std::sqrt(static_cast<double>(d));
    std::vector<std::vector<LevelTable>> levels(H);
    std::vector<std::vector<std::string>> labels(H);
    std::vector<std::vector<std::vector<double>>> thetas(H);
    for (int h = 0; h < H; ++h) {
        // coordinates of the ball lie in [-B, B]; rounding toward zero stays on the grid
        const long m = static_cast<long>(std::floor(spec.norm_bounds[h] / pitch + 1e-9));
        const double side = 2.0 * m + 1.0;
        if (std::pow(side, d) > 5e6) throw UnsupportedRequest("linear cover grid too large");
        std::vector<long> k(d, -m);
        for (;;) {
            std::vector<double> theta(d);
            for (int i = 0; i < d; ++i) theta[i] = static_cast<double>(k[i]) * pitch;
            LevelTable values = phi.evaluate(h, theta);
            if (in_linear_class(spec, h, theta, values)) {
                levels[h].push_back(std::move(values));
                labels[h].push_back("theta" + std::to_string(thetas[h].size()) + "," + std::to_string(h));
                thetas[h].push_back(std::move(theta));
            }
            int i = 0;
            while (i < d && k[i] == m) k[i++] = -m;
            if (i == d) break;
            ++k[i];
        }
    }
    return LinearCover{FunctionClass::product(phi.shape, std::move(levels), spec.value_bounds, std::move(labels),
                                              ZeroMember::as_given),
                       pitch, std::move(thetas)};
}

CoverCertificate verify_linear_cover(const LinearClassSpec& spec, const LinearCover& cover,
                                     const std::vector<std::vector<std::vector<double>>>& probes) {
    CoverCertificate cert;
    cert.eps = cover.pitch * std::sqrt(static_cast<double>(spec.features.dim));
    const int H = spec.features.shape.horizon();
    cert.nearest.resize(H);
    cert.distance.resize(H);
    for (int h = 0; h < H; ++h)
        for (const auto& theta : probes.at(h)) {
            LevelTable values = spec.features.evaluate(h, theta);
            if (!in_linear_class(spec, h, theta, values)) continue;
            std::size_t best = 0;
            double best_d = sup_distance(cover.members.level_table(h, 0), values);
            for (std::size_t c = 1; c < cover.members.level_size(h); ++c) {
                double dd = sup_distance(cover.members.level_table(h, c), values);
                if (dd < best_d) best_d = dd, best = c;
            }
            cert.nearest[h].push_back(best);
            cert.distance[h].push_back(best_d);
        }
    return cert;
}

double linear_cover_size_bound(int horizon, int dim, double eps) {
    const double H = horizon;
    return std::pow(2.0 * H * H * std::sqrt(static_cast<double>(dim)) / eps, dim);
}

}  // namespace rfolive
