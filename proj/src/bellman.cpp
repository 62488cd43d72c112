#include "rfolive/bellman.hpp"

#include "rfolive/errors.hpp"

namespace rfolive {

std::vector<double> level_values(const LayerShape& shape, const ValueFunction& f, int h) {
    if (h >= shape.horizon()) return std::vector<double>(shape.states.at(h), 0.0);
    return state_values(shape, h, f.levels.at(h));
}

double exact_avg_bellman_error(const LayeredMdp& mdp, const BellmanErrorQuery& q) {
    if (!q.f || !q.roll_in) throw InvalidInput("query needs a function and a roll-in policy");
    const auto& shape = mdp.shape();
    const int h = q.h;
    if (h < 0 || h >= mdp.horizon()) throw InvalidInput("query level out of range");

    DeterministicPolicy chosen;
    ActionSelector sel = ActionSelector::uniform();
    switch (q.source) {
    case ActionSource::roll_in:
        sel = ActionSelector::of(*q.roll_in);
        break;
    case ActionSource::greedy:
        chosen = greedy_policy(shape, *q.f, q.tie);
        sel = ActionSelector::of(chosen);
        break;
    case ActionSource::uniform:
        break;
    case ActionSource::fixed:
        if (!q.fixed) throw InvalidInput("fixed action source needs a policy");
        sel = ActionSelector::of(*q.fixed);
        break;
    }

    const auto d = switched_occupancy(mdp, *q.roll_in, h, sel);
    const auto v = level_values(shape, *q.f, h + 1);
    const auto& fh = q.f->levels.at(h);
    double total = 0.0;
    for (int x = 0; x < mdp.num_states(h); ++x)
        for (int a = 0; a < mdp.num_actions(h); ++a) {
            const std::size_t i = shape.pair_index(h, x, a);
            if (d.weights[i] == 0.0) continue;
            double next = 0.0;
            auto p = mdp.next_distribution(h, x, a);
            for (std::size_t y = 0; y < p.size(); ++y) next += p[y] * v[y];
            const double r = q.reward ? (*q.reward)(h, x, a) : 0.0;
            total += d.weights[i] * (fh[i] - r - next);
        }
    return total;
}

double exact_q_error(const LayeredMdp& mdp, const ValueFunction& f, const RewardTable* reward,
                     const DeterministicPolicy& roll_in, int h) {
    BellmanErrorQuery q;
    q.f = &f;
    q.reward = reward;
    q.roll_in = &roll_in;
    q.h = h;
    return exact_avg_bellman_error(mdp, q);
}

double exact_v_error(const LayeredMdp& mdp, const ValueFunction& f, const RewardTable* reward,
                     const DeterministicPolicy& roll_in, int h, const TieBreak& tie) {
    BellmanErrorQuery q;
    q.f = &f;
    q.reward = reward;
    q.roll_in = &roll_in;
    q.source = ActionSource::greedy;
    q.h = h;
    q.tie = tie;
    return exact_avg_bellman_error(mdp, q);
}

double est_onpolicy(const LayerShape& shape, std::span<const Trajectory> trajectories, const ValueFunction& f,
                    int h) {
    if (trajectories.empty()) throw InvalidInput("no trajectories to estimate from");
    const auto v = level_values(shape, f, h + 1);
    const auto& fh = f.levels.at(h);
    double sum = 0.0;
    for (const auto& t : trajectories) sum += fh[shape.pair_index(h, t.states[h], t.actions[h])] - v[t.states[h + 1]];
    return sum / static_cast<double>(trajectories.size());
}

namespace {

int common_level(std::span<const TransitionTuple> data) {
    if (data.empty()) throw InvalidInput("empty dataset");
    const int h = data.front().h;
    for (const auto& t : data)
        if (t.h != h) throw InvalidInput("dataset mixes levels");
    return h;
}

}  // namespace

double est_q(const LayerShape& shape, std::span<const TransitionTuple> data, const ValueFunction& f) {
    const int h = common_level(data);
    const auto v = level_values(shape, f, h + 1);
    const auto& fh = f.levels.at(h);
    double sum = 0.0;
    for (const auto& t : data) sum += fh[shape.pair_index(h, t.x, t.a)] - v[t.x_next];
    return sum / static_cast<double>(data.size());
}

double est_q_reward(const LayerShape& shape, std::span<const TransitionTuple> data, const ValueFunction& g,
                    const RewardTable* reward) {
    const int h = common_level(data);
    const auto v = level_values(shape, g, h + 1);
    const auto& gh = g.levels.at(h);
    double sum = 0.0;
    for (const auto& t : data) {
        const double r = reward ? (*reward)(h, t.x, t.a) : t.r;
        sum += gh[shape.pair_index(h, t.x, t.a)] - r - v[t.x_next];
    }
    return sum / static_cast<double>(data.size());
}

double est_v_is(const LayerShape& shape, std::span<const TransitionTuple> data, const ValueFunction& g,
                const RewardTable* reward, const DeterministicPolicy& witness) {
    const int h = common_level(data);
    const auto v = level_values(shape, g, h + 1);
    const auto& gh = g.levels.at(h);
    const double K = shape.actions.at(h);
    double sum = 0.0;
    for (const auto& t : data) {
        if (t.a != witness(h, t.x)) continue;
        const double r = reward ? (*reward)(h, t.x, t.a) : t.r;
        sum += K * (gh[shape.pair_index(h, t.x, t.a)] - r - v[t.x_next]);
    }
    return sum / static_cast<double>(data.size());
}

ValueFunction surrogate_zero_reward(const LayeredMdp& mdp, const ValueFunction& g, const RewardTable& reward,
                                    int h, bool negate) {
    const int H = mdp.horizon();
    if (h < 0 || h >= H) throw InvalidInput("surrogate level out of range");
    ValueFunction out = ValueFunction::zero(mdp.shape());
    LevelTable next = h + 1 < H ? g.levels.at(h + 1) : LevelTable{};
    LevelTable backed = bellman_backup(mdp, nullptr, next, h);
    const auto& gh = g.levels.at(h);
    const auto& rh = reward.level(h);
    const double sign = negate ? -1.0 : 1.0;
    for (std::size_t i = 0; i < backed.size(); ++i) out.levels[h][i] = sign * ((gh[i] - rh[i]) - backed[i]);
    for (int l = h - 1; l >= 0; --l) out.levels[l] = bellman_backup(mdp, nullptr, out.levels[l + 1], l);
    return out;
}

LossDecomposition policy_loss_decomposition(const LayeredMdp& mdp, const RewardTable& reward,
                                            const ValueFunction& f, const TieBreak& tie) {
    LossDecomposition out;
    const auto pi = greedy_policy(mdp.shape(), f, tie);
    double sum = 0.0;
    for (int h = 0; h < mdp.horizon(); ++h) {
        out.errors.push_back(exact_q_error(mdp, f, &reward, pi, h));
        sum += out.errors.back();
    }
    out.start_value = level_values(mdp.shape(), f, 0)[mdp.start()];
    out.policy_value = policy_value(mdp, pi, reward);
    out.residual = out.start_value - out.policy_value - sum;
    return out;
}

}  // namespace rfolive
