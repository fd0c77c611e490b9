#pragma once

// Monte-Carlo tree search over exchange histories: root sampling of the
// hidden partner state, SoftUCT inside the tree, epsilon-greedy rollouts at
// the leaves and constant-strategy pre-search.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <optional>
#include <unordered_map>

#include "trust/hierarchy.hpp"
#include "trust/random.hpp"

namespace trust {

struct PlannerConfig {
    /// Simulations for the first round; later rounds get n(10-t)/10.
    int simulations = 25000;
    double exploration = 25.0;
    double rollout_epsilon = 0.1;
    /// Nested partner searches run with this fraction of the round budget.
    double nested_budget_fraction = 0.1;
    /// Share of the round budget spent on constant strategies before SoftUCT.
    double presearch_fraction = 0.1;
    std::uint64_t seed = 0;

    void validate() const
    {
        if (simulations < 1)
            throw ConfigError("simulation budget must be at least 1");
        if (!(exploration >= 0.0))
            throw ConfigError("exploration constant must be nonnegative");
        if (!(rollout_epsilon >= 0.0 && rollout_epsilon <= 1.0))
            throw ConfigError("rollout epsilon must lie in [0,1]");
        if (!(nested_budget_fraction > 0.0 && nested_budget_fraction <= 1.0))
            throw ConfigError("nested budget fraction must lie in (0,1]");
        if (!(presearch_fraction >= 0.0 && presearch_fraction <= 1.0))
            throw ConfigError("pre-search fraction must lie in [0,1]");
    }

    int round_budget(int round) const
    {
        const long long b = static_cast<long long>(simulations) * (kRounds - round) / kRounds;
        return static_cast<int>(std::max<long long>(1, b));
    }

    int nested_budget(int round) const
    {
        return std::max(1, static_cast<int>(std::lround(nested_budget_fraction * round_budget(round))));
    }

    int presearch_per_strategy(int budget) const
    {
        if (presearch_fraction <= 0.0)
            return 0;
        const int total = static_cast<int>(std::lround(presearch_fraction * budget));
        return std::max(1, total / kCategories);
    }

    friend bool operator==(const PlannerConfig&, const PlannerConfig&) = default;
};

/// Per-history statistics T(h): N(h), N(h,a) and the running means Q~(a,h).
struct NodeStats {
    int visits = 0;
    std::array<int, kCategories> counts{};
    std::array<double, kCategories> values{};

    void backup(int action, double ret)
    {
        ++visits;
        ++counts[action];
        values[action] += (ret - values[action]) / counts[action];
    }
};

/**
 * SoftUCT selection distribution. Untried actions carry an infinite bonus and
 * share the mass uniformly; otherwise softmax over Q~ + c sqrt(log N / N(a)).
 */
inline PolicyDistribution soft_uct_distribution(const NodeStats& node, int count, double beta, double c)
{
    int untried = 0;
    for (int a = 0; a < count; ++a)
        untried += node.counts[a] == 0;
    if (untried > 0) {
        PolicyDistribution p;
        p.count = count;
        for (int a = 0; a < count; ++a)
            p.values[a] = node.counts[a] == 0 ? 1.0 / untried : 0.0;
        return p;
    }
    QValues augmented;
    augmented.count = count;
    const double log_n = std::log(static_cast<double>(node.visits));
    for (int a = 0; a < count; ++a)
        augmented[a] = node.values[a] + c * std::sqrt(log_n / node.counts[a]);
    return softmax_policy(augmented, beta);
}

inline int soft_uct_select(const NodeStats& node, int count, double beta, double c, Rng& rng)
{
    return soft_uct_distribution(node, count, beta, c).sample(rng);
}

class SearchTree {
public:
    NodeStats* find(const History& h)
    {
        auto it = nodes_.find(h.key());
        return it == nodes_.end() ? nullptr : &it->second;
    }
    const NodeStats* find(const History& h) const
    {
        auto it = nodes_.find(h.key());
        return it == nodes_.end() ? nullptr : &it->second;
    }
    /// Returns the node and whether it was created by this call.
    std::pair<NodeStats*, bool> expand(const History& h)
    {
        auto [it, inserted] = nodes_.try_emplace(h.key());
        return {&it->second, inserted};
    }
    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

private:
    std::unordered_map<std::uint64_t, NodeStats> nodes_;
};

struct Transition {
    History next;
    double reward = 0.0;
};

/**
 * What the planner needs from a decision problem. `Sample` is the hidden
 * part of the interactive state drawn at the root and held fixed for one
 * simulation; `step` is the generative model used inside the tree and
 * `rollout_step` the cheap one used past the leaves.
 */
template <class W>
concept SearchWorld = requires(W& w, const typename W::Sample& s, const History& h, int a, int k, Rng& rng) {
    { w.sample_root(rng) } -> std::same_as<typename W::Sample>;
    { w.action_count(h) } -> std::convertible_to<int>;
    { w.alive(k) } -> std::convertible_to<bool>;
    { w.step(s, h, a, k, rng) } -> std::same_as<Transition>;
    { w.rollout_action(h, rng) } -> std::convertible_to<int>;
    { w.rollout_step(s, h, a, k, rng) } -> std::same_as<Transition>;
};

struct SearchSettings {
    int budget = 1;
    int presearch_per_strategy = 0;
    double beta = kDefaultBeta;
    double exploration = 25.0;
    std::uint64_t seed = 0;
};

struct SearchResult {
    QValues q;
    PolicyDistribution policy;
    std::array<int, kCategories> root_counts{};
    int root_visits = 0;
    int simulations = 0;
    int presearch_simulations = 0;
    std::size_t tree_size = 0;
};

struct NullSearchObserver {
    void on_backup(const History&, int /*action*/, double /*ret*/, const NodeStats&) {}
    void on_rollout(const History&) {}
};

template <SearchWorld World, class Observer = NullSearchObserver>
class Pomcp {
public:
    explicit Pomcp(World& world, Observer observer = {}) : world_(world), observer_(std::move(observer)) {}

    SearchResult search(const History& root, const SearchSettings& settings)
    {
        if (settings.budget < 1)
            throw ConfigError("search needs a budget of at least one simulation");
        settings_ = settings;
        rng_.seed(settings.seed);
        tree_.clear();
        tree_.expand(root);

        const int count = world_.action_count(root);
        SearchResult out;
        for (int strategy = 0; strategy < kCategories && settings.presearch_per_strategy > 0; ++strategy)
            for (int i = 0; i < settings.presearch_per_strategy; ++i) {
                const auto sample = world_.sample_root(rng_);
                simulate(sample, root, 0, strategy);
                ++out.presearch_simulations;
            }
        for (int i = 0; i < settings.budget; ++i) {
            const auto sample = world_.sample_root(rng_);
            simulate(sample, root, 0, std::nullopt);
            ++out.simulations;
        }

        const NodeStats& node = *tree_.find(root);
        out.q.count = count;
        for (int a = 0; a < count; ++a)
            out.q[a] = node.values[a];
        out.policy = softmax_policy(out.q, settings.beta);
        out.root_counts = node.counts;
        out.root_visits = node.visits;
        out.tree_size = tree_.size();
        return out;
    }

    const SearchTree& tree() const { return tree_; }
    Observer& observer() { return observer_; }

    /// One SIMULATE call from `h`, `steps` exchanges below the root.
    double simulate(const typename World::Sample& sample, const History& h, int steps, std::optional<int> clamp)
    {
        if (!world_.alive(steps))
            return 0.0;
        auto [node, created] = tree_.expand(h);
        if (created) {
            observer_.on_rollout(h);
            return rollout(sample, h, steps, clamp);
        }
        const int count = world_.action_count(h);
        const int action = clamp ? clamp_action(*clamp, count)
                                 : soft_uct_select(*node, count, settings_.beta, settings_.exploration, rng_);
        const Transition t = world_.step(sample, h, action, steps, rng_);
        const double ret = t.reward + simulate(sample, t.next, steps + 1, clamp);
        node->backup(action, ret);
        observer_.on_backup(h, action, ret, *node);
        return ret;
    }

    double rollout(const typename World::Sample& sample, History h, int steps, std::optional<int> clamp)
    {
        double total = 0.0;
        while (world_.alive(steps)) {
            const int count = world_.action_count(h);
            const int action = clamp ? clamp_action(*clamp, count) : world_.rollout_action(h, rng_);
            Transition t = world_.rollout_step(sample, h, action, steps, rng_);
            total += t.reward;
            h = t.next;
            ++steps;
        }
        return total;
    }

private:
    static int clamp_action(int strategy, int count) { return strategy < count ? strategy : 0; }

    World& world_;
    Observer observer_;
    SearchSettings settings_;
    SearchTree tree_;
    Rng rng_;
};

/// Epsilon-greedy choice over a fixed value vector.
inline int epsilon_greedy(const QValues& values, double epsilon, Rng& rng)
{
    if (epsilon > 0.0 && uniform01(rng) < epsilon)
        return uniform_index(rng, values.count);
    return values.argmax();
}

} // namespace trust
