#pragma once

// Dispatch across the hierarchy: exact solvers at the bottom, tree search
// above, nested partner searches memoized per (partner, history).

#include <bit>
#include <map>
#include <memory>
#include <optional>
#include <unordered_map>

#include "trust/beliefs.hpp"
#include "trust/hierarchy.hpp"
#include "trust/planner.hpp"
#include "trust/random.hpp"

namespace trust {

struct Decision {
    QValues q;
    PolicyDistribution policy;
    DirMultBelief belief;
    int simulations = 0; ///< 0 when the values came from an exact solver
    bool exact = true;
};

namespace detail {

enum SeedTag : std::uint64_t { kTagDecide = 0x64656369, kTagNested = 0x6e657374 };

inline std::uint64_t spec_code(const AgentSpec& s)
{
    return static_cast<std::uint64_t>(s.role == Role::investor ? 0 : 1) |
           static_cast<std::uint64_t>(s.tom + 1) << 1 | static_cast<std::uint64_t>(s.guilt.index()) << 4 |
           static_cast<std::uint64_t>(s.planning) << 6;
}

struct MemoKey {
    std::uint64_t spec;
    std::uint64_t history;
    std::uint64_t beta;
    friend bool operator==(const MemoKey&, const MemoKey&) = default;
};

struct MemoKeyHash {
    std::size_t operator()(const MemoKey& k) const
    {
        return static_cast<std::size_t>(splitmix64(k.spec ^ splitmix64(k.history ^ splitmix64(k.beta))));
    }
};

inline MemoKey memo_key(const AgentSpec& s, const History& h)
{
    return {spec_code(s), h.key(), std::bit_cast<std::uint64_t>(s.beta)};
}

} // namespace detail

/**
 * Exact level 0 / level 1 investor solvers, one per (level, beta). Their
 * tables depend on nothing else, so engines with different planner settings
 * may share one bank, provided they are not used concurrently.
 */
class SolverBank {
public:
    RecombiningInvestorSolver& get(int tom, double beta)
    {
        auto& slot = solvers_[{tom, std::bit_cast<std::uint64_t>(beta)}];
        if (!slot) {
            const TrusteeResponseModel responses =
                tom == 0 ? level_minus1_trustee_responses(beta) : level0_trustee_responses(beta);
            slot = std::make_unique<RecombiningInvestorSolver>(responses, beta);
        }
        return *slot;
    }

private:
    std::map<std::pair<int, std::uint64_t>, std::unique_ptr<RecombiningInvestorSolver>> solvers_;
};

/**
 * Computes decisions and partner policies for any agent of the hierarchy.
 *
 * Not thread-safe: run one engine per worker. Every cached value is a pure
 * function of its key and the engine configuration, so workers holding
 * separate engines produce identical results regardless of scheduling.
 */
class PolicyEngine {
public:
    explicit PolicyEngine(PlannerConfig config = {}, std::shared_ptr<SolverBank> solvers = nullptr)
        : config_(config), solvers_(solvers ? std::move(solvers) : std::make_shared<SolverBank>())
    {
        config_.validate();
    }

    const PlannerConfig& config() const { return config_; }

    /// Default per-call seed: a function of the engine seed, the agent and the history only.
    std::uint64_t decision_seed(const AgentSpec& agent, const History& h) const
    {
        return derive_seed(config_.seed, {detail::kTagDecide, detail::spec_code(agent), h.key()});
    }

    /**
     * The agent's action values and softmax policy at `h`. Tree search runs
     * with `budget` simulations (default: the round's scheduled budget).
     */
    Decision decide(const AgentSpec& agent, const History& h, std::optional<int> budget = std::nullopt,
                    std::optional<std::uint64_t> seed = std::nullopt)
    {
        check_turn(agent, h);
        const int round = h.rounds();
        Decision d;
        d.belief = belief(agent, h);

        if (agent.role == Role::trustee && h.pending().sends_nothing()) {
            d.q.count = 1;
            d.policy = PolicyDistribution::degenerate();
            return d;
        }
        if (agent.tom <= 0 || (agent.role == Role::investor && agent.tom == 1)) {
            if (agent.role == Role::investor) {
                d.q = agent.tom < 0 ? level_minus1_investor_utilities(agent.guilt, agent.beta)
                                    : solver(agent.tom, agent.beta).qvalues(agent.guilt, h, agent.planning);
            } else {
                d.q = immediate_trustee_utilities(agent.guilt, h.pending());
            }
            d.policy = softmax_policy(d.q, agent.beta);
            return d;
        }
        if (agent.role == Role::trustee && agent.tom > 1)
            throw ConfigError("trustees above level 1 are not supported");
        if (agent.role == Role::investor && agent.tom > 2)
            throw ConfigError("investors above level 2 are not supported");

        if (last_planned_round(round, agent.planning) == round) {
            // Nothing beyond this exchange survives: the expectation is exact.
            d.q = agent.role == Role::trustee ? immediate_trustee_utilities(agent.guilt, h.pending())
                                              : immediate_investor_values(agent, h, d.belief);
            d.policy = softmax_policy(d.q, agent.beta);
            return d;
        }

        const int n = budget.value_or(config_.round_budget(round));
        if (n < 1)
            throw ConfigError("a level " + std::to_string(agent.tom) + " agent needs a positive search budget");
        SearchSettings settings;
        settings.budget = n;
        settings.presearch_per_strategy = config_.presearch_per_strategy(n);
        settings.beta = agent.beta;
        settings.exploration = config_.exploration;
        settings.seed = seed.value_or(decision_seed(agent, h));

        SearchResult r = agent.role == Role::investor ? run_search<InvestorWorld>(agent, h, d.belief, settings)
                                                      : run_search<TrusteeWorld>(agent, h, d.belief, settings);
        d.q = r.q;
        d.policy = r.policy;
        d.simulations = r.simulations + r.presearch_simulations;
        d.exact = false;
        return d;
    }

    /**
     * Policy of a modeled partner at `h`. Levels -1 and 0 are exact; level 1
     * trustees are searched with the nested budget of the round and memoized.
     */
    PolicyDistribution partner_policy(const AgentSpec& partner, const History& h)
    {
        if (partner.tom < 0)
            return partner.role == Role::investor
                       ? level_minus1_investor_policy(partner.guilt, partner.beta)
                       : level_minus1_trustee_policy(h.pending(), partner.guilt, partner.beta);
        const auto key = detail::memo_key(partner, h);
        if (auto it = memo_.find(key); it != memo_.end())
            return it->second;

        PolicyDistribution p;
        if (partner.tom == 0 || (partner.role == Role::investor && partner.tom == 1)) {
            p = decide(partner, h).policy;
        } else {
            const int round = h.rounds();
            const std::uint64_t seed =
                derive_seed(config_.seed, {detail::kTagNested, detail::spec_code(partner), h.key()});
            p = decide(partner, h, config_.nested_budget(round), seed).policy;
        }
        if (memo_.size() >= kMemoLimit)
            memo_.clear();
        memo_.emplace(key, p);
        return p;
    }

    PolicyDistribution partner_policy(const IntentionalModel& model, const History& h)
    {
        return partner_policy(model.spec(), h);
    }

    /// P[observed | partner type] for the three types, the increment of the belief update.
    GuiltVector action_likelihood(const AgentSpec& agent, const History& before, int observed)
    {
        GuiltVector l{};
        for (int g = 0; g < kGuiltTypes; ++g) {
            const PolicyDistribution p = partner_policy(agent.partner_model(GuiltType(g)), before);
            if (observed < 0 || observed >= p.count)
                throw std::domain_error("observed action " + std::to_string(observed) + " is not legal here");
            l[g] = p[observed];
        }
        return l;
    }

    /// The agent's belief about its partner after everything it has observed in `h`.
    DirMultBelief belief(const AgentSpec& agent, const History& h)
    {
        DirMultBelief b = DirMultBelief::prior();
        if (agent.tom < 0)
            return b;
        History before;
        for (int r = 0; r < h.rounds(); ++r) {
            const Exchange e = h[r];
            if (agent.role == Role::investor) {
                before.invest(e.investment);
                b = b.update(action_likelihood(agent, before, e.repayment.category()));
                before.repay(e.repayment);
            } else {
                b = b.update(action_likelihood(agent, before, e.investment.category()));
                before.push(e);
            }
        }
        if (agent.role == Role::trustee && h.has_pending())
            b = b.update(action_likelihood(agent, before, h.pending().category()));
        return b;
    }

    std::size_t memo_size() const { return memo_.size(); }

    // The investor plans against sampled trustee types; the trustee against sampled investor types.
    class InvestorWorld {
    public:
        struct Sample {
            int partner_guilt;
        };

        InvestorWorld(PolicyEngine& engine, const AgentSpec& agent, int root_round, const DirMultBelief& belief)
            : engine_(engine), agent_(agent), root_round_(root_round), predictive_(belief.predictive()),
              rollout_values_(level_minus1_investor_utilities(agent.guilt, agent.beta)),
              partner_responses_(level_minus1_trustee_responses(agent.beta))
        {
            for (int g = 0; g < kGuiltTypes; ++g)
                partners_[g] = agent.partner_model(GuiltType(g));
        }

        Sample sample_root(Rng& rng) const { return {sample_index(predictive_, rng)}; }
        int action_count(const History&) const { return kCategories; }
        bool alive(int steps) const { return survival(steps, root_round_, {agent_.planning}) == 1; }

        Transition step(const Sample& s, const History& h, int a, int, Rng& rng)
        {
            History next = h.with_investment(InvestorAction(a));
            const int ret = engine_.partner_policy(partners_[s.partner_guilt], next).sample(rng);
            return finish(next, a, ret);
        }

        int rollout_action(const History&, Rng& rng) const
        {
            return epsilon_greedy(rollout_values_, engine_.config().rollout_epsilon, rng);
        }

        Transition rollout_step(const Sample& s, const History& h, int a, int, Rng& rng) const
        {
            History next = h.with_investment(InvestorAction(a));
            return finish(next, a, partner_responses_[s.partner_guilt][a].sample(rng));
        }

    private:
        Transition finish(History& next, int a, int ret) const
        {
            next.repay(TrusteeAction(ret));
            return {next, UtilityTable::instance()(Role::investor, agent_.guilt.index(), a, ret)};
        }

        PolicyEngine& engine_;
        AgentSpec agent_;
        int root_round_;
        GuiltVector predictive_;
        QValues rollout_values_;
        TrusteeResponseModel partner_responses_;
        std::array<AgentSpec, kGuiltTypes> partners_;
    };

    class TrusteeWorld {
    public:
        struct Sample {
            int partner_guilt;
        };

        TrusteeWorld(PolicyEngine& engine, const AgentSpec& agent, int root_round, const DirMultBelief& belief)
            : engine_(engine), agent_(agent), root_round_(root_round), predictive_(belief.predictive())
        {
            for (int g = 0; g < kGuiltTypes; ++g) {
                partners_[g] = agent.partner_model(GuiltType(g));
                partner_rollout_[g] = level_minus1_investor_policy(GuiltType(g), agent.beta);
            }
            for (int i = 0; i < kCategories; ++i)
                rollout_values_[i] = immediate_trustee_utilities(agent.guilt, InvestorAction(i));
        }

        Sample sample_root(Rng& rng) const { return {sample_index(predictive_, rng)}; }
        int action_count(const History& h) const { return legal_trustee_count(h.pending()); }
        bool alive(int steps) const { return survival(steps, root_round_, {agent_.planning}) == 1; }

        Transition step(const Sample& s, const History& h, int a, int steps, Rng& rng)
        {
            auto [next, reward] = repay(h, a);
            if (alive(steps + 1))
                next.invest(InvestorAction(engine_.partner_policy(partners_[s.partner_guilt], next).sample(rng)));
            return {next, reward};
        }

        int rollout_action(const History& h, Rng& rng) const
        {
            return epsilon_greedy(rollout_values_[h.pending().category()], engine_.config().rollout_epsilon, rng);
        }

        Transition rollout_step(const Sample& s, const History& h, int a, int steps, Rng& rng) const
        {
            auto [next, reward] = repay(h, a);
            if (alive(steps + 1))
                next.invest(InvestorAction(partner_rollout_[s.partner_guilt].sample(rng)));
            return {next, reward};
        }

    private:
        Transition repay(const History& h, int a) const
        {
            const InvestorAction inv = h.pending();
            History next = h;
            next.repay(TrusteeAction(a));
            return {next, UtilityTable::instance()(Role::trustee, agent_.guilt.index(), inv.category(), a)};
        }

        PolicyEngine& engine_;
        AgentSpec agent_;
        int root_round_;
        GuiltVector predictive_;
        std::array<QValues, kCategories> rollout_values_;
        std::array<AgentSpec, kGuiltTypes> partners_;
        std::array<PolicyDistribution, kGuiltTypes> partner_rollout_;
    };


    RecombiningInvestorSolver& solver(int tom, double beta) { return solvers_->get(tom, beta); }
    const std::shared_ptr<SolverBank>& solver_bank() const { return solvers_; }

private:
    static constexpr std::size_t kMemoLimit = 4'000'000;

    static void check_turn(const AgentSpec& agent, const History& h)
    {
        if (h.complete())
            throw std::invalid_argument("the game is over");
        if (h.to_move() != agent.role)
            throw std::invalid_argument(std::string("it is not the ") + std::string(to_string(agent.role)) + "'s turn");
    }

    static QValues immediate_trustee_utilities(GuiltType guilt, InvestorAction invest)
    {
        const auto& u = UtilityTable::instance();
        QValues q;
        q.count = legal_trustee_count(invest);
        for (int j = 0; j < q.count; ++j)
            q[j] = u(Role::trustee, guilt.index(), invest.category(), j);
        return q;
    }

    QValues immediate_investor_values(const AgentSpec& agent, const History& h, const DirMultBelief& b)
    {
        const auto& u = UtilityTable::instance();
        const GuiltVector p = b.predictive();
        QValues q;
        for (int i = 0; i < kCategories; ++i) {
            const History next = h.with_investment(InvestorAction(i));
            double v = 0.0;
            for (int g = 0; g < kGuiltTypes; ++g) {
                const PolicyDistribution resp = partner_policy(agent.partner_model(GuiltType(g)), next);
                for (int j = 0; j < resp.count; ++j)
                    v += p[g] * resp[j] * u(Role::investor, agent.guilt.index(), i, j);
            }
            q[i] = v;
        }
        return q;
    }

    template <class World>
    SearchResult run_search(const AgentSpec& agent, const History& h, const DirMultBelief& b,
                            const SearchSettings& settings)
    {
        World world(*this, agent, h.rounds(), b);
        Pomcp<World> search(world);
        return search.search(h, settings);
    }

    PlannerConfig config_;
    std::shared_ptr<SolverBank> solvers_;
    std::unordered_map<detail::MemoKey, PolicyDistribution, detail::MemoKeyHash> memo_;
};

} // namespace trust
