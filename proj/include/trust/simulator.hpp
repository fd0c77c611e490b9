#pragma once

// Dyads, batches and the diagnostics built on them.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "trust/engine.hpp"
#include "trust/stats.hpp"

namespace trust {

/**
 * One played or observed game. Generated records carry both specs, the seed
 * and both belief traces (prior plus one snapshot per completed round);
 * observed records carry only the exchanges.
 */
struct GameRecord {
    std::string id;
    std::optional<AgentSpec> investor;
    std::optional<AgentSpec> trustee;
    std::vector<Exchange> rounds;
    std::vector<DirMultBelief> investor_beliefs;
    std::vector<DirMultBelief> trustee_beliefs;
    std::optional<std::uint64_t> seed;
    std::string config_digest;
    bool observed = false;

    History history() const
    {
        History h;
        for (const Exchange& e : rounds)
            h.push(e);
        return h;
    }

    void validate() const
    {
        if (rounds.size() != kRounds)
            throw std::invalid_argument("a game record has exactly " + std::to_string(kRounds) + " rounds, got " +
                                        std::to_string(rounds.size()));
        for (const Exchange& e : rounds)
            check_legal(e.investment, e.repayment);
        for (const auto* trace : {&investor_beliefs, &trustee_beliefs})
            if (!trace->empty() && trace->size() != kRounds + 1)
                throw std::invalid_argument("belief traces hold " + std::to_string(kRounds + 1) + " snapshots");
    }

    friend bool operator==(const GameRecord&, const GameRecord&) = default;
};

struct Gains {
    double investor = 0.0;
    double trustee = 0.0;
    double combined = 0.0;
};

inline Gains total_gains(const GameRecord& record)
{
    Money inv, tru;
    for (const Exchange& e : record.rounds) {
        inv += investor_payoff(e.investment, e.repayment);
        tru += trustee_payoff(e.investment, e.repayment);
    }
    return {inv.value(), tru.value(), (inv + tru).value()};
}

namespace detail {
enum PlayTag : std::uint64_t { kTagPlay = 0x706c6179, kTagDyad = 0x64796164, kTagSubject = 0x7375626a };
}

/// Plays a full game; both agents search afresh every round and learn from each observation.
inline GameRecord play_dyad(PolicyEngine& engine, const AgentSpec& investor, const AgentSpec& trustee,
                            std::uint64_t seed)
{
    if (investor.role != Role::investor || trustee.role != Role::trustee)
        throw std::invalid_argument("play_dyad takes an investor and a trustee");
    GameRecord rec;
    rec.investor = investor;
    rec.trustee = trustee;
    rec.seed = seed;
    Rng rng(derive_seed(seed, {detail::kTagPlay}));
    History h;
    for (int t = 0; t < kRounds; ++t) {
        const Decision di = engine.decide(investor, h, std::nullopt, derive_seed(seed, {0, static_cast<std::uint64_t>(t)}));
        rec.investor_beliefs.push_back(di.belief);
        rec.trustee_beliefs.push_back(engine.belief(trustee, h));
        const InvestorAction a(di.policy.sample(rng));
        h.invest(a);
        const Decision dt = engine.decide(trustee, h, std::nullopt, derive_seed(seed, {1, static_cast<std::uint64_t>(t)}));
        const TrusteeAction r(dt.policy.sample(rng));
        h.repay(r);
        rec.rounds.push_back({a, r});
    }
    rec.investor_beliefs.push_back(engine.belief(investor, h));
    rec.trustee_beliefs.push_back(engine.belief(trustee, h));
    return rec;
}

using Pairing = std::pair<AgentSpec, AgentSpec>;

/// Seed of one dyad: depends on the two specs and the repetition, never on list position.
inline std::uint64_t dyad_seed(std::uint64_t base, const Pairing& p, int repetition)
{
    return derive_seed(base, {detail::kTagDyad, detail::spec_code(p.first), detail::spec_code(p.second),
                              static_cast<std::uint64_t>(repetition)});
}

inline int default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

/**
 * Runs `count` independent jobs on `workers` threads, each thread owning its
 * own engine. Results land at their job index, so the output order never
 * depends on scheduling.
 */
template <class Result>
std::vector<Result> run_parallel(const PlannerConfig& config, int count, int workers,
                                 const std::function<Result(PolicyEngine&, int)>& job)
{
    std::vector<Result> out(static_cast<std::size_t>(count));
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        PolicyEngine engine(config);
        for (int i = next++; i < count; i = next++) {
            try {
                out[static_cast<std::size_t>(i)] = job(engine, i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next = count;
            }
        }
    };
    workers = std::clamp(workers, 1, std::max(1, count));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    if (failure)
        std::rethrow_exception(failure);
    return out;
}

struct RoundSeries {
    std::array<double, kRounds> mean{};
    std::array<double, kRounds> std{};
    std::array<int, kRounds> n{};
};

/**
 * Per-round mean and sample standard deviation of action fractions. Returns
 * are averaged over rounds with a positive investment only, since a zero
 * investment leaves the trustee nothing to choose.
 */
struct TrajectoryStats {
    RoundSeries investor;
    RoundSeries trustee;
    /// Mean predictive belief after each number of completed rounds (0..10).
    std::array<GuiltVector, kRounds + 1> investor_posterior{};
    std::array<GuiltVector, kRounds + 1> trustee_posterior{};
    int records = 0;
};

inline TrajectoryStats trajectory_stats(std::span<const GameRecord> records)
{
    TrajectoryStats s;
    s.records = static_cast<int>(records.size());
    for (int t = 0; t < kRounds; ++t) {
        std::vector<double> inv, ret;
        for (const GameRecord& r : records) {
            const Exchange& e = r.rounds[t];
            inv.push_back(e.investment.fraction());
            if (!e.investment.sends_nothing())
                ret.push_back(e.repayment.fraction());
        }
        auto fill = [t](RoundSeries& series, const std::vector<double>& x) {
            series.n[t] = static_cast<int>(x.size());
            if (!x.empty()) {
                series.mean[t] = stats::mean(x);
                series.std[t] = std::sqrt(stats::variance(x));
            }
        };
        fill(s.investor, inv);
        fill(s.trustee, ret);
    }
    for (int t = 0; t <= kRounds; ++t) {
        int ni = 0, nt = 0;
        for (const GameRecord& r : records) {
            if (r.investor_beliefs.size() == kRounds + 1) {
                const GuiltVector p = r.investor_beliefs[t].predictive();
                for (int g = 0; g < kGuiltTypes; ++g)
                    s.investor_posterior[t][g] += p[g];
                ++ni;
            }
            if (r.trustee_beliefs.size() == kRounds + 1) {
                const GuiltVector p = r.trustee_beliefs[t].predictive();
                for (int g = 0; g < kGuiltTypes; ++g)
                    s.trustee_posterior[t][g] += p[g];
                ++nt;
            }
        }
        for (int g = 0; g < kGuiltTypes; ++g) {
            if (ni)
                s.investor_posterior[t][g] /= ni;
            if (nt)
                s.trustee_posterior[t][g] /= nt;
        }
    }
    return s;
}

struct PairingResult {
    Pairing pairing;
    std::vector<GameRecord> records;
    TrajectoryStats stats;
};

inline std::vector<PairingResult> batch(const std::vector<Pairing>& pairings, int repetitions,
                                        const PlannerConfig& config, int workers = default_workers())
{
    if (repetitions < 1)
        throw ConfigError("repetitions must be at least 1");
    const int jobs = static_cast<int>(pairings.size()) * repetitions;
    auto records = run_parallel<GameRecord>(config, jobs, workers, [&](PolicyEngine& engine, int i) {
        const Pairing& p = pairings[static_cast<std::size_t>(i / repetitions)];
        return play_dyad(engine, p.first, p.second, dyad_seed(config.seed, p, i % repetitions));
    });
    std::vector<PairingResult> out;
    for (std::size_t k = 0; k < pairings.size(); ++k) {
        PairingResult r{pairings[k], {}, {}};
        for (int rep = 0; rep < repetitions; ++rep) {
            GameRecord& rec = records[k * static_cast<std::size_t>(repetitions) + rep];
            rec.id = "p" + std::to_string(k) + "-r" + std::to_string(rep);
            r.records.push_back(std::move(rec));
        }
        r.stats = trajectory_stats(r.records);
        out.push_back(std::move(r));
    }
    return out;
}

// Convergence -----------------------------------------------------------------

using Matrix5 = std::array<std::array<double, kCategories>, kCategories>;

struct BudgetDiscrepancy {
    int budget = 0;
    Matrix5 covariance{};       ///< C_ij around the converged reference
    double sum_of_squares = 0;  ///< sum of squared entries of C
    double trace = 0;           ///< summed per-action variance around the reference
    double max_deviation = 0;   ///< largest |P^k(a) - reference^k(a)| over subjects and actions
    double mean_seconds = 0;    ///< wall clock per first-action search
    std::vector<PolicyDistribution> subjects;
};

struct ConvergenceReport {
    AgentSpec agent;
    int reference_budget = 0;
    std::vector<PolicyDistribution> reference;
    std::vector<BudgetDiscrepancy> budgets;
};

/**
 * First-action distributions of `subjects` simulated subjects at each budget,
 * compared against a run of the same subject at the reference budget.
 */
inline ConvergenceReport convergence_diagnostic(const PlannerConfig& config, const AgentSpec& agent,
                                                const std::vector<int>& budgets, int reference_budget,
                                                int subjects = 120, int workers = default_workers())
{
    if (subjects < 2)
        throw ConfigError("the discrepancy matrix needs at least two subjects");
    const History root;
    auto first_action = [&](int budget) {
        return run_parallel<std::pair<PolicyDistribution, double>>(
            config, subjects, workers, [&](PolicyEngine& engine, int k) {
                engine.decide(agent, root, 1, 0); // fills exact tables outside the timing
                const auto t0 = std::chrono::steady_clock::now();
                const Decision d =
                    engine.decide(agent, root, budget, derive_seed(config.seed, {detail::kTagSubject, static_cast<std::uint64_t>(k)}));
                return std::pair{d.policy, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()};
            });
    };
    ConvergenceReport report{agent, reference_budget, {}, {}};
    for (auto& [p, s] : first_action(reference_budget))
        report.reference.push_back(p);
    for (int budget : budgets) {
        BudgetDiscrepancy b;
        b.budget = budget;
        double seconds = 0.0;
        for (int k = 0; auto& [p, s] : first_action(budget)) {
            seconds += s;
            const PolicyDistribution& ref = report.reference[static_cast<std::size_t>(k++)];
            for (int i = 0; i < kCategories; ++i) {
                b.max_deviation = std::max(b.max_deviation, std::abs(p[i] - ref[i]));
                for (int j = 0; j < kCategories; ++j)
                    b.covariance[i][j] += (p[i] - ref[i]) * (p[j] - ref[j]) / (subjects - 1);
            }
            b.subjects.push_back(p);
        }
        for (int i = 0; i < kCategories; ++i) {
            b.trace += b.covariance[i][i];
            for (int j = 0; j < kCategories; ++j)
                b.sum_of_squares += b.covariance[i][j] * b.covariance[i][j];
        }
        b.mean_seconds = seconds / subjects;
        report.budgets.push_back(std::move(b));
    }
    return report;
}

// Horizon equivalence ---------------------------------------------------------

struct HorizonReport {
    std::array<double, kRounds> investor_p{};
    std::array<double, kRounds> trustee_p{};
    int repetitions = 0;

    double min_p() const
    {
        double m = 1.0;
        for (int t = 0; t < kRounds; ++t)
            m = std::min({m, investor_p[t], trustee_p[t]});
        return m;
    }
};

/// Welch p-value of a per-round comparison; rounds without two observations per side count as no difference.
inline double round_p_value(const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.size() < 2 || b.size() < 2)
        return 1.0;
    return stats::welch_t_test(a, b).p_two_sided;
}

inline HorizonReport horizon_equivalence(const Pairing& first, const Pairing& second, int repetitions,
                                         const PlannerConfig& config, int workers = default_workers())
{
    const auto results = batch({first, second}, repetitions, config, workers);
    HorizonReport rep;
    rep.repetitions = repetitions;
    for (int t = 0; t < kRounds; ++t) {
        std::array<std::vector<double>, 2> inv, ret;
        for (int k = 0; k < 2; ++k)
            for (const GameRecord& r : results[k].records) {
                inv[k].push_back(r.rounds[t].investment.fraction());
                if (!r.rounds[t].investment.sends_nothing())
                    ret[k].push_back(r.rounds[t].repayment.fraction());
            }
        rep.investor_p[t] = round_p_value(inv[0], inv[1]);
        rep.trustee_p[t] = round_p_value(ret[0], ret[1]);
    }
    return rep;
}

} // namespace trust
