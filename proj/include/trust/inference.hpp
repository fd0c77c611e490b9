#pragma once

// Likelihood-based model inversion over the (k, alpha, P) grid.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "trust/simulator.hpp"

namespace trust {

inline constexpr double kProbabilityFloor = 1e-9;

struct ParameterGrid {
    std::vector<AgentSpec> investor;
    std::vector<AgentSpec> trustee;

    /// 18 investor cells {0,2} x alpha x {0,2,7}; 12 trustee cells (0,alpha,0) and {1} x alpha x {0,2,7}.
    static ParameterGrid full(double beta = kDefaultBeta)
    {
        ParameterGrid g;
        for (int k : {0, 2})
            for (GuiltType a : all_guilt_types)
                for (int p : {0, 2, 7})
                    g.investor.push_back({Role::investor, k, a, p, beta});
        for (GuiltType a : all_guilt_types)
            g.trustee.push_back({Role::trustee, 0, a, 0, beta});
        for (GuiltType a : all_guilt_types)
            for (int p : {0, 2, 7})
                g.trustee.push_back({Role::trustee, 1, a, p, beta});
        return g;
    }
};

/// NLL of ten choices made uniformly among five actions, 10 ln 5.
inline double uniform_baseline_nll(int rounds = kRounds, int actions = kCategories)
{
    return rounds * std::log(static_cast<double>(actions));
}

struct RoleLikelihood {
    double nll = 0.0;
    int clamped = 0;                 ///< observed actions the model gave (near) zero probability
    std::vector<double> likelihoods; ///< per round; 1 for degenerate trustee turns
};

using PolicyFunction = std::function<PolicyDistribution(const History&)>;

/**
 * Accumulates -ln pi(observed) for one role over a record. `policy` is asked
 * at the history the role faced when it acted; forced trustee turns add zero.
 */
inline RoleLikelihood role_nll(const GameRecord& record, Role role, const PolicyFunction& policy)
{
    RoleLikelihood out;
    History h;
    for (const Exchange& e : record.rounds) {
        if (role == Role::investor)
            out.likelihoods.push_back(policy(h)[e.investment.category()]);
        h.invest(e.investment);
        if (role == Role::trustee)
            out.likelihoods.push_back(e.investment.sends_nothing() ? 1.0 : policy(h)[e.repayment.category()]);
        h.repay(e.repayment);
    }
    for (double& p : out.likelihoods) {
        if (p < kProbabilityFloor) {
            ++out.clamped;
            out.nll -= std::log(kProbabilityFloor);
        } else {
            out.nll -= std::log(p);
        }
    }
    return out;
}

namespace detail {
enum FitTag : std::uint64_t { kTagFit = 0x666974 };
}

/// Evaluation seed shared by every record at a given (cell, round), so grid comparisons are paired.
inline std::uint64_t evaluation_seed(std::uint64_t base, const AgentSpec& cell, int round)
{
    return derive_seed(base, {detail::kTagFit, detail::spec_code(cell), static_cast<std::uint64_t>(round)});
}

inline RoleLikelihood cell_nll(PolicyEngine& engine, const GameRecord& record, const AgentSpec& cell)
{
    return role_nll(record, cell.role, [&](const History& h) {
        return engine.decide(cell, h, std::nullopt, evaluation_seed(engine.config().seed, cell, h.rounds())).policy;
    });
}

struct NllPair {
    RoleLikelihood investor;
    RoleLikelihood trustee;
};

inline NllPair nll(PolicyEngine& engine, const GameRecord& record, const AgentSpec& investor_cell,
                   const AgentSpec& trustee_cell)
{
    record.validate();
    return {cell_nll(engine, record, investor_cell), cell_nll(engine, record, trustee_cell)};
}

struct CellScore {
    AgentSpec cell;
    double nll = 0.0;
    int clamped = 0;
};

struct RoleFit {
    std::vector<CellScore> cells;
    int best = -1;
    std::vector<int> ties; ///< every cell attaining the minimum, best included
    std::vector<double> likelihoods;

    const AgentSpec& best_cell() const { return cells.at(static_cast<std::size_t>(best)).cell; }

    /// Cell indices ordered by NLL, ties by grid position.
    std::vector<int> ranking() const
    {
        std::vector<int> r(cells.size());
        std::iota(r.begin(), r.end(), 0);
        std::stable_sort(r.begin(), r.end(), [&](int a, int b) { return cells[a].nll < cells[b].nll; });
        return r;
    }
};

struct FitResult {
    RoleFit investor;
    RoleFit trustee;
    int budget = 0;
    std::uint64_t seed = 0;
};

inline RoleFit fit_role(PolicyEngine& engine, const GameRecord& record, const std::vector<AgentSpec>& cells)
{
    if (cells.empty())
        throw ConfigError("the parameter grid has no cells for this role");
    RoleFit fit;
    std::vector<std::vector<double>> traces;
    for (const AgentSpec& cell : cells) {
        RoleLikelihood l = cell_nll(engine, record, cell);
        fit.cells.push_back({cell, l.nll, l.clamped});
        traces.push_back(std::move(l.likelihoods));
    }
    const auto ranking = fit.ranking();
    fit.best = ranking.front();
    for (int i : ranking)
        if (fit.cells[i].nll == fit.cells[fit.best].nll)
            fit.ties.push_back(i);
    fit.likelihoods = traces[fit.best];
    return fit;
}

/// Exhaustive grid fit. Roles decouple given the record, so each is fitted on its own cells.
inline FitResult fit(PolicyEngine& engine, const GameRecord& record, const ParameterGrid& grid)
{
    record.validate();
    FitResult r;
    r.investor = fit_role(engine, record, grid.investor);
    r.trustee = fit_role(engine, record, grid.trustee);
    r.budget = engine.config().simulations;
    r.seed = engine.config().seed;
    return r;
}

// Confusion -------------------------------------------------------------------

enum class Parameter { guilt, tom, planning };

inline std::string_view to_string(Parameter p)
{
    switch (p) {
    case Parameter::guilt: return "guilt";
    case Parameter::tom: return "tom";
    case Parameter::planning: return "planning";
    }
    return "";
}

inline double parameter_value(const AgentSpec& s, Parameter p)
{
    switch (p) {
    case Parameter::guilt: return s.guilt.value();
    case Parameter::tom: return s.tom;
    case Parameter::planning: return s.planning;
    }
    return 0.0;
}

/// P(estimated | true) for one parameter of one role, marginalized over everything else.
struct ConfusionMatrix {
    Parameter parameter = Parameter::guilt;
    Role role = Role::investor;
    std::vector<double> levels;
    std::vector<std::vector<double>> rows; ///< [true][estimated]
    std::vector<int> counts;               ///< records per true level

    double diagonal_mass() const
    {
        double d = 0.0;
        int levels_seen = 0;
        for (std::size_t i = 0; i < levels.size(); ++i)
            if (counts[i] > 0) {
                d += rows[i][i];
                ++levels_seen;
            }
        return levels_seen ? d / levels_seen : 0.0;
    }

    double min_diagonal() const
    {
        double d = 1.0;
        for (std::size_t i = 0; i < levels.size(); ++i)
            if (counts[i] > 0)
                d = std::min(d, rows[i][i]);
        return d;
    }
};

struct ConfusionSample {
    Pairing truth;
    AgentSpec investor_estimate;
    AgentSpec trustee_estimate;
};

struct ConfusionReport {
    std::vector<ConfusionSample> samples;
    std::vector<ConfusionMatrix> matrices;

    const ConfusionMatrix& matrix(Parameter p, Role r) const
    {
        for (const auto& m : matrices)
            if (m.parameter == p && m.role == r)
                return m;
        throw std::out_of_range("no such confusion matrix");
    }
};

/// Every investor cell against every trustee cell.
inline std::vector<Pairing> full_factorial(const ParameterGrid& grid)
{
    std::vector<Pairing> out;
    for (const auto& i : grid.investor)
        for (const auto& t : grid.trustee)
            out.emplace_back(i, t);
    return out;
}

/**
 * A smaller design in which every investor cell is played `per_cell` times
 * and the trustee cells rotate through the partner slots, so each trustee
 * cell is also played at least `per_cell` times when the investor grid is
 * at least as large as the trustee grid.
 */
inline std::vector<Pairing> balanced_pairings(const ParameterGrid& grid, int per_cell)
{
    std::vector<Pairing> out;
    const std::size_t nt = grid.trustee.size();
    const std::size_t rows = std::max(grid.investor.size(), nt);
    for (int rep = 0; rep < per_cell; ++rep)
        for (std::size_t k = 0; k < rows; ++k)
            out.emplace_back(grid.investor[k % grid.investor.size()], grid.trustee[(k + rep * 7) % nt]);
    return out;
}

inline std::vector<ConfusionMatrix> tabulate_confusion(const std::vector<ConfusionSample>& samples,
                                                       const ParameterGrid& grid)
{
    std::vector<ConfusionMatrix> out;
    for (Role role : {Role::investor, Role::trustee})
        for (Parameter p : {Parameter::guilt, Parameter::tom, Parameter::planning}) {
            ConfusionMatrix m;
            m.parameter = p;
            m.role = role;
            for (const AgentSpec& c : role == Role::investor ? grid.investor : grid.trustee)
                if (std::find(m.levels.begin(), m.levels.end(), parameter_value(c, p)) == m.levels.end())
                    m.levels.push_back(parameter_value(c, p));
            std::sort(m.levels.begin(), m.levels.end());
            const std::size_t n = m.levels.size();
            m.rows.assign(n, std::vector<double>(n, 0.0));
            m.counts.assign(n, 0);
            auto level = [&](double v) {
                return static_cast<std::size_t>(std::find(m.levels.begin(), m.levels.end(), v) - m.levels.begin());
            };
            for (const auto& s : samples) {
                const AgentSpec& truth = role == Role::investor ? s.truth.first : s.truth.second;
                const AgentSpec& est = role == Role::investor ? s.investor_estimate : s.trustee_estimate;
                const std::size_t i = level(parameter_value(truth, p)), j = level(parameter_value(est, p));
                if (i < n && j < n) {
                    m.rows[i][j] += 1.0;
                    ++m.counts[i];
                }
            }
            for (std::size_t i = 0; i < n; ++i)
                if (m.counts[i] > 0)
                    for (double& v : m.rows[i])
                        v /= m.counts[i];
            out.push_back(std::move(m));
        }
    return out;
}

/// Generates `repetitions` records per pairing, fits each on `grid` and tabulates the marginals.
inline ConfusionReport confusion(const std::vector<Pairing>& pairings, int repetitions, const ParameterGrid& grid,
                                 const PlannerConfig& config, int workers = default_workers())
{
    if (repetitions < 1)
        throw ConfigError("repetitions must be at least 1");
    const int jobs = static_cast<int>(pairings.size()) * repetitions;
    ConfusionReport report;
    report.samples = run_parallel<ConfusionSample>(config, jobs, workers, [&](PolicyEngine& engine, int i) {
        const Pairing& p = pairings[static_cast<std::size_t>(i / repetitions)];
        const GameRecord rec = play_dyad(engine, p.first, p.second, dyad_seed(config.seed, p, i % repetitions));
        const FitResult f = fit(engine, rec, grid);
        return ConfusionSample{p, f.investor.best_cell(), f.trustee.best_cell()};
    });
    report.matrices = tabulate_confusion(report.samples, grid);
    return report;
}

// Observed data ---------------------------------------------------------------

struct RawExchange {
    std::string dyad;
    int round = 0;
    int invested = 0;
    int returned = 0;
    int line = 0; ///< source line, for reports
};

struct IngestReport {
    std::vector<GameRecord> records;
    std::vector<std::string> rejections;
};

/**
 * Groups raw rows by dyad (in order of first appearance), orders each dyad by
 * round and classifies the amounts. Rows with illegal amounts are rejected
 * individually; a dyad is kept only if exactly ten valid, distinct rounds remain.
 */
inline IngestReport ingest_observed(const std::vector<RawExchange>& rows)
{
    IngestReport out;
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::pair<int, Exchange>>> games;
    for (const RawExchange& r : rows) {
        if (!games.contains(r.dyad))
            order.push_back(r.dyad);
        auto& game = games[r.dyad];
        try {
            const InvestorAction a = classify_investment(r.invested);
            const int sent = r.invested;
            if (r.returned < 0)
                throw std::domain_error("negative return " + std::to_string(r.returned));
            const TrusteeAction t = classify_return(r.returned, sent);
            // A positive amount rounding to the zero category still leaves the trustee a choice
            // in reality; the model has none, so the return is forced to the degenerate category.
            game.emplace_back(r.round, Exchange{a, a.sends_nothing() ? TrusteeAction(0) : t});
        } catch (const std::domain_error& e) {
            out.rejections.push_back("line " + std::to_string(r.line) + " (dyad " + r.dyad + ", round " +
                                     std::to_string(r.round) + "): " + e.what());
        }
    }
    for (const std::string& dyad : order) {
        auto game = games[dyad];
        std::stable_sort(game.begin(), game.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        bool distinct = true;
        for (std::size_t k = 1; k < game.size(); ++k)
            distinct = distinct && game[k].first != game[k - 1].first;
        if (game.size() != kRounds || !distinct) {
            out.rejections.push_back("dyad " + dyad + ": expected " + std::to_string(kRounds) +
                                     " distinct valid rounds, got " + std::to_string(game.size()));
            continue;
        }
        GameRecord rec;
        rec.id = dyad;
        rec.observed = true;
        for (const auto& [round, e] : game)
            rec.rounds.push_back(e);
        out.records.push_back(std::move(rec));
    }
    return out;
}

} // namespace trust
