#pragma once

// Agent characterization and the exactly solvable bottom of the theory-of-mind
// hierarchy: survival horizons, softmax policies, level -1 models, the
// level 0 trustee and the recombining-tree level 0 investor.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "trust/beliefs.hpp"
#include "trust/game_model.hpp"
#include "trust/random.hpp"

namespace trust {

inline constexpr double kDefaultBeta = 1.0 / 3.0;

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Action vectors ----------------------------------------------------------------

/// Values over the legal actions of one decision; legal actions are always 0..count-1.
struct ActionVector {
    std::array<double, kCategories> values{};
    int count = kCategories;

    double operator[](int a) const { return values[a]; }
    double& operator[](int a) { return values[a]; }
    std::span<const double> view() const { return {values.data(), static_cast<std::size_t>(count)}; }

    int argmax() const
    {
        int best = 0;
        for (int a = 1; a < count; ++a)
            if (values[a] > values[best])
                best = a;
        return best;
    }

    friend bool operator==(const ActionVector&, const ActionVector&) = default;
};

struct QValues : ActionVector {};

struct PolicyDistribution : ActionVector {
    int sample(Rng& rng) const { return sample_index(view(), rng); }
    int mode() const { return argmax(); }

    static PolicyDistribution uniform(int count)
    {
        PolicyDistribution p;
        p.count = count;
        for (int a = 0; a < count; ++a)
            p.values[a] = 1.0 / count;
        return p;
    }
    static PolicyDistribution degenerate()
    {
        PolicyDistribution p;
        p.count = 1;
        p.values[0] = 1.0;
        return p;
    }
};

/// exp(beta q) normalized; the max is subtracted first so large q never overflow.
inline PolicyDistribution softmax_policy(std::span<const double> q, double beta)
{
    if (q.empty() || q.size() > kCategories)
        throw std::invalid_argument("softmax needs 1..5 action values");
    if (!(beta > 0.0))
        throw std::invalid_argument("inverse temperature must be positive");
    PolicyDistribution p;
    p.count = static_cast<int>(q.size());
    const double top = *std::max_element(q.begin(), q.end());
    double total = 0.0;
    for (int a = 0; a < p.count; ++a) {
        p.values[a] = std::exp(beta * (q[a] - top));
        total += p.values[a];
    }
    for (int a = 0; a < p.count; ++a)
        p.values[a] /= total;
    return p;
}

inline PolicyDistribution softmax_policy(const QValues& q, double beta) { return softmax_policy(q.view(), beta); }

/// Expectation of q under the policy softmax(beta q).
inline double softmax_value(std::span<const double> q, double beta)
{
    const PolicyDistribution p = softmax_policy(q, beta);
    double v = 0.0;
    for (int a = 0; a < p.count; ++a)
        v += p.values[a] * q[a];
    return v;
}

// Agents ------------------------------------------------------------------------

enum class PlanningRange { grid, extended };

struct AgentSpec {
    Role role = Role::investor;
    int tom = 0;
    GuiltType guilt{};
    int planning = 0;
    double beta = kDefaultBeta;

    /// Level 0 trustees gain nothing from planning, so their horizon is pinned to 0.
    AgentSpec normalized() const
    {
        AgentSpec s = *this;
        if (s.role == Role::trustee && s.tom == 0)
            s.planning = 0;
        return s;
    }

    void validate(PlanningRange range = PlanningRange::grid) const
    {
        const bool tom_ok = role == Role::investor ? (tom == 0 || tom == 2) : (tom == 0 || tom == 1);
        if (!tom_ok)
            throw ConfigError(std::string(to_string(role)) + " theory-of-mind level must be " +
                              (role == Role::investor ? "0 or 2" : "0 or 1") + ", got " + std::to_string(tom));
        const bool planning_ok = range == PlanningRange::grid ? (planning == 0 || planning == 2 || planning == 7)
                                                              : (planning >= 0 && planning <= 9);
        if (!planning_ok)
            throw ConfigError("planning horizon " + std::to_string(planning) + " is outside the " +
                              (range == PlanningRange::grid ? "grid {0,2,7}" : "range 0..9"));
        if (role == Role::trustee && tom == 0 && planning != 0)
            throw ConfigError("a level 0 trustee has planning horizon 0");
        if (!(beta > 0.0) || !std::isfinite(beta))
            throw ConfigError("inverse temperature must be positive");
    }

    /// The partner as this agent models it: one level down, same horizon and temperature.
    AgentSpec partner_model(GuiltType partner_guilt) const
    {
        AgentSpec p{partner_of(role), tom - 1, partner_guilt, planning, beta};
        return p;
    }

    std::string label() const
    {
        std::ostringstream os;
        os << (role == Role::investor ? "I" : "T") << "(" << tom << "," << guilt.value() << "," << planning << ")";
        return os.str();
    }

    friend bool operator==(const AgentSpec&, const AgentSpec&) = default;
};

/// Parses "investor:2,1,7" / "trustee:1,0.4,7"; the role prefix is optional when given.
inline AgentSpec parse_agent_spec(const std::string& text, std::optional<Role> default_role = std::nullopt)
{
    std::string body = text;
    AgentSpec spec;
    const auto colon = text.find(':');
    if (colon != std::string::npos) {
        spec.role = role_from_string(text.substr(0, colon));
        body = text.substr(colon + 1);
    } else if (default_role) {
        spec.role = *default_role;
    } else {
        throw ConfigError("agent spec '" + text + "' needs a role prefix");
    }
    std::array<double, 3> parts{};
    std::istringstream is(body);
    for (int i = 0; i < 3; ++i) {
        std::string field;
        if (!std::getline(is, field, ','))
            throw ConfigError("agent spec '" + text + "' must be k,alpha,P");
        try {
            parts[i] = std::stod(field);
        } catch (const std::exception&) {
            throw ConfigError("agent spec '" + text + "' has a non-numeric field");
        }
    }
    spec.tom = static_cast<int>(parts[0]);
    spec.planning = static_cast<int>(parts[2]);
    if (spec.tom != parts[0] || spec.planning != parts[2])
        throw ConfigError("agent spec '" + text + "': k and P must be integers");
    try {
        spec.guilt = GuiltType::from_value(parts[1]);
    } catch (const std::domain_error& e) {
        throw ConfigError(e.what());
    }
    return spec.normalized();
}

/**
 * A model of a partner: its characterization, its belief about us and,
 * above level -1, the model it holds of us in turn.
 */
class IntentionalModel {
public:
    IntentionalModel(AgentSpec spec, DirMultBelief belief = {}) : spec_(spec), belief_(belief)
    {
        if (spec_.tom >= 0)
            nested_ = std::make_unique<IntentionalModel>(spec_.partner_model(GuiltType{}), DirMultBelief{});
    }

    IntentionalModel(const IntentionalModel& o) : spec_(o.spec_), belief_(o.belief_)
    {
        if (o.nested_)
            nested_ = std::make_unique<IntentionalModel>(*o.nested_);
    }
    IntentionalModel& operator=(const IntentionalModel& o)
    {
        IntentionalModel tmp(o);
        std::swap(spec_, tmp.spec_);
        std::swap(belief_, tmp.belief_);
        std::swap(nested_, tmp.nested_);
        return *this;
    }
    IntentionalModel(IntentionalModel&&) noexcept = default;
    IntentionalModel& operator=(IntentionalModel&&) noexcept = default;

    const AgentSpec& spec() const { return spec_; }
    const DirMultBelief& belief() const { return belief_; }
    void set_belief(const DirMultBelief& b) { belief_ = b; }
    const IntentionalModel* nested() const { return nested_.get(); }

    /// Number of models below this one; level -1 holds none.
    int depth() const { return nested_ ? 1 + nested_->depth() : 0; }

private:
    AgentSpec spec_;
    DirMultBelief belief_;
    std::unique_ptr<IntentionalModel> nested_;
};

// Survival ----------------------------------------------------------------------

struct SurvivalHorizon {
    int planning = 0;
    int game_length = kRounds;
};

/**
 * 1 while the step lies within the planning horizon and inside the game.
 * Rounds are 0-based, so the last playable round is game_length - 1.
 */
inline int survival(int steps_ahead, int current_round, SurvivalHorizon horizon)
{
    if (steps_ahead < 0)
        throw std::invalid_argument("steps ahead must be nonnegative");
    return steps_ahead <= horizon.planning && current_round + steps_ahead <= horizon.game_length - 1 ? 1 : 0;
}

/// Last round (0-based) still inside the horizon of a decision taken at `round`.
inline int last_planned_round(int round, int planning) { return std::min(round + planning, kRounds - 1); }

// Level -1 and level 0 exact models ------------------------------------------------

inline PolicyDistribution level_minus1_trustee_policy(InvestorAction invest, GuiltType guilt, double beta)
{
    const auto& u = UtilityTable::instance();
    QValues q;
    q.count = legal_trustee_count(invest);
    for (int j = 0; j < q.count; ++j)
        q[j] = u(Role::trustee, guilt.index(), invest.category(), j);
    return softmax_policy(q, beta);
}

/// Response model of the three trustee types: [guilt][investment] -> returns.
using TrusteeResponseModel = std::array<std::array<PolicyDistribution, kCategories>, kGuiltTypes>;

inline TrusteeResponseModel level_minus1_trustee_responses(double beta)
{
    TrusteeResponseModel m;
    for (int g = 0; g < kGuiltTypes; ++g)
        for (int i = 0; i < kCategories; ++i)
            m[g][i] = level_minus1_trustee_policy(InvestorAction(i), GuiltType(g), beta);
    return m;
}

/// E[r^I | investment, trustee type] under a trustee response model.
inline std::array<std::array<double, kCategories>, kGuiltTypes>
expected_investor_utilities(GuiltType own, const TrusteeResponseModel& responses)
{
    const auto& u = UtilityTable::instance();
    std::array<std::array<double, kCategories>, kGuiltTypes> e{};
    for (int g = 0; g < kGuiltTypes; ++g)
        for (int i = 0; i < kCategories; ++i)
            for (int j = 0; j < responses[g][i].count; ++j)
                e[g][i] += responses[g][i][j] * u(Role::investor, own.index(), i, j);
    return e;
}

/// Immediate utilities a level -1 investor expects with all trustee types equally likely.
inline QValues level_minus1_investor_utilities(GuiltType guilt, double beta)
{
    const auto e = expected_investor_utilities(guilt, level_minus1_trustee_responses(beta));
    QValues q;
    for (int i = 0; i < kCategories; ++i)
        q[i] = (e[0][i] + e[1][i] + e[2][i]) / 3.0;
    return q;
}

inline PolicyDistribution level_minus1_investor_policy(GuiltType guilt, double beta)
{
    return softmax_policy(level_minus1_investor_utilities(guilt, beta), beta);
}

/// Level -1 models react to the physical state only; the round never matters.
inline PolicyDistribution level_minus1_policy(Role role, GuiltType guilt, double beta,
                                              std::optional<InvestorAction> invest = std::nullopt)
{
    if (role == Role::investor)
        return level_minus1_investor_policy(guilt, beta);
    if (!invest)
        throw std::invalid_argument("a trustee policy needs the investment it responds to");
    return level_minus1_trustee_policy(*invest, guilt, beta);
}

/**
 * Level 0 trustee: the investor it models cannot be moved by its returns, so
 * looking ahead changes nothing and the immediate-utility softmax is optimal
 * for every horizon.
 */
inline PolicyDistribution level0_trustee_policy(InvestorAction invest, GuiltType guilt, double beta)
{
    return level_minus1_trustee_policy(invest, guilt, beta);
}

inline TrusteeResponseModel level0_trustee_responses(double beta)
{
    TrusteeResponseModel m;
    for (int g = 0; g < kGuiltTypes; ++g)
        for (int i = 0; i < kCategories; ++i)
            m[g][i] = level0_trustee_policy(InvestorAction(i), GuiltType(g), beta);
    return m;
}

// Recombining tree --------------------------------------------------------------

using OutcomeCounts = std::array<int, kOutcomes>;

/// Dense ranking of outcome multisets of a given size (combinatorial number system).
class MultisetIndex {
public:
    static constexpr int kMaxSize = kRounds;

    static std::uint64_t binomial(int n, int k)
    {
        static const auto table = [] {
            std::array<std::array<std::uint64_t, kMaxSize + 2>, kOutcomes + kMaxSize + 2> c{};
            for (int i = 0; i < static_cast<int>(c.size()); ++i) {
                c[i][0] = 1;
                for (int j = 1; j <= std::min(i, kMaxSize + 1); ++j)
                    c[i][j] = c[i - 1][j - 1] + (j <= i - 1 ? c[i - 1][j] : 0);
            }
            return c;
        }();
        if (k < 0 || n < 0 || k > n)
            return 0;
        return table[n][k];
    }

    /// Number of multisets with fewer than `size` elements.
    static std::uint64_t offset(int size) { return size == 0 ? 0 : binomial(kOutcomes - 1 + size, size - 1); }

    /// Position of the multiset among all multisets of at most its size.
    static std::uint64_t rank(const OutcomeCounts& counts)
    {
        std::uint64_t r = 0;
        int pos = 0;
        for (int t = 0; t < kOutcomes; ++t)
            for (int c = 0; c < counts[t]; ++c) {
                ++pos;
                r += binomial(t + pos - 1, pos);
            }
        return offset(pos) + r;
    }
};

/**
 * Exact action values of an investor facing trustees whose responses do not
 * depend on the history (level -1, or equivalently level 0).
 *
 * Beliefs depend only on the multiset of past exchanges, so the tree of
 * futures recombines: a node is identified by its outcome counts and by the
 * last round inside the horizon. Values of interior nodes are memoized in
 * dense per-(guilt, last round) tables indexed by multiset rank. Every stored
 * value is a pure function of its key, so results never depend on query order.
 */
class RecombiningInvestorSolver {
public:
    RecombiningInvestorSolver(const TrusteeResponseModel& responses, double beta) : responses_(responses), beta_(beta)
    {
        if (!(beta > 0.0))
            throw ConfigError("inverse temperature must be positive");
        for (int g = 0; g < kGuiltTypes; ++g)
            expected_[g] = expected_investor_utilities(GuiltType(g), responses_);
        for (int o = 0; o < kOutcomes; ++o) {
            const Exchange e = exchange_from_outcome(o);
            for (int g = 0; g < kGuiltTypes; ++g)
                likelihood_[o][g] = quantize(responses_[g][e.investment.category()][e.repayment.category()]);
        }
    }

    static RecombiningInvestorSolver level0(double beta)
    {
        return RecombiningInvestorSolver(level_minus1_trustee_responses(beta), beta);
    }

    double beta() const { return beta_; }
    const TrusteeResponseModel& responses() const { return responses_; }

    /// Belief about the trustee implied by a multiset of past exchanges.
    DirMultBelief belief(const OutcomeCounts& counts) const { return DirMultBelief(params(counts)); }

    QValues qvalues(GuiltType own, const OutcomeCounts& counts, int planning)
    {
        int round = 0;
        for (int c : counts)
            round += c;
        if (round >= kRounds)
            throw std::invalid_argument("no decision left after the final round");
        const int last = last_planned_round(round, planning);
        OutcomeCounts work = counts;
        return node_qvalues(own.index(), last, work, round, params(counts));
    }

    QValues qvalues(GuiltType own, const History& history, int planning)
    {
        return qvalues(own, history.outcome_counts(), planning);
    }

    PolicyDistribution policy(GuiltType own, const History& history, int planning)
    {
        return softmax_policy(qvalues(own, history, planning), beta_);
    }

    /// Stored interior values across all tables, for diagnostics.
    std::size_t memo_entries() const
    {
        std::size_t n = 0;
        for (const auto& per_guilt : tables_)
            for (const auto& t : per_guilt)
                n += static_cast<std::size_t>(std::count_if(t.begin(), t.end(), [](double v) { return !std::isnan(v); }));
        return n;
    }

private:
    // Increments live on a 2^-40 grid: sums of a few hundred of them are exact in
    // double precision, so a belief reached by any path is bit-identical.
    static double quantize(double likelihood) { return std::ldexp(std::nearbyint(std::ldexp(likelihood, 40)), -40); }

    GuiltVector params(const OutcomeCounts& counts) const
    {
        GuiltVector a{1.0, 1.0, 1.0};
        for (int o = 0; o < kOutcomes; ++o)
            for (int g = 0; g < kGuiltTypes; ++g)
                a[g] += counts[o] * likelihood_[o][g];
        return a;
    }

    QValues node_qvalues(int guilt, int last, OutcomeCounts& counts, int size, const GuiltVector& a)
    {
        const double total = a[0] + a[1] + a[2];
        const GuiltVector p{a[0] / total, a[1] / total, a[2] / total};
        const auto& e = expected_[guilt];
        QValues q;
        for (int i = 0; i < kCategories; ++i) {
            double v = p[0] * e[0][i] + p[1] * e[1][i] + p[2] * e[2][i];
            if (size < last) {
                const int n_ret = legal_trustee_count(InvestorAction(i));
                for (int j = 0; j < n_ret; ++j) {
                    const double prob =
                        p[0] * responses_[0][i][j] + p[1] * responses_[1][i][j] + p[2] * responses_[2][i][j];
                    const int o = Exchange{InvestorAction(i), TrusteeAction(j)}.outcome_index();
                    const GuiltVector& l = likelihood_[o];
                    const GuiltVector child{a[0] + l[0], a[1] + l[1], a[2] + l[2]};
                    ++counts[o];
                    v += prob * node_value(guilt, last, counts, size + 1, child);
                    --counts[o];
                }
            }
            q[i] = v;
        }
        return q;
    }

    // Value of a node on the horizon: immediate expected utilities only.
    double leaf_value(int guilt, const GuiltVector& a) const
    {
        const double total = a[0] + a[1] + a[2];
        const double p0 = a[0] / total, p1 = a[1] / total, p2 = a[2] / total;
        const auto& e = expected_[guilt];
        std::array<double, kCategories> r;
        double top = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < kCategories; ++i) {
            r[i] = p0 * e[0][i] + p1 * e[1][i] + p2 * e[2][i];
            top = std::max(top, r[i]);
        }
        double z = 0.0, v = 0.0;
        for (int i = 0; i < kCategories; ++i) {
            const double w = std::exp(beta_ * (r[i] - top));
            z += w;
            v += w * r[i];
        }
        return v / z;
    }

    double node_value(int guilt, int last, OutcomeCounts& counts, int size, const GuiltVector& a)
    {
        if (size == last)
            return leaf_value(guilt, a);
        auto& table = tables_[guilt][last];
        if (table.empty())
            table.assign(MultisetIndex::offset(last), std::numeric_limits<double>::quiet_NaN());
        const std::uint64_t idx = MultisetIndex::rank(counts);
        if (std::isnan(table[idx]))
            table[idx] = softmax_value(node_qvalues(guilt, last, counts, size, a).view(), beta_);
        return table[idx];
    }

    TrusteeResponseModel responses_;
    double beta_;
    std::array<std::array<std::array<double, kCategories>, kGuiltTypes>, kGuiltTypes> expected_{};
    std::array<GuiltVector, kOutcomes> likelihood_{};
    std::array<std::array<std::vector<double>, kRounds>, kGuiltTypes> tables_;
};

} // namespace trust
