#pragma once

// Physical layer of the 10-round trust task: action grids, monetary payoffs,
// Fehr-Schmidt utilities, classification of raw amounts and exchange histories.

#include <array>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace trust {

inline constexpr int kRounds = 10;
inline constexpr int kEndowment = 20;
inline constexpr int kMultiplier = 3;
inline constexpr int kCategories = 5;
inline constexpr int kGuiltTypes = 3;

enum class Role { investor, trustee };

inline constexpr Role partner_of(Role r) { return r == Role::investor ? Role::trustee : Role::investor; }

inline std::string_view to_string(Role r) { return r == Role::investor ? "investor" : "trustee"; }

inline Role role_from_string(std::string_view s)
{
    if (s == "investor" || s == "I" || s == "i")
        return Role::investor;
    if (s == "trustee" || s == "T" || s == "t")
        return Role::trustee;
    throw std::invalid_argument("unknown role '" + std::string(s) + "'");
}

/**
 * Money measured in half-units. Every payoff of the quantized game is a
 * multiple of 1/2 (e.g. 1/6 of a tripled 5 is 2.5), so integer half-units
 * keep payoff identities exact.
 */
struct Money {
    int half_units = 0;

    static constexpr Money whole(int units) { return Money{2 * units}; }
    constexpr double value() const { return 0.5 * half_units; }

    friend constexpr Money operator+(Money a, Money b) { return Money{a.half_units + b.half_units}; }
    friend constexpr Money operator-(Money a, Money b) { return Money{a.half_units - b.half_units}; }
    constexpr Money& operator+=(Money o)
    {
        half_units += o.half_units;
        return *this;
    }
    friend constexpr bool operator==(Money, Money) = default;
    friend constexpr auto operator<=>(Money, Money) = default;
};

/// Investor's share of the endowment, category i sends i/4 of 20.
class InvestorAction {
public:
    constexpr InvestorAction() = default;
    constexpr explicit InvestorAction(int category) : category_(category)
    {
        if (category < 0 || category >= kCategories)
            throw std::domain_error("investor category out of range: " + std::to_string(category));
    }

    constexpr int category() const { return category_; }
    constexpr double fraction() const { return category_ / 4.0; }
    /// Amount sent, always one of {0,5,10,15,20}.
    constexpr int amount() const { return kEndowment * category_ / 4; }
    constexpr bool sends_nothing() const { return category_ == 0; }

    friend constexpr bool operator==(InvestorAction, InvestorAction) = default;

private:
    int category_ = 0;
};

/// Trustee's share of the tripled investment, category j returns j/6.
class TrusteeAction {
public:
    constexpr TrusteeAction() = default;
    constexpr explicit TrusteeAction(int category) : category_(category)
    {
        if (category < 0 || category >= kCategories)
            throw std::domain_error("trustee category out of range: " + std::to_string(category));
    }

    constexpr int category() const { return category_; }
    constexpr double fraction() const { return category_ / 6.0; }

    friend constexpr bool operator==(TrusteeAction, TrusteeAction) = default;

private:
    int category_ = 0;
};

class GuiltType {
public:
    constexpr GuiltType() = default;
    constexpr explicit GuiltType(int index) : index_(index)
    {
        if (index < 0 || index >= kGuiltTypes)
            throw std::domain_error("guilt index out of range: " + std::to_string(index));
    }

    static constexpr GuiltType greedy() { return GuiltType(0); }
    static constexpr GuiltType pragmatic() { return GuiltType(1); }
    static constexpr GuiltType guilty() { return GuiltType(2); }

    /// Accepts only the three grid values 0, 0.4 and 1.
    static GuiltType from_value(double alpha)
    {
        constexpr std::array<double, kGuiltTypes> grid{0.0, 0.4, 1.0};
        for (int i = 0; i < kGuiltTypes; ++i)
            if (std::abs(alpha - grid[i]) < 1e-9)
                return GuiltType(i);
        throw std::domain_error("guilt must be one of {0, 0.4, 1}, got " + std::to_string(alpha));
    }

    constexpr int index() const { return index_; }
    constexpr double value() const
    {
        constexpr std::array<double, kGuiltTypes> grid{0.0, 0.4, 1.0};
        return grid[index_];
    }
    std::string_view label() const
    {
        constexpr std::array<std::string_view, kGuiltTypes> names{"greedy", "pragmatic", "guilty"};
        return names[index_];
    }

    friend constexpr bool operator==(GuiltType, GuiltType) = default;

private:
    int index_ = 0;
};

inline constexpr std::array<GuiltType, kGuiltTypes> all_guilt_types{GuiltType(0), GuiltType(1), GuiltType(2)};

inline constexpr int legal_trustee_count(InvestorAction invest) { return invest.sends_nothing() ? 1 : kCategories; }

inline std::vector<TrusteeAction> legal_trustee_actions(InvestorAction invest)
{
    std::vector<TrusteeAction> out;
    for (int j = 0; j < legal_trustee_count(invest); ++j)
        out.emplace_back(j);
    return out;
}

inline constexpr void check_legal(InvestorAction invest, TrusteeAction ret)
{
    if (invest.sends_nothing() && ret.category() != 0)
        throw std::domain_error("only the degenerate return is legal after a zero investment");
}

// chi^I = 20 - 20 aI + 60 aI aT, in half-units: 40 - 10 i + 5 i j
inline constexpr Money investor_payoff(InvestorAction invest, TrusteeAction ret)
{
    check_legal(invest, ret);
    const int i = invest.category(), j = ret.category();
    return Money{40 - 10 * i + 5 * i * j};
}

// chi^T = 60 aI - 60 aI aT, in half-units: 30 i - 5 i j
inline constexpr Money trustee_payoff(InvestorAction invest, TrusteeAction ret)
{
    check_legal(invest, ret);
    const int i = invest.category(), j = ret.category();
    return Money{30 * i - 5 * i * j};
}

/// Endowment plus the experimenter's doubling of what was sent.
inline constexpr Money round_pot(InvestorAction invest) { return Money::whole(kEndowment) + Money{20 * invest.category()}; }

inline double fehr_schmidt_utility(Role role, InvestorAction invest, TrusteeAction ret, GuiltType guilt)
{
    const double inv = investor_payoff(invest, ret).value();
    const double tru = trustee_payoff(invest, ret).value();
    const double self = role == Role::investor ? inv : tru;
    const double other = role == Role::investor ? tru : inv;
    const double ahead = self - other;
    return self - guilt.value() * (ahead > 0.0 ? ahead : 0.0);
}

/// Precomputed utilities [role][guilt][investment][return]; illegal cells hold 0.
struct UtilityTable {
    std::array<std::array<std::array<std::array<double, kCategories>, kCategories>, kGuiltTypes>, 2> u{};

    UtilityTable()
    {
        for (int r = 0; r < 2; ++r)
            for (int g = 0; g < kGuiltTypes; ++g)
                for (int i = 0; i < kCategories; ++i)
                    for (int j = 0; j < legal_trustee_count(InvestorAction(i)); ++j)
                        u[r][g][i][j] = fehr_schmidt_utility(r == 0 ? Role::investor : Role::trustee, InvestorAction(i),
                                                             TrusteeAction(j), GuiltType(g));
    }

    double operator()(Role role, int guilt, int invest, int ret) const
    {
        return u[role == Role::investor ? 0 : 1][guilt][invest][ret];
    }

    static const UtilityTable& instance()
    {
        static const UtilityTable table;
        return table;
    }
};

// Raw amounts -----------------------------------------------------------------

/// Nearest of the centers {0,5,10,15,20}; integer inputs never tie.
inline InvestorAction classify_investment(int amount)
{
    if (amount < 0 || amount > kEndowment)
        throw std::domain_error("investment must lie in [0,20], got " + std::to_string(amount));
    int best = 0;
    for (int c = 1; c < kCategories; ++c)
        if (std::abs(amount - 5 * c) < std::abs(amount - 5 * best))
            best = c;
    return InvestorAction(best);
}

/**
 * Nearest return fraction j/6 of the tripled investment. Distances are
 * compared as |2*amount - j*investment| so the rule stays in integers;
 * ties resolve to the lower category.
 */
inline TrusteeAction classify_return(int amount, int investment)
{
    if (investment < 0 || investment > kEndowment)
        throw std::domain_error("investment must lie in [0,20], got " + std::to_string(investment));
    if (amount < 0 || amount > kMultiplier * investment)
        throw std::domain_error("return " + std::to_string(amount) + " exceeds the tripled investment " +
                                std::to_string(kMultiplier * investment));
    if (investment == 0)
        return TrusteeAction(0);
    int best = 0;
    for (int j = 1; j < kCategories; ++j)
        if (std::abs(2 * amount - j * investment) < std::abs(2 * amount - best * investment))
            best = j;
    return TrusteeAction(best);
}

// Histories -------------------------------------------------------------------

struct Exchange {
    InvestorAction investment;
    TrusteeAction repayment;

    friend constexpr bool operator==(const Exchange&, const Exchange&) = default;

    /// Index among the 21 distinct outcomes (a zero investment collapses to one).
    constexpr int outcome_index() const
    {
        return investment.sends_nothing() ? 0 : 1 + (investment.category() - 1) * kCategories + repayment.category();
    }
};

inline constexpr int kOutcomes = 1 + (kCategories - 1) * kCategories;

inline constexpr Exchange exchange_from_outcome(int outcome)
{
    if (outcome == 0)
        return Exchange{InvestorAction(0), TrusteeAction(0)};
    return Exchange{InvestorAction(1 + (outcome - 1) / kCategories), TrusteeAction((outcome - 1) % kCategories)};
}

/**
 * Completed exchanges plus, between the two moves of a round, the pending
 * investment the trustee is responding to.
 */
class History {
public:
    History() = default;

    int rounds() const { return size_; }
    bool has_pending() const { return pending_ >= 0; }
    InvestorAction pending() const
    {
        if (!has_pending())
            throw std::logic_error("history has no pending investment");
        return InvestorAction(pending_);
    }
    bool complete() const { return size_ == kRounds && !has_pending(); }
    Role to_move() const { return has_pending() ? Role::trustee : Role::investor; }

    Exchange operator[](int round) const { return exchange_from_outcome_pair(pairs_[round]); }

    History& invest(InvestorAction a)
    {
        if (has_pending())
            throw std::logic_error("investment already pending");
        if (size_ >= kRounds)
            throw std::logic_error("game is over");
        pending_ = static_cast<std::int8_t>(a.category());
        return *this;
    }

    History& repay(TrusteeAction r)
    {
        const InvestorAction inv = pending();
        check_legal(inv, r);
        pairs_[size_++] = static_cast<std::uint8_t>(inv.category() * kCategories + r.category());
        pending_ = -1;
        return *this;
    }

    History& push(Exchange e) { return invest(e.investment).repay(e.repayment); }

    History with_investment(InvestorAction a) const
    {
        History h = *this;
        h.invest(a);
        return h;
    }
    History with_exchange(Exchange e) const
    {
        History h = *this;
        h.push(e);
        return h;
    }

    /// First `rounds` exchanges, without pending investment.
    History prefix(int rounds) const
    {
        History h;
        for (int r = 0; r < rounds; ++r)
            h.push((*this)[r]);
        return h;
    }

    /// Injective 64-bit encoding: 4 bits length, 3 bits pending, 5 bits per exchange.
    std::uint64_t key() const
    {
        std::uint64_t k = static_cast<std::uint64_t>(size_) | (static_cast<std::uint64_t>(pending_ + 1) << 4);
        for (int r = 0; r < size_; ++r)
            k |= static_cast<std::uint64_t>(pairs_[r]) << (7 + 5 * r);
        return k;
    }

    /// Counts of each of the 21 exchange outcomes.
    std::array<int, kOutcomes> outcome_counts() const
    {
        std::array<int, kOutcomes> c{};
        for (int r = 0; r < size_; ++r)
            ++c[(*this)[r].outcome_index()];
        return c;
    }

    friend bool operator==(const History& a, const History& b) { return a.key() == b.key(); }

private:
    static Exchange exchange_from_outcome_pair(std::uint8_t p)
    {
        return Exchange{InvestorAction(p / kCategories), TrusteeAction(p % kCategories)};
    }

    std::array<std::uint8_t, kRounds> pairs_{};
    int size_ = 0;
    std::int8_t pending_ = -1;
};

} // namespace trust
