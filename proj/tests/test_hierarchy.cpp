#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>
#include <random>
#include <set>

#include "oracles.hpp"
#include "trust/hierarchy.hpp"

using namespace trust;

namespace {

constexpr double kBeta = kDefaultBeta;

History random_history(std::mt19937_64& rng, int rounds)
{
    std::uniform_int_distribution<int> pick(0, kCategories - 1);
    History h;
    for (int t = 0; t < rounds; ++t) {
        const int i = pick(rng);
        h.push({InvestorAction(i), TrusteeAction(i == 0 ? 0 : pick(rng))});
    }
    return h;
}

std::vector<oracle::Step> steps_of(const History& h)
{
    std::vector<oracle::Step> s;
    for (int t = 0; t < h.rounds(); ++t)
        s.push_back({h[t].investment.category(), h[t].repayment.category()});
    return s;
}

} // namespace

// Softmax ------------------------------------------------------------------------

TEST(Softmax, EqualValuesGiveUniform)
{
    const auto p = softmax_policy(std::vector<double>{3, 3, 3, 3, 3}, kBeta);
    for (int a = 0; a < 5; ++a)
        EXPECT_NEAR(p[a], 0.2, 1e-15);
}

TEST(Softmax, ClosedFormTwoActions)
{
    const auto p = softmax_policy(std::vector<double>{0.0, std::numbers::ln2 / kBeta}, kBeta);
    EXPECT_NEAR(p[0], 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(p[1], 2.0 / 3.0, 1e-12);
}

TEST(Softmax, LargeBetaPicksMax)
{
    const auto p = softmax_policy(std::vector<double>{1.0, 2.0, 1.5}, 1e6);
    EXPECT_EQ(p[1], 1.0);
    EXPECT_EQ(p[0], 0.0);
}

TEST(Softmax, MatchesNaiveAndIgnoresShifts)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-40, 40);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> q(5);
        for (double& v : q)
            v = u(rng);
        const auto p = softmax_policy(q, kBeta);
        const auto ref = oracle::naive_softmax(q, kBeta);
        std::vector<double> shifted = q;
        const double c = u(rng) * 1000;
        for (double& v : shifted)
            v += c;
        const auto s = softmax_policy(shifted, kBeta);
        double total = 0;
        for (int a = 0; a < 5; ++a) {
            EXPECT_NEAR(p[a], ref[a], 1e-12);
            EXPECT_NEAR(p[a], s[a], 1e-9);
            total += p[a];
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(Softmax, HugeValuesStayFinite)
{
    const auto p = softmax_policy(std::vector<double>{1e6, 1e6 + 3}, kBeta);
    EXPECT_TRUE(std::isfinite(p[0]) && std::isfinite(p[1]));
    EXPECT_NEAR(p[0] + p[1], 1.0, 1e-15);
}

// Agents --------------------------------------------------------------------------

TEST(AgentSpec, GridValidation)
{
    EXPECT_NO_THROW((AgentSpec{Role::investor, 2, GuiltType(2), 7}.validate()));
    EXPECT_NO_THROW((AgentSpec{Role::trustee, 1, GuiltType(1), 2}.validate()));
    EXPECT_THROW((AgentSpec{Role::investor, 1, GuiltType(0), 2}.validate()), ConfigError);
    EXPECT_THROW((AgentSpec{Role::trustee, 2, GuiltType(0), 2}.validate()), ConfigError);
    EXPECT_THROW((AgentSpec{Role::trustee, 1, GuiltType(0), 5}.validate()), ConfigError);
    EXPECT_NO_THROW((AgentSpec{Role::trustee, 1, GuiltType(0), 5}.validate(PlanningRange::extended)));
    EXPECT_THROW((AgentSpec{Role::trustee, 0, GuiltType(0), 2}.validate()), ConfigError);
    EXPECT_EQ((AgentSpec{Role::trustee, 0, GuiltType(0), 7}.normalized().planning), 0);
}

TEST(AgentSpec, Parsing)
{
    const AgentSpec s = parse_agent_spec("investor:2,1,7");
    EXPECT_EQ(s, (AgentSpec{Role::investor, 2, GuiltType::guilty(), 7}));
    EXPECT_EQ(parse_agent_spec("trustee:0,0.4,7").planning, 0);
    EXPECT_EQ(parse_agent_spec("1,0,2", Role::trustee).role, Role::trustee);
    EXPECT_THROW(parse_agent_spec("investor:2,0.5,7"), ConfigError);
    EXPECT_THROW(parse_agent_spec("investor:2,1"), ConfigError);
    EXPECT_THROW(parse_agent_spec("2,1,7"), ConfigError);
    EXPECT_THROW(parse_agent_spec("investor:x,1,7"), ConfigError);
    EXPECT_THROW(parse_agent_spec("banker:2,1,7"), std::invalid_argument);
}

TEST(AgentSpec, PartnerIsOneLevelDownWithSameHorizon)
{
    const AgentSpec s{Role::investor, 2, GuiltType(2), 7};
    const AgentSpec p = s.partner_model(GuiltType(0));
    EXPECT_EQ(p.role, Role::trustee);
    EXPECT_EQ(p.tom, 1);
    EXPECT_EQ(p.planning, 7);
    EXPECT_EQ(p.guilt, GuiltType(0));
}

TEST(IntentionalModel, DepthFollowsLevel)
{
    for (int k = -1; k <= 2; ++k) {
        const IntentionalModel m(AgentSpec{Role::investor, k, GuiltType(1), 2});
        EXPECT_EQ(m.depth(), k + 1);
    }
    const IntentionalModel bottom(AgentSpec{Role::trustee, -1, GuiltType(0), 0});
    EXPECT_EQ(bottom.nested(), nullptr);
    IntentionalModel a(AgentSpec{Role::investor, 2, GuiltType(1), 2});
    IntentionalModel b = a;
    EXPECT_EQ(b.depth(), 3);
    EXPECT_EQ(b.nested()->spec().role, Role::trustee);
    EXPECT_NE(a.nested(), b.nested());
}

// Survival ------------------------------------------------------------------------

TEST(Survival, WorkedValues)
{
    for (int r = 0; r < kRounds; ++r)
        EXPECT_EQ(survival(0, r, {0}), 1);
    EXPECT_EQ(survival(3, 2, {2}), 0);
    EXPECT_EQ(survival(2, 2, {2}), 1);
    EXPECT_EQ(survival(2, 9, {7}), 0);
    EXPECT_EQ(survival(1, 8, {7}), 1);
    EXPECT_THROW(survival(-1, 0, {2}), std::invalid_argument);
}

TEST(Survival, MatchesDefinitionEverywhere)
{
    for (int p = 0; p <= 9; ++p)
        for (int r = 0; r < kRounds; ++r)
            for (int k = 0; k < 12; ++k) {
                EXPECT_EQ(survival(k, r, {p}), (k <= p && r + k <= 9) ? 1 : 0);
                if (survival(k, r, {p})) {
                    EXPECT_LE(r + k, last_planned_round(r, p));
                }
            }
}

// Level -1 and level 0 ------------------------------------------------------------

TEST(LevelMinusOne, TrusteeMatchesReference)
{
    for (GuiltType g : all_guilt_types)
        for (int i = 0; i < kCategories; ++i) {
            const auto p = level_minus1_policy(Role::trustee, g, kBeta, InvestorAction(i));
            const auto ref = oracle::reactive_trustee(i, g.value(), kBeta);
            ASSERT_EQ(p.count, static_cast<int>(ref.size()));
            for (int j = 0; j < p.count; ++j)
                EXPECT_NEAR(p[j], ref[j], 1e-12);
        }
    EXPECT_EQ(level_minus1_policy(Role::trustee, GuiltType(1), kBeta, InvestorAction(0)).count, 1);
    EXPECT_THROW(level_minus1_policy(Role::trustee, GuiltType(1), kBeta), std::invalid_argument);
}

TEST(LevelMinusOne, GuiltyTrusteeSplitsFairly)
{
    EXPECT_EQ(level_minus1_trustee_policy(InvestorAction(4), GuiltType::guilty(), kBeta).mode(), 3);
    EXPECT_EQ(level0_trustee_policy(InvestorAction(4), GuiltType::greedy(), kBeta).mode(), 0);
}

TEST(LevelMinusOne, InvestorMatchesReference)
{
    for (GuiltType g : all_guilt_types) {
        const auto p = level_minus1_policy(Role::investor, g, kBeta);
        const auto ref = oracle::reactive_investor(g.value(), kBeta);
        for (int i = 0; i < kCategories; ++i)
            EXPECT_NEAR(p[i], ref[i], 1e-12);
    }
}

TEST(LevelZeroInvestor, HorizonZeroIsImmediateExpectation)
{
    auto solver = RecombiningInvestorSolver::level0(kBeta);
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const History h = random_history(rng, trial % kRounds);
        const DirMultBelief b = solver.belief(h.outcome_counts());
        const auto p = b.predictive();
        for (GuiltType own : all_guilt_types) {
            const QValues q = solver.qvalues(own, h, 0);
            for (int i = 0; i < kCategories; ++i) {
                double e = 0.0;
                for (int g = 0; g < 3; ++g) {
                    const auto r = oracle::reactive_trustee(i, oracle::kAlphas[g], kBeta);
                    for (int j = 0; j < oracle::legal_returns(i); ++j)
                        e += p[g] * r[j] * oracle::utility(true, i, j, own.value());
                }
                EXPECT_NEAR(q[i], e, 1e-9);
            }
        }
    }
}

TEST(LevelZeroInvestor, GreedyMyopicInvestsNothing)
{
    auto solver = RecombiningInvestorSolver::level0(kBeta);
    EXPECT_EQ(solver.qvalues(GuiltType::greedy(), History{}, 0).argmax(), 0);
}

TEST(LevelZeroInvestor, MatchesOrderedExpectimax)
{
    auto solver = RecombiningInvestorSolver::level0(kBeta);
    auto trustee = [](int g, int i) { return oracle::reactive_trustee(i, oracle::kAlphas[g], kBeta); };
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 12; ++trial) {
        const int rounds = std::uniform_int_distribution<int>(0, 9)(rng);
        const History h = random_history(rng, rounds);
        const int planning = std::min(2, trial % 3);
        const GuiltType own(trial % 3);
        oracle::ExpectimaxInvestor<decltype(trustee)> ref{trustee, own.value(), kBeta};
        auto steps = steps_of(h);
        const auto expected = ref.qvalues(steps, last_planned_round(rounds, planning));
        const QValues q = solver.qvalues(own, h, planning);
        for (int i = 0; i < kCategories; ++i)
            EXPECT_NEAR(q[i], expected[i], 1e-9 * std::max(1.0, std::abs(expected[i]))) << "trial " << trial;
    }
}

// Theorem 1: only the multiset of past exchanges matters to a level 0 investor.
TEST(LevelZeroInvestor, InvariantUnderHistoryPermutation)
{
    auto solver = RecombiningInvestorSolver::level0(kBeta);
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        const int rounds = std::uniform_int_distribution<int>(2, 9)(rng);
        const History h = random_history(rng, rounds);
        std::vector<Exchange> ex;
        for (int t = 0; t < rounds; ++t)
            ex.push_back(h[t]);
        std::shuffle(ex.begin(), ex.end(), rng);
        History permuted;
        for (const auto& e : ex)
            permuted.push(e);
        const int planning = rounds >= 5 ? 7 : 2;
        const GuiltType own(trial % 3);
        const QValues a = solver.qvalues(own, h, planning);
        const QValues b = solver.qvalues(own, permuted, planning);
        for (int i = 0; i < kCategories; ++i)
            EXPECT_EQ(a[i], b[i]);
    }
}

// Theorem 2: a level 0 trustee gains nothing from planning.
TEST(LevelZeroTrustee, PlanningDoesNotChangePolicy)
{
    for (GuiltType g : all_guilt_types)
        for (int i = 0; i < kCategories; ++i) {
            const auto base = level0_trustee_policy(InvestorAction(i), g, kBeta);
            for (int steps : {1, 2}) {
                const auto planned = oracle::PlanningTrustee{g.value(), kBeta}.policy(i, steps);
                ASSERT_EQ(static_cast<int>(planned.size()), base.count);
                for (int j = 0; j < base.count; ++j)
                    EXPECT_NEAR(planned[j], base[j], 1e-9);
            }
        }
}

// Theorem 3: a level 1 investor behaves exactly like a level 0 investor.
TEST(LevelOneInvestor, SameAsLevelZero)
{
    auto level0 = RecombiningInvestorSolver::level0(kBeta);
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 9; ++trial) {
        const int rounds = std::uniform_int_distribution<int>(0, 9)(rng);
        const History h = random_history(rng, rounds);
        const int planning = std::min(2, trial % 3);
        const GuiltType own(trial % 3);
        // level 1 investor: its partner is a planning level 0 trustee
        std::array<std::array<std::vector<double>, kCategories>, 3> table;
        for (int g = 0; g < 3; ++g)
            for (int i = 0; i < kCategories; ++i)
                table[g][i] = oracle::PlanningTrustee{oracle::kAlphas[g], kBeta}.policy(i, std::min(planning, 1));
        auto trustee = [&table](int g, int i) { return table[g][i]; };
        oracle::ExpectimaxInvestor<decltype(trustee)> level1{trustee, own.value(), kBeta};
        auto steps = steps_of(h);
        const auto q1 = level1.qvalues(steps, last_planned_round(rounds, planning));
        const auto p1 = oracle::naive_softmax(q1, kBeta);
        const auto p0 = level0.policy(own, h, planning);
        for (int i = 0; i < kCategories; ++i)
            EXPECT_NEAR(p0[i], p1[i], 1e-9) << "trial " << trial;
    }
}

TEST(LevelOneInvestor, SolverWithLevelZeroResponsesAgrees)
{
    auto level0 = RecombiningInvestorSolver::level0(kBeta);
    RecombiningInvestorSolver level1(level0_trustee_responses(kBeta), kBeta);
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 30; ++trial) {
        const int rounds = std::uniform_int_distribution<int>(3, 9)(rng);
        const History h = random_history(rng, rounds);
        for (int planning : {0, 2, 7}) {
            const auto a = level0.policy(GuiltType(trial % 3), h, planning);
            const auto b = level1.policy(GuiltType(trial % 3), h, planning);
            for (int i = 0; i < kCategories; ++i)
                EXPECT_NEAR(a[i], b[i], 1e-9);
        }
    }
}

TEST(LevelZeroInvestor, QueryOrderDoesNotMatter)
{
    auto fresh = RecombiningInvestorSolver::level0(kBeta);
    auto used = RecombiningInvestorSolver::level0(kBeta);
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 10; ++trial)
        (void)used.qvalues(GuiltType(1), random_history(rng, 6), 7);
    const History h = random_history(rng, 6);
    EXPECT_EQ(fresh.qvalues(GuiltType(1), h, 7), used.qvalues(GuiltType(1), h, 7));
}

TEST(MultisetIndex, RankIsDenseAndInjective)
{
    // all multisets of size <= 2 over the 21 outcomes
    std::set<std::uint64_t> ranks;
    OutcomeCounts empty{};
    ranks.insert(MultisetIndex::rank(empty));
    for (int a = 0; a < kOutcomes; ++a) {
        OutcomeCounts c{};
        ++c[a];
        ranks.insert(MultisetIndex::rank(c));
        for (int b = a; b < kOutcomes; ++b) {
            OutcomeCounts d = c;
            ++d[b];
            const auto r = MultisetIndex::rank(d);
            EXPECT_GE(r, MultisetIndex::offset(2));
            EXPECT_LT(r, MultisetIndex::offset(3));
            ranks.insert(r);
        }
    }
    EXPECT_EQ(ranks.size(), MultisetIndex::offset(3));
    EXPECT_EQ(*ranks.rbegin() + 1, MultisetIndex::offset(3));
}
