#include <gtest/gtest.h>

#include <set>

#include "oracles.hpp"
#include "trust/inference.hpp"

using namespace trust;

namespace {

constexpr double kBeta = kDefaultBeta;

AgentSpec investor(int tom, int guilt, int planning) { return {Role::investor, tom, GuiltType(guilt), planning}; }
AgentSpec trustee(int tom, int guilt, int planning) { return {Role::trustee, tom, GuiltType(guilt), planning}; }

PlannerConfig cheap(int n = 100, std::uint64_t seed = 8)
{
    PlannerConfig c;
    c.simulations = n;
    c.seed = seed;
    return c;
}

GameRecord record_of(const std::vector<std::pair<int, int>>& moves)
{
    GameRecord r;
    for (auto [i, j] : moves)
        r.rounds.push_back({InvestorAction(i), TrusteeAction(j)});
    return r;
}

GameRecord mixed_record()
{
    return record_of({{4, 2}, {0, 0}, {3, 3}, {2, 1}, {0, 0}, {1, 4}, {4, 4}, {4, 0}, {2, 2}, {3, 1}});
}

PolicyDistribution uniform_policy(const History& h)
{
    return PolicyDistribution::uniform(h.has_pending() ? legal_trustee_count(h.pending()) : kCategories);
}

} // namespace

TEST(Likelihood, UniformBaseline)
{
    EXPECT_NEAR(uniform_baseline_nll(), 10.0 * std::log(5.0), 1e-12);
    EXPECT_NEAR(uniform_baseline_nll(), 16.094379124341003, 1e-12);
    const GameRecord r = mixed_record();
    EXPECT_NEAR(role_nll(r, Role::investor, uniform_policy).nll, uniform_baseline_nll(), 1e-12);
    // the two zero investments leave the trustee no choice
    EXPECT_NEAR(role_nll(r, Role::trustee, uniform_policy).nll, 8.0 * std::log(5.0), 1e-12);
}

TEST(Likelihood, DegenerateTrusteeTurnsAddNothing)
{
    const GameRecord r = record_of(std::vector<std::pair<int, int>>(10, {0, 0}));
    const RoleLikelihood l = role_nll(r, Role::trustee, [](const History&) -> PolicyDistribution {
        ADD_FAILURE() << "a forced turn should not query the policy";
        return PolicyDistribution::uniform(kCategories);
    });
    EXPECT_EQ(l.nll, 0.0);
    EXPECT_EQ(l.likelihoods, std::vector<double>(10, 1.0));
}

TEST(Likelihood, PolicyQueriedAtTheFacedHistory)
{
    const GameRecord r = mixed_record();
    std::vector<std::uint64_t> investor_keys, trustee_keys;
    (void)role_nll(r, Role::investor, [&](const History& h) {
        EXPECT_EQ(h.to_move(), Role::investor);
        investor_keys.push_back(h.key());
        return uniform_policy(h);
    });
    (void)role_nll(r, Role::trustee, [&](const History& h) {
        EXPECT_EQ(h.to_move(), Role::trustee);
        trustee_keys.push_back(h.key());
        return uniform_policy(h);
    });
    const History full = r.history();
    ASSERT_EQ(investor_keys.size(), 10u);
    for (int t = 0; t < kRounds; ++t)
        EXPECT_EQ(investor_keys[t], full.prefix(t).key());
    EXPECT_EQ(trustee_keys.size(), 8u);
    EXPECT_EQ(trustee_keys[0], full.prefix(0).with_investment(InvestorAction(4)).key());
}

TEST(Likelihood, ZeroProbabilityIsFloored)
{
    const GameRecord r = record_of(std::vector<std::pair<int, int>>(10, {1, 1}));
    const RoleLikelihood l = role_nll(r, Role::investor, [](const History&) {
        PolicyDistribution p;
        p.values = {1.0, 0.0, 0.0, 0.0, 0.0};
        return p;
    });
    EXPECT_EQ(l.clamped, 10);
    EXPECT_NEAR(l.nll, -10.0 * std::log(kProbabilityFloor), 1e-9);
}

TEST(Likelihood, LevelZeroCellsMatchTheOracle)
{
    PolicyEngine engine(cheap());
    const GameRecord r = mixed_record();
    for (int g = 0; g < kGuiltTypes; ++g) {
        double expected = 0.0;
        for (const Exchange& e : r.rounds)
            if (!e.investment.sends_nothing())
                expected -= std::log(
                    oracle::reactive_trustee(e.investment.category(), oracle::kAlphas[g], kBeta)[e.repayment.category()]);
        EXPECT_NEAR(cell_nll(engine, r, trustee(0, g, 0)).nll, expected, 1e-9);
    }
    // a myopic investor: immediate expectation under the running belief
    const GameRecord all_in = record_of(std::vector<std::pair<int, int>>(10, {4, 2}));
    std::array<double, 3> a{1.0, 1.0, 1.0};
    double expected = 0.0;
    for (int t = 0; t < kRounds; ++t) {
        std::vector<double> q(5, 0.0);
        for (int i = 0; i < 5; ++i)
            for (int g = 0; g < kGuiltTypes; ++g) {
                const auto r = oracle::reactive_trustee(i, oracle::kAlphas[g], kBeta);
                for (int j = 0; j < oracle::legal_returns(i); ++j)
                    q[i] += a[g] / (a[0] + a[1] + a[2]) * r[j] * oracle::utility(true, i, j, 0.4);
            }
        expected -= std::log(oracle::naive_softmax(q, kBeta)[4]);
        for (int g = 0; g < kGuiltTypes; ++g)
            a[g] += oracle::reactive_trustee(4, oracle::kAlphas[g], kBeta)[2];
    }
    EXPECT_NEAR(cell_nll(engine, all_in, investor(0, 1, 0)).nll, expected, 1e-9);
}

TEST(Fit, SingleCellGrid)
{
    PolicyEngine engine(cheap());
    ParameterGrid grid{{investor(0, 0, 2)}, {trustee(0, 2, 0)}};
    const FitResult f = fit(engine, mixed_record(), grid);
    EXPECT_EQ(f.investor.best, 0);
    EXPECT_EQ(f.investor.ties, std::vector<int>{0});
    EXPECT_EQ(f.trustee.best_cell(), trustee(0, 2, 0));
    EXPECT_EQ(f.investor.likelihoods.size(), 10u);
    EXPECT_THROW(fit(engine, mixed_record(), ParameterGrid{{}, {trustee(0, 0, 0)}}), ConfigError);
}

TEST(Fit, BestCellMinimizesAndRankingIsSorted)
{
    PolicyEngine engine(cheap());
    ParameterGrid grid;
    for (int g = 0; g < kGuiltTypes; ++g)
        for (int p : {0, 2})
            grid.investor.push_back(investor(0, g, p));
    for (int g = 0; g < kGuiltTypes; ++g)
        grid.trustee.push_back(trustee(0, g, 0));
    const FitResult f = fit(engine, mixed_record(), grid);
    for (const RoleFit* rf : {&f.investor, &f.trustee}) {
        const auto rank = rf->ranking();
        for (std::size_t k = 1; k < rank.size(); ++k)
            EXPECT_LE(rf->cells[rank[k - 1]].nll, rf->cells[rank[k]].nll);
        for (const auto& c : rf->cells)
            EXPECT_GE(c.nll, rf->cells[rf->best].nll);
    }
}

TEST(Fit, TrueCellWinsInAggregate)
{
    // Exact level 0 agents: summed over records the generating cell has the lowest NLL.
    PolicyEngine engine(cheap());
    const AgentSpec I = investor(0, 2, 2), T = trustee(0, 0, 0);
    std::vector<AgentSpec> cells;
    for (int g = 0; g < kGuiltTypes; ++g)
        for (int p : {0, 2})
            cells.push_back(investor(0, g, p));
    std::vector<double> totals(cells.size(), 0.0);
    std::vector<double> trustee_totals(kGuiltTypes, 0.0);
    for (std::uint64_t s = 0; s < 20; ++s) {
        const GameRecord rec = play_dyad(engine, I, T, s);
        for (std::size_t c = 0; c < cells.size(); ++c)
            totals[c] += cell_nll(engine, rec, cells[c]).nll;
        for (int g = 0; g < kGuiltTypes; ++g)
            trustee_totals[g] += cell_nll(engine, rec, trustee(0, g, 0)).nll;
    }
    const auto best = std::min_element(totals.begin(), totals.end()) - totals.begin();
    EXPECT_EQ(cells[best].guilt, I.guilt);
    EXPECT_EQ(std::min_element(trustee_totals.begin(), trustee_totals.end()) - trustee_totals.begin(), 0);
}

TEST(Grid, FullGridShape)
{
    const ParameterGrid g = ParameterGrid::full();
    EXPECT_EQ(g.investor.size(), 18u);
    EXPECT_EQ(g.trustee.size(), 12u);
    for (const auto& c : g.investor)
        EXPECT_NO_THROW(c.validate());
    for (const auto& c : g.trustee)
        EXPECT_NO_THROW(c.validate());
    std::set<std::uint64_t> codes;
    for (const auto& c : g.trustee)
        codes.insert(detail::spec_code(c));
    EXPECT_EQ(codes.size(), 12u);
    EXPECT_EQ(full_factorial(g).size(), 216u);
}

TEST(Grid, BalancedPairingsCoverEveryCell)
{
    const ParameterGrid g = ParameterGrid::full();
    const auto pairs = balanced_pairings(g, 3);
    EXPECT_EQ(pairs.size(), 54u);
    for (const auto& c : g.investor)
        EXPECT_EQ(std::count_if(pairs.begin(), pairs.end(), [&](const Pairing& p) { return p.first == c; }), 3);
    for (const auto& c : g.trustee)
        EXPECT_GE(std::count_if(pairs.begin(), pairs.end(), [&](const Pairing& p) { return p.second == c; }), 3);
}

TEST(Confusion, RowsAreConditionalDistributions)
{
    const ParameterGrid g = ParameterGrid::full();
    std::vector<ConfusionSample> samples;
    Rng rng(6);
    for (const auto& p : balanced_pairings(g, 2))
        samples.push_back({p, g.investor[uniform_index(rng, 18)], g.trustee[uniform_index(rng, 12)]});
    const auto matrices = tabulate_confusion(samples, g);
    EXPECT_EQ(matrices.size(), 6u);
    for (const auto& m : matrices)
        for (std::size_t i = 0; i < m.levels.size(); ++i) {
            ASSERT_GT(m.counts[i], 0);
            double total = 0.0;
            for (double v : m.rows[i])
                total += v;
            EXPECT_NEAR(total, 1.0, 1e-12);
        }
    ConfusionReport rep;
    rep.matrices = matrices;
    EXPECT_EQ(rep.matrix(Parameter::planning, Role::investor).levels, (std::vector<double>{0, 2, 7}));
    EXPECT_EQ(rep.matrix(Parameter::tom, Role::trustee).levels, (std::vector<double>{0, 1}));
}

TEST(Confusion, PerfectEstimatesGiveIdentity)
{
    const ParameterGrid g = ParameterGrid::full();
    std::vector<ConfusionSample> samples;
    for (const auto& p : balanced_pairings(g, 1))
        samples.push_back({p, p.first, p.second});
    for (const auto& m : tabulate_confusion(samples, g)) {
        EXPECT_DOUBLE_EQ(m.diagonal_mass(), 1.0);
        EXPECT_DOUBLE_EQ(m.min_diagonal(), 1.0);
    }
}

TEST(Confusion, EndToEndOnExactCells)
{
    ParameterGrid g;
    for (int a = 0; a < kGuiltTypes; ++a) {
        g.investor.push_back(investor(0, a, 0));
        g.trustee.push_back(trustee(0, a, 0));
    }
    const ConfusionReport rep = confusion(full_factorial(g), 2, g, cheap(), 1);
    EXPECT_EQ(rep.samples.size(), 18u);
    EXPECT_GT(rep.matrix(Parameter::guilt, Role::trustee).diagonal_mass(), 1.0 / 3.0);
}

TEST(Ingest, ClassifiesAndOrdersRounds)
{
    std::vector<RawExchange> rows;
    for (int t = 9; t >= 0; --t)
        rows.push_back({"a", t + 1, 20, 30, 10 - t});
    rows.push_back({"b", 1, 7, 3, 20});
    const IngestReport rep = ingest_observed(rows);
    ASSERT_EQ(rep.records.size(), 1u);
    const GameRecord& rec = rep.records[0];
    EXPECT_EQ(rec.id, "a");
    EXPECT_TRUE(rec.observed);
    for (const Exchange& e : rec.rounds) {
        EXPECT_EQ(e.investment.category(), 4);
        EXPECT_EQ(e.repayment.category(), 3); // 30 of 60 is one half
    }
    ASSERT_EQ(rep.rejections.size(), 1u);
    EXPECT_NE(rep.rejections[0].find("dyad b"), std::string::npos);
}

TEST(Ingest, BadRowsAndDuplicates)
{
    std::vector<RawExchange> rows;
    for (int t = 1; t <= 10; ++t)
        rows.push_back({"x", t, 10, t == 4 ? 31 : 10, t});
    for (int t = 1; t <= 10; ++t)
        rows.push_back({"y", t == 10 ? 9 : t, 5, 5, 100 + t});
    for (int t = 1; t <= 10; ++t)
        rows.push_back({"z", t, t == 2 ? 2 : 15, t == 2 ? 1 : 20, 200 + t});
    const IngestReport rep = ingest_observed(rows);
    ASSERT_EQ(rep.records.size(), 1u);
    EXPECT_EQ(rep.records[0].id, "z");
    // 2 rounds to the zero category, and the return is forced to the degenerate one
    EXPECT_EQ(rep.records[0].rounds[1], (Exchange{InvestorAction(0), TrusteeAction(0)}));
    // 20 of 45 is closest to 3/6 (22.5) rather than 2/6 (15)
    EXPECT_EQ(rep.records[0].rounds[0].repayment.category(), 3);
    EXPECT_EQ(rep.rejections.size(), 3u); // row 4 of x, dyad x, dyad y
    EXPECT_NE(rep.rejections[0].find("line 4"), std::string::npos);
}
