#include <gtest/gtest.h>

#include <random>

#include "trust/stats.hpp"

using namespace trust::stats;

// Reference values computed with an independent statistics package.

TEST(Welch, KnownValues)
{
    const std::vector<double> a{1, 2, 3, 4, 5}, b{2, 4, 6, 8, 10};
    const TTestResult r = welch_t_test(a, b);
    EXPECT_NEAR(r.statistic, -1.8973665961010275, 1e-12);
    EXPECT_NEAR(r.df, 5.882352941176471, 1e-12);
    EXPECT_NEAR(r.p_two_sided, 0.10753119493062718, 1e-9);
    EXPECT_NEAR(r.p_greater, 1.0 - 0.10753119493062718 / 2, 1e-9);

    const std::vector<double> c{5.1, 4.9, 5.6, 5.8, 6.0, 5.5}, d{4.0, 4.4, 4.1, 4.9};
    const TTestResult s = welch_t_test(c, d);
    EXPECT_NEAR(s.statistic, 4.290412953563084, 1e-10);
    EXPECT_NEAR(s.df, 6.731159158093076, 1e-10);
    EXPECT_NEAR(s.p_two_sided, 0.003950443906125059, 1e-9);
    EXPECT_NEAR(s.p_greater, 0.003950443906125059 / 2, 1e-9);
}

TEST(Welch, AntisymmetricInSamples)
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> a(8), b(13);
        for (double& v : a)
            v = n(rng);
        for (double& v : b)
            v = n(rng) + 0.3;
        const auto ab = welch_t_test(a, b), ba = welch_t_test(b, a);
        EXPECT_NEAR(ab.statistic, -ba.statistic, 1e-12);
        EXPECT_NEAR(ab.p_two_sided, ba.p_two_sided, 1e-12);
        EXPECT_NEAR(ab.p_greater + ba.p_greater, 1.0, 1e-12);
    }
}

TEST(Welch, DegenerateSamples)
{
    const std::vector<double> a{2, 2, 2}, b{2, 2}, c{3, 3};
    EXPECT_EQ(welch_t_test(a, b).p_two_sided, 1.0);
    EXPECT_EQ(welch_t_test(a, c).p_two_sided, 0.0);
    EXPECT_EQ(welch_t_test(c, a).p_greater, 0.0);
    const std::vector<double> one{1};
    EXPECT_THROW(welch_t_test(one, a), std::domain_error);
}

TEST(Kolmogorov, SurvivalFunction)
{
    EXPECT_NEAR(kolmogorov_survival(1.0), 0.26999967167735456, 1e-12);
    EXPECT_NEAR(kolmogorov_survival(0.5), 0.9639452436648751, 1e-12);
    EXPECT_NEAR(kolmogorov_survival(1.36), 0.049485876755377876, 1e-12);
    EXPECT_EQ(kolmogorov_survival(0.0), 1.0);
}

TEST(KolmogorovSmirnov, StatisticExamples)
{
    const std::vector<double> a{1, 2, 3, 4}, b{5, 6, 7, 8};
    EXPECT_DOUBLE_EQ(ks_two_sample(a, b).statistic, 1.0);
    EXPECT_DOUBLE_EQ(ks_two_sample(a, a).statistic, 0.0);
    EXPECT_EQ(ks_two_sample(a, a).p_value, 1.0);
    // ties across samples are stepped together
    const std::vector<double> c{0, 0, 1, 1}, d{0, 1, 1, 1};
    EXPECT_DOUBLE_EQ(ks_two_sample(c, d).statistic, 0.25);
    const std::vector<double> e{1, 2, 2, 3, 5}, f{2, 4, 4};
    // F_e(2) = 3/5, F_f(2) = 1/3; F_e(3) = 4/5, F_f(3) = 1/3
    EXPECT_NEAR(ks_two_sample(e, f).statistic, 4.0 / 5.0 - 1.0 / 3.0, 1e-15);
    EXPECT_THROW(ks_two_sample(a, std::vector<double>{}), std::domain_error);
}

TEST(KolmogorovSmirnov, SameDistributionRarelyRejects)
{
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n(0.0, 1.0);
    int rejections = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        std::vector<double> a(60), b(60);
        for (double& v : a)
            v = n(rng);
        for (double& v : b)
            v = n(rng);
        rejections += ks_two_sample(a, b).p_value < 0.05;
    }
    EXPECT_LT(rejections, 25); // nominal 10 of 200
}

TEST(KolmogorovSmirnov, ShiftedDistributionRejects)
{
    std::mt19937_64 rng(10);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> a(200), b(200);
    for (double& v : a)
        v = n(rng);
    for (double& v : b)
        v = n(rng) + 1.0;
    EXPECT_LT(ks_two_sample(a, b).p_value, 1e-6);
}

TEST(Moments, Basic)
{
    const std::vector<double> x{2, 4, 4, 4, 5, 5, 7, 9};
    EXPECT_DOUBLE_EQ(mean(x), 5.0);
    EXPECT_DOUBLE_EQ(variance(x), 32.0 / 7.0);
    EXPECT_EQ(variance(std::vector<double>{3}), 0.0);
    EXPECT_THROW(mean(std::vector<double>{}), std::domain_error);
}
