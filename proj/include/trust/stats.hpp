#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

namespace trust::stats {

inline double mean(std::span<const double> x)
{
    if (x.empty())
        throw std::domain_error("mean of an empty sample");
    double s = 0.0;
    for (double v : x)
        s += v;
    return s / static_cast<double>(x.size());
}

/// Sample variance (n - 1 denominator); zero for a single observation.
inline double variance(std::span<const double> x)
{
    if (x.size() < 2)
        return 0.0;
    const double m = mean(x);
    double s = 0.0;
    for (double v : x)
        s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

struct TTestResult {
    double statistic = 0.0;
    double df = 0.0;
    double p_two_sided = 1.0;
    double p_greater = 0.5; ///< H1: mean(a) > mean(b)
};

/**
 * Welch's unequal-variance t-test. Degenerate samples (both variances zero)
 * give p = 1 for equal means and p = 0 otherwise.
 */
inline TTestResult welch_t_test(std::span<const double> a, std::span<const double> b)
{
    if (a.size() < 2 || b.size() < 2)
        throw std::domain_error("t-test needs at least two observations per sample");
    const double ma = mean(a), mb = mean(b);
    const double va = variance(a) / static_cast<double>(a.size());
    const double vb = variance(b) / static_cast<double>(b.size());
    TTestResult r;
    if (va + vb == 0.0) {
        if (ma == mb)
            return r;
        r.statistic = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        r.p_two_sided = 0.0;
        r.p_greater = ma > mb ? 0.0 : 1.0;
        return r;
    }
    r.statistic = (ma - mb) / std::sqrt(va + vb);
    r.df = (va + vb) * (va + vb) /
           (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
    const boost::math::students_t dist(r.df);
    r.p_greater = boost::math::cdf(boost::math::complement(dist, r.statistic));
    r.p_two_sided = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.statistic))));
    return r;
}

/// Kolmogorov limiting distribution Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
inline double kolmogorov_survival(double lambda)
{
    if (lambda < 1e-3)
        return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 ? 1.0 : -1.0) * term;
        if (term < 1e-16)
            break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value (Stephens' small-sample correction).
inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b)
{
    if (a.empty() || b.empty())
        throw std::domain_error("KS test needs two nonempty samples");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v)
            ++i;
        while (j < y.size() && y[j] == v)
            ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    const double en = std::sqrt(n * m / (n + m));
    return {d, d == 0.0 ? 1.0 : kolmogorov_survival((en + 0.12 + 0.11 / en) * d)};
}

} // namespace trust::stats
