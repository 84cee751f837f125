#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "lrs/errors.hpp"

namespace lrs::stats {

// Average ranks, ties shared (1-based).
inline std::vector<double> rank_average(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

enum class Alternative { greater, less, two_sided };

struct WilcoxonResult {
    double statistic = 0.0;  // W+ = sum of ranks of positive differences
    double pvalue = 1.0;
    std::size_t n_used = 0;  // non-zero differences
    bool exact = false;
};

namespace detail {

// Exact tail probability by enumerating all 2^n sign assignments over the
// observed |d| ranks (valid with ties, since the actual averaged ranks are
// used).
inline double exact_tail(const std::vector<double>& ranks, double w, Alternative alt) {
    const std::size_t n = ranks.size();
    const std::uint64_t total = std::uint64_t{1} << n;
    std::uint64_t count_ge = 0, count_le = 0;
    constexpr double kEps = 1e-9;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (std::uint64_t{1} << i)) sum += ranks[i];
        if (sum >= w - kEps) ++count_ge;
        if (sum <= w + kEps) ++count_le;
    }
    const double p_ge = static_cast<double>(count_ge) / static_cast<double>(total);
    const double p_le = static_cast<double>(count_le) / static_cast<double>(total);
    switch (alt) {
        case Alternative::greater: return p_ge;
        case Alternative::less: return p_le;
        case Alternative::two_sided: return std::min(1.0, 2.0 * std::min(p_ge, p_le));
    }
    return 1.0;
}

inline double normal_sf(double z) {
    boost::math::normal_distribution<double> dist;
    return boost::math::cdf(boost::math::complement(dist, z));
}

inline double normal_cdf(double z) {
    boost::math::normal_distribution<double> dist;
    return boost::math::cdf(dist, z);
}

}  // namespace detail

inline constexpr std::size_t kWilcoxonExactLimit = 15;

// One-sample signed-rank test on paired differences. Zero differences are
// dropped; tied |d| get averaged ranks. Exact enumeration for up to
// kWilcoxonExactLimit non-zero differences, normal approximation with tie
// and continuity corrections beyond that.
inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> differences,
                                           Alternative alt = Alternative::greater) {
    std::vector<double> d;
    d.reserve(differences.size());
    for (double v : differences)
        if (v != 0.0) d.push_back(v);
    if (d.size() < 5)
        throw InsufficientData("wilcoxon requires at least 5 non-zero differences, got " +
                               std::to_string(d.size()));

    const std::size_t n = d.size();
    std::vector<double> abs_d(n);
    for (std::size_t i = 0; i < n; ++i) abs_d[i] = std::abs(d[i]);
    const std::vector<double> ranks = rank_average(abs_d);

    double w_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (d[i] > 0.0) w_plus += ranks[i];

    WilcoxonResult result;
    result.statistic = w_plus;
    result.n_used = n;

    if (n <= kWilcoxonExactLimit) {
        result.exact = true;
        result.pvalue = detail::exact_tail(ranks, w_plus, alt);
        return result;
    }

    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    double var24 = nn * (nn + 1.0) * (2.0 * nn + 1.0);
    // tie correction: subtract sum(t^3 - t)/2 before the /24
    std::vector<double> sorted_abs = abs_d;
    std::sort(sorted_abs.begin(), sorted_abs.end());
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && sorted_abs[j + 1] == sorted_abs[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        var24 -= 0.5 * (t * t * t - t);
        i = j + 1;
    }
    const double sd = std::sqrt(var24 / 24.0);
    if (sd == 0.0)
        throw InsufficientData("wilcoxon degenerate: zero variance after tie correction");

    switch (alt) {
        case Alternative::greater:
            result.pvalue = detail::normal_sf((w_plus - mean - 0.5) / sd);
            break;
        case Alternative::less:
            result.pvalue = detail::normal_cdf((w_plus - mean + 0.5) / sd);
            break;
        case Alternative::two_sided: {
            const double correction = (w_plus > mean) ? -0.5 : (w_plus < mean ? 0.5 : 0.0);
            const double z = (w_plus - mean + correction) / sd;
            result.pvalue = std::min(1.0, 2.0 * detail::normal_sf(std::abs(z)));
            break;
        }
    }
    return result;
}

// Convenience overload for paired samples x vs y (differences x - y).
inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y,
                                           Alternative alt = Alternative::greater) {
    if (x.size() != y.size())
        throw std::invalid_argument("wilcoxon: paired samples must have equal length");
    std::vector<double> d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - y[i];
    return wilcoxon_signed_rank(d, alt);
}

struct FriedmanResult {
    double statistic = 0.0;
    double pvalue = 1.0;
};

// Friedman rank test over N blocks x k treatments, tie-corrected; chi-square
// p-value with k-1 degrees of freedom. Fully tied data yields statistic 0,
// p-value 1.
inline FriedmanResult friedman_test(const std::vector<std::vector<double>>& blocks) {
    const std::size_t n = blocks.size();
    if (n < 2) throw InsufficientData("friedman requires at least 2 blocks");
    const std::size_t k = blocks.front().size();
    if (k < 2) throw InsufficientData("friedman requires at least 2 treatments");
    for (const auto& row : blocks)
        if (row.size() != k) throw std::invalid_argument("friedman: ragged block table");

    std::vector<double> rank_sums(k, 0.0);
    double ties = 0.0;  // sum over blocks of sum(t^3 - t)
    for (const auto& row : blocks) {
        const std::vector<double> ranks = rank_average(row);
        for (std::size_t j = 0; j < k; ++j) rank_sums[j] += ranks[j];
        std::vector<double> sorted = row;
        std::sort(sorted.begin(), sorted.end());
        std::size_t i = 0;
        while (i < k) {
            std::size_t j = i;
            while (j + 1 < k && sorted[j + 1] == sorted[i]) ++j;
            const double t = static_cast<double>(j - i + 1);
            ties += t * t * t - t;
            i = j + 1;
        }
    }

    const double nn = static_cast<double>(n);
    const double kk = static_cast<double>(k);
    double ssbn = 0.0;
    for (double r : rank_sums) ssbn += r * r;
    const double raw = 12.0 / (kk * nn * (kk + 1.0)) * ssbn - 3.0 * nn * (kk + 1.0);
    const double correction = 1.0 - ties / (kk * (kk * kk - 1.0) * nn);

    FriedmanResult result;
    if (correction <= 0.0) {
        // fully tied data carries no ranking signal
        result.statistic = 0.0;
        result.pvalue = 1.0;
        return result;
    }
    result.statistic = raw / correction;
    if (result.statistic <= 0.0) {
        result.pvalue = 1.0;
        return result;
    }
    boost::math::chi_squared_distribution<double> dist(kk - 1.0);
    result.pvalue = boost::math::cdf(boost::math::complement(dist, result.statistic));
    return result;
}

}  // namespace lrs::stats
