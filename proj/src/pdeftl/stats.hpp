#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pdeftl::stats {

/// Shannon entropy of the byte distribution, in bits per byte.
double byte_entropy(std::span<const uint8_t> data);

/// Chi-square statistic of byte frequencies against the uniform
/// distribution over 256 values (255 degrees of freedom).
double byte_chi_square(std::span<const uint8_t> data);

/// Lag-1 serial correlation coefficient of the byte sequence.
double serial_correlation(std::span<const uint8_t> data);

/// Survival function of the chi-square distribution: P(X >= x) with k
/// degrees of freedom.
double chi_square_pvalue(double x, double k);

/// Two-sided p-value for a standard normal z statistic.
double normal_two_sided_pvalue(double z);

/// Two-sided p-value for the serial correlation of n bytes under the
/// null of independence (z = r * sqrt(n), normal approximation).
double serial_correlation_pvalue(double r, size_t n);

/// Mann-Whitney U rank test, two-sided, normal approximation with tie
/// correction. Returns 1.0 when either sample is empty or all values tie.
double mann_whitney_pvalue(std::span<const double> a, std::span<const double> b);

/// Chi-square p-value of observed counts against per-cell expected counts.
/// Cells with expected < 1e-12 are skipped; degrees of freedom = kept - 1.
double counts_chi_square_pvalue(std::span<const double> observed,
                                std::span<const double> expected);

}  // namespace pdeftl::stats
