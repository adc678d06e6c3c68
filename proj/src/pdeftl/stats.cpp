#include "stats.hpp"

#include <gsl/gsl_cdf.h>
#include <gsl/gsl_sf_erf.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace pdeftl::stats {

double byte_entropy(std::span<const uint8_t> data) {
  if (data.empty()) return 0.0;
  std::array<uint64_t, 256> counts{};
  for (uint8_t b : data) counts[b]++;
  double h = 0.0;
  const double n = double(data.size());
  for (uint64_t c : counts) {
    if (c == 0) continue;
    const double p = double(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

double byte_chi_square(std::span<const uint8_t> data) {
  std::array<uint64_t, 256> counts{};
  for (uint8_t b : data) counts[b]++;
  const double expected = double(data.size()) / 256.0;
  if (expected <= 0.0) return 0.0;
  double chi = 0.0;
  for (uint64_t c : counts) {
    const double d = double(c) - expected;
    chi += d * d / expected;
  }
  return chi;
}

double serial_correlation(std::span<const uint8_t> data) {
  const size_t n = data.size();
  if (n < 2) return 0.0;
  double sum = 0.0;
  for (uint8_t b : data) sum += b;
  const double mean = sum / double(n);
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = double(data[i]) - mean;
    den += d * d;
    if (i + 1 < n) num += d * (double(data[i + 1]) - mean);
  }
  if (den == 0.0) return 1.0;  // constant sequence: perfectly correlated
  return num / den;
}

double chi_square_pvalue(double x, double k) {
  if (x <= 0.0) return 1.0;
  return gsl_cdf_chisq_Q(x, k);
}

double normal_two_sided_pvalue(double z) {
  return gsl_sf_erfc(std::fabs(z) / std::sqrt(2.0));
}

double serial_correlation_pvalue(double r, size_t n) {
  if (n < 2) return 1.0;
  return normal_two_sided_pvalue(r * std::sqrt(double(n)));
}

double mann_whitney_pvalue(std::span<const double> a, std::span<const double> b) {
  const size_t n1 = a.size(), n2 = b.size();
  if (n1 == 0 || n2 == 0) return 1.0;

  struct Item {
    double v;
    int group;
  };
  std::vector<Item> all;
  all.reserve(n1 + n2);
  for (double v : a) all.push_back({v, 0});
  for (double v : b) all.push_back({v, 1});
  std::sort(all.begin(), all.end(), [](const Item& x, const Item& y) { return x.v < y.v; });

  // midranks with tie correction term sum(t^3 - t)
  std::vector<double> rank(all.size());
  double tie_term = 0.0;
  size_t i = 0;
  while (i < all.size()) {
    size_t j = i;
    while (j + 1 < all.size() && all[j + 1].v == all[i].v) ++j;
    const double mid = 0.5 * double(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) rank[k] = mid;
    const double t = double(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }

  double r1 = 0.0;
  for (size_t k = 0; k < all.size(); ++k)
    if (all[k].group == 0) r1 += rank[k];

  const double u1 = r1 - double(n1) * double(n1 + 1) / 2.0;
  const double mu = double(n1) * double(n2) / 2.0;
  const double n = double(n1 + n2);
  const double var =
      double(n1) * double(n2) / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (var <= 0.0) return 1.0;
  const double z = (u1 - mu) / std::sqrt(var);
  return normal_two_sided_pvalue(z);
}

double counts_chi_square_pvalue(std::span<const double> observed,
                                std::span<const double> expected) {
  double chi = 0.0;
  size_t kept = 0;
  for (size_t i = 0; i < observed.size() && i < expected.size(); ++i) {
    if (expected[i] < 1e-12) continue;
    const double d = observed[i] - expected[i];
    chi += d * d / expected[i];
    ++kept;
  }
  if (kept < 2) return 1.0;
  return chi_square_pvalue(chi, double(kept - 1));
}

}  // namespace pdeftl::stats
