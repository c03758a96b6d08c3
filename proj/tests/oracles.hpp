// Independent reference computations used as test oracles. Nothing here
// calls into the library under test.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace oracle {

// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front =
      std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x));
  if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - incomplete_beta(b, a, 1.0 - x);
  constexpr double tiny = 1e-300;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double f = d;
  for (int m = 1; m < 10000; ++m) {
    const double m2 = 2.0 * m;
    double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + num * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    f *= c * d;
    num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + num * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::fabs(delta - 1.0) < 1e-15) break;
  }
  return front * f / a;
}

// Textbook two-sided Welch test for proportions k/n: t = (m1 - m2) / sqrt(s1^2/n1 + s2^2/n2),
// Welch-Satterthwaite df, p = I_{df/(df+t^2)}(df/2, 1/2).
inline double welch_p(double k1, double n1, double k2, double n2) {
  const double m1 = k1 / n1, m2 = k2 / n2;
  const double v1 = (k1 * (1 - m1) * (1 - m1) + (n1 - k1) * m1 * m1) / (n1 - 1);
  const double v2 = (k2 * (1 - m2) * (1 - m2) + (n2 - k2) * m2 * m2) / (n2 - 1);
  const double se2 = v1 / n1 + v2 / n2;
  const double t = (m1 - m2) / std::sqrt(se2);
  const double df = se2 * se2 / ((v1 / n1) * (v1 / n1) / (n1 - 1) + (v2 / n2) * (v2 / n2) / (n2 - 1));
  return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

// Cohen's kappa straight from the 2x2 table definition.
inline double kappa(double yy, double yn, double ny, double nn) {
  const double n = yy + yn + ny + nn;
  const double po = (yy + nn) / n;
  const double pe = ((yy + yn) / n) * ((yy + ny) / n) + ((ny + nn) / n) * ((yn + nn) / n);
  return (po - pe) / (1 - pe);
}

// Brute force over the first K positions of one ranked list.
inline double precision(const std::vector<bool>& informative_by_rank, std::size_t k) {
  double hits = 0;
  for (std::size_t r = 0; r < k && r < informative_by_rank.size(); ++r) hits += informative_by_rank[r] ? 1 : 0;
  return hits / static_cast<double>(k);
}

inline double reciprocal_rank(const std::vector<bool>& informative_by_rank, std::size_t k) {
  for (std::size_t r = 0; r < k && r < informative_by_rank.size(); ++r)
    if (informative_by_rank[r]) return 1.0 / static_cast<double>(r + 1);
  return 0.0;
}

// Exact expectations of the MSP estimators for two blocks a, b whose delta
// depends only on their mask states: delta(ma, mb). Other blocks are
// independent Bernoulli(P) and irrelevant.
struct TwoBlockExpectation {
  double score_a;
  double score_b;
  double pair;
  double interaction;
};

inline TwoBlockExpectation enumerate_two_blocks(const std::function<double(bool, bool)>& delta, double p) {
  const double q = 1.0 - p;
  const double a_masked = p * delta(true, true) + q * delta(true, false);
  const double a_unmasked = p * delta(false, true) + q * delta(false, false);
  const double b_masked = p * delta(true, true) + q * delta(false, true);
  const double b_unmasked = p * delta(true, false) + q * delta(false, false);
  TwoBlockExpectation e{};
  e.score_a = a_masked - a_unmasked;
  e.score_b = b_masked - b_unmasked;
  e.pair = delta(true, true) - delta(false, false);
  e.interaction = e.pair - e.score_a - e.score_b;
  return e;
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// |count - nP| <= 3 sqrt(nP(1-P))
inline bool within_3_sigma(double count, double n, double p) {
  return std::fabs(count - n * p) <= 3.0 * std::sqrt(n * p * (1.0 - p));
}

}  // namespace oracle
