/* Copyright 2026 The qadv Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "qadv/statlab.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "qadv/error.hpp"
#include "qadv/text_format.hpp"

namespace qadv::stats {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

double poly(const double* c, int n, double x) {
  double r = c[n - 1];
  for (int i = n - 2; i >= 0; --i) r = r * x + c[i];
  return r;
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
template <int N>
struct GaussLegendre {
  std::array<double, N> x{}, w{};
  GaussLegendre() {
    for (int i = 0; i < N; ++i) {
      double z = std::cos(kPi * (i + 0.75) / (N + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = 0.0;
        for (int j = 1; j <= N; ++j) {
          const double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
        }
        dp = N * (z * p0 - p1) / (z * z - 1.0);
        const double dz = p0 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      x[std::size_t(i)] = z;
      w[std::size_t(i)] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
  }
};

const GaussLegendre<16>& gl16() {
  static const GaussLegendre<16> g;
  return g;
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi); }

/// Continued fraction for the incomplete beta (modified Lentz).
double beta_cf(double x, double a, double b) {
  constexpr double tiny = 1e-300, eps = 1e-15;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  throw Error("incomplete_beta: continued fraction did not converge");
}

/// P(range of k iid standard normals <= w).
double prange_normal(double w, double k) {
  if (w <= 0.0) return 0.0;
  const auto& g = gl16();
  constexpr double lo = -8.5, hi = 8.5, width = 0.5;
  const int panels = int((hi - lo) / width);
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = lo + p * width, mid = a + width / 2;
    for (int i = 0; i < 16; ++i) {
      const double z = mid + g.x[std::size_t(i)] * width / 2;
      const double inner = normal_cdf(z) - normal_cdf(z - w);
      if (inner <= 0.0) continue;
      total += g.w[std::size_t(i)] * width / 2 * normal_pdf(z) * std::pow(inner, k - 1.0);
    }
  }
  return std::clamp(k * total, 0.0, 1.0);
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

double ss_about_mean(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s;
}

void require_groups(const std::vector<Group>& groups, const char* what) {
  if (groups.size() < 2) throw DataError(std::string(what) + ": need at least two groups");
  for (const auto& g : groups) {
    if (g.values.size() < 2)
      throw DataError(std::string(what) + ": group '" + g.label + "' has fewer than two values");
    for (double v : g.values)
      if (!std::isfinite(v)) throw DataError(std::string(what) + ": non-finite value");
  }
}

std::string num(double v, int digits) {
  std::string s = text::fixed(v, digits);
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

// ---------------------------------------------------------------------------
// Distributions

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DataError("normal_quantile: p must lie in (0, 1)");
  static constexpr double a[] = {3.387132872796366608,  133.14166789178437745, 1971.5909503065514427,
                                 13731.693765509461125, 45921.953931549871457, 67265.770927008700853,
                                 33430.575583588128105, 2509.0809287301226727};
  static constexpr double b[] = {1.0,                   42.313330701600911252, 687.1870074920579083,
                                 5394.1960214247511077, 21213.794301586595867, 39307.89580009271061,
                                 28729.085735721942674, 5226.495278852545925};
  static constexpr double c[] = {1.42343711074968357734, 4.6303378461565452959,
                                 5.7694972214606914055,  3.64784832476320460504,
                                 1.27045825245236838258, 0.24178072517745061177,
                                 0.0227238449892691845833, 7.7454501427834140764e-4};
  static constexpr double d[] = {1.0,
                                 2.05319162663775882187,
                                 1.6763848301838038494,
                                 0.68976733498510000455,
                                 0.14810397642748007459,
                                 0.0151986665636164571966,
                                 5.475938084995344946e-4,
                                 1.05075007164441684324e-9};
  static constexpr double e[] = {6.6579046435011037772,   5.4637849111641143699,
                                 1.7848265399172913358,   0.29656057182850489123,
                                 0.026532189526576123093, 0.0012426609473880784386,
                                 2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static constexpr double f[] = {1.0,
                                 0.59983220655588793769,
                                 0.13692988092273580531,
                                 0.0148753612908506148525,
                                 7.868691311456132591e-4,
                                 1.8463183175100546818e-5,
                                 1.4215117583164458887e-7,
                                 2.04426310338993978564e-15};
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * poly(a, 8, r) / poly(b, 8, r);
  }
  double r = std::sqrt(-std::log(q < 0 ? p : 1.0 - p));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = poly(c, 8, r) / poly(d, 8, r);
  } else {
    r -= 5.0;
    val = poly(e, 8, r) / poly(f, 8, r);
  }
  return q < 0 ? -val : val;
}

double incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0 && b > 0.0)) throw DataError("incomplete_beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw DataError("incomplete_beta: x must lie in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(x, a, b) / a;
  return 1.0 - front * beta_cf(1.0 - x, b, a) / b;
}

double f_cdf(double f, double df1, double df2) {
  if (!(df1 > 0.0 && df2 > 0.0)) throw DataError("f_cdf: degrees of freedom must be positive");
  if (f <= 0.0) return 0.0;
  if (std::isinf(f)) return 1.0;
  return incomplete_beta(df1 * f / (df1 * f + df2), df1 / 2.0, df2 / 2.0);
}

double f_sf(double f, double df1, double df2) {
  if (!(df1 > 0.0 && df2 > 0.0)) throw DataError("f_sf: degrees of freedom must be positive");
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return incomplete_beta(df2 / (df2 + df1 * f), df2 / 2.0, df1 / 2.0);
}

double t_cdf(double t, double df) {
  if (!(df > 0.0)) throw DataError("t_cdf: degrees of freedom must be positive");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double tail = 0.5 * incomplete_beta(df / (df + t * t), df / 2.0, 0.5);
  return t > 0 ? 1.0 - tail : tail;
}

double t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw DataError("t_two_sided_p: degrees of freedom must be positive");
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(df / (df + t * t), df / 2.0, 0.5);
}

double ptukey(double q, double k, double df) {
  if (!(k >= 2.0)) throw DataError("ptukey: k must be >= 2");
  if (!(df > 0.0)) throw DataError("ptukey: df must be positive");
  if (q <= 0.0) return 0.0;
  if (std::isinf(q)) return 1.0;
  if (std::isinf(df)) return prange_normal(q, k);
  // s = sqrt(chi2_df / df) has density c * s^(df-1) * exp(-df s^2 / 2).
  const double log_c = 0.5 * df * std::log(df) - std::lgamma(df / 2.0) - (df / 2.0 - 1.0) * std::log(2.0);
  const double spread = 12.0 / std::sqrt(2.0 * df);
  const double lo = std::max(0.0, 1.0 - spread), hi = 1.0 + std::max(spread, 1.0);
  constexpr int panels = 48;
  const double width = (hi - lo) / panels;
  const auto& g = gl16();
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * width;
    for (int i = 0; i < 16; ++i) {
      const double s = mid + g.x[std::size_t(i)] * width / 2;
      if (s <= 0.0) continue;
      const double dens = std::exp(log_c + (df - 1.0) * std::log(s) - df * s * s / 2.0);
      if (dens < 1e-300) continue;
      total += g.w[std::size_t(i)] * width / 2 * dens * prange_normal(q * s, k);
    }
  }
  return std::clamp(total, 0.0, 1.0);
}

double qtukey(double p, double k, double df) {
  if (!(p > 0.0 && p < 1.0)) throw DataError("qtukey: p must lie in (0, 1)");
  double lo = 0.0, hi = 1.0;
  while (ptukey(hi, k, df) < p) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw DataError("qtukey: quantile out of range");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-10 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ptukey(mid, k, df) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Tests

Descriptive describe(const Group& g) {
  if (g.values.empty()) throw DataError("describe: empty group '" + g.label + "'");
  Descriptive d;
  d.label = g.label;
  d.n = Index(g.values.size());
  d.mean = mean_of(g.values);
  d.sd = g.values.size() > 1 ? std::sqrt(ss_about_mean(g.values) / double(g.values.size() - 1)) : 0.0;
  d.min = *std::min_element(g.values.begin(), g.values.end());
  d.max = *std::max_element(g.values.begin(), g.values.end());
  return d;
}

ShapiroWilk shapiro_wilk(std::vector<double> xs) {
  const std::size_t n = xs.size();
  if (n < 3 || n > 5000) throw DataError("shapiro_wilk: n must lie in [3, 5000]");
  std::sort(xs.begin(), xs.end());
  const double ss = ss_about_mean(xs);
  if (!(ss > 0.0) || xs.front() == xs.back()) throw DataError("shapiro_wilk: zero variance");

  const std::size_t half = n / 2;
  std::vector<double> a(half);  // coefficients for the upper half, largest first
  if (n == 3) {
    a[0] = std::sqrt(0.5);
  } else {
    static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056};
    static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
    std::vector<double> m(half);
    double summ2 = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
      m[i] = -normal_quantile((double(i + 1) - 0.375) / (double(n) + 0.25));
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(double(n));
    const double a1 = poly(c1, 6, rsn) + m[0] / ssumm2;
    std::size_t first;
    double fac;
    if (n > 5) {
      first = 2;
      const double a2 = poly(c2, 6, rsn) + m[1] / ssumm2;
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) /
                      (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[1] = a2;
    } else {
      first = 1;
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
    }
    a[0] = a1;
    for (std::size_t i = first; i < half; ++i) a[i] = m[i] / fac;
  }
  double num_ = 0.0;
  for (std::size_t i = 0; i < half; ++i) num_ += a[i] * (xs[n - 1 - i] - xs[i]);
  double w = std::min(1.0, num_ * num_ / ss);

  ShapiroWilk r;
  r.w = w;
  if (n == 3) {
    r.p = std::max(0.0, 6.0 / kPi * (std::asin(std::sqrt(w)) - std::asin(std::sqrt(0.75))));
    return r;
  }
  const double w1 = std::log(1.0 - w);
  if (!std::isfinite(w1)) {
    r.p = 1.0;
    return r;
  }
  const double an = double(n);
  double y, m, s;
  if (n <= 11) {
    static constexpr double g[] = {-2.273, 0.459};
    static constexpr double c3[] = {0.5440, -0.39978, 0.025054, -6.714e-4};
    static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
    const double gamma = poly(g, 2, an);
    if (w1 >= gamma) {
      r.p = 0.0;
      return r;
    }
    y = -std::log(gamma - w1);
    m = poly(c3, 4, an);
    s = std::exp(poly(c4, 4, an));
  } else {
    static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
    static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};
    const double xx = std::log(an);
    y = w1;
    m = poly(c5, 4, xx);
    s = std::exp(poly(c6, 3, xx));
  }
  r.p = std::clamp(1.0 - normal_cdf((y - m) / s), 0.0, 1.0);
  return r;
}

Anova anova_oneway(const std::vector<Group>& groups) {
  require_groups(groups, "anova_oneway");
  Anova r;
  double total_n = 0.0, grand = 0.0;
  for (const auto& g : groups) {
    total_n += double(g.values.size());
    grand += std::accumulate(g.values.begin(), g.values.end(), 0.0);
  }
  grand /= total_n;
  for (const auto& g : groups) {
    const double m = mean_of(g.values);
    r.ss_between += double(g.values.size()) * (m - grand) * (m - grand);
    r.ss_within += ss_about_mean(g.values);
    for (double v : g.values) r.ss_total += (v - grand) * (v - grand);
  }
  r.df1 = double(groups.size()) - 1.0;
  r.df2 = total_n - double(groups.size());
  r.ms_within = r.ss_within / r.df2;
  if (r.ss_within == 0.0) {
    if (r.ss_between == 0.0) throw DataError("anova_oneway: zero variance within and between groups");
    r.f = kInf;
    r.p = 0.0;
  } else {
    r.f = (r.ss_between / r.df1) / r.ms_within;
    r.p = f_sf(r.f, r.df1, r.df2);
  }
  r.eta_squared = r.ss_total > 0.0 ? r.ss_between / r.ss_total : 0.0;
  return r;
}

Levene levene(const std::vector<Group>& groups) {
  require_groups(groups, "levene");
  std::vector<Group> dev;
  for (const auto& g : groups) {
    const double m = mean_of(g.values);
    Group d{g.label, {}};
    for (double v : g.values) d.values.push_back(std::abs(v - m));
    dev.push_back(std::move(d));
  }
  Levene r;
  double ssb = 0.0, ssw = 0.0, total_n = 0.0, grand = 0.0;
  for (const auto& g : dev) {
    total_n += double(g.values.size());
    grand += std::accumulate(g.values.begin(), g.values.end(), 0.0);
  }
  grand /= total_n;
  for (const auto& g : dev) {
    const double m = mean_of(g.values);
    ssb += double(g.values.size()) * (m - grand) * (m - grand);
    ssw += ss_about_mean(g.values);
  }
  r.df1 = double(groups.size()) - 1.0;
  r.df2 = total_n - double(groups.size());
  if (ssb <= 1e-15 * std::max(1.0, ssw) || ssb == 0.0) {
    // Identical deviation profiles (including all-constant groups).
    r.w = 0.0;
    r.p = 1.0;
  } else if (ssw == 0.0) {
    r.w = kInf;
    r.p = 0.0;
  } else {
    r.w = (ssb / r.df1) / (ssw / r.df2);
    r.p = f_sf(r.w, r.df1, r.df2);
  }
  return r;
}

std::vector<TukeyPair> tukey_hsd(const std::vector<Group>& groups, double fwer) {
  require_groups(groups, "tukey_hsd");
  if (!(fwer > 0.0 && fwer < 1.0)) throw ConfigError("tukey_hsd: fwer must lie in (0, 1)");
  const Anova a = anova_oneway(groups);
  const double k = double(groups.size());
  const double q_crit = qtukey(1.0 - fwer, k, a.df2);
  std::vector<std::size_t> order(groups.size());
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::vector<double> means;
  for (const auto& g : groups) means.push_back(mean_of(g.values));
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return means[x] > means[y]; });

  std::vector<TukeyPair> out;
  for (std::size_t i = 0; i < order.size(); ++i)
    for (std::size_t j = order.size(); j-- > i + 1;) {
      const auto& g1 = groups[order[i]];
      const auto& g2 = groups[order[j]];
      TukeyPair p;
      p.group1 = g1.label;
      p.group2 = g2.label;
      p.mean_diff = means[order[i]] - means[order[j]];
      const double se = std::sqrt(a.ms_within / 2.0 *
                                  (1.0 / double(g1.values.size()) + 1.0 / double(g2.values.size())));
      p.ci_lower = p.mean_diff - q_crit * se;
      p.ci_upper = p.mean_diff + q_crit * se;
      if (se == 0.0) {
        p.q = p.mean_diff == 0.0 ? 0.0 : kInf;
      } else {
        p.q = std::abs(p.mean_diff) / se;
      }
      p.p = std::clamp(1.0 - ptukey(p.q, k, a.df2), 0.0, 1.0);
      p.reject = p.p < fwer;
      out.push_back(p);
    }
  return out;
}

TTest pooled_ttest(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw DataError("pooled_ttest: each sample needs n >= 2");
  TTest r;
  r.df = double(a.size() + b.size()) - 2.0;
  const double sp2 = (ss_about_mean(a) + ss_about_mean(b)) / r.df;
  const double diff = mean_of(a) - mean_of(b);
  const double se = std::sqrt(sp2 * (1.0 / double(a.size()) + 1.0 / double(b.size())));
  if (se == 0.0) {
    if (diff == 0.0) throw DataError("pooled_ttest: both samples are constant and equal");
    r.t = diff > 0 ? kInf : -kInf;
    r.p = 0.0;
    return r;
  }
  r.t = diff / se;
  r.p = t_two_sided_p(r.t, r.df);
  return r;
}

double cohens_d(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw DataError("cohens_d: each sample needs n >= 2");
  const double sp2 = (ss_about_mean(a) + ss_about_mean(b)) / double(a.size() + b.size() - 2);
  if (!(sp2 > 0.0)) throw DataError("cohens_d: zero pooled variance");
  return (mean_of(a) - mean_of(b)) / std::sqrt(sp2);
}

Bonferroni bonferroni_ttests(const std::vector<Group>& groups, double alpha) {
  require_groups(groups, "bonferroni_ttests");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("bonferroni_ttests: alpha must lie in (0, 1)");
  Bonferroni r;
  r.alpha = alpha;
  const double pairs = double(groups.size() * (groups.size() - 1) / 2);
  r.threshold = alpha / pairs;
  for (std::size_t i = 0; i < groups.size(); ++i)
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      BonferroniPair p;
      p.group1 = groups[i].label;
      p.group2 = groups[j].label;
      p.mean_diff = mean_of(groups[i].values) - mean_of(groups[j].values);
      try {
        const auto t = pooled_ttest(groups[i].values, groups[j].values);
        p.t = t.t;
        p.p = t.p;
      } catch (const DataError&) {
        p.t = std::nan("");
        p.p = 1.0;
      }
      try {
        p.d = cohens_d(groups[i].values, groups[j].values);
      } catch (const DataError&) {
        p.d = std::nan("");
      }
      p.p_adjusted = std::min(1.0, p.p * pairs);
      p.significant = p.p < r.threshold;
      r.pairs.push_back(p);
    }
  return r;
}

std::string_view to_string(Effect e) {
  switch (e) {
    case Effect::Small:
      return "Small";
    case Effect::Medium:
      return "Medium";
    case Effect::Large:
      return "Large";
  }
  return "Small";
}

Effect effect_label_d(double d) {
  const double a = std::abs(d);
  if (a >= 0.8) return Effect::Large;
  if (a >= 0.5) return Effect::Medium;
  return Effect::Small;
}

Effect effect_label_eta2(double eta2) {
  if (eta2 >= 0.14) return Effect::Large;
  if (eta2 >= 0.06) return Effect::Medium;
  return Effect::Small;
}

std::string stars(double p, int max_stars) {
  int n = p < 0.001 ? 3 : p < 0.01 ? 2 : p < 0.05 ? 1 : 0;
  return std::string(std::size_t(std::min(n, max_stars)), '*');
}

// ---------------------------------------------------------------------------
// Report

std::string_view to_string(Grouping g) { return g == Grouping::Method ? "method" : "library"; }

Grouping grouping_from_string(std::string_view s) {
  if (s == "method") return Grouping::Method;
  if (s == "library") return Grouping::Library;
  throw ConfigError("unknown grouping '" + std::string(s) + "' (expected method or library)");
}

std::vector<Group> group_rates(const std::vector<eval::GridRow>& rows, Grouping grouping) {
  std::vector<Group> groups;
  for (const auto& r : rows) {
    if (r.epsilon == 0.0) continue;
    const std::string& key = grouping == Grouping::Method ? r.method : r.library;
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) { return g.label == key; });
    if (it == groups.end()) {
      groups.push_back({key, {}});
      it = groups.end() - 1;
    }
    it->values.push_back(r.asr);
  }
  if (groups.size() < 2)
    throw DataError("statistics need at least two " + std::string(to_string(grouping)) +
                    " groups, found " + std::to_string(groups.size()));
  for (const auto& g : groups)
    if (g.values.size() < 2)
      throw DataError("group '" + g.label + "' has fewer than two success rates");
  return groups;
}

std::string checksum(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[std::size_t(i)] = hex[h & 0xf];
  return out;
}

Tables analyze(const std::vector<Group>& groups, Grouping grouping, std::string_view input,
               double alpha) {
  require_groups(groups, "analyze");
  Tables t;
  const std::string head = grouping == Grouping::Method ? "Method" : "Library";
  std::string& rep = t.report;
  rep = "# qadv statistics report\n";
  rep += "input_checksum: fnv1a64:" + checksum(input) + "\n";
  rep += "grouping: " + std::string(to_string(grouping)) + "\n";
  rep += "alpha: " + text::format_double(alpha) + "\n";
  rep += "groups: " + std::to_string(groups.size()) + "\n";

  // Descriptive statistics, highest mean first.
  std::vector<Descriptive> desc;
  for (const auto& g : groups) desc.push_back(describe(g));
  std::stable_sort(desc.begin(), desc.end(), [](const auto& a, const auto& b) { return a.mean > b.mean; });
  t.descriptive = head + ",N,Mean(%),Std(%),Min(%),Max(%)\n";
  for (const auto& d : desc)
    t.descriptive += csv_cell(d.label) + "," + std::to_string(d.n) + "," + num(100 * d.mean, 2) + "," +
                     num(100 * d.sd, 2) + "," + num(100 * d.min, 2) + "," + num(100 * d.max, 2) + "\n";

  rep += "\n[normality]\n";
  for (const auto& g : groups) {
    try {
      const auto sw = shapiro_wilk(g.values);
      rep += g.label + ": W = " + num(sw.w, 4) + ", p = " + num(sw.p, 4) +
             (sw.p < alpha ? " (non-normal)" : " (normal)") + "\n";
    } catch (const DataError& e) {
      rep += g.label + ": not tested (" + e.what() + ")\n";
    }
  }

  const Levene lv = levene(groups);
  const Anova an = anova_oneway(groups);
  rep += "\n[homogeneity]\nlevene: W = " + num(lv.w, 4) + ", df = (" + num(lv.df1, 0) + ", " +
         num(lv.df2, 0) + "), p = " + num(lv.p, 4) + "\n";
  rep += "\n[anova]\nF(" + num(an.df1, 0) + "," + num(an.df2, 0) + ") = " + num(an.f, 4) +
         ", p = " + num(an.p, 4) + ", eta_squared = " + num(an.eta_squared, 4) + "\n";
  rep += "ss_between = " + text::format_double(an.ss_between) +
         ", ss_within = " + text::format_double(an.ss_within) +
         ", ss_total = " + text::format_double(an.ss_total) + "\n";

  const std::string eta_label(to_string(effect_label_eta2(an.eta_squared)));
  t.tests = "Statistical Test,Test Statistic,p-value,Effect Size,Interpretation\n";
  t.tests += "Levene's Test,W = " + num(lv.w, 4) + "," + num(lv.p, 4) + ",---," +
             (lv.p >= alpha ? "Homogeneity satisfied" : "Homogeneity violated") + "\n";
  const std::string f_cell = "F(" + num(an.df1, 0) + "," + num(an.df2, 0) + ") = " + num(an.f, 4);
  t.tests += "One-way ANOVA," + csv_cell(f_cell) + "," + num(an.p, 4) + stars(an.p) + ",η² = " +
             num(an.eta_squared, 4) + "," + eta_label + " effect\n";

  const auto tk = tukey_hsd(groups, alpha);
  t.tukey = "Group 1,Group 2,Mean Diff,95% CI Lower,95% CI Upper,p-value\n";
  t.tukey_significant = "Group 1,Group 2,Mean Diff(%),p-value,Significant,Level\n";
  rep += "\n[tukey]\nfwer: " + text::format_double(alpha) + "\n";
  for (const auto& p : tk) {
    const std::string pv = num(p.p, 4) + stars(p.p, 2);
    t.tukey += csv_cell(p.group1) + "," + csv_cell(p.group2) + "," + num(100 * p.mean_diff, 2) + "," +
               num(100 * p.ci_lower, 2) + "," + num(100 * p.ci_upper, 2) + "," + pv + "\n";
    if (p.reject) {
      const char* level = p.p < 0.001 ? "High" : p.p < 0.01 ? "Moderate" : "Low";
      t.tukey_significant += csv_cell(p.group1) + "," + csv_cell(p.group2) + "," +
                             num(100 * p.mean_diff, 2) + "," + pv + ",Yes," + level + "\n";
    }
    rep += p.group1 + " - " + p.group2 + ": q = " + num(p.q, 4) + ", p = " + num(p.p, 4) +
           (p.reject ? ", reject" : "") + "\n";
  }

  const auto bf = bonferroni_ttests(groups, alpha);
  rep += "\n[bonferroni]\npairs: " + std::to_string(bf.pairs.size()) +
         "\nthreshold: " + num(bf.threshold, 4) + "\n";
  t.bonferroni = "Group 1,Group 2,Mean Diff,t,p-value,Cohen's d,Sig\n";
  for (const auto& p : bf.pairs) {
    t.bonferroni += csv_cell(p.group1) + "," + csv_cell(p.group2) + "," + num(p.mean_diff, 4) + "," +
                    (std::isnan(p.t) ? std::string("NA") : num(p.t, 3)) + "," + num(p.p, 4) + "," +
                    (std::isnan(p.d) ? std::string("NA") : num(p.d, 3)) + "," +
                    (p.significant ? "***" : "") + "\n";
  }

  std::vector<const BonferroniPair*> by_d;
  for (const auto& p : bf.pairs)
    if (!std::isnan(p.d)) by_d.push_back(&p);
  std::stable_sort(by_d.begin(), by_d.end(),
                   [](auto a, auto b) { return std::abs(a->d) > std::abs(b->d); });
  t.effect_sizes = "Group 1,Group 2,Cohen's d,Effect Size\n";
  for (const auto* p : by_d)
    t.effect_sizes += csv_cell(p->group1) + "," + csv_cell(p->group2) + "," + num(std::abs(p->d), 3) +
                      "," + std::string(to_string(effect_label_d(p->d))) + "\n";
  return t;
}

}  // namespace qadv::stats
