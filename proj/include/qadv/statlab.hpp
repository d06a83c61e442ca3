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

#pragma once

// Statistical battery over grouped success rates: Shapiro-Wilk, Levene,
// one-way ANOVA with eta squared, Tukey HSD (Tukey-Kramer for unequal n),
// pooled pairwise t-tests with Bonferroni correction, and Cohen's d.
//
// The distribution functions are self-contained: regularized incomplete beta
// for F and t, and a Gauss-Legendre double integral for the studentized range.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qadv/evalharness.hpp"

namespace qadv::stats {

// ---------------------------------------------------------------------------
// Distributions

double normal_cdf(double z);
/// Wichura's AS241 (PPND16), accurate to about 1e-16. p in (0, 1).
double normal_quantile(double p);
/// I_x(a, b).
double incomplete_beta(double x, double a, double b);
double f_cdf(double f, double df1, double df2);
double f_sf(double f, double df1, double df2);
double t_cdf(double t, double df);
/// P(|T| >= |t|).
double t_two_sided_p(double t, double df);
/// P(Q <= q) for the studentized range of k means with df error degrees of
/// freedom (df = infinity allowed).
double ptukey(double q, double k, double df);
double qtukey(double p, double k, double df);

// ---------------------------------------------------------------------------
// Tests

struct Group {
  std::string label;
  std::vector<double> values;
};

struct Descriptive {
  std::string label;
  Index n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample (n - 1)
  double min = 0.0;
  double max = 0.0;
};
Descriptive describe(const Group& g);

struct ShapiroWilk {
  double w = 0.0;
  double p = 0.0;
};
/// Royston's approximation; 3 <= n <= 5000. Throws DataError on n out of
/// range or zero variance.
ShapiroWilk shapiro_wilk(std::vector<double> xs);

struct Levene {
  double w = 0.0;
  double df1 = 0.0;
  double df2 = 0.0;
  double p = 0.0;
};
/// Absolute deviations from the group means.
Levene levene(const std::vector<Group>& groups);

struct Anova {
  double f = 0.0;
  double df1 = 0.0;
  double df2 = 0.0;
  double p = 0.0;
  double eta_squared = 0.0;
  double ss_between = 0.0;
  double ss_within = 0.0;
  double ss_total = 0.0;
  double ms_within = 0.0;
};
Anova anova_oneway(const std::vector<Group>& groups);

struct TukeyPair {
  std::string group1;  // the group with the larger mean
  std::string group2;
  double mean_diff = 0.0;  // group1 - group2, >= 0
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double q = 0.0;
  double p = 0.0;
  bool reject = false;
};
/// Pairs ordered by group1 mean (descending), then group2 mean (ascending).
std::vector<TukeyPair> tukey_hsd(const std::vector<Group>& groups, double fwer = 0.05);

struct TTest {
  double t = 0.0;
  double df = 0.0;
  double p = 0.0;
};
/// Equal-variance two-sample t-test.
TTest pooled_ttest(const std::vector<double>& a, const std::vector<double>& b);

/// (mean(a) - mean(b)) / pooled sd. Throws DataError on zero pooled variance.
double cohens_d(const std::vector<double>& a, const std::vector<double>& b);

struct BonferroniPair {
  std::string group1;
  std::string group2;
  double mean_diff = 0.0;  // mean(group1) - mean(group2)
  double t = 0.0;
  double p = 0.0;
  double p_adjusted = 0.0;  // min(1, p * pairs)
  double d = 0.0;
  bool significant = false;  // p < alpha / pairs
};
struct Bonferroni {
  double alpha = 0.05;
  double threshold = 0.0;
  std::vector<BonferroniPair> pairs;  // input order, i < j
};
Bonferroni bonferroni_ttests(const std::vector<Group>& groups, double alpha = 0.05);

enum class Effect { Small, Medium, Large };
std::string_view to_string(Effect e);
/// |d| >= 0.8 Large, >= 0.5 Medium, else Small.
Effect effect_label_d(double d);
/// eta^2 >= 0.14 Large, >= 0.06 Medium, else Small.
Effect effect_label_eta2(double eta2);

/// "***" p < 0.001, "**" p < 0.01, "*" p < 0.05.
std::string stars(double p, int max_stars = 3);

// ---------------------------------------------------------------------------
// Report over an evaluation grid

enum class Grouping { Method, Library };
std::string_view to_string(Grouping g);
Grouping grouping_from_string(std::string_view s);

/// Groups ASR values by method or library in first-appearance order.
/// Rows at epsilon 0 are ignored. Throws DataError with fewer than two
/// groups or a group with fewer than two values.
std::vector<Group> group_rates(const std::vector<eval::GridRow>& rows, Grouping grouping);

struct Tables {
  std::string descriptive;     // Method,N,Mean(%),Std(%),Min(%),Max(%)
  std::string tests;           // Levene and ANOVA
  std::string tukey;           // every pair
  std::string tukey_significant;
  std::string bonferroni;
  std::string effect_sizes;
  std::string report;          // structured text, including the input checksum
};

/// Runs the battery in order: normality, homogeneity, ANOVA, Tukey,
/// Bonferroni, effect sizes.
Tables analyze(const std::vector<Group>& groups, Grouping grouping, std::string_view input,
               double alpha = 0.05);

/// FNV-1a 64 as 16 hex digits.
std::string checksum(std::string_view bytes);

}  // namespace qadv::stats
