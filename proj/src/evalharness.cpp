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

#include "qadv/evalharness.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "qadv/error.hpp"
#include "qadv/qmdp.hpp"
#include "qadv/text_format.hpp"

namespace qadv::eval {

using nlohmann::json;

std::string_view to_string(Mode m) { return m == Mode::FixedMask ? "fixed_mask" : "episodic"; }

Mode mode_from_string(std::string_view s) {
  if (s == "fixed_mask") return Mode::FixedMask;
  if (s == "episodic") return Mode::Episodic;
  throw ConfigError("unknown sweep mode '" + std::string(s) + "' (expected fixed_mask or episodic)");
}

void SweepConfig::validate() const {
  if (methods.empty()) throw ConfigError("sweep: no methods");
  if (epsilons.empty()) throw ConfigError("sweep: empty epsilon grid");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] >= 0.0) || std::isinf(epsilons[i]))
      throw ConfigError("sweep: epsilons must be finite and >= 0");
    if (i > 0 && !(epsilons[i] > epsilons[i - 1]))
      throw ConfigError("sweep: epsilon grid must be strictly ascending");
  }
  if (sample_count < 1) throw ConfigError("sweep: sample_count must be >= 1");
  if (library.empty() || library.find(',') != std::string::npos)
    throw ConfigError("sweep: library label must be non-empty and comma-free");
  attack.validate();
}

namespace {

/// Runs f(i) for i in [0, n) on up to `threads` workers. Each index is
/// processed exactly once; the caller stores results by index.
template <class F>
void parallel_for(Index n, unsigned threads, F&& f) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = unsigned(std::min<Index>(threads, std::max<Index>(n, 1)));
  if (threads <= 1) {
    for (Index i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<Index> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (Index i = next++; i < n; i = next++) f(i);
    });
  for (auto& th : pool) th.join();
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  // splitmix64 finalizer over a running hash
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return h;
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / double(v.size() - 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(text::trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::uint64_t sample_seed(std::uint64_t seed, Method method, double epsilon, Index index) {
  std::uint64_t bits = 0;
  static_assert(sizeof(bits) == sizeof(epsilon));
  std::memcpy(&bits, &epsilon, sizeof(bits));
  return mix(mix(mix(mix(0, seed), std::uint64_t(method)), bits), std::uint64_t(index));
}

std::vector<Sample> select_correct(const ModelBundle& model, const data::Dataset& test, Index n,
                                   std::uint64_t seed, std::string* warning) {
  if (test.rows() == 0) throw DataError("select_correct: empty test set");
  if (n < 1) throw ConfigError("select_correct: n must be >= 1");
  if (test.cols() != model.columns_count())
    throw ShapeError("select_correct: test set has " + std::to_string(test.cols()) +
                     " columns, model expects " + std::to_string(model.columns_count()));
  std::vector<Sample> correct;
  mdp::Rng rng(seed);
  for (Index r = 0; r < test.rows(); ++r) {
    const Eigen::VectorXd x = test.x.row(r).transpose();
    const int label = test.labels[std::size_t(r)];
    const auto trace = mdp::run_episode(model, x, label, 0.0, rng);
    if (trace.predicted != label) continue;
    correct.push_back({r, x, trace.column_mask(model.layout), label, 1 - label});
  }
  if (correct.empty()) throw DataError("select_correct: the model classifies no test row correctly");
  if (Index(correct.size()) < n) {
    if (warning)
      *warning = "only " + std::to_string(correct.size()) + " correctly classified rows (asked for " +
                 std::to_string(n) + ")";
    return correct;
  }
  std::mt19937_64 pick(seed);
  std::shuffle(correct.begin(), correct.end(), pick);
  correct.resize(std::size_t(n));
  std::sort(correct.begin(), correct.end(), [](const Sample& a, const Sample& b) { return a.row < b.row; });
  return correct;
}

CellResult run_cell(const ModelBundle& model, const std::vector<Sample>& samples, Method method,
                    double epsilon, const SweepConfig& cfg,
                    const constraints::Projector* constraints) {
  attacks::AttackConfig acfg = cfg.attack.with(method);
  acfg.epsilon = epsilon;
  acfg.validate();
  CellResult cell;
  cell.method = method;
  cell.epsilon = epsilon;
  cell.n = Index(samples.size());
  cell.samples.resize(samples.size());

  parallel_for(cell.n, cfg.threads, [&](Index i) {
    const Sample& s = samples[std::size_t(i)];
    SampleOutcome& out = cell.samples[std::size_t(i)];
    out.row = s.row;
    try {
      const auto r = attacks::run(model.guesser, s.x, s.mask, s.target, acfg, constraints);
      out.component = r.method;
      out.l2 = r.l2_norm;
      out.linf = r.linf_norm;
      out.seconds = r.wall_time_seconds;
      if (r.constraint_report) out.resolution = int(r.constraint_report->resolution);
      bool success = r.success;
      if (cfg.mode == Mode::Episodic) {
        mdp::Rng rng(sample_seed(cfg.seed, method, epsilon, i));
        success = mdp::run_episode(model, r.x_adv, s.label, 0.0, rng).predicted == s.target;
      }
      out.attack_success = success;
      out.counted = success && (cfg.keep_irreconcilable || !r.irreconcilable());
    } catch (const std::exception&) {
      out.error = true;
    }
  });

  std::vector<double> l2, linf, secs;
  for (const auto& o : cell.samples) {
    if (o.error) {
      ++cell.errors;
      continue;
    }
    cell.successes += o.counted ? 1 : 0;
    l2.push_back(o.l2);
    linf.push_back(o.linf);
    secs.push_back(o.seconds);
    if (o.resolution < 0)
      ++cell.unconstrained;
    else
      ++cell.resolutions[std::size_t(o.resolution)];
  }
  if (cell.n > 0) {
    cell.asr = double(cell.successes) / double(cell.n);
    cell.robust_accuracy = double(cell.n - cell.successes) / double(cell.n);
  }
  cell.mean_l2 = mean(l2);
  cell.mean_linf = mean(linf);
  cell.mean_time_s = mean(secs);
  cell.std_time_s = sample_sd(secs);
  return cell;
}

std::vector<Inversion> find_inversions(const SweepResult& sweep) {
  std::vector<Inversion> out;
  for (Index m = 0; m < Index(sweep.methods.size()); ++m)
    for (Index e = 1; e < Index(sweep.epsilons.size()); ++e) {
      const double prev = sweep.heatmap(m, e - 1), cur = sweep.heatmap(m, e);
      if (cur < prev)
        out.push_back({sweep.methods[std::size_t(m)], sweep.epsilons[std::size_t(e - 1)],
                       sweep.epsilons[std::size_t(e)], prev - cur});
    }
  return out;
}

SweepResult run_sweep(const ModelBundle& model, const data::Dataset& test, const SweepConfig& cfg,
                      const constraints::Projector* constraints) {
  cfg.validate();
  SweepResult sweep;
  sweep.methods = cfg.methods;
  sweep.epsilons = cfg.epsilons;
  const auto samples = select_correct(model, test, cfg.sample_count, cfg.seed, &sweep.warning);
  sweep.samples = Index(samples.size());
  sweep.heatmap.resize(Index(cfg.methods.size()), Index(cfg.epsilons.size()));
  for (std::size_t m = 0; m < cfg.methods.size(); ++m)
    for (std::size_t e = 0; e < cfg.epsilons.size(); ++e) {
      sweep.cells.push_back(run_cell(model, samples, cfg.methods[m], cfg.epsilons[e], cfg, constraints));
      sweep.heatmap(Index(m), Index(e)) = sweep.cells.back().asr;
    }
  sweep.inversions = find_inversions(sweep);
  return sweep;
}

std::pair<double, double> perturbation_norms(const Eigen::VectorXd& x, const Eigen::VectorXd& x_adv) {
  if (x.size() != x_adv.size()) throw ShapeError("perturbation_norms: length mismatch");
  const Eigen::VectorXd d = x_adv - x;
  return {d.norm(), d.size() ? d.cwiseAbs().maxCoeff() : 0.0};
}

std::string grid_csv(const SweepResult& sweep, const SweepConfig& cfg) {
  using text::format_double;
  std::string out =
      "method,library,epsilon,norm,n,successes,asr,robust_accuracy,mean_l2,mean_linf,"
      "automatic,iterative,irreconcilable,unconstrained,errors\n";
  for (const auto& c : sweep.cells) {
    out += std::string(attacks::to_string(c.method)) + "," + cfg.library + "," +
           format_double(c.epsilon) + "," + std::string(attacks::to_string(cfg.attack.norm)) + "," +
           std::to_string(c.n) + "," + std::to_string(c.successes) + "," + format_double(c.asr) +
           "," + format_double(c.robust_accuracy) + "," + format_double(c.mean_l2) + "," +
           format_double(c.mean_linf) + "," + std::to_string(c.resolutions[0]) + "," +
           std::to_string(c.resolutions[1]) + "," + std::to_string(c.resolutions[2]) + "," +
           std::to_string(c.unconstrained) + "," + std::to_string(c.errors) + "\n";
  }
  return out;
}

std::string heatmap_csv(const SweepResult& sweep) {
  std::string out = "method";
  for (double e : sweep.epsilons) out += "," + text::format_double(e);
  out += "\n";
  for (std::size_t m = 0; m < sweep.methods.size(); ++m) {
    out += std::string(attacks::to_string(sweep.methods[m]));
    for (Index e = 0; e < sweep.heatmap.cols(); ++e)
      out += "," + text::format_double(sweep.heatmap(Index(m), e));
    out += "\n";
  }
  return out;
}

std::string timing_csv(const SweepResult& sweep) {
  std::string out = "method,epsilon,n,mean_time_s,std_time_s,min_time_s,max_time_s\n";
  for (const auto& c : sweep.cells) {
    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (const auto& s : c.samples) {
      if (s.error) continue;
      lo = any ? std::min(lo, s.seconds) : s.seconds;
      hi = any ? std::max(hi, s.seconds) : s.seconds;
      any = true;
    }
    out += std::string(attacks::to_string(c.method)) + "," + text::format_double(c.epsilon) + "," +
           std::to_string(c.n) + "," + text::fixed(c.mean_time_s, 6) + "," +
           text::fixed(c.std_time_s, 6) + "," + text::fixed(lo, 6) + "," + text::fixed(hi, 6) + "\n";
  }
  return out;
}

std::string summary_csv(const SweepResult& sweep) {
  struct Row {
    std::string method;
    double avg = 0, max = 0, min = 0, l2 = 0, time = 0;
  };
  std::vector<Row> rows;
  const std::size_t ne = sweep.epsilons.size();
  for (std::size_t m = 0; m < sweep.methods.size(); ++m) {
    Row r;
    r.method = std::string(attacks::to_string(sweep.methods[m]));
    std::vector<double> asr, l2, t;
    for (std::size_t e = 0; e < ne; ++e) {
      const auto& c = sweep.cells[m * ne + e];
      asr.push_back(c.asr);
      l2.push_back(c.mean_l2);
      t.push_back(c.mean_time_s);
    }
    r.avg = mean(asr);
    r.max = *std::max_element(asr.begin(), asr.end());
    r.min = *std::min_element(asr.begin(), asr.end());
    r.l2 = mean(l2);
    r.time = mean(t);
    rows.push_back(r);
  }
  std::vector<std::size_t> by_time(rows.size());
  std::iota(by_time.begin(), by_time.end(), std::size_t(0));
  std::stable_sort(by_time.begin(), by_time.end(),
                   [&](auto a, auto b) { return rows[a].time < rows[b].time; });
  std::vector<std::size_t> rank(rows.size());
  for (std::size_t i = 0; i < by_time.size(); ++i) rank[by_time[i]] = i + 1;

  std::string out = "Attack Method,Avg. ASR(%),Max ASR(%),Min ASR(%),Avg. L2 Pert.,Avg. Time(s),Efficiency Rank\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out += r.method + "," + text::fixed(100 * r.avg, 2) + "," + text::fixed(100 * r.max, 2) + "," +
           text::fixed(100 * r.min, 2) + "," + text::fixed(r.l2, 3) + "," + text::fixed(r.time, 3) +
           "," + std::to_string(rank[i]) + "\n";
  }
  return out;
}

std::string report_json(const SweepResult& sweep, const SweepConfig& cfg,
                        const std::string& config_echo) {
  json j;
  j["format"] = "qadv-sweep-report";
  j["config"] = config_echo.empty() ? json::object() : json::parse(config_echo);
  j["environment"] = {{"compiler", __VERSION__},
                      {"cxx_standard", long(__cplusplus)},
                      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                    std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                    std::to_string(EIGEN_MINOR_VERSION)},
                      {"threads", cfg.threads},
                      {"hardware_concurrency", std::thread::hardware_concurrency()}};
  j["samples"] = sweep.samples;
  if (!sweep.warning.empty()) j["warning"] = sweep.warning;
  json cells = json::array();
  for (const auto& c : sweep.cells) {
    json per = json::array();
    for (const auto& s : c.samples)
      per.push_back({{"row", s.row},
                     {"success", s.counted},
                     {"attack_success", s.attack_success},
                     {"error", s.error},
                     {"component", attacks::to_string(s.component)},
                     {"l2", s.l2},
                     {"linf", s.linf},
                     {"seconds", s.seconds},
                     {"resolution", s.resolution < 0 ? std::string("none")
                                                     : std::string(constraints::to_string(
                                                           constraints::Resolution(s.resolution)))}});
    cells.push_back({{"method", attacks::to_string(c.method)},
                     {"epsilon", c.epsilon},
                     {"asr", c.asr},
                     {"robust_accuracy", c.robust_accuracy},
                     {"mean_l2", c.mean_l2},
                     {"mean_linf", c.mean_linf},
                     {"mean_time_s", c.mean_time_s},
                     {"std_time_s", c.std_time_s},
                     {"automatic", c.resolutions[0]},
                     {"iterative", c.resolutions[1]},
                     {"irreconcilable", c.resolutions[2]},
                     {"unconstrained", c.unconstrained},
                     {"errors", c.errors},
                     {"samples", per}});
  }
  j["cells"] = cells;
  json inv = json::array();
  for (const auto& i : sweep.inversions)
    inv.push_back({{"method", attacks::to_string(i.method)},
                   {"from_epsilon", i.from_epsilon},
                   {"to_epsilon", i.to_epsilon},
                   {"drop", i.drop}});
  j["inversions"] = inv;
  return j.dump(1) + "\n";
}

std::vector<GridRow> parse_grid_csv(std::string_view content, const std::string& source) {
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t number = 0;
  std::map<std::string, std::size_t> col;
  std::vector<GridRow> rows;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    const auto cells = split(line);
    if (col.empty()) {
      for (std::size_t i = 0; i < cells.size(); ++i) col[cells[i]] = i;
      for (const char* need : {"method", "epsilon", "asr"})
        if (!col.count(need))
          throw ParseError(source, number, std::string("grid header lacks column '") + need + "'");
      continue;
    }
    if (cells.size() != col.size())
      throw ParseError(source, number,
                       "expected " + std::to_string(col.size()) + " cells, found " +
                           std::to_string(cells.size()));
    GridRow r;
    r.method = cells[col["method"]];
    r.library = col.count("library") ? cells[col["library"]] : "native";
    try {
      std::size_t used = 0;
      r.epsilon = std::stod(cells[col["epsilon"]], &used);
      r.asr = std::stod(cells[col["asr"]]);
    } catch (const std::exception&) {
      throw ParseError(source, number, "non-numeric epsilon or asr");
    }
    if (!(r.asr >= 0.0 && r.asr <= 1.0)) throw ParseError(source, number, "asr outside [0, 1]");
    rows.push_back(std::move(r));
  }
  if (col.empty()) throw ParseError(source, 1, "empty grid file");
  return rows;
}

}  // namespace qadv::eval
