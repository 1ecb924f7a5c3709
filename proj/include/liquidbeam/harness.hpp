#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "liquidbeam/channel.hpp"
#include "liquidbeam/config.hpp"
#include "liquidbeam/glnn.hpp"
#include "liquidbeam/io.hpp"
#include "liquidbeam/metrics.hpp"
#include "liquidbeam/scenario_io.hpp"
#include "liquidbeam/svg.hpp"
#include "liquidbeam/version.hpp"
#include "liquidbeam/wmmse.hpp"

namespace lb {

enum class ExperimentKind { kSeVsPower, kSeVsCee, kDynamic, kTiming };

inline const char* experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kSeVsPower: return "se-vs-power";
    case ExperimentKind::kSeVsCee: return "se-vs-cee";
    case ExperimentKind::kDynamic: return "dynamic";
    case ExperimentKind::kTiming: return "timing";
  }
  return "?";
}

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::kSeVsPower;
  ScenarioConfig scenario;
  GlnnConfig glnn;
  WmmseConfig wmmse;
  std::vector<std::string> algorithms{"glnn", "wmmse"};
  std::vector<double> sweep;          // dBm, dB or antenna counts by kind
  std::size_t evaluation_samples = 500;
  std::size_t repetitions = 1;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::size_t restarts = 0;           // >0 adds the best-of-restarts upper bound
  std::size_t parallel = 1;
  std::size_t smoothing_window = 50;
  double dynamic_cee_db = -10.0;
  std::vector<PhaseSpec> dynamic_phases{{6.0, 700}, {15.0, 600}, {30.0, 500}};
  std::size_t timing_samples = 50;
  bool lambda_search = false;

  void validate() const {
    if (sweep.empty()) throw ConfigError("experiment: sweep must be non-empty");
    if (repetitions < 1) throw ConfigError("experiment.repetitions must be >= 1");
    if (evaluation_samples < 1)
      throw ConfigError("experiment.evaluation_samples must be >= 1");
    for (const auto& a : algorithms)
      if (a != "glnn" && a != "wmmse")
        throw ConfigError("experiment: unknown algorithm '" + a + "'");
  }
};

struct ResultRow {
  std::string algorithm;
  double sweep_value = 0.0;
  std::uint64_t seed = 0;
  std::size_t slot = 0;
  int warmup = 0;
  double rate_true = 0.0;
  double rate_est = 0.0;
  double loss = 0.0;
  std::vector<double> per_user;
  double rate_smoothed = std::numeric_limits<double>::quiet_NaN();
  double wall_time_us = 0.0;
  std::string event;
  std::string host;
};

struct SummaryRow {
  std::string algorithm;
  double sweep_value = 0.0;
  std::size_t samples = 0;
  double mean_rate_true = 0.0;
  double std_rate_true = 0.0;
  double median_wall_time_us = 0.0;
  double mean_outer_iters = 0.0;  // WMMSE only
};

struct ExperimentResult {
  std::string kind;
  std::size_t num_users = 0;
  std::vector<ResultRow> rows;
  std::vector<SummaryRow> summary;
  std::string meta;
};

namespace detail {

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline std::string host_id() {
  const char* env = std::getenv("HOSTNAME");
  if (env && *env) return env;
  return "unknown-host";
}

inline std::uint64_t cell_seed(const ExperimentSpec& spec, std::size_t sweep_index,
                               std::size_t rep, std::size_t alg_id) {
  return CounterRng::keyed(spec.seed, static_cast<std::uint64_t>(spec.kind) * 4096 + sweep_index,
                           rep * 16 + alg_id)
      .next_u64();
}

struct CellOutput {
  std::vector<ResultRow> rows;
  std::string meta;
  std::vector<double> outer_iters;  // per WMMSE sample
};

inline std::vector<ChannelSample> sample_stream(const ScenarioConfig& scenario,
                                                std::size_t count,
                                                std::optional<double> cee_db) {
  if (scenario.total_slots() < count)
    throw ConfigError("scenario.phase_table provides " +
                      std::to_string(scenario.total_slots()) + " slots but " +
                      std::to_string(count) +
                      " are needed (glnn.warmup_samples + experiment.evaluation_samples)");
  std::vector<ChannelSample> samples;
  samples.reserve(count);
  for (std::size_t slot = 0; slot < count; ++slot)
    samples.push_back(make_sample(scenario, slot, cee_db));
  return samples;
}

inline std::vector<ResultRow> glnn_rows(const std::string& algorithm, double sweep_value,
                                        std::uint64_t seed, const GlnnConfig& cfg,
                                        const ScenarioConfig& scenario,
                                        const std::vector<ChannelSample>& samples) {
  GlnnRunner runner(cfg, scenario.total_rx(), scenario.num_users, seed);
  auto records = run_online(runner, samples);
  std::vector<ResultRow> rows;
  rows.reserve(records.size());
  for (const auto& rec : records) {
    ResultRow row;
    row.algorithm = algorithm;
    row.sweep_value = sweep_value;
    row.seed = seed;
    row.slot = rec.slot;
    row.warmup = rec.warmup ? 1 : 0;
    row.rate_true = rec.rate_true;
    row.rate_est = rec.rate_est;
    row.loss = rec.loss;
    row.per_user = rec.per_user;
    row.wall_time_us = rec.wall_time_us;
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Linear search over the incentive threshold during the warm-up window,
/// scored by the spectral efficiency the optimizer can observe.
inline double choose_lambda(const GlnnConfig& base, const ScenarioConfig& scenario,
                            const std::vector<ChannelSample>& samples, std::uint64_t seed,
                            std::string* note) {
  static const double kGrid[] = {1.5, 2.0, 2.5, 3.0};
  const std::size_t warmup = std::min<std::size_t>(base.warmup_samples, samples.size());
  if (warmup < 10) return base.lambda;
  double best_lambda = base.lambda;
  double best_score = -std::numeric_limits<double>::infinity();
  for (double lambda : kGrid) {
    GlnnConfig cfg = base;
    cfg.lambda = lambda;
    GlnnRunner runner(cfg, scenario.total_rx(), scenario.num_users, seed);
    double score = 0.0;
    std::size_t counted = 0;
    for (std::size_t i = 0; i < warmup; ++i) {
      auto step = runner.step_sample(samples[i]);
      if (i >= warmup / 2) {
        score += step.report_est.total;
        ++counted;
      }
    }
    score /= std::max<std::size_t>(counted, 1);
    if (score > best_score) {
      best_score = score;
      best_lambda = lambda;
    }
  }
  if (note)
    *note += "lambda_search: chose lambda=" + format_double(best_lambda) + "\n";
  return best_lambda;
}

inline CellOutput run_glnn_cell(const ExperimentSpec& spec, double sweep_value,
                                std::uint64_t seed, const GlnnConfig& cfg,
                                const ScenarioConfig& scenario,
                                const std::vector<ChannelSample>& samples) {
  CellOutput out;
  GlnnConfig used = cfg;
  if (spec.lambda_search)
    used.lambda = choose_lambda(cfg, scenario, samples, seed, &out.meta);
  out.rows = glnn_rows("glnn", sweep_value, seed, used, scenario, samples);
  return out;
}

inline CellOutput run_wmmse_cell(const ExperimentSpec& spec, double sweep_value,
                                 std::uint64_t seed, double power_mw,
                                 const ScenarioConfig& scenario,
                                 const std::vector<ChannelSample>& samples,
                                 std::size_t skip_leading) {
  CellOutput out;
  const std::vector<double> weights(scenario.num_users, 1.0);
  LossParams lp;
  lp.beta = spec.glnn.beta;
  lp.gamma = spec.glnn.gamma;
  lp.lambda = spec.glnn.lambda;
  lp.num_users = scenario.num_users;
  for (std::size_t i = skip_leading; i < samples.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    auto solved = wmmse_solve(samples[i].h_est, power_mw, spec.glnn.noise_power_mw, weights,
                              spec.wmmse);
    const auto t1 = std::chrono::steady_clock::now();

    auto report_true = sum_se(samples[i].h_true, solved.precoder, weights,
                              spec.glnn.noise_power_mw);
    auto report_est = sum_se(samples[i].h_est, solved.precoder, weights,
                             spec.glnn.noise_power_mw);
    ResultRow row;
    row.algorithm = "wmmse";
    row.sweep_value = sweep_value;
    row.seed = seed;
    row.slot = samples[i].slot;
    row.warmup = 0;
    row.rate_true = report_true.total;
    row.rate_est = report_est.total;
    row.loss = loss(report_est, lp);
    row.per_user = report_true.per_user;
    row.wall_time_us = std::chrono::duration<double, std::micro>(t1 - t0).count();
    out.rows.push_back(std::move(row));
    out.outer_iters.push_back(static_cast<double>(solved.outer_iterations));
  }
  return out;
}

/// Best-of-restarts GLNN on perfect channel information; the highest-mean
/// restart's trajectory is reported.
inline CellOutput run_upper_bound_cell(const ExperimentSpec& spec, double sweep_value,
                                       std::uint64_t base_seed, const GlnnConfig& cfg,
                                       const ScenarioConfig& scenario,
                                       const std::vector<ChannelSample>& perfect_samples) {
  CellOutput out;
  double best_mean = -std::numeric_limits<double>::infinity();
  std::vector<ResultRow> best_rows;
  for (std::size_t r = 0; r < spec.restarts; ++r) {
    const std::uint64_t seed = CounterRng(base_seed + 0x9E37 * (r + 1)).next_u64();
    auto rows = glnn_rows("upper_bound", sweep_value, seed, cfg, scenario, perfect_samples);
    std::vector<double> eval;
    for (const auto& row : rows)
      if (!row.warmup) eval.push_back(row.rate_true);
    const double m = mean_of(eval);
    if (m > best_mean) {
      best_mean = m;
      best_rows = std::move(rows);
    }
  }
  out.rows = std::move(best_rows);
  out.meta = "upper_bound(" + format_double(sweep_value) + "): best of " +
             std::to_string(spec.restarts) + " restarts, mean " + format_double(best_mean) +
             "\n";
  return out;
}

inline void run_cells_parallel(std::vector<std::function<CellOutput()>>& tasks,
                               std::vector<CellOutput>& outputs, std::size_t workers) {
  outputs.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(tasks.size());
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        outputs[i] = tasks[i]();
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(workers, tasks.size()));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (!e.empty()) throw ConfigError("experiment cell failed: " + e);
}

inline void append_summaries(ExperimentResult& result) {
  // Group rows by (algorithm, sweep_value); evaluation rows only.
  std::vector<std::pair<std::string, double>> keys;
  for (const auto& row : result.rows) {
    if (row.warmup || row.algorithm == "meta") continue;
    std::pair<std::string, double> key{row.algorithm, row.sweep_value};
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  std::sort(keys.begin(), keys.end());
  for (const auto& key : keys) {
    std::vector<double> rates, walls;
    for (const auto& row : result.rows) {
      if (row.warmup || row.algorithm != key.first || row.sweep_value != key.second) continue;
      rates.push_back(row.rate_true);
      walls.push_back(row.wall_time_us);
    }
    SummaryRow s;
    s.algorithm = key.first;
    s.sweep_value = key.second;
    s.samples = rates.size();
    s.mean_rate_true = mean_of(rates);
    s.std_rate_true = stddev_of(rates);
    s.median_wall_time_us = median_of(walls);
    result.summary.push_back(std::move(s));
  }
}

inline void sort_rows(std::vector<ResultRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.algorithm != b.algorithm) return a.algorithm < b.algorithm;
    if (a.sweep_value != b.sweep_value) return a.sweep_value < b.sweep_value;
    if (a.seed != b.seed) return a.seed < b.seed;
    return a.slot < b.slot;
  });
}

/// Trailing moving average within contiguous phases; restarted at phase
/// boundaries so each phase is smoothed on its own.
inline void fill_smoothed(std::vector<ResultRow>& rows, std::size_t window,
                          const std::vector<std::size_t>& phase_starts) {
  std::vector<std::pair<std::string, double>> keys;
  for (const auto& row : rows)
    if (row.algorithm != "meta") {
      std::pair<std::string, double> key{row.algorithm, row.sweep_value};
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    }
  for (const auto& key : keys) {
    std::vector<ResultRow*> series;
    for (auto& row : rows)
      if (row.algorithm == key.first && row.sweep_value == key.second)
        series.push_back(&row);
    std::sort(series.begin(), series.end(),
              [](const ResultRow* a, const ResultRow* b) { return a->slot < b->slot; });
    std::size_t phase_begin_idx = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
      for (std::size_t start : phase_starts)
        if (series[i]->slot == start) phase_begin_idx = i;
      const std::size_t lo = std::max(phase_begin_idx, i + 1 >= window ? i + 1 - window : 0);
      double acc = 0.0;
      for (std::size_t j = lo; j <= i; ++j) acc += series[j]->rate_true;
      series[i]->rate_smoothed = acc / static_cast<double>(i - lo + 1);
    }
  }
}

}  // namespace detail

// ---- experiments ------------------------------------------------------------

/// Fig. 3 protocol: SE vs transmit power under perfect channel information.
inline ExperimentResult run_se_vs_power(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentResult result;
  result.kind = experiment_name(ExperimentKind::kSeVsPower);
  result.num_users = spec.scenario.num_users;

  const std::size_t total = spec.glnn.warmup_samples + spec.evaluation_samples;
  const auto samples = detail::sample_stream(spec.scenario, total, std::nullopt);

  std::vector<std::function<detail::CellOutput()>> tasks;
  for (std::size_t si = 0; si < spec.sweep.size(); ++si) {
    const double p_dbm = spec.sweep[si];
    const double p_mw = dbm_to_mw(p_dbm);
    for (std::size_t rep = 0; rep < spec.repetitions; ++rep) {
      for (const auto& alg : spec.algorithms) {
        if (alg == "glnn") {
          const std::uint64_t seed = detail::cell_seed(spec, si, rep, 0);
          GlnnConfig cfg = spec.glnn;
          cfg.sum_power_mw = p_mw;
          tasks.push_back([&spec, p_dbm, seed, cfg, &samples] {
            return detail::run_glnn_cell(spec, p_dbm, seed, cfg, spec.scenario, samples);
          });
        } else {
          const std::uint64_t seed = detail::cell_seed(spec, si, rep, 1);
          tasks.push_back([&spec, p_dbm, seed, p_mw, &samples] {
            return detail::run_wmmse_cell(spec, p_dbm, seed, p_mw, spec.scenario, samples,
                                          spec.glnn.warmup_samples);
          });
        }
      }
      if (spec.restarts > 0) {
        const std::uint64_t seed = detail::cell_seed(spec, si, rep, 2);
        GlnnConfig cfg = spec.glnn;
        cfg.sum_power_mw = p_mw;
        tasks.push_back([&spec, p_dbm, seed, cfg, &samples] {
          return detail::run_upper_bound_cell(spec, p_dbm, seed, cfg, spec.scenario, samples);
        });
      }
    }
  }

  std::vector<detail::CellOutput> outputs;
  detail::run_cells_parallel(tasks, outputs, spec.parallel);
  std::vector<double> wmmse_iters;
  for (auto& out : outputs) {
    result.rows.insert(result.rows.end(), out.rows.begin(), out.rows.end());
    result.meta += out.meta;
    wmmse_iters.insert(wmmse_iters.end(), out.outer_iters.begin(), out.outer_iters.end());
  }
  detail::sort_rows(result.rows);
  detail::append_summaries(result);
  for (auto& s : result.summary)
    if (s.algorithm == "wmmse") s.mean_outer_iters = detail::mean_of(wmmse_iters);
  return result;
}

/// Fig. 4 protocol: SE vs CEE at fixed transmit power; optimizers see the
/// estimated channel, SE is reported on the true one.
inline ExperimentResult run_se_vs_cee(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentResult result;
  result.kind = experiment_name(ExperimentKind::kSeVsCee);
  result.num_users = spec.scenario.num_users;

  const std::size_t total = spec.glnn.warmup_samples + spec.evaluation_samples;
  std::vector<std::function<detail::CellOutput()>> tasks;

  // One noisy stream per CEE level; the upper bound always runs on the
  // perfect stream.
  std::vector<std::vector<ChannelSample>> streams;
  for (double cee : spec.sweep)
    streams.push_back(detail::sample_stream(spec.scenario, total, cee));
  const auto perfect = detail::sample_stream(spec.scenario, total, std::nullopt);

  for (std::size_t si = 0; si < spec.sweep.size(); ++si) {
    const double cee = spec.sweep[si];
    const auto& stream = streams[si];
    for (std::size_t rep = 0; rep < spec.repetitions; ++rep) {
      for (const auto& alg : spec.algorithms) {
        if (alg == "glnn") {
          const std::uint64_t seed = detail::cell_seed(spec, si, rep, 0);
          tasks.push_back([&spec, cee, seed, &stream] {
            return detail::run_glnn_cell(spec, cee, seed, spec.glnn, spec.scenario, stream);
          });
        } else {
          const std::uint64_t seed = detail::cell_seed(spec, si, rep, 1);
          tasks.push_back([&spec, cee, seed, &stream] {
            return detail::run_wmmse_cell(spec, cee, seed, spec.glnn.sum_power_mw,
                                          spec.scenario, stream, spec.glnn.warmup_samples);
          });
        }
      }
      if (spec.restarts > 0) {
        const std::uint64_t seed = detail::cell_seed(spec, si, rep, 2);
        tasks.push_back([&spec, cee, seed, &perfect] {
          return detail::run_upper_bound_cell(spec, cee, seed, spec.glnn, spec.scenario,
                                              perfect);
        });
      }
    }
  }

  std::vector<detail::CellOutput> outputs;
  detail::run_cells_parallel(tasks, outputs, spec.parallel);
  std::vector<double> wmmse_iters;
  for (auto& out : outputs) {
    result.rows.insert(result.rows.end(), out.rows.begin(), out.rows.end());
    result.meta += out.meta;
    wmmse_iters.insert(wmmse_iters.end(), out.outer_iters.begin(), out.outer_iters.end());
  }
  detail::sort_rows(result.rows);
  detail::append_summaries(result);
  for (auto& s : result.summary)
    if (s.algorithm == "wmmse") s.mean_outer_iters = detail::mean_of(wmmse_iters);
  return result;
}

/// Fig. 5 protocol: three speed phases, fixed CEE, online adaptation with no
/// warm-up exclusion. Raw and smoothed series are both emitted.
inline ExperimentResult run_dynamic(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentResult result;
  result.kind = experiment_name(ExperimentKind::kDynamic);
  result.num_users = spec.scenario.num_users;

  ScenarioConfig scenario = spec.scenario;
  scenario.phase_table = spec.dynamic_phases;
  const std::size_t total = scenario.total_slots();
  const auto samples = detail::sample_stream(scenario, total, spec.dynamic_cee_db);
  const auto perfect = spec.restarts > 0
                           ? detail::sample_stream(scenario, total, std::nullopt)
                           : std::vector<ChannelSample>{};

  std::vector<std::size_t> boundaries;  // slots where a new phase begins
  std::vector<std::size_t> phase_starts{0};
  {
    std::size_t acc = 0;
    for (std::size_t i = 0; i + 1 < scenario.phase_table.size(); ++i) {
      acc += scenario.phase_table[i].slots;
      boundaries.push_back(acc);
      phase_starts.push_back(acc);
    }
  }
  auto speed_at = [&scenario](std::size_t slot) {
    return scenario.speed_and_distance(slot).first;
  };

  GlnnConfig glnn_cfg = spec.glnn;
  glnn_cfg.warmup_samples = 0;

  std::vector<std::function<detail::CellOutput()>> tasks;
  for (std::size_t rep = 0; rep < spec.repetitions; ++rep) {
    for (const auto& alg : spec.algorithms) {
      if (alg == "glnn") {
        const std::uint64_t seed = detail::cell_seed(spec, 0, rep, 0);
        tasks.push_back([&spec, seed, glnn_cfg, &scenario, &samples, &speed_at] {
          auto out = detail::run_glnn_cell(spec, 0.0, seed, glnn_cfg, scenario, samples);
          for (auto& row : out.rows) row.sweep_value = speed_at(row.slot);
          return out;
        });
      } else {
        const std::uint64_t seed = detail::cell_seed(spec, 0, rep, 1);
        tasks.push_back([&spec, seed, &scenario, &samples, &speed_at] {
          auto out = detail::run_wmmse_cell(spec, 0.0, seed, spec.glnn.sum_power_mw, scenario,
                                            samples, 0);
          for (auto& row : out.rows) row.sweep_value = speed_at(row.slot);
          return out;
        });
      }
    }
    if (spec.restarts > 0) {
      const std::uint64_t seed = detail::cell_seed(spec, 0, rep, 2);
      tasks.push_back([&spec, seed, glnn_cfg, &scenario, &perfect, &speed_at] {
        auto out =
            detail::run_upper_bound_cell(spec, 0.0, seed, glnn_cfg, scenario, perfect);
        for (auto& row : out.rows) row.sweep_value = speed_at(row.slot);
        return out;
      });
    }
  }

  std::vector<detail::CellOutput> outputs;
  detail::run_cells_parallel(tasks, outputs, spec.parallel);
  std::vector<double> wmmse_iters;
  for (auto& out : outputs) {
    result.rows.insert(result.rows.end(), out.rows.begin(), out.rows.end());
    result.meta += out.meta;
    wmmse_iters.insert(wmmse_iters.end(), out.outer_iters.begin(), out.outer_iters.end());
  }

  detail::fill_smoothed(result.rows, spec.smoothing_window, phase_starts);
  for (std::size_t b : boundaries) {
    ResultRow row;
    row.algorithm = "meta";
    row.event = "phase_boundary";
    row.slot = b;
    row.sweep_value = speed_at(b);
    row.per_user.assign(scenario.num_users, 0.0);
    result.rows.push_back(std::move(row));
  }
  detail::sort_rows(result.rows);
  detail::append_summaries(result);
  for (auto& s : result.summary)
    if (s.algorithm == "wmmse") s.mean_outer_iters = detail::mean_of(wmmse_iters);
  result.meta += "smoothing: trailing moving average, window " +
                 std::to_string(spec.smoothing_window) + ", restarted per phase\n";
  return result;
}

/// Fig. 6 protocol: median per-sample optimization time across transmit
/// antenna counts at K=4, N_k=2; the first 5 timings per cell are discarded.
inline ExperimentResult run_timing(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentResult result;
  result.kind = experiment_name(ExperimentKind::kTiming);
  result.num_users = 4;

  const std::string host = detail::host_id();
  const std::size_t discard = 5;
  const std::size_t total = discard + spec.timing_samples;

  std::vector<std::function<detail::CellOutput()>> tasks;
  std::vector<ScenarioConfig> scenarios;
  std::vector<std::vector<ChannelSample>> streams;
  scenarios.reserve(spec.sweep.size());
  for (double m_value : spec.sweep) {
    ScenarioConfig scenario = spec.scenario;
    scenario.tx_antennas = static_cast<std::size_t>(m_value);
    scenario.num_users = 4;
    scenario.rx_antennas_per_user = 2;
    if (scenario.total_slots() < total)
      scenario.phase_table = {{1.0, total}};
    scenarios.push_back(scenario);
    streams.push_back(detail::sample_stream(scenarios.back(), total, std::nullopt));
  }

  for (std::size_t si = 0; si < spec.sweep.size(); ++si) {
    const double m_value = spec.sweep[si];
    const auto& scenario = scenarios[si];
    const auto& stream = streams[si];
    for (const auto& alg : spec.algorithms) {
      if (alg == "glnn") {
        const std::uint64_t seed = detail::cell_seed(spec, si, 0, 0);
        GlnnConfig cfg = spec.glnn;
        cfg.warmup_samples = discard;  // flags the discarded timings
        tasks.push_back([&spec, m_value, seed, cfg, &scenario, &stream] {
          return detail::run_glnn_cell(spec, m_value, seed, cfg, scenario, stream);
        });
      } else {
        const std::uint64_t seed = detail::cell_seed(spec, si, 0, 1);
        tasks.push_back([&spec, m_value, seed, &scenario, &stream, discard] {
          auto out = detail::run_wmmse_cell(spec, m_value, seed, spec.glnn.sum_power_mw,
                                            scenario, stream, 0);
          for (auto& row : out.rows)
            if (row.slot < discard) row.warmup = 1;
          return out;
        });
      }
    }
  }

  std::vector<detail::CellOutput> outputs;
  detail::run_cells_parallel(tasks, outputs, spec.parallel);
  std::vector<double> wmmse_iters;
  for (auto& out : outputs) {
    for (auto& row : out.rows) row.host = host;
    result.rows.insert(result.rows.end(), out.rows.begin(), out.rows.end());
    result.meta += out.meta;
    wmmse_iters.insert(wmmse_iters.end(), out.outer_iters.begin(), out.outer_iters.end());
  }
  detail::sort_rows(result.rows);
  detail::append_summaries(result);
  for (auto& s : result.summary)
    if (s.algorithm == "wmmse") s.mean_outer_iters = detail::mean_of(wmmse_iters);
  result.meta += "timing host: " + host + "\n";
  return result;
}

inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  switch (spec.kind) {
    case ExperimentKind::kSeVsPower: return run_se_vs_power(spec);
    case ExperimentKind::kSeVsCee: return run_se_vs_cee(spec);
    case ExperimentKind::kDynamic: return run_dynamic(spec);
    case ExperimentKind::kTiming: return run_timing(spec);
  }
  throw ConfigError("unknown experiment kind");
}

// ---- config bindings --------------------------------------------------------

/// [glnn] section; transmit and noise powers are configured in dBm and
/// converted to linear mW once here.
inline GlnnConfig glnn_from_config(const ConfigFile& cfg) {
  GlnnConfig g;
  g.learning_rate = cfg.get_double("glnn", "learning_rate", g.learning_rate);
  g.beta = cfg.get_double("glnn", "beta", g.beta);
  g.gamma = cfg.get_double("glnn", "gamma", g.gamma);
  g.lambda = cfg.get_double("glnn", "lambda", g.lambda);
  g.inner_iterations = cfg.get_u64("glnn", "inner_iterations", g.inner_iterations);
  g.warmup_samples = cfg.get_u64("glnn", "warmup_samples", g.warmup_samples);
  g.sum_power_mw = dbm_to_mw(cfg.get_double("glnn", "sum_power_dbm", 10.0));
  g.noise_power_mw = dbm_to_mw(cfg.get_double("glnn", "noise_power_dbm", 0.0));
  g.command_neurons = cfg.get_u64("glnn", "command_neurons", g.command_neurons);
  g.cell_time_constant = cfg.get_double("glnn", "cell_time_constant", g.cell_time_constant);
  g.gradient_input_scale =
      cfg.get_double("glnn", "gradient_input_scale", g.gradient_input_scale);
  g.validate();
  return g;
}

inline WmmseConfig wmmse_from_config(const ConfigFile& cfg) {
  WmmseConfig w;
  w.max_outer_iters = cfg.get_u64("wmmse", "max_outer_iters", w.max_outer_iters);
  w.max_bisection_iters = cfg.get_u64("wmmse", "max_bisection_iters", w.max_bisection_iters);
  w.convergence_tol = cfg.get_double("wmmse", "convergence_tol", w.convergence_tol);
  w.bisection_tol = cfg.get_double("wmmse", "bisection_tol", w.bisection_tol);
  w.validate();
  return w;
}

/// Assemble a full experiment from the config file; CLI-style overrides are
/// applied by the caller afterwards. Call cfg.ensure_fully_consumed() once
/// every consumer has run.
inline ExperimentSpec experiment_from_config(ExperimentKind kind, const ConfigFile& cfg) {
  ExperimentSpec spec;
  spec.kind = kind;
  spec.scenario = scenario_from_config(cfg);
  spec.glnn = glnn_from_config(cfg);
  spec.wmmse = wmmse_from_config(cfg);

  spec.evaluation_samples =
      cfg.get_u64("experiment", "evaluation_samples", spec.evaluation_samples);
  spec.repetitions = cfg.get_u64("experiment", "repetitions", spec.repetitions);
  spec.smoothing_window = cfg.get_u64("experiment", "smoothing_window", spec.smoothing_window);
  spec.dynamic_cee_db = cfg.get_double("experiment", "dynamic_cee_db", spec.dynamic_cee_db);
  spec.timing_samples = cfg.get_u64("experiment", "timing_samples", spec.timing_samples);
  spec.lambda_search = cfg.get_bool("experiment", "lambda_search", spec.lambda_search);
  spec.seed = cfg.get_u64("experiment", "seed", spec.seed);

  if (auto v = cfg.raw("experiment", "dynamic_phases")) {
    spec.dynamic_phases.clear();
    for (const auto& item : ConfigFile::split(*v, ';')) {
      const std::string t = ConfigFile::trim(item);
      if (t.empty()) continue;
      const auto parts = ConfigFile::split(t, ':');
      if (parts.size() != 2)
        throw ConfigError("experiment.dynamic_phases: expected 'speed:slots' items");
      spec.dynamic_phases.push_back({parse_double(ConfigFile::trim(parts[0])),
                                     parse_u64(ConfigFile::trim(parts[1]))});
    }
  }

  // All sweep keys are parsed regardless of kind so one config file can
  // drive every subcommand; only the relevant sweep is installed.
  const auto power_sweep = cfg.get_double_list("experiment", "power_sweep_dbm",
                                               {0.0, 2.0, 4.0, 6.0, 8.0, 10.0});
  const auto cee_sweep = cfg.get_double_list("experiment", "cee_sweep_db",
                                             {-20.0, -15.0, -10.0, -5.0, 0.0});
  const auto timing_sweep = cfg.get_double_list("experiment", "timing_antennas",
                                                {32.0, 64.0, 96.0, 128.0, 160.0});
  switch (kind) {
    case ExperimentKind::kSeVsPower: spec.sweep = power_sweep; break;
    case ExperimentKind::kSeVsCee: spec.sweep = cee_sweep; break;
    case ExperimentKind::kDynamic:
      spec.sweep = {0.0};  // sweep_value carries the phase speed per row
      break;
    case ExperimentKind::kTiming: spec.sweep = timing_sweep; break;
  }
  return spec;
}

// ---- CSV / outputs ----------------------------------------------------------

inline constexpr const char* kResultsSchema = "liquidbeam-results-v1";
inline constexpr const char* kSummarySchema = "liquidbeam-summary-v1";

inline std::string results_csv(const ExperimentResult& result) {
  std::string out;
  out += std::string("# schema=") + kResultsSchema + "\n";
  out += "# experiment=" + result.kind + "\n";
  out += "# wall_time_us is excluded from determinism comparisons\n";
  out += "algorithm,sweep_value,seed,slot,warmup,rate_true,rate_est,loss";
  for (std::size_t k = 0; k < result.num_users; ++k) out += ",rate_u" + std::to_string(k);
  out += ",rate_smoothed,wall_time_us,event,host\n";
  for (const auto& row : result.rows) {
    out += row.algorithm + "," + format_double(row.sweep_value) + "," +
           std::to_string(row.seed) + "," + std::to_string(row.slot) + "," +
           std::to_string(row.warmup) + "," + format_double(row.rate_true) + "," +
           format_double(row.rate_est) + "," + format_double(row.loss);
    for (std::size_t k = 0; k < result.num_users; ++k)
      out += "," + (k < row.per_user.size() ? format_double(row.per_user[k]) : std::string());
    out += ",";
    if (std::isfinite(row.rate_smoothed)) out += format_double(row.rate_smoothed);
    out += "," + format_double(row.wall_time_us) + "," + row.event + "," + row.host + "\n";
  }
  return out;
}

inline std::string summary_csv(const ExperimentResult& result) {
  std::string out;
  out += std::string("# schema=") + kSummarySchema + "\n";
  out += "experiment,algorithm,sweep_value,samples,mean_rate_true,std_rate_true,"
         "median_wall_time_us,mean_outer_iters\n";
  for (const auto& s : result.summary) {
    out += result.kind + "," + s.algorithm + "," + format_double(s.sweep_value) + "," +
           std::to_string(s.samples) + "," + format_double(s.mean_rate_true) + "," +
           format_double(s.std_rate_true) + "," + format_double(s.median_wall_time_us) + "," +
           format_double(s.mean_outer_iters) + "\n";
  }
  return out;
}

/// Drop the named columns from a results/summary CSV (comment lines kept):
/// the determinism contract compares everything else byte for byte.
inline std::string strip_csv_columns(const std::string& csv,
                                     const std::vector<std::string>& drop = {
                                         "wall_time_us", "median_wall_time_us"}) {
  std::vector<std::string> lines = ConfigFile::split(csv, '\n');
  std::vector<int> drop_idx;
  std::string out;
  bool header_seen = false;
  for (const auto& line : lines) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      out += line + "\n";
      continue;
    }
    auto fields = ConfigFile::split(line, ',');
    if (!header_seen) {
      header_seen = true;
      for (std::size_t i = 0; i < fields.size(); ++i)
        for (const auto& name : drop)
          if (fields[i] == name) drop_idx.push_back(static_cast<int>(i));
    }
    std::string rebuilt;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (std::find(drop_idx.begin(), drop_idx.end(), static_cast<int>(i)) != drop_idx.end())
        continue;
      if (!rebuilt.empty()) rebuilt += ",";
      rebuilt += fields[i];
    }
    out += rebuilt + "\n";
  }
  return out;
}

inline std::string plot_filename(const ExperimentResult& result) {
  std::string name = result.kind;
  std::replace(name.begin(), name.end(), '-', '_');
  return "plot_" + name + ".svg";
}

inline std::string render_experiment_plot(const ExperimentResult& result) {
  std::vector<PlotSeries> series;
  if (result.kind == "dynamic") {
    for (const auto& alg : {"glnn", "wmmse", "upper_bound"}) {
      PlotSeries s;
      s.label = alg;
      for (const auto& row : result.rows) {
        if (row.algorithm != alg || !std::isfinite(row.rate_smoothed)) continue;
        s.x.push_back(static_cast<double>(row.slot));
        s.y.push_back(row.rate_smoothed);
      }
      if (!s.x.empty()) series.push_back(std::move(s));
    }
    return render_line_chart("Online adaptation, smoothed SE", "slot", "SE (bits/s/Hz)",
                             series);
  }
  const bool timing = result.kind == "timing";
  for (const auto& alg : {"glnn", "wmmse", "upper_bound"}) {
    PlotSeries s;
    s.label = alg;
    for (const auto& row : result.summary) {
      if (row.algorithm != alg) continue;
      s.x.push_back(row.sweep_value);
      s.y.push_back(timing ? row.median_wall_time_us / 1000.0 : row.mean_rate_true);
    }
    if (!s.x.empty()) series.push_back(std::move(s));
  }
  if (timing)
    return render_line_chart("Optimization time vs antennas", "transmit antennas M",
                             "median time per sample (ms)", series);
  if (result.kind == "se-vs-cee")
    return render_line_chart("SE vs channel estimation error", "CEE (dB)",
                             "mean SE (bits/s/Hz)", series);
  return render_line_chart("SE vs transmit power", "P (dBm)", "mean SE (bits/s/Hz)", series);
}

/// results.csv, summary.csv, plot_<kind>.svg and run_meta.txt under out_dir.
inline void write_experiment_outputs(const ExperimentSpec& spec,
                                     const ExperimentResult& result,
                                     const std::string& resolved_config) {
  namespace fs = std::filesystem;
  fs::create_directories(spec.out_dir);
  const std::string base = spec.out_dir + "/";
  write_text_file(base + "results.csv", results_csv(result));
  write_text_file(base + "summary.csv", summary_csv(result));
  write_text_file(base + plot_filename(result), render_experiment_plot(result));

  std::string meta;
  meta += "liquidbeam " + std::string(kVersion) + "\n";
  meta += "experiment: " + result.kind + "\n";
  meta += "host: " + detail::host_id() + "\n";
  meta += "compiler: " + std::string(kCompiler) + "\n";
  meta += "seed: " + std::to_string(spec.seed) + "\n";
  meta += "schema: " + std::string(kResultsSchema) + "\n";
  meta += "\n-- notes --\n" + result.meta;
  meta += "\n-- resolved configuration --\n" + resolved_config;
  write_text_file(base + "run_meta.txt", meta);
}

}  // namespace lb
