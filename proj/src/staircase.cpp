#include "jsdmi/staircase.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "jsdmi/csv.hpp"
#include "jsdmi/neural_net.hpp"
#include "jsdmi/scalar_bound.hpp"
#include "jsdmi/synth_data.hpp"

#ifdef JSDMI_HAVE_OPENBLAS
extern "C" void openblas_set_num_threads(int);
#endif

namespace jsdmi {

namespace {

constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kDataStream = 1;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::string> kTraceHeader = {"iteration", "estimator", "objective", "mi_estimate",
                                               "true_mi",   "seed",      "diverged"};
const std::vector<std::string> kSummaryHeader = {"estimator", "target_mi", "bias",
                                                 "variance",  "mse",       "n_seeds"};

std::size_t resolve_workers(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("JSDMI_WORKERS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<std::size_t>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct Job {
  Estimator objective;
  std::uint64_t seed;
  std::vector<Estimator> report;
};

bool trace_less(const Trace& a, const Trace& b) {
  if (a.estimator != b.estimator) return a.estimator < b.estimator;
  return a.seed < b.seed;
}

}  // namespace

std::vector<Trace> train_staircase(const RunConfig& config, Estimator objective,
                                   std::uint64_t seed, const std::vector<Estimator>& report,
                                   const DiscriminatorNet* initial, DiscriminatorNet* final_net) {
  config.validate();
  Rng init_rng(seed, kInitStream);
  Rng data_rng(seed, kDataStream);
  DiscriminatorNet net =
      initial ? *initial : init_discriminator(config.d, init_rng, config.hidden);
  if (net.input_dim() != 2 * config.d) {
    throw std::invalid_argument("initial network expects d = " +
                                std::to_string(net.input_dim() / 2) + ", config has d = " +
                                std::to_string(config.d));
  }
  AdamState adam = AdamState::for_params(net.params);
  const TrainOptions options{objective, report, config.smile_tau};
  TrainWorkspace ws;

  std::vector<Trace> traces;
  for (Estimator e : report) {
    traces.push_back({e, seed, {}, std::nullopt});
    traces.back().rows.reserve(config.schedule.total_iterations());
  }

  bool diverged = false;
  std::size_t iteration = 0;
  for (const StaircaseStep& step : config.schedule.steps) {
    const GaussianTaskSpec spec{config.d, rho_for_mi(step.target_mi, config.d), config.transform};
    for (std::size_t k = 0; k < step.iterations; ++k, ++iteration) {
      if (!diverged) {
        const SampleBatch batch = sample_joint(spec, config.batch_size, data_rng);
        const StepResult r = train_step(net, adam, batch, options, ws);
        diverged = r.diverged;
        if (diverged) {
          for (auto& t : traces) t.diverged_at = iteration;
        } else {
          for (std::size_t i = 0; i < report.size(); ++i) {
            traces[i].rows.push_back({iteration, r.estimates[i].objective,
                                      r.estimates[i].mi_estimate, step.target_mi, false});
          }
          continue;
        }
      }
      for (auto& t : traces) t.rows.push_back({iteration, kNaN, kNaN, step.target_mi, true});
    }
  }
  if (final_net) *final_net = std::move(net);
  return traces;
}

StaircaseResult run_staircase(const RunConfig& config, const StaircaseOptions& options) {
  config.validate();
  const auto wall_start = std::chrono::steady_clock::now();

  // One job per (training objective, seed); the reported estimators ride along.
  std::map<Estimator, std::vector<Estimator>> groups;
  for (Estimator e : config.estimators) {
    auto& g = groups[training_objective(e)];
    if (std::find(g.begin(), g.end(), e) == g.end()) g.push_back(e);
  }
  std::vector<Job> jobs;
  for (const auto& [objective, report] : groups) {
    for (std::uint64_t seed : config.seeds) jobs.push_back({objective, seed, report});
  }

  const std::size_t workers = std::min(resolve_workers(options.workers), jobs.size());
#ifdef JSDMI_HAVE_OPENBLAS
  if (workers > 1) openblas_set_num_threads(1);
#endif

  std::vector<std::vector<Trace>> job_traces(jobs.size());
  std::vector<JobTiming> timings(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;
  std::optional<DiscriminatorNet> initial;
  if (options.load_net) initial = load_net(*options.load_net);
  if (options.save_nets) std::filesystem::create_directories(config.output);

  auto work = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const auto t0 = std::chrono::steady_clock::now();
      try {
        DiscriminatorNet trained;
        job_traces[j] = train_staircase(config, jobs[j].objective, jobs[j].seed, jobs[j].report,
                                        initial ? &*initial : nullptr, &trained);
        if (options.save_nets) {
          save_net(trained, config.output / ("net_" + std::string(to_string(jobs[j].objective)) +
                                             "_seed" + std::to_string(jobs[j].seed) + ".txt"));
        }
      } catch (...) {
        errors[j] = std::current_exception();
      }
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const auto diverged_at =
          job_traces[j].empty() ? std::nullopt : job_traces[j].front().diverged_at;
      timings[j] = {jobs[j].objective, jobs[j].seed, secs, diverged_at};
      if (options.progress) {
        std::lock_guard lock(progress_mutex);
        *options.progress << "finished " << to_string(jobs[j].objective) << " seed "
                          << jobs[j].seed << " in " << secs << " s";
        if (diverged_at) *options.progress << " (diverged at iteration " << *diverged_at << ')';
        *options.progress << '\n';
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  StaircaseResult result;
  for (auto& traces : job_traces) {
    for (auto& t : traces) result.traces.push_back(std::move(t));
  }
  std::sort(result.traces.begin(), result.traces.end(), trace_less);
  result.summary = summarize(result.traces, config.window_fraction);
  result.timings = std::move(timings);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();

  if (options.write_files) {
    std::filesystem::create_directories(config.output);
    for (const auto& t : result.traces) {
      write_trace(config.output / trace_file_name(t.estimator, t.seed), t);
    }
    write_summary(config.output / "summary.csv", result.summary);
    std::ofstream(config.output / "config.toml") << to_toml(config);
    std::ofstream timing(config.output / "timing.csv");
    write_csv_row(timing, {"objective", "seed", "seconds", "diverged_at"});
    for (const auto& t : result.timings) {
      write_csv_row(timing, {std::string(to_string(t.objective)), std::to_string(t.seed),
                             format_number(t.seconds),
                             t.diverged_at ? std::to_string(*t.diverged_at) : ""});
    }
    write_csv_row(timing, {"total", "", format_number(result.wall_seconds), ""});
  }
  return result;
}

std::vector<SummaryCell> summarize(const std::vector<Trace>& traces, double window_fraction) {
  if (!(window_fraction > 0.0 && window_fraction <= 1.0)) {
    throw std::invalid_argument("summarize: window_fraction must lie in (0, 1]");
  }
  std::map<Estimator, std::vector<const Trace*>> by_estimator;
  for (const auto& t : traces) by_estimator[t.estimator].push_back(&t);

  std::vector<SummaryCell> cells;
  for (const auto& [estimator, group] : by_estimator) {
    // Step boundaries come from the first trace; the others must agree.
    struct Segment {
      std::size_t begin, end;
      double target;
    };
    std::vector<Segment> segments;
    const auto& ref = group.front()->rows;
    for (std::size_t i = 0; i < ref.size();) {
      std::size_t j = i;
      while (j < ref.size() && ref[j].true_mi == ref[i].true_mi) ++j;
      segments.push_back({i, j, ref[i].true_mi});
      i = j;
    }
    for (const Trace* t : group) {
      if (t->rows.size() != ref.size()) {
        throw std::invalid_argument("summarize: traces of " + std::string(to_string(estimator)) +
                                    " have different lengths");
      }
      for (const auto& s : segments) {
        if (t->rows[s.begin].true_mi != s.target || t->rows[s.end - 1].true_mi != s.target) {
          throw std::invalid_argument("summarize: traces of " +
                                      std::string(to_string(estimator)) + " use different steps");
        }
      }
    }

    for (const auto& s : segments) {
      const std::size_t len = s.end - s.begin;
      const auto window = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil(window_fraction * static_cast<double>(len) - 1e-9)));
      SummaryCell cell{estimator, s.target, 0.0, 0.0, 0.0, group.size(), {}};
      bool poisoned = false;
      for (const Trace* t : group) {
        double sum = 0.0;
        bool bad = false;
        for (std::size_t i = s.end - window; i < s.end; ++i) {
          bad = bad || t->rows[i].diverged;
          sum += t->rows[i].mi_estimate;
        }
        const double mean = sum / static_cast<double>(window);
        const double est = bad || !std::isfinite(mean) ? kInfinity : mean;
        poisoned = poisoned || !std::isfinite(est);
        cell.seed_estimates.push_back(est);
      }
      if (poisoned) {
        cell.bias = cell.variance = cell.mse = kInfinity;
      } else {
        const double n = static_cast<double>(group.size());
        double mean = 0.0, sq_err = 0.0;
        for (double e : cell.seed_estimates) {
          mean += e;
          sq_err += (e - s.target) * (e - s.target);
        }
        mean /= n;
        double var = 0.0;
        for (double e : cell.seed_estimates) var += (e - mean) * (e - mean);
        cell.bias = mean - s.target;
        cell.variance = var / n;
        cell.mse = sq_err / n;
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

std::string trace_file_name(Estimator e, std::uint64_t seed) {
  return "trace_" + std::string(to_string(e)) + "_seed" + std::to_string(seed) + ".csv";
}

void write_trace(const std::filesystem::path& path, const Trace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_csv_row(out, kTraceHeader);
  const std::string name(to_string(trace.estimator));
  const std::string seed = std::to_string(trace.seed);
  for (const auto& r : trace.rows) {
    write_csv_row(out, {std::to_string(r.iteration), name, format_number(r.objective),
                        format_number(r.mi_estimate), format_number(r.true_mi), seed,
                        r.diverged ? "1" : "0"});
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Trace read_trace(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  if (t.rows.empty()) throw std::runtime_error(path.string() + ": empty trace");
  const std::size_t c_it = t.column("iteration"), c_est = t.column("estimator"),
                    c_obj = t.column("objective"), c_mi = t.column("mi_estimate"),
                    c_true = t.column("true_mi"), c_seed = t.column("seed"),
                    c_div = t.column("diverged");
  Trace trace;
  trace.estimator = parse_estimator(t.rows.front()[c_est]);
  trace.seed = std::stoull(t.rows.front()[c_seed]);
  for (const auto& row : t.rows) {
    if (parse_estimator(row[c_est]) != trace.estimator || std::stoull(row[c_seed]) != trace.seed) {
      throw std::runtime_error(path.string() + ": mixed estimators or seeds");
    }
    trace.rows.push_back({static_cast<std::size_t>(std::stoull(row[c_it])),
                          parse_number(row[c_obj]), parse_number(row[c_mi]),
                          parse_number(row[c_true]), row[c_div] == "1"});
  }
  return trace;
}

std::vector<Trace> read_traces(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw std::runtime_error("not a directory: " + dir.string());
  }
  std::vector<Trace> traces;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.starts_with("trace_") && name.ends_with(".csv")) {
      traces.push_back(read_trace(entry.path()));
    }
  }
  if (traces.empty()) throw std::runtime_error("no trace_*.csv files in " + dir.string());
  std::sort(traces.begin(), traces.end(), trace_less);
  return traces;
}

void write_summary(std::ostream& out, const std::vector<SummaryCell>& cells) {
  write_csv_row(out, kSummaryHeader);
  for (const auto& c : cells) {
    write_csv_row(out, {std::string(to_string(c.estimator)), format_number(c.target_mi),
                        format_number(c.bias), format_number(c.variance), format_number(c.mse),
                        std::to_string(c.n_seeds)});
  }
}

void write_summary(const std::filesystem::path& path, const std::vector<SummaryCell>& cells) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_summary(out, cells);
}

}  // namespace jsdmi
