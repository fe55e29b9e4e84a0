#pragma once

// Staircase benchmark: train one discriminator per (objective, seed) on the
// correlated-Gaussian task while the target MI steps up, record per-iteration
// estimates, and summarize bias, variance and MSE over the tail of each step.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "jsdmi/config.hpp"
#include "jsdmi/mi_estimators.hpp"
#include "jsdmi/neural_net.hpp"

namespace jsdmi {

struct TraceRow {
  std::size_t iteration = 0;
  double objective = 0.0;
  double mi_estimate = 0.0;
  double true_mi = 0.0;
  bool diverged = false;
};

struct Trace {
  Estimator estimator = Estimator::jsd_lb;
  std::uint64_t seed = 0;
  std::vector<TraceRow> rows;
  std::optional<std::size_t> diverged_at;
};

struct SummaryCell {
  Estimator estimator = Estimator::jsd_lb;
  double target_mi = 0.0;
  double bias = 0.0;
  double variance = 0.0;  // population variance across seeds
  double mse = 0.0;
  std::size_t n_seeds = 0;
  std::vector<double> seed_estimates;  // window means, +inf if diverged
};

struct JobTiming {
  Estimator objective = Estimator::jsd_lb;
  std::uint64_t seed = 0;
  double seconds = 0.0;
  std::optional<std::size_t> diverged_at;
};

struct StaircaseResult {
  std::vector<Trace> traces;  // sorted by (estimator, seed)
  std::vector<SummaryCell> summary;
  std::vector<JobTiming> timings;
  double wall_seconds = 0.0;
};

struct StaircaseOptions {
  /// 0 picks JSDMI_WORKERS from the environment, else the hardware count.
  std::size_t workers = 0;
  bool write_files = true;
  std::ostream* progress = nullptr;
  /// Start every run from this checkpoint instead of a seeded init.
  std::optional<std::filesystem::path> load_net;
  /// Write net_<objective>_seed<seed>.txt for every run into the output dir.
  bool save_nets = false;
};

/// Trains one network with `objective` for `seed` over the whole schedule and
/// returns one trace per estimator in `report`. After a divergence the
/// remaining rows are NaN with diverged = true.
std::vector<Trace> train_staircase(const RunConfig& config, Estimator objective,
                                   std::uint64_t seed, const std::vector<Estimator>& report,
                                   const DiscriminatorNet* initial = nullptr,
                                   DiscriminatorNet* final_net = nullptr);

/// Runs every requested estimator for every seed. Estimators sharing a
/// training objective are read off the same network. Results do not depend
/// on the worker count.
StaircaseResult run_staircase(const RunConfig& config, const StaircaseOptions& options = {});

/// Per (estimator, step) metrics over the final `window_fraction` of each
/// step. A step is a maximal run of rows with equal true_mi.
std::vector<SummaryCell> summarize(const std::vector<Trace>& traces, double window_fraction);

std::string trace_file_name(Estimator e, std::uint64_t seed);
void write_trace(const std::filesystem::path& path, const Trace& trace);
Trace read_trace(const std::filesystem::path& path);
/// Reads every trace_*.csv in `dir`, sorted by (estimator, seed).
std::vector<Trace> read_traces(const std::filesystem::path& dir);

void write_summary(const std::filesystem::path& path, const std::vector<SummaryCell>& cells);
void write_summary(std::ostream& out, const std::vector<SummaryCell>& cells);

}  // namespace jsdmi
