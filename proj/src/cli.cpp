#include "jsdmi/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "jsdmi/config.hpp"
#include "jsdmi/csv.hpp"
#include "jsdmi/discrete_exact.hpp"
#include "jsdmi/joint_range.hpp"
#include "jsdmi/scalar_bound.hpp"
#include "jsdmi/staircase.hpp"

namespace jsdmi {

namespace {

std::string fixed_digits(double x, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, x);
  return buf;
}

struct XiArgs {
  std::vector<double> values;
  int precision = 10;
  bool approx = false;
};

struct CertifyArgs {
  std::size_t grid = 1000;
  double margin = 0.0;
  unsigned workers = 0;
  std::string out;
};

struct TightnessArgs {
  std::size_t kmin = 2;
  std::size_t kmax = 500;
  double alpha_step = 0.01;
  unsigned workers = 0;
  std::string out;
};

struct StaircaseArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_seeds;
  std::vector<std::string> estimators;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> d;
  std::optional<std::string> transform;
  std::optional<std::size_t> iterations;
  std::optional<double> window;
  std::optional<double> smile_tau;
  std::size_t workers = 0;
  std::string load_net;
  bool save_net = false;
  bool quiet = false;
};

struct ReportArgs {
  std::string in;
  double window = 0.2;
};

int run_xi(const XiArgs& a, bool inverse, std::ostream& out) {
  for (double v : a.values) {
    const double r = inverse ? xi_inverse(v) : (a.approx ? xi_approx(v) : xi(v));
    out << fixed_digits(r, a.precision) << '\n';
  }
  return kExitOk;
}

int run_certify(const CertifyArgs& a, std::ostream& out) {
  if (a.grid < 2) throw std::domain_error("certify: --grid must be >= 2");
  const CertificationReport r = certify_conjecture(a.grid, a.margin, a.workers);
  if (!a.out.empty()) {
    std::ofstream f(a.out);
    if (!f) throw std::runtime_error("cannot write " + a.out);
    write_csv_row(f, {"mu", "nu", "det"});
    for (const auto& x : r.failures) {
      write_csv_row(f, {format_number(x.mu), format_number(x.nu), format_number(x.det)});
    }
  }
  out << (r.pass ? "pass" : "FAIL") << " grid=" << r.grid_per_axis << " checked=" << r.checked
      << " failures=" << r.failures.size() << " max_det=" << format_number(r.max_det)
      << " margin=" << format_number(r.margin) << '\n';
  return r.pass ? kExitOk : kExitNotCertified;
}

int run_tightness(const TightnessArgs& a, std::ostream& out, std::ostream& err) {
  if (a.kmin < 2 || a.kmax < a.kmin) throw std::domain_error("tightness: need 2 <= kmin <= kmax");
  if (!(a.alpha_step > 0.0 && a.alpha_step <= 1.0)) {
    throw std::domain_error("tightness: --alpha-step must lie in (0, 1]");
  }
  const auto n = static_cast<std::size_t>(std::llround(1.0 / a.alpha_step));
  if (std::abs(static_cast<double>(n) * a.alpha_step - 1.0) > 1e-9) {
    throw std::domain_error("tightness: --alpha-step must divide 1");
  }
  std::vector<std::size_t> ks(a.kmax - a.kmin + 1);
  std::iota(ks.begin(), ks.end(), a.kmin);
  std::vector<double> alphas(n + 1);
  for (std::size_t i = 0; i <= n; ++i) alphas[i] = static_cast<double>(i) / static_cast<double>(n);
  const auto rows = tightness_sweep(ks, alphas, a.workers);

  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw std::runtime_error("cannot write " + a.out);
  }
  std::ostream& sink = a.out.empty() ? out : file;
  write_csv_row(sink, {"k", "alpha", "mi", "jsinfo", "bound"});
  std::size_t violations = 0;
  double worst_excess = -kInfinity;
  for (const auto& r : rows) {
    write_csv_row(sink, {std::to_string(r.k), format_number(r.alpha), format_number(r.mi),
                         format_number(r.jsinfo), format_number(r.bound)});
    worst_excess = std::max(worst_excess, r.bound - r.mi);
    violations += r.bound > r.mi + 1e-9;
  }
  err << "rows=" << rows.size() << " violations=" << violations
      << " max(bound-mi)=" << format_number(worst_excess) << '\n';
  return kExitOk;
}

int run_staircase_cmd(const StaircaseArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig c;
  try {
    c = a.config.empty() ? RunConfig{} : load_run_config(a.config);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (a.d) {
    const bool default_schedule = c.schedule.steps == default_staircase(c.d).steps;
    c.d = *a.d;
    if (default_schedule) c.schedule = default_staircase(c.d);
  }
  if (a.transform) c.transform = parse_transform(*a.transform);
  if (a.seed || a.n_seeds) {
    const std::uint64_t first = a.seed.value_or(c.seeds.front());
    const std::size_t n = a.n_seeds.value_or(c.seeds.size());
    c.seeds.clear();
    for (std::size_t i = 0; i < n; ++i) c.seeds.push_back(first + i);
  }
  if (!a.estimators.empty()) {
    c.estimators.clear();
    for (const auto& e : a.estimators) c.estimators.push_back(parse_estimator(e));
  }
  if (a.batch_size) c.batch_size = *a.batch_size;
  if (a.iterations) {
    for (auto& s : c.schedule.steps) s.iterations = *a.iterations;
  }
  if (a.window) c.window_fraction = *a.window;
  if (a.smile_tau) c.smile_tau = *a.smile_tau;
  if (!a.out.empty()) c.output = a.out;
  try {
    c.validate();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  StaircaseOptions opts;
  opts.workers = a.workers;
  opts.progress = a.quiet ? nullptr : &err;
  if (!a.load_net.empty()) opts.load_net = a.load_net;
  opts.save_nets = a.save_net;
  const StaircaseResult r = run_staircase(c, opts);
  write_summary(out, r.summary);
  err << "wrote " << r.traces.size() << " traces to " << c.output.string() << " in "
      << fixed_digits(r.wall_seconds, 4) << " s\n";
  return kExitOk;
}

int run_report(const ReportArgs& a, std::ostream& out) {
  const auto traces = read_traces(a.in);
  const auto cells = summarize(traces, a.window);
  write_summary(std::filesystem::path(a.in) / "summary.csv", cells);
  write_summary(out, cells);
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Jensen-Shannon bounds on mutual information and neural MI estimator benchmarks",
               "jsdmi"};
  app.set_version_flag("--version", std::string("jsdmi ") + JSDMI_VERSION);
  app.require_subcommand(1);

  auto* xi_cmd = app.add_subcommand("xi", "Evaluate the bound Xi or its inverse");
  xi_cmd->require_subcommand(1);
  XiArgs xi_eval_args, xi_inv_args;
  auto* xi_eval = xi_cmd->add_subcommand("eval", "Print Xi(x) for x in [0, log 2)");
  xi_eval->add_option("x", xi_eval_args.values, "JS values in nats")->required();
  xi_eval->add_option("--precision", xi_eval_args.precision, "Significant digits")
      ->check(CLI::Range(1, 17));
  xi_eval->add_flag("--approx", xi_eval_args.approx, "Use the closed-form logit approximation");
  auto* xi_inv = xi_cmd->add_subcommand("inv", "Print Xi^-1(y) for y >= 0");
  xi_inv->add_option("y", xi_inv_args.values, "KL values in nats")->required();
  xi_inv->add_option("--precision", xi_inv_args.precision, "Significant digits")
      ->check(CLI::Range(1, 17));

  CertifyArgs cert;
  auto* cert_cmd = app.add_subcommand("certify", "Check det J < 0 on an interior grid");
  cert_cmd->add_option("--grid", cert.grid, "Points per axis")->required();
  cert_cmd->add_option("--margin", cert.margin, "Require det < -margin");
  cert_cmd->add_option("--workers", cert.workers, "Threads (0 = all cores)");
  cert_cmd->add_option("--out", cert.out, "CSV file for failing points");

  TightnessArgs tight;
  auto* tight_cmd = app.add_subcommand("tightness", "Exact sweep over the alpha family");
  tight_cmd->add_option("--kmax", tight.kmax, "Largest alphabet size")->required();
  tight_cmd->add_option("--kmin", tight.kmin, "Smallest alphabet size");
  tight_cmd->add_option("--alpha-step", tight.alpha_step, "Spacing of alpha in [0, 1]")
      ->required();
  tight_cmd->add_option("--workers", tight.workers, "Threads (0 = all cores)");
  tight_cmd->add_option("--out", tight.out, "CSV output (default stdout)");

  StaircaseArgs st;
  auto* st_cmd = app.add_subcommand("staircase", "Train estimators on the Gaussian staircase");
  st_cmd->add_option("--config", st.config, "Flat TOML run config");
  st_cmd->add_option("--out", st.out, "Output directory");
  st_cmd->add_option("--seed", st.seed, "First seed");
  st_cmd->add_option("--seeds", st.n_seeds, "Number of seeds");
  st_cmd->add_option("--estimators", st.estimators, "Estimators to run")->delimiter(',');
  st_cmd->add_option("--batch-size", st.batch_size, "Batch size b");
  st_cmd->add_option("-d,--dim", st.d, "Dimension of U and V");
  st_cmd->add_option("--transform", st.transform, "identity, cubic, asinh or halfcube");
  st_cmd->add_option("--iterations-per-step", st.iterations, "Iterations in every step");
  st_cmd->add_option("--window", st.window, "Evaluation window fraction");
  st_cmd->add_option("--smile-tau", st.smile_tau, "SMILE clip level");
  st_cmd->add_option("--workers", st.workers, "Parallel runs (default $JSDMI_WORKERS or cores)");
  st_cmd->add_option("--load-net", st.load_net, "Start every run from this checkpoint");
  st_cmd->add_flag("--save-net", st.save_net, "Save each trained network to the output dir");
  st_cmd->add_flag("-q,--quiet", st.quiet, "No progress output");

  ReportArgs rep;
  auto* rep_cmd = app.add_subcommand("report", "Recompute summary.csv from trace files");
  rep_cmd->add_option("--in", rep.in, "Run directory")->required();
  rep_cmd->add_option("--window", rep.window, "Evaluation window fraction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (xi_eval->parsed()) return run_xi(xi_eval_args, false, out);
    if (xi_inv->parsed()) return run_xi(xi_inv_args, true, out);
    if (cert_cmd->parsed()) return run_certify(cert, out);
    if (tight_cmd->parsed()) return run_tightness(tight, out, err);
    if (st_cmd->parsed()) return run_staircase_cmd(st, out, err);
    if (rep_cmd->parsed()) return run_report(rep, out);
  } catch (const std::domain_error& e) {
    err << "domain error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kExitDomain;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace jsdmi
