#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "jsdmi/cli.hpp"
#include "jsdmi/config.hpp"
#include "jsdmi/csv.hpp"
#include "jsdmi/scalar_bound.hpp"
#include "jsdmi/staircase.hpp"

using namespace jsdmi;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("jsdmi_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "jsdmi");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

RunConfig tiny_config(const fs::path& out) {
  RunConfig c;
  c.d = 2;
  c.schedule = {{{2, 1}, {4, 1}, {6, 1}, {8, 1}, {10, 1}}};
  c.seeds = {0, 1};
  c.estimators = {Estimator::jsd_lb, Estimator::two_step, Estimator::mine};
  c.batch_size = 4;
  c.hidden = 8;
  c.output = out;
  return c;
}

RunConfig small_config(const fs::path& out) {
  RunConfig c = tiny_config(out);
  c.schedule = {{{1, 6}, {3, 6}}};
  c.seeds = {3, 4, 5};
  c.estimators = {Estimator::jsd_lb, Estimator::cpc, Estimator::smile, Estimator::nwj};
  return c;
}

Trace constant_trace(Estimator e, std::uint64_t seed, const std::vector<double>& values,
                     std::size_t per_step, const std::vector<double>& targets) {
  Trace t{e, seed, {}, std::nullopt};
  std::size_t it = 0;
  for (std::size_t s = 0; s < targets.size(); ++s) {
    for (std::size_t k = 0; k < per_step; ++k) {
      t.rows.push_back({it++, values[s], values[s], targets[s], false});
    }
  }
  return t;
}

}  // namespace

TEST(Toml, ParsesFlatSubset) {
  const TomlTable t = parse_flat_toml(
      "# comment\n"
      "d = 3\n"
      "rate = 0.5   # trailing\n"
      "flag = true\n"
      "name = \"a # b\"\n"
      "schedule = [[2, 10],\n"
      "            [4, 20]]\n"
      "empty = []\n");
  EXPECT_EQ(t.at("d").as_integer("d"), 3);
  EXPECT_EQ(t.at("rate").as_number("rate"), 0.5);
  EXPECT_EQ(t.at("d").as_number("d"), 3.0);
  EXPECT_EQ(std::get<bool>(t.at("flag").value), true);
  EXPECT_EQ(t.at("name").as_string("name"), "a # b");
  const auto& sched = t.at("schedule").as_array("schedule");
  ASSERT_EQ(sched.size(), 2u);
  EXPECT_EQ(sched[1].as_array("x")[1].as_integer("x"), 20);
  EXPECT_TRUE(t.at("empty").as_array("empty").empty());
}

TEST(Toml, RejectsMalformedInput) {
  EXPECT_THROW(parse_flat_toml("[table]\n"), ConfigError);
  EXPECT_THROW(parse_flat_toml("d = \n"), ConfigError);
  EXPECT_THROW(parse_flat_toml("d = [1, 2\n"), ConfigError);
  EXPECT_THROW(parse_flat_toml("d = 1\nd = 2\n"), ConfigError);
  EXPECT_THROW(parse_flat_toml("name = \"open\n"), ConfigError);
  EXPECT_THROW(parse_flat_toml("d = 1\n").at("d").as_string("d"), ConfigError);
}

TEST(RunConfig, FromTomlAndRoundTrip) {
  const RunConfig c = run_config_from_toml(parse_flat_toml(
      "d = 4\ntransform = \"cubic\"\nschedule = [[1, 5], [2.5, 7]]\nseed = 3\nn_seeds = 2\n"
      "estimators = [\"mine\", \"smile\"]\nbatch_size = 16\noutput = \"x/y\"\n"
      "window_fraction = 0.5\nsmile_tau = 2.0\nhidden = 32\n"));
  EXPECT_EQ(c.d, 4u);
  EXPECT_EQ(c.transform, Transform::cubic);
  ASSERT_EQ(c.schedule.steps.size(), 2u);
  EXPECT_EQ(c.schedule.steps[1].target_mi, 2.5);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{3, 4}));
  EXPECT_EQ(c.estimators, (std::vector<Estimator>{Estimator::mine, Estimator::smile}));
  EXPECT_EQ(c.batch_size, 16u);
  EXPECT_EQ(c.output, fs::path("x/y"));
  EXPECT_EQ(c.window_fraction, 0.5);
  EXPECT_EQ(c.smile_tau, 2.0);
  EXPECT_EQ(c.hidden, 32u);

  const RunConfig back = run_config_from_toml(parse_flat_toml(to_toml(c)));
  EXPECT_EQ(to_toml(back), to_toml(c));
  EXPECT_EQ(back.schedule.steps, c.schedule.steps);
}

TEST(RunConfig, DefaultsMatchBenchmark) {
  const RunConfig c = run_config_from_toml({});
  EXPECT_EQ(c.d, 5u);
  EXPECT_EQ(c.batch_size, 64u);
  EXPECT_EQ(c.schedule.total_iterations(), 20000u);
  EXPECT_EQ(c.seeds.size(), 10u);
  EXPECT_EQ(c.window_fraction, 0.2);
}

TEST(RunConfig, Errors) {
  auto load = [](const char* text) { return run_config_from_toml(parse_flat_toml(text)); };
  EXPECT_THROW(load("dims = 3\n"), ConfigError);
  EXPECT_THROW(load("d = 0\n"), ConfigError);
  EXPECT_THROW(load("d = 2.5\n"), ConfigError);
  EXPECT_THROW(load("batch_size = 1\n"), ConfigError);
  EXPECT_THROW(load("transform = \"square\"\n"), ConfigError);
  EXPECT_THROW(load("estimators = [\"infonce\"]\n"), ConfigError);
  EXPECT_THROW(load("estimators = []\n"), ConfigError);
  EXPECT_THROW(load("schedule = [[4, 10], [2, 10]]\n"), ConfigError);
  EXPECT_THROW(load("schedule = [[4, 0]]\n"), ConfigError);
  EXPECT_THROW(load("window_fraction = 0\n"), ConfigError);
  EXPECT_THROW(load_run_config("/nonexistent/run.toml"), ConfigError);
}

TEST(Csv, NumberRoundTrip) {
  for (double x : {0.0, -1.5, 0.1, 1e-300, 4.1588830833596719, 123456789.125}) {
    EXPECT_EQ(parse_number(format_number(x)), x);
  }
  EXPECT_EQ(format_number(kInfinity), "inf");
  EXPECT_EQ(format_number(-kInfinity), "-inf");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  EXPECT_TRUE(std::isnan(parse_number("nan")));
  EXPECT_EQ(parse_number("-inf"), -kInfinity);
  EXPECT_THROW(parse_number("1.5x"), std::invalid_argument);
  EXPECT_THROW(parse_number(""), std::invalid_argument);
}

TEST(Csv, ParseTable) {
  const CsvTable t = parse_csv("a,b\n1,2\n3,4\n");
  EXPECT_EQ(t.column("b"), 1u);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1][0], "3");
  EXPECT_THROW(t.column("c"), std::out_of_range);
}

TEST(Summarize, ConstantTracesHaveZeroVariance) {
  const std::vector<double> targets = {2, 4};
  std::vector<Trace> traces;
  for (std::uint64_t s = 0; s < 4; ++s) {
    traces.push_back(constant_trace(Estimator::mine, s, {1.5, 3.0}, 10, targets));
  }
  const auto cells = summarize(traces, 0.2);
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_EQ(cells[0].target_mi, 2.0);
  EXPECT_EQ(cells[0].bias, -0.5);
  EXPECT_EQ(cells[0].variance, 0.0);
  EXPECT_EQ(cells[0].mse, 0.25);
  EXPECT_EQ(cells[1].bias, -1.0);
  EXPECT_EQ(cells[1].n_seeds, 4u);
}

TEST(Summarize, SymmetricSpreadGivesSquaredVariance) {
  const double c = 0.3;
  std::vector<Trace> traces = {
      constant_trace(Estimator::cpc, 0, {2.0 + c}, 5, {2.0}),
      constant_trace(Estimator::cpc, 1, {2.0 - c}, 5, {2.0}),
  };
  const auto cells = summarize(traces, 1.0);
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_NEAR(cells[0].bias, 0.0, 1e-15);
  EXPECT_NEAR(cells[0].variance, c * c, 1e-15);
  EXPECT_NEAR(cells[0].mse, cells[0].bias * cells[0].bias + cells[0].variance, 1e-15);
}

TEST(Summarize, WindowUsesTailOfEachStep) {
  // Values ramp 0..9 within a 10-row step; the last 20% are 8 and 9.
  Trace t{Estimator::jsd_lb, 0, {}, std::nullopt};
  for (std::size_t i = 0; i < 10; ++i) {
    t.rows.push_back({i, 0.0, static_cast<double>(i), 5.0, false});
  }
  const auto cells = summarize({t}, 0.2);
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_EQ(cells[0].seed_estimates[0], 8.5);
  EXPECT_EQ(cells[0].bias, 3.5);
  EXPECT_EQ(summarize({t}, 0.01)[0].seed_estimates[0], 9.0);
  EXPECT_THROW(summarize({t}, 0.0), std::invalid_argument);
}

TEST(Summarize, MseIdentityOnRandomTraces) {
  Rng rng(5);
  std::vector<Trace> traces;
  for (std::uint64_t s = 0; s < 7; ++s) {
    Trace t{Estimator::nwj, s, {}, std::nullopt};
    for (std::size_t i = 0; i < 30; ++i) {
      const double target = i < 15 ? 2.0 : 4.0;
      t.rows.push_back({i, 0.0, target + rng.normal(), target, false});
    }
    traces.push_back(t);
  }
  for (const auto& cell : summarize(traces, 0.4)) {
    EXPECT_NEAR(cell.mse, cell.bias * cell.bias + cell.variance, 1e-12);
  }
}

TEST(Summarize, DivergedSeedMakesCellInfinite) {
  std::vector<Trace> traces = {
      constant_trace(Estimator::mine, 0, {1.0, 3.0}, 4, {2.0, 4.0}),
      constant_trace(Estimator::mine, 1, {1.0, 3.0}, 4, {2.0, 4.0}),
  };
  for (std::size_t i = 6; i < 8; ++i) {
    traces[1].rows[i].mi_estimate = std::nan("");
    traces[1].rows[i].diverged = true;
  }
  traces[1].diverged_at = 6;
  const auto cells = summarize(traces, 0.5);
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_TRUE(std::isfinite(cells[0].mse));
  EXPECT_EQ(cells[1].seed_estimates[1], kInfinity);
  EXPECT_EQ(cells[1].mse, kInfinity);
}

TEST(Staircase, TinyRunShapes) {
  const fs::path dir = scratch_dir("tiny");
  const RunConfig c = tiny_config(dir);
  StaircaseOptions opt;
  opt.workers = 1;
  const StaircaseResult r = run_staircase(c, opt);
  ASSERT_EQ(r.traces.size(), 6u);
  for (const Trace& t : r.traces) {
    ASSERT_EQ(t.rows.size(), 5u);
    EXPECT_EQ(t.rows[4].true_mi, 10.0);
    EXPECT_EQ(t.rows[4].iteration, 4u);
  }
  EXPECT_EQ(r.traces[0].estimator, Estimator::jsd_lb);
  EXPECT_EQ(r.traces[2].estimator, Estimator::mine);
  EXPECT_EQ(r.traces[1].seed, 1u);
  EXPECT_EQ(r.summary.size(), 15u);
  EXPECT_EQ(r.timings.size(), 4u);
  EXPECT_TRUE(fs::exists(dir / "summary.csv"));
  EXPECT_TRUE(fs::exists(dir / "config.toml"));
  EXPECT_TRUE(fs::exists(dir / "timing.csv"));
  EXPECT_TRUE(fs::exists(dir / trace_file_name(Estimator::two_step, 1)));

  const Trace back = read_trace(dir / trace_file_name(Estimator::mine, 0));
  ASSERT_EQ(back.rows.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(back.rows[i].mi_estimate, r.traces[2].rows[i].mi_estimate);
  }
  EXPECT_EQ(read_traces(dir).size(), 6u);
  EXPECT_EQ(load_run_config(dir / "config.toml").schedule.steps, c.schedule.steps);
}

TEST(Staircase, SharedObjectiveReadsOneNetwork) {
  const RunConfig c = tiny_config(scratch_dir("shared"));
  const auto traces = train_staircase(c, Estimator::jsd_lb, 0, {Estimator::jsd_lb, Estimator::two_step});
  const auto alone = train_staircase(c, Estimator::jsd_lb, 0, {Estimator::two_step});
  ASSERT_EQ(traces.size(), 2u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(traces[1].rows[i].mi_estimate, alone[0].rows[i].mi_estimate);
    EXPECT_EQ(traces[0].rows[i].objective, traces[1].rows[i].objective);
  }
}

TEST(Staircase, BitIdenticalAcrossRunsAndWorkerCounts) {
  const fs::path a = scratch_dir("det_a"), b = scratch_dir("det_b");
  StaircaseOptions one, three;
  one.workers = 1;
  three.workers = 3;
  run_staircase(small_config(a), one);
  run_staircase(small_config(b), three);
  for (Estimator e : small_config(a).estimators) {
    for (std::uint64_t s : {3u, 4u, 5u}) {
      EXPECT_EQ(slurp(a / trace_file_name(e, s)), slurp(b / trace_file_name(e, s)));
    }
  }
  EXPECT_EQ(slurp(a / "summary.csv"), slurp(b / "summary.csv"));
}

TEST(Staircase, CheckpointRoundTripRestartsFromSavedNet) {
  const fs::path dir = scratch_dir("ckpt");
  RunConfig c = tiny_config(dir);
  c.seeds = {0};
  c.estimators = {Estimator::mine};
  StaircaseOptions save;
  save.workers = 1;
  save.save_nets = true;
  run_staircase(c, save);
  const fs::path net = dir / "net_mine_seed0.txt";
  ASSERT_TRUE(fs::exists(net));
  EXPECT_EQ(load_net(net).sample_dim(), 2u);
  StaircaseOptions load;
  load.workers = 1;
  load.write_files = false;
  load.load_net = net;
  EXPECT_NO_THROW(run_staircase(c, load));
  c.d = 3;
  EXPECT_THROW(run_staircase(c, load), std::invalid_argument);
}

TEST(Cli, XiCommands) {
  const CliRun inv = run_cli({"xi", "inv", "0.6931472"});
  EXPECT_EQ(inv.code, kExitOk);
  EXPECT_EQ(inv.out.rfind("0.2157615", 0), 0u);
  EXPECT_EQ(run_cli({"xi", "eval", "0"}).out, "0\n");
  const CliRun two = run_cli({"xi", "eval", "0.1", "0.2", "--precision", "4"});
  EXPECT_EQ(two.code, kExitOk);
  EXPECT_EQ(std::count(two.out.begin(), two.out.end(), '\n'), 2);
  EXPECT_EQ(run_cli({"xi", "eval", "0.7"}).code, kExitDomain);
  EXPECT_EQ(run_cli({"xi", "inv", "-1"}).code, kExitDomain);
  EXPECT_NE(run_cli({"xi", "eval"}).code, kExitOk);
}

TEST(Cli, CertifyAndTightness) {
  const CliRun pass = run_cli({"certify", "--grid", "100"});
  EXPECT_EQ(pass.code, kExitOk);
  EXPECT_EQ(pass.out.rfind("pass ", 0), 0u);
  EXPECT_EQ(run_cli({"certify", "--grid", "2", "--margin", "0.3"}).code, kExitNotCertified);
  const CliRun t = run_cli({"tightness", "--kmax", "3", "--alpha-step", "0.5"});
  EXPECT_EQ(t.code, kExitOk);
  EXPECT_EQ(t.out.rfind("k,alpha,mi,jsinfo,bound\n", 0), 0u);
  EXPECT_EQ(std::count(t.out.begin(), t.out.end(), '\n'), 7);
}

TEST(Cli, StaircaseAndReport) {
  const fs::path dir = scratch_dir("cli");
  const fs::path cfg = dir / "run.toml";
  std::ofstream(cfg) << "d = 2\nschedule = [[1, 2], [2, 2]]\nseeds = [0]\n"
                        "estimators = [\"jsd_lb\"]\nbatch_size = 4\nhidden = 4\n";
  const CliRun st = run_cli({"staircase", "--config", cfg.string(), "--out", (dir / "out").string(),
                             "--workers", "1", "-q"});
  EXPECT_EQ(st.code, kExitOk) << st.err;
  EXPECT_TRUE(fs::exists(dir / "out" / trace_file_name(Estimator::jsd_lb, 0)));
  fs::remove(dir / "out" / "summary.csv");
  EXPECT_EQ(run_cli({"report", "--in", (dir / "out").string()}).code, kExitOk);
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.csv"));
  EXPECT_EQ(run_cli({"staircase", "--config", (dir / "missing.toml").string()}).code, kExitConfig);
  EXPECT_EQ(run_cli({"report", "--in", (dir / "nothing").string()}).code, kExitFailure);
}
