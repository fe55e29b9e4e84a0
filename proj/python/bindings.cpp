#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <vector>

#include "jsdmi/cli.hpp"
#include "jsdmi/discrete_exact.hpp"
#include "jsdmi/joint_range.hpp"
#include "jsdmi/mi_estimators.hpp"
#include "jsdmi/scalar_bound.hpp"
#include "jsdmi/synth_data.hpp"

namespace py = pybind11;
using namespace jsdmi;

namespace {

py::dict report_dict(const CertificationReport& r) {
  py::list failures;
  for (const auto& f : r.failures) failures.append(py::make_tuple(f.mu, f.nu, f.det));
  py::dict d;
  d["grid"] = r.grid_per_axis;
  d["checked"] = r.checked;
  d["max_det"] = r.max_det;
  d["margin"] = r.margin;
  d["passed"] = r.pass;
  d["failures"] = failures;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Jensen-Shannon lower bounds on mutual information.";
  m.attr("__version__") = JSDMI_VERSION;

  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

  m.def("bernoulli_kl", [](double mu, double nu) { return bernoulli_kl(mu, nu); }, py::arg("mu"),
        py::arg("nu"));
  m.def("bernoulli_js", [](double mu, double nu) { return bernoulli_js(mu, nu); }, py::arg("mu"),
        py::arg("nu"));
  m.def("xi", [](double x) { return xi(x); }, py::arg("x"),
        "Largest MI lower bound implied by a JS information of x nats.");
  m.def("xi_inverse", &xi_inverse, py::arg("y"));
  m.def("xi_inverse_complement", &xi_inverse_complement, py::arg("y"));
  m.def("xi_from_complement", [](double c) { return xi_from_complement(c); }, py::arg("c"));
  m.def("xi_derivative", &xi_derivative, py::arg("x"));
  m.def("xi_inverse_derivative", &xi_inverse_derivative, py::arg("y"));
  m.def("xi_approx", &xi_approx, py::arg("x"));
  m.def("ce_gap_estimate", &ce_gap_estimate, py::arg("i_ce"), py::arg("delta"));

  m.def("jacobian_det", [](double mu, double nu) { return jacobian(BernoulliPoint::interior(mu, nu)).det; },
        py::arg("mu"), py::arg("nu"));
  m.def("certify", [](std::size_t grid, double margin, unsigned workers) {
          return report_dict(certify_conjecture(grid, margin, workers));
        },
        py::arg("grid"), py::arg("margin") = 0.0, py::arg("workers") = 1);
  m.def("boundary_curve", [](std::size_t n) {
          std::vector<std::pair<double, double>> out;
          for (const auto& v : boundary_curve(n)) out.emplace_back(v.jsd, v.kld);
          return out;
        },
        py::arg("n"), "(jsd, kld) points of the lower envelope.");

  m.def("alpha_family", [](std::size_t k, double alpha) { return make_alpha_family(k, alpha).matrix(); },
        py::arg("k"), py::arg("alpha"));
  m.def("exact_mi", [](const Eigen::MatrixXd& p) { return exact_mi(JointTable(p)); }, py::arg("joint"));
  m.def("exact_jsinfo", [](const Eigen::MatrixXd& p) { return exact_jsinfo(JointTable(p)); },
        py::arg("joint"));
  m.def("exact_posterior", [](const Eigen::MatrixXd& p) { return exact_posterior(JointTable(p)); },
        py::arg("joint"));
  m.def("tightness_sweep", [](const std::vector<std::size_t>& ks, const std::vector<double>& alphas,
                              unsigned workers) {
          std::vector<std::tuple<std::size_t, double, double, double, double>> out;
          for (const auto& r : tightness_sweep(ks, alphas, workers)) {
            out.emplace_back(r.k, r.alpha, r.mi, r.jsinfo, r.bound);
          }
          return out;
        },
        py::arg("ks"), py::arg("alphas"), py::arg("workers") = 1,
        "Rows (k, alpha, mi, jsinfo, bound).");

  m.def("rho_for_mi", &rho_for_mi, py::arg("mi"), py::arg("d"));
  m.def("sample_joint", [](std::size_t d, double rho, const std::string& transform, std::size_t b,
                           std::uint64_t seed, std::uint64_t stream) {
          Rng rng(seed, stream);
          SampleBatch s = sample_joint({d, rho, parse_transform(transform)}, b, rng);
          return py::make_tuple(s.u, s.v);
        },
        py::arg("d"), py::arg("rho"), py::arg("transform") = "identity", py::arg("b") = 64,
        py::arg("seed") = 0, py::arg("stream") = 1);

  // Objectives on a b x b score matrix whose diagonal holds the joint pairs.
  auto scored = [](auto f) {
    return [f](const Eigen::MatrixXd& scores) { return f(PairedScores(scores)).value; };
  };
  m.def("ce_loss", scored([](const PairedScores& s) { return ce_loss(s); }), py::arg("scores"));
  m.def("mine", scored([](const PairedScores& s) { return mine_objective(s); }), py::arg("scores"));
  m.def("nwj", scored([](const PairedScores& s) { return nwj_objective(s); }), py::arg("scores"));
  m.def("cpc", scored([](const PairedScores& s) { return cpc_objective(s); }), py::arg("scores"));
  m.def("smile", [](const Eigen::MatrixXd& scores, double tau) {
          return smile_objective(PairedScores(scores), tau).value;
        },
        py::arg("scores"), py::arg("tau") = kDefaultSmileTau);
  m.def("two_step", [](const Eigen::MatrixXd& scores) { return two_step_estimate(PairedScores(scores)); },
        py::arg("scores"));
  m.def("jsd_lb", [](const Eigen::MatrixXd& scores) {
          return jsd_lb_report(ce_loss(PairedScores(scores)).value).i_ce;
        },
        py::arg("scores"));

  m.def("cli", [](const std::vector<std::string>& args) {
          std::vector<const char*> argv{"jsdmi"};
          for (const auto& a : args) argv.push_back(a.c_str());
          std::ostringstream out, err;
          const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
          return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the jsdmi command line; returns (exit_code, stdout, stderr).");
}
