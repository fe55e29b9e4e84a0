#include "jsdmi/neural_net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace jsdmi {

namespace {

constexpr const char* kCheckpointHeader = "jsdmi-discriminator v1";

void check_input(const DiscriminatorNet& net, Eigen::Index cols) {
  if (static_cast<std::size_t>(cols) != net.input_dim()) {
    throw std::invalid_argument("discriminator: expected " + std::to_string(net.input_dim()) +
                                " input columns, got " + std::to_string(cols));
  }
}

// Bias add followed by ReLU, in place.
void bias_relu(RowMatrix& z, const Eigen::VectorXd& bias) {
  const Eigen::Index cols = z.cols();
  const double* b = bias.data();
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    double* row = z.row(r).data();
    for (Eigen::Index c = 0; c < cols; ++c) row[c] = std::max(row[c] + b[c], 0.0);
  }
}

// Masks are applied by multiplication rather than select: the sign pattern of
// hidden units is close to random and branches mispredict badly.
void relu_mask(RowMatrix& g, const RowMatrix& h) {
  const Eigen::Index cols = g.cols();
  for (Eigen::Index r = 0; r < g.rows(); ++r) {
    double* out = g.row(r).data();
    const double* act = h.row(r).data();
    for (Eigen::Index c = 0; c < cols; ++c) out[c] *= static_cast<double>(act[c] > 0.0);
  }
}

}  // namespace

MlpParams MlpParams::zeros(std::size_t input_dim, std::size_t hidden) {
  const auto in = static_cast<Eigen::Index>(input_dim);
  const auto h = static_cast<Eigen::Index>(hidden);
  return {Eigen::MatrixXd::Zero(h, in), Eigen::VectorXd::Zero(h), Eigen::MatrixXd::Zero(h, h),
          Eigen::VectorXd::Zero(h),     Eigen::VectorXd::Zero(h), Eigen::VectorXd::Zero(1)};
}

std::size_t MlpParams::parameter_count() const noexcept {
  return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size() + w3.size() +
                                  b3.size());
}

std::vector<std::span<double>> MlpParams::tensors() {
  auto view = [](auto& t) { return std::span<double>(t.data(), static_cast<std::size_t>(t.size())); };
  return {view(w1), view(b1), view(w2), view(b2), view(w3), view(b3)};
}

std::vector<std::span<const double>> MlpParams::tensors() const {
  auto view = [](const auto& t) {
    return std::span<const double>(t.data(), static_cast<std::size_t>(t.size()));
  };
  return {view(w1), view(b1), view(w2), view(b2), view(w3), view(b3)};
}

bool MlpParams::all_finite() const {
  return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite() &&
         w3.allFinite() && b3.allFinite();
}

bool MlpParams::same_shape(const MlpParams& o) const {
  return w1.rows() == o.w1.rows() && w1.cols() == o.w1.cols() && b1.size() == o.b1.size() &&
         w2.rows() == o.w2.rows() && w2.cols() == o.w2.cols() && b2.size() == o.b2.size() &&
         w3.size() == o.w3.size() && b3.size() == o.b3.size();
}

DiscriminatorNet init_discriminator(std::size_t d, Rng& rng, std::size_t hidden) {
  if (d == 0 || hidden == 0) throw std::invalid_argument("init_discriminator: zero dimension");
  DiscriminatorNet net{MlpParams::zeros(2 * d, hidden)};
  auto fill = [&rng](Eigen::MatrixXd& w) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    // Row-major draw order keeps the stream layout independent of storage order.
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-bound, bound);
    }
  };
  fill(net.params.w1);
  fill(net.params.w2);
  const double bound3 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (Eigen::Index k = 0; k < net.params.w3.size(); ++k) {
    net.params.w3(k) = rng.uniform(-bound3, bound3);
  }
  return net;
}

ForwardCache forward_cached(const DiscriminatorNet& net, const RowMatrix& pairs) {
  check_input(net, pairs.cols());
  const auto& p = net.params;
  ForwardCache c;
  c.input = pairs;
  c.h1.noalias() = pairs * p.w1.transpose();
  bias_relu(c.h1, p.b1);
  c.h2.noalias() = c.h1 * p.w2.transpose();
  bias_relu(c.h2, p.b2);
  c.scores.noalias() = c.h2 * p.w3;
  c.scores.array() += p.b3(0);
  return c;
}

Eigen::VectorXd forward(const DiscriminatorNet& net, const RowMatrix& pairs) {
  return forward_cached(net, pairs).scores;
}

namespace {

// Shared tail of both backward passes: given d(loss)/d(score) per row and the
// hidden activations, fill gradients for layers 2 and 3 and leave the
// gradient with respect to the first-layer pre-activation in g1.
void backward_upper(const MlpParams& p, const RowMatrix& h1, const RowMatrix& h2,
                    const Eigen::VectorXd& g, MlpParams& grads, RowMatrix& g2, RowMatrix& g1) {
  grads.w3.noalias() = h2.transpose() * g;
  grads.b3(0) = g.sum();

  g2.resize(h2.rows(), h2.cols());
  const double* w3 = p.w3.data();
  for (Eigen::Index r = 0; r < h2.rows(); ++r) {
    const double gr = g(r);
    const double* act = h2.row(r).data();
    double* out = g2.row(r).data();
    for (Eigen::Index c = 0; c < h2.cols(); ++c) {
      out[c] = static_cast<double>(act[c] > 0.0) * (gr * w3[c]);
    }
  }
  grads.w2.noalias() = g2.transpose() * h1;
  grads.b2 = g2.colwise().sum().transpose();

  g1.resize(h1.rows(), h1.cols());
  g1.noalias() = g2 * p.w2;
  relu_mask(g1, h1);
  grads.b1 = g1.colwise().sum().transpose();
}

}  // namespace

MlpParams backward(const DiscriminatorNet& net, const ForwardCache& cache,
                   const Eigen::VectorXd& upstream) {
  if (upstream.size() != cache.scores.size()) {
    throw std::invalid_argument("backward: upstream gradient length " +
                                std::to_string(upstream.size()) + " != " +
                                std::to_string(cache.scores.size()));
  }
  const auto& p = net.params;
  MlpParams grads = MlpParams::zeros(p.input_dim(), p.hidden());
  RowMatrix g2, g1;
  backward_upper(p, cache.h1, cache.h2, upstream, grads, g2, g1);
  grads.w1.noalias() = g1.transpose() * cache.input;
  return grads;
}

MlpParams backward(const DiscriminatorNet& net, const RowMatrix& pairs,
                   const Eigen::VectorXd& upstream) {
  return backward(net, forward_cached(net, pairs), upstream);
}

PairwiseCache forward_all_pairs(const DiscriminatorNet& net, const Eigen::MatrixXd& u,
                                const Eigen::MatrixXd& v) {
  PairwiseCache c;
  forward_all_pairs(net, u, v, c);
  return c;
}

void forward_all_pairs(const DiscriminatorNet& net, const Eigen::MatrixXd& u,
                       const Eigen::MatrixXd& v, PairwiseCache& c) {
  if (u.rows() != v.rows() || u.cols() != v.cols()) {
    throw std::invalid_argument("forward_all_pairs: u and v shapes differ");
  }
  check_input(net, u.cols() + v.cols());
  const auto& p = net.params;
  const Eigen::Index b = u.rows();
  const Eigen::Index d = u.cols();
  const Eigen::Index h = static_cast<Eigen::Index>(p.hidden());

  c.u = u;
  c.v = v;
  RowMatrix a = u * p.w1.leftCols(d).transpose();
  a.rowwise() += p.b1.transpose();
  const RowMatrix bv = v * p.w1.rightCols(d).transpose();

  c.h1.resize(b * b, h);
  for (Eigen::Index i = 0; i < b; ++i) {
    const double* ai = a.row(i).data();
    for (Eigen::Index j = 0; j < b; ++j) {
      const double* bj = bv.row(j).data();
      double* out = c.h1.row(i * b + j).data();
      for (Eigen::Index k = 0; k < h; ++k) out[k] = std::max(ai[k] + bj[k], 0.0);
    }
  }
  c.h2.resize(b * b, h);
  c.h2.noalias() = c.h1 * p.w2.transpose();
  bias_relu(c.h2, p.b2);

  c.scores.resize(b, b);
  Eigen::Map<Eigen::VectorXd> flat(c.scores.data(), b * b);
  flat.noalias() = c.h2 * p.w3;
  flat.array() += p.b3(0);
  // scores is column-major; the flat buffer was filled in row order.
  c.scores.transposeInPlace();
}

MlpParams backward_all_pairs(const DiscriminatorNet& net, const PairwiseCache& cache,
                             const Eigen::MatrixXd& upstream) {
  MlpParams grads;
  BackwardWorkspace ws;
  backward_all_pairs(net, cache, upstream, grads, ws);
  return grads;
}

void backward_all_pairs(const DiscriminatorNet& net, const PairwiseCache& cache,
                        const Eigen::MatrixXd& upstream, MlpParams& grads,
                        BackwardWorkspace& ws) {
  const Eigen::Index b = cache.u.rows();
  if (upstream.rows() != b || upstream.cols() != b) {
    throw std::invalid_argument("backward_all_pairs: upstream must be b x b");
  }
  const auto& p = net.params;
  const Eigen::Index d = cache.u.cols();
  if (!grads.same_shape(p)) grads = MlpParams::zeros(p.input_dim(), p.hidden());

  ws.flat.resize(b * b);
  Eigen::Map<RowMatrix>(ws.flat.data(), b, b) = upstream;
  backward_upper(p, cache.h1, cache.h2, ws.flat, grads, ws.g2, ws.g1);

  // First layer: pair (i, j) feeds u_i to the left half and v_j to the right.
  RowMatrix per_u = RowMatrix::Zero(b, ws.g1.cols());
  RowMatrix per_v = RowMatrix::Zero(b, ws.g1.cols());
  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index j = 0; j < b; ++j) {
      const auto row = ws.g1.row(i * b + j);
      per_u.row(i) += row;
      per_v.row(j) += row;
    }
  }
  grads.w1.leftCols(d).noalias() = per_u.transpose() * cache.u;
  grads.w1.rightCols(d).noalias() = per_v.transpose() * cache.v;
}

AdamState AdamState::for_params(const MlpParams& params) {
  AdamState s;
  s.m = MlpParams::zeros(params.input_dim(), params.hidden());
  s.v = MlpParams::zeros(params.input_dim(), params.hidden());
  return s;
}

void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state) {
  if (!params.same_shape(grads) || !params.same_shape(state.m) || !params.same_shape(state.v)) {
    throw std::invalid_argument("adam_step: gradient or moment shape mismatch");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);

  auto theta = params.tensors();
  const auto grad = grads.tensors();
  auto m = state.m.tensors();
  auto v = state.v.tensors();
  for (std::size_t k = 0; k < theta.size(); ++k) {
    for (std::size_t i = 0; i < theta[k].size(); ++i) {
      const double gi = grad[k][i];
      m[k][i] = state.beta1 * m[k][i] + (1.0 - state.beta1) * gi;
      v[k][i] = state.beta2 * v[k][i] + (1.0 - state.beta2) * gi * gi;
      const double m_hat = m[k][i] / c1;
      const double v_hat = v[k][i] / c2;
      theta[k][i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

void save_net(const DiscriminatorNet& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << kCheckpointHeader << '\n'
      << net.input_dim() << ' ' << net.params.hidden() << '\n'
      << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& t : net.params.tensors()) {
    for (double x : t) out << x << '\n';
  }
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

DiscriminatorNet load_net(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  std::string header;
  std::getline(in, header);
  if (header != kCheckpointHeader) {
    throw std::runtime_error("checkpoint " + path.string() + ": bad header");
  }
  std::size_t input_dim = 0, hidden = 0;
  if (!(in >> input_dim >> hidden) || input_dim == 0 || input_dim % 2 != 0 || hidden == 0) {
    throw std::runtime_error("checkpoint " + path.string() + ": bad shape line");
  }
  DiscriminatorNet net{MlpParams::zeros(input_dim, hidden)};
  for (auto t : net.params.tensors()) {
    for (double& x : t) {
      if (!(in >> x)) throw std::runtime_error("checkpoint " + path.string() + ": truncated");
    }
  }
  return net;
}

}  // namespace jsdmi
