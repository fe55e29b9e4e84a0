#pragma once

// Fully connected discriminator T(u, v): 2d -> H -> H -> 1 with ReLU hidden
// layers and a raw scalar output, trained with hand-written backpropagation
// and Adam. H defaults to 256.

#include <Eigen/Core>

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "jsdmi/synth_data.hpp"

namespace jsdmi {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr std::size_t kDefaultHidden = 256;

/// Parameter set of the network. Also used for gradients and Adam moments.
struct MlpParams {
  Eigen::MatrixXd w1;  // hidden x 2d
  Eigen::VectorXd b1;  // hidden
  Eigen::MatrixXd w2;  // hidden x hidden
  Eigen::VectorXd b2;  // hidden
  Eigen::VectorXd w3;  // hidden
  Eigen::VectorXd b3;  // 1

  static MlpParams zeros(std::size_t input_dim, std::size_t hidden);

  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(w1.cols()); }
  std::size_t hidden() const noexcept { return static_cast<std::size_t>(w1.rows()); }
  std::size_t parameter_count() const noexcept;

  /// Flat views over every tensor, in the order w1 b1 w2 b2 w3 b3.
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;

  bool all_finite() const;
  bool same_shape(const MlpParams& other) const;
};

struct DiscriminatorNet {
  MlpParams params;

  std::size_t input_dim() const noexcept { return params.input_dim(); }
  std::size_t sample_dim() const noexcept { return params.input_dim() / 2; }
};

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
DiscriminatorNet init_discriminator(std::size_t d, Rng& rng, std::size_t hidden = kDefaultHidden);

/// Activations kept for the backward pass over an n x 2d input.
struct ForwardCache {
  RowMatrix input;
  RowMatrix h1;
  RowMatrix h2;
  Eigen::VectorXd scores;
};

ForwardCache forward_cached(const DiscriminatorNet& net, const RowMatrix& pairs);
Eigen::VectorXd forward(const DiscriminatorNet& net, const RowMatrix& pairs);

/// Gradients of sum_i upstream_i * T(pair_i) for every parameter.
MlpParams backward(const DiscriminatorNet& net, const ForwardCache& cache,
                   const Eigen::VectorXd& upstream);
MlpParams backward(const DiscriminatorNet& net, const RowMatrix& pairs,
                   const Eigen::VectorXd& upstream);

/// Scores for all b^2 pairs (u_i, v_j) of a batch. The first layer is split
/// into its u and v halves so it costs O(b) rather than O(b^2) products.
struct PairwiseCache {
  Eigen::MatrixXd u;
  Eigen::MatrixXd v;
  RowMatrix h1;  // row i * b + j
  RowMatrix h2;
  Eigen::MatrixXd scores;  // b x b, (i, j) = T(u_i, v_j)
};

PairwiseCache forward_all_pairs(const DiscriminatorNet& net, const Eigen::MatrixXd& u,
                                const Eigen::MatrixXd& v);
/// Same, reusing the storage already held by `cache`.
void forward_all_pairs(const DiscriminatorNet& net, const Eigen::MatrixXd& u,
                       const Eigen::MatrixXd& v, PairwiseCache& cache);

/// Scratch buffers for backward_all_pairs; reuse across steps avoids
/// re-faulting the b^2 x hidden temporaries.
struct BackwardWorkspace {
  RowMatrix g2;
  RowMatrix g1;
  Eigen::VectorXd flat;
};

/// Gradients of sum_ij upstream(i, j) * T(u_i, v_j).
MlpParams backward_all_pairs(const DiscriminatorNet& net, const PairwiseCache& cache,
                             const Eigen::MatrixXd& upstream);
void backward_all_pairs(const DiscriminatorNet& net, const PairwiseCache& cache,
                        const Eigen::MatrixXd& upstream, MlpParams& grads,
                        BackwardWorkspace& ws);

struct AdamState {
  double lr = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t step = 0;
  MlpParams m;
  MlpParams v;

  static AdamState for_params(const MlpParams& params);
};

/// One bias-corrected Adam update in place.
void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state);

/// Text checkpoint: header line, shape line, then one value per line.
void save_net(const DiscriminatorNet& net, const std::filesystem::path& path);
DiscriminatorNet load_net(const std::filesystem::path& path);

}  // namespace jsdmi
