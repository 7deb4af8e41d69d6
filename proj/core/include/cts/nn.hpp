#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace cts::nn {

enum class Activation { identity, relu, tanh };

const char* to_string(Activation a) noexcept;
Activation activation_from_string(const std::string& name);

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  Activation activation = Activation::identity;

  std::size_t in_dim() const noexcept { return static_cast<std::size_t>(weight.cols()); }
  std::size_t out_dim() const noexcept { return static_cast<std::size_t>(weight.rows()); }
};

/// Fully connected feed-forward network. Layers chain: layer i's output
/// width equals layer i+1's input width, and every parameter is finite.
class DenseNet {
 public:
  DenseNet() = default;
  explicit DenseNet(std::vector<DenseLayer> layers);

  /// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  static DenseNet glorot(std::span<const std::size_t> widths, Activation hidden,
                         Activation output, std::mt19937_64& rng);

  std::size_t input_dim() const noexcept { return layers_.empty() ? 0 : layers_.front().in_dim(); }
  std::size_t output_dim() const noexcept { return layers_.empty() ? 0 : layers_.back().out_dim(); }
  std::size_t depth() const noexcept { return layers_.size(); }
  std::size_t parameter_count() const noexcept;

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  const DenseLayer& layer(std::size_t i) const { return layers_.at(i); }

  /// Mutable access invalidates every forward cache taken before it.
  DenseLayer& mutable_layer(std::size_t i);

  std::uint64_t generation() const noexcept { return generation_; }
  bool all_finite() const;

 private:
  std::vector<DenseLayer> layers_;
  std::uint64_t generation_ = 0;
};

/// Per-layer activations from one forward call; columns are samples.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;       // input to layer i
  std::vector<Eigen::MatrixXd> pre;          // W x + b for layer i
  const DenseNet* net = nullptr;
  std::uint64_t generation = 0;
};

struct ForwardResult {
  Eigen::MatrixXd output;  // output_dim x batch
  ForwardCache cache;
};

/// Input is input_dim x batch; a single vector is a batch of one.
ForwardResult forward(const DenseNet& net, const Eigen::Ref<const Eigen::MatrixXd>& input);

/// Output only, without keeping a cache.
Eigen::MatrixXd predict(const DenseNet& net, const Eigen::Ref<const Eigen::MatrixXd>& input);

/// Gradients mirror DenseNet's parameter shapes.
struct Gradients {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;

  static Gradients zeros_like(const DenseNet& net);
  bool all_finite() const;
  double max_abs() const;
  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double s);
};

struct BackwardResult {
  Gradients params;         // summed over the batch
  Eigen::MatrixXd input_grad;  // input_dim x batch
};

/// Reverse-mode pass. output_grad is dLoss/dOutput, output_dim x batch.
BackwardResult backward(const DenseNet& net, const ForwardCache& cache,
                        const Eigen::Ref<const Eigen::MatrixXd>& output_grad);

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon_hat = 1e-8;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Accumulators for one parameter block set.
struct AdamState {
  Gradients first_moment;
  Gradients second_moment;
  std::uint64_t step = 0;

  static AdamState for_net(const DenseNet& net);
};

/// Bias-corrected Adam on a flat parameter block. `step` is the 1-based
/// index of this update.
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, std::uint64_t step, const TrainConfig& cfg);

/// One Adam update over every layer. Non-finite gradients are rejected
/// before anything is modified.
void adam_step(DenseNet& net, const Gradients& grads, AdamState& state, const TrainConfig& cfg);

}  // namespace cts::nn
