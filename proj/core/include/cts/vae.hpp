#pragma once

#include "cts/nn.hpp"
#include "cts/time_series.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace cts::vae {

struct VaeConfig {
  std::size_t length = 0;
  std::size_t channels = 1;
  std::size_t latent_dim = 16;
  std::size_t hidden_width = 128;
  std::size_t hidden_layers = 2;
  double kl_weight = 1.0;
};

/// Encoder output split into the Gaussian posterior parameters.
struct Posterior {
  Eigen::VectorXd mu;
  Eigen::VectorXd log_var;
};

struct LatentCode {
  Eigen::VectorXd mu;
  Eigen::VectorXd log_var;
  Eigen::VectorXd z;
};

/// Fully connected VAE over flattened series. The encoder emits
/// [mu; log_var] (2 * latent_dim rows); the decoder emits length * channels.
class VaeModel {
 public:
  VaeModel() = default;
  VaeModel(nn::DenseNet encoder, nn::DenseNet decoder, std::size_t length, std::size_t channels,
           double kl_weight = 1.0);

  static VaeModel create(const VaeConfig& cfg, std::uint64_t seed);

  const nn::DenseNet& encoder() const noexcept { return encoder_; }
  const nn::DenseNet& decoder() const noexcept { return decoder_; }
  nn::DenseNet& mutable_encoder() noexcept { return encoder_; }
  nn::DenseNet& mutable_decoder() noexcept { return decoder_; }

  std::size_t latent_dim() const noexcept { return latent_dim_; }
  std::size_t length() const noexcept { return length_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t input_dim() const noexcept { return length_ * channels_; }
  double kl_weight() const noexcept { return kl_weight_; }
  void set_kl_weight(double w);

 private:
  nn::DenseNet encoder_;
  nn::DenseNet decoder_;
  std::size_t length_ = 0;
  std::size_t channels_ = 0;
  std::size_t latent_dim_ = 0;
  double kl_weight_ = 1.0;
};

Posterior encode(const VaeModel& model, const TimeSeries& x);

/// Batched encode; columns of the result are per-series mu / log_var.
struct BatchPosterior {
  Eigen::MatrixXd mu;
  Eigen::MatrixXd log_var;
};
BatchPosterior encode_batch(const VaeModel& model, std::span<const TimeSeries> xs);

/// z = mu + exp(log_var / 2) * noise
Eigen::VectorXd reparameterize(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_var,
                               const Eigen::VectorXd& noise);

TimeSeries decode(const VaeModel& model, const Eigen::VectorXd& z);

/// KL(N(mu, diag(exp(log_var))) || N(0, I)).
double kl_divergence(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_var);

struct ElboTerms {
  double recon = 0.0;  // sum of squared reconstruction errors
  double kl = 0.0;
  double total = 0.0;  // recon + kl_weight * kl
};

ElboTerms elbo_loss(const VaeModel& model, const TimeSeries& x, const Eigen::VectorXd& noise);
ElboTerms elbo_loss(const VaeModel& model, const TimeSeries& x, const Eigen::VectorXd& noise,
                    double kl_weight);

/// Gradient of the batch-mean total loss. `batch` is input_dim x B and
/// `noise` latent_dim x B.
struct ElboGradients {
  nn::Gradients encoder;
  nn::Gradients decoder;
  ElboTerms terms;  // batch means
};
ElboGradients elbo_gradients(const VaeModel& model, const Eigen::Ref<const Eigen::MatrixXd>& batch,
                             const Eigen::Ref<const Eigen::MatrixXd>& noise);

struct EpochLoss {
  std::size_t epoch = 0;
  double recon = 0.0;
  double kl = 0.0;
  double total = 0.0;
};

/// Return false to stop training after the current epoch.
using EpochCallback = std::function<bool(const EpochLoss&, const VaeModel&)>;

struct TrainResult {
  VaeModel model;
  std::vector<EpochLoss> trace;
};

/// Mini-batch Adam on the negative ELBO. Batches come from a seeded shuffle
/// every epoch; the last partial batch is kept.
TrainResult train(VaeModel model, std::span<const TimeSeries> data, const nn::TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// encode -> reparameterize -> decode. Passing no noise decodes the mean.
TimeSeries reconstruct(const VaeModel& model, const TimeSeries& x);
TimeSeries reconstruct(const VaeModel& model, const TimeSeries& x, const Eigen::VectorXd& noise);

nlohmann::json to_json(const nn::DenseNet& net);
nn::DenseNet dense_net_from_json(const nlohmann::json& j);

/// Parameters are stored as flat row-major arrays (weight[r * in + c]).
nlohmann::json to_json(const VaeModel& model);
VaeModel vae_from_json(const nlohmann::json& j);

}  // namespace cts::vae
