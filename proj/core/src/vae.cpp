#include "cts/vae.hpp"

#include "cts/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace cts::vae {

VaeModel::VaeModel(nn::DenseNet encoder, nn::DenseNet decoder, std::size_t length,
                   std::size_t channels, double kl_weight)
    : encoder_(std::move(encoder)),
      decoder_(std::move(decoder)),
      length_(length),
      channels_(channels) {
  require(length_ > 0 && channels_ > 0, ErrorCode::shape_mismatch, "VAE input shape must be positive");
  require(encoder_.input_dim() == input_dim(), ErrorCode::shape_mismatch,
          "encoder input width must equal length * channels");
  require(encoder_.output_dim() % 2 == 0 && encoder_.output_dim() > 0, ErrorCode::shape_mismatch,
          "encoder output width must be 2 * latent_dim");
  latent_dim_ = encoder_.output_dim() / 2;
  require(decoder_.input_dim() == latent_dim_, ErrorCode::shape_mismatch,
          "decoder input width must equal latent_dim");
  require(decoder_.output_dim() == input_dim(), ErrorCode::shape_mismatch,
          "decoder output width must equal length * channels");
  set_kl_weight(kl_weight);
}

VaeModel VaeModel::create(const VaeConfig& cfg, std::uint64_t seed) {
  require(cfg.length > 0 && cfg.channels > 0 && cfg.latent_dim > 0 && cfg.hidden_width > 0,
          ErrorCode::invalid_argument, "VAE dimensions must be positive");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> enc{cfg.length * cfg.channels};
  std::vector<std::size_t> dec{cfg.latent_dim};
  for (std::size_t i = 0; i < cfg.hidden_layers; ++i) {
    enc.push_back(cfg.hidden_width);
    dec.push_back(cfg.hidden_width);
  }
  enc.push_back(2 * cfg.latent_dim);
  dec.push_back(cfg.length * cfg.channels);
  auto encoder = nn::DenseNet::glorot(enc, nn::Activation::relu, nn::Activation::identity, rng);
  auto decoder = nn::DenseNet::glorot(dec, nn::Activation::relu, nn::Activation::identity, rng);
  return VaeModel(std::move(encoder), std::move(decoder), cfg.length, cfg.channels, cfg.kl_weight);
}

void VaeModel::set_kl_weight(double w) {
  require(std::isfinite(w) && w >= 0.0, ErrorCode::invalid_argument,
          "kl_weight must be finite and nonnegative");
  kl_weight_ = w;
}

namespace {

void check_shape(const VaeModel& model, const TimeSeries& x) {
  require(x.length() == model.length() && x.channels() == model.channels(),
          ErrorCode::shape_mismatch,
          "series shape (" + std::to_string(x.length()) + ", " + std::to_string(x.channels()) +
              ") does not match model (" + std::to_string(model.length()) + ", " +
              std::to_string(model.channels()) + ")");
}

void check_latent(const VaeModel& model, const Eigen::VectorXd& v, const char* what) {
  require(static_cast<std::size_t>(v.size()) == model.latent_dim(), ErrorCode::shape_mismatch,
          std::string(what) + " has length " + std::to_string(v.size()) + ", expected " +
              std::to_string(model.latent_dim()));
}

}  // namespace

Posterior encode(const VaeModel& model, const TimeSeries& x) {
  check_shape(model, x);
  const Eigen::VectorXd out = nn::predict(model.encoder(), x.flatten());
  const auto d = static_cast<Eigen::Index>(model.latent_dim());
  return Posterior{out.head(d), out.tail(d)};
}

BatchPosterior encode_batch(const VaeModel& model, std::span<const TimeSeries> xs) {
  require(!xs.empty(), ErrorCode::empty_input, "encode_batch on an empty list");
  for (const auto& x : xs) check_shape(model, x);
  const Eigen::MatrixXd out = nn::predict(model.encoder(), stack_flat(xs));
  const auto d = static_cast<Eigen::Index>(model.latent_dim());
  return BatchPosterior{out.topRows(d), out.bottomRows(d)};
}

Eigen::VectorXd reparameterize(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_var,
                               const Eigen::VectorXd& noise) {
  require(mu.size() == log_var.size() && mu.size() == noise.size(), ErrorCode::shape_mismatch,
          "reparameterize needs equal-length mu, log_var and noise");
  Eigen::VectorXd z = mu.array() + (0.5 * log_var.array()).exp() * noise.array();
  require(z.allFinite(), ErrorCode::non_finite, "reparameterized latent is non-finite");
  return z;
}

TimeSeries decode(const VaeModel& model, const Eigen::VectorXd& z) {
  check_latent(model, z, "latent vector");
  const Eigen::VectorXd out = nn::predict(model.decoder(), z);
  return TimeSeries::from_flat(out, model.length(), model.channels());
}

double kl_divergence(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_var) {
  require(mu.size() == log_var.size(), ErrorCode::shape_mismatch,
          "kl_divergence needs equal-length mu and log_var");
  // Each term exp(l) - 1 - l >= 0, so summing termwise keeps the result nonnegative.
  double kl = 0.0;
  for (Eigen::Index j = 0; j < mu.size(); ++j) {
    const double l = log_var(j);
    kl += 0.5 * (mu(j) * mu(j) + std::expm1(l) - l);
  }
  require(std::isfinite(kl), ErrorCode::non_finite, "KL divergence is non-finite");
  return kl;
}

ElboTerms elbo_loss(const VaeModel& model, const TimeSeries& x, const Eigen::VectorXd& noise) {
  return elbo_loss(model, x, noise, model.kl_weight());
}

ElboTerms elbo_loss(const VaeModel& model, const TimeSeries& x, const Eigen::VectorXd& noise,
                    double kl_weight) {
  check_shape(model, x);
  check_latent(model, noise, "noise");
  const auto post = encode(model, x);
  const Eigen::VectorXd z = reparameterize(post.mu, post.log_var, noise);
  const Eigen::VectorXd xhat = nn::predict(model.decoder(), z);
  ElboTerms t;
  t.recon = (xhat - x.flatten()).squaredNorm();
  t.kl = kl_divergence(post.mu, post.log_var);
  t.total = t.recon + kl_weight * t.kl;
  require(std::isfinite(t.total), ErrorCode::non_finite, "ELBO loss is non-finite");
  return t;
}

ElboGradients elbo_gradients(const VaeModel& model, const Eigen::Ref<const Eigen::MatrixXd>& batch,
                             const Eigen::Ref<const Eigen::MatrixXd>& noise) {
  const auto d = static_cast<Eigen::Index>(model.latent_dim());
  const auto b = batch.cols();
  require(b > 0 && static_cast<std::size_t>(batch.rows()) == model.input_dim(),
          ErrorCode::shape_mismatch, "batch shape does not match the model input");
  require(noise.rows() == d && noise.cols() == b, ErrorCode::shape_mismatch,
          "noise shape must be latent_dim x batch");
  const double w = model.kl_weight();
  const double inv_b = 1.0 / static_cast<double>(b);

  auto enc = nn::forward(model.encoder(), batch);
  const Eigen::MatrixXd mu = enc.output.topRows(d);
  const Eigen::MatrixXd log_var = enc.output.bottomRows(d);
  const Eigen::ArrayXXd sigma = (0.5 * log_var.array()).exp();
  const Eigen::MatrixXd z = (mu.array() + sigma * noise.array()).matrix();
  auto dec = nn::forward(model.decoder(), z);
  const Eigen::MatrixXd diff = dec.output - batch;

  ElboGradients g;
  g.terms.recon = diff.squaredNorm() * inv_b;
  g.terms.kl = 0.5 * (mu.array().square() + log_var.array().unaryExpr([](double l) {
                        return std::expm1(l) - l;
                      })).sum() * inv_b;
  g.terms.total = g.terms.recon + w * g.terms.kl;
  require(std::isfinite(g.terms.total), ErrorCode::non_finite, "ELBO loss is non-finite");

  auto dec_back = nn::backward(model.decoder(), dec.cache, (2.0 * inv_b) * diff);
  const Eigen::MatrixXd& dz = dec_back.input_grad;
  Eigen::MatrixXd denc(2 * d, b);
  denc.topRows(d) = dz + (w * inv_b) * mu;
  denc.bottomRows(d) = (dz.array() * noise.array() * 0.5 * sigma +
                        (w * 0.5 * inv_b) * (log_var.array().exp() - 1.0))
                           .matrix();
  auto enc_back = nn::backward(model.encoder(), enc.cache, denc);
  g.encoder = std::move(enc_back.params);
  g.decoder = std::move(dec_back.params);
  return g;
}

TrainResult train(VaeModel model, std::span<const TimeSeries> data, const nn::TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  require(!data.empty(), ErrorCode::empty_input, "cannot train on an empty dataset");
  for (const auto& x : data) check_shape(model, x);

  const Eigen::MatrixXd all = stack_flat(data);
  const auto n = data.size();
  const auto d = static_cast<Eigen::Index>(model.latent_dim());
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto enc_state = nn::AdamState::for_net(model.encoder());
  auto dec_state = nn::AdamState::for_net(model.decoder());

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  result.trace.reserve(cfg.epochs);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochLoss loss{epoch, 0.0, 0.0, 0.0};
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      const auto b = static_cast<Eigen::Index>(stop - start);
      Eigen::MatrixXd batch(all.rows(), b);
      for (Eigen::Index i = 0; i < b; ++i) batch.col(i) = all.col(static_cast<Eigen::Index>(order[start + i]));
      Eigen::MatrixXd noise(d, b);
      for (Eigen::Index c = 0; c < b; ++c)
        for (Eigen::Index r = 0; r < d; ++r) noise(r, c) = normal(rng);

      ElboGradients g;
      try {
        g = elbo_gradients(model, batch, noise);
      } catch (const Error& e) {
        fail(ErrorCode::divergence,
             "training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
      }
      if (!g.encoder.all_finite() || !g.decoder.all_finite())
        fail(ErrorCode::divergence,
             "training diverged at epoch " + std::to_string(epoch) + ": non-finite gradient");
      nn::adam_step(model.mutable_encoder(), g.encoder, enc_state, cfg);
      nn::adam_step(model.mutable_decoder(), g.decoder, dec_state, cfg);
      const double frac = static_cast<double>(b) / static_cast<double>(n);
      loss.recon += g.terms.recon * frac;
      loss.kl += g.terms.kl * frac;
      loss.total += g.terms.total * frac;
    }
    if (!std::isfinite(loss.total))
      fail(ErrorCode::divergence, "training diverged at epoch " + std::to_string(epoch));
    result.trace.push_back(loss);
    if (on_epoch && !on_epoch(loss, model)) break;
  }
  result.model = std::move(model);
  return result;
}

TimeSeries reconstruct(const VaeModel& model, const TimeSeries& x) {
  return decode(model, encode(model, x).mu);
}

TimeSeries reconstruct(const VaeModel& model, const TimeSeries& x, const Eigen::VectorXd& noise) {
  const auto post = encode(model, x);
  return decode(model, reparameterize(post.mu, post.log_var, noise));
}

nlohmann::json to_json(const nn::DenseNet& net) {
  auto layers = nlohmann::json::array();
  for (const auto& l : net.layers()) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weight.size()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.push_back(l.weight(r, c));
    layers.push_back({{"in", l.in_dim()},
                      {"out", l.out_dim()},
                      {"activation", nn::to_string(l.activation)},
                      {"weight", std::move(w)},
                      {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  return nlohmann::json{{"layers", std::move(layers)}};
}

nn::DenseNet dense_net_from_json(const nlohmann::json& j) {
  require(j.contains("layers") && j["layers"].is_array(), ErrorCode::parse_error,
          "network JSON needs a 'layers' array");
  std::vector<nn::DenseLayer> layers;
  for (const auto& e : j["layers"]) {
    const auto in = e.at("in").get<Eigen::Index>();
    const auto out = e.at("out").get<Eigen::Index>();
    const auto w = e.at("weight").get<std::vector<double>>();
    const auto b = e.at("bias").get<std::vector<double>>();
    require(static_cast<Eigen::Index>(w.size()) == in * out && static_cast<Eigen::Index>(b.size()) == out,
            ErrorCode::parse_error, "layer parameter arrays do not match declared shape");
    nn::DenseLayer l;
    l.weight.resize(out, in);
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) l.weight(r, c) = w[static_cast<std::size_t>(r * in + c)];
    l.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), out);
    l.activation = nn::activation_from_string(e.at("activation").get<std::string>());
    layers.push_back(std::move(l));
  }
  return nn::DenseNet(std::move(layers));
}

nlohmann::json to_json(const VaeModel& model) {
  return nlohmann::json{
      {"architecture", "dense-vae"},
      {"input_shape", {model.length(), model.channels()}},
      {"latent_dim", model.latent_dim()},
      {"kl_weight", model.kl_weight()},
      {"encoder", to_json(model.encoder())},
      {"decoder", to_json(model.decoder())},
  };
}

VaeModel vae_from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("encoder") && j.contains("decoder") &&
              j.contains("input_shape"),
          ErrorCode::parse_error, "VAE JSON needs encoder, decoder and input_shape");
  const auto shape = j["input_shape"].get<std::vector<std::size_t>>();
  require(shape.size() == 2, ErrorCode::parse_error, "input_shape must be [length, channels]");
  VaeModel model(dense_net_from_json(j["encoder"]), dense_net_from_json(j["decoder"]), shape[0],
                 shape[1], j.value("kl_weight", 1.0));
  if (j.contains("latent_dim"))
    require(j["latent_dim"].get<std::size_t>() == model.latent_dim(), ErrorCode::parse_error,
            "latent_dim disagrees with the encoder output width");
  return model;
}

}  // namespace cts::vae
