#include "cts/nn.hpp"

#include "cts/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cts::nn {

namespace {

void apply_activation(Activation a, Eigen::MatrixXd& m) {
  switch (a) {
    case Activation::identity: break;
    case Activation::relu: m = m.cwiseMax(0.0); break;
    case Activation::tanh: m = m.array().tanh().matrix(); break;
  }
}

// d act / d pre, evaluated elementwise and multiplied into grad
void activation_backward(Activation a, const Eigen::MatrixXd& pre, Eigen::MatrixXd& grad) {
  switch (a) {
    case Activation::identity: break;
    case Activation::relu: grad = (pre.array() > 0.0).select(grad, 0.0); break;
    case Activation::tanh: grad.array() *= 1.0 - pre.array().tanh().square(); break;
  }
}

}  // namespace

const char* to_string(Activation a) noexcept {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
  }
  return "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  fail(ErrorCode::parse_error, "unknown activation '" + name + "'");
}

DenseNet::DenseNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  require(!layers_.empty(), ErrorCode::invalid_argument, "network needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    require(l.weight.rows() > 0 && l.weight.cols() > 0 && l.bias.size() == l.weight.rows(),
            ErrorCode::shape_mismatch, "layer " + std::to_string(i) + " has inconsistent shapes");
    if (i > 0)
      require(layers_[i - 1].out_dim() == l.in_dim(), ErrorCode::shape_mismatch,
              "layer " + std::to_string(i) + " input width does not chain");
  }
  require(all_finite(), ErrorCode::non_finite, "network parameters must be finite");
}

DenseNet DenseNet::glorot(std::span<const std::size_t> widths, Activation hidden,
                          Activation output, std::mt19937_64& rng) {
  require(widths.size() >= 2, ErrorCode::invalid_argument, "need input and output widths");
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const auto in = static_cast<Eigen::Index>(widths[i]);
    const auto out = static_cast<Eigen::Index>(widths[i + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer l;
    l.weight.resize(out, in);
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) l.weight(r, c) = dist(rng);
    l.bias = Eigen::VectorXd::Zero(out);
    l.activation = i + 2 == widths.size() ? output : hidden;
    layers.push_back(std::move(l));
  }
  return DenseNet(std::move(layers));
}

std::size_t DenseNet::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

DenseLayer& DenseNet::mutable_layer(std::size_t i) {
  ++generation_;
  return layers_.at(i);
}

bool DenseNet::all_finite() const {
  return std::all_of(layers_.begin(), layers_.end(), [](const DenseLayer& l) {
    return l.weight.allFinite() && l.bias.allFinite();
  });
}

ForwardResult forward(const DenseNet& net, const Eigen::Ref<const Eigen::MatrixXd>& input) {
  require(net.depth() > 0, ErrorCode::invalid_argument, "forward on an empty network");
  require(static_cast<std::size_t>(input.rows()) == net.input_dim(), ErrorCode::shape_mismatch,
          "input has " + std::to_string(input.rows()) + " rows, network expects " +
              std::to_string(net.input_dim()));
  require(input.allFinite(), ErrorCode::non_finite, "forward input contains non-finite values");

  ForwardResult r;
  r.cache.net = &net;
  r.cache.generation = net.generation();
  r.cache.inputs.reserve(net.depth());
  r.cache.pre.reserve(net.depth());
  Eigen::MatrixXd x = input;
  for (const auto& l : net.layers()) {
    Eigen::MatrixXd pre = l.weight * x;
    pre.colwise() += l.bias;
    Eigen::MatrixXd post = pre;
    apply_activation(l.activation, post);
    r.cache.inputs.push_back(std::move(x));
    r.cache.pre.push_back(std::move(pre));
    x = std::move(post);
  }
  require(x.allFinite(), ErrorCode::non_finite, "forward produced non-finite output");
  r.output = std::move(x);
  return r;
}

Eigen::MatrixXd predict(const DenseNet& net, const Eigen::Ref<const Eigen::MatrixXd>& input) {
  require(static_cast<std::size_t>(input.rows()) == net.input_dim(), ErrorCode::shape_mismatch,
          "input has " + std::to_string(input.rows()) + " rows, network expects " +
              std::to_string(net.input_dim()));
  require(input.allFinite(), ErrorCode::non_finite, "predict input contains non-finite values");
  Eigen::MatrixXd x = input;
  for (const auto& l : net.layers()) {
    Eigen::MatrixXd pre = l.weight * x;
    pre.colwise() += l.bias;
    apply_activation(l.activation, pre);
    x = std::move(pre);
  }
  require(x.allFinite(), ErrorCode::non_finite, "predict produced non-finite output");
  return x;
}

Gradients Gradients::zeros_like(const DenseNet& net) {
  Gradients g;
  for (const auto& l : net.layers()) {
    g.weight.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  return g;
}

bool Gradients::all_finite() const {
  for (const auto& w : weight)
    if (!w.allFinite()) return false;
  for (const auto& b : bias)
    if (!b.allFinite()) return false;
  return true;
}

double Gradients::max_abs() const {
  double m = 0.0;
  for (const auto& w : weight)
    if (w.size() > 0) m = std::max(m, w.cwiseAbs().maxCoeff());
  for (const auto& b : bias)
    if (b.size() > 0) m = std::max(m, b.cwiseAbs().maxCoeff());
  return m;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  require(weight.size() == other.weight.size(), ErrorCode::shape_mismatch,
          "gradient layer counts differ");
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] += other.weight[i];
    bias[i] += other.bias[i];
  }
  return *this;
}

Gradients& Gradients::operator*=(double s) {
  for (auto& w : weight) w *= s;
  for (auto& b : bias) b *= s;
  return *this;
}

BackwardResult backward(const DenseNet& net, const ForwardCache& cache,
                        const Eigen::Ref<const Eigen::MatrixXd>& output_grad) {
  require(cache.net == &net && cache.generation == net.generation() &&
              cache.pre.size() == net.depth(),
          ErrorCode::invalid_argument, "forward cache is stale or belongs to another network");
  const auto batch = cache.inputs.front().cols();
  require(static_cast<std::size_t>(output_grad.rows()) == net.output_dim() &&
              output_grad.cols() == batch,
          ErrorCode::shape_mismatch, "output gradient shape does not match the forward batch");

  BackwardResult r;
  r.params.weight.resize(net.depth());
  r.params.bias.resize(net.depth());
  Eigen::MatrixXd grad = output_grad;
  for (std::size_t i = net.depth(); i-- > 0;) {
    const auto& l = net.layer(i);
    activation_backward(l.activation, cache.pre[i], grad);
    r.params.weight[i].noalias() = grad * cache.inputs[i].transpose();
    r.params.bias[i] = grad.rowwise().sum();
    Eigen::MatrixXd next = l.weight.transpose() * grad;
    grad = std::move(next);
  }
  r.input_grad = std::move(grad);
  return r;
}

void TrainConfig::validate() const {
  require(learning_rate > 0.0 && std::isfinite(learning_rate), ErrorCode::invalid_argument,
          "learning_rate must be positive");
  require(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0, ErrorCode::invalid_argument,
          "beta1 and beta2 must lie in (0, 1)");
  require(epsilon_hat > 0.0, ErrorCode::invalid_argument, "epsilon_hat must be positive");
  require(epochs > 0, ErrorCode::invalid_argument, "epochs must be positive");
  require(batch_size > 0, ErrorCode::invalid_argument, "batch_size must be positive");
}

AdamState AdamState::for_net(const DenseNet& net) {
  return AdamState{Gradients::zeros_like(net), Gradients::zeros_like(net), 0};
}

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, std::uint64_t step, const TrainConfig& cfg) {
  require(params.size() == grads.size() && m.size() == params.size() && v.size() == params.size(),
          ErrorCode::shape_mismatch, "Adam buffers do not match the parameter block");
  require(step >= 1, ErrorCode::invalid_argument, "Adam step index is 1-based");
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grads[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    params[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon_hat);
  }
}

namespace {

template <typename Mat>
std::span<double> as_span(Mat& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

template <typename Mat>
std::span<const double> as_cspan(const Mat& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

}  // namespace

void adam_step(DenseNet& net, const Gradients& grads, AdamState& state, const TrainConfig& cfg) {
  require(grads.weight.size() == net.depth() && state.first_moment.weight.size() == net.depth(),
          ErrorCode::shape_mismatch, "Adam state or gradients do not match the network");
  for (std::size_t i = 0; i < net.depth(); ++i) {
    const auto& l = net.layer(i);
    require(grads.weight[i].rows() == l.weight.rows() && grads.weight[i].cols() == l.weight.cols() &&
                grads.bias[i].size() == l.bias.size(),
            ErrorCode::shape_mismatch, "gradient shape mismatch at layer " + std::to_string(i));
  }
  require(grads.all_finite(), ErrorCode::non_finite, "Adam step rejected: non-finite gradient");

  const std::uint64_t step = state.step + 1;
  for (std::size_t i = 0; i < net.depth(); ++i) {
    auto& l = net.mutable_layer(i);
    adam_update(as_span(l.weight), as_cspan(grads.weight[i]), as_span(state.first_moment.weight[i]),
                as_span(state.second_moment.weight[i]), step, cfg);
    adam_update(as_span(l.bias), as_cspan(grads.bias[i]), as_span(state.first_moment.bias[i]),
                as_span(state.second_moment.bias[i]), step, cfg);
  }
  state.step = step;
}

}  // namespace cts::nn
