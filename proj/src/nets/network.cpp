#include <cmath>

#include "loadid/error.hpp"
#include "loadid/nets.hpp"

namespace loadid::nets {

void NetworkConfig::validate() const {
  if (units < 1) throw Error(ErrorKind::Config, "units must be >= 1");
  if (layer_pairs < 1) throw Error(ErrorKind::Config, "layer_pairs must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error(ErrorKind::InvalidParameter, "dropout rate must lie in [0,1)");
  if (dense_width < 1) throw Error(ErrorKind::Config, "dense_width must be >= 1");
  if (conv_width < 1) throw Error(ErrorKind::Config, "conv_width must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorKind::Config, "learning_rate must be a positive finite number");
  }
  if (batch_size < 1) throw Error(ErrorKind::Config, "batch_size must be >= 1");
  if (max_epochs < 0) throw Error(ErrorKind::Config, "max_epochs must be >= 0");
  if (patience < 1) throw Error(ErrorKind::Config, "patience must be >= 1");
}

Network::Network(const NetworkConfig& config, Eigen::Index inputs, Eigen::Index outputs)
    : config_(config), inputs_(inputs), outputs_(outputs) {
  config_.validate();
  if (inputs < 1 || outputs < 1) throw Error(ErrorKind::Shape, "network needs at least one input and one output");
  Eigen::Index width = inputs;
  const double rate = config_.effective_dropout();
  for (int l = 0; l < config_.layer_pairs; ++l) {
    switch (config_.cell) {
      case CellKind::Lstm: layers_.push_back(std::make_unique<LstmLayer>(width, config_.units)); break;
      case CellKind::Gru: layers_.push_back(std::make_unique<GruLayer>(width, config_.units)); break;
      case CellKind::Conv:
        layers_.push_back(std::make_unique<Conv1dLayer>(width, config_.units, config_.conv_width));
        break;
    }
    width = config_.units;
    layers_.push_back(std::make_unique<ReluLayer>());
    if (rate > 0.0) layers_.push_back(std::make_unique<DropoutLayer>(rate));
  }
  layers_.push_back(std::make_unique<DenseLayer>(width, config_.dense_width, config_.dense_activation));
  layers_.push_back(std::make_unique<DenseLayer>(config_.dense_width, outputs, Activation::Identity));
  initialize(config_.seed);
}

Seq Network::forward(const Seq& x, bool training, std::uint64_t seed) {
  Rng rng(seed);
  Seq h = x;
  for (auto& layer : layers_) h = layer->forward(h, training, rng);
  return h;
}

Seq Network::backward(const Seq& grad_out) {
  Seq g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

std::vector<Tensor*> Network::params() {
  std::vector<Tensor*> all;
  for (auto& layer : layers_) {
    for (Tensor* t : layer->params()) all.push_back(t);
  }
  return all;
}

void Network::zero_grad() {
  for (Tensor* t : params()) t->grad.setZero();
}

std::vector<Eigen::MatrixXd> Network::snapshot() {
  std::vector<Eigen::MatrixXd> out;
  for (Tensor* t : params()) out.push_back(t->value);
  return out;
}

void Network::restore(const std::vector<Eigen::MatrixXd>& values) {
  auto ps = params();
  if (values.size() != ps.size()) throw Error(ErrorKind::Shape, "snapshot does not match network");
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (values[i].rows() != ps[i]->value.rows() || values[i].cols() != ps[i]->value.cols()) {
      throw Error(ErrorKind::Shape, "snapshot tensor '" + ps[i]->name + "' has the wrong shape");
    }
    ps[i]->value = values[i];
  }
}

void Network::initialize(std::uint64_t seed) {
  auto ps = params();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    Tensor& t = *ps[i];
    t.grad.setZero();
    if (t.shape.size() == 1) {
      t.value.setZero();
      continue;
    }
    // Receptive field of a conv kernel scales both fans.
    const double field = t.shape.size() == 3 ? static_cast<double>(t.shape[2]) : 1.0;
    const double fan_out = static_cast<double>(t.shape[0]) * field;
    const double fan_in = static_cast<double>(t.shape[1]) * field;
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Rng rng = make_rng(seed, "init", i);
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index r = 0; r < t.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.value.cols(); ++c) t.value(r, c) = dist(rng);
    }
  }
}

Seq network_forward(Network& net, const Seq& x, bool training, std::uint64_t seed) {
  return net.forward(x, training, seed);
}

std::pair<double, std::vector<Eigen::MatrixXd>> network_backward(Network& net, const std::vector<Sample>& batch,
                                                                 bool training) {
  if (batch.empty()) throw Error(ErrorKind::InvalidLength, "empty batch");
  net.zero_grad();
  double loss = 0.0;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const Sample& s : batch) {
    const Seq pred = net.forward(s.input, training, s.dropout_seed);
    if (pred.rows() != s.target.rows() || pred.cols() != s.target.cols()) {
      throw Error(ErrorKind::Shape, "target shape does not match network output");
    }
    const Seq diff = pred - s.target;
    const double n = static_cast<double>(diff.size());
    loss += diff.squaredNorm() / n * inv_b;
    net.backward(diff * (2.0 / n * inv_b));
  }
  std::vector<Eigen::MatrixXd> grads;
  for (Tensor* t : net.params()) grads.push_back(t->grad);
  return {loss, std::move(grads)};
}

void adam_step(std::vector<Eigen::MatrixXd*> params, const std::vector<Eigen::MatrixXd>& grads,
               AdamMoments& moments, const AdamHyper& hyper, long t) {
  if (t < 1) throw Error(ErrorKind::InvalidParameter, "adam step counter starts at 1");
  if (params.size() != grads.size()) throw Error(ErrorKind::Shape, "adam: parameter/gradient count mismatch");
  if (moments.m.empty()) {
    for (const auto& g : grads) {
      moments.m.push_back(Eigen::MatrixXd::Zero(g.rows(), g.cols()));
      moments.v.push_back(Eigen::MatrixXd::Zero(g.rows(), g.cols()));
    }
  }
  if (moments.m.size() != grads.size()) throw Error(ErrorKind::Shape, "adam: moment count mismatch");
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = moments.m[i];
    auto& v = moments.v[i];
    m = hyper.beta1 * m + (1.0 - hyper.beta1) * grads[i];
    v = hyper.beta2 * v + (1.0 - hyper.beta2) * grads[i].cwiseAbs2();
    const Eigen::ArrayXXd mhat = m.array() / c1;
    const Eigen::ArrayXXd vhat = v.array() / c2;
    params[i]->array() -= hyper.lr * mhat / (vhat.sqrt() + hyper.eps);
  }
}

}  // namespace loadid::nets
