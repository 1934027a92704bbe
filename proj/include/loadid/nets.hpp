#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "loadid/rng.hpp"
#include "loadid/simulate.hpp"

namespace loadid::nets {

// Sequences are stored channels x T throughout: column t is time step t.
using Seq = Eigen::MatrixXd;

enum class CellKind { Lstm, Gru, Conv };
enum class Activation { Identity, Relu, Tanh };

std::string to_string(CellKind kind);
CellKind cell_kind_from_string(const std::string& s);
std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

/// Named parameter block. `shape` is the logical shape used for
/// serialization (row-major); `value` holds it as a 2-D matrix.
struct Tensor {
  std::string name;
  std::vector<Eigen::Index> shape;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;

  Eigen::Index size() const { return value.size(); }
};

struct LSTMParams {
  Eigen::MatrixXd W_f, W_i, W_o, W_c;  // h x d
  Eigen::MatrixXd U_f, U_i, U_o, U_c;  // h x h
  Eigen::VectorXd b_f, b_i, b_o, b_c;  // h
};

struct GRUParams {
  Eigen::MatrixXd W_z, W_r, W_h;  // h x (h + d), acting on [h_prev; x]
  Eigen::VectorXd b_z, b_r, b_h;
};

struct Conv1dParams {
  // kernels[o](c, j): output channel o, input channel c, tap j
  std::vector<Eigen::MatrixXd> kernels;
  Eigen::VectorXd biases;
  Activation activation = Activation::Identity;

  Eigen::Index width() const { return kernels.empty() ? 0 : kernels.front().cols(); }
};

struct LstmStep {
  Eigen::VectorXd h, c;
};

LstmStep lstm_cell_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                           const Eigen::VectorXd& c_prev, const LSTMParams& p);

Eigen::VectorXd gru_cell_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                                 const GRUParams& p);

/// Same-length output: out_i = f(b + sum_c sum_j w_{c,j} x_{c, i + j - (m-1)/2}),
/// zero outside [0, T).
Seq conv1d_forward(const Seq& x, const Conv1dParams& p);

Seq dense_forward(const Seq& x, const Eigen::MatrixXd& W, const Eigen::VectorXd& b, Activation a);

/// Inverted dropout; identity when !training or rate == 0.
Seq dropout_forward(const Seq& x, double rate, bool training, std::uint64_t seed);

double mse_loss(const Seq& pred, const Seq& truth);

// ---------------------------------------------------------------------------
// Layers with recorded tapes for reverse-mode gradients

class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string kind() const = 0;
  /// Records whatever backward() needs for this input.
  virtual Seq forward(const Seq& x, bool training, Rng& rng) = 0;
  /// Accumulates parameter gradients; returns dLoss/dx.
  virtual Seq backward(const Seq& grad_out) = 0;
  virtual std::vector<Tensor*> params() { return {}; }
  virtual Eigen::Index output_width(Eigen::Index input_width) const { return input_width; }
};

class LstmLayer final : public Layer {
 public:
  LstmLayer(Eigen::Index inputs, Eigen::Index units);
  std::string kind() const override { return "lstm"; }
  Seq forward(const Seq& x, bool training, Rng& rng) override;
  Seq backward(const Seq& grad_out) override;
  std::vector<Tensor*> params() override;
  Eigen::Index output_width(Eigen::Index) const override { return units_; }
  LSTMParams cell_params() const;

 private:
  Eigen::Index inputs_, units_;
  // gate order f, i, o, c
  Tensor W_[4], U_[4], b_[4];
  Seq x_, h_, c_, gate_[4];
};

class GruLayer final : public Layer {
 public:
  GruLayer(Eigen::Index inputs, Eigen::Index units);
  std::string kind() const override { return "gru"; }
  Seq forward(const Seq& x, bool training, Rng& rng) override;
  Seq backward(const Seq& grad_out) override;
  std::vector<Tensor*> params() override;
  Eigen::Index output_width(Eigen::Index) const override { return units_; }
  GRUParams cell_params() const;

 private:
  Eigen::Index inputs_, units_;
  Tensor Wz_, Wr_, Wh_, bz_, br_, bh_;
  Seq x_, h_, z_, r_, cand_;
};

class Conv1dLayer final : public Layer {
 public:
  Conv1dLayer(Eigen::Index in_channels, Eigen::Index out_channels, Eigen::Index width,
              Activation activation = Activation::Identity);
  std::string kind() const override { return "conv1d"; }
  Seq forward(const Seq& x, bool training, Rng& rng) override;
  Seq backward(const Seq& grad_out) override;
  std::vector<Tensor*> params() override;
  Eigen::Index output_width(Eigen::Index) const override { return out_; }
  Conv1dParams conv_params() const;

 private:
  Eigen::Index in_, out_, width_;
  Activation activation_;
  Tensor W_, b_;  // W: out x (in * width), column c * width + j
  Eigen::MatrixXd cols_;
  Seq out_cache_;
  Eigen::Index steps_ = 0;
};

class DenseLayer final : public Layer {
 public:
  DenseLayer(Eigen::Index inputs, Eigen::Index outputs, Activation activation = Activation::Identity);
  std::string kind() const override { return "dense"; }
  Seq forward(const Seq& x, bool training, Rng& rng) override;
  Seq backward(const Seq& grad_out) override;
  std::vector<Tensor*> params() override;
  Eigen::Index output_width(Eigen::Index) const override { return outputs_; }

 private:
  Eigen::Index inputs_, outputs_;
  Activation activation_;
  Tensor W_, b_;
  Seq x_, y_;
};

class ReluLayer final : public Layer {
 public:
  std::string kind() const override { return "relu"; }
  Seq forward(const Seq& x, bool training, Rng& rng) override;
  Seq backward(const Seq& grad_out) override;

 private:
  Seq x_;
};

class DropoutLayer final : public Layer {
 public:
  explicit DropoutLayer(double rate) : rate_(rate) {}
  std::string kind() const override { return "dropout"; }
  Seq forward(const Seq& x, bool training, Rng& rng) override;
  Seq backward(const Seq& grad_out) override;

 private:
  double rate_;
  Seq mask_;  // empty when inactive
};

// ---------------------------------------------------------------------------

struct NetworkConfig {
  CellKind cell = CellKind::Lstm;
  Eigen::Index units = 30;
  int layer_pairs = 2;
  double dropout = 0.3;  // ignored for Conv
  Eigen::Index dense_width = 100;
  Activation dense_activation = Activation::Relu;
  Eigen::Index conv_width = 9;
  double learning_rate = 1e-4;
  std::size_t batch_size = 2;
  int max_epochs = 10000;
  int patience = 200;
  std::uint64_t seed = 0;

  void validate() const;
  /// Dropout actually used by the stack (zero for the convolutional variant).
  double effective_dropout() const { return cell == CellKind::Conv ? 0.0 : dropout; }
};

/// The stack: [cell -> ReLU -> dropout] x layer_pairs -> dense(+activation) -> dense(linear).
class Network {
 public:
  Network(const NetworkConfig& config, Eigen::Index inputs, Eigen::Index outputs);

  const NetworkConfig& config() const { return config_; }
  Eigen::Index inputs() const { return inputs_; }
  Eigen::Index outputs() const { return outputs_; }

  /// Dropout masks are drawn from a generator seeded with `seed`, so equal
  /// seeds replay equal masks.
  Seq forward(const Seq& x, bool training, std::uint64_t seed);
  /// Backward through the most recent forward; accumulates into Tensor::grad.
  Seq backward(const Seq& grad_out);

  std::vector<Tensor*> params();
  void zero_grad();
  std::vector<Eigen::MatrixXd> snapshot();
  void restore(const std::vector<Eigen::MatrixXd>& values);
  /// Glorot-uniform weights, zero biases.
  void initialize(std::uint64_t seed);
  const std::vector<std::unique_ptr<Layer>>& layers() const { return layers_; }

 private:
  NetworkConfig config_;
  Eigen::Index inputs_, outputs_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

Seq network_forward(Network& net, const Seq& x, bool training, std::uint64_t seed);

/// Gradients of the batch-mean MSE with respect to every parameter,
/// returned in Network::params() order. Each sample is replayed through
/// forward with training = true and its own dropout seed.
struct Sample {
  Seq input;
  Seq target;
  std::uint64_t dropout_seed = 0;
};
std::pair<double, std::vector<Eigen::MatrixXd>> network_backward(Network& net, const std::vector<Sample>& batch,
                                                                 bool training = true);

struct AdamHyper {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamMoments {
  std::vector<Eigen::MatrixXd> m, v;
};

/// One bias-corrected Adam update (t >= 1) applied in place.
void adam_step(std::vector<Eigen::MatrixXd*> params, const std::vector<Eigen::MatrixXd>& grads,
               AdamMoments& moments, const AdamHyper& hyper, long t);

// ---------------------------------------------------------------------------

struct Normalizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;

  /// Per-channel z-score fitted on the given sequences (channels x T each).
  static Normalizer fit(const std::vector<Seq>& seqs);
  Seq apply(const Seq& x) const;
  Seq invert(const Seq& x) const;
};

struct TrainReport {
  std::vector<double> train_loss;  // running mean of batch losses (dropout active)
  std::vector<double> val_loss;    // inference mode; train-split loss when no validation split
  int stopped_epoch = 0;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  double initial_train_loss = 0.0;  // inference mode, before the first update
  double wall_seconds = 0.0;
};

struct TrainedModel {
  NetworkConfig config;
  std::vector<std::size_t> input_dofs;   // measured DOFs feeding the input channels
  std::vector<std::size_t> output_dofs;  // identified load DOFs
  Normalizer input_norm, output_norm;
  std::unique_ptr<Network> net;
};

/// Network input (channels x T) of a sequence: its noisy accelerations.
Seq sequence_input(const Sequence& s);
/// Network target (outputs x T): true forces at `dofs`.
Seq sequence_target(const Sequence& s, const std::vector<std::size_t>& dofs);

std::pair<TrainedModel, TrainReport> train(const NetworkConfig& config, const Dataset& dataset,
                                           const std::vector<std::size_t>& target_dofs);

/// Inference (dropout off) and de-normalization to newtons; outputs x T.
Seq predict_load(TrainedModel& model, const Seq& input);

/// Binary container: "LOADIDNN", u32 version, u64 header length, JSON
/// header, then every tensor's float64 values in row-major order.
void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);
std::string loss_curve_csv(const TrainReport& report);

}  // namespace loadid::nets
