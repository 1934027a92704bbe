// Reference (single-step / direct) forms of the layer maps. The layer
// classes compute the same maps over whole sequences.

#include <cmath>
#include <random>

#include "loadid/error.hpp"
#include "loadid/nets.hpp"

namespace loadid::nets {

namespace {

Eigen::VectorXd sigmoid(const Eigen::VectorXd& a) {
  return (1.0 + (-a.array()).exp()).inverse().matrix();
}

}  // namespace

std::string to_string(CellKind kind) {
  switch (kind) {
    case CellKind::Lstm: return "lstm";
    case CellKind::Gru: return "gru";
    case CellKind::Conv: return "conv";
  }
  return "unknown";
}

CellKind cell_kind_from_string(const std::string& s) {
  if (s == "lstm") return CellKind::Lstm;
  if (s == "gru") return CellKind::Gru;
  if (s == "conv") return CellKind::Conv;
  throw Error(ErrorKind::Config, "unknown cell kind '" + s + "' (expected lstm|gru|conv)");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "linear";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& s) {
  if (s == "linear" || s == "identity") return Activation::Identity;
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  throw Error(ErrorKind::Config, "unknown activation '" + s + "'");
}

LstmStep lstm_cell_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                           const Eigen::VectorXd& c_prev, const LSTMParams& p) {
  const Eigen::VectorXd f = sigmoid(p.W_f * x + p.U_f * h_prev + p.b_f);
  const Eigen::VectorXd i = sigmoid(p.W_i * x + p.U_i * h_prev + p.b_i);
  const Eigen::VectorXd o = sigmoid(p.W_o * x + p.U_o * h_prev + p.b_o);
  const Eigen::VectorXd cand = (p.W_c * x + p.U_c * h_prev + p.b_c).array().tanh().matrix();
  LstmStep s;
  s.c = f.cwiseProduct(c_prev) + i.cwiseProduct(cand);
  s.h = o.cwiseProduct(s.c.array().tanh().matrix());
  return s;
}

Eigen::VectorXd gru_cell_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                                 const GRUParams& p) {
  const Eigen::Index h = h_prev.size();
  Eigen::VectorXd hx(h + x.size());
  hx << h_prev, x;
  const Eigen::VectorXd z = sigmoid(p.W_z * hx + p.b_z);
  const Eigen::VectorXd r = sigmoid(p.W_r * hx + p.b_r);
  Eigen::VectorXd rhx(h + x.size());
  rhx << r.cwiseProduct(h_prev), x;
  const Eigen::VectorXd cand = (p.W_h * rhx + p.b_h).array().tanh().matrix();
  return (Eigen::VectorXd::Ones(h) - z).cwiseProduct(h_prev) + z.cwiseProduct(cand);
}

namespace {

double activate(double v, Activation a) {
  switch (a) {
    case Activation::Identity: return v;
    case Activation::Relu: return v > 0.0 ? v : 0.0;
    case Activation::Tanh: return std::tanh(v);
  }
  return v;
}

}  // namespace

Seq conv1d_forward(const Seq& x, const Conv1dParams& p) {
  const Eigen::Index T = x.cols();
  const Eigen::Index m = p.width();
  if (m < 1) throw Error(ErrorKind::Shape, "conv1d kernel width must be >= 1");
  const auto out_ch = static_cast<Eigen::Index>(p.kernels.size());
  const Eigen::Index pad = (m - 1) / 2;
  Seq y(out_ch, T);
  for (Eigen::Index o = 0; o < out_ch; ++o) {
    const Eigen::MatrixXd& w = p.kernels[static_cast<std::size_t>(o)];
    if (w.rows() != x.rows()) throw Error(ErrorKind::Shape, "conv1d: kernel/input channel mismatch");
    for (Eigen::Index i = 0; i < T; ++i) {
      double acc = p.biases(o);
      for (Eigen::Index j = 0; j < m; ++j) {
        const Eigen::Index src = i + j - pad;
        if (src < 0 || src >= T) continue;
        acc += w.col(j).dot(x.col(src));
      }
      y(o, i) = activate(acc, p.activation);
    }
  }
  return y;
}

Seq dense_forward(const Seq& x, const Eigen::MatrixXd& W, const Eigen::VectorXd& b, Activation a) {
  if (W.cols() != x.rows() || W.rows() != b.size()) throw Error(ErrorKind::Shape, "dense: dimension mismatch");
  Seq y = (W * x).colwise() + b;
  return y.unaryExpr([a](double v) { return activate(v, a); });
}

Seq dropout_forward(const Seq& x, double rate, bool training, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error(ErrorKind::InvalidParameter, "dropout rate must lie in [0,1)");
  if (!training || rate == 0.0) return x;
  Rng rng(seed);
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  Seq y(x.rows(), x.cols());
  for (Eigen::Index t = 0; t < x.cols(); ++t) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) y(r, t) = keep(rng) ? x(r, t) * scale : 0.0;
  }
  return y;
}

double mse_loss(const Seq& pred, const Seq& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) {
    throw Error(ErrorKind::InvalidLength, "mse: prediction and truth shapes differ");
  }
  if (pred.size() == 0) throw Error(ErrorKind::InvalidLength, "mse: empty input");
  return (pred - truth).squaredNorm() / static_cast<double>(pred.size());
}

}  // namespace loadid::nets
