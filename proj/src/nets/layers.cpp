#include <cmath>
#include <random>

#include "loadid/error.hpp"
#include "loadid/nets.hpp"

namespace loadid::nets {

namespace {

Tensor make_tensor(std::string name, Eigen::Index rows, Eigen::Index cols,
                   std::vector<Eigen::Index> shape = {}) {
  Tensor t;
  t.name = std::move(name);
  t.shape = shape.empty() ? std::vector<Eigen::Index>{rows, cols} : std::move(shape);
  t.value = Eigen::MatrixXd::Zero(rows, cols);
  t.grad = Eigen::MatrixXd::Zero(rows, cols);
  return t;
}

Tensor make_bias(std::string name, Eigen::Index rows) {
  return make_tensor(std::move(name), rows, 1, {rows});
}

inline double sigm(double a) { return 1.0 / (1.0 + std::exp(-a)); }

void check_rows(const Seq& x, Eigen::Index expected, const char* layer) {
  if (x.rows() != expected) {
    throw Error(ErrorKind::Shape, std::string(layer) + ": expected " + std::to_string(expected) +
                                      " input channels, got " + std::to_string(x.rows()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// LSTM

LstmLayer::LstmLayer(Eigen::Index inputs, Eigen::Index units) : inputs_(inputs), units_(units) {
  static const char* names[4] = {"f", "i", "o", "c"};
  for (int g = 0; g < 4; ++g) {
    W_[g] = make_tensor(std::string("W_") + names[g], units, inputs);
    U_[g] = make_tensor(std::string("U_") + names[g], units, units);
    b_[g] = make_bias(std::string("b_") + names[g], units);
  }
}

std::vector<Tensor*> LstmLayer::params() {
  std::vector<Tensor*> p;
  for (int g = 0; g < 4; ++g) p.push_back(&W_[g]);
  for (int g = 0; g < 4; ++g) p.push_back(&U_[g]);
  for (int g = 0; g < 4; ++g) p.push_back(&b_[g]);
  return p;
}

LSTMParams LstmLayer::cell_params() const {
  return LSTMParams{W_[0].value, W_[1].value, W_[2].value, W_[3].value,
                    U_[0].value, U_[1].value, U_[2].value, U_[3].value,
                    b_[0].value.col(0), b_[1].value.col(0), b_[2].value.col(0), b_[3].value.col(0)};
}

Seq LstmLayer::forward(const Seq& x, bool, Rng&) {
  check_rows(x, inputs_, "lstm");
  const Eigen::Index h = units_, T = x.cols();
  Eigen::MatrixXd Wst(4 * h, inputs_), Ust(4 * h, h);
  Eigen::VectorXd bst(4 * h);
  for (int g = 0; g < 4; ++g) {
    Wst.middleRows(g * h, h) = W_[g].value;
    Ust.middleRows(g * h, h) = U_[g].value;
    bst.segment(g * h, h) = b_[g].value.col(0);
  }
  const Eigen::MatrixXd pre = (Wst * x).colwise() + bst;

  x_ = x;
  h_.resize(h, T);
  c_.resize(h, T);
  for (auto& g : gate_) g.resize(h, T);
  Eigen::VectorXd hp = Eigen::VectorXd::Zero(h), cp = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd a(4 * h);
  for (Eigen::Index t = 0; t < T; ++t) {
    a.noalias() = pre.col(t);
    a.noalias() += Ust * hp;
    for (Eigen::Index k = 0; k < h; ++k) {
      const double f = sigm(a(k)), i = sigm(a(h + k)), o = sigm(a(2 * h + k));
      const double cand = std::tanh(a(3 * h + k));
      const double c = f * cp(k) + i * cand;
      gate_[0](k, t) = f;
      gate_[1](k, t) = i;
      gate_[2](k, t) = o;
      gate_[3](k, t) = cand;
      c_(k, t) = c;
      h_(k, t) = o * std::tanh(c);
    }
    hp = h_.col(t);
    cp = c_.col(t);
  }
  return h_;
}

Seq LstmLayer::backward(const Seq& grad_out) {
  const Eigen::Index h = units_, T = h_.cols();
  Eigen::MatrixXd Wst(4 * h, inputs_), Ust(4 * h, h);
  for (int g = 0; g < 4; ++g) {
    Wst.middleRows(g * h, h) = W_[g].value;
    Ust.middleRows(g * h, h) = U_[g].value;
  }
  Eigen::MatrixXd da(4 * h, T);
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(h), dc_next = Eigen::VectorXd::Zero(h);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    for (Eigen::Index k = 0; k < h; ++k) {
      const double f = gate_[0](k, t), i = gate_[1](k, t), o = gate_[2](k, t), cand = gate_[3](k, t);
      const double c_prev = t > 0 ? c_(k, t - 1) : 0.0;
      const double tc = std::tanh(c_(k, t));
      const double dh = grad_out(k, t) + dh_next(k);
      const double dc = dc_next(k) + dh * o * (1.0 - tc * tc);
      da(k, t) = dc * c_prev * f * (1.0 - f);
      da(h + k, t) = dc * cand * i * (1.0 - i);
      da(2 * h + k, t) = dh * tc * o * (1.0 - o);
      da(3 * h + k, t) = dc * i * (1.0 - cand * cand);
      dc_next(k) = dc * f;
    }
    dh_next.noalias() = Ust.transpose() * da.col(t);
  }
  const Eigen::MatrixXd dW = da * x_.transpose();
  Eigen::MatrixXd h_prev = Eigen::MatrixXd::Zero(h, T);
  if (T > 1) h_prev.rightCols(T - 1) = h_.leftCols(T - 1);
  const Eigen::MatrixXd dU = da * h_prev.transpose();
  const Eigen::VectorXd db = da.rowwise().sum();
  for (int g = 0; g < 4; ++g) {
    W_[g].grad += dW.middleRows(g * h, h);
    U_[g].grad += dU.middleRows(g * h, h);
    b_[g].grad.col(0) += db.segment(g * h, h);
  }
  return Wst.transpose() * da;
}

// ---------------------------------------------------------------------------
// GRU

GruLayer::GruLayer(Eigen::Index inputs, Eigen::Index units) : inputs_(inputs), units_(units) {
  Wz_ = make_tensor("W_z", units, units + inputs);
  Wr_ = make_tensor("W_r", units, units + inputs);
  Wh_ = make_tensor("W_h", units, units + inputs);
  bz_ = make_bias("b_z", units);
  br_ = make_bias("b_r", units);
  bh_ = make_bias("b_h", units);
}

std::vector<Tensor*> GruLayer::params() { return {&Wz_, &Wr_, &Wh_, &bz_, &br_, &bh_}; }

GRUParams GruLayer::cell_params() const {
  return GRUParams{Wz_.value, Wr_.value, Wh_.value, bz_.value.col(0), br_.value.col(0), bh_.value.col(0)};
}

Seq GruLayer::forward(const Seq& x, bool, Rng&) {
  check_rows(x, inputs_, "gru");
  const Eigen::Index h = units_, T = x.cols();
  // input parts of the three gates
  const Eigen::MatrixXd pz = (Wz_.value.rightCols(inputs_) * x).colwise() + bz_.value.col(0);
  const Eigen::MatrixXd pr = (Wr_.value.rightCols(inputs_) * x).colwise() + br_.value.col(0);
  const Eigen::MatrixXd ph = (Wh_.value.rightCols(inputs_) * x).colwise() + bh_.value.col(0);
  const auto Uz = Wz_.value.leftCols(h), Ur = Wr_.value.leftCols(h), Uh = Wh_.value.leftCols(h);

  x_ = x;
  h_.resize(h, T);
  z_.resize(h, T);
  r_.resize(h, T);
  cand_.resize(h, T);
  Eigen::VectorXd hp = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd az(h), ar(h), ah(h), rh(h);
  for (Eigen::Index t = 0; t < T; ++t) {
    az.noalias() = pz.col(t);
    az.noalias() += Uz * hp;
    ar.noalias() = pr.col(t);
    ar.noalias() += Ur * hp;
    for (Eigen::Index k = 0; k < h; ++k) {
      z_(k, t) = sigm(az(k));
      r_(k, t) = sigm(ar(k));
      rh(k) = r_(k, t) * hp(k);
    }
    ah.noalias() = ph.col(t);
    ah.noalias() += Uh * rh;
    for (Eigen::Index k = 0; k < h; ++k) {
      cand_(k, t) = std::tanh(ah(k));
      h_(k, t) = (1.0 - z_(k, t)) * hp(k) + z_(k, t) * cand_(k, t);
    }
    hp = h_.col(t);
  }
  return h_;
}

Seq GruLayer::backward(const Seq& grad_out) {
  const Eigen::Index h = units_, T = h_.cols();
  const auto Uz = Wz_.value.leftCols(h), Ur = Wr_.value.leftCols(h), Uh = Wh_.value.leftCols(h);
  Eigen::MatrixXd daz(h, T), dar(h, T), dah(h, T);
  Eigen::MatrixXd h_prev = Eigen::MatrixXd::Zero(h, T);
  if (T > 1) h_prev.rightCols(T - 1) = h_.leftCols(T - 1);
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(h), drh(h), dhp(h);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    Eigen::VectorXd dh = grad_out.col(t) + dh_next;
    for (Eigen::Index k = 0; k < h; ++k) {
      const double z = z_(k, t), c = cand_(k, t);
      daz(k, t) = dh(k) * (c - h_prev(k, t)) * z * (1.0 - z);
      dah(k, t) = dh(k) * z * (1.0 - c * c);
    }
    drh.noalias() = Uh.transpose() * dah.col(t);
    for (Eigen::Index k = 0; k < h; ++k) {
      const double r = r_(k, t);
      dar(k, t) = drh(k) * h_prev(k, t) * r * (1.0 - r);
      dhp(k) = dh(k) * (1.0 - z_(k, t)) + drh(k) * r;
    }
    dhp.noalias() += Uz.transpose() * daz.col(t);
    dhp.noalias() += Ur.transpose() * dar.col(t);
    dh_next = dhp;
  }
  Eigen::MatrixXd hx(h + inputs_, T), rhx(h + inputs_, T);
  hx.topRows(h) = h_prev;
  hx.bottomRows(inputs_) = x_;
  rhx.topRows(h) = r_.cwiseProduct(h_prev);
  rhx.bottomRows(inputs_) = x_;
  Wz_.grad += daz * hx.transpose();
  Wr_.grad += dar * hx.transpose();
  Wh_.grad += dah * rhx.transpose();
  bz_.grad.col(0) += daz.rowwise().sum();
  br_.grad.col(0) += dar.rowwise().sum();
  bh_.grad.col(0) += dah.rowwise().sum();
  return Wz_.value.rightCols(inputs_).transpose() * daz + Wr_.value.rightCols(inputs_).transpose() * dar +
         Wh_.value.rightCols(inputs_).transpose() * dah;
}

// ---------------------------------------------------------------------------
// Conv1d

Conv1dLayer::Conv1dLayer(Eigen::Index in_channels, Eigen::Index out_channels, Eigen::Index width,
                         Activation activation)
    : in_(in_channels), out_(out_channels), width_(width), activation_(activation) {
  if (width < 1) throw Error(ErrorKind::Shape, "conv1d kernel width must be >= 1");
  W_ = make_tensor("kernels", out_channels, in_channels * width, {out_channels, in_channels, width});
  b_ = make_bias("biases", out_channels);
}

std::vector<Tensor*> Conv1dLayer::params() { return {&W_, &b_}; }

Conv1dParams Conv1dLayer::conv_params() const {
  Conv1dParams p;
  for (Eigen::Index o = 0; o < out_; ++o) {
    Eigen::MatrixXd k(in_, width_);
    for (Eigen::Index c = 0; c < in_; ++c) {
      for (Eigen::Index j = 0; j < width_; ++j) k(c, j) = W_.value(o, c * width_ + j);
    }
    p.kernels.push_back(std::move(k));
  }
  p.biases = b_.value.col(0);
  p.activation = activation_;
  return p;
}

Seq Conv1dLayer::forward(const Seq& x, bool, Rng&) {
  check_rows(x, in_, "conv1d");
  const Eigen::Index T = x.cols(), pad = (width_ - 1) / 2;
  steps_ = T;
  cols_ = Eigen::MatrixXd::Zero(in_ * width_, T);
  for (Eigen::Index c = 0; c < in_; ++c) {
    for (Eigen::Index j = 0; j < width_; ++j) {
      const Eigen::Index shift = j - pad;  // cols_(c*m+j, i) = x(c, i + shift)
      const Eigen::Index lo = std::max<Eigen::Index>(0, -shift);
      const Eigen::Index hi = std::min<Eigen::Index>(T, T - shift);
      if (hi > lo) cols_.row(c * width_ + j).segment(lo, hi - lo) = x.row(c).segment(lo + shift, hi - lo);
    }
  }
  Seq y = (W_.value * cols_).colwise() + b_.value.col(0);
  switch (activation_) {
    case Activation::Identity: break;
    case Activation::Relu: y = y.cwiseMax(0.0); break;
    case Activation::Tanh: y = y.array().tanh().matrix(); break;
  }
  out_cache_ = y;
  return y;
}

Seq Conv1dLayer::backward(const Seq& grad_out) {
  Seq dz = grad_out;
  switch (activation_) {
    case Activation::Identity: break;
    case Activation::Relu: dz = (out_cache_.array() > 0.0).select(grad_out, 0.0); break;
    case Activation::Tanh: dz = grad_out.cwiseProduct((1.0 - out_cache_.array().square()).matrix()); break;
  }
  W_.grad += dz * cols_.transpose();
  b_.grad.col(0) += dz.rowwise().sum();
  const Eigen::MatrixXd dcols = W_.value.transpose() * dz;
  const Eigen::Index T = steps_, pad = (width_ - 1) / 2;
  Seq dx = Seq::Zero(in_, T);
  for (Eigen::Index c = 0; c < in_; ++c) {
    for (Eigen::Index j = 0; j < width_; ++j) {
      const Eigen::Index shift = j - pad;
      const Eigen::Index lo = std::max<Eigen::Index>(0, -shift);
      const Eigen::Index hi = std::min<Eigen::Index>(T, T - shift);
      if (hi > lo) dx.row(c).segment(lo + shift, hi - lo) += dcols.row(c * width_ + j).segment(lo, hi - lo);
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Dense, ReLU, dropout

DenseLayer::DenseLayer(Eigen::Index inputs, Eigen::Index outputs, Activation activation)
    : inputs_(inputs), outputs_(outputs), activation_(activation) {
  W_ = make_tensor("W", outputs, inputs);
  b_ = make_bias("b", outputs);
}

std::vector<Tensor*> DenseLayer::params() { return {&W_, &b_}; }

Seq DenseLayer::forward(const Seq& x, bool, Rng&) {
  check_rows(x, inputs_, "dense");
  x_ = x;
  y_ = dense_forward(x, W_.value, b_.value.col(0), activation_);
  return y_;
}

Seq DenseLayer::backward(const Seq& grad_out) {
  Seq dz = grad_out;
  switch (activation_) {
    case Activation::Identity: break;
    case Activation::Relu: dz = (y_.array() > 0.0).select(grad_out, 0.0); break;
    case Activation::Tanh: dz = grad_out.cwiseProduct((1.0 - y_.array().square()).matrix()); break;
  }
  W_.grad += dz * x_.transpose();
  b_.grad.col(0) += dz.rowwise().sum();
  return W_.value.transpose() * dz;
}

Seq ReluLayer::forward(const Seq& x, bool, Rng&) {
  x_ = x;
  return x.cwiseMax(0.0);
}

Seq ReluLayer::backward(const Seq& grad_out) { return (x_.array() > 0.0).select(grad_out, 0.0); }

Seq DropoutLayer::forward(const Seq& x, bool training, Rng& rng) {
  if (!training || rate_ == 0.0) {
    mask_.resize(0, 0);
    return x;
  }
  std::bernoulli_distribution keep(1.0 - rate_);
  const double scale = 1.0 / (1.0 - rate_);
  mask_.resize(x.rows(), x.cols());
  for (Eigen::Index t = 0; t < x.cols(); ++t) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) mask_(r, t) = keep(rng) ? scale : 0.0;
  }
  return x.cwiseProduct(mask_);
}

Seq DropoutLayer::backward(const Seq& grad_out) {
  if (mask_.size() == 0) return grad_out;
  return grad_out.cwiseProduct(mask_);
}

}  // namespace loadid::nets
