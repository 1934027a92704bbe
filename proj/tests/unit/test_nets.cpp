#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>

#include "loadid/error.hpp"
#include "loadid/nets.hpp"
#include "loadid/simulate.hpp"

using namespace loadid;
using namespace loadid::nets;

namespace {

Seq random_seq(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Seq s(rows, cols);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = n(rng);
  return s;
}

void randomize(Layer& layer, std::uint64_t seed, double scale = 0.5) {
  std::size_t k = 0;
  for (Tensor* t : layer.params()) t->value = scale * random_seq(t->value.rows(), t->value.cols(), seed + k++);
}

// Loss = sum(G .* layer(x)); compares analytic gradients with central
// differences for every parameter entry and every input entry.
void check_layer_gradients(Layer& layer, const Seq& x, double tol = 1e-6) {
  Rng rng(1);
  const Seq y0 = layer.forward(x, false, rng);
  const Seq G = random_seq(y0.rows(), y0.cols(), 99);
  for (Tensor* t : layer.params()) t->grad.setZero();
  layer.forward(x, false, rng);
  const Seq dx = layer.backward(G);
  auto loss = [&](const Seq& in) {
    Rng r(1);
    return layer.forward(in, false, r).cwiseProduct(G).sum();
  };
  const double h = 1e-6;
  for (Tensor* t : layer.params()) {
    for (Eigen::Index i = 0; i < t->value.size(); ++i) {
      double& w = t->value.data()[i];
      const double saved = w;
      w = saved + h;
      const double lp = loss(x);
      w = saved - h;
      const double lm = loss(x);
      w = saved;
      const double fd = (lp - lm) / (2 * h);
      const double an = t->grad.data()[i];
      INFO(layer.kind() << " tensor " << t->name << " entry " << i);
      CHECK(std::abs(fd - an) <= tol * std::max(1.0, std::abs(fd)));
    }
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Seq xp = x, xm = x;
    xp.data()[i] += h;
    xm.data()[i] -= h;
    const double fd = (loss(xp) - loss(xm)) / (2 * h);
    INFO(layer.kind() << " input entry " << i);
    CHECK(std::abs(fd - dx.data()[i]) <= tol * std::max(1.0, std::abs(fd)));
  }
}

}  // namespace

TEST_CASE("lstm layer matches the single-step cell") {
  LstmLayer layer(2, 3);
  randomize(layer, 5);
  const Seq x = random_seq(2, 4, 7);
  Rng rng(0);
  const Seq y = layer.forward(x, false, rng);
  const LSTMParams p = layer.cell_params();
  Eigen::VectorXd h = Eigen::VectorXd::Zero(3), c = Eigen::VectorXd::Zero(3);
  for (Eigen::Index t = 0; t < 4; ++t) {
    const LstmStep s = lstm_cell_forward(x.col(t), h, c, p);
    h = s.h;
    c = s.c;
    CHECK((y.col(t) - h).norm() < 1e-12);
  }
}

TEST_CASE("lstm cell with zero weights gives h = 0.5*tanh(0.5*c_prev)") {
  LSTMParams p;
  for (auto* m : {&p.W_f, &p.W_i, &p.W_o, &p.W_c}) *m = Eigen::MatrixXd::Zero(2, 1);
  for (auto* m : {&p.U_f, &p.U_i, &p.U_o, &p.U_c}) *m = Eigen::MatrixXd::Zero(2, 2);
  for (auto* b : {&p.b_f, &p.b_i, &p.b_o, &p.b_c}) *b = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd c_prev(2);
  c_prev << 1.0, -2.0;
  const LstmStep s = lstm_cell_forward(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(2), c_prev, p);
  CHECK(s.c(0) == doctest::Approx(0.5));
  CHECK(s.c(1) == doctest::Approx(-1.0));
  CHECK(s.h(0) == doctest::Approx(0.5 * std::tanh(0.5)));
}

TEST_CASE("gru layer matches the single-step cell") {
  GruLayer layer(2, 3);
  randomize(layer, 11);
  const Seq x = random_seq(2, 4, 13);
  Rng rng(0);
  const Seq y = layer.forward(x, false, rng);
  const GRUParams p = layer.cell_params();
  Eigen::VectorXd h = Eigen::VectorXd::Zero(3);
  for (Eigen::Index t = 0; t < 4; ++t) {
    h = gru_cell_forward(x.col(t), h, p);
    CHECK((y.col(t) - h).norm() < 1e-12);
  }
}

TEST_CASE("gru with update gate saturated at zero keeps its state") {
  GRUParams p;
  p.W_z = Eigen::MatrixXd::Zero(2, 3);
  p.W_r = Eigen::MatrixXd::Random(2, 3);
  p.W_h = Eigen::MatrixXd::Random(2, 3);
  p.b_z = Eigen::VectorXd::Constant(2, -50.0);
  p.b_r = Eigen::VectorXd::Zero(2);
  p.b_h = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd h(2);
  h << 0.3, -0.7;
  const Eigen::VectorXd out = gru_cell_forward(Eigen::VectorXd::Ones(1), h, p);
  CHECK((out - h).norm() < 1e-12);
}

TEST_CASE("conv1d: identity kernel, moving average, and zero padding") {
  Conv1dParams p;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(1, 3);
  k(0, 1) = 1.0;
  p.kernels = {k};
  p.biases = Eigen::VectorXd::Zero(1);
  Seq x(1, 5);
  x << 1, 2, 3, 4, 5;
  CHECK((conv1d_forward(x, p) - x).norm() < 1e-15);

  p.kernels[0] = Eigen::MatrixXd::Constant(1, 3, 1.0 / 3.0);
  const Seq y = conv1d_forward(x, p);
  CHECK(y(0, 0) == doctest::Approx(1.0));  // (0 + 1 + 2) / 3
  CHECK(y(0, 2) == doctest::Approx(3.0));
  CHECK(y(0, 4) == doctest::Approx(3.0));  // (4 + 5 + 0) / 3
  CHECK(y.cols() == x.cols());
}

TEST_CASE("conv1d layer agrees with the direct correlation") {
  Conv1dLayer layer(2, 3, 5, Activation::Relu);
  randomize(layer, 17);
  const Seq x = random_seq(2, 9, 19);
  Rng rng(0);
  const Seq y = layer.forward(x, false, rng);
  CHECK((y - conv1d_forward(x, layer.conv_params())).norm() < 1e-12);
}

TEST_CASE("finite-difference gradients: lstm d=2 h=3 T=4") {
  LstmLayer layer(2, 3);
  randomize(layer, 23);
  check_layer_gradients(layer, random_seq(2, 4, 29));
}

TEST_CASE("finite-difference gradients: gru d=2 h=3 T=4") {
  GruLayer layer(2, 3);
  randomize(layer, 31);
  check_layer_gradients(layer, random_seq(2, 4, 37));
}

TEST_CASE("finite-difference gradients: conv1d and dense") {
  Conv1dLayer conv(2, 3, 3, Activation::Tanh);
  randomize(conv, 41);
  check_layer_gradients(conv, random_seq(2, 6, 43));
  DenseLayer dense(3, 2, Activation::Tanh);
  randomize(dense, 47);
  check_layer_gradients(dense, random_seq(3, 4, 53));
}

TEST_CASE("finite-difference gradients through the whole network") {
  for (CellKind kind : {CellKind::Lstm, CellKind::Gru, CellKind::Conv}) {
    NetworkConfig cfg;
    cfg.cell = kind;
    cfg.units = 3;
    cfg.dense_width = 4;
    cfg.conv_width = 3;
    cfg.dropout = 0.0;
    cfg.dense_activation = Activation::Tanh;
    Network net(cfg, 2, 1);
    std::vector<Sample> batch{{random_seq(2, 5, 61), random_seq(1, 5, 67), 0},
                              {random_seq(2, 5, 71), random_seq(1, 5, 73), 0}};
    auto [loss, grads] = network_backward(net, batch, false);
    auto loss_of = [&] {
      double l = 0;
      for (const auto& s : batch) l += mse_loss(net.forward(s.input, false, 0), s.target) / 2.0;
      return l;
    };
    CHECK(loss == doctest::Approx(loss_of()).epsilon(1e-12));
    auto ps = net.params();
    for (std::size_t k = 0; k < ps.size(); ++k) {
      for (Eigen::Index i = 0; i < ps[k]->value.size(); i += 3) {
        double& w = ps[k]->value.data()[i];
        const double saved = w;
        w = saved + 1e-6;
        const double lp = loss_of();
        w = saved - 1e-6;
        const double lm = loss_of();
        w = saved;
        INFO(to_string(kind) << " tensor " << k << " entry " << i);
        CHECK(std::abs((lp - lm) / 2e-6 - grads[k].data()[i]) < 1e-6);
      }
    }
  }
}

TEST_CASE("dropout: identity at inference and rate 0, inverted scaling in training") {
  const Seq x = Seq::Ones(50, 400);
  CHECK(dropout_forward(x, 0.3, false, 1) == x);
  CHECK(dropout_forward(x, 0.0, true, 1) == x);
  const Seq y = dropout_forward(x, 0.3, true, 1);
  const double kept = (y.array() > 0.0).cast<double>().mean();
  CHECK(kept == doctest::Approx(0.7).epsilon(0.02));
  CHECK(y.mean() == doctest::Approx(1.0).epsilon(0.03));
  CHECK(((y.array() == 0.0) || (y.array() - 1.0 / 0.7).abs() < 1e-12).all());
  CHECK(dropout_forward(x, 0.3, true, 1) == y);
  CHECK_THROWS_AS(dropout_forward(x, 1.0, true, 1), Error);
  CHECK_THROWS_AS(dropout_forward(x, -0.1, true, 1), Error);
}

TEST_CASE("network: equal dropout seeds replay equal outputs") {
  NetworkConfig cfg;
  cfg.units = 4;
  cfg.dense_width = 5;
  Network net(cfg, 3, 1);
  const Seq x = random_seq(3, 10, 3);
  CHECK(net.forward(x, true, 7) == net.forward(x, true, 7));
  CHECK(net.forward(x, true, 7) != net.forward(x, true, 8));
  CHECK(net.forward(x, false, 7) == net.forward(x, false, 8));
}

TEST_CASE("network: conv variant has no dropout layer") {
  NetworkConfig cfg;
  cfg.cell = CellKind::Conv;
  Network net(cfg, 3, 1);
  for (const auto& l : net.layers()) CHECK(l->kind() != "dropout");
  CHECK(net.layers().size() == 6);
}

TEST_CASE("glorot init bounds and zero biases") {
  NetworkConfig cfg;
  Network net(cfg, 3, 1);
  for (Tensor* t : net.params()) {
    if (t->shape.size() == 1) {
      CHECK(t->value.isZero());
    } else {
      const double limit = std::sqrt(6.0 / static_cast<double>(t->shape[0] + t->shape[1]));
      CHECK(t->value.cwiseAbs().maxCoeff() <= limit);
      CHECK(t->value.cwiseAbs().maxCoeff() > 0.5 * limit);
    }
  }
}

TEST_CASE("adam: first step matches hand arithmetic") {
  Eigen::MatrixXd w(1, 2);
  w << 1.0, -1.0;
  Eigen::MatrixXd g(1, 2);
  g << 0.5, -2.0;
  AdamMoments mom;
  AdamHyper hyper;
  hyper.lr = 0.1;
  adam_step({&w}, {g}, mom, hyper, 1);
  // bias-corrected m/sqrt(v) = sign(g) on the first step
  CHECK(w(0, 0) == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)));
  CHECK(w(0, 1) == doctest::Approx(-1.0 + 0.1 * 2.0 / (2.0 + 1e-8)));
  // second step with the same gradient: m = g(1-b1)(1+b1), v = g^2(1-b2)(1+b2)
  adam_step({&w}, {g}, mom, hyper, 2);
  const double mhat = 0.5 * (0.1 * 1.9) / (1 - 0.81);
  const double vhat = 0.25 * (0.001 * 1.999) / (1 - 0.998001);
  CHECK(w(0, 0) == doctest::Approx(1.0 - 0.1 - 0.1 * mhat / (std::sqrt(vhat) + 1e-8)));
  CHECK_THROWS_AS(adam_step({&w}, {g}, mom, hyper, 0), Error);
}

TEST_CASE("normalizer round trip") {
  std::vector<Seq> seqs{random_seq(2, 30, 1) * 5.0, random_seq(2, 20, 2) * 5.0};
  seqs[0].array() += 3.0;
  const Normalizer n = Normalizer::fit(seqs);
  const Seq z = n.apply(seqs[0]);
  CHECK((n.invert(z) - seqs[0]).norm() < 1e-10);
  Seq all(2, 50);
  all << n.apply(seqs[0]), n.apply(seqs[1]);
  CHECK(all.rowwise().mean().norm() < 1e-12);
  const Normalizer c = Normalizer::fit({Seq::Constant(1, 5, 2.0)});
  CHECK(c.apply(Seq::Constant(1, 5, 2.0)).isZero());
}

TEST_CASE("model file round trip and corruption") {
  TrainedModel m;
  m.config.units = 4;
  m.config.dense_width = 6;
  m.config.cell = CellKind::Gru;
  m.input_dofs = {2, 4, 5};
  m.output_dofs = {5};
  m.input_norm.mean = Eigen::Vector3d(1, 2, 3);
  m.input_norm.stddev = Eigen::Vector3d(4, 5, 6);
  m.output_norm.mean = Eigen::VectorXd::Constant(1, 0.5);
  m.output_norm.stddev = Eigen::VectorXd::Constant(1, 2.0);
  m.net = std::make_unique<Network>(m.config, 3, 1);
  const auto path = (std::filesystem::temp_directory_path() / "loadid_test_model.bin").string();
  save_model(m, path);
  TrainedModel r = load_model(path);
  CHECK(r.input_dofs == m.input_dofs);
  CHECK(r.output_dofs == m.output_dofs);
  const Seq x = random_seq(3, 12, 5);
  CHECK(predict_load(r, x) == predict_load(m, x));

  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
  CHECK_THROWS_AS(load_model(path), Error);
  {
    std::FILE* f = std::fopen(path.c_str(), "r+b");
    std::fputc('X', f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_model(path), Error);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_model(path), Error);
}

TEST_CASE("config validation") {
  NetworkConfig cfg;
  cfg.dropout = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.units = 0;
  CHECK_THROWS_AS(Network(cfg, 3, 1), Error);
  CHECK_THROWS_AS(cell_kind_from_string("rnn"), Error);
}

TEST_CASE("shape mismatch is rejected") {
  NetworkConfig cfg;
  Network net(cfg, 3, 1);
  CHECK_THROWS_AS(net.forward(Seq::Zero(2, 5), false, 0), Error);
}

TEST_CASE("zero parameters give zero cell outputs") {
  LSTMParams p;
  for (auto* m : {&p.W_f, &p.W_i, &p.W_o, &p.W_c}) *m = Eigen::MatrixXd::Zero(3, 2);
  for (auto* m : {&p.U_f, &p.U_i, &p.U_o, &p.U_c}) *m = Eigen::MatrixXd::Zero(3, 3);
  for (auto* b : {&p.b_f, &p.b_i, &p.b_o, &p.b_c}) *b = Eigen::VectorXd::Zero(3);
  const LstmStep s = lstm_cell_forward(Eigen::Vector2d(4.0, -1.0), Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3), p);
  CHECK(s.h.isZero(0.0));
  CHECK(s.c.isZero(0.0));

  GRUParams g;
  for (auto* m : {&g.W_z, &g.W_r, &g.W_h}) *m = Eigen::MatrixXd::Zero(3, 5);
  for (auto* b : {&g.b_z, &g.b_r, &g.b_h}) *b = Eigen::VectorXd::Zero(3);
  const Eigen::Vector3d h_prev(0.4, -1.0, 2.0);
  CHECK((gru_cell_forward(Eigen::Vector2d(1.0, 1.0), h_prev, g) - 0.5 * h_prev).norm() < 1e-15);
  CHECK(gru_cell_forward(Eigen::Vector2d(1.0, 1.0), Eigen::VectorXd::Zero(3), g).isZero(0.0));
}

TEST_CASE("conv1d difference kernel on a ramp") {
  Conv1dParams p;
  Eigen::MatrixXd k(1, 2);
  k << 1.0, -1.0;
  p.kernels = {k};
  p.biases = Eigen::VectorXd::Zero(1);
  Seq x(1, 4);
  x << 0, 1, 2, 3;
  const Seq y = conv1d_forward(x, p);
  REQUIRE(y.cols() == 4);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(y(0, i) == -1.0);
}

TEST_CASE("dense layer examples") {
  const Seq x = random_seq(3, 4, 2);
  CHECK(dense_forward(x, Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3), Activation::Identity) == x);
  Seq v(2, 1);
  v << -1.0, 2.0;
  const Seq r = dense_forward(v, Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), Activation::Relu);
  CHECK(r(0, 0) == 0.0);
  CHECK(r(1, 0) == 2.0);
  const Eigen::MatrixXd W = random_seq(2, 3, 4);
  const Eigen::VectorXd b = random_seq(2, 1, 5);
  const Seq y = dense_forward(x, W, b, Activation::Tanh);
  for (Eigen::Index t = 0; t < 4; ++t) {
    for (Eigen::Index o = 0; o < 2; ++o) {
      double acc = b(o);
      for (Eigen::Index c = 0; c < 3; ++c) acc += W(o, c) * x(c, t);
      CHECK(y(o, t) == doctest::Approx(std::tanh(acc)).epsilon(1e-14));
    }
  }
}

TEST_CASE("mse loss examples") {
  Seq pred(1, 2), zero = Seq::Zero(1, 2);
  pred << 1.0, 2.0;
  CHECK(mse_loss(pred, zero) == 2.5);
  CHECK(mse_loss(pred, pred) == 0.0);
  CHECK_THROWS_AS(mse_loss(Seq(1, 0), Seq(1, 0)), Error);
  CHECK_THROWS_AS(mse_loss(pred, Seq::Zero(1, 3)), Error);
}

TEST_CASE("dropout statistics on 1e5 elements") {
  const Seq x = random_seq(1, 100000, 8).array().abs() + 0.5;
  const Seq y = dropout_forward(x, 0.3, true, 42);
  const double zero_frac = (y.array() == 0.0).cast<double>().mean();
  CHECK(zero_frac >= 0.29);
  CHECK(zero_frac <= 0.31);
  CHECK(std::abs(y.mean() / x.mean() - 1.0) < 0.01);
  CHECK(dropout_forward(x, 0.7, false, 3) == x);
}

TEST_CASE("zero-parameter network outputs zeros, including a single step") {
  for (CellKind kind : {CellKind::Lstm, CellKind::Gru, CellKind::Conv}) {
    NetworkConfig cfg;
    cfg.cell = kind;
    cfg.units = 4;
    cfg.dense_width = 5;
    Network net(cfg, 3, 2);
    for (Tensor* t : net.params()) t->value.setZero();
    CHECK(net.forward(random_seq(3, 7, 1), false, 0).isZero(0.0));
    net.initialize(9);
    const Seq one = net.forward(random_seq(3, 1, 2), false, 0);
    CHECK(one.rows() == 2);
    CHECK(one.cols() == 1);
    CHECK(net.forward(random_seq(3, 1, 2), false, 5) == one);
  }
}

TEST_CASE("adam leaves parameters alone under zero gradient") {
  Eigen::MatrixXd w = random_seq(2, 3, 3);
  const Eigen::MatrixXd saved = w;
  AdamMoments mom;
  for (long t = 1; t <= 5; ++t) adam_step({&w}, {Eigen::MatrixXd::Zero(2, 3)}, mom, AdamHyper{}, t);
  CHECK(w == saved);
}

// Reverse-mode gradients of the recurrent layers against finite differences
// of a step-by-step unrolled forward built from the single-step cells.
TEST_CASE("bptt equals the gradient of the unrolled cells") {
  const Seq x = random_seq(2, 4, 81);
  const Seq G = random_seq(3, 4, 83);
  auto check = [&](Layer& layer, const std::function<double()>& unrolled) {
    Rng rng(0);
    for (Tensor* t : layer.params()) t->grad.setZero();
    layer.forward(x, false, rng);
    layer.backward(G);
    for (Tensor* t : layer.params()) {
      for (Eigen::Index i = 0; i < t->value.size(); ++i) {
        double& w = t->value.data()[i];
        const double saved = w;
        w = saved + 1e-6;
        const double lp = unrolled();
        w = saved - 1e-6;
        const double lm = unrolled();
        w = saved;
        INFO(layer.kind() << " " << t->name << " entry " << i);
        CHECK(std::abs((lp - lm) / 2e-6 - t->grad.data()[i]) < 1e-7 * std::max(1.0, std::abs(t->grad.data()[i])));
      }
    }
  };
  LstmLayer lstm(2, 3);
  randomize(lstm, 85);
  check(lstm, [&] {
    const LSTMParams p = lstm.cell_params();
    Eigen::VectorXd h = Eigen::VectorXd::Zero(3), c = Eigen::VectorXd::Zero(3);
    double loss = 0.0;
    for (Eigen::Index t = 0; t < 4; ++t) {
      const LstmStep s = lstm_cell_forward(x.col(t), h, c, p);
      h = s.h;
      c = s.c;
      loss += G.col(t).dot(h);
    }
    return loss;
  });
  GruLayer gru(2, 3);
  randomize(gru, 87);
  check(gru, [&] {
    const GRUParams p = gru.cell_params();
    Eigen::VectorXd h = Eigen::VectorXd::Zero(3);
    double loss = 0.0;
    for (Eigen::Index t = 0; t < 4; ++t) {
      h = gru_cell_forward(x.col(t), h, p);
      loss += G.col(t).dot(h);
    }
    return loss;
  });
}

TEST_CASE("conv stack is translation covariant away from the edges") {
  NetworkConfig cfg;
  cfg.cell = CellKind::Conv;
  cfg.units = 4;
  cfg.dense_width = 6;
  Network net(cfg, 2, 1);
  const Eigen::Index T = 80, s = 5, margin = 2 * (cfg.conv_width / 2);
  Seq x = Seq::Zero(2, T), shifted = Seq::Zero(2, T);
  x.block(0, 30, 2, 10) = random_seq(2, 10, 91);
  shifted.block(0, 30 + s, 2, 10) = x.block(0, 30, 2, 10);
  const Seq y = net.forward(x, false, 0);
  const Seq ys = net.forward(shifted, false, 0);
  for (Eigen::Index i = margin; i + s < T - margin; ++i) {
    CHECK(std::abs(ys(0, i + s) - y(0, i)) < 1e-12);
  }
}

TEST_CASE("network gradients vanish at a perfect fit") {
  NetworkConfig cfg;
  cfg.units = 3;
  cfg.dense_width = 4;
  Network net(cfg, 2, 1);
  const Seq x = random_seq(2, 6, 93);
  const Seq target = net.forward(x, false, 0);
  auto [loss, grads] = network_backward(net, {{x, target, 0}}, false);
  CHECK(loss == 0.0);
  for (const auto& g : grads) CHECK(g.isZero(0.0));
}

TEST_CASE("dropout off and dropout rate zero give identical gradients") {
  NetworkConfig with;
  with.units = 3;
  with.dense_width = 4;
  with.dropout = 0.3;
  NetworkConfig without = with;
  without.dropout = 0.0;
  Network a(with, 2, 1), b(without, 2, 1);
  a.initialize(5);
  b.initialize(5);
  const std::vector<Sample> batch{{random_seq(2, 6, 95), random_seq(1, 6, 97), 11}};
  const auto ga = network_backward(a, batch, false);
  const auto gb = network_backward(b, batch, true);
  CHECK(ga.first == gb.first);
  REQUIRE(ga.second.size() == gb.second.size());
  for (std::size_t k = 0; k < ga.second.size(); ++k) CHECK(ga.second[k] == gb.second[k]);
}

TEST_CASE("training is deterministic and zero epochs keeps the initial weights") {
  ScenarioConfig sc;
  sc.duration = 1.0;
  sc.dt = 0.02;
  sc.onset = {0.0, 0.2};
  const Dataset ds = build_dataset(sc, 4, {2, 1, 1}, 3);
  NetworkConfig cfg;
  cfg.units = 3;
  cfg.layer_pairs = 1;
  cfg.dense_width = 4;
  cfg.max_epochs = 4;
  cfg.seed = 21;
  auto [m1, r1] = train(cfg, ds, {5});
  auto [m2, r2] = train(cfg, ds, {5});
  CHECK(r1.train_loss == r2.train_loss);
  CHECK(r1.val_loss == r2.val_loss);
  CHECK(r1.train_loss.size() == static_cast<std::size_t>(r1.stopped_epoch));
  const auto s1 = m1.net->snapshot(), s2 = m2.net->snapshot();
  for (std::size_t k = 0; k < s1.size(); ++k) CHECK(s1[k] == s2[k]);
  const Seq in = sequence_input(ds.sequences[0]);
  CHECK(predict_load(m1, in) == predict_load(m2, in));
  CHECK(predict_load(m1, in) == predict_load(m1, in));

  cfg.max_epochs = 0;
  auto [m0, r0] = train(cfg, ds, {5});
  CHECK(r0.train_loss.empty());
  CHECK(r0.val_loss.empty());
  CHECK(r0.stopped_epoch == 0);
  Network fresh(cfg, 3, 1);
  const auto s0 = m0.net->snapshot(), sf = fresh.snapshot();
  for (std::size_t k = 0; k < s0.size(); ++k) CHECK(s0[k] == sf[k]);
}

TEST_CASE("zero input on a zero-bias network is zero before de-normalization") {
  NetworkConfig cfg;
  cfg.units = 3;
  cfg.dense_width = 4;
  Network net(cfg, 2, 1);
  CHECK(net.forward(Seq::Zero(2, 5), false, 0).isZero(0.0));
}
