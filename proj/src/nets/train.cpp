#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "loadid/error.hpp"
#include "loadid/nets.hpp"

namespace loadid::nets {

Normalizer Normalizer::fit(const std::vector<Seq>& seqs) {
  if (seqs.empty()) throw Error(ErrorKind::InvalidLength, "cannot fit a normalizer on no sequences");
  const Eigen::Index ch = seqs.front().rows();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(ch), sq = Eigen::VectorXd::Zero(ch);
  double count = 0.0;
  for (const Seq& s : seqs) {
    if (s.rows() != ch) throw Error(ErrorKind::Shape, "normalizer: channel count differs between sequences");
    sum += s.rowwise().sum();
    count += static_cast<double>(s.cols());
  }
  if (count == 0.0) throw Error(ErrorKind::InvalidLength, "cannot fit a normalizer on empty sequences");
  Normalizer n;
  n.mean = sum / count;
  for (const Seq& s : seqs) sq += (s.colwise() - n.mean).rowwise().squaredNorm();
  n.stddev = (sq / count).cwiseSqrt();
  // A constant channel normalizes to zero rather than dividing by zero.
  for (Eigen::Index i = 0; i < ch; ++i) {
    if (!(n.stddev(i) > 0.0)) n.stddev(i) = 1.0;
  }
  return n;
}

Seq Normalizer::apply(const Seq& x) const {
  if (x.rows() != mean.size()) throw Error(ErrorKind::Shape, "normalizer channel mismatch");
  return (x.colwise() - mean).array().colwise() / stddev.array();
}

Seq Normalizer::invert(const Seq& x) const {
  if (x.rows() != mean.size()) throw Error(ErrorKind::Shape, "normalizer channel mismatch");
  return (x.array().colwise() * stddev.array()).matrix().colwise() + mean;
}

Seq sequence_input(const Sequence& s) { return s.measurements.noisy_accel.transpose(); }

Seq sequence_target(const Sequence& s, const std::vector<std::size_t>& dofs) {
  const auto& F = s.load.forces;
  Seq y(static_cast<Eigen::Index>(dofs.size()), F.rows());
  for (std::size_t j = 0; j < dofs.size(); ++j) {
    const auto d = static_cast<Eigen::Index>(dofs[j]);
    if (d >= F.cols()) throw Error(ErrorKind::InvalidDof, "target DOF " + std::to_string(dofs[j] + 1) + " out of range");
    y.row(static_cast<Eigen::Index>(j)) = F.col(d).transpose();
  }
  return y;
}

namespace {

double inference_loss(Network& net, const std::vector<Sample>& set) {
  double total = 0.0;
  for (const Sample& s : set) total += mse_loss(net.forward(s.input, false, 0), s.target);
  return total / static_cast<double>(set.size());
}

}  // namespace

std::pair<TrainedModel, TrainReport> train(const NetworkConfig& config, const Dataset& dataset,
                                           const std::vector<std::size_t>& target_dofs) {
  config.validate();
  if (dataset.split.train.empty()) throw Error(ErrorKind::InvalidLength, "training split is empty");
  if (target_dofs.empty()) throw Error(ErrorKind::InvalidDof, "no target DOFs");
  const auto start = std::chrono::steady_clock::now();

  auto pick = [&](std::size_t idx) -> const Sequence& {
    if (idx >= dataset.sequences.size()) throw Error(ErrorKind::InvalidLength, "split index out of range");
    return dataset.sequences[idx];
  };

  std::vector<Seq> train_in, train_out;
  for (std::size_t idx : dataset.split.train) {
    train_in.push_back(sequence_input(pick(idx)));
    train_out.push_back(sequence_target(pick(idx), target_dofs));
  }

  TrainedModel model;
  model.config = config;
  model.input_dofs = pick(dataset.split.train.front()).measurements.measured_dofs;
  model.output_dofs = target_dofs;
  model.input_norm = Normalizer::fit(train_in);
  model.output_norm = Normalizer::fit(train_out);
  model.net = std::make_unique<Network>(config, train_in.front().rows(), train_out.front().rows());
  Network& net = *model.net;

  std::vector<Sample> train_set, val_set;
  for (std::size_t i = 0; i < train_in.size(); ++i) {
    train_set.push_back({model.input_norm.apply(train_in[i]), model.output_norm.apply(train_out[i]), 0});
  }
  for (std::size_t idx : dataset.split.val) {
    const Sequence& s = pick(idx);
    if (s.measurements.measured_dofs != model.input_dofs) {
      throw Error(ErrorKind::Shape, "validation sequence uses different measured DOFs");
    }
    val_set.push_back({model.input_norm.apply(sequence_input(s)),
                       model.output_norm.apply(sequence_target(s, target_dofs)), 0});
  }
  const std::vector<Sample>& monitor = val_set.empty() ? train_set : val_set;

  TrainReport report;
  report.initial_train_loss = inference_loss(net, train_set);
  // The initial weights count as epoch 0 so that a run which never improves
  // (or has no epochs at all) restores them.
  report.best_val_loss = inference_loss(net, monitor);
  report.best_epoch = 0;
  std::vector<Eigen::MatrixXd> best = net.snapshot();

  AdamHyper hyper;
  hyper.lr = config.learning_rate;
  AdamMoments moments;
  long step = 0;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Rng shuffle_rng = make_rng(config.seed, "batch", static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      std::vector<Sample> batch;
      for (std::size_t k = b; k < std::min(order.size(), b + config.batch_size); ++k) {
        Sample s = train_set[order[k]];
        s.dropout_seed = substream_seed(config.seed, "dropout",
                                        static_cast<std::uint64_t>(epoch) * 1000003ULL + order[k]);
        batch.push_back(std::move(s));
      }
      auto [loss, grads] = network_backward(net, batch, true);
      if (!std::isfinite(loss)) {
        throw Error(ErrorKind::TrainingDivergence, "training loss became non-finite at epoch " + std::to_string(epoch));
      }
      std::vector<Eigen::MatrixXd*> values;
      for (Tensor* t : net.params()) values.push_back(&t->value);
      adam_step(values, grads, moments, hyper, ++step);
      epoch_loss += loss;
      ++batches;
    }
    const double val = inference_loss(net, monitor);
    if (!std::isfinite(val)) {
      throw Error(ErrorKind::TrainingDivergence, "validation loss became non-finite at epoch " + std::to_string(epoch));
    }
    report.train_loss.push_back(epoch_loss / static_cast<double>(batches));
    report.val_loss.push_back(val);
    report.stopped_epoch = epoch;
    if (val < report.best_val_loss) {
      report.best_val_loss = val;
      report.best_epoch = epoch;
      best = net.snapshot();
    } else if (epoch - report.best_epoch >= config.patience) {
      break;
    }
  }
  net.restore(best);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(model), std::move(report)};
}

Seq predict_load(TrainedModel& model, const Seq& input) {
  if (!model.net) throw Error(ErrorKind::Config, "model has no network");
  if (input.rows() != model.net->inputs()) {
    throw Error(ErrorKind::Shape, "input has " + std::to_string(input.rows()) + " channels, model expects " +
                                      std::to_string(model.net->inputs()));
  }
  return model.output_norm.invert(model.net->forward(model.input_norm.apply(input), false, 0));
}

std::string loss_curve_csv(const TrainReport& report) {
  std::ostringstream os;
  os << std::setprecision(10) << "epoch,train_loss,val_loss\n";
  for (std::size_t i = 0; i < report.train_loss.size(); ++i) {
    os << (i + 1) << ',' << report.train_loss[i] << ',' << report.val_loss[i] << '\n';
  }
  return os.str();
}

}  // namespace loadid::nets
