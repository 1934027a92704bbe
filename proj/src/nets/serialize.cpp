#include <cstring>
#include <fstream>

#include "json.hpp"
#include "loadid/error.hpp"
#include "loadid/nets.hpp"

namespace loadid::nets {

namespace {

constexpr char kMagic[8] = {'L', 'O', 'A', 'D', 'I', 'D', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;

using nlohmann::json;

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json config_json(const NetworkConfig& c) {
  return {{"cell", to_string(c.cell)},
          {"units", c.units},
          {"layer_pairs", c.layer_pairs},
          {"dropout", c.effective_dropout()},
          {"dense_width", c.dense_width},
          {"dense_activation", to_string(c.dense_activation)},
          {"conv_width", c.conv_width},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"seed", c.seed}};
}

NetworkConfig json_config(const json& j) {
  NetworkConfig c;
  c.cell = cell_kind_from_string(j.at("cell").get<std::string>());
  c.units = j.at("units").get<Eigen::Index>();
  c.layer_pairs = j.at("layer_pairs").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.dense_width = j.at("dense_width").get<Eigen::Index>();
  c.dense_activation = activation_from_string(j.at("dense_activation").get<std::string>());
  c.conv_width = j.at("conv_width").get<Eigen::Index>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.patience = j.at("patience").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

// Row-major over the logical shape. Conv kernels are (out, in, width),
// which is exactly the row-major order of the out x (in*width) matrix.
void write_tensor(std::ostream& os, const Tensor& t) {
  for (Eigen::Index r = 0; r < t.value.rows(); ++r) {
    for (Eigen::Index c = 0; c < t.value.cols(); ++c) {
      const double v = t.value(r, c);
      os.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  }
}

void read_tensor(std::istream& is, Tensor& t) {
  for (Eigen::Index r = 0; r < t.value.rows(); ++r) {
    for (Eigen::Index c = 0; c < t.value.cols(); ++c) {
      double v = 0.0;
      is.read(reinterpret_cast<char*>(&v), sizeof v);
      t.value(r, c) = v;
    }
  }
}

std::vector<std::size_t> dofs_in(const json& j) {
  std::vector<std::size_t> out;
  for (const auto& d : j) {
    const auto one = d.get<long long>();
    if (one < 1) throw Error(ErrorKind::InvalidDof, "model file lists DOF " + std::to_string(one) + " (DOFs are 1-based)");
    out.push_back(static_cast<std::size_t>(one - 1));
  }
  return out;
}

json dofs_out(const std::vector<std::size_t>& dofs) {
  json j = json::array();
  for (auto d : dofs) j.push_back(d + 1);
  return j;
}

}  // namespace

void save_model(const TrainedModel& model, const std::string& path) {
  if (!model.net) throw Error(ErrorKind::Config, "model has no network");
  Network& net = *model.net;
  json header;
  header["format"] = "loadid-network";
  header["config"] = config_json(model.config);
  header["inputs"] = net.inputs();
  header["outputs"] = net.outputs();
  header["input_dofs"] = dofs_out(model.input_dofs);
  header["output_dofs"] = dofs_out(model.output_dofs);
  header["input_norm"] = {{"mean", vec_json(model.input_norm.mean)}, {"std", vec_json(model.input_norm.stddev)}};
  header["output_norm"] = {{"mean", vec_json(model.output_norm.mean)}, {"std", vec_json(model.output_norm.stddev)}};
  json tensors = json::array();
  for (const Tensor* t : net.params()) tensors.push_back({{"name", t->name}, {"shape", t->shape}});
  header["tensors"] = tensors;
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
  os.write(kMagic, sizeof kMagic);
  const std::uint32_t version = kVersion;
  const std::uint64_t len = text.size();
  os.write(reinterpret_cast<const char*>(&version), sizeof version);
  os.write(reinterpret_cast<const char*>(&len), sizeof len);
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const Tensor* t : net.params()) write_tensor(os, *t);
  if (!os) throw Error(ErrorKind::Io, "write to '" + path + "' failed");
}

TrainedModel load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::Io, "cannot open model file '" + path + "'");
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorKind::Io, "'" + path + "' is not a loadid network file");
  }
  std::uint32_t version = 0;
  std::uint64_t len = 0;
  is.read(reinterpret_cast<char*>(&version), sizeof version);
  is.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!is) throw Error(ErrorKind::Io, "truncated model header in '" + path + "'");
  if (version != kVersion) {
    throw Error(ErrorKind::Io, "unsupported model file version " + std::to_string(version));
  }
  if (len > (1ULL << 30)) throw Error(ErrorKind::Io, "implausible model header length");
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  if (!is) throw Error(ErrorKind::Io, "truncated model header in '" + path + "'");

  TrainedModel model;
  try {
    const json header = json::parse(text);
    model.config = json_config(header.at("config"));
    model.input_dofs = dofs_in(header.at("input_dofs"));
    model.output_dofs = dofs_in(header.at("output_dofs"));
    model.input_norm.mean = json_vec(header.at("input_norm").at("mean"));
    model.input_norm.stddev = json_vec(header.at("input_norm").at("std"));
    model.output_norm.mean = json_vec(header.at("output_norm").at("mean"));
    model.output_norm.stddev = json_vec(header.at("output_norm").at("std"));
    model.net = std::make_unique<Network>(model.config, header.at("inputs").get<Eigen::Index>(),
                                          header.at("outputs").get<Eigen::Index>());
    const auto& tensors = header.at("tensors");
    auto params = model.net->params();
    if (tensors.size() != params.size()) throw Error(ErrorKind::Io, "model file tensor count does not match its config");
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto shape = tensors[i].at("shape").get<std::vector<Eigen::Index>>();
      if (tensors[i].at("name").get<std::string>() != params[i]->name || shape != params[i]->shape) {
        throw Error(ErrorKind::Io, "model file tensor " + std::to_string(i) + " does not match its config");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, std::string("malformed model header: ") + e.what());
  }
  for (Tensor* t : model.net->params()) read_tensor(is, *t);
  if (!is) throw Error(ErrorKind::Io, "truncated tensor data in '" + path + "'");
  return model;
}

}  // namespace loadid::nets
