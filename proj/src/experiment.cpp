#include "loadid/experiment.hpp"

#include <cmath>
#include <limits>

#include "json.hpp"
#include "loadid/error.hpp"

namespace loadid {

namespace detail {
const std::string& schema_text();
const std::string& desk_text();
const std::string& paper_text();
}  // namespace detail

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// A validator for the subset of JSON Schema the published schema uses:
// type, enum, properties, additionalProperties, required, items, minItems,
// maxItems, minLength, minimum, maximum, exclusiveMinimum, exclusiveMaximum,
// anyOf and local $ref.

class SchemaValidator {
 public:
  explicit SchemaValidator(const json& root) : root_(root) {}

  void check(const json& value, const json& schema, const std::string& path) const {
    const json& s = resolve(schema);
    if (s.contains("anyOf")) {
      for (const auto& alt : s.at("anyOf")) {
        try {
          check(value, alt, path);
          return;
        } catch (const Error&) {
        }
      }
      fail(path, "matches none of the allowed forms");
    }
    if (s.contains("type")) check_type(value, s.at("type"), path);
    if (s.contains("enum")) {
      bool found = false;
      for (const auto& e : s.at("enum")) found = found || e == value;
      if (!found) fail(path, "must be one of " + s.at("enum").dump());
    }
    if (value.is_number()) check_number(value.get<double>(), s, path);
    if (value.is_string() && s.contains("minLength") &&
        value.get<std::string>().size() < s.at("minLength").get<std::size_t>()) {
      fail(path, "must not be empty");
    }
    if (value.is_array()) {
      if (s.contains("minItems") && value.size() < s.at("minItems").get<std::size_t>()) {
        fail(path, "needs at least " + s.at("minItems").dump() + " items");
      }
      if (s.contains("maxItems") && value.size() > s.at("maxItems").get<std::size_t>()) {
        fail(path, "allows at most " + s.at("maxItems").dump() + " items");
      }
      if (s.contains("items")) {
        for (std::size_t i = 0; i < value.size(); ++i) check(value[i], s.at("items"), path + "[" + std::to_string(i) + "]");
      }
    }
    if (value.is_object()) {
      const json empty = json::object();
      const json& props = s.contains("properties") ? s.at("properties") : empty;
      if (s.contains("required")) {
        for (const auto& r : s.at("required")) {
          if (!value.contains(r.get<std::string>())) fail(path, "is missing required key '" + r.get<std::string>() + "'");
        }
      }
      for (const auto& [key, v] : value.items()) {
        const std::string sub = path.empty() ? key : path + "." + key;
        if (props.contains(key)) {
          check(v, props.at(key), sub);
        } else if (s.contains("additionalProperties") && s.at("additionalProperties") == false) {
          fail(sub, "is not a recognized key");
        }
      }
    }
  }

 private:
  const json& root_;

  [[noreturn]] static void fail(const std::string& path, const std::string& what) {
    throw Error(ErrorKind::Config, (path.empty() ? std::string("document") : path) + " " + what);
  }

  const json& resolve(const json& schema) const {
    if (!schema.contains("$ref")) return schema;
    const std::string ref = schema.at("$ref").get<std::string>();
    if (ref.rfind("#/", 0) != 0) throw Error(ErrorKind::Config, "schema: unsupported $ref " + ref);
    return resolve(root_.at(json::json_pointer(ref.substr(1))));
  }

  static bool has_type(const json& v, const std::string& t) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    if (t == "number") return v.is_number();
    if (t == "integer") {
      if (v.is_number_integer()) return true;
      return v.is_number_float() && std::floor(v.get<double>()) == v.get<double>();
    }
    return false;
  }

  static void check_type(const json& v, const json& type, const std::string& path) {
    if (type.is_string()) {
      if (!has_type(v, type.get<std::string>())) fail(path, "must be of type " + type.get<std::string>());
      return;
    }
    for (const auto& t : type) {
      if (has_type(v, t.get<std::string>())) return;
    }
    fail(path, "must be of type " + type.dump());
  }

  static void check_number(double x, const json& s, const std::string& path) {
    if (s.contains("minimum") && x < s.at("minimum").get<double>()) fail(path, "must be >= " + s.at("minimum").dump());
    if (s.contains("maximum") && x > s.at("maximum").get<double>()) fail(path, "must be <= " + s.at("maximum").dump());
    if (s.contains("exclusiveMinimum") && !(x > s.at("exclusiveMinimum").get<double>())) {
      fail(path, "must be > " + s.at("exclusiveMinimum").dump());
    }
    if (s.contains("exclusiveMaximum") && !(x < s.at("exclusiveMaximum").get<double>())) {
      fail(path, "must be < " + s.at("exclusiveMaximum").dump());
    }
  }
};

json parse_document(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
  }
}

const json& schema_json() {
  static const json s = json::parse(detail::schema_text());
  return s;
}

std::vector<std::size_t> zero_based(const json& j) {
  std::vector<std::size_t> out;
  for (const auto& v : j) out.push_back(v.get<std::size_t>() - 1);
  return out;
}

json one_based(const std::vector<std::size_t>& dofs) {
  json j = json::array();
  for (auto d : dofs) j.push_back(d + 1);
  return j;
}

Range range_of(const json& j) { return Range{j[0].get<double>(), j[1].get<double>()}; }

void apply_network(const json& j, nets::NetworkConfig& c) {
  if (j.contains("units")) c.units = j.at("units").get<Eigen::Index>();
  if (j.contains("layer_pairs")) c.layer_pairs = j.at("layer_pairs").get<int>();
  if (j.contains("dropout")) c.dropout = j.at("dropout").get<double>();
  if (j.contains("dense_width")) c.dense_width = j.at("dense_width").get<Eigen::Index>();
  if (j.contains("dense_activation")) c.dense_activation = nets::activation_from_string(j.at("dense_activation"));
  if (j.contains("conv_width")) c.conv_width = j.at("conv_width").get<Eigen::Index>();
  if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<std::size_t>();
  if (j.contains("max_epochs")) c.max_epochs = j.at("max_epochs").get<int>();
  if (j.contains("patience")) c.patience = j.at("patience").get<int>();
}

json network_json(const nets::NetworkConfig& c) {
  return {{"units", c.units},
          {"layer_pairs", c.layer_pairs},
          {"dropout", c.effective_dropout()},
          {"dense_width", c.dense_width},
          {"dense_activation", nets::to_string(c.dense_activation)},
          {"conv_width", c.conv_width},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience}};
}

void layer(const json& doc, ExperimentConfig& cfg) {
  if (doc.contains("scenario")) cfg.scenario.kind = scenario_kind_from_string(doc.at("scenario").get<std::string>());
  if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
  if (doc.contains("out")) cfg.out_dir = doc.at("out").get<std::string>();

  if (doc.contains("building")) {
    const json& b = doc.at("building");
    auto& spec = cfg.scenario.building;
    if (b.contains("masses")) spec.masses = b.at("masses").get<std::vector<double>>();
    if (b.contains("stiffnesses")) spec.stiffnesses = b.at("stiffnesses").get<std::vector<double>>();
    if (b.contains("dampings")) spec.dampings = b.at("dampings").get<std::vector<double>>();
    if (b.contains("n_stories")) {
      const auto n = b.at("n_stories").get<std::size_t>();
      if (spec.masses.size() != n || spec.stiffnesses.size() != n || spec.dampings.size() != n) {
        throw Error(ErrorKind::Config, "building.n_stories = " + std::to_string(n) +
                                           " disagrees with the masses/stiffnesses/dampings lengths");
      }
    }
    if (b.contains("input_dofs")) cfg.input_dofs = zero_based(b.at("input_dofs"));
  }

  if (doc.contains("dataset")) {
    const json& d = doc.at("dataset");
    auto& sc = cfg.scenario;
    if (d.contains("count")) cfg.count = d.at("count").get<std::size_t>();
    if (d.contains("split")) {
      cfg.split.train = d.at("split").at("train").get<std::size_t>();
      cfg.split.val = d.at("split").at("val").get<std::size_t>();
      cfg.split.test = d.at("split").at("test").get<std::size_t>();
    }
    if (d.contains("nsr")) sc.nsr = d.at("nsr").get<double>();
    if (d.contains("noise_sweep")) cfg.noise_sweep = d.at("noise_sweep").get<std::vector<double>>();
    if (d.contains("duration")) sc.duration = d.at("duration").get<double>();
    if (d.contains("dt")) sc.dt = d.at("dt").get<double>();
    if (d.contains("measured_dofs")) sc.measured_dofs = zero_based(d.at("measured_dofs"));
    if (d.contains("load")) {
      const json& l = d.at("load");
      if (l.contains("amplitude")) sc.amplitude = range_of(l.at("amplitude"));
      if (l.contains("omega")) sc.omega = range_of(l.at("omega"));
      if (l.contains("decay")) sc.decay = range_of(l.at("decay"));
      if (l.contains("onset")) sc.onset = range_of(l.at("onset"));
      if (l.contains("intensity")) sc.intensity = range_of(l.at("intensity"));
      if (l.contains("f_lo")) sc.f_lo = l.at("f_lo").get<double>();
      if (l.contains("f_hi")) sc.f_hi = l.at("f_hi").get<double>();
      if (l.contains("envelope")) {
        const json& e = l.at("envelope");
        if (e.contains("rise")) sc.envelope.rise = e.at("rise").get<double>();
        if (e.contains("plateau")) sc.envelope.plateau = e.at("plateau").get<double>();
        if (e.contains("fall")) sc.envelope.fall = e.at("fall").get<double>();
      }
      if (l.contains("peak")) sc.peak = range_of(l.at("peak"));
      if (l.contains("width")) sc.width = range_of(l.at("width"));
      if (l.contains("impact_time")) sc.impact_time = range_of(l.at("impact_time"));
    }
  }

  if (doc.contains("networks")) {
    const json& n = doc.at("networks");
    if (n.contains("common")) {
      for (auto kind : kAllCells) apply_network(n.at("common"), cfg.network(kind));
    }
    for (auto kind : kAllCells) {
      const std::string key = nets::to_string(kind);
      if (n.contains(key)) apply_network(n.at(key), cfg.network(kind));
    }
  }

  if (doc.contains("filter")) {
    const json& f = doc.at("filter");
    auto& fc = cfg.filter;
    if (f.contains("q_scale")) fc.q_scale = f.at("q_scale").get<double>();
    if (f.contains("r_scale")) fc.r_scale = f.at("r_scale").get<double>();
    if (f.contains("lambda2")) fc.lambda2 = f.at("lambda2").get<double>();
    if (f.contains("mu")) {
      fc.mu = f.at("mu").is_string() ? std::numeric_limits<double>::infinity() : f.at("mu").get<double>();
    }
    if (f.contains("theta0")) {
      const auto v = f.at("theta0").get<std::vector<double>>();
      fc.theta0.theta = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    if (f.contains("theta0_offset")) fc.theta0_offset = f.at("theta0_offset").get<double>();
    if (f.contains("p0_scale")) fc.p0_scale = f.at("p0_scale").get<double>();
    if (f.contains("fd_step")) fc.fd_step = f.at("fd_step").get<double>();
    if (f.contains("theta_floor")) fc.theta_floor = f.at("theta_floor").get<double>();
    if (f.contains("detrend_hz")) fc.detrend_hz = f.at("detrend_hz").get<double>();
  }

  if (doc.contains("metric") && doc.at("metric").contains("eps_rel")) {
    cfg.eps_rel = doc.at("metric").at("eps_rel").get<double>();
  }

  // The load acts at the single configured DOF for the point-load scenarios.
  if (cfg.scenario.kind != ScenarioKind::Base && !cfg.input_dofs.empty()) {
    cfg.scenario.load_dof = cfg.input_dofs.front();
  }
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
  lstm.cell = nets::CellKind::Lstm;
  gru.cell = nets::CellKind::Gru;
  conv.cell = nets::CellKind::Conv;
  split = SplitCounts{};
  count = split.total();
  input_dofs = {scenario.load_dof};
}

const nets::NetworkConfig& ExperimentConfig::network(nets::CellKind kind) const {
  switch (kind) {
    case nets::CellKind::Lstm: return lstm;
    case nets::CellKind::Gru: return gru;
    case nets::CellKind::Conv: return conv;
  }
  return lstm;
}

nets::NetworkConfig& ExperimentConfig::network(nets::CellKind kind) {
  return const_cast<nets::NetworkConfig&>(static_cast<const ExperimentConfig&>(*this).network(kind));
}

void ExperimentConfig::validate() const {
  try {
    scenario.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, std::string("scenario: ") + e.what());
  }
  const std::size_t n = scenario.building.n_stories();
  if (input_dofs.empty()) throw Error(ErrorKind::Config, "building.input_dofs must not be empty");
  for (auto d : input_dofs) {
    if (d >= n) throw Error(ErrorKind::Config, "input DOF " + std::to_string(d + 1) + " exceeds n_stories");
  }
  if (scenario.kind != ScenarioKind::Base && input_dofs.size() != 1) {
    throw Error(ErrorKind::Config, "shaker and impact scenarios take exactly one input DOF");
  }
  if (split.total() != count) {
    throw Error(ErrorKind::Config, "split " + std::to_string(split.train) + "/" + std::to_string(split.val) +
                                       "/" + std::to_string(split.test) + " does not sum to count " +
                                       std::to_string(count));
  }
  for (double v : noise_sweep) {
    if (!(v >= 0.0)) throw Error(ErrorKind::Config, "noise_sweep levels must be >= 0");
  }
  for (auto kind : kAllCells) {
    try {
      network(kind).validate();
    } catch (const Error& e) {
      throw Error(ErrorKind::Config, "networks." + nets::to_string(kind) + ": " + e.what());
    }
  }
  try {
    filter_config().validate(n);
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, std::string("filter: ") + e.what());
  }
  if (!(eps_rel > 0.0)) throw Error(ErrorKind::Config, "metric.eps_rel must be > 0");
  if (out_dir.empty()) throw Error(ErrorKind::Config, "out must not be empty");
}

FilterConfig ExperimentConfig::filter_config() const {
  FilterConfig f = filter;
  const std::size_t n = scenario.building.n_stories();
  std::vector<std::size_t> unknown = input_dofs;
  if (scenario.kind == ScenarioKind::Base) {
    unknown.clear();
    for (std::size_t d = 0; d < n; ++d) unknown.push_back(d);
  }
  f.known_inputs = FilterConfig::all_known_except(n, unknown);
  f.known_values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  return f;
}

std::vector<double> ExperimentConfig::noise_levels() const {
  return noise_sweep.empty() ? std::vector<double>{scenario.nsr} : noise_sweep;
}

const std::string& config_schema() { return detail::schema_text(); }

const std::string& preset_document(const std::string& name) {
  if (name == "desk") return detail::desk_text();
  if (name == "paper") return detail::paper_text();
  throw Error(ErrorKind::Config, "unknown preset '" + name + "' (expected desk|paper)");
}

void validate_schema(const std::string& document) {
  SchemaValidator(schema_json()).check(parse_document(document), schema_json(), "");
}

namespace {

ExperimentConfig apply_document(const json& doc, const ExperimentConfig& base, bool follow_preset) {
  SchemaValidator(schema_json()).check(doc, schema_json(), "");
  ExperimentConfig cfg = base;
  if (doc.contains("preset")) {
    const std::string name = doc.at("preset").get<std::string>();
    // Preset documents carry their own name; they are applied, never followed.
    if (follow_preset) cfg = apply_document(parse_document(preset_document(name)), base, false);
    cfg.preset = name;
  }
  layer(doc, cfg);
  cfg.validate();
  return cfg;
}

}  // namespace

ExperimentConfig apply_config(const std::string& document, const ExperimentConfig& base) {
  return apply_document(parse_document(document), base, true);
}

ExperimentConfig preset_config(const std::string& name) { return apply_config(preset_document(name)); }

std::string config_json(const ExperimentConfig& cfg) {
  const auto& sc = cfg.scenario;
  auto rng = [](const Range& r) { return json::array({r.lo, r.hi}); };
  json doc;
  if (!cfg.preset.empty()) doc["preset"] = cfg.preset;
  doc["scenario"] = to_string(sc.kind);
  doc["seed"] = cfg.seed;
  doc["out"] = cfg.out_dir;
  doc["building"] = {{"n_stories", sc.building.n_stories()},
                     {"masses", sc.building.masses},
                     {"stiffnesses", sc.building.stiffnesses},
                     {"dampings", sc.building.dampings},
                     {"input_dofs", one_based(cfg.input_dofs)}};
  json dataset = {{"count", cfg.count},
                  {"split", {{"train", cfg.split.train}, {"val", cfg.split.val}, {"test", cfg.split.test}}},
                  {"nsr", sc.nsr},
                  {"duration", sc.duration},
                  {"dt", sc.dt},
                  {"measured_dofs", one_based(sc.measured_dofs)},
                  {"load",
                   {{"amplitude", rng(sc.amplitude)},
                    {"omega", rng(sc.omega)},
                    {"decay", rng(sc.decay)},
                    {"onset", rng(sc.onset)},
                    {"intensity", rng(sc.intensity)},
                    {"f_lo", sc.f_lo},
                    {"f_hi", sc.f_hi},
                    {"envelope", {{"rise", sc.envelope.rise}, {"plateau", sc.envelope.plateau}, {"fall", sc.envelope.fall}}},
                    {"peak", rng(sc.peak)},
                    {"width", rng(sc.width)},
                    {"impact_time", rng(sc.impact_time)}}}};
  if (!cfg.noise_sweep.empty()) dataset["noise_sweep"] = cfg.noise_sweep;
  doc["dataset"] = dataset;
  doc["networks"] = {{"lstm", network_json(cfg.lstm)}, {"gru", network_json(cfg.gru)}, {"conv", network_json(cfg.conv)}};
  json filter = {{"q_scale", cfg.filter.q_scale},
                 {"r_scale", cfg.filter.r_scale},
                 {"lambda2", cfg.filter.lambda2},
                 {"theta0_offset", cfg.filter.theta0_offset},
                 {"p0_scale", cfg.filter.p0_scale},
                 {"fd_step", cfg.filter.fd_step},
                 {"theta_floor", cfg.filter.theta_floor},
                 {"detrend_hz", cfg.filter.detrend_hz}};
  if (std::isinf(cfg.filter.mu)) {
    filter["mu"] = "inf";
  } else {
    filter["mu"] = cfg.filter.mu;
  }
  if (cfg.filter.theta0.theta.size()) {
    const auto& t = cfg.filter.theta0.theta;
    filter["theta0"] = std::vector<double>(t.data(), t.data() + t.size());
  }
  doc["filter"] = filter;
  doc["metric"] = {{"eps_rel", cfg.eps_rel}};
  return doc.dump(2) + "\n";
}

}  // namespace loadid
