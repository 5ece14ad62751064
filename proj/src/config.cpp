#include "mlsmooth/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace mlsmooth {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& section, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError("'" + section + "' must be an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + section + "." + key + "'");
}

Matrix read_matrix(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty()) throw ConfigError(name + ": expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  Matrix m;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array()) throw ConfigError(name + ": every row must be an array");
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      m.resize(rows, cols);
    } else if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(name + ": ragged rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw ConfigError(name + ": entries must be numbers");
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

Vector read_vector(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty()) throw ConfigError(name + ": expected a non-empty array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(name + ": entries must be numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

template <typename T>
T read_number(const json& obj, const char* key, T fallback, const std::string& section) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(section + "." + key + ": expected a number");
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw ConfigError(section + "." + key + ": expected an integer");
  }
  return v.get<T>();
}

std::string read_string(const json& obj, const char* key, const std::string& fallback, const std::string& section) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_string()) throw ConfigError(section + "." + key + ": expected a string");
  return obj.at(key).get<std::string>();
}

void parse_model(const json& j, ModelSpec& spec) {
  reject_unknown(j, "model", {"kind", "F", "G", "H", "Q", "R", "mu", "P0", "u", "q", "r", "p0"});
  spec.kind = read_string(j, "kind", spec.kind, "model");
  if (spec.kind == "tanh") {
    for (const char* key : {"F", "G", "H", "Q", "R", "mu", "P0", "u"})
      if (j.contains(key)) throw ConfigError(std::string("model.") + key + " does not apply to the tanh model");
    spec.q = read_number(j, "q", spec.q, "model");
    spec.r = read_number(j, "r", spec.r, "model");
    spec.p0 = read_number(j, "p0", spec.p0, "model");
    return;
  }
  if (spec.kind != "linear") throw ConfigError("model.kind must be 'linear' or 'tanh'");
  for (const char* key : {"q", "r", "p0"})
    if (j.contains(key)) throw ConfigError(std::string("model.") + key + " applies only to the tanh model");
  const bool any = j.contains("F") || j.contains("H") || j.contains("Q") || j.contains("R") || j.contains("mu") ||
                   j.contains("P0");
  if (!any) {
    if (j.contains("G") || j.contains("u")) throw ConfigError("model.G/u require explicit F, H, Q, R, mu, P0");
    return;
  }
  LinearGaussianParams p;
  for (const char* key : {"F", "H", "Q", "R", "mu", "P0"})
    if (!j.contains(key)) throw ConfigError(std::string("model.") + key + " is required for a custom linear model");
  p.F = read_matrix(j.at("F"), "model.F");
  p.H = read_matrix(j.at("H"), "model.H");
  p.Q = read_matrix(j.at("Q"), "model.Q");
  p.R = read_matrix(j.at("R"), "model.R");
  p.mu = read_vector(j.at("mu"), "model.mu");
  p.P0 = read_matrix(j.at("P0"), "model.P0");
  if (j.contains("G")) p.G = read_matrix(j.at("G"), "model.G");
  if (j.contains("u")) {
    if (!j.at("u").is_array()) throw ConfigError("model.u: expected an array of vectors");
    for (std::size_t i = 0; i < j.at("u").size(); ++i)
      p.u.push_back(read_vector(j.at("u")[i], "model.u[" + std::to_string(i) + "]"));
  }
  spec.linear = std::move(p);
}

} // namespace

void ExperimentConfig::validate() const {
  if (n < 1) throw ConfigError("run.n must be at least 1");
  if (particles < 2) throw ConfigError("run.M must be at least 2");
  if (replicates < 1) throw ConfigError("run.N must be at least 1");
  if (model.kind != "linear" && model.kind != "tanh") throw ConfigError("model.kind must be 'linear' or 'tanh'");
  if (out_dir.empty()) throw ConfigError("out.dir must not be empty");
  try {
    iter.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("iter: ") + e.what());
  }
}

ExperimentConfig default_config(const std::string& kind) {
  ExperimentConfig cfg;
  cfg.model.kind = kind;
  if (kind != "linear" && kind != "tanh") throw ConfigError("unknown model kind '" + kind + "'");
  return cfg;
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(root, "config", {"model", "run", "iter", "out"});
  ExperimentConfig cfg;
  if (root.contains("model")) parse_model(root.at("model"), cfg.model);
  if (root.contains("run")) {
    const json& r = root.at("run");
    reject_unknown(r, "run", {"n", "M", "N", "seed", "decouple_rts"});
    cfg.n = read_number(r, "n", cfg.n, "run");
    cfg.particles = read_number(r, "M", cfg.particles, "run");
    cfg.replicates = read_number(r, "N", cfg.replicates, "run");
    if (r.contains("seed")) {
      if (!r.at("seed").is_number_unsigned()) throw ConfigError("run.seed: expected a non-negative integer");
      cfg.seed = r.at("seed").get<std::uint64_t>();
    }
    if (r.contains("decouple_rts")) {
      if (!r.at("decouple_rts").is_boolean()) throw ConfigError("run.decouple_rts: expected a boolean");
      cfg.decouple_rts = r.at("decouple_rts").get<bool>();
    }
  }
  if (root.contains("iter")) {
    const json& it = root.at("iter");
    reject_unknown(it, "iter", {"scheme", "epsilon", "max_iters", "damping", "growth_limit", "max_halvings", "terminal"});
    try {
      cfg.iter.scheme = parse_scheme(read_string(it, "scheme", to_string(cfg.iter.scheme), "iter"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("iter.scheme: ") + e.what());
    }
    cfg.iter.epsilon = read_number(it, "epsilon", cfg.iter.epsilon, "iter");
    cfg.iter.max_iters = read_number(it, "max_iters", cfg.iter.max_iters, "iter");
    cfg.iter.damping = read_number(it, "damping", cfg.iter.damping, "iter");
    cfg.iter.growth_limit = read_number(it, "growth_limit", cfg.iter.growth_limit, "iter");
    cfg.iter.max_halvings = read_number(it, "max_halvings", cfg.iter.max_halvings, "iter");
    const std::string terminal = read_string(it, "terminal", "filtered_mean", "iter");
    if (terminal == "filtered_mean")
      cfg.iter.terminal = TerminalRule::filtered_mean;
    else if (terminal == "maximize")
      cfg.iter.terminal = TerminalRule::maximize;
    else
      throw ConfigError("iter.terminal must be 'filtered_mean' or 'maximize'");
  }
  if (root.contains("out")) {
    const json& o = root.at("out");
    reject_unknown(o, "out", {"dir"});
    cfg.out_dir = read_string(o, "dir", cfg.out_dir, "out");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

LinearGaussianModel build_linear_model(const ExperimentConfig& cfg) {
  if (cfg.model.kind != "linear") throw ConfigError("model.kind is not 'linear'");
  try {
    if (!cfg.model.linear) return three_state_linear_model(cfg.n);
    return LinearGaussianModel(cfg.n, *cfg.model.linear);
  } catch (const ModelError& e) {
    throw ConfigError(std::string("invalid model: ") + e.what());
  }
}

std::unique_ptr<StateSpaceModel> build_model(const ExperimentConfig& cfg) {
  if (cfg.model.kind == "linear") return std::make_unique<LinearGaussianModel>(build_linear_model(cfg));
  try {
    return std::make_unique<NonlinearTanhModel>(cfg.n, cfg.model.q, cfg.model.r, cfg.model.p0);
  } catch (const ModelError& e) {
    throw ConfigError(std::string("invalid model: ") + e.what());
  }
}

} // namespace mlsmooth
