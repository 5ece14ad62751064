// Experiment configuration. Files are JSON objects with the sections
//
//   "model": {"kind": "linear" | "tanh", "F": [[...]], "G", "H", "Q", "R",
//             "mu": [...], "P0", "u": [[...] per step], "q", "r", "p0"}
//   "run":   {"n": 100, "M": 2000, "N": 100, "seed": 1}
//   "iter":  {"scheme": "em_gradient", "epsilon": 1e-6, "max_iters": 200,
//             "damping": 1.0, "growth_limit": 10, "max_halvings": 6,
//             "terminal": "filtered_mean"}
//   "out":   {"dir": "out"}
//
// Matrices are arrays of rows. A linear model without matrices is the
// three-state system; missing tanh parameters take their defaults.

#ifndef MLSMOOTH_CONFIG_HPP
#define MLSMOOTH_CONFIG_HPP

#include "mlsmooth/model.hpp"
#include "mlsmooth/smoother.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

namespace mlsmooth {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct ModelSpec {
  std::string kind = "linear";
  std::optional<LinearGaussianParams> linear;  // nullopt: three-state system
  double q = 0.2;
  double r = 1.0;
  double p0 = 1.0;
};

struct ExperimentConfig {
  ModelSpec model;
  int n = 100;
  int particles = 2000;
  int replicates = 100;
  std::uint64_t seed = 1;
  IterationConfig iter;
  std::string out_dir = "out";
  bool decouple_rts = false;  // force C_k = 0 in the RTS column

  /// Throws ConfigError.
  void validate() const;
};

ExperimentConfig default_config(const std::string& kind);

/// Parses JSON text; unknown keys are rejected so typos surface.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Builds the configured model. ModelError from parameter validation is
/// rethrown as ConfigError.
std::unique_ptr<StateSpaceModel> build_model(const ExperimentConfig& cfg);
LinearGaussianModel build_linear_model(const ExperimentConfig& cfg);

} // namespace mlsmooth

#endif // MLSMOOTH_CONFIG_HPP
