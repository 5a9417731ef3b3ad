#pragma once

#include "rieszw/atoms.hpp"
#include "rieszw/verify.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace rieszw {

inline constexpr int kSchemaVersion = 1;

inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 2;
inline constexpr int kExitHypothesisFailed = 3;
inline constexpr int kExitConfigError = 4;

struct ClassRequest {
  WeightClass cls = WeightClass::Ap;
  double p = 2.0;
  double q = 0.0;
  double s = 2.0;
};

struct SweepConfig {
  bool present = false;
  SampledFunction function = SampledFunction::indicator(Ball(Point::Zero(), 1.0, 1));
  std::vector<Point> xs;
};

/// One entry of the "checks" list; `options` holds the entry's own fields.
struct CheckRequest {
  std::string name;
  nlohmann::json options = nlohmann::json::object();
};

struct RunConfig {
  int n = 1;
  WeightSpec weight = WeightSpec::constant(1);
  MatrixFamily matrices = MatrixFamily::identity(1);
  ExponentProfile exponents;  // alpha = 0 and no factors when the block is absent
  bool has_exponents = false;
  Theorem theorem = Theorem::Thm1;
  double p = 1.0;
  double s = 0.0;
  double p0 = 0.0;  // 0: automatic
  int d = -1;       // -1: automatic
  double weight_power = 1.0;  // atoms gen/validate use w^weight_power
  CampaignSpec campaign;
  QuadratureScheme quadrature;
  EstimatorOptions estimator;
  double index_tol = 1e-2;
  double fine_cells = 16.0;
  double drift = 4.0;
  std::vector<ClassRequest> classes;
  bool indices = true;
  SweepConfig sweep;
  std::vector<CheckRequest> checks;
  std::filesystem::path atoms_input;
  nlohmann::json source;  // the parsed document, for hashing

  /// 1/q = 1/p - alpha/n.
  double q() const;
  /// The kernel exponents; ConfigError when the config has none.
  const ExponentProfile& kernel() const;
};

/// Validates a config document and builds the run configuration. Relative
/// paths resolve against base_dir. Throws ConfigError whose message starts
/// with the offending field path.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Entry point of the command-line tool; args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rieszw
