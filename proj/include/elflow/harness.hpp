#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <numbers>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "elflow/diagnostics.hpp"
#include "elflow/identities.hpp"
#include "elflow/snapshot.hpp"

namespace elflow {

enum class InitialKind { TaylorGreen, ABC, RandomBandlimited };
enum class RunMode { Classical, EL, Cotangent };

std::string to_string(InitialKind k);
std::string to_string(RunMode m);
RunMode run_mode_from_string(const std::string& s);

struct InitialCondition {
  InitialKind kind = InitialKind::TaylorGreen;
  std::uint64_t seed = 1;
  double band = 2.0;
  double amplitude = 1.0;
};

/// One experiment. Parsed from a single JSON document; unknown keys are rejected.
struct RunConfig {
  int dim = 2;
  int n = 64;
  double L = 2.0 * std::numbers::pi;
  double nu = 0.01;
  double dt = 0.0;          ///< fixed step; 0 selects cfl_target
  double cfl_target = 0.0;  ///< dt = cfl_target h / max|u0|, rounded to divide t_end
  double t_end = 1.0;
  InitialCondition initial;
  ForcingSpec forcing;
  RunMode mode = RunMode::EL;
  PotentialMode potential_mode = PotentialMode::Static;
  bool reset_enabled = true;
  double reset_threshold = 0.25;
  int cadence = 10;  ///< steps between records
  std::string snapshots = "all";  ///< all | final | none
  std::vector<int> m_values{2};
  double C0 = 1.0;
  double C_K = 1.0;
  std::int64_t mc_samples = 100000;
  std::uint64_t mc_seed = 1;
  double delta0 = 0.0;  ///< pair-dispersion label radius; 0 means L/8
  bool bounds = false;  ///< bound assertions requested
  std::uint64_t identity_seed = 1;
  std::optional<std::uint64_t> gauge_seed;  ///< EL runs start from v0 = u0 + ∇φ0
  std::string compare = "el_vs_classical";  ///< el_vs_classical | el_vs_cotangent | gauge
  std::vector<std::filesystem::path> compare_dirs;  ///< compare stored runs instead
  double compare_tolerance = 0.0;  ///< max relative L2 difference; 0 reports only
  std::filesystem::path output_dir;

  Grid grid() const { return Grid(dim, n, L); }
  double delta0_or_default() const { return delta0 > 0.0 ? delta0 : L / 8.0; }
};

/// Throws ConfigError with the offending key.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& c);
void validate(const RunConfig& c);

/// Divergence-free initial velocity.
VectorField make_initial(const InitialCondition& ic, const Grid& grid);

/// Smooth random potential on |m| <= 2 with ‖∇φ‖ = ‖u0‖.
ScalarField gauge_potential(const Grid& grid, const VectorField& u0, std::uint64_t seed);

/// Step size and count covering [0, t_end] exactly.
struct StepPlan {
  double dt = 0.0;
  int steps = 0;
};
StepPlan plan_steps(const RunConfig& c, const VectorField& u0);

struct RunFailure {
  std::string type;
  std::string message;
  double t = 0.0;
};

struct RunResult {
  RunMode mode = RunMode::EL;
  StepPlan plan;
  History history;
  std::vector<double> output_times;  ///< one per record
  std::vector<VectorField> u;        ///< velocity at each record
  std::vector<VectorField> w;        ///< cotangent variable at each record (EL, cotangent)
  std::optional<ELState> final_el;
  std::optional<RunFailure> failure;
  std::vector<DispersionReport> dispersion;  ///< per record when bounds are requested
};

/// Called with the state at every record (EL mode only).
using ELObserver = std::function<void(const ELState&)>;

/// Integrates one configuration. Solver errors end the run early and are stored
/// in failure with the records made so far.
RunResult simulate(const RunConfig& c, RunMode mode, const ELObserver& observer = {});

struct ComparisonReport {
  std::vector<double> t;
  std::vector<double> rel_l2;   ///< ‖uA - uB‖₂ / ‖uB‖₂
  std::vector<double> rel_inf;  ///< ‖uA - uB‖_∞ / ‖uB‖_∞
  double max_rel_l2 = 0.0;
  double max_rel_inf = 0.0;
};

/// Throws ConfigError for mismatched grids or output times.
ComparisonReport compare_runs(const std::vector<double>& ta, const std::vector<VectorField>& ua,
                              const std::vector<double>& tb, const std::vector<VectorField>& ub);
void to_json(nlohmann::json& j, const ComparisonReport& r);

/// Output times and velocity snapshots of a stored run directory.
struct StoredRun {
  std::vector<double> t;
  std::vector<VectorField> u;
};
StoredRun load_run(const std::filesystem::path& dir);

struct IdentitySuiteResult {
  std::vector<IdentityReport> reports;
  std::vector<ConvergenceStudy> studies;
  IdentityReport z_stability;
  bool pass = false;
};

/// Corpus identities, both time-differenced convergence studies, and Z
/// conditioning along a short run.
IdentitySuiteResult verify_identities(const RunConfig& c);
void to_json(nlohmann::json& j, const IdentitySuiteResult& r);

/// Lowercase hex SHA-256 of bytes.
std::string sha256_hex(const std::string& bytes);

/// Collects run-local output files and writes manifest.json listing each with
/// its content hash and the config hash.
class ArtifactWriter {
 public:
  ArtifactWriter(std::filesystem::path dir, const RunConfig& config);
  void write_text(const std::string& relative, const std::string& content);
  void write_json(const std::string& relative, const nlohmann::json& j);
  void write_field(const std::string& relative, const Snapshot& snap);
  /// Writes manifest.json; call last.
  void finish();
  const std::filesystem::path& dir() const { return dir_; }

 private:
  void add(const std::string& relative);
  std::filesystem::path dir_;
  std::string config_hash_;
  std::vector<std::string> files_;
};

/// Writes timeseries.csv, snapshots and run.json for a finished simulation.
void write_run(ArtifactWriter& out, const RunConfig& c, const RunResult& r, const std::string& prefix = "");

/// CLI exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitSolver = 2;
inline constexpr int kExitAssertion = 3;

/// Subcommands; each writes its artifacts under c.output_dir and returns an exit code.
int command_run(const RunConfig& c);
int command_compare(const RunConfig& c);
int command_verify_identities(const RunConfig& c);
int command_bounds_report(const RunConfig& c);
int command_pair_dispersion(const RunConfig& c);

}  // namespace elflow
