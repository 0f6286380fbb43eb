#ifndef FIELDROAD_HARNESS_HPP
#define FIELDROAD_HARNESS_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fieldroad/dynamics.hpp"
#include "fieldroad/empirical.hpp"
#include "fieldroad/generator_exact.hpp"
#include "fieldroad/pde.hpp"
#include "fieldroad/test_functions.hpp"

namespace fieldroad {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ExperimentKind { kSimulate, kPde, kConverge, kOracle, kDirichletCheck, kDiagnostics };

ExperimentKind parse_kind(std::string_view name);
const char* kind_name(ExperimentKind kind);

/// Everything an experiment reads. INI sections and keys:
///   [experiment]  kind, seed, out, workers
///   [model]       d, D, alpha, b, p
///   [lattice]     N (comma list, ascending), event_cap
///   [sampling]    trajectories, profile, times, eps
///   [coarse]      bins
///   [pde]         M, cfl_safety, trace (reconstructed | bottom_cell)
///   [oracle]      initial (dirac | product)
///   [dirichlet]   gammas, trials, random_measures
///   [diagnostics] list, replacement_N, replacement_eps, energy_family
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kSimulate;
  PhysicalParams phys;
  int p = 2;
  std::vector<int> N{16};
  std::size_t event_cap = SimParams::kDefaultEventCap;
  std::size_t trajectories = 100;
  std::string profile = "flat:0.5";
  std::vector<double> times{0.05, 0.1};
  std::vector<double> eps{0.2, 0.1, 0.05};
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  unsigned workers = 1;

  int bins = 8;
  int pde_M = 64;
  double cfl_safety = 0.4;
  TraceMode trace = TraceMode::kReconstructed;

  bool oracle_dirac = true;

  std::vector<double> gammas{0.25, 0.5, 0.75};
  int density_trials = 100;
  int random_measures = 1000;

  std::vector<std::string> diagnostics{"martingale", "qv_scaling", "replacement", "energy"};
  std::vector<int> replacement_N{16, 32, 64};
  double replacement_eps = 0.1;
  std::size_t energy_family = 32;

  /// Throws ConfigError on any inconsistency.
  void validate() const;
  /// Normalized key=value listing of every field that can change results (the output
  /// directory and the worker count are left out).
  std::string canonical() const;
  std::uint64_t hash() const;
  PdeParams pde_params() const;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Numeric table; every emitted CSV starts with a comment naming the version and config hash.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

void write_csv(std::ostream& out, const Table& table, const ExperimentConfig& config);
/// Writes <out_dir>/<table.name>.csv and returns the path.
std::string write_table(const Table& table, const ExperimentConfig& config);

/// Runs body(i) for i in [0, n) on up to `workers` threads. Callers store results by index,
/// so the outcome never depends on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body);

/// The fixed list of test pairs used for pairings and martingale checks.
std::vector<TestFunctionPair> default_test_pairs(int p);

struct ConvergenceLevel {
  int N = 0;
  std::vector<double> field_error;  // per time: sup over cells |MC mean - PDE|
  std::vector<double> field_se;     // per time: largest cell standard error
  std::vector<double> road_error;
  std::vector<double> road_se;
  std::vector<double> field_noise;  // per time: expected sup of pure sampling noise plus 3 standard errors
  std::vector<double> road_noise;
  double wall_seconds = 0.0;
};

struct ConvergenceReport {
  std::vector<double> times;
  std::vector<ConvergenceLevel> levels;
  bool field_improves = false;  // error(N_max) < error(N_min) at every time
  bool road_improves = false;
  bool monotone = false;        // strictly decreasing along the whole N list, field and road
  bool within_noise = false;    // every error below its noise level
  Table errors;
  Table pairings;  // per trajectory <pi_N, [G, H]>
};

ConvergenceReport run_convergence_study(const ExperimentConfig& config);

struct OracleRow {
  double time = 0.0;
  double tv = 0.0;
  double bound = 0.0;
  double mass_drift = 0.0;
};

struct OracleReport {
  std::size_t states = 0;
  std::vector<OracleRow> rows;
  bool pass = false;
  Table table;
};

OracleReport run_oracle_comparison(const ExperimentConfig& config);

struct MartingaleStat {
  std::string pair;
  double time = 0.0;
  Estimate mean;           // of M_N(t)
  Estimate compensated;    // of M_N(t)^2 - int_0^t B_N
  double variance = 0.0;   // ensemble variance of M_N(t)
  double mean_qv = 0.0;    // ensemble mean of int_0^t B_N
  bool zero_mean = false;  // |mean| <= 3 stderr
  bool variance_ok = false;  // |mean of M^2 - int B| <= 4 stderr
};

/// Ensemble martingale statistics at geometry N for the default test pairs.
std::vector<MartingaleStat> martingale_study(const ExperimentConfig& config, int N);

struct QvScaling {
  int N_coarse = 0;
  int N_fine = 0;
  Estimate coarse;  // mean M_N(t)^2
  Estimate fine;
  double ratio = 0.0;
  double ratio_se = 0.0;
  double target = 0.0;  // (N_fine / N_coarse)^{p-1}
  bool pass = false;    // ratio within [0.7, 1.45] x target
};

/// Uses the first test pair and the last observation time.
QvScaling qv_scaling_study(const ExperimentConfig& config, int N_coarse, int N_fine);

struct ReplacementPoint {
  int N = 0;
  double eps = 0.0;
  Boundary boundary = Boundary::kUpper;
  Estimate estimate;
};

struct ReplacementStudy {
  std::vector<ReplacementPoint> n_sweep;    // replacement_N at replacement_eps
  std::vector<ReplacementPoint> eps_sweep;  // eps list at the largest replacement_N
  bool decreasing = false;                  // strictly decreasing point estimates on every sweep
};

/// Estimates at the last observation time with G = 1 + cos(2 pi x_1) / 2.
ReplacementStudy replacement_study(const ExperimentConfig& config);

struct DiagnosticsBundle {
  std::vector<Table> tables;
  std::string summary_json;  // empty when no diagnostic ran
  bool pass = true;
};

DiagnosticsBundle run_diagnostics(const ExperimentConfig& config);

struct DirichletCheckResult {
  std::vector<LemmaReport> lemmas;
  double worst_entropy_margin = 0.0;  // max over measures of H - C0 N^p (must stay <= 0)
  bool pass = false;
  std::string json;
};

/// Dirichlet-form identities and the entropy bound at each configured gamma (b from the model section).
DirichletCheckResult run_dirichlet_check(const ExperimentConfig& config);

/// One trajectory at the first N: snapshots at each time plus the event log.
struct SimulateResult {
  SimulationResult sim;
  std::vector<ParticleCounts> counts;
  std::vector<std::string> files;
};
SimulateResult run_simulate(const ExperimentConfig& config);

struct PdeRunResult {
  std::vector<PdeState> snapshots;
  std::vector<std::string> files;
};
PdeRunResult run_pde(const ExperimentConfig& config);

/// Runs the configured experiment, writes its outputs under out_dir and returns the exit
/// status: 0 on pass, 2 when a threshold fails. Errors propagate as exceptions.
int run_experiment(const ExperimentConfig& config, std::ostream& log);

}  // namespace fieldroad

#endif  // FIELDROAD_HARNESS_HPP
