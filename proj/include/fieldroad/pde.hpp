#ifndef FIELDROAD_PDE_HPP
#define FIELDROAD_PDE_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "fieldroad/profiles.hpp"
#include "fieldroad/test_functions.hpp"

namespace fieldroad {

/// How v|_{y=0} enters the Robin exchange.
///  kReconstructed: v(0) = v_bottom + h F / (2d), giving the flux F = kappa (u - v_bottom) with
///                  kappa = alpha / (1 + alpha h / (2d)); second order in h.
///  kBottomCell:    v(0) = v_bottom, F = alpha (u - v_bottom); first order in h.
enum class TraceMode { kReconstructed, kBottomCell };

struct PdeParams {
  double d = 1.0;
  double D = 1.0;
  double alpha = 1.0;
  int p = 2;
  int M = 32;
  double cfl_safety = 0.4;
  TraceMode trace = TraceMode::kReconstructed;

  void validate() const;
};

class CflViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cell-centre coordinates and periodic neighbour tables of the uniform mesh.
struct PdeGrid {
  explicit PdeGrid(const PdeParams& params);

  int p;
  int M;
  double h;
  std::size_t layer;                       // M^{p-1} road cells
  std::vector<std::vector<double>> x;      // centre of each road cell
  std::vector<double> y;                   // centre of each height level
  std::vector<std::uint32_t> x_plus;       // layer * (p-1): neighbour in +e_q
  std::vector<std::uint32_t> x_minus;
};

/// v on T^{p-1} x (0,1) (height slowest, like bulk sites), u on the road.
struct PdeState {
  PdeParams params;
  std::shared_ptr<const PdeGrid> grid;
  std::vector<double> v;
  std::vector<double> u;
  double time = 0.0;
  double dt = 0.0;
  std::size_t steps = 0;

  double h() const { return grid->h; }
};

/// dt = s h^2 / (2 (max(p d, (p-1) D) + alpha h)).
double stable_dt(const PdeParams& params);

/// Throws CflViolation when any update coefficient of the explicit scheme is negative.
void check_cfl(const PdeParams& params, double dt);

/// Cell-centre sampling; data outside [0,1] are rejected.
PdeState init_pde(const FieldProfile& v0, const RoadProfile& u0, const PdeParams& params);
/// Samples arbitrary (unbounded) data; used for dual problems and manufactured fields.
PdeState sample_state(const FieldProfile& v, const RoadProfile& u, const PdeParams& params, double time = 0.0);
PdeState zero_state(const PdeParams& params);

/// Exchange coefficient kappa of the boundary flux.
double exchange_coefficient(const PdeParams& params);
/// v|_{y=0} at road cell i.
double bottom_trace(const PdeState& state, std::size_t i);

struct PdeSources {
  std::function<double(double t, std::span<const double> x, double y)> field;
  std::function<double(double t, std::span<const double> x)> road;
};

/// One explicit step of length dt (sources evaluated at the current time).
void advance(PdeState& state, double dt, const PdeSources* sources = nullptr);
/// One step of the state's own dt.
PdeState pde_step(const PdeState& state);

/// Steps to t_end, landing exactly on each snapshot time. Returns one state per snapshot time,
/// or only the final state when no snapshot time is given.
std::vector<PdeState> solve(PdeState state, double t_end, std::span<const double> snapshot_times,
                            const PdeSources* sources = nullptr);
/// Every `stride`-th step from the initial state through t_end (final time always included).
std::vector<PdeState> solve_all_steps(PdeState state, double t_end, std::size_t stride = 1);

/// Multilinear interpolation of the cell-centred values, periodic in x; constant beyond the
/// outermost centres in y.
double interpolate_field(const PdeState& state, std::span<const double> x, double y);
double interpolate_road(const PdeState& state, std::span<const double> x);

/// h^p sum v + h^{p-1} sum u.
double total_mass(const PdeState& state);
/// Sup distance of (v, u) to the flat state carrying the same mass.
double distance_to_flat(const PdeState& state);

struct WeakResidual {
  double field = 0.0;
  double road = 0.0;
};

/// Signed defects of the weak field and road identities at time t (a snapshot time), with
/// midpoint quadrature in space and trapezoid in time over the snapshots.
WeakResidual weak_residual(std::span<const PdeState> snapshots, const TestFunctionPair& pair, double t);

struct DualityResult {
  double residual = 0.0;
  double source_pairing = 0.0;  // int_0^T <v,phi> + <u,psi>
  double data_pairing = 0.0;    // <v0,G(0)> + <u0,H(0)>
};

/// Solves the primal system from (v0,u0) and the reversed-time sourced dual from zero data on
/// [0,T] with the same mesh, and returns the defect of the duality identity.
DualityResult duality_check(const FieldProfile& v0, const RoadProfile& u0, const PdeSources& sources, double T,
                            const PdeParams& params);

/// Compactly supported family: x-modes [1, cos 2pi x_1, sin 2pi x_1, cos 4pi x_1] innermost, then
/// bump degree m in blocks of 8, then time factor alternating 1, 2t/T - 1 between blocks.
/// K = 32 spans degrees 0..7 with the constant time factor.
std::vector<TestFunctionPair> energy_family(int p, std::size_t K, double T);

struct EnergyEstimate {
  double lower_bound = -std::numeric_limits<double>::infinity();  // optimum over the span
  double best_single = -std::numeric_limits<double>::infinity();  // best scaled single member
  std::size_t members = 0;
};

/// Lower bound of sup_G { int <v, d_q G> - 1/2 int ||G||^2 } over the K-member family;
/// q in [1, p] (q = p is the height direction). Snapshots must start at t = 0.
EnergyEstimate energy_functional(std::span<const PdeState> snapshots, int q, std::size_t K);

struct EnergyCheck {
  EnergyEstimate estimate;
  double cap = 0.0;    // 1/2 int_0^T ||d_1 v||^2 in closed form
  double ratio = 0.0;  // lower_bound / cap
};

/// Estimator on v = 0.5 + 0.3 e^{-t} cos(2 pi x_1) cos(pi y) sampled on the mesh of `params`
/// at `time_steps` + 1 equispaced times, direction q = 1.
EnergyCheck manufactured_energy_check(const PdeParams& params, std::size_t K, double T, std::size_t time_steps);

}  // namespace fieldroad

#endif  // FIELDROAD_PDE_HPP
