#ifndef FIELDROAD_EMPIRICAL_HPP
#define FIELDROAD_EMPIRICAL_HPP

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "fieldroad/dynamics.hpp"
#include "fieldroad/lattice.hpp"
#include "fieldroad/test_functions.hpp"

namespace fieldroad {

/// <pi_field, G(t)> = N^{-p} sum eta(i) G(t, i/N).
double pair_field(const Configuration& config, const FieldFunction& G, double t, const LatticeGeom& geom);
/// <pi_road, H(t)> = N^{-(p-1)} sum xi(i) H(t, i/N).
double pair_road(const Configuration& config, const RoadFunction& H, double t, const LatticeGeom& geom);

/// c_{N,eps} = [(2 floor(eps N) + 1)^{p-1} (floor(eps N) + 1)]^{-1}.
double box_normalizer(int p, int N, double eps);

/// Distinct bulk sites within x-distance floor(eps N) (torus) and y-distance floor(eps N)
/// of a boundary-layer site, truncated at the bulk.
std::vector<std::size_t> box_sites(const LatticeGeom& geom, std::size_t site, double eps);

/// Occupation average over box_sites(site). Equals c_{N,eps} times the box sum whenever
/// 2 floor(eps N) + 1 <= N; otherwise the torus wrap would double count sites.
double box_average(const Configuration& config, const LatticeGeom& geom, std::size_t site, double eps);

/// N^2 sum_q [G(+e_q) - 2G + G(-e_q)] at a bulk site.
double discrete_laplacian_x(const FieldFunction& G, double t, std::size_t site, const LatticeGeom& geom);
/// Same stencil for a road function at a road site.
double discrete_laplacian_x(const RoadFunction& H, double t, std::size_t road_site, const LatticeGeom& geom);
/// N^2 [G(j+1) - 2G(j) + G(j-1)], interior sites only (1 < j < N-1).
double discrete_dyy(const FieldFunction& G, double t, std::size_t site, const LatticeGeom& geom);
/// Forward difference at j = 1, backward difference at j = N-1, scaled by N.
double discrete_dy(const FieldFunction& G, double t, std::size_t site, const LatticeGeom& geom);

class HorizonError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Replays a trajectory, keeping the configuration and integrating path functionals
/// exactly over the holding intervals. Observation hooks fire at each requested time
/// (right-continuous: an event at exactly t is included).
class PathFunctionalObserver : public TrajectoryObserver {
 public:
  PathFunctionalObserver(const LatticeGeom& geom, std::vector<double> times);

  void on_start(const Configuration& initial, double t0) final;
  void on_event(const Event& event) final;
  void on_finish(double final_time) final;

  const std::vector<double>& times() const { return times_; }

 protected:
  const LatticeGeom& geom() const { return geom_; }
  const Configuration& config() const { return config_; }
  /// Time of the jump being applied (valid inside flip hooks).
  double jump_time() const { return jump_time_; }

  virtual void reset() = 0;
  virtual void integrate(double a, double b) = 0;
  /// Called after eta(site) / xi(road_site) has been toggled.
  virtual void flipped_eta(std::size_t site) = 0;
  virtual void flipped_xi(std::size_t road_site) = 0;
  virtual void observe(std::size_t k) = 0;

 private:
  void advance(double target, bool inclusive);
  void toggle_eta(std::size_t site);
  void toggle_xi(std::size_t road_site);

  const LatticeGeom& geom_;
  std::vector<double> times_;
  Configuration config_;
  double clock_ = 0.0;
  double jump_time_ = 0.0;
  std::size_t next_ = 0;
};

/// Dynkin martingales of the pairing (G, H) and their compensators' integrals.
struct MartingaleSeries {
  std::vector<double> times;
  std::vector<double> field;     // M^field(t)
  std::vector<double> road;      // M^road(t)
  std::vector<double> qv_field;  // int_0^t B^field ds
  std::vector<double> qv_road;   // int_0^t B^road ds

  double total(std::size_t k) const { return field[k] + road[k]; }
  double total_qv(std::size_t k) const { return qv_field[k] + qv_road[k]; }
};

/// Streams the martingale evaluation; usable directly as a simulate() observer.
class MartingaleObserver final : public PathFunctionalObserver {
 public:
  MartingaleObserver(const LatticeGeom& geom, const PhysicalParams& phys, TestFunctionPair pair,
                     std::vector<double> times);

  const MartingaleSeries& series() const { return series_; }

 private:
  void reset() override;
  void integrate(double a, double b) override;
  void flipped_eta(std::size_t site) override;
  void flipped_xi(std::size_t road_site) override;
  void observe(std::size_t k) override;

  double drift_field() const;
  double drift_road() const;
  double qv_field_rate() const;
  double qv_road_rate() const;

  PhysicalParams phys_;
  TestFunctionPair pair_;
  double np_;   // N^{-p}
  double np1_;  // N^{-(p-1)}
  // Spatial weights at unit time factor.
  std::vector<double> g_, wk_eta_, wk_xi_, h_, wh_xi_, wh_eta_, ge2_, he2_, glow2_, hroad2_, gup2_;
  double k_const_ = 0.0;
  double gup2_total_ = 0.0;
  // Running sums over the current configuration.
  double a_g_ = 0, a_h_ = 0, k_eta_ = 0, k_xi_ = 0, kh_xi_ = 0, kh_eta_ = 0;
  double q_edges_ = 0, q_rob_g_ = 0, q_up_ = 0, q_road_edges_ = 0, q_rob_h_ = 0;
  // Accumulated martingale parts.
  double jumps_g_ = 0, jumps_h_ = 0, int_g_ = 0, int_h_ = 0, int_qg_ = 0, int_qh_ = 0;
  MartingaleSeries series_;
};

MartingaleSeries martingale_eval(const TrajectoryRecord& trajectory, const LatticeGeom& geom,
                                 const PhysicalParams& phys, const TestFunctionPair& pair,
                                 std::span<const double> times);

struct QuadraticVariationSeries {
  std::vector<double> times;
  std::vector<double> field;
  std::vector<double> road;
};

QuadraticVariationSeries quadratic_variation_eval(const TrajectoryRecord& trajectory, const LatticeGeom& geom,
                                                  const PhysicalParams& phys, const TestFunctionPair& pair,
                                                  std::span<const double> times);

enum class Boundary { kUpper, kLower };

struct ReplacementSpec {
  double eps = 0.1;
  Boundary boundary = Boundary::kUpper;
};

/// For each spec, int_0^t N^{-(p-1)} sum_{boundary} G(s, i/N) (eta^{eps N}(i) - eta(i)) ds,
/// recorded (signed) at each observation time.
class ReplacementObserver final : public PathFunctionalObserver {
 public:
  ReplacementObserver(const LatticeGeom& geom, const FieldFunction& G, std::vector<ReplacementSpec> specs,
                      std::vector<double> times);

  /// values()[s][k]: spec s at observation time k.
  const std::vector<std::vector<double>>& values() const { return values_; }

 private:
  void reset() override;
  void integrate(double a, double b) override;
  void flipped_eta(std::size_t site) override;
  void flipped_xi(std::size_t) override {}
  void observe(std::size_t k) override;

  TimeFactor tau_;
  std::vector<std::vector<double>> weights_;
  std::vector<double> sums_;
  std::vector<double> integrals_;
  std::vector<std::vector<double>> values_;
};

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Sample mean and standard error (zero for fewer than two samples).
Estimate mean_and_stderr(std::span<const double> samples);

/// Monte Carlo estimate of E|int_0^t N^{-(p-1)} sum G (eta^{eps N} - eta) ds| over recorded trajectories.
Estimate replacement_diagnostic(std::span<const TrajectoryRecord> trajectories, const LatticeGeom& geom,
                                const FieldFunction& G, double eps, Boundary boundary, double t);

/// Occupation fractions per macroscopic cell [c/bins, (c+1)/bins) in each coordinate.
/// Field cells are indexed like bulk sites (height slowest); empty cells hold NaN.
struct CoarseDensity {
  int p = 2;
  int bins = 1;
  std::vector<double> field;
  std::vector<double> road;
  std::vector<std::size_t> field_sites;
  std::vector<std::size_t> road_sites;
};

CoarseDensity coarse_density(const Configuration& config, const LatticeGeom& geom, int bins);

}  // namespace fieldroad

#endif  // FIELDROAD_EMPIRICAL_HPP
