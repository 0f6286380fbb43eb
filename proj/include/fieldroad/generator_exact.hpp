#ifndef FIELDROAD_GENERATOR_EXACT_HPP
#define FIELDROAD_GENERATOR_EXACT_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "fieldroad/dynamics.hpp"
#include "fieldroad/lattice.hpp"

namespace fieldroad {

class StateCapExceeded : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Exhaustive enumeration of configurations. State s packs eta (bulk sites, bit k = site k)
/// followed by xi (road site i at bit |bulk| + i), little endian.
class StateSpace {
 public:
  static constexpr std::size_t kDefaultCap = std::size_t{1} << 20;

  StateSpace(std::shared_ptr<const LatticeGeom> geom, std::size_t cap = kDefaultCap);

  const LatticeGeom& geom() const { return *geom_; }
  std::shared_ptr<const LatticeGeom> geom_ptr() const { return geom_; }
  int bits() const { return bits_; }
  std::size_t size() const { return std::size_t{1} << bits_; }

  std::uint32_t encode(const Configuration& config) const;
  Configuration decode(std::uint32_t state) const;
  bool eta(std::uint32_t state, std::size_t site) const { return (state >> site) & 1U; }
  bool xi(std::uint32_t state, std::size_t road_site) const { return (state >> (nb_ + road_site)) & 1U; }
  std::uint32_t eta_bit(std::size_t site) const { return std::uint32_t{1} << site; }
  std::uint32_t xi_bit(std::size_t road_site) const { return std::uint32_t{1} << (nb_ + road_site); }

 private:
  std::shared_ptr<const LatticeGeom> geom_;
  std::size_t nb_;
  int bits_;
};

StateSpace enumerate_states(std::shared_ptr<const LatticeGeom> geom, std::size_t cap = StateSpace::kDefaultCap);

enum class GeneratorPart { kField = 0, kRoad = 1, kRobin = 2, kReaction = 3, kReservoir = 4 };
inline constexpr std::size_t kNumGeneratorParts = 5;
const char* part_name(GeneratorPart part);

struct Transition {
  std::uint32_t from;
  std::uint32_t to;
  double rate;
};

/// L_N = N^2 L^field + N^2 L^road + N L^Rob + L^reac + L^up, stored as the unscaled
/// transitions of each part plus the part prefactors.
class GeneratorMatrix {
 public:
  static constexpr std::size_t kDenseCap = 4096;

  GeneratorMatrix(const StateSpace& space, const PhysicalParams& phys);

  std::size_t size() const { return size_; }
  const std::vector<Transition>& transitions(GeneratorPart part) const {
    return parts_[static_cast<std::size_t>(part)];
  }
  double prefactor(GeneratorPart part) const { return prefactor_[static_cast<std::size_t>(part)]; }

  /// Sparse Q (rows = from) of the full generator, or of a single part when given.
  /// `scaled` applies the N^2 / N prefactors.
  Eigen::SparseMatrix<double, Eigen::RowMajor> sparse() const;
  Eigen::SparseMatrix<double, Eigen::RowMajor> sparse(GeneratorPart part, bool scaled) const;
  /// Dense form; throws StateCapExceeded above kDenseCap states.
  Eigen::MatrixXd dense() const;
  Eigen::MatrixXd dense(GeneratorPart part, bool scaled) const;

  /// Largest exit rate of the full generator.
  double max_exit_rate() const;
  /// Largest |row sum| of the full generator (zero up to roundoff).
  double max_row_sum() const;

 private:
  std::size_t size_;
  std::array<std::vector<Transition>, kNumGeneratorParts> parts_;
  std::array<double, kNumGeneratorParts> prefactor_{};
};

GeneratorMatrix build_generator_matrix(const StateSpace& space, const PhysicalParams& phys);

using MeasureVector = Eigen::VectorXd;

enum class ExpMethod { kAuto, kPade, kUniformization };

struct ForwardResult {
  MeasureVector mu;
  double mass_drift = 0.0;  // |sum - 1| before renormalization
  bool flagged = false;     // drift above 1e-9
};

class ExpNonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// mu_t = mu_0 exp(tQ). kAuto uses the Pade exponential up to the dense cap, then uniformization.
ForwardResult forward_solve(const GeneratorMatrix& Q, const MeasureVector& mu0, double t,
                            ExpMethod method = ExpMethod::kAuto);

MeasureVector dirac_measure(const StateSpace& space, std::uint32_t state);
/// nu(s) = gamma^k (1-gamma)^{n-k}, k = popcount(s); 0 < gamma < 1.
MeasureVector bernoulli_measure(const StateSpace& space, double gamma);

/// Sum mu log(mu/nu) with 0 log 0 = 0; nu must be strictly positive.
double relative_entropy(const MeasureVector& mu, const MeasureVector& nu);
/// C0 = -log(min(gamma, 1-gamma)).
double entropy_constant(double gamma);

struct DirichletReport {
  std::array<double, kNumGeneratorParts> D{};  // -<L^P sqrt f, sqrt f>_nu (unscaled parts)
  std::array<double, kNumGeneratorParts> I{};  // I^P(f, nu)
};

/// Per-part Dirichlet forms of sqrt(f) and I-functionals of f under nu, by direct summation.
DirichletReport dirichlet_forms(const GeneratorMatrix& Q, const Eigen::VectorXd& f, const MeasureVector& nu);

/// eps^P = 1/2 sum_s nu(s) sum_{s'} r^P(s,s') (f(s') - f(s)) for the Robin or reaction part.
double exchange_defect(const GeneratorMatrix& Q, GeneratorPart part, const Eigen::VectorXd& f,
                       const MeasureVector& nu);

/// Random strictly positive density under nu: exp of i.i.d. normals, normalized.
Eigen::VectorXd random_density(const MeasureVector& nu, std::uint64_t seed);

struct IdentityCheck {
  std::string name;
  bool asserted = true;
  double max_deviation = 0.0;  // relative
  std::uint64_t worst_seed = 0;
  bool pass = true;
};

struct LemmaReport {
  double gamma = 0.5;
  double b = 0.5;
  int trials = 0;
  std::vector<IdentityCheck> checks;
  double max_eps_robin = 0.0;
  double max_eps_reaction = 0.0;
  double fitted_c = 0.0;   // max |eps| / (alpha N^{p-1})
  double bound_c = 0.0;    // 1/2 (1 + max(gamma/(1-gamma), (1-gamma)/gamma))
  bool pass = true;
};

/// Checks the per-part identities on `trials` random densities (seeds child_seed(seed, k)).
/// Field, road and exchange-defect equalities at relative tolerance `tol`; the reservoir
/// equality only when gamma == b; |eps| against the explicit bound.
LemmaReport check_lemma_identities(const StateSpace& space, const PhysicalParams& phys, double gamma, int trials,
                                   std::uint64_t seed, double tol = 1e-10);

std::string to_json(const LemmaReport& report);

}  // namespace fieldroad

#endif  // FIELDROAD_GENERATOR_EXACT_HPP
