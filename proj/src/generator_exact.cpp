#include "fieldroad/generator_exact.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "fieldroad/rng.hpp"
#include "json.hpp"

namespace fieldroad {

// ---- StateSpace ----

StateSpace::StateSpace(std::shared_ptr<const LatticeGeom> geom, std::size_t cap) : geom_(std::move(geom)) {
  if (!geom_) throw std::invalid_argument("state space needs a geometry");
  nb_ = geom_->bulk_size();
  const std::size_t n = nb_ + geom_->road_size();
  if (n >= 32 || (std::size_t{1} << n) > cap) {
    throw StateCapExceeded("state space of 2^" + std::to_string(n) + " configurations exceeds the cap of " +
                           std::to_string(cap));
  }
  bits_ = static_cast<int>(n);
}

std::uint32_t StateSpace::encode(const Configuration& config) const {
  if (!config.matches(*geom_)) throw std::invalid_argument("configuration does not match the state space");
  std::uint32_t s = 0;
  for (std::size_t k = 0; k < config.eta.size(); ++k) {
    if (config.eta[k]) s |= eta_bit(k);
  }
  for (std::size_t i = 0; i < config.xi.size(); ++i) {
    if (config.xi[i]) s |= xi_bit(i);
  }
  return s;
}

Configuration StateSpace::decode(std::uint32_t state) const {
  if (state >= size()) throw std::out_of_range("state index out of range");
  Configuration c = Configuration::empty(*geom_);
  for (std::size_t k = 0; k < c.eta.size(); ++k) c.eta[k] = eta(state, k) ? 1 : 0;
  for (std::size_t i = 0; i < c.xi.size(); ++i) c.xi[i] = xi(state, i) ? 1 : 0;
  return c;
}

StateSpace enumerate_states(std::shared_ptr<const LatticeGeom> geom, std::size_t cap) {
  return StateSpace(std::move(geom), cap);
}

// ---- GeneratorMatrix ----

const char* part_name(GeneratorPart part) {
  switch (part) {
    case GeneratorPart::kField:
      return "field";
    case GeneratorPart::kRoad:
      return "road";
    case GeneratorPart::kRobin:
      return "robin";
    case GeneratorPart::kReaction:
      return "reaction";
    case GeneratorPart::kReservoir:
      return "reservoir";
  }
  return "?";
}

GeneratorMatrix::GeneratorMatrix(const StateSpace& space, const PhysicalParams& phys) : size_(space.size()) {
  phys.validate();
  const LatticeGeom& g = space.geom();
  const double n = g.scale();
  prefactor_ = {n * n, n * n, n, 1.0, 1.0};
  auto& field = parts_[0];
  auto& road = parts_[1];
  auto& robin = parts_[2];
  auto& reac = parts_[3];
  auto& up = parts_[4];
  const auto states = static_cast<std::uint32_t>(size_);
  for (std::uint32_t s = 0; s < states; ++s) {
    for (const Edge& e : g.field_edges()) {
      if (space.eta(s, e.a) != space.eta(s, e.b)) {
        field.push_back({s, s ^ space.eta_bit(e.a) ^ space.eta_bit(e.b), phys.d});
      }
    }
    for (const Edge& e : g.road_edges()) {
      if (space.xi(s, e.a) != space.xi(s, e.b)) {
        road.push_back({s, s ^ space.xi_bit(e.a) ^ space.xi_bit(e.b), phys.D});
      }
    }
    for (std::size_t i = 0; i < g.road_size(); ++i) {
      const std::size_t low = g.lower_site(i);
      if (space.eta(s, low) != space.xi(s, i)) {
        robin.push_back({s, s ^ space.eta_bit(low), phys.alpha});
        reac.push_back({s, s ^ space.xi_bit(i), phys.alpha});
      }
      const std::size_t top = g.upper_site(i);
      const double rate = space.eta(s, top) ? 1.0 - phys.b : phys.b;
      if (rate > 0.0) up.push_back({s, s ^ space.eta_bit(top), rate});
    }
  }
}

namespace {
void add_part(std::vector<Eigen::Triplet<double>>& trips, const std::vector<Transition>& part, double scale) {
  for (const Transition& tr : part) {
    trips.emplace_back(tr.from, tr.to, scale * tr.rate);
    trips.emplace_back(tr.from, tr.from, -scale * tr.rate);
  }
}
}  // namespace

Eigen::SparseMatrix<double, Eigen::RowMajor> GeneratorMatrix::sparse() const {
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t p = 0; p < kNumGeneratorParts; ++p) add_part(trips, parts_[p], prefactor_[p]);
  Eigen::SparseMatrix<double, Eigen::RowMajor> m(static_cast<Eigen::Index>(size_), static_cast<Eigen::Index>(size_));
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> GeneratorMatrix::sparse(GeneratorPart part, bool scaled) const {
  const auto p = static_cast<std::size_t>(part);
  std::vector<Eigen::Triplet<double>> trips;
  add_part(trips, parts_[p], scaled ? prefactor_[p] : 1.0);
  Eigen::SparseMatrix<double, Eigen::RowMajor> m(static_cast<Eigen::Index>(size_), static_cast<Eigen::Index>(size_));
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

Eigen::MatrixXd GeneratorMatrix::dense() const {
  if (size_ > kDenseCap) throw StateCapExceeded("dense generator limited to " + std::to_string(kDenseCap) + " states");
  return Eigen::MatrixXd(sparse());
}

Eigen::MatrixXd GeneratorMatrix::dense(GeneratorPart part, bool scaled) const {
  if (size_ > kDenseCap) throw StateCapExceeded("dense generator limited to " + std::to_string(kDenseCap) + " states");
  return Eigen::MatrixXd(sparse(part, scaled));
}

double GeneratorMatrix::max_exit_rate() const {
  std::vector<double> exit(size_, 0.0);
  for (std::size_t p = 0; p < kNumGeneratorParts; ++p) {
    for (const Transition& tr : parts_[p]) exit[tr.from] += prefactor_[p] * tr.rate;
  }
  return exit.empty() ? 0.0 : *std::max_element(exit.begin(), exit.end());
}

double GeneratorMatrix::max_row_sum() const {
  const auto m = sparse();
  double worst = 0.0;
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    double s = 0.0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(m, r); it; ++it) s += it.value();
    worst = std::max(worst, std::abs(s));
  }
  return worst;
}

GeneratorMatrix build_generator_matrix(const StateSpace& space, const PhysicalParams& phys) {
  return GeneratorMatrix(space, phys);
}

// ---- forward equation ----

namespace {

MeasureVector uniformized_exp(const GeneratorMatrix& Q, const MeasureVector& mu0, double t) {
  const double lambda = Q.max_exit_rate();
  if (lambda == 0.0 || t == 0.0) return mu0;
  const Eigen::SparseMatrix<double> qt = Eigen::SparseMatrix<double>(Q.sparse()).transpose();
  // Chunks keep exp(-lambda dt) far from underflow.
  const int chunks = std::max(1, static_cast<int>(std::ceil(lambda * t / 30.0)));
  const double rate = lambda * t / chunks;
  MeasureVector mu = mu0;
  for (int c = 0; c < chunks; ++c) {
    MeasureVector term = mu;
    double weight = std::exp(-rate);
    double mass = weight;
    MeasureVector out = weight * term;
    int k = 0;
    while (1.0 - mass > 1e-17 || k < rate) {
      ++k;
      if (k > 100000) throw ExpNonConvergence("uniformization series did not converge");
      term += (qt * term) / lambda;
      weight *= rate / k;
      mass += weight;
      out += weight * term;
      if (weight < 1e-300 && k > rate) break;
    }
    mu = out;
  }
  return mu;
}

}  // namespace

ForwardResult forward_solve(const GeneratorMatrix& Q, const MeasureVector& mu0, double t, ExpMethod method) {
  if (!(t >= 0.0)) throw std::invalid_argument("forward_solve needs t >= 0");
  if (static_cast<std::size_t>(mu0.size()) != Q.size()) throw std::invalid_argument("measure has the wrong length");
  ForwardResult r;
  if (t == 0.0) {
    r.mu = mu0;
    return r;
  }
  if (method == ExpMethod::kAuto) {
    method = Q.size() <= GeneratorMatrix::kDenseCap ? ExpMethod::kPade : ExpMethod::kUniformization;
  }
  if (method == ExpMethod::kPade) {
    const Eigen::MatrixXd e = (t * Q.dense()).exp();
    if (!e.allFinite()) throw ExpNonConvergence("matrix exponential produced non-finite entries");
    r.mu = e.transpose() * mu0;
  } else {
    r.mu = uniformized_exp(Q, mu0, t);
  }
  r.mu = r.mu.cwiseMax(0.0);
  const double total = r.mu.sum();
  r.mass_drift = std::abs(total - 1.0);
  r.flagged = r.mass_drift > 1e-9;
  r.mu /= total;
  return r;
}

MeasureVector dirac_measure(const StateSpace& space, std::uint32_t state) {
  if (state >= space.size()) throw std::out_of_range("state index out of range");
  MeasureVector m = MeasureVector::Zero(static_cast<Eigen::Index>(space.size()));
  m[state] = 1.0;
  return m;
}

MeasureVector bernoulli_measure(const StateSpace& space, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("Bernoulli parameter must lie in (0,1)");
  const int n = space.bits();
  // Log space keeps the all-ones mass equal to exp(n log gamma) bit-for-bit.
  const double lg = std::log(gamma);
  const double lq = std::log1p(-gamma);
  std::vector<double> by_count(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) by_count[static_cast<std::size_t>(k)] = std::exp(k * lg + (n - k) * lq);
  MeasureVector m(static_cast<Eigen::Index>(space.size()));
  for (std::size_t s = 0; s < space.size(); ++s) {
    m[static_cast<Eigen::Index>(s)] = by_count[static_cast<std::size_t>(std::popcount(static_cast<std::uint32_t>(s)))];
  }
  return m;
}

double relative_entropy(const MeasureVector& mu, const MeasureVector& nu) {
  if (mu.size() != nu.size()) throw std::invalid_argument("measures have different lengths");
  double h = 0.0;
  for (Eigen::Index s = 0; s < nu.size(); ++s) {
    if (!(nu[s] > 0.0)) throw std::invalid_argument("reference measure has a zero entry");
    if (mu[s] > 0.0) h += mu[s] * (std::log(mu[s]) - std::log(nu[s]));
  }
  return h;
}

double entropy_constant(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("Bernoulli parameter must lie in (0,1)");
  return -std::log(std::min(gamma, 1.0 - gamma));
}

// ---- Dirichlet forms ----

DirichletReport dirichlet_forms(const GeneratorMatrix& Q, const Eigen::VectorXd& f, const MeasureVector& nu) {
  if (static_cast<std::size_t>(f.size()) != Q.size() || nu.size() != f.size()) {
    throw std::invalid_argument("function and measure must match the state space");
  }
  if ((f.array() < 0.0).any()) throw std::invalid_argument("f must be non-negative");
  const Eigen::VectorXd g = f.cwiseSqrt();
  DirichletReport r;
  for (std::size_t p = 0; p < kNumGeneratorParts; ++p) {
    double lgg = 0.0;
    double i = 0.0;
    for (const Transition& tr : Q.transitions(static_cast<GeneratorPart>(p))) {
      const double diff = g[tr.to] - g[tr.from];
      lgg += nu[tr.from] * g[tr.from] * tr.rate * diff;
      i += nu[tr.from] * tr.rate * diff * diff;
    }
    r.D[p] = -lgg;
    r.I[p] = i;
  }
  return r;
}

double exchange_defect(const GeneratorMatrix& Q, GeneratorPart part, const Eigen::VectorXd& f,
                       const MeasureVector& nu) {
  double s = 0.0;
  for (const Transition& tr : Q.transitions(part)) s += nu[tr.from] * tr.rate * (f[tr.to] - f[tr.from]);
  return 0.5 * s;
}

Eigen::VectorXd random_density(const MeasureVector& nu, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd f(nu.size());
  for (Eigen::Index s = 0; s < f.size(); ++s) f[s] = std::exp(rng.normal());
  return f / nu.dot(f);
}

namespace {
double rel_dev(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}
}  // namespace

LemmaReport check_lemma_identities(const StateSpace& space, const PhysicalParams& phys, double gamma, int trials,
                                   std::uint64_t seed, double tol) {
  const GeneratorMatrix Q(space, phys);
  const MeasureVector nu = bernoulli_measure(space, gamma);
  LemmaReport rep;
  rep.gamma = gamma;
  rep.b = phys.b;
  rep.trials = trials;
  const bool up_asserted = gamma == phys.b;
  rep.checks = {{"field", true},
                {"road", true},
                {"robin_defect", true},
                {"reaction_defect", true},
                {"reservoir", up_asserted}};
  const double ratio = std::max(gamma / (1.0 - gamma), (1.0 - gamma) / gamma);
  rep.bound_c = 0.5 * (1.0 + ratio);
  const double scale = phys.alpha * std::pow(space.geom().scale(), space.geom().dim() - 1);

  for (int k = 0; k < trials; ++k) {
    const std::uint64_t s = child_seed(seed, static_cast<std::uint64_t>(k));
    const Eigen::VectorXd f = random_density(nu, s);
    const DirichletReport d = dirichlet_forms(Q, f, nu);
    // <L^P sqrt f, sqrt f> = -D^P(sqrt f); the reversible parts equal -I^P / 2.
    const double eps_rob = -d.D[2] + 0.5 * d.I[2];
    const double eps_reac = -d.D[3] + 0.5 * d.I[3];
    const std::array<double, 5> dev = {
        rel_dev(-d.D[0], -0.5 * d.I[0]),
        rel_dev(-d.D[1], -0.5 * d.I[1]),
        rel_dev(eps_rob, exchange_defect(Q, GeneratorPart::kRobin, f, nu)),
        rel_dev(eps_reac, exchange_defect(Q, GeneratorPart::kReaction, f, nu)),
        rel_dev(-d.D[4], -0.5 * d.I[4]),
    };
    for (std::size_t c = 0; c < dev.size(); ++c) {
      if (dev[c] > rep.checks[c].max_deviation) {
        rep.checks[c].max_deviation = dev[c];
        rep.checks[c].worst_seed = s;
      }
    }
    rep.max_eps_robin = std::max(rep.max_eps_robin, std::abs(eps_rob));
    rep.max_eps_reaction = std::max(rep.max_eps_reaction, std::abs(eps_reac));
  }
  rep.fitted_c = std::max(rep.max_eps_robin, rep.max_eps_reaction) / scale;
  for (IdentityCheck& c : rep.checks) {
    c.pass = !c.asserted || c.max_deviation <= tol;
    if (!c.pass) rep.pass = false;
  }
  IdentityCheck bound{"exchange_bound", true, rep.fitted_c / rep.bound_c, 0, rep.fitted_c <= rep.bound_c};
  if (!bound.pass) rep.pass = false;
  rep.checks.push_back(bound);
  return rep;
}

std::string to_json(const LemmaReport& report) {
  nlohmann::ordered_json j;
  j["gamma"] = report.gamma;
  j["b"] = report.b;
  j["trials"] = report.trials;
  j["max_eps_robin"] = report.max_eps_robin;
  j["max_eps_reaction"] = report.max_eps_reaction;
  j["fitted_c"] = report.fitted_c;
  j["bound_c"] = report.bound_c;
  j["pass"] = report.pass;
  auto& checks = j["identities"] = nlohmann::ordered_json::array();
  for (const IdentityCheck& c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"asserted", c.asserted},
                      {"max_deviation", c.max_deviation},
                      {"worst_seed", c.worst_seed},
                      {"pass", c.pass}});
  }
  return j.dump(2);
}

}  // namespace fieldroad
