#include <bit>
#include <cmath>
#include <memory>

#include "doctest.h"
#include "fieldroad/generator_exact.hpp"

using namespace fieldroad;

namespace {

std::shared_ptr<const LatticeGeom> geom(int p, int N) { return std::make_shared<const LatticeGeom>(p, N); }

PhysicalParams phys(double b = 0.5) {
  PhysicalParams ph;
  ph.d = 0.7;
  ph.D = 1.3;
  ph.alpha = 0.9;
  ph.b = b;
  return ph;
}

std::size_t count_from(const GeneratorMatrix& Q, std::uint32_t state) {
  std::size_t n = 0;
  for (std::size_t p = 0; p < kNumGeneratorParts; ++p) {
    for (const Transition& t : Q.transitions(static_cast<GeneratorPart>(p))) n += t.from == state;
  }
  return n;
}

}  // namespace

TEST_CASE("state space sizes and cap") {
  CHECK(enumerate_states(geom(2, 3)).size() == 512);
  CHECK(enumerate_states(geom(2, 4)).size() == 65536);
  CHECK_THROWS_AS(enumerate_states(geom(3, 3)), StateCapExceeded);
  CHECK_THROWS_AS(enumerate_states(geom(2, 4), 1000), StateCapExceeded);
}

TEST_CASE("encode and decode are inverse") {
  const StateSpace sp = enumerate_states(geom(2, 3));
  for (std::uint32_t s = 0; s < sp.size(); ++s) CHECK(sp.encode(sp.decode(s)) == s);
  CHECK(sp.encode(Configuration::empty(sp.geom())) == 0);
  CHECK(sp.encode(Configuration::filled(sp.geom())) == sp.size() - 1);
  Configuration c = Configuration::empty(sp.geom());
  c.xi[1] = 1;
  CHECK(sp.encode(c) == sp.xi_bit(1));
}

TEST_CASE("generator structure") {
  const StateSpace sp = enumerate_states(geom(2, 3));
  const GeneratorMatrix Q(sp, phys(0.3));
  CHECK(Q.max_row_sum() <= 1e-12);
  CHECK(Q.prefactor(GeneratorPart::kField) == 9.0);
  CHECK(Q.prefactor(GeneratorPart::kRoad) == 9.0);
  CHECK(Q.prefactor(GeneratorPart::kRobin) == 3.0);
  CHECK(Q.prefactor(GeneratorPart::kReaction) == 1.0);
  CHECK(Q.prefactor(GeneratorPart::kReservoir) == 1.0);

  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(512, 512);
  for (std::size_t p = 0; p < kNumGeneratorParts; ++p) sum += Q.dense(static_cast<GeneratorPart>(p), true);
  CHECK((sum - Q.dense()).cwiseAbs().maxCoeff() <= 1e-12);
  for (std::size_t p = 0; p < kNumGeneratorParts; ++p) {
    const Eigen::MatrixXd part = Q.dense(static_cast<GeneratorPart>(p), false);
    CHECK(part.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12);
  }

  // filled and empty states only move through the reservoir at the three upper sites
  CHECK(count_from(Q, sp.size() - 1) == 3);
  CHECK(count_from(Q, 0) == 3);
  for (const Transition& t : Q.transitions(GeneratorPart::kReservoir)) {
    CHECK(std::popcount(t.from ^ t.to) == 1);
  }
  CHECK(Q.max_exit_rate() > 0.0);
}

TEST_CASE("forward solve") {
  const StateSpace sp = enumerate_states(geom(2, 3));
  const GeneratorMatrix Q(sp, phys(0.3));
  const MeasureVector mu0 = dirac_measure(sp, 0b101100110);
  const ForwardResult at0 = forward_solve(Q, mu0, 0.0);
  CHECK((at0.mu - mu0).cwiseAbs().maxCoeff() == 0.0);

  for (double t : {0.01, 0.1, 0.5}) {
    const ForwardResult pade = forward_solve(Q, mu0, t, ExpMethod::kPade);
    const ForwardResult unif = forward_solve(Q, mu0, t, ExpMethod::kUniformization);
    CHECK((pade.mu - unif.mu).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(pade.mu.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pade.mu.minCoeff() >= -1e-12);
    CHECK_FALSE(pade.flagged);
  }
  CHECK_THROWS(forward_solve(Q, mu0, -1.0));
}

TEST_CASE("Bernoulli measures and relative entropy") {
  const StateSpace sp = enumerate_states(geom(2, 3));
  const MeasureVector nu = bernoulli_measure(sp, 0.25);
  CHECK(nu.sum() == doctest::Approx(1.0));
  CHECK(nu[0] == doctest::Approx(std::pow(0.75, 9)));
  CHECK(nu[sp.size() - 1] == doctest::Approx(std::pow(0.25, 9)));
  CHECK(nu[0b11] == doctest::Approx(0.25 * 0.25 * std::pow(0.75, 7)));
  CHECK_THROWS(bernoulli_measure(sp, 0.0));

  const MeasureVector half = bernoulli_measure(sp, 0.5);
  CHECK(relative_entropy(dirac_measure(sp, 17), half) == doctest::Approx(9 * std::log(2.0)));
  CHECK(relative_entropy(half, half) == 0.0);
  CHECK(relative_entropy(dirac_measure(sp, 0), nu) == doctest::Approx(-9 * std::log(0.75)));
  CHECK(entropy_constant(0.25) == doctest::Approx(std::log(4.0)));
  CHECK(entropy_constant(0.5) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("Dirichlet forms agree with dense part matrices") {
  const StateSpace sp = enumerate_states(geom(2, 3));
  const GeneratorMatrix Q(sp, phys(0.4));
  const MeasureVector nu = bernoulli_measure(sp, 0.3);
  const Eigen::VectorXd f = random_density(nu, 21);
  CHECK(nu.dot(f) == doctest::Approx(1.0));
  const DirichletReport r = dirichlet_forms(Q, f, nu);
  const Eigen::VectorXd g = f.cwiseSqrt();
  for (std::size_t p = 0; p < kNumGeneratorParts; ++p) {
    const Eigen::MatrixXd A = Q.dense(static_cast<GeneratorPart>(p), false);
    const double D = -g.dot(nu.asDiagonal() * (A * g));
    double I = 0.0;
    for (Eigen::Index s = 0; s < A.rows(); ++s) {
      for (Eigen::Index t = 0; t < A.cols(); ++t) {
        if (s != t && A(s, t) != 0.0) I += nu[s] * A(s, t) * std::pow(g[t] - g[s], 2);
      }
    }
    CHECK(r.D[p] == doctest::Approx(D).epsilon(1e-10));
    CHECK(r.I[p] == doctest::Approx(I).epsilon(1e-10));
    if (p == 2 || p == 3) {
      const double defect = 0.5 * nu.dot(A * f);
      CHECK(exchange_defect(Q, static_cast<GeneratorPart>(p), f, nu) == doctest::Approx(defect).epsilon(1e-10));
    }
  }

  const DirichletReport flat = dirichlet_forms(Q, Eigen::VectorXd::Ones(512), nu);
  for (std::size_t p = 0; p < kNumGeneratorParts; ++p) {
    CHECK(std::abs(flat.D[p]) <= 1e-14);
    CHECK(flat.I[p] == 0.0);
  }

  // f supported on eta = xi along the road: no exchange move starts inside the support
  Eigen::VectorXd h = Eigen::VectorXd::Zero(512);
  for (std::uint32_t s = 0; s < sp.size(); ++s) {
    bool agree = true;
    for (std::size_t i = 0; i < 3; ++i) agree = agree && sp.eta(s, sp.geom().lower_site(i)) == sp.xi(s, i);
    if (agree) h[s] = 1.0;
  }
  const DirichletReport on = dirichlet_forms(Q, h, nu);
  CHECK(on.D[2] == 0.0);
  CHECK(on.D[3] == 0.0);
  CHECK(exchange_defect(Q, GeneratorPart::kRobin, h, nu) == doctest::Approx(0.5 * on.I[2]));
  CHECK(exchange_defect(Q, GeneratorPart::kReaction, h, nu) == doctest::Approx(0.5 * on.I[3]));

  CHECK_THROWS(dirichlet_forms(Q, -Eigen::VectorXd::Ones(512), nu));
}

TEST_CASE("Dirichlet-form identity checks") {
  const StateSpace sp = enumerate_states(geom(2, 3));
  const LemmaReport at_b = check_lemma_identities(sp, phys(0.5), 0.5, 10, 3);
  CHECK(at_b.pass);
  for (const IdentityCheck& c : at_b.checks) CHECK(c.asserted);
  CHECK(at_b.fitted_c <= at_b.bound_c);
  CHECK(at_b.bound_c == doctest::Approx(1.0));

  const LemmaReport off = check_lemma_identities(sp, phys(0.5), 0.25, 10, 3);
  CHECK(off.pass);
  bool saw_reservoir = false;
  for (const IdentityCheck& c : off.checks) {
    if (c.name == "reservoir") {
      saw_reservoir = true;
      CHECK_FALSE(c.asserted);
      CHECK(c.max_deviation > 1e-6);
    }
  }
  CHECK(saw_reservoir);
  CHECK(off.bound_c == doctest::Approx(2.0));

  const std::string js = to_json(at_b);
  CHECK(js.find("\"fitted_c\"") != std::string::npos);
  CHECK(js.find("\"gamma\"") != std::string::npos);
}
