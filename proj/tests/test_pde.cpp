#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "fieldroad/pde.hpp"

using namespace fieldroad;

namespace {

constexpr double kPi = std::numbers::pi;

PdeParams params(int M, int p = 2) {
  PdeParams pr;
  pr.M = M;
  pr.p = p;
  return pr;
}

FieldProfile field_const(double c) {
  return [c](std::span<const double>, double) { return c; };
}
RoadProfile road_const(double c) {
  return [c](std::span<const double>) { return c; };
}

// Flux-form step for p = 2 with the field stored as v[j][i] (height j, position i).
void reference_step(std::vector<std::vector<double>>& v, std::vector<double>& u, const PdeParams& pr, double dt) {
  const int M = pr.M;
  const double h = 1.0 / M;
  const double kappa =
      pr.trace == TraceMode::kReconstructed ? pr.alpha / (1.0 + pr.alpha * h / (2.0 * pr.d)) : pr.alpha;
  auto nv = v;
  auto nu = u;
  for (int j = 0; j < M; ++j) {
    for (int i = 0; i < M; ++i) {
      double net = 0.0;  // sum of inflows across the four faces
      net += pr.d * (v[j][(i + 1) % M] - v[j][i]) / h;
      net += pr.d * (v[j][(i + M - 1) % M] - v[j][i]) / h;
      if (j + 1 < M) net += pr.d * (v[j + 1][i] - v[j][i]) / h;
      net += j > 0 ? pr.d * (v[j - 1][i] - v[j][i]) / h : kappa * (u[i] - v[0][i]);
      nv[j][i] += dt * net / h;
    }
  }
  for (int i = 0; i < M; ++i) {
    const double lap = (u[(i + 1) % M] + u[(i + M - 1) % M] - 2.0 * u[i]) / (h * h);
    nu[i] += dt * (pr.D * lap - kappa * (u[i] - v[0][i]));
  }
  v = nv;
  u = nu;
}

}  // namespace

TEST_CASE("stable time step") {
  CHECK(stable_dt(params(4)) == doctest::Approx(1.0 / 180.0));
  PdeParams big = params(4);
  big.D = 3.0;
  CHECK(stable_dt(big) == doctest::Approx(0.4 / 16.0 / (2.0 * 3.25)));
  CHECK_NOTHROW(check_cfl(params(16), stable_dt(params(16))));
  CHECK_THROWS_AS(check_cfl(params(16), 10.0 * stable_dt(params(16)) / 0.4), CflViolation);
  CHECK_THROWS(params(3).validate());
  CHECK_THROWS(params(8, 4).validate());
}

TEST_CASE("initial data range") {
  CHECK_THROWS_AS(init_pde(field_const(2.0), road_const(0.5), params(8)), ProfileRangeError);
  CHECK_THROWS_AS(init_pde(field_const(0.5), road_const(-0.1), params(8)), ProfileRangeError);
  CHECK_NOTHROW(sample_state(field_const(2.0), road_const(-1.0), params(8)));
}

TEST_CASE("constant state is a fixed point") {
  for (TraceMode mode : {TraceMode::kReconstructed, TraceMode::kBottomCell}) {
    PdeParams pr = params(8);
    pr.trace = mode;
    PdeState s = init_pde(field_const(0.3), road_const(0.3), pr);
    for (int k = 0; k < 50; ++k) s = pde_step(s);
    for (double x : s.v) CHECK(x == doctest::Approx(0.3).epsilon(1e-14));
    for (double x : s.u) CHECK(x == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(distance_to_flat(s) <= 1e-14);
  }
}

TEST_CASE("single step matches a flux-form reference") {
  for (TraceMode mode : {TraceMode::kReconstructed, TraceMode::kBottomCell}) {
    PdeParams pr = params(8);
    pr.d = 0.6;
    pr.D = 1.7;
    pr.alpha = 2.5;
    pr.trace = mode;
    const InitialProfile prof = cos_mode_profile(0.3, 0.2);
    PdeState s = init_pde(prof.field, prof.road, pr);
    std::vector<std::vector<double>> v(8, std::vector<double>(8));
    for (int j = 0; j < 8; ++j) {
      for (int i = 0; i < 8; ++i) v[j][i] = s.v[j * 8 + i];
    }
    std::vector<double> u = s.u;
    for (int k = 0; k < 5; ++k) {
      s = pde_step(s);
      reference_step(v, u, pr, s.dt);
    }
    for (int j = 0; j < 8; ++j) {
      for (int i = 0; i < 8; ++i) CHECK(s.v[j * 8 + i] == doctest::Approx(v[j][i]).epsilon(1e-13));
    }
    for (int i = 0; i < 8; ++i) CHECK(s.u[i] == doctest::Approx(u[i]).epsilon(1e-13));
    CHECK(bottom_trace(s, 0) ==
          doctest::Approx(mode == TraceMode::kBottomCell
                              ? s.v[0]
                              : s.v[0] + exchange_coefficient(pr) * (s.u[0] - s.v[0]) / (2.0 * 8 * pr.d)));
  }
}

TEST_CASE("mass conservation and maximum principle") {
  for (int p : {2, 3}) {
    const int M = p == 2 ? 16 : 6;
    const InitialProfile prof = step_profile(0.9, 0.1);
    const PdeState s0 = init_pde(prof.field, prof.road, params(M, p));
    const double m0 = total_mass(s0);
    PdeState s = s0;
    const int steps = p == 2 ? 10000 : 2000;
    for (int k = 0; k < steps; ++k) {
      s = pde_step(s);
      if (k % 97 == 0) {
        CHECK(*std::min_element(s.v.begin(), s.v.end()) >= 0.1 - 1e-14);
        CHECK(*std::max_element(s.u.begin(), s.u.end()) <= 0.9 + 1e-14);
      }
    }
    CHECK(std::abs(total_mass(s) - m0) <= 1e-10);
  }
  CHECK(total_mass(init_pde(field_const(0.25), road_const(0.25), params(8))) == doctest::Approx(0.5));
}

TEST_CASE("solve lands on snapshot times") {
  const PdeState s0 = init_pde(field_const(0.5), road_const(0.1), params(8));
  const double times[] = {0.0, 0.013, 0.05};
  const auto snaps = solve(s0, 0.05, times);
  REQUIRE(snaps.size() == 3);
  CHECK(snaps[0].time == 0.0);
  CHECK(snaps[0].v == s0.v);
  CHECK(snaps[1].time == 0.013);
  CHECK(snaps[2].time == 0.05);
  CHECK(solve(s0, 0.05, {}).size() == 1);
  CHECK(solve(s0, 0.0, {}).front().v == s0.v);
  const double unsorted[] = {0.02, 0.01};
  CHECK_THROWS(solve(s0, 0.05, unsorted));
  const double late[] = {0.1};
  CHECK_THROWS(solve(s0, 0.05, late));

  const auto all = solve_all_steps(s0, 0.02, 2);
  CHECK(all.front().time == 0.0);
  CHECK(all.back().time == doctest::Approx(0.02));
  CHECK_THROWS(solve_all_steps(s0, 0.02, 0));
}

TEST_CASE("interpolation") {
  PdeParams pr = params(8);
  const PdeState s = sample_state([](std::span<const double> x, double y) { return 2.0 + 3.0 * y + std::cos(2 * kPi * x[0]); },
                                  [](std::span<const double> x) { return std::sin(2 * kPi * x[0]); }, pr);
  const PdeGrid& g = *s.grid;
  for (std::size_t f = 0; f < g.layer; ++f) {
    for (int j = 0; j < 8; ++j) {
      CHECK(interpolate_field(s, g.x[f], g.y[j]) == doctest::Approx(s.v[j * 8 + f]));
    }
    CHECK(interpolate_road(s, g.x[f]) == doctest::Approx(s.u[f]));
  }
  // linear in y between centres, clamped beyond them
  const std::vector<double> x0 = g.x[2];
  CHECK(interpolate_field(s, x0, 0.5) == doctest::Approx(2.0 + 1.5 + std::cos(2 * kPi * x0[0])));
  CHECK(interpolate_field(s, x0, 0.0) == doctest::Approx(s.v[2]));
  CHECK(interpolate_field(s, x0, 1.0) == doctest::Approx(s.v[7 * 8 + 2]));
  // periodic in x: halfway between the last and first centre
  const std::vector<double> wrap{0.0};
  CHECK(interpolate_road(s, wrap) == doctest::Approx(0.5 * (s.u[0] + s.u[7])));
}

TEST_CASE("weak residual and duality trivial cases") {
  const PdeParams pr = params(16);
  const PdeState s0 = init_pde(field_const(0.4), road_const(0.4), pr);
  const double times[] = {0.0, 0.02, 0.04};
  const auto snaps = solve(s0, 0.04, times);
  const WeakResidual r = weak_residual(snaps, fourier_cosine_pair(2, {1}, 1, 1.0), 0.04);
  CHECK(std::abs(r.field) <= 1e-12);
  CHECK(std::abs(r.road) <= 1e-12);
  CHECK_THROWS(weak_residual(snaps, fourier_cosine_pair(2, {1}, 1, 1.0), 0.03));

  const PdeSources none;
  const DualityResult d = duality_check(field_const(0.4), road_const(0.2), none, 0.05, pr);
  CHECK(d.residual == 0.0);
  CHECK(d.source_pairing == 0.0);
  CHECK_THROWS(duality_check(field_const(0.4), road_const(0.2), none, 0.0, pr));
}

TEST_CASE("energy functional") {
  const PdeParams pr = params(16);
  const PdeState s0 = init_pde(field_const(0.6), road_const(0.6), pr);
  const auto snaps = solve_all_steps(s0, 0.05, 5);
  for (int q : {1, 2}) {
    const EnergyEstimate e = energy_functional(snaps, q, 8);
    CHECK(std::abs(e.lower_bound) <= 1e-12);
    CHECK(e.members == 8);
  }
  CHECK(energy_functional(snaps, 1, 0).lower_bound == -std::numeric_limits<double>::infinity());
  CHECK_THROWS(energy_functional(snaps, 0, 8));
  CHECK_THROWS(energy_functional(snaps, 3, 8));
  CHECK(energy_family(2, 32, 0.5).size() == 32);

  const EnergyCheck m = manufactured_energy_check(pr, 8, 0.5, 20);
  CHECK(m.cap == doctest::Approx(0.0225 * kPi * kPi * (1.0 - std::exp(-1.0))));
  CHECK(m.estimate.lower_bound >= m.estimate.best_single);
  CHECK(m.estimate.lower_bound > 0.0);
}
