#include <cmath>
#include <memory>
#include <sstream>

#include "doctest.h"
#include "fieldroad/dynamics.hpp"

using namespace fieldroad;

namespace {

std::shared_ptr<const LatticeGeom> geom(int p, int N) { return std::make_shared<const LatticeGeom>(p, N); }

PhysicalParams unit_phys(double b = 0.5) {
  PhysicalParams ph;
  ph.b = b;
  return ph;
}

// First effective event from `init`, drawn by repeated uniformized steps.
Event first_effective(const Configuration& init, const SimParams& params) {
  Configuration c = init;
  Rng rng(params.seed);
  const RateTable rates = uniformized_rates(params);
  double clock = 0.0;
  for (int k = 0; k < 100000; ++k) {
    const StepResult r = step(c, clock, params, rates, rng);
    clock = r.time;
    if (r.event) return *r.event;
  }
  FAIL("no effective event");
  return {};
}

}  // namespace

TEST_CASE("uniformized rate table") {
  const SimParams sp(unit_phys(), geom(2, 4), 1.0, 1);
  const RateTable r = uniformized_rates(sp);
  CHECK(r.total == doctest::Approx(16.0 * 20 + 16.0 * 4 + 4.0 * 4 + 4 + 4 * 0.5));
  CHECK(r.total == doctest::Approx(406.0));
  CHECK(r.per_item[0] == doctest::Approx(16.0));
  CHECK(r.per_item[1] == doctest::Approx(16.0));
  CHECK(r.per_item[2] == doctest::Approx(4.0));
  CHECK(r.per_item[3] == doctest::Approx(1.0));
  CHECK(r.per_item[4] == doctest::Approx(0.5));

  const SimParams s0(unit_phys(0.0), geom(2, 4), 1.0, 1);
  CHECK(uniformized_rates(s0).per_item[4] == doctest::Approx(1.0));

  PhysicalParams bad = unit_phys();
  bad.alpha = 0.0;
  CHECK_THROWS_AS(SimParams(bad, geom(2, 4), 1.0, 1), ParameterError);
  bad = unit_phys(1.5);
  CHECK_THROWS_AS(SimParams(bad, geom(2, 4), 1.0, 1), ParameterError);
}

TEST_CASE("empty configuration only admits reservoir births") {
  const auto g = geom(2, 5);
  const SimParams sp(unit_phys(0.3), g, 1.0, 42);
  const Configuration empty = Configuration::empty(*g);
  for (std::size_t e = 0; e < g->field_edges().size(); ++e) {
    CHECK_FALSE(resolve_candidate(empty, sp, EventKind::kFieldSwap, e, 0.0));
  }
  for (std::size_t i = 0; i < g->road_size(); ++i) {
    CHECK_FALSE(resolve_candidate(empty, sp, EventKind::kRobinFlip, i, 0.0));
    CHECK_FALSE(resolve_candidate(empty, sp, EventKind::kReactionFlip, i, 0.0));
  }
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const SimParams s(unit_phys(0.3), g, 1.0, seed);
    const Event ev = first_effective(empty, s);
    CHECK(ev.kind == EventKind::kReservoirFlip);
    Configuration c = empty;
    apply_event(c, ev, *g);
    CHECK(total_particles(c) == ParticleCounts{1, 0});
    CHECK(c.eta[g->upper_site(ev.location)] == 1);
  }
}

TEST_CASE("all-ones configuration: swaps and exchanges are null, kills come first") {
  const auto g = geom(2, 4);
  const SimParams sp(unit_phys(0.25), g, 1.0, 3);
  const Configuration full = Configuration::filled(*g);
  for (std::size_t e = 0; e < g->field_edges().size(); ++e) {
    CHECK_FALSE(resolve_candidate(full, sp, EventKind::kFieldSwap, e, 0.0));
  }
  for (std::size_t e = 0; e < g->road_edges().size(); ++e) {
    CHECK_FALSE(resolve_candidate(full, sp, EventKind::kRoadSwap, e, 0.0));
  }
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const SimParams s(unit_phys(0.25), g, 1.0, seed);
    const Event ev = first_effective(full, s);
    CHECK(ev.kind == EventKind::kReservoirFlip);
  }
  Configuration c = full;
  CHECK_THROWS_AS(apply_event(c, Event{0.0, EventKind::kFieldSwap, 0}, *g), std::logic_error);
}

TEST_CASE("reservoir thinning acceptance") {
  const auto g = geom(2, 4);
  const SimParams sp(unit_phys(0.25), g, 1.0, 1);
  const Configuration empty = Configuration::empty(*g);
  // birth rate b = 1/4 against the bound 3/4: accepted iff u < 1/3
  CHECK(resolve_candidate(empty, sp, EventKind::kReservoirFlip, 0, 0.3));
  CHECK_FALSE(resolve_candidate(empty, sp, EventKind::kReservoirFlip, 0, 0.34));
  const Configuration full = Configuration::filled(*g);
  CHECK(resolve_candidate(full, sp, EventKind::kReservoirFlip, 0, 0.999));
}

TEST_CASE("simulate edge cases") {
  const auto g = geom(2, 6);
  Rng rng(5);
  const Configuration init = sample_initial([](auto, double) { return 0.5; }, [](auto) { return 0.5; }, *g, rng);

  const SimParams zero(unit_phys(), g, 0.0, 9);
  const double t0[] = {0.0};
  const auto r0 = simulate(zero, init, t0);
  CHECK(r0.record.events.empty());
  CHECK(r0.snapshots.at(0) == init);

  const SimParams sp(unit_phys(), g, 0.1, 9);
  const double bad[] = {0.05, 0.01};
  CHECK_THROWS_AS(simulate(sp, init, bad), ParameterError);
  const double late[] = {0.2};
  CHECK_THROWS_AS(simulate(sp, init, late), ParameterError);

  const SimParams capped(unit_phys(), g, 1.0, 9, 10);
  CHECK_THROWS_WITH_AS(simulate(capped, init, {}), doctest::Contains("trajectory too long; raise cap or shrink T/N"),
                       TrajectoryTooLong);
}

TEST_CASE("determinism and replay") {
  const auto g = geom(2, 8);
  Rng rng(1);
  const Configuration init = sample_initial([](auto, double y) { return y; }, [](auto) { return 0.2; }, *g, rng);
  const SimParams sp(unit_phys(0.7), g, 0.05, 1234);
  const double obs[] = {0.0, 0.01, 0.03, 0.05};
  const auto a = simulate(sp, init, obs);
  const auto b = simulate(sp, init, obs);
  CHECK(a.record == b.record);
  CHECK(a.snapshots == b.snapshots);
  CHECK(!a.record.events.empty());

  const SimParams other(unit_phys(0.7), g, 0.05, 1235);
  CHECK_FALSE(simulate(other, init, obs).record == a.record);

  validate_record(a.record, *g);
  for (std::size_t k = 0; k < std::size(obs); ++k) CHECK(state_at(a.record, *g, obs[k]) == a.snapshots[k]);
  for (std::size_t k = 1; k < a.record.events.size(); ++k) CHECK(a.record.events[k].time > a.record.events[k - 1].time);
}

TEST_CASE("birth-only reservoir saturates the upper layer") {
  const auto g = geom(2, 4);
  const SimParams sp(unit_phys(1.0), g, 30.0, 77);
  const double obs[] = {30.0};
  const auto r = simulate(sp, Configuration::empty(*g), obs);
  for (std::size_t i = 0; i < g->road_size(); ++i) CHECK(r.snapshots[0].eta[g->upper_site(i)] == 1);
}

TEST_CASE("initial sampling") {
  const auto g = geom(2, 64);
  Rng rng(11);
  CHECK(sample_initial([](auto, double) { return 1.0; }, [](auto) { return 1.0; }, *g, rng) ==
        Configuration::filled(*g));
  CHECK(sample_initial([](auto, double) { return 0.0; }, [](auto) { return 0.0; }, *g, rng) ==
        Configuration::empty(*g));
  const Configuration half = sample_initial([](auto, double) { return 0.5; }, [](auto) { return 0.5; }, *g, rng);
  const double frac = static_cast<double>(total_particles(half).field) / static_cast<double>(g->bulk_size());
  CHECK(std::abs(frac - 0.5) <= 3.0 * std::sqrt(0.25 / static_cast<double>(g->bulk_size())));
  CHECK_THROWS_AS(sample_initial([](auto, double) { return 2.0; }, [](auto) { return 0.5; }, *g, rng),
                  ProfileRangeError);
}

TEST_CASE("particle counts") {
  const auto g = geom(2, 4);
  CHECK(total_particles(Configuration::empty(*g)) == ParticleCounts{0, 0});
  CHECK(total_particles(Configuration::filled(*g)) == ParticleCounts{12, 4});
}

TEST_CASE("snapshot and trajectory export") {
  const auto g = geom(2, 5);
  Rng rng(2);
  const Configuration c = sample_initial([](auto, double) { return 0.5; }, [](auto) { return 0.5; }, *g, rng);
  std::stringstream bin;
  write_snapshot_binary(bin, c, *g);
  CHECK(read_snapshot_binary(bin, *g) == c);
  std::stringstream wrong;
  write_snapshot_binary(wrong, c, *g);
  CHECK_THROWS(read_snapshot_binary(wrong, LatticeGeom(2, 6)));

  std::ostringstream csv;
  write_snapshot_csv(csv, c);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "layer,site,occupancy");
  std::size_t rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == g->bulk_size() + g->road_size());

  const SimParams sp(unit_phys(), g, 0.01, 3);
  const auto r = simulate(sp, c, {});
  std::ostringstream traj;
  write_trajectory_csv(traj, r.record);
  CHECK(traj.str().rfind("time,event_code,location\n", 0) == 0);
}
