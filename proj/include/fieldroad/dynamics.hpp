#ifndef FIELDROAD_DYNAMICS_HPP
#define FIELDROAD_DYNAMICS_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fieldroad/lattice.hpp"
#include "fieldroad/profiles.hpp"
#include "fieldroad/rng.hpp"

namespace fieldroad {

/// Occupation state: eta over bulk sites, xi over road sites, each entry 0 or 1.
struct Configuration {
  std::vector<std::uint8_t> eta;
  std::vector<std::uint8_t> xi;

  static Configuration empty(const LatticeGeom& geom);
  static Configuration filled(const LatticeGeom& geom);
  bool matches(const LatticeGeom& geom) const {
    return eta.size() == geom.bulk_size() && xi.size() == geom.road_size();
  }
  friend bool operator==(const Configuration&, const Configuration&) = default;
};

struct ParticleCounts {
  std::size_t field = 0;
  std::size_t road = 0;
  friend bool operator==(const ParticleCounts&, const ParticleCounts&) = default;
};

ParticleCounts total_particles(const Configuration& config);

/// Rates of the five mechanisms: field and road diffusivities, exchange rate, reservoir bias.
struct PhysicalParams {
  double d = 1.0;
  double D = 1.0;
  double alpha = 1.0;
  double b = 0.5;

  void validate() const;
};

class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Everything needed to run one trajectory. The geometry is immutable and shared.
struct SimParams {
  SimParams(PhysicalParams phys, std::shared_ptr<const LatticeGeom> geometry, double t_end, std::uint64_t seed,
            std::size_t event_cap = kDefaultEventCap);

  static constexpr std::size_t kDefaultEventCap = 100'000'000;

  PhysicalParams phys;
  std::shared_ptr<const LatticeGeom> geometry;
  double t_end;
  std::uint64_t seed;
  std::size_t event_cap;

  const LatticeGeom& geom() const { return *geometry; }
};

/// Mechanism of a transition; the numeric value is the event code used in CSV output.
enum class EventKind : std::uint8_t {
  kFieldSwap = 0,
  kRoadSwap = 1,
  kRobinFlip = 2,     // eta at a lower site, rate N alpha (eta - xi)^2
  kReactionFlip = 3,  // xi at a road site, rate alpha (eta - xi)^2
  kReservoirFlip = 4  // eta at an upper site, rate b (birth) or 1 - b (death)
};
inline constexpr std::size_t kNumEventKinds = 5;

/// location: field/road edge index for swaps, road index for Robin/reaction flips,
/// in-layer index of the upper site for reservoir flips.
struct Event {
  double time = 0.0;
  EventKind kind = EventKind::kFieldSwap;
  std::uint32_t location = 0;
  friend bool operator==(const Event&, const Event&) = default;
};

/// Piecewise-constant path: initial state plus every effective (state-changing) event.
struct TrajectoryRecord {
  Configuration initial;
  std::vector<Event> events;
  double final_time = 0.0;
  friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

/// Per-item Poisson bounds used by uniformization.
struct RateTable {
  std::array<double, kNumEventKinds> per_item{};
  std::array<std::size_t, kNumEventKinds> counts{};
  std::array<double, kNumEventKinds> totals{};
  double total = 0.0;
};

RateTable uniformized_rates(const SimParams& params);

/// Applies an effective event in place. Throws if the event would be a null move
/// (swap of equal values, exchange flip without mismatch).
void apply_event(Configuration& config, const Event& event, const LatticeGeom& geom);

/// Thinning decision for a candidate drawn from category `kind`, item `index`.
/// Returns the event (time unset) when the candidate changes the state. `accept_u`
/// in [0,1) is only consulted for reservoir candidates with b != 1/2.
std::optional<Event> resolve_candidate(const Configuration& config, const SimParams& params, EventKind kind,
                                       std::size_t index, double accept_u);

struct StepResult {
  double time = 0.0;
  std::optional<Event> event;  // empty for a null event
};

/// One uniformized step from `clock`: exponential holding time at the total bound,
/// category and item drawn proportionally to their bounds, then thinning. The config
/// is updated in place when the step is effective.
StepResult step(Configuration& config, double clock, const SimParams& params, const RateTable& rates, Rng& rng);

/// Receives a trajectory as it is generated or replayed.
class TrajectoryObserver {
 public:
  virtual ~TrajectoryObserver() = default;
  virtual void on_start(const Configuration& /*initial*/, double /*t0*/) {}
  virtual void on_event(const Event& /*event*/) {}
  virtual void on_finish(double /*final_time*/) {}
};

/// Forwards every callback to several observers in order.
class ObserverFanout : public TrajectoryObserver {
 public:
  explicit ObserverFanout(std::vector<TrajectoryObserver*> targets) : targets_(std::move(targets)) {}
  void on_start(const Configuration& initial, double t0) override {
    for (auto* t : targets_) t->on_start(initial, t0);
  }
  void on_event(const Event& event) override {
    for (auto* t : targets_) t->on_event(event);
  }
  void on_finish(double final_time) override {
    for (auto* t : targets_) t->on_finish(final_time);
  }

 private:
  std::vector<TrajectoryObserver*> targets_;
};

struct SimulateOptions {
  bool record_events = true;
  TrajectoryObserver* observer = nullptr;
};

struct SimulationResult {
  TrajectoryRecord record;
  std::vector<Configuration> snapshots;  // one per observation time
  std::size_t steps = 0;                 // uniformization steps including null events
};

class TrajectoryTooLong : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact simulation of the process on [0, t_end] with the RNG seeded from params.seed.
SimulationResult simulate(const SimParams& params, const Configuration& init, std::span<const double> observation_times,
                          const SimulateOptions& options = {});

/// Feeds a recorded trajectory to an observer.
void replay(const TrajectoryRecord& record, const LatticeGeom& geom, TrajectoryObserver& observer);

/// State of a recorded trajectory at time t.
Configuration state_at(const TrajectoryRecord& record, const LatticeGeom& geom, double t);

/// Checks ordering of event times and that every event is effective when replayed.
void validate_record(const TrajectoryRecord& record, const LatticeGeom& geom);

/// Independent Bernoulli occupations with P[eta(i)=1] = v0(i/N), P[xi(i)=1] = u0(i/N).
Configuration sample_initial(const FieldProfile& v0, const RoadProfile& u0, const LatticeGeom& geom, Rng& rng);

void write_snapshot_csv(std::ostream& out, const Configuration& config);
void write_snapshot_binary(std::ostream& out, const Configuration& config, const LatticeGeom& geom);
Configuration read_snapshot_binary(std::istream& in, const LatticeGeom& geom);
void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& record);

}  // namespace fieldroad

#endif  // FIELDROAD_DYNAMICS_HPP
