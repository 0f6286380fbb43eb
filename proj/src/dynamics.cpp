#include "fieldroad/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "fieldroad/output.hpp"

namespace fieldroad {

namespace {

constexpr std::size_t idx(EventKind k) { return static_cast<std::size_t>(k); }

// Compensated running sum for the simulation clock.
class KahanClock {
 public:
  double value() const { return sum_; }
  double peek(double dt) const { return sum_ + (dt - comp_); }
  void add(double dt) {
    const double y = dt - comp_;
    const double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

void flip(std::uint8_t& bit) { bit = static_cast<std::uint8_t>(bit ^ 1U); }

}  // namespace

Configuration Configuration::empty(const LatticeGeom& geom) {
  return {std::vector<std::uint8_t>(geom.bulk_size(), 0), std::vector<std::uint8_t>(geom.road_size(), 0)};
}

Configuration Configuration::filled(const LatticeGeom& geom) {
  return {std::vector<std::uint8_t>(geom.bulk_size(), 1), std::vector<std::uint8_t>(geom.road_size(), 1)};
}

ParticleCounts total_particles(const Configuration& config) {
  ParticleCounts c;
  for (auto v : config.eta) c.field += v;
  for (auto v : config.xi) c.road += v;
  return c;
}

void PhysicalParams::validate() const {
  if (!(d > 0.0)) throw ParameterError("field diffusivity d must be positive");
  if (!(D > 0.0)) throw ParameterError("road diffusivity D must be positive");
  if (!(alpha > 0.0)) throw ParameterError("exchange rate alpha must be positive");
  if (!(b >= 0.0 && b <= 1.0)) throw ParameterError("reservoir parameter b must lie in [0,1]");
}

SimParams::SimParams(PhysicalParams phys_in, std::shared_ptr<const LatticeGeom> geometry_in, double t_end_in,
                     std::uint64_t seed_in, std::size_t event_cap_in)
    : phys(phys_in), geometry(std::move(geometry_in)), t_end(t_end_in), seed(seed_in), event_cap(event_cap_in) {
  phys.validate();
  if (!geometry) throw ParameterError("simulation parameters need a geometry");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ParameterError("time horizon must be finite and non-negative");
}

RateTable uniformized_rates(const SimParams& params) {
  const LatticeGeom& g = params.geom();
  const double n = g.scale();
  const PhysicalParams& ph = params.phys;
  RateTable r;
  // d/2 per ordered pair = d per unordered edge, accelerated by N^2.
  r.per_item[idx(EventKind::kFieldSwap)] = n * n * ph.d;
  r.per_item[idx(EventKind::kRoadSwap)] = n * n * ph.D;
  r.per_item[idx(EventKind::kRobinFlip)] = n * ph.alpha;
  r.per_item[idx(EventKind::kReactionFlip)] = ph.alpha;
  r.per_item[idx(EventKind::kReservoirFlip)] = std::max(ph.b, 1.0 - ph.b);
  r.counts[idx(EventKind::kFieldSwap)] = g.field_edges().size();
  r.counts[idx(EventKind::kRoadSwap)] = g.road_edges().size();
  r.counts[idx(EventKind::kRobinFlip)] = g.road_size();
  r.counts[idx(EventKind::kReactionFlip)] = g.road_size();
  r.counts[idx(EventKind::kReservoirFlip)] = g.layer_size();
  r.total = 0.0;
  for (std::size_t k = 0; k < kNumEventKinds; ++k) {
    r.totals[k] = r.per_item[k] * static_cast<double>(r.counts[k]);
    r.total += r.totals[k];
  }
  return r;
}

std::optional<Event> resolve_candidate(const Configuration& config, const SimParams& params, EventKind kind,
                                       std::size_t index, double accept_u) {
  const LatticeGeom& g = params.geom();
  const auto loc = static_cast<std::uint32_t>(index);
  switch (kind) {
    case EventKind::kFieldSwap: {
      const Edge e = g.field_edges()[index];
      if (config.eta[e.a] == config.eta[e.b]) return std::nullopt;
      break;
    }
    case EventKind::kRoadSwap: {
      const Edge e = g.road_edges()[index];
      if (config.xi[e.a] == config.xi[e.b]) return std::nullopt;
      break;
    }
    case EventKind::kRobinFlip:
    case EventKind::kReactionFlip:
      if (config.eta[g.lower_site(index)] == config.xi[index]) return std::nullopt;
      break;
    case EventKind::kReservoirFlip: {
      const double b = params.phys.b;
      const double actual = config.eta[g.upper_site(index)] ? 1.0 - b : b;
      const double bound = std::max(b, 1.0 - b);
      if (actual < bound && !(accept_u * bound < actual)) return std::nullopt;
      break;
    }
  }
  return Event{0.0, kind, loc};
}

void apply_event(Configuration& config, const Event& event, const LatticeGeom& geom) {
  switch (event.kind) {
    case EventKind::kFieldSwap: {
      if (event.location >= geom.field_edges().size()) throw std::out_of_range("field edge index out of range");
      const Edge e = geom.field_edges()[event.location];
      if (config.eta[e.a] == config.eta[e.b]) throw std::logic_error("field swap between equal occupations");
      flip(config.eta[e.a]);
      flip(config.eta[e.b]);
      return;
    }
    case EventKind::kRoadSwap: {
      if (event.location >= geom.road_edges().size()) throw std::out_of_range("road edge index out of range");
      const Edge e = geom.road_edges()[event.location];
      if (config.xi[e.a] == config.xi[e.b]) throw std::logic_error("road swap between equal occupations");
      flip(config.xi[e.a]);
      flip(config.xi[e.b]);
      return;
    }
    case EventKind::kRobinFlip:
    case EventKind::kReactionFlip: {
      if (event.location >= geom.road_size()) throw std::out_of_range("road site index out of range");
      std::uint8_t& eta = config.eta[geom.lower_site(event.location)];
      std::uint8_t& xi = config.xi[event.location];
      if (eta == xi) throw std::logic_error("exchange flip without field/road mismatch");
      flip(event.kind == EventKind::kRobinFlip ? eta : xi);
      return;
    }
    case EventKind::kReservoirFlip:
      if (event.location >= geom.layer_size()) throw std::out_of_range("upper site index out of range");
      flip(config.eta[geom.upper_site(event.location)]);
      return;
  }
  throw std::logic_error("unknown event kind");
}

namespace {

// Category/item selection and thinning shared by step() and simulate().
std::optional<Event> draw_candidate(Configuration& config, const SimParams& params, const RateTable& rates,
                                    Rng& rng) {
  double u = rng.uniform() * rates.total;
  std::size_t k = 0;
  for (; k + 1 < kNumEventKinds; ++k) {
    if (u < rates.totals[k]) break;
    u -= rates.totals[k];
  }
  while (rates.counts[k] == 0) --k;  // roundoff past the last non-empty category
  auto index = static_cast<std::size_t>(u / rates.per_item[k]);
  if (index >= rates.counts[k]) index = rates.counts[k] - 1;
  const auto kind = static_cast<EventKind>(k);
  double accept_u = 0.0;
  if (kind == EventKind::kReservoirFlip && params.phys.b != 0.5) accept_u = rng.uniform();
  auto ev = resolve_candidate(config, params, kind, index, accept_u);
  if (ev) apply_event(config, *ev, params.geom());
  return ev;
}

}  // namespace

StepResult step(Configuration& config, double clock, const SimParams& params, const RateTable& rates, Rng& rng) {
  StepResult r;
  r.time = clock + rng.exponential(rates.total);
  r.event = draw_candidate(config, params, rates, rng);
  if (r.event) r.event->time = r.time;
  return r;
}

SimulationResult simulate(const SimParams& params, const Configuration& init, std::span<const double> observation_times,
                          const SimulateOptions& options) {
  const LatticeGeom& g = params.geom();
  if (!init.matches(g)) throw ParameterError("initial configuration does not match the geometry");
  for (std::size_t k = 0; k < observation_times.size(); ++k) {
    const double t = observation_times[k];
    if (!(t >= 0.0 && t <= params.t_end)) throw ParameterError("observation time outside [0, t_end]");
    if (k > 0 && t < observation_times[k - 1]) throw ParameterError("observation times must be sorted");
  }

  SimulationResult result;
  result.record.initial = init;
  result.record.final_time = params.t_end;
  result.snapshots.reserve(observation_times.size());

  Configuration config = init;
  Rng rng(params.seed);
  const RateTable rates = uniformized_rates(params);
  KahanClock clock;
  std::size_t next_obs = 0;
  std::size_t effective = 0;
  if (options.observer) options.observer->on_start(config, 0.0);

  while (true) {
    const double next_time = clock.peek(rng.exponential(rates.total));
    while (next_obs < observation_times.size() && observation_times[next_obs] < next_time) {
      result.snapshots.push_back(config);
      ++next_obs;
    }
    if (next_time > params.t_end) break;
    clock.add(next_time - clock.value());
    ++result.steps;
    auto ev = draw_candidate(config, params, rates, rng);
    if (!ev) continue;
    ev->time = clock.value();
    ++effective;
    if (options.record_events) {
      if (effective > params.event_cap) {
        throw TrajectoryTooLong("trajectory too long; raise cap or shrink T/N (cap = " +
                                std::to_string(params.event_cap) + " events)");
      }
      result.record.events.push_back(*ev);
    }
    if (options.observer) options.observer->on_event(*ev);
  }
  while (next_obs < observation_times.size()) {
    result.snapshots.push_back(config);
    ++next_obs;
  }
  if (options.observer) options.observer->on_finish(params.t_end);
  return result;
}

void replay(const TrajectoryRecord& record, const LatticeGeom& geom, TrajectoryObserver& observer) {
  observer.on_start(record.initial, 0.0);
  for (const Event& e : record.events) observer.on_event(e);
  observer.on_finish(record.final_time);
  (void)geom;
}

Configuration state_at(const TrajectoryRecord& record, const LatticeGeom& geom, double t) {
  Configuration c = record.initial;
  for (const Event& e : record.events) {
    if (e.time > t) break;
    apply_event(c, e, geom);
  }
  return c;
}

void validate_record(const TrajectoryRecord& record, const LatticeGeom& geom) {
  if (!record.initial.matches(geom)) throw std::logic_error("initial configuration does not match geometry");
  Configuration c = record.initial;
  auto bit_valued = [](const std::vector<std::uint8_t>& v) {
    return std::all_of(v.begin(), v.end(), [](std::uint8_t x) { return x <= 1; });
  };
  if (!bit_valued(c.eta) || !bit_valued(c.xi)) throw std::logic_error("initial configuration is not bit-valued");
  double prev = 0.0;
  for (std::size_t k = 0; k < record.events.size(); ++k) {
    const Event& e = record.events[k];
    if (!(e.time > prev || (k == 0 && e.time >= 0.0))) throw std::logic_error("event times not strictly increasing");
    if (e.time > record.final_time) throw std::logic_error("event after the final time");
    prev = e.time;
    apply_event(c, e, geom);
  }
}

Configuration sample_initial(const FieldProfile& v0, const RoadProfile& u0, const LatticeGeom& geom, Rng& rng) {
  Configuration c = Configuration::empty(geom);
  for (std::size_t s = 0; s < geom.bulk_size(); ++s) {
    const MacroPoint m = geom.site_to_macro(s);
    const double prob = checked_density(v0(m.x, m.y), "initial field profile v0");
    c.eta[s] = rng.uniform() < prob ? 1 : 0;
  }
  for (std::size_t i = 0; i < geom.road_size(); ++i) {
    const double prob = checked_density(u0(geom.road_to_macro(i)), "initial road profile u0");
    c.xi[i] = rng.uniform() < prob ? 1 : 0;
  }
  return c;
}

void write_snapshot_csv(std::ostream& out, const Configuration& config) {
  out << "layer,site,occupancy\n";
  for (std::size_t s = 0; s < config.eta.size(); ++s) out << "field," << s << ',' << int{config.eta[s]} << '\n';
  for (std::size_t i = 0; i < config.xi.size(); ++i) out << "road," << i << ',' << int{config.xi[i]} << '\n';
}

namespace {
constexpr char kSnapshotMagic[8] = {'F', 'R', 'S', 'N', 'A', 'P', '0', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char bytes[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                  static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char bytes[4] = {};
  in.read(reinterpret_cast<char*>(bytes), 4);
  return std::uint32_t{bytes[0]} | (std::uint32_t{bytes[1]} << 8) | (std::uint32_t{bytes[2]} << 16) |
         (std::uint32_t{bytes[3]} << 24);
}
}  // namespace

// Layout: magic "FRSNAP01", u32 p, u32 N (little endian), eta bytes, xi bytes.
void write_snapshot_binary(std::ostream& out, const Configuration& config, const LatticeGeom& geom) {
  if (!config.matches(geom)) throw ParameterError("configuration does not match geometry");
  out.write(kSnapshotMagic, sizeof kSnapshotMagic);
  put_u32(out, static_cast<std::uint32_t>(geom.dim()));
  put_u32(out, static_cast<std::uint32_t>(geom.scale()));
  out.write(reinterpret_cast<const char*>(config.eta.data()), static_cast<std::streamsize>(config.eta.size()));
  out.write(reinterpret_cast<const char*>(config.xi.data()), static_cast<std::streamsize>(config.xi.size()));
}

Configuration read_snapshot_binary(std::istream& in, const LatticeGeom& geom) {
  char magic[sizeof kSnapshotMagic] = {};
  in.read(magic, sizeof magic);
  if (!in || !std::equal(magic, magic + sizeof magic, kSnapshotMagic)) throw std::runtime_error("not a snapshot file");
  const std::uint32_t p = get_u32(in);
  const std::uint32_t n = get_u32(in);
  if (static_cast<int>(p) != geom.dim() || static_cast<int>(n) != geom.scale()) {
    throw std::runtime_error("snapshot geometry does not match");
  }
  Configuration c = Configuration::empty(geom);
  in.read(reinterpret_cast<char*>(c.eta.data()), static_cast<std::streamsize>(c.eta.size()));
  in.read(reinterpret_cast<char*>(c.xi.data()), static_cast<std::streamsize>(c.xi.size()));
  if (!in) throw std::runtime_error("truncated snapshot file");
  return c;
}

void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& record) {
  out << "time,event_code,location\n";
  for (const Event& e : record.events) {
    out << format_double(e.time) << ',' << static_cast<int>(e.kind) << ',' << e.location << '\n';
  }
}

}  // namespace fieldroad
