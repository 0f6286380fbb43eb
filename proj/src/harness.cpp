#include "fieldroad/harness.hpp"

#include <algorithm>
#include <atomic>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "fieldroad/empirical.hpp"
#include "fieldroad/generator_exact.hpp"
#include "fieldroad/lattice.hpp"
#include "fieldroad/output.hpp"
#include "fieldroad/profiles.hpp"
#include "fieldroad/rng.hpp"
#include "json.hpp"

namespace fieldroad {

using ordered_json = nlohmann::ordered_json;

// ---- configuration ----

namespace {

constexpr std::string_view kKindNames[] = {"simulate", "pde", "converge", "oracle", "dirichlet-check", "diagnostics"};
const std::set<std::string> kDiagnosticNames = {"martingale", "qv_scaling", "replacement", "energy"};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("cannot parse '" + t + "' for key " + key);
  }
  return value;
}

template <class T>
std::vector<T> parse_numbers(const std::string& key, const std::string& text) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) out.push_back(parse_number<T>(key, item));
  return out;
}

template <class T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += format_double(values[i]);
    } else if constexpr (std::is_same_v<T, std::string>) {
      out += values[i];
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

template <class T>
bool strictly_ascending(const std::vector<T>& v) {
  return std::adjacent_find(v.begin(), v.end(), [](const T& a, const T& b) { return !(a < b); }) == v.end();
}

}  // namespace

ExperimentKind parse_kind(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kKindNames); ++i) {
    if (kKindNames[i] == name) return static_cast<ExperimentKind>(i);
  }
  throw ConfigError("unknown experiment kind '" + std::string(name) + "'");
}

const char* kind_name(ExperimentKind kind) { return kKindNames[static_cast<std::size_t>(kind)].data(); }

void ExperimentConfig::validate() const {
  try {
    phys.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (p < 2) throw ConfigError("p must be at least 2");
  if (N.empty()) throw ConfigError("N list is empty");
  if (!strictly_ascending(N)) throw ConfigError("N list must be sorted ascending without repeats");
  if (N.front() < 3) throw ConfigError("every N must be at least 3");
  if (trajectories < 1) throw ConfigError("trajectory count M must be at least 1");
  if (times.empty()) throw ConfigError("no observation times");
  for (double t : times) {
    if (!std::isfinite(t) || t < 0.0) throw ConfigError("observation times must be finite and nonnegative");
  }
  if (!std::is_sorted(times.begin(), times.end())) throw ConfigError("observation times must be sorted");
  for (double e : eps) {
    if (!(e > 0.0 && e <= 0.5)) throw ConfigError("eps values must lie in (0, 1/2]");
  }
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (bins < 1) throw ConfigError("bins must be at least 1");
  if (pde_M < 4) throw ConfigError("PDE mesh needs at least 4 cells per axis");
  if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw ConfigError("cfl_safety must lie in (0, 1]");
  for (double g : gammas) {
    if (!(g > 0.0 && g < 1.0)) throw ConfigError("gammas must lie in (0, 1)");
  }
  if (density_trials < 1) throw ConfigError("dirichlet trials must be at least 1");
  if (random_measures < 0) throw ConfigError("random_measures must be nonnegative");
  for (const auto& d : diagnostics) {
    if (!kDiagnosticNames.count(d)) throw ConfigError("unknown diagnostic '" + d + "'");
  }
  if (!replacement_N.empty()) {
    if (!strictly_ascending(replacement_N)) throw ConfigError("replacement_N must be sorted ascending");
    if (replacement_N.front() < 3) throw ConfigError("replacement_N entries must be at least 3");
  }
  if (!(replacement_eps > 0.0 && replacement_eps <= 0.5)) throw ConfigError("replacement_eps must lie in (0, 1/2]");
  if (energy_family < 1) throw ConfigError("energy_family must be at least 1");
  try {
    // Probe the profile on a coarse grid so out-of-range data fail before any run starts.
    const InitialProfile prof = parse_profile(profile, p);
    std::vector<double> x(static_cast<std::size_t>(p - 1), 0.0);
    for (int i = 0; i <= 16; ++i) {
      std::fill(x.begin(), x.end(), i / 16.0);
      checked_density(prof.road(x), "initial road datum");
      for (int j = 0; j <= 16; ++j) checked_density(prof.field(x, j / 16.0), "initial field datum");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("profile '" + profile + "': " + e.what());
  }
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream o;
  o << "kind=" << kind_name(kind) << '\n'
    << "seed=" << seed << '\n'
    << "d=" << format_double(phys.d) << '\n'
    << "D=" << format_double(phys.D) << '\n'
    << "alpha=" << format_double(phys.alpha) << '\n'
    << "b=" << format_double(phys.b) << '\n'
    << "p=" << p << '\n'
    << "N=" << join(N) << '\n'
    << "event_cap=" << event_cap << '\n'
    << "trajectories=" << trajectories << '\n'
    << "profile=" << profile << '\n'
    << "times=" << join(times) << '\n'
    << "eps=" << join(eps) << '\n'
    << "bins=" << bins << '\n'
    << "pde_M=" << pde_M << '\n'
    << "cfl_safety=" << format_double(cfl_safety) << '\n'
    << "trace=" << (trace == TraceMode::kReconstructed ? "reconstructed" : "bottom_cell") << '\n'
    << "oracle_initial=" << (oracle_dirac ? "dirac" : "product") << '\n'
    << "gammas=" << join(gammas) << '\n'
    << "trials=" << density_trials << '\n'
    << "random_measures=" << random_measures << '\n'
    << "diagnostics=" << join(diagnostics) << '\n'
    << "replacement_N=" << join(replacement_N) << '\n'
    << "replacement_eps=" << format_double(replacement_eps) << '\n'
    << "energy_family=" << energy_family << '\n';
  return o.str();
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(canonical()); }

PdeParams ExperimentConfig::pde_params() const {
  PdeParams pp;
  pp.d = phys.d;
  pp.D = phys.D;
  pp.alpha = phys.alpha;
  pp.p = p;
  pp.M = pde_M;
  pp.cfl_safety = cfl_safety;
  pp.trace = trace;
  return pp;
}

ExperimentConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  ExperimentConfig c;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"experiment.kind", [&](auto&, auto& v) { c.kind = parse_kind(trim(v)); }},
      {"experiment.seed", [&](auto& k, auto& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"experiment.out", [&](auto&, auto& v) { c.out_dir = trim(v); }},
      {"experiment.workers", [&](auto& k, auto& v) { c.workers = parse_number<unsigned>(k, v); }},
      {"model.d", [&](auto& k, auto& v) { c.phys.d = parse_number<double>(k, v); }},
      {"model.D", [&](auto& k, auto& v) { c.phys.D = parse_number<double>(k, v); }},
      {"model.alpha", [&](auto& k, auto& v) { c.phys.alpha = parse_number<double>(k, v); }},
      {"model.b", [&](auto& k, auto& v) { c.phys.b = parse_number<double>(k, v); }},
      {"model.p", [&](auto& k, auto& v) { c.p = parse_number<int>(k, v); }},
      {"lattice.N", [&](auto& k, auto& v) { c.N = parse_numbers<int>(k, v); }},
      {"lattice.event_cap", [&](auto& k, auto& v) { c.event_cap = parse_number<std::size_t>(k, v); }},
      {"sampling.trajectories", [&](auto& k, auto& v) { c.trajectories = parse_number<std::size_t>(k, v); }},
      {"sampling.profile", [&](auto&, auto& v) { c.profile = trim(v); }},
      {"sampling.times", [&](auto& k, auto& v) { c.times = parse_numbers<double>(k, v); }},
      {"sampling.eps", [&](auto& k, auto& v) { c.eps = parse_numbers<double>(k, v); }},
      {"coarse.bins", [&](auto& k, auto& v) { c.bins = parse_number<int>(k, v); }},
      {"pde.M", [&](auto& k, auto& v) { c.pde_M = parse_number<int>(k, v); }},
      {"pde.cfl_safety", [&](auto& k, auto& v) { c.cfl_safety = parse_number<double>(k, v); }},
      {"pde.trace",
       [&](auto&, auto& v) {
         const std::string t = trim(v);
         if (t == "reconstructed") {
           c.trace = TraceMode::kReconstructed;
         } else if (t == "bottom_cell") {
           c.trace = TraceMode::kBottomCell;
         } else {
           throw ConfigError("pde.trace must be reconstructed or bottom_cell");
         }
       }},
      {"oracle.initial",
       [&](auto&, auto& v) {
         const std::string t = trim(v);
         if (t != "dirac" && t != "product") throw ConfigError("oracle.initial must be dirac or product");
         c.oracle_dirac = t == "dirac";
       }},
      {"dirichlet.gammas", [&](auto& k, auto& v) { c.gammas = parse_numbers<double>(k, v); }},
      {"dirichlet.trials", [&](auto& k, auto& v) { c.density_trials = parse_number<int>(k, v); }},
      {"dirichlet.random_measures", [&](auto& k, auto& v) { c.random_measures = parse_number<int>(k, v); }},
      {"diagnostics.list", [&](auto&, auto& v) { c.diagnostics = split_list(v); }},
      {"diagnostics.replacement_N", [&](auto& k, auto& v) { c.replacement_N = parse_numbers<int>(k, v); }},
      {"diagnostics.replacement_eps", [&](auto& k, auto& v) { c.replacement_eps = parse_number<double>(k, v); }},
      {"diagnostics.energy_family",
       [&](auto& k, auto& v) { c.energy_family = parse_number<std::size_t>(k, v); }},
  };
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("key '" + section + "' must sit inside a section");
    for (const auto& [key, node] : body) {
      const std::string full = section + "." + key;
      const auto it = setters.find(full);
      if (it == setters.end()) throw ConfigError("unknown config key " + full);
      it->second(full, node.get_value<std::string>());
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in);
}

// ---- output ----

void write_csv(std::ostream& out, const Table& table, const ExperimentConfig& config) {
  out << "# fieldroad " << artifact_version() << " config_hash=" << hex64(config.hash()) << " table=" << table.name
      << '\n';
  for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
}

namespace {

std::string output_path(const ExperimentConfig& config, const std::string& file) {
  std::filesystem::create_directories(config.out_dir);
  return (std::filesystem::path(config.out_dir) / file).string();
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

void stamp(std::ostream& out, const ExperimentConfig& config, const std::string& name) {
  out << "# fieldroad " << artifact_version() << " config_hash=" << hex64(config.hash()) << " table=" << name << '\n';
}

ordered_json stamp_json(const ExperimentConfig& config) {
  ordered_json j;
  j["version"] = std::string(artifact_version());
  j["config_hash"] = hex64(config.hash());
  j["kind"] = kind_name(config.kind);
  j["seed"] = config.seed;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  auto out = open_output(path);
  out << text << '\n';
}

}  // namespace

std::string write_table(const Table& table, const ExperimentConfig& config) {
  const std::string path = output_path(config, table.name + ".csv");
  auto out = open_output(path);
  write_csv(out, table, config);
  return path;
}

// ---- parallel execution ----

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body) {
  const std::size_t threads = std::min<std::size_t>(std::max(1U, workers), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < n && !failed; i = next++) {
      try {
        body(i);
      } catch (...) {
        const std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// ---- shared helpers ----

std::vector<TestFunctionPair> default_test_pairs(int p) {
  std::vector<TestFunctionPair> pairs;
  pairs.push_back(fourier_cosine_pair(p, {1}, 1, 1.0));
  pairs.push_back(fourier_cosine_pair(p, {2}, 2, 0.0, 1.0, 0.5));
  TestFunctionPair bump = bump_pair(p, {1}, 0.3, 1, {1.0, -1.0});
  bump.name = "bump_mixed";
  bump.H.tau = TimeFactor::polynomial({1.0, -1.0});
  XMode mode;
  mode.k.assign(static_cast<std::size_t>(p - 1), 0);
  mode.k[0] = 1;
  mode.phase = 0.3;
  bump.H.terms.push_back({0.7, mode});
  pairs.push_back(std::move(bump));
  return pairs;
}

namespace {

enum Stream : std::uint64_t { kConvergeStream = 1, kOracleStream, kMartingaleStream, kReplacementStream, kSimulateStream };

struct TrajectorySeeds {
  std::uint64_t init;
  std::uint64_t dynamics;
};

TrajectorySeeds seeds_for(std::uint64_t master, Stream stream, int N, std::size_t k) {
  const std::uint64_t base = child_seed(child_seed(master, stream), static_cast<std::uint64_t>(N));
  const std::uint64_t ts = child_seed(base, k);
  return {child_seed(ts, 0), child_seed(ts, 1)};
}

double horizon(const std::vector<double>& times) { return times.empty() ? 0.0 : times.back(); }

std::shared_ptr<const LatticeGeom> make_geom(int p, int N) { return std::make_shared<const LatticeGeom>(p, N); }

/// Samples an initial configuration and runs the dynamics with the given observer.
SimulationResult run_trajectory(const ExperimentConfig& config, const InitialProfile& profile,
                                const std::shared_ptr<const LatticeGeom>& geom, TrajectorySeeds seeds,
                                std::span<const double> obs, TrajectoryObserver* observer, bool record = false) {
  Rng init_rng(seeds.init);
  const Configuration init = sample_initial(profile.field, profile.road, *geom, init_rng);
  const SimParams params(config.phys, geom, horizon(config.times), seeds.dynamics, config.event_cap);
  SimulateOptions options;
  options.record_events = record;
  options.observer = observer;
  return simulate(params, init, obs, options);
}

}  // namespace

// ---- hydrodynamic convergence ----

namespace {

struct CellMap {
  std::vector<std::size_t> field_cell;  // per bulk site
  std::vector<std::size_t> road_cell;   // per road site
  std::size_t field_cells = 0;
  std::size_t road_cells = 0;
};

CellMap cell_map(const LatticeGeom& geom, int bins) {
  const int n = geom.scale();
  CellMap m;
  m.road_cells = 1;
  for (int q = 0; q < geom.dim() - 1; ++q) m.road_cells *= static_cast<std::size_t>(bins);
  m.field_cells = m.road_cells * static_cast<std::size_t>(bins);
  m.road_cell.resize(geom.road_size());
  for (std::size_t i = 0; i < geom.road_size(); ++i) {
    std::size_t cell = 0;
    for (int xq : geom.road_coord(i)) cell = cell * static_cast<std::size_t>(bins) + static_cast<std::size_t>(xq * bins / n);
    m.road_cell[i] = cell;
  }
  m.field_cell.resize(geom.bulk_size());
  for (std::size_t s = 0; s < geom.bulk_size(); ++s) {
    m.field_cell[s] = static_cast<std::size_t>(geom.layer_of(s) * bins / n) * m.road_cells + m.road_cell[geom.in_layer(s)];
  }
  return m;
}

struct Reference {
  std::vector<double> field;
  std::vector<double> road;
};

// PDE values interpolated at the sites of each cell and averaged like the particle occupations.
Reference pde_reference(const PdeState& state, const LatticeGeom& geom, const CellMap& cells) {
  Reference r;
  r.field.assign(cells.field_cells, 0.0);
  r.road.assign(cells.road_cells, 0.0);
  std::vector<double> fcount(cells.field_cells, 0.0);
  std::vector<double> rcount(cells.road_cells, 0.0);
  for (std::size_t s = 0; s < geom.bulk_size(); ++s) {
    const MacroPoint pt = geom.site_to_macro(s);
    r.field[cells.field_cell[s]] += interpolate_field(state, pt.x, pt.y);
    fcount[cells.field_cell[s]] += 1.0;
  }
  for (std::size_t i = 0; i < geom.road_size(); ++i) {
    r.road[cells.road_cell[i]] += interpolate_road(state, geom.road_to_macro(i));
    rcount[cells.road_cell[i]] += 1.0;
  }
  for (std::size_t c = 0; c < r.field.size(); ++c) r.field[c] /= fcount[c];
  for (std::size_t c = 0; c < r.road.size(); ++c) r.road[c] /= rcount[c];
  return r;
}

struct TrajectorySample {
  std::vector<CoarseDensity> coarse;             // per time
  std::vector<std::vector<double>> pair_field;   // [time][pair]
  std::vector<std::vector<double>> pair_road;
};

struct CellStats {
  double error = 0.0;
  double se = 0.0;
};

CellStats cell_stats(const std::vector<TrajectorySample>& samples, std::size_t k, bool field,
                     const std::vector<double>& reference) {
  const std::size_t cells = reference.size();
  const double m = static_cast<double>(samples.size());
  std::vector<double> sum(cells, 0.0);
  std::vector<double> sum2(cells, 0.0);
  for (const auto& s : samples) {
    const auto& v = field ? s.coarse[k].field : s.coarse[k].road;
    for (std::size_t c = 0; c < cells; ++c) {
      sum[c] += v[c];
      sum2[c] += v[c] * v[c];
    }
  }
  CellStats out;
  for (std::size_t c = 0; c < cells; ++c) {
    const double mean = sum[c] / m;
    out.error = std::max(out.error, std::abs(mean - reference[c]));
    if (samples.size() > 1) {
      const double var = std::max(0.0, (sum2[c] - m * mean * mean) / (m - 1.0));
      out.se = std::max(out.se, std::sqrt(var / m));
    }
  }
  return out;
}

double noise_level(double se, std::size_t cells) {
  return se * (std::sqrt(2.0 * std::log(2.0 * static_cast<double>(cells))) + 3.0);
}

}  // namespace

ConvergenceReport run_convergence_study(const ExperimentConfig& config) {
  config.validate();
  if (config.N.size() < 2) throw ConfigError("convergence study needs at least two N values");
  if (config.bins > config.N.front()) throw ConfigError("bins must not exceed the smallest N");
  const InitialProfile profile = parse_profile(config.profile, config.p);
  const auto pairs = default_test_pairs(config.p);

  ConvergenceReport report;
  report.times = config.times;
  const PdeState pde0 = init_pde(profile.field, profile.road, config.pde_params());
  const auto pde = solve(pde0, horizon(config.times), config.times);

  report.errors.name = "convergence_errors";
  report.errors.columns = {"N", "time", "field_error", "field_stderr", "field_noise", "road_error", "road_stderr",
                           "road_noise"};
  report.pairings.name = "convergence_pairings";
  report.pairings.columns = {"N", "trajectory", "time", "pair", "field", "road"};

  for (int N : config.N) {
    const auto start = std::chrono::steady_clock::now();
    const auto geom = make_geom(config.p, N);
    const CellMap cells = cell_map(*geom, config.bins);
    std::vector<TrajectorySample> samples(config.trajectories);
    parallel_for(config.trajectories, config.workers, [&](std::size_t k) {
      const auto sim =
          run_trajectory(config, profile, geom, seeds_for(config.seed, kConvergeStream, N, k), config.times, nullptr);
      TrajectorySample& s = samples[k];
      for (std::size_t t = 0; t < config.times.size(); ++t) {
        const Configuration& snap = sim.snapshots[t];
        s.coarse.push_back(coarse_density(snap, *geom, config.bins));
        std::vector<double> pf, pr;
        for (const auto& pair : pairs) {
          pf.push_back(pair_field(snap, pair.G, config.times[t], *geom));
          pr.push_back(pair_road(snap, pair.H, config.times[t], *geom));
        }
        s.pair_field.push_back(std::move(pf));
        s.pair_road.push_back(std::move(pr));
      }
    });

    ConvergenceLevel level;
    level.N = N;
    for (std::size_t t = 0; t < config.times.size(); ++t) {
      const Reference ref = pde_reference(pde[t], *geom, cells);
      const CellStats f = cell_stats(samples, t, true, ref.field);
      const CellStats r = cell_stats(samples, t, false, ref.road);
      level.field_error.push_back(f.error);
      level.field_se.push_back(f.se);
      level.field_noise.push_back(noise_level(f.se, cells.field_cells));
      level.road_error.push_back(r.error);
      level.road_se.push_back(r.se);
      level.road_noise.push_back(noise_level(r.se, cells.road_cells));
      report.errors.rows.push_back({static_cast<double>(N), config.times[t], f.error, f.se, level.field_noise.back(),
                                    r.error, r.se, level.road_noise.back()});
    }
    for (std::size_t k = 0; k < samples.size(); ++k) {
      for (std::size_t t = 0; t < config.times.size(); ++t) {
        for (std::size_t q = 0; q < pairs.size(); ++q) {
          report.pairings.rows.push_back({static_cast<double>(N), static_cast<double>(k), config.times[t],
                                          static_cast<double>(q), samples[k].pair_field[t][q],
                                          samples[k].pair_road[t][q]});
        }
      }
    }
    level.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.levels.push_back(std::move(level));
  }

  const auto& first = report.levels.front();
  const auto& last = report.levels.back();
  report.field_improves = report.road_improves = report.monotone = report.within_noise = true;
  for (std::size_t t = 0; t < report.times.size(); ++t) {
    report.field_improves &= last.field_error[t] < first.field_error[t];
    report.road_improves &= last.road_error[t] < first.road_error[t];
    for (std::size_t l = 1; l < report.levels.size(); ++l) {
      const auto& a = report.levels[l - 1];
      const auto& b = report.levels[l];
      report.monotone &= b.field_error[t] < a.field_error[t] && b.road_error[t] < a.road_error[t];
    }
    for (const auto& l : report.levels) {
      report.within_noise &= l.field_error[t] <= l.field_noise[t] && l.road_error[t] <= l.road_noise[t];
    }
  }
  return report;
}

// ---- oracle comparison ----

OracleReport run_oracle_comparison(const ExperimentConfig& config) {
  config.validate();
  if (config.N.size() != 1) throw ConfigError("oracle comparison needs exactly one N (the geometry shared with the oracle)");
  const int N = config.N.front();
  const auto geom = make_geom(config.p, N);
  const StateSpace space = enumerate_states(geom);
  const GeneratorMatrix Q(space, config.phys);
  const InitialProfile profile = parse_profile(config.profile, config.p);

  MeasureVector mu0;
  Configuration dirac_init;
  if (config.oracle_dirac) {
    Rng rng(seeds_for(config.seed, kOracleStream, N, 0).init);
    dirac_init = sample_initial(profile.field, profile.road, *geom, rng);
    mu0 = dirac_measure(space, space.encode(dirac_init));
  } else {
    std::vector<double> prob(static_cast<std::size_t>(space.bits()));
    for (std::size_t s = 0; s < geom->bulk_size(); ++s) {
      const MacroPoint pt = geom->site_to_macro(s);
      prob[s] = checked_density(profile.field(pt.x, pt.y), "initial field datum");
    }
    for (std::size_t i = 0; i < geom->road_size(); ++i) {
      prob[geom->bulk_size() + i] = checked_density(profile.road(geom->road_to_macro(i)), "initial road datum");
    }
    mu0.resize(static_cast<Eigen::Index>(space.size()));
    for (std::size_t s = 0; s < space.size(); ++s) {
      double w = 1.0;
      for (std::size_t b = 0; b < prob.size(); ++b) w *= ((s >> b) & 1U) ? prob[b] : 1.0 - prob[b];
      mu0[static_cast<Eigen::Index>(s)] = w;
    }
  }

  const std::size_t T = config.times.size();
  std::vector<std::uint32_t> states(config.trajectories * T);
  parallel_for(config.trajectories, config.workers, [&](std::size_t k) {
    const TrajectorySeeds seeds = seeds_for(config.seed, kOracleStream, N, k + 1);
    Configuration init = dirac_init;
    if (!config.oracle_dirac) {
      Rng rng(seeds.init);
      init = sample_initial(profile.field, profile.road, *geom, rng);
    }
    const SimParams params(config.phys, geom, horizon(config.times), seeds.dynamics, config.event_cap);
    SimulateOptions options;
    options.record_events = false;
    const auto sim = simulate(params, init, config.times, options);
    for (std::size_t t = 0; t < T; ++t) states[k * T + t] = space.encode(sim.snapshots[t]);
  });

  OracleReport report;
  report.states = space.size();
  report.table.name = "oracle_tv";
  report.table.columns = {"time", "tv", "bound", "mass_drift"};
  report.pass = true;
  const double m = static_cast<double>(config.trajectories);
  for (std::size_t t = 0; t < T; ++t) {
    const ForwardResult fr = forward_solve(Q, mu0, config.times[t]);
    std::vector<double> hist(space.size(), 0.0);
    for (std::size_t k = 0; k < config.trajectories; ++k) hist[states[k * T + t]] += 1.0;
    double tv = 0.0;
    for (std::size_t s = 0; s < space.size(); ++s) tv += std::abs(hist[s] / m - fr.mu[static_cast<Eigen::Index>(s)]);
    tv *= 0.5;
    OracleRow row{config.times[t], tv, 3.0 * std::sqrt(static_cast<double>(space.size()) / m), fr.mass_drift};
    report.pass &= row.tv <= row.bound;
    report.table.rows.push_back({row.time, row.tv, row.bound, row.mass_drift});
    report.rows.push_back(row);
  }
  return report;
}

// ---- diagnostics ----

std::vector<MartingaleStat> martingale_study(const ExperimentConfig& config, int N) {
  config.validate();
  const auto geom = make_geom(config.p, N);
  const InitialProfile profile = parse_profile(config.profile, config.p);
  const auto pairs = default_test_pairs(config.p);
  const std::size_t P = pairs.size();
  const std::size_t T = config.times.size();
  // [trajectory][pair][time]
  std::vector<double> mart(config.trajectories * P * T), qv(config.trajectories * P * T);
  parallel_for(config.trajectories, config.workers, [&](std::size_t k) {
    std::vector<std::unique_ptr<MartingaleObserver>> observers;
    std::vector<TrajectoryObserver*> targets;
    for (const auto& pair : pairs) {
      observers.push_back(std::make_unique<MartingaleObserver>(*geom, config.phys, pair, config.times));
      targets.push_back(observers.back().get());
    }
    ObserverFanout fan(targets);
    run_trajectory(config, profile, geom, seeds_for(config.seed, kMartingaleStream, N, k), {}, &fan);
    for (std::size_t q = 0; q < P; ++q) {
      const MartingaleSeries& s = observers[q]->series();
      for (std::size_t t = 0; t < T; ++t) {
        mart[(k * P + q) * T + t] = s.total(t);
        qv[(k * P + q) * T + t] = s.total_qv(t);
      }
    }
  });

  std::vector<MartingaleStat> out;
  for (std::size_t q = 0; q < P; ++q) {
    for (std::size_t t = 0; t < T; ++t) {
      std::vector<double> m, z, b;
      for (std::size_t k = 0; k < config.trajectories; ++k) {
        const double v = mart[(k * P + q) * T + t];
        const double w = qv[(k * P + q) * T + t];
        m.push_back(v);
        z.push_back(v * v - w);
        b.push_back(w);
      }
      MartingaleStat st;
      st.pair = pairs[q].name;
      st.time = config.times[t];
      st.mean = mean_and_stderr(m);
      st.compensated = mean_and_stderr(z);
      const Estimate qb = mean_and_stderr(b);
      st.mean_qv = qb.mean;
      const double n = static_cast<double>(m.size());
      st.variance = n > 1 ? st.mean.std_error * st.mean.std_error * n : 0.0;
      st.zero_mean = std::abs(st.mean.mean) <= 3.0 * st.mean.std_error;
      st.variance_ok = std::abs(st.compensated.mean) <= 4.0 * st.compensated.std_error;
      out.push_back(st);
    }
  }
  return out;
}

namespace {

Estimate mean_square_martingale(const ExperimentConfig& config, int N, const TestFunctionPair& pair) {
  const auto geom = make_geom(config.p, N);
  const InitialProfile profile = parse_profile(config.profile, config.p);
  const std::vector<double> last{horizon(config.times)};
  std::vector<double> sq(config.trajectories);
  parallel_for(config.trajectories, config.workers, [&](std::size_t k) {
    MartingaleObserver obs(*geom, config.phys, pair, last);
    run_trajectory(config, profile, geom, seeds_for(config.seed, kMartingaleStream, N, k), {}, &obs);
    const double v = obs.series().total(0);
    sq[k] = v * v;
  });
  return mean_and_stderr(sq);
}

}  // namespace

QvScaling qv_scaling_study(const ExperimentConfig& config, int N_coarse, int N_fine) {
  config.validate();
  if (!(N_coarse < N_fine)) throw ConfigError("QV scaling needs N_coarse < N_fine");
  const auto pair = default_test_pairs(config.p).front();
  QvScaling out;
  out.N_coarse = N_coarse;
  out.N_fine = N_fine;
  out.coarse = mean_square_martingale(config, N_coarse, pair);
  out.fine = mean_square_martingale(config, N_fine, pair);
  out.target = std::pow(static_cast<double>(N_fine) / N_coarse, config.p - 1);
  out.ratio = out.coarse.mean / out.fine.mean;
  const double rc = out.coarse.std_error / out.coarse.mean;
  const double rf = out.fine.std_error / out.fine.mean;
  out.ratio_se = out.ratio * std::sqrt(rc * rc + rf * rf);
  out.pass = out.ratio >= 0.7 * out.target && out.ratio <= 1.45 * out.target;
  return out;
}

namespace {

FieldFunction replacement_weight(int p) {
  FieldFunction G;
  G.tau = TimeFactor::constant(1.0);
  XMode flat;
  flat.k.assign(static_cast<std::size_t>(p - 1), 0);
  XMode mode = flat;
  mode.k[0] = 1;
  G.terms.push_back({1.0, flat, YProfile::polynomial({1.0})});
  G.terms.push_back({0.5, mode, YProfile::polynomial({1.0})});
  return G;
}

std::vector<ReplacementPoint> replacement_points(const ExperimentConfig& config, int N, const std::vector<double>& eps) {
  const auto geom = make_geom(config.p, N);
  const InitialProfile profile = parse_profile(config.profile, config.p);
  const FieldFunction G = replacement_weight(config.p);
  std::vector<ReplacementSpec> specs;
  for (double e : eps) {
    specs.push_back({e, Boundary::kUpper});
    specs.push_back({e, Boundary::kLower});
  }
  const std::vector<double> last{horizon(config.times)};
  std::vector<std::vector<double>> values(specs.size(), std::vector<double>(config.trajectories));
  parallel_for(config.trajectories, config.workers, [&](std::size_t k) {
    ReplacementObserver obs(*geom, G, specs, last);
    run_trajectory(config, profile, geom, seeds_for(config.seed, kReplacementStream, N, k), {}, &obs);
    for (std::size_t s = 0; s < specs.size(); ++s) values[s][k] = std::abs(obs.values()[s][0]);
  });
  std::vector<ReplacementPoint> out;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    out.push_back({N, specs[s].eps, specs[s].boundary, mean_and_stderr(values[s])});
  }
  return out;
}

bool strictly_decreasing(const std::vector<ReplacementPoint>& pts, Boundary boundary) {
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& pt : pts) {
    if (pt.boundary != boundary) continue;
    if (!(pt.estimate.mean < prev)) return false;
    prev = pt.estimate.mean;
  }
  return true;
}

}  // namespace

ReplacementStudy replacement_study(const ExperimentConfig& config) {
  config.validate();
  if (config.replacement_N.empty()) throw ConfigError("replacement_N is empty");
  if (config.trajectories < 2) throw ConfigError("replacement diagnostics need at least two trajectories");
  ReplacementStudy out;
  const int n_max = config.replacement_N.back();
  std::vector<double> eps_all = config.eps;
  if (std::find(eps_all.begin(), eps_all.end(), config.replacement_eps) == eps_all.end()) {
    eps_all.push_back(config.replacement_eps);
  }
  for (int N : config.replacement_N) {
    if (N == n_max) {
      for (const auto& pt : replacement_points(config, N, eps_all)) {
        if (pt.eps == config.replacement_eps) out.n_sweep.push_back(pt);
        if (std::find(config.eps.begin(), config.eps.end(), pt.eps) != config.eps.end()) out.eps_sweep.push_back(pt);
      }
    } else {
      for (const auto& pt : replacement_points(config, N, {config.replacement_eps})) out.n_sweep.push_back(pt);
    }
  }
  // eps_sweep follows the configured eps order.
  std::stable_sort(out.eps_sweep.begin(), out.eps_sweep.end(), [&](const auto& a, const auto& b) {
    const auto ia = std::find(config.eps.begin(), config.eps.end(), a.eps) - config.eps.begin();
    const auto ib = std::find(config.eps.begin(), config.eps.end(), b.eps) - config.eps.begin();
    return ia < ib;
  });
  out.decreasing = true;
  for (Boundary b : {Boundary::kUpper, Boundary::kLower}) {
    out.decreasing &= strictly_decreasing(out.n_sweep, b) && strictly_decreasing(out.eps_sweep, b);
  }
  return out;
}

DiagnosticsBundle run_diagnostics(const ExperimentConfig& config) {
  config.validate();
  DiagnosticsBundle bundle;
  if (config.diagnostics.empty()) return bundle;
  ordered_json summary = stamp_json(config);
  auto& results = summary["diagnostics"] = ordered_json::object();
  auto wants = [&](const char* name) {
    return std::find(config.diagnostics.begin(), config.diagnostics.end(), name) != config.diagnostics.end();
  };

  if (wants("martingale")) {
    const int N = config.N.back();
    const auto stats = martingale_study(config, N);
    Table t{"martingale",
            {"N", "pair", "time", "mean", "stderr", "variance", "mean_qv", "compensated_mean", "compensated_stderr",
             "zero_mean", "variance_ok"},
            {}};
    const auto pairs = default_test_pairs(config.p);
    bool pass = true;
    for (const auto& s : stats) {
      const auto q = std::find_if(pairs.begin(), pairs.end(), [&](const auto& pr) { return pr.name == s.pair; }) -
                     pairs.begin();
      t.rows.push_back({static_cast<double>(N), static_cast<double>(q), s.time, s.mean.mean, s.mean.std_error,
                        s.variance, s.mean_qv, s.compensated.mean, s.compensated.std_error,
                        s.zero_mean ? 1.0 : 0.0, s.variance_ok ? 1.0 : 0.0});
      pass &= s.zero_mean && s.variance_ok;
    }
    results["martingale"] = {{"N", N}, {"checks", stats.size()}, {"pass", pass}};
    bundle.pass &= pass;
    bundle.tables.push_back(std::move(t));
  }

  if (wants("qv_scaling")) {
    if (config.N.size() < 2) throw ConfigError("qv_scaling needs at least two N values");
    const QvScaling q = qv_scaling_study(config, config.N[0], config.N[1]);
    Table t{"qv_scaling", {"N", "mean_square", "stderr"}, {}};
    t.rows.push_back({static_cast<double>(q.N_coarse), q.coarse.mean, q.coarse.std_error});
    t.rows.push_back({static_cast<double>(q.N_fine), q.fine.mean, q.fine.std_error});
    results["qv_scaling"] = {{"ratio", q.ratio}, {"ratio_stderr", q.ratio_se}, {"target", q.target},
                             {"band", {0.7 * q.target, 1.45 * q.target}}, {"pass", q.pass}};
    bundle.pass &= q.pass;
    bundle.tables.push_back(std::move(t));
  }

  if (wants("replacement")) {
    const ReplacementStudy r = replacement_study(config);
    Table t{"replacement", {"sweep", "N", "eps", "boundary", "estimate", "stderr"}, {}};
    auto emit = [&](const std::vector<ReplacementPoint>& pts, double sweep) {
      for (const auto& pt : pts) {
        t.rows.push_back({sweep, static_cast<double>(pt.N), pt.eps, pt.boundary == Boundary::kUpper ? 0.0 : 1.0,
                          pt.estimate.mean, pt.estimate.std_error});
      }
    };
    emit(r.n_sweep, 0.0);
    emit(r.eps_sweep, 1.0);
    results["replacement"] = {{"decreasing", r.decreasing}, {"pass", r.decreasing}};
    bundle.pass &= r.decreasing;
    bundle.tables.push_back(std::move(t));
  }

  if (wants("energy")) {
    const InitialProfile profile = parse_profile(config.profile, config.p);
    const PdeParams pp = config.pde_params();
    const double T = horizon(config.times) > 0.0 ? horizon(config.times) : 0.1;
    constexpr std::size_t kSnapshots = 64;
    std::vector<double> snap_times;
    for (std::size_t n = 0; n <= kSnapshots; ++n) snap_times.push_back(T * static_cast<double>(n) / kSnapshots);
    const auto snaps = solve(init_pde(profile.field, profile.road, pp), T, snap_times);
    Table t{"energy", {"q", "lower_bound", "best_single", "members"}, {}};
    for (int q = 1; q <= config.p; ++q) {
      const EnergyEstimate e = energy_functional(snaps, q, config.energy_family);
      t.rows.push_back({static_cast<double>(q), e.lower_bound, e.best_single, static_cast<double>(e.members)});
    }
    const EnergyCheck m = manufactured_energy_check(pp, config.energy_family, T, kSnapshots);
    const bool pass = m.estimate.lower_bound <= m.cap && m.ratio >= 0.8;
    Table mt{"energy_manufactured", {"lower_bound", "best_single", "cap", "ratio"}, {}};
    mt.rows.push_back({m.estimate.lower_bound, m.estimate.best_single, m.cap, m.ratio});
    results["energy"] = {{"manufactured_ratio", m.ratio}, {"cap", m.cap}, {"pass", pass}};
    bundle.pass &= pass;
    bundle.tables.push_back(std::move(t));
    bundle.tables.push_back(std::move(mt));
  }

  summary["pass"] = bundle.pass;
  bundle.summary_json = summary.dump(2);
  return bundle;
}

// ---- exact checks ----

DirichletCheckResult run_dirichlet_check(const ExperimentConfig& config) {
  config.validate();
  const int N = config.N.front();
  const auto geom = make_geom(config.p, N);
  const StateSpace space = enumerate_states(geom);
  DirichletCheckResult out;
  out.pass = true;
  out.worst_entropy_margin = -std::numeric_limits<double>::infinity();
  ordered_json j = stamp_json(config);
  auto& lemmas = j["lemmas"] = ordered_json::array();
  auto& entropy = j["entropy"] = ordered_json::array();
  const double sites = std::pow(static_cast<double>(N), config.p);
  const MeasureVector uniform = bernoulli_measure(space, 0.5);
  for (std::size_t g = 0; g < config.gammas.size(); ++g) {
    const double gamma = config.gammas[g];
    LemmaReport rep = check_lemma_identities(space, config.phys, gamma, config.density_trials,
                                             child_seed(config.seed, g));
    out.pass &= rep.pass;
    lemmas.push_back(ordered_json::parse(to_json(rep)));
    out.lemmas.push_back(std::move(rep));

    const MeasureVector nu = bernoulli_measure(space, gamma);
    const double bound = entropy_constant(gamma) * sites;
    double worst = -std::numeric_limits<double>::infinity();
    std::size_t violations = 0;
    for (std::size_t s = 0; s < space.size(); ++s) {
      const double h = relative_entropy(dirac_measure(space, static_cast<std::uint32_t>(s)), nu);
      worst = std::max(worst, h - bound);
      violations += h > bound;
    }
    for (int r = 0; r < config.random_measures; ++r) {
      const Eigen::VectorXd f = random_density(uniform, child_seed(child_seed(config.seed, 1000 + g), r));
      const MeasureVector mu = f / f.sum();
      const double h = relative_entropy(mu, nu);
      worst = std::max(worst, h - bound);
      violations += h > bound;
    }
    out.worst_entropy_margin = std::max(out.worst_entropy_margin, worst);
    out.pass &= violations == 0;
    entropy.push_back({{"gamma", gamma},
                       {"bound", bound},
                       {"worst_margin", worst},
                       {"dirac_measures", space.size()},
                       {"random_measures", config.random_measures},
                       {"violations", violations}});
  }
  j["pass"] = out.pass;
  out.json = j.dump(2);
  return out;
}

// ---- single runs ----

SimulateResult run_simulate(const ExperimentConfig& config) {
  config.validate();
  const int N = config.N.front();
  const auto geom = make_geom(config.p, N);
  const InitialProfile profile = parse_profile(config.profile, config.p);
  SimulateResult out;
  out.sim = run_trajectory(config, profile, geom, seeds_for(config.seed, kSimulateStream, N, 0), config.times, nullptr,
                           true);
  Table counts{"particle_counts", {"time", "n_field", "n_road"}, {}};
  for (std::size_t t = 0; t < config.times.size(); ++t) {
    const ParticleCounts c = total_particles(out.sim.snapshots[t]);
    out.counts.push_back(c);
    counts.rows.push_back({config.times[t], static_cast<double>(c.field), static_cast<double>(c.road)});
    const std::string name = "snapshot_" + std::to_string(t);
    const std::string path = output_path(config, name + ".csv");
    auto f = open_output(path);
    stamp(f, config, name);
    write_snapshot_csv(f, out.sim.snapshots[t]);
    out.files.push_back(path);
  }
  out.files.push_back(write_table(counts, config));
  const std::string path = output_path(config, "trajectory.csv");
  auto f = open_output(path);
  stamp(f, config, "trajectory");
  write_trajectory_csv(f, out.sim.record);
  out.files.push_back(path);
  return out;
}

PdeRunResult run_pde(const ExperimentConfig& config) {
  config.validate();
  const InitialProfile profile = parse_profile(config.profile, config.p);
  const PdeState init = init_pde(profile.field, profile.road, config.pde_params());
  PdeRunResult out;
  out.snapshots = solve(init, horizon(config.times), config.times);
  const PdeGrid& g = *init.grid;
  const auto dx = static_cast<std::size_t>(config.p - 1);
  Table mass{"pde_mass", {"time", "steps", "mass", "distance_to_flat", "min", "max"}, {}};
  for (std::size_t t = 0; t < out.snapshots.size(); ++t) {
    const PdeState& s = out.snapshots[t];
    Table grid{"pde_" + std::to_string(t), {"layer"}, {}};
    for (std::size_t q = 0; q < dx; ++q) grid.columns.push_back("x" + std::to_string(q + 1));
    grid.columns.push_back("y");
    grid.columns.push_back("value");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t j = 0; j < static_cast<std::size_t>(g.M); ++j) {
      for (std::size_t f = 0; f < g.layer; ++f) {
        std::vector<double> row{0.0};
        row.insert(row.end(), g.x[f].begin(), g.x[f].end());
        row.push_back(g.y[j]);
        row.push_back(s.v[j * g.layer + f]);
        lo = std::min(lo, row.back());
        hi = std::max(hi, row.back());
        grid.rows.push_back(std::move(row));
      }
    }
    for (std::size_t f = 0; f < g.layer; ++f) {
      std::vector<double> row{1.0};
      row.insert(row.end(), g.x[f].begin(), g.x[f].end());
      row.push_back(0.0);
      row.push_back(s.u[f]);
      lo = std::min(lo, row.back());
      hi = std::max(hi, row.back());
      grid.rows.push_back(std::move(row));
    }
    mass.rows.push_back({s.time, static_cast<double>(s.steps), total_mass(s), distance_to_flat(s), lo, hi});
    out.files.push_back(write_table(grid, config));
  }
  out.files.push_back(write_table(mass, config));
  return out;
}

// ---- dispatch ----

int run_experiment(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  log << "fieldroad " << artifact_version() << " " << kind_name(config.kind) << " config_hash=" << hex64(config.hash())
      << "\n";
  switch (config.kind) {
    case ExperimentKind::kSimulate: {
      const auto r = run_simulate(config);
      log << "events=" << r.sim.record.events.size() << " steps=" << r.sim.steps << "\n";
      for (const auto& f : r.files) log << "wrote " << f << "\n";
      return 0;
    }
    case ExperimentKind::kPde: {
      const auto r = run_pde(config);
      for (const auto& f : r.files) log << "wrote " << f << "\n";
      return 0;
    }
    case ExperimentKind::kConverge: {
      const auto r = run_convergence_study(config);
      log << "wrote " << write_table(r.errors, config) << "\n";
      log << "wrote " << write_table(r.pairings, config) << "\n";
      ordered_json j = stamp_json(config);
      j["field_improves"] = r.field_improves;
      j["road_improves"] = r.road_improves;
      j["monotone"] = r.monotone;
      j["within_noise"] = r.within_noise;
      auto& levels = j["levels"] = ordered_json::array();
      for (const auto& l : r.levels) {
        levels.push_back({{"N", l.N},
                          {"field_error", l.field_error},
                          {"road_error", l.road_error},
                          {"wall_seconds", l.wall_seconds}});
      }
      const std::string path = output_path(config, "convergence_summary.json");
      write_text(path, j.dump(2));
      log << "wrote " << path << "\n";
      const bool pass = r.field_improves && r.road_improves;
      log << (pass ? "PASS" : "FAIL") << " error(N_max) < error(N_min) for field and road\n";
      return pass ? 0 : 2;
    }
    case ExperimentKind::kOracle: {
      const auto r = run_oracle_comparison(config);
      log << "wrote " << write_table(r.table, config) << "\n";
      for (const auto& row : r.rows) {
        log << "t=" << format_double(row.time) << " tv=" << format_double(row.tv)
            << " bound=" << format_double(row.bound) << "\n";
      }
      log << (r.pass ? "PASS" : "FAIL") << " total variation below the multinomial bound\n";
      return r.pass ? 0 : 2;
    }
    case ExperimentKind::kDirichletCheck: {
      const auto r = run_dirichlet_check(config);
      const std::string path = output_path(config, "dirichlet_check.json");
      write_text(path, r.json);
      log << "wrote " << path << "\n";
      log << (r.pass ? "PASS" : "FAIL") << " identities and entropy bound\n";
      return r.pass ? 0 : 2;
    }
    case ExperimentKind::kDiagnostics: {
      const auto r = run_diagnostics(config);
      for (const auto& t : r.tables) log << "wrote " << write_table(t, config) << "\n";
      if (!r.summary_json.empty()) {
        const std::string path = output_path(config, "diagnostics_summary.json");
        write_text(path, r.summary_json);
        log << "wrote " << path << "\n";
      }
      log << (r.pass ? "PASS" : "FAIL") << " diagnostics\n";
      return r.pass ? 0 : 2;
    }
  }
  return 1;
}

}  // namespace fieldroad
