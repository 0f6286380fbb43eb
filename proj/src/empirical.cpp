#include "fieldroad/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fieldroad {

namespace {

double inv_pow(int N, int e) { return std::pow(static_cast<double>(N), -e); }

template <class F>
double laplacian_x_stencil(const LatticeGeom& geom, std::size_t flat, F value_at_flat) {
  const double n = geom.scale();
  const double centre = value_at_flat(flat);
  double s = 0.0;
  for (int q = 0; q < geom.dim() - 1; ++q) {
    s += value_at_flat(geom.shift_x(flat, q, +1)) - 2.0 * centre + value_at_flat(geom.shift_x(flat, q, -1));
  }
  return n * n * s;
}

// Value of G at time t at the macroscopic point of a flat x index and height j.
double g_at(const FieldFunction& G, double t, const LatticeGeom& geom, std::size_t flat, int j) {
  const auto x = geom.road_to_macro(flat);
  return G.value(t, x, static_cast<double>(j) / geom.scale());
}

void check_eps(double eps) {
  if (!(eps > 0.0 && eps <= 0.5)) throw std::invalid_argument("box size eps must lie in (0, 1/2]");
}

}  // namespace

double pair_field(const Configuration& config, const FieldFunction& G, double t, const LatticeGeom& geom) {
  double s = 0.0;
  for (std::size_t k = 0; k < config.eta.size(); ++k) {
    if (!config.eta[k]) continue;
    const MacroPoint m = geom.site_to_macro(k);
    s += G.value(t, m.x, m.y);
  }
  return s * inv_pow(geom.scale(), geom.dim());
}

double pair_road(const Configuration& config, const RoadFunction& H, double t, const LatticeGeom& geom) {
  double s = 0.0;
  for (std::size_t i = 0; i < config.xi.size(); ++i) {
    if (config.xi[i]) s += H.value(t, geom.road_to_macro(i));
  }
  return s * inv_pow(geom.scale(), geom.dim() - 1);
}

double box_normalizer(int p, int N, double eps) {
  check_eps(eps);
  const double r = std::floor(eps * N);
  return 1.0 / (std::pow(2.0 * r + 1.0, p - 1) * (r + 1.0));
}

std::vector<std::size_t> box_sites(const LatticeGeom& geom, std::size_t site, double eps) {
  check_eps(eps);
  if (!geom.is_lower(site) && !geom.is_upper(site)) {
    throw std::invalid_argument("box averages are taken at boundary-layer sites only");
  }
  const int n = geom.scale();
  const int r = static_cast<int>(std::floor(eps * n));
  const SiteCoord c = geom.bulk_coord(site);
  // x-offsets per direction, deduplicated under the torus wrap.
  std::vector<std::size_t> flats = {geom.road_index(c.x)};
  for (int q = 0; q < geom.dim() - 1; ++q) {
    std::vector<std::size_t> next;
    for (std::size_t f : flats) {
      std::size_t left = f;
      std::size_t right = f;
      next.push_back(f);
      for (int k = 1; k <= r; ++k) {
        left = geom.shift_x(left, q, -1);
        right = geom.shift_x(right, q, +1);
        next.push_back(left);
        next.push_back(right);
      }
    }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    flats = std::move(next);
  }
  std::vector<std::size_t> out;
  const int ylo = std::max(1, c.y - r);
  const int yhi = std::min(n - 1, c.y + r);
  for (int y = ylo; y <= yhi; ++y) {
    for (std::size_t f : flats) out.push_back(static_cast<std::size_t>(y - 1) * geom.layer_size() + f);
  }
  return out;
}

double box_average(const Configuration& config, const LatticeGeom& geom, std::size_t site, double eps) {
  const auto sites = box_sites(geom, site, eps);
  std::size_t occupied = 0;
  for (std::size_t k : sites) occupied += config.eta[k];
  return static_cast<double>(occupied) / static_cast<double>(sites.size());
}

double discrete_laplacian_x(const FieldFunction& G, double t, std::size_t site, const LatticeGeom& geom) {
  const int j = geom.layer_of(site);
  geom.bulk_coord(site);  // validates the index
  return laplacian_x_stencil(geom, geom.in_layer(site), [&](std::size_t f) { return g_at(G, t, geom, f, j); });
}

double discrete_laplacian_x(const RoadFunction& H, double t, std::size_t road_site, const LatticeGeom& geom) {
  geom.road_coord(road_site);
  return laplacian_x_stencil(geom, road_site,
                             [&](std::size_t f) { return H.value(t, geom.road_to_macro(f)); });
}

double discrete_dyy(const FieldFunction& G, double t, std::size_t site, const LatticeGeom& geom) {
  geom.bulk_coord(site);
  const int j = geom.layer_of(site);
  if (j <= 1 || j >= geom.scale() - 1) throw std::invalid_argument("discrete d_yy is defined on interior sites only");
  const double n = geom.scale();
  const std::size_t f = geom.in_layer(site);
  return n * n * (g_at(G, t, geom, f, j + 1) - 2.0 * g_at(G, t, geom, f, j) + g_at(G, t, geom, f, j - 1));
}

double discrete_dy(const FieldFunction& G, double t, std::size_t site, const LatticeGeom& geom) {
  geom.bulk_coord(site);
  const int j = geom.layer_of(site);
  const double n = geom.scale();
  const std::size_t f = geom.in_layer(site);
  if (j == 1) return n * (g_at(G, t, geom, f, 2) - g_at(G, t, geom, f, 1));
  if (j == geom.scale() - 1) return n * (g_at(G, t, geom, f, j) - g_at(G, t, geom, f, j - 1));
  throw std::invalid_argument("discrete d_y is defined on the boundary layers only");
}

// ---- PathFunctionalObserver ----

PathFunctionalObserver::PathFunctionalObserver(const LatticeGeom& geom, std::vector<double> times)
    : geom_(geom), times_(std::move(times)) {
  for (std::size_t k = 0; k < times_.size(); ++k) {
    if (!(times_[k] >= 0.0)) throw std::invalid_argument("observation times must be non-negative");
    if (k > 0 && times_[k] < times_[k - 1]) throw std::invalid_argument("observation times must be sorted");
  }
}

void PathFunctionalObserver::on_start(const Configuration& initial, double t0) {
  if (!initial.matches(geom_)) throw std::invalid_argument("configuration does not match the geometry");
  config_ = initial;
  clock_ = t0;
  next_ = 0;
  reset();
}

void PathFunctionalObserver::advance(double target, bool inclusive) {
  while (next_ < times_.size() && (times_[next_] < target || (inclusive && times_[next_] <= target))) {
    integrate(clock_, times_[next_]);
    clock_ = times_[next_];
    observe(next_++);
  }
  if (target > clock_) {
    integrate(clock_, target);
    clock_ = target;
  }
}

void PathFunctionalObserver::toggle_eta(std::size_t site) {
  config_.eta[site] ^= 1U;
  flipped_eta(site);
}

void PathFunctionalObserver::toggle_xi(std::size_t road_site) {
  config_.xi[road_site] ^= 1U;
  flipped_xi(road_site);
}

void PathFunctionalObserver::on_event(const Event& event) {
  advance(event.time, false);
  jump_time_ = event.time;
  switch (event.kind) {
    case EventKind::kFieldSwap: {
      const Edge e = geom_.field_edges()[event.location];
      toggle_eta(e.a);
      toggle_eta(e.b);
      break;
    }
    case EventKind::kRoadSwap: {
      const Edge e = geom_.road_edges()[event.location];
      toggle_xi(e.a);
      toggle_xi(e.b);
      break;
    }
    case EventKind::kRobinFlip:
      toggle_eta(geom_.lower_site(event.location));
      break;
    case EventKind::kReactionFlip:
      toggle_xi(event.location);
      break;
    case EventKind::kReservoirFlip:
      toggle_eta(geom_.upper_site(event.location));
      break;
  }
}

void PathFunctionalObserver::on_finish(double final_time) {
  if (next_ < times_.size() && times_.back() > final_time) {
    throw HorizonError("requested time " + std::to_string(times_.back()) + " beyond trajectory horizon " +
                       std::to_string(final_time));
  }
  advance(final_time, true);
}

// ---- MartingaleObserver ----

MartingaleObserver::MartingaleObserver(const LatticeGeom& geom, const PhysicalParams& phys, TestFunctionPair pair,
                                       std::vector<double> times)
    : PathFunctionalObserver(geom, std::move(times)), phys_(phys), pair_(std::move(pair)) {
  const int p = geom.dim();
  const int n = geom.scale();
  np_ = inv_pow(n, p);
  np1_ = inv_pow(n, p - 1);
  const std::size_t nb = geom.bulk_size();
  const std::size_t nr = geom.road_size();
  const double d = phys.d;
  const double alpha = phys.alpha;

  // Unit time factor: evaluate the spatial parts only.
  FieldFunction g_unit = pair_.G;
  g_unit.tau = TimeFactor::constant(1.0);
  RoadFunction h_unit = pair_.H;
  h_unit.tau = TimeFactor::constant(1.0);

  g_.resize(nb);
  wk_eta_.assign(nb, 0.0);
  for (std::size_t s = 0; s < nb; ++s) {
    const MacroPoint m = geom.site_to_macro(s);
    g_[s] = g_unit.spatial(m.x, m.y);
  }
  for (std::size_t s = 0; s < nb; ++s) {
    double w = np_ * d * discrete_laplacian_x(g_unit, 0.0, s, geom);
    const bool lower = geom.is_lower(s);
    const bool upper = geom.is_upper(s);
    if (!lower && !upper) w += np_ * d * discrete_dyy(g_unit, 0.0, s, geom);
    if (lower) w += np1_ * d * discrete_dy(g_unit, 0.0, s, geom) - alpha * np1_ * g_[s];
    if (upper) w += -np1_ * d * discrete_dy(g_unit, 0.0, s, geom) - np_ * g_[s];
    wk_eta_[s] = w;
  }
  wk_xi_.resize(nr);
  h_.resize(nr);
  wh_xi_.resize(nr);
  wh_eta_.resize(nr);
  glow2_.resize(nr);
  gup2_.resize(nr);
  hroad2_.resize(nr);
  k_const_ = 0.0;
  for (std::size_t i = 0; i < nr; ++i) {
    const double gl = g_[geom.lower_site(i)];
    const double gu = g_[geom.upper_site(i)];
    wk_xi_[i] = alpha * np1_ * gl;
    k_const_ += np_ * phys.b * gu;
    h_[i] = h_unit.spatial(geom.road_to_macro(i));
    wh_xi_[i] = np1_ * (phys.D * discrete_laplacian_x(h_unit, 0.0, i, geom) - alpha * h_[i]);
    wh_eta_[i] = alpha * np1_ * h_[i];
    glow2_[i] = gl * gl;
    gup2_[i] = gu * gu;
    gup2_total_ += gup2_[i];
    hroad2_[i] = h_[i] * h_[i];
  }
  ge2_.resize(geom.field_edges().size());
  for (std::size_t e = 0; e < ge2_.size(); ++e) {
    const Edge ed = geom.field_edges()[e];
    const double diff = g_[ed.a] - g_[ed.b];
    ge2_[e] = diff * diff;
  }
  he2_.resize(geom.road_edges().size());
  for (std::size_t e = 0; e < he2_.size(); ++e) {
    const Edge ed = geom.road_edges()[e];
    const double diff = h_[ed.a] - h_[ed.b];
    he2_[e] = diff * diff;
  }
}

void MartingaleObserver::reset() {
  const Configuration& c = config();
  const LatticeGeom& g = geom();
  a_g_ = a_h_ = k_eta_ = k_xi_ = kh_xi_ = kh_eta_ = 0.0;
  q_edges_ = q_rob_g_ = q_up_ = q_road_edges_ = q_rob_h_ = 0.0;
  jumps_g_ = jumps_h_ = int_g_ = int_h_ = int_qg_ = int_qh_ = 0.0;
  for (std::size_t s = 0; s < c.eta.size(); ++s) {
    if (!c.eta[s]) continue;
    a_g_ += g_[s];
    k_eta_ += wk_eta_[s];
  }
  for (std::size_t i = 0; i < c.xi.size(); ++i) {
    const bool eta_low = c.eta[g.lower_site(i)] != 0;
    const bool xi = c.xi[i] != 0;
    if (xi) {
      a_h_ += h_[i];
      k_xi_ += wk_xi_[i];
      kh_xi_ += wh_xi_[i];
    }
    if (eta_low) kh_eta_ += wh_eta_[i];
    if (eta_low != xi) {
      q_rob_g_ += glow2_[i];
      q_rob_h_ += hroad2_[i];
    }
    if (c.eta[g.upper_site(i)]) q_up_ += gup2_[i];
  }
  for (std::size_t e = 0; e < ge2_.size(); ++e) {
    const Edge ed = g.field_edges()[e];
    if (c.eta[ed.a] != c.eta[ed.b]) q_edges_ += ge2_[e];
  }
  for (std::size_t e = 0; e < he2_.size(); ++e) {
    const Edge ed = g.road_edges()[e];
    if (c.xi[ed.a] != c.xi[ed.b]) q_road_edges_ += he2_[e];
  }
  series_ = MartingaleSeries{};
  series_.times = times();
  const std::size_t k = times().size();
  series_.field.assign(k, 0.0);
  series_.road.assign(k, 0.0);
  series_.qv_field.assign(k, 0.0);
  series_.qv_road.assign(k, 0.0);
}

double MartingaleObserver::drift_field() const { return k_eta_ + k_xi_ + k_const_; }

double MartingaleObserver::drift_road() const { return kh_xi_ + kh_eta_; }

double MartingaleObserver::qv_field_rate() const {
  const double n = geom().scale();
  const double b = phys_.b;
  return phys_.d * n * n * np_ * np_ * q_edges_ + phys_.alpha * n * np_ * np_ * q_rob_g_ +
         np_ * np_ * (b * gup2_total_ + (1.0 - 2.0 * b) * q_up_);
}

double MartingaleObserver::qv_road_rate() const {
  const double n = geom().scale();
  return phys_.D * n * n * np1_ * np1_ * q_road_edges_ + phys_.alpha * np1_ * np1_ * q_rob_h_;
}

void MartingaleObserver::integrate(double a, double b) {
  if (b <= a) return;
  int_g_ += pair_.G.tau.integral(a, b) * drift_field();
  int_h_ += pair_.H.tau.integral(a, b) * drift_road();
  int_qg_ += pair_.G.tau.integral_squared(a, b) * qv_field_rate();
  int_qh_ += pair_.H.tau.integral_squared(a, b) * qv_road_rate();
}

void MartingaleObserver::flipped_eta(std::size_t s) {
  const Configuration& c = config();
  const LatticeGeom& g = geom();
  const double sign = c.eta[s] ? 1.0 : -1.0;
  a_g_ += sign * g_[s];
  k_eta_ += sign * wk_eta_[s];
  jumps_g_ += pair_.G.tau.value(jump_time()) * sign * np_ * g_[s];
  for (std::uint32_t e : g.incident_field_edges(s)) {
    const Edge ed = g.field_edges()[e];
    q_edges_ += (c.eta[ed.a] != c.eta[ed.b] ? 1.0 : -1.0) * ge2_[e];
  }
  if (g.is_lower(s)) {
    const std::size_t i = g.in_layer(s);
    kh_eta_ += sign * wh_eta_[i];
    const double mismatch = c.eta[s] != c.xi[i] ? 1.0 : -1.0;
    q_rob_g_ += mismatch * glow2_[i];
    q_rob_h_ += mismatch * hroad2_[i];
  }
  if (g.is_upper(s)) q_up_ += sign * gup2_[g.in_layer(s)];
}

void MartingaleObserver::flipped_xi(std::size_t i) {
  const Configuration& c = config();
  const LatticeGeom& g = geom();
  const double sign = c.xi[i] ? 1.0 : -1.0;
  a_h_ += sign * h_[i];
  k_xi_ += sign * wk_xi_[i];
  kh_xi_ += sign * wh_xi_[i];
  jumps_h_ += pair_.H.tau.value(jump_time()) * sign * np1_ * h_[i];
  for (std::uint32_t e : g.incident_road_edges(i)) {
    const Edge ed = g.road_edges()[e];
    q_road_edges_ += (c.xi[ed.a] != c.xi[ed.b] ? 1.0 : -1.0) * he2_[e];
  }
  const double mismatch = c.eta[g.lower_site(i)] != c.xi[i] ? 1.0 : -1.0;
  q_rob_g_ += mismatch * glow2_[i];
  q_rob_h_ += mismatch * hroad2_[i];
}

void MartingaleObserver::observe(std::size_t k) {
  series_.field[k] = jumps_g_ - int_g_;
  series_.road[k] = jumps_h_ - int_h_;
  series_.qv_field[k] = int_qg_;
  series_.qv_road[k] = int_qh_;
}

MartingaleSeries martingale_eval(const TrajectoryRecord& trajectory, const LatticeGeom& geom,
                                 const PhysicalParams& phys, const TestFunctionPair& pair,
                                 std::span<const double> times) {
  MartingaleObserver obs(geom, phys, pair, {times.begin(), times.end()});
  replay(trajectory, geom, obs);
  return obs.series();
}

QuadraticVariationSeries quadratic_variation_eval(const TrajectoryRecord& trajectory, const LatticeGeom& geom,
                                                  const PhysicalParams& phys, const TestFunctionPair& pair,
                                                  std::span<const double> times) {
  const MartingaleSeries s = martingale_eval(trajectory, geom, phys, pair, times);
  return {s.times, s.qv_field, s.qv_road};
}

// ---- replacement ----

ReplacementObserver::ReplacementObserver(const LatticeGeom& geom, const FieldFunction& G,
                                         std::vector<ReplacementSpec> specs, std::vector<double> times)
    : PathFunctionalObserver(geom, std::move(times)), tau_(G.tau) {
  FieldFunction g_unit = G;
  g_unit.tau = TimeFactor::constant(1.0);
  const double np1 = inv_pow(geom.scale(), geom.dim() - 1);
  for (const ReplacementSpec& spec : specs) {
    std::vector<double> w(geom.bulk_size(), 0.0);
    for (std::size_t i = 0; i < geom.layer_size(); ++i) {
      const std::size_t site = spec.boundary == Boundary::kUpper ? geom.upper_site(i) : geom.lower_site(i);
      const MacroPoint m = geom.site_to_macro(site);
      const double gi = np1 * g_unit.spatial(m.x, m.y);
      const auto box = box_sites(geom, site, spec.eps);
      const double c = 1.0 / static_cast<double>(box.size());
      for (std::size_t k : box) w[k] += gi * c;
      w[site] -= gi;
    }
    weights_.push_back(std::move(w));
  }
}

void ReplacementObserver::reset() {
  const Configuration& c = config();
  sums_.assign(weights_.size(), 0.0);
  integrals_.assign(weights_.size(), 0.0);
  values_.assign(weights_.size(), std::vector<double>(times().size(), 0.0));
  for (std::size_t s = 0; s < weights_.size(); ++s) {
    for (std::size_t k = 0; k < c.eta.size(); ++k) {
      if (c.eta[k]) sums_[s] += weights_[s][k];
    }
  }
}

void ReplacementObserver::integrate(double a, double b) {
  if (b <= a) return;
  const double w = tau_.integral(a, b);
  for (std::size_t s = 0; s < sums_.size(); ++s) integrals_[s] += w * sums_[s];
}

void ReplacementObserver::flipped_eta(std::size_t site) {
  const double sign = config().eta[site] ? 1.0 : -1.0;
  for (std::size_t s = 0; s < sums_.size(); ++s) sums_[s] += sign * weights_[s][site];
}

void ReplacementObserver::observe(std::size_t k) {
  for (std::size_t s = 0; s < integrals_.size(); ++s) values_[s][k] = integrals_[s];
}

Estimate mean_and_stderr(std::span<const double> samples) {
  Estimate e;
  e.samples = samples.size();
  if (samples.empty()) return e;
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(samples.size());
  e.mean = mean;
  if (samples.size() < 2) return e;
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double var = ss / static_cast<double>(samples.size() - 1);
  e.std_error = std::sqrt(var / static_cast<double>(samples.size()));
  return e;
}

Estimate replacement_diagnostic(std::span<const TrajectoryRecord> trajectories, const LatticeGeom& geom,
                                const FieldFunction& G, double eps, Boundary boundary, double t) {
  if (trajectories.size() < 2) throw std::invalid_argument("replacement diagnostic needs at least two trajectories");
  std::vector<double> samples;
  samples.reserve(trajectories.size());
  for (const TrajectoryRecord& rec : trajectories) {
    ReplacementObserver obs(geom, G, {{eps, boundary}}, {t});
    replay(rec, geom, obs);
    samples.push_back(std::abs(obs.values()[0][0]));
  }
  return mean_and_stderr(samples);
}

// ---- coarse density ----

CoarseDensity coarse_density(const Configuration& config, const LatticeGeom& geom, int bins) {
  const int n = geom.scale();
  const int p = geom.dim();
  if (bins < 1 || bins > n) throw std::invalid_argument("bins per axis must lie in [1, N]");
  CoarseDensity out;
  out.p = p;
  out.bins = bins;
  std::size_t road_cells = 1;
  for (int q = 0; q < p - 1; ++q) road_cells *= static_cast<std::size_t>(bins);
  const std::size_t field_cells = road_cells * static_cast<std::size_t>(bins);
  std::vector<double> field_sum(field_cells, 0.0);
  std::vector<double> road_sum(road_cells, 0.0);
  out.field_sites.assign(field_cells, 0);
  out.road_sites.assign(road_cells, 0);

  auto torus_cell = [&](const std::vector<int>& x) {
    std::size_t cell = 0;
    for (int xq : x) cell = cell * static_cast<std::size_t>(bins) + static_cast<std::size_t>(xq * bins / n);
    return cell;
  };
  std::vector<std::size_t> road_cell_of(geom.road_size());
  for (std::size_t i = 0; i < geom.road_size(); ++i) {
    road_cell_of[i] = torus_cell(geom.road_coord(i));
    road_sum[road_cell_of[i]] += config.xi[i];
    ++out.road_sites[road_cell_of[i]];
  }
  for (std::size_t s = 0; s < geom.bulk_size(); ++s) {
    const int j = geom.layer_of(s);
    const std::size_t cell =
        static_cast<std::size_t>(j * bins / n) * road_cells + road_cell_of[geom.in_layer(s)];
    field_sum[cell] += config.eta[s];
    ++out.field_sites[cell];
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.field.resize(field_cells);
  out.road.resize(road_cells);
  for (std::size_t c = 0; c < field_cells; ++c) {
    out.field[c] = out.field_sites[c] ? field_sum[c] / static_cast<double>(out.field_sites[c]) : nan;
  }
  for (std::size_t c = 0; c < road_cells; ++c) {
    out.road[c] = out.road_sites[c] ? road_sum[c] / static_cast<double>(out.road_sites[c]) : nan;
  }
  return out;
}

}  // namespace fieldroad
