#include "fieldroad/pde.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

namespace fieldroad {

void PdeParams::validate() const {
  if (!(d > 0.0 && D > 0.0 && alpha > 0.0)) throw std::invalid_argument("d, D and alpha must be positive");
  if (p < 2 || p > 3) throw std::invalid_argument("the solver supports p = 2 and p = 3");
  if (M < 4) throw std::invalid_argument("at least 4 cells per axis are required");
  if (!(cfl_safety > 0.0)) throw std::invalid_argument("CFL safety factor must be positive");
}

PdeGrid::PdeGrid(const PdeParams& params) : p(params.p), M(params.M), h(1.0 / params.M), layer(1) {
  const auto dx = static_cast<std::size_t>(p - 1);
  const auto m = static_cast<std::size_t>(M);
  for (std::size_t q = 0; q < dx; ++q) layer *= m;
  x.resize(layer);
  x_plus.resize(layer * dx);
  x_minus.resize(layer * dx);
  for (std::size_t f = 0; f < layer; ++f) {
    x[f].resize(dx);
    std::size_t stride = layer;
    for (std::size_t q = 0; q < dx; ++q) {
      stride /= m;
      const std::size_t c = (f / stride) % m;
      x[f][q] = (static_cast<double>(c) + 0.5) * h;
      const std::size_t base = f - c * stride;
      x_plus[f * dx + q] = static_cast<std::uint32_t>(base + ((c + 1) % m) * stride);
      x_minus[f * dx + q] = static_cast<std::uint32_t>(base + ((c + m - 1) % m) * stride);
    }
  }
  y.resize(m);
  for (std::size_t j = 0; j < m; ++j) y[j] = (static_cast<double>(j) + 0.5) * h;
}

double stable_dt(const PdeParams& params) {
  params.validate();
  const double h = 1.0 / params.M;
  const double diff = std::max(params.p * params.d, (params.p - 1) * params.D);
  return params.cfl_safety * h * h / (2.0 * (diff + params.alpha * h));
}

double exchange_coefficient(const PdeParams& params) {
  if (params.trace == TraceMode::kBottomCell) return params.alpha;
  const double h = 1.0 / params.M;
  return params.alpha / (1.0 + params.alpha * h / (2.0 * params.d));
}

void check_cfl(const PdeParams& params, double dt) {
  params.validate();
  if (!(dt > 0.0)) throw CflViolation("time step must be positive");
  const double h = 1.0 / params.M;
  const double kappa = exchange_coefficient(params);
  const int p = params.p;
  const double interior = 1.0 - dt * 2.0 * p * params.d / (h * h);
  const double bottom = 1.0 - dt * ((2.0 * p - 1.0) * params.d / (h * h) + kappa / h);
  const double road = 1.0 - dt * (2.0 * (p - 1) * params.D / (h * h) + kappa);
  const double worst = std::min({interior, bottom, road});
  if (worst < -1e-12) {
    throw CflViolation("explicit step dt = " + std::to_string(dt) + " breaks monotonicity (smallest diagonal " +
                       std::to_string(worst) + "); lower cfl_safety or the step");
  }
}

PdeState sample_state(const FieldProfile& v, const RoadProfile& u, const PdeParams& params, double time) {
  params.validate();
  PdeState s;
  s.params = params;
  s.grid = std::make_shared<const PdeGrid>(params);
  const PdeGrid& g = *s.grid;
  s.v.resize(g.layer * static_cast<std::size_t>(g.M));
  s.u.resize(g.layer);
  for (int j = 0; j < g.M; ++j) {
    for (std::size_t f = 0; f < g.layer; ++f) {
      s.v[static_cast<std::size_t>(j) * g.layer + f] = v(g.x[f], g.y[static_cast<std::size_t>(j)]);
    }
  }
  for (std::size_t f = 0; f < g.layer; ++f) s.u[f] = u(g.x[f]);
  s.time = time;
  s.dt = stable_dt(params);
  check_cfl(params, s.dt);
  return s;
}

PdeState init_pde(const FieldProfile& v0, const RoadProfile& u0, const PdeParams& params) {
  PdeState s = sample_state(v0, u0, params);
  for (double x : s.v) checked_density(x, "initial field datum v0");
  for (double x : s.u) checked_density(x, "initial road datum u0");
  return s;
}

PdeState zero_state(const PdeParams& params) {
  return sample_state([](std::span<const double>, double) { return 0.0; },
                      [](std::span<const double>) { return 0.0; }, params);
}

double bottom_trace(const PdeState& state, std::size_t i) {
  if (state.params.trace == TraceMode::kBottomCell) return state.v[i];
  const double flux = exchange_coefficient(state.params) * (state.u[i] - state.v[i]);
  return state.v[i] + state.h() * flux / (2.0 * state.params.d);
}

void advance(PdeState& state, double dt, const PdeSources* sources) {
  const PdeGrid& g = *state.grid;
  const PdeParams& pr = state.params;
  const std::size_t L = g.layer;
  const auto dx = static_cast<std::size_t>(g.p - 1);
  const auto m = static_cast<std::size_t>(g.M);
  const double h = g.h;
  const double cd = dt * pr.d / (h * h);
  const double cD = dt * pr.D / (h * h);
  const double kappa = exchange_coefficient(pr);
  const std::vector<double>& v = state.v;
  const std::vector<double>& u = state.u;
  std::vector<double> nv(v.size());
  std::vector<double> nu(u.size());

  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t row = j * L;
    for (std::size_t f = 0; f < L; ++f) {
      const std::size_t c = row + f;
      double lap = 0.0;
      for (std::size_t q = 0; q < dx; ++q) lap += v[row + g.x_plus[f * dx + q]] + v[row + g.x_minus[f * dx + q]] - 2.0 * v[c];
      if (j > 0) lap += v[c - L] - v[c];
      if (j + 1 < m) lap += v[c + L] - v[c];  // top cell: zero-flux face
      nv[c] = v[c] + cd * lap;
    }
  }
  for (std::size_t f = 0; f < L; ++f) {
    const double flux = kappa * (u[f] - v[f]);
    nv[f] += dt * flux / h;
    double lap = 0.0;
    for (std::size_t q = 0; q < dx; ++q) lap += u[g.x_plus[f * dx + q]] + u[g.x_minus[f * dx + q]] - 2.0 * u[f];
    nu[f] = u[f] + cD * lap - dt * flux;
  }
  if (sources != nullptr) {
    if (sources->field) {
      for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t f = 0; f < L; ++f) nv[j * L + f] += dt * sources->field(state.time, g.x[f], g.y[j]);
      }
    }
    if (sources->road) {
      for (std::size_t f = 0; f < L; ++f) nu[f] += dt * sources->road(state.time, g.x[f]);
    }
  }
  state.v = std::move(nv);
  state.u = std::move(nu);
  state.time += dt;
  ++state.steps;
}

PdeState pde_step(const PdeState& state) {
  check_cfl(state.params, state.dt);
  PdeState next = state;
  advance(next, state.dt);
  return next;
}

namespace {
// Advances to `target`, shortening the last step to land exactly.
void march_to(PdeState& state, double target, const PdeSources* sources) {
  while (state.time < target) {
    const double remaining = target - state.time;
    if (remaining <= state.dt * (1.0 + 1e-9)) {
      advance(state, remaining, sources);
      state.time = target;
    } else {
      advance(state, state.dt, sources);
    }
  }
}
}  // namespace

std::vector<PdeState> solve(PdeState state, double t_end, std::span<const double> snapshot_times,
                            const PdeSources* sources) {
  check_cfl(state.params, state.dt);
  if (!(t_end >= state.time)) throw std::invalid_argument("t_end precedes the current time");
  for (std::size_t k = 0; k < snapshot_times.size(); ++k) {
    if (k > 0 && snapshot_times[k] < snapshot_times[k - 1]) throw std::invalid_argument("snapshot times must be sorted");
    if (snapshot_times[k] < state.time || snapshot_times[k] > t_end) {
      throw std::invalid_argument("snapshot time outside [t0, t_end]");
    }
  }
  std::vector<PdeState> out;
  out.reserve(std::max<std::size_t>(1, snapshot_times.size()));
  for (double t : snapshot_times) {
    march_to(state, t, sources);
    out.push_back(state);
  }
  march_to(state, t_end, sources);
  if (snapshot_times.empty()) out.push_back(std::move(state));
  return out;
}

std::vector<PdeState> solve_all_steps(PdeState state, double t_end, std::size_t stride) {
  check_cfl(state.params, state.dt);
  if (stride == 0) throw std::invalid_argument("stride must be positive");
  std::vector<PdeState> out = {state};
  std::size_t k = 0;
  while (state.time < t_end) {
    march_to(state, std::min(t_end, state.time + state.dt), nullptr);
    if (++k % stride == 0 || state.time >= t_end) out.push_back(state);
  }
  return out;
}

namespace {

// Lower corner index and weight along a periodic axis with centres (c + 1/2) h.
std::pair<std::size_t, double> periodic_bracket(double x, const PdeGrid& g) {
  double s = x / g.h - 0.5;
  s -= std::floor(s / g.M) * g.M;
  const double c = std::floor(s);
  auto lo = static_cast<std::size_t>(c) % static_cast<std::size_t>(g.M);
  return {lo, s - c};
}

// Road-cell index and weight for each of the 2^{p-1} corners surrounding x.
std::vector<std::pair<std::size_t, double>> road_stencil(const PdeGrid& g, std::span<const double> x) {
  const auto dx = static_cast<std::size_t>(g.p - 1);
  const auto m = static_cast<std::size_t>(g.M);
  std::vector<std::pair<std::size_t, double>> out{{0, 1.0}};
  std::size_t stride = g.layer;
  for (std::size_t q = 0; q < dx; ++q) {
    stride /= m;
    const auto [lo, w] = periodic_bracket(x[q], g);
    const std::size_t hi = (lo + 1) % m;
    std::vector<std::pair<std::size_t, double>> next;
    next.reserve(out.size() * 2);
    for (const auto& [idx, wt] : out) {
      next.emplace_back(idx + lo * stride, wt * (1.0 - w));
      next.emplace_back(idx + hi * stride, wt * w);
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace

double interpolate_road(const PdeState& state, std::span<const double> x) {
  double sum = 0.0;
  for (const auto& [idx, wt] : road_stencil(*state.grid, x)) sum += wt * state.u[idx];
  return sum;
}

double interpolate_field(const PdeState& state, std::span<const double> x, double y) {
  const PdeGrid& g = *state.grid;
  const double s = std::clamp(y / g.h - 0.5, 0.0, static_cast<double>(g.M - 1));
  const auto lo = std::min(static_cast<std::size_t>(s), static_cast<std::size_t>(g.M - 1));
  const std::size_t hi = std::min(lo + 1, static_cast<std::size_t>(g.M - 1));
  const double w = s - static_cast<double>(lo);
  double sum = 0.0;
  for (const auto& [idx, wt] : road_stencil(g, x)) {
    sum += wt * ((1.0 - w) * state.v[lo * g.layer + idx] + w * state.v[hi * g.layer + idx]);
  }
  return sum;
}

double total_mass(const PdeState& state) {
  const double h = state.h();
  const int p = state.params.p;
  double sv = 0.0;
  double su = 0.0;
  for (double x : state.v) sv += x;
  for (double x : state.u) su += x;
  return std::pow(h, p) * sv + std::pow(h, p - 1) * su;
}

double distance_to_flat(const PdeState& state) {
  // Field and road both have unit measure.
  const double c = total_mass(state) / 2.0;
  double worst = 0.0;
  for (double x : state.v) worst = std::max(worst, std::abs(x - c));
  for (double x : state.u) worst = std::max(worst, std::abs(x - c));
  return worst;
}

// ---- weak residual ----

namespace {

struct WeakIntegrands {
  double pair_field;  // <v(t), G(t)>
  double pair_road;   // <u(t), H(t)>
  double rhs_field;
  double rhs_road;
};

WeakIntegrands weak_integrands(const PdeState& s, const TestFunctionPair& pair) {
  const PdeGrid& g = *s.grid;
  const PdeParams& pr = s.params;
  const double t = s.time;
  const double hp = std::pow(g.h, g.p);
  const double hp1 = std::pow(g.h, g.p - 1);
  const auto m = static_cast<std::size_t>(g.M);
  WeakIntegrands w{0, 0, 0, 0};
  double bulk_pair = 0.0;
  double bulk_rhs = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t f = 0; f < g.layer; ++f) {
      const double v = s.v[j * g.layer + f];
      const auto& x = g.x[f];
      const double y = g.y[j];
      bulk_pair += v * pair.G.value(t, x, y);
      bulk_rhs += v * (pair.G.dt(t, x, y) + pr.d * (pair.G.lap_x(t, x, y) + pair.G.dyy(t, x, y)));
    }
  }
  double bnd_field = 0.0;
  double road_pair = 0.0;
  double road_rhs = 0.0;
  const std::size_t top = (m - 1) * g.layer;
  for (std::size_t f = 0; f < g.layer; ++f) {
    const auto& x = g.x[f];
    const double v0 = bottom_trace(s, f);
    const double v1 = s.v[top + f];
    const double u = s.u[f];
    const double g0 = pair.G.value(t, x, 0.0);
    bnd_field += -v1 * pr.d * pair.G.dy(t, x, 1.0) + v0 * pr.d * pair.G.dy(t, x, 0.0) + pr.alpha * (u - v0) * g0;
    const double H = pair.H.value(t, x);
    road_pair += u * H;
    road_rhs += u * (pair.H.dt(t, x) + pr.D * pair.H.lap_x(t, x)) + pr.alpha * (v0 - u) * H;
  }
  w.pair_field = hp * bulk_pair;
  w.rhs_field = hp * bulk_rhs + hp1 * bnd_field;
  w.pair_road = hp1 * road_pair;
  w.rhs_road = hp1 * road_rhs;
  return w;
}

}  // namespace

WeakResidual weak_residual(std::span<const PdeState> snapshots, const TestFunctionPair& pair, double t) {
  if (snapshots.empty()) return {};
  std::size_t last = snapshots.size();
  for (std::size_t k = 0; k < snapshots.size(); ++k) {
    if (std::abs(snapshots[k].time - t) <= 1e-12 * std::max(1.0, std::abs(t))) last = k;
  }
  if (last == snapshots.size()) throw std::invalid_argument("weak residual time is not a snapshot time");
  const WeakIntegrands first = weak_integrands(snapshots[0], pair);
  WeakIntegrands prev = first;
  double int_field = 0.0;
  double int_road = 0.0;
  for (std::size_t k = 1; k <= last; ++k) {
    const WeakIntegrands cur = weak_integrands(snapshots[k], pair);
    const double dt = snapshots[k].time - snapshots[k - 1].time;
    int_field += 0.5 * dt * (prev.rhs_field + cur.rhs_field);
    int_road += 0.5 * dt * (prev.rhs_road + cur.rhs_road);
    prev = cur;
  }
  return {prev.pair_field - first.pair_field - int_field, prev.pair_road - first.pair_road - int_road};
}

// ---- duality ----

namespace {
double source_pairing(const PdeState& s, const PdeSources& src) {
  const PdeGrid& g = *s.grid;
  double field = 0.0;
  double road = 0.0;
  if (src.field) {
    for (std::size_t j = 0; j < static_cast<std::size_t>(g.M); ++j) {
      for (std::size_t f = 0; f < g.layer; ++f) field += s.v[j * g.layer + f] * src.field(s.time, g.x[f], g.y[j]);
    }
  }
  if (src.road) {
    for (std::size_t f = 0; f < g.layer; ++f) road += s.u[f] * src.road(s.time, g.x[f]);
  }
  return std::pow(g.h, g.p) * field + std::pow(g.h, g.p - 1) * road;
}
}  // namespace

DualityResult duality_check(const FieldProfile& v0, const RoadProfile& u0, const PdeSources& sources, double T,
                            const PdeParams& params) {
  if (!(T > 0.0)) throw std::invalid_argument("duality horizon must be positive");
  PdeState primal = init_pde(v0, u0, params);
  const auto steps = static_cast<std::size_t>(std::ceil(T / primal.dt));
  const double dt = T / static_cast<double>(steps);
  check_cfl(params, dt);
  const PdeState initial = primal;

  DualityResult r;
  double prev = source_pairing(primal, sources);
  for (std::size_t n = 0; n < steps; ++n) {
    advance(primal, dt);
    const double cur = source_pairing(primal, sources);
    r.source_pairing += 0.5 * dt * (prev + cur);
    prev = cur;
  }

  PdeSources reversed;
  if (sources.field) {
    reversed.field = [&](double t, std::span<const double> x, double y) { return sources.field(T - t, x, y); };
  }
  if (sources.road) {
    reversed.road = [&](double t, std::span<const double> x) { return sources.road(T - t, x); };
  }
  PdeState dual = zero_state(params);
  for (std::size_t n = 0; n < steps; ++n) advance(dual, dt, &reversed);

  const PdeGrid& g = *initial.grid;
  double field = 0.0;
  double road = 0.0;
  for (std::size_t c = 0; c < initial.v.size(); ++c) field += initial.v[c] * dual.v[c];
  for (std::size_t f = 0; f < g.layer; ++f) road += initial.u[f] * dual.u[f];
  r.data_pairing = std::pow(g.h, g.p) * field + std::pow(g.h, g.p - 1) * road;
  r.residual = r.source_pairing - r.data_pairing;
  return r;
}

// ---- energy functional ----

std::vector<TestFunctionPair> energy_family(int p, std::size_t K, double T) {
  constexpr std::size_t kXModes = 4;
  constexpr int kDegrees = 8;
  std::vector<TestFunctionPair> out;
  out.reserve(K);
  const std::vector<std::vector<double>> time_factors = {{1.0}, {-1.0, 2.0 / T}};
  for (std::size_t block = 0; out.size() < K; ++block) {
    const auto& tf = time_factors[block % time_factors.size()];
    const int m0 = kDegrees * static_cast<int>(block / time_factors.size());
    for (int m = m0; m < m0 + kDegrees && out.size() < K; ++m) {
      for (std::size_t r = 0; r < kXModes && out.size() < K; ++r) {
        const int k = static_cast<int>((r + 1) / 2);
        const double phase = (r > 0 && r % 2 == 0) ? -std::numbers::pi / 2 : 0.0;  // sin = cos(. - pi/2)
        out.push_back(bump_pair(p, {k}, phase, m, tf));
      }
    }
  }
  return out;
}

EnergyEstimate energy_functional(std::span<const PdeState> snapshots, int q, std::size_t K) {
  EnergyEstimate est;
  if (snapshots.empty()) throw std::invalid_argument("energy functional needs snapshots");
  const int p = snapshots.front().params.p;
  if (q < 1 || q > p) throw std::invalid_argument("direction q must lie in [1, p]");
  if (K == 0) return est;
  const double T = snapshots.back().time;
  const auto family = energy_family(p, K, T);
  const PdeGrid& g = *snapshots.front().grid;
  const double hp = std::pow(g.h, g.p);
  const auto m = static_cast<std::size_t>(g.M);
  const std::size_t cells = g.layer * m;

  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K));
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
  Eigen::VectorXd prev_b;
  Eigen::MatrixXd prev_gram;
  Eigen::MatrixXd values(static_cast<Eigen::Index>(cells), static_cast<Eigen::Index>(K));
  Eigen::MatrixXd derivs(static_cast<Eigen::Index>(cells), static_cast<Eigen::Index>(K));
  std::vector<double> face;
  for (std::size_t s = 0; s < snapshots.size(); ++s) {
    const PdeState& st = snapshots[s];
    const double t = st.time;
    for (std::size_t k = 0; k < K; ++k) {
      const FieldFunction& G = family[k].G;
      for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t f = 0; f < g.layer; ++f) {
          const auto c = static_cast<Eigen::Index>(j * g.layer + f);
          values(c, static_cast<Eigen::Index>(k)) = G.value(t, g.x[f], g.y[j]);
          // Cell average of d_q G: face difference along q, midpoint in the other directions.
          double hi, lo;
          if (q < p) {
            face = g.x[f];
            face[static_cast<std::size_t>(q - 1)] += 0.5 * g.h;
            hi = G.value(t, face, g.y[j]);
            face[static_cast<std::size_t>(q - 1)] -= g.h;
            lo = G.value(t, face, g.y[j]);
          } else {
            hi = G.value(t, g.x[f], g.y[j] + 0.5 * g.h);
            lo = G.value(t, g.x[f], g.y[j] - 0.5 * g.h);
          }
          derivs(c, static_cast<Eigen::Index>(k)) = (hi - lo) / g.h;
        }
      }
    }
    const Eigen::Map<const Eigen::VectorXd> v(st.v.data(), static_cast<Eigen::Index>(cells));
    Eigen::VectorXd cur_b = hp * (derivs.transpose() * v);
    Eigen::MatrixXd cur_gram = hp * (values.transpose() * values);
    if (s > 0) {
      const double dt = t - snapshots[s - 1].time;
      b += 0.5 * dt * (prev_b + cur_b);
      gram += 0.5 * dt * (prev_gram + cur_gram);
    }
    prev_b = std::move(cur_b);
    prev_gram = std::move(cur_gram);
  }
  est.members = K;
  est.best_single = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    if (gram(i, i) > 0.0) est.best_single = std::max(est.best_single, 0.5 * b[i] * b[i] / gram(i, i));
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  est.lower_bound = std::max(est.best_single, 0.5 * b.dot(ldlt.solve(b)));
  return est;
}

EnergyCheck manufactured_energy_check(const PdeParams& params, std::size_t K, double T, std::size_t time_steps) {
  if (!(T > 0.0) || time_steps == 0) throw std::invalid_argument("manufactured check needs T > 0 and a time step");
  const double pi = std::numbers::pi;
  std::vector<PdeState> snaps;
  snaps.reserve(time_steps + 1);
  for (std::size_t n = 0; n <= time_steps; ++n) {
    const double t = T * static_cast<double>(n) / static_cast<double>(time_steps);
    const double amp = 0.3 * std::exp(-t);
    snaps.push_back(sample_state(
        [amp, pi](std::span<const double> x, double y) { return 0.5 + amp * std::cos(2 * pi * x[0]) * std::cos(pi * y); },
        [](std::span<const double>) { return 0.5; }, params, t));
  }
  EnergyCheck out;
  out.estimate = energy_functional(snaps, 1, K);
  // |d_1 v|^2 integrates to 0.09 pi^2 e^{-2t} over the unit cylinder.
  out.cap = 0.0225 * pi * pi * (-std::expm1(-2.0 * T));
  out.ratio = out.estimate.lower_bound / out.cap;
  return out;
}

}  // namespace fieldroad
