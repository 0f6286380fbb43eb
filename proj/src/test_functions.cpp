#include "fieldroad/test_functions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fieldroad/rng.hpp"

namespace fieldroad {

using std::numbers::pi;

double poly_eval(std::span<const double> c, double t) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * t + *it;
  return v;
}

std::vector<double> poly_derivative(std::span<const double> c) {
  if (c.size() <= 1) return {0.0};
  std::vector<double> d(c.size() - 1);
  for (std::size_t k = 1; k < c.size(); ++k) d[k - 1] = static_cast<double>(k) * c[k];
  return d;
}

std::vector<double> poly_multiply(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {0.0};
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

double poly_integral(std::span<const double> c, double a, double b) {
  std::vector<double> anti(c.size() + 1, 0.0);
  for (std::size_t k = 0; k < c.size(); ++k) anti[k + 1] = c[k] / static_cast<double>(k + 1);
  return poly_eval(anti, b) - poly_eval(anti, a);
}

// ---- TimeFactor ----

TimeFactor TimeFactor::exponential(double lambda) {
  TimeFactor f;
  f.exponential_ = true;
  f.lambda_ = lambda;
  return f;
}

TimeFactor TimeFactor::polynomial(std::vector<double> coeffs) {
  if (coeffs.empty()) coeffs = {0.0};
  TimeFactor f;
  f.coeffs_ = std::move(coeffs);
  f.squared_ = poly_multiply(f.coeffs_, f.coeffs_);
  return f;
}

double TimeFactor::value(double t) const { return exponential_ ? std::exp(-lambda_ * t) : poly_eval(coeffs_, t); }

double TimeFactor::derivative(double t) const {
  if (exponential_) return -lambda_ * std::exp(-lambda_ * t);
  return poly_eval(poly_derivative(coeffs_), t);
}

namespace {
// Integral of exp(-rate t) over [a, b], stable as rate -> 0.
double exp_integral(double rate, double a, double b) {
  if (rate == 0.0) return b - a;
  return std::exp(-rate * a) * -std::expm1(-rate * (b - a)) / rate;
}
}  // namespace

double TimeFactor::integral(double a, double b) const {
  return exponential_ ? exp_integral(lambda_, a, b) : poly_integral(coeffs_, a, b);
}

double TimeFactor::integral_squared(double a, double b) const {
  return exponential_ ? exp_integral(2.0 * lambda_, a, b) : poly_integral(squared_, a, b);
}

// ---- XMode ----

namespace {
double phase_of(const XMode& m, std::span<const double> x) {
  double s = m.phase;
  for (std::size_t q = 0; q < m.k.size(); ++q) s += 2.0 * pi * m.k[q] * x[q];
  return s;
}
}  // namespace

double XMode::value(std::span<const double> x) const { return std::cos(phase_of(*this, x)); }

double XMode::gradient(std::size_t q, std::span<const double> x) const {
  return -2.0 * pi * k[q] * std::sin(phase_of(*this, x));
}

double XMode::laplacian(std::span<const double> x) const {
  double k2 = 0.0;
  for (int kq : k) k2 += static_cast<double>(kq) * kq;
  return -4.0 * pi * pi * k2 * std::cos(phase_of(*this, x));
}

// ---- YProfile ----

YProfile YProfile::cosine(int m) {
  YProfile y;
  y.cosine_ = true;
  y.m_ = m;
  return y;
}

YProfile YProfile::polynomial(std::vector<double> coeffs) {
  YProfile y;
  y.c_ = std::move(coeffs);
  if (y.c_.empty()) y.c_ = {0.0};
  y.c1_ = poly_derivative(y.c_);
  y.c2_ = poly_derivative(y.c1_);
  return y;
}

YProfile YProfile::bump(int m) {
  if (m < 0) throw std::invalid_argument("Legendre degree must be non-negative");
  const std::vector<double> s = {-1.0, 2.0};  // 2y - 1
  std::vector<double> prev = {1.0};
  std::vector<double> cur = s;
  if (m == 0) cur = prev;
  for (int n = 1; n < m; ++n) {
    auto next = poly_multiply(s, cur);
    for (double& c : next) c *= (2.0 * n + 1.0) / (n + 1.0);
    for (std::size_t k = 0; k < prev.size(); ++k) next[k] -= prev[k] * n / (n + 1.0);
    prev = std::move(cur);
    cur = std::move(next);
  }
  const std::vector<double> base = {0.0, 0.0, 1.0, -2.0, 1.0};  // y^2 (1-y)^2
  return polynomial(poly_multiply(base, cur));
}

double YProfile::value(double y) const { return cosine_ ? std::cos(m_ * pi * y) : poly_eval(c_, y); }

double YProfile::d1(double y) const { return cosine_ ? -m_ * pi * std::sin(m_ * pi * y) : poly_eval(c1_, y); }

double YProfile::d2(double y) const {
  return cosine_ ? -(m_ * pi) * (m_ * pi) * std::cos(m_ * pi * y) : poly_eval(c2_, y);
}

// ---- FieldFunction / RoadFunction ----

double FieldFunction::spatial(std::span<const double> x, double y) const {
  double s = 0.0;
  for (const auto& t : terms) s += t.coeff * t.x.value(x) * t.y.value(y);
  return s;
}

double FieldFunction::dx(double t, std::size_t q, std::span<const double> x, double y) const {
  double s = 0.0;
  for (const auto& term : terms) s += term.coeff * term.x.gradient(q, x) * term.y.value(y);
  return tau.value(t) * s;
}

double FieldFunction::lap_x(double t, std::span<const double> x, double y) const {
  double s = 0.0;
  for (const auto& term : terms) s += term.coeff * term.x.laplacian(x) * term.y.value(y);
  return tau.value(t) * s;
}

double FieldFunction::dy(double t, std::span<const double> x, double y) const {
  double s = 0.0;
  for (const auto& term : terms) s += term.coeff * term.x.value(x) * term.y.d1(y);
  return tau.value(t) * s;
}

double FieldFunction::dyy(double t, std::span<const double> x, double y) const {
  double s = 0.0;
  for (const auto& term : terms) s += term.coeff * term.x.value(x) * term.y.d2(y);
  return tau.value(t) * s;
}

double RoadFunction::spatial(std::span<const double> x) const {
  double s = 0.0;
  for (const auto& t : terms) s += t.coeff * t.x.value(x);
  return s;
}

double RoadFunction::dx(double t, std::size_t q, std::span<const double> x) const {
  double s = 0.0;
  for (const auto& term : terms) s += term.coeff * term.x.gradient(q, x);
  return tau.value(t) * s;
}

double RoadFunction::lap_x(double t, std::span<const double> x) const {
  double s = 0.0;
  for (const auto& term : terms) s += term.coeff * term.x.laplacian(x);
  return tau.value(t) * s;
}

// ---- families ----

namespace {
std::vector<int> padded(std::vector<int> k, int p) {
  k.resize(static_cast<std::size_t>(p - 1), 0);
  return k;
}

std::string join(const std::vector<int>& k) {
  std::string s;
  for (std::size_t q = 0; q < k.size(); ++q) s += (q ? "." : "") + std::to_string(k[q]);
  return s;
}
}  // namespace

TestFunctionPair fourier_cosine_pair(int p, std::vector<int> k, int m, double lambda, double c, double c_road) {
  k = padded(std::move(k), p);
  TestFunctionPair pair;
  pair.name = "cos_k" + join(k) + "_m" + std::to_string(m);
  pair.G.tau = TimeFactor::exponential(lambda);
  pair.G.terms.push_back({c, XMode{k, 0.0}, YProfile::cosine(m)});
  pair.H.tau = TimeFactor::exponential(lambda);
  pair.H.terms.push_back({c_road, XMode{k, 0.0}});
  return pair;
}

TestFunctionPair bump_pair(int p, std::vector<int> k, double phase, int m, std::vector<double> time_poly) {
  k = padded(std::move(k), p);
  TestFunctionPair pair;
  pair.name = "bump_k" + join(k) + "_m" + std::to_string(m);
  pair.G.tau = TimeFactor::polynomial(std::move(time_poly));
  pair.G.terms.push_back({1.0, XMode{k, phase}, YProfile::bump(m)});
  return pair;
}

TestFunctionPair constant_pair(int p, double c, double c_road) {
  TestFunctionPair pair;
  pair.name = "const";
  const std::vector<int> zero(static_cast<std::size_t>(p - 1), 0);
  pair.G.tau = TimeFactor::constant(1.0);
  pair.G.terms.push_back({c, XMode{zero, 0.0}, YProfile::polynomial({1.0})});
  pair.H.tau = TimeFactor::constant(1.0);
  pair.H.terms.push_back({c_road, XMode{zero, 0.0}});
  return pair;
}

// ---- self-test ----

namespace {
// Fourth-order central difference of f at s.
template <class F>
double fd1(F f, double s, double h) {
  return (8.0 * (f(s + h) - f(s - h)) - (f(s + 2 * h) - f(s - 2 * h))) / (12.0 * h);
}
template <class F>
double fd2(F f, double s, double h) {
  return (16.0 * (f(s + h) + f(s - h)) - (f(s + 2 * h) + f(s - 2 * h)) - 30.0 * f(s)) / (12.0 * h * h);
}

double mismatch(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
}
}  // namespace

double derivative_self_test(const TestFunctionPair& pair, int p, double T, int samples, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t dx = static_cast<std::size_t>(p - 1);
  const double h1 = 1e-3;
  const double h2 = 3e-3;
  double worst = 0.0;
  for (int n = 0; n < samples; ++n) {
    const double t = 0.1 * T + 0.8 * T * rng.uniform();
    std::vector<double> x(dx);
    for (double& xq : x) xq = rng.uniform();
    const double y = 0.1 + 0.8 * rng.uniform();
    const auto& G = pair.G;
    const auto& H = pair.H;

    worst = std::max(worst, mismatch(G.dt(t, x, y), fd1([&](double s) { return G.value(s, x, y); }, t, h1)));
    worst = std::max(worst, mismatch(G.dy(t, x, y), fd1([&](double s) { return G.value(t, x, s); }, y, h1)));
    worst = std::max(worst, mismatch(G.dyy(t, x, y), fd2([&](double s) { return G.value(t, x, s); }, y, h2)));
    worst = std::max(worst, mismatch(H.dt(t, x), fd1([&](double s) { return H.value(s, x); }, t, h1)));
    double lap_g = 0.0;
    double lap_h = 0.0;
    for (std::size_t q = 0; q < dx; ++q) {
      auto gx = [&](double s) {
        auto xs = x;
        xs[q] = s;
        return G.value(t, xs, y);
      };
      auto hx = [&](double s) {
        auto xs = x;
        xs[q] = s;
        return H.value(t, xs);
      };
      worst = std::max(worst, mismatch(G.dx(t, q, x, y), fd1(gx, x[q], h1)));
      worst = std::max(worst, mismatch(H.dx(t, q, x), fd1(hx, x[q], h1)));
      lap_g += fd2(gx, x[q], h2);
      lap_h += fd2(hx, x[q], h2);
    }
    worst = std::max(worst, mismatch(G.lap_x(t, x, y), lap_g));
    worst = std::max(worst, mismatch(H.lap_x(t, x), lap_h));
  }
  return worst;
}

}  // namespace fieldroad
