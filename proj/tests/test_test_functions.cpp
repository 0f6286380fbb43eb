#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "fieldroad/harness.hpp"
#include "fieldroad/test_functions.hpp"

using namespace fieldroad;

namespace {

constexpr double kPi = std::numbers::pi;

// Composite Simpson rule with n (even) panels.
template <class F>
double simpson(F f, double a, double b, int n = 2000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("polynomial helpers") {
  const std::vector<double> c{1.0, -2.0, 3.0};  // 1 - 2t + 3t^2
  CHECK(poly_eval(c, 2.0) == doctest::Approx(9.0));
  CHECK(poly_derivative(c) == std::vector<double>{-2.0, 6.0});
  CHECK(poly_multiply(std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, -1.0}) ==
        std::vector<double>{1.0, 0.0, -1.0});
  CHECK(poly_integral(c, 0.0, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("time factor integrals match quadrature") {
  for (const TimeFactor& tau : {TimeFactor::exponential(1.7), TimeFactor::exponential(0.0),
                                TimeFactor::polynomial({0.5, -1.0, 2.0}), TimeFactor::constant(3.0)}) {
    const double a = 0.013;
    const double b = 0.41;
    CHECK(tau.integral(a, b) == doctest::Approx(simpson([&](double t) { return tau.value(t); }, a, b)).epsilon(1e-12));
    CHECK(tau.integral_squared(a, b) ==
          doctest::Approx(simpson([&](double t) { return tau.value(t) * tau.value(t); }, a, b)).epsilon(1e-12));
  }
  // expm1-based integral stays accurate on tiny intervals
  const TimeFactor e = TimeFactor::exponential(2.0);
  CHECK(e.integral(0.3, 0.3 + 1e-12) == doctest::Approx(std::exp(-0.6) * 1e-12).epsilon(1e-9));
}

TEST_CASE("x-modes") {
  XMode m{{1, 2}, 0.3};
  const std::vector<double> x{0.17, 0.61};
  const double arg = 2 * kPi * (0.17 + 2 * 0.61) + 0.3;
  CHECK(m.value(x) == doctest::Approx(std::cos(arg)));
  CHECK(m.gradient(1, x) == doctest::Approx(-4 * kPi * std::sin(arg)));
  CHECK(m.laplacian(x) == doctest::Approx(-4 * kPi * kPi * 5 * std::cos(arg)));
}

TEST_CASE("vertical bumps") {
  for (double y : {0.1, 0.37, 0.8}) {
    const double w = y * y * (1 - y) * (1 - y);
    const double s = 2 * y - 1;
    CHECK(YProfile::bump(0).value(y) == doctest::Approx(w));
    CHECK(YProfile::bump(2).value(y) == doctest::Approx(w * (3 * s * s - 1) / 2));
    CHECK(YProfile::bump(3).value(y) == doctest::Approx(w * (5 * s * s * s - 3 * s) / 2));
  }
  for (int m = 0; m < 6; ++m) {
    const YProfile b = YProfile::bump(m);
    CHECK(b.value(0.0) == doctest::Approx(0.0));
    CHECK(b.value(1.0) == doctest::Approx(0.0));
    CHECK(b.d1(0.0) == doctest::Approx(0.0));
    CHECK(b.d1(1.0) == doctest::Approx(0.0));
  }
  CHECK(YProfile::cosine(2).d2(0.3) == doctest::Approx(-4 * kPi * kPi * std::cos(2 * kPi * 0.3)));
}

TEST_CASE("analytic derivatives agree with finite differences") {
  std::vector<TestFunctionPair> pairs;
  for (int p : {2, 3}) {
    pairs.push_back(fourier_cosine_pair(p, {1}, 1, 1.0));
    pairs.push_back(fourier_cosine_pair(p, {2, 1}, 3, 0.5, 0.7, -0.3));
    pairs.push_back(bump_pair(p, {1}, 0.4, 2, {1.0, -2.0, 0.5}));
    pairs.push_back(constant_pair(p, 2.0, -1.0));
    for (auto& pr : default_test_pairs(p)) pairs.push_back(pr);
    for (auto& pr : energy_family(p, 32, 0.5)) pairs.push_back(pr);
  }
  for (const auto& pr : pairs) {
    CAPTURE(pr.name);
    const int p = static_cast<int>(pr.G.terms.front().x.k.size()) + 1;
    CHECK(derivative_self_test(pr, p, 0.5, 50, 17) <= 1e-6);
  }
}

TEST_CASE("fourier-cosine pair values") {
  const TestFunctionPair pr = fourier_cosine_pair(2, {1}, 1, 2.0);
  const std::vector<double> x{0.2};
  CHECK(pr.G.value(0.3, x, 0.4) == doctest::Approx(std::exp(-0.6) * std::cos(0.4 * kPi) * std::cos(0.4 * kPi)));
  CHECK(pr.H.value(0.3, x) == doctest::Approx(std::exp(-0.6) * std::cos(0.4 * kPi)));
  CHECK(pr.G.dy(0.0, x, 0.0) == doctest::Approx(0.0));
  CHECK(pr.G.dy(0.0, x, 1.0) == doctest::Approx(0.0));
  const TestFunctionPair b = bump_pair(2, {1}, 0.0, 0, {1.0});
  CHECK(b.H.value(0.1, x) == 0.0);
}
