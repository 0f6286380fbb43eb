#ifndef FIELDROAD_TEST_FUNCTIONS_HPP
#define FIELDROAD_TEST_FUNCTIONS_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fieldroad {

/// Polynomial helpers on ascending coefficient vectors c_0 + c_1 t + ...
double poly_eval(std::span<const double> c, double t);
std::vector<double> poly_derivative(std::span<const double> c);
std::vector<double> poly_multiply(std::span<const double> a, std::span<const double> b);
/// Integral of the polynomial over [a, b].
double poly_integral(std::span<const double> c, double a, double b);

/// Scalar time factor tau(t) with closed-form integrals of tau and tau^2.
class TimeFactor {
 public:
  static TimeFactor exponential(double lambda);  // exp(-lambda t)
  static TimeFactor polynomial(std::vector<double> coeffs);
  static TimeFactor constant(double c = 1.0) { return polynomial({c}); }

  double value(double t) const;
  double derivative(double t) const;
  double integral(double a, double b) const;
  double integral_squared(double a, double b) const;

 private:
  bool exponential_ = false;
  double lambda_ = 0.0;
  std::vector<double> coeffs_;
  std::vector<double> squared_;
};

/// cos(2 pi k.x + phase) on the (p-1)-torus.
struct XMode {
  std::vector<int> k;
  double phase = 0.0;

  double value(std::span<const double> x) const;
  double gradient(std::size_t q, std::span<const double> x) const;
  double laplacian(std::span<const double> x) const;
};

/// Vertical profile: cos(m pi y) or a polynomial in y.
class YProfile {
 public:
  static YProfile cosine(int m);
  static YProfile polynomial(std::vector<double> coeffs);
  /// y^2 (1-y)^2 P_m(2y-1), P_m the Legendre polynomial; vanishes to second order at y = 0, 1.
  static YProfile bump(int m);

  double value(double y) const;
  double d1(double y) const;
  double d2(double y) const;

 private:
  bool cosine_ = false;
  int m_ = 0;
  std::vector<double> c_, c1_, c2_;
};

struct FieldTerm {
  double coeff = 1.0;
  XMode x;
  YProfile y;
};

/// G(t,x,y) = tau(t) * sum_terms coeff X(x) Y(y).
struct FieldFunction {
  TimeFactor tau = TimeFactor::constant(0.0);
  std::vector<FieldTerm> terms;

  double spatial(std::span<const double> x, double y) const;
  double value(double t, std::span<const double> x, double y) const { return tau.value(t) * spatial(x, y); }
  double dt(double t, std::span<const double> x, double y) const { return tau.derivative(t) * spatial(x, y); }
  double dx(double t, std::size_t q, std::span<const double> x, double y) const;
  double lap_x(double t, std::span<const double> x, double y) const;
  double dy(double t, std::span<const double> x, double y) const;
  double dyy(double t, std::span<const double> x, double y) const;
};

struct RoadTerm {
  double coeff = 1.0;
  XMode x;
};

/// H(t,x) = tau(t) * sum_terms coeff X(x).
struct RoadFunction {
  TimeFactor tau = TimeFactor::constant(0.0);
  std::vector<RoadTerm> terms;

  double spatial(std::span<const double> x) const;
  double value(double t, std::span<const double> x) const { return tau.value(t) * spatial(x); }
  double dt(double t, std::span<const double> x) const { return tau.derivative(t) * spatial(x); }
  double dx(double t, std::size_t q, std::span<const double> x) const;
  double lap_x(double t, std::span<const double> x) const;
};

struct TestFunctionPair {
  std::string name;
  FieldFunction G;
  RoadFunction H;
};

/// G = c exp(-lambda t) cos(2 pi k.x) cos(m pi y),  H = c_road exp(-lambda t) cos(2 pi k.x).
TestFunctionPair fourier_cosine_pair(int p, std::vector<int> k, int m, double lambda, double c = 1.0,
                                     double c_road = 1.0);
/// G = B_T(t) cos(2 pi k.x + phase) y^2 (1-y)^2 P_m(2y-1),  H = 0.
TestFunctionPair bump_pair(int p, std::vector<int> k, double phase, int m, std::vector<double> time_poly);
/// G = c, H = c_road (constant in time and space).
TestFunctionPair constant_pair(int p, double c, double c_road);

/// Largest relative mismatch between the analytic derivatives of the pair and central
/// finite differences, sampled at `samples` random points in [0,T] x T^{p-1} x (0,1).
double derivative_self_test(const TestFunctionPair& pair, int p, double T, int samples, std::uint64_t seed);

}  // namespace fieldroad

#endif  // FIELDROAD_TEST_FUNCTIONS_HPP
