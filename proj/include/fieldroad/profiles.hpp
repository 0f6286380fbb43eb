#ifndef FIELDROAD_PROFILES_HPP
#define FIELDROAD_PROFILES_HPP

#include <functional>
#include <span>
#include <stdexcept>
#include <string>

namespace fieldroad {

/// Macroscopic density on the cylinder, v(x, y) with x in the (p-1)-torus and y in (0,1).
using FieldProfile = std::function<double(std::span<const double> x, double y)>;
/// Macroscopic density on the road, u(x).
using RoadProfile = std::function<double(std::span<const double> x)>;

/// Initial data outside [0,1]: no sequence of exclusion configurations can approach it.
class ProfileRangeError : public std::domain_error {
 public:
  explicit ProfileRangeError(const std::string& where, double value);
};

/// Throws ProfileRangeError unless value lies in [0,1].
double checked_density(double value, const char* where);

struct InitialProfile {
  std::string name;
  FieldProfile field;
  RoadProfile road;
};

/// v = u = c.
InitialProfile flat_profile(double c);
/// v = 0.5 + a cos(2 pi x_1) cos(pi y),  u = 0.5 + a_road cos(2 pi x_1).
InitialProfile cos_mode_profile(double a, double a_road);
/// v = u = high for x_1 < 1/2, low otherwise.
InitialProfile step_profile(double high = 1.0, double low = 0.0);
/// Nearest-sample lookup in CSV tables. Field rows: x_1..x_{p-1}, y, value.
/// Road rows: x_1..x_{p-1}, value. Lines starting with '#' and a non-numeric header are skipped.
InitialProfile tabulated_profile(const std::string& field_csv, const std::string& road_csv, int p);

/// Parses "flat:c", "cos:a,a_road", "step[:high,low]" or "table:field.csv,road.csv".
InitialProfile parse_profile(const std::string& spec, int p);

}  // namespace fieldroad

#endif  // FIELDROAD_PROFILES_HPP
