#include "fieldroad/profiles.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>
#include <vector>

namespace fieldroad {

namespace {

std::string format_value(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    out.push_back(v);
  }
  return out;
}

struct Table {
  std::vector<std::vector<double>> coords;
  std::vector<double> values;
};

Table read_table(const std::string& path, std::size_t ncoords) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open profile table " + path);
  Table t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> nums;
    try {
      nums = parse_numbers(line);
    } catch (const std::invalid_argument&) {
      continue;  // header
    }
    if (nums.size() != ncoords + 1) {
      throw std::runtime_error("profile table " + path + ": expected " + std::to_string(ncoords + 1) +
                               " columns, got " + std::to_string(nums.size()));
    }
    t.values.push_back(nums.back());
    nums.pop_back();
    t.coords.push_back(std::move(nums));
  }
  if (t.values.empty()) throw std::runtime_error("profile table " + path + " is empty");
  return t;
}

// Distance with periodic wrap in the first `torus_dims` coordinates.
double table_distance(std::span<const double> a, std::span<const double> b, std::size_t torus_dims) {
  double s = 0.0;
  for (std::size_t q = 0; q < a.size(); ++q) {
    double d = std::abs(a[q] - b[q]);
    if (q < torus_dims) d = std::min(d, 1.0 - d);
    s += d * d;
  }
  return s;
}

double nearest(const Table& t, std::span<const double> point, std::size_t torus_dims) {
  double best = std::numeric_limits<double>::infinity();
  double value = 0.0;
  for (std::size_t r = 0; r < t.coords.size(); ++r) {
    const double dist = table_distance(point, t.coords[r], torus_dims);
    if (dist < best) {
      best = dist;
      value = t.values[r];
    }
  }
  return value;
}

}  // namespace

ProfileRangeError::ProfileRangeError(const std::string& where, double value)
    : std::domain_error(where + " takes the value " + format_value(value) +
                        " outside [0,1]; with at most one particle per site such a density is unreachable "
                        "by any sequence of configurations") {}

double checked_density(double value, const char* where) {
  if (!(value >= 0.0 && value <= 1.0)) throw ProfileRangeError(where, value);
  return value;
}

InitialProfile flat_profile(double c) {
  return {"flat:" + format_value(c), [c](std::span<const double>, double) { return c; },
          [c](std::span<const double>) { return c; }};
}

InitialProfile cos_mode_profile(double a, double a_road) {
  using std::numbers::pi;
  return {"cos:" + format_value(a) + "," + format_value(a_road),
          [a](std::span<const double> x, double y) { return 0.5 + a * std::cos(2 * pi * x[0]) * std::cos(pi * y); },
          [a_road](std::span<const double> x) { return 0.5 + a_road * std::cos(2 * pi * x[0]); }};
}

InitialProfile step_profile(double high, double low) {
  return {"step:" + format_value(high) + "," + format_value(low),
          [high, low](std::span<const double> x, double) { return x[0] < 0.5 ? high : low; },
          [high, low](std::span<const double> x) { return x[0] < 0.5 ? high : low; }};
}

InitialProfile tabulated_profile(const std::string& field_csv, const std::string& road_csv, int p) {
  const auto torus = static_cast<std::size_t>(p - 1);
  auto field = std::make_shared<Table>(read_table(field_csv, torus + 1));
  auto road = std::make_shared<Table>(read_table(road_csv, torus));
  return {"table:" + field_csv + "," + road_csv,
          [field, torus](std::span<const double> x, double y) {
            std::vector<double> pt(x.begin(), x.end());
            pt.push_back(y);
            return nearest(*field, pt, torus);
          },
          [road, torus](std::span<const double> x) { return nearest(*road, x, torus); }};
}

InitialProfile parse_profile(const std::string& spec, int p) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string args = colon == std::string::npos ? std::string() : spec.substr(colon + 1);
  if (kind == "flat") {
    const auto v = parse_numbers(args);
    if (v.size() != 1) throw std::invalid_argument("flat profile needs one value: flat:c");
    return flat_profile(v[0]);
  }
  if (kind == "cos") {
    const auto v = parse_numbers(args);
    if (v.empty() || v.size() > 2) throw std::invalid_argument("cos profile expects cos:a[,a_road]");
    return cos_mode_profile(v[0], v.size() == 2 ? v[1] : 0.0);
  }
  if (kind == "step") {
    if (args.empty()) return step_profile();
    const auto v = parse_numbers(args);
    if (v.size() != 2) throw std::invalid_argument("step profile expects step:high,low");
    return step_profile(v[0], v[1]);
  }
  if (kind == "table") {
    const auto comma = args.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("table profile expects table:field.csv,road.csv");
    return tabulated_profile(args.substr(0, comma), args.substr(comma + 1), p);
  }
  throw std::invalid_argument("unknown profile preset '" + spec + "'");
}

}  // namespace fieldroad
