#ifndef FIELDROAD_LATTICE_HPP
#define FIELDROAD_LATTICE_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fieldroad {

/// Raised for invalid geometry parameters or out-of-range site indices.
class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Unordered nearest-neighbour pair, stored with a < b.
struct Edge {
  std::uint32_t a;
  std::uint32_t b;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Lattice coordinates of a bulk site: torus part x in [0,N)^{p-1}, height y in [1,N-1].
struct SiteCoord {
  std::vector<int> x;
  int y = 0;
  friend bool operator==(const SiteCoord&, const SiteCoord&) = default;
};

/// Macroscopic position of a site, i.e. the lattice coordinates divided by N.
struct MacroPoint {
  std::vector<double> x;
  double y = 0.0;
};

/// Discrete cylinder T_N^{p-1} x {1..N-1} with its road T_N^{p-1}.
///
/// Bulk sites are indexed row-major with the height as the slowest axis:
///   index = (y - 1) * N^{p-1} + flat(x),  flat(x) = x_1 N^{p-2} + ... + x_{p-1}.
/// Road site i sits below bulk site i (the y = 1 layer). This ordering is part of
/// the snapshot file format.
class LatticeGeom {
 public:
  LatticeGeom(int p, int N);

  int dim() const { return p_; }
  int scale() const { return n_; }

  std::size_t layer_size() const { return layer_; }
  std::size_t bulk_size() const { return layer_ * static_cast<std::size_t>(n_ - 1); }
  std::size_t road_size() const { return layer_; }

  std::size_t bulk_index(std::span<const int> x, int y) const;
  std::size_t road_index(std::span<const int> x) const;
  SiteCoord bulk_coord(std::size_t site) const;
  std::vector<int> road_coord(std::size_t site) const;

  /// Height j in [1, N-1] of a bulk site.
  int layer_of(std::size_t site) const { return static_cast<int>(site / layer_) + 1; }
  bool is_lower(std::size_t site) const { return site < layer_; }
  bool is_upper(std::size_t site) const { return site >= (static_cast<std::size_t>(n_) - 2) * layer_; }
  std::size_t lower_site(std::size_t road_site) const { return road_site; }
  std::size_t upper_site(std::size_t road_site) const {
    return (static_cast<std::size_t>(n_) - 2) * layer_ + road_site;
  }
  /// Position of a boundary-layer site inside its layer (the road index below/above it).
  std::size_t in_layer(std::size_t site) const { return site % layer_; }

  std::vector<std::size_t> lower_sites() const;
  std::vector<std::size_t> upper_sites() const;

  std::span<const Edge> field_edges() const { return field_edges_; }
  std::span<const Edge> road_edges() const { return road_edges_; }

  /// Bulk sites one canonical step away (torus wrap in x, no crossing of j=0 or j=N).
  std::span<const std::uint32_t> neighbors(std::size_t site) const;
  std::span<const std::uint32_t> road_neighbors(std::size_t site) const;
  /// Indices into field_edges() / road_edges() touching the given site.
  std::span<const std::uint32_t> incident_field_edges(std::size_t site) const;
  std::span<const std::uint32_t> incident_road_edges(std::size_t site) const;

  MacroPoint site_to_macro(std::size_t site) const;
  std::vector<double> road_to_macro(std::size_t site) const;

  /// Shift of a flat torus index by +-1 along x-direction q (0-based).
  std::size_t shift_x(std::size_t flat, int q, int step) const;

 private:
  struct Csr {
    std::vector<std::uint32_t> offsets;
    std::vector<std::uint32_t> items;
    std::span<const std::uint32_t> row(std::size_t r) const {
      return {items.data() + offsets[r], items.data() + offsets[r + 1]};
    }
  };
  static Csr build_csr(std::size_t rows, std::span<const Edge> edges, bool store_edge_ids);
  void check_bulk(std::size_t site) const;
  void check_road(std::size_t site) const;

  int p_;
  int n_;
  std::size_t layer_;
  std::vector<std::size_t> strides_;  // stride of x_q inside a layer
  std::vector<Edge> field_edges_;
  std::vector<Edge> road_edges_;
  Csr field_nbrs_;
  Csr road_nbrs_;
  Csr field_incident_;
  Csr road_incident_;
};

LatticeGeom build_geometry(int p, int N);

}  // namespace fieldroad

#endif  // FIELDROAD_LATTICE_HPP
