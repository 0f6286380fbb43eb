#include "fieldroad/lattice.hpp"

#include <algorithm>
#include <limits>

namespace fieldroad {

LatticeGeom::LatticeGeom(int p, int N) : p_(p), n_(N), layer_(1) {
  if (p < 2) throw GeometryError("dimension p must be at least 2 (got " + std::to_string(p) + ")");
  if (N < 3) {
    throw GeometryError("degenerate cylinder: N must be at least 3 so that the j=1 and j=N-1 layers differ (got " +
                        std::to_string(N) + ")");
  }
  for (int q = 0; q < p - 1; ++q) {
    layer_ *= static_cast<std::size_t>(N);
  }
  if (layer_ * static_cast<std::size_t>(N) > std::numeric_limits<std::uint32_t>::max()) {
    throw GeometryError("lattice too large for 32-bit site indices");
  }

  strides_.assign(static_cast<std::size_t>(p - 1), 1);
  for (int q = p - 3; q >= 0; --q) {
    strides_[static_cast<std::size_t>(q)] = strides_[static_cast<std::size_t>(q) + 1] * static_cast<std::size_t>(N);
  }

  const std::size_t nb = bulk_size();
  auto add_edge = [](std::vector<Edge>& edges, std::size_t s, std::size_t t) {
    edges.push_back({static_cast<std::uint32_t>(std::min(s, t)), static_cast<std::uint32_t>(std::max(s, t))});
  };

  field_nbrs_.offsets.assign(1, 0);
  for (std::size_t s = 0; s < nb; ++s) {
    const std::size_t flat = s % layer_;
    const std::size_t base = s - flat;
    const int j = layer_of(s);
    for (int q = 0; q < p_ - 1; ++q) {
      field_nbrs_.items.push_back(static_cast<std::uint32_t>(base + shift_x(flat, q, -1)));
      field_nbrs_.items.push_back(static_cast<std::uint32_t>(base + shift_x(flat, q, +1)));
      add_edge(field_edges_, s, base + shift_x(flat, q, +1));
    }
    if (j > 1) field_nbrs_.items.push_back(static_cast<std::uint32_t>(s - layer_));
    if (j < n_ - 1) {
      field_nbrs_.items.push_back(static_cast<std::uint32_t>(s + layer_));
      add_edge(field_edges_, s, s + layer_);
    }
    field_nbrs_.offsets.push_back(static_cast<std::uint32_t>(field_nbrs_.items.size()));
  }

  road_nbrs_.offsets.assign(1, 0);
  for (std::size_t i = 0; i < layer_; ++i) {
    for (int q = 0; q < p_ - 1; ++q) {
      road_nbrs_.items.push_back(static_cast<std::uint32_t>(shift_x(i, q, -1)));
      road_nbrs_.items.push_back(static_cast<std::uint32_t>(shift_x(i, q, +1)));
      add_edge(road_edges_, i, shift_x(i, q, +1));
    }
    road_nbrs_.offsets.push_back(static_cast<std::uint32_t>(road_nbrs_.items.size()));
  }

  field_incident_ = build_csr(nb, field_edges_, true);
  road_incident_ = build_csr(layer_, road_edges_, true);
}

LatticeGeom::Csr LatticeGeom::build_csr(std::size_t rows, std::span<const Edge> edges, bool store_edge_ids) {
  Csr csr;
  std::vector<std::uint32_t> counts(rows + 1, 0);
  for (const Edge& e : edges) {
    ++counts[e.a + 1];
    ++counts[e.b + 1];
  }
  for (std::size_t r = 0; r < rows; ++r) counts[r + 1] += counts[r];
  csr.offsets = counts;
  csr.items.resize(counts.back());
  std::vector<std::uint32_t> fill(counts.begin(), counts.end() - 1);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto id = static_cast<std::uint32_t>(e);
    csr.items[fill[edges[e].a]++] = store_edge_ids ? id : edges[e].b;
    csr.items[fill[edges[e].b]++] = store_edge_ids ? id : edges[e].a;
  }
  return csr;
}

std::size_t LatticeGeom::shift_x(std::size_t flat, int q, int step) const {
  const std::size_t stride = strides_[static_cast<std::size_t>(q)];
  const auto coord = static_cast<int>((flat / stride) % static_cast<std::size_t>(n_));
  const int shifted = ((coord + step) % n_ + n_) % n_;
  return flat - static_cast<std::size_t>(coord) * stride + static_cast<std::size_t>(shifted) * stride;
}

void LatticeGeom::check_bulk(std::size_t site) const {
  if (site >= bulk_size()) throw GeometryError("invalid bulk site index " + std::to_string(site));
}

void LatticeGeom::check_road(std::size_t site) const {
  if (site >= road_size()) throw GeometryError("invalid road site index " + std::to_string(site));
}

std::size_t LatticeGeom::road_index(std::span<const int> x) const {
  if (x.size() != static_cast<std::size_t>(p_ - 1)) throw GeometryError("road coordinate has wrong dimension");
  std::size_t flat = 0;
  for (std::size_t q = 0; q < x.size(); ++q) {
    if (x[q] < 0 || x[q] >= n_) throw GeometryError("torus coordinate out of range");
    flat += static_cast<std::size_t>(x[q]) * strides_[q];
  }
  return flat;
}

std::size_t LatticeGeom::bulk_index(std::span<const int> x, int y) const {
  if (y < 1 || y > n_ - 1) throw GeometryError("height " + std::to_string(y) + " outside [1, N-1]");
  return static_cast<std::size_t>(y - 1) * layer_ + road_index(x);
}

std::vector<int> LatticeGeom::road_coord(std::size_t site) const {
  check_road(site);
  std::vector<int> x(static_cast<std::size_t>(p_ - 1));
  for (std::size_t q = 0; q < x.size(); ++q) {
    x[q] = static_cast<int>((site / strides_[q]) % static_cast<std::size_t>(n_));
  }
  return x;
}

SiteCoord LatticeGeom::bulk_coord(std::size_t site) const {
  check_bulk(site);
  return {road_coord(site % layer_), layer_of(site)};
}

std::vector<std::size_t> LatticeGeom::lower_sites() const {
  std::vector<std::size_t> out(layer_);
  for (std::size_t i = 0; i < layer_; ++i) out[i] = lower_site(i);
  return out;
}

std::vector<std::size_t> LatticeGeom::upper_sites() const {
  std::vector<std::size_t> out(layer_);
  for (std::size_t i = 0; i < layer_; ++i) out[i] = upper_site(i);
  return out;
}

std::span<const std::uint32_t> LatticeGeom::neighbors(std::size_t site) const {
  check_bulk(site);
  return field_nbrs_.row(site);
}

std::span<const std::uint32_t> LatticeGeom::road_neighbors(std::size_t site) const {
  check_road(site);
  return road_nbrs_.row(site);
}

std::span<const std::uint32_t> LatticeGeom::incident_field_edges(std::size_t site) const {
  return field_incident_.row(site);
}

std::span<const std::uint32_t> LatticeGeom::incident_road_edges(std::size_t site) const {
  return road_incident_.row(site);
}

MacroPoint LatticeGeom::site_to_macro(std::size_t site) const {
  const SiteCoord c = bulk_coord(site);
  MacroPoint m;
  m.x.reserve(c.x.size());
  for (int xi : c.x) m.x.push_back(static_cast<double>(xi) / n_);
  m.y = static_cast<double>(c.y) / n_;
  return m;
}

std::vector<double> LatticeGeom::road_to_macro(std::size_t site) const {
  std::vector<double> x;
  for (int xi : road_coord(site)) x.push_back(static_cast<double>(xi) / n_);
  return x;
}

LatticeGeom build_geometry(int p, int N) { return LatticeGeom(p, N); }

}  // namespace fieldroad
