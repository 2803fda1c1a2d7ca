#pragma once

#include <array>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace istab {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

enum class BoundaryTag { Dirichlet, Neumann };
enum class Diagonal { Right, Left };

/// Triangulation of a polygonal domain with full facet topology.
///
/// Cells are vertex triples with positive (counter-clockwise) orientation.
/// Local facet e of a cell is the edge from local vertex e to local vertex
/// (e+1)%3, so the outward normal is the edge tangent rotated clockwise.
/// Facets store the vertex pair in the direction first encountered during
/// construction; cell_facets records whether the cell traverses the facet
/// in that direction (+1) or reversed (-1).
struct Mesh {
  std::vector<Point2> vertices;
  std::vector<std::array<int, 3>> cells;
  std::vector<std::array<int, 2>> facets;
  std::vector<std::array<std::pair<int, int>, 3>> cell_facets;  // (facet, orientation)
  std::vector<std::array<int, 2>> facet_cells;                  // second = -1 on boundary
  std::vector<BoundaryTag> facet_tag;                           // meaningful on boundary facets
  std::vector<double> h_cell;                                   // 2 x circumradius

  int num_cells() const { return static_cast<int>(cells.size()); }
  int num_facets() const { return static_cast<int>(facets.size()); }
  int num_vertices() const { return static_cast<int>(vertices.size()); }

  bool is_boundary_facet(int f) const { return facet_cells[f][1] < 0; }

  Point2 cell_vertex(int c, int lv) const { return vertices[cells[c][lv]]; }

  double cell_area(int c) const {
    const Point2 a = cell_vertex(c, 0), b = cell_vertex(c, 1), d = cell_vertex(c, 2);
    return 0.5 * ((b.x - a.x) * (d.y - a.y) - (b.y - a.y) * (d.x - a.x));
  }

  double facet_length(int f) const {
    const Point2 a = vertices[facets[f][0]], b = vertices[facets[f][1]];
    return std::hypot(b.x - a.x, b.y - a.y);
  }

  Point2 facet_midpoint(int f) const {
    const Point2 a = vertices[facets[f][0]], b = vertices[facets[f][1]];
    return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
  }

  /// Outward unit normal of cell c on its local facet e.
  std::array<double, 2> facet_normal(int c, int e) const {
    check_cell(c);
    if (e < 0 || e > 2) throw std::invalid_argument("mesh: local facet out of range");
    const Point2 a = cell_vertex(c, e), b = cell_vertex(c, (e + 1) % 3);
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len = std::hypot(dx, dy);
    return {dy / len, -dx / len};
  }

  void check_cell(int c) const {
    if (c < 0 || c >= num_cells()) throw std::invalid_argument("mesh: cell id out of range");
  }
};

/// Returns 2R with R the circumradius. For a triangle with edge lengths
/// l1,l2,l3 and area A, R = l1 l2 l3 / (4A).
inline double cell_size(const Mesh& mesh, int c) {
  mesh.check_cell(c);
  const Point2 p0 = mesh.cell_vertex(c, 0), p1 = mesh.cell_vertex(c, 1), p2 = mesh.cell_vertex(c, 2);
  const double l0 = std::hypot(p1.x - p0.x, p1.y - p0.y);
  const double l1 = std::hypot(p2.x - p1.x, p2.y - p1.y);
  const double l2 = std::hypot(p0.x - p2.x, p0.y - p2.y);
  const double area = mesh.cell_area(c);
  if (!(area > 0.0))
    throw std::runtime_error("mesh: degenerate cell " + std::to_string(c));
  return l0 * l1 * l2 / (2.0 * area);
}

namespace detail {

inline void finalize_topology(Mesh& mesh) {
  std::map<std::pair<int, int>, int> facet_of;
  mesh.cell_facets.resize(mesh.cells.size());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    if (!(mesh.cell_area(c) > 0.0))
      throw std::runtime_error("mesh: cell " + std::to_string(c) + " is degenerate or clockwise");
    for (int e = 0; e < 3; ++e) {
      const int va = mesh.cells[c][e];
      const int vb = mesh.cells[c][(e + 1) % 3];
      const auto key = std::minmax(va, vb);
      auto it = facet_of.find(key);
      if (it == facet_of.end()) {
        const int f = mesh.num_facets();
        facet_of.emplace(key, f);
        mesh.facets.push_back({va, vb});
        mesh.facet_cells.push_back({c, -1});
        mesh.cell_facets[c][e] = {f, +1};
      } else {
        const int f = it->second;
        if (mesh.facet_cells[f][1] >= 0)
          throw std::runtime_error("mesh: facet shared by more than two cells");
        mesh.facet_cells[f][1] = c;
        const int orient = (mesh.facets[f][0] == va) ? +1 : -1;
        mesh.cell_facets[c][e] = {f, orient};
      }
    }
  }
  mesh.facet_tag.assign(mesh.facets.size(), BoundaryTag::Dirichlet);
  mesh.h_cell.resize(mesh.cells.size());
  for (int c = 0; c < mesh.num_cells(); ++c) mesh.h_cell[c] = cell_size(mesh, c);
}

}  // namespace detail

/// Structured triangulation of the rectangle (x0,x1) x (y0,y1): n x n grid
/// squares, each split along the chosen diagonal. Numbering is lexicographic
/// by grid position.
inline Mesh build_uniform_square_mesh(int n, std::array<double, 4> domain,
                                      Diagonal diagonal = Diagonal::Right) {
  const double x0 = domain[0], x1 = domain[1], y0 = domain[2], y1 = domain[3];
  if (n < 1) throw std::invalid_argument("build_uniform_square_mesh: n must be >= 1");
  if (!(x0 < x1) || !(y0 < y1))
    throw std::invalid_argument("build_uniform_square_mesh: degenerate domain");

  Mesh mesh;
  mesh.vertices.reserve((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      mesh.vertices.push_back({x0 + (x1 - x0) * i / n, y0 + (y1 - y0) * j / n});

  auto vid = [n](int i, int j) { return j * (n + 1) + i; };
  mesh.cells.reserve(2 * n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      if (diagonal == Diagonal::Right) {
        mesh.cells.push_back({a, b, c});
        mesh.cells.push_back({a, c, d});
      } else {
        mesh.cells.push_back({a, b, d});
        mesh.cells.push_back({b, c, d});
      }
    }
  detail::finalize_topology(mesh);
  return mesh;
}

/// Single-triangle mesh; all three facets are boundary facets.
inline Mesh build_single_triangle_mesh(Point2 p0, Point2 p1, Point2 p2) {
  Mesh mesh;
  mesh.vertices = {p0, p1, p2};
  mesh.cells = {{0, 1, 2}};
  detail::finalize_topology(mesh);
  return mesh;
}

/// Plain-text mesh dump, one entity per line (see README for the format).
inline void dump_mesh(const Mesh& mesh, std::ostream& out) {
  out << "vertices " << mesh.num_vertices() << "\n";
  for (int v = 0; v < mesh.num_vertices(); ++v)
    out << v << " " << mesh.vertices[v].x << " " << mesh.vertices[v].y << "\n";
  out << "cells " << mesh.num_cells() << "\n";
  for (int c = 0; c < mesh.num_cells(); ++c)
    out << c << " " << mesh.cells[c][0] << " " << mesh.cells[c][1] << " " << mesh.cells[c][2]
        << "\n";
  out << "facets " << mesh.num_facets() << "\n";
  for (int f = 0; f < mesh.num_facets(); ++f) {
    out << f << " " << mesh.facets[f][0] << " " << mesh.facets[f][1] << " "
        << mesh.facet_cells[f][0] << " " << mesh.facet_cells[f][1];
    if (mesh.is_boundary_facet(f))
      out << " " << (mesh.facet_tag[f] == BoundaryTag::Dirichlet ? "D" : "N");
    out << "\n";
  }
}

}  // namespace istab
