#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "istab/lagrange.hpp"
#include "istab/mesh.hpp"

namespace istab {

using ScalarFn = std::function<double(Point2)>;
using VectorFn = std::function<std::array<double, 2>(Point2)>;

/// Affine map of cell c: x = v0 + J xhat.
struct CellGeometry {
  Point2 origin;
  double J[2][2];     // columns v1-v0, v2-v0
  double Jinv[2][2];  // inverse, for reference coords and gradient push-forward
  double detJ;

  Point2 to_physical(std::array<double, 2> ref) const {
    return {origin.x + J[0][0] * ref[0] + J[0][1] * ref[1],
            origin.y + J[1][0] * ref[0] + J[1][1] * ref[1]};
  }
  std::array<double, 2> to_reference(Point2 p) const {
    const double dx = p.x - origin.x, dy = p.y - origin.y;
    return {Jinv[0][0] * dx + Jinv[0][1] * dy, Jinv[1][0] * dx + Jinv[1][1] * dy};
  }
  /// Physical gradient from a reference gradient: grad = J^{-T} ghat.
  std::array<double, 2> push_gradient(const std::array<double, 2>& g) const {
    return {Jinv[0][0] * g[0] + Jinv[1][0] * g[1], Jinv[0][1] * g[0] + Jinv[1][1] * g[1]};
  }
  /// Physical hessian (dxx,dxy,dyy) from a reference hessian.
  std::array<double, 3> push_hessian(const std::array<double, 3>& h) const {
    const double a = Jinv[0][0], b = Jinv[1][0], c = Jinv[0][1], d = Jinv[1][1];
    // H_phys = Jinv^T H_ref Jinv with Jinv rows (a c; b d) mapping d/dx = a d/dxi + b d/deta.
    return {a * a * h[0] + 2.0 * a * b * h[1] + b * b * h[2],
            a * c * h[0] + (a * d + b * c) * h[1] + b * d * h[2],
            c * c * h[0] + 2.0 * c * d * h[1] + d * d * h[2]};
  }
};

inline CellGeometry cell_geometry(const Mesh& mesh, int c) {
  CellGeometry g;
  const Point2 p0 = mesh.cell_vertex(c, 0), p1 = mesh.cell_vertex(c, 1), p2 = mesh.cell_vertex(c, 2);
  g.origin = p0;
  g.J[0][0] = p1.x - p0.x;
  g.J[0][1] = p2.x - p0.x;
  g.J[1][0] = p1.y - p0.y;
  g.J[1][1] = p2.y - p0.y;
  g.detJ = g.J[0][0] * g.J[1][1] - g.J[0][1] * g.J[1][0];
  g.Jinv[0][0] = g.J[1][1] / g.detJ;
  g.Jinv[0][1] = -g.J[0][1] / g.detJ;
  g.Jinv[1][0] = -g.J[1][0] / g.detJ;
  g.Jinv[1][1] = g.J[0][0] / g.detJ;
  return g;
}

/// Reference coordinates of the point at parameter t along local edge e
/// (from local vertex e to local vertex (e+1)%3).
inline std::array<double, 2> edge_reference_point(int e, double t) {
  static constexpr std::array<std::array<double, 2>, 3> corner = {{{0, 0}, {1, 0}, {0, 1}}};
  const auto& a = corner[e];
  const auto& b = corner[(e + 1) % 3];
  return {a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])};
}

/// Discontinuous cell space W_h: P_k per cell, no dof sharing.
struct CellSpace {
  const Mesh* mesh = nullptr;
  int k = 0;
  int nb = 0;  // dofs per cell
  int total_dofs = 0;

  int dof(int c, int i) const { return c * nb + i; }
};

inline CellSpace build_cell_space(const Mesh& mesh, int k) {
  if (k < 1) throw std::invalid_argument("build_cell_space: k must be >= 1");
  CellSpace s;
  s.mesh = &mesh;
  s.k = k;
  s.nb = (k + 1) * (k + 2) / 2;
  s.total_dofs = mesh.num_cells() * s.nb;
  return s;
}

/// Facet space W_bar_h: P_k per facet, single-valued, with continuity
/// parameter l. For l=1 the endpoint dofs are shared vertex dofs, so
/// total_dofs = V + (k-1) E; for l=0 every facet carries its own k+1 dofs.
/// Dofs on Dirichlet-tagged boundary facets are constrained to zero.
struct FacetSpace {
  const Mesh* mesh = nullptr;
  int k = 0;
  int l = 1;
  int total_dofs = 0;
  int free_dofs = 0;
  std::vector<int> dofs;          // (k+1) per facet; node i at parameter i/k
  std::vector<bool> constrained;  // per global dof
  std::vector<int> free_index;    // global -> condensed index, -1 if constrained

  int dof(int f, int i) const { return dofs[f * (k + 1) + i]; }
};

inline FacetSpace build_facet_space(const Mesh& mesh, int k, int l) {
  if (k < 1) throw std::invalid_argument("build_facet_space: k must be >= 1");
  if (l != 0 && l != 1) throw std::invalid_argument("build_facet_space: l must be 0 or 1");
  FacetSpace s;
  s.mesh = &mesh;
  s.k = k;
  s.l = l;
  const int E = mesh.num_facets(), V = mesh.num_vertices();
  s.dofs.resize(E * (k + 1));
  if (l == 0) {
    s.total_dofs = E * (k + 1);
    for (int f = 0; f < E; ++f)
      for (int i = 0; i <= k; ++i) s.dofs[f * (k + 1) + i] = f * (k + 1) + i;
  } else {
    s.total_dofs = V + (k - 1) * E;
    for (int f = 0; f < E; ++f) {
      s.dofs[f * (k + 1) + 0] = mesh.facets[f][0];
      s.dofs[f * (k + 1) + k] = mesh.facets[f][1];
      for (int i = 1; i < k; ++i) s.dofs[f * (k + 1) + i] = V + f * (k - 1) + (i - 1);
    }
  }
  s.constrained.assign(s.total_dofs, false);
  for (int f = 0; f < E; ++f)
    if (mesh.is_boundary_facet(f) && mesh.facet_tag[f] == BoundaryTag::Dirichlet)
      for (int i = 0; i <= k; ++i) s.constrained[s.dof(f, i)] = true;
  s.free_index.assign(s.total_dofs, -1);
  s.free_dofs = 0;
  for (int d = 0; d < s.total_dofs; ++d)
    if (!s.constrained[d]) s.free_index[d] = s.free_dofs++;
  return s;
}

/// Coefficient vector on a cell or facet space.
struct Field {
  std::vector<double> coeffs;
};

inline double checked_eval(const ScalarFn& f, Point2 p) {
  const double v = f(p);
  if (!std::isfinite(v))
    throw std::runtime_error("interpolation: non-finite data at (" + std::to_string(p.x) + ", " +
                             std::to_string(p.y) + ")");
  return v;
}

/// Nodal interpolant of f on the order-m discontinuous cell space.
inline Field interpolate_cellwise(const ScalarFn& f, const Mesh& mesh, int m) {
  const CellSpace space = build_cell_space(mesh, m);
  const LagrangeBasis basis(RefEntity::Triangle, m);
  Field field;
  field.coeffs.resize(space.total_dofs);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellGeometry geom = cell_geometry(mesh, c);
    for (int i = 0; i < space.nb; ++i)
      field.coeffs[space.dof(c, i)] = checked_eval(f, geom.to_physical(basis.nodes()[i]));
  }
  return field;
}

/// Nodal interpolant of f at facet Lagrange nodes; constrained dofs are zero.
inline Field facet_trace_interpolate(const ScalarFn& f, const FacetSpace& space) {
  const Mesh& mesh = *space.mesh;
  Field field;
  field.coeffs.assign(space.total_dofs, 0.0);
  for (int fct = 0; fct < mesh.num_facets(); ++fct) {
    const Point2 a = mesh.vertices[mesh.facets[fct][0]];
    const Point2 b = mesh.vertices[mesh.facets[fct][1]];
    for (int i = 0; i <= space.k; ++i) {
      const int d = space.dof(fct, i);
      if (space.constrained[d]) continue;
      const double t = static_cast<double>(i) / space.k;
      field.coeffs[d] = checked_eval(f, {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    }
  }
  return field;
}

}  // namespace istab
