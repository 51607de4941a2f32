#pragma once
// Uniform 2-D (x,t) grids, sampled fields, and finite-difference stencils.
// Interior stencils are 4th order; within two points of an edge the order
// drops to the one-sided/central 2nd-order fallback.

#include <vector>

#include "soliton/linalg.hpp"

namespace soliton {

struct Grid2D {
  double x0 = 0, x1 = 0, t0 = 0, t1 = 0;
  int nx = 1, nt = 1;

  double hx() const { return nx > 1 ? (x1 - x0) / (nx - 1) : 0.0; }
  double ht() const { return nt > 1 ? (t1 - t0) / (nt - 1) : 0.0; }
  double x(int i) const { return x0 + i * hx(); }
  double t(int j) const { return t0 + j * ht(); }
  size_t size() const { return static_cast<size_t>(nx) * nt; }
  size_t idx(int i, int j) const { return static_cast<size_t>(j) * nx + i; }
};

template <class T>
struct Field2D {
  Grid2D grid;
  std::vector<T> v;

  explicit Field2D() = default;
  explicit Field2D(const Grid2D& g) : grid(g), v(g.size()) {}
  T& at(int i, int j) { return v[grid.idx(i, j)]; }
  const T& at(int i, int j) const { return v[grid.idx(i, j)]; }

  template <class F>
  static Field2D sample(const Grid2D& g, F&& f) {
    Field2D out(g);
    for (int j = 0; j < g.nt; ++j)
      for (int i = 0; i < g.nx; ++i) out.at(i, j) = f(g.x(i), g.t(j));
    return out;
  }
};

using ScalarField = Field2D<Cplx>;
using MatField = Field2D<CMat>;

namespace fd {

// f: callable index -> value; N: line length; h: spacing.
template <class F>
auto d1(F&& f, int i, int N, double h, int order = 4) {
  using V = std::decay_t<decltype(f(0))>;
  V out;
  if (order >= 4 && i >= 2 && i <= N - 3)
    out = (f(i - 2) - 8.0 * f(i - 1) + 8.0 * f(i + 1) - f(i + 2)) / (12.0 * h);
  else if (i == 0)
    out = (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h);
  else if (i == N - 1)
    out = (3.0 * f(N - 1) - 4.0 * f(N - 2) + f(N - 3)) / (2.0 * h);
  else
    out = (f(i + 1) - f(i - 1)) / (2.0 * h);
  return out;
}

template <class F>
auto d2(F&& f, int i, int N, double h, int order = 4) {
  using V = std::decay_t<decltype(f(0))>;
  V out;
  if (order >= 4 && i >= 2 && i <= N - 3)
    out = (-f(i - 2) + 16.0 * f(i - 1) - 30.0 * f(i) + 16.0 * f(i + 1) - f(i + 2)) /
          (12.0 * h * h);
  else if (i == 0)
    out = (2.0 * f(0) - 5.0 * f(1) + 4.0 * f(2) - f(3)) / (h * h);
  else if (i == N - 1)
    out = (2.0 * f(N - 1) - 5.0 * f(N - 2) + 4.0 * f(N - 3) - f(N - 4)) / (h * h);
  else
    out = (f(i - 1) - 2.0 * f(i) + f(i + 1)) / (h * h);
  return out;
}

template <class F>
auto d3(F&& f, int i, int N, double h, int order = 4) {
  using V = std::decay_t<decltype(f(0))>;
  V out;
  if (order >= 4 && i >= 3 && i <= N - 4)
    out = (f(i - 3) - 8.0 * f(i - 2) + 13.0 * f(i - 1) - 13.0 * f(i + 1) +
           8.0 * f(i + 2) - f(i + 3)) /
          (8.0 * h * h * h);
  else {
    int c = i < 2 ? 2 : (i > N - 3 ? N - 3 : i);  // clamp so the 5-pt stencil fits
    out = (-f(c - 2) + 2.0 * f(c - 1) - 2.0 * f(c + 1) + f(c + 2)) / (2.0 * h * h * h);
  }
  return out;
}

}  // namespace fd

// x-derivative of a 2-D field at a grid node.
template <class T>
T dx(const Field2D<T>& f, int i, int j, int order = 4) {
  return fd::d1([&](int k) { return f.at(k, j); }, i, f.grid.nx, f.grid.hx(), order);
}
template <class T>
T dt(const Field2D<T>& f, int i, int j, int order = 4) {
  return fd::d1([&](int k) { return f.at(i, k); }, j, f.grid.nt, f.grid.ht(), order);
}

}  // namespace soliton
