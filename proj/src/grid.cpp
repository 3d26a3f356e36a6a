#include "semilab/grid.hpp"

#include <algorithm>
#include <cmath>

namespace semilab {

bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

int next_pow2(int v, int lo) {
  int p = 1;
  while (p < v || p < lo) p <<= 1;
  return p;
}

TorusGrid::TorusGrid(int dim, int n_per_axis) : dim_(dim), n_(n_per_axis) {
  if (dim != 1 && dim != 2) throw Error("TorusGrid: dim must be 1 or 2");
  if (n_per_axis < 16 || !is_pow2(n_per_axis))
    throw Error("TorusGrid: n_per_axis must be a power of two >= 16, got " +
                std::to_string(n_per_axis));
  size_ = dim == 1 ? static_cast<std::size_t>(n_) : static_cast<std::size_t>(n_) * n_;
}

double TorusGrid::cell_volume() const { return dim_ == 1 ? spacing() : spacing() * spacing(); }

Point TorusGrid::point(std::size_t idx) const {
  auto c = coords(idx);
  Point p{c[0] * spacing(), 0.0};
  if (dim_ == 2) p[1] = c[1] * spacing();
  return p;
}

ScalarField::ScalarField(TorusGrid g, std::string lbl)
    : grid(g), values(g.size(), 0.0), label(std::move(lbl)) {}

ScalarField::ScalarField(TorusGrid g, std::vector<double> v, std::string lbl)
    : grid(g), values(std::move(v)), label(std::move(lbl)) {
  if (values.size() != grid.size()) throw Error("ScalarField: values length does not match grid");
}

double ScalarField::sup_norm() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double ScalarField::l2_norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s * grid.cell_volume());
}

bool ScalarField::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

double periodic_delta(double a, double b) {
  double d = a - b;
  d -= std::floor(d + 0.5);
  return d;
}

double periodic_distance(const Point &a, const Point &b, int dim) {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) {
    double d = periodic_delta(a[k], b[k]);
    s += d * d;
  }
  return std::sqrt(s);
}

} // namespace semilab
