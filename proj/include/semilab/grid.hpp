#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace semilab {

/// Point on the torus (or in a local chart). Only the first `dim` entries
/// are meaningful; the rest stay zero.
using Point = std::array<double, 2>;

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Uniform periodic grid on the unit torus [0,1)^dim.
class TorusGrid {
public:
  TorusGrid(int dim, int n_per_axis);

  int dim() const { return dim_; }
  int n() const { return n_; }
  double spacing() const { return 1.0 / n_; }
  std::size_t size() const { return size_; }
  /// spacing^dim, the cell measure used by every grid quadrature.
  double cell_volume() const;

  std::size_t index(int ix, int iy = 0) const {
    return static_cast<std::size_t>(iy) * (dim_ == 2 ? n_ : 0) + static_cast<std::size_t>(ix);
  }
  std::array<int, 2> coords(std::size_t idx) const {
    if (dim_ == 1) return {static_cast<int>(idx), 0};
    return {static_cast<int>(idx % n_), static_cast<int>(idx / n_)};
  }
  Point point(std::size_t idx) const;

  bool operator==(const TorusGrid &o) const { return dim_ == o.dim_ && n_ == o.n_; }
  bool operator!=(const TorusGrid &o) const { return !(*this == o); }

private:
  int dim_;
  int n_;
  std::size_t size_;
};

/// Real samples on a TorusGrid. Indexing is x-fastest: values[iy*n + ix].
struct ScalarField {
  TorusGrid grid;
  std::vector<double> values;
  std::string label;
  /// Semiclassical parameter when the field is an eigenfunction.
  std::optional<double> h;

  ScalarField(TorusGrid g, std::string lbl = {});
  ScalarField(TorusGrid g, std::vector<double> v, std::string lbl = {});

  double sup_norm() const;
  /// L^2(torus) norm with the cell-volume quadrature.
  double l2_norm() const;
  bool all_finite() const;
};

/// Smallest power of two >= v (and >= lo).
int next_pow2(int v, int lo = 1);
bool is_pow2(int v);

/// Periodic displacement a - b reduced to [-1/2, 1/2) per axis.
double periodic_delta(double a, double b);
double periodic_distance(const Point &a, const Point &b, int dim);

/// Samples f(point) on every grid point.
template <class F>
ScalarField sample(const TorusGrid &g, F &&f, std::string label = {}) {
  ScalarField out(g, std::move(label));
  for (std::size_t i = 0; i < g.size(); ++i) out.values[i] = f(g.point(i));
  return out;
}

} // namespace semilab
