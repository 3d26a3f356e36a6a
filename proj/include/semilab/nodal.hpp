#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semilab/ball.hpp"
#include "semilab/eigensolver.hpp"
#include "semilab/grid.hpp"

namespace semilab {

/// One marching-squares piece. Endpoints are in the unwrapped coordinates of
/// the cell it came from, so a piece in the last column may reach x = 1.
struct NodalSegment {
  Point a{0.0, 0.0};
  Point b{0.0, 0.0};
  std::size_t cell = 0;
  double length() const;
};

struct NodalSet {
  TorusGrid grid{1, 16};
  std::vector<NodalSegment> segments; // 2-D, ordered by cell index
  std::vector<double> crossings;      // 1-D
  /// Polyline length in 2-D, crossing count in 1-D.
  double total_measure = 0.0;
};

/// Exact zeros are replaced by +1e-14 ||u||_inf before the sign test.
inline constexpr double kZeroNudge = 1e-14;

/// Marching squares with linear interpolation on each periodic cell;
/// saddle cells follow the sign of the corner average.
NodalSet extract_nodal_set(const ScalarField &u);

/// Connected components of {u > 0} plus those of {u < 0}, periodic
/// 4-adjacency. A saddle cell also joins the diagonal pair whose sign
/// matches the corner average, as in extract_nodal_set. Exact zeros belong
/// to neither set.
int nodal_domain_count(const ScalarField &u);

struct NodalScaling {
  std::vector<double> h;
  std::vector<double> measure;
  double slope = 0.0; // ln(measure) against ln(1/h)
  double intercept = 0.0;
  double r2 = 0.0;
  bool fitted = false;
  std::vector<std::string> flags;
};

/// Needs at least three pairs. A zero measure leaves the fit undone and flagged.
NodalScaling nodal_measure_scaling(const std::vector<EigenPair> &pairs);

struct ZeroInBallReport {
  double radius = 0.0;
  std::size_t admissible = 0; // centers whose ball lies in {V < E - margin}
  std::vector<Point> violations;
  std::vector<std::string> flags;
};

/// For every grid point whose ball of radius C_ball h sits in
/// {V < E - margin}, checks that the ball holds a point with u >= 0 and one
/// with u <= 0 (an exact zero counts for both). Ball membership is the
/// ball_mask rule, evaluated with exact periodic distance transforms.
ZeroInBallReport zero_in_ball_scan(const ScalarField &u, double h, double C_ball, const ScalarField &V, double E,
                                   double margin);

struct SignSplit {
  double plus = 0.0;  // int u+
  double minus = 0.0; // int u-
  double abs = 0.0;   // int |u|
  double integral = 0.0;
  bool empty = false;
};

SignSplit sign_split(const ScalarField &u, const BallSpec &ball);

struct MeanValue {
  double ratio = 0.0; // |int u| / int |u|
  SignSplit split;
  bool zero_mass = false;
};

MeanValue mean_value_ratio(const ScalarField &u, const Point &p, double r);

/// Length of the nodal set inside the periodic ball, segments clipped
/// exactly to the disc.
double nodal_length_in_ball(const NodalSet &set, const BallSpec &ball);

/// Midpoints of `count` segments drawn with a seeded generator (all of them,
/// in order, when there are fewer).
std::vector<Point> sample_nodal_points(const NodalSet &set, std::size_t count, std::uint64_t seed);

struct BallCheck {
  Point center{0.0, 0.0};
  double ratio = 0.0;        // mean-value ratio
  double split_fraction = 0.0; // min(int u+, int u-) / int |u|
  double area_fraction = 0.0;  // min(|B+|, |B-|) / |B|
  double length = 0.0;         // nodal length inside the ball
  double iso_bound = 0.0;      // kappa min(|B+|, |B-|)^{(n-1)/n}
  bool iso_tested = false;
  bool iso_ok = true;
};

struct NodalBallSurvey {
  double radius = 0.0;
  std::vector<BallCheck> balls;
  double max_ratio = 0.0;
  /// Fraction of balls with split_fraction >= the split threshold.
  double split_pass_fraction = 0.0;
  std::size_t iso_tested = 0;
  std::size_t iso_failures = 0;
};

struct NodalBallOptions {
  double radius_factor = 3.0; // r = radius_factor * h
  std::size_t samples = 200;
  std::uint64_t seed = 1;
  double split_threshold = 0.05;
  double iso_area_fraction = 0.05; // ball tested when min(|B+|,|B-|) >= this |B|
  double kappa = 1.0;
};

/// Mean-value ratio, sign split and the isoperimetric inequality on balls
/// centred at sampled nodal points (2-D).
NodalBallSurvey nodal_ball_survey(const ScalarField &u, const NodalSet &set, double h,
                                  const NodalBallOptions &opt = {});

} // namespace semilab
