#ifndef TIMEPOINT_CPAB_HPP
#define TIMEPOINT_CPAB_HPP

#include <utility>
#include <vector>

#include "timepoint/common.hpp"

namespace timepoint::cpab {

// Uniform partition of [0,1] into n_cells equal sub-intervals.
struct Tessellation {
  int n_cells = 16;

  explicit Tessellation(int cells = 16);

  double cell_width() const { return 1.0 / n_cells; }
  double vertex(int k) const { return static_cast<double>(k) / n_cells; }
  VectorXd vertices() const;
};

// Velocity values at the interior vertices; velocity is pinned to zero at
// both boundary vertices, so dim(theta) = n_cells - 1.
struct CpabTheta {
  VectorXd values;

  Index dim() const { return values.size(); }
};

// Zero-mean Gaussian smoothness prior over CPA velocity fields. The
// covariance is an RBF kernel over interior-vertex positions with
// length-scale sigma_smooth / n_cells.
struct CpaPrior {
  Tessellation tess;
  double sigma_var = 0.5;
  double sigma_smooth = 1.0;
  MatrixXd covariance;
  MatrixXd cholesky_factor;  // lower triangular
};

CpaPrior build_prior(int n_cells = 16, double sigma_var = 0.5,
                     double sigma_smooth = 1.0);

CpabTheta theta_from_z(const CpaPrior& prior, const VectorXd& z);
CpabTheta sample_theta(const CpaPrior& prior, Rng& rng);
CpabTheta sample_theta(const CpaPrior& prior, std::uint64_t rng_seed);

// A CPAB transformation: the time-1 flow of the continuous piecewise-affine
// velocity field v(x) = a_k x + b_k obtained by linearly interpolating the
// vertex velocities. Immutable after construction.
class CpabTransform {
 public:
  CpabTransform(Tessellation tess, CpabTheta theta);

  const Tessellation& tessellation() const { return tess_; }
  const CpabTheta& theta() const { return theta_; }

  // Interpolated CPA velocity at x in [0,1].
  double velocity(double x) const;

  // phi^theta(x; integration_time), computed exactly by hopping cells.
  double transform_point(double x, double integration_time = 1.0) const;

  // (T^theta)^{-1}(y): the time-1 flow of the negated field.
  double inverse_point(double y) const;

  // The transform with negated theta, i.e. the inverse map.
  CpabTransform inverse() const;

 private:
  int cell_of(double x, double v) const;

  Tessellation tess_;
  CpabTheta theta_;
  VectorXd slope_;      // a_k per cell
  VectorXd intercept_;  // b_k per cell
};

// output[t] = x(linear) sampled at transform_point(t/(L-1)) * (L-1).
Signal warp_signal(const Signal& x, const CpabTransform& t);

struct WarpedKeypoints {
  std::vector<std::uint8_t> mask;
  // Surviving (source index, mapped index) pairs, sorted by source index.
  std::vector<std::pair<int, int>> correspondence;
};

// Maps each set bit of `mask` through the inverse transform (the position at
// which the source feature appears in the warped signal); collisions after
// rounding keep the lowest source index.
WarpedKeypoints warp_keypoints(const std::vector<std::uint8_t>& mask,
                               const CpabTransform& t);

}  // namespace timepoint::cpab

#endif  // TIMEPOINT_CPAB_HPP
