#include "timepoint/cpab.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace timepoint::cpab {

namespace {
constexpr double kSlopeTol = 1e-12;     // below this, treat cell as constant-velocity
constexpr double kVelocityTol = 1e-14;  // below this, the point is fixed
}  // namespace

Tessellation::Tessellation(int cells) : n_cells(cells) {
  if (cells < 2) throw std::invalid_argument("tessellation needs at least 2 cells");
}

VectorXd Tessellation::vertices() const {
  return VectorXd::LinSpaced(n_cells + 1, 0.0, 1.0);
}

CpaPrior build_prior(int n_cells, double sigma_var, double sigma_smooth) {
  if (n_cells < 2) throw std::invalid_argument("build_prior: n_cells must be >= 2");
  if (sigma_var <= 0.0 || sigma_smooth <= 0.0)
    throw std::invalid_argument("build_prior: sigmas must be positive");

  CpaPrior prior;
  prior.tess = Tessellation(n_cells);
  prior.sigma_var = sigma_var;
  prior.sigma_smooth = sigma_smooth;

  const int d = n_cells - 1;
  const double ell = sigma_smooth / n_cells;
  MatrixXd cov(d, d);
  for (int i = 0; i < d; ++i) {
    const double ci = static_cast<double>(i + 1) / n_cells;
    for (int j = 0; j < d; ++j) {
      const double cj = static_cast<double>(j + 1) / n_cells;
      const double diff = ci - cj;
      cov(i, j) = sigma_var * sigma_var * std::exp(-diff * diff / (2.0 * ell * ell));
    }
  }
  prior.covariance = cov;

  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    MatrixXd jittered = cov + 1e-9 * MatrixXd::Identity(d, d);
    llt.compute(jittered);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("prior covariance not PD");
  }
  prior.cholesky_factor = llt.matrixL();
  return prior;
}

CpabTheta theta_from_z(const CpaPrior& prior, const VectorXd& z) {
  if (z.size() != prior.cholesky_factor.rows())
    throw std::invalid_argument("theta_from_z: dimension mismatch");
  return CpabTheta{prior.cholesky_factor * z};
}

CpabTheta sample_theta(const CpaPrior& prior, Rng& rng) {
  VectorXd z(prior.cholesky_factor.rows());
  for (Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return theta_from_z(prior, z);
}

CpabTheta sample_theta(const CpaPrior& prior, std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  return sample_theta(prior, rng);
}

CpabTransform::CpabTransform(Tessellation tess, CpabTheta theta)
    : tess_(tess), theta_(std::move(theta)) {
  const int n = tess_.n_cells;
  if (theta_.dim() != n - 1)
    throw std::invalid_argument("CpabTransform: dim(theta) must equal n_cells - 1");

  // Vertex velocities with zero boundary conditions.
  VectorXd v(n + 1);
  v[0] = 0.0;
  v.segment(1, n - 1) = theta_.values;
  v[n] = 0.0;

  const double h = tess_.cell_width();
  slope_.resize(n);
  intercept_.resize(n);
  for (int k = 0; k < n; ++k) {
    slope_[k] = (v[k + 1] - v[k]) / h;
    intercept_[k] = v[k] - slope_[k] * tess_.vertex(k);
  }
}

double CpabTransform::velocity(double x) const {
  const int n = tess_.n_cells;
  int k = std::clamp(static_cast<int>(std::floor(x * n)), 0, n - 1);
  return slope_[k] * x + intercept_[k];
}

int CpabTransform::cell_of(double x, double v) const {
  const int n = tess_.n_cells;
  int k = std::clamp(static_cast<int>(std::floor(x * n)), 0, n - 1);
  // Sitting exactly on an interior vertex while moving left: advance into
  // the left cell, otherwise the exit time would be zero forever.
  if (v < 0.0 && k > 0 && x <= tess_.vertex(k)) --k;
  return k;
}

double CpabTransform::transform_point(double x, double integration_time) const {
  if (x < 0.0 || x > 1.0)
    throw std::domain_error("transform_point: x outside [0,1]");

  const int n = tess_.n_cells;
  double t_rem = integration_time;
  const int max_hops = 4 * n + 8;
  for (int hop = 0; hop < max_hops && t_rem > 0.0; ++hop) {
    const double v0 = velocity(x);
    if (std::abs(v0) < kVelocityTol) break;  // fixed point
    const int k = cell_of(x, v0);
    const double a = slope_[k];
    const double b = intercept_[k];
    const double xb = v0 > 0.0 ? tess_.vertex(k + 1) : tess_.vertex(k);

    double t_exit = std::numeric_limits<double>::infinity();
    if (std::abs(a) < kSlopeTol) {
      t_exit = (xb - x) / b;
    } else {
      const double vb = a * xb + b;  // velocity at the target boundary
      if (vb * v0 > 0.0) t_exit = std::log(vb / v0) / a;
    }

    if (t_exit > t_rem) {
      // Finish inside this cell.
      if (std::abs(a) < kSlopeTol) {
        x += b * t_rem;
      } else {
        x = (x + b / a) * std::exp(a * t_rem) - b / a;
      }
      t_rem = 0.0;
    } else {
      x = xb;
      t_rem -= t_exit;
    }
  }
  return std::clamp(x, 0.0, 1.0);
}

CpabTransform CpabTransform::inverse() const {
  return CpabTransform(tess_, CpabTheta{-theta_.values});
}

double CpabTransform::inverse_point(double y) const {
  if (y < 0.0 || y > 1.0)
    throw std::domain_error("inverse_point: y outside [0,1]");
  // The field is stationary and the velocity space is linear, so the inverse
  // flow is the forward flow of -theta.
  return inverse().transform_point(y, 1.0);
}

Signal warp_signal(const Signal& x, const CpabTransform& t) {
  const Index len = x.size();
  if (len < 2) throw std::invalid_argument("warp_signal: signal too short");
  Signal out(len);
  for (Index i = 0; i < len; ++i) {
    const double g = static_cast<double>(i) / static_cast<double>(len - 1);
    const double src = t.transform_point(g) * static_cast<double>(len - 1);
    const auto i0 = static_cast<Index>(std::floor(src));
    if (i0 >= len - 1) {
      out[i] = x[len - 1];
    } else {
      const double w = src - static_cast<double>(i0);
      out[i] = (1.0 - w) * x[i0] + w * x[i0 + 1];
    }
  }
  return out;
}

WarpedKeypoints warp_keypoints(const std::vector<std::uint8_t>& mask,
                               const CpabTransform& t) {
  const auto len = static_cast<Index>(mask.size());
  WarpedKeypoints out;
  out.mask.assign(mask.size(), 0);
  const CpabTransform inv = t.inverse();
  for (Index p = 0; p < len; ++p) {
    if (!mask[p]) continue;
    const double g = static_cast<double>(p) / static_cast<double>(len - 1);
    const double y = inv.transform_point(g) * static_cast<double>(len - 1);
    const auto mapped = static_cast<Index>(std::llround(y));
    const auto q = std::clamp<Index>(mapped, 0, len - 1);
    if (out.mask[q]) continue;  // collision: lowest source index wins
    out.mask[q] = 1;
    out.correspondence.emplace_back(static_cast<int>(p), static_cast<int>(q));
  }
  return out;
}

}  // namespace timepoint::cpab
