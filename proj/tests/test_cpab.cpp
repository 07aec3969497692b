#include <doctest.h>

#include <cmath>

#include "timepoint/cpab.hpp"

using namespace timepoint;
using namespace timepoint::cpab;

namespace {

// Independent oracle: RK4 integration of the CPA velocity field.
double rk4_flow(const CpabTransform& t, double x, double time, double step) {
  const auto n_steps = static_cast<long>(std::ceil(time / step));
  const double h = time / static_cast<double>(n_steps);
  for (long i = 0; i < n_steps; ++i) {
    const double k1 = t.velocity(x);
    const double k2 = t.velocity(std::clamp(x + 0.5 * h * k1, 0.0, 1.0));
    const double k3 = t.velocity(std::clamp(x + 0.5 * h * k2, 0.0, 1.0));
    const double k4 = t.velocity(std::clamp(x + h * k3, 0.0, 1.0));
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    x = std::clamp(x, 0.0, 1.0);
  }
  return x;
}

CpabTransform random_transform(const CpaPrior& prior, std::uint64_t seed) {
  return CpabTransform(prior.tess, sample_theta(prior, seed));
}

}  // namespace

TEST_CASE("build_prior: single interior vertex") {
  const auto prior = build_prior(2, 0.7, 1.3);
  CHECK(prior.covariance.rows() == 1);
  CHECK(prior.covariance(0, 0) == doctest::Approx(0.49).epsilon(1e-12));
}

TEST_CASE("build_prior: RBF kernel values at defaults") {
  const auto prior = build_prior(16, 0.5, 1.0);
  REQUIRE(prior.covariance.rows() == 15);
  for (int i = 0; i < 15; ++i)
    CHECK(prior.covariance(i, i) == doctest::Approx(0.25).epsilon(1e-12));
  // Independent evaluation of the kernel at distance 1/16 with ell = 1/16.
  const double expected = 0.25 * std::exp(-0.5);
  CHECK(expected == doctest::Approx(0.15163).epsilon(1e-4));
  for (int i = 0; i + 1 < 15; ++i)
    CHECK(prior.covariance(i, i + 1) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("build_prior: cholesky factor reproduces covariance") {
  const auto prior = build_prior(16, 0.5, 1.0);
  const MatrixXd recon =
      prior.cholesky_factor * prior.cholesky_factor.transpose();
  CHECK((recon - prior.covariance).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("build_prior: rejects bad arguments") {
  CHECK_THROWS(build_prior(1, 0.5, 1.0));
  CHECK_THROWS(build_prior(16, -0.5, 1.0));
  CHECK_THROWS(build_prior(16, 0.5, 0.0));
}

TEST_CASE("sample_theta: zero z gives zero theta") {
  const auto prior = build_prior(16, 0.5, 1.0);
  const auto theta = theta_from_z(prior, VectorXd::Zero(15));
  CHECK(theta.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sample_theta: deterministic under seed") {
  const auto prior = build_prior(16, 0.5, 1.0);
  const auto a = sample_theta(prior, 7u);
  const auto b = sample_theta(prior, 7u);
  CHECK((a.values.array() == b.values.array()).all());
}

TEST_CASE("sample_theta: Monte-Carlo variance matches the prior diagonal") {
  const auto prior = build_prior(16, 0.5, 1.0);
  const int n = 10000;
  MatrixXd samples(15, n);
  Rng rng(99);
  for (int s = 0; s < n; ++s) samples.col(s) = sample_theta(prior, rng).values;
  for (int i = 0; i < 15; ++i) {
    const double mean = samples.row(i).mean();
    const double var =
        (samples.row(i).array() - mean).square().sum() / (n - 1);
    CHECK(var == doctest::Approx(0.25).epsilon(0.10));
  }
}

TEST_CASE("transform_point: zero theta is the identity") {
  const Tessellation tess(16);
  const CpabTransform t(tess, CpabTheta{VectorXd::Zero(15)});
  for (int i = 0; i <= 100; ++i) {
    const double x = i / 100.0;
    CHECK(t.transform_point(x) == x);
  }
}

TEST_CASE("transform_point: boundaries are fixed points") {
  const auto prior = build_prior(16, 0.5, 1.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = random_transform(prior, seed);
    CHECK(t.transform_point(0.0) == 0.0);
    CHECK(t.transform_point(1.0) == 1.0);
  }
}

TEST_CASE("transform_point: domain errors") {
  const auto prior = build_prior(16, 0.5, 1.0);
  const auto t = random_transform(prior, 1);
  CHECK_THROWS_AS((void)t.transform_point(-0.01), std::domain_error);
  CHECK_THROWS_AS((void)t.transform_point(1.01), std::domain_error);
  CHECK_THROWS_AS((void)t.inverse_point(2.0), std::domain_error);
}

TEST_CASE("transform_point: matches RK4 oracle") {
  const auto prior = build_prior(16, 0.5, 1.0);
  const auto t = random_transform(prior, 3);
  const double got = t.transform_point(0.37);
  const double want = rk4_flow(t, 0.37, 1.0, 1e-5);
  CHECK(got == doctest::Approx(want).epsilon(0).scale(1).epsilon(1e-6));
  CHECK(std::abs(got - want) < 1e-6);

  for (std::uint64_t seed = 10; seed < 13; ++seed) {
    const auto tr = random_transform(prior, seed);
    for (double x : {0.05, 0.25, 0.5, 0.75, 0.95}) {
      CHECK(std::abs(tr.transform_point(x) - rk4_flow(tr, x, 1.0, 1e-5)) <
            1e-6);
    }
  }
}

TEST_CASE("transform_point: monotone in x") {
  const auto prior = build_prior(16, 0.5, 1.0);
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = CpabTransform(prior.tess, sample_theta(prior, rng));
    for (int p = 0; p < 200; ++p) {
      double x1 = rng.uniform();
      double x2 = rng.uniform();
      if (x1 == x2) continue;
      if (x1 > x2) std::swap(x1, x2);
      CHECK(t.transform_point(x1) < t.transform_point(x2));
    }
  }
}

TEST_CASE("inverse_point: identity for zero theta and boundary fixed") {
  const Tessellation tess(16);
  const CpabTransform t(tess, CpabTheta{VectorXd::Zero(15)});
  CHECK(t.inverse_point(0.25) == 0.25);
  CHECK(t.inverse_point(1.0) == 1.0);
}

TEST_CASE("inverse_point: round trip") {
  const auto prior = build_prior(16, 0.5, 1.0);
  Rng rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    const auto t = CpabTransform(prior.tess, sample_theta(prior, rng));
    double worst = 0.0;
    for (int i = 0; i < 256; ++i) {
      const double x = i / 255.0;
      worst = std::max(worst, std::abs(t.inverse_point(t.transform_point(x)) - x));
      worst = std::max(worst, std::abs(t.transform_point(t.inverse_point(x)) - x));
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("transform_point: flow additivity") {
  const auto prior = build_prior(16, 0.5, 1.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto t = random_transform(prior, seed);
    for (double s : {0.25, 0.5}) {
      for (double u : {0.25, 0.5}) {
        for (double x : {0.1, 0.37, 0.62, 0.9}) {
          const double direct = t.transform_point(x, s + u);
          const double hopped = t.transform_point(t.transform_point(x, s), u);
          CHECK(std::abs(direct - hopped) < 1e-6);
        }
      }
    }
  }
}

TEST_CASE("warp_signal: zero theta keeps the signal") {
  const Tessellation tess(16);
  const CpabTransform t(tess, CpabTheta{VectorXd::Zero(15)});
  Rng rng(5);
  Signal x(64);
  for (Index i = 0; i < x.size(); ++i) x[i] = rng.normal();
  const Signal y = warp_signal(x, t);
  CHECK((y - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("warp_signal: constant signal stays constant") {
  const auto prior = build_prior(16, 0.5, 1.0);
  const auto t = random_transform(prior, 11);
  const Signal x = Signal::Constant(128, 3.25);
  const Signal y = warp_signal(x, t);
  CHECK((y.array() - 3.25).abs().maxCoeff() < 1e-12);
}

TEST_CASE("warp_signal: monotone ramp composes with the warp") {
  const auto prior = build_prior(16, 0.5, 1.0);
  const auto t = random_transform(prior, 13);
  const Index len = 256;
  Signal x(len);
  for (Index i = 0; i < len; ++i)
    x[i] = static_cast<double>(i) / static_cast<double>(len - 1);
  const Signal y = warp_signal(x, t);
  for (Index i = 0; i < len; ++i) {
    const double g = static_cast<double>(i) / static_cast<double>(len - 1);
    CHECK(y[i] == doctest::Approx(t.transform_point(g)).epsilon(0).scale(1.0).epsilon(1e-9));
  }
}

TEST_CASE("warp_keypoints: zero theta is the identity") {
  const Tessellation tess(16);
  const CpabTransform t(tess, CpabTheta{VectorXd::Zero(15)});
  std::vector<std::uint8_t> mask(512, 0);
  mask[0] = mask[100] = mask[300] = 1;
  const auto wk = warp_keypoints(mask, t);
  CHECK(wk.mask == mask);
  REQUIRE(wk.correspondence.size() == 3);
  for (const auto& [p, q] : wk.correspondence) CHECK(p == q);
}

TEST_CASE("warp_keypoints: boundary keypoint stays put") {
  const auto prior = build_prior(16, 0.5, 1.0);
  const auto t = random_transform(prior, 21);
  std::vector<std::uint8_t> mask(512, 0);
  mask[0] = 1;
  const auto wk = warp_keypoints(mask, t);
  CHECK(wk.mask[0] == 1);
}

TEST_CASE("warp_keypoints: matches per-point inverse evaluation") {
  const auto prior = build_prior(16, 0.5, 1.0);
  const auto t = random_transform(prior, 5);
  std::vector<std::uint8_t> mask(512, 0);
  mask[100] = mask[300] = 1;
  const auto wk = warp_keypoints(mask, t);
  REQUIRE(wk.correspondence.size() == 2);
  for (const auto& [p, q] : wk.correspondence) {
    const double g = static_cast<double>(p) / 511.0;
    const double expect = std::llround(t.inverse_point(g) * 511.0);
    CHECK(q == static_cast<int>(expect));
  }
}
