#include "doctest.h"

#include "bridgeintent/motion_models.hpp"
#include "oracles.hpp"

#include <random>

using namespace bridgeintent;
using namespace bridgeintent::motion;

namespace {

double rel_err(const Matrix& a, const Matrix& b) {
  const double scale = std::max(1.0, b.norm());
  return (a - b).norm() / scale;
}

Destination dest_for(const ModelParams& p, double value) {
  Vector mean = Vector::Constant(p.state_dim(), value);
  if (p.state_dim() == 2 * p.spatial_dims) mean.tail(p.spatial_dims).setZero();
  return Destination::point(mean);
}

std::vector<ModelParams> sample_models() {
  Matrix corr(2, 2);
  corr << 1.0, 0.3, 0.3, 0.8;
  auto mrd2 = ModelParams::mean_reverting(2, 0.3, 1.0);
  mrd2.reversion << 0.3, 0.7;
  mrd2.noise = corr;
  auto erv2 = ModelParams::equilibrium_reverting(2, 0.1, 0.5, 1.0);
  erv2.spring << 0.1, 0.25;
  erv2.drag << 0.5, 0.2;
  erv2.noise = corr;
  return {ModelParams::brownian(1, 1.3), ModelParams::brownian(2, 0.7), ModelParams::mean_reverting(1, 0.3, 1.0),
          mrd2, ModelParams::constant_velocity(1, 1.0), ModelParams::constant_velocity(2, 20.0),
          ModelParams::equilibrium_reverting(1, 0.1, 0.5, 1.0), erv2};
}

}  // namespace

TEST_CASE("MRD scalar closed form") {
  const auto p = ModelParams::mean_reverting(1, 0.3, 1.0);
  const auto tr = transition(p, 1.0, Destination::point(Vector::Constant(1, 10.0)));
  CHECK(tr.F(0, 0) == doctest::Approx(0.7408182206817179).epsilon(1e-12));
  CHECK(tr.M(0) == doctest::Approx(2.5918177931828215).epsilon(1e-12));
  CHECK(tr.Q(0, 0) == doctest::Approx(0.751980606509956).epsilon(1e-12));
}

TEST_CASE("zero step is the identity") {
  for (const auto& p : sample_models()) {
    const auto tr = transition(p, 0.0, dest_for(p, 5.0));
    const int r = p.state_dim();
    CHECK(tr.F.isApprox(Matrix::Identity(r, r)));
    CHECK(tr.M.isZero());
    CHECK(tr.Q.isZero());
  }
}

TEST_CASE("CV closed form at h = 2") {
  const auto p = ModelParams::constant_velocity(1, 1.0);
  const auto tr = transition(p, 2.0, dest_for(p, 0.0));
  Matrix F(2, 2), Q(2, 2);
  F << 1, 2, 0, 1;
  Q << 8.0 / 3.0, 2.0, 2.0, 2.0;
  CHECK(rel_err(tr.F, F) < 1e-14);
  CHECK(tr.M.isZero());
  CHECK(rel_err(tr.Q, Q) < 1e-14);
  // numerical integration of the same integral
  Matrix A = Matrix::Zero(2, 2);
  A(0, 1) = -1.0;
  CHECK(rel_err(oracle::trapezoid_q(A, Matrix::Identity(1, 1), 2.0, 4000), Q) < 1e-6);
}

TEST_CASE("BM uses an identity transition") {
  const auto tr = transition(ModelParams::brownian(2, 2.0), 3.0, Destination::point(Vector::Zero(2)));
  CHECK(tr.F.isApprox(Matrix::Identity(2, 2)));
  CHECK(tr.Q.isApprox(12.0 * Matrix::Identity(2, 2)));
}

TEST_CASE("MFD covariance") {
  const auto cv = ModelParams::equilibrium_reverting(1, 0.0, 0.0, 1.0);
  Matrix cvq(2, 2);
  cvq << 1.0 / 3.0, 0.5, 0.5, 1.0;
  CHECK(rel_err(mfd_covariance(erv_drift(cv), cv.noise, 1.0), cvq) < 1e-12);
  CHECK(mfd_covariance(erv_drift(cv), cv.noise, 0.0).isZero());

  const auto erv = ModelParams::equilibrium_reverting(1, 0.1, 0.5, 1.0);
  const Matrix q = mfd_covariance(erv_drift(erv), erv.noise, 1.0);
  Matrix expected(2, 2);
  expected << 0.2285563, 0.29949342, 0.29949342, 0.61433634;
  CHECK(rel_err(q, expected) < 1e-7);
  const Matrix numeric = oracle::trapezoid_q(erv_drift(erv), erv.noise, 1.0, 4000);
  CHECK(rel_err(q, numeric) < 1e-6);

  const auto tr = transition(erv, 1.0, dest_for(erv, 0.0));
  Matrix F(2, 2);
  F << 0.95772944, 0.7739424, -0.07739424, 0.57075825;
  CHECK(rel_err(tr.F, F) < 1e-7);
}

TEST_CASE("ERV with no spring or drag is exactly CV") {
  for (int s : {1, 2, 3}) {
    const auto erv = ModelParams::equilibrium_reverting(s, 0.0, 0.0, 1.7);
    const auto cv = ModelParams::constant_velocity(s, 1.7);
    for (double h : {0.1, 1.0, 7.5}) {
      const auto a = transition(erv, h, dest_for(erv, 3.0));
      const auto b = transition(cv, h, dest_for(cv, 3.0));
      CHECK(a.F == b.F);
      CHECK(a.M == b.M);
      CHECK(a.Q == b.Q);
    }
  }
}

TEST_CASE("semigroup property") {
  for (const auto& p : sample_models()) {
    const auto d = dest_for(p, 4.0);
    for (auto [h1, h2] : {std::pair{0.3, 1.1}, std::pair{2.0, 5.0}, std::pair{0.01, 0.02}}) {
      const auto a = transition(p, h1, d);
      const auto b = transition(p, h2, d);
      const auto ab = transition(p, h1 + h2, d);
      CHECK(rel_err(b.F * a.F, ab.F) < 1e-9);
      CHECK(rel_err(b.F * a.M + b.M, ab.M) < 1e-9);
      CHECK(rel_err(b.F * a.Q * b.F.transpose() + b.Q, ab.Q) < 1e-9);
    }
  }
}

TEST_CASE("Q is symmetric PSD") {
  for (const auto& p : sample_models()) {
    for (double h : {1e-4, 0.5, 3.0, 40.0}) {
      const auto tr = transition(p, h, dest_for(p, 1.0));
      CHECK(tr.Q == tr.Q.transpose());
      CHECK(min_eigenvalue(tr.Q) >= -1e-12 * std::max(1.0, tr.Q.norm()));
    }
  }
}

TEST_CASE("MRD limits") {
  const auto d = Destination::point(Vector::Constant(1, 10.0));
  const auto small = transition(ModelParams::mean_reverting(1, 1e-9, 1.0), 2.0, d);
  const auto bm = transition(ModelParams::brownian(1, 1.0), 2.0, d);
  CHECK(small.F(0, 0) == doctest::Approx(bm.F(0, 0)).epsilon(1e-8));
  CHECK(small.Q(0, 0) == doctest::Approx(bm.Q(0, 0)).epsilon(1e-8));
  CHECK(std::abs(small.M(0)) < 1e-7);

  const auto far = transition(ModelParams::mean_reverting(1, 0.3, 2.0), 500.0, d);
  CHECK(far.M(0) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(far.Q(0, 0) == doctest::Approx(4.0 / 0.6).epsilon(1e-12));
}

TEST_CASE("non-diagonal MRD noise") {
  auto p = ModelParams::mean_reverting(2, 0.3, 1.0);
  p.reversion << 0.2, 0.6;
  p.noise << 1.0, 0.0, 0.5, 2.0;
  const double h = 1.5;
  const auto tr = transition(p, h, dest_for(p, 0.0));
  const Matrix S = p.noise * p.noise.transpose();
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double l = p.reversion(i) + p.reversion(j);
      CHECK(tr.Q(i, j) == doctest::Approx(S(i, j) * (1.0 - std::exp(-l * h)) / l).epsilon(1e-12));
    }
  }
}

TEST_CASE("observation matrices") {
  CHECK(observation_matrix(ModelParams::mean_reverting(2, 0.3, 1.0), 2).isApprox(Matrix::Identity(2, 2)));
  Matrix cv(2, 4);
  cv << 1, 0, 0, 0, 0, 1, 0, 0;
  CHECK(observation_matrix(ModelParams::constant_velocity(2, 1.0), 2) == cv);
  const Matrix erv = observation_matrix(ModelParams::equilibrium_reverting(3, 0.1, 0.5, 1.0), 3);
  CHECK(erv.rows() == 3);
  CHECK(erv.cols() == 6);
  CHECK(erv.leftCols(3) == Matrix::Identity(3, 3));
  CHECK(erv.rightCols(3).isZero());
  CHECK_THROWS_AS(observation_matrix(ModelParams::constant_velocity(2, 1.0), 1), InvalidInput);
}

TEST_CASE("input validation") {
  const auto p = ModelParams::mean_reverting(1, 0.3, 1.0);
  CHECK_THROWS_AS(transition(p, -1.0, Destination::point(Vector::Zero(1))), InvalidInput);
  CHECK_THROWS_AS(transition(p, 1.0, Destination::point(Vector::Zero(2))), InvalidInput);
  auto bad = p;
  bad.reversion(0) = -0.1;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  CHECK(parse_model_kind("erv") == ModelKind::ERV);
  CHECK(to_string(ModelKind::MRD) == "MRD");
  CHECK_THROWS_AS(parse_model_kind("spline"), InvalidInput);
}
