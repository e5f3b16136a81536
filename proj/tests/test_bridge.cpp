#include "doctest.h"

#include "bridgeintent/bridge.hpp"
#include "bridgeintent/kalman.hpp"
#include "gauss_hermite.hpp"
#include "oracles.hpp"

#include <random>

using namespace bridgeintent;
using namespace bridgeintent::motion;
using namespace bridgeintent::bridge;

namespace {

double rel_err(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

Matrix random_spd(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> z;
  Matrix A(n, n);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = z(rng);
  return scale * (A * A.transpose() + 0.5 * Matrix::Identity(n, n));
}

Vector random_vec(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> z;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * z(rng);
  return v;
}

}  // namespace

TEST_CASE("Brownian bridge midpoint") {
  const auto p = ModelParams::brownian(1, 1.0);
  const auto d = Destination::point(Vector::Zero(1));
  const auto tr = conditioned_transition(p, d, 0.0, 1.0, 2.0);
  CHECK(tr.H()(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(tr.H()(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(tr.offset()(0)) < 1e-15);
  CHECK(tr.C()(0, 0) == doctest::Approx(0.5).epsilon(1e-12));

  const auto far = conditioned_transition(p, d, 0.0, 1.0, 11.0);
  CHECK(far.H()(0, 0) == doctest::Approx(10.0 / 11.0).epsilon(1e-12));
  CHECK(far.H()(0, 1) == doctest::Approx(1.0 / 11.0).epsilon(1e-12));
  CHECK(far.C()(0, 0) == doctest::Approx(10.0 / 11.0).epsilon(1e-12));
}

TEST_CASE("Brownian bridge variance scales with sigma^2") {
  const double sigma = 2.5;
  const auto p = ModelParams::brownian(1, sigma);
  const auto d = Destination::point(Vector::Zero(1));
  for (auto [h, T] : {std::pair{0.25, 1.0}, std::pair{3.0, 10.0}, std::pair{0.5, 0.75}}) {
    const auto tr = conditioned_transition(p, d, 0.0, h, T);
    CHECK(std::abs(tr.C()(0, 0) - sigma * sigma * h * (T - h) / T) < 1e-9);
    CHECK(std::abs(tr.H()(0, 0) - (T - h) / T) < 1e-9);
    CHECK(std::abs(tr.H()(0, 1) - h / T) < 1e-9);
  }
}

TEST_CASE("bridge between equal endpoints keeps its mean") {
  for (const auto& p : {ModelParams::brownian(1, 1.0), ModelParams::brownian(3, 0.4)}) {
    const auto tr = conditioned_transition(p, Destination::point(Vector::Zero(p.state_dim())), 0.0, 0.7, 3.0);
    const Vector x = Vector::LinSpaced(p.state_dim(), -1.0, 2.0);
    Vector z(2 * x.size());
    z << x, x;
    CHECK((tr.H() * z + tr.offset() - x).norm() < 1e-12);
  }
}

TEST_CASE("information form agrees with joint conditioning") {
  Matrix corr(2, 2);
  corr << 1.0, 0.0, 0.4, 0.9;
  auto mrd = ModelParams::mean_reverting(2, 0.3, 1.0);
  mrd.reversion << 0.3, 0.05;
  mrd.noise = corr;
  auto erv = ModelParams::equilibrium_reverting(2, 0.1, 0.5, 1.0);
  erv.noise = corr;
  const std::vector<ModelParams> models{ModelParams::brownian(2, 1.0), mrd, ModelParams::constant_velocity(2, 3.0),
                                        erv, ModelParams::equilibrium_reverting(1, 0.1, 0.5, 1.0)};
  for (const auto& p : models) {
    Vector a = Vector::Constant(p.state_dim(), 7.0);
    const auto d = Destination::point(a);
    for (auto [h, rest] : {std::pair{1.0, 1.0}, std::pair{0.2, 9.0}, std::pair{4.0, 0.5}}) {
      const auto step = transition(p, h, d);
      const auto tail = transition(p, rest, d);
      const auto info = assemble(step, tail);
      const auto joint = oracle::joint_bridge(step, tail);
      CHECK(rel_err(info.H(), joint.H) < 1e-8);
      CHECK(rel_err(info.offset(), joint.m) < 1e-8);
      CHECK(rel_err(info.C(), joint.C) < 1e-8);
    }
  }
}

TEST_CASE("augmented transition structure") {
  const auto p = ModelParams::constant_velocity(2, 1.0);
  const auto tr = conditioned_transition(p, Destination::point(Vector::Ones(4)), 0.0, 1.0, 5.0);
  const auto r = 4;
  CHECK(tr.R.bottomLeftCorner(r, r).isZero());
  CHECK(tr.R.bottomRightCorner(r, r) == Matrix::Identity(r, r));
  CHECK(tr.m.tail(r).isZero());
  CHECK(tr.U.bottomRows(r).isZero());
  CHECK(tr.U.rightCols(r).isZero());
  CHECK(tr.C() == tr.C().transpose());
  CHECK(min_eigenvalue(tr.C()) >= 0.0);
  Eigen::FullPivLU<Matrix> lu(tr.U);
  CHECK(lu.rank() <= r);
}

TEST_CASE("remaining time below the minimum is rejected") {
  const auto p = ModelParams::brownian(1, 1.0);
  const auto d = Destination::point(Vector::Zero(1));
  CHECK_THROWS_AS(conditioned_transition(p, d, 0.0, 1.0, 1.0), RemainingTimeTooSmall);
  CHECK_THROWS_AS(conditioned_transition(p, d, 0.0, 1.0, 1.0 + 1e-7), RemainingTimeTooSmall);
  CHECK_NOTHROW(conditioned_transition(p, d, 0.0, 1.0, 1.0 + 1e-5));
  CHECK_THROWS_AS(conditioned_transition(p, d, 0.0, 0.0, 2.0), InvalidInput);
}

TEST_CASE("ERV at tiny steps stays finite") {
  const auto p = ModelParams::equilibrium_reverting(2, 0.1, 0.5, 1.0);
  const auto tr = conditioned_transition(p, Destination::point(Vector::Zero(4)), 0.0, 1e-5, 3.0);
  CHECK(tr.R.allFinite());
  CHECK(tr.U.allFinite());
  CHECK(min_eigenvalue(tr.C()) >= -1e-12);
}

TEST_CASE("augmented observation and prior") {
  const Matrix G2 = augmented_observation(Matrix::Identity(2, 2));
  CHECK(G2.leftCols(2) == Matrix::Identity(2, 2));
  CHECK(G2.rightCols(2).isZero());
  Matrix g(1, 2);
  g << 1, 0;
  Matrix expected(1, 4);
  expected << 1, 0, 0, 0;
  CHECK(augmented_observation(g) == expected);
  CHECK(augmented_observation(Matrix(0, 3)).size() == 0);

  const auto prior = augmented_prior({Vector::Zero(1), Matrix::Identity(1, 1)},
                                     Destination::point(Vector::Constant(1, 10.0)));
  CHECK(prior.mean == (Vector(2) << 0.0, 10.0).finished());
  CHECK(prior.cov == (Matrix(2, 2) << 1.0, 0.0, 0.0, 0.0).finished());

  // ERV destination with a broad arrival-velocity prior
  Destination erv_dest;
  erv_dest.mean = Vector::Zero(4);
  erv_dest.cov = Matrix::Zero(4, 4);
  erv_dest.cov.diagonal() << 0.0, 0.0, 1e4, 1e4;
  const auto ep = augmented_prior({Vector::Zero(4), Matrix::Identity(4, 4)}, erv_dest);
  CHECK(ep.cov.bottomRightCorner(4, 4) == erv_dest.cov);
  CHECK(ep.cov.topRightCorner(4, 4).isZero());

  const auto det = augmented_prior({Vector::Ones(2), Matrix::Zero(2, 2)}, Destination::point(Vector::Zero(2)));
  CHECK(det.cov.isZero());

  Matrix bad = Matrix::Identity(1, 1);
  bad(0, 0) = -1.0;
  CHECK_THROWS_AS(augmented_prior({Vector::Zero(1), bad}, Destination::point(Vector::Zero(1))), InvalidInput);
}

TEST_CASE("Gaussian product identity against quadrature") {
  std::mt19937_64 rng(11);
  for (int dim = 1; dim <= 3; ++dim) {
    for (int trial = 0; trial < 3; ++trial) {
      const Gaussian prior{random_vec(rng, dim), random_spd(rng, dim)};
      const Eigen::Index k = std::max(1, dim - trial % 2);
      Matrix L(k, dim);
      for (Eigen::Index i = 0; i < L.size(); ++i) L.data()[i] = 0.5 * std::normal_distribution<double>()(rng);
      const Vector mu2 = random_vec(rng, k);
      const Matrix S2 = random_spd(rng, k);
      const auto prod = multiply_linear_gaussian(prior, L, mu2, S2);

      const int nodes = dim == 3 ? 48 : 64;
      const double z = oracle::gaussian_expectation(prior.mean, prior.cov, nodes, [&](const Vector& x) {
        return std::exp(log_normal_pdf(mu2, L * x, S2));
      });
      CHECK(std::abs(std::exp(prod.log_z) - z) / z < 1e-9);

      for (int j = 0; j < 10; ++j) {
        const Vector x = prior.mean + random_vec(rng, dim);
        const double lhs = log_normal_pdf(x, prior.mean, prior.cov) + log_normal_pdf(mu2, L * x, S2);
        const double rhs = std::log(z) + log_normal_pdf(x, prod.mean, prod.cov);
        CHECK(std::abs(std::exp(lhs - rhs) - 1.0) < 1e-9);
      }
    }
  }
}

TEST_CASE("endpoint pinning") {
  for (const auto& p : {ModelParams::brownian(2, 1.0), ModelParams::constant_velocity(2, 2.0),
                        ModelParams::equilibrium_reverting(2, 0.1, 0.5, 1.0)}) {
    const int r = p.state_dim();
    Vector a = Vector::Constant(r, 5.0);
    if (r == 4) a.tail(2).setZero();
    const auto d = Destination::point(a);
    const auto prior = augmented_prior({Vector::Zero(r), Matrix::Identity(r, r)}, d);
    const double T = 10.0;
    const double h = T - 2e-6 - 2.0;
    Gaussian belief = prior;
    belief = kalman::predict(belief, kalman::as_linear(conditioned_transition(p, d, 0.0, 2.0, T)));
    belief = kalman::predict(belief, kalman::as_linear(conditioned_transition(p, d, 2.0, h, T)));
    CHECK((belief.mean.head(r) - a).norm() < 1e-4);
    CHECK(belief.cov.topLeftCorner(r, r).norm() < 1e-4);
    // the full remaining interval pins to within the bridge's own tolerance
    const auto whole = conditioned_transition(p, d, 0.0, T - 2e-9, T, {.min_remaining = 1e-9});
    const auto pinned = kalman::predict(prior, kalman::as_linear(whole));
    CHECK((pinned.mean.head(r) - a).norm() < 1e-8 * std::max(1.0, a.norm()) * 10);
    CHECK(pinned.cov.topLeftCorner(r, r).norm() < 1e-6);
  }
}

TEST_CASE("bridge marginalized over the forward endpoint is the forward transition") {
  Matrix corr(2, 2);
  corr << 1.0, 0.0, 0.4, 0.9;
  auto mrd = ModelParams::mean_reverting(2, 0.3, 1.0);
  mrd.noise = corr;
  for (const auto& p : {ModelParams::brownian(2, 1.0), mrd, ModelParams::constant_velocity(2, 2.0),
                        ModelParams::equilibrium_reverting(2, 0.1, 0.5, 1.0)}) {
    const int r = p.state_dim();
    const auto d = Destination::point(Vector::Constant(r, 3.0));
    const auto step = transition(p, 1.5, d);
    const auto rest = transition(p, 4.0, d);
    const auto tr = assemble(step, rest);
    const Vector x = Vector::LinSpaced(r, -1.0, 1.0);
    // X_T | X_t = x under the forward model
    const Vector mT = rest.F * (step.F * x + step.M) + rest.M;
    const Matrix ST = rest.F * step.Q * rest.F.transpose() + rest.Q;
    const Matrix H1 = tr.H().leftCols(r);
    const Matrix H2 = tr.H().rightCols(r);
    CHECK(rel_err(H1 * x + H2 * mT + tr.offset(), step.F * x + step.M) < 1e-9);
    CHECK(rel_err(tr.C() + H2 * ST * H2.transpose(), step.Q) < 1e-9);
  }
}

TEST_CASE("augmented filter with the forward endpoint prior matches a plain filter") {
  for (const auto& p : {ModelParams::brownian(1, 1.0), ModelParams::constant_velocity(1, 0.5),
                        ModelParams::mean_reverting(2, 0.2, 1.0)}) {
    const int r = p.state_dim();
    const int k = p.spatial_dims;
    const auto d = Destination::point(Vector::Constant(r, 2.0));
    const Gaussian initial{Vector::Zero(r), Matrix::Identity(r, r)};
    const Matrix G = observation_matrix(p, k);
    const Matrix V = 0.3 * Matrix::Identity(k, k);
    const Matrix Ga = augmented_observation(G);
    const std::vector<double> ts{0.0, 1.0, 2.5, 3.0};
    const double T = 20.0;

    // Z_1 = [X_1; X_T] jointly Gaussian under the forward model.
    const auto whole = transition(p, T - ts[0], d);
    Gaussian z;
    z.mean.resize(2 * r);
    z.mean << initial.mean, whole.F * initial.mean + whole.M;
    z.cov.resize(2 * r, 2 * r);
    z.cov << initial.cov, initial.cov * whole.F.transpose(), whole.F * initial.cov,
        whole.F * initial.cov * whole.F.transpose() + whole.Q;

    auto y_at = [&](std::size_t j) { return Vector::LinSpaced(k, 0.1 * j, 0.5 * j); };
    auto aug = kalman::kf_first(z, ts[0], y_at(0), Ga, V).state;
    auto plain = kalman::kf_first(initial, ts[0], y_at(0), G, V).state;
    for (std::size_t j = 1; j < ts.size(); ++j) {
      const auto tr = conditioned_transition(p, d, ts[j - 1], ts[j] - ts[j - 1], T);
      aug = kalman::kf_step(aug, ts[j], y_at(j), tr, Ga, V).state;
      const auto fwd = transition(p, ts[j] - ts[j - 1], d);
      plain = kalman::kf_step(plain, ts[j], y_at(j), kalman::as_linear(fwd), G, V).state;
    }
    CHECK(rel_err(aug.mean.head(r), plain.mean) < 1e-6);
    CHECK(rel_err(aug.cov.topLeftCorner(r, r), plain.cov) < 1e-6);
    CHECK(std::abs(aug.log_lik - plain.log_lik) / std::abs(plain.log_lik) < 1e-6);
  }
}
