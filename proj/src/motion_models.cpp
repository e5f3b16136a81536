#include "bridgeintent/motion_models.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cctype>
#include <cmath>

namespace bridgeintent::motion {

namespace {

// (1 - e^{-x h}) / x, continuous at x = 0.
double decay_integral(double x, double h) {
  if (x == 0.0) return h;
  return -std::expm1(-x * h) / x;
}

bool all_zero(const Vector& v) { return v.size() == 0 || v.isZero(0.0); }

TransitionTriple identity_triple(int r) {
  return {Matrix::Identity(r, r), Vector::Zero(r), Matrix::Zero(r, r), 0.0};
}

TransitionTriple mrd_triple(const ModelParams& p, double h, const Vector& target) {
  const int s = p.spatial_dims;
  const Vector lambda = p.kind == ModelKind::MRD ? p.reversion : Vector::Zero(s);
  const Matrix noise_cov = p.noise * p.noise.transpose();
  TransitionTriple out;
  out.h = h;
  out.F = Matrix::Zero(s, s);
  out.M = Vector::Zero(s);
  out.Q = Matrix::Zero(s, s);
  for (int i = 0; i < s; ++i) {
    out.F(i, i) = std::exp(-lambda(i) * h);
    out.M(i) = -std::expm1(-lambda(i) * h) * target(i);
    for (int j = 0; j < s; ++j) {
      out.Q(i, j) = noise_cov(i, j) * decay_integral(lambda(i) + lambda(j), h);
    }
  }
  out.Q = symmetrize(out.Q);
  return out;
}

TransitionTriple cv_triple(const ModelParams& p, double h) {
  const int s = p.spatial_dims;
  const Matrix noise_cov = p.noise * p.noise.transpose();
  TransitionTriple out;
  out.h = h;
  out.F = Matrix::Identity(2 * s, 2 * s);
  out.F.topRightCorner(s, s) = h * Matrix::Identity(s, s);
  out.M = Vector::Zero(2 * s);
  out.Q.resize(2 * s, 2 * s);
  out.Q.topLeftCorner(s, s) = noise_cov * (h * h * h / 3.0);
  out.Q.topRightCorner(s, s) = noise_cov * (h * h / 2.0);
  out.Q.bottomLeftCorner(s, s) = noise_cov * (h * h / 2.0);
  out.Q.bottomRightCorner(s, s) = noise_cov * h;
  out.Q = symmetrize(out.Q);
  return out;
}

bool erv_is_cv(const ModelParams& p) { return all_zero(p.spring) && all_zero(p.drag); }

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::BM: return "BM";
    case ModelKind::MRD: return "MRD";
    case ModelKind::CV: return "CV";
    case ModelKind::ERV: return "ERV";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  std::string upper(name);
  for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper == "BM") return ModelKind::BM;
  if (upper == "MRD") return ModelKind::MRD;
  if (upper == "CV") return ModelKind::CV;
  if (upper == "ERV") return ModelKind::ERV;
  throw InvalidInput("unknown model kind '" + std::string(name) + "' (expected BM, MRD, CV or ERV)");
}

int ModelParams::state_dim() const {
  return (kind == ModelKind::CV || kind == ModelKind::ERV) ? 2 * spatial_dims : spatial_dims;
}

bool ModelParams::destination_free() const {
  return kind == ModelKind::BM || kind == ModelKind::CV;
}

void ModelParams::validate() const {
  require(spatial_dims > 0, "model: spatial_dims must be positive");
  const auto s = static_cast<Eigen::Index>(spatial_dims);
  require(noise.rows() == s && noise.cols() == s, "model: sigma must be s x s");
  require(noise.allFinite(), "model: sigma must be finite");
  auto check_diag = [&](const Vector& v, const char* name) {
    require(v.size() == s, std::string("model: ") + name + " must have one entry per spatial dimension");
    require((v.array() >= 0.0).all() && v.allFinite(), std::string("model: ") + name + " entries must be >= 0");
  };
  if (kind == ModelKind::MRD) check_diag(reversion, "lambda");
  if (kind == ModelKind::ERV) {
    check_diag(spring, "eta");
    check_diag(drag, "rho");
  }
}

ModelParams ModelParams::brownian(int s, double sigma) {
  ModelParams p;
  p.kind = ModelKind::BM;
  p.spatial_dims = s;
  p.noise = sigma * Matrix::Identity(s, s);
  return p;
}

ModelParams ModelParams::mean_reverting(int s, double lambda, double sigma) {
  ModelParams p = brownian(s, sigma);
  p.kind = ModelKind::MRD;
  p.reversion = Vector::Constant(s, lambda);
  return p;
}

ModelParams ModelParams::constant_velocity(int s, double sigma) {
  ModelParams p = brownian(s, sigma);
  p.kind = ModelKind::CV;
  return p;
}

ModelParams ModelParams::equilibrium_reverting(int s, double eta, double rho, double sigma) {
  ModelParams p = brownian(s, sigma);
  p.kind = ModelKind::ERV;
  p.spring = Vector::Constant(s, eta);
  p.drag = Vector::Constant(s, rho);
  return p;
}

Destination Destination::point(Vector mean, double prior_mass) {
  const auto r = mean.size();
  return {std::move(mean), Matrix::Zero(r, r), prior_mass};
}

Vector reversion_target(const ModelParams& params, const Destination& dest) {
  const int r = params.state_dim();
  require(dest.mean.size() == r, "destination dimension does not match the model state dimension");
  switch (params.kind) {
    case ModelKind::MRD: return dest.mean;
    case ModelKind::ERV: {
      Vector target = Vector::Zero(r);
      target.head(params.spatial_dims) = dest.mean.head(params.spatial_dims);
      return target;
    }
    default: return Vector::Zero(r);
  }
}

Matrix erv_drift(const ModelParams& params) {
  const int s = params.spatial_dims;
  Matrix a = Matrix::Zero(2 * s, 2 * s);
  a.topRightCorner(s, s) = -Matrix::Identity(s, s);
  a.bottomLeftCorner(s, s) = params.spring.asDiagonal();
  a.bottomRightCorner(s, s) = params.drag.asDiagonal();
  return a;
}

Matrix mfd_covariance(const Matrix& A, const Matrix& noise, double h) {
  require(h >= 0.0, "mfd_covariance: negative time step");
  const auto n = A.rows();
  const auto s = noise.rows();
  require(A.cols() == n && n == 2 * s && noise.cols() == s, "mfd_covariance: A must be 2s x 2s for s x s sigma");
  if (h == 0.0) return Matrix::Zero(n, n);

  Matrix loading = Matrix::Zero(n, n);
  loading.bottomRightCorner(s, s) = noise * noise.transpose();

  Matrix block = Matrix::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = -A;
  block.topRightCorner(n, n) = loading;
  block.bottomRightCorner(n, n) = A.transpose();
  const Matrix expo = (block * h).exp();
  const Matrix J = expo.topRightCorner(n, n);
  const Matrix K = expo.bottomRightCorner(n, n);

  Eigen::PartialPivLU<Matrix> lu(K.transpose());
  if (!(lu.rcond() > 1e-13)) {
    throw NumericalError("mfd_covariance: K is numerically singular (ill-conditioned parameters or step)");
  }
  // Q = J K^{-1}  <=>  K' Q' = J'
  const Matrix Q = lu.solve(J.transpose()).transpose();
  return symmetrize(Q);
}

TransitionTriple transition(const ModelParams& params, double h, const Destination& dest) {
  params.validate();
  require(h >= 0.0, "transition: negative time step");
  require(std::isfinite(h), "transition: non-finite time step");
  const int r = params.state_dim();
  const Vector target = reversion_target(params, dest);
  if (h == 0.0) return identity_triple(r);

  switch (params.kind) {
    case ModelKind::BM: {
      const int s = params.spatial_dims;
      return {Matrix::Identity(s, s), Vector::Zero(s), symmetrize(h * params.noise * params.noise.transpose()), h};
    }
    case ModelKind::MRD: return mrd_triple(params, h, target);
    case ModelKind::CV: return cv_triple(params, h);
    case ModelKind::ERV: {
      if (erv_is_cv(params)) return cv_triple(params, h);
      const Matrix A = erv_drift(params);
      TransitionTriple out;
      out.h = h;
      out.F = (-A * h).exp();
      out.M = transition_offset(params, out, dest);
      out.Q = mfd_covariance(A, params.noise, h);
      return out;
    }
  }
  throw InvalidInput("transition: unknown model kind");
}

Vector transition_offset(const ModelParams& params, const TransitionTriple& base, const Destination& dest) {
  if (params.destination_free() || base.h == 0.0) return Vector::Zero(params.state_dim());
  const Vector target = reversion_target(params, dest);
  if (params.kind == ModelKind::MRD) {
    Vector out(target.size());
    for (Eigen::Index i = 0; i < target.size(); ++i) out(i) = -std::expm1(-params.reversion(i) * base.h) * target(i);
    return out;
  }
  const auto r = base.F.rows();
  return (Matrix::Identity(r, r) - base.F) * target;
}

Matrix observation_matrix(const ModelParams& params, int obs_dims) {
  require(obs_dims == params.spatial_dims, "observation_matrix: only position observations (k = s) are supported");
  const int r = params.state_dim();
  Matrix g = Matrix::Zero(obs_dims, r);
  g.leftCols(obs_dims) = Matrix::Identity(obs_dims, obs_dims);
  return g;
}

}  // namespace bridgeintent::motion
