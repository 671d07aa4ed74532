#include "anneal/optim.hpp"

#include <cmath>

#include <Eigen/LU>
#include <fmt/format.h>

#include "anneal/error.hpp"

namespace anneal {

namespace {

void check_lr(double lr) {
  if (!std::isfinite(lr) || lr < 0.0) {
    throw Error(Errc::InvalidArgument, fmt::format("learning rate must be finite and >= 0 (got {})", lr));
  }
}

void check_grads(const Eigen::Ref<Vector>& params, const Eigen::Ref<const Vector>& grads) {
  if (params.size() != grads.size()) {
    throw Error(Errc::Dimension, fmt::format("gradient has {} entries, parameters have {}",
                                             grads.size(), params.size()));
  }
  if (!grads.allFinite()) {
    throw Error(Errc::NonFiniteGradient, "gradient contains NaN or Inf; update skipped");
  }
}

bool in_unit_interval(double v) { return v >= 0.0 && v < 1.0; }

}  // namespace

void SgdConfig::validate() const {
  if (!in_unit_interval(momentum)) {
    throw Error(Errc::InvalidArgument, fmt::format("momentum must be in [0, 1) (got {})", momentum));
  }
  if (!in_unit_interval(dampening)) {
    throw Error(Errc::InvalidArgument, fmt::format("dampening must be in [0, 1) (got {})", dampening));
  }
  if (!std::isfinite(weight_decay) || weight_decay < 0.0) {
    throw Error(Errc::InvalidArgument,
                fmt::format("weight_decay must be finite and >= 0 (got {})", weight_decay));
  }
}

void AdamConfig::validate() const {
  if (!in_unit_interval(beta1) || !in_unit_interval(beta2)) {
    throw Error(Errc::InvalidArgument,
                fmt::format("beta1 and beta2 must be in [0, 1) (got {} and {})", beta1, beta2));
  }
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(Errc::InvalidArgument, fmt::format("epsilon must be > 0 (got {})", epsilon));
  }
  if (!std::isfinite(weight_decay) || weight_decay < 0.0) {
    throw Error(Errc::InvalidArgument,
                fmt::format("weight_decay must be finite and >= 0 (got {})", weight_decay));
  }
}

void sgd_step(Eigen::Ref<Vector> params, const Eigen::Ref<const Vector>& grads, double lr,
              const SgdConfig& cfg, SgdState& state) {
  check_lr(lr);
  check_grads(params, grads);
  if (state.initialized && state.velocity.size() != params.size()) {
    throw Error(Errc::Dimension, "momentum buffer length differs from parameter length");
  }

  Vector g = grads;
  if (cfg.weight_decay != 0.0) {
    g += cfg.weight_decay * params;
  }
  if (cfg.momentum == 0.0 || !state.initialized) {
    state.velocity = g;
  } else {
    state.velocity = cfg.momentum * state.velocity + (1.0 - cfg.dampening) * g;
  }
  state.initialized = true;
  params -= lr * state.velocity;
}

void adam_step(Eigen::Ref<Vector> params, const Eigen::Ref<const Vector>& grads, double lr,
               const AdamConfig& cfg, AdamState& state) {
  check_lr(lr);
  check_grads(params, grads);
  const auto n = params.size();
  if (state.t == 0) {
    state.m = Vector::Zero(n);
    state.v = Vector::Zero(n);
  } else if (state.m.size() != n || state.v.size() != n) {
    throw Error(Errc::Dimension, "Adam moment length differs from parameter length");
  }

  Vector g = grads;
  if (cfg.weight_decay != 0.0) {
    g += cfg.weight_decay * params;
  }
  ++state.t;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * g;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * g.cwiseProduct(g);

  const double t = static_cast<double>(state.t);
  const double m_correction = 1.0 - std::pow(cfg.beta1, t);
  const double v_correction = 1.0 - std::pow(cfg.beta2, t);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m_hat = state.m[i] / m_correction;
    const double v_hat = state.v[i] / v_correction;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

void newton_step(Eigen::Ref<Vector> params, const Eigen::Ref<const Vector>& grad,
                 const Eigen::Ref<const Matrix>& hessian, double lr) {
  check_lr(lr);
  check_grads(params, grad);
  const auto n = params.size();
  if (hessian.rows() != n || hessian.cols() != n) {
    throw Error(Errc::Dimension, fmt::format("Hessian is {}x{}, expected {}x{}", hessian.rows(),
                                             hessian.cols(), n, n));
  }
  if (!hessian.allFinite()) {
    throw Error(Errc::SingularHessian, "Hessian contains NaN or Inf");
  }
  const double scale = hessian.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) {
    throw Error(Errc::SingularHessian, "Hessian is the zero matrix");
  }
  if ((hessian - hessian.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw Error(Errc::InvalidArgument, "Hessian must be symmetric");
  }

  const Eigen::PartialPivLU<Matrix> lu(hessian);
  const double rcond = lu.rcond();
  if (!(rcond >= 1e-12)) {
    throw Error(Errc::SingularHessian,
                fmt::format("Hessian is singular or near-singular (condition estimate {:.3g})",
                            1.0 / rcond));
  }
  const Vector direction = lu.solve(grad);
  params -= lr * direction;
}

}  // namespace anneal
