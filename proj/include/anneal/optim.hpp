#pragma once

#include <Eigen/Core>

namespace anneal {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// SGD with momentum in velocity form:
///   g <- grad + weight_decay * x
///   v <- momentum * v + (1 - dampening) * g     (first step: v <- g)
///   x <- x - lr * v
/// With momentum == 0 the velocity is just g.
struct SgdConfig {
  double momentum = 0.9;
  double dampening = 0.0;
  double weight_decay = 0.0005;

  void validate() const;
};

struct SgdState {
  Vector velocity;
  bool initialized = false;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;

  void validate() const;
};

struct AdamState {
  Vector m;
  Vector v;
  long t = 0;
};

/// Throws Errc::NonFiniteGradient (no update applied) on NaN/Inf gradients and
/// Errc::Dimension on length mismatches.
void sgd_step(Eigen::Ref<Vector> params, const Eigen::Ref<const Vector>& grads, double lr,
              const SgdConfig& cfg, SgdState& state);

/// Bias-corrected Adam with weight decay added to the gradient.
/// On error, neither params nor state are modified.
void adam_step(Eigen::Ref<Vector> params, const Eigen::Ref<const Vector>& grads, double lr,
               const AdamConfig& cfg, AdamState& state);

/// x <- x - lr * H^-1 grad via an LU solve.
///
/// Throws Errc::SingularHessian when the reciprocal condition estimate of H
/// falls below 1e-12, and Errc::InvalidArgument when H is not symmetric.
void newton_step(Eigen::Ref<Vector> params, const Eigen::Ref<const Vector>& grad,
                 const Eigen::Ref<const Matrix>& hessian, double lr);

}  // namespace anneal
