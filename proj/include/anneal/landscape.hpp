#pragma once

#include <string_view>
#include <utility>

#include "anneal/optim.hpp"

namespace anneal {

enum class LandscapeKind { Ackley, Griewank, Rastrigin, Quadratic };

std::string_view landscape_kind_name(LandscapeKind kind) noexcept;

/// Analytic test objective. All three multimodal functions have their global
/// minimum f = 0 at the origin; Quadratic is f(x) = x^T A x / 2 for SPD A.
class Landscape {
 public:
  static Landscape ackley() { return Landscape(LandscapeKind::Ackley, {}); }
  static Landscape griewank() { return Landscape(LandscapeKind::Griewank, {}); }
  static Landscape rastrigin() { return Landscape(LandscapeKind::Rastrigin, {}); }
  /// Throws Errc::InvalidArgument unless `spd` is symmetric positive definite.
  static Landscape quadratic(Matrix spd);

  /// Parses "ackley", "griewank" or "rastrigin".
  static Landscape from_name(std::string_view name);

  LandscapeKind kind() const noexcept { return kind_; }
  const Matrix& matrix() const noexcept { return matrix_; }

 private:
  Landscape(LandscapeKind kind, Matrix matrix) : kind_(kind), matrix_(std::move(matrix)) {}

  LandscapeKind kind_;
  Matrix matrix_;
};

struct FdSpec {
  double step = 1e-5;
};

double eval(const Landscape& landscape, const Eigen::Ref<const Vector>& x);

/// Analytic gradient. Ackley's cone point at the origin reports zero.
Vector grad(const Landscape& landscape, const Eigen::Ref<const Vector>& x);

/// Quadratic and Rastrigin only; other kinds throw Errc::UnsupportedHessian.
Matrix hessian(const Landscape& landscape, const Eigen::Ref<const Vector>& x);

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h.
Vector fd_grad(const Landscape& landscape, const Eigen::Ref<const Vector>& x, FdSpec spec = {});

}  // namespace anneal
