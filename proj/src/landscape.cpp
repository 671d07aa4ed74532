#include "anneal/landscape.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <fmt/format.h>

#include "anneal/error.hpp"

namespace anneal {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Ackley constants a, b, c.
constexpr double kAckleyA = 20.0;
constexpr double kAckleyB = 0.2;
constexpr double kAckleyC = kTwoPi;

void check_input(const Eigen::Ref<const Vector>& x, const Landscape& landscape) {
  if (x.size() < 1) {
    throw Error(Errc::Dimension, "landscape input must have at least one coordinate");
  }
  if (landscape.kind() == LandscapeKind::Quadratic && landscape.matrix().rows() != x.size()) {
    throw Error(Errc::Dimension, fmt::format("quadratic is {}-dimensional, input has {} entries",
                                             landscape.matrix().rows(), x.size()));
  }
}

double ackley(const Eigen::Ref<const Vector>& x) {
  const double n = static_cast<double>(x.size());
  const double rms = std::sqrt(x.squaredNorm() / n);
  double cos_mean = 0.0;
  for (double xi : x) {
    cos_mean += std::cos(kAckleyC * xi);
  }
  cos_mean /= n;
  return -kAckleyA * std::exp(-kAckleyB * rms) - std::exp(cos_mean) + kAckleyA + std::numbers::e;
}

Vector ackley_grad(const Eigen::Ref<const Vector>& x) {
  const double n = static_cast<double>(x.size());
  const double rms = std::sqrt(x.squaredNorm() / n);
  double cos_mean = 0.0;
  for (double xi : x) {
    cos_mean += std::cos(kAckleyC * xi);
  }
  cos_mean /= n;
  const double radial = rms > 0.0 ? kAckleyA * kAckleyB * std::exp(-kAckleyB * rms) / (n * rms) : 0.0;
  const double wave = kAckleyC * std::exp(cos_mean) / n;
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    g[i] = radial * x[i] + wave * std::sin(kAckleyC * x[i]);
  }
  return g;
}

double rastrigin(const Eigen::Ref<const Vector>& x) {
  double sum = 10.0 * static_cast<double>(x.size());
  for (double xi : x) {
    sum += xi * xi - 10.0 * std::cos(kTwoPi * xi);
  }
  return sum;
}

Vector rastrigin_grad(const Eigen::Ref<const Vector>& x) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    g[i] = 2.0 * x[i] + 20.0 * kPi * std::sin(kTwoPi * x[i]);
  }
  return g;
}

// Griewank's product runs over 1-based indices: cos(x_i / sqrt(i)).
double griewank(const Eigen::Ref<const Vector>& x) {
  double product = 1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    product *= std::cos(x[i] / std::sqrt(static_cast<double>(i + 1)));
  }
  return 1.0 + x.squaredNorm() / 4000.0 - product;
}

Vector griewank_grad(const Eigen::Ref<const Vector>& x) {
  const auto n = x.size();
  Vector g(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double root = std::sqrt(static_cast<double>(i + 1));
    // Product over the other coordinates, formed directly so a zero cosine
    // elsewhere never forces a division by zero.
    double others = 1.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) {
        others *= std::cos(x[j] / std::sqrt(static_cast<double>(j + 1)));
      }
    }
    g[i] = x[i] / 2000.0 + std::sin(x[i] / root) / root * others;
  }
  return g;
}

}  // namespace

std::string_view landscape_kind_name(LandscapeKind kind) noexcept {
  switch (kind) {
    case LandscapeKind::Ackley: return "ackley";
    case LandscapeKind::Griewank: return "griewank";
    case LandscapeKind::Rastrigin: return "rastrigin";
    case LandscapeKind::Quadratic: return "quadratic";
  }
  return "unknown";
}

Landscape Landscape::quadratic(Matrix spd) {
  if (spd.rows() < 1 || spd.rows() != spd.cols()) {
    throw Error(Errc::InvalidArgument, "quadratic matrix must be square and non-empty");
  }
  const double scale = spd.cwiseAbs().maxCoeff();
  if (!spd.allFinite() || (spd - spd.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(Errc::InvalidArgument, "quadratic matrix must be symmetric");
  }
  const Eigen::LLT<Matrix> llt(spd);
  if (llt.info() != Eigen::Success) {
    throw Error(Errc::InvalidArgument, "quadratic matrix must be positive definite");
  }
  return Landscape(LandscapeKind::Quadratic, std::move(spd));
}

Landscape Landscape::from_name(std::string_view name) {
  if (name == "ackley") return ackley();
  if (name == "griewank") return griewank();
  if (name == "rastrigin") return rastrigin();
  throw Error(Errc::InvalidArgument,
              fmt::format("unknown landscape '{}' (expected ackley, griewank or rastrigin)", name));
}

double eval(const Landscape& landscape, const Eigen::Ref<const Vector>& x) {
  check_input(x, landscape);
  switch (landscape.kind()) {
    case LandscapeKind::Ackley: return ackley(x);
    case LandscapeKind::Griewank: return griewank(x);
    case LandscapeKind::Rastrigin: return rastrigin(x);
    case LandscapeKind::Quadratic: return 0.5 * x.dot(landscape.matrix() * x);
  }
  return 0.0;
}

Vector grad(const Landscape& landscape, const Eigen::Ref<const Vector>& x) {
  check_input(x, landscape);
  switch (landscape.kind()) {
    case LandscapeKind::Ackley: return ackley_grad(x);
    case LandscapeKind::Griewank: return griewank_grad(x);
    case LandscapeKind::Rastrigin: return rastrigin_grad(x);
    case LandscapeKind::Quadratic: return landscape.matrix() * x;
  }
  return {};
}

Matrix hessian(const Landscape& landscape, const Eigen::Ref<const Vector>& x) {
  check_input(x, landscape);
  switch (landscape.kind()) {
    case LandscapeKind::Quadratic:
      return landscape.matrix();
    case LandscapeKind::Rastrigin: {
      Vector diag(x.size());
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        diag[i] = 2.0 + 40.0 * kPi * kPi * std::cos(kTwoPi * x[i]);
      }
      return diag.asDiagonal();
    }
    case LandscapeKind::Ackley:
    case LandscapeKind::Griewank:
      break;
  }
  throw Error(Errc::UnsupportedHessian,
              fmt::format("no analytic Hessian for {}; use finite differences",
                          landscape_kind_name(landscape.kind())));
}

Vector fd_grad(const Landscape& landscape, const Eigen::Ref<const Vector>& x, FdSpec spec) {
  if (!(spec.step > 0.0 && spec.step < 1.0)) {
    throw Error(Errc::InvalidArgument,
                fmt::format("finite-difference step must be in (0, 1) (got {})", spec.step));
  }
  check_input(x, landscape);
  Vector probe = x;
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + spec.step;
    const double up = eval(landscape, probe);
    probe[i] = x[i] - spec.step;
    const double down = eval(landscape, probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * spec.step);
  }
  return g;
}

}  // namespace anneal
