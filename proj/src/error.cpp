#include "anneal/error.hpp"

namespace anneal {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "invalid-argument";
    case Errc::InvalidCycle: return "invalid-cycle";
    case Errc::DivisionByZeroGuard: return "division-by-zero-guard";
    case Errc::InvalidBase: return "invalid-base";
    case Errc::CallerContract: return "caller-contract";
    case Errc::NonFiniteGradient: return "non-finite-gradient";
    case Errc::SingularHessian: return "singular-hessian";
    case Errc::UnsupportedHessian: return "unsupported-hessian";
    case Errc::Dimension: return "dimension";
    case Errc::LabelRange: return "label-range";
    case Errc::Split: return "split";
    case Errc::TruncatedFile: return "truncated-file";
    case Errc::CorruptLabel: return "corrupt-label";
    case Errc::Divergence: return "divergence";
    case Errc::Io: return "io";
  }
  return "unknown";
}

}  // namespace anneal
