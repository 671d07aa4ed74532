#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace anneal {

enum class Errc {
  InvalidArgument,
  InvalidCycle,
  DivisionByZeroGuard,
  InvalidBase,
  CallerContract,
  NonFiniteGradient,
  SingularHessian,
  UnsupportedHessian,
  Dimension,
  LabelRange,
  Split,
  TruncatedFile,
  CorruptLabel,
  Divergence,
  Io,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Raised by the CIFAR-10 reader; offset is the byte position of the offending record.
class ParseError : public Error {
 public:
  ParseError(Errc code, std::size_t offset, const std::string& what)
      : Error(code, what), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Non-finite loss or objective. `index` is an epoch for training runs and a
// step for landscape runs.
class DivergenceError : public Error {
 public:
  DivergenceError(long index, double value, const std::string& what)
      : Error(Errc::Divergence, what), index_(index), value_(value) {}

  long index() const noexcept { return index_; }
  double value() const noexcept { return value_; }

 private:
  long index_;
  double value_;
};

}  // namespace anneal
