#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tailbound {

/// Base class for library failures that are not argument errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A trajectory produced a non-finite state or crossed the divergence guard.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t step, std::size_t replicate, const std::string& what)
      : Error(what), step_(step), replicate_(replicate) {}
  std::size_t step() const noexcept { return step_; }
  std::size_t replicate() const noexcept { return replicate_; }

 private:
  std::size_t step_;
  std::size_t replicate_;
};

/// E M^k = 1 has no root on the searched range (e.g. M <= 1 a.s.).
class NoCramerIndex : public Error {
 public:
  using Error::Error;
};

/// E log M >= 0: no contraction, so no positive Cramer root.
class NotMeanDominated : public Error {
 public:
  using Error::Error;
};

/// P(M = 1) = 1.
class DegenerateFactor : public Error {
 public:
  using Error::Error;
};

/// A model's declared contract failed on sampled data.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace tailbound
