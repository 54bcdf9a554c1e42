#pragma once

#include <stdexcept>
#include <string>

namespace holohj {

/// Base class of every error raised by the library. `code()` is the stable
/// machine-readable name written into CLI error artifacts.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define HOLOHJ_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& what) : Error(#Name, what) {}  \
  };

// ring core
HOLOHJ_DEFINE_ERROR(ZeroDenominator)
HOLOHJ_DEFINE_ERROR(SingularPoint)
HOLOHJ_DEFINE_ERROR(ParseError)
// operator algebra
HOLOHJ_DEFINE_ERROR(ResourceLimit)
HOLOHJ_DEFINE_ERROR(NotZeroDimensional)
// pfaffian systems
HOLOHJ_DEFINE_ERROR(IntegrabilityViolation)
HOLOHJ_DEFINE_ERROR(BasePointMismatch)
HOLOHJ_DEFINE_ERROR(RankDeficientExtract)
// hje layer
HOLOHJ_DEFINE_ERROR(BasisNotCanonical)
HOLOHJ_DEFINE_ERROR(SingularBasePoint)
HOLOHJ_DEFINE_ERROR(NoSolution)
// numerics
HOLOHJ_DEFINE_ERROR(SingularPathCrossing)
HOLOHJ_DEFINE_ERROR(StepLimitExceeded)
HOLOHJ_DEFINE_ERROR(JacobianSingular)
HOLOHJ_DEFINE_ERROR(NewtonDivergence)
// front end
HOLOHJ_DEFINE_ERROR(SyntaxError)
HOLOHJ_DEFINE_ERROR(UnsupportedAtom)
// pipeline
HOLOHJ_DEFINE_ERROR(InputError)
HOLOHJ_DEFINE_ERROR(VerificationFailure)

#undef HOLOHJ_DEFINE_ERROR

}  // namespace holohj
