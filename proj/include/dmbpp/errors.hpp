#pragma once

#include <stdexcept>
#include <string>

namespace dmbpp {

/// Coarse failure class, used by the command-line front end to pick an exit code.
enum class ErrorCategory { Config, Data, Numeric, Argument };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define DMBPP_DECLARE_ERROR(Name, Category)                              \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what)                               \
        : Error(ErrorCategory::Category, std::string(#Name ": ") + what) {} \
  };

// domain
DMBPP_DECLARE_ERROR(DimensionMismatch, Data)
DMBPP_DECLARE_ERROR(OutOfRange, Data)
DMBPP_DECLARE_ERROR(SimplexViolation, Data)
// kernels / bernstein / model
DMBPP_DECLARE_ERROR(InvalidArgument, Argument)
DMBPP_DECLARE_ERROR(SizeLimit, Argument)
DMBPP_DECLARE_ERROR(NormalizationError, Numeric)
DMBPP_DECLARE_ERROR(ZeroMarginal, Numeric)
DMBPP_DECLARE_ERROR(Infeasible, Argument)
DMBPP_DECLARE_ERROR(OutOfSupport, Argument)
// gibbs
DMBPP_DECLARE_ERROR(DegenerateLikelihood, Numeric)
DMBPP_DECLARE_ERROR(NumericalGuard, Numeric)
// estimate
DMBPP_DECLARE_ERROR(BudgetTooSmall, Argument)
DMBPP_DECLARE_ERROR(EmptyInput, Argument)
DMBPP_DECLARE_ERROR(UnsupportedSubset, Argument)
// cli
DMBPP_DECLARE_ERROR(ParseError, Data)
DMBPP_DECLARE_ERROR(RescaleOutOfRange, Data)
DMBPP_DECLARE_ERROR(EmptyDataset, Data)
DMBPP_DECLARE_ERROR(ConfigError, Config)

#undef DMBPP_DECLARE_ERROR

}  // namespace dmbpp
