#pragma once

#include <stdexcept>
#include <string>

namespace eqopt {

/// Broad failure class; the CLI maps it to a process exit code.
enum class ErrorClass { config, data, numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const noexcept { return cls_; }

 private:
  ErrorClass cls_;
};

#define EQOPT_DEFINE_ERROR(Name, Class)                                          \
  class Name : public Error {                                                    \
   public:                                                                       \
    explicit Name(const std::string& what) : Error(ErrorClass::Class, what) {}  \
  };

EQOPT_DEFINE_ERROR(ConfigError, config)
EQOPT_DEFINE_ERROR(ParameterError, config)
EQOPT_DEFINE_ERROR(BudgetError, config)
EQOPT_DEFINE_ERROR(SegmentationError, data)
EQOPT_DEFINE_ERROR(DataError, data)
EQOPT_DEFINE_ERROR(ShapeError, data)
EQOPT_DEFINE_ERROR(SignalError, numeric)
EQOPT_DEFINE_ERROR(TapeError, numeric)
EQOPT_DEFINE_ERROR(OptimError, numeric)
EQOPT_DEFINE_ERROR(MetricUndefined, numeric)
EQOPT_DEFINE_ERROR(ObjectiveError, numeric)

#undef EQOPT_DEFINE_ERROR

/// 0 success, 2 config error, 3 data error, 4 numeric/training error.
int exit_code_for(const Error& e) noexcept;

}  // namespace eqopt
