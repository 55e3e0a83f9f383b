#include "eqopt/errors.hpp"

namespace eqopt {

int exit_code_for(const Error& e) noexcept {
  switch (e.error_class()) {
    case ErrorClass::config:
      return 2;
    case ErrorClass::data:
      return 3;
    case ErrorClass::numeric:
      return 4;
  }
  return 1;
}

}  // namespace eqopt
