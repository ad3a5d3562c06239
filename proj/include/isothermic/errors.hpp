#ifndef ISOTHERMIC_ERRORS_HPP
#define ISOTHERMIC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace isothermic {

// Geometric or data validation failed (CLI exit code 2).
struct validation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An iterative procedure did not reach its tolerance (CLI exit code 3).
struct convergence_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace isothermic

#endif
