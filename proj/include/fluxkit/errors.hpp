// errors.hpp: error taxonomy shared by library and CLI exit codes
#pragma once

#include <stdexcept>
#include <string>

namespace fluxkit {

// Input or schema violations; CLI exit code 2.
struct validation_error : std::invalid_argument {
  explicit validation_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Numerical solver failures (eigensolve, quadrature); CLI exit code 3.
struct solver_error : std::runtime_error {
  explicit solver_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Statistical non-convergence or unidentifiability; CLI exit code 4.
struct fit_error : std::runtime_error {
  explicit fit_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fluxkit
