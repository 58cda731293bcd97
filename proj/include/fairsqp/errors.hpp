#pragma once

#include <stdexcept>
#include <string>

namespace fairsqp {

struct InvalidDatasetError : std::runtime_error {
  explicit InvalidDatasetError(const std::string& what) : std::runtime_error(what) {}
};

// Active rows of the QP Jacobian are (numerically) dependent; the caller is
// expected to skip the offending candidate active set.
struct DegenerateActiveSetError : std::runtime_error {
  explicit DegenerateActiveSetError(const std::string& what) : std::runtime_error(what) {}
};

struct QpInfeasibleError : std::runtime_error {
  explicit QpInfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fairsqp
