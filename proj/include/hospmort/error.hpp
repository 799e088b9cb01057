#ifndef HOSPMORT_ERROR_HPP
#define HOSPMORT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace hospmort {

// Bad input: malformed files, inconsistent configuration, infeasible requests.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values or failed factorizations inside a numerical routine.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hospmort

#endif  // HOSPMORT_ERROR_HPP
