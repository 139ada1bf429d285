#ifndef EMOSPOOL_ERRORS_HPP
#define EMOSPOOL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace emospool {

// Invalid distribution parameters, link outputs or function arguments.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Malformed input data: CSV schema violations, duplicate keys, bad manifests.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Structurally valid input on which the requested statistic is undefined
// (constant observations, single-member ensembles, zero score variance, ...).
class DegenerateError : public std::runtime_error {
 public:
  explicit DegenerateError(const std::string& what)
      : std::runtime_error(what) {}
};

// Requested operation has no implementation for the given family/method.
class NotImplementedError : public std::logic_error {
 public:
  explicit NotImplementedError(const std::string& what)
      : std::logic_error(what) {}
};

}  // namespace emospool

#endif  // EMOSPOOL_ERRORS_HPP
