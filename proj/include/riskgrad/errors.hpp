#pragma once

#include <stdexcept>
#include <string>

namespace riskgrad {

/// Base class for all riskgrad exceptions.
class error : public std::runtime_error {
  public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid argument or configuration (maps to CLI exit code 2).
class argument_error : public error {
  public:
    explicit argument_error(const std::string& what) : error(what) {}
};

/// Input outside the mathematical domain of an operation.
class domain_error : public argument_error {
  public:
    explicit domain_error(const std::string& what) : argument_error(what) {}
};

/// A measure places an atom where the integrand is singular.
class singularity_error : public argument_error {
  public:
    explicit singularity_error(const std::string& what) : argument_error(what) {}
};

/// Every candidate of a constrained search was rejected.
class infeasible_error : public argument_error {
  public:
    explicit infeasible_error(const std::string& what) : argument_error(what) {}
};

/// A chain produced a non-finite state (maps to CLI exit code 3).
class divergence_error : public error {
  public:
    explicit divergence_error(const std::string& what) : error(what) {}
};

/// Malformed input data (maps to CLI exit code 4).
class parse_error : public error {
  public:
    explicit parse_error(const std::string& what) : error(what) {}
};

/// Filesystem failure (maps to CLI exit code 4).
class io_error : public error {
  public:
    explicit io_error(const std::string& what) : error(what) {}
};

} // namespace riskgrad
