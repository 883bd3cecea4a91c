#pragma once

#include <stdexcept>

namespace czo {

/// An argument outside an operation's precondition: a point outside a branch
/// domain, a non-positive truncation radius, an unknown branch index.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A kernel was evaluated on (or numerically at) its singular set.
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A curve breaks one of the structural conditions it declares.
class CurveValidityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Something that holds by construction was observed broken.
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace czo
