#pragma once

#include <stdexcept>
#include <string>

namespace locos {

// bad input: malformed descriptors, out-of-range parameters
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// a structural invariant failed during a computation
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw Error(what);
}

inline void ensure(bool ok, const std::string& what) {
  if (!ok) throw InvariantViolation(what);
}

}  // namespace locos
