// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <stdexcept>
#include <string>

namespace gwest {

// Process exit codes shared by the CLI and the library's error taxonomy.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitCapacity = 3,
  kExitInconsistentInput = 4,
};

// Requested enumeration or exact inference exceeds the configured budget.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inputs that parse but cannot belong together, e.g. a sample that no tree
// of the stated height and width can produce.
class InconsistentInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Node sampling observed nothing; callers retry with a fresh seed.
class EmptySampleError : public std::runtime_error {
 public:
  EmptySampleError()
      : std::runtime_error("empty sample: no node was observed") {}
};

}  // namespace gwest
