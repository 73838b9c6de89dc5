#pragma once

#include <stdexcept>
#include <string>

namespace mrpleio {

// Bad input: malformed files, violated preconditions, unknown names.
// The CLI maps this to exit code 2.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Numerical failure on otherwise valid input: rank deficiency,
// degenerate instruments, solver non-convergence. Exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mrpleio
