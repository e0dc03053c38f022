#pragma once

#include <stdexcept>
#include <string>

namespace treeids {

// Exception hierarchy. The CLI maps each family onto a process exit code.

/// Malformed input, unreadable files, bad parameters. Exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Feature schema or profile disagreement between a model and its input. Exit code 3.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A broken internal invariant. Exit code 4.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace treeids
