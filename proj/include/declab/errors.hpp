#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace declab {

/// A requested scale is not dyadic or does not nest inside its parent.
struct InvalidScaleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An input lies outside the operation's domain (e.g. cube not inside [0,1]^d).
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A requested partition or cap scale is finer than the sampling resolves.
struct ResolutionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The input makes the requested quantity meaningless (e.g. g == 0).
struct DegenerateInputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A quantified precondition over a family fails; message names the witness.
struct PreconditionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Configuration violations, all collected before reporting.
struct ValidationError : std::runtime_error {
    std::vector<std::string> violations;

    explicit ValidationError(std::vector<std::string> v)
        : std::runtime_error(join(v)), violations(std::move(v)) {}

  private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s = "configuration invalid:";
        for (const auto& msg : v) {
            s += "\n  - ";
            s += msg;
        }
        return s;
    }
};

/// Output path could not be opened or written.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace declab
