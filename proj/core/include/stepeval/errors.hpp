#pragma once

#include <stdexcept>
#include <string>

namespace stepeval {

// Base class for every error the library raises. `code()` returns a stable
// machine-readable class name used by the CLI to pick exit codes.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

struct FileMissingError : Error {
    explicit FileMissingError(const std::string& path)
        : Error("FileMissing", path) {}
};

struct MalformedDocumentError : Error {
    explicit MalformedDocumentError(const std::string& what)
        : Error("MalformedDocument", what) {}
};

struct InvalidRubricError : Error {
    explicit InvalidRubricError(const std::string& what)
        : Error("InvalidRubric", what) {}
};

struct LengthMismatchError : Error {
    LengthMismatchError(std::size_t expected, std::size_t got)
        : Error("LengthMismatch",
                "expected " + std::to_string(expected) + ", got " + std::to_string(got)) {}
};

struct NonBinaryEntryError : Error {
    explicit NonBinaryEntryError(const std::string& what)
        : Error("NonBinaryEntry", what) {}
};

struct MissingImageError : Error {
    explicit MissingImageError(const std::string& path)
        : Error("MissingImage", path) {}
};

struct GroundTruthMismatchError : Error {
    explicit GroundTruthMismatchError(const std::string& trajectory_id)
        : Error("GroundTruthMismatch", "trajectory " + trajectory_id) {}
};

struct UnknownViewError : Error {
    UnknownViewError(const std::string& view, int timestep)
        : Error("UnknownView",
                "view '" + view + "' missing at timestep " + std::to_string(timestep)) {}
};

struct IndexOutOfRangeError : Error {
    explicit IndexOutOfRangeError(const std::string& what)
        : Error("IndexOutOfRange", what) {}
};

struct TemplateIncompatibleError : Error {
    explicit TemplateIncompatibleError(const std::string& what)
        : Error("TemplateIncompatible", what) {}
};

struct PlaceholderUnfilledError : Error {
    explicit PlaceholderUnfilledError(const std::string& placeholder)
        : Error("PlaceholderUnfilled", placeholder) {}
};

// Transient backend failure; callers may retry.
struct BackendUnavailableError : Error {
    explicit BackendUnavailableError(const std::string& what)
        : Error("BackendUnavailable", what) {}
};

struct AuthRejectedError : Error {
    explicit AuthRejectedError(const std::string& what)
        : Error("AuthRejected", what) {}
};

struct ProviderError : Error {
    explicit ProviderError(const std::string& what)
        : Error("ProviderError", what) {}
};

struct BudgetExceededError : Error {
    explicit BudgetExceededError(const std::string& what)
        : Error("BudgetExceeded", what) {}
};

struct MissingGroundTruthError : Error {
    explicit MissingGroundTruthError(const std::string& trajectory_id)
        : Error("MissingGroundTruth", "trajectory " + trajectory_id) {}
};

struct CacheMissError : Error {
    explicit CacheMissError(const std::string& digest)
        : Error("CacheMiss", digest) {}
};

struct CacheCorruptError : Error {
    explicit CacheCorruptError(const std::string& what)
        : Error("CacheCorrupt", what) {}
};

// Raised by parse_verdict; `kind` is one of NoAnswerMarker, LengthMismatch,
// NonBinaryToken. The raw reply travels in the message for debugging.
struct VerdictParseError : Error {
    enum class Kind { NoAnswerMarker, LengthMismatch, NonBinaryToken };

    VerdictParseError(Kind kind, const std::string& raw_reply)
        : Error("VerdictParseError", kind_name(kind) + ": " + raw_reply), kind_(kind) {}
    Kind kind() const { return kind_; }

    static std::string kind_name(Kind k) {
        switch (k) {
            case Kind::NoAnswerMarker: return "NoAnswerMarker";
            case Kind::LengthMismatch: return "LengthMismatch";
            case Kind::NonBinaryToken: return "NonBinaryToken";
        }
        return "Unknown";
    }

private:
    Kind kind_;
};

struct EmptyInputError : Error {
    explicit EmptyInputError(const std::string& what)
        : Error("EmptyInput", what) {}
};

struct UnresolvedTrajectoryError : Error {
    explicit UnresolvedTrajectoryError(const std::string& trajectory_id)
        : Error("UnresolvedTrajectory", "trajectory " + trajectory_id) {}
};

struct NoFeasibleConfigError : Error {
    NoFeasibleConfigError(double budget, double min_observed_cost)
        : Error("NoFeasibleConfig",
                "budget " + std::to_string(budget) + " below minimum observed cost " +
                    std::to_string(min_observed_cost)),
          min_observed_cost(min_observed_cost) {}
    double min_observed_cost;
};

struct EmptyAxisError : Error {
    explicit EmptyAxisError(const std::string& axis)
        : Error("EmptyAxis", axis) {}
};

}  // namespace stepeval
