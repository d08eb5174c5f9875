#pragma once

#include <stdexcept>
#include <string>

namespace merge_rl {

/// Invalid configuration (bad ranges, unknown keys, incompatible layer dims).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller broke an operation's precondition (stepping a finished episode, wrong input size...).
class UsageError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Non-finite values showed up where they must not.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Replay memory holds fewer transitions than requested.
class InsufficientDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Checkpoint could not be read back.
class CheckpointError : public std::runtime_error {
public:
    enum class Kind { Io, Version, Shape, Corrupt };

    CheckpointError(Kind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

}  // namespace merge_rl
