#pragma once

#include <stdexcept>
#include <string>

namespace silab {

// A parameter group (or the whole vector) came too close to the origin for
// the sphere geometry to be meaningful.
class DegeneratePointError : public std::runtime_error {
public:
    explicit DegeneratePointError(const std::string& what) : std::runtime_error(what) {}
};

// A linear interpolation path passed (numerically) through the origin.
class DegeneratePathError : public std::runtime_error {
public:
    explicit DegeneratePathError(const std::string& what) : std::runtime_error(what) {}
};

// Raised by update rules when parameters stop being finite.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed binary/text input (IDX files, trajectory CSVs, checkpoints).
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid run configuration; `path` points at the offending field.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

// Checkpoint/trajectory is structurally incompatible with the requested operation.
class IncompatibilityError : public std::runtime_error {
public:
    explicit IncompatibilityError(const std::string& what) : std::runtime_error(what) {}
};

// An analysis was asked for on a trajectory too short to support it.
class InsufficientDataError : public std::runtime_error {
public:
    explicit InsufficientDataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace silab
