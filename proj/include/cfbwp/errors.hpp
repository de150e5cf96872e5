#pragma once

#include <stdexcept>
#include <string>

namespace cfbwp {

enum class ErrorKind {
    Usage,        // bad arguments / preconditions
    Io,           // file system failures
    Schema,       // a field fails the format contract
    Invariant,    // a record violates a cross-field or cross-row rule
    Convergence,  // an iterative fit failed to converge
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& message) : Error(ErrorKind::Io, message) {}
};

class UsageError : public Error {
public:
    explicit UsageError(const std::string& message) : Error(ErrorKind::Usage, message) {}
};

// Format violation on one row of one file. row is 1-based and counts the
// header; field names the offending column.
class SchemaError : public Error {
public:
    SchemaError(const std::string& message, long row, std::string field)
        : Error(ErrorKind::Schema, message + " (row " + std::to_string(row) +
                                       ", field `" + field + "`)"),
          row_(row),
          field_(std::move(field)) {}

    long row() const noexcept { return row_; }
    const std::string& field() const noexcept { return field_; }

private:
    long row_;
    std::string field_;
};

class InvariantError : public Error {
public:
    explicit InvariantError(const std::string& message)
        : Error(ErrorKind::Invariant, message) {}
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& message, double last_change)
        : Error(ErrorKind::Convergence,
                message + " (last max change " + std::to_string(last_change) + ")"),
          last_change_(last_change) {}

    double last_change() const noexcept { return last_change_; }

private:
    double last_change_;
};

}  // namespace cfbwp
