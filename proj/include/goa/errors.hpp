#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace goa {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class UnsupportedArity : public DomainError {
public:
    using DomainError::DomainError;
};

/// Raised when the tilt search exceeds its iteration cap. Carries the last tilt
/// state so the caller can report where it got stuck.
class SearchFailure : public std::runtime_error {
public:
    SearchFailure(const std::string& what, double a, double b, std::vector<double> support)
        : std::runtime_error(what), tilt_a(a), tilt_b(b), last_support(std::move(support)) {}

    double tilt_a;
    double tilt_b;
    std::vector<double> last_support;
};

/// A strategy cannot reach the error requirement (diverging consumption).
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Support weights came out negative beyond tolerance.
class InvalidSupport : public DomainError {
public:
    using DomainError::DomainError;
};

class RunawayTrial : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed configuration. `key` names the offending entry.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& key, const std::string& what)
        : std::runtime_error(key.empty() ? what : key + ": " + what), key(key) {}

    std::string key;
};

/// Unreadable or corrupted artifact file.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace goa
