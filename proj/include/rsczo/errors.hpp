#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rsczo {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Raised by oracles. Carries the sample key of the failing query so a failed
/// two-point pair can be replayed.
class OracleError : public Error {
public:
    enum class Kind { non_finite, timeout, malformed_reply, process_failure, dimension_mismatch };

    OracleError(Kind kind, std::uint64_t sample_key, const std::string& what)
        : Error(what), kind_(kind), sample_key_(sample_key)
    {
    }

    Kind kind() const noexcept { return kind_; }
    std::uint64_t sample_key() const noexcept { return sample_key_; }

private:
    Kind kind_;
    std::uint64_t sample_key_;
};

class InfeasiblePlan : public Error {
public:
    InfeasiblePlan(const std::string& what, double limiting_eta)
        : Error(what), limiting_eta_(limiting_eta)
    {
    }

    double limiting_eta() const noexcept { return limiting_eta_; }

private:
    double limiting_eta_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace rsczo
