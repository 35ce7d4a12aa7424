#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "rsczo/oracle.hpp"

namespace rsczo {

struct ExternalOracleSpec {
    std::string command;  // run through /bin/sh -c
    std::chrono::milliseconds timeout{5000};
    int protocol_version = 1;
};

/// Black-box oracle backed by a child process speaking a line protocol:
///
///   request:  "EVAL <sample_key> <x_1> ... <x_d>\n"   (17 significant digits)
///   reply:    "<value>\n"
///
/// The child receives the same sample_key for both points of a two-point
/// pair and is responsible for reusing its noise realization. Requests are
/// serialized; use one instance per worker for parallel evaluation.
class ExternalOracle final : public Oracle {
public:
    ExternalOracle(ExternalOracleSpec spec, std::size_t dimension);
    ~ExternalOracle() override;

    ExternalOracle(const ExternalOracle&) = delete;
    ExternalOracle& operator=(const ExternalOracle&) = delete;

    std::size_t dimension() const override { return dimension_; }
    double evaluate(std::span<const double> x, std::uint64_t sample_key) override;

private:
    void spawn();
    void shutdown() noexcept;
    std::string read_line(std::uint64_t sample_key);

    ExternalOracleSpec spec_;
    std::size_t dimension_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};

/// Formats one request line (without the trailing newline).
std::string format_eval_request(std::uint64_t sample_key, std::span<const double> x);

/// Parses a reply line; throws OracleError on malformed or non-finite input.
double parse_eval_reply(const std::string& line, std::uint64_t sample_key);

} // namespace rsczo
