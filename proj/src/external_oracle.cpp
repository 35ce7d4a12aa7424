#include "rsczo/external_oracle.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "rsczo/errors.hpp"

namespace rsczo {

namespace {

void write_all(int fd, const std::string& data, std::uint64_t key)
{
    std::size_t off = 0;
    while (off < data.size()) {
        const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            throw OracleError(OracleError::Kind::process_failure, key,
                              std::string("write to oracle process failed: ") + std::strerror(errno));
        }
        off += static_cast<std::size_t>(n);
    }
}

} // namespace

std::string format_eval_request(std::uint64_t sample_key, std::span<const double> x)
{
    std::string line = "EVAL " + std::to_string(sample_key);
    char buf[40];
    for (double v : x) {
        std::snprintf(buf, sizeof buf, " %.17g", v);
        line += buf;
    }
    return line;
}

double parse_eval_reply(const std::string& line, std::uint64_t sample_key)
{
    std::size_t b = 0;
    std::size_t e = line.size();
    while (b < e && std::isspace(static_cast<unsigned char>(line[b])))
        ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(line[e - 1])))
        --e;
    if (b == e)
        throw OracleError(OracleError::Kind::malformed_reply, sample_key, "empty oracle reply");

    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(line.data() + b, line.data() + e, value);
    if (ec != std::errc() || ptr != line.data() + e)
        throw OracleError(OracleError::Kind::malformed_reply, sample_key,
                          "malformed oracle reply '" + line.substr(b, e - b) + "'");
    if (!std::isfinite(value))
        throw OracleError(OracleError::Kind::non_finite, sample_key,
                          "oracle returned non-finite value for sample key " + std::to_string(sample_key));
    return value;
}

ExternalOracle::ExternalOracle(ExternalOracleSpec spec, std::size_t dimension)
    : spec_(std::move(spec)), dimension_(dimension)
{
    if (spec_.command.empty())
        throw InvalidArgument("external oracle command is empty");
    if (spec_.protocol_version != 1)
        throw InvalidArgument("unsupported external oracle protocol version " +
                              std::to_string(spec_.protocol_version));
    if (dimension_ == 0)
        throw InvalidArgument("external oracle dimension must be positive");
    spawn();
}

ExternalOracle::~ExternalOracle() { shutdown(); }

void ExternalOracle::spawn()
{
    int in_pipe[2];
    int out_pipe[2];
    if (::pipe(in_pipe) != 0)
        throw Error(std::string("pipe: ") + std::strerror(errno));
    if (::pipe(out_pipe) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        throw Error(std::string("pipe: ") + std::strerror(errno));
    }

    const pid_t pid = ::fork();
    if (pid < 0)
        throw Error(std::string("fork: ") + std::strerror(errno));
    if (pid == 0) {
        // Own process group, so a kill also reaches whatever the shell started.
        ::setpgid(0, 0);
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        ::close(out_pipe[0]);
        ::close(out_pipe[1]);
        ::execl("/bin/sh", "sh", "-c", spec_.command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }

    ::setpgid(pid, pid);
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    ::signal(SIGPIPE, SIG_IGN);
}

void ExternalOracle::shutdown() noexcept
{
    if (to_child_ >= 0)
        ::close(to_child_);
    if (from_child_ >= 0)
        ::close(from_child_);
    to_child_ = from_child_ = -1;
    if (pid_ > 0) {
        int status = 0;
        // Give a well-behaved child a moment to exit on EOF, then kill it.
        for (int i = 0; i < 20; ++i) {
            if (::waitpid(pid_, &status, WNOHANG) == pid_) {
                pid_ = -1;
                return;
            }
            ::usleep(5000);
        }
        ::kill(-pid_, SIGKILL);
        ::waitpid(pid_, &status, 0);
        pid_ = -1;
    }
}

std::string ExternalOracle::read_line(std::uint64_t sample_key)
{
    const auto deadline = std::chrono::steady_clock::now() + spec_.timeout;
    for (;;) {
        const auto nl = buffer_.find('\n');
        if (nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return line;
        }
        const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (remaining.count() <= 0) {
            // A late reply would desynchronize the stream; drop the child.
            shutdown();
            throw OracleError(OracleError::Kind::timeout, sample_key,
                              "oracle process timed out after " + std::to_string(spec_.timeout.count()) +
                                  " ms (sample key " + std::to_string(sample_key) + ")");
        }

        pollfd pfd{from_child_, POLLIN, 0};
        const int r = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
        if (r < 0) {
            if (errno == EINTR)
                continue;
            throw OracleError(OracleError::Kind::process_failure, sample_key,
                              std::string("poll: ") + std::strerror(errno));
        }
        if (r == 0)
            continue;  // deadline check at loop head

        char chunk[4096];
        const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            throw OracleError(OracleError::Kind::process_failure, sample_key,
                              std::string("read from oracle process failed: ") + std::strerror(errno));
        }
        if (n == 0)
            throw OracleError(OracleError::Kind::process_failure, sample_key,
                              "oracle process closed its output");
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

double ExternalOracle::evaluate(std::span<const double> x, std::uint64_t sample_key)
{
    if (x.size() != dimension_)
        throw OracleError(OracleError::Kind::dimension_mismatch, sample_key,
                          "query dimension " + std::to_string(x.size()) + " != oracle dimension " +
                              std::to_string(dimension_));
    if (pid_ < 0)
        throw OracleError(OracleError::Kind::process_failure, sample_key, "oracle process is not running");
    write_all(to_child_, format_eval_request(sample_key, x) + "\n", sample_key);
    return parse_eval_reply(read_line(sample_key), sample_key);
}

} // namespace rsczo
