#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace rsczo {

/// splitmix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t combine(std::uint64_t acc, std::uint64_t word) noexcept
{
    return mix64(acc ^ mix64(word));
}

/// FNV-1a, used to turn stream names ("iter", "warm", ...) into tags.
constexpr std::uint64_t stream_tag(std::string_view name) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Counter-based derivation key: (master seed, stream, iteration, sample index).
/// Every random quantity in a run is a pure function of one of these, so the
/// two evaluations of a two-point pair share their noise by construction and
/// evaluation order never changes the draws.
struct StreamKey {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::uint64_t t = 0;
    std::uint64_t index = 0;

    constexpr std::uint64_t derive() const noexcept
    {
        return combine(combine(combine(mix64(seed), stream), t), index);
    }
};

/// Per-sample keys split from one derivation key.
struct SampleKeys {
    std::uint64_t noise;      // ξ_ℓ, handed to the oracle
    std::uint64_t direction;  // u_ℓ
};

constexpr SampleKeys split_sample_key(std::uint64_t key) noexcept
{
    return {combine(key, 0x6e6f697365ULL), combine(key, 0x646972ULL)};
}

/// xoshiro256** seeded from a single 64-bit key. Small, fast, and fully
/// specified, so streams are bit-identical across platforms (unlike
/// std::normal_distribution).
class KeyedRng {
public:
    explicit KeyedRng(std::uint64_t key) noexcept
    {
        std::uint64_t s = key;
        for (auto& w : state_) {
            s += 0x9e3779b97f4a7c15ULL;
            w = mix64(s);
        }
    }

    std::uint64_t next() noexcept
    {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform on (0, 1].
    double uniform_open_closed() noexcept
    {
        return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    }

    /// Uniform on [0, 1).
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Lemire's multiply-shift with rejection.
    std::uint64_t below(std::uint64_t n) noexcept
    {
        unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                m = static_cast<unsigned __int128>(next()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    bool coin() noexcept { return (next() >> 63) != 0; }

    /// Standard normal, ziggurat method (Doornik's 128-layer ZIGNOR variant).
    double normal() noexcept;

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept
    {
        return (x << k) | (x >> (64 - k));
    }

    double normal_tail(bool negative) noexcept;

    std::uint64_t state_[4]{};
};

namespace detail {

struct ZigguratTables {
    static constexpr int kLayers = 128;
    static constexpr double kR = 3.442619855899;
    static constexpr double kV = 9.91256303526217e-3;
    double x[kLayers + 1];
    double ratio[kLayers];

    ZigguratTables() noexcept
    {
        double f = std::exp(-0.5 * kR * kR);
        x[0] = kV / f;
        x[1] = kR;
        x[kLayers] = 0.0;
        for (int i = 2; i < kLayers; ++i) {
            x[i] = std::sqrt(-2.0 * std::log(kV / x[i - 1] + f));
            f = std::exp(-0.5 * x[i] * x[i]);
        }
        for (int i = 0; i < kLayers; ++i)
            ratio[i] = x[i + 1] / x[i];
    }
};

inline const ZigguratTables& ziggurat_tables() noexcept
{
    static const ZigguratTables tables;
    return tables;
}

} // namespace detail

inline double KeyedRng::normal_tail(bool negative) noexcept
{
    constexpr double r = detail::ZigguratTables::kR;
    double x = 0.0;
    double y = 0.0;
    do {
        x = std::log(uniform_open_closed()) / r;
        y = std::log(uniform_open_closed());
    } while (-2.0 * y < x * x);
    return negative ? x - r : r - x;
}

inline double KeyedRng::normal() noexcept
{
    const auto& z = detail::ziggurat_tables();
    for (;;) {
        const std::uint64_t bits = next();
        const int i = static_cast<int>(bits & 0x7f);
        // 53 high bits -> u uniform on [-1, 1)
        const double u = 2.0 * (static_cast<double>(bits >> 11) * 0x1.0p-53) - 1.0;
        if (std::abs(u) < z.ratio[i])
            return u * z.x[i];
        if (i == 0)
            return normal_tail(u < 0.0);
        const double x = u * z.x[i];
        const double f0 = std::exp(-0.5 * (z.x[i] * z.x[i] - x * x));
        const double f1 = std::exp(-0.5 * (z.x[i + 1] * z.x[i + 1] - x * x));
        if (f1 + uniform() * (f0 - f1) < 1.0)
            return x;
    }
}

} // namespace rsczo
