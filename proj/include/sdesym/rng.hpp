#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace sdesym {

/// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
/// Stateless: the output is a pure function of (counter, key), which is what lets
/// every path draw its own increments regardless of which thread simulates it.
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxCounter philox4x32(PhiloxCounter c, PhiloxKey k) {
    constexpr std::uint32_t M0 = 0xD2511F53u;
    constexpr std::uint32_t M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u;
    constexpr std::uint32_t W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            k[0] += W0;
            k[1] += W1;
        }
        const std::uint64_t p0 = std::uint64_t{M0} * c[0];
        const std::uint64_t p1 = std::uint64_t{M1} * c[2];
        c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
    }
    return c;
}

namespace detail {

// Ziggurat tables, 128 layers (Marsaglia & Tsang; layout of Doornik's ZIGNOR).
struct ZigguratTables {
    static constexpr int kLayers = 128;
    static constexpr double kR = 3.442619855899;
    static constexpr double kV = 9.91256303526217e-3;
    double x[kLayers + 1];
    double ratio[kLayers];

    ZigguratTables() {
        double f = std::exp(-0.5 * kR * kR);
        x[0] = kV / f;
        x[1] = kR;
        x[kLayers] = 0.0;
        for (int i = 2; i < kLayers; ++i) {
            x[i] = std::sqrt(-2.0 * std::log(kV / x[i - 1] + f));
            f = std::exp(-0.5 * x[i] * x[i]);
        }
        for (int i = 0; i < kLayers; ++i) ratio[i] = x[i + 1] / x[i];
    }
};

inline const ZigguratTables& ziggurat() {
    static const ZigguratTables t;
    return t;
}

}  // namespace detail

/// Sequential standard normals for one (seed, path, stream). Philox block b of the
/// substream uses counter (b, path_lo, path_hi, stream) and yields two 64-bit words;
/// each ziggurat attempt consumes one word (53 bits of uniform, 7 bits of layer).
/// Box-Muller was over twice as slow here, and the normals dominate simulation cost.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t path, std::uint32_t stream = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          path_lo_(static_cast<std::uint32_t>(path)), path_hi_(static_cast<std::uint32_t>(path >> 32)),
          stream_(stream) {}

    std::uint64_t next_word() {
        if (have_ == 0) {
            const PhiloxCounter r = philox4x32({block_++, path_lo_, path_hi_, stream_}, key_);
            words_[0] = (std::uint64_t{r[0]} << 32) | r[1];
            words_[1] = (std::uint64_t{r[2]} << 32) | r[3];
            have_ = 2;
        }
        return words_[2 - have_--];
    }

    /// Uniform on (0, 1].
    double next_uniform() { return (static_cast<double>(next_word() >> 11) + 1.0) * kScale; }

    double next() {
        const auto& z = detail::ziggurat();
        for (;;) {
            const std::uint64_t w = next_word();
            const double u = 2.0 * (static_cast<double>(w >> 11) * kScale) - 1.0;  // [-1, 1)
            const int i = static_cast<int>(w & 0x7F);
            if (std::fabs(u) < z.ratio[i]) return u * z.x[i];
            if (i == 0) return tail(u < 0.0);
            const double x = u * z.x[i];
            const double f0 = std::exp(-0.5 * (z.x[i] * z.x[i] - x * x));
            const double f1 = std::exp(-0.5 * (z.x[i + 1] * z.x[i + 1] - x * x));
            if (f1 + (f0 - f1) * next_uniform() < 1.0) return x;
        }
    }

    void fill(double* out, std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) out[i] = next();
    }

private:
    static constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53

    double tail(bool negative) {
        constexpr double r = detail::ZigguratTables::kR;
        double x = 0.0;
        double y = 0.0;
        do {
            x = std::log(next_uniform()) / r;
            y = std::log(next_uniform());
        } while (-2.0 * y < x * x);
        return negative ? x - r : r - x;
    }

    PhiloxKey key_;
    std::uint32_t path_lo_;
    std::uint32_t path_hi_;
    std::uint32_t stream_;
    std::uint32_t block_ = 0;
    int have_ = 0;
    std::uint64_t words_[2] = {0, 0};
};

}  // namespace sdesym
