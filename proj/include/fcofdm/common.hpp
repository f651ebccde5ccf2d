#pragma once

#include <complex>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace fcofdm {

using cd = std::complex<double>;
using cvec = std::vector<cd>;

inline constexpr double pi = 3.141592653589793238462643383279502884;

/// All precondition/configuration failures throw this.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// printf-style formatting into a std::string (for error messages and CSV rows).
inline std::string strf(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    va_list args2;
    va_copy(args2, args);
    const int n = std::vsnprintf(nullptr, 0, fmt, args);
    va_end(args);
    std::string out(static_cast<size_t>(n), '\0');
    std::vsnprintf(out.data(), out.size() + 1, fmt, args2);
    va_end(args2);
    return out;
}

[[noreturn]] inline void fail(const std::string& msg) { throw error(msg); }

/// Linear power to dB with a floor so silent inputs stay file-format friendly.
inline double power_db(double p, double floor_db = -400.0) {
    if (!(p > 0.0)) return floor_db;
    return std::max(10.0 * std::log10(p), floor_db);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double sqnorm(const cvec& v) {
    double s = 0.0;
    for (const cd& x : v) s += std::norm(x);
    return s;
}

inline cd inner(const cvec& a, const cvec& b) {
    // <a, b> = sum conj(a) * b
    cd s = 0.0;
    const size_t n = std::min(a.size(), b.size());
    for (size_t i = 0; i < n; ++i) s += std::conj(a[i]) * b[i];
    return s;
}

inline bool is_pow2(long n) { return n > 0 && (n & (n - 1)) == 0; }

/// Deterministic cross-platform bit source: std::mt19937_64 words consumed LSB first.
/// The engine's output sequence is fixed by the C++ standard, so streams are
/// reproducible across platforms and compilers.
class BitSource {
public:
    explicit BitSource(std::uint64_t seed) : gen_(seed) {}

    int next_bit() {
        if (avail_ == 0) {
            word_ = gen_();
            avail_ = 64;
        }
        const int b = static_cast<int>(word_ & 1u);
        word_ >>= 1;
        --avail_;
        return b;
    }

    /// k bits, first-drawn bit in the most significant position.
    std::uint32_t next_bits(int k) {
        std::uint32_t v = 0;
        for (int i = 0; i < k; ++i) v = (v << 1) | static_cast<std::uint32_t>(next_bit());
        return v;
    }

private:
    std::mt19937_64 gen_;
    std::uint64_t word_ = 0;
    int avail_ = 0;
};

/// Per-subband payload generators are decorrelated from one master seed so
/// subbands can be processed in any order (or concurrently) with identical output.
inline std::uint64_t subband_seed(std::uint64_t master, std::size_t subband_index) {
    // splitmix64 step on (master + golden-ratio * (index+1))
    std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(subband_index) + 1u);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace fcofdm
