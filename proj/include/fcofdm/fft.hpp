#pragma once

#include <mutex>
#include <map>

#include "common.hpp"

namespace fcofdm {

namespace detail {

/// Twiddle table for one transform size: w[k] = exp(-i 2 pi k / n), k < n/2.
inline const std::vector<cd>& twiddles(size_t n) {
    static std::map<size_t, std::vector<cd>> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<cd> w(n / 2);
    for (size_t k = 0; k < n / 2; ++k)
        w[k] = std::polar(1.0, -2.0 * pi * static_cast<double>(k) / static_cast<double>(n));
    return cache.emplace(n, std::move(w)).first->second;
}

inline void bit_reverse_permute(cd* data, size_t n) {
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }
}

/// Iterative radix-2 DIT transform, no normalization.
/// inverse=false: X[k] = sum x[q] exp(-i 2 pi k q / n); inverse=true uses +i.
inline void fft_pow2(cd* data, size_t n, bool inverse) {
    if (n <= 1) return;
    if (!is_pow2(static_cast<long>(n))) fail(strf("fft: length %zu is not a power of two", n));
    bit_reverse_permute(data, n);
    const std::vector<cd>& w = twiddles(n);
    for (size_t len = 2; len <= n; len <<= 1) {
        const size_t step = n / len;
        for (size_t blk = 0; blk < n; blk += len) {
            for (size_t k = 0; k < len / 2; ++k) {
                cd tw = w[k * step];
                if (inverse) tw = std::conj(tw);
                const cd u = data[blk + k];
                const cd v = data[blk + k + len / 2] * tw;
                data[blk + k] = u + v;
                data[blk + k + len / 2] = u - v;
            }
        }
    }
}

} // namespace detail

/// Unitary DFT: X[k] = (1/sqrt(n)) sum x[q] exp(-i 2 pi k q / n).
inline void fft_unitary(cvec& v) {
    detail::fft_pow2(v.data(), v.size(), false);
    const double s = 1.0 / std::sqrt(static_cast<double>(v.size()));
    for (cd& x : v) x *= s;
}

/// Unitary inverse DFT: x[q] = (1/sqrt(n)) sum X[k] exp(+i 2 pi k q / n).
inline void ifft_unitary(cvec& v) {
    detail::fft_pow2(v.data(), v.size(), true);
    const double s = 1.0 / std::sqrt(static_cast<double>(v.size()));
    for (cd& x : v) x *= s;
}

/// Raw (unnormalized) DFT, used by the sample-spectrum estimator.
inline void fft_raw(cvec& v) { detail::fft_pow2(v.data(), v.size(), false); }

/// Raw inverse DFT without the customary 1/n.
inline void ifft_raw(cvec& v) { detail::fft_pow2(v.data(), v.size(), true); }

/// Swap halves so index k corresponds to ascending frequency (k - n/2) bins.
inline void fftshift(cvec& v) {
    const size_t h = v.size() / 2;
    for (size_t i = 0; i < h; ++i) std::swap(v[i], v[i + h]);
}

} // namespace fcofdm
