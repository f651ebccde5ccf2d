#pragma once

#include "fft.hpp"
#include "numerology.hpp"

namespace fcofdm::cpofdm {

enum class Modulation { qpsk, qam16, qam64, qam256 };

inline int bits_per_symbol(Modulation m) {
    switch (m) {
        case Modulation::qpsk: return 2;
        case Modulation::qam16: return 4;
        case Modulation::qam64: return 6;
        case Modulation::qam256: return 8;
    }
    fail("unknown modulation");
}

inline const char* modulation_name(Modulation m) {
    switch (m) {
        case Modulation::qpsk: return "qpsk";
        case Modulation::qam16: return "16qam";
        case Modulation::qam64: return "64qam";
        case Modulation::qam256: return "256qam";
    }
    fail("unknown modulation");
}

inline Modulation modulation_from_name(const std::string& s) {
    if (s == "qpsk") return Modulation::qpsk;
    if (s == "16qam") return Modulation::qam16;
    if (s == "64qam") return Modulation::qam64;
    if (s == "256qam") return Modulation::qam256;
    fail("unknown modulation '" + s + "' (expected qpsk|16qam|64qam|256qam)");
}

namespace detail {

/// Gray-coded PAM level for k bits: 0..2^k-1 bits -> odd level in [-(2^k-1), +(2^k-1)].
inline int gray_pam_level(std::uint32_t bits, int k) {
    // binary-reflected Gray decode, then map index 0..M-1 to level -(M-1)..(M-1)
    std::uint32_t idx = bits;
    for (std::uint32_t shift = 1u; shift < static_cast<std::uint32_t>(k); shift <<= 1)
        idx ^= idx >> shift;
    const int m = 1 << k;
    return 2 * static_cast<int>(idx) - (m - 1);
}

} // namespace detail

/// Map bits to one unit-average-power constellation point. Square QAM with
/// Gray coding per axis; the first half of the bits selects I, the second Q.
inline cd map_symbol(BitSource& bits, Modulation mod) {
    const int k = bits_per_symbol(mod) / 2;
    const int i_level = detail::gray_pam_level(bits.next_bits(k), k);
    const int q_level = detail::gray_pam_level(bits.next_bits(k), k);
    // E{level^2} per axis = (M^2 - 1) / 3 for M = 2^k levels
    const int m = 1 << k;
    const double scale = 1.0 / std::sqrt(2.0 * (static_cast<double>(m) * m - 1.0) / 3.0);
    return cd(i_level * scale, q_level * scale);
}

/// Frequency-domain payload per symbol plus the modulation it was drawn from.
struct GridSymbols {
    std::vector<cvec> symbols;  // symbols[n] has length l_act of symbol n
    Modulation modulation = Modulation::qpsk;
};

struct SymbolSpan {
    long start = 0;   // index of the first CP sample in the stream
    long n_ofdm = 0;
    long n_cp = 0;
    long length() const { return n_ofdm + n_cp; }
    long payload_start() const { return start + n_cp; }
};

/// Serial CP-OFDM sample stream with per-symbol extents.
struct LowRateWaveform {
    cvec samples;
    std::vector<SymbolSpan> spans;

    std::vector<long> boundaries() const {
        std::vector<long> b(spans.size());
        for (size_t i = 0; i < spans.size(); ++i) b[i] = spans[i].start;
        return b;
    }
};

/// Smallest usable OFDM transform for l_act subcarriers: next power of two,
/// floored at 128 so the 9/128 CP stays integral.
inline long min_transform_length(long l_act) {
    if (l_act < 1) fail("min_transform_length: need at least one subcarrier");
    long n = 128;
    while (n < l_act) n <<= 1;
    return n;
}

namespace detail {

/// Half-bin centering phase: active subcarriers sit at frequencies
/// (p - l_act/2) * f_scs; for odd l_act this is a half-bin offset. The angle
/// is an exact multiple of pi / l, reduced in integers to keep it small.
inline void apply_centering_phase(cvec& t, long l_act, double sign) {
    const long l = static_cast<long>(t.size());
    for (long q = 0; q < l; ++q) {
        const long r = (q * (l_act % (2 * l))) % (2 * l);
        t[q] *= std::polar(1.0, sign * -pi * static_cast<double>(r) / static_cast<double>(l));
    }
}

} // namespace detail

/// One CP-OFDM symbol: pruned unitary IDFT with subcarriers centered on DC,
/// CP = last l_cp payload samples copied in front.
inline cvec modulate_symbol(const cvec& x, long l_ofdm, long l_cp) {
    const long l_act = static_cast<long>(x.size());
    if (l_act > l_ofdm) fail(strf("modulate_symbol: %ld subcarriers exceed transform length %ld", l_act, l_ofdm));
    if (l_cp >= l_ofdm) fail(strf("modulate_symbol: CP %ld must be shorter than the transform %ld", l_cp, l_ofdm));

    cvec payload(static_cast<size_t>(l_ofdm), cd(0.0));
    std::copy(x.begin(), x.end(), payload.begin());
    ifft_unitary(payload);
    detail::apply_centering_phase(payload, l_act, +1.0);

    cvec out(static_cast<size_t>(l_ofdm + l_cp));
    std::copy(payload.end() - l_cp, payload.end(), out.begin());
    std::copy(payload.begin(), payload.end(), out.begin() + l_cp);
    return out;
}

/// Concatenate per-symbol outputs following a (low-rate) numerology plan.
inline LowRateWaveform modulate_subband(const GridSymbols& grid, const numerology::NumerologyPlan& plan) {
    if (grid.symbols.size() != plan.symbols.size())
        fail(strf("modulate_subband: %zu grid symbols vs %zu plan symbols",
                  grid.symbols.size(), plan.symbols.size()));
    LowRateWaveform wf;
    wf.spans.reserve(plan.symbols.size());
    long pos = 0;
    for (size_t n = 0; n < plan.symbols.size(); ++n) {
        const auto& s = plan.symbols[n];
        cvec sym = grid.symbols[n].empty()
                       ? cvec(static_cast<size_t>(s.n_ofdm + s.n_cp), cd(0.0))
                       : modulate_symbol(grid.symbols[n], s.n_ofdm, s.n_cp);
        wf.spans.push_back({pos, s.n_ofdm, s.n_cp});
        wf.samples.insert(wf.samples.end(), sym.begin(), sym.end());
        pos += s.n_ofdm + s.n_cp;
    }
    return wf;
}

/// Demodulate one symbol. tau moves the sampling instant inside the CP:
/// the transform window starts at (l_cp - tau) and the induced circular
/// shift is compensated, so on an ideal link any tau in [0, l_cp] is exact.
inline cvec demodulate_symbol(const cvec& y, long l_ofdm, long l_cp, long tau, long l_act) {
    if (static_cast<long>(y.size()) != l_ofdm + l_cp)
        fail(strf("demodulate_symbol: got %zu samples, expected %ld", y.size(), l_ofdm + l_cp));
    if (tau < 0 || tau > l_cp) fail(strf("demodulate_symbol: tau %ld outside [0, %ld]", tau, l_cp));
    if (l_act > l_ofdm) fail("demodulate_symbol: l_act exceeds transform length");

    cvec t(static_cast<size_t>(l_ofdm));
    const long start = l_cp - tau;
    // gather window and undo the circular shift in one pass: t[q] = w[(q+tau) mod l]
    for (long q = 0; q < l_ofdm; ++q)
        t[q] = y[static_cast<size_t>(start + (q + tau) % l_ofdm)];
    detail::apply_centering_phase(t, l_act, -1.0);
    fft_unitary(t);
    t.resize(static_cast<size_t>(l_act));
    return t;
}

/// Raised-cosine edge ramp used by the WOLA baseline; w(i) + w(l-1-i) = 1.
inline double wola_ramp(long i, long l_ext) {
    const double s = std::sin(pi * (static_cast<double>(i) + 0.5) / (2.0 * static_cast<double>(l_ext)));
    return s * s;
}

/// WOLA-shaped copy of a CP-OFDM stream: every symbol is cyclically extended
/// by l_ext on both sides, edge-ramped, and overlap-added with its neighbors.
/// Output has l_ext extra transient samples at the head and the tail; index
/// l_ext of the output corresponds to index 0 of the input.
inline cvec wola_shape(const LowRateWaveform& y, long l_ext) {
    if (l_ext == 0) return y.samples;
    for (const auto& sp : y.spans)
        if (l_ext > sp.n_cp / 2)
            fail(strf("wola_shape: extension %ld exceeds half the CP length %ld", l_ext, sp.n_cp));

    cvec out(y.samples.size() + 2 * static_cast<size_t>(l_ext), cd(0.0));
    for (const auto& sp : y.spans) {
        const cd* payload = y.samples.data() + sp.payload_start();
        const long l = sp.n_ofdm;
        // head: cyclic continuation before the CP, ramped up
        for (long i = 0; i < l_ext; ++i) {
            const long src = ((l - sp.n_cp - l_ext + i) % l + l) % l;
            out[static_cast<size_t>(sp.start + i)] += payload[src] * wola_ramp(i, l_ext);
        }
        // body passes through unweighted
        for (long i = 0; i < sp.length(); ++i)
            out[static_cast<size_t>(sp.start + l_ext + i)] += y.samples[static_cast<size_t>(sp.start + i)];
        // tail: cyclic continuation after the payload, ramped down
        for (long i = 0; i < l_ext; ++i)
            out[static_cast<size_t>(sp.start + l_ext + sp.length() + i)] +=
                payload[i % l] * wola_ramp(l_ext - 1 - i, l_ext);
    }
    return out;
}

/// Receiver-side WOLA: a soft-edged window of length l_ofdm + 2*l_ext is
/// folded back onto one transform length before the pruned DFT. The fold
/// weights are complementary, so an ideal link stays exact. Needs
/// l_ext <= tau and tau + l_ext <= l_cp.
inline cvec wola_demodulate_symbol(const cvec& y, long l_ofdm, long l_cp, long tau, long l_ext, long l_act) {
    if (static_cast<long>(y.size()) != l_ofdm + l_cp)
        fail("wola_demodulate_symbol: sample count mismatch");
    if (l_ext < 0 || l_ext > tau || tau + l_ext > l_cp)
        fail(strf("wola_demodulate_symbol: need l_ext <= tau and tau + l_ext <= l_cp (l_ext %ld, tau %ld, cp %ld)",
                  l_ext, tau, l_cp));
    if (l_ext == 0) return demodulate_symbol(y, l_ofdm, l_cp, tau, l_act);

    const long start = l_cp - tau - l_ext;  // window start inside the symbol
    cvec v(static_cast<size_t>(l_ofdm), cd(0.0));
    for (long q = 0; q < l_ofdm; ++q) v[q] = y[static_cast<size_t>(start + q)];
    for (long q = 0; q < 2 * l_ext; ++q) {
        const double u = wola_ramp(q, 2 * l_ext);
        v[q] = v[q] * u + y[static_cast<size_t>(start + q + l_ofdm)] * (1.0 - u);
    }
    // the fold leaves the payload circularly shifted by tau + l_ext
    const long shift = tau + l_ext;
    cvec t(static_cast<size_t>(l_ofdm));
    for (long q = 0; q < l_ofdm; ++q) t[q] = v[static_cast<size_t>((q + shift) % l_ofdm)];
    detail::apply_centering_phase(t, l_act, -1.0);
    fft_unitary(t);
    t.resize(static_cast<size_t>(l_act));
    return t;
}

} // namespace fcofdm::cpofdm
