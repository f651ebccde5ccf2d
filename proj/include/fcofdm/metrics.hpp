#pragma once

#include <optional>

#include "cpofdm.hpp"
#include "fft.hpp"

namespace fcofdm::metrics {

inline constexpr double evm_floor_db = -200.0;

/// Per-subcarrier MSE and its average for one symbol set at one timing.
struct EvmResult {
    std::vector<double> mse;   // linear power per subcarrier
    double avg_db = evm_floor_db;
};

struct SetEvm {
    EvmResult low, ref, high;
    long n_evm = 0;                        // EVM window length (low-rate samples)
    std::vector<long> zero_energy_subcarriers;
};

struct EvmReport {
    std::vector<SetEvm> sets;
};

/// Per-subcarrier least-squares gain over each symbol set, inverted on the
/// received grid. A global complex scale or any static per-subcarrier gain
/// drops out of the EVM after this step.
inline cpofdm::GridSymbols zf_equalize(const cpofdm::GridSymbols& received,
                                       const cpofdm::GridSymbols& reference,
                                       const std::vector<std::vector<size_t>>& sets,
                                       std::vector<long>* flagged = nullptr) {
    if (received.symbols.size() != reference.symbols.size())
        fail("zf_equalize: symbol count mismatch");
    cpofdm::GridSymbols out = received;
    if (flagged) flagged->clear();

    for (const auto& set : sets) {
        if (set.empty()) fail("zf_equalize: empty symbol set");
        const size_t l_act = reference.symbols[set.front()].size();
        for (size_t n : set) {
            if (received.symbols[n].size() != l_act || reference.symbols[n].size() != l_act)
                fail("zf_equalize: subcarrier count differs within a symbol set");
        }
        for (size_t sc = 0; sc < l_act; ++sc) {
            cd num = 0.0;
            double den = 0.0;
            for (size_t n : set) {
                num += received.symbols[n][sc] * std::conj(reference.symbols[n][sc]);
                den += std::norm(reference.symbols[n][sc]);
            }
            cd g(1.0, 0.0);
            if (den > 0.0) {
                g = num / den;
            } else if (flagged) {
                flagged->push_back(static_cast<long>(sc));
            }
            if (g == cd(0.0, 0.0)) g = cd(1.0, 0.0);  // nothing received; leave samples as-is
            for (size_t n : set) out.symbols[n][sc] = received.symbols[n][sc] / g;
        }
    }
    return out;
}

/// Per-subcarrier MSE averaged over each symbol set. Expects ZF-equalized input.
inline std::vector<EvmResult> evm_per_set(const cpofdm::GridSymbols& received,
                                          const cpofdm::GridSymbols& reference,
                                          const std::vector<std::vector<size_t>>& sets) {
    if (received.symbols.size() != reference.symbols.size())
        fail("evm_per_set: symbol count mismatch");
    std::vector<EvmResult> out;
    out.reserve(sets.size());
    for (const auto& set : sets) {
        if (set.empty()) fail("evm_per_set: empty symbol set");
        const size_t l_act = reference.symbols[set.front()].size();
        EvmResult r;
        r.mse.assign(l_act, 0.0);
        for (size_t n : set) {
            if (received.symbols[n].size() != l_act || reference.symbols[n].size() != l_act)
                fail("evm_per_set: subcarrier count differs within a symbol set");
            for (size_t sc = 0; sc < l_act; ++sc)
                r.mse[sc] += std::norm(received.symbols[n][sc] - reference.symbols[n][sc]);
        }
        double total = 0.0;
        for (double& v : r.mse) {
            v /= static_cast<double>(set.size());
            total += v;
        }
        r.avg_db = power_db(total / static_cast<double>(l_act), evm_floor_db);
        out.push_back(std::move(r));
    }
    return out;
}

/// Demodulation context for windowed EVM: the received low-rate stream plus
/// the symbol layout and per-symbol active subcarrier counts.
struct DemodContext {
    const cvec* rx = nullptr;
    std::vector<cpofdm::SymbolSpan> spans;
    std::vector<long> l_act;
};

namespace detail {

inline cpofdm::GridSymbols demodulate_grid(const DemodContext& ctx,
                                           const std::vector<long>& tau_per_symbol,
                                           cpofdm::Modulation mod) {
    cpofdm::GridSymbols grid;
    grid.modulation = mod;
    grid.symbols.resize(ctx.spans.size());
    for (size_t n = 0; n < ctx.spans.size(); ++n) {
        const auto& sp = ctx.spans[n];
        if (ctx.l_act[n] == 0) continue;  // silent symbol, nothing to demodulate
        cvec sym(ctx.rx->begin() + sp.start, ctx.rx->begin() + sp.start + sp.length());
        grid.symbols[n] = cpofdm::demodulate_symbol(sym, sp.n_ofdm, sp.n_cp, tau_per_symbol[n], ctx.l_act[n]);
    }
    return grid;
}

} // namespace detail

/// EVM at the reference timing (mid CP) and n_evm/2 samples before and after
/// it, each with its own ZF equalization. n_evm derives from cp_fraction of
/// each symbol's CP; timings are clamped nowhere, an oversized window errors.
inline EvmReport evm_windowed(const DemodContext& ctx, const cpofdm::GridSymbols& reference,
                              const std::vector<std::vector<size_t>>& sets, double cp_fraction = 0.5) {
    if (!ctx.rx) fail("evm_windowed: missing received stream");
    if (cp_fraction < 0.0 || cp_fraction > 1.0)
        fail("evm_windowed: cp_fraction outside [0, 1]");

    const size_t b = ctx.spans.size();
    std::vector<long> tau_low(b), tau_ref(b), tau_high(b), n_evm(b);
    for (size_t n = 0; n < b; ++n) {
        const long l_cp = ctx.spans[n].n_cp;
        n_evm[n] = static_cast<long>(std::floor(cp_fraction * static_cast<double>(l_cp)));
        tau_ref[n] = l_cp / 2;
        tau_low[n] = tau_ref[n] - n_evm[n] / 2;
        tau_high[n] = tau_ref[n] + (n_evm[n] - n_evm[n] / 2);
        if (tau_low[n] < 0 || tau_high[n] > l_cp)
            fail(strf("evm_windowed: window of %ld samples exceeds the CP of %ld", n_evm[n], l_cp));
    }

    EvmReport report;
    report.sets.resize(sets.size());
    const std::vector<long>* taus[3] = {&tau_low, &tau_ref, &tau_high};
    for (int t = 0; t < 3; ++t) {
        cpofdm::GridSymbols rx_grid = detail::demodulate_grid(ctx, *taus[t], reference.modulation);
        std::vector<long> flagged;
        cpofdm::GridSymbols eq = zf_equalize(rx_grid, reference, sets, &flagged);
        std::vector<EvmResult> res = evm_per_set(eq, reference, sets);
        for (size_t s = 0; s < sets.size(); ++s) {
            SetEvm& se = report.sets[s];
            (t == 0 ? se.low : t == 1 ? se.ref : se.high) = std::move(res[s]);
            if (t == 1) se.zero_energy_subcarriers = flagged;
        }
    }
    for (size_t s = 0; s < sets.size(); ++s) {
        long m = std::numeric_limits<long>::max();
        for (size_t n : sets[s]) m = std::min(m, n_evm[n]);
        report.sets[s].n_evm = m;
    }
    return report;
}

/// Sample spectrum. Values are stored in dB in ascending-frequency order
/// (bin k sits at (k - n_psd/2) * rbw); linear scale is the periodogram
/// |DFT|^2 / n_psd, so the values sum to the signal energy.
struct PsdEstimate {
    std::vector<double> values_db;
    double rbw = 0.0;
    double mbw = 0.0;       // 0 = unsmoothed
    long n_psd = 0;
    double f_s = 0.0;
    std::optional<double> dbm_offset;  // add to values_db for absolute dBm per bin

    double freq_at(long k) const { return (static_cast<double>(k) - static_cast<double>(n_psd) / 2.0) * rbw; }

    long bin_at(double f) const {
        const long k = std::lround(f / rbw + static_cast<double>(n_psd) / 2.0);
        if (k < 0 || k >= n_psd) fail(strf("frequency %.9g Hz outside the sampled band", f));
        return k;
    }

    std::vector<double> linear() const {
        std::vector<double> lin(values_db.size());
        for (size_t i = 0; i < lin.size(); ++i) lin[i] = db_to_linear(values_db[i]);
        return lin;
    }
};

inline PsdEstimate psd_estimate(const cvec& z, long n_psd, double f_s) {
    if (!is_pow2(n_psd)) fail("psd_estimate: transform length must be a power of two");
    if (n_psd < static_cast<long>(z.size()))
        fail(strf("psd_estimate: transform length %ld shorter than the signal (%zu)", n_psd, z.size()));
    cvec buf(static_cast<size_t>(n_psd), cd(0.0));
    std::copy(z.begin(), z.end(), buf.begin());
    fft_raw(buf);
    fftshift(buf);
    PsdEstimate s;
    s.n_psd = n_psd;
    s.f_s = f_s;
    s.rbw = f_s / static_cast<double>(n_psd);
    s.values_db.resize(static_cast<size_t>(n_psd));
    for (long k = 0; k < n_psd; ++k)
        s.values_db[static_cast<size_t>(k)] = power_db(std::norm(buf[static_cast<size_t>(k)]) / static_cast<double>(n_psd));
    return s;
}

/// Circular moving average over round(mbw / rbw) bins, realized in the
/// transform domain with a rectangular kernel.
inline PsdEstimate psd_smooth(const PsdEstimate& s, double mbw) {
    if (mbw < s.rbw) fail(strf("psd_smooth: measurement bandwidth %.9g below the resolution %.9g", mbw, s.rbw));
    const long n_avg = std::max<long>(std::lround(mbw / s.rbw), 1);
    PsdEstimate out = s;
    out.mbw = mbw;
    if (n_avg == 1) return out;

    const long n = s.n_psd;
    cvec sig(static_cast<size_t>(n)), ker(static_cast<size_t>(n), cd(0.0));
    const std::vector<double> lin = s.linear();
    for (long k = 0; k < n; ++k) sig[static_cast<size_t>(k)] = lin[static_cast<size_t>(k)];
    for (long j = 0; j < (n_avg + 1) / 2; ++j) ker[static_cast<size_t>(j)] = 1.0;
    for (long j = 0; j < n_avg / 2; ++j) ker[static_cast<size_t>(n - 1 - j)] = 1.0;

    fft_raw(sig);
    fft_raw(ker);
    for (long k = 0; k < n; ++k) sig[static_cast<size_t>(k)] *= ker[static_cast<size_t>(k)];
    ifft_raw(sig);
    const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(n_avg));
    for (long k = 0; k < n; ++k)
        out.values_db[static_cast<size_t>(k)] = power_db(std::max(sig[static_cast<size_t>(k)].real(), 0.0) * scale);
    return out;
}

/// Smoothed PSD at the channel edges relative to the mean in-band level, dB.
/// In-band means the central 90 % of the channel.
inline double channel_edge_level(const PsdEstimate& s, double f_ch_bw) {
    if (s.mbw <= 0.0) fail("channel_edge_level: needs a smoothed estimate");
    const long k_lo = s.bin_at(-f_ch_bw / 2.0);
    const long k_hi = s.bin_at(+f_ch_bw / 2.0);
    const double edge_db = std::max(s.values_db[static_cast<size_t>(k_lo)],
                                    s.values_db[static_cast<size_t>(k_hi)]);
    double acc = 0.0;
    long count = 0;
    for (long k = 0; k < s.n_psd; ++k) {
        if (std::abs(s.freq_at(k)) <= 0.45 * f_ch_bw) {
            acc += db_to_linear(s.values_db[static_cast<size_t>(k)]);
            ++count;
        }
    }
    if (count == 0) fail("channel_edge_level: no in-band bins");
    return edge_db - power_db(acc / static_cast<double>(count));
}

/// Anchor the dB scale so the power integrated over [f_lo, f_hi] equals
/// p_max_dbm. Call on the raw estimate before smoothing and mask checks.
inline void calibrate_dbm(PsdEstimate& s, double p_max_dbm, double f_lo, double f_hi) {
    double total = 0.0;
    for (long k = 0; k < s.n_psd; ++k) {
        const double f = s.freq_at(k);
        if (f >= f_lo && f <= f_hi) total += db_to_linear(s.values_db[static_cast<size_t>(k)]);
    }
    if (!(total > 0.0)) fail("calibrate_dbm: no in-band power");
    s.dbm_offset = p_max_dbm - power_db(total);
}

/// Piecewise-linear unwanted-emission limit versus offset from the channel edge.
struct EmissionMask {
    std::vector<std::pair<double, double>> points;  // (offset Hz, limit dBm per MBW), ascending offsets
    double channel_edge_hz = 0.0;
    double mbw = 0.0;

    /// Base-station limits: -7 dBm/MBW at MBW/2 from the edge, falling linearly
    /// to -14 dBm at 5 MHz + MBW/2, then flat out to 10 MHz + MBW/2.
    static EmissionMask default_obue(double f_ch_bw, double mbw) {
        EmissionMask m;
        m.channel_edge_hz = f_ch_bw / 2.0;
        m.mbw = mbw;
        m.points = {{mbw / 2.0, -7.0}, {5e6 + mbw / 2.0, -14.0}, {10e6 + mbw / 2.0, -14.0}};
        return m;
    }

    double limit_at(double offset) const {
        for (size_t i = 0; i + 1 < points.size(); ++i) {
            if (offset >= points[i].first && offset <= points[i + 1].first) {
                const double t = (offset - points[i].first) / (points[i + 1].first - points[i].first);
                return points[i].second + t * (points[i + 1].second - points[i].second);
            }
        }
        fail("EmissionMask: offset outside the mask range");
    }
};

struct MaskReport {
    double worst_margin_db = 0.0;   // positive = pass everywhere
    std::optional<double> first_violation_offset_hz;
    bool pass = true;
    long bins_checked = 0;
};

/// Compare a smoothed, dBm-calibrated estimate against the mask. Offsets
/// beyond the sampled band are not evaluated.
inline MaskReport mask_check(const PsdEstimate& s, const EmissionMask& mask) {
    if (!s.dbm_offset) fail("mask_check: estimate is not dBm-calibrated");
    if (s.mbw <= 0.0) fail("mask_check: estimate is not smoothed");
    if (std::abs(s.mbw - mask.mbw) > 1e-6 * mask.mbw)
        fail(strf("mask_check: estimate smoothed at %.9g Hz but the mask uses %.9g Hz", s.mbw, mask.mbw));
    const long n_avg = std::max<long>(std::lround(s.mbw / s.rbw), 1);
    const double per_mbw = *s.dbm_offset + 10.0 * std::log10(static_cast<double>(n_avg));

    MaskReport rep;
    rep.worst_margin_db = std::numeric_limits<double>::infinity();
    const double off_min = mask.points.front().first;
    const double off_max = mask.points.back().first;
    for (long k = 0; k < s.n_psd; ++k) {
        const double offset = std::abs(s.freq_at(k)) - mask.channel_edge_hz;
        if (offset < off_min || offset > off_max) continue;
        const double measured = s.values_db[static_cast<size_t>(k)] + per_mbw;
        const double margin = mask.limit_at(offset) - measured;
        ++rep.bins_checked;
        if (margin < rep.worst_margin_db) rep.worst_margin_db = margin;
        if (margin < 0.0 && (!rep.first_violation_offset_hz || offset < *rep.first_violation_offset_hz))
            rep.first_violation_offset_hz = offset;
    }
    if (rep.bins_checked == 0) fail("mask_check: no bins fall inside the mask range");
    rep.pass = rep.worst_margin_db >= 0.0;
    return rep;
}

} // namespace fcofdm::metrics
