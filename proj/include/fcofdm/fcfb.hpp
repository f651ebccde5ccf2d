#pragma once

#include "fft.hpp"
#include "numerology.hpp"
#include "specwin.hpp"

namespace fcofdm::fcfb {

enum class Scheme { ola, ols };

inline const char* scheme_name(Scheme s) { return s == Scheme::ola ? "ola" : "ols"; }

inline Scheme scheme_from_name(const std::string& s) {
    if (s == "ola") return Scheme::ola;
    if (s == "ols") return Scheme::ols;
    fail("unknown scheme '" + s + "' (expected ola|ols)");
}

/// Transform geometry of one subband's block processing.
struct FcConfig {
    long n_long = 0;    // inverse-transform length N (output side)
    long l_short = 0;   // forward-transform length L (input side)
    double f_s = 0.0;   // output sample rate
    Scheme scheme = Scheme::ols;

    long interp() const { return n_long / l_short; }
    double bin_spacing() const { return f_s / static_cast<double>(n_long); }
    double low_rate() const { return f_s / static_cast<double>(interp()); }

    void validate() const {
        if (!is_pow2(n_long) || !is_pow2(l_short))
            fail("FcConfig: transform lengths must be powers of two");
        if (l_short < 256)
            fail(strf("FcConfig: forward transform %ld below the minimum 256", l_short));
        if (n_long % l_short != 0)
            fail(strf("FcConfig: %ld does not divide %ld", l_short, n_long));
    }
};

/// One overlapped processing block on the low-rate stream. The payload
/// (non-overlapping part) survives to the output exactly once; the leading
/// and tailing parts absorb the circular-convolution transients.
struct Block {
    long l_s = 0;           // non-overlap length
    long l_l = 0;           // leading overlap
    long l_t = 0;           // tailing overlap
    long payload_start = 0; // low-rate index where the payload begins
    long p = 0;             // low-rate input start (payload_start - l_l, may be negative)
    long q = 0;             // high-rate output start (interp * p)
};

struct BlockSchedule {
    std::vector<Block> blocks;
    long l_samp = 0;        // low-rate samples covered
    long r_per_hsf = 0;
    long pad_head = 0;      // zero padding before the stream (= blocks[0].l_l)
    long pad_tail = 0;      // zero padding after the stream (= blocks.back().l_t)

    long padded_length() const { return l_samp + pad_head + pad_tail; }
};

/// Base non-overlap per block. With power-of-two L >= 256 this is the integer
/// L * 137 / 256; the printed 2^beta form with beta = log2(L) - 8 is identical
/// and reproduces both the worked 548-sample case and the block-count table.
inline long base_payload_length(long l_short) {
    if (l_short % 256 != 0) fail(strf("base payload undefined for L = %ld", l_short));
    return l_short / 256 * 137;
}

/// Lay out the overlapped blocks over r_hsf half subframes of n_hsf_low
/// low-rate samples each. The first block of every half subframe takes the
/// alpha_low excess into its payload; all others share the base length.
inline BlockSchedule make_schedule(const FcConfig& cfg, long n_hsf_low, long alpha_low, int r_hsf) {
    cfg.validate();
    const long base = base_payload_length(cfg.l_short);
    if ((n_hsf_low - alpha_low) % base != 0)
        fail(strf("half subframe of %ld low-rate samples (alpha %ld) is not tileable by %ld-sample payloads",
                  n_hsf_low, alpha_low, base));
    BlockSchedule sched;
    sched.r_per_hsf = (n_hsf_low - alpha_low) / base;
    sched.l_samp = static_cast<long>(r_hsf) * n_hsf_low;
    sched.blocks.reserve(static_cast<size_t>(sched.r_per_hsf) * r_hsf);

    long pos = 0;
    for (int h = 0; h < r_hsf; ++h) {
        for (long j = 0; j < sched.r_per_hsf; ++j) {
            Block b;
            b.l_s = base + (j == 0 ? alpha_low : 0);
            b.l_l = (cfg.l_short - b.l_s + 1) / 2;   // ceil((L - l_s)/2)
            b.l_t = cfg.l_short - b.l_s - b.l_l;
            b.payload_start = pos;
            b.p = pos - b.l_l;
            b.q = cfg.interp() * b.p;
            sched.blocks.push_back(b);
            pos += b.l_s;
        }
    }
    if (pos != sched.l_samp) fail("internal: schedule does not tile the stream");
    sched.pad_head = sched.blocks.front().l_l;
    sched.pad_tail = sched.blocks.back().l_t;
    return sched;
}

/// Schedule synchronized to a low-rate symbol plan. Verifies rate consistency
/// against the high-rate configuration and that every CP-OFDM symbol boundary
/// lands on a block payload boundary.
inline BlockSchedule plan_schedule(const FcConfig& cfg, const numerology::NumerologyPlan& low_plan,
                                   int r_hsf) {
    cfg.validate();
    if (r_hsf != low_plan.r_hsf)
        fail(strf("plan_schedule: plan covers %d half subframes, %d requested", low_plan.r_hsf, r_hsf));
    const long i_m = cfg.interp();
    const long n_hsf_high = numerology::half_subframe_samples(cfg.f_s);
    if (n_hsf_high % i_m != 0 || n_hsf_high / i_m != low_plan.n_hsf)
        fail(strf("plan_schedule: plan rate mismatch, %ld high-rate samples per half subframe vs "
                  "%ld x %ld", n_hsf_high, i_m, low_plan.n_hsf));
    const long alpha_high = n_hsf_high % numerology::cp_units;
    if (alpha_high % i_m != 0)
        fail(strf("plan_schedule: alpha %ld not divisible by the interpolation factor %ld", alpha_high, i_m));
    if (low_plan.alpha * i_m != alpha_high)
        fail(strf("plan_schedule: low-rate alpha %ld inconsistent with high-rate alpha %ld / %ld",
                  low_plan.alpha, alpha_high, i_m));

    BlockSchedule sched = make_schedule(cfg, low_plan.n_hsf, low_plan.alpha, r_hsf);

    // symbol synchronism: each symbol start must be some block's payload start
    size_t bi = 0;
    long sym_pos = 0;
    for (size_t n = 0; n < low_plan.symbols.size(); ++n) {
        while (bi < sched.blocks.size() && sched.blocks[bi].payload_start < sym_pos) ++bi;
        if (bi >= sched.blocks.size() || sched.blocks[bi].payload_start != sym_pos)
            fail(strf("plan_schedule: symbol %zu starting at low-rate sample %ld is not aligned to a "
                      "block payload boundary (bin spacing too coarse for this numerology)", n, sym_pos));
        sym_pos += low_plan.symbols[n].n_ofdm + low_plan.symbols[n].n_cp;
    }
    return sched;
}

/// Frequency translation of one block: the L shifted-order bins land on N-grid
/// bins starting at dest_start, and the whole block is rotated so that the
/// blockwise shift equals one continuous modulation across block boundaries.
struct BinMapping {
    long bin_offset = 0;   // c, subband center in bins of the N grid
    long out_start = 0;    // q of the block this mapping serves
    long dest_start = 0;   // (c - L/2) mod N

    static BinMapping make(const FcConfig& cfg, long bin_offset, long out_start) {
        BinMapping m;
        m.bin_offset = bin_offset;
        m.out_start = out_start;
        const long n = cfg.n_long;
        m.dest_start = ((bin_offset - cfg.l_short / 2) % n + n) % n;
        return m;
    }
};

namespace detail {

inline cd continuity_phase(long bin_offset, long out_start, long n_long) {
    // the angle is an exact multiple of 2 pi / N; reduce in integers first
    const long r = ((bin_offset % n_long) * (out_start % n_long) % n_long + n_long) % n_long;
    return std::polar(1.0, 2.0 * pi * static_cast<double>(r) / static_cast<double>(n_long));
}

inline void mask_range(cvec& v, long keep_begin, long keep_end) {
    for (long i = 0; i < static_cast<long>(v.size()); ++i)
        if (i < keep_begin || i >= keep_end) v[static_cast<size_t>(i)] = cd(0.0);
}

} // namespace detail

/// One block through the synthesis bank: analysis time window, short unitary
/// FFT, shift, frequency window, bin mapping with continuity rotation, long
/// unitary IFFT, synthesis time window, interpolation gain sqrt(N/L).
inline cvec synthesize_block(const cvec& block, const specwin::FreqWindow& window,
                             const BinMapping& map, const FcConfig& cfg, const Block& geom) {
    const long l = cfg.l_short;
    const long n = cfg.n_long;
    if (static_cast<long>(block.size()) != l)
        fail(strf("synthesize_block: block length %zu vs forward transform %ld", block.size(), l));
    if (window.length() != l)
        fail(strf("synthesize_block: window length %ld vs forward transform %ld", window.length(), l));

    cvec buf = block;
    if (cfg.scheme == Scheme::ola)
        detail::mask_range(buf, geom.l_l, geom.l_l + geom.l_s);
    fft_unitary(buf);
    fftshift(buf);

    cvec out(static_cast<size_t>(n), cd(0.0));
    const cd rot = detail::continuity_phase(map.bin_offset, map.out_start, n);
    for (long k = 0; k < l; ++k) {
        const long dst = (map.dest_start + k) % n;
        out[static_cast<size_t>(dst)] = buf[static_cast<size_t>(k)] * window.d[static_cast<size_t>(k)] * rot;
    }
    ifft_unitary(out);

    const double gain = std::sqrt(static_cast<double>(n) / static_cast<double>(l));
    for (cd& v : out) v *= gain;
    if (cfg.scheme == Scheme::ols) {
        const long i_m = cfg.interp();
        detail::mask_range(out, i_m * geom.l_l, i_m * (geom.l_l + geom.l_s));
    }
    return out;
}

namespace detail {

inline void check_per_block(size_t count, size_t blocks, const char* what) {
    if (count != 1 && count != blocks)
        fail(strf("%s: expected 1 or %zu entries, got %zu", what, blocks, count));
}

template <typename T>
const T& per_block(const std::vector<T>& v, size_t r) {
    return v.size() == 1 ? v.front() : v[r];
}

} // namespace detail

/// Run the whole subband through the bank. windows / bin_offsets hold either
/// one shared entry or one per block. Output length interp * l_samp; the
/// leading/tailing transients that fall outside the stream are dropped.
inline cvec synthesize_subband(const cvec& y, const BlockSchedule& sched,
                               const std::vector<specwin::FreqWindow>& windows,
                               const std::vector<long>& bin_offsets, const FcConfig& cfg) {
    if (static_cast<long>(y.size()) != sched.l_samp)
        fail(strf("synthesize_subband: stream length %zu vs schedule %ld", y.size(), sched.l_samp));
    detail::check_per_block(windows.size(), sched.blocks.size(), "windows");
    detail::check_per_block(bin_offsets.size(), sched.blocks.size(), "bin offsets");

    const long i_m = cfg.interp();
    const long out_len = i_m * sched.l_samp;
    cvec out(static_cast<size_t>(out_len), cd(0.0));
    cvec in(static_cast<size_t>(cfg.l_short));

    for (size_t r = 0; r < sched.blocks.size(); ++r) {
        const Block& b = sched.blocks[r];
        for (long j = 0; j < cfg.l_short; ++j) {
            const long idx = b.p + j;
            in[static_cast<size_t>(j)] =
                (idx >= 0 && idx < sched.l_samp) ? y[static_cast<size_t>(idx)] : cd(0.0);
        }
        const long c = detail::per_block(bin_offsets, r);
        const BinMapping map = BinMapping::make(cfg, c, b.q);
        const cvec blk = synthesize_block(in, detail::per_block(windows, r), map, cfg, b);
        // OLS blocks are already masked to their payload, so plain accumulation
        // composes both schemes
        for (long j = 0; j < cfg.n_long; ++j) {
            const long pos = b.q + j;
            if (pos >= 0 && pos < out_len) out[static_cast<size_t>(pos)] += blk[static_cast<size_t>(j)];
        }
    }
    return out;
}

/// Sum of equal-length subband waveforms.
inline cvec combine_subbands(const std::vector<cvec>& subband_waveforms) {
    if (subband_waveforms.empty()) fail("combine_subbands: no subbands");
    cvec out = subband_waveforms.front();
    for (size_t m = 1; m < subband_waveforms.size(); ++m) {
        if (subband_waveforms[m].size() != out.size())
            fail(strf("combine_subbands: length mismatch, %zu vs %zu",
                      subband_waveforms[m].size(), out.size()));
        for (size_t i = 0; i < out.size(); ++i) out[i] += subband_waveforms[m][i];
    }
    return out;
}

/// Hermitian adjoint of the synthesis bank, streamed blockwise: long forward
/// FFT, conjugate window and de-mapping, short inverse FFT, scatter-add.
/// Returns the padded low-rate stream (pad_head zeros' worth of transient in
/// front, pad_tail after); passband gain is interp().
inline cvec analyze_subband_padded(const cvec& z, const BlockSchedule& sched,
                                   const std::vector<specwin::FreqWindow>& windows,
                                   const std::vector<long>& bin_offsets, const FcConfig& cfg) {
    const long i_m = cfg.interp();
    const long in_len = i_m * sched.l_samp;
    if (static_cast<long>(z.size()) != in_len)
        fail(strf("analyze_subband: stream length %zu vs schedule %ld", z.size(), in_len));
    detail::check_per_block(windows.size(), sched.blocks.size(), "windows");
    detail::check_per_block(bin_offsets.size(), sched.blocks.size(), "bin offsets");

    const long l = cfg.l_short;
    const long n = cfg.n_long;
    const double gain = std::sqrt(static_cast<double>(n) / static_cast<double>(l));
    cvec out(static_cast<size_t>(sched.padded_length()), cd(0.0));
    cvec zin(static_cast<size_t>(n));
    cvec buf(static_cast<size_t>(l));

    for (size_t r = 0; r < sched.blocks.size(); ++r) {
        const Block& b = sched.blocks[r];
        for (long j = 0; j < n; ++j) {
            const long idx = b.q + j;
            zin[static_cast<size_t>(j)] =
                (idx >= 0 && idx < in_len) ? z[static_cast<size_t>(idx)] : cd(0.0);
        }
        if (cfg.scheme == Scheme::ols)
            detail::mask_range(zin, i_m * b.l_l, i_m * (b.l_l + b.l_s));
        fft_unitary(zin);

        const long c = detail::per_block(bin_offsets, r);
        const BinMapping map = BinMapping::make(cfg, c, b.q);
        const cd rot = std::conj(detail::continuity_phase(c, b.q, n));
        const specwin::FreqWindow& win = detail::per_block(windows, r);
        for (long k = 0; k < l; ++k) {
            const long src = (map.dest_start + k) % n;
            buf[static_cast<size_t>(k)] =
                zin[static_cast<size_t>(src)] * std::conj(win.d[static_cast<size_t>(k)]) * rot;
        }
        fftshift(buf);
        ifft_unitary(buf);
        if (cfg.scheme == Scheme::ola)
            detail::mask_range(buf, b.l_l, b.l_l + b.l_s);

        const long base = b.p + sched.pad_head;  // position in the padded stream
        for (long j = 0; j < l; ++j)
            out[static_cast<size_t>(base + j)] += buf[static_cast<size_t>(j)] * gain;
    }
    return out;
}

/// Analysis bank output aligned with the un-padded low-rate stream.
inline cvec analyze_subband(const cvec& z, const BlockSchedule& sched,
                            const std::vector<specwin::FreqWindow>& windows,
                            const std::vector<long>& bin_offsets, const FcConfig& cfg) {
    cvec padded = analyze_subband_padded(z, sched, windows, bin_offsets, cfg);
    return cvec(padded.begin() + sched.pad_head, padded.begin() + sched.pad_head + sched.l_samp);
}

/// Explicit matrix of the whole block-diagonal synthesis operator, rows over
/// the high-rate output and columns over the zero-padded low-rate input.
/// Built from literal DFT sums, independent of the streaming FFT path.
struct DenseOperator {
    long rows = 0;
    long cols = 0;
    std::vector<cd> m;  // row-major

    cvec apply(const cvec& padded_input) const {
        if (static_cast<long>(padded_input.size()) != cols) fail("DenseOperator: input length mismatch");
        cvec out(static_cast<size_t>(rows), cd(0.0));
        for (long i = 0; i < rows; ++i) {
            cd acc = 0.0;
            const cd* row = m.data() + static_cast<size_t>(i) * static_cast<size_t>(cols);
            for (long j = 0; j < cols; ++j) acc += row[static_cast<size_t>(j)] * padded_input[static_cast<size_t>(j)];
            out[static_cast<size_t>(i)] = acc;
        }
        return out;
    }
};

inline DenseOperator dense_operator(const BlockSchedule& sched,
                                    const std::vector<specwin::FreqWindow>& windows,
                                    const std::vector<long>& bin_offsets, const FcConfig& cfg,
                                    long output_cap = 16384) {
    detail::check_per_block(windows.size(), sched.blocks.size(), "windows");
    detail::check_per_block(bin_offsets.size(), sched.blocks.size(), "bin offsets");
    const long i_m = cfg.interp();
    const long l = cfg.l_short;
    const long n = cfg.n_long;
    DenseOperator op;
    op.rows = i_m * sched.l_samp;
    op.cols = sched.padded_length();
    if (op.rows > output_cap)
        fail(strf("dense_operator: output length %ld exceeds the cap %ld", op.rows, output_cap));
    op.m.assign(static_cast<size_t>(op.rows) * static_cast<size_t>(op.cols), cd(0.0));

    // unit-root tables, evaluated directly
    std::vector<cd> roots_n(static_cast<size_t>(n)), roots_l(static_cast<size_t>(l));
    for (long t = 0; t < n; ++t) roots_n[static_cast<size_t>(t)] = std::polar(1.0, 2.0 * pi * t / static_cast<double>(n));
    for (long t = 0; t < l; ++t) roots_l[static_cast<size_t>(t)] = std::polar(1.0, 2.0 * pi * t / static_cast<double>(l));

    const double gain = std::sqrt(static_cast<double>(n) / static_cast<double>(l)) /
                        std::sqrt(static_cast<double>(n) * static_cast<double>(l));
    cvec spectrum(static_cast<size_t>(l));
    cvec col(static_cast<size_t>(n));

    for (size_t r = 0; r < sched.blocks.size(); ++r) {
        const Block& b = sched.blocks[r];
        const long c = detail::per_block(bin_offsets, r);
        const BinMapping map = BinMapping::make(cfg, c, b.q);
        const cd rot = detail::continuity_phase(c, b.q, n);
        const specwin::FreqWindow& win = detail::per_block(windows, r);

        for (long j = 0; j < l; ++j) {
            if (cfg.scheme == Scheme::ola && (j < b.l_l || j >= b.l_l + b.l_s)) continue;
            // (P W_L)[k, j] = (1/sqrt L) exp(-i 2 pi ((k + L/2) mod L) j / L)
            for (long k = 0; k < l; ++k) {
                const long kk = (k + l / 2) % l;
                const long t = (kk * j) % l;
                spectrum[static_cast<size_t>(k)] =
                    std::conj(roots_l[static_cast<size_t>(t)]) * win.d[static_cast<size_t>(k)] * rot;
            }
            // col[n'] = s_n' gain (1/sqrt N) sum_k exp(+i 2 pi n' dst(k) / N) spectrum[k]
            std::fill(col.begin(), col.end(), cd(0.0));
            for (long k = 0; k < l; ++k) {
                const long dst = (map.dest_start + k) % n;
                const cd v = spectrum[static_cast<size_t>(k)];
                for (long nn = 0; nn < n; ++nn)
                    col[static_cast<size_t>(nn)] += roots_n[static_cast<size_t>((nn * dst) % n)] * v;
            }
            for (long nn = 0; nn < n; ++nn) {
                if (cfg.scheme == Scheme::ols && (nn < i_m * b.l_l || nn >= i_m * (b.l_l + b.l_s))) continue;
                const long row = b.q + nn;
                if (row < 0 || row >= op.rows) continue;
                const long gcol = b.p + sched.pad_head + j;
                op.m[static_cast<size_t>(row) * static_cast<size_t>(op.cols) + static_cast<size_t>(gcol)] +=
                    col[static_cast<size_t>(nn)] * gain;
            }
        }
    }
    return op;
}

/// Zero-padded input vector the dense operator acts on.
inline cvec pad_stream(const cvec& y, const BlockSchedule& sched) {
    if (static_cast<long>(y.size()) != sched.l_samp) fail("pad_stream: length mismatch");
    cvec padded(static_cast<size_t>(sched.padded_length()), cd(0.0));
    std::copy(y.begin(), y.end(), padded.begin() + sched.pad_head);
    return padded;
}

} // namespace fcofdm::fcfb
