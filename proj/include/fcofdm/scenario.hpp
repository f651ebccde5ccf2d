#pragma once

#include "cpofdm.hpp"
#include "fcfb.hpp"
#include "metrics.hpp"
#include "numerology.hpp"
#include "specwin.hpp"

namespace fcofdm::scenario {

enum class RxMode { fc, ofdm, wola };
enum class TxMode { fc, wola };

inline const char* rx_name(RxMode m) { return m == RxMode::fc ? "fc" : m == RxMode::ofdm ? "ofdm" : "wola"; }
inline const char* tx_name(TxMode m) { return m == TxMode::fc ? "fc" : "wola"; }

inline RxMode rx_from_name(const std::string& s) {
    if (s == "fc") return RxMode::fc;
    if (s == "ofdm") return RxMode::ofdm;
    if (s == "wola") return RxMode::wola;
    fail("unknown rx mode '" + s + "' (expected fc|ofdm|wola)");
}

inline TxMode tx_from_name(const std::string& s) {
    if (s == "fc") return TxMode::fc;
    if (s == "wola") return TxMode::wola;
    fail("unknown tx mode '" + s + "' (expected fc|wola)");
}

/// One OFDM symbol's allocation on a subband. l_act = 0 keeps the subband
/// silent for that symbol while preserving the time grid.
struct SymbolAlloc {
    double scs_hz = 0.0;
    long l_act = 0;
    double f_center_hz = 0.0;

    bool operator==(const SymbolAlloc&) const = default;
};

struct WindowSpec {
    long n_tb = -1;               // -1: derived from the available guard
    std::string weights_file;     // empty: raised-cosine defaults
    double phi_fd = 0.0;

    bool operator==(const WindowSpec&) const = default;
};

struct SubbandConfig {
    std::vector<SymbolAlloc> symbols;
    cpofdm::Modulation modulation = cpofdm::Modulation::qpsk;
    long l_short = 0;             // 0: choose the largest valid interpolation factor
    WindowSpec window;

    bool operator==(const SubbandConfig&) const = default;
};

struct MetricsConfig {
    long n_psd = 0;               // 0: smallest power of two >= 4x waveform length
    double mbw_hz = 100e3;
    double evm_cp_fraction = 0.5; // EVM window as a fraction of the CP
    bool mask = false;

    bool operator==(const MetricsConfig&) const = default;
};

struct ScenarioConfig {
    int schema_version = 1;
    std::string name;
    numerology::ChannelConfig channel;
    long n_long = 0;              // 0: auto from the coarsest usable bin spacing
    fcfb::Scheme scheme = fcfb::Scheme::ols;
    int r_hsf = 1;
    std::uint64_t seed = 1;
    TxMode tx = TxMode::fc;
    RxMode rx = RxMode::fc;
    MetricsConfig metrics;
    std::vector<SubbandConfig> subbands;

    bool operator==(const ScenarioConfig& o) const {
        return schema_version == o.schema_version && name == o.name &&
               channel.f_ch_bw == o.channel.f_ch_bw && channel.f_s == o.channel.f_s &&
               channel.p_max_dbm == o.channel.p_max_dbm && n_long == o.n_long &&
               scheme == o.scheme && r_hsf == o.r_hsf && seed == o.seed && tx == o.tx && rx == o.rx &&
               metrics == o.metrics && subbands == o.subbands;
    }
};

/// Fully derived per-subband processing state.
struct CompiledSubband {
    fcfb::FcConfig fc;
    numerology::NumerologyPlan low_plan;
    fcfb::BlockSchedule sched;
    std::vector<long> l_act;                    // per symbol
    std::vector<long> sym_bin_offset;           // per symbol, f_center / f_bs
    std::vector<specwin::FreqWindow> block_windows;
    std::vector<long> block_offsets;            // per block
    std::vector<size_t> block_owner;            // per block, owning symbol index
    std::vector<std::vector<size_t>> sets;      // symbol sets grouped by (scs, l_act)
    std::vector<double> custom_weights;         // empty = defaults
};

struct Compiled {
    ScenarioConfig cfg;
    double f_s = 0.0;
    double f_bs = 0.0;
    long n_hsf_high = 0;
    std::vector<CompiledSubband> subbands;
};

namespace detail {

inline long choose_l_short(long n_long, double f_s, const SubbandConfig& sb, const std::string& where) {
    std::string why;
    for (long l = 256; l <= n_long; l <<= 1) {
        const long i_m = n_long / l;
        const double f_low = f_s / static_cast<double>(i_m);
        bool ok = true;
        why.clear();
        if (numerology::half_subframe_samples(f_s) % i_m != 0) {
            ok = false;
            why = strf("half subframe not divisible by interpolation %ld", i_m);
        }
        if (ok && (numerology::half_subframe_samples(f_s) % numerology::cp_units) % i_m != 0) {
            ok = false;
            why = strf("alpha not divisible by interpolation %ld", i_m);
        }
        for (size_t n = 0; ok && n < sb.symbols.size(); ++n) {
            const auto& sym = sb.symbols[n];
            const double ratio = f_low / sym.scs_hz;
            const long l_ofdm = std::llround(ratio);
            if (std::abs(ratio - static_cast<double>(l_ofdm)) > 1e-6) {
                ok = false;
                why = strf("symbol %zu: non-integer transform at rate %.9g", n, f_low);
                break;
            }
            const long l_min = sym.l_act > 0 ? cpofdm::min_transform_length(sym.l_act) : 128;
            if (l_ofdm < l_min) {
                ok = false;
                why = strf("symbol %zu: transform %ld below the minimum %ld", n, l_ofdm, l_min);
                break;
            }
            if (l_ofdm % 128 != 0) {
                ok = false;
                why = strf("symbol %zu: transform %ld breaks CP integrality", n, l_ofdm);
                break;
            }
            if (l > 2 * l_ofdm) {
                ok = false;
                why = strf("symbol %zu: block payload longer than the symbol", n);
                break;
            }
        }
        if (ok) return l;
    }
    fail(where + ": no valid forward-transform length (last reason: " + why + ")");
}

inline long integral_bins(double f, double f_bs, const std::string& where) {
    const double b = f / f_bs;
    const long r = std::llround(b);
    if (std::abs(b - static_cast<double>(r)) > 1e-6)
        fail(strf("%s: center %.9g Hz is not a multiple of the bin spacing %.9g Hz", where.c_str(), f, f_bs));
    return r;
}

struct ActiveState {
    size_t subband = 0;
    specwin::PassbandState pb;
};

/// Instantaneous active passbands at high-rate sample time t.
inline std::vector<ActiveState> active_at(const Compiled& c, long t_high) {
    std::vector<ActiveState> states;
    for (size_t m = 0; m < c.subbands.size(); ++m) {
        const auto& sub = c.subbands[m];
        const long i_m = sub.fc.interp();
        long pos = 0;
        for (size_t n = 0; n < sub.low_plan.symbols.size(); ++n) {
            const long len = sub.low_plan.symbols[n].n_ofdm + sub.low_plan.symbols[n].n_cp;
            const long lo = pos * i_m;
            const long hi = (pos + len) * i_m;
            if (t_high >= lo && t_high < hi) {
                if (sub.l_act[n] > 0) {
                    const auto& alloc = c.cfg.subbands[m].symbols[n];
                    specwin::PassbandState s;
                    s.f_center = alloc.f_center_hz;
                    s.f_pb_low = specwin::passband_low(alloc.f_center_hz, alloc.scs_hz, alloc.l_act);
                    s.f_pb_high = specwin::passband_high(alloc.f_center_hz, alloc.scs_hz, alloc.l_act);
                    s.f_scs = alloc.scs_hz;
                    states.push_back({m, s});
                }
                break;
            }
            pos += len;
        }
    }
    return states;
}

inline void build_block_windows(Compiled& c) {
    for (size_t m = 0; m < c.subbands.size(); ++m) {
        CompiledSubband& sub = c.subbands[m];
        const auto& cfg_sb = c.cfg.subbands[m];
        const std::vector<long> bounds = sub.low_plan.boundaries();
        sub.block_windows.clear();
        sub.block_offsets.clear();
        sub.block_owner.clear();

        for (const fcfb::Block& b : sub.sched.blocks) {
            // owning symbol: the one whose span contains the payload start
            size_t owner = bounds.size() - 1;
            for (size_t n = 0; n + 1 < bounds.size(); ++n)
                if (b.payload_start >= bounds[n] && b.payload_start < bounds[n + 1]) { owner = n; break; }
            sub.block_owner.push_back(owner);

            if (sub.l_act[owner] == 0) {
                sub.block_windows.push_back(specwin::silent_window(sub.fc.l_short));
                sub.block_offsets.push_back(0);
                continue;
            }
            const long t_high = b.payload_start * sub.fc.interp();
            std::vector<ActiveState> states = active_at(c, t_high);
            std::vector<specwin::PassbandState> pbs;
            pbs.reserve(states.size());
            for (const auto& s : states) pbs.push_back(s.pb);
            std::vector<specwin::BandEdges> edges = specwin::band_edges(pbs, c.cfg.channel.f_ch_bw);
            const double own_center = c.cfg.subbands[m].symbols[owner].f_center_hz;
            const specwin::BandEdges* own = nullptr;
            for (const auto& e : edges)
                if (e.f_center == own_center) { own = &e; break; }
            if (!own) fail("internal: own subband not found among active states");

            long n_tb = cfg_sb.window.n_tb;
            if (!sub.custom_weights.empty()) {
                const long avail = specwin::default_transition_bins(*own, c.f_bs);
                n_tb = static_cast<long>(sub.custom_weights.size());
                if (n_tb > avail)
                    fail(strf("subband %zu: %ld custom weights but only %ld guard bins available", m, n_tb, avail));
            }
            specwin::FreqWindow w = specwin::design_window(*own, c.cfg.n_long, sub.fc.l_short, c.f_s,
                                                           n_tb, sub.custom_weights);
            if (cfg_sb.window.phi_fd != 0.0)
                w = specwin::apply_fractional_delay(std::move(w), cfg_sb.window.phi_fd);
            sub.block_windows.push_back(std::move(w));
            sub.block_offsets.push_back(sub.sym_bin_offset[owner]);
        }
    }
}

} // namespace detail

/// Validate a configuration and derive all processing state. Throws on any
/// violated constraint; a config that compiles runs without further errors.
inline Compiled compile(const ScenarioConfig& cfg) {
    Compiled c;
    c.cfg = cfg;
    if (cfg.schema_version != 1)
        fail(strf("schema_version: expected 1, got %d", cfg.schema_version));
    if (cfg.channel.f_ch_bw <= 0.0) fail("channel.bandwidth_hz: must be positive");
    c.f_s = cfg.channel.f_s > 0.0 ? cfg.channel.f_s
                                  : numerology::sample_rate_for_channel(cfg.channel.f_ch_bw);
    c.cfg.channel.f_s = c.f_s;
    c.n_hsf_high = numerology::half_subframe_samples(c.f_s);
    if (cfg.r_hsf < 1) fail("half_subframes: must be at least 1");
    if (cfg.metrics.mask && !cfg.channel.p_max_dbm)
        fail("metrics.mask: requires channel.p_max_dbm for dBm calibration");
    if (cfg.metrics.evm_cp_fraction < 0.0 || cfg.metrics.evm_cp_fraction > 1.0)
        fail("metrics.evm_cp_fraction: outside [0, 1]");

    double scs_max = 0.0;
    for (const auto& sb : cfg.subbands)
        for (const auto& sym : sb.symbols) scs_max = std::max(scs_max, sym.scs_hz);

    if (cfg.n_long == 0) {
        // coarsest bin spacing that keeps every symbol length a whole number
        // of block payloads (2 f_bs / scs integral) and N a power of two
        long best = 0;
        for (long n = 8192; n >= 256; n >>= 1) {
            if (std::abs(c.f_s / static_cast<double>(n) / 15e3 - std::round(c.f_s / n / 15e3)) > 1e-9) continue;
            const double f_bs = c.f_s / static_cast<double>(n);
            if (f_bs < 15e3 || f_bs > 60e3) continue;
            if (scs_max > 0.0 && std::abs(2.0 * f_bs / scs_max - std::round(2.0 * f_bs / scs_max)) > 1e-9) continue;
            if (scs_max > 0.0 && 2.0 * f_bs / scs_max < 1.0) continue;
            best = n;  // keep the smallest qualifying N (coarsest bins)
        }
        if (best == 0) fail("fc.n_long: no automatic choice fits this numerology; set it explicitly");
        c.cfg.n_long = best;
    }
    if (!is_pow2(c.cfg.n_long)) fail("fc.n_long: must be a power of two");
    c.f_bs = c.f_s / static_cast<double>(c.cfg.n_long);

    c.subbands.resize(cfg.subbands.size());
    for (size_t m = 0; m < cfg.subbands.size(); ++m) {
        const auto& sb = cfg.subbands[m];
        CompiledSubband& sub = c.subbands[m];
        const std::string where = strf("subbands[%zu]", m);
        if (sb.symbols.empty()) fail(where + ".symbols: empty");

        long l_short = sb.l_short;
        if (l_short == 0) {
            l_short = detail::choose_l_short(c.cfg.n_long, c.f_s, sb, where);
        } else {
            if (!is_pow2(l_short)) fail(where + ".l_short: must be a power of two");
            if (l_short < 256)
                fail(where + strf(".l_short: %ld below the minimum forward transform length 256", l_short));
            if (l_short > c.cfg.n_long) fail(where + ".l_short: exceeds fc.n_long");
        }
        sub.fc = fcfb::FcConfig{c.cfg.n_long, l_short, c.f_s, cfg.scheme};
        sub.fc.validate();
        const double f_low = sub.fc.low_rate();

        std::vector<double> scs_seq(sb.symbols.size());
        sub.l_act.resize(sb.symbols.size());
        sub.sym_bin_offset.resize(sb.symbols.size());
        for (size_t n = 0; n < sb.symbols.size(); ++n) {
            const auto& sym = sb.symbols[n];
            const std::string sw = where + strf(".symbols[%zu]", n);
            if (sym.l_act < 0) fail(sw + ".l_act: negative");
            scs_seq[n] = sym.scs_hz;
            sub.l_act[n] = sym.l_act;
            sub.sym_bin_offset[n] =
                sym.l_act > 0 ? detail::integral_bins(sym.f_center_hz, c.f_bs, sw) : 0;
            if (sym.l_act > 0 && (cfg.rx == RxMode::ofdm || cfg.rx == RxMode::wola || cfg.tx == TxMode::wola)) {
                const double bins = sym.f_center_hz / sym.scs_hz;
                if (std::abs(bins - std::round(bins)) > 1e-6)
                    fail(sw + ": center must be a subcarrier-grid multiple for plain OFDM or WOLA processing");
            }
            if (cfg.tx == TxMode::wola)
                numerology::ofdm_transform_length(c.f_s, sym.scs_hz);  // full-rate transform must exist
        }

        sub.low_plan = numerology::plan_half_subframe(f_low, scs_seq);
        if (sub.low_plan.r_hsf != cfg.r_hsf)
            fail(where + strf(": symbols cover %d half subframes, scenario declares %d",
                              sub.low_plan.r_hsf, cfg.r_hsf));
        for (size_t n = 0; n < sb.symbols.size(); ++n) {
            if (sub.l_act[n] > sub.low_plan.symbols[n].n_ofdm)
                fail(where + strf(".symbols[%zu]: %ld subcarriers exceed the transform %ld", n,
                                  sub.l_act[n], sub.low_plan.symbols[n].n_ofdm));
        }
        sub.sched = fcfb::plan_schedule(sub.fc, sub.low_plan, cfg.r_hsf);

        // symbol sets: group by (scs, l_act) over active symbols
        for (size_t n = 0; n < sb.symbols.size(); ++n) {
            if (sub.l_act[n] == 0) continue;
            bool placed = false;
            for (auto& set : sub.sets) {
                const size_t head = set.front();
                if (sb.symbols[head].scs_hz == sb.symbols[n].scs_hz && sub.l_act[head] == sub.l_act[n]) {
                    set.push_back(n);
                    placed = true;
                    break;
                }
            }
            if (!placed) sub.sets.push_back({n});
        }

        if (!sb.window.weights_file.empty())
            sub.custom_weights = specwin::load_transition_weights(sb.window.weights_file);
        if (sb.window.phi_fd < 0.0 || sb.window.phi_fd > 1.0)
            fail(where + ".window.phi_fd: outside [0, 1]");
    }

    detail::build_block_windows(c);  // throws on overlapping passbands or missing guards
    return c;
}

/// Per-subband payload grid drawn from the scenario seed.
inline cpofdm::GridSymbols draw_grid(const Compiled& c, size_t m) {
    const auto& sub = c.subbands[m];
    cpofdm::GridSymbols grid;
    grid.modulation = c.cfg.subbands[m].modulation;
    grid.symbols.resize(sub.l_act.size());
    BitSource bits(subband_seed(c.cfg.seed, m));
    for (size_t n = 0; n < sub.l_act.size(); ++n) {
        grid.symbols[n].resize(static_cast<size_t>(sub.l_act[n]));
        for (long sc = 0; sc < sub.l_act[n]; ++sc)
            grid.symbols[n][static_cast<size_t>(sc)] = cpofdm::map_symbol(bits, grid.modulation);
    }
    return grid;
}

namespace detail {

/// Piecewise subband modulation/demodulation to/from its center, in absolute
/// high-rate time so it matches the blockwise continuity rotation.
inline cvec shift_by_centers(const cvec& z, const CompiledSubband& sub, double sign) {
    cvec out(z.size());
    const long i_m = sub.fc.interp();
    const long n = sub.fc.n_long;
    size_t sym = 0;
    const auto bounds = sub.low_plan.boundaries();
    for (size_t q = 0; q < z.size(); ++q) {
        const long t_low = static_cast<long>(q) / i_m;
        while (sym + 1 < bounds.size() && t_low >= bounds[sym + 1]) ++sym;
        const long cbin = sub.sym_bin_offset[sym];
        const long r = ((cbin % n) * (static_cast<long>(q) % n) % n + n) % n;
        out[q] = z[q] * std::polar(1.0, sign * 2.0 * pi * static_cast<double>(r) / static_cast<double>(n));
    }
    return out;
}

inline cvec shift_to_baseband(const cvec& z, const CompiledSubband& sub) {
    return shift_by_centers(z, sub, -1.0);
}

inline cvec shift_from_baseband(const cvec& z, const CompiledSubband& sub) {
    return shift_by_centers(z, sub, 1.0);
}

inline std::vector<cpofdm::SymbolSpan> high_rate_spans(const CompiledSubband& sub) {
    std::vector<cpofdm::SymbolSpan> spans;
    const long i_m = sub.fc.interp();
    long pos = 0;
    for (const auto& s : sub.low_plan.symbols) {
        spans.push_back({pos * i_m, s.n_ofdm * i_m, s.n_cp * i_m});
        pos += s.n_ofdm + s.n_cp;
    }
    return spans;
}

inline std::vector<cpofdm::SymbolSpan> low_rate_spans(const CompiledSubband& sub) {
    std::vector<cpofdm::SymbolSpan> spans;
    long pos = 0;
    for (const auto& s : sub.low_plan.symbols) {
        spans.push_back({pos, s.n_ofdm, s.n_cp});
        pos += s.n_ofdm + s.n_cp;
    }
    return spans;
}

/// WOLA baseline transmitter for one subband: plain CP-OFDM at the output
/// rate, edge-windowed, then moved to its center frequency.
inline cvec wola_tx_subband(const Compiled& c, size_t m, const cpofdm::GridSymbols& grid) {
    const auto& sub = c.subbands[m];
    std::vector<double> scs_seq;
    for (const auto& sym : c.cfg.subbands[m].symbols) scs_seq.push_back(sym.scs_hz);
    const numerology::NumerologyPlan plan_hr = numerology::plan_half_subframe(c.f_s, scs_seq);
    const cpofdm::LowRateWaveform y = cpofdm::modulate_subband(grid, plan_hr);

    long min_cp = std::numeric_limits<long>::max();
    for (const auto& s : plan_hr.symbols) min_cp = std::min(min_cp, s.n_cp);
    const long l_ext = min_cp / 4;

    cvec shaped = cpofdm::wola_shape(y, l_ext);
    cvec trimmed(shaped.begin() + l_ext, shaped.end() - l_ext);  // align with the nominal stream
    return shift_from_baseband(trimmed, sub);
}

} // namespace detail

struct SubbandRun {
    cpofdm::GridSymbols reference;
    metrics::EvmReport evm;
};

struct RunArtifacts {
    cvec tx_waveform;
    metrics::PsdEstimate psd_raw;
    metrics::PsdEstimate psd_smoothed;
    double edge_level_db = 0.0;
    std::optional<metrics::MaskReport> mask;
    std::vector<SubbandRun> subbands;
    Compiled compiled;  // derived state echoed into the summary
};

/// Deterministic end-to-end run: payload generation, per-subband CP-OFDM
/// modulation, block filtering (or the WOLA baseline), combining, spectrum
/// metrics, and the selected receive path with windowed EVM.
inline RunArtifacts run_scenario(const ScenarioConfig& cfg) {
    Compiled c = compile(cfg);
    RunArtifacts art;

    const size_t m_count = c.subbands.size();
    std::vector<cpofdm::GridSymbols> grids(m_count);
    std::vector<cpofdm::LowRateWaveform> low(m_count);
    std::vector<cvec> tx(m_count);
    for (size_t m = 0; m < m_count; ++m) {
        grids[m] = draw_grid(c, m);
        low[m] = cpofdm::modulate_subband(grids[m], c.subbands[m].low_plan);
        if (cfg.tx == TxMode::fc) {
            // 1/sqrt(I) keeps the energy per resource element equal across
            // interpolation factors and transmit paths (the bank itself has
            // unit passband amplitude gain)
            const double epre = 1.0 / std::sqrt(static_cast<double>(c.subbands[m].fc.interp()));
            for (cd& v : low[m].samples) v *= epre;
            tx[m] = fcfb::synthesize_subband(low[m].samples, c.subbands[m].sched,
                                             c.subbands[m].block_windows, c.subbands[m].block_offsets,
                                             c.subbands[m].fc);
        } else {
            tx[m] = detail::wola_tx_subband(c, m, grids[m]);
        }
    }

    const long total_high = c.n_hsf_high * cfg.r_hsf;
    art.tx_waveform = m_count > 0 ? fcfb::combine_subbands(tx)
                                  : cvec(static_cast<size_t>(total_high), cd(0.0));

    long n_psd = cfg.metrics.n_psd;
    if (n_psd == 0) {
        n_psd = 1;
        while (n_psd < 4 * static_cast<long>(art.tx_waveform.size())) n_psd <<= 1;
    }
    art.psd_raw = metrics::psd_estimate(art.tx_waveform, n_psd, c.f_s);
    if (cfg.channel.p_max_dbm) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (size_t m = 0; m < m_count; ++m) {
            for (const auto& sym : cfg.subbands[m].symbols) {
                if (sym.l_act == 0) continue;
                lo = std::min(lo, specwin::passband_low(sym.f_center_hz, sym.scs_hz, sym.l_act));
                hi = std::max(hi, specwin::passband_high(sym.f_center_hz, sym.scs_hz, sym.l_act));
            }
        }
        if (lo < hi) metrics::calibrate_dbm(art.psd_raw, *cfg.channel.p_max_dbm, lo, hi);
    }
    art.psd_smoothed = metrics::psd_smooth(art.psd_raw, cfg.metrics.mbw_hz);
    art.edge_level_db = metrics::channel_edge_level(art.psd_smoothed, cfg.channel.f_ch_bw);
    if (cfg.metrics.mask)
        art.mask = metrics::mask_check(art.psd_smoothed,
                                       metrics::EmissionMask::default_obue(cfg.channel.f_ch_bw,
                                                                           cfg.metrics.mbw_hz));

    art.subbands.resize(m_count);
    for (size_t m = 0; m < m_count; ++m) {
        const auto& sub = c.subbands[m];
        art.subbands[m].reference = grids[m];
        if (sub.sets.empty()) continue;  // fully silent subband, nothing to measure

        metrics::DemodContext ctx;
        cvec rx_stream;
        if (cfg.rx == RxMode::fc) {
            rx_stream = fcfb::analyze_subband(art.tx_waveform, sub.sched, sub.block_windows,
                                              sub.block_offsets, sub.fc);
            ctx.spans = detail::low_rate_spans(sub);
        } else {
            rx_stream = detail::shift_to_baseband(art.tx_waveform, sub);
            ctx.spans = detail::high_rate_spans(sub);
        }
        ctx.rx = &rx_stream;
        ctx.l_act.assign(sub.l_act.begin(), sub.l_act.end());

        if (cfg.rx == RxMode::wola) {
            // receiver-side edge windowing: soft-edged fold before the DFT
            metrics::EvmReport rep;
            rep.sets.resize(sub.sets.size());
            std::vector<long> tau_low(ctx.spans.size()), tau_ref(ctx.spans.size()),
                tau_high(ctx.spans.size()), l_ext(ctx.spans.size());
            for (size_t n = 0; n < ctx.spans.size(); ++n) {
                const long cp = ctx.spans[n].n_cp;
                const long n_evm = static_cast<long>(std::floor(cfg.metrics.evm_cp_fraction * cp));
                tau_ref[n] = cp / 2;
                tau_low[n] = tau_ref[n] - n_evm / 2;
                tau_high[n] = tau_ref[n] + (n_evm - n_evm / 2);
                l_ext[n] = std::min<long>({cp / 4, tau_low[n], cp - tau_high[n]});
                if (l_ext[n] < 0) fail("rx=wola: EVM window incompatible with edge windowing");
            }
            const std::vector<long>* taus[3] = {&tau_low, &tau_ref, &tau_high};
            for (int t = 0; t < 3; ++t) {
                cpofdm::GridSymbols rx_grid;
                rx_grid.modulation = grids[m].modulation;
                rx_grid.symbols.resize(ctx.spans.size());
                for (size_t n = 0; n < ctx.spans.size(); ++n) {
                    if (ctx.l_act[n] == 0) continue;
                    const auto& sp = ctx.spans[n];
                    cvec sym(rx_stream.begin() + sp.start, rx_stream.begin() + sp.start + sp.length());
                    rx_grid.symbols[n] = cpofdm::wola_demodulate_symbol(sym, sp.n_ofdm, sp.n_cp,
                                                                        (*taus[t])[n], l_ext[n],
                                                                        ctx.l_act[n]);
                }
                cpofdm::GridSymbols eq = metrics::zf_equalize(rx_grid, grids[m], sub.sets);
                std::vector<metrics::EvmResult> res = metrics::evm_per_set(eq, grids[m], sub.sets);
                for (size_t s = 0; s < sub.sets.size(); ++s)
                    (t == 0 ? rep.sets[s].low : t == 1 ? rep.sets[s].ref : rep.sets[s].high) =
                        std::move(res[s]);
            }
            for (size_t s = 0; s < sub.sets.size(); ++s) {
                long mn = std::numeric_limits<long>::max();
                for (size_t n : sub.sets[s])
                    mn = std::min(mn, static_cast<long>(
                                          std::floor(cfg.metrics.evm_cp_fraction * ctx.spans[n].n_cp)));
                rep.sets[s].n_evm = mn;
            }
            art.subbands[m].evm = std::move(rep);
        } else {
            art.subbands[m].evm = metrics::evm_windowed(ctx, grids[m], sub.sets,
                                                        cfg.metrics.evm_cp_fraction);
        }
    }
    art.compiled = std::move(c);
    return art;
}

} // namespace fcofdm::scenario
