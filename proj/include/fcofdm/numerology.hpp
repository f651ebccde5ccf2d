#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "common.hpp"

namespace fcofdm::numerology {

inline constexpr double base_scs_hz = 15e3;        // FR1 baseline subcarrier spacing
inline constexpr long cp_units = 9 + 128;          // one symbol = 9/128 CP + payload, 137 units
inline constexpr long max_ofdm_transform = 4096;

/// Round a value expected to be integral; error (with context) otherwise.
inline long integral(double v, const char* what) {
    const long r = std::llround(v);
    if (std::abs(v - static_cast<double>(r)) > 1e-6 * std::max(1.0, std::abs(v)))
        fail(strf("%s: %.9g is not an integer", what, v));
    return r;
}

/// SCS exponent mu with f_scs = 2^mu * 15 kHz, mu in 0..4.
inline int scs_exponent(double f_scs) {
    for (int mu = 0; mu <= 4; ++mu) {
        if (std::abs(f_scs - std::ldexp(base_scs_hz, mu)) < 1e-3) return mu;
    }
    fail(strf("subcarrier spacing %.9g Hz is not 2^mu * 15 kHz with mu in 0..4", f_scs));
}

struct ChannelConfig {
    double f_ch_bw = 0.0;                 // channel bandwidth [Hz]
    double f_s = 0.0;                     // sample rate [Hz]
    std::optional<double> p_max_dbm;      // max carrier power, reference for emission masks
};

struct SymbolNumerology {
    int mu = 0;
    double f_scs = 0.0;
    long n_ofdm = 0;                      // transform length in samples at this rate
    long n_cp = 0;                        // CP length in samples (includes the excess on the first symbol)
    bool first_of_half_subframe = false;
};

/// Per-symbol schedule covering one or more half subframes at a fixed sample rate.
struct NumerologyPlan {
    std::vector<SymbolNumerology> symbols;
    long alpha = 0;                       // excess samples balanced onto each half subframe's first symbol
    long n_hsf = 0;                       // samples per half subframe
    int r_hsf = 0;                        // number of half subframes covered

    long total_samples() const { return n_hsf * r_hsf; }

    /// Start index of each symbol.
    std::vector<long> boundaries() const {
        std::vector<long> b(symbols.size());
        long pos = 0;
        for (size_t n = 0; n < symbols.size(); ++n) {
            b[n] = pos;
            pos += symbols[n].n_ofdm + symbols[n].n_cp;
        }
        return b;
    }
};

/// Nominal FR1 channel-bandwidth to sample-rate table.
inline double sample_rate_for_channel(double f_ch_bw) {
    static const std::map<long, double> table = {
        {5, 7.68e6},  {10, 15.36e6}, {15, 23.04e6}, {20, 30.72e6},  {25, 30.72e6},
        {30, 46.08e6}, {40, 61.44e6}, {50, 61.44e6}, {60, 92.16e6}, {70, 92.16e6},
        {80, 122.88e6}, {90, 122.88e6}, {100, 122.88e6},
    };
    const long mhz = std::llround(f_ch_bw / 1e6);
    auto it = table.find(mhz);
    if (it == table.end() || std::abs(f_ch_bw - static_cast<double>(mhz) * 1e6) > 1.0)
        fail(strf("unsupported channel bandwidth %.9g Hz (supply a sample rate explicitly instead)", f_ch_bw));
    return it->second;
}

/// Samples per half subframe, 0.5 ms * f_s; must be an integer count.
inline long half_subframe_samples(double f_s) {
    return integral(0.5e-3 * f_s, "samples per half subframe");
}

/// OFDM transform length f_s / f_scs; capped by the largest supported IFFT.
inline long ofdm_transform_length(double f_s, double f_scs) {
    const long n = integral(f_s / f_scs, "OFDM transform length");
    if (n > max_ofdm_transform)
        fail(strf("OFDM transform length %ld exceeds the maximum %ld", n, max_ofdm_transform));
    return n;
}

/// Excess samples per half subframe after tiling with 137-unit symbols.
inline long cp_excess(double f_s) { return half_subframe_samples(f_s) % cp_units; }

/// Build the per-symbol CP schedule for a sequence of subcarrier spacings at rate f_s.
/// The sequence must tile whole half subframes; the symbol starting at each
/// half-subframe boundary absorbs the excess alpha in its CP.
inline NumerologyPlan plan_half_subframe(double f_s, const std::vector<double>& scs_sequence) {
    if (scs_sequence.empty()) fail("plan_half_subframe: empty symbol sequence");
    NumerologyPlan plan;
    plan.n_hsf = half_subframe_samples(f_s);
    plan.alpha = plan.n_hsf % cp_units;
    plan.symbols.reserve(scs_sequence.size());

    long pos = 0;
    int boundaries_hit = 0;
    for (size_t n = 0; n < scs_sequence.size(); ++n) {
        SymbolNumerology s;
        s.mu = scs_exponent(scs_sequence[n]);
        s.f_scs = scs_sequence[n];
        s.n_ofdm = ofdm_transform_length(f_s, s.f_scs);
        if (s.n_ofdm % 128 != 0)
            fail(strf("symbol %zu: transform length %ld is not a multiple of 128, CP would be fractional",
                      n, s.n_ofdm));
        s.n_cp = s.n_ofdm / 128 * 9;
        s.first_of_half_subframe = (pos % plan.n_hsf == 0);
        if (s.first_of_half_subframe) {
            s.n_cp += plan.alpha;
            ++boundaries_hit;
        }
        pos += s.n_ofdm + s.n_cp;
        plan.symbols.push_back(s);
    }

    if (pos % plan.n_hsf != 0) {
        const long rem = pos % plan.n_hsf;
        fail(strf("symbol sequence does not tile half subframes: %ld samples past the last boundary "
                  "(deficit %ld)", rem, plan.n_hsf - rem));
    }
    plan.r_hsf = static_cast<int>(pos / plan.n_hsf);
    if (boundaries_hit != plan.r_hsf)
        fail(strf("a symbol straddles a half-subframe boundary (%d of %d boundaries hit by symbol starts)",
                  boundaries_hit, plan.r_hsf));
    return plan;
}

/// Minimum guard band between the outermost active subcarrier and the channel edge.
inline double guard_band(double f_ch_bw, double f_scs, long l_act_max) {
    if (l_act_max <= 0) fail("guard_band: l_act_max must be positive");
    const double gb = 0.5 * (f_ch_bw - f_scs * static_cast<double>(l_act_max + 1));
    if (gb < 0.0)
        fail(strf("allocation of %ld subcarriers at %.9g Hz exceeds the %.9g Hz channel",
                  l_act_max, f_scs, f_ch_bw));
    return gb;
}

/// Transmission-bandwidth configuration (max PRB counts) and sample rates,
/// backed by the plain-text table file shipped in data/. Keys cover the
/// bandwidth/SCS pairs exercised by the built-in scenarios.
class Tables {
public:
    static Tables builtin() {
        Tables t;
        for (long bw : {5, 10, 15, 20, 25, 30, 40, 50, 60, 70, 80, 90, 100})
            t.fs_by_bw_[bw] = sample_rate_for_channel(static_cast<double>(bw) * 1e6);
        // N_PRB,max rows: {bandwidth MHz, SCS kHz} -> PRB count
        const long rows[][3] = {
            {5, 15, 25},  {5, 30, 11},
            {10, 15, 52}, {10, 30, 24}, {10, 60, 11},
            {15, 15, 79}, {15, 30, 38}, {15, 60, 18},
            {20, 15, 106}, {20, 30, 51}, {20, 60, 24},
            {25, 15, 133}, {25, 30, 65}, {25, 60, 31},
            {30, 15, 160}, {30, 30, 78}, {30, 60, 38},
            {40, 15, 216}, {40, 30, 106}, {40, 60, 51},
            {50, 15, 270}, {50, 30, 133}, {50, 60, 65},
        };
        for (const auto& r : rows) t.prb_max_[{r[0], r[1]}] = r[2];
        return t;
    }

    /// File format: one entry per line, either
    ///   fs <bandwidth_mhz> <sample_rate_hz>
    ///   prb <bandwidth_mhz> <scs_khz> <n_prb_max>
    /// '#' starts a comment.
    static Tables load(const std::string& path) {
        std::ifstream in(path);
        if (!in) fail("cannot open numerology table file: " + path);
        Tables t;
        std::string line;
        long lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            std::istringstream ss(line);
            std::string kind;
            if (!(ss >> kind)) continue;
            if (kind == "fs") {
                long bw;
                double fs;
                if (!(ss >> bw >> fs)) fail(strf("%s:%ld: malformed fs row", path.c_str(), lineno));
                t.fs_by_bw_[bw] = fs;
            } else if (kind == "prb") {
                long bw, scs, prb;
                if (!(ss >> bw >> scs >> prb)) fail(strf("%s:%ld: malformed prb row", path.c_str(), lineno));
                t.prb_max_[{bw, scs}] = prb;
            } else {
                fail(strf("%s:%ld: unknown row kind '%s'", path.c_str(), lineno, kind.c_str()));
            }
        }
        return t;
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) fail("cannot write numerology table file: " + path);
        out << "# fs <bandwidth_mhz> <sample_rate_hz>\n";
        for (const auto& [bw, fs] : fs_by_bw_) out << strf("fs %ld %.17g\n", bw, fs);
        out << "# prb <bandwidth_mhz> <scs_khz> <n_prb_max>\n";
        for (const auto& [key, prb] : prb_max_) out << strf("prb %ld %ld %ld\n", key.first, key.second, prb);
    }

    double sample_rate(double f_ch_bw) const {
        auto it = fs_by_bw_.find(std::llround(f_ch_bw / 1e6));
        if (it == fs_by_bw_.end())
            fail(strf("no sample-rate table entry for channel bandwidth %.9g Hz", f_ch_bw));
        return it->second;
    }

    std::optional<long> n_prb_max(double f_ch_bw, double f_scs) const {
        auto it = prb_max_.find({std::llround(f_ch_bw / 1e6), std::llround(f_scs / 1e3)});
        if (it == prb_max_.end()) return std::nullopt;
        return it->second;
    }

    std::optional<long> l_act_max(double f_ch_bw, double f_scs) const {
        auto prb = n_prb_max(f_ch_bw, f_scs);
        if (!prb) return std::nullopt;
        return 12 * *prb;
    }

    bool operator==(const Tables& other) const {
        return fs_by_bw_ == other.fs_by_bw_ && prb_max_ == other.prb_max_;
    }

private:
    std::map<long, double> fs_by_bw_;
    std::map<std::pair<long, long>, long> prb_max_;
};

} // namespace fcofdm::numerology
