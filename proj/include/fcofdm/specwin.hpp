#pragma once

#include <fstream>

#include "common.hpp"

namespace fcofdm::specwin {

/// Passband and stopband extents of one subband at one instant. Passband
/// edges are the outermost subcarrier centers; f_scs records the subcarrier
/// width so guard computations can reach the occupied-band edge.
struct BandEdges {
    double f_pb_low = 0.0;
    double f_pb_high = 0.0;
    double f_sb_low = 0.0;
    double f_sb_high = 0.0;
    double f_center = 0.0;
    double f_scs = 0.0;
};

/// Instantaneous passband of an active subband, input to the stopband-edge rules.
struct PassbandState {
    double f_center = 0.0;
    double f_pb_low = 0.0;
    double f_pb_high = 0.0;
    double f_scs = 0.0;
};

/// Frequency-domain window for one processing block. d is kept in shifted
/// order: index k corresponds to frequency (k - L/2) bins from the subband
/// center. Structure: zeros(k_low) | h | ones | reversed h | zeros.
struct FreqWindow {
    cvec d;
    long n_tb = 0;
    std::vector<double> h;
    long k_low = 0;
    long k_high = 0;
    double phi_fd = 0.0;

    long length() const { return static_cast<long>(d.size()); }

    bool same_shape(const FreqWindow& o) const {
        return d == o.d;
    }
};

inline double passband_low(double f_center, double f_scs, long l_act) {
    return f_center - f_scs * (static_cast<double>(l_act) / 2.0);
}

inline double passband_high(double f_center, double f_scs, long l_act) {
    return f_center + f_scs * (static_cast<double>(l_act) / 2.0 - 1.0);
}

/// Stopband edges for every subband given the instantaneous passbands, sorted
/// by center frequency. Edgemost subbands stop at the channel edges, inner
/// ones at their neighbors' passband edges.
inline std::vector<BandEdges> band_edges(std::vector<PassbandState> subbands, double f_ch_bw) {
    std::sort(subbands.begin(), subbands.end(),
              [](const PassbandState& a, const PassbandState& b) { return a.f_center < b.f_center; });
    const size_t m_count = subbands.size();
    for (size_t m = 0; m + 1 < m_count; ++m) {
        if (subbands[m].f_pb_high >= subbands[m + 1].f_pb_low)
            fail(strf("subband passbands overlap: [%.9g, %.9g] Hz vs [%.9g, %.9g] Hz",
                      subbands[m].f_pb_low, subbands[m].f_pb_high,
                      subbands[m + 1].f_pb_low, subbands[m + 1].f_pb_high));
    }

    std::vector<BandEdges> out(m_count);
    for (size_t m = 0; m < m_count; ++m) {
        BandEdges e;
        e.f_center = subbands[m].f_center;
        e.f_pb_low = subbands[m].f_pb_low;
        e.f_pb_high = subbands[m].f_pb_high;
        e.f_scs = subbands[m].f_scs;
        e.f_sb_low = (m == 0) ? -f_ch_bw / 2.0 : subbands[m - 1].f_pb_high;
        e.f_sb_high = (m + 1 == m_count) ? f_ch_bw / 2.0 : subbands[m + 1].f_pb_low;
        out[m] = e;
    }
    return out;
}

/// Default transition weights: raised-cosine samples, strictly increasing in (0,1),
/// with h[i] + h[n-1-i] = 1.
inline std::vector<double> default_transition_weights(long n_tb) {
    if (n_tb < 1) fail("default_transition_weights: need at least one weight");
    std::vector<double> h(static_cast<size_t>(n_tb));
    for (long i = 0; i < n_tb; ++i)
        h[i] = 0.5 * (1.0 - std::cos(pi * static_cast<double>(i + 1) / static_cast<double>(n_tb + 1)));
    return h;
}

/// One ascending weight per line; '#' comments allowed.
inline std::vector<double> load_transition_weights(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open transition-weight file: " + path);
    std::vector<double> h;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        char* end = nullptr;
        const double v = std::strtod(line.c_str(), &end);
        if (end == line.c_str()) fail(strf("%s:%ld: not a number", path.c_str(), lineno));
        h.push_back(v);
    }
    for (size_t i = 0; i < h.size(); ++i) {
        if (h[i] <= 0.0 || h[i] >= 1.0) fail(strf("%s: weight %zu = %.17g outside (0,1)", path.c_str(), i, h[i]));
        if (i > 0 && h[i] <= h[i - 1]) fail(strf("%s: weights must be strictly ascending", path.c_str()));
    }
    if (h.empty()) fail(path + ": no weights found");
    return h;
}

inline void save_transition_weights(const std::string& path, const std::vector<double>& h) {
    std::ofstream out(path);
    if (!out) fail("cannot write transition-weight file: " + path);
    for (double v : h) out << strf("%.17g\n", v);
}

/// Number of transition bins that fit the narrower guard, measured from the
/// stopband edge to the occupied-band edge (outermost subcarrier center plus
/// half a subcarrier): floor(guard / bin spacing).
inline long default_transition_bins(const BandEdges& e, double f_bs) {
    const double guard = std::min(e.f_pb_low - e.f_scs / 2.0 - e.f_sb_low,
                                  e.f_sb_high - (e.f_pb_high + e.f_scs / 2.0));
    return static_cast<long>(std::floor(guard / f_bs + 1e-9));
}

/// Assemble the window for one subband on an l_m-point grid with bin spacing
/// f_s / n_long. n_tb < 0 selects the guard-derived default; h empty selects
/// the raised-cosine default weights.
inline FreqWindow design_window(const BandEdges& edges, long n_long, long l_m, double f_s,
                                long n_tb = -1, std::vector<double> h = {}) {
    if (!is_pow2(l_m) || !is_pow2(n_long)) fail("design_window: transform lengths must be powers of two");
    const double f_bs = f_s / static_cast<double>(n_long);
    FreqWindow w;
    w.phi_fd = 0.0;

    const double rel_low = (edges.f_sb_low - edges.f_center) / f_bs;
    const double rel_high = (edges.f_sb_high - edges.f_center) / f_bs;
    w.k_low = std::max<long>(static_cast<long>(std::ceil(rel_low - 1e-9)) + l_m / 2, 0);
    w.k_high = std::min<long>(static_cast<long>(std::floor(rel_high + 1e-9)) + l_m / 2, l_m - 1);
    if (w.k_low > w.k_high)
        fail(strf("design_window: empty window, stopband indices %ld..%ld", w.k_low, w.k_high));

    const double pb_lo_idx = (edges.f_pb_low - edges.f_center) / f_bs + static_cast<double>(l_m) / 2.0;
    const double pb_hi_idx = (edges.f_pb_high - edges.f_center) / f_bs + static_cast<double>(l_m) / 2.0;
    if (n_tb >= 0) {
        w.n_tb = n_tb;
    } else {
        // guard-derived count, shrunk to the slack left after index clamping
        const double slack = std::min(pb_lo_idx - static_cast<double>(w.k_low),
                                      static_cast<double>(w.k_high) - pb_hi_idx);
        w.n_tb = std::max<long>(std::min(default_transition_bins(edges, f_bs),
                                         static_cast<long>(std::floor(slack + 1e-9))), 0);
    }
    if (w.n_tb > 0 && w.k_high - w.k_low + 1 < 2 * w.n_tb)
        fail(strf("design_window: transition bands overlap, %ld bins available but 2 x %ld needed "
                  "(increase guard bins or reduce n_tb)", w.k_high - w.k_low + 1, w.n_tb));

    // passband must fall inside the one-valued region
    if (pb_lo_idx < static_cast<double>(w.k_low + w.n_tb) - 1e-9 ||
        pb_hi_idx > static_cast<double>(w.k_high - w.n_tb) + 1e-9)
        fail(strf("design_window: passband bins [%.3f, %.3f] not inside the one-valued region [%ld, %ld]",
                  pb_lo_idx, pb_hi_idx, w.k_low + w.n_tb, w.k_high - w.n_tb));

    if (w.n_tb > 0) {
        w.h = h.empty() ? default_transition_weights(w.n_tb) : std::move(h);
        if (static_cast<long>(w.h.size()) != w.n_tb)
            fail(strf("design_window: %zu weights supplied but n_tb = %ld", w.h.size(), w.n_tb));
    }

    w.d.assign(static_cast<size_t>(l_m), cd(0.0));
    for (long i = 0; i < w.n_tb; ++i) {
        w.d[static_cast<size_t>(w.k_low + i)] = w.h[static_cast<size_t>(i)];
        w.d[static_cast<size_t>(w.k_high - i)] = w.h[static_cast<size_t>(i)];
    }
    for (long k = w.k_low + w.n_tb; k <= w.k_high - w.n_tb; ++k)
        w.d[static_cast<size_t>(k)] = 1.0;
    return w;
}

/// All-ones window (full-band pass-through), useful for identity configurations.
inline FreqWindow allpass_window(long l_m) {
    FreqWindow w;
    w.d.assign(static_cast<size_t>(l_m), cd(1.0));
    w.k_low = 0;
    w.k_high = l_m - 1;
    w.n_tb = 0;
    return w;
}

/// All-zeros window (silent subband during inactive symbols).
inline FreqWindow silent_window(long l_m) {
    FreqWindow w;
    w.d.assign(static_cast<size_t>(l_m), cd(0.0));
    w.k_low = 0;
    w.k_high = l_m - 1;
    w.n_tb = 0;
    return w;
}

/// Multiply in the fractional-delay phase ramp exp(-i 2 pi (q - L/2) phi / L).
inline FreqWindow apply_fractional_delay(FreqWindow w, double phi) {
    if (phi < 0.0 || phi > 1.0) fail(strf("apply_fractional_delay: phi %.9g outside [0, 1]", phi));
    if (phi == 0.0) return w;
    const long l = w.length();
    for (long q = 0; q < l; ++q)
        w.d[static_cast<size_t>(q)] *=
            std::polar(1.0, -2.0 * pi * static_cast<double>(q - l / 2) * phi / static_cast<double>(l));
    w.phi_fd = phi;
    return w;
}

} // namespace fcofdm::specwin
