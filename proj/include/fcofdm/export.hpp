#pragma once

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "scenario.hpp"
#include "scenario_io.hpp"

namespace fcofdm::scenario {

/// Export failures (as opposed to validation errors).
class io_error : public error {
public:
    explicit io_error(const std::string& what) : error(what) {}
};

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);  // binary keeps newlines byte-stable
    if (!out) throw io_error("cannot write " + p.string());
    return out;
}

inline std::string fmt_g17(double v) { return strf("%.17g", v); }

/// Minimal line chart; x/y are equal-length series.
inline void write_svg(const std::filesystem::path& p, const std::string& title,
                      const std::vector<double>& x, const std::vector<std::vector<double>>& ys,
                      const std::vector<std::string>& labels) {
    if (x.empty() || ys.empty()) return;
    const double w = 960, h = 480, ml = 70, mr = 20, mt = 40, mb = 50;
    double xmin = x.front(), xmax = x.back();
    double ymin = 1e300, ymax = -1e300;
    for (const auto& y : ys)
        for (double v : y) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    if (!(ymax > ymin)) { ymax = ymin + 1.0; }
    if (!(xmax > xmin)) { xmax = xmin + 1.0; }
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

    auto out = open_out(p);
    out << strf("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
                "viewBox=\"0 0 %g %g\">\n", w, h, w, h);
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << strf("<text x=\"%g\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">%s</text>\n",
                ml, title.c_str());
    out << strf("<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"#888\"/>\n",
                ml, mt, w - ml - mr, h - mt - mb);
    out << strf("<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"12\">%.6g</text>\n",
                5.0, mt + 12, ymax);
    out << strf("<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"12\">%.6g</text>\n",
                5.0, h - mb, ymin);
    out << strf("<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"12\">%.6g</text>\n",
                ml, h - mb + 30, xmin);
    out << strf("<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"12\" "
                "text-anchor=\"end\">%.6g</text>\n", w - mr, h - mb + 30, xmax);
    for (size_t s = 0; s < ys.size(); ++s) {
        out << strf("<polyline fill=\"none\" stroke=\"%s\" stroke-width=\"1\" points=\"",
                    colors[s % 4]);
        for (size_t i = 0; i < x.size(); ++i) {
            const double px = ml + (x[i] - xmin) / (xmax - xmin) * (w - ml - mr);
            const double py = h - mb - (ys[s][i] - ymin) / (ymax - ymin) * (h - mt - mb);
            out << strf("%.2f,%.2f ", px, py);
        }
        out << "\"/>\n";
        if (s < labels.size())
            out << strf("<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"12\" "
                        "fill=\"%s\">%s</text>\n",
                        w - mr - 150.0, mt + 16.0 + 14.0 * static_cast<double>(s), colors[s % 4],
                        labels[s].c_str());
    }
    out << "</svg>\n";
}

} // namespace detail

/// Write summary.json, psd.csv and one EVM CSV per (subband, symbol set) into
/// dir, plus SVG charts when plots is set. Returns the written paths.
inline std::vector<std::string> export_artifacts(const RunArtifacts& art, const std::string& dir,
                                                 bool plots = false) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error("cannot create output directory " + dir + ": " + ec.message());
    std::vector<std::string> written;
    const Compiled& c = art.compiled;

    // psd.csv
    {
        const fs::path p = fs::path(dir) / "psd.csv";
        auto out = detail::open_out(p);
        out << "freq_hz,raw_db,smoothed_db\n";
        for (long k = 0; k < art.psd_raw.n_psd; ++k)
            out << detail::fmt_g17(art.psd_raw.freq_at(k)) << ','
                << detail::fmt_g17(art.psd_raw.values_db[static_cast<size_t>(k)]) << ','
                << detail::fmt_g17(art.psd_smoothed.values_db[static_cast<size_t>(k)]) << '\n';
        written.push_back(p.string());
    }

    // evm_subband<m>_set<u>.csv
    for (size_t m = 0; m < art.subbands.size(); ++m) {
        const auto& sub = c.subbands[m];
        for (size_t u = 0; u < sub.sets.size(); ++u) {
            const fs::path p = fs::path(dir) / strf("evm_subband%zu_set%zu.csv", m, u);
            auto out = detail::open_out(p);
            out << "subcarrier_index,mse_db_low,mse_db_ref,mse_db_high\n";
            const metrics::SetEvm& se = art.subbands[m].evm.sets[u];
            for (size_t sc = 0; sc < se.ref.mse.size(); ++sc)
                out << sc << ',' << detail::fmt_g17(power_db(se.low.mse[sc], metrics::evm_floor_db))
                    << ',' << detail::fmt_g17(power_db(se.ref.mse[sc], metrics::evm_floor_db)) << ','
                    << detail::fmt_g17(power_db(se.high.mse[sc], metrics::evm_floor_db)) << '\n';
            written.push_back(p.string());
        }
    }

    // summary.json
    {
        nlohmann::json s;
        s["schema_version"] = 1;
        s["generator"] = "fcofdm 1.0.0";
        s["config"] = to_json(c.cfg);
        s["derived"]["sample_rate_hz"] = c.f_s;
        s["derived"]["bin_spacing_hz"] = c.f_bs;
        s["derived"]["n_long"] = c.cfg.n_long;
        s["derived"]["subbands"] = nlohmann::json::array();
        for (size_t m = 0; m < c.subbands.size(); ++m) {
            nlohmann::json d;
            d["l_short"] = c.subbands[m].fc.l_short;
            d["interp"] = c.subbands[m].fc.interp();
            d["blocks"] = c.subbands[m].sched.blocks.size();
            d["blocks_per_half_subframe"] = c.subbands[m].sched.r_per_hsf;
            s["derived"]["subbands"].push_back(d);
        }
        s["results"]["edge_level_db"] = art.edge_level_db;
        s["results"]["psd"]["n_psd"] = art.psd_raw.n_psd;
        s["results"]["psd"]["rbw_hz"] = art.psd_raw.rbw;
        s["results"]["psd"]["mbw_hz"] = art.psd_smoothed.mbw;
        if (art.mask) {
            s["results"]["mask"]["pass"] = art.mask->pass;
            s["results"]["mask"]["worst_margin_db"] = art.mask->worst_margin_db;
            if (art.mask->first_violation_offset_hz)
                s["results"]["mask"]["first_violation_offset_hz"] = *art.mask->first_violation_offset_hz;
        }
        s["results"]["evm"] = nlohmann::json::array();
        for (size_t m = 0; m < art.subbands.size(); ++m) {
            const auto& sub = c.subbands[m];
            for (size_t u = 0; u < sub.sets.size(); ++u) {
                const size_t head = sub.sets[u].front();
                const metrics::SetEvm& se = art.subbands[m].evm.sets[u];
                nlohmann::json e;
                e["subband"] = m;
                e["set"] = u;
                e["scs_hz"] = c.cfg.subbands[m].symbols[head].scs_hz;
                e["l_act"] = sub.l_act[head];
                e["modulation"] = cpofdm::modulation_name(c.cfg.subbands[m].modulation);
                e["symbols"] = sub.sets[u].size();
                e["n_evm"] = se.n_evm;
                e["avg_db_low"] = se.low.avg_db;
                e["avg_db_ref"] = se.ref.avg_db;
                e["avg_db_high"] = se.high.avg_db;
                if (!se.zero_energy_subcarriers.empty())
                    e["zero_energy_subcarriers"] = se.zero_energy_subcarriers;
                s["results"]["evm"].push_back(e);
            }
        }
        const fs::path p = fs::path(dir) / "summary.json";
        auto out = detail::open_out(p);
        out << s.dump(2) << "\n";
        written.push_back(p.string());
    }

    if (plots) {
        std::vector<double> freq(static_cast<size_t>(art.psd_raw.n_psd));
        for (long k = 0; k < art.psd_raw.n_psd; ++k) freq[static_cast<size_t>(k)] = art.psd_raw.freq_at(k);
        const fs::path p = fs::path(dir) / "psd.svg";
        detail::write_svg(p, "PSD [dB] vs frequency [Hz]", freq,
                          {art.psd_raw.values_db, art.psd_smoothed.values_db}, {"raw", "smoothed"});
        written.push_back(p.string());
        for (size_t m = 0; m < art.subbands.size(); ++m) {
            const auto& sub = c.subbands[m];
            for (size_t u = 0; u < sub.sets.size(); ++u) {
                const metrics::SetEvm& se = art.subbands[m].evm.sets[u];
                std::vector<double> idx(se.ref.mse.size());
                std::vector<double> lo(se.ref.mse.size()), rf(se.ref.mse.size()), hi(se.ref.mse.size());
                for (size_t sc = 0; sc < se.ref.mse.size(); ++sc) {
                    idx[sc] = static_cast<double>(sc);
                    lo[sc] = power_db(se.low.mse[sc], metrics::evm_floor_db);
                    rf[sc] = power_db(se.ref.mse[sc], metrics::evm_floor_db);
                    hi[sc] = power_db(se.high.mse[sc], metrics::evm_floor_db);
                }
                const fs::path ep = fs::path(dir) / strf("evm_subband%zu_set%zu.svg", m, u);
                detail::write_svg(ep, strf("EVM subband %zu set %zu [dB] vs subcarrier", m, u), idx,
                                  {lo, rf, hi}, {"low", "ref", "high"});
                written.push_back(ep.string());
            }
        }
    }
    return written;
}

} // namespace fcofdm::scenario
