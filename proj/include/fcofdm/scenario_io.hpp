#pragma once

#include <fstream>

#include <json.hpp>

#include "scenario.hpp"

namespace fcofdm::scenario {

namespace detail {

using nlohmann::json;

inline const json& at(const json& j, const char* key, const std::string& path) {
    if (!j.contains(key)) fail(path + "." + key + ": missing");
    return j[key];
}

template <typename T>
T get_or(const json& j, const char* key, T def, const std::string& path) {
    if (!j.contains(key) || j[key].is_null()) return def;
    try {
        return j[key].get<T>();
    } catch (const std::exception&) {
        fail(path + "." + key + ": wrong type");
    }
}

inline std::vector<SymbolAlloc> parse_symbols(const json& arr, const std::string& path) {
    if (!arr.is_array() || arr.empty()) fail(path + ": must be a non-empty array");
    std::vector<SymbolAlloc> out;
    for (size_t i = 0; i < arr.size(); ++i) {
        const std::string sp = path + strf("[%zu]", i);
        const json& e = arr[i];
        SymbolAlloc a;
        a.scs_hz = at(e, "scs_hz", sp).get<double>();
        a.l_act = at(e, "l_act", sp).get<long>();
        a.f_center_hz = get_or<double>(e, "f_center_hz", 0.0, sp);
        const long count = get_or<long>(e, "count", 1, sp);
        if (count < 1) fail(sp + ".count: must be positive");
        for (long k = 0; k < count; ++k) out.push_back(a);
    }
    return out;
}

} // namespace detail

inline ScenarioConfig parse_scenario(const nlohmann::json& j, const std::string& origin = "scenario") {
    using detail::at;
    using detail::get_or;
    ScenarioConfig cfg;
    cfg.schema_version = get_or<int>(j, "schema_version", 1, origin);
    cfg.name = get_or<std::string>(j, "name", "", origin);

    const nlohmann::json& ch = at(j, "channel", origin);
    cfg.channel.f_ch_bw = at(ch, "bandwidth_hz", origin + ".channel").get<double>();
    cfg.channel.f_s = get_or<double>(ch, "sample_rate_hz", 0.0, origin + ".channel");
    if (ch.contains("p_max_dbm") && !ch["p_max_dbm"].is_null())
        cfg.channel.p_max_dbm = ch["p_max_dbm"].get<double>();

    const std::string cp = get_or<std::string>(j, "cp", "normal", origin);
    if (cp == "extended") fail(origin + ".cp: extended CP is not supported");
    if (cp != "normal") fail(origin + ".cp: unknown CP type '" + cp + "'");

    if (j.contains("fc")) {
        const nlohmann::json& fc = j["fc"];
        cfg.n_long = get_or<long>(fc, "n_long", 0, origin + ".fc");
        cfg.scheme = fcfb::scheme_from_name(get_or<std::string>(fc, "scheme", "ols", origin + ".fc"));
    }
    cfg.r_hsf = get_or<int>(j, "half_subframes", 1, origin);
    cfg.seed = get_or<std::uint64_t>(j, "seed", 1, origin);
    cfg.tx = tx_from_name(get_or<std::string>(j, "tx", "fc", origin));
    cfg.rx = rx_from_name(get_or<std::string>(j, "rx", "fc", origin));

    if (j.contains("metrics")) {
        const nlohmann::json& me = j["metrics"];
        cfg.metrics.n_psd = get_or<long>(me, "n_psd", 0, origin + ".metrics");
        cfg.metrics.mbw_hz = get_or<double>(me, "mbw_hz", 100e3, origin + ".metrics");
        cfg.metrics.evm_cp_fraction = get_or<double>(me, "evm_cp_fraction", 0.5, origin + ".metrics");
        cfg.metrics.mask = get_or<bool>(me, "mask", false, origin + ".metrics");
    }

    const nlohmann::json& subs = at(j, "subbands", origin);
    if (!subs.is_array()) fail(origin + ".subbands: must be an array");
    for (size_t m = 0; m < subs.size(); ++m) {
        const std::string sp = origin + strf(".subbands[%zu]", m);
        const nlohmann::json& s = subs[m];
        SubbandConfig sb;
        sb.modulation = cpofdm::modulation_from_name(get_or<std::string>(s, "modulation", "qpsk", sp));
        sb.l_short = get_or<long>(s, "l_short", 0, sp);
        if (s.contains("window")) {
            const nlohmann::json& w = s["window"];
            sb.window.n_tb = get_or<long>(w, "n_tb", -1, sp + ".window");
            sb.window.weights_file = get_or<std::string>(w, "weights_file", "", sp + ".window");
            sb.window.phi_fd = get_or<double>(w, "phi_fd", 0.0, sp + ".window");
        }
        sb.symbols = detail::parse_symbols(at(s, "symbols", sp), sp + ".symbols");
        cfg.subbands.push_back(std::move(sb));
    }
    return cfg;
}

inline nlohmann::json to_json(const ScenarioConfig& cfg) {
    nlohmann::json j;
    j["schema_version"] = cfg.schema_version;
    if (!cfg.name.empty()) j["name"] = cfg.name;
    j["channel"]["bandwidth_hz"] = cfg.channel.f_ch_bw;
    if (cfg.channel.f_s > 0.0) j["channel"]["sample_rate_hz"] = cfg.channel.f_s;
    if (cfg.channel.p_max_dbm) j["channel"]["p_max_dbm"] = *cfg.channel.p_max_dbm;
    j["cp"] = "normal";
    j["fc"]["n_long"] = cfg.n_long;
    j["fc"]["scheme"] = fcfb::scheme_name(cfg.scheme);
    j["half_subframes"] = cfg.r_hsf;
    j["seed"] = cfg.seed;
    j["tx"] = tx_name(cfg.tx);
    j["rx"] = rx_name(cfg.rx);
    j["metrics"]["n_psd"] = cfg.metrics.n_psd;
    j["metrics"]["mbw_hz"] = cfg.metrics.mbw_hz;
    j["metrics"]["evm_cp_fraction"] = cfg.metrics.evm_cp_fraction;
    j["metrics"]["mask"] = cfg.metrics.mask;
    j["subbands"] = nlohmann::json::array();
    for (const auto& sb : cfg.subbands) {
        nlohmann::json s;
        s["modulation"] = cpofdm::modulation_name(sb.modulation);
        s["l_short"] = sb.l_short;
        s["window"]["n_tb"] = sb.window.n_tb;
        s["window"]["weights_file"] = sb.window.weights_file;
        s["window"]["phi_fd"] = sb.window.phi_fd;
        s["symbols"] = nlohmann::json::array();
        // run-length compress consecutive identical symbols
        size_t n = 0;
        while (n < sb.symbols.size()) {
            size_t run = 1;
            while (n + run < sb.symbols.size() && sb.symbols[n + run] == sb.symbols[n]) ++run;
            nlohmann::json e;
            e["scs_hz"] = sb.symbols[n].scs_hz;
            e["l_act"] = sb.symbols[n].l_act;
            e["f_center_hz"] = sb.symbols[n].f_center_hz;
            if (run > 1) e["count"] = run;
            s["symbols"].push_back(e);
            n += run;
        }
        j["subbands"].push_back(s);
    }
    return j;
}

/// Parse and fully validate a scenario file; any constraint violation throws.
inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open scenario file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail(path + ": JSON parse error: " + e.what());
    }
    ScenarioConfig cfg = parse_scenario(j, path);
    compile(cfg);  // eager validation
    return cfg;
}

inline void save_scenario(const ScenarioConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write scenario file: " + path);
    out << to_json(cfg).dump(2) << "\n";
}

inline std::vector<std::string> builtin_names() {
    return {"exampleA", "exampleB", "exampleC", "exampleD"};
}

namespace detail {

inline std::vector<SymbolAlloc> repeated(double scs, long l_act, double f_center, long count) {
    return std::vector<SymbolAlloc>(static_cast<size_t>(count), SymbolAlloc{scs, l_act, f_center});
}

inline void append(std::vector<SymbolAlloc>& dst, const std::vector<SymbolAlloc>& src) {
    dst.insert(dst.end(), src.begin(), src.end());
}

/// 50 MHz channel split into four bandwidth parts with mixed numerology.
inline ScenarioConfig example_a() {
    ScenarioConfig cfg;
    cfg.name = "exampleA";
    cfg.channel.f_ch_bw = 50e6;
    cfg.channel.f_s = 61.44e6;
    cfg.n_long = 1024;
    cfg.scheme = fcfb::Scheme::ols;
    cfg.r_hsf = 1;
    cfg.seed = 1;
    cfg.subbands.resize(4);
    cfg.subbands[0].modulation = cpofdm::Modulation::qam64;
    cfg.subbands[0].symbols = repeated(30e3, 132, -21240e3, 14);
    cfg.subbands[1].modulation = cpofdm::Modulation::qam16;
    cfg.subbands[1].symbols = repeated(15e3, 624, -13860e3, 7);
    cfg.subbands[2].modulation = cpofdm::Modulation::qpsk;
    cfg.subbands[2].symbols = repeated(60e3, 288, 180e3, 28);
    cfg.subbands[3].modulation = cpofdm::Modulation::qam16;
    cfg.subbands[3].symbols = repeated(30e3, 456, 16380e3, 14);
    return cfg;
}

/// 20 MHz wide-band carrier with two pairs of guard-band narrow-band carriers,
/// each pair filtered as one subband.
inline ScenarioConfig example_b() {
    ScenarioConfig cfg;
    cfg.name = "exampleB";
    cfg.channel.f_ch_bw = 20e6;
    cfg.channel.f_s = 30.72e6;
    cfg.n_long = 2048;
    cfg.scheme = fcfb::Scheme::ols;
    cfg.r_hsf = 1;
    cfg.seed = 2;
    cfg.subbands.resize(3);
    cfg.subbands[0].modulation = cpofdm::Modulation::qpsk;
    cfg.subbands[0].symbols = repeated(15e3, 24, -5040e3, 7);
    cfg.subbands[1].modulation = cpofdm::Modulation::qam64;
    cfg.subbands[1].symbols = repeated(30e3, 312, 0.0, 14);
    cfg.subbands[2].modulation = cpofdm::Modulation::qpsk;
    cfg.subbands[2].symbols = repeated(15e3, 24, 5040e3, 7);
    return cfg;
}

/// Synchronization-block-like puncturing in a 10 MHz channel: a 15 kHz
/// wide-band allocation punctured by 60 kHz symbols, and a 30 kHz allocation
/// punctured by one 15 kHz symbol, with about 360 kHz guards at the seams.
inline ScenarioConfig example_c() {
    ScenarioConfig cfg;
    cfg.name = "exampleC";
    cfg.channel.f_ch_bw = 10e6;
    cfg.channel.f_s = 15.36e6;
    cfg.n_long = 512;
    cfg.scheme = fcfb::Scheme::ols;
    cfg.r_hsf = 1;
    cfg.seed = 3;

    const double left48 = -4320e3, right48 = 4320e3;
    const double left24 = -3960e3, right24 = 3960e3;

    auto quiet_tail_30k = repeated(30e3, 0, 0.0, 6);

    SubbandConfig wide624;  // active on 15 kHz symbols 0 and 3
    wide624.symbols = repeated(15e3, 624, 0.0, 1);
    append(wide624.symbols, repeated(15e3, 0, 0.0, 2));
    append(wide624.symbols, repeated(15e3, 624, 0.0, 1));
    append(wide624.symbols, quiet_tail_30k);

    SubbandConfig chunk_l48;  // outer remainders while the 60 kHz puncture is on
    chunk_l48.symbols = repeated(15e3, 0, 0.0, 1);
    append(chunk_l48.symbols, repeated(15e3, 48, left48, 2));
    append(chunk_l48.symbols, repeated(15e3, 0, 0.0, 1));
    append(chunk_l48.symbols, quiet_tail_30k);
    SubbandConfig chunk_r48 = chunk_l48;
    for (auto& s : chunk_r48.symbols)
        if (s.l_act > 0) s.f_center_hz = right48;

    SubbandConfig punct60;  // eight 60 kHz symbols in the middle of the band
    punct60.symbols = repeated(60e3, 0, 0.0, 4);
    append(punct60.symbols, repeated(60e3, 120, 0.0, 8));
    append(punct60.symbols, repeated(60e3, 0, 0.0, 16));

    SubbandConfig wide288;  // 30 kHz allocation, punctured on its symbols 2 and 3
    wide288.symbols = repeated(15e3, 0, 0.0, 4);
    append(wide288.symbols, repeated(30e3, 288, 0.0, 2));
    append(wide288.symbols, repeated(30e3, 0, 0.0, 2));
    append(wide288.symbols, repeated(30e3, 288, 0.0, 2));

    SubbandConfig punct432;  // one 15 kHz symbol inside the 30 kHz allocation
    punct432.symbols = repeated(15e3, 0, 0.0, 4);
    append(punct432.symbols, repeated(30e3, 0, 0.0, 2));
    append(punct432.symbols, repeated(15e3, 432, 0.0, 1));
    append(punct432.symbols, repeated(30e3, 0, 0.0, 2));

    SubbandConfig chunk_l24;  // outer remainders of the 30 kHz allocation
    chunk_l24.symbols = repeated(15e3, 0, 0.0, 4);
    append(chunk_l24.symbols, repeated(30e3, 0, 0.0, 2));
    append(chunk_l24.symbols, repeated(30e3, 24, left24, 2));
    append(chunk_l24.symbols, repeated(30e3, 0, 0.0, 2));
    SubbandConfig chunk_r24 = chunk_l24;
    for (auto& s : chunk_r24.symbols)
        if (s.l_act > 0) s.f_center_hz = right24;

    for (auto* sb : {&wide624, &chunk_l48, &chunk_r48, &punct60, &wide288, &punct432, &chunk_l24, &chunk_r24})
        sb->modulation = cpofdm::Modulation::qpsk;

    cfg.subbands = {chunk_l48, chunk_l24, wide624, punct60, punct432, wide288, chunk_r24, chunk_r48};
    return cfg;
}

/// Two bandwidth parts reconfigured at symbol level: one sweeping its center
/// every 15 kHz symbol, the other hopping across the band mid-frame.
inline ScenarioConfig example_d() {
    ScenarioConfig cfg;
    cfg.name = "exampleD";
    cfg.channel.f_ch_bw = 10e6;
    cfg.channel.f_s = 15.36e6;
    cfg.n_long = 1024;
    cfg.scheme = fcfb::Scheme::ols;
    cfg.r_hsf = 1;
    cfg.seed = 4;
    cfg.subbands.resize(2);
    cfg.subbands[0].modulation = cpofdm::Modulation::qpsk;
    for (int n = 0; n < 7; ++n)
        cfg.subbands[0].symbols.push_back({15e3, 192, 64.0 * (n - 3) * 15e3});
    cfg.subbands[1].modulation = cpofdm::Modulation::qpsk;
    append(cfg.subbands[1].symbols, repeated(30e3, 72, 218.0 * 15e3, 7));
    append(cfg.subbands[1].symbols, repeated(30e3, 72, -218.0 * 15e3, 7));
    return cfg;
}

} // namespace detail

inline ScenarioConfig builtin_scenario(const std::string& name) {
    if (name == "exampleA") return detail::example_a();
    if (name == "exampleB") return detail::example_b();
    if (name == "exampleC") return detail::example_c();
    if (name == "exampleD") return detail::example_d();
    fail("unknown builtin scenario '" + name + "' (run list-builtins)");
}

} // namespace fcofdm::scenario
