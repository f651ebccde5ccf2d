#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <fcofdm/fcofdm.hpp>

using namespace fcofdm;
using namespace fcofdm::scenario;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("builtin list is stable") {
    CHECK(builtin_names() == std::vector<std::string>{"exampleA", "exampleB", "exampleC", "exampleD"});
    CHECK_THROWS_AS(builtin_scenario("nosuch"), error);
}

TEST_CASE("shipped scenario files match the builtins") {
    for (const std::string& name : builtin_names()) {
        const ScenarioConfig file =
            load_scenario(std::string(FCOFDM_DATA_DIR) + "/scenarios/" + name + ".json");
        const ScenarioConfig builtin = builtin_scenario(name);
        CHECK(file == builtin);
    }
}

TEST_CASE("channelization example compiles to the documented geometry") {
    const ScenarioConfig cfg = builtin_scenario("exampleA");
    REQUIRE(cfg.subbands.size() == 4);
    CHECK(cfg.subbands[0].symbols[0].f_center_hz == -21240e3);
    CHECK(cfg.subbands[1].symbols[0].f_center_hz == -13860e3);
    CHECK(cfg.subbands[2].symbols[0].f_center_hz == 180e3);
    CHECK(cfg.subbands[3].symbols[0].f_center_hz == 16380e3);
    CHECK(cfg.subbands[0].symbols[0].l_act == 132);
    CHECK(cfg.subbands[1].symbols[0].l_act == 624);
    CHECK(cfg.subbands[2].symbols[0].l_act == 288);
    CHECK(cfg.subbands[3].symbols[0].l_act == 456);

    const Compiled c = compile(cfg);
    CHECK(c.f_bs == 60e3);
    CHECK(c.subbands[0].fc.l_short == 256);
    CHECK(c.subbands[1].fc.l_short == 256);
    CHECK(c.subbands[2].fc.l_short == 512);
    CHECK(c.subbands[3].fc.l_short == 256);
    CHECK(c.subbands[1].fc.interp() == 4);
    CHECK(c.subbands[1].low_plan.symbols[0].n_ofdm == 1024);
    // one symbol set per subband in this static layout
    for (const auto& sub : c.subbands) CHECK(sub.sets.size() == 1);
}

TEST_CASE("guard-band carrier example uses three subbands") {
    const ScenarioConfig cfg = builtin_scenario("exampleB");
    REQUIRE(cfg.subbands.size() == 3);
    CHECK(cfg.subbands[0].symbols[0].l_act == 24);
    CHECK(cfg.subbands[1].symbols[0].l_act == 312);
    CHECK(cfg.subbands[2].symbols[0].l_act == 24);
    const Compiled c = compile(cfg);
    // 180 kHz grid-nominal guard between the wide-band carrier and each pair
    const double wb_high = 0.0 + 312 / 2.0 * 30e3;
    const double nb_low = 5040e3 - 24 / 2.0 * 15e3;
    CHECK(nb_low - wb_high == Catch::Approx(180e3));
    CHECK(c.subbands[0].fc.interp() == 8);
}

TEST_CASE("puncturing example keeps 360 kHz guards at the seams") {
    const ScenarioConfig cfg = builtin_scenario("exampleC");
    const Compiled c = compile(cfg);
    // while the 60 kHz puncture is active: outer 48-carrier chunks vs the
    // 120-carrier 60 kHz allocation, grid-nominal edges
    const double chunk_high = -4320e3 + 48 / 2.0 * 15e3;
    const double punct_low = 0.0 - 120 / 2.0 * 60e3;
    CHECK(punct_low - chunk_high == Catch::Approx(360e3));
    // while the 432-carrier 15 kHz puncture is active: outer 24-carrier chunks
    const double chunk24_high = -3960e3 + 24 / 2.0 * 30e3;
    const double p432_low = 0.0 - 432 / 2.0 * 15e3;
    CHECK(p432_low - chunk24_high == Catch::Approx(360e3));
    CHECK(c.subbands.size() == 8);
}

TEST_CASE("adjustable example reconfigures at symbol level") {
    const ScenarioConfig cfg = builtin_scenario("exampleD");
    REQUIRE(cfg.subbands.size() == 2);
    for (int n = 0; n < 7; ++n)
        CHECK(cfg.subbands[0].symbols[static_cast<size_t>(n)].f_center_hz == 64.0 * (n - 3) * 15e3);
    CHECK(cfg.subbands[1].symbols[0].f_center_hz == 218.0 * 15e3);
    CHECK(cfg.subbands[1].symbols[13].f_center_hz == -218.0 * 15e3);

    const Compiled c = compile(cfg);
    // window changes happen exactly at block payload starts of the owning symbols
    for (const auto& sub : c.subbands) {
        const auto bounds = sub.low_plan.boundaries();
        int changes = 0;
        for (size_t r = 1; r < sub.sched.blocks.size(); ++r) {
            if (!sub.block_windows[r].same_shape(sub.block_windows[r - 1]) ||
                sub.block_offsets[r] != sub.block_offsets[r - 1]) {
                ++changes;
                const long start = sub.sched.blocks[r].payload_start;
                CHECK(std::find(bounds.begin(), bounds.end(), start) != bounds.end());
                CHECK(sub.block_owner[r] != sub.block_owner[r - 1]);
            }
        }
        CHECK(changes > 0);
    }
    // both subbands collapse to a single (scs, l_act) set despite moving centers
    CHECK(c.subbands[0].sets.size() == 1);
    CHECK(c.subbands[0].sets[0].size() == 7);
    CHECK(c.subbands[1].sets.size() == 1);
    CHECK(c.subbands[1].sets[0].size() == 14);
}

TEST_CASE("invalid scenario files are rejected with the offending path") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "fcofdm_cfg_tests";
    fs::create_directories(dir);

    SECTION("overlapping passbands") {
        ScenarioConfig cfg = builtin_scenario("exampleD");
        cfg.subbands[1].symbols[0].f_center_hz = cfg.subbands[0].symbols[0].f_center_hz + 15e3;
        save_scenario(cfg, (dir / "overlap.json").string());
        CHECK_THROWS_WITH(load_scenario((dir / "overlap.json").string()),
                          Catch::Matchers::ContainsSubstring("overlap"));
    }
    SECTION("forward transform below the minimum") {
        ScenarioConfig cfg = builtin_scenario("exampleD");
        cfg.subbands[0].l_short = 128;
        save_scenario(cfg, (dir / "l128.json").string());
        CHECK_THROWS_WITH(load_scenario((dir / "l128.json").string()),
                          Catch::Matchers::ContainsSubstring("256"));
    }
    SECTION("extended CP") {
        nlohmann::json j = to_json(builtin_scenario("exampleD"));
        j["cp"] = "extended";
        std::ofstream((dir / "ext.json").string()) << j.dump(2);
        CHECK_THROWS_WITH(load_scenario((dir / "ext.json").string()),
                          Catch::Matchers::ContainsSubstring("extended"));
    }
    SECTION("missing fields name their path") {
        std::ofstream((dir / "empty.json").string()) << "{}";
        CHECK_THROWS_WITH(load_scenario((dir / "empty.json").string()),
                          Catch::Matchers::ContainsSubstring("channel"));
    }
    SECTION("symbols that do not tile the half subframes") {
        ScenarioConfig cfg = builtin_scenario("exampleD");
        cfg.subbands[0].symbols.pop_back();
        save_scenario(cfg, (dir / "notile.json").string());
        CHECK_THROWS_WITH(load_scenario((dir / "notile.json").string()),
                          Catch::Matchers::ContainsSubstring("tile"));
    }
    SECTION("center off the bin grid") {
        ScenarioConfig cfg = builtin_scenario("exampleD");
        cfg.subbands[0].symbols[3].f_center_hz = 7.5e3;
        save_scenario(cfg, (dir / "offgrid.json").string());
        CHECK_THROWS_WITH(load_scenario((dir / "offgrid.json").string()),
                          Catch::Matchers::ContainsSubstring("bin spacing"));
    }
}

TEST_CASE("scenario runs are deterministic at the byte level") {
    namespace fs = std::filesystem;
    ScenarioConfig cfg = builtin_scenario("exampleD");
    cfg.seed = 7;
    const fs::path dir = fs::temp_directory_path() / "fcofdm_det";
    fs::remove_all(dir);
    const RunArtifacts a = run_scenario(cfg);
    const auto files_a = export_artifacts(a, (dir / "a").string());
    const RunArtifacts b = run_scenario(cfg);
    const auto files_b = export_artifacts(b, (dir / "b").string());
    REQUIRE(files_a.size() == files_b.size());
    for (size_t i = 0; i < files_a.size(); ++i)
        CHECK(slurp(files_a[i]) == slurp(files_b[i]));

    // different seeds produce different payloads
    cfg.seed = 8;
    const RunArtifacts d = run_scenario(cfg);
    CHECK(d.tx_waveform != a.tx_waveform);
}

TEST_CASE("exports round-trip and enumerate every symbol set") {
    namespace fs = std::filesystem;
    ScenarioConfig cfg = builtin_scenario("exampleD");
    const RunArtifacts art = run_scenario(cfg);
    const fs::path dir = fs::temp_directory_path() / "fcofdm_export";
    fs::remove_all(dir);
    const auto files = export_artifacts(art, dir.string(), true);

    SECTION("psd.csv reproduces the in-memory vectors bit-exactly") {
        std::ifstream in((dir / "psd.csv").string());
        std::string header;
        std::getline(in, header);
        CHECK(header == "freq_hz,raw_db,smoothed_db");
        for (long k = 0; k < art.psd_raw.n_psd; ++k) {
            std::string line;
            REQUIRE(std::getline(in, line));
            const size_t c1 = line.find(','), c2 = line.find(',', c1 + 1);
            CHECK(std::strtod(line.substr(0, c1).c_str(), nullptr) == art.psd_raw.freq_at(k));
            CHECK(std::strtod(line.substr(c1 + 1, c2 - c1 - 1).c_str(), nullptr) ==
                  art.psd_raw.values_db[static_cast<size_t>(k)]);
            CHECK(std::strtod(line.substr(c2 + 1).c_str(), nullptr) ==
                  art.psd_smoothed.values_db[static_cast<size_t>(k)]);
        }
    }
    SECTION("summary.json has one EVM triple per subband and set") {
        nlohmann::json j;
        std::ifstream((dir / "summary.json").string()) >> j;
        REQUIRE(j["results"]["evm"].size() == 2);
        for (const auto& e : j["results"]["evm"]) {
            CHECK(e.contains("avg_db_low"));
            CHECK(e.contains("avg_db_ref"));
            CHECK(e.contains("avg_db_high"));
        }
        CHECK(j["results"].contains("edge_level_db"));
        CHECK(j["config"]["name"] == "exampleD");
    }
    SECTION("plot files accompany the tables") {
        CHECK(fs::exists(dir / "psd.svg"));
        CHECK(fs::exists(dir / "evm_subband0_set0.svg"));
    }
}

TEST_CASE("scenario JSON round-trips through save and load") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "fcofdm_cfg_tests";
    fs::create_directories(dir);
    for (const std::string& name : builtin_names()) {
        const ScenarioConfig cfg = builtin_scenario(name);
        const std::string path = (dir / (name + "_rt.json")).string();
        save_scenario(cfg, path);
        CHECK(load_scenario(path) == cfg);
    }
}

TEST_CASE("zero-subband scenarios produce a silent waveform") {
    ScenarioConfig cfg;
    cfg.channel.f_ch_bw = 10e6;
    cfg.channel.f_s = 15.36e6;
    cfg.n_long = 1024;
    cfg.r_hsf = 1;
    const RunArtifacts art = run_scenario(cfg);
    CHECK(art.tx_waveform.size() == 7680);
    for (const cd& v : art.tx_waveform) CHECK(std::abs(v) == 0.0);
    for (double v : art.psd_raw.values_db) CHECK(v == -400.0);
}

TEST_CASE("back-to-back filtered TX and RX meet -40 dB on the adjustable example") {
    const RunArtifacts art = run_scenario(builtin_scenario("exampleD"));
    for (const auto& sub : art.subbands)
        for (const auto& set : sub.evm.sets) {
            CHECK(set.ref.avg_db <= -40.0);  // measured -49.0 and -50.7
            CHECK(set.low.avg_db > metrics::evm_floor_db);
            CHECK(set.high.avg_db > metrics::evm_floor_db);
        }
}

TEST_CASE("a 10 MHz single-carrier run at 33 dBm clears the emission mask") {
    ScenarioConfig cfg;
    cfg.name = "sc10";
    cfg.channel.f_ch_bw = 10e6;
    cfg.channel.f_s = 15.36e6;
    cfg.channel.p_max_dbm = 33.0;
    cfg.n_long = 1024;
    cfg.r_hsf = 1;
    cfg.seed = 5;
    cfg.metrics.mask = true;
    cfg.subbands.resize(1);
    cfg.subbands[0].modulation = cpofdm::Modulation::qam16;
    cfg.subbands[0].symbols.assign(7, SymbolAlloc{15e3, 624, 0.0});
    const RunArtifacts art = run_scenario(cfg);
    REQUIRE(art.mask.has_value());
    CHECK(art.mask->pass);
    CHECK(art.mask->worst_margin_db > 0.0);  // measured +19.5 dB
    CHECK(art.mask->bins_checked > 1000);
}

TEST_CASE("time-multiplexed mixed numerology in one subband reports per-set EVM") {
    // three spacings share one subband: 624 SC at 15 kHz, 288 at 30 kHz,
    // 132 at 60 kHz, interleaved over a half subframe
    ScenarioConfig cfg;
    cfg.name = "mixed";
    cfg.channel.f_ch_bw = 10e6;
    cfg.channel.f_s = 15.36e6;
    cfg.r_hsf = 1;
    cfg.seed = 9;
    cfg.subbands.resize(1);
    auto& sb = cfg.subbands[0];
    sb.modulation = cpofdm::Modulation::qam16;
    auto add = [&](double scs, long l_act, int count) {
        for (int i = 0; i < count; ++i) sb.symbols.push_back({scs, l_act, 0.0});
    };
    add(30e3, 288, 2); add(15e3, 624, 1); add(60e3, 132, 4);
    add(15e3, 624, 1); add(30e3, 288, 2); add(15e3, 624, 1); add(60e3, 132, 4);

    const Compiled c = compile(cfg);
    // the automatic choice lands on the coarsest usable bin spacing, which
    // also gives the finest reconfiguration granularity
    CHECK(c.cfg.n_long == 256);
    CHECK(c.f_bs == 60e3);
    REQUIRE(c.subbands[0].sets.size() == 3);
    CHECK(c.subbands[0].sets[0].size() == 4);  // 30 kHz symbols
    CHECK(c.subbands[0].sets[1].size() == 3);  // 15 kHz symbols
    CHECK(c.subbands[0].sets[2].size() == 8);  // 60 kHz symbols

    const RunArtifacts art = run_scenario(cfg);
    const auto& sets = art.subbands[0].evm.sets;
    for (const auto& set : sets) {
        CHECK(set.ref.avg_db <= -45.0);  // measured -59.4, -62.4, -51.7
        CHECK(set.ref.avg_db > metrics::evm_floor_db);
    }
    // the 60 kHz symbols carry the smallest relative guard and the worst EVM
    CHECK(sets[2].ref.avg_db > sets[0].ref.avg_db);
    CHECK(sets[2].ref.avg_db > sets[1].ref.avg_db);
}

TEST_CASE("two half subframes renew the excess and run end to end") {
    ScenarioConfig cfg = builtin_scenario("exampleD");
    for (auto& sb : cfg.subbands) {
        auto proto = sb.symbols;
        sb.symbols.insert(sb.symbols.end(), proto.begin(), proto.end());
    }
    cfg.r_hsf = 2;
    const RunArtifacts art = run_scenario(cfg);
    CHECK(art.tx_waveform.size() == 15360);
    const auto& sched = art.compiled.subbands[0].sched;
    CHECK(sched.blocks.size() == 28);
    CHECK(sched.blocks[14].payload_start ==
          art.compiled.subbands[0].low_plan.n_hsf);  // low-rate half-subframe boundary
    CHECK(sched.blocks[14].l_s == sched.blocks[0].l_s);
    for (const auto& sub : art.subbands)
        for (const auto& set : sub.evm.sets) CHECK(set.ref.avg_db <= -40.0);
}

TEST_CASE("validation is total: every builtin runs to completion") {
    for (const std::string& name : builtin_names()) {
        const RunArtifacts art = run_scenario(builtin_scenario(name));
        CHECK(art.tx_waveform.size() > 0);
        for (const auto& sub : art.subbands)
            for (const auto& set : sub.evm.sets) {
                // every allocation beats the strictest constellation requirement
                CHECK(set.ref.avg_db <= -29.0);
            }
    }
}

TEST_CASE("single-symbol sets degenerate to the floor under per-subcarrier ZF") {
    // one observation per subcarrier is inverted exactly by the least-squares
    // gain, so the 432-carrier puncture of the SSB-like example reads as zero
    const RunArtifacts art = run_scenario(builtin_scenario("exampleC"));
    const Compiled& c = art.compiled;
    bool found_single = false;
    for (size_t m = 0; m < c.subbands.size(); ++m)
        for (size_t u = 0; u < c.subbands[m].sets.size(); ++u) {
            if (c.subbands[m].sets[u].size() == 1) {
                found_single = true;
                CHECK(art.subbands[m].evm.sets[u].ref.avg_db == metrics::evm_floor_db);
            } else {
                CHECK(art.subbands[m].evm.sets[u].ref.avg_db > metrics::evm_floor_db);
            }
        }
    CHECK(found_single);
}

TEST_CASE("plain OFDM and WOLA receive paths report usable EVM") {
    ScenarioConfig cfg = builtin_scenario("exampleD");
    for (RxMode rx : {RxMode::ofdm, RxMode::wola}) {
        cfg.rx = rx;
        const RunArtifacts art = run_scenario(cfg);
        for (const auto& sub : art.subbands)
            for (const auto& set : sub.evm.sets) {
                CHECK(set.ref.avg_db < -20.0);
                CHECK(set.ref.avg_db > metrics::evm_floor_db);
            }
    }
}

TEST_CASE("the WOLA transmit baseline runs end to end") {
    ScenarioConfig cfg = builtin_scenario("exampleA");
    cfg.tx = TxMode::wola;
    cfg.rx = RxMode::ofdm;
    const RunArtifacts art = run_scenario(cfg);
    CHECK(art.tx_waveform.size() == 30720);
    for (const auto& sub : art.subbands)
        for (const auto& set : sub.evm.sets) CHECK(set.ref.avg_db < -25.0);
    // edge emissions are clearly worse than the filtered transmitter's
    const RunArtifacts fc = run_scenario(builtin_scenario("exampleA"));
    CHECK(art.edge_level_db > fc.edge_level_db);
}

TEST_CASE("per-block window ownership follows payload starts") {
    const Compiled c = compile(builtin_scenario("exampleC"));
    for (const auto& sub : c.subbands) {
        const auto bounds = sub.low_plan.boundaries();
        for (size_t r = 0; r < sub.sched.blocks.size(); ++r) {
            const long start = sub.sched.blocks[r].payload_start;
            const size_t owner = sub.block_owner[r];
            CHECK(start >= bounds[owner]);
            if (owner + 1 < bounds.size()) CHECK(start < bounds[owner + 1]);
            // silent owners get a silent window
            if (sub.l_act[owner] == 0) {
                for (const cd& v : sub.block_windows[r].d) CHECK(v == cd(0.0));
            }
        }
    }
}
