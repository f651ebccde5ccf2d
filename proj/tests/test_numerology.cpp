#include <catch_amalgamated.hpp>

#include <fcofdm/numerology.hpp>

using namespace fcofdm;
using namespace fcofdm::numerology;

TEST_CASE("sample rates follow the nominal channel table") {
    CHECK(sample_rate_for_channel(10e6) == 15.36e6);
    CHECK(sample_rate_for_channel(100e6) == 122.88e6);
    CHECK(sample_rate_for_channel(25e6) == 30.72e6);
    CHECK(sample_rate_for_channel(5e6) == 7.68e6);
    CHECK_THROWS_AS(sample_rate_for_channel(12.345e6), error);
}

TEST_CASE("half subframe sample counts") {
    CHECK(half_subframe_samples(15.36e6) == 7680);
    CHECK(half_subframe_samples(7.68e6) == 3840);
    CHECK(half_subframe_samples(61.44e6) == 30720);
    CHECK_THROWS_AS(half_subframe_samples(15.361e6), error);
}

TEST_CASE("OFDM transform lengths") {
    CHECK(ofdm_transform_length(15.36e6, 15e3) == 1024);
    CHECK(ofdm_transform_length(15.36e6, 60e3) == 256);
    CHECK(ofdm_transform_length(61.44e6, 30e3) == 2048);
    CHECK_THROWS_AS(ofdm_transform_length(15.36e6, 14e3), error);
    CHECK_THROWS_AS(ofdm_transform_length(122.88e6, 15e3), error);  // 8192 > 4096
}

TEST_CASE("seven 15 kHz symbols in a 10 MHz half subframe") {
    const auto plan = plan_half_subframe(15.36e6, std::vector<double>(7, 15e3));
    REQUIRE(plan.symbols.size() == 7);
    CHECK(plan.alpha == 8);
    CHECK(plan.n_hsf == 7680);
    CHECK(plan.r_hsf == 1);
    CHECK(plan.symbols[0].n_cp == 80);
    for (int n = 1; n < 7; ++n) CHECK(plan.symbols[n].n_cp == 72);
    long total = 0;
    for (const auto& s : plan.symbols) total += s.n_ofdm + s.n_cp;
    CHECK(total == 7680);
    CHECK(plan.symbols[0].first_of_half_subframe);
    for (int n = 1; n < 7; ++n) CHECK_FALSE(plan.symbols[n].first_of_half_subframe);
}

TEST_CASE("7.68 MHz half subframe balances alpha = 4") {
    // oracle: brute-force tiling check with alpha = 3840 mod 137
    REQUIRE(3840 % 137 == 4);
    const auto plan = plan_half_subframe(7.68e6, std::vector<double>(7, 15e3));
    CHECK(plan.alpha == 4);
    CHECK(plan.symbols[0].n_cp == 40);
    for (int n = 1; n < 7; ++n) CHECK(plan.symbols[n].n_cp == 36);
    long total = 0;
    for (const auto& s : plan.symbols) total += s.n_ofdm + s.n_cp;
    CHECK(total == 3840);
}

TEST_CASE("time-multiplexed mixed numerology tiles one half subframe") {
    const std::vector<double> k = {30e3, 30e3, 15e3, 60e3, 60e3, 60e3, 60e3,
                                   15e3, 30e3, 30e3, 15e3, 60e3, 60e3, 60e3, 60e3};
    const auto plan = plan_half_subframe(15.36e6, k);
    long total = 0;
    for (const auto& s : plan.symbols) total += s.n_ofdm + s.n_cp;
    CHECK(total == 7680);
    CHECK(plan.r_hsf == 1);
    CHECK(plan.symbols[0].n_cp == 36 + 8);
}

TEST_CASE("sequences that do not tile are rejected with the deficit") {
    CHECK_THROWS_WITH(plan_half_subframe(15.36e6, std::vector<double>(6, 15e3)),
                      Catch::Matchers::ContainsSubstring("deficit"));
    // a 30 kHz symbol crossing the boundary after six 15 kHz symbols
    std::vector<double> bad(6, 15e3);
    bad.insert(bad.end(), {30e3, 30e3, 15e3});
    CHECK_THROWS_AS(plan_half_subframe(15.36e6, bad), error);
}

TEST_CASE("multi half-subframe plans mark each first symbol") {
    const auto plan = plan_half_subframe(15.36e6, std::vector<double>(14, 15e3));
    CHECK(plan.r_hsf == 2);
    int firsts = 0;
    for (const auto& s : plan.symbols) firsts += s.first_of_half_subframe ? 1 : 0;
    CHECK(firsts == 2);
    CHECK(plan.symbols[7].first_of_half_subframe);
    CHECK(plan.symbols[7].n_cp == 80);
}

TEST_CASE("guard bands") {
    CHECK(guard_band(10e6, 15e3, 624) == Catch::Approx(312.5e3));
    CHECK(guard_band(15e3 * 625, 15e3, 624) == Catch::Approx(0.0));
    CHECK(guard_band(10e6, 30e3, 288) == Catch::Approx(665e3));
    CHECK_THROWS_AS(guard_band(5e6, 15e3, 624), error);
}

TEST_CASE("doubling the spacing halves the transform and the base CP") {
    for (double f_s : {7.68e6, 15.36e6, 61.44e6}) {
        for (double scs : {15e3, 30e3}) {
            const auto a = plan_half_subframe(f_s, std::vector<double>(7 * std::lround(scs / 15e3), scs));
            const auto b = plan_half_subframe(f_s, std::vector<double>(14 * std::lround(scs / 15e3), 2 * scs));
            CHECK(b.symbols[1].n_ofdm * 2 == a.symbols[1].n_ofdm);
            CHECK(b.symbols[1].n_cp * 2 == a.symbols[1].n_cp);
        }
    }
}

TEST_CASE("alpha equals the half-subframe residue for every supported rate") {
    for (double f_s : {7.68e6, 15.36e6, 23.04e6, 30.72e6, 46.08e6, 61.44e6, 92.16e6, 122.88e6}) {
        CHECK(cp_excess(f_s) == half_subframe_samples(f_s) % 137);
    }
    CHECK(cp_excess(15.36e6) == 8);
}

TEST_CASE("table file round-trips and matches the builtin values") {
    const Tables builtin = Tables::builtin();
    const Tables loaded = Tables::load(std::string(FCOFDM_DATA_DIR) + "/nr_tables.txt");
    CHECK(builtin == loaded);
    CHECK(loaded.sample_rate(10e6) == 15.36e6);
    CHECK(loaded.n_prb_max(10e6, 15e3).value() == 52);
    CHECK(loaded.l_act_max(10e6, 15e3).value() == 624);
    CHECK(loaded.l_act_max(50e6, 30e3).value() == 12 * 133);
    CHECK_FALSE(loaded.n_prb_max(60e6, 15e3).has_value());

    const std::string tmp = "nr_tables_roundtrip.txt";
    builtin.save(tmp);
    CHECK(Tables::load(tmp) == builtin);
    std::remove(tmp.c_str());
}
