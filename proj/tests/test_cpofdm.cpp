#include <catch_amalgamated.hpp>

#include <random>

#include <fcofdm/cpofdm.hpp>

using namespace fcofdm;
using namespace fcofdm::cpofdm;

namespace {

cvec random_grid_symbol(long l_act, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    cvec x(static_cast<size_t>(l_act));
    for (auto& v : x) v = cd(g(gen), g(gen)) / std::sqrt(2.0);
    return x;
}

double max_abs_diff(const cvec& a, const cvec& b) {
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// Dense evaluation of the modulation matrix K * W^H for one symbol.
cvec dense_modulate(const cvec& x, long l_ofdm, long l_cp) {
    const long l_act = static_cast<long>(x.size());
    cvec payload(static_cast<size_t>(l_ofdm), cd(0.0));
    for (long q = 0; q < l_ofdm; ++q) {
        cd acc = 0.0;
        for (long p = 0; p < l_act; ++p)
            acc += x[static_cast<size_t>(p)] *
                   std::polar(1.0 / std::sqrt(static_cast<double>(l_ofdm)),
                              pi * static_cast<double>(q) * static_cast<double>(2 * p - l_act) /
                                  static_cast<double>(l_ofdm));
        payload[static_cast<size_t>(q)] = acc;
    }
    cvec out(static_cast<size_t>(l_ofdm + l_cp));
    std::copy(payload.end() - l_cp, payload.end(), out.begin());
    std::copy(payload.begin(), payload.end(), out.begin() + l_cp);
    return out;
}

/// Dense evaluation of the demodulation matrix: CP removal with shift
/// compensation followed by the pruned DFT.
cvec dense_demodulate(const cvec& y, long l_ofdm, long l_cp, long tau, long l_act) {
    cvec win(static_cast<size_t>(l_ofdm));
    for (long q = 0; q < l_ofdm; ++q) win[static_cast<size_t>(q)] = y[static_cast<size_t>(l_cp - tau + q)];
    cvec shifted(static_cast<size_t>(l_ofdm));
    for (long q = 0; q < l_ofdm; ++q)
        shifted[static_cast<size_t>(q)] = win[static_cast<size_t>((q + tau) % l_ofdm)];
    cvec x(static_cast<size_t>(l_act), cd(0.0));
    for (long p = 0; p < l_act; ++p) {
        cd acc = 0.0;
        for (long q = 0; q < l_ofdm; ++q)
            acc += shifted[static_cast<size_t>(q)] *
                   std::polar(1.0 / std::sqrt(static_cast<double>(l_ofdm)),
                              -pi * static_cast<double>(q) * static_cast<double>(2 * p - l_act) /
                                  static_cast<double>(l_ofdm));
        x[static_cast<size_t>(p)] = acc;
    }
    return x;
}

} // namespace

TEST_CASE("minimum transform lengths") {
    CHECK(min_transform_length(624) == 1024);
    CHECK(min_transform_length(132) == 256);
    CHECK(min_transform_length(12) == 128);
    CHECK(min_transform_length(1) == 128);
    CHECK(min_transform_length(128) == 128);
    CHECK(min_transform_length(129) == 256);
}

TEST_CASE("all-zero grid modulates to an all-zero waveform") {
    const cvec out = modulate_symbol(cvec(64, cd(0.0)), 128, 9);
    for (const cd& v : out) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("DC subcarrier produces a constant payload and CP") {
    const long l_act = 64, l_ofdm = 128, l_cp = 9;
    cvec x(static_cast<size_t>(l_act), cd(0.0));
    x[32] = cd(2.0, -1.0);  // p = l_act/2 maps to zero frequency
    const cvec out = modulate_symbol(x, l_ofdm, l_cp);
    const cd expect = x[32] / std::sqrt(static_cast<double>(l_ofdm));
    for (const cd& v : out) CHECK(std::abs(v - expect) < 1e-12);
}

TEST_CASE("pruned transform is unitary on the active subspace") {
    const cvec x = random_grid_symbol(100, 7);
    const cvec out = modulate_symbol(x, 128, 9);
    double payload_energy = 0.0;
    for (size_t i = 9; i < out.size(); ++i) payload_energy += std::norm(out[i]);
    CHECK(payload_energy == Catch::Approx(sqnorm(x)).margin(1e-12));
}

TEST_CASE("CP equals the payload tail exactly") {
    const cvec x = random_grid_symbol(48, 3);
    const long l_ofdm = 128, l_cp = 9;
    const cvec out = modulate_symbol(x, l_ofdm, l_cp);
    for (long i = 0; i < l_cp; ++i)
        CHECK(out[static_cast<size_t>(i)] == out[static_cast<size_t>(l_ofdm + i)]);
}

TEST_CASE("modulation matches the dense matrix construction") {
    for (long l_act : {47L, 48L}) {  // odd and even subcarrier counts
        const cvec x = random_grid_symbol(l_act, 11 + static_cast<std::uint64_t>(l_act));
        CHECK(max_abs_diff(modulate_symbol(x, 128, 9), dense_modulate(x, 128, 9)) < 1e-12);
    }
}

TEST_CASE("modulation is linear") {
    const cvec x = random_grid_symbol(64, 21);
    const cvec u = random_grid_symbol(64, 22);
    const cd a(0.7, -1.3), b(-0.2, 0.5);
    cvec mix(64);
    for (size_t i = 0; i < 64; ++i) mix[i] = a * x[i] + b * u[i];
    const cvec lhs = modulate_symbol(mix, 128, 9);
    const cvec mx = modulate_symbol(x, 128, 9);
    const cvec mu = modulate_symbol(u, 128, 9);
    cvec rhs(mx.size());
    for (size_t i = 0; i < mx.size(); ++i) rhs[i] = a * mx[i] + b * mu[i];
    CHECK(max_abs_diff(lhs, rhs) < 1e-12);
}

TEST_CASE("round trip is exact for every timing offset in the CP") {
    const long l_ofdm = 256, l_cp = 18, l_act = 132;
    const cvec x = random_grid_symbol(l_act, 5);
    const cvec y = modulate_symbol(x, l_ofdm, l_cp);
    for (long tau : {0L, 1L, 9L, 17L, 18L}) {
        const cvec back = demodulate_symbol(y, l_ofdm, l_cp, tau, l_act);
        CHECK(max_abs_diff(back, x) < 1e-12);
        // dense oracle for the CP-removal matrix composed with the pruned DFT
        const cvec dense = dense_demodulate(y, l_ofdm, l_cp, tau, l_act);
        CHECK(max_abs_diff(back, dense) < 1e-12);
    }
    CHECK_THROWS_AS(demodulate_symbol(y, l_ofdm, l_cp, 19, l_act), error);
    CHECK_THROWS_AS(demodulate_symbol(y, l_ofdm, l_cp, -1, l_act), error);
}

TEST_CASE("all-zero input demodulates to all zeros") {
    const cvec back = demodulate_symbol(cvec(128 + 9, cd(0.0)), 128, 9, 4, 100);
    for (const cd& v : back) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("subband modulation concatenates symbols on the plan grid") {
    const auto plan = numerology::plan_half_subframe(15.36e6, std::vector<double>(7, 15e3));
    GridSymbols grid;
    grid.symbols.resize(7);
    for (int n = 0; n < 7; ++n) grid.symbols[n] = random_grid_symbol(624, 100 + n);
    const LowRateWaveform wf = modulate_subband(grid, plan);
    CHECK(wf.samples.size() == 7680);
    REQUIRE(wf.spans.size() == 7);
    CHECK(wf.spans[0].start == 0);
    CHECK(wf.spans[1].start == 1104);
    // per-symbol content equals the standalone modulator
    const cvec sym0 = modulate_symbol(grid.symbols[0], 1024, 80);
    for (size_t i = 0; i < sym0.size(); ++i) CHECK(wf.samples[i] == sym0[i]);
    GridSymbols empty;
    const LowRateWaveform none = modulate_subband(empty, numerology::NumerologyPlan{});
    CHECK(none.samples.empty());
    GridSymbols wrong;
    wrong.symbols.resize(3);
    CHECK_THROWS_AS(modulate_subband(wrong, plan), error);
}

TEST_CASE("subband output equals the dense block-diagonal product on a toy config") {
    // two symbols, tiny transforms: dense T = diag(T_0, T_1)
    numerology::NumerologyPlan plan;
    plan.n_hsf = 274;
    plan.alpha = 0;
    plan.r_hsf = 1;
    plan.symbols.resize(2);
    for (auto& s : plan.symbols) {
        s.f_scs = 60e3;
        s.n_ofdm = 128;
        s.n_cp = 9;
    }
    plan.symbols[0].first_of_half_subframe = true;
    GridSymbols grid;
    grid.symbols = {random_grid_symbol(40, 1), random_grid_symbol(40, 2)};
    const LowRateWaveform wf = modulate_subband(grid, plan);
    REQUIRE(wf.samples.size() == 274);
    const cvec d0 = dense_modulate(grid.symbols[0], 128, 9);
    const cvec d1 = dense_modulate(grid.symbols[1], 128, 9);
    cvec dense(274);
    std::copy(d0.begin(), d0.end(), dense.begin());
    std::copy(d1.begin(), d1.end(), dense.begin() + 137);
    CHECK(max_abs_diff(wf.samples, dense) < 1e-12);
}

TEST_CASE("WOLA ramp is complementary") {
    const long l_ext = 18;
    for (long i = 0; i < l_ext; ++i)
        CHECK(wola_ramp(i, l_ext) + wola_ramp(l_ext - 1 - i, l_ext) == Catch::Approx(1.0).margin(1e-14));
    CHECK(wola_ramp(0, l_ext) < wola_ramp(1, l_ext));
}

TEST_CASE("WOLA shaping keeps payload interiors and total span") {
    const auto plan = numerology::plan_half_subframe(15.36e6, std::vector<double>(7, 15e3));
    GridSymbols grid;
    grid.symbols.resize(7);
    for (int n = 0; n < 7; ++n) grid.symbols[n] = random_grid_symbol(624, 200 + n);
    const LowRateWaveform wf = modulate_subband(grid, plan);

    SECTION("zero extension is the identity") {
        CHECK(wola_shape(wf, 0) == wf.samples);
    }
    SECTION("interior samples pass through unchanged") {
        const long l_ext = 18;  // CP/4
        const cvec shaped = wola_shape(wf, l_ext);
        CHECK(shaped.size() == wf.samples.size() + 2 * 18);
        // neighbors' extensions reach l_ext past each symbol edge
        for (const auto& sp : wf.spans) {
            double worst = 0.0;
            for (long i = sp.start + l_ext; i < sp.start + sp.length() - l_ext; ++i)
                worst = std::max(worst, std::abs(shaped[static_cast<size_t>(i + l_ext)] -
                                                 wf.samples[static_cast<size_t>(i)]));
            CHECK(worst < 1e-15);
        }
    }
    SECTION("oversized extension is rejected") {
        CHECK_THROWS_AS(wola_shape(wf, 37), error);
    }
}

TEST_CASE("receiver-side WOLA fold is transparent on an ideal link") {
    const long l_ofdm = 256, l_cp = 18, l_act = 180;
    const cvec x = random_grid_symbol(l_act, 9);
    const cvec y = modulate_symbol(x, l_ofdm, l_cp);
    const cvec back = wola_demodulate_symbol(y, l_ofdm, l_cp, 9, 4, l_act);
    CHECK(max_abs_diff(back, x) < 1e-12);
    CHECK_THROWS_AS(wola_demodulate_symbol(y, l_ofdm, l_cp, 2, 4, l_act), error);
}

TEST_CASE("constellations have unit average power and Gray structure") {
    for (Modulation m : {Modulation::qpsk, Modulation::qam16, Modulation::qam64, Modulation::qam256}) {
        BitSource bits(42);
        double acc = 0.0;
        const int trials = 40000;
        for (int i = 0; i < trials; ++i) acc += std::norm(map_symbol(bits, m));
        CHECK(acc / trials == Catch::Approx(1.0).margin(0.02));
    }
    // same seed, same stream
    BitSource a(7), b(7);
    for (int i = 0; i < 100; ++i) CHECK(map_symbol(a, Modulation::qam64) == map_symbol(b, Modulation::qam64));
}
