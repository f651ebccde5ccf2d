// Command-line front end: run a scenario (built-in or from a file), validate
// a scenario file, or list the built-in configurations.

#include <iostream>

#include <CLI11.hpp>

#include <fcofdm/fcofdm.hpp>

namespace {

// exit codes: 0 ok, 1 validation error, 2 runtime/metric failure, 3 I/O
constexpr int exit_ok = 0;
constexpr int exit_validation = 1;
constexpr int exit_runtime = 2;
constexpr int exit_io = 3;

fcofdm::scenario::ScenarioConfig resolve(const std::string& what) {
    for (const std::string& name : fcofdm::scenario::builtin_names())
        if (name == what) return fcofdm::scenario::builtin_scenario(name);
    return fcofdm::scenario::load_scenario(what);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fast-convolution filtered-OFDM waveform laboratory"};
    app.require_subcommand(1);

    std::string target;
    std::string out_dir = "out";
    std::string scheme;
    std::string rx;
    std::string tx;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool plots = false;

    CLI::App* run = app.add_subcommand("run", "Run a scenario and export its artifacts");
    run->add_option("scenario", target, "Builtin name or scenario file path")->required();
    run->add_option("--out", out_dir, "Output directory (default: out)");
    run->add_option("--seed", seed, "Override the payload seed")->each([&](const std::string&) { seed_set = true; });
    run->add_option("--scheme", scheme, "Override the block composition scheme: ola|ols");
    run->add_option("--rx", rx, "Override the receive path: fc|ofdm|wola");
    run->add_option("--tx", tx, "Override the transmit path: fc|wola");
    run->add_flag("--plots", plots, "Also write SVG charts");

    CLI::App* validate = app.add_subcommand("validate", "Validate a scenario file");
    validate->add_option("scenario", target, "Scenario file path")->required();

    CLI::App* list = app.add_subcommand("list-builtins", "List built-in scenarios");

    CLI11_PARSE(app, argc, argv);

    if (list->parsed()) {
        for (const std::string& name : fcofdm::scenario::builtin_names()) std::cout << name << "\n";
        return exit_ok;
    }

    if (validate->parsed()) {
        try {
            fcofdm::scenario::load_scenario(target);
        } catch (const fcofdm::error& e) {
            std::cerr << "invalid: " << e.what() << "\n";
            return exit_validation;
        }
        std::cout << "ok\n";
        return exit_ok;
    }

    // run
    fcofdm::scenario::ScenarioConfig cfg;
    try {
        cfg = resolve(target);
        if (seed_set) cfg.seed = seed;
        if (!scheme.empty()) cfg.scheme = fcofdm::fcfb::scheme_from_name(scheme);
        if (!rx.empty()) cfg.rx = fcofdm::scenario::rx_from_name(rx);
        if (!tx.empty()) cfg.tx = fcofdm::scenario::tx_from_name(tx);
        fcofdm::scenario::compile(cfg);
    } catch (const fcofdm::error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return exit_validation;
    }

    fcofdm::scenario::RunArtifacts art;
    try {
        art = fcofdm::scenario::run_scenario(cfg);
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << "\n";
        return exit_runtime;
    }

    try {
        const auto files = fcofdm::scenario::export_artifacts(art, out_dir, plots);
        std::cout << "edge_level_db " << fcofdm::strf("%.2f", art.edge_level_db) << "\n";
        for (size_t m = 0; m < art.subbands.size(); ++m) {
            const auto& sub = art.compiled.subbands[m];
            for (size_t u = 0; u < sub.sets.size(); ++u) {
                const auto& se = art.subbands[m].evm.sets[u];
                std::cout << fcofdm::strf("evm subband %zu set %zu: low %.2f ref %.2f high %.2f dB\n",
                                          m, u, se.low.avg_db, se.ref.avg_db, se.high.avg_db);
            }
        }
        if (art.mask)
            std::cout << "mask " << (art.mask->pass ? "pass" : "FAIL")
                      << fcofdm::strf(" margin %.2f dB", art.mask->worst_margin_db) << "\n";
        for (const auto& f : files) std::cout << "wrote " << f << "\n";
    } catch (const fcofdm::scenario::io_error& e) {
        std::cerr << "export failed: " << e.what() << "\n";
        return exit_io;
    }
    return exit_ok;
}
