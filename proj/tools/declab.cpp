// declab: batch front end for decoupling experiments on the paraboloid.
//
// Commands mirror the library: extend, ratio, sweep, kakeya, multiscale,
// compare, verify, fit. Configuration comes from a key=value file plus
// command-line overrides (flags win). Every run writes its artifacts plus a
// manifest with checksums; data files are byte-reproducible for a fixed
// (config, seed) independent of the worker count.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "declab/runner.hpp"

namespace {

struct FlagCapture {
    declab::KeyValues values;
};

// Registers one string-typed override flag; anything set lands in `cap`.
void add_override(CLI::App* cmd, FlagCapture& cap, const std::string& flag,
                  const std::string& key, const std::string& help) {
    cmd->add_option_function<std::string>(
           flag, [&cap, key](const std::string& v) { cap.values.emplace_back(key, v); }, help)
        ->expected(1);
}

void add_common(CLI::App* cmd, FlagCapture& cap) {
    add_override(cmd, cap, "-n,--n", "n", "spatial dimension (2 or 3)");
    add_override(cmd, cap, "-p,--p", "p", "Lebesgue exponent, p >= 2");
    add_override(cmd, cap, "-E,--E", "E", "weight decay exponent");
    add_override(cmd, cap, "--delta-exponents", "delta_exponents",
                 "comma list of k for scales 4^{-k}");
    add_override(cmd, cap, "--trials", "trials", "trial count / random draws");
    add_override(cmd, cap, "-M,--samples-per-cap", "M", "frequency samples per cap per axis");
    add_override(cmd, cap, "--padding", "padding", "spatial integration padding rho");
    add_override(cmd, cap, "--spacing", "spacing", "spatial grid spacing");
    add_override(cmd, cap, "--m", "m", "iteration depth");
    add_override(cmd, cap, "--delta", "delta", "dyadic scale, e.g. 1/8");
    add_override(cmd, cap, "--transverse", "transverse", "cube corners 'a,b;c,d;...'");
    add_override(cmd, cap, "--mu", "mu", "transverse cube side, e.g. 1/4");
    add_override(cmd, cap, "-R,--R", "R", "tile long side");
    add_override(cmd, cap, "--nu", "nu", "transversality lower bound");
    add_override(cmd, cap, "--tiles-per-family", "tiles_per_family", "tiles per family");
    add_override(cmd, cap, "--kind", "kind", "kakeya family kind");
    add_override(cmd, cap, "--ambient-factor", "ambient_factor", "ambient cube side over R");
    add_override(cmd, cap, "--gkind", "gkind", "test function kind");
    add_override(cmd, cap, "--points", "points", "evaluation point count");
    add_override(cmd, cap, "--input", "input", "input CSV (fit)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for Fourier extension decoupling experiments"};
    app.require_subcommand(0, 1);

    std::string config_path;
    std::string workers;
    std::string seed;
    std::string out;
    bool verbose = false;
    app.add_option("--config", config_path, "key=value configuration file");
    app.add_option("--workers", workers, "worker threads (default DECOUPLING_LAB_WORKERS)");
    app.add_option("--seed", seed, "random seed");
    app.add_option("--out", out, "output path");
    app.add_flag("--verbose", verbose, "verbose progress and tail estimates to stderr");

    FlagCapture cap;
    const char* names[] = {"extend", "ratio", "sweep", "kakeya", "multiscale", "compare",
                           "verify", "fit"};
    for (const char* name : names) {
        CLI::App* cmd = app.add_subcommand(name, name);
        add_common(cmd, cap);
    }

    CLI11_PARSE(app, argc, argv);

    declab::KeyValues file_values;
    try {
        if (!config_path.empty()) {
            std::ifstream in(config_path, std::ios::binary);
            if (!in) {
                std::cerr << "i/o error: cannot read config '" << config_path << "'\n";
                return 4;
            }
            std::stringstream buf;
            buf << in.rdbuf();
            file_values = declab::parse_key_values(buf.str());
        }

        declab::KeyValues overrides;
        for (const auto* sub : app.get_subcommands())
            overrides.emplace_back("command", sub->get_name());
        overrides.insert(overrides.end(), cap.values.begin(), cap.values.end());
        if (!workers.empty()) overrides.emplace_back("workers", workers);
        if (!seed.empty()) overrides.emplace_back("seed", seed);
        if (!out.empty()) overrides.emplace_back("out", out);
        if (verbose) overrides.emplace_back("verbose", "1");

        const declab::ExperimentConfig cfg = declab::build_config(file_values, overrides);
        return declab::run(cfg);
    } catch (const declab::ValidationError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
