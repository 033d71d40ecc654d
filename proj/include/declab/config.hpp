#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "declab/errors.hpp"

namespace declab {

enum class Command { extend, ratio, sweep, kakeya, multiscale, compare, verify, fit };

std::string command_name(Command c);

/// Fully validated experiment description. Defaults follow the documented
/// conventions: n=2, p=4, E=8, M=8, padding=4, spacing=0.5.
struct ExperimentConfig {
    Command command = Command::verify;
    int n = 2;
    double p = 4.0;
    double E = 8.0;
    std::vector<int> delta_exponents;
    int trials = 50;
    std::optional<std::uint64_t> seed;
    int M = 8; // samples per cap
    double padding = 4.0;
    double spacing = 0.5;
    std::string out;
    int workers = 0; // 0: DECOUPLING_LAB_WORKERS or hardware
    bool verbose = false;

    // multiscale / compare
    int m = 1;
    std::string delta = "1/8";
    std::string transverse; // corner list "a,b;c,d;..." (n-1 coords each)
    std::string mu;         // transverse cube side, e.g. "1/4"

    // kakeya
    double R = 64.0;
    double nu = 0.5;
    int tiles_per_family = 16;
    std::string kind = "perpendicular"; // or "random"
    double ambient_factor = 4.0;

    // extend / ratio
    std::string gkind = "gaussian"; // constant | single-cap | gaussian | point-mass
    int points = 10;

    // fit
    std::string input;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Line-oriented key=value text; '#' starts a comment. Throws ValidationError
/// listing every malformed line.
KeyValues parse_key_values(const std::string& text);

/// Builds and validates a config from file values plus overrides (command
/// line wins). Every violation is collected and reported at once.
ExperimentConfig build_config(const KeyValues& file_values, const KeyValues& overrides);

/// Convenience: config from file text alone.
ExperimentConfig parse_config(const std::string& text);

} // namespace declab
