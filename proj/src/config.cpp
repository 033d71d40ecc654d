#include "declab/config.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "declab/dyadic.hpp"

namespace declab {

std::string command_name(Command c) {
    switch (c) {
        case Command::extend: return "extend";
        case Command::ratio: return "ratio";
        case Command::sweep: return "sweep";
        case Command::kakeya: return "kakeya";
        case Command::multiscale: return "multiscale";
        case Command::compare: return "compare";
        case Command::verify: return "verify";
        case Command::fit: return "fit";
    }
    return "?";
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

const std::map<std::string, Command>& command_table() {
    static const std::map<std::string, Command> table = {
        {"extend", Command::extend},     {"ratio", Command::ratio},
        {"sweep", Command::sweep},       {"kakeya", Command::kakeya},
        {"multiscale", Command::multiscale}, {"compare", Command::compare},
        {"verify", Command::verify},     {"fit", Command::fit},
    };
    return table;
}

} // namespace

KeyValues parse_key_values(const std::string& text) {
    KeyValues out;
    std::vector<std::string> bad;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            bad.push_back("line " + std::to_string(lineno) + ": expected key=value, got '" + t + "'");
            continue;
        }
        out.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    if (!bad.empty()) throw ValidationError(std::move(bad));
    return out;
}

ExperimentConfig build_config(const KeyValues& file_values, const KeyValues& overrides) {
    // Later entries win, so overrides are appended after the file values.
    KeyValues merged = file_values;
    merged.insert(merged.end(), overrides.begin(), overrides.end());

    ExperimentConfig cfg;
    std::vector<std::string> bad;
    bool have_command = false;

    auto to_int = [&bad](const std::string& key, const std::string& v, int& out) {
        try {
            out = std::stoi(v);
        } catch (...) {
            bad.push_back(key + ": '" + v + "' is not an integer");
        }
    };
    auto to_double = [&bad](const std::string& key, const std::string& v, double& out) {
        try {
            out = std::stod(v);
        } catch (...) {
            bad.push_back(key + ": '" + v + "' is not a number");
        }
    };

    for (const auto& [key, value] : merged) {
        if (key == "command") {
            const auto it = command_table().find(value);
            if (it == command_table().end()) {
                bad.push_back("command: unknown command '" + value + "'");
            } else {
                cfg.command = it->second;
                have_command = true;
            }
        } else if (key == "n") {
            to_int(key, value, cfg.n);
        } else if (key == "p") {
            to_double(key, value, cfg.p);
        } else if (key == "E") {
            to_double(key, value, cfg.E);
        } else if (key == "delta_exponents") {
            cfg.delta_exponents.clear();
            std::istringstream parts(value);
            std::string item;
            while (std::getline(parts, item, ',')) {
                int k = 0;
                to_int(key, trim(item), k);
                cfg.delta_exponents.push_back(k);
            }
        } else if (key == "trials") {
            to_int(key, value, cfg.trials);
        } else if (key == "seed") {
            try {
                cfg.seed = std::stoull(value);
            } catch (...) {
                bad.push_back("seed: '" + value + "' is not an unsigned integer");
            }
        } else if (key == "M") {
            to_int(key, value, cfg.M);
        } else if (key == "padding") {
            to_double(key, value, cfg.padding);
        } else if (key == "spacing") {
            to_double(key, value, cfg.spacing);
        } else if (key == "out") {
            cfg.out = value;
        } else if (key == "workers") {
            to_int(key, value, cfg.workers);
        } else if (key == "verbose") {
            cfg.verbose = (value == "1" || value == "true" || value == "yes");
        } else if (key == "m") {
            to_int(key, value, cfg.m);
        } else if (key == "delta") {
            cfg.delta = value;
        } else if (key == "transverse") {
            cfg.transverse = value;
        } else if (key == "mu") {
            cfg.mu = value;
        } else if (key == "R") {
            to_double(key, value, cfg.R);
        } else if (key == "nu") {
            to_double(key, value, cfg.nu);
        } else if (key == "tiles_per_family") {
            to_int(key, value, cfg.tiles_per_family);
        } else if (key == "kind") {
            cfg.kind = value;
        } else if (key == "ambient_factor") {
            to_double(key, value, cfg.ambient_factor);
        } else if (key == "gkind") {
            cfg.gkind = value;
        } else if (key == "points") {
            to_int(key, value, cfg.points);
        } else if (key == "input") {
            cfg.input = value;
        } else {
            bad.push_back("unknown key '" + key + "'");
        }
    }

    if (!have_command) bad.push_back("command: required (one of extend, ratio, sweep, kakeya, multiscale, compare, verify, fit)");

    // Semantic checks, all collected before reporting.
    if (cfg.n < 2 || cfg.n > 3) bad.push_back("n must be 2 or 3");
    if (cfg.p < 2.0) bad.push_back("p must be >= 2");
    if (cfg.E < 1.0) bad.push_back("E must be >= 1");
    if (cfg.M < 1) bad.push_back("M must be >= 1");
    if (cfg.trials < 1) bad.push_back("trials must be >= 1");
    if (cfg.padding < 1.0) bad.push_back("padding must be >= 1");
    if (cfg.spacing <= 0.0 || cfg.spacing > 0.5) bad.push_back("spacing must be in (0, 1/2]");
    if (cfg.workers < 0) bad.push_back("workers must be >= 0");
    for (const int k : cfg.delta_exponents)
        if (k < 1) bad.push_back("delta_exponents: 4^{-k} scales need k >= 1");

    if (have_command) {
        const Command c = cfg.command;
        if (c == Command::sweep || c == Command::compare) {
            if (cfg.delta_exponents.empty())
                bad.push_back("delta_exponents: required for " + command_name(c));
        }
        if (c == Command::multiscale) {
            try {
                const Dyadic d = parse_dyadic(cfg.delta);
                if (!(d > Dyadic::from_int(0)) || !(d < Dyadic::from_int(1)))
                    bad.push_back("delta must lie in (0,1)");
            } catch (const std::exception& e) {
                bad.push_back(std::string("delta: ") + e.what());
            }
            if (cfg.m < 1) bad.push_back("m must be >= 1");
            if (cfg.m > 2)
                bad.push_back("m is capped at 2: the scale delta^(2^m) must stay resolvable "
                              "at desk scale");
        }
        if (c == Command::kakeya) {
            if (cfg.R <= 1.0) bad.push_back("R must exceed 1");
            if (cfg.kind != "perpendicular" && cfg.kind != "random")
                bad.push_back("kind must be 'perpendicular' or 'random'");
            if (cfg.tiles_per_family < 1) bad.push_back("tiles_per_family must be >= 1");
            if (cfg.ambient_factor < 1.0) bad.push_back("ambient_factor must be >= 1");
        }
        if (c == Command::fit && cfg.input.empty()) bad.push_back("input: required for fit");
        if (c == Command::extend || c == Command::ratio) {
            if (cfg.gkind != "constant" && cfg.gkind != "single-cap" && cfg.gkind != "gaussian" &&
                cfg.gkind != "point-mass")
                bad.push_back("gkind must be one of constant, single-cap, gaussian, point-mass");
        }

        // Randomness demands an explicit seed for reproducibility.
        const bool needs_seed =
            c == Command::sweep || c == Command::compare || c == Command::multiscale ||
            (c == Command::kakeya && cfg.kind == "random") ||
            ((c == Command::extend || c == Command::ratio) &&
             (cfg.gkind == "gaussian" || cfg.gkind == "point-mass"));
        if (needs_seed && !cfg.seed) bad.push_back("seed: required whenever randomness is used");
    }

    if (!cfg.transverse.empty()) {
        try {
            std::istringstream corners(cfg.transverse);
            std::string corner;
            while (std::getline(corners, corner, ';')) {
                std::istringstream coords(corner);
                std::string coord;
                while (std::getline(coords, coord, ',')) parse_dyadic(trim(coord));
            }
            if (!cfg.mu.empty()) parse_dyadic(cfg.mu);
        } catch (const std::exception& e) {
            bad.push_back(std::string("transverse: ") + e.what());
        }
    }

    if (!bad.empty()) throw ValidationError(std::move(bad));
    return cfg;
}

ExperimentConfig parse_config(const std::string& text) {
    return build_config(parse_key_values(text), {});
}

} // namespace declab
