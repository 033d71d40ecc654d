#include "declab/runner.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "declab/parallel.hpp"
#include "declab/rng.hpp"

namespace declab {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const char c : data) {
        h ^= std::uint64_t(static_cast<unsigned char>(c));
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string sweep_csv(const DecouplingReport& report) {
    std::ostringstream out;
    out << "# schema_version=1\n";
    out << "n,p,E,delta_exponent,trials,seed,best_ratio,argmax_kind,wall_ms\n";
    for (const auto& row : report.rows) {
        out << report.n << ',' << format_double(report.p) << ',' << format_double(report.E) << ','
            << row.delta_exp << ',' << row.trials << ',' << row.seed << ','
            << format_double(row.best_ratio) << ',' << row.argmax_kind << ",0\n";
    }
    return out.str();
}

std::string kakeya_csv(const KakeyaResult& result, double R, double nu, int tiles_per_family) {
    std::ostringstream out;
    out << "# schema_version=1\n";
    out << "R,nu,tiles_per_family,lhs,rhs,ratio,grid_spacing\n";
    out << format_double(R) << ',' << format_double(nu) << ',' << tiles_per_family << ','
        << format_double(result.lhs) << ',' << format_double(result.rhs) << ','
        << format_double(result.ratio) << ',' << format_double(result.grid_spacing) << '\n';
    return out.str();
}

std::string compare_csv(const std::vector<CompareRow>& rows, const CompareSpec& spec) {
    std::ostringstream out;
    out << "# schema_version=1\n";
    out << "n,p,E,delta_exponent,trials,seed,linear_best,linear_argmax,multilinear_best,"
           "multilinear_argmax,nu,mu\n";
    for (const auto& row : rows) {
        out << spec.n << ',' << format_double(spec.p) << ',' << format_double(spec.E) << ','
            << row.delta_exp << ',' << spec.trials << ',' << spec.seed << ','
            << format_double(row.linear_best) << ',' << row.linear_argmax << ','
            << format_double(row.multilinear_best) << ',' << row.multilinear_argmax << ','
            << format_double(row.nu) << ',' << format_double(row.mu) << '\n';
    }
    return out.str();
}

nlohmann::ordered_json fit_json(const EtaFit& fit, const std::vector<SweepRow>& rows) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["eta_hat"] = fit.eta_hat;
    j["residual"] = fit.residual;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : rows)
        arr.push_back({{"delta_exponent", r.delta_exp}, {"ratio", r.best_ratio}});
    j["rows"] = std::move(arr);
    return j;
}

nlohmann::ordered_json ledger_json(const IterationLedger& ledger) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["kappa"] = ledger.kappa;
    auto levels = nlohmann::ordered_json::array();
    for (const auto& lv : ledger.levels)
        levels.push_back({{"l", lv.l}, {"A", lv.A}, {"D", lv.D}});
    j["levels"] = std::move(levels);
    j["top_A"] = ledger.top_A;
    j["lhs"] = ledger.lhs;
    j["rhs"] = ledger.rhs;
    j["implied_constant"] = ledger.implied_constant;
    return j;
}

std::vector<SweepRow> parse_sweep_csv(const std::string& text) {
    std::vector<SweepRow> rows;
    std::istringstream in(text);
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true; // column header
            continue;
        }
        std::vector<std::string> cols;
        std::istringstream ls(line);
        std::string col;
        while (std::getline(ls, col, ',')) cols.push_back(col);
        if (cols.size() < 9) throw IoError("malformed sweep CSV row: " + line);
        SweepRow r;
        r.delta_exp = std::stoi(cols[3]);
        r.trials = std::stoi(cols[4]);
        r.seed = std::stoull(cols[5]);
        r.best_ratio = std::stod(cols[6]);
        r.argmax_kind = cols[7];
        rows.push_back(std::move(r));
    }
    return rows;
}

namespace {

struct StageRecord {
    std::string name;
    double wall_ms = 0.0;
    std::vector<std::pair<std::string, std::string>> outputs; // path, content
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open output path '" + path + "'");
    out << content;
    if (!out) throw IoError("failed writing '" + path + "'");
}

nlohmann::ordered_json config_echo(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["command"] = command_name(cfg.command);
    j["n"] = cfg.n;
    j["p"] = cfg.p;
    j["E"] = cfg.E;
    j["delta_exponents"] = cfg.delta_exponents;
    j["trials"] = cfg.trials;
    if (cfg.seed) j["seed"] = *cfg.seed;
    j["M"] = cfg.M;
    j["padding"] = cfg.padding;
    j["spacing"] = cfg.spacing;
    j["workers"] = resolve_workers(cfg.workers);
    j["m"] = cfg.m;
    j["delta"] = cfg.delta;
    j["R"] = cfg.R;
    j["nu"] = cfg.nu;
    j["kind"] = cfg.kind;
    j["ambient_factor"] = cfg.ambient_factor;
    j["gkind"] = cfg.gkind;
    return j;
}

void emit_with_manifest(const ExperimentConfig& cfg, const std::vector<StageRecord>& stages) {
    nlohmann::ordered_json manifest;
    manifest["schema_version"] = 1;
    manifest["tool"] = "declab";
    manifest["version"] = kToolVersion;
    manifest["config"] = config_echo(cfg);
    auto stage_arr = nlohmann::ordered_json::array();
    std::string manifest_path;
    for (const auto& stage : stages) {
        nlohmann::ordered_json s;
        s["name"] = stage.name;
        s["wall_ms"] = stage.wall_ms;
        auto outs = nlohmann::ordered_json::array();
        for (const auto& [path, content] : stage.outputs) {
            write_file(path, content);
            char hex[20];
            std::snprintf(hex, sizeof(hex), "%016llx",
                          static_cast<unsigned long long>(fnv1a64(content)));
            outs.push_back({{"path", path}, {"bytes", content.size()}, {"fnv1a64", hex}});
            if (manifest_path.empty()) manifest_path = path + ".manifest.json";
        }
        s["outputs"] = std::move(outs);
        stage_arr.push_back(std::move(s));
    }
    manifest["stages"] = std::move(stage_arr);
    if (manifest_path.empty()) return;
    write_file(manifest_path, manifest.dump(2) + "\n");
}

std::string default_out(const ExperimentConfig& cfg) {
    return cfg.out.empty() ? command_name(cfg.command) + std::string(".csv") : cfg.out;
}

GridSettings grid_settings(const ExperimentConfig& cfg) {
    return GridSettings{cfg.padding, cfg.spacing};
}

TestFunctionSpec gkind_spec(const ExperimentConfig& cfg, const FrequencyCube& domain,
                            Dyadic cap_scale) {
    TestFunctionSpec spec;
    if (cfg.gkind == "constant") {
        spec.kind = TestFunctionSpec::Kind::constant;
    } else if (cfg.gkind == "single-cap") {
        spec.kind = TestFunctionSpec::Kind::single_cap;
        spec.cap = dyadic_partition(domain, cap_scale).front();
    } else if (cfg.gkind == "point-mass") {
        spec.kind = TestFunctionSpec::Kind::point_mass_lattice;
        spec.seed = cfg.seed.value_or(0);
    } else {
        spec.kind = TestFunctionSpec::Kind::random_gaussian;
        spec.seed = cfg.seed.value_or(0);
    }
    return spec;
}

std::vector<FrequencyCube> transverse_cubes(const ExperimentConfig& cfg) {
    if (!cfg.transverse.empty()) {
        const Dyadic side = parse_dyadic(cfg.mu.empty() ? "1/4" : cfg.mu);
        std::vector<FrequencyCube> cubes;
        std::istringstream corners(cfg.transverse);
        std::string corner;
        while (std::getline(corners, corner, ';')) {
            std::vector<Dyadic> c;
            std::istringstream coords(corner);
            std::string coord;
            while (std::getline(coords, coord, ',')) c.push_back(parse_dyadic(coord));
            cubes.push_back(make_frequency_cube(std::move(c), side));
        }
        return cubes;
    }
    const Dyadic q = Dyadic(1, 2); // side 1/4 end cubes
    const Dyadic z = Dyadic::from_int(0);
    const Dyadic a = Dyadic(3, 2);
    if (cfg.n == 2) {
        return {make_frequency_cube({z}, q), make_frequency_cube({a}, q)};
    }
    return {make_frequency_cube({z, z}, q), make_frequency_cube({a, z}, q),
            make_frequency_cube({z, a}, q)};
}

std::vector<std::vector<Tile>> build_tile_families(const ExperimentConfig& cfg) {
    const double R = cfg.R;
    std::vector<std::vector<Tile>> families;
    if (cfg.kind == "perpendicular") {
        if (cfg.n != 2) throw ValidationError({"perpendicular demo is planar (n=2)"});
        families.push_back({make_tile({0.0, 0.0}, {1.0, 0.0}, R)});
        families.push_back({make_tile({0.0, 0.0}, {0.0, 1.0}, R)});
        return families;
    }
    // Random axis-dominant families: directions tilted off the coordinate
    // axes little enough to keep every cross-family determinant above nu.
    Rng rng(cfg.seed.value_or(0), 0x74696C6573ULL);
    const double S = cfg.ambient_factor * R;
    const double tilt = 0.15;
    for (int j = 0; j < cfg.n; ++j) {
        std::vector<Tile> fam;
        for (int t = 0; t < cfg.tiles_per_family; ++t) {
            std::vector<double> dir(static_cast<std::size_t>(cfg.n), 0.0);
            dir[static_cast<std::size_t>(j)] = 1.0;
            for (int a = 0; a < cfg.n; ++a)
                if (a != j) dir[static_cast<std::size_t>(a)] = tilt * (2.0 * rng.uniform() - 1.0);
            std::vector<double> center(static_cast<std::size_t>(cfg.n), 0.0);
            const double margin = R / 2.0 + std::sqrt(R);
            for (int a = 0; a < cfg.n; ++a)
                center[static_cast<std::size_t>(a)] = (2.0 * rng.uniform() - 1.0) * (S / 2.0 - margin);
            fam.push_back(make_tile(std::move(center), std::move(dir), R));
        }
        families.push_back(std::move(fam));
    }
    return families;
}

int run_impl(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed_ms = [&t0]() {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    };

    switch (cfg.command) {
        case Command::verify: {
            const auto results = run_verify_suite();
            std::size_t passed = 0;
            for (const auto& r : results) {
                std::printf("[%s] %-40s %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                            r.detail.c_str());
                if (r.pass) ++passed;
            }
            std::printf("%zu/%zu checks passed\n", passed, results.size());
            return passed == results.size() ? 0 : 3;
        }

        case Command::sweep: {
            SweepSpec spec;
            spec.n = cfg.n;
            spec.p = cfg.p;
            spec.E = cfg.E;
            spec.delta_exps = cfg.delta_exponents;
            spec.trials = cfg.trials;
            spec.seed = cfg.seed.value_or(0);
            spec.samples_per_cap = cfg.M;
            spec.grid = grid_settings(cfg);
            spec.workers = cfg.workers;
            if (cfg.gkind == "constant") {
                TestFunctionSpec forced;
                forced.kind = TestFunctionSpec::Kind::constant;
                spec.forced = forced;
            }
            const DecouplingReport report = scale_sweep(spec);
            if (cfg.verbose) {
                for (const auto& row : report.rows)
                    std::fprintf(stderr, "delta=4^-%d best=%.6g kind=%s wall=%.0fms\n",
                                 row.delta_exp, row.best_ratio, row.argmax_kind.c_str(),
                                 row.wall_ms);
                const WeightSpec w{centered_cube(cfg.n, 1.0), cfg.E, false};
                std::fprintf(stderr, "weight tail fraction bound (padding %.1f): %.3g\n",
                             cfg.padding, weight_tail_fraction(w, cfg.padding));
            }
            StageRecord stage{"sweep", elapsed_ms(), {}};
            const std::string out = default_out(cfg);
            stage.outputs.emplace_back(out, sweep_csv(report));
            if (report.fit)
                stage.outputs.emplace_back(out + ".fit.json",
                                           fit_json(*report.fit, report.rows).dump(2) + "\n");
            emit_with_manifest(cfg, {stage});
            return 0;
        }

        case Command::fit: {
            std::ifstream in(cfg.input, std::ios::binary);
            if (!in) throw IoError("cannot read input '" + cfg.input + "'");
            std::stringstream buf;
            buf << in.rdbuf();
            const auto rows = parse_sweep_csv(buf.str());
            const EtaFit fit = fit_eta(rows);
            StageRecord stage{"fit", elapsed_ms(), {}};
            const std::string out = cfg.out.empty() ? "fit.json" : cfg.out;
            stage.outputs.emplace_back(out, fit_json(fit, rows).dump(2) + "\n");
            emit_with_manifest(cfg, {stage});
            std::printf("eta_hat=%.6g residual=%.6g over %zu scales\n", fit.eta_hat, fit.residual,
                        rows.size());
            return 0;
        }

        case Command::ratio: {
            DecouplingInstance inst;
            inst.n = cfg.n;
            inst.p = cfg.p;
            inst.E = cfg.E;
            inst.delta_exp = cfg.delta_exponents.empty() ? 1 : cfg.delta_exponents.front();
            inst.samples_per_cap = cfg.M;
            inst.grid = grid_settings(cfg);
            inst.validate();
            const auto spec = gkind_spec(cfg, unit_cube(cfg.n - 1), inst.cap());
            const GridFunction g =
                make_test_function(spec, unit_cube(cfg.n - 1), inst.trial_samples_per_axis());
            const double ratio = decoupling_ratio(g, inst);
            nlohmann::ordered_json j;
            j["schema_version"] = 1;
            j["n"] = cfg.n;
            j["p"] = cfg.p;
            j["E"] = cfg.E;
            j["delta_exponent"] = inst.delta_exp;
            j["gkind"] = cfg.gkind;
            if (cfg.seed) j["seed"] = *cfg.seed;
            j["ratio"] = ratio;
            StageRecord stage{"ratio", elapsed_ms(), {}};
            const std::string out = cfg.out.empty() ? "ratio.json" : cfg.out;
            stage.outputs.emplace_back(out, j.dump(2) + "\n");
            emit_with_manifest(cfg, {stage});
            std::printf("ratio=%.9g\n", ratio);
            return 0;
        }

        case Command::extend: {
            const int k = cfg.delta_exponents.empty() ? 1 : cfg.delta_exponents.front();
            const FrequencyCube domain = unit_cube(cfg.n - 1);
            const Dyadic cap = Dyadic::pow2(-k);
            const auto spec = gkind_spec(cfg, domain, cap);
            const int M = int(exact_ratio(Dyadic::from_int(1), cap)) * cfg.M;
            const GridFunction g = make_test_function(spec, domain, M);
            SpatialPointSet pts;
            pts.provenance = SpatialPointSet::Provenance::explicit_points;
            Rng rng(cfg.seed.value_or(0), 0x657874656E64ULL);
            const double half = std::pow(4.0, k) / 2.0;
            for (int i = 0; i < cfg.points; ++i) {
                std::vector<double> x(static_cast<std::size_t>(cfg.n));
                for (auto& v : x) v = (2.0 * rng.uniform() - 1.0) * half;
                pts.points.push_back(std::move(x));
            }
            const auto values = evaluate_extension(g, pts);
            std::ostringstream out;
            out << "# schema_version=1\n";
            for (int a = 0; a < cfg.n; ++a) out << 'x' << (a + 1) << ',';
            out << "re,im\n";
            for (std::size_t i = 0; i < values.size(); ++i) {
                for (const double v : pts.points[i]) out << format_double(v) << ',';
                out << format_double(values[i].real()) << ',' << format_double(values[i].imag())
                    << '\n';
            }
            StageRecord stage{"extend", elapsed_ms(), {}};
            stage.outputs.emplace_back(default_out(cfg), out.str());
            emit_with_manifest(cfg, {stage});
            return 0;
        }

        case Command::kakeya: {
            const auto families = build_tile_families(cfg);
            const auto result =
                kakeya_check(families, cfg.R, cfg.nu, cfg.ambient_factor, cfg.workers);
            StageRecord stage{"kakeya", elapsed_ms(), {}};
            stage.outputs.emplace_back(default_out(cfg),
                                       kakeya_csv(result, cfg.R, cfg.nu, cfg.tiles_per_family));
            emit_with_manifest(cfg, {stage});
            std::printf("lhs=%.6g rhs=%.6g ratio=%.6g\n", result.lhs, result.rhs, result.ratio);
            return 0;
        }

        case Command::multiscale: {
            const Dyadic delta = parse_dyadic(cfg.delta);
            TransverseConfig tc;
            tc.cubes = transverse_cubes(cfg);
            tc.nu = transversality(tc.cubes, 4).nu_lower;
            tc.m = cfg.m;
            tc.delta = delta;

            const int top = 1 << cfg.m;
            const double need = std::pow(1.0 / delta.to_double(), top);
            const int M = int(std::llround(need));
            const FrequencyCube domain = unit_cube(cfg.n - 1);

            std::vector<IterationLedger> ledgers(static_cast<std::size_t>(cfg.trials));
            parallel_for(static_cast<std::size_t>(cfg.trials), resolve_workers(cfg.workers), [&](std::size_t i) {
                const GridFunction g = make_random_gaussian(
                    domain, M, cfg.seed.value_or(0) ^ (0xD1B54A32D192ED03ULL * (i + 1)));
                ledgers[i] = multiscale_inequality_check(g, delta, cfg.p, cfg.m, tc, cfg.E,
                                                         grid_settings(cfg));
            });
            std::size_t worst = 0;
            for (std::size_t i = 1; i < ledgers.size(); ++i)
                if (ledgers[i].implied_constant > ledgers[worst].implied_constant) worst = i;

            nlohmann::ordered_json j = ledger_json(ledgers[worst]);
            auto draws = nlohmann::ordered_json::array();
            for (const auto& lg : ledgers) draws.push_back(ledger_json(lg));
            j["draws"] = std::move(draws);
            StageRecord stage{"multiscale", elapsed_ms(), {}};
            const std::string out = cfg.out.empty() ? "multiscale.json" : cfg.out;
            stage.outputs.emplace_back(out, j.dump(2) + "\n");
            emit_with_manifest(cfg, {stage});
            std::printf("kappa=%.6g max implied constant=%.6g over %d draws\n",
                        ledgers[worst].kappa, ledgers[worst].implied_constant, cfg.trials);
            return 0;
        }

        case Command::compare: {
            CompareSpec spec;
            spec.n = cfg.n;
            spec.p = cfg.p;
            spec.E = cfg.E;
            spec.delta_exps = cfg.delta_exponents;
            spec.trials = cfg.trials;
            spec.seed = cfg.seed.value_or(0);
            spec.m = cfg.m;
            spec.samples_per_cap = cfg.M;
            spec.grid = grid_settings(cfg);
            spec.workers = cfg.workers;
            if (!cfg.transverse.empty()) spec.cubes = transverse_cubes(cfg);
            const auto rows = linear_vs_multilinear_report(spec);
            StageRecord stage{"compare", elapsed_ms(), {}};
            stage.outputs.emplace_back(default_out(cfg), compare_csv(rows, spec));
            emit_with_manifest(cfg, {stage});
            return 0;
        }
    }
    return 1;
}

} // namespace

int run(const ExperimentConfig& cfg) {
    try {
        return run_impl(cfg);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const PreconditionError& e) {
        std::fprintf(stderr, "precondition violated: %s\n", e.what());
        return 2;
    } catch (const InvalidScaleError& e) {
        std::fprintf(stderr, "invalid scale: %s\n", e.what());
        return 2;
    } catch (const DomainError& e) {
        std::fprintf(stderr, "domain error: %s\n", e.what());
        return 2;
    } catch (const ResolutionError& e) {
        std::fprintf(stderr, "resolution error: %s\n", e.what());
        return 2;
    } catch (const DegenerateInputError& e) {
        std::fprintf(stderr, "degenerate input: %s\n", e.what());
        return 3;
    } catch (const IoError& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

} // namespace declab
