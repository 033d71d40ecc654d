#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "declab/config.hpp"
#include "declab/decoupling.hpp"
#include "declab/multilinear.hpp"

#include "json.hpp"

namespace declab {

inline constexpr const char* kToolVersion = "1.0.0";

/// One line of the verify table.
struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// The quick invariant suite behind `verify`: the always-true identities of
/// every module, each cheap enough for interactive use.
std::vector<CheckResult> run_verify_suite();

std::string format_double(double v); // round-trip %.17g
std::uint64_t fnv1a64(std::string_view data);

/// Data-file serializations. Data files are reproducible byte-for-byte for a
/// fixed (config, seed) regardless of worker count; wall times therefore live
/// in the run manifest, and the CSV wall_ms column is fixed at zero.
std::string sweep_csv(const DecouplingReport& report);
std::string kakeya_csv(const KakeyaResult& result, double R, double nu, int tiles_per_family);
std::string compare_csv(const std::vector<CompareRow>& rows, const CompareSpec& spec);
nlohmann::ordered_json fit_json(const EtaFit& fit, const std::vector<SweepRow>& rows);
nlohmann::ordered_json ledger_json(const IterationLedger& ledger);

/// Parses a sweep CSV back into (delta, ratio) rows (for `fit`).
std::vector<SweepRow> parse_sweep_csv(const std::string& text);

/// Executes a validated config; writes artifacts plus a manifest next to
/// them. Returns the process exit code (0 ok, 2 validation, 3 degeneracy,
/// 4 I/O).
int run(const ExperimentConfig& cfg);

} // namespace declab
