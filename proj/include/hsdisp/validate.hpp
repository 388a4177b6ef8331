#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hsdisp/common.hpp"

namespace hsdisp::validate {

// One gated comparison.  `error` is the measured deviation (one-sided when
// the reference is a bound rather than a target); pass means the error is
// finite and within tolerance.
struct CheckResult {
    std::string name;
    double value = 0.0;
    double reference = 0.0;
    double error = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string note;
};

// Ungated measurement: a quantity worth recording that has no closed-form
// target (bracket gaps, emergent boundary fluxes, ball counts).
struct Observation {
    std::string name;
    double value = 0.0;
    std::string note;
};

struct ValidationReport {
    std::uint64_t seed = 7;
    std::vector<CheckResult> checks;
    std::vector<Observation> observations;
    bool all_pass = false;
};

// Cross-module agreement suite: closed forms against the finite-difference
// and Monte-Carlo oracles, construction against known optima, and the
// bookkeeping identities that tie the modules together.  Every random draw
// derives from `seed` alone; `threads` only spreads the Monte-Carlo and
// search work across cores, so the report depends on the seed and nothing
// else.
ValidationReport run_validation(std::uint64_t seed = 7, int threads = 4);

// Fixed entry order, round-trip double formatting, no timestamps: reruns
// with one seed serialize byte-identically.
std::string report_json(const ValidationReport& rep);

// Writes report_json via a temp file and rename.
void save_report(const ValidationReport& rep, const std::string& path);

}  // namespace hsdisp::validate
