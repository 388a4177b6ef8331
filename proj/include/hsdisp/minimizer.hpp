#pragma once

#include <cstddef>
#include <vector>

#include "hsdisp/common.hpp"
#include "hsdisp/packing.hpp"

namespace hsdisp::minimizer {

// Mass coordinates of a covering: d_p = eps_p^N / c_N with c_N = 1/omega_N,
// so a full covering carries unit total mass (the ell^1 constraint).
struct ScaleSequence {
    std::vector<double> d;    // non-increasing, non-negative
    int dim = 0;
    double c_n = 0.0;         // 1/omega_N
    bool partial = false;     // truncated covering: total mass deliberately < 1
    double deficit = 0.0;     // 1 - sum d_p, clamped at 0
    bool realizable = false;  // every d_p within the half-width cap omega_N/2^N;
                              // certified by an actual packing only when produced
                              // by minimize_via_apollonian
};

// Validates entries (non-negative, non-increasing) and the mass constraint:
// a non-partial sequence must carry unit mass within 1e-6.
ScaleSequence make_sequence(std::vector<double> d, int dim, bool partial = false);

// Radii form: sorts descending, d_p = omega_N eps_p^N; the partial flag is
// set automatically when the mass falls short of 1 by more than 1e-9.
ScaleSequence sequence_from_radii(const std::vector<double>& radii, int dim);

struct FunctionalValue {
    double i_value;        // -c_N^{(N+2)/N} sum d_p^{(N+2)/N}
    double upper_env;      // radii form -sum eps_p^{N+2}; equals i_value algebraically
    double bound_from_d1;  // c_N^{(N+2)/N} d_1^{2/N}, dominates |i_value|
};

FunctionalValue functional_I(const ScaleSequence& s);

struct BoundCheck {
    double abs_i;
    double bound;
    bool satisfied;
};

// |I| <= c_N^{(N+2)/N} d_1^{2/N}: tight exactly when all masses are equal and
// the sequence carries unit mass.
BoundCheck bound_check(const ScaleSequence& s);

// Truncated-minimizer bracket.  The greedy covering stops at the budget, so
// the functional of the full covering is pinned between i_lower (deficit mass
// hiding at the smallest found radius) and i_upper (the truncated sum alone).
struct MinimizeResult {
    ScaleSequence sequence;      // realizable, witnessed by `structure`
    FunctionalValue functional;  // of the truncated sequence
    double i_lower;
    double i_upper;
    double coverage;
    double deficit;
    packing::BallPacking structure;
};

MinimizeResult minimize_via_apollonian(int dim, const packing::StopRule& budget,
                                       const packing::SearchSpec& search = {});

// Stable ranking of the inputs by ascending functional value (most negative
// first); ties keep input order.  All sequences must share one dimension.
std::vector<std::size_t> compare_structures(const std::vector<ScaleSequence>& seqs);

}  // namespace hsdisp::minimizer
