#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsdisp/common.hpp"

namespace hsdisp::packing {

// The greedy search ran out of room: no point of the torus clears the radius
// floor, so the packing cannot grow further.
struct coverage_complete : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TorusBall {
    std::vector<double> center;  // canonical representative in [0,1)^N
    double radius;               // in (0, 1/2]
};

// Disjoint balls on the flat torus [0,1)^N, radii non-increasing (ties
// ordered by lexicographically smallest center).  Instances are snapshots:
// insertion happens inside the generators, which re-validate invariants
// before returning.
struct BallPacking {
    int dim = 0;
    std::vector<TorusBall> balls;
    std::string generator;  // "apollonian" | "file" | caller-supplied
};

// Euclidean length of the minimal-image difference; both points must be
// canonical, each coordinate difference is reduced to [-1/2, 1/2].
double torus_distance(const std::vector<double>& a, const std::vector<double>& b, int dim);

// Radius of the largest ball centered at x disjoint from the packing,
// clamped at the injectivity radius 1/2; negative inside a ball.
double clearance(const BallPacking& p, const std::vector<double>& x);

// Knobs of the largest-empty-ball search.  grid_per_axis 0 picks the
// dimension default (4096 for N=1, 512 for N=2, 96 for N=3).  The scan keeps
// top_k well-separated basin candidates, each polished by coordinate pattern
// search down to steps of radius_tol; maximizers within batch_tol of the
// incumbent radius form the insertion batch.
struct SearchSpec {
    int grid_per_axis = 0;
    int top_k = 32;
    double radius_tol = 1e-12;
    double batch_tol = 1e-9;
    double min_radius_floor = 1e-4;
    int threads = 4;
};

// One greedy step: a global maximizer of the clearance field, ties in radius
// broken by lexicographically smallest center.  Throws coverage_complete
// when no candidate clears min_radius_floor.
TorusBall largest_empty_ball(const BallPacking& p, const SearchSpec& spec = {});

// Every maximizer within batch_tol of the best radius, deduplicated (1e-7
// torus metric), lexicographic order, all snapped to the smallest radius of
// the batch so equal-by-symmetry optima stay exactly equal in the packing.
std::vector<TorusBall> maximal_empty_balls(const BallPacking& p, const SearchSpec& spec = {});

// Stop rule for the greedy generator; at least one criterion must be set.
// max_balls 0, min_radius 0, target_coverage 0 mean "unset".
struct StopRule {
    std::size_t max_balls = 0;
    double min_radius = 0.0;
    double target_coverage = 0.0;
};

// The stop rule is still unmet but the search floor is exhausted; carries
// the packing built so far.
struct search_budget_exceeded : std::runtime_error {
    BallPacking partial;
    explicit search_budget_exceeded(BallPacking p)
        : std::runtime_error("greedy_apollonian: search exhausted before the stop rule was met"),
          partial(std::move(p)) {}
};

// Greedy Apollonian generator: repeatedly inserts the maximal empty balls.
// A batch is inserted greedily in lexicographic order, skipping members that
// overlap a ball inserted earlier in the same batch (the bare-torus start is
// fully degenerate: every center attains 1/2, and exactly one survives).
// Batches are atomic, so max_balls may overshoot by the tail of a batch.
// Deterministic: no randomized stage anywhere.
BallPacking greedy_apollonian(int dim, const StopRule& stop, const SearchSpec& spec = {});

struct CoverageReport {
    double volume_fraction;    // sum of omega_N eps^N
    double radius_power_sum;   // sum of eps^N
    double ratio_to_dimension_constant;  // power sum over c_N = 1/omega_N
};
CoverageReport coverage(const BallPacking& p);

// Re-checks every invariant (canonical centers, radius range, pairwise
// disjointness to 1e-12, coverage <= 1 + 1e-9, non-increasing radii);
// throws infeasible_radii naming the first offending ball or pair.
void validate_packing(const BallPacking& p);

// JSON snapshot {"dim", "generator", "balls": [{"center", "radius"}]} with
// 17-significant-digit decimals, so save/load round-trips bit-exactly.
// Load rejects unknown keys and re-validates all invariants.
// Canonical serialization shared by save_packing and the CLI; no validation.
std::string packing_json(const BallPacking& p);

void save_packing(const BallPacking& p, const std::string& path);
BallPacking load_packing(const std::string& path);

}  // namespace hsdisp::packing
