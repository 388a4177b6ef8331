#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "hsdisp/dispersion.hpp"
#include "hsdisp/material.hpp"
#include "hsdisp/packing.hpp"

using namespace hsdisp;
using namespace hsdisp::packing;

namespace {

const double kEps2 = (std::sqrt(2.0) - 1.0) / 2.0;        // level-2 radius
const double kEps3 = (5.0 - 3.0 * std::sqrt(2.0)) / 14.0;  // level-3 radius
const double kX3 = (9.0 - 4.0 * std::sqrt(2.0)) / 14.0;    // level-3 center offset

// brute-force clearance argmax on a uniform grid, first index wins ties;
// shares nothing with the library search path
std::pair<std::vector<double>, double> grid_oracle_2d(const BallPacking& p, int g) {
    std::vector<double> argmax{0.0, 0.0};
    double best = -1.0;
    for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j) {
            std::vector<double> x{double(i) / g, double(j) / g};
            double c = 0.5;
            for (const auto& b : p.balls) {
                double dx = std::fabs(x[0] - b.center[0]);
                if (dx > 0.5) dx = 1.0 - dx;
                double dy = std::fabs(x[1] - b.center[1]);
                if (dy > 0.5) dy = 1.0 - dy;
                c = std::min(c, std::sqrt(dx * dx + dy * dy) - b.radius);
            }
            if (c > best) {
                best = c;
                argmax = x;
            }
        }
    return {argmax, best};
}

std::string write_fixture(const char* name, const std::string& body) {
    std::string path = std::string("fixture_") + name + ".json";
    std::FILE* f = std::fopen(path.c_str(), "w");
    REQUIRE(f != nullptr);
    std::fwrite(body.data(), 1, body.size(), f);
    std::fclose(f);
    return path;
}

}  // namespace

TEST_CASE("torus distance folds through the minimal image") {
    CHECK(torus_distance({0.3, 0.7}, {0.3, 0.7}, 2) == 0.0);
    CHECK(torus_distance({0.1, 0.1}, {0.9, 0.9}, 2) ==
          doctest::Approx(std::sqrt(0.08)).epsilon(1e-15));
    CHECK(torus_distance({0.0}, {0.5}, 1) == 0.5);
    // wrap beats the straight segment
    CHECK(torus_distance({0.05}, {0.95}, 1) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK_THROWS_AS(torus_distance({0.1}, {0.1, 0.2}, 2), degenerate_input);
    CHECK_THROWS_AS(torus_distance({}, {}, 0), degenerate_input);
}

TEST_CASE("clearance against the packing") {
    BallPacking empty{2, {}, "file"};
    CHECK(clearance(empty, {0.3, 0.8}) == 0.5);

    BallPacking one{2, {{{0.5, 0.5}, 0.5}}, "file"};
    CHECK(clearance(one, {0.0, 0.0}) ==
          doctest::Approx(std::sqrt(2.0) / 2.0 - 0.5).epsilon(1e-15));
    CHECK(clearance(one, {0.5, 0.6}) < 0.0);
    CHECK_THROWS_AS(clearance(BallPacking{0, {}, ""}, {0.1}), degenerate_input);
}

TEST_CASE("largest empty ball walks the first three greedy levels") {
    BallPacking p{2, {}, "apollonian"};
    TorusBall b1 = largest_empty_ball(p);
    CHECK(b1.radius == 0.5);
    CHECK(b1.center == std::vector<double>{0.0, 0.0});

    p.balls.push_back(b1);
    auto batch2 = maximal_empty_balls(p);
    REQUIRE(batch2.size() == 1);
    CHECK(batch2[0].center == std::vector<double>{0.5, 0.5});
    CHECK(batch2[0].radius == doctest::Approx(kEps2).epsilon(1e-13));

    p.balls.push_back(batch2[0]);
    auto batch3 = maximal_empty_balls(p);
    REQUIRE(batch3.size() == 4);
    std::set<std::vector<double>> centers;
    for (const auto& b : batch3) {
        CHECK(b.radius == batch3[0].radius);  // snapped exactly equal
        CHECK(std::fabs(b.radius - kEps3) <= 5e-12);
        centers.insert(b.center);
    }
    CHECK(centers.size() == 4);
    // the four maximizers sit on the axis midlines through the second ball
    CHECK(batch3[0].center[0] == doctest::Approx(kX3).epsilon(1e-9));
    CHECK(batch3[0].center[1] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("grid oracle confirms the refined optima") {
    BallPacking p{2, {{{0.0, 0.0}, 0.5}}, "file"};
    auto [gx, gv] = grid_oracle_2d(p, 1024);
    TorusBall b = largest_empty_ball(p);
    CHECK(b.radius >= gv - 1e-12);           // refinement only improves on the grid
    CHECK(b.radius <= gv + std::sqrt(2.0) / 1024.0);  // clearance is 1-Lipschitz
    CHECK(torus_distance(gx, b.center, 2) <= 2.0 * std::sqrt(2.0) / 1024.0);

    p.balls.push_back({{0.5, 0.5}, kEps2});
    auto [gx3, gv3] = grid_oracle_2d(p, 1024);
    TorusBall b3 = largest_empty_ball(p);
    CHECK(b3.radius >= gv3 - 1e-9);  // batch snap can sit a hair under the raw max
    CHECK(b3.radius <= gv3 + std::sqrt(2.0) / 1024.0);
    (void)gx3;  // four symmetric argmaxes; the oracle returns whichever scans first
}

TEST_CASE("greedy apollonian reproduces the recorded radii") {
    BallPacking p = greedy_apollonian(2, StopRule{6, 0.0, 0.0});
    REQUIRE(p.balls.size() == 6);
    CHECK(p.generator == "apollonian");
    CHECK(p.balls[0].radius == 0.5);
    CHECK(p.balls[0].center == std::vector<double>{0.0, 0.0});
    CHECK(p.balls[1].radius == doctest::Approx(kEps2).epsilon(1e-14));
    for (int i = 2; i < 6; ++i) {
        CHECK(p.balls[std::size_t(i)].radius == p.balls[2].radius);
        CHECK(std::fabs(p.balls[std::size_t(i)].radius - kEps3) <= 5e-12);
    }
    validate_packing(p);

    auto cov = coverage(p);
    CHECK(cov.volume_fraction == doctest::Approx(0.95692661225710651).epsilon(1e-12));
    CHECK(cov.volume_fraction < 1.0);
}

TEST_CASE("one arc covers the circle") {
    BallPacking p = greedy_apollonian(1, StopRule{1, 0.0, 0.0});
    REQUIRE(p.balls.size() == 1);
    CHECK(p.balls[0].radius == 0.5);
    CHECK(p.balls[0].center == std::vector<double>{0.0});
    CHECK(coverage(p).volume_fraction == doctest::Approx(1.0).epsilon(1e-14));

    // full measure stops the greedy loop even when the count is not reached
    BallPacking q = greedy_apollonian(1, StopRule{3, 0.0, 0.0});
    CHECK(q.balls.size() == 1);
}

TEST_CASE("coverage accounting") {
    BallPacking empty{2, {}, "file"};
    auto c0 = coverage(empty);
    CHECK(c0.volume_fraction == 0.0);
    CHECK(c0.radius_power_sum == 0.0);
    CHECK(c0.ratio_to_dimension_constant == 0.0);

    BallPacking one{2, {{{0.0, 0.0}, 0.5}}, "file"};
    CHECK(coverage(one).volume_fraction == doctest::Approx(M_PI / 4.0).epsilon(1e-15));

    BallPacking two{2, {{{0.0, 0.0}, 0.5}, {{0.5, 0.5}, kEps2}}, "file"};
    auto c2 = coverage(two);
    CHECK(c2.volume_fraction ==
          doctest::Approx(M_PI * (0.25 + kEps2 * kEps2)).epsilon(1e-14));
    CHECK(c2.radius_power_sum == doctest::Approx(0.25 + kEps2 * kEps2).epsilon(1e-15));
    // the dimension constant is the reciprocal unit-ball volume, so the
    // ratio reproduces the volume fraction up to summation order
    CHECK(c2.ratio_to_dimension_constant ==
          doctest::Approx(c2.volume_fraction).epsilon(1e-15));
}

TEST_CASE("construction is deterministic bit for bit") {
    BallPacking a = greedy_apollonian(2, StopRule{6, 0.0, 0.0});
    BallPacking b = greedy_apollonian(2, StopRule{6, 0.0, 0.0});
    REQUIRE(a.balls.size() == b.balls.size());
    for (std::size_t i = 0; i < a.balls.size(); ++i) {
        CHECK(a.balls[i].radius == b.balls[i].radius);
        CHECK(a.balls[i].center == b.balls[i].center);
    }
}

TEST_CASE("translation leaves radii and the dispersion coefficient unchanged") {
    BallPacking p = greedy_apollonian(2, StopRule{6, 0.0, 0.0});
    const std::vector<double> shift{0.3, 0.7};
    BallPacking moved{2, {}, "file"};
    for (const auto& b : p.balls) {
        TorusBall t = b;
        for (int k = 0; k < 2; ++k) {
            t.center[std::size_t(k)] += shift[std::size_t(k)];
            if (t.center[std::size_t(k)] >= 1.0) t.center[std::size_t(k)] -= 1.0;
        }
        moved.balls.push_back(t);
    }
    validate_packing(moved);

    std::vector<double> ra, rb;
    for (const auto& b : p.balls) ra.push_back(b.radius);
    for (const auto& b : moved.balls) rb.push_back(b.radius);
    CHECK(ra == rb);

    auto prof = material::make_profile(1.0, 2.0, 0.5, 2);
    auto den = dispersion::ball_dispersion_density(material::first_corrector(prof), prof);
    auto d1 = dispersion::dispersion_phs(den, ra, 2);
    auto d2 = dispersion::dispersion_phs(den, rb, 2);
    CHECK(d1.d_phs == d2.d_phs);

    // the clearance landscape translates with the packing
    CHECK(clearance(moved, {0.55, 0.95}) ==
          doctest::Approx(clearance(p, {0.25, 0.25})).epsilon(1e-13));
}

TEST_CASE("coverage budget for the recorded gate") {
    BallPacking p = greedy_apollonian(2, StopRule{0, 0.0, 0.99});
    auto cov = coverage(p);
    CHECK(cov.volume_fraction >= 0.99);
    CHECK(cov.volume_fraction <= 1.0 + 1e-9);
    CHECK(p.balls.size() <= 128);  // budget recorded in the validation report
    for (std::size_t i = 1; i < p.balls.size(); ++i)
        CHECK(p.balls[i].radius <= p.balls[i - 1].radius);
}

TEST_CASE("target coverage count matches the unrefined grid oracle") {
    // independent greedy rerun: brute grid argmax, one ball per step, no polish
    BallPacking oracle{2, {}, "file"};
    int steps = 0;
    while (coverage(oracle).volume_fraction < 0.95) {
        auto [x, v] = grid_oracle_2d(oracle, 512);
        REQUIRE(v > 0.0);
        oracle.balls.push_back({x, v});
        ++steps;
        REQUIRE(steps <= 16);
    }

    BallPacking p = greedy_apollonian(2, StopRule{0, 0.0, 0.95});
    CHECK(coverage(p).volume_fraction >= 0.95);
    CHECK(p.balls.size() == oracle.balls.size());
}

TEST_CASE("stop rules and search knobs are validated") {
    CHECK_THROWS_AS(greedy_apollonian(2, StopRule{}), degenerate_input);
    CHECK_THROWS_AS(greedy_apollonian(2, StopRule{0, 0.6, 0.0}), degenerate_input);
    CHECK_THROWS_AS(greedy_apollonian(2, StopRule{0, 0.0, 1.5}), degenerate_input);
    CHECK_THROWS_AS(greedy_apollonian(4, StopRule{1, 0.0, 0.0}), degenerate_input);
    CHECK_THROWS_AS(greedy_apollonian(0, StopRule{1, 0.0, 0.0}), degenerate_input);

    BallPacking empty{2, {}, "file"};
    SearchSpec bad;
    bad.grid_per_axis = 4;
    CHECK_THROWS_AS(largest_empty_ball(empty, bad), degenerate_input);
    bad = SearchSpec{};
    bad.top_k = 0;
    CHECK_THROWS_AS(largest_empty_ball(empty, bad), degenerate_input);
    bad = SearchSpec{};
    bad.radius_tol = 0.0;
    CHECK_THROWS_AS(largest_empty_ball(empty, bad), degenerate_input);
    bad = SearchSpec{};
    bad.threads = 0;
    CHECK_THROWS_AS(largest_empty_ball(empty, bad), degenerate_input);
    bad = SearchSpec{};
    bad.grid_per_axis = 4096;  // 2^36 points in three dimensions
    BallPacking empty3{3, {}, "file"};
    CHECK_THROWS_AS(largest_empty_ball(empty3, bad), degenerate_input);
}

TEST_CASE("floor exhaustion raises coverage_complete") {
    BallPacking full{1, {{{0.0}, 0.5}}, "file"};
    CHECK_THROWS_AS(largest_empty_ball(full), coverage_complete);

    BallPacking six = greedy_apollonian(2, StopRule{6, 0.0, 0.0});
    SearchSpec high_floor;
    high_floor.min_radius_floor = 0.1;  // every remaining gap is smaller
    CHECK_THROWS_AS(maximal_empty_balls(six, high_floor), coverage_complete);
}

TEST_CASE("budget exhaustion surfaces the partial packing") {
    SearchSpec coarse;
    coarse.min_radius_floor = 0.05;
    bool thrown = false;
    try {
        greedy_apollonian(2, StopRule{0, 0.0, 0.999}, coarse);
    } catch (const search_budget_exceeded& e) {
        thrown = true;
        CHECK(e.partial.balls.size() == 6);
        CHECK(coverage(e.partial).volume_fraction < 0.999);
        validate_packing(e.partial);
    }
    CHECK(thrown);

    // the same floor through min_radius is a satisfied stop, not an error
    BallPacking p = greedy_apollonian(2, StopRule{0, 0.05, 0.0});
    CHECK(p.balls.size() == 6);
}

TEST_CASE("validate_packing rejects broken snapshots") {
    BallPacking bad{2, {{{0.0, 1.0}, 0.25}}, "file"};
    CHECK_THROWS_AS(validate_packing(bad), infeasible_radii);

    bad = BallPacking{2, {{{0.0, 0.0}, 0.6}}, "file"};
    CHECK_THROWS_AS(validate_packing(bad), infeasible_radii);

    bad = BallPacking{2, {{{0.0, 0.0}, 0.1}, {{0.5, 0.5}, 0.2}}, "file"};
    CHECK_THROWS_AS(validate_packing(bad), infeasible_radii);  // radii increase

    bad = BallPacking{2, {{{0.0, 0.0}, 0.3}, {{0.2, 0.0}, 0.3}}, "file"};
    try {
        validate_packing(bad);
        CHECK(false);
    } catch (const infeasible_radii& e) {
        CHECK(std::string(e.what()).find("balls 0 and 1") != std::string::npos);
    }

    CHECK_THROWS_AS(validate_packing(BallPacking{0, {}, ""}), degenerate_input);
}

TEST_CASE("save and load round-trip bit-exactly") {
    BallPacking p = greedy_apollonian(2, StopRule{6, 0.0, 0.0});
    const std::string path = "roundtrip_packing.json";
    save_packing(p, path);
    BallPacking q = load_packing(path);
    CHECK(q.dim == p.dim);
    CHECK(q.generator == p.generator);
    REQUIRE(q.balls.size() == p.balls.size());
    for (std::size_t i = 0; i < p.balls.size(); ++i) {
        CHECK(q.balls[i].radius == p.balls[i].radius);
        CHECK(q.balls[i].center == p.balls[i].center);
    }
    std::remove(path.c_str());

    BallPacking empty{3, {}, "file"};
    save_packing(empty, path);
    BallPacking qe = load_packing(path);
    CHECK(qe.dim == 3);
    CHECK(qe.balls.empty());
    std::remove(path.c_str());
}

TEST_CASE("load rejects tampered or malformed files") {
    auto overlap = write_fixture("overlap", R"({
  "dim": 2,
  "generator": "file",
  "balls": [
    {"center": [0.0, 0.0], "radius": 0.3},
    {"center": [0.2, 0.0], "radius": 0.3}
  ]
})");
    try {
        load_packing(overlap);
        CHECK(false);
    } catch (const infeasible_radii& e) {
        CHECK(std::string(e.what()).find("balls 0 and 1") != std::string::npos);
    }
    std::remove(overlap.c_str());

    auto unknown = write_fixture("unknown", R"({"dim": 1, "generator": "file", "balls": [], "extra": 1})");
    try {
        load_packing(unknown);
        CHECK(false);
    } catch (const degenerate_input& e) {
        CHECK(std::string(e.what()).find("extra") != std::string::npos);
    }
    std::remove(unknown.c_str());

    auto ballkey = write_fixture(
        "ballkey", R"({"dim": 1, "generator": "file", "balls": [{"center": [0.0], "radius": 0.25, "color": 3}]})");
    CHECK_THROWS_AS(load_packing(ballkey), degenerate_input);
    std::remove(ballkey.c_str());

    auto syntax = write_fixture("syntax", "{\"dim\": 2,");
    CHECK_THROWS_AS(load_packing(syntax), degenerate_input);
    std::remove(syntax.c_str());

    auto badtype = write_fixture("badtype", R"({"dim": 2.5, "generator": "file", "balls": []})");
    CHECK_THROWS_AS(load_packing(badtype), degenerate_input);
    std::remove(badtype.c_str());

    CHECK_THROWS_AS(load_packing("no_such_packing_file.json"), degenerate_input);
}
