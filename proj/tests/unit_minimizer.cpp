#include <cmath>
#include <vector>

#include "doctest.h"
#include "hsdisp/dispersion.hpp"
#include "hsdisp/material.hpp"
#include "hsdisp/minimizer.hpp"

using namespace hsdisp;
using namespace hsdisp::minimizer;

namespace {

const double kEps2 = (std::sqrt(2.0) - 1.0) / 2.0;
const double kApollonianSix = 0.064374085725114494;  // sum eps^4 over the six constructed balls

ScaleSequence equal_split(int k, int dim) {
    std::vector<double> d(std::size_t(k), 1.0 / k);
    return make_sequence(std::move(d), dim);
}

}  // namespace

TEST_CASE("vertex and equal splits match the closed forms") {
    auto vertex = make_sequence({1.0}, 2);
    CHECK(vertex.realizable == false);  // d_1 = 1 > pi/4: no torus ball carries it
    CHECK(vertex.partial == false);
    auto v = functional_I(vertex);
    CHECK(v.i_value == doctest::Approx(-1.0 / (M_PI * M_PI)).epsilon(1e-14));
    CHECK(v.i_value == doctest::Approx(v.upper_env).epsilon(1e-14));
    auto b = bound_check(vertex);
    CHECK(b.satisfied);
    CHECK(b.abs_i == doctest::Approx(b.bound).epsilon(1e-14));  // single term saturates

    auto half = functional_I(make_sequence({0.5, 0.5}, 2));
    CHECK(half.i_value == doctest::Approx(-1.0 / (2.0 * M_PI * M_PI)).epsilon(1e-14));

    for (int dim = 1; dim <= 3; ++dim) {
        const double cq = std::pow(1.0 / unit_ball_volume(dim), double(dim + 2) / dim);
        double prev = 1.0;
        for (int k : {2, 3, 5, 10, 100}) {
            auto s = equal_split(k, dim);
            auto f = functional_I(s);
            const double closed = cq * std::pow(double(k), -2.0 / dim);
            CHECK(std::fabs(f.i_value) == doctest::Approx(closed).epsilon(1e-13));
            CHECK(std::fabs(f.i_value) < prev);  // equal splits drive I to zero
            prev = std::fabs(f.i_value);
            auto bc = bound_check(s);
            CHECK(bc.satisfied);
            CHECK(bc.abs_i == doctest::Approx(bc.bound).epsilon(1e-13));  // all equal: tight
        }
    }
}

TEST_CASE("mass form and radii form agree") {
    std::vector<double> radii{0.5, kEps2};
    for (int i = 0; i < 4; ++i) radii.push_back(0.054097093776716565);
    auto s = sequence_from_radii(radii, 2);
    CHECK(s.partial == true);
    CHECK(s.realizable == true);
    CHECK(s.deficit == doctest::Approx(1.0 - 0.95692661225710651).epsilon(1e-9));
    auto f = functional_I(s);
    CHECK(f.i_value == doctest::Approx(-kApollonianSix).epsilon(1e-13));
    CHECK(f.i_value == doctest::Approx(f.upper_env).epsilon(1e-14));
    // unsorted input is sorted internally
    auto shuffled = sequence_from_radii({0.054097093776716565, 0.5, kEps2,
                                         0.054097093776716565, 0.054097093776716565,
                                         0.054097093776716565},
                                        2);
    CHECK(shuffled.d == s.d);
}

TEST_CASE("bound from the leading mass dominates") {
    rng256 rng(511);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 2 + int(rng.next_u64() % 29);
        std::vector<double> d(static_cast<std::size_t>(n));
        double sum = 0.0;
        for (auto& x : d) {
            x = -std::log(1.0 - rng.next_double());
            sum += x;
        }
        for (auto& x : d) x /= sum;
        std::sort(d.begin(), d.end(), std::greater<double>());
        auto bc = bound_check(make_sequence(d, 2));
        CHECK(bc.satisfied);
        if (d.front() >= 1.5 * d.back()) CHECK(bc.abs_i < bc.bound);  // strict off the diagonal
    }
}

TEST_CASE("Robin Hood transfers never lower the functional") {
    rng256 rng(902);
    for (int trial = 0; trial < 1000; ++trial) {
        const int dim = 1 + int(rng.next_u64() % 3);
        const int n = 2 + int(rng.next_u64() % 19);
        std::vector<double> s(static_cast<std::size_t>(n));
        double sum = 0.0;
        for (auto& x : s) {
            x = -std::log(1.0 - rng.next_double());
            sum += x;
        }
        for (auto& x : s) x /= sum;
        std::sort(s.begin(), s.end(), std::greater<double>());

        std::size_t i = rng.next_u64() % std::size_t(n - 1);
        std::size_t j = i + 1 + rng.next_u64() % (std::size_t(n) - i - 1);
        double delta = 0.5 * rng.next_double() * (s[i] - s[j]);
        std::vector<double> t = s;
        t[i] -= delta;  // rich to poor: s majorizes t
        t[j] += delta;
        std::sort(t.begin(), t.end(), std::greater<double>());

        const double is = functional_I(make_sequence(s, dim)).i_value;
        const double it = functional_I(make_sequence(t, dim)).i_value;
        CHECK(is <= it + 1e-13 * std::fabs(it));
    }
}

TEST_CASE("apollonian minimizer brackets the limit") {
    auto one = minimize_via_apollonian(1, {1, 0.0, 0.0});
    CHECK(one.i_upper == -0.125);  // (1/2)^3 exactly, the full 1-D covering
    CHECK(one.deficit <= 1e-12);
    CHECK(one.i_lower >= -0.125 - 1e-12);
    CHECK(one.coverage == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(one.sequence.realizable == true);
    CHECK(one.sequence.partial == false);
    CHECK(one.structure.balls.size() == 1);

    auto six = minimize_via_apollonian(2, {6, 0.0, 0.0});
    CHECK(six.i_upper == doctest::Approx(-kApollonianSix).epsilon(1e-15));
    CHECK(six.i_lower < six.i_upper);
    CHECK(six.i_upper < 0.0);
    CHECK(six.sequence.d.size() == 6);
    CHECK(six.structure.balls.size() == 6);
    CHECK(six.functional.i_value == doctest::Approx(six.i_upper).epsilon(1e-13));
    // deficit parked at the smallest radius bounds the tail contribution
    const double eps_last = six.structure.balls.back().radius;
    CHECK(six.i_upper - six.i_lower ==
          doctest::Approx(six.sequence.c_n * eps_last * eps_last * six.deficit).epsilon(1e-12));

    // same tail sum as the dispersion bookkeeping, computed independently there
    auto prof = material::make_profile(1.0, 2.0, 0.5, 2);
    auto den = dispersion::ball_dispersion_density(material::first_corrector(prof), prof);
    std::vector<double> radii;
    for (const auto& b : six.structure.balls) radii.push_back(b.radius);
    auto disp = dispersion::dispersion_phs(den, radii, 2);
    CHECK(disp.sum_radii_N2 == doctest::Approx(-six.i_upper).epsilon(1e-15));

    // monotone convergence in the budget
    auto two = minimize_via_apollonian(2, {2, 0.0, 0.0});
    auto twenty = minimize_via_apollonian(2, {20, 0.0, 0.0});
    CHECK(two.i_upper > six.i_upper);
    CHECK(six.i_upper > twenty.i_upper);
    CHECK(two.i_upper - two.i_lower > six.i_upper - six.i_lower);
    CHECK(six.i_upper - six.i_lower > twenty.i_upper - twenty.i_lower);
    CHECK(twenty.i_lower <= twenty.i_upper);
}

TEST_CASE("ranking prefers concentrated coverings") {
    std::vector<double> radii{0.5, kEps2};
    for (int i = 0; i < 4; ++i) radii.push_back(0.054097093776716565);
    auto apol = sequence_from_radii(radii, 2);
    const double mass = 1.0 - apol.deficit;
    std::vector<double> flat(6, mass / 6.0);
    auto equal = make_sequence(flat, 2, true);

    auto order = compare_structures({equal, apol});
    REQUIRE(order.size() == 2);
    CHECK(order[0] == 1);  // apollonian concentrates mass: smaller I
    CHECK(order[1] == 0);

    auto tie = compare_structures({equal, equal, apol});
    CHECK(tie[0] == 2);
    CHECK(tie[1] == 0);  // duplicates keep input order
    CHECK(tie[2] == 1);

    CHECK(compare_structures({apol}) == std::vector<std::size_t>{0});
    CHECK(compare_structures({}).empty());

    auto other = make_sequence({1.0}, 3);
    CHECK_THROWS_AS(compare_structures({apol, other}), degenerate_input);
}

TEST_CASE("sequence validation") {
    CHECK_THROWS_AS(make_sequence({}, 2), degenerate_input);
    CHECK_THROWS_AS(make_sequence({0.5, -0.1}, 2, true), degenerate_input);
    CHECK_THROWS_AS(make_sequence({0.2, 0.3}, 2, true), degenerate_input);  // increasing
    CHECK_THROWS_AS(make_sequence({0.5, 0.4}, 2), degenerate_input);        // mass 0.9, not partial
    CHECK_THROWS_AS(make_sequence({0.9, 0.4}, 2, true), degenerate_input);  // partial above 1
    CHECK_THROWS_AS(make_sequence({1.0}, 0), degenerate_input);

    auto s = make_sequence({0.3, 0.2}, 2, true);
    CHECK(s.deficit == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s.realizable == true);  // both under pi/4

    s.c_n = 0.123;  // tampered normalization
    CHECK_THROWS_AS(functional_I(s), degenerate_input);

    CHECK_THROWS_AS(sequence_from_radii({0.6}, 2), degenerate_input);
    CHECK_THROWS_AS(sequence_from_radii({0.0}, 2), degenerate_input);
    CHECK_THROWS_AS(sequence_from_radii({}, 2), degenerate_input);
    CHECK_THROWS_AS(sequence_from_radii({0.5, 0.5, 0.5}, 2), infeasible_radii);
}
