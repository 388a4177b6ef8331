#include "hsdisp/minimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

namespace hsdisp::minimizer {

namespace {

constexpr double kMassTol = 1e-6;
constexpr double kPartialTol = 1e-9;

void check_entries(const std::vector<double>& d, const char* who) {
    if (d.empty()) throw degenerate_input(std::string(who) + ": empty sequence");
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (!std::isfinite(d[i]) || d[i] < 0.0)
            throw degenerate_input(std::string(who) + ": entries must be finite and non-negative");
        if (i > 0 && d[i] > d[i - 1])
            throw degenerate_input(std::string(who) + ": sequence is not non-increasing");
    }
}

double mass_of(const std::vector<double>& d) {
    kahan_sum s;
    for (double x : d) s.add(x);
    return s.value();
}

bool within_cap(const std::vector<double>& d, double omega, int dim) {
    const double cap = omega * std::pow(0.5, dim);
    return d.front() <= cap * (1.0 + 1e-12);
}

}  // namespace

ScaleSequence make_sequence(std::vector<double> d, int dim, bool partial) {
    if (dim < 1) throw degenerate_input("make_sequence: dim must be >= 1");
    check_entries(d, "make_sequence");
    const double mass = mass_of(d);
    if (!partial && std::fabs(mass - 1.0) > kMassTol)
        throw degenerate_input("make_sequence: mass constraint violated (sum = " +
                               format_double17(mass) + ")");
    if (partial && mass > 1.0 + kMassTol)
        throw degenerate_input("make_sequence: partial sequence carries mass above 1 (sum = " +
                               format_double17(mass) + ")");
    ScaleSequence s;
    const double omega = unit_ball_volume(dim);
    s.realizable = within_cap(d, omega, dim);
    s.d = std::move(d);
    s.dim = dim;
    s.c_n = 1.0 / omega;
    s.partial = partial;
    s.deficit = std::max(0.0, 1.0 - mass);
    return s;
}

ScaleSequence sequence_from_radii(const std::vector<double>& radii, int dim) {
    if (dim < 1) throw degenerate_input("sequence_from_radii: dim must be >= 1");
    if (radii.empty()) throw degenerate_input("sequence_from_radii: empty radii list");
    std::vector<double> sorted = radii;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    const double omega = unit_ball_volume(dim);
    std::vector<double> d;
    d.reserve(sorted.size());
    for (double r : sorted) {
        if (!std::isfinite(r) || r <= 0.0 || r > 0.5)
            throw degenerate_input("sequence_from_radii: radii must lie in (0, 1/2]");
        d.push_back(omega * std::pow(r, dim));
    }
    const double mass = mass_of(d);
    if (mass > 1.0 + kPartialTol)
        throw infeasible_radii("sequence_from_radii: total ball volume exceeds the unit cell");
    ScaleSequence s;
    s.d = std::move(d);
    s.dim = dim;
    s.c_n = 1.0 / omega;
    s.partial = (1.0 - mass > kPartialTol);
    s.deficit = std::max(0.0, 1.0 - mass);
    s.realizable = true;  // each radius fits the half-width, volume fits the cell
    return s;
}

FunctionalValue functional_I(const ScaleSequence& s) {
    if (s.dim < 1) throw degenerate_input("functional_I: dim must be >= 1");
    check_entries(s.d, "functional_I");
    const double omega = unit_ball_volume(s.dim);
    if (!(s.c_n > 0.0) || std::fabs(s.c_n * omega - 1.0) > 1e-10)
        throw degenerate_input("functional_I: c_N is inconsistent with the dimension");
    const double mass = mass_of(s.d);
    if (!s.partial && std::fabs(mass - 1.0) > kMassTol)
        throw degenerate_input("functional_I: mass constraint violated (sum = " +
                               format_double17(mass) + ")");
    if (mass > 1.0 + kMassTol)
        throw degenerate_input("functional_I: total mass above 1 (sum = " +
                               format_double17(mass) + ")");

    const double q = double(s.dim + 2) / double(s.dim);
    const double cq = std::pow(s.c_n, q);
    kahan_sum mass_form;
    kahan_sum radii_form;
    for (double x : s.d) {
        mass_form.add(std::pow(x, q));
        // independent rounding route: back to the radius, then the N+2 power
        radii_form.add(std::pow(std::pow(s.c_n * x, 1.0 / s.dim), s.dim + 2));
    }
    FunctionalValue v;
    v.i_value = -cq * mass_form.value();
    v.upper_env = -radii_form.value();
    v.bound_from_d1 = cq * std::pow(s.d.front(), 2.0 / s.dim);
    return v;
}

BoundCheck bound_check(const ScaleSequence& s) {
    const FunctionalValue v = functional_I(s);
    BoundCheck b;
    b.abs_i = std::fabs(v.i_value);
    b.bound = v.bound_from_d1;
    b.satisfied = b.abs_i <= b.bound * (1.0 + 1e-12);
    return b;
}

MinimizeResult minimize_via_apollonian(int dim, const packing::StopRule& budget,
                                       const packing::SearchSpec& search) {
    packing::BallPacking pk = packing::greedy_apollonian(dim, budget, search);
    std::vector<double> radii;
    radii.reserve(pk.balls.size());
    for (const auto& b : pk.balls) radii.push_back(b.radius);

    MinimizeResult r;
    r.sequence = sequence_from_radii(radii, dim);
    r.sequence.realizable = true;  // witnessed by the packing below
    r.functional = functional_I(r.sequence);

    kahan_sum tail;  // radii are already sorted descending
    for (double eps : radii) tail.add(std::pow(eps, dim + 2));
    const double partial_sum = tail.value();
    const double eps_last = radii.back();

    r.coverage = packing::coverage(pk).volume_fraction;
    r.deficit = r.sequence.deficit;
    r.i_upper = -partial_sum;
    // worst case parks the uncovered mass in balls of the smallest found
    // radius: each adds at most eps_last^2 * c_N per unit of mass
    r.i_lower = -(partial_sum + r.sequence.c_n * eps_last * eps_last * r.deficit);
    r.structure = std::move(pk);
    return r;
}

std::vector<std::size_t> compare_structures(const std::vector<ScaleSequence>& seqs) {
    if (seqs.empty()) return {};
    const int dim = seqs.front().dim;
    std::vector<double> vals;
    vals.reserve(seqs.size());
    for (const auto& s : seqs) {
        if (s.dim != dim) throw degenerate_input("compare_structures: mixed dimensions");
        vals.push_back(functional_I(s).i_value);
    }
    std::vector<std::size_t> order(seqs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    return order;
}

}  // namespace hsdisp::minimizer
