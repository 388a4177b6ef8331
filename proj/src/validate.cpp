#include "hsdisp/validate.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <utility>

#include <json.hpp>

#include "hsdisp/corrector.hpp"
#include "hsdisp/dispersion.hpp"
#include "hsdisp/material.hpp"
#include "hsdisp/minimizer.hpp"
#include "hsdisp/oracle.hpp"
#include "hsdisp/packing.hpp"

namespace hsdisp::validate {

namespace {

using material::FirstCorrector;
using material::TwoPhaseProfile;

// Deterministic profile draw shared by the sections.  Contrast is capped
// because the finite-difference oracles slow down (not break) at extreme
// ratios; the unit suites push those limits separately.
TwoPhaseProfile draw_profile(rng256& rng, int dim, double max_ratio) {
    const double alpha = 0.2 + 4.8 * rng.next_double();
    const double ratio = std::pow(max_ratio, rng.next_double());
    const double theta = 0.1 + 0.8 * rng.next_double();
    return material::make_profile(alpha, alpha * ratio, theta, dim);
}

// Relative sup distance between a nodal vector and a reference callable.
double rel_sup(const oracle::RadialGrid& grid, const std::vector<double>& vals,
               const std::function<double(double)>& ref) {
    double sup = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
        const double r = ref(grid.nodes[i]);
        sup = std::max(sup, std::abs(vals[i] - r));
        scale = std::max(scale, std::abs(r));
    }
    return scale > 0.0 ? sup / scale : sup;
}

struct Suite {
    std::uint64_t seed;
    int threads;
    ValidationReport rep;

    // error against tolerance; pass demands finite numbers
    void gate(std::string name, double value, double reference, double error, double tol,
              std::string note = {}) {
        CheckResult c;
        c.name = std::move(name);
        c.value = value;
        c.reference = reference;
        c.error = error;
        c.tolerance = tol;
        c.pass = std::isfinite(value) && std::isfinite(error) && error <= tol;
        c.note = std::move(note);
        rep.checks.push_back(std::move(c));
    }
    void target_abs(std::string name, double value, double reference, double tol,
                    std::string note = {}) {
        gate(std::move(name), value, reference, std::abs(value - reference), tol,
             std::move(note));
    }
    void target_rel(std::string name, double value, double reference, double tol,
                    std::string note = {}) {
        const double scale = std::max(std::abs(reference), 1e-300);
        gate(std::move(name), value, reference, std::abs(value - reference) / scale, tol,
             std::move(note));
    }
    void observe(std::string name, double value, std::string note) {
        rep.observations.push_back({std::move(name), value, std::move(note)});
    }
    // independent generator per section so reordering sections never
    // perturbs the draws of another
    rng256 stream(std::uint64_t section) const { return rng256(split_seed(seed, section)); }
};

void check_material(Suite& s) {
    s.target_rel("material.reference_m_n2",
                 material::equivalent_conductivity(material::make_profile(1.0, 2.0, 0.5, 2)),
                 10.0 / 7.0, 1e-14);
    s.target_rel("material.reference_m_n3",
                 material::equivalent_conductivity(material::make_profile(1.0, 2.0, 0.5, 3)),
                 16.0 / 11.0, 1e-14);

    auto rng = s.stream(11);
    {
        auto p = draw_profile(rng, 1, 50.0);
        const double harm = 1.0 / (p.theta / p.alpha + (1.0 - p.theta) / p.beta);
        s.target_rel("material.harmonic_limit_n1", material::equivalent_conductivity(p), harm,
                     1e-13, "the 1-D assemblage collapses to the harmonic mean");
    }
    {
        int bad = 0;
        for (int t = 0; t < 100; ++t) {
            auto p = draw_profile(rng, 1 + t % 4, 100.0);
            auto b = material::conductivity_bounds(p);
            const double slack = 1e-12 * b.arithmetic;
            if (!(b.harmonic - slack <= b.assemblage && b.assemblage <= b.arithmetic + slack))
                ++bad;
        }
        s.gate("material.bounds_order", double(bad), 0.0, double(bad), 0.0,
               "harmonic <= m <= arithmetic over 100 random profiles, dims 1..4");
    }
    {
        double worst = 0.0;
        for (int t = 0; t < 12; ++t) {
            auto p = draw_profile(rng, 2 + t % 3, 100.0);
            auto fc = material::first_corrector(p);
            auto grid = oracle::make_radial_grid(p, 10000);
            const double m_est =
                oracle::energy_integral_m(p, grid, oracle::solve_radial_f(p, grid).values);
            worst = std::max(worst, std::abs(m_est - fc.m) / fc.m);
        }
        s.gate("material.m_vs_energy_oracle", worst, 0.0, worst, 1e-6,
               "closed-form m against the radial FD energy integral, 12 profiles");
    }
    {
        double worst = 0.0;
        for (int t = 0; t < 20; ++t) {
            auto p = draw_profile(rng, 1 + t % 4, 100.0);
            auto fc = material::first_corrector(p);
            auto fr = material::flux_jump_residuals(fc, p);
            // the fluxes live at the scale of m, so the residual is measured
            // relative to it
            worst = std::max(worst, std::max(fr.at_interface, fr.at_boundary) / fc.m);
        }
        s.gate("material.flux_continuity", worst, 0.0, worst, 1e-13,
               "conormal flux of the first corrector at the interface and the outer "
               "sphere, relative to m");
    }
}

void check_corrector(Suite& s) {
    auto rng = s.stream(22);
    {
        double worst_row = 0.0, worst_neu = 0.0;
        int rank_bad = 0;
        for (int t = 0; t < 40; ++t) {
            auto p = draw_profile(rng, 2 + t % 3, 100.0);
            auto fc = material::first_corrector(p);
            auto sc = corrector::solve_closed_form(p, fc);
            auto cr = corrector::verify_consistency(sc, p, fc);
            worst_row = std::max(worst_row, cr.max_row_residual);
            if (cr.rank != 10 || cr.rank_augmented != 10) ++rank_bad;
            auto nr = corrector::neumann_residual(sc, fc, p.dim);
            worst_neu = std::max({worst_neu, nr.first, nr.second});
        }
        s.gate("corrector.row_residuals", worst_row, 0.0, worst_row, 1e-10,
               "all 12 transmission equations at the closed-form coefficients, 40 profiles");
        s.gate("corrector.rank_consistency", double(rank_bad), 0.0, double(rank_bad), 0.0,
               "rank 10 and unchanged by the right-hand side");
        s.gate("corrector.neumann_rows", worst_neu, 0.0, worst_neu, 1e-12,
               "reduced outer Neumann rows of the pinned variant");
    }
    {
        auto p = material::make_profile(1.0, 2.0, 0.5, 2);
        auto rc = corrector::regular_second_corrector(p, material::first_corrector(p));
        const double e = std::max({std::abs(rc.b1 + 5.0 / 182.0), std::abs(rc.b2 - 19.0 / 182.0),
                                   std::abs(rc.d2 - 1.0 / 26.0)});
        s.gate("corrector.regular_reference_n2", e, 0.0, e, 1e-13,
               "bounded-variant coefficients (-5/182, 19/182, 1/26) at the reference profile");
    }
    {
        double worst = 0.0;
        for (int t = 0; t < 3; ++t) {
            auto p = draw_profile(rng, 2 + t, 20.0);
            auto fc = material::first_corrector(p);
            auto sc = corrector::solve_closed_form(p, fc);
            auto grid = oracle::make_radial_grid(p, 10000, 1e-2);
            auto gh = oracle::solve_radial_gh(p, fc, grid);
            worst = std::max(worst, rel_sup(grid, gh.g, [&](double r) {
                return corrector::eval_g(sc, p, r);
            }));
            worst = std::max(worst, rel_sup(grid, gh.h, [&](double r) {
                return corrector::eval_h(sc, p, r);
            }));
        }
        s.gate("corrector.pinned_fd_supnorm", worst, 0.0, worst, 1e-5,
               "pinned transmission march against the closed form on [1e-2, 1]");
    }
    {
        auto p = material::make_profile(1.0, 2.0, 0.5, 2);
        auto fc = material::first_corrector(p);
        auto rc = corrector::regular_second_corrector(p, fc);
        auto grid = oracle::make_radial_grid(p, 10000, 1e-4);
        auto gh = oracle::solve_radial_gh_regular(p, fc, grid);
        double worst = rel_sup(grid, gh.g, [&](double r) { return corrector::eval_g(rc, p, r); });
        worst = std::max(worst, rel_sup(grid, gh.h, [&](double r) {
            return corrector::eval_h(rc, p, r);
        }));
        s.gate("corrector.regular_fd_supnorm", worst, 0.0, worst, 1e-5,
               "H1 solve against the bounded closed form on [1e-4, 1]");
        s.target_rel("corrector.outer_conormal_n2", corrector::eval_g_prime(rc, p, 1.0),
                     12.0 / 91.0, 1e-12,
                     "emergent outer conormal of the bounded variant; nonzero by construction");
        s.observe("corrector.outer_conormal_fd", gh.outer_neumann_g,
                  "the same trace from the finite-difference solve; closed form 12/91");
    }
    {
        auto p = material::make_profile(1.0, 2.0, 0.5, 2);
        auto fc = material::first_corrector(p);
        auto sc = corrector::solve_closed_form(p, fc);
        double errs[3];
        const std::size_t ns[3] = {2500, 5000, 10000};
        for (int k = 0; k < 3; ++k) {
            auto grid = oracle::make_radial_grid(p, ns[k], 1e-2);
            auto gh = oracle::solve_radial_gh(p, fc, grid);
            errs[k] = rel_sup(grid, gh.g, [&](double r) { return corrector::eval_g(sc, p, r); });
        }
        const double slope = std::log2(errs[1] / errs[2]);
        s.target_abs("corrector.fd_convergence_slope", slope, 2.0, 0.2,
                     "pinned march under dyadic refinement");
    }
    {
        double worst = 0.0;
        for (int t = 0; t < 8; ++t) {
            const int dim = 1 + t % 4;
            auto p = t < 4 ? material::make_profile(1.0, 2.0, 0.5, dim)
                           : draw_profile(rng, dim, 50.0);
            auto rc = corrector::regular_second_corrector(p, material::first_corrector(p));
            const double gp = corrector::eval_g_prime(rc, p, 1.0);
            const double hp = corrector::eval_h_prime(rc, p, 1.0);
            worst = std::max(worst, std::abs(hp + gp / double(p.dim)));
        }
        s.gate("corrector.conormal_sphere_mean", worst, 0.0, worst, 1e-12,
               "h'(1) + g'(1)/N vanishes: only the degree-2 harmonic survives on the "
               "outer sphere");
    }
}

void check_dispersion(Suite& s) {
    {
        double worst = 0.0;
        for (int dim = 1; dim <= 4; ++dim) {
            auto p = material::make_profile(2.5, 2.5, 0.3, dim);
            auto den = dispersion::ball_dispersion_density(material::first_corrector(p), p);
            auto res = dispersion::dispersion_phs(den, {0.3, 0.1}, dim);
            worst = std::max({worst, std::abs(den.j_value), std::abs(res.d_phs)});
        }
        s.gate("dispersion.equal_phase_zero", worst, 0.0, worst, 0.0,
               "density and coefficient vanish identically at equal phases");
    }
    {
        auto p = material::make_profile(1.0, 2.0, 0.5, 1);
        auto den = dispersion::ball_dispersion_density(material::first_corrector(p), p);
        s.target_rel("dispersion.reference_j_n1", den.j_value, 2.0 / 81.0, 1e-12,
                     "1-D reference profile collapses to a rational");
    }
    {
        auto rng = s.stream(33);
        double worst = -1e300;
        for (int t = 0; t < 24; ++t) {
            const int dim = 1 + t % 4;
            auto p = draw_profile(rng, dim, 50.0);
            auto den = dispersion::ball_dispersion_density(material::first_corrector(p), p);
            const std::vector<double> radii =
                dim == 1 ? std::vector<double>{0.3, 0.1} : std::vector<double>{0.3, 0.15, 0.1};
            worst = std::max(worst, dispersion::dispersion_phs(den, radii, dim).d_phs);
        }
        s.gate("dispersion.sign_random", worst, 0.0, std::max(0.0, worst), 0.0,
               "d_phs <= 0 for 24 random profiles, dims 1..4");
    }
    {
        auto p = material::make_profile(1.0, 2.0, 0.5, 1);
        auto fc = material::first_corrector(p);
        auto den = dispersion::ball_dispersion_density(fc, p);
        auto res = dispersion::dispersion_phs(den, {0.5}, 1);
        auto cond = [](double y) { return (y < 0.25 || y > 0.75) ? 1.0 : 2.0; };
        auto bl = oracle::bloch_1d(cond, {0.02, 0.04, 0.06, 0.08, 0.10, 0.12}, 4096);
        s.target_abs("dispersion.bloch_q_n1", bl.q, fc.m, 1e-8,
                     "fitted quadratic coefficient against the homogenized coefficient");
        s.target_rel("dispersion.bloch_burnett_n1", bl.burnett, res.d_phs, 1e-5,
                     "a single ball of radius 1/2 tiles the line: the fitted quartic "
                     "coefficient equals -j/8");
    }
    {
        auto p = material::make_profile(1.0, 2.0, 0.5, 2);
        auto fc = material::first_corrector(p);
        auto rc = corrector::regular_second_corrector(p, fc);
        auto den = dispersion::ball_dispersion_density(fc, p);
        auto integrand = [&](const double* y, int dim) {
            double r2 = 0.0;
            for (int i = 0; i < dim; ++i) r2 += y[i] * y[i];
            const double r = std::max(std::sqrt(r2), 1e-14);
            const double a = p.conductivity(r);
            const double f = material::eval_f(fc, p, r);
            const double fp = material::eval_f_prime(fc, p, r);
            const double P = corrector::eval_g(rc, p, r) - 0.5 * (f - 1.0) * (f - 1.0);
            const double Pp = corrector::eval_g_prime(rc, p, r) - (f - 1.0) * fp;
            const double Qp = corrector::eval_h_prime(rc, p, r);
            const double y0 = y[0];
            const double radial = y0 * y0 * Pp + Qp;
            return a * (4.0 * y0 * y0 * P * P + radial * radial + 4.0 * y0 * P * radial * y0 / r);
        };
        auto mc = oracle::mc_volume_integral(2, integrand, 4'000'000, split_seed(s.seed, 301),
                                             s.threads);
        s.gate("dispersion.j_vs_mc_n2", mc.value, den.j_value,
               std::abs(mc.value - den.j_value), 4.0 * mc.std_error,
               "volume Monte-Carlo of the energy density along the first axis, 4e6 samples; "
               "the tolerance is four standard errors");

        const double fcb = dispersion::first_corrector_bracket(fc, p);
        s.observe("dispersion.first_corrector_bracket", fcb,
                  "shortcut bracket dropping the outer flux term; stays positive even at "
                  "equal phases, so it is reported, never used as the density");
        s.observe("dispersion.bracket_gap", fcb - den.j_value,
                  "bracket minus the energy-form density at the reference profile");
        s.observe("dispersion.contrast_bracket", dispersion::contrast_bracket(fc, p),
                  "mismatch-weighted contraction; sign-indefinite, reported only");
    }
}

void check_bloch(Suite& s) {
    {
        auto bl = oracle::bloch_1d([](double) { return 1.7; },
                                   {0.02, 0.04, 0.06, 0.08, 0.10, 0.12}, 2048);
        s.target_abs("bloch.homogeneous_q", bl.q, 1.7, 1e-8,
                     "uniform cell: the dispersion relation is exactly quadratic");
        s.gate("bloch.homogeneous_flat", bl.burnett, 0.0, std::abs(bl.burnett), 1e-10,
               "no fourth-order correction for a uniform cell");
    }
    {
        auto bl = oracle::bloch_1d([](double y) { return (y < 0.25 || y > 0.75) ? 1.0 : 2.0; },
                                   {0.02, 0.04, 0.06, 0.08, 0.10, 0.12}, 4096);
        s.target_abs("bloch.two_phase_q", bl.q, 4.0 / 3.0, 1e-6,
                     "piecewise {1,2} half-and-half cell: q is the harmonic mean");
        s.gate("bloch.two_phase_sign", bl.burnett, 0.0, std::max(0.0, bl.burnett), 0.0,
               "the fourth-order coefficient is negative for a genuine two-phase cell");
    }
    {
        // conjugating the quasimomentum conjugates the operator, so the
        // spectrum is even in eta even for an asymmetric cell
        auto bl = oracle::bloch_1d([](double y) { return 1.0 + 0.8 * y; },
                                   {-0.12, -0.08, -0.04, 0.04, 0.08, 0.12}, 2048);
        double worst = 0.0;
        const std::size_t n = bl.lambda.size();
        for (std::size_t i = 0; i < n / 2; ++i)
            worst = std::max(worst, std::abs(bl.lambda[i] - bl.lambda[n - 1 - i]));
        s.gate("bloch.evenness", worst, 0.0, worst, 1e-10,
               "lambda(eta) = lambda(-eta) on an asymmetric smooth cell");
    }
}

void check_mc(Suite& s) {
    {
        auto c = oracle::mc_volume_integral(
            2, [](const double*, int) { return 1.0; }, 200'000, split_seed(s.seed, 41),
            s.threads);
        const double e = std::abs(c.value - unit_ball_volume(2)) + c.std_error;
        s.gate("mc.ball_volume_exact", c.value, unit_ball_volume(2), e, 0.0,
               "constant integrand: a zero-variance estimator");
    }
    {
        auto e2 = oracle::mc_volume_integral(
            2, [](const double* x, int) { return x[0] * x[0]; }, 2'000'000,
            split_seed(s.seed, 42), s.threads);
        const double ref = unit_ball_volume(2) / 4.0;
        s.gate("mc.second_moment_n2", e2.value, ref, std::abs(e2.value - ref),
               4.0 * e2.std_error, "tolerance is four standard errors");
    }
    {
        auto e4 = oracle::mc_volume_integral(
            3, [](const double* x, int) { return std::pow(x[0], 4); }, 2'000'000,
            split_seed(s.seed, 43), s.threads);
        const double ref = 3.0 * unit_ball_volume(3) / 35.0;
        s.gate("mc.fourth_moment_n3", e4.value, ref, std::abs(e4.value - ref),
               4.0 * e4.std_error, "tolerance is four standard errors");
    }
    {
        const double ref = unit_ball_volume(2) / 4.0;
        int covered = 0;
        const int trials = 30;
        for (int t = 0; t < trials; ++t) {
            auto e = oracle::mc_volume_integral(
                2, [](const double* x, int) { return x[0] * x[0]; }, 200'000,
                split_seed(s.seed, 600 + std::uint64_t(t)), s.threads);
            if (std::abs(e.value - ref) <= 4.0 * e.std_error) ++covered;
        }
        const double frac = double(covered) / trials;
        s.gate("mc.seed_containment", frac, 1.0, 1.0 - frac, 1.0 / 29.0,
               "4-sigma intervals cover the truth across 30 independent seeds; "
               "one miss tolerated");
    }
}

void check_packing(Suite& s) {
    packing::SearchSpec sp;
    sp.threads = s.threads;
    auto p6 = packing::greedy_apollonian(2, packing::StopRule{.max_balls = 6}, sp);
    {
        const auto& b = p6.balls[0];
        const double e = std::abs(b.radius - 0.5) + std::abs(b.center[0]) + std::abs(b.center[1]);
        s.gate("packing.level1_exact", b.radius, 0.5, e, 0.0,
               "first ball: radius 1/2 at the origin, bit-exact");
    }
    s.target_abs("packing.level2_radius", p6.balls[1].radius, 0.5 * (std::sqrt(2.0) - 1.0),
                 1e-12, "largest ball in the complement of the first");
    {
        int third = 0;
        for (std::size_t i = 2; i < p6.balls.size(); ++i)
            if (p6.balls[i].radius == p6.balls[2].radius) ++third;
        const double e = std::abs(third - 4.0) + std::abs(double(p6.balls.size()) - 6.0);
        s.gate("packing.level3_count", double(third), 4.0, e, 0.0,
               "the third level inserts one batch of four equal maximizers");
    }
    s.target_abs("packing.level3_radius", p6.balls[2].radius, (5.0 - 3.0 * std::sqrt(2.0)) / 14.0,
                 5e-12, "third-level radius against the closed form (5 - 3 sqrt 2)/14");
    {
        auto q6 = packing::greedy_apollonian(2, packing::StopRule{.max_balls = 6}, sp);
        int mism = 0;
        for (std::size_t i = 0; i < 6; ++i) {
            if (q6.balls[i].radius != p6.balls[i].radius) ++mism;
            for (int k = 0; k < 2; ++k)
                if (q6.balls[i].center[std::size_t(k)] != p6.balls[i].center[std::size_t(k)])
                    ++mism;
        }
        s.gate("packing.determinism", double(mism), 0.0, double(mism), 0.0,
               "a rerun reproduces every center and radius bit-for-bit");
    }
    {
        namespace fs = std::filesystem;
        const fs::path tmp = fs::temp_directory_path() /
                             ("hsdisp-validate-" + std::to_string(::getpid()) + "-" +
                              std::to_string(s.seed) + ".json");
        packing::save_packing(p6, tmp.string());
        auto r6 = packing::load_packing(tmp.string());
        std::error_code ec;
        fs::remove(tmp, ec);
        int mism = (r6.dim != p6.dim) + (r6.balls.size() != p6.balls.size()) +
                   (r6.generator != p6.generator);
        for (std::size_t i = 0; i < p6.balls.size() && mism == 0; ++i) {
            if (r6.balls[i].radius != p6.balls[i].radius) ++mism;
            for (int k = 0; k < 2; ++k)
                if (r6.balls[i].center[std::size_t(k)] != p6.balls[i].center[std::size_t(k)])
                    ++mism;
        }
        s.gate("packing.roundtrip", double(mism), 0.0, double(mism), 0.0,
               "save/load round trip preserves the packing bit-for-bit");
    }
    {
        auto pc = packing::greedy_apollonian(2, packing::StopRule{.target_coverage = 0.99}, sp);
        const double cov = packing::coverage(pc).volume_fraction;
        const double e = std::max(0.0, 0.99 - cov) + std::max(0.0, cov - 1.0 - 1e-9) +
                         std::max(0.0, double(pc.balls.size()) - 128.0);
        s.gate("packing.coverage_target", cov, 0.99, e, 0.0,
               "greedy run reaches 99% volume within a 128-ball budget");
        s.observe("packing.coverage_balls", double(pc.balls.size()),
                  "balls needed for 99% volume at the default grid");
    }
    {
        auto p = material::make_profile(1.0, 2.0, 0.5, 2);
        auto den = dispersion::ball_dispersion_density(material::first_corrector(p), p);
        std::vector<double> radii;
        for (const auto& b : p6.balls) radii.push_back(b.radius);
        const double base = dispersion::dispersion_phs(den, radii, 2).d_phs;

        packing::BallPacking shifted = p6;
        for (auto& b : shifted.balls)
            for (int k = 0; k < 2; ++k) {
                double c = b.center[std::size_t(k)] + (k == 0 ? 0.3 : 0.7);
                c -= std::floor(c);
                b.center[std::size_t(k)] = c;
            }
        // translated balls stay disjoint; re-validate, then sort back into
        // canonical order before reading the radii off
        std::sort(shifted.balls.begin(), shifted.balls.end(),
                  [](const packing::TorusBall& a, const packing::TorusBall& b) {
                      if (a.radius != b.radius) return a.radius > b.radius;
                      return std::lexicographical_compare(a.center.begin(), a.center.end(),
                                                          b.center.begin(), b.center.end());
                  });
        packing::validate_packing(shifted);
        std::vector<double> shifted_radii;
        for (const auto& b : shifted.balls) shifted_radii.push_back(b.radius);
        const double moved = dispersion::dispersion_phs(den, shifted_radii, 2).d_phs;
        s.target_rel("packing.invariance_translation", moved, base, 1e-15,
                     "a common translation leaves the coefficient unchanged");

        std::vector<double> perm(radii.rbegin(), radii.rend());
        const double permuted = dispersion::dispersion_phs(den, perm, 2).d_phs;
        s.target_rel("packing.invariance_permutation", permuted, base, 1e-15,
                     "the coefficient depends on the radii multiset only");
    }
}

void check_minimizer(Suite& s) {
    packing::SearchSpec sp;
    sp.threads = s.threads;
    {
        auto r1 = minimizer::minimize_via_apollonian(1, packing::StopRule{.max_balls = 4}, sp);
        s.gate("minimizer.n1_exact", r1.i_upper, -0.125, std::abs(r1.i_upper + 0.125), 0.0,
               "a single arc of radius 1/2 tiles the line; -1/8 is exact");
    }
    {
        auto r2 = minimizer::minimize_via_apollonian(2, packing::StopRule{.max_balls = 6}, sp);
        const double eps_last = r2.structure.balls.back().radius;
        const double width = r2.i_upper - r2.i_lower;
        const double ident = r2.sequence.c_n * eps_last * eps_last * r2.deficit;
        s.target_rel("minimizer.bracket_width_n2", width, ident, 1e-12,
                     "bracket width c_N eps_last^2 (1 - coverage)");

        auto p = material::make_profile(1.0, 2.0, 0.5, 2);
        auto den = dispersion::ball_dispersion_density(material::first_corrector(p), p);
        std::vector<double> radii;
        for (const auto& b : r2.structure.balls) radii.push_back(b.radius);
        const double sum = dispersion::dispersion_phs(den, radii, 2).sum_radii_N2;
        s.target_rel("minimizer.cross_module_sum_n2", -r2.i_upper, sum, 1e-14,
                     "the upper bracket is the same radii power sum the dispersion "
                     "coefficient scales by");
        s.observe("minimizer.apollonian_upper_n2", r2.i_upper,
                  "six-ball torus construction; paired with the bracket width check");
    }
    {
        auto rng = s.stream(55);
        int violations = 0;
        double saturation = 0.0;
        for (int t = 0; t < 1000; ++t) {
            const int dim = 1 + t % 3;
            const int n = 1 + int(rng.next_double() * 12.0);
            std::vector<double> d(static_cast<std::size_t>(n));
            double mass = 0.0;
            for (auto& x : d) {
                x = -std::log(1.0 - rng.next_double());
                mass += x;
            }
            for (auto& x : d) x /= mass;
            std::sort(d.begin(), d.end(), std::greater<double>());
            auto seq = minimizer::make_sequence(d, dim);
            auto fv = minimizer::functional_I(seq);
            auto bc = minimizer::bound_check(seq);
            const double cq = std::pow(seq.c_n, (dim + 2.0) / dim);
            if (!(fv.i_value < 0.0)) ++violations;
            if (fv.i_value < -cq * (1.0 + 1e-12)) ++violations;
            if (!bc.satisfied) ++violations;
            saturation = std::max(saturation, bc.abs_i / bc.bound);
        }
        s.gate("minimizer.random_bounds", double(violations), 0.0, double(violations), 0.0,
               "1000 random normalized sequences: I in [-c^q, 0) and |I| <= c^q d1^{2/N}");
        s.observe("minimizer.bound_saturation", saturation,
                  "largest |I| / bound seen; equality needs a single-scale sequence");
    }
    {
        auto rng = s.stream(56);
        int violations = 0;
        for (int t = 0; t < 1000; ++t) {
            const int dim = 1 + t % 3;
            const int n = 2 + int(rng.next_double() * 9.0);
            std::vector<double> d(static_cast<std::size_t>(n));
            double mass = 0.0;
            for (auto& x : d) {
                x = -std::log(1.0 - rng.next_double());
                mass += x;
            }
            for (auto& x : d) x /= mass;
            std::sort(d.begin(), d.end(), std::greater<double>());
            std::size_t i = std::size_t(rng.next_double() * (n - 1));
            std::size_t j = i + 1 + std::size_t(rng.next_double() * (n - 1 - i));
            std::vector<double> e = d;
            const double delta = 0.5 * rng.next_double() * (d[i] - d[j]);
            e[i] -= delta;
            e[j] += delta;
            std::sort(e.begin(), e.end(), std::greater<double>());
            const double vi = minimizer::functional_I(minimizer::make_sequence(d, dim)).i_value;
            const double ve = minimizer::functional_I(minimizer::make_sequence(e, dim)).i_value;
            // the transfer evens the sequence out, so the functional must
            // not decrease
            if (vi > ve + 1e-13 * std::abs(ve)) ++violations;
        }
        s.gate("minimizer.schur_transfers", double(violations), 0.0, double(violations), 0.0,
               "1000 Robin Hood transfers never lower the functional");
    }
    {
        double worst = 0.0;
        for (int dim = 1; dim <= 3; ++dim) {
            const double cq = std::pow(1.0 / unit_ball_volume(dim), (dim + 2.0) / dim);
            for (int k : {2, 3, 5, 10, 100}) {
                std::vector<double> d(std::size_t(k), 1.0 / k);
                auto fv = minimizer::functional_I(minimizer::make_sequence(d, dim));
                const double ref = cq * std::pow(double(k), -2.0 / dim);
                worst = std::max(worst, std::abs(-fv.i_value - ref) / ref);
            }
        }
        s.gate("minimizer.equal_split", worst, 0.0, worst, 1e-12,
               "|I| of the k-fold equal split is c^q k^{-2/N}");
    }
}

}  // namespace

ValidationReport run_validation(std::uint64_t seed, int threads) {
    if (threads < 1) throw degenerate_input("run_validation: threads must be >= 1");
    Suite s{seed, threads, {}};
    s.rep.seed = seed;
    check_material(s);
    check_corrector(s);
    check_dispersion(s);
    check_bloch(s);
    check_mc(s);
    check_packing(s);
    check_minimizer(s);
    s.rep.all_pass = std::all_of(s.rep.checks.begin(), s.rep.checks.end(),
                                 [](const CheckResult& c) { return c.pass; });
    return s.rep;
}

namespace {

std::string quote(const std::string& s) { return nlohmann::json(s).dump(); }

// non-finite values have no JSON literal; null keeps the document parseable
std::string num(double x) { return std::isfinite(x) ? format_double17(x) : "null"; }

}  // namespace

std::string report_json(const ValidationReport& rep) {
    std::string out;
    out += "{\n";
    out += "  \"seed\": " + std::to_string(rep.seed) + ",\n";
    out += "  \"checks\": [";
    for (std::size_t i = 0; i < rep.checks.size(); ++i) {
        const auto& c = rep.checks[i];
        out += (i ? ",\n" : "\n");
        out += "    {\"name\": " + quote(c.name) + ", \"value\": " + num(c.value) +
               ", \"reference\": " + num(c.reference) + ", \"error\": " + num(c.error) +
               ", \"tolerance\": " + num(c.tolerance) +
               ", \"pass\": " + (c.pass ? "true" : "false") + ", \"note\": " + quote(c.note) +
               "}";
    }
    out += rep.checks.empty() ? "],\n" : "\n  ],\n";
    out += "  \"observations\": [";
    for (std::size_t i = 0; i < rep.observations.size(); ++i) {
        const auto& o = rep.observations[i];
        out += (i ? ",\n" : "\n");
        out += "    {\"name\": " + quote(o.name) + ", \"value\": " + num(o.value) +
               ", \"note\": " + quote(o.note) + "}";
    }
    out += rep.observations.empty() ? "],\n" : "\n  ],\n";
    std::size_t passed = 0;
    for (const auto& c : rep.checks)
        if (c.pass) ++passed;
    out += "  \"summary\": {\"checks\": " + std::to_string(rep.checks.size()) +
           ", \"passed\": " + std::to_string(passed) +
           ", \"failed\": " + std::to_string(rep.checks.size() - passed) +
           ", \"all_pass\": " + (rep.all_pass ? "true" : "false") + "}\n";
    out += "}\n";
    return out;
}

void save_report(const ValidationReport& rep, const std::string& path) {
    const std::string body = report_json(rep);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::trunc);
        if (!f) throw numerical_failure("save_report: cannot open " + tmp);
        f << body;
        f.flush();
        if (!f) throw numerical_failure("save_report: write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw numerical_failure("save_report: cannot move " + tmp + " into place");
}

}  // namespace hsdisp::validate
