#include "hsdisp/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace hsdisp::dispersion {

namespace {

struct GaussRule {
    std::vector<double> x;  // nodes on [-1, 1]
    std::vector<double> w;
};

// Newton refinement of the Chebyshev-angle initial guess; symmetric pairs
// share one solve.
GaussRule gauss_legendre(int n) {
    GaussRule rule;
    rule.x.assign(n, 0.0);
    rule.w.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 64; ++it) {
            double p0 = 1.0;
            double p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        rule.x[i] = -z;
        rule.x[n - 1 - i] = z;
        rule.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        rule.w[n - 1 - i] = rule.w[i];
    }
    return rule;
}

// The bool flags which conductivity branch the panel lies in; panels never
// straddle the interface, and Gauss nodes are interior, so the flag decides
// the branch without comparing r against the interface radius.
using RadialIntegrand = std::function<double(double r, bool core)>;

double composite_region(const RadialIntegrand& fn, double lo, double hi, bool core, int panels,
                        const GaussRule& rule) {
    kahan_sum acc;
    const double width = (hi - lo) / panels;
    for (int p = 0; p < panels; ++p) {
        const double a = lo + p * width;
        const double mid = a + 0.5 * width;
        const double half = 0.5 * width;
        for (std::size_t i = 0; i < rule.x.size(); ++i)
            acc.add(half * rule.w[i] * fn(mid + half * rule.x[i], core));
    }
    return acc.value();
}

// Doubling refinement of the two-region composite rule.  The smooth branches
// make 64-node panels converge almost immediately; the loop exists to back
// the error estimate, not to rescue a hard integrand.
struct QuadValue {
    double value;
    double error;
};

QuadValue integrate_split(const RadialIntegrand& fn, double interface_r, const QuadSpec& quad) {
    if (quad.nodes < 2) throw degenerate_input("integrate_split: nodes must be >= 2");
    if (quad.max_doublings < 1)
        throw degenerate_input("integrate_split: max_doublings must be >= 1");
    const GaussRule rule = gauss_legendre(quad.nodes);
    double prev = composite_region(fn, 0.0, interface_r, true, 1, rule) +
                  composite_region(fn, interface_r, 1.0, false, 1, rule);
    int panels = 1;
    for (int step = 0; step < quad.max_doublings; ++step) {
        panels *= 2;
        const double next = composite_region(fn, 0.0, interface_r, true, panels, rule) +
                            composite_region(fn, interface_r, 1.0, false, panels, rule);
        const double diff = std::abs(next - prev);
        prev = next;
        if (diff <= quad.rel_tol * std::max(std::abs(next), 1e-30)) return {next, diff};
    }
    throw numerical_failure("integrate_split: refinement did not converge");
}

double shell_f(const FirstCorrector& fc, double r, int dim) {
    return fc.b2t + fc.ct / std::pow(r, static_cast<double>(dim));
}

double shell_f_prime(const FirstCorrector& fc, double r, int dim) {
    return -dim * fc.ct / std::pow(r, dim + 1.0);
}

}  // namespace

DispersionDensity ball_dispersion_density(const FirstCorrector& fc, const TwoPhaseProfile& p,
                                          const QuadSpec& quad) {
    const int N = p.dim;
    const double R = p.core_radius();
    const double mom4 = 3.0 / (N + 2.0);  // <y_k^4> / (<y_k^2> r^2)
    const corrector::RegularSecondCorrector rc = corrector::regular_second_corrector(p, fc);

    // grad X = 2 y_k P e_k + (y_k^2 P' + Q') y/r, so on the sphere |y| = r
    //   <|grad X|^2> = 4 P^2 <y_k^2> + P'^2 <y_k^4> + (4 P P'/r) <y_k^4>
    //                + 2 P' Q' <y_k^2> + (4 P Q'/r) <y_k^2> + Q'^2,
    // and the volume element contributes N omega_N r^{N-1}.
    const RadialIntegrand fn = [&](double r, bool core) {
        const double a = core ? p.alpha : p.beta;
        const double f = core ? fc.b1t : shell_f(fc, r, N);
        const double fp = core ? 0.0 : shell_f_prime(fc, r, N);
        const double P = corrector::eval_g(rc, p, r) - 0.5 * (f - 1.0) * (f - 1.0);
        const double Pp = corrector::eval_g_prime(rc, p, r) - (f - 1.0) * fp;
        const double Qp = corrector::eval_h_prime(rc, p, r);
        const double rN1 = std::pow(r, N + 1.0);
        const double rN = rN1 / r;
        return a * (4.0 * P * P * rN1 +
                    mom4 * (Pp * Pp * rN1 * r * r + 4.0 * P * Pp * rN1 * r) +
                    2.0 * Pp * Qp * rN1 + 4.0 * P * Qp * rN + N * Qp * Qp * rN / r);
    };

    const QuadValue q = integrate_split(fn, R, quad);
    return {unit_ball_volume(N) * q.value, unit_ball_volume(N) * q.error};
}

DispersionResult dispersion_phs(const DispersionDensity& density, std::vector<double> radii,
                                int dim) {
    if (dim < 1) throw degenerate_input("dispersion_phs: dim must be >= 1");
    if (!(density.j_value >= 0.0))
        throw degenerate_input("dispersion_phs: density must be nonnegative");

    const double wN = unit_ball_volume(dim);
    for (double eps : radii) {
        if (!(eps > 0.0)) throw degenerate_input("dispersion_phs: radii must be positive");
        if (eps > 0.5)
            throw infeasible_radii("dispersion_phs: radius exceeds the torus half-width");
    }
    std::sort(radii.begin(), radii.end(), std::greater<double>());

    kahan_sum volume;
    kahan_sum tail;
    for (double eps : radii) {
        volume.add(wN * std::pow(eps, static_cast<double>(dim)));
        tail.add(std::pow(eps, dim + 2.0));
    }
    if (volume.value() > 1.0 + 1e-6)
        throw infeasible_radii("dispersion_phs: total ball volume exceeds the unit cell");

    DispersionResult out;
    out.sum_radii_N2 = tail.value();
    out.cell_volume = 1.0;
    out.density = density;
    out.d_phs = -out.sum_radii_N2 * density.j_value;
    if (out.d_phs == 0.0) out.d_phs = 0.0;  // equal phases: drop the sign of -0
    return out;
}

double first_corrector_bracket(const FirstCorrector& fc, const TwoPhaseProfile& p,
                               const QuadSpec& quad) {
    const int N = p.dim;
    const double R = p.core_radius();
    const double m = fc.m;
    const double mom4 = 3.0 / (N + 2.0);

    // W = f^2/2; same sphere-average template as the density with P -> W,
    // Q' -> 0, plus the drift term.
    const RadialIntegrand fn = [&](double r, bool core) {
        const double a = core ? p.alpha : p.beta;
        const double f = core ? fc.b1t : shell_f(fc, r, N);
        const double fp = core ? 0.0 : shell_f_prime(fc, r, N);
        const double W = 0.5 * f * f;
        const double Wp = f * fp;
        const double rN1 = std::pow(r, N + 1.0);
        const double grad_sq =
            4.0 * W * W * rN1 + mom4 * (Wp * Wp * rN1 * r * r + 4.0 * W * Wp * rN1 * r);
        const double drift = f - 1.0;
        return a * grad_sq + 0.5 * m * drift * drift * rN1;
    };

    return unit_ball_volume(N) * integrate_split(fn, R, quad).value;
}

double contrast_bracket(const FirstCorrector& fc, const TwoPhaseProfile& p, const QuadSpec& quad) {
    const int N = p.dim;
    const double R = p.core_radius();
    const double m = fc.m;
    const double mom4 = 3.0 / (N + 2.0);

    // |grad(y_k f)|^2 y_k^2 averaged on spheres: the f^2 term rides the
    // second moment, the cross and radial terms the fourth.
    const RadialIntegrand fn = [&](double r, bool core) {
        const double a = core ? p.alpha : p.beta;
        const double f = core ? fc.b1t : shell_f(fc, r, N);
        const double fp = core ? 0.0 : shell_f_prime(fc, r, N);
        const double rN1 = std::pow(r, N + 1.0);
        const double grad_sq =
            f * f * rN1 + mom4 * (2.0 * f * fp * rN1 * r + fp * fp * rN1 * r * r);
        return (m - a * f * f) * grad_sq;
    };

    return unit_ball_volume(N) * integrate_split(fn, R, quad).value;
}

ScaleFactorReport hs_scale_factor(const std::vector<std::vector<double>>& radii_families, int dim,
                                  std::size_t window) {
    if (dim < 1) throw degenerate_input("hs_scale_factor: dim must be >= 1");
    if (radii_families.empty()) throw degenerate_input("hs_scale_factor: no families");
    if (window < 1) throw degenerate_input("hs_scale_factor: window must be >= 1");

    ScaleFactorReport report;
    report.factors.reserve(radii_families.size());
    for (const auto& family : radii_families) {
        if (family.empty()) throw degenerate_input("hs_scale_factor: empty family");
        std::vector<double> eps(family);
        for (double e : eps)
            if (!(e > 0.0)) throw degenerate_input("hs_scale_factor: radii must be positive");
        std::sort(eps.begin(), eps.end(), std::greater<double>());
        const double kappa = eps.front();
        kahan_sum tail;
        for (double e : eps) tail.add(std::pow(e, dim + 2.0));
        report.factors.push_back(tail.value() / (kappa * kappa));
    }

    const std::size_t n = report.factors.size();
    const std::size_t lo = n > window ? n - window : 0;
    double sup = report.factors[lo];
    for (std::size_t i = lo + 1; i < n; ++i) sup = std::max(sup, report.factors[i]);
    report.limsup_estimate = sup;
    return report;
}

}  // namespace hsdisp::dispersion
