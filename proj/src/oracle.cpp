#include "hsdisp/oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>

#include "hsdisp/material.hpp"

namespace hsdisp::oracle {

namespace {

// int_a^b r^k dr for integer k, the k = -1 logarithm included.
double mom(int k, double a, double b) {
    if (k == -1) return std::log(b / a);
    const double e = k + 1.0;
    return (std::pow(b, e) - std::pow(a, e)) / e;
}

// Derivative of the quadratic through (xs[i], us[i]) evaluated at xs[0].
double lagrange_prime_at_first(const std::array<double, 3>& xs, const std::array<double, 3>& us) {
    const double x0 = xs[0], x1 = xs[1], x2 = xs[2];
    return us[0] * (1.0 / (x0 - x1) + 1.0 / (x0 - x2)) +
           us[1] * (x0 - x2) / ((x1 - x0) * (x1 - x2)) +
           us[2] * (x0 - x1) / ((x2 - x0) * (x2 - x1));
}

}  // namespace

RadialGrid make_radial_grid(const TwoPhaseProfile& p, std::size_t n_nodes, double r_lo,
                            double r_hi) {
    if (n_nodes < 1000) throw degenerate_input("radial grid: need at least 1000 nodes");
    if (!(r_lo > 0.0) || !(r_hi > r_lo) || r_hi > 1.0)
        throw degenerate_input("radial grid: need 0 < r_lo < r_hi <= 1");
    const double R = p.core_radius();
    if (!(R > r_lo) || !(R < r_hi))
        throw degenerate_input("radial grid: interface radius must lie strictly inside [r_lo, r_hi]");

    // Two log-uniform sections sharing one target step, interface as the
    // shared node.  ceil-free proportional rounding keeps the junction
    // spacing ratio near 1 for all profiles exercised in the tests.
    const double span_core = std::log(R / r_lo);
    const double span_shell = std::log(r_hi / R);
    const std::size_t intervals = n_nodes - 1;
    std::size_t n_core = static_cast<std::size_t>(
        std::lround(static_cast<double>(intervals) * span_core / (span_core + span_shell)));
    n_core = std::min(std::max<std::size_t>(n_core, 1), intervals - 1);

    RadialGrid grid;
    grid.nodes.resize(n_nodes);
    grid.interface_index = n_core;
    grid.core_radius = R;
    for (std::size_t i = 0; i <= n_core; ++i)
        grid.nodes[i] = r_lo * std::exp(span_core * static_cast<double>(i) / n_core);
    const std::size_t n_shell = intervals - n_core;
    for (std::size_t i = 1; i <= n_shell; ++i)
        grid.nodes[n_core + i] = R * std::exp(span_shell * static_cast<double>(i) / n_shell);
    grid.nodes[n_core] = R;
    grid.nodes[0] = r_lo;
    grid.nodes[n_nodes - 1] = r_hi;
    return grid;
}

RadialSolveReport solve_radial_f(const TwoPhaseProfile& p, const RadialGrid& grid) {
    if (grid.nodes.back() != 1.0)
        throw degenerate_input("radial f solve: grid must end at r = 1 (Dirichlet data f(1)=1)");
    const std::size_t M = grid.nodes.size() - 1;  // intervals; unknowns u_0..u_{M-1}, u_M = 1
    const int N = p.dim;

    std::vector<double> diag(M, 0.0), lower(M, 0.0), upper(M, 0.0), rhs(M, 0.0);
    // P1 assembly of -(a r^{N-1} u')' + (N-1) a r^{N-3} u = 0 with exact
    // per-interval moments; natural flux a u' = a (f + r f') is conserved.
    for (std::size_t i = 0; i < M; ++i) {
        const double ra = grid.nodes[i], rb = grid.nodes[i + 1];
        const double h = rb - ra;
        const double a = grid.interval_in_core(i) ? p.alpha : p.beta;
        const double stiff = a * mom(N - 1, ra, rb) / (h * h);
        double mii = 0.0, mij = 0.0, mjj = 0.0;
        if (N != 1) {
            const int k = N - 3;
            const double m0 = mom(k, ra, rb), m1 = mom(k + 1, ra, rb), m2 = mom(k + 2, ra, rb);
            const double w = (N - 1) * a / (h * h);
            mii = w * (rb * rb * m0 - 2.0 * rb * m1 + m2);
            mjj = w * (m2 - 2.0 * ra * m1 + ra * ra * m0);
            mij = w * (-m2 + (ra + rb) * m1 - ra * rb * m0);
        }
        // row i
        diag[i] += stiff + mii;
        if (i + 1 < M) {
            diag[i + 1] += stiff + mjj;
            upper[i] = -stiff + mij;
            lower[i + 1] = -stiff + mij;
        } else {
            rhs[i] -= (-stiff + mij) * 1.0;  // Dirichlet u_M = 1
        }
    }
    // Robin closure at r_lo: u'(r_lo) = u(r_lo)/r_lo, i.e. f'(r_lo) = 0.
    diag[0] += (grid.interval_in_core(0) ? p.alpha : p.beta) * std::pow(grid.nodes[0], N - 2);

    // Thomas solve (symmetric positive definite, no pivoting needed).
    std::vector<double> cp(M, 0.0), u(M + 1, 0.0);
    cp[0] = upper[0] / diag[0];
    u[0] = rhs[0] / diag[0];
    for (std::size_t i = 1; i < M; ++i) {
        const double den = diag[i] - lower[i] * cp[i - 1];
        cp[i] = upper[i] / den;
        u[i] = (rhs[i] - lower[i] * u[i - 1]) / den;
    }
    for (std::size_t i = M - 1; i-- > 0;) u[i] -= cp[i] * u[i + 1];
    u[M] = 1.0;

    // Residual of the assembled system on the computed solution.
    double res = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
        double r = diag[i] * u[i] - rhs[i];
        if (i > 0) r += lower[i] * u[i - 1];
        if (i + 1 < M) r += upper[i] * u[i + 1];
        res = std::max(res, std::abs(r));
        scale = std::max({scale, std::abs(diag[i] * u[i]), std::abs(rhs[i])});
    }
    if (res > 1e-10 * std::max(1.0, scale))
        throw numerical_failure("radial f solve: linear system residual above tolerance");

    RadialSolveReport rep;
    rep.solve_residual = res / std::max(1.0, scale);
    rep.values.resize(M + 1);
    for (std::size_t i = 0; i <= M; ++i) rep.values[i] = u[i] / grid.nodes[i];
    return rep;
}

double energy_integral_m(const TwoPhaseProfile& p, const RadialGrid& grid,
                         const std::vector<double>& f) {
    if (f.size() != grid.nodes.size())
        throw degenerate_input("energy integral: grid/value size mismatch");
    const int N = p.dim;
    kahan_sum acc;
    for (std::size_t i = 0; i + 1 < grid.nodes.size(); ++i) {
        const double ra = grid.nodes[i], rb = grid.nodes[i + 1];
        const double h = rb - ra;
        const double a = grid.interval_in_core(i) ? p.alpha : p.beta;
        const double ua = f[i] * ra, ub = f[i + 1] * rb;
        const double du = (ub - ua) / h;
        acc.add(a * du * du * mom(N - 1, ra, rb));
        if (N != 1) {
            const int k = N - 3;
            const double m0 = mom(k, ra, rb), m1 = mom(k + 1, ra, rb), m2 = mom(k + 2, ra, rb);
            const double w = (N - 1) * a / (h * h);
            const double mii = w * (rb * rb * m0 - 2.0 * rb * m1 + m2);
            const double mjj = w * (m2 - 2.0 * ra * m1 + ra * ra * m0);
            const double mij = w * (-m2 + (ra + rb) * m1 - ra * rb * m0);
            acc.add(ua * ua * mii + 2.0 * ua * ub * mij + ub * ub * mjj);
        }
    }
    // Constant-f disk below r_lo (exact for the true core solution).
    const double a0 = grid.interval_in_core(0) ? p.alpha : p.beta;
    acc.add(a0 * f[0] * f[0] * std::pow(grid.nodes[0], N));
    return acc.value();
}

double flux_mismatch_at_interface(const TwoPhaseProfile& p, const RadialGrid& grid,
                                  const std::vector<double>& f) {
    const std::size_t j = grid.interface_index;
    if (j < 2 || j + 2 >= grid.nodes.size())
        throw degenerate_input("flux mismatch: interface too close to the grid ends");
    auto u_at = [&](std::size_t i) { return f[i] * grid.nodes[i]; };
    const std::array<double, 3> xs_in{grid.nodes[j], grid.nodes[j - 1], grid.nodes[j - 2]};
    const std::array<double, 3> us_in{u_at(j), u_at(j - 1), u_at(j - 2)};
    const std::array<double, 3> xs_out{grid.nodes[j], grid.nodes[j + 1], grid.nodes[j + 2]};
    const std::array<double, 3> us_out{u_at(j), u_at(j + 1), u_at(j + 2)};
    const double flux_in = p.alpha * lagrange_prime_at_first(xs_in, us_in);
    const double flux_out = p.beta * lagrange_prime_at_first(xs_out, us_out);
    return std::abs(flux_in - flux_out);
}

namespace {

// Inward trapezoidal march of the scaled first-order system
//   z = (G, Phi, P, Psi),  z' = M(r) z + s(r),
// from the last grid node down to the first.  Every interval lies in one
// phase; both endpoint evaluations of a step use that interval's
// conductivity and the phase-consistent f'.
std::vector<std::array<double, 4>> march_inward(const TwoPhaseProfile& p,
                                                const FirstCorrector& fc, const RadialGrid& grid,
                                                const std::array<double, 4>& z_outer) {
    const double N = p.dim;
    const std::size_t n = grid.nodes.size();
    std::vector<std::array<double, 4>> z(n);
    z[n - 1] = z_outer;

    struct Eval {
        double mGG, mGF, mFG, mFF, mPP, mPS, mSG, mSS;  // M entries by block
        double sG, sF, sP, sS;
    };
    auto eval = [&](double r, bool core) {
        const double a = core ? p.alpha : p.beta;
        const double fv = material::eval_f(fc, p, r);
        const double fp = core ? 0.0 : N * fc.ct / std::pow(r, N + 1.0) * -1.0;
        const double rn1 = std::pow(r, N + 1.0);
        Eval e;
        e.mGG = N / r;
        e.mGF = 1.0 / (a * r);
        e.mFG = 2.0 * N * a / r;
        e.mFF = 2.0 / r;
        e.mPP = N / r;
        e.mPS = 1.0 / (a * r);
        e.mSG = -2.0 * a / r;
        e.mSS = 2.0 / r;
        const double sconst = -(a - fc.m) - 2.0 * a * (fv - 1.0);
        e.sG = -rn1 * (fv - 1.0);
        e.sF = -a * fp * rn1 * r + N * a * (fv - 1.0) * rn1;
        e.sP = 0.0;
        e.sS = rn1 * sconst;
        return e;
    };

    for (std::size_t i = n - 1; i-- > 0;) {
        const bool core = grid.interval_in_core(i);
        const double ra = grid.nodes[i], rb = grid.nodes[i + 1];
        const double c = 0.5 * (rb - ra);
        const Eval eb = eval(rb, core);
        const Eval ea = eval(ra, core);
        const std::array<double, 4>& zb = z[i + 1];

        // rhs = (I - c M(rb)) z(rb) - c (s(ra) + s(rb))
        const double rG = zb[0] - c * (eb.mGG * zb[0] + eb.mGF * zb[1]) - c * (ea.sG + eb.sG);
        const double rF = zb[1] - c * (eb.mFG * zb[0] + eb.mFF * zb[1]) - c * (ea.sF + eb.sF);
        const double rP = zb[2] - c * (eb.mPP * zb[2] + eb.mPS * zb[3]) - c * (ea.sP + eb.sP);
        const double rS = zb[3] - c * (eb.mSG * zb[0] + eb.mSS * zb[3]) - c * (ea.sS + eb.sS);

        // (G, Phi) block of (I + c M(ra))
        const double A11 = 1.0 + c * ea.mGG, A12 = c * ea.mGF;
        const double A21 = c * ea.mFG, A22 = 1.0 + c * ea.mFF;
        const double det = A11 * A22 - A12 * A21;
        z[i][0] = (rG * A22 - rF * A12) / det;
        z[i][1] = (rF * A11 - rG * A21) / det;
        // (P, Psi): Psi row depends on the just-computed G
        z[i][3] = (rS - c * ea.mSG * z[i][0]) / (1.0 + c * ea.mSS);
        z[i][2] = (rP - c * ea.mPS * z[i][3]) / (1.0 + c * ea.mPP);
    }
    return z;
}

GHSolveReport unscale(const TwoPhaseProfile& p, const RadialGrid& grid,
                      const std::vector<std::array<double, 4>>& z) {
    const double N = p.dim;
    GHSolveReport rep;
    const std::size_t n = grid.nodes.size();
    rep.g.resize(n);
    rep.h.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = grid.nodes[i];
        rep.g[i] = z[i][0] / std::pow(r, N + 2.0);
        rep.h[i] = z[i][2] / std::pow(r, N);
    }
    const double rb = grid.nodes[n - 1];
    rep.outer_neumann_g = z[n - 1][1] / (p.beta * std::pow(rb, N + 3.0));
    rep.outer_neumann_h = z[n - 1][3] / (p.beta * std::pow(rb, N + 1.0));
    return rep;
}

}  // namespace

GHSolveReport solve_radial_gh(const TwoPhaseProfile& p, const FirstCorrector& fc,
                              const RadialGrid& grid) {
    const auto z = march_inward(p, fc, grid, {0.0, 0.0, 0.0, 0.0});
    return unscale(p, grid, z);
}

namespace {

// Tridiagonal finite-volume solve of -(kappa u')' = -q on the grid with a
// zero-flux closure at the first node and u = 0 at the last.  kappa(r) =
// a(r) r^pw, integrated exactly per interval, so the flux stencil is exact
// for any function solving the homogeneous equation inside one phase.
// A prescribed flux jump of jump_coef * u(jump_index) + jump_aff across
// node `jump_index` is folded into that node's balance.
std::vector<double> fv_flux_solve(const TwoPhaseProfile& p, const RadialGrid& grid, int pw,
                                  const std::function<double(double, bool)>& q,
                                  std::size_t jump_index, double jump_coef, double jump_aff) {
    const std::size_t n = grid.nodes.size();
    const std::size_t m = n - 1;  // unknowns: nodes 0..n-2
    std::vector<double> lo(m, 0.0), di(m, 0.0), up(m, 0.0), rhs(m, 0.0);

    // Flux coupling per interval: F = (u_{i+1} - u_i) / delta_i with
    // delta_i = integral of dr / kappa over the interval.
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double a = grid.interval_in_core(i) ? p.alpha : p.beta;
        const double ra = grid.nodes[i], rb = grid.nodes[i + 1];
        const double delta = mom(-pw, ra, rb) / a;
        const double w = 1.0 / delta;
        di[i] += w;
        if (i + 1 < m) {
            di[i + 1] += w;
            up[i] = -w;
            lo[i + 1] = -w;
        }
    }

    // Source integrals: node i absorbs integral of r^pw q over the half
    // intervals on each side, with q linear between nodes (two-point
    // closed quadrature per half interval keeps the balance second order).
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const bool core = grid.interval_in_core(i);
        const double ra = grid.nodes[i], rb = grid.nodes[i + 1];
        const double rm = 0.5 * (ra + rb);
        const double qa = q(ra, core), qb = q(rb, core), qm = q(rm, core);
        const double wa = 0.5 * (rm - ra), wb = 0.5 * (rb - rm);
        rhs[i] -= wa * (qa * std::pow(ra, pw) + qm * std::pow(rm, pw));
        if (i + 1 < m) rhs[i + 1] -= wb * (qm * std::pow(rm, pw) + qb * std::pow(rb, pw));
    }

    if (jump_index < m) {
        di[jump_index] += jump_coef;
        rhs[jump_index] -= jump_aff;
    }

    // Thomas elimination; the matrix is an SPD M-matrix up to the jump term.
    std::vector<double> u(m);
    for (std::size_t i = 1; i < m; ++i) {
        const double f = lo[i] / di[i - 1];
        di[i] -= f * up[i - 1];
        rhs[i] -= f * rhs[i - 1];
    }
    if (di[m - 1] == 0.0) throw numerical_failure("regular gh solve: singular fv matrix");
    u[m - 1] = rhs[m - 1] / di[m - 1];
    for (std::size_t i = m - 1; i-- > 0;) u[i] = (rhs[i] - up[i] * u[i + 1]) / di[i];
    return u;
}

}  // namespace

GHSolveReport solve_radial_gh_regular(const TwoPhaseProfile& p, const FirstCorrector& fc,
                                      const RadialGrid& grid) {
    const double N = p.dim;
    const std::size_t n = grid.nodes.size();
    const std::size_t j = grid.interface_index;
    const double R = grid.core_radius;

    // Quadratic component in divergence form: (a r^{N+3} g')' = r^{N+3} S_q
    // with S_q = -2 a f'/r.  The defining transmission is continuity of
    // a (g' + 2 g/r + (f-1)/r), so the divergence-form flux a r^{N+3} g'
    // jumps at R by -R^{N+2} (2 g(R) + f(R) - 1)(beta - alpha); the linear
    // part enters the matrix, the affine part the right-hand side.  A global
    // solve admits no r^{-(N+2)} contamination, unlike shooting.
    auto q_g = [&](double r, bool core) {
        if (core) return 0.0;
        return 2.0 * p.beta * N * fc.ct / std::pow(r, N + 2.0);  // -2 a f'/r
    };
    const double da = p.beta - p.alpha;
    const double jump_lin = -std::pow(R, N + 2.0) * 2.0 * da;
    const double jump_aff = -std::pow(R, N + 2.0) * (material::eval_f(fc, p, R) - 1.0) * da;
    std::vector<double> g = fv_flux_solve(p, grid, p.dim + 3, q_g, j, jump_lin, jump_aff);
    g.push_back(0.0);

    // Isotropic component: (a r^{N-1} h')' = r^{N-1} (S_c - 2 a g); its flux
    // a h' is continuous, so no jump correction.  g enters via linear
    // interpolation of the just-computed nodal values.
    auto g_at = [&](double r) {
        const auto it = std::upper_bound(grid.nodes.begin(), grid.nodes.end(), r);
        std::size_t i = static_cast<std::size_t>(it - grid.nodes.begin());
        if (i == 0) return g.front();
        if (i >= n) return g.back();
        const double ra = grid.nodes[i - 1], rb = grid.nodes[i];
        const double t = (r - ra) / (rb - ra);
        return (1.0 - t) * g[i - 1] + t * g[i];
    };
    auto q_h = [&](double r, bool core) {
        const double a = core ? p.alpha : p.beta;
        const double fv = material::eval_f(fc, p, r);
        return -(a - fc.m) - 2.0 * a * (fv - 1.0) - 2.0 * a * g_at(r);
    };
    std::vector<double> h = fv_flux_solve(p, grid, p.dim - 1, q_h, n, 0.0, 0.0);
    h.push_back(0.0);

    GHSolveReport rep;
    rep.g = std::move(g);
    rep.h = std::move(h);
    // Emergent outer fluxes from one-sided three-point derivatives.
    const std::array<double, 3> xs{grid.nodes[n - 1], grid.nodes[n - 2], grid.nodes[n - 3]};
    const std::array<double, 3> gs{rep.g[n - 1], rep.g[n - 2], rep.g[n - 3]};
    const std::array<double, 3> hs{rep.h[n - 1], rep.h[n - 2], rep.h[n - 3]};
    const double r1 = grid.nodes[n - 1];
    rep.outer_neumann_g =
        lagrange_prime_at_first(xs, gs) + 2.0 * rep.g[n - 1] / r1 +
        (material::eval_f(fc, p, r1) - 1.0) / r1;
    rep.outer_neumann_h = lagrange_prime_at_first(xs, hs);
    return rep;
}

namespace {

struct WelfordChunk {
    std::uint64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    void merge(const WelfordChunk& o) {
        if (o.n == 0) return;
        if (n == 0) {
            *this = o;
            return;
        }
        const double d = o.mean - mean;
        const double nn = static_cast<double>(n) + static_cast<double>(o.n);
        mean += d * static_cast<double>(o.n) / nn;
        m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / nn;
        n += o.n;
    }
};

}  // namespace

MCEstimate mc_volume_integral(int dim, const std::function<double(const double*, int)>& integrand,
                              std::uint64_t samples, std::uint64_t seed, int threads) {
    if (dim < 1 || dim > 16) throw degenerate_input("mc integral: dim out of range");
    if (samples == 0) return {0.0, 0.0, 0};
    const std::size_t n_chunks =
        static_cast<std::size_t>(std::min<std::uint64_t>(samples, 1024));
    std::vector<WelfordChunk> chunks(n_chunks);

    parallel_chunks(n_chunks, threads, [&](std::size_t c) {
        const std::uint64_t base = samples / n_chunks, extra = samples % n_chunks;
        const std::uint64_t count = base + (c < extra ? 1 : 0);
        rng256 rng(split_seed(seed, static_cast<std::uint64_t>(c)));
        double x[16];
        WelfordChunk& w = chunks[c];
        for (std::uint64_t s = 0; s < count; ++s) {
            double norm2 = 0.0;
            for (int k = 0; k < dim; ++k) {
                x[k] = rng.next_normal();
                norm2 += x[k] * x[k];
            }
            const double u = rng.next_double();
            if (norm2 == 0.0) {
                w.add(0.0);  // zero-probability guard keeps the stream aligned
                continue;
            }
            const double scale = std::pow(u, 1.0 / dim) / std::sqrt(norm2);
            for (int k = 0; k < dim; ++k) x[k] *= scale;
            w.add(integrand(x, dim));
        }
    });

    WelfordChunk total;
    for (const auto& w : chunks) total.merge(w);  // fixed order: thread-count independent
    const double vol = unit_ball_volume(dim);
    const double n = static_cast<double>(total.n);
    const double var = (total.n > 1) ? total.m2 / (n - 1.0) : 0.0;
    return {vol * total.mean, vol * std::sqrt(var / n), total.n};
}

namespace {

using cplx = std::complex<double>;

// LU factorization of a complex tridiagonal matrix without pivoting
// (callers guarantee strict diagonal dominance).
struct TriFactor {
    std::vector<cplx> lo, di, up;  // after factor(): di holds pivots, up the scaled uppers

    void factor() {
        const std::size_t m = di.size();
        for (std::size_t i = 0; i + 1 < m; ++i) {
            up[i] /= di[i];
            di[i + 1] -= lo[i + 1] * up[i];
        }
    }
    void solve(std::vector<cplx>& b) const {
        const std::size_t m = di.size();
        b[0] /= di[0];
        for (std::size_t i = 1; i < m; ++i) b[i] = (b[i] - lo[i] * b[i - 1]) / di[i];
        for (std::size_t i = m - 1; i-- > 0;) b[i] -= up[i] * b[i + 1];
    }
};

}  // namespace

Bloch1DResult bloch_1d(const std::function<double(double)>& cell_conductivity,
                       std::vector<double> eta_grid, std::size_t mesh_cells) {
    if (mesh_cells < 1024 || mesh_cells % 2 != 0)
        throw degenerate_input("bloch oracle: mesh must be even and at least 1024 cells");
    if (eta_grid.empty()) throw degenerate_input("bloch oracle: empty eta grid");
    for (double e : eta_grid)
        if (std::abs(e) > 0.2 + 1e-12)
            throw degenerate_input("bloch oracle: |eta| must not exceed 0.2");
    std::sort(eta_grid.begin(), eta_grid.end());
    {
        std::vector<double> sq;
        for (double e : eta_grid)
            if (e != 0.0) sq.push_back(e * e);
        std::sort(sq.begin(), sq.end());
        sq.erase(std::unique(sq.begin(), sq.end()), sq.end());
        if (sq.size() < 3)
            throw degenerate_input("bloch oracle: need at least three distinct |eta| > 0");
    }

    const std::size_t M = mesh_cells;
    const double h = 1.0 / static_cast<double>(M);
    std::vector<double> a(M);
    for (std::size_t j = 0; j < M; ++j) {
        a[j] = cell_conductivity((static_cast<double>(j) + 0.5) * h);
        if (!(a[j] > 0.0) || !std::isfinite(a[j]))
            throw degenerate_input("bloch oracle: cell conductivity must be positive");
    }

    Bloch1DResult out;
    out.eta = eta_grid;
    out.lambda.resize(eta_grid.size());

    const double shift = 0.1;
    for (std::size_t ei = 0; ei < eta_grid.size(); ++ei) {
        const double eta = eta_grid[ei];
        const cplx pc(1.0 / h, eta / 2.0);  // forward-difference symbol
        // Cell j contributes a_j |p u_{j+1} - conj(p) u_j|^2, so the
        // coefficient of conj(u_j) u_{j+1} is -a_j p^2: `off` is the
        // super-diagonal entry and the sub-diagonal is its conjugate.
        const cplx off = -pc * pc;
        const double dcoef = 1.0 / (h * h) + eta * eta / 4.0;

        // Cyclic Hermitian tridiagonal T; corners handled by a rank-2
        // Woodbury update of the open-chain factorization K = T0 + shift.
        TriFactor K;
        K.lo.assign(M, cplx(0.0));
        K.di.assign(M, cplx(0.0));
        K.up.assign(M, cplx(0.0));
        for (std::size_t j = 0; j < M; ++j) {
            const double aprev = a[(j + M - 1) % M];
            K.di[j] = cplx((aprev + a[j]) * dcoef + shift, 0.0);
        }
        for (std::size_t j = 0; j + 1 < M; ++j) {
            K.up[j] = a[j] * off;
            K.lo[j + 1] = std::conj(a[j] * off);
        }
        const cplx gamma = std::conj(a[M - 1] * off);  // T(0, M-1); T(M-1, 0) conjugate
        K.factor();

        std::vector<cplx> z1(M, cplx(0.0)), z2(M, cplx(0.0));
        z1[0] = 1.0;
        z2[M - 1] = 1.0;
        K.solve(z1);
        K.solve(z2);
        // capacitance C = S^{-1} + V^* K^{-1} U, S = diag(gamma, conj(gamma))
        const cplx c11 = 1.0 / gamma + z1[M - 1];
        const cplx c12 = z2[M - 1];
        const cplx c21 = z1[0];
        const cplx c22 = 1.0 / std::conj(gamma) + z2[0];
        const cplx cdet = c11 * c22 - c12 * c21;
        if (cdet == cplx(0.0)) throw numerical_failure("bloch oracle: singular corner update");

        auto cyclic_solve = [&](std::vector<cplx>& b) {
            K.solve(b);
            const cplx t1 = b[M - 1], t2 = b[0];
            const cplx s1 = (t1 * c22 - t2 * c12) / cdet;
            const cplx s2 = (t2 * c11 - t1 * c21) / cdet;
            for (std::size_t j = 0; j < M; ++j) b[j] -= z1[j] * s1 + z2[j] * s2;
        };

        std::vector<cplx> v(M, cplx(1.0)), w(M);
        for (int it = 0; it < 40; ++it) {
            w = v;
            cyclic_solve(w);
            double nrm = 0.0;
            for (const cplx& c : w) nrm += std::norm(c);
            nrm = std::sqrt(nrm);
            if (!(nrm > 0.0)) throw numerical_failure("bloch oracle: inverse iteration collapsed");
            for (cplx& c : w) c /= nrm;
            v = w;
        }
        // Rayleigh quotient evaluated as the (nonnegative-term) quadratic
        // form, which avoids the cancellation of the assembled matvec.
        kahan_sum num;
        for (std::size_t j = 0; j < M; ++j) {
            const cplx vj = v[j], vj1 = v[(j + 1) % M];
            const cplx L = (vj1 - vj) / h + cplx(0.0, eta) * 0.5 * (vj + vj1);
            num.add(a[j] * std::norm(L));
        }
        kahan_sum den;
        for (const cplx& c : v) den.add(std::norm(c));
        out.lambda[ei] = num.value() / den.value();
    }

    // Even-polynomial least squares; the eta^6 guard keeps Taylor truncation
    // out of the quadratic coefficient.
    Eigen::MatrixXd D(static_cast<Eigen::Index>(out.eta.size()), 3);
    Eigen::VectorXd L(static_cast<Eigen::Index>(out.eta.size()));
    for (std::size_t i = 0; i < out.eta.size(); ++i) {
        const double e2 = out.eta[i] * out.eta[i];
        D(static_cast<Eigen::Index>(i), 0) = e2;
        D(static_cast<Eigen::Index>(i), 1) = e2 * e2;
        D(static_cast<Eigen::Index>(i), 2) = e2 * e2 * e2;
        L(static_cast<Eigen::Index>(i)) = out.lambda[i];
    }
    const Eigen::Vector3d coef = D.colPivHouseholderQr().solve(L);
    out.q = coef(0);
    out.burnett = coef(1);
    double res = 0.0;
    for (Eigen::Index i = 0; i < L.size(); ++i)
        res = std::max(res, std::abs(L(i) - D.row(i).dot(coef)));
    out.fit_residual = res;
    return out;
}

}  // namespace hsdisp::oracle
