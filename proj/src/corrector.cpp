#include "hsdisp/corrector.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace hsdisp::corrector {

namespace {

// Unknown column order throughout this file.
enum Col { kB1 = 0, kD1, kP1, kQ1, kT1, kB2, kD2, kP2, kQ2, kT2 };

struct Geometry {
    double N, R, RN, RN1, RN2, RN3;  // R^N, R^{N+1}, R^{N+2}, R^{N+3}
    double alpha, beta, m, b1t, b2t, ct;
};

Geometry geometry(const TwoPhaseProfile& p, const FirstCorrector& fc) {
    Geometry g;
    g.N = p.dim;
    g.R = p.core_radius();
    g.RN = p.theta;
    g.RN1 = g.RN * g.R;
    g.RN2 = g.RN1 * g.R;
    g.RN3 = g.RN2 * g.R;
    g.alpha = p.alpha;
    g.beta = p.beta;
    g.m = fc.m;
    g.b1t = fc.b1t;
    g.b2t = fc.b2t;
    g.ct = fc.ct;
    return g;
}

int svd_rank(const Eigen::MatrixXd& M) {
    // Equilibrate rows and columns to unit norm before thresholding: thin
    // shells make the monomial columns span many orders of magnitude, which
    // would otherwise mask genuinely independent directions.
    Eigen::MatrixXd E = M;
    for (int i = 0; i < E.rows(); ++i) {
        const double n = E.row(i).norm();
        if (n > 0.0) E.row(i) /= n;
    }
    for (int j = 0; j < E.cols(); ++j) {
        const double n = E.col(j).norm();
        if (n > 0.0) E.col(j) /= n;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(E);
    const auto& s = svd.singularValues();
    const double tol = 1e-9 * s(0);
    int rank = 0;
    for (int i = 0; i < s.size(); ++i)
        if (s(i) > tol) ++rank;
    return rank;
}

}  // namespace

const std::array<const char*, 12>& row_names() {
    static const std::array<const char*, 12> names = {
        "core quadratic singular balance", "core constant balance",
        "shell quadratic singular balance", "shell constant balance",
        "g continuity at R", "h continuity at R",
        "g Dirichlet at 1", "h Dirichlet at 1",
        "g flux continuity at R", "h flux continuity at R",
        "g outer Neumann at 1", "h outer Neumann at 1"};
    return names;
}

std::pair<double, double> rhs_reduction(const TwoPhaseProfile& p, const FirstCorrector& fc,
                                        double r) {
    if (!(r > 0.0) || r >= 1.0) throw degenerate_input("rhs_reduction: r must be in (0,1)");
    const double N = p.dim;
    if (r < p.core_radius()) {
        // f is constant in the core: no quadratic source.
        return {0.0, -(p.alpha - fc.m) - 2.0 * p.alpha * (fc.b1t - 1.0)};
    }
    const double rN = std::pow(r, N);
    const double fm1 = fc.b2t - 1.0 + fc.ct / rN;
    const double fp = -N * fc.ct / (rN * r);
    // Per region a is constant, so the quadratic source is -2 a f'/r.
    return {-2.0 * p.beta * fp / r, -(p.beta - fc.m) - 2.0 * p.beta * fm1};
}

CorrectorSystem assemble_system(const TwoPhaseProfile& p, const FirstCorrector& fc) {
    const Geometry g = geometry(p, fc);
    const double N = g.N;
    CorrectorSystem sys;
    sys.A.setZero();
    sys.rhs.setZero();
    auto& A = sys.A;
    auto& b = sys.rhs;

    // Rows 0..3: per-region balances of the radial ODE coefficients.
    A(0, kD1) = 1.0;
    A(0, kP1) = N;
    A(1, kB1) = 2.0 * g.alpha;
    A(1, kQ1) = 2.0 * N * g.alpha;
    b(1) = -(g.alpha - g.m) - 2.0 * g.alpha * (g.b1t - 1.0);
    A(2, kD2) = 1.0;
    A(2, kP2) = N;
    A(3, kB2) = 2.0 * g.beta;
    A(3, kQ2) = 2.0 * N * g.beta;
    b(3) = -(g.beta - g.m) - 2.0 * g.beta * (g.b2t - 1.0);

    // Row 4: g continuity at R (the known shell term -ct/R^N goes right).
    A(4, kB1) = 1.0;
    A(4, kD1) = 1.0 / g.RN2;
    A(4, kB2) = -1.0;
    A(4, kD2) = -1.0 / g.RN2;
    b(4) = -g.ct / g.RN;

    // Row 5: h continuity at R.
    A(5, kP1) = 1.0 / g.RN;
    A(5, kQ1) = g.R * g.R;
    A(5, kT1) = 1.0;
    A(5, kP2) = -1.0 / g.RN;
    A(5, kQ2) = -g.R * g.R;
    A(5, kT2) = -1.0;

    // Rows 6, 7: Dirichlet data at the outer boundary.
    A(6, kB2) = 1.0;
    A(6, kD2) = 1.0;
    b(6) = g.ct;
    A(7, kP2) = 1.0;
    A(7, kQ2) = 1.0;
    A(7, kT2) = 1.0;

    // Row 8: continuity of a (g' + 2g/r + (f-1)/r) at R.
    A(8, kB1) = 2.0 * g.alpha / g.R;
    A(8, kD1) = -N * g.alpha / g.RN3;
    A(8, kB2) = -2.0 * g.beta / g.R;
    A(8, kD2) = N * g.beta / g.RN3;
    b(8) = -g.alpha * (g.b1t - 1.0) / g.R + g.beta * (g.b2t + g.ct / g.RN - 1.0) / g.R -
           g.beta * (2.0 - N) * g.ct / g.RN1;

    // Row 9: continuity of a h' at R.
    A(9, kP1) = -N * g.alpha / g.RN1;
    A(9, kQ1) = 2.0 * g.alpha * g.R;
    A(9, kP2) = N * g.beta / g.RN1;
    A(9, kQ2) = -2.0 * g.beta * g.R;

    // Row 10: (g' + 2g)(1) = 0 with the known -ct/r^N part on the right.
    A(10, kB2) = 2.0;
    A(10, kD2) = -N;
    b(10) = (2.0 - N) * g.ct;

    // Row 11: h'(1) = 0.
    A(11, kP2) = -N;
    A(11, kQ2) = 2.0;

    return sys;
}

SecondCorrector solve_closed_form(const TwoPhaseProfile& p, const FirstCorrector& fc) {
    const Geometry g = geometry(p, fc);
    const double N = g.N;
    SecondCorrector sc{};

    sc.c1 = 0.0;
    sc.c2 = -g.ct;

    // Shell block from the outer Dirichlet/Neumann pair plus the two
    // quadratic/constant balances.
    sc.d2 = N * g.ct / (N + 2.0);
    sc.p2 = -g.ct / (N + 2.0);
    sc.q2 = -N * g.ct / (2.0 * (N + 2.0));
    sc.b2 = 2.0 * g.ct / (N + 2.0);
    sc.t2 = 0.5 * g.ct;

    // Core block from continuity and flux continuity at R.
    const double G = sc.b2 + sc.c2 / g.RN + sc.d2 / g.RN2;  // g-shell value at R
    const double g2p_R = -N * sc.c2 / g.RN1 - (N + 2.0) * sc.d2 / g.RN3;
    const double RPhi = g.R * g2p_R + 2.0 * G + (g.b2t + g.ct / g.RN - 1.0);
    sc.b1 = (g.beta * RPhi + g.alpha * N * G - g.alpha * (g.b1t - 1.0)) / (g.alpha * (N + 2.0));
    sc.d1 = g.RN2 * (G - sc.b1);
    sc.p1 = -sc.d1 / N;
    sc.q1 = (-(g.alpha - g.m) - 2.0 * g.alpha * (g.b1t - 1.0) - 2.0 * g.alpha * sc.b1) /
            (2.0 * N * g.alpha);
    sc.t1 = sc.p2 / g.RN + sc.q2 * g.R * g.R + sc.t2 - sc.p1 / g.RN - sc.q1 * g.R * g.R;

    return sc;
}

SecondCorrector solve_least_squares(const TwoPhaseProfile& p, const FirstCorrector& fc) {
    const CorrectorSystem sys = assemble_system(p, fc);
    // Column equilibration: the monomial columns span several orders of
    // magnitude for thin shells, which otherwise dominates the SVD error.
    Eigen::Matrix<double, 10, 1> colscale;
    Eigen::Matrix<double, 12, 10> A = sys.A;
    for (int j = 0; j < 10; ++j) {
        const double n = A.col(j).norm();
        colscale(j) = (n > 0.0) ? 1.0 / n : 1.0;
        A.col(j) *= colscale(j);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-9);
    Eigen::VectorXd x = svd.solve(sys.rhs);
    x.array() *= colscale.array();
    SecondCorrector sc{};
    sc.b1 = x(kB1);
    sc.c1 = 0.0;
    sc.d1 = x(kD1);
    sc.p1 = x(kP1);
    sc.q1 = x(kQ1);
    sc.t1 = x(kT1);
    sc.b2 = x(kB2);
    sc.c2 = -fc.ct;
    sc.d2 = x(kD2);
    sc.p2 = x(kP2);
    sc.q2 = x(kQ2);
    sc.t2 = x(kT2);
    return sc;
}

ConsistencyReport verify_consistency(const SecondCorrector& sc, const TwoPhaseProfile& p,
                                     const FirstCorrector& fc) {
    const Geometry g = geometry(p, fc);
    const double N = g.N;
    const CorrectorSystem sys = assemble_system(p, fc);

    Eigen::Matrix<double, 10, 1> x;
    x << sc.b1, sc.d1, sc.p1, sc.q1, sc.t1, sc.b2, sc.d2, sc.p2, sc.q2, sc.t2;
    const Eigen::Matrix<double, 12, 1> res = sys.A * x - sys.rhs;

    ConsistencyReport rep{};
    rep.shell_const_residual = std::abs(res(3));
    rep.h_flux_residual = std::abs(res(9));
    rep.h_flux_lhs = g.alpha * (-N * sc.p1 / g.RN1 + 2.0 * sc.q1 * g.R);
    rep.h_flux_identity = g.R * g.beta * (N / (N + 2.0)) * (1.0 / g.RN2 - 1.0) * g.ct;
    rep.max_row_residual = res.cwiseAbs().maxCoeff();

    rep.rank = svd_rank(sys.A);
    Eigen::MatrixXd aug(12, 11);
    aug << sys.A, sys.rhs;
    rep.rank_augmented = svd_rank(aug);
    return rep;
}

namespace {

struct GH {
    double g, gp, h, hp;
};

GH eval_block(double b, double c, double d, double pp, double q, double t, double N, double r) {
    const double rN = std::pow(r, N);
    const double rN2 = rN * r * r;
    GH v;
    v.g = b + c / rN + d / rN2;
    v.gp = -N * c / (rN * r) - (N + 2.0) * d / (rN2 * r);
    v.h = pp / rN + q * r * r + t;
    v.hp = -N * pp / (rN * r) + 2.0 * q * r;
    return v;
}

GH eval_any(const SecondCorrector& sc, const TwoPhaseProfile& p, double r) {
    if (!(r > 0.0)) throw degenerate_input("corrector eval: r must be positive");
    if (r > 1.0) return GH{0.0, 0.0, 0.0, 0.0};
    if (r < p.core_radius())
        return eval_block(sc.b1, sc.c1, sc.d1, sc.p1, sc.q1, sc.t1, p.dim, r);
    return eval_block(sc.b2, sc.c2, sc.d2, sc.p2, sc.q2, sc.t2, p.dim, r);
}

}  // namespace

std::pair<double, double> eval_g_h(const SecondCorrector& sc, const TwoPhaseProfile& p,
                                   double r) {
    const GH v = eval_any(sc, p, r);
    return {v.g, v.h};
}
double eval_g(const SecondCorrector& sc, const TwoPhaseProfile& p, double r) {
    return eval_any(sc, p, r).g;
}
double eval_h(const SecondCorrector& sc, const TwoPhaseProfile& p, double r) {
    return eval_any(sc, p, r).h;
}
double eval_g_prime(const SecondCorrector& sc, const TwoPhaseProfile& p, double r) {
    return eval_any(sc, p, r).gp;
}
double eval_h_prime(const SecondCorrector& sc, const TwoPhaseProfile& p, double r) {
    return eval_any(sc, p, r).hp;
}

std::pair<double, double> neumann_residual(const SecondCorrector& sc, const FirstCorrector& fc,
                                           int dim) {
    const double N = dim;
    return {std::abs((N + 2.0) * sc.d2 - N * fc.ct), std::abs(-N * sc.p2 + 2.0 * sc.q2)};
}

RegularSecondCorrector regular_second_corrector(const TwoPhaseProfile& p,
                                                const FirstCorrector& fc) {
    const Geometry g = geometry(p, fc);
    const double N = g.N;
    RegularSecondCorrector rc{};
    rc.c2 = -g.ct;

    // g part: unknowns (b1, b2, d2); continuity + flux continuity at R and
    // Dirichlet at 1.  Eliminating b2 = ct - d2 leaves one equation in d2.
    const double lhs_d2 = 2.0 * g.alpha * (1.0 / g.RN2 - 1.0) + g.beta * (2.0 + N / g.RN2);
    const double rhs_d2 = 2.0 * g.beta * g.ct + g.beta * (N - 1.0) * g.ct / g.RN +
                          g.beta * (g.b2t - 1.0) - 2.0 * g.alpha * g.ct * (1.0 - 1.0 / g.RN) -
                          g.alpha * (g.b1t - 1.0);
    rc.d2 = rhs_d2 / lhs_d2;
    rc.b2 = g.ct - rc.d2;
    rc.b1 = rc.b2 - g.ct / g.RN + rc.d2 / g.RN2;

    // Constant balances slave the r^2 coefficients to b1, b2.
    rc.q1 = (-(g.alpha - g.m) - 2.0 * g.alpha * (g.b1t - 1.0) - 2.0 * g.alpha * rc.b1) /
            (2.0 * N * g.alpha);
    rc.q2 = (-(g.beta - g.m) - 2.0 * g.beta * (g.b2t - 1.0) - 2.0 * g.beta * rc.b2) /
            (2.0 * N * g.beta);
    rc.p2 = -rc.d2 / N;

    // h part: radial-harmonic coefficient from flux continuity, then the
    // constants from Dirichlet at 1 and continuity at R.
    const double H_R = (p.dim == 2) ? std::log(g.R) : std::pow(g.R, 2.0 - N);
    const double Hp_R = (p.dim == 2) ? 1.0 / g.R : (2.0 - N) * std::pow(g.R, 1.0 - N);
    const double H_1 = (p.dim == 2) ? 0.0 : 1.0;
    const double h2p_R_no_s = -N * rc.p2 / g.RN1 + 2.0 * rc.q2 * g.R;
    rc.s2 = (g.alpha * 2.0 * rc.q1 * g.R - g.beta * h2p_R_no_s) / (g.beta * Hp_R);
    rc.t2 = -rc.p2 - rc.q2 - rc.s2 * H_1;
    rc.t1 = rc.p2 / g.RN + rc.q2 * g.R * g.R + rc.t2 + rc.s2 * H_R - rc.q1 * g.R * g.R;
    return rc;
}

namespace {

GH eval_regular(const RegularSecondCorrector& rc, const TwoPhaseProfile& p, double r) {
    if (!(r > 0.0)) throw degenerate_input("corrector eval: r must be positive");
    if (r > 1.0) return GH{0.0, 0.0, 0.0, 0.0};
    const double N = p.dim;
    if (r < p.core_radius()) {
        GH v;
        v.g = rc.b1;
        v.gp = 0.0;
        v.h = rc.q1 * r * r + rc.t1;
        v.hp = 2.0 * rc.q1 * r;
        return v;
    }
    GH v = eval_block(rc.b2, rc.c2, rc.d2, rc.p2, rc.q2, rc.t2, N, r);
    const double H = (p.dim == 2) ? std::log(r) : std::pow(r, 2.0 - N);
    const double Hp = (p.dim == 2) ? 1.0 / r : (2.0 - N) * std::pow(r, 1.0 - N);
    v.h += rc.s2 * H;
    v.hp += rc.s2 * Hp;
    return v;
}

}  // namespace

double eval_g(const RegularSecondCorrector& rc, const TwoPhaseProfile& p, double r) {
    return eval_regular(rc, p, r).g;
}
double eval_h(const RegularSecondCorrector& rc, const TwoPhaseProfile& p, double r) {
    return eval_regular(rc, p, r).h;
}
double eval_g_prime(const RegularSecondCorrector& rc, const TwoPhaseProfile& p, double r) {
    return eval_regular(rc, p, r).gp;
}
double eval_h_prime(const RegularSecondCorrector& rc, const TwoPhaseProfile& p, double r) {
    return eval_regular(rc, p, r).hp;
}

}  // namespace hsdisp::corrector
