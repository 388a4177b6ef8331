#pragma once

#include <Eigen/Dense>
#include <array>
#include <utility>

#include "hsdisp/material.hpp"

namespace hsdisp::corrector {

using material::FirstCorrector;
using material::TwoPhaseProfile;

// Radial coefficients of the second corrector ansatz
//   w_kl(y) = y_k y_l g(|y|) + delta_kl h(|y|),
//   g = b + c/r^N + d/r^{N+2},   h = p/r^N + q r^2 + t,
// with one coefficient set per region (core r < R, shell R < r < 1).
// The core keeps c1 = 0; the shell keeps c2 = -ct.  Both are forced by the
// quadratic-coefficient balance of the radial system, not free unknowns.
struct SecondCorrector {
    double b1, c1, d1, p1, q1, t1;
    double b2, c2, d2, p2, q2, t2;
};

// The linear system behind the ansatz: twelve conditions in the ten free
// coefficients x = (b1, d1, p1, q1, t1, b2, d2, p2, q2, t2).
// Row order (names in row_names()):
//   0 core quadratic singular balance      d1 + N p1 = 0
//   1 core constant balance                2a b1 + 2Na q1 = source
//   2 shell quadratic singular balance     d2 + N p2 = 0
//   3 shell constant balance               2a b2 + 2Na q2 = source
//   4 g continuity at R
//   5 h continuity at R
//   6 g Dirichlet at 1
//   7 h Dirichlet at 1
//   8 g conserved-flux continuity at R     flux = a (g' + 2g/r + (f-1)/r)
//   9 h conserved-flux continuity at R     flux = a h'
//  10 g outer Neumann at 1                 g' + 2g = 0
//  11 h outer Neumann at 1                 h' = 0
// The system is consistent of rank 10; rows 3, 9 are implied by the rest.
struct CorrectorSystem {
    Eigen::Matrix<double, 12, 10> A;
    Eigen::Matrix<double, 12, 1> rhs;
};

const std::array<const char*, 12>& row_names();

CorrectorSystem assemble_system(const TwoPhaseProfile& p, const FirstCorrector& fc);

// Source terms of the radial coefficient ODEs at radius r: the pair
// (quadratic, constant) multiplying y_k y_l and delta_kl on the right-hand
// side after the first-corrector terms are moved across.  Piecewise smooth;
// r = R evaluates the shell branch.
std::pair<double, double> rhs_reduction(const TwoPhaseProfile& p, const FirstCorrector& fc,
                                        double r);

// Closed-form solution of the system above.
SecondCorrector solve_closed_form(const TwoPhaseProfile& p, const FirstCorrector& fc);

// Independent route: minimum-norm least-squares solve of all twelve rows.
// Agrees with the closed form to 1e-10 on admissible profiles.
SecondCorrector solve_least_squares(const TwoPhaseProfile& p, const FirstCorrector& fc);

struct ConsistencyReport {
    double shell_const_residual;  // row 3 evaluated on the closed form
    double h_flux_residual;       // row 9 evaluated on the closed form
    double h_flux_lhs;            // a h'(R) from the core side
    double h_flux_identity;       // R beta (N/(N+2)) (R^{-(N+2)} - 1) ct; both sides equal it
    double max_row_residual;      // all twelve rows
    int rank;                     // of the 12x10 matrix (threshold 1e-9 sigma_max)
    int rank_augmented;           // of [A | rhs]
};
ConsistencyReport verify_consistency(const SecondCorrector& sc, const TwoPhaseProfile& p,
                                     const FirstCorrector& fc);

// Region-resolved evaluation; r in (0, 1], the shell branch covers r >= R.
// r > 1 returns zero (the corrector vanishes outside the ball); r <= 0 is an
// error because the core coefficients are singular at the origin.
std::pair<double, double> eval_g_h(const SecondCorrector& sc, const TwoPhaseProfile& p, double r);
double eval_g(const SecondCorrector& sc, const TwoPhaseProfile& p, double r);
double eval_h(const SecondCorrector& sc, const TwoPhaseProfile& p, double r);
double eval_g_prime(const SecondCorrector& sc, const TwoPhaseProfile& p, double r);
double eval_h_prime(const SecondCorrector& sc, const TwoPhaseProfile& p, double r);

// Residuals of the outer Neumann rows in reduced form:
//   |(N+2) d2 - N ct|  and  |-N p2 + 2 q2|.
std::pair<double, double> neumann_residual(const SecondCorrector& sc, const FirstCorrector& fc,
                                           int dim);

// Bounded-at-origin variant: same radial ODEs and transmission conditions,
// Dirichlet data at 1, singular core modes dropped, and the radial harmonic
// (log r in 2-D, r^{2-N} otherwise) carried in the shell part of h.  This is
// the H^1 solution of the cell problem; it does not satisfy the outer
// Neumann rows.  The dispersion density integrates its energy.
struct RegularSecondCorrector {
    double b1, q1, t1;                  // core: g = b1, h = q1 r^2 + t1
    double b2, c2, d2, p2, q2, t2, s2;  // shell; s2 multiplies the radial harmonic
};

RegularSecondCorrector regular_second_corrector(const TwoPhaseProfile& p,
                                                const FirstCorrector& fc);

double eval_g(const RegularSecondCorrector& rc, const TwoPhaseProfile& p, double r);
double eval_h(const RegularSecondCorrector& rc, const TwoPhaseProfile& p, double r);
double eval_g_prime(const RegularSecondCorrector& rc, const TwoPhaseProfile& p, double r);
double eval_h_prime(const RegularSecondCorrector& rc, const TwoPhaseProfile& p, double r);

}  // namespace hsdisp::corrector
