#pragma once

#include "hsdisp/common.hpp"

namespace hsdisp::material {

// Two-phase coated-ball profile on the unit ball: conductivity `alpha` in the
// core r < R and `beta` in the shell R < r < 1, with core volume fraction
// theta = R^N.  Requires 0 < alpha <= beta; theta is kept away from {0,1}
// because every closed form below divides by theta or 1-theta.
struct TwoPhaseProfile {
    double alpha;
    double beta;
    double theta;
    int dim;

    double core_radius() const;  // R = theta^(1/N)
    double conductivity(double r) const { return r < core_radius() ? alpha : beta; }
};

TwoPhaseProfile make_profile(double alpha, double beta, double theta, int dim);

// Conductivity the coated-ball assemblage is equivalent to: the unique m with
//   (m - beta) / (m + (N-1) beta)  =  theta (alpha - beta) / (alpha + (N-1) beta).
// Linear in m; solved exactly.
double equivalent_conductivity(const TwoPhaseProfile& p);

// Radial factor of the cell corrector along a coordinate direction:
//   w(y) = y_l f(|y|),  f = b1t (r<R),  b2t + ct/r^N (R<r<1),  1 (r>=1).
struct FirstCorrector {
    double b1t;  // core value
    double b2t;  // shell constant part
    double ct;   // shell 1/r^N coefficient
    double m;    // equivalent conductivity of the profile
};

FirstCorrector first_corrector(const TwoPhaseProfile& p);

double eval_f(const FirstCorrector& fc, const TwoPhaseProfile& p, double r);
// df/dr; zero in the core and outside the ball.
double eval_f_prime(const FirstCorrector& fc, const TwoPhaseProfile& p, double r);

// Residuals of the conserved flux a (f + r f') across r = R and r = 1.
struct FluxResiduals {
    double at_interface;  // |alpha b1t - beta (b2t + (1-N) ct / R^N)|
    double at_boundary;   // |beta (b2t + (1-N) ct) - m|
};
FluxResiduals flux_jump_residuals(const FirstCorrector& fc, const TwoPhaseProfile& p);

// Classical comparison values: harmonic and arithmetic mixture bounds
// bracketing the assemblage value.
struct ConductivityBounds {
    double harmonic;
    double assemblage;
    double arithmetic;
};
ConductivityBounds conductivity_bounds(const TwoPhaseProfile& p);

}  // namespace hsdisp::material
