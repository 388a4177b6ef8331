#include "hsdisp/material.hpp"

#include <algorithm>
#include <cmath>

namespace hsdisp::material {

namespace {
constexpr double kThetaFloor = 1e-9;
}

double TwoPhaseProfile::core_radius() const {
    return std::pow(theta, 1.0 / dim);
}

TwoPhaseProfile make_profile(double alpha, double beta, double theta, int dim) {
    if (dim < 1) throw degenerate_input("profile: dim must be >= 1");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw degenerate_input("profile: alpha must be positive");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw degenerate_input("profile: beta must be positive");
    if (alpha > beta) throw degenerate_input("profile: requires alpha <= beta");
    if (!(theta >= kThetaFloor && theta <= 1.0 - kThetaFloor))
        throw degenerate_input("profile: theta outside [1e-9, 1-1e-9]");
    return TwoPhaseProfile{alpha, beta, theta, dim};
}

double equivalent_conductivity(const TwoPhaseProfile& p) {
    const double N = p.dim;
    // t := theta (alpha-beta)/(alpha+(N-1)beta) in (-1, 1); m = beta (1+(N-1)t)/(1-t)
    const double t = p.theta * (p.alpha - p.beta) / (p.alpha + (N - 1.0) * p.beta);
    return p.beta * (1.0 + (N - 1.0) * t) / (1.0 - t);
}

FirstCorrector first_corrector(const TwoPhaseProfile& p) {
    const double N = p.dim;
    const double b1t = N * p.beta / ((1.0 - p.theta) * p.alpha + (N + p.theta - 1.0) * p.beta);
    const double b2t = (1.0 - b1t * p.theta) / (1.0 - p.theta);
    const double ct = (b1t - 1.0) * p.theta / (1.0 - p.theta);
    return FirstCorrector{b1t, b2t, ct, equivalent_conductivity(p)};
}

double eval_f(const FirstCorrector& fc, const TwoPhaseProfile& p, double r) {
    if (r < 0.0) throw degenerate_input("eval_f: negative radius");
    if (r >= 1.0) return 1.0;
    if (r < p.core_radius()) return fc.b1t;
    return fc.b2t + fc.ct / std::pow(r, p.dim);
}

double eval_f_prime(const FirstCorrector& fc, const TwoPhaseProfile& p, double r) {
    if (r < 0.0) throw degenerate_input("eval_f_prime: negative radius");
    if (r >= 1.0 || r < p.core_radius()) return 0.0;
    return -p.dim * fc.ct / std::pow(r, p.dim + 1);
}

FluxResiduals flux_jump_residuals(const FirstCorrector& fc, const TwoPhaseProfile& p) {
    const double N = p.dim;
    const double rN = p.theta;  // R^N
    const double shell_flux_at_R = p.beta * (fc.b2t + (1.0 - N) * fc.ct / rN);
    const double shell_flux_at_1 = p.beta * (fc.b2t + (1.0 - N) * fc.ct);
    return FluxResiduals{std::abs(p.alpha * fc.b1t - shell_flux_at_R),
                         std::abs(shell_flux_at_1 - fc.m)};
}

ConductivityBounds conductivity_bounds(const TwoPhaseProfile& p) {
    const double h = 1.0 / (p.theta / p.alpha + (1.0 - p.theta) / p.beta);
    const double a = p.theta * p.alpha + (1.0 - p.theta) * p.beta;
    return ConductivityBounds{h, equivalent_conductivity(p), a};
}

}  // namespace hsdisp::material
