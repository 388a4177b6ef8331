#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <functional>

#include "hsdisp/corrector.hpp"
#include "hsdisp/dispersion.hpp"
#include "hsdisp/material.hpp"
#include "hsdisp/minimizer.hpp"
#include "hsdisp/oracle.hpp"
#include "hsdisp/packing.hpp"
#include "hsdisp/validate.hpp"

namespace py = pybind11;
using namespace hsdisp;

PYBIND11_MODULE(_hsdisp, m) {
    m.doc() = "coated-ball composites: homogenized conductivity, dispersive corrections, "
              "and torus ball packings";

    py::register_exception<degenerate_input>(m, "DegenerateInput", PyExc_ValueError);
    py::register_exception<infeasible_radii>(m, "InfeasibleRadii", PyExc_ValueError);
    py::register_exception<numerical_failure>(m, "NumericalFailure", PyExc_RuntimeError);
    py::register_exception<packing::search_budget_exceeded>(m, "SearchBudgetExceeded",
                                                            PyExc_RuntimeError);
    py::register_exception<packing::coverage_complete>(m, "CoverageComplete", PyExc_RuntimeError);

    m.def("unit_ball_volume", &unit_ball_volume, py::arg("dim"));

    // ---- material ----

    py::class_<material::TwoPhaseProfile>(m, "TwoPhaseProfile")
        .def(py::init(&material::make_profile), py::arg("alpha"), py::arg("beta"),
             py::arg("theta"), py::arg("dim"))
        .def_readonly("alpha", &material::TwoPhaseProfile::alpha)
        .def_readonly("beta", &material::TwoPhaseProfile::beta)
        .def_readonly("theta", &material::TwoPhaseProfile::theta)
        .def_readonly("dim", &material::TwoPhaseProfile::dim)
        .def("core_radius", &material::TwoPhaseProfile::core_radius)
        .def("conductivity", &material::TwoPhaseProfile::conductivity, py::arg("r"))
        .def("__repr__", [](const material::TwoPhaseProfile& p) {
            return "TwoPhaseProfile(alpha=" + format_double17(p.alpha) +
                   ", beta=" + format_double17(p.beta) + ", theta=" + format_double17(p.theta) +
                   ", dim=" + std::to_string(p.dim) + ")";
        });
    m.def("make_profile", &material::make_profile, py::arg("alpha"), py::arg("beta"),
          py::arg("theta"), py::arg("dim"));
    m.def("equivalent_conductivity", &material::equivalent_conductivity, py::arg("profile"));

    py::class_<material::FirstCorrector>(m, "FirstCorrector")
        .def_readonly("b1t", &material::FirstCorrector::b1t)
        .def_readonly("b2t", &material::FirstCorrector::b2t)
        .def_readonly("ct", &material::FirstCorrector::ct)
        .def_readonly("m", &material::FirstCorrector::m)
        .def("__repr__", [](const material::FirstCorrector& fc) {
            return "FirstCorrector(m=" + format_double17(fc.m) + ")";
        });
    m.def("first_corrector", &material::first_corrector, py::arg("profile"));
    m.def("eval_f", &material::eval_f, py::arg("fc"), py::arg("profile"), py::arg("r"));
    m.def("eval_f_prime", &material::eval_f_prime, py::arg("fc"), py::arg("profile"),
          py::arg("r"));

    py::class_<material::FluxResiduals>(m, "FluxResiduals")
        .def_readonly("at_interface", &material::FluxResiduals::at_interface)
        .def_readonly("at_boundary", &material::FluxResiduals::at_boundary);
    m.def("flux_jump_residuals", &material::flux_jump_residuals, py::arg("fc"),
          py::arg("profile"));

    py::class_<material::ConductivityBounds>(m, "ConductivityBounds")
        .def_readonly("harmonic", &material::ConductivityBounds::harmonic)
        .def_readonly("assemblage", &material::ConductivityBounds::assemblage)
        .def_readonly("arithmetic", &material::ConductivityBounds::arithmetic);
    m.def("conductivity_bounds", &material::conductivity_bounds, py::arg("profile"));

    // ---- corrector ----

    py::class_<corrector::SecondCorrector>(m, "SecondCorrector")
        .def_readonly("b1", &corrector::SecondCorrector::b1)
        .def_readonly("c1", &corrector::SecondCorrector::c1)
        .def_readonly("d1", &corrector::SecondCorrector::d1)
        .def_readonly("p1", &corrector::SecondCorrector::p1)
        .def_readonly("q1", &corrector::SecondCorrector::q1)
        .def_readonly("t1", &corrector::SecondCorrector::t1)
        .def_readonly("b2", &corrector::SecondCorrector::b2)
        .def_readonly("c2", &corrector::SecondCorrector::c2)
        .def_readonly("d2", &corrector::SecondCorrector::d2)
        .def_readonly("p2", &corrector::SecondCorrector::p2)
        .def_readonly("q2", &corrector::SecondCorrector::q2)
        .def_readonly("t2", &corrector::SecondCorrector::t2);
    m.def("solve_closed_form", &corrector::solve_closed_form, py::arg("profile"), py::arg("fc"));
    m.def("solve_least_squares", &corrector::solve_least_squares, py::arg("profile"),
          py::arg("fc"));

    py::class_<corrector::ConsistencyReport>(m, "ConsistencyReport")
        .def_readonly("shell_const_residual", &corrector::ConsistencyReport::shell_const_residual)
        .def_readonly("h_flux_residual", &corrector::ConsistencyReport::h_flux_residual)
        .def_readonly("h_flux_lhs", &corrector::ConsistencyReport::h_flux_lhs)
        .def_readonly("h_flux_identity", &corrector::ConsistencyReport::h_flux_identity)
        .def_readonly("max_row_residual", &corrector::ConsistencyReport::max_row_residual)
        .def_readonly("rank", &corrector::ConsistencyReport::rank)
        .def_readonly("rank_augmented", &corrector::ConsistencyReport::rank_augmented);
    m.def("verify_consistency", &corrector::verify_consistency, py::arg("sc"), py::arg("profile"),
          py::arg("fc"));
    m.def("neumann_residual", &corrector::neumann_residual, py::arg("sc"), py::arg("fc"),
          py::arg("dim"));

    py::class_<corrector::RegularSecondCorrector>(m, "RegularSecondCorrector")
        .def_readonly("b1", &corrector::RegularSecondCorrector::b1)
        .def_readonly("q1", &corrector::RegularSecondCorrector::q1)
        .def_readonly("t1", &corrector::RegularSecondCorrector::t1)
        .def_readonly("b2", &corrector::RegularSecondCorrector::b2)
        .def_readonly("c2", &corrector::RegularSecondCorrector::c2)
        .def_readonly("d2", &corrector::RegularSecondCorrector::d2)
        .def_readonly("p2", &corrector::RegularSecondCorrector::p2)
        .def_readonly("q2", &corrector::RegularSecondCorrector::q2)
        .def_readonly("t2", &corrector::RegularSecondCorrector::t2)
        .def_readonly("s2", &corrector::RegularSecondCorrector::s2);
    m.def("regular_second_corrector", &corrector::regular_second_corrector, py::arg("profile"),
          py::arg("fc"));

    using PinnedG = double (*)(const corrector::SecondCorrector&,
                               const material::TwoPhaseProfile&, double);
    using RegularG = double (*)(const corrector::RegularSecondCorrector&,
                                const material::TwoPhaseProfile&, double);
    m.def("eval_g", PinnedG(&corrector::eval_g), py::arg("sc"), py::arg("profile"), py::arg("r"));
    m.def("eval_g", RegularG(&corrector::eval_g), py::arg("rc"), py::arg("profile"), py::arg("r"));
    m.def("eval_h", PinnedG(&corrector::eval_h), py::arg("sc"), py::arg("profile"), py::arg("r"));
    m.def("eval_h", RegularG(&corrector::eval_h), py::arg("rc"), py::arg("profile"), py::arg("r"));
    m.def("eval_g_prime", PinnedG(&corrector::eval_g_prime), py::arg("sc"), py::arg("profile"),
          py::arg("r"));
    m.def("eval_g_prime", RegularG(&corrector::eval_g_prime), py::arg("rc"), py::arg("profile"),
          py::arg("r"));
    m.def("eval_h_prime", PinnedG(&corrector::eval_h_prime), py::arg("sc"), py::arg("profile"),
          py::arg("r"));
    m.def("eval_h_prime", RegularG(&corrector::eval_h_prime), py::arg("rc"), py::arg("profile"),
          py::arg("r"));

    // ---- dispersion ----

    py::class_<dispersion::QuadSpec>(m, "QuadSpec")
        .def(py::init([](int nodes, int max_doublings, double rel_tol) {
                 dispersion::QuadSpec q;
                 q.nodes = nodes;
                 q.max_doublings = max_doublings;
                 q.rel_tol = rel_tol;
                 return q;
             }),
             py::arg("nodes") = 64, py::arg("max_doublings") = 6, py::arg("rel_tol") = 1e-9)
        .def_readwrite("nodes", &dispersion::QuadSpec::nodes)
        .def_readwrite("max_doublings", &dispersion::QuadSpec::max_doublings)
        .def_readwrite("rel_tol", &dispersion::QuadSpec::rel_tol);

    py::class_<dispersion::DispersionDensity>(m, "DispersionDensity")
        .def_readonly("j_value", &dispersion::DispersionDensity::j_value)
        .def_readonly("quad_error", &dispersion::DispersionDensity::quad_error)
        .def("__repr__", [](const dispersion::DispersionDensity& d) {
            return "DispersionDensity(j_value=" + format_double17(d.j_value) + ")";
        });
    m.def("ball_dispersion_density", &dispersion::ball_dispersion_density, py::arg("fc"),
          py::arg("profile"), py::arg("quad") = dispersion::QuadSpec{});

    py::class_<dispersion::DispersionResult>(m, "DispersionResult")
        .def_readonly("d_phs", &dispersion::DispersionResult::d_phs)
        .def_readonly("sum_radii_N2", &dispersion::DispersionResult::sum_radii_N2)
        .def_readonly("cell_volume", &dispersion::DispersionResult::cell_volume)
        .def_readonly("density", &dispersion::DispersionResult::density)
        .def("__repr__", [](const dispersion::DispersionResult& r) {
            return "DispersionResult(d_phs=" + format_double17(r.d_phs) + ")";
        });
    m.def("dispersion_phs", &dispersion::dispersion_phs, py::arg("density"), py::arg("radii"),
          py::arg("dim"));
    m.def("first_corrector_bracket", &dispersion::first_corrector_bracket, py::arg("fc"),
          py::arg("profile"), py::arg("quad") = dispersion::QuadSpec{});
    m.def("contrast_bracket", &dispersion::contrast_bracket, py::arg("fc"), py::arg("profile"),
          py::arg("quad") = dispersion::QuadSpec{});

    py::class_<dispersion::ScaleFactorReport>(m, "ScaleFactorReport")
        .def_readonly("factors", &dispersion::ScaleFactorReport::factors)
        .def_readonly("limsup_estimate", &dispersion::ScaleFactorReport::limsup_estimate);
    m.def("hs_scale_factor", &dispersion::hs_scale_factor, py::arg("radii_families"),
          py::arg("dim"), py::arg("window") = std::size_t(8));

    // ---- packing ----

    py::class_<packing::TorusBall>(m, "TorusBall")
        .def_readonly("center", &packing::TorusBall::center)
        .def_readonly("radius", &packing::TorusBall::radius)
        .def("__repr__", [](const packing::TorusBall& b) {
            return "TorusBall(radius=" + format_double17(b.radius) + ")";
        });

    py::class_<packing::BallPacking>(m, "BallPacking")
        .def_readonly("dim", &packing::BallPacking::dim)
        .def_readonly("balls", &packing::BallPacking::balls)
        .def_readonly("generator", &packing::BallPacking::generator)
        .def("__len__", [](const packing::BallPacking& p) { return p.balls.size(); })
        .def("__repr__", [](const packing::BallPacking& p) {
            return "BallPacking(dim=" + std::to_string(p.dim) +
                   ", balls=" + std::to_string(p.balls.size()) + ")";
        });

    py::class_<packing::StopRule>(m, "StopRule")
        .def(py::init([](std::size_t max_balls, double min_radius, double target_coverage) {
                 return packing::StopRule{max_balls, min_radius, target_coverage};
             }),
             py::arg("max_balls") = 0, py::arg("min_radius") = 0.0,
             py::arg("target_coverage") = 0.0)
        .def_readwrite("max_balls", &packing::StopRule::max_balls)
        .def_readwrite("min_radius", &packing::StopRule::min_radius)
        .def_readwrite("target_coverage", &packing::StopRule::target_coverage);

    py::class_<packing::SearchSpec>(m, "SearchSpec")
        .def(py::init([](int grid_per_axis, int top_k, double radius_tol, double batch_tol,
                         double min_radius_floor, int threads) {
                 packing::SearchSpec s;
                 s.grid_per_axis = grid_per_axis;
                 s.top_k = top_k;
                 s.radius_tol = radius_tol;
                 s.batch_tol = batch_tol;
                 s.min_radius_floor = min_radius_floor;
                 s.threads = threads;
                 return s;
             }),
             py::arg("grid_per_axis") = 0, py::arg("top_k") = 32, py::arg("radius_tol") = 1e-12,
             py::arg("batch_tol") = 1e-9, py::arg("min_radius_floor") = 1e-4,
             py::arg("threads") = 4)
        .def_readwrite("grid_per_axis", &packing::SearchSpec::grid_per_axis)
        .def_readwrite("top_k", &packing::SearchSpec::top_k)
        .def_readwrite("radius_tol", &packing::SearchSpec::radius_tol)
        .def_readwrite("batch_tol", &packing::SearchSpec::batch_tol)
        .def_readwrite("min_radius_floor", &packing::SearchSpec::min_radius_floor)
        .def_readwrite("threads", &packing::SearchSpec::threads);

    m.def("greedy_apollonian", &packing::greedy_apollonian, py::arg("dim"), py::arg("stop"),
          py::arg("spec") = packing::SearchSpec{}, py::call_guard<py::gil_scoped_release>());
    m.def("largest_empty_ball", &packing::largest_empty_ball, py::arg("packing"),
          py::arg("spec") = packing::SearchSpec{}, py::call_guard<py::gil_scoped_release>());
    m.def("maximal_empty_balls", &packing::maximal_empty_balls, py::arg("packing"),
          py::arg("spec") = packing::SearchSpec{}, py::call_guard<py::gil_scoped_release>());
    m.def("clearance", &packing::clearance, py::arg("packing"), py::arg("x"));
    m.def("torus_distance", &packing::torus_distance, py::arg("a"), py::arg("b"), py::arg("dim"));

    py::class_<packing::CoverageReport>(m, "CoverageReport")
        .def_readonly("volume_fraction", &packing::CoverageReport::volume_fraction)
        .def_readonly("radius_power_sum", &packing::CoverageReport::radius_power_sum)
        .def_readonly("ratio_to_dimension_constant",
                      &packing::CoverageReport::ratio_to_dimension_constant);
    m.def("coverage", &packing::coverage, py::arg("packing"));
    m.def("validate_packing", &packing::validate_packing, py::arg("packing"));
    m.def("packing_json", &packing::packing_json, py::arg("packing"));
    m.def("save_packing", &packing::save_packing, py::arg("packing"), py::arg("path"));
    m.def("load_packing", &packing::load_packing, py::arg("path"));

    // ---- minimizer ----

    py::class_<minimizer::ScaleSequence>(m, "ScaleSequence")
        .def_readonly("d", &minimizer::ScaleSequence::d)
        .def_readonly("dim", &minimizer::ScaleSequence::dim)
        .def_readonly("c_n", &minimizer::ScaleSequence::c_n)
        .def_readonly("partial", &minimizer::ScaleSequence::partial)
        .def_readonly("deficit", &minimizer::ScaleSequence::deficit)
        .def_readonly("realizable", &minimizer::ScaleSequence::realizable);
    m.def("make_sequence", &minimizer::make_sequence, py::arg("d"), py::arg("dim"),
          py::arg("partial") = false);
    m.def("sequence_from_radii", &minimizer::sequence_from_radii, py::arg("radii"),
          py::arg("dim"));

    py::class_<minimizer::FunctionalValue>(m, "FunctionalValue")
        .def_readonly("i_value", &minimizer::FunctionalValue::i_value)
        .def_readonly("upper_env", &minimizer::FunctionalValue::upper_env)
        .def_readonly("bound_from_d1", &minimizer::FunctionalValue::bound_from_d1);
    m.def("functional_I", &minimizer::functional_I, py::arg("sequence"));

    py::class_<minimizer::BoundCheck>(m, "BoundCheck")
        .def_readonly("abs_i", &minimizer::BoundCheck::abs_i)
        .def_readonly("bound", &minimizer::BoundCheck::bound)
        .def_readonly("satisfied", &minimizer::BoundCheck::satisfied);
    m.def("bound_check", &minimizer::bound_check, py::arg("sequence"));

    py::class_<minimizer::MinimizeResult>(m, "MinimizeResult")
        .def_readonly("sequence", &minimizer::MinimizeResult::sequence)
        .def_readonly("functional", &minimizer::MinimizeResult::functional)
        .def_readonly("i_lower", &minimizer::MinimizeResult::i_lower)
        .def_readonly("i_upper", &minimizer::MinimizeResult::i_upper)
        .def_readonly("coverage", &minimizer::MinimizeResult::coverage)
        .def_readonly("deficit", &minimizer::MinimizeResult::deficit)
        .def_readonly("structure", &minimizer::MinimizeResult::structure)
        .def("__repr__", [](const minimizer::MinimizeResult& r) {
            return "MinimizeResult(i_lower=" + format_double17(r.i_lower) +
                   ", i_upper=" + format_double17(r.i_upper) + ")";
        });
    m.def("minimize_via_apollonian", &minimizer::minimize_via_apollonian, py::arg("dim"),
          py::arg("budget"), py::arg("search") = packing::SearchSpec{},
          py::call_guard<py::gil_scoped_release>());
    m.def("compare_structures", &minimizer::compare_structures, py::arg("sequences"));

    // ---- oracles ----

    py::class_<oracle::MCEstimate>(m, "MCEstimate")
        .def_readonly("value", &oracle::MCEstimate::value)
        .def_readonly("std_error", &oracle::MCEstimate::std_error)
        .def_readonly("samples", &oracle::MCEstimate::samples);
    // The integrand receives one tuple of coordinates.  Worker threads hop
    // through the interpreter lock per sample, so python integrands should
    // keep threads small.
    m.def(
        "mc_volume_integral",
        [](int dim, py::function integrand, std::uint64_t samples, std::uint64_t seed,
           int threads) {
            py::handle hf = integrand;  // borrowed; `integrand` outlives the call
            py::gil_scoped_release release;
            std::function<double(const double*, int)> g = [hf](const double* x, int n) {
                py::gil_scoped_acquire gil;
                py::tuple pt(n);
                for (int i = 0; i < n; ++i) pt[i] = py::float_(x[i]);
                return hf(pt).cast<double>();
            };
            return oracle::mc_volume_integral(dim, g, samples, seed, threads);
        },
        py::arg("dim"), py::arg("integrand"), py::arg("samples"), py::arg("seed"),
        py::arg("threads") = 1);

    py::class_<oracle::Bloch1DResult>(m, "Bloch1DResult")
        .def_readonly("eta", &oracle::Bloch1DResult::eta)
        .def_readonly("lam", &oracle::Bloch1DResult::lambda)
        .def_readonly("q", &oracle::Bloch1DResult::q)
        .def_readonly("burnett", &oracle::Bloch1DResult::burnett)
        .def_readonly("fit_residual", &oracle::Bloch1DResult::fit_residual);
    m.def("bloch_1d", &oracle::bloch_1d, py::arg("cell_conductivity"), py::arg("eta_grid"),
          py::arg("mesh_cells"));

    // ---- validation ----

    py::class_<validate::CheckResult>(m, "CheckResult")
        .def_readonly("name", &validate::CheckResult::name)
        .def_readonly("value", &validate::CheckResult::value)
        .def_readonly("reference", &validate::CheckResult::reference)
        .def_readonly("error", &validate::CheckResult::error)
        .def_readonly("tolerance", &validate::CheckResult::tolerance)
        .def_readonly("pass_", &validate::CheckResult::pass)
        .def_readonly("note", &validate::CheckResult::note)
        .def("__repr__", [](const validate::CheckResult& c) {
            return "CheckResult(" + c.name + (c.pass ? ", pass)" : ", FAIL)");
        });

    py::class_<validate::Observation>(m, "Observation")
        .def_readonly("name", &validate::Observation::name)
        .def_readonly("value", &validate::Observation::value)
        .def_readonly("note", &validate::Observation::note);

    py::class_<validate::ValidationReport>(m, "ValidationReport")
        .def_readonly("seed", &validate::ValidationReport::seed)
        .def_readonly("checks", &validate::ValidationReport::checks)
        .def_readonly("observations", &validate::ValidationReport::observations)
        .def_readonly("all_pass", &validate::ValidationReport::all_pass)
        .def("__repr__", [](const validate::ValidationReport& r) {
            return "ValidationReport(checks=" + std::to_string(r.checks.size()) +
                   (r.all_pass ? ", all_pass)" : ", FAILURES)");
        });
    m.def("run_validation", &validate::run_validation, py::arg("seed") = std::uint64_t(7),
          py::arg("threads") = 4, py::call_guard<py::gil_scoped_release>());
    m.def("report_json", &validate::report_json, py::arg("report"));
    m.def("save_report", &validate::save_report, py::arg("report"), py::arg("path"));
}
