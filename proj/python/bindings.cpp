#include "pisfp/ace.hpp"
#include "pisfp/engine.hpp"
#include "pisfp/errors.hpp"
#include "pisfp/io.hpp"
#include "pisfp/model.hpp"
#include "pisfp/tightness.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace pisfp;

namespace {

ProblemSpec parse(const std::string& text) {
    std::istringstream in(text);
    return load_problem(in);
}

RunOptions make_options(const std::string& direction, double delta, int max_iter, bool prune, int threads) {
    RunOptions o;
    if (direction != "lower" && direction != "upper") {
        throw ValidationError("direction must be lower or upper");
    }
    o.direction = direction == "upper" ? BoundDirection::Upper : BoundDirection::Lower;
    o.tol_delta = delta;
    o.max_iter = max_iter;
    o.prune = prune;
    o.threads = threads;
    return o;
}

py::dict phi_dict(const PhiVector& p) {
    py::dict d;
    d["theta"] = p.theta;
    d["psi"] = p.psi;
    d["omega"] = p.omega;
    return d;
}

PhiVector phi_from(const Eigen::VectorXd& theta, const Eigen::VectorXd& psi, const Eigen::VectorXd& omega) {
    return PhiVector{theta, psi, omega};
}

py::dict result_dict(const BoundResult& r) {
    py::dict d;
    d["direction"] = to_string(r.direction);
    d["bound"] = r.bound;
    d["certified_error"] = r.certified_error;
    d["geometric_factor"] = r.geometric_factor;
    d["A"] = r.A;
    d["iterations"] = r.iterations;
    d["L_n"] = r.L_n;
    d["converged"] = r.converged;
    d["gap_closed"] = r.gap_closed;
    d["incumbent"] = r.incumbent ? py::object(py::float_(*r.incumbent)) : py::object(py::none());
    py::list phis;
    for (const auto& p : r.incumbent_phi) {
        phis.append(phi_dict(p));
    }
    d["incumbent_phi"] = phis;
    py::list best;
    for (const auto& row : r.trace) {
        best.append(row.best_bound);
    }
    d["best_bound_trace"] = best;
    return d;
}

} // namespace

PYBIND11_MODULE(_pisfp, m) {
    m.doc() = "bounds on f(Y_x = y) and the ACE with a partially known proxy transition matrix";

    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<EmptyFeasibleRegion>(m, "EmptyFeasibleRegion", PyExc_RuntimeError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    m.def("load_problem", [](const std::string& path) { return problem_to_json(load_problem_file(path)); },
          py::arg("path"), "Load and validate a problem file; returns its canonical JSON.");
    m.def(
        "validate",
        [](const std::string& text) {
            const auto spec = parse(text);
            validate(spec);
            py::dict d;
            d["d"] = spec.d;
            d["n_w"] = spec.n_w;
            d["n_x"] = spec.n_x;
            d["target_x"] = spec.target_x;
            if (spec.observed.n_y == 2) {
                d["f_yx"] = spec.f_yx();
            }
            return d;
        },
        py::arg("problem_json"), "Validate a problem; returns its dimensions.");

    m.def(
        "bound",
        [](const std::string& text, const std::string& direction, double delta, int max_iter, bool prune,
           int threads) {
            const auto spec = parse(text);
            BoundResult r;
            {
                py::gil_scoped_release release;
                r = run(spec, make_options(direction, delta, max_iter, prune, threads));
            }
            return result_dict(r);
        },
        py::arg("problem_json"), py::arg("direction") = "lower", py::arg("delta") = 1e-3,
        py::arg("max_iter") = defaults::kMaxIter, py::arg("prune") = true, py::arg("threads") = 1);

    m.def(
        "bound_ace",
        [](const std::string& text, std::optional<std::vector<double>> pi, const std::string& direction,
           double delta, int max_iter) {
            const auto spec = parse(text);
            if (!pi) {
                if (!spec.weights_pi) {
                    throw ValidationError("weights_pi missing");
                }
                pi = *spec.weights_pi;
            }
            BoundResult r;
            {
                py::gil_scoped_release release;
                r = bound_ace(spec, *pi, make_options(direction, delta, max_iter, true, 1));
            }
            return result_dict(r);
        },
        py::arg("problem_json"), py::arg("pi") = py::none(), py::arg("direction") = "lower",
        py::arg("delta") = 1e-3, py::arg("max_iter") = defaults::kMaxIter);

    m.def(
        "brute_force",
        [](const std::string& text, double grid, const std::string& direction, int threads) {
            const auto spec = parse(text);
            py::gil_scoped_release release;
            return direction == "upper" ? brute_force_max(spec, grid, threads) : brute_force_min(spec, grid, threads);
        },
        py::arg("problem_json"), py::arg("grid") = 1e-3, py::arg("direction") = "lower", py::arg("threads") = 1);

    m.def(
        "identify_exact",
        [](const std::string& text) {
            const auto e = identify_exact(parse(text));
            py::dict d;
            d["value"] = e.value;
            d["phi"] = phi_dict(e.phi);
            return d;
        },
        py::arg("problem_json"));

    m.def(
        "simulate",
        [](std::uint64_t seed, int d, int n_w, int n_x, double widening) {
            const auto s = simulate_forward(seed, d, n_w, n_x, widening);
            py::dict out;
            out["problem_json"] = problem_to_json(s.spec);
            out["truth"] = s.truth;
            out["mean_do"] = s.mean_do;
            out["ace_truth"] = s.ace_truth;
            out["transition"] = s.transition;
            return out;
        },
        py::arg("seed"), py::arg("d") = 2, py::arg("n_w") = 2, py::arg("n_x") = 2, py::arg("widening") = 0.1);

    m.def(
        "verify_witness",
        [](const std::string& witness_json, const std::string& problem_json) {
            auto [w, phi] = witness_from_json(witness_json);
            if (!phi) {
                throw ValidationError("witness JSON carries no phi");
            }
            const auto r = verify_witness(w, *phi, parse(problem_json));
            py::dict d;
            d["ok"] = r.ok;
            d["report"] = r.describe();
            d["marginal"] = r.marginal;
            d["factorization"] = r.factorization;
            d["compatibility"] = r.compatibility;
            d["transition_bounds"] = r.transition_bounds;
            return d;
        },
        py::arg("witness_json"), py::arg("problem_json"));

    m.def(
        "find_witness",
        [](const std::string& problem_json, const Eigen::VectorXd& theta, const Eigen::VectorXd& psi,
           const Eigen::VectorXd& omega, int restarts, std::uint64_t seed) -> py::object {
            const auto spec = parse(problem_json);
            const auto phi = phi_from(theta, psi, omega);
            std::optional<JointWitness> w;
            {
                py::gil_scoped_release release;
                w = find_witness(phi, spec, restarts, seed);
            }
            if (!w) {
                return py::none();
            }
            return py::str(witness_to_json(*w, phi));
        },
        py::arg("problem_json"), py::arg("theta"), py::arg("psi"), py::arg("omega"),
        py::arg("restarts") = defaults::kWitnessRestarts, py::arg("seed") = 0);
}
