#include "helpers.hpp"

#include "pisfp/errors.hpp"
#include "pisfp/model.hpp"

#include <doctest.h>

#include <sstream>
#include <string>

using namespace pisfp;

namespace {

std::string message_of(const std::string& file) {
    try {
        validate(load_problem_file(data_path(file)));
    } catch (const ValidationError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("model: instance marginals") {
    const auto s = eps_instance(4);
    validate(s);
    CHECK(s.f_yx() == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(s.f_x() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s.f_not_x() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s.f_w_x().sum() == doctest::Approx(s.f_x()));
}

TEST_CASE("model: broken inputs name the invariant") {
    CHECK(message_of("broken_mass.json").find("mass") != std::string::npos);
    CHECK(message_of("broken_order.json").find("lower > upper at (0,0)") != std::string::npos);
}

TEST_CASE("model: malformed JSON is a parse error") {
    std::istringstream bad("{\"dims\": {\"u\": 2}");
    CHECK_THROWS_AS(load_problem(bad), ParseError);
}

TEST_CASE("model: JSON round trip") {
    const auto s = eps_instance(2);
    std::istringstream again(problem_to_json(s));
    const auto t = load_problem(again);
    CHECK(t.observed.p == s.observed.p);
    CHECK(t.transition_bounds.lower == s.transition_bounds.lower);
    CHECK(t.transition_bounds.upper == s.transition_bounds.upper);
    CHECK(t.psi_min == s.psi_min);
}

TEST_CASE("model: constraint system shape and feasibility of the true phi") {
    const auto sim = simulate_forward(3, 2, 2, 2, 0.1);
    const auto ir = build_ir_phi(sim.spec);
    CHECK(ir.num_rows() == 6 * sim.spec.n_w + 3);
    CHECK(ir.num_variables() == 3 * sim.spec.d);
    // the generating phi always lies in the relaxed set
    const auto truth = identify_exact(simulate_forward(3, 2, 2, 2, 0.0).spec);
    CHECK(ir.contains(truth.phi.stacked(), 1e-9));
}

TEST_CASE("model: point identification recovers the simulated truth") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto sim = simulate_forward(seed, 2, 2, 2, 0.0);
        const auto ex = identify_exact(sim.spec);
        CHECK(ex.value == doctest::Approx(sim.truth).epsilon(1e-9));
    }
    const auto wide = simulate_forward(0, 2, 2, 2, 0.1);
    CHECK_THROWS_AS(identify_exact(wide.spec), ValidationError);
}

TEST_CASE("model: block objective guards psi") {
    const auto b = event_block(eps_instance(4));
    PhiVector phi{Eigen::Vector2d(0, 0.2), Eigen::Vector2d(0.3, 0.2), Eigen::Vector2d(0.5, 0)};
    CHECK(b.objective(phi) == doctest::Approx(0.2).epsilon(1e-12));
    phi.psi(0) = 0.0;
    CHECK_THROWS_AS(b.objective(phi), DomainError);
}
