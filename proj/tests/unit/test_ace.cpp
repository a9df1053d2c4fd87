#include "helpers.hpp"

#include "pisfp/ace.hpp"
#include "pisfp/engine.hpp"
#include "pisfp/errors.hpp"

#include <doctest.h>

using namespace pisfp;

namespace {

RunOptions short_run(int iters, BoundDirection dir = BoundDirection::Lower) {
    RunOptions o;
    o.max_iter = iters;
    o.direction = dir;
    return o;
}

} // namespace

TEST_CASE("ace: a binary outcome reproduces the event block") {
    const auto spec = load_problem_file(data_path("eps04_ace.json"));
    const auto ace = ace_block(spec, spec.target_x, 0.0);
    const auto ev = event_block(spec);
    CHECK((ace.v_theta - ev.v_theta).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK((ace.v_psi - ev.v_psi).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK((ace.v_omega - ev.v_omega).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(ace.offset == doctest::Approx(ev.offset));
}

TEST_CASE("ace: zero weights and block layout") {
    const auto spec = load_problem_file(data_path("eps04_ace.json"));
    const auto zero = bound_ace(spec, {0.0, 0.0}, short_run(5));
    CHECK(zero.bound == 0.0);
    CHECK(zero.gap_closed);

    const auto sim = simulate_forward(1, 2, 2, 3, 0.1);
    const auto p = build_ace_program(sim.spec, {1.0, 0.0, -1.0});
    CHECK(p.program.blocks.size() == 2);
    CHECK(p.block_x == std::vector<int>{0, 2});
    CHECK(p.program.blocks[1].weight == -1.0);
}

TEST_CASE("ace: input errors") {
    auto spec = eps_instance(4);
    CHECK_THROWS_AS(build_ace_program(spec, {1.0, -1.0}), MissingOutcomeValues);
    spec.y_values = std::vector<double>{1.0, 0.0};
    CHECK_THROWS_AS(build_ace_program(spec, {1.0}), ShapeMismatch);
}

TEST_CASE("ace: point-identified width") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto sim = simulate_forward(seed, 2, 2, 2, 0.0);
        const auto& pi = *sim.spec.weights_pi;
        const auto lo = bound_ace(sim.spec, pi, short_run(50));
        const auto hi = bound_ace(sim.spec, pi, short_run(50, BoundDirection::Upper));
        CHECK(hi.bound - lo.bound <= 1e-6);
        CHECK(lo.bound <= sim.ace_truth + 1e-9);
        CHECK(hi.bound >= sim.ace_truth - 1e-9);
    }
}

TEST_CASE("ace: joint and per-x bounds both hold") {
    const auto sim = simulate_forward(0, 2, 2, 2, 0.1);
    const auto& pi = *sim.spec.weights_pi;
    const auto joint = bound_ace(sim.spec, pi, short_run(40));
    CHECK(joint.bound <= sim.ace_truth + 1e-9);
    // naive: each E[Y|do(x)] bounded on its own, then combined by sign
    double naive = 0.0;
    for (int x = 0; x < 2; ++x) {
        std::vector<double> unit(2, 0.0);
        unit[static_cast<size_t>(x)] = 1.0;
        const auto dir = pi[static_cast<size_t>(x)] > 0 ? BoundDirection::Lower : BoundDirection::Upper;
        naive += pi[static_cast<size_t>(x)] * bound_ace(sim.spec, unit, short_run(40, dir)).bound;
    }
    CHECK(naive <= sim.ace_truth + 1e-9);
    // blocks share no constraints, so both converge to the same optimum
    REQUIRE(joint.incumbent.has_value());
    CHECK(naive <= *joint.incumbent + 1e-9);
}
