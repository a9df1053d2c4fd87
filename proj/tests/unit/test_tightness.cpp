#include "helpers.hpp"

#include "pisfp/engine.hpp"
#include "pisfp/errors.hpp"
#include "pisfp/tightness.hpp"

#include <doctest.h>

using namespace pisfp;

namespace {

PhiVector stored_phi() {
    const auto [w, phi] = load_witness_file(data_path("witness_eps04.json"));
    REQUIRE(phi.has_value());
    return *phi;
}

} // namespace

TEST_CASE("tightness: the constructed tensor verifies") {
    const auto spec = eps_instance(4);
    const auto [w, phi] = load_witness_file(data_path("witness_eps04.json"));
    REQUIRE(phi.has_value());
    const auto rep = verify_witness(w, *phi, spec);
    CHECK_MESSAGE(rep.ok, rep.describe());
    CHECK(event_block(spec).objective(*phi) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("tightness: a perturbed tensor fails on the observed marginal") {
    const auto spec = eps_instance(4);
    auto [w, phi] = load_witness_file(data_path("witness_eps04.json"));
    w.at(0, 0, 1, 0) += 0.05;
    const auto rep = verify_witness(w, *phi, spec);
    CHECK_FALSE(rep.ok);
    CHECK(rep.marginal == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("tightness: a uniform tensor fails") {
    const auto spec = eps_instance(4);
    auto w = JointWitness::zeros(2, 2, 2);
    for (auto& v : w.q) {
        v = 1.0 / static_cast<double>(w.q.size());
    }
    w.P = Eigen::MatrixXd::Constant(2, 2, 0.5);
    CHECK_FALSE(verify_witness(w, stored_phi(), spec).ok);
}

TEST_CASE("tightness: shape errors") {
    const auto spec = eps_instance(4);
    CHECK_THROWS_AS(verify_witness(JointWitness::zeros(3, 2, 2), stored_phi(), spec), ShapeMismatch);
}

TEST_CASE("tightness: the search rediscovers a witness") {
    const auto spec = eps_instance(4);
    const auto s = search_witness(stored_phi(), spec, defaults::kWitnessRestarts, 0);
    REQUIRE(s.witness.has_value());
    CHECK(s.restart < defaults::kWitnessRestarts);
    CHECK(verify_witness(*s.witness, stored_phi(), spec).ok);
}

TEST_CASE("tightness: point-identified phi has a witness") {
    const auto sim = simulate_forward(2, 2, 2, 2, 0.0);
    const auto ex = identify_exact(sim.spec);
    const auto w = find_witness(ex.phi, sim.spec, 8, 0);
    REQUIRE(w.has_value());
    CHECK(verify_witness(*w, ex.phi, sim.spec).ok);
}

TEST_CASE("tightness: infeasible phi has none") {
    const auto spec = eps_instance(4);
    PhiVector phi = stored_phi();
    phi.theta(0) += 0.3;  // breaks the sum constraint
    CHECK_FALSE(find_witness(phi, spec, 4, 0).has_value());
}

TEST_CASE("tightness: JSON round trip") {
    const auto [w, phi] = load_witness_file(data_path("witness_eps04.json"));
    const auto [w2, phi2] = witness_from_json(witness_to_json(w, phi));
    CHECK(w2.q == w.q);
    CHECK(w2.P == w.P);
    REQUIRE(phi2.has_value());
    CHECK(phi2->stacked() == phi->stacked());
}
