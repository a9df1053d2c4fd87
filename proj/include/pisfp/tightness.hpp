#pragma once

#include "pisfp/config.hpp"
#include "pisfp/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pisfp {

// Full joint over (event, W, U, X) with the transition matrix it factors through.
struct JointWitness {
    int n_w = 0;
    int d = 0;
    int n_x = 0;
    std::vector<double> q;  // q[y][w][u][x], y in {target, complement}
    Eigen::MatrixXd P;      // n_w x d

    static JointWitness zeros(int n_w, int d, int n_x);
    double at(int y, int w, int u, int x) const { return q[index(y, w, u, x)]; }
    double& at(int y, int w, int u, int x) { return q[index(y, w, u, x)]; }
    size_t index(int y, int w, int u, int x) const {
        return static_cast<size_t>(((y * n_w + w) * d + u) * n_x + x);
    }
};

struct WitnessReport {
    bool ok = false;
    // Worst violation per category.
    double nonnegativity = 0.0;
    double mass = 0.0;
    double stochastic = 0.0;
    double transition_bounds = 0.0;
    double factorization = 0.0;
    double marginal = 0.0;
    double compatibility = 0.0;

    std::string describe() const;
};

WitnessReport verify_witness(const JointWitness& w, const PhiVector& phi, const ProblemSpec& spec);

struct WitnessSearch {
    std::optional<JointWitness> witness;
    int restart = -1;       // restart that produced it
    int rounds = 0;         // alternating rounds in that restart
    double violation = 0.0; // best total violation seen
};

// Alternating LP search; a returned witness always passes verify_witness.
WitnessSearch search_witness(const PhiVector& phi, const ProblemSpec& spec, int restarts = defaults::kWitnessRestarts,
                             std::uint64_t seed = 0);
std::optional<JointWitness> find_witness(const PhiVector& phi, const ProblemSpec& spec,
                                         int restarts = defaults::kWitnessRestarts, std::uint64_t seed = 0);

std::string witness_to_json(const JointWitness& w, const std::optional<PhiVector>& phi = std::nullopt);
// Returns the witness and the phi stored next to it, if any.
std::pair<JointWitness, std::optional<PhiVector>> witness_from_json(const std::string& text);
std::pair<JointWitness, std::optional<PhiVector>> load_witness_file(const std::string& path);

} // namespace pisfp
