#pragma once

// Numeric tolerances shared by every module. Changing one of these changes
// the contract of the solver, so they live in a single place.

namespace pisfp::tol {

// Ingest: probability mass and marginal checks on loaded problems.
inline constexpr double kIngest = 1e-12;

// Feasibility of a point against a constraint system.
inline constexpr double kFeasibility = 1e-9;

// LP solver.
inline constexpr double kLpPivot = 1e-11;     // smallest admissible pivot
inline constexpr double kLpRatioEntry = 1e-9; // ratio-test candidate entries
inline constexpr double kLpOptimality = 1e-9; // reduced-cost sign threshold
inline constexpr double kLpPhaseOne = 1e-9;   // residual infeasibility
inline constexpr double kLpRowCheck = 1e-8;   // post-solve row violation
inline constexpr double kLpRepair = 1e-10;    // basic values below -this get dual repair pivots
inline constexpr double kLpCarefulPivot = 1e-7;  // relative pivot floor on the retry
inline constexpr double kLpStrictPivot = 1e-4;   // last relative pivot floor
inline constexpr double kLpBoxCheck = 1e-10;  // post-solve box violation

// Simplex geometry: relative pivot in the edge system, membership slack.
inline constexpr double kSimplexPivot = 1e-10;
inline constexpr double kMembership = 1e-10;

// identify_exact refuses matrices with condition number above this.
inline constexpr double kConditionCap = 1e12;
inline constexpr double kNegativeRecovery = 1e-9;

// Incumbent pruning margin.
inline constexpr double kPruneMargin = 1e-12;

// Local search: minimum accepted improvement.
inline constexpr double kLocalImprovement = 1e-12;

// Witness search.
inline constexpr double kWitnessAccept = 1e-7;
inline constexpr double kWitnessStagnation = 1e-10;
inline constexpr double kWitnessMarginal = 1e-8;
inline constexpr int kWitnessMaxRounds = 500;

} // namespace pisfp::tol

namespace pisfp::defaults {

inline constexpr double kPsiMin = 1e-2;
inline constexpr int kMaxIter = 1000;
inline constexpr int kWitnessRestarts = 32;

} // namespace pisfp::defaults
