#pragma once

#include "sgflow/scenarios.hpp"

namespace sgflow {

// KKT diagnostics for the steady-state problem
//   min phi(w(u))  s.t.  h(w(u)) >= 0,  b(u) >= 0
// with multipliers recovered by enumerating the four activity hypotheses.
struct KktReport {
    Vec x, u;
    double steady_state_residual = 0.0;  // ||x - w(u)||
    double stationarity_residual = 0.0;
    double lambda_h = 0.0;
    double lambda_b = 0.0;
    double h_value = 0.0;
    double b_value = 0.0;
    bool is_kkt = false;
};

struct KktOptions {
    double tol = 1e-4;           // stationarity threshold for is_kkt
    double activity_band = 1e-6; // |h| or |b| below this may carry a multiplier
};

KktReport kkt_residual(const PlantModel& plant, const ProblemSpec& spec, const Vec& u,
                       KktOptions opts = {});

/// Variant for a full state-input point; steady_state_residual = ||x - w(u)||.
KktReport kkt_residual_at(const PlantModel& plant, const ProblemSpec& spec, const Vec& x,
                          const Vec& u, KktOptions opts = {});

struct EigvecTest {
    bool is_eigvec = false;
    double eigenvalue = 0.0;
    double e_pow_r = 0.0;
    bool e_pow_r_negative = false;
};

struct EquivalenceReport {
    bool condition1 = false;  // h(x) > 0
    EigvecTest condition2;    // grad h right eigenvector of df/dx
    EigvecTest condition3;    // (dw/du)^T left eigenvector of df/dx
    bool any_condition_holds = false;
};

struct EquilibriumClassification {
    bool is_equilibrium = false;
    double f_norm = 0.0;
    double rhs_norm = 0.0;
    EquivalenceReport equivalence;
    KktReport kkt;
};

/// is_equilibrium iff ||f|| <= 1e-7 and ||sgf_rhs|| <= 1e-7; the equivalence
/// report covers the three sufficient conditions under which equilibria and
/// critical points coincide.
EquilibriumClassification classify_equilibrium(const PlantModel& plant,
                                               const ProblemSpec& spec,
                                               const BarrierChain& chain,
                                               const ControllerParams& params, const Vec& x,
                                               const Vec& u, KktOptions opts = {});

/// Copy of the spec with objective phi(x) + p (margin - h(x))^2; constraints
/// and feasible set are untouched.
ProblemSpec regularize(const ProblemSpec& spec, double p, double margin);

struct FoundEquilibrium {
    Vec x, u;
    std::size_t hits = 1;  // how many seeds settled here
    EquilibriumClassification classification;
};

/// Integrate from each seed, classify the settled points, deduplicate
/// within 1e-3.
std::vector<FoundEquilibrium> find_equilibria(const Scenario& scenario,
                                              const std::vector<std::pair<Vec, Vec>>& seeds,
                                              int jobs = 0);

json to_json(const KktReport& r);
json to_json(const EquivalenceReport& r);
json to_json(const EquilibriumClassification& c);

}  // namespace sgflow
