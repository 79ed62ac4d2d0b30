#pragma once

#include "json.hpp"
#include "sgflow/sim.hpp"

namespace sgflow {

using json = nlohmann::json;

struct Expectations {
    std::vector<Vec> settled_states;
    double tol = 0.02;
    bool expect_safe = true;
};

// a study bundled as data: plant matrices, objective/constraint coefficient
// blocks, gains, integration config, and initial conditions
struct Scenario {
    std::string name = "custom";

    Mat A, B;
    PolyObjective phi;
    QuadraticForm h_form, b_form;
    std::optional<Regularization> regularization;

    ControllerParams params;
    SimConfig sim;
    int r = 1;  // relative degree used for the chain

    std::vector<std::pair<Vec, Vec>> ics;
    std::optional<Expectations> expectations;

    // derived objects
    PlantModel plant;
    ProblemSpec problem;
};

/// Names accepted by builtin().
std::vector<std::string> builtin_names();

/// Bundled studies: "convex", "nonconvex", "item3-study" (parameterized by
/// ustar), "spurious", "spurious-regularized".
Scenario builtin(const std::string& name, double ustar = 1.4);

/// Strict parser: unknown keys are rejected at every level.
Scenario load_scenario(const json& doc, const std::string& where = "<json>");
Scenario load_scenario_file(const std::string& path);

json to_json(const Scenario& s);

/// Chain for the scenario at its configured beta and relative degree.
BarrierChain make_chain(const Scenario& s);

/// Deterministic Halton-sequence points inside the intersection of all S_i
/// (every chain level and b at least `margin`).
std::vector<std::pair<Vec, Vec>> safe_ic_grid(const PlantModel& plant,
                                              const ProblemSpec& spec, double beta, int r,
                                              const Vec& lo_x, const Vec& hi_x,
                                              const Vec& lo_u, const Vec& hi_u,
                                              std::size_t count, double margin = 0.05);

/// Scenario-level sweep wrapper (defaults to the scenario's own ICs).
std::vector<SweepEntry> sweep_scenario(const Scenario& s, RhsKind kind, int jobs = 0);

}  // namespace sgflow
