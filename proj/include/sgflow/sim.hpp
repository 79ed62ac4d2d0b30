#pragma once

#include <iosfwd>

#include "sgflow/controller.hpp"

namespace sgflow {

struct SimConfig {
    double dt = 1e-3;
    double t_final = 30.0;
    int record_stride = 1;
    double settle_tol = 1e-7;     // threshold on ||(f, q)||_inf
    double settle_window = 1.0;   // residual must stay below for this long

    void validate() const {
        if (dt <= 0 || t_final <= 0 || dt >= t_final)
            throw ValidationError("need 0 < dt < t_final");
        if (record_stride < 1) throw ValidationError("record_stride must be >= 1");
        if (settle_tol <= 0 || settle_window <= 0)
            throw ValidationError("settle parameters must be positive");
    }
};

enum class Outcome { Settled, TimedOut, Aborted };

struct QpTraceEntry {
    double qnorm = 0.0;
    double lambda_b = 0.0;
    double lambda_h = 0.0;
    int active = 0;  // bit 1: input row, bit 2: barrier row
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<Vec> inputs;
    std::vector<double> h_trace;
    std::vector<double> b_trace;
    std::vector<Vec> chain_trace;  // (h_0 ... h_r) per stored step
    std::vector<QpTraceEntry> qp_trace;

    Outcome outcome = Outcome::TimedOut;
    double outcome_time = 0.0;
    std::string abort_reason;
    Vec settled_x, settled_u;  // valid when Settled

    bool safe_start = false;   // (x0,u0) in the intersection of all S_i
    // minima over every integration step (not just stored ones)
    double min_h = 0.0;
    double min_b = 0.0;
    Vec min_chain;             // per chain level
};

/// Fixed-step RK4 on the stacked closed loop (xdot = f, udot = controller).
/// Aborts on QP infeasibility or non-finite state; detects settling on
/// ||(f,q)||_inf staying under settle_tol for settle_window.
Trajectory integrate(const PlantModel& plant, const ProblemSpec& spec,
                     const BarrierChain& chain, const ControllerParams& params, RhsKind kind,
                     const Vec& x0, const Vec& u0, const SimConfig& cfg);

/// CSV export, one row per stored step:
/// t,x0..,u0..,h,b,h_r,qnorm,lambda_b,lambda_h,active
/// Values are shortest round-trip decimal.
void write_csv(const Trajectory& traj, std::ostream& os);

struct SweepEntry {
    std::size_t index = 0;
    Vec x0, u0;
    Outcome outcome = Outcome::TimedOut;
    Vec settled_x, settled_u;
    double min_h = 0.0;
    double min_b = 0.0;
    double min_chain = 0.0;
    bool safe_start = false;
    std::string abort_reason;
};

/// Independent runs per IC, in parallel up to `jobs` threads; the result
/// order follows the IC order regardless of scheduling.
std::vector<SweepEntry> initial_condition_sweep(const PlantModel& plant,
                                                const ProblemSpec& spec,
                                                const BarrierChain& chain,
                                                const ControllerParams& params, RhsKind kind,
                                                const std::vector<std::pair<Vec, Vec>>& ics,
                                                const SimConfig& cfg, int jobs = 0);

}  // namespace sgflow
