#pragma once

#include "sgflow/hocbf.hpp"
#include "sgflow/qp.hpp"

namespace sgflow {

struct ControllerParams {
    double epsilon = 1.0;  // gradient gain
    double alpha = 5.0;    // input-constraint gain
    double gamma = 5.0;    // barrier-constraint gain
    double beta = 1.0;     // chain parameter, forwarded to the chain builder

    void validate() const {
        if (epsilon <= 0 || alpha <= 0 || gamma <= 0 || beta <= 0)
            throw ValidationError("controller gains must be strictly positive");
    }
};

struct ControlDiagnostics {
    double h_r = 0.0;       // h_r(x,u)
    double b = 0.0;         // b(u)
    double drift = 0.0;     // dh_r/dx . f(x,u)
    double grad_term = 0.0; // ||(dw/du)' grad phi||
};

struct ControlEvaluation {
    Vec q;  // controller output udot
    QpResult qp;
    ControlDiagnostics diagnostics;
};

enum class RhsKind { Sgf, Baseline };

/// Controller right-hand sides. The Sgf variant solves
///   min 1/2 ||q + eps (dw/du)' grad phi(x)||^2
///   s.t. grad b(u)' q + alpha b(u) >= 0
///        dh_r/du q + dh_r/dx f(x,u) + gamma h_r(x,u) >= 0
/// The Baseline comparator replaces the barrier row with the steady-state
/// row (dw/du)' grad h(w(u)) and gamma h(w(u)): input constraints anytime,
/// state constraints only asymptotically.
class ControllerEvaluator {
  public:
    ControllerEvaluator(const PlantModel& plant, const ProblemSpec& spec,
                        const BarrierChain& chain, const ControllerParams& params,
                        RhsKind kind);

    ControlEvaluation eval(const Vec& x, const Vec& u);

    const PlantModel& plant() const { return plant_; }

  private:
    PlantModel plant_;
    ProblemSpec spec_;
    BarrierChain chain_;
    ControllerParams params_;
    RhsKind kind_;
    SteadyStateContext ss_;
};

/// One-shot evaluations (spec-level entry points).
ControlEvaluation sgf_rhs(const PlantModel& plant, const ProblemSpec& spec,
                          const BarrierChain& chain, const ControllerParams& params,
                          const Vec& x, const Vec& u);
ControlEvaluation baseline_rhs(const PlantModel& plant, const ProblemSpec& spec,
                               const ControllerParams& params, const Vec& x, const Vec& u);

struct Prop1Report {
    struct Entry {
        std::size_t sample = 0;
        bool on_b_boundary = false;
        bool on_hr_boundary = false;
        bool satisfied = true;
        double margin = 0.0;  // best directional margin found
    };
    std::vector<Entry> entries;
    std::size_t boundary_samples = 0;
    std::size_t satisfied_samples = 0;
    double worst_margin = 0.0;

    double satisfaction_rate() const {
        return boundary_samples ? double(satisfied_samples) / double(boundary_samples) : 1.0;
    }
};

/// Feasibility precondition probe: at samples on the b (resp. h_r) boundary,
/// search for a direction with grad b' q > 0 (resp. dh_r/du q + drift > 0)
/// among +-grad b and +-dh_r/du.
Prop1Report check_prop1_conditions(const PlantModel& plant, const ProblemSpec& spec,
                                   const BarrierChain& chain,
                                   const std::vector<std::pair<Vec, Vec>>& samples,
                                   double boundary_band = 1e-6);

struct CrcqReport {
    struct Entry {
        std::size_t sample = 0;
        double smallest_singular_value = 0.0;
        bool flagged = false;
    };
    std::vector<Entry> entries;
    std::size_t flagged_count = 0;
};

/// Smallest singular value of the stacked active-constraint rows
/// [grad b'; dh_r/du] at samples where both constraints are near active.
CrcqReport check_crcq_diagnostic(const ProblemSpec& spec, const BarrierChain& chain,
                                 const std::vector<std::pair<Vec, Vec>>& samples,
                                 double active_band = 1e-3, double flag_tol = 1e-8);

}  // namespace sgflow
