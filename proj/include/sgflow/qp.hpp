#pragma once

#include <string>

#include "sgflow/types.hpp"

namespace sgflow {

// least-distance QP  min_q 1/2 ||q + d||^2
//                    s.t.  c1'q + e1 >= 0   (input-constraint row)
//                          c2'q + e2 >= 0   (barrier row)
struct TwoConstraintQp {
    Vec d;
    Vec c1;
    double e1 = 0.0;
    Vec c2;
    double e2 = 0.0;
};

struct QpResult {
    enum class Status { Optimal, Infeasible, DegenerateActive };

    Vec q;
    double lambda1 = 0.0;  // multiplier of the input row
    double lambda2 = 0.0;  // multiplier of the barrier row
    bool active1 = false;
    bool active2 = false;
    Status status = Status::Optimal;
    std::string certificate;  // Infeasible: the violated aggregated constraint

    bool usable() const { return status != Status::Infeasible; }
};

/// Closed-form active-set enumeration {} -> {1} -> {2} -> {1,2}. The first
/// candidate that is primal feasible with nonnegative multipliers is the
/// global minimizer (the KKT conditions of a strictly convex QP are
/// sufficient). Dependent rows with both constraints active are solved by
/// least-norm multipliers and flagged DegenerateActive.
QpResult solve_qp(const TwoConstraintQp& qp);

/// Max of stationarity norm, primal violations, and complementarity
/// products; the universal post-check after every controller evaluation.
double qp_kkt_residual(const TwoConstraintQp& qp, const QpResult& result);

}  // namespace sgflow
