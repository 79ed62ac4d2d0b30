#include "sgflow/controller.hpp"

#include <cmath>
#include <limits>

namespace sgflow {

namespace {

ControlEvaluation make_evaluation(const TwoConstraintQp& qp, ControlDiagnostics diag) {
    ControlEvaluation ev;
    ev.qp = solve_qp(qp);
    ev.q = ev.qp.q;
    ev.diagnostics = diag;
    return ev;
}

}  // namespace

ControllerEvaluator::ControllerEvaluator(const PlantModel& plant, const ProblemSpec& spec,
                                         const BarrierChain& chain,
                                         const ControllerParams& params, RhsKind kind)
    : plant_(plant), spec_(spec), chain_(chain), params_(params), kind_(kind), ss_(plant) {
    params_.validate();
}

ControlEvaluation ControllerEvaluator::eval(const Vec& x, const Vec& u) {
    SteadyState ss = ss_.solve(u);

    TwoConstraintQp qp;
    Vec geff = effective_objective_gradient(spec_, x);
    qp.d = params_.epsilon * (ss.dwdu.transpose() * geff);
    qp.c1 = spec_.grad_b(u);
    qp.e1 = params_.alpha * spec_.b(u);

    ControlDiagnostics diag;
    diag.b = spec_.b(u);
    diag.grad_term = qp.d.norm() / params_.epsilon;

    if (kind_ == RhsKind::Sgf) {
        ChainPartials cp = chain_partials(chain_, x, u);
        qp.c2 = cp.dh_r_du;
        diag.h_r = chain_.level_value(chain_.r, x, u);
        diag.drift = cp.drift;
        qp.e2 = cp.drift + params_.gamma * diag.h_r;
    } else {
        const double hw = spec_.h(ss.x);
        qp.c2 = ss.dwdu.transpose() * spec_.grad_h(ss.x);
        diag.h_r = hw;
        diag.drift = 0.0;
        qp.e2 = params_.gamma * hw;
    }

    return make_evaluation(qp, diag);
}

ControlEvaluation sgf_rhs(const PlantModel& plant, const ProblemSpec& spec,
                          const BarrierChain& chain, const ControllerParams& params,
                          const Vec& x, const Vec& u) {
    ControllerEvaluator ev(plant, spec, chain, params, RhsKind::Sgf);
    return ev.eval(x, u);
}

ControlEvaluation baseline_rhs(const PlantModel& plant, const ProblemSpec& spec,
                               const ControllerParams& params, const Vec& x, const Vec& u) {
    BarrierChain unused = build_chain(plant, spec, params.beta, 1);
    ControllerEvaluator ev(plant, spec, unused, params, RhsKind::Baseline);
    return ev.eval(x, u);
}

Prop1Report check_prop1_conditions(const PlantModel& plant, const ProblemSpec& spec,
                                   const BarrierChain& chain,
                                   const std::vector<std::pair<Vec, Vec>>& samples,
                                   double boundary_band) {
    Prop1Report rep;
    rep.worst_margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const Vec& x = samples[k].first;
        const Vec& u = samples[k].second;
        const double bv = spec.b(u);
        const double hr = chain.level_value(chain.r, x, u);
        Prop1Report::Entry ent;
        ent.sample = k;
        ent.on_b_boundary = std::abs(bv) <= boundary_band;
        ent.on_hr_boundary = std::abs(hr) <= boundary_band;
        if (!ent.on_b_boundary && !ent.on_hr_boundary) continue;
        ++rep.boundary_samples;

        Vec gb = spec.grad_b(u);
        ChainPartials cp = chain_partials(chain, x, u);
        std::vector<Vec> dirs = {gb, Vec(-gb), cp.dh_r_du, Vec(-cp.dh_r_du)};

        double best_b = -std::numeric_limits<double>::infinity();
        double best_h = -std::numeric_limits<double>::infinity();
        for (const Vec& q : dirs) {
            if (q.norm() == 0.0) continue;
            Vec qn = q.normalized();
            best_b = std::max(best_b, gb.dot(qn));
            best_h = std::max(best_h, cp.dh_r_du.dot(qn) + cp.drift);
        }
        double margin = std::numeric_limits<double>::infinity();
        if (ent.on_b_boundary) margin = std::min(margin, best_b);
        if (ent.on_hr_boundary) margin = std::min(margin, best_h);
        ent.margin = margin;
        ent.satisfied = margin > 0.0;
        if (ent.satisfied) ++rep.satisfied_samples;
        rep.worst_margin = std::min(rep.worst_margin, margin);
        rep.entries.push_back(ent);
    }
    if (rep.boundary_samples == 0) rep.worst_margin = 0.0;
    return rep;
}

CrcqReport check_crcq_diagnostic(const ProblemSpec& spec, const BarrierChain& chain,
                                 const std::vector<std::pair<Vec, Vec>>& samples,
                                 double active_band, double flag_tol) {
    CrcqReport rep;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const Vec& x = samples[k].first;
        const Vec& u = samples[k].second;
        if (std::abs(spec.b(u)) > active_band) continue;
        if (std::abs(chain.level_value(chain.r, x, u)) > active_band) continue;

        // singular values of the stacked 2xm rows via the 2x2 Gram; the
        // second one is identically zero when m = 1
        Vec gb = spec.grad_b(u);
        Vec gh = chain.dh_r_du(x, u);
        Eigen::Matrix2d gram;
        gram << gb.squaredNorm(), gb.dot(gh), gb.dot(gh), gh.squaredNorm();
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(gram);
        const double smin = std::sqrt(std::max(0.0, es.eigenvalues()(0)));

        CrcqReport::Entry ent;
        ent.sample = k;
        ent.smallest_singular_value = smin;
        ent.flagged = smin < flag_tol;
        if (ent.flagged) ++rep.flagged_count;
        rep.entries.push_back(ent);
    }
    return rep;
}

}  // namespace sgflow
