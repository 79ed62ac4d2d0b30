#include "sgflow/analysis.hpp"

#include <cmath>
#include <limits>

namespace sgflow {

namespace {

struct Hypothesis {
    bool use_h = false;
    bool use_b = false;
};

// least squares on the active gradients with nonnegative multipliers;
// closed form for at most two variables
void solve_multipliers(const Vec& gphi, const Vec& gh, const Vec& gb, const Hypothesis& hyp,
                       double& lh, double& lb, double& residual) {
    lh = lb = 0.0;
    auto res_for = [&](double a, double c) { return (gphi - a * gh - c * gb).norm(); };

    if (hyp.use_h && hyp.use_b) {
        const double hh = gh.squaredNorm(), bb = gb.squaredNorm(), hb = gh.dot(gb);
        const double det = hh * bb - hb * hb;
        if (det > 1e-14 * std::max(1.0, hh * bb)) {
            const double rh = gh.dot(gphi), rb = gb.dot(gphi);
            double a = (bb * rh - hb * rb) / det;
            double c = (hh * rb - hb * rh) / det;
            if (a >= 0.0 && c >= 0.0) {
                lh = a;
                lb = c;
                residual = res_for(a, c);
                return;
            }
        }
        // fall back to the best single-multiplier fit
        double ah = gh.squaredNorm() > 0 ? std::max(0.0, gh.dot(gphi) / gh.squaredNorm()) : 0;
        double cb = gb.squaredNorm() > 0 ? std::max(0.0, gb.dot(gphi) / gb.squaredNorm()) : 0;
        if (res_for(ah, 0.0) <= res_for(0.0, cb)) {
            lh = ah;
            residual = res_for(ah, 0.0);
        } else {
            lb = cb;
            residual = res_for(0.0, cb);
        }
        return;
    }
    if (hyp.use_h) {
        lh = gh.squaredNorm() > 0 ? std::max(0.0, gh.dot(gphi) / gh.squaredNorm()) : 0.0;
        residual = res_for(lh, 0.0);
        return;
    }
    if (hyp.use_b) {
        lb = gb.squaredNorm() > 0 ? std::max(0.0, gb.dot(gphi) / gb.squaredNorm()) : 0.0;
        residual = res_for(0.0, lb);
        return;
    }
    residual = gphi.norm();
}

EigvecTest eigvec_test(const Mat& J, const Mat& V, int r, double collinearity_tol) {
    // V holds candidate column(s); the matrix relation J V = e V must hold
    // with one common Rayleigh-quotient eigenvalue e
    EigvecTest t;
    const double vn = V.norm();
    if (vn == 0.0) return t;
    Mat JV = J * V;
    const double e = (JV.cwiseProduct(V)).sum() / (vn * vn);
    const double sin_angle = (JV - e * V).norm() / std::max(JV.norm(), 1e-300);
    t.eigenvalue = e;
    t.is_eigvec = sin_angle <= collinearity_tol;
    t.e_pow_r = std::pow(e, r);
    t.e_pow_r_negative = t.e_pow_r < 0.0;
    return t;
}

}  // namespace

KktReport kkt_residual_at(const PlantModel& plant, const ProblemSpec& spec, const Vec& x,
                          const Vec& u, KktOptions opts) {
    SteadyState ss = steady_state(plant, u);

    KktReport rep;
    rep.x = x;
    rep.u = u;
    rep.steady_state_residual = (x - ss.x).norm();
    rep.h_value = spec.h(ss.x);
    rep.b_value = spec.b(u);

    Vec gphi = ss.dwdu.transpose() * effective_objective_gradient(spec, ss.x);
    Vec gh = ss.dwdu.transpose() * spec.grad_h(ss.x);
    Vec gb = spec.grad_b(u);

    const bool h_active_ok = std::abs(rep.h_value) <= opts.activity_band;
    const bool b_active_ok = std::abs(rep.b_value) <= opts.activity_band;

    double best = std::numeric_limits<double>::infinity();
    for (int mask = 0; mask < 4; ++mask) {
        Hypothesis hyp{(mask & 1) != 0, (mask & 2) != 0};
        if (hyp.use_h && !h_active_ok) continue;
        if (hyp.use_b && !b_active_ok) continue;
        double lh, lb, res;
        solve_multipliers(gphi, gh, gb, hyp, lh, lb, res);
        if (res < best) {
            best = res;
            rep.lambda_h = lh;
            rep.lambda_b = lb;
        }
    }
    rep.stationarity_residual = best;

    const bool feasible =
        rep.h_value >= -opts.activity_band && rep.b_value >= -opts.activity_band;
    rep.is_kkt = feasible && best <= opts.tol &&
                 rep.steady_state_residual <= std::max(opts.tol, 1e-6);
    return rep;
}

KktReport kkt_residual(const PlantModel& plant, const ProblemSpec& spec, const Vec& u,
                       KktOptions opts) {
    SteadyState ss = steady_state(plant, u);
    return kkt_residual_at(plant, spec, ss.x, u, opts);
}

EquilibriumClassification classify_equilibrium(const PlantModel& plant,
                                               const ProblemSpec& spec,
                                               const BarrierChain& chain,
                                               const ControllerParams& params, const Vec& x,
                                               const Vec& u, KktOptions opts) {
    constexpr double kEqTol = 1e-7;
    constexpr double kCollinearityTol = 1e-6;

    EquilibriumClassification out;
    out.f_norm = plant.f(x, u).norm();
    ControlEvaluation ev = sgf_rhs(plant, spec, chain, params, x, u);
    out.rhs_norm = ev.qp.usable() ? ev.q.norm() : std::numeric_limits<double>::infinity();
    out.is_equilibrium = out.f_norm <= kEqTol && out.rhs_norm <= kEqTol;

    Mat J = plant.dfdx(x, u);
    out.equivalence.condition1 = spec.h(x) > 0.0;
    out.equivalence.condition2 = eigvec_test(J, spec.grad_h(x), chain.r, kCollinearityTol);
    SteadyState ss = steady_state(plant, u);
    out.equivalence.condition3 =
        eigvec_test(J.transpose(), ss.dwdu, chain.r, kCollinearityTol);
    out.equivalence.any_condition_holds =
        out.equivalence.condition1 ||
        (out.equivalence.condition2.is_eigvec && out.equivalence.condition2.e_pow_r_negative) ||
        (out.equivalence.condition3.is_eigvec && out.equivalence.condition3.e_pow_r_negative);

    out.kkt = kkt_residual_at(plant, spec, x, u, opts);
    return out;
}

ProblemSpec regularize(const ProblemSpec& spec, double p, double margin) {
    if (p <= 0.0 || margin <= 0.0)
        throw ValidationError("regularization weight and margin must be positive");
    ProblemSpec out = spec;
    out.regularization = Regularization{p, margin};
    return out;
}

std::vector<FoundEquilibrium> find_equilibria(const Scenario& scenario,
                                              const std::vector<std::pair<Vec, Vec>>& seeds,
                                              int jobs) {
    BarrierChain chain = make_chain(scenario);
    auto entries = initial_condition_sweep(scenario.plant, scenario.problem, chain,
                                           scenario.params, RhsKind::Sgf, seeds, scenario.sim,
                                           jobs);
    std::vector<FoundEquilibrium> found;
    for (const auto& e : entries) {
        if (e.outcome != Outcome::Settled) continue;
        bool merged = false;
        for (auto& f : found) {
            const double d = std::max((f.x - e.settled_x).lpNorm<Eigen::Infinity>(),
                                      (f.u - e.settled_u).lpNorm<Eigen::Infinity>());
            if (d <= 1e-3) {
                ++f.hits;
                merged = true;
                break;
            }
        }
        if (merged) continue;
        FoundEquilibrium f;
        f.x = e.settled_x;
        f.u = e.settled_u;
        f.classification = classify_equilibrium(scenario.plant, scenario.problem, chain,
                                                scenario.params, f.x, f.u);
        found.push_back(std::move(f));
    }
    return found;
}

namespace {

json vec_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

}  // namespace

json to_json(const KktReport& r) {
    return json{{"point", {{"x", vec_json(r.x)}, {"u", vec_json(r.u)}}},
                {"steady_state_residual", r.steady_state_residual},
                {"stationarity_residual", r.stationarity_residual},
                {"lambda_h", r.lambda_h},
                {"lambda_b", r.lambda_b},
                {"feasibility", {{"h", r.h_value}, {"b", r.b_value}}},
                {"is_kkt", r.is_kkt}};
}

json to_json(const EquivalenceReport& r) {
    auto eig = [](const EigvecTest& t) {
        return json{{"is_eigvec", t.is_eigvec},
                    {"eigenvalue", t.eigenvalue},
                    {"e_pow_r", t.e_pow_r},
                    {"e_pow_r_negative", t.e_pow_r_negative}};
    };
    json c2 = eig(r.condition2);
    c2["is_right_eigvec"] = r.condition2.is_eigvec;
    json c3 = eig(r.condition3);
    c3["is_left_eigvec"] = r.condition3.is_eigvec;
    return json{{"condition1", r.condition1},
                {"condition2", c2},
                {"condition3", c3},
                {"any_condition_holds", r.any_condition_holds}};
}

json to_json(const EquilibriumClassification& c) {
    return json{{"is_equilibrium", c.is_equilibrium},
                {"f_norm", c.f_norm},
                {"rhs_norm", c.rhs_norm},
                {"equivalence", to_json(c.equivalence)},
                {"kkt", to_json(c.kkt)}};
}

}  // namespace sgflow
