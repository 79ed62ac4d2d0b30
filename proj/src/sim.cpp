#include "sgflow/sim.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>
#include <thread>

namespace sgflow {

namespace {

void append_double(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

std::string format_point(const Vec& x, const Vec& u) {
    std::ostringstream os;
    os << "x = (" << x.transpose() << "), u = (" << u.transpose() << ")";
    return os.str();
}

}  // namespace

Trajectory integrate(const PlantModel& plant, const ProblemSpec& spec,
                     const BarrierChain& chain, const ControllerParams& params, RhsKind kind,
                     const Vec& x0, const Vec& u0, const SimConfig& cfg) {
    cfg.validate();
    const int n = plant.n, m = plant.m;
    if (x0.size() != n || u0.size() != m) throw ValidationError("bad IC dimensions");
    if (!x0.allFinite() || !u0.allFinite()) throw ValidationError("IC must be finite");

    ControllerEvaluator ctrl(plant, spec, chain, params, kind);

    Trajectory traj;
    traj.min_h = std::numeric_limits<double>::infinity();
    traj.min_b = std::numeric_limits<double>::infinity();
    traj.min_chain = Vec::Constant(chain.r + 1, std::numeric_limits<double>::infinity());

    {
        Vec ch0 = chain.eval_chain(x0, u0);
        traj.safe_start = spec.b(u0) >= 0.0 && (ch0.array() >= 0.0).all();
    }

    Vec x = x0, u = u0;
    const long nsteps = std::lround(cfg.t_final / cfg.dt);

    Vec k1x(n), k1u(m), k2x(n), k2u(m), k3x(n), k3u(m), k4x(n), k4u(m);
    Vec xs(n), us(m);

    double below_since = -1.0;
    bool aborted = false, settled = false;

    for (long k = 0; k < nsteps; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;

        ControlEvaluation ev = ctrl.eval(x, u);
        if (!ev.qp.usable()) {
            traj.outcome = Outcome::Aborted;
            traj.outcome_time = t;
            traj.abort_reason =
                "qp infeasible at " + format_point(x, u) + "; " + ev.qp.certificate;
            aborted = true;
            break;
        }
        Vec f = plant.f(x, u);

        // traces and running minima
        Vec ch = chain.eval_chain(x, u);
        const double hv = ch(0);
        const double bv = spec.b(u);
        traj.min_h = std::min(traj.min_h, hv);
        traj.min_b = std::min(traj.min_b, bv);
        traj.min_chain = traj.min_chain.cwiseMin(ch);

        if (k % cfg.record_stride == 0) {
            traj.times.push_back(t);
            traj.states.push_back(x);
            traj.inputs.push_back(u);
            traj.h_trace.push_back(hv);
            traj.b_trace.push_back(bv);
            traj.chain_trace.push_back(ch);
            QpTraceEntry qe;
            qe.qnorm = ev.q.norm();
            qe.lambda_b = ev.qp.lambda1;
            qe.lambda_h = ev.qp.lambda2;
            qe.active = (ev.qp.active1 ? 1 : 0) | (ev.qp.active2 ? 2 : 0);
            traj.qp_trace.push_back(qe);
        }

        // settling: ||(f,q)||_inf below tol for a full window
        const double residual =
            std::max(f.lpNorm<Eigen::Infinity>(), ev.q.lpNorm<Eigen::Infinity>());
        if (residual < cfg.settle_tol) {
            if (below_since < 0.0) below_since = t;
            if (t - below_since >= cfg.settle_window) {
                traj.outcome = Outcome::Settled;
                traj.outcome_time = t;
                traj.settled_x = x;
                traj.settled_u = u;
                settled = true;
                break;
            }
        } else {
            below_since = -1.0;
        }

        // classical RK4 on the stacked state
        k1x = f;
        k1u = ev.q;
        auto stage = [&](double frac, const Vec& kx, const Vec& ku, Vec& ox, Vec& ou) {
            xs = x + frac * cfg.dt * kx;
            us = u + frac * cfg.dt * ku;
            ControlEvaluation s = ctrl.eval(xs, us);
            if (!s.qp.usable()) {
                traj.outcome = Outcome::Aborted;
                traj.outcome_time = t;
                traj.abort_reason = "qp infeasible at RK4 stage near " + format_point(xs, us) +
                                    "; " + s.qp.certificate;
                return false;
            }
            ox = plant.f(xs, us);
            ou = s.q;
            return true;
        };
        if (!stage(0.5, k1x, k1u, k2x, k2u) || !stage(0.5, k2x, k2u, k3x, k3u) ||
            !stage(1.0, k3x, k3u, k4x, k4u)) {
            aborted = true;
            break;
        }

        x += (cfg.dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        u += (cfg.dt / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);

        if (!x.allFinite() || !u.allFinite()) {
            traj.outcome = Outcome::Aborted;
            traj.outcome_time = t + cfg.dt;
            traj.abort_reason = "state became non-finite";
            aborted = true;
            break;
        }
    }

    if (!aborted && !settled) {
        traj.outcome = Outcome::TimedOut;
        traj.outcome_time = static_cast<double>(nsteps) * cfg.dt;
    }
    return traj;
}

void write_csv(const Trajectory& traj, std::ostream& os) {
    const int n = traj.states.empty() ? 0 : static_cast<int>(traj.states.front().size());
    const int m = traj.inputs.empty() ? 0 : static_cast<int>(traj.inputs.front().size());

    std::string line = "t";
    for (int i = 0; i < n; ++i) line += ",x" + std::to_string(i);
    for (int i = 0; i < m; ++i) line += ",u" + std::to_string(i);
    line += ",h,b,h_r,qnorm,lambda_b,lambda_h,active\n";
    os << line;

    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        line.clear();
        append_double(line, traj.times[k]);
        for (int i = 0; i < n; ++i) {
            line += ',';
            append_double(line, traj.states[k](i));
        }
        for (int i = 0; i < m; ++i) {
            line += ',';
            append_double(line, traj.inputs[k](i));
        }
        line += ',';
        append_double(line, traj.h_trace[k]);
        line += ',';
        append_double(line, traj.b_trace[k]);
        line += ',';
        append_double(line, traj.chain_trace[k](traj.chain_trace[k].size() - 1));
        line += ',';
        append_double(line, traj.qp_trace[k].qnorm);
        line += ',';
        append_double(line, traj.qp_trace[k].lambda_b);
        line += ',';
        append_double(line, traj.qp_trace[k].lambda_h);
        line += ',' + std::to_string(traj.qp_trace[k].active) + '\n';
        os << line;
    }
}

std::vector<SweepEntry> initial_condition_sweep(const PlantModel& plant,
                                                const ProblemSpec& spec,
                                                const BarrierChain& chain,
                                                const ControllerParams& params, RhsKind kind,
                                                const std::vector<std::pair<Vec, Vec>>& ics,
                                                const SimConfig& cfg, int jobs) {
    std::vector<SweepEntry> out(ics.size());
    if (ics.empty()) return out;

    if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
    jobs = std::max(1, std::min<int>(jobs, static_cast<int>(ics.size())));

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= ics.size()) return;
            Trajectory t =
                integrate(plant, spec, chain, params, kind, ics[i].first, ics[i].second, cfg);
            SweepEntry& e = out[i];
            e.index = i;
            e.x0 = ics[i].first;
            e.u0 = ics[i].second;
            e.outcome = t.outcome;
            e.settled_x = t.settled_x;
            e.settled_u = t.settled_u;
            e.min_h = t.min_h;
            e.min_b = t.min_b;
            e.min_chain = t.min_chain.minCoeff();
            e.safe_start = t.safe_start;
            e.abort_reason = t.abort_reason;
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return out;
}

}  // namespace sgflow
