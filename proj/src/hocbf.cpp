#include "sgflow/hocbf.hpp"

#include <cmath>
#include <limits>

namespace sgflow {

namespace {

// one central-difference level of the recursive FD chain
double fd_chain_value(const BarrierChain& c, int i, const Vec& x, const Vec& u) {
    if (i == 0) return c.spec.h(x);
    const double mag = std::max(x.lpNorm<Eigen::Infinity>(), u.lpNorm<Eigen::Infinity>());
    const double s = c.fd_step_base * (1.0 + mag);
    Vec f = c.plant.f(x, u);
    double dir = 0.0;
    Vec p = x;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        p(j) = x(j) + s;
        const double vp = fd_chain_value(c, i - 1, p, u);
        p(j) = x(j) - s;
        const double vm = fd_chain_value(c, i - 1, p, u);
        p(j) = x(j);
        dir += (vp - vm) / (2.0 * s) * f(j);
    }
    return dir + c.beta * fd_chain_value(c, i - 1, x, u);
}

Vec fd_level_grad_x(const BarrierChain& c, int i, const Vec& x, const Vec& u) {
    const double mag = std::max(x.lpNorm<Eigen::Infinity>(), u.lpNorm<Eigen::Infinity>());
    const double s = c.fd_step_base * (1.0 + mag);
    Vec g(x.size());
    Vec p = x;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        p(j) = x(j) + s;
        const double vp = fd_chain_value(c, i, p, u);
        p(j) = x(j) - s;
        const double vm = fd_chain_value(c, i, p, u);
        p(j) = x(j);
        g(j) = (vp - vm) / (2.0 * s);
    }
    return g;
}

Vec fd_level_grad_u(const BarrierChain& c, int i, const Vec& x, const Vec& u) {
    const double mag = std::max(x.lpNorm<Eigen::Infinity>(), u.lpNorm<Eigen::Infinity>());
    const double s = c.fd_step_base * (1.0 + mag);
    Vec g(u.size());
    Vec p = u;
    for (Eigen::Index j = 0; j < u.size(); ++j) {
        p(j) = u(j) + s;
        const double vp = fd_chain_value(c, i, x, p);
        p(j) = u(j) - s;
        const double vm = fd_chain_value(c, i, x, p);
        p(j) = u(j);
        g(j) = (vp - vm) / (2.0 * s);
    }
    return g;
}

Vec stack(const Vec& x, const Vec& u) {
    Vec z(x.size() + u.size());
    z << x, u;
    return z;
}

}  // namespace

Vec BarrierChain::eval_chain(const Vec& x, const Vec& u) const {
    Vec out(r + 1);
    if (backend == Backend::AnalyticLinearChain) {
        Vec z = stack(x, u);
        for (int i = 0; i <= r; ++i) out(i) = levels[i].value(z);
    } else {
        for (int i = 0; i <= r; ++i) out(i) = fd_chain_value(*this, i, x, u);
    }
    return out;
}

double BarrierChain::level_value(int i, const Vec& x, const Vec& u) const {
    if (backend == Backend::AnalyticLinearChain) return levels[i].value(stack(x, u));
    return fd_chain_value(*this, i, x, u);
}

Vec BarrierChain::level_du(int i, const Vec& x, const Vec& u) const {
    if (backend == Backend::AnalyticLinearChain)
        return levels[i].gradient(stack(x, u)).tail(m);
    if (i == 0) return Vec::Zero(m);
    return fd_level_grad_u(*this, i, x, u);
}

Vec BarrierChain::dh_r_dx(const Vec& x, const Vec& u) const {
    if (backend == Backend::AnalyticLinearChain)
        return levels[r].gradient(stack(x, u)).head(n);
    return fd_level_grad_x(*this, r, x, u);
}

Vec BarrierChain::dh_r_du(const Vec& x, const Vec& u) const { return level_du(r, x, u); }

BarrierChain build_chain(const PlantModel& plant, const ProblemSpec& spec, double beta, int r,
                         std::optional<BarrierChain::Backend> force_backend) {
    if (beta <= 0.0) throw ValidationError("beta must be positive");
    if (r < 1) throw ValidationError("relative degree must be at least 1");

    const bool analytic_ok =
        plant.kind == PlantModel::Kind::LinearAB && spec.h_quadratic.has_value();
    BarrierChain::Backend backend =
        force_backend.value_or(analytic_ok ? BarrierChain::Backend::AnalyticLinearChain
                                           : BarrierChain::Backend::FiniteDifferenceChain);
    if (backend == BarrierChain::Backend::AnalyticLinearChain && !analytic_ok)
        throw UnsupportedAnalytic(
            "analytic chain needs a LinearAB plant and an at-most-quadratic h");
    if (backend == BarrierChain::Backend::FiniteDifferenceChain && r > 3)
        throw ValidationError("finite-difference chain supports r <= 3");

    BarrierChain c;
    c.beta = beta;
    c.r = r;
    c.n = plant.n;
    c.m = plant.m;
    c.backend = backend;
    c.plant = plant;
    c.spec = spec;
    // nested central differences amplify rounding like eps / step^depth;
    // balancing against truncation for a depth of r+1 differentiations gives
    // step ~ eps^(1/(r+3))
    c.fd_step_base = std::pow(std::numeric_limits<double>::epsilon(), 1.0 / (3.0 + r));

    if (backend == BarrierChain::Backend::AnalyticLinearChain) {
        const int n = plant.n, m = plant.m;
        const auto& hq = *spec.h_quadratic;
        Mat F(n, n + m);  // f(x,u) = F z
        F << plant.A, plant.B;

        QuadraticForm h0;
        h0.c = hq.c;
        h0.g = Vec::Zero(n + m);
        h0.g.head(n) = hq.g;
        h0.Q = Mat::Zero(n + m, n + m);
        h0.Q.topLeftCorner(n, n) = hq.Q;
        c.levels.push_back(h0);

        for (int i = 1; i <= r; ++i) {
            const QuadraticForm& prev = c.levels.back();
            Mat P = prev.Q.topRows(n);  // x-rows of Q_{i-1}
            QuadraticForm next;
            next.c = beta * prev.c;
            next.g = F.transpose() * prev.g.head(n) + beta * prev.g;
            next.Q = beta * prev.Q + P.transpose() * F + F.transpose() * P;
            c.levels.push_back(next);
        }
    }
    return c;
}

ChainPartials chain_partials(const BarrierChain& chain, const Vec& x, const Vec& u) {
    ChainPartials p;
    p.dh_r_dx = chain.dh_r_dx(x, u);
    p.dh_r_du = chain.dh_r_du(x, u);
    p.drift = p.dh_r_dx.dot(chain.plant.f(x, u));
    return p;
}

int detect_relative_degree(const PlantModel& plant, const ProblemSpec& spec, double beta,
                           int r_max, const std::vector<std::pair<Vec, Vec>>& samples,
                           RelativeDegreeReport* report, double tol_zero) {
    if (r_max < 1) throw ValidationError("r_max must be at least 1");
    if (samples.empty()) throw ValidationError("relative-degree detection needs samples");

    const bool analytic_ok =
        plant.kind == PlantModel::Kind::LinearAB && spec.h_quadratic.has_value();
    const int build_r = analytic_ok ? r_max : std::min(r_max, 3);
    BarrierChain chain = build_chain(plant, spec, beta, build_r);

    for (int i = 1; i <= build_r; ++i) {
        std::size_t nonzero = 0;
        std::vector<std::size_t> zeros;
        for (std::size_t k = 0; k < samples.size(); ++k) {
            const double norm_du =
                chain.level_du(i, samples[k].first, samples[k].second).norm();
            if (norm_du > tol_zero)
                ++nonzero;
            else
                zeros.push_back(k);
        }
        if (2 * nonzero > samples.size()) {
            if (report) {
                report->r = i;
                report->degenerate_samples = zeros;
                report->votes_nonzero = nonzero;
                report->votes_zero = zeros.size();
            }
            return i;
        }
    }
    throw NoRelativeDegree(r_max);
}

}  // namespace sgflow
