#include "sgflow/model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "sgflow/numdiff.hpp"

namespace sgflow {

double PolyObjective::value(const Vec& v) const {
    double s = 0.0;
    for (const auto& t : terms) {
        const double base = std::pow(v(t.index), t.power) - t.center;
        s += t.coef * base * base;
    }
    return s;
}

Vec PolyObjective::gradient(const Vec& v) const {
    Vec g = Vec::Zero(v.size());
    for (const auto& t : terms) {
        const double xi = v(t.index);
        const double base = std::pow(xi, t.power) - t.center;
        g(t.index) += t.coef * 2.0 * base * t.power * std::pow(xi, t.power - 1);
    }
    return g;
}

PlantModel make_linear_plant(const Mat& A, const Mat& B) {
    if (A.rows() != A.cols()) throw ValidationError("A must be square");
    if (B.rows() != A.rows()) throw ValidationError("B must have as many rows as A");

    Eigen::EigenSolver<Mat> es(A);
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        if (es.eigenvalues()(i).real() >= 0.0) {
            std::ostringstream os;
            os << "A is not Hurwitz; eigenvalues:";
            for (Eigen::Index j = 0; j < A.rows(); ++j)
                os << " (" << es.eigenvalues()(j).real() << (es.eigenvalues()(j).imag() >= 0 ? "+" : "")
                   << es.eigenvalues()(j).imag() << "i)";
            throw NotHurwitz(os.str());
        }
    }

    PlantModel p;
    p.n = static_cast<int>(A.rows());
    p.m = static_cast<int>(B.cols());
    p.kind = PlantModel::Kind::LinearAB;
    p.A = A;
    p.B = B;
    p.f = [A, B](const Vec& x, const Vec& u) -> Vec { return A * x + B * u; };
    p.dfdx = [A](const Vec&, const Vec&) -> Mat { return A; };
    p.dfdu = [B](const Vec&, const Vec&) -> Mat { return B; };
    return p;
}

PlantModel make_smooth_plant(int n, int m, std::function<Vec(const Vec&, const Vec&)> f,
                             std::function<Mat(const Vec&, const Vec&)> dfdx,
                             std::function<Mat(const Vec&, const Vec&)> dfdu) {
    PlantModel p;
    p.n = n;
    p.m = m;
    p.kind = PlantModel::Kind::GeneralSmooth;
    p.f = std::move(f);
    auto fcopy = p.f;
    if (dfdx) {
        p.dfdx = std::move(dfdx);
    } else {
        p.dfdx = [fcopy](const Vec& x, const Vec& u) -> Mat {
            return fd_jacobian([&](const Vec& xx) { return fcopy(xx, u); }, x);
        };
    }
    if (dfdu) {
        p.dfdu = std::move(dfdu);
    } else {
        p.dfdu = [fcopy](const Vec& x, const Vec& u) -> Mat {
            return fd_jacobian([&](const Vec& uu) { return fcopy(x, uu); }, u);
        };
    }
    return p;
}

SteadyStateContext::SteadyStateContext(const PlantModel& plant, NewtonOptions opts)
    : plant_(plant), opts_(opts) {
    if (plant_.kind == PlantModel::Kind::LinearAB) {
        linear_ = true;
        M_ = -plant_.A.partialPivLu().solve(plant_.B);
    }
}

SteadyState SteadyStateContext::solve(const Vec& u) {
    if (linear_) {
        return SteadyState{M_ * u, M_};
    }

    Vec x = has_warm_ ? warm_ : Vec::Zero(plant_.n);
    double res = std::numeric_limits<double>::infinity();
    for (int it = 0; it <= opts_.max_iters; ++it) {
        Vec fx = plant_.f(x, u);
        res = fx.norm();
        Mat Jx = plant_.dfdx(x, u);
        Eigen::JacobiSVD<Mat> svd(Jx, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        if (sv(sv.size() - 1) <= 0.0 || sv(0) / sv(sv.size() - 1) > opts_.cond_limit)
            throw SingularJacobian("df/dx numerically singular during steady-state solve");
        if (res <= opts_.residual_tol) {
            warm_ = x;
            has_warm_ = true;
            Mat dwdu = -svd.solve(plant_.dfdu(x, u));
            return SteadyState{x, dwdu};
        }
        if (it < opts_.max_iters) x -= svd.solve(fx);
    }
    throw NewtonDiverged(res);
}

SteadyState steady_state(const PlantModel& plant, const Vec& u) {
    SteadyStateContext ctx(plant);
    return ctx.solve(u);
}

ProblemSpec make_problem_spec(int n, int m, const PolyObjective& phi, const QuadraticForm& h,
                              const QuadraticForm& b) {
    ProblemSpec s;
    s.n = n;
    s.m = m;
    s.phi = [phi](const Vec& x) { return phi.value(x); };
    s.grad_phi = [phi](const Vec& x) { return phi.gradient(x); };
    s.h = [h](const Vec& x) { return h.value(x); };
    s.grad_h = [h](const Vec& x) { return h.gradient(x); };
    s.hess_h = [h](const Vec&) { return h.hessian(); };
    s.b = [b](const Vec& u) { return b.value(u); };
    s.grad_b = [b](const Vec& u) { return b.gradient(u); };
    s.h_quadratic = h;
    s.b_quadratic = b;
    return s;
}

Vec effective_objective_gradient(const ProblemSpec& spec, const Vec& x) {
    Vec g = spec.grad_phi(x);
    if (spec.regularization) {
        const auto& r = *spec.regularization;
        g -= 2.0 * r.p * (r.margin - spec.h(x)) * spec.grad_h(x);
    }
    return g;
}

double effective_objective(const ProblemSpec& spec, const Vec& x) {
    double v = spec.phi(x);
    if (spec.regularization) {
        const auto& r = *spec.regularization;
        const double gap = r.margin - spec.h(x);
        v += r.p * gap * gap;
    }
    return v;
}

}  // namespace sgflow
