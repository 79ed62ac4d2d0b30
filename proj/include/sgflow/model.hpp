#pragma once

#include <functional>
#include <optional>

#include "sgflow/types.hpp"

namespace sgflow {

// quadratic scalar field c + g'v + v'Qv (Q symmetric)
struct QuadraticForm {
    double c = 0.0;
    Vec g;
    Mat Q;

    double value(const Vec& v) const { return c + g.dot(v) + v.dot(Q * v); }
    Vec gradient(const Vec& v) const { return g + 2.0 * (Q * v); }
    Mat hessian() const { return 2.0 * Q; }
};

// sum of per-coordinate terms coef * (v_i^power - center)^2; covers the
// shifted quadratics (power 1) and separable quartics (power 2) used by
// the bundled studies
struct PolyObjective {
    struct Term {
        int index = 0;
        int power = 1;
        double center = 0.0;
        double coef = 1.0;
    };
    std::vector<Term> terms;

    double value(const Vec& v) const;
    Vec gradient(const Vec& v) const;
};

struct PlantModel {
    enum class Kind { LinearAB, GeneralSmooth };

    int n = 0;
    int m = 0;
    Kind kind = Kind::GeneralSmooth;
    Mat A, B;  // LinearAB only

    std::function<Vec(const Vec&, const Vec&)> f;
    std::function<Mat(const Vec&, const Vec&)> dfdx;
    std::function<Mat(const Vec&, const Vec&)> dfdu;
};

/// Linear plant xdot = A x + B u. Rejects non-Hurwitz A.
PlantModel make_linear_plant(const Mat& A, const Mat& B);

/// General smooth plant; missing Jacobians fall back to central differences.
/// The caller is responsible for the plant having a unique globally
/// exponentially stable equilibrium per constant input; this is not checkable
/// here.
PlantModel make_smooth_plant(int n, int m,
                             std::function<Vec(const Vec&, const Vec&)> f,
                             std::function<Mat(const Vec&, const Vec&)> dfdx = nullptr,
                             std::function<Mat(const Vec&, const Vec&)> dfdu = nullptr);

struct NewtonOptions {
    int max_iters = 50;
    double residual_tol = 1e-10;
    double cond_limit = 1e12;
};

struct SteadyState {
    Vec x;
    Mat dwdu;  // -(df/dx)^{-1} (df/du) at (x,u)
};

/// Steady-state map w(u) with f(w(u),u)=0. Linear plants solve in closed
/// form; smooth plants run Newton with a warm start carried across calls.
/// One context per simulation run; not shareable across concurrent runs.
class SteadyStateContext {
  public:
    explicit SteadyStateContext(const PlantModel& plant, NewtonOptions opts = {});

    SteadyState solve(const Vec& u);

    // closed-loop fast path: dwdu is constant for linear plants
    const Mat* constant_dwdu() const { return linear_ ? &M_ : nullptr; }

  private:
    PlantModel plant_;
    NewtonOptions opts_;
    bool linear_ = false;
    Mat M_;  // -A^{-1} B
    Vec warm_;
    bool has_warm_ = false;
};

/// One-shot convenience wrapper around SteadyStateContext.
SteadyState steady_state(const PlantModel& plant, const Vec& u);

struct Regularization {
    double p = 0.0;
    double margin = 0.0;
};

struct ProblemSpec {
    int n = 0;
    int m = 0;

    std::function<double(const Vec&)> phi;
    std::function<Vec(const Vec&)> grad_phi;
    std::function<double(const Vec&)> h;
    std::function<Vec(const Vec&)> grad_h;
    std::function<Mat(const Vec&)> hess_h;
    std::function<double(const Vec&)> b;
    std::function<Vec(const Vec&)> grad_b;

    std::optional<Regularization> regularization;

    // set when h/b are known quadratics (enables the analytic barrier chain)
    std::optional<QuadraticForm> h_quadratic;
    std::optional<QuadraticForm> b_quadratic;
};

/// Assemble a spec from typed coefficient blocks (all derivatives analytic).
ProblemSpec make_problem_spec(int n, int m, const PolyObjective& phi,
                              const QuadraticForm& h, const QuadraticForm& b);

/// Gradient of the effective objective: grad phi, plus the penalty term
/// -2 p (margin - h(x)) grad h(x) when regularization is present.
Vec effective_objective_gradient(const ProblemSpec& spec, const Vec& x);

/// Effective objective value (phi plus penalty when present).
double effective_objective(const ProblemSpec& spec, const Vec& x);

}  // namespace sgflow
