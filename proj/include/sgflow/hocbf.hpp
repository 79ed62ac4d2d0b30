#pragma once

#include <vector>

#include "sgflow/model.hpp"

namespace sgflow {

// barrier chain h_0(x,u) = h(x), h_i = (dh_{i-1}/dx) f + beta h_{i-1}
//
// For linear plants with quadratic h every level stays quadratic in the
// stacked variable z = (x,u); the analytic backend carries those forms
// exactly. Everything else goes through nested central differences.
struct BarrierChain {
    enum class Backend { AnalyticLinearChain, FiniteDifferenceChain };

    double beta = 1.0;
    int r = 1;
    int n = 0;
    int m = 0;
    Backend backend = Backend::AnalyticLinearChain;

    // analytic backend: levels[i] is h_i as a quadratic on z = (x;u)
    std::vector<QuadraticForm> levels;

    // finite-difference backend
    PlantModel plant;
    ProblemSpec spec;
    double fd_step_base = 1e-4;

    /// (h_0(x,u), ..., h_r(x,u))
    Vec eval_chain(const Vec& x, const Vec& u) const;

    double level_value(int i, const Vec& x, const Vec& u) const;

    /// row dh_i/du as a vector
    Vec level_du(int i, const Vec& x, const Vec& u) const;

    Vec dh_r_dx(const Vec& x, const Vec& u) const;
    Vec dh_r_du(const Vec& x, const Vec& u) const;
};

/// Build the chain for the given plant/spec. The analytic backend is chosen
/// when the plant is LinearAB and h carries a quadratic form; requesting it
/// otherwise raises UnsupportedAnalytic. The FD backend caps r at 3 to bound
/// error amplification.
BarrierChain build_chain(const PlantModel& plant, const ProblemSpec& spec, double beta, int r,
                         std::optional<BarrierChain::Backend> force_backend = std::nullopt);

struct ChainPartials {
    Vec dh_r_dx;
    Vec dh_r_du;
    double drift = 0.0;  // dh_r/dx . f(x,u)
};

ChainPartials chain_partials(const BarrierChain& chain, const Vec& x, const Vec& u);

struct RelativeDegreeReport {
    int r = 0;
    // sample indices where dh_r/du vanished although the majority did not
    std::vector<std::size_t> degenerate_samples;
    std::size_t votes_nonzero = 0;
    std::size_t votes_zero = 0;
};

/// Smallest r <= r_max at which the input shows up in the chain, decided by
/// majority vote over the samples (measure-zero degeneracies are tolerated
/// and reported). Throws NoRelativeDegree if the input never appears.
int detect_relative_degree(const PlantModel& plant, const ProblemSpec& spec, double beta,
                           int r_max, const std::vector<std::pair<Vec, Vec>>& samples,
                           RelativeDegreeReport* report = nullptr, double tol_zero = 1e-9);

}  // namespace sgflow
