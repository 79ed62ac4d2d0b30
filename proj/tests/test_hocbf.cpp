#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "sgflow/hocbf.hpp"

using namespace sgflow;

namespace {

struct Fixture {
    PlantModel plant;
    ProblemSpec spec;
};

// h = 1 - x1 - x2 over the diagonal plant
Fixture spurious_fixture() {
    Fixture fx;
    fx.plant = make_linear_plant(Mat{{-2.0, 0.0}, {0.0, -4.0}}, Mat::Identity(2, 2));
    PolyObjective phi;
    phi.terms = {{0, 1, 2.0, 1.0}, {1, 1, 2.0, 1.0}};
    QuadraticForm h;
    h.c = 1.0;
    h.g = Vec{{-1.0, -1.0}};
    h.Q = Mat::Zero(2, 2);
    QuadraticForm b;
    b.c = 1.0;
    b.g = Vec::Zero(2);
    b.Q = Mat::Zero(2, 2);
    fx.spec = make_problem_spec(2, 2, phi, h, b);
    return fx;
}

// elliptical h over the coupled plant
Fixture convex_fixture() {
    Fixture fx;
    fx.plant = make_linear_plant(Mat{{-1.3, -0.3}, {-1.4, -0.5}}, Mat::Identity(2, 2));
    PolyObjective phi;
    phi.terms = {{0, 1, -1.2, 1.0}, {1, 1, 1.0, 1.0}};
    QuadraticForm h;
    h.c = 0.9;
    h.g = Vec{{0.1, 0.6}};
    h.Q = Mat{{-0.25, 0.0}, {0.0, -1.0}};
    QuadraticForm b;
    b.c = 12.0;
    b.g = Vec::Zero(2);
    b.Q = -Mat::Identity(2, 2);
    fx.spec = make_problem_spec(2, 2, phi, h, b);
    return fx;
}

}  // namespace

TEST_CASE("chain values and partials on the diagonal plant at the origin") {
    Fixture fx = spurious_fixture();
    BarrierChain chain = build_chain(fx.plant, fx.spec, 1.0, 1);
    CHECK(chain.backend == BarrierChain::Backend::AnalyticLinearChain);

    Vec x0 = Vec::Zero(2), u0 = Vec::Zero(2);
    Vec ch = chain.eval_chain(x0, u0);
    CHECK(ch(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ch(1) == doctest::Approx(1.0).epsilon(1e-14));

    ChainPartials cp = chain_partials(chain, x0, u0);
    CHECK(cp.dh_r_dx(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(cp.dh_r_dx(1) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(cp.dh_r_du(0) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(cp.dh_r_du(1) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(cp.drift == doctest::Approx(0.0));
}

TEST_CASE("h0 equals h everywhere") {
    Fixture fx = convex_fixture();
    BarrierChain chain = build_chain(fx.plant, fx.spec, 1.7, 2);
    std::mt19937 rng(5);
    for (int k = 0; k < 50; ++k) {
        auto [x, u] = test::random_point(rng, 2, 2);
        CHECK(chain.level_value(0, x, u) == doctest::Approx(fx.spec.h(x)).epsilon(1e-12));
    }
}

TEST_CASE("steady-state scaling h_i = beta^i h") {
    Fixture fx = convex_fixture();
    const double beta = 1.6;
    BarrierChain chain = build_chain(fx.plant, fx.spec, beta, 3);
    SteadyStateContext ctx(fx.plant);
    std::mt19937 rng(7);
    for (int k = 0; k < 100; ++k) {
        auto [unused, u] = test::random_point(rng, 2, 2);
        SteadyState ss = ctx.solve(u);
        Vec ch = chain.eval_chain(ss.x, u);
        double scale = 1.0;
        for (int i = 0; i <= chain.r; ++i) {
            CHECK(std::abs(ch(i) - scale * fx.spec.h(ss.x)) <= 1e-8);
            scale *= beta;
        }
    }
}

TEST_CASE("steady state of any plant forces drift zero and beta^i membership") {
    // at a steady state the barrier row reduces to dh_r/du q + gamma beta^r h >= 0
    Fixture fx = spurious_fixture();
    const double beta = 2.0;
    BarrierChain chain = build_chain(fx.plant, fx.spec, beta, 2);
    SteadyState ss = steady_state(fx.plant, Vec{{0.6, -0.4}});
    ChainPartials cp = chain_partials(chain, ss.x, Vec{{0.6, -0.4}});
    CHECK(std::abs(cp.drift) <= 1e-12);
    // membership in every S_i is preserved as beta grows at steady-state
    // feasible points: values scale exactly as beta^i h
    for (double beta2 : {0.5, 1.0, 4.0, 16.0}) {
        BarrierChain c2 = build_chain(fx.plant, fx.spec, beta2, 2);
        Vec ch = c2.eval_chain(ss.x, Vec{{0.6, -0.4}});
        const double h = fx.spec.h(ss.x);
        CHECK(std::abs(ch(1) - beta2 * h) <= 1e-10);
        CHECK(std::abs(ch(2) - beta2 * beta2 * h) <= 1e-10);
        if (h >= 0) {
            CHECK(ch(1) >= -1e-12);
            CHECK(ch(2) >= -1e-12);
        }
    }
}

TEST_CASE("recursion matches a directional-derivative oracle") {
    Fixture fx = convex_fixture();
    const double beta = 1.3;
    BarrierChain chain = build_chain(fx.plant, fx.spec, beta, 2);
    std::mt19937 rng(13);
    for (int k = 0; k < 100; ++k) {
        auto [x, u] = test::random_point(rng, 2, 2);
        for (int i = 1; i <= 2; ++i) {
            // h_i - beta h_{i-1} should equal the derivative of h_{i-1} along f
            Vec grad = test::oracle_gradient(
                [&](const Vec& xx) { return chain.level_value(i - 1, xx, u); }, x, 1e-6);
            const double dir = grad.dot(fx.plant.f(x, u));
            const double lhs = chain.level_value(i, x, u) - beta * chain.level_value(i - 1, x, u);
            CHECK(std::abs(lhs - dir) <= 1e-4 * (1.0 + std::abs(dir)));
        }
    }
}

TEST_CASE("analytic and finite-difference backends agree") {
    Fixture fx = convex_fixture();
    BarrierChain an = build_chain(fx.plant, fx.spec, 1.1, 2);
    BarrierChain fd = build_chain(fx.plant, fx.spec, 1.1, 2,
                                  BarrierChain::Backend::FiniteDifferenceChain);
    std::mt19937 rng(19);
    for (int k = 0; k < 25; ++k) {
        auto [x, u] = test::random_point(rng, 2, 2);
        Vec ca = an.eval_chain(x, u);
        Vec cf = fd.eval_chain(x, u);
        for (int i = 0; i <= 2; ++i)
            CHECK(std::abs(ca(i) - cf(i)) <= 1e-4 * (1.0 + std::abs(ca(i))));

        ChainPartials pa = chain_partials(an, x, u);
        ChainPartials pf = chain_partials(fd, x, u);
        CHECK((pa.dh_r_dx - pf.dh_r_dx).norm() <= 1e-4 * (1.0 + pa.dh_r_dx.norm()));
        CHECK((pa.dh_r_du - pf.dh_r_du).norm() <= 1e-4 * (1.0 + pa.dh_r_du.norm()));
        CHECK(std::abs(pa.drift - pf.drift) <= 1e-4 * (1.0 + std::abs(pa.drift)));
    }
}

TEST_CASE("backend selection and guards") {
    Fixture fx = convex_fixture();
    auto f = [](const Vec& x, const Vec& u) -> Vec {
        Vec out(2);
        out(0) = -x(0) + std::sin(u(0));
        out(1) = -x(1) + u(1);
        return out;
    };
    PlantModel nonlinear = make_smooth_plant(2, 2, f);
    CHECK_THROWS_AS(build_chain(nonlinear, fx.spec, 1.0, 1,
                                BarrierChain::Backend::AnalyticLinearChain),
                    UnsupportedAnalytic);
    BarrierChain chain = build_chain(nonlinear, fx.spec, 1.0, 1);
    CHECK(chain.backend == BarrierChain::Backend::FiniteDifferenceChain);
    CHECK_THROWS_AS(build_chain(nonlinear, fx.spec, 1.0, 4), ValidationError);
    CHECK_THROWS_AS(build_chain(fx.plant, fx.spec, -1.0, 1), ValidationError);
}

TEST_CASE("relative degree detection") {
    std::mt19937 rng(29);

    SUBCASE("B = identity with quadratic h gives r = 1") {
        Fixture fx = convex_fixture();
        std::vector<std::pair<Vec, Vec>> samples;
        for (int k = 0; k < 10; ++k) samples.push_back(test::random_point(rng, 2, 2));
        RelativeDegreeReport rep;
        CHECK(detect_relative_degree(fx.plant, fx.spec, 1.0, 3, samples, &rep) == 1);
        CHECK(rep.degenerate_samples.empty());
    }

    SUBCASE("degenerate samples flagged where dh1/du vanishes") {
        // plant B = (0;1), h = 4 - ||x||^2: dh1/du = -2 x2
        PlantModel plant = make_linear_plant(Mat{{-1.0, 1.0}, {0.0, -1.0}}, Mat{{0.0}, {1.0}});
        PolyObjective phi;
        phi.terms = {{0, 1, 1.4, 1.0}, {1, 1, 1.4, 1.0}};
        QuadraticForm h;
        h.c = 4.0;
        h.g = Vec::Zero(2);
        h.Q = -Mat::Identity(2, 2);
        QuadraticForm b;
        b.c = 4.0;
        b.g = Vec::Zero(1);
        b.Q = Mat{{-1.0}};
        ProblemSpec spec = make_problem_spec(2, 1, phi, h, b);

        std::vector<std::pair<Vec, Vec>> samples;
        for (int k = 0; k < 9; ++k) samples.push_back(test::random_point(rng, 2, 1));
        samples.push_back({Vec{{0.7, 0.0}}, Vec{{0.2}}});  // x2 = 0 degeneracy
        RelativeDegreeReport rep;
        CHECK(detect_relative_degree(plant, spec, 1.0, 3, samples, &rep) == 1);
        REQUIRE(rep.degenerate_samples.size() == 1);
        CHECK(rep.degenerate_samples[0] == 9);
    }

    SUBCASE("constant h never reaches the input") {
        Fixture fx = convex_fixture();
        QuadraticForm hconst;
        hconst.c = 2.0;
        hconst.g = Vec::Zero(2);
        hconst.Q = Mat::Zero(2, 2);
        ProblemSpec spec = make_problem_spec(2, 2, PolyObjective{}, hconst,
                                             *fx.spec.b_quadratic);
        std::vector<std::pair<Vec, Vec>> samples;
        for (int k = 0; k < 5; ++k) samples.push_back(test::random_point(rng, 2, 2));
        CHECK_THROWS_AS(detect_relative_degree(fx.plant, spec, 1.0, 3, samples),
                        NoRelativeDegree);
    }
}
