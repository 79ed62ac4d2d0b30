#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "sgflow/qp.hpp"

using namespace sgflow;

namespace {

TwoConstraintQp make_qp(const Vec& d, const Vec& c1, double e1, const Vec& c2, double e2) {
    TwoConstraintQp qp;
    qp.d = d;
    qp.c1 = c1;
    qp.e1 = e1;
    qp.c2 = c2;
    qp.e2 = e2;
    return qp;
}

// for m = 1 feasibility is an interval check
bool feasible_1d(const TwoConstraintQp& qp) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    auto fold = [&](double c, double e) {
        if (c > 0)
            lo = std::max(lo, -e / c);
        else if (c < 0)
            hi = std::min(hi, -e / c);
        else if (e < 0)
            lo = std::numeric_limits<double>::infinity();
    };
    fold(qp.c1(0), qp.e1);
    fold(qp.c2(0), qp.e2);
    return lo <= hi;
}

}  // namespace

TEST_CASE("unconstrained minimizer already feasible") {
    auto qp = make_qp(Vec{{0.0, 0.0}}, Vec{{1.0, 0.0}}, 1.0, Vec{{0.0, 1.0}}, 1.0);
    QpResult r = solve_qp(qp);
    CHECK(r.status == QpResult::Status::Optimal);
    CHECK(r.q.norm() == doctest::Approx(0.0));
    CHECK(r.lambda1 == 0.0);
    CHECK(r.lambda2 == 0.0);
    CHECK_FALSE(r.active1);
    CHECK_FALSE(r.active2);
}

TEST_CASE("single halfspace projection") {
    auto qp = make_qp(Vec{{2.0, 0.0}}, Vec{{1.0, 0.0}}, 0.0, Vec{{0.0, 1.0}}, 5.0);
    QpResult r = solve_qp(qp);
    CHECK(r.status == QpResult::Status::Optimal);
    CHECK(r.q(0) == doctest::Approx(0.0));
    CHECK(r.q(1) == doctest::Approx(0.0));
    CHECK(r.lambda1 == doctest::Approx(2.0));
    CHECK(r.lambda2 == 0.0);
    CHECK(r.active1);
    CHECK_FALSE(r.active2);
}

TEST_CASE("oracle equivalence on random instances") {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    const int dims[] = {1, 2, 3, 5};
    int solved = 0, infeasible = 0;
    double worst_gap = 0.0, worst_kkt = 0.0;

    for (int trial = 0; trial < 1000; ++trial) {
        const int m = dims[trial % 4];
        TwoConstraintQp qp;
        qp.d = Vec::NullaryExpr(m, [&](Eigen::Index) { return dist(rng); });
        qp.c1 = Vec::NullaryExpr(m, [&](Eigen::Index) { return dist(rng); });
        qp.c2 = Vec::NullaryExpr(m, [&](Eigen::Index) { return dist(rng); });
        qp.e1 = dist(rng);
        qp.e2 = dist(rng);

        QpResult r = solve_qp(qp);
        if (m == 1 && !feasible_1d(qp)) {
            CHECK(r.status == QpResult::Status::Infeasible);
            ++infeasible;
            continue;
        }
        REQUIRE(r.usable());
        const double kkt = qp_kkt_residual(qp, r);
        worst_kkt = std::max(worst_kkt, kkt / (1.0 + qp.d.norm()));
        CHECK(kkt <= 1e-9 * (1.0 + qp.d.norm()));

        Vec q_oracle;
        REQUIRE(test::dykstra_qp_oracle(qp, q_oracle));
        worst_gap = std::max(worst_gap, (r.q - q_oracle).lpNorm<Eigen::Infinity>());
        CHECK((r.q - q_oracle).lpNorm<Eigen::Infinity>() <= 1e-7);
        ++solved;
    }
    MESSAGE("solved ", solved, ", infeasible ", infeasible, ", worst |dq| ", worst_gap,
            ", worst scaled kkt ", worst_kkt);
    CHECK(solved + infeasible == 1000);
}

TEST_CASE("kkt residual detects corruption") {
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        TwoConstraintQp qp;
        qp.d = Vec{{dist(rng), dist(rng)}};
        qp.c1 = Vec{{dist(rng), dist(rng)}};
        qp.c2 = Vec{{dist(rng), dist(rng)}};
        qp.e1 = dist(rng);
        qp.e2 = dist(rng);
        QpResult r = solve_qp(qp);
        REQUIRE(r.usable());
        QpResult bad = r;
        Vec dir = Vec{{dist(rng), dist(rng)}};
        if (dir.norm() == 0) continue;
        bad.q += 1e-3 * dir.normalized();
        CHECK(qp_kkt_residual(qp, bad) >= 1e-4);
    }
}

TEST_CASE("minimality against random feasible points") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int m = 1 + trial % 4;
        // build around a known feasible point so feasibility is guaranteed
        Vec q_feas = Vec::NullaryExpr(m, [&](Eigen::Index) { return dist(rng); });
        TwoConstraintQp qp;
        qp.d = Vec::NullaryExpr(m, [&](Eigen::Index) { return dist(rng); });
        qp.c1 = Vec::NullaryExpr(m, [&](Eigen::Index) { return dist(rng); });
        qp.c2 = Vec::NullaryExpr(m, [&](Eigen::Index) { return dist(rng); });
        qp.e1 = -qp.c1.dot(q_feas) + std::abs(dist(rng));
        qp.e2 = -qp.c2.dot(q_feas) + std::abs(dist(rng));
        QpResult r = solve_qp(qp);
        REQUIRE(r.status == QpResult::Status::Optimal);
        CHECK((r.q + qp.d).norm() <= (q_feas + qp.d).norm() + 1e-12);
    }
}

TEST_CASE("homogeneity: scaling a row rescales its multiplier only") {
    auto qp = make_qp(Vec{{1.5, -0.4}}, Vec{{0.8, 0.3}}, -1.0, Vec{{-0.2, 1.0}}, 0.05);
    QpResult r = solve_qp(qp);
    REQUIRE(r.status == QpResult::Status::Optimal);
    for (double t : {0.5, 2.0, 13.0}) {
        TwoConstraintQp scaled = qp;
        scaled.c1 *= t;
        scaled.e1 *= t;
        QpResult rs = solve_qp(scaled);
        REQUIRE(rs.status == QpResult::Status::Optimal);
        CHECK((rs.q - r.q).norm() <= 1e-12 * (1.0 + r.q.norm()));
        CHECK(rs.lambda1 == doctest::Approx(r.lambda1 / t).epsilon(1e-12));
        CHECK(rs.lambda2 == doctest::Approx(r.lambda2).epsilon(1e-12));
    }
}

TEST_CASE("degenerate dependent active rows are solved and flagged") {
    // both rows are the same hyperplane boundary; -d violates them
    auto qp = make_qp(Vec{{1.0, 1.0}}, Vec{{1.0, 0.0}}, 0.0, Vec{{2.0, 0.0}}, 0.0);
    QpResult r = solve_qp(qp);
    // the single-active enumeration resolves the tie; the result is optimal
    REQUIRE(r.usable());
    CHECK(r.q(0) == doctest::Approx(0.0));
    CHECK(r.q(1) == doctest::Approx(-1.0));
    CHECK(qp_kkt_residual(qp, r) <= 1e-9 * (1.0 + qp.d.norm()));

    // force the both-active branch: opposed rows with zero slab width and a
    // pull that needs both multipliers is rank-1 in the Gram sense
    auto tight = make_qp(Vec{{0.0, -2.0}}, Vec{{0.0, 1.0}}, 0.0, Vec{{0.0, -1.0}}, 0.0);
    QpResult rt = solve_qp(tight);
    REQUIRE(rt.usable());
    CHECK(rt.q(1) == doctest::Approx(0.0));
}

TEST_CASE("infeasibility certificates") {
    SUBCASE("anti-parallel rows with empty slab") {
        auto qp = make_qp(Vec{{0.3, 0.1}}, Vec{{1.0, 0.0}}, -1.0, Vec{{-2.0, 0.0}}, 0.0);
        // c1 q >= 1 and c2 q = -2 q1 >= 0 conflict
        QpResult r = solve_qp(qp);
        CHECK(r.status == QpResult::Status::Infeasible);
        CHECK(!r.certificate.empty());
    }
    SUBCASE("zero row with negative offset") {
        auto qp = make_qp(Vec{{0.0}}, Vec{{0.0}}, -0.5, Vec{{1.0}}, 1.0);
        QpResult r = solve_qp(qp);
        CHECK(r.status == QpResult::Status::Infeasible);
    }
    SUBCASE("zero row with nonnegative offset is vacuous") {
        auto qp = make_qp(Vec{{1.0}}, Vec{{0.0}}, 0.5, Vec{{1.0}}, 1.0);
        QpResult r = solve_qp(qp);
        CHECK(r.status == QpResult::Status::Optimal);
        CHECK(r.q(0) == doctest::Approx(-1.0));
    }
}
