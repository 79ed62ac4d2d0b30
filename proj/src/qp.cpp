#include "sgflow/qp.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace sgflow {

namespace {

constexpr double kZeroRow = 1e-30;     // squared-norm cutoff for a constant row
constexpr double kTieBand = 1e-12;     // boundary ties count as inactive-feasible
constexpr double kGramCutoff = 1e-12;  // relative rank cutoff for the 2x2 Gram

struct Row {
    const Vec* c;
    double e;
    double nn;  // ||c||^2
    int id;
};

}  // namespace

QpResult solve_qp(const TwoConstraintQp& qp) {
    const Eigen::Index m = qp.d.size();
    QpResult res;
    res.q = Vec::Zero(m);

    const double scale = 1.0 + qp.d.lpNorm<Eigen::Infinity>();
    const double feas_tol = kTieBand * (scale + std::abs(qp.e1) + std::abs(qp.e2));

    const double n1 = qp.c1.squaredNorm();
    const double n2 = qp.c2.squaredNorm();

    // constant rows are either vacuous or certify infeasibility outright
    std::vector<Row> rows;
    if (n1 > kZeroRow) {
        rows.push_back(Row{&qp.c1, qp.e1, n1, 1});
    } else if (qp.e1 < -feas_tol) {
        res.status = QpResult::Status::Infeasible;
        res.certificate = "input row has zero gradient and negative offset e1";
        return res;
    }
    if (n2 > kZeroRow) {
        rows.push_back(Row{&qp.c2, qp.e2, n2, 2});
    } else if (qp.e2 < -feas_tol) {
        res.status = QpResult::Status::Infeasible;
        res.certificate = "barrier row has zero gradient and negative offset e2";
        return res;
    }

    auto feasible = [&](const Vec& q) {
        for (const Row& r : rows)
            if (r.c->dot(q) + r.e < -feas_tol) return false;
        return true;
    };
    auto accept = [&](const Vec& q, double l1, double l2, bool a1, bool a2,
                      QpResult::Status st) {
        res.q = q;
        res.lambda1 = std::max(l1, 0.0);
        res.lambda2 = std::max(l2, 0.0);
        res.active1 = a1;
        res.active2 = a2;
        res.status = st;
        return res;
    };

    // {}: unconstrained minimizer
    Vec q0 = -qp.d;
    if (feasible(q0)) return accept(q0, 0.0, 0.0, false, false, QpResult::Status::Optimal);

    // {i}: single-halfspace projection
    for (const Row& r : rows) {
        const double lam = (r.c->dot(qp.d) - r.e) / r.nn;
        if (lam < -kTieBand) continue;
        Vec q = -qp.d + lam * (*r.c);
        if (!feasible(q)) continue;
        return accept(q, r.id == 1 ? lam : 0.0, r.id == 2 ? lam : 0.0, r.id == 1, r.id == 2,
                      QpResult::Status::Optimal);
    }

    // {1,2}
    if (rows.size() == 2) {
        const Vec& a = *rows[0].c;
        const Vec& b = *rows[1].c;
        const double g12 = a.dot(b);
        const double det = rows[0].nn * rows[1].nn - g12 * g12;
        const Eigen::Vector2d rhs(a.dot(qp.d) - rows[0].e, b.dot(qp.d) - rows[1].e);
        if (det > kGramCutoff * rows[0].nn * rows[1].nn) {
            // extended precision: the Gram determinant cancels badly for
            // nearly parallel rows and the multipliers grow like 1/det
            const long double n1l = rows[0].nn, n2l = rows[1].nn, gl = g12;
            const long double detl = n1l * n2l - gl * gl;
            const long double r1 = rhs(0), r2 = rhs(1);
            const double l1 = static_cast<double>((n2l * r1 - gl * r2) / detl);
            const double l2 = static_cast<double>((n1l * r2 - gl * r1) / detl);
            if (l1 >= -kTieBand && l2 >= -kTieBand) {
                Vec q = -qp.d + l1 * a + l2 * b;
                return accept(q, l1, l2, true, true, QpResult::Status::Optimal);
            }
        } else {
            // rank-1 Gram: least-norm multipliers via the pseudo-inverse,
            // flagged for the CRCQ diagnostic
            Eigen::Matrix2d G;
            G << rows[0].nn, g12, g12, rows[1].nn;
            Eigen::JacobiSVD<Eigen::Matrix2d> svd(G, Eigen::ComputeFullU | Eigen::ComputeFullV);
            Eigen::Vector2d sv = svd.singularValues();
            Eigen::Vector2d inv = Eigen::Vector2d::Zero();
            for (int i = 0; i < 2; ++i)
                if (sv(i) > kGramCutoff * sv(0)) inv(i) = 1.0 / sv(i);
            Eigen::Vector2d lam =
                svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose() * rhs;
            if (lam(0) >= -kTieBand && lam(1) >= -kTieBand) {
                Vec q = -qp.d + lam(0) * a + lam(1) * b;
                if (feasible(q))
                    return accept(q, lam(0), lam(1), true, true,
                                  QpResult::Status::DegenerateActive);
            }
        }
    }

    // nothing accepted: the rows must be inconsistent (for two halfspaces
    // this means anti-parallel rows with an empty slab)
    if (rows.size() == 2) {
        const Vec& a = *rows[0].c;
        const Vec& b = *rows[1].c;
        const double t = std::sqrt(rows[1].nn / rows[0].nn);
        if ((b + t * a).norm() <= 1e-9 * std::sqrt(rows[1].nn)) {
            const double agg = t * rows[0].e + rows[1].e;
            if (agg < 0.0) {
                std::ostringstream os;
                os << "rows are anti-parallel and t*e1+e2 = " << agg << " < 0 (t = " << t
                   << ")";
                res.status = QpResult::Status::Infeasible;
                res.certificate = os.str();
                return res;
            }
        }
    }

    // numerically marginal case (nearly dependent rows): re-run the
    // enumeration with loosened tolerances, keep the best primal-feasible
    // candidate, and flag it for the CRCQ diagnostic
    {
        const double loose = 1e6 * feas_tol + 1e-12;
        double best_obj = std::numeric_limits<double>::infinity();
        bool found = false;
        auto consider = [&](const Vec& q, double l1, double l2, bool a1, bool a2) {
            for (const Row& r : rows)
                if (r.c->dot(q) + r.e < -loose) return;
            const double obj = 0.5 * (q + qp.d).squaredNorm();
            if (obj < best_obj) {
                best_obj = obj;
                accept(q, l1, l2, a1, a2, QpResult::Status::DegenerateActive);
                found = true;
            }
        };
        consider(-qp.d, 0.0, 0.0, false, false);
        for (const Row& r : rows) {
            const double lam = (r.c->dot(qp.d) - r.e) / r.nn;
            if (lam < -loose) continue;
            consider(-qp.d + lam * (*r.c), r.id == 1 ? lam : 0.0, r.id == 2 ? lam : 0.0,
                     r.id == 1, r.id == 2);
        }
        if (rows.size() == 2) {
            const Vec& a = *rows[0].c;
            const Vec& b = *rows[1].c;
            const double g12 = a.dot(b);
            const double det = rows[0].nn * rows[1].nn - g12 * g12;
            if (det > 0.0) {
                const Eigen::Vector2d rhs(a.dot(qp.d) - rows[0].e, b.dot(qp.d) - rows[1].e);
                const double l1 = (rows[1].nn * rhs(0) - g12 * rhs(1)) / det;
                const double l2 = (rows[0].nn * rhs(1) - g12 * rhs(0)) / det;
                if (l1 >= -loose && l2 >= -loose)
                    consider(-qp.d + l1 * a + l2 * b, l1, l2, true, true);
            }
        }
        if (found) return res;
    }

    res.status = QpResult::Status::Infeasible;
    res.certificate = "no active set produced a feasible KKT candidate";
    return res;
}

double qp_kkt_residual(const TwoConstraintQp& qp, const QpResult& result) {
    Vec stat = result.q + qp.d - result.lambda1 * qp.c1 - result.lambda2 * qp.c2;
    const double v1 = qp.c1.dot(result.q) + qp.e1;
    const double v2 = qp.c2.dot(result.q) + qp.e2;
    double r = stat.norm();
    r = std::max(r, std::max(0.0, -v1));
    r = std::max(r, std::max(0.0, -v2));
    r = std::max(r, std::abs(result.lambda1 * v1));
    r = std::max(r, std::abs(result.lambda2 * v2));
    return r;
}

}  // namespace sgflow
