#pragma once

#include <functional>

#include "sgflow/types.hpp"

namespace sgflow {

// central differences with step scaled to the magnitude of the point
inline double fd_step(const Vec& p, double base = 1e-6) {
    double mag = p.size() ? p.lpNorm<Eigen::Infinity>() : 0.0;
    return base * (1.0 + mag);
}

inline Vec fd_gradient(const std::function<double(const Vec&)>& fn, const Vec& x,
                       double base = 1e-6) {
    const double s = fd_step(x, base);
    Vec g(x.size());
    Vec p = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        p(i) = x(i) + s;
        const double fp = fn(p);
        p(i) = x(i) - s;
        const double fm = fn(p);
        p(i) = x(i);
        g(i) = (fp - fm) / (2.0 * s);
    }
    return g;
}

inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& fn, const Vec& x,
                       double base = 1e-6) {
    const double s = fd_step(x, base);
    Vec p = x;
    Mat J;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        p(i) = x(i) + s;
        Vec fp = fn(p);
        p(i) = x(i) - s;
        Vec fm = fn(p);
        p(i) = x(i);
        if (J.size() == 0) J.resize(fp.size(), x.size());
        J.col(i) = (fp - fm) / (2.0 * s);
    }
    return J;
}

}  // namespace sgflow
