#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace sgflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// construction-time rejections
struct NotHurwitz : Error {
    explicit NotHurwitz(std::string msg) : Error(std::move(msg)) {}
};
struct UnsupportedAnalytic : Error {
    explicit UnsupportedAnalytic(std::string msg) : Error(std::move(msg)) {}
};
struct NoRelativeDegree : Error {
    int r_max;
    explicit NoRelativeDegree(int rmax)
        : Error("input does not appear within " + std::to_string(rmax) +
                " differentiations of h"),
          r_max(rmax) {}
};

// steady-state map failures
struct SteadyStateFailure : Error {
    using Error::Error;
};
struct NewtonDiverged : SteadyStateFailure {
    double last_residual;
    explicit NewtonDiverged(double res)
        : SteadyStateFailure("steady-state Newton iteration diverged, residual " +
                             std::to_string(res)),
          last_residual(res) {}
};
struct SingularJacobian : SteadyStateFailure {
    explicit SingularJacobian(std::string msg) : SteadyStateFailure(std::move(msg)) {}
};

// config / CLI surface
struct ParseError : Error {
    std::string path;
    ParseError(std::string where, const std::string& msg)
        : Error(where + ": " + msg), path(std::move(where)) {}
};
struct ValidationError : Error {
    explicit ValidationError(std::string msg) : Error(std::move(msg)) {}
};
struct UnknownScenario : Error {
    explicit UnknownScenario(const std::string& name)
        : Error("unknown scenario: " + name) {}
};

}  // namespace sgflow
