// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace kfsi {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// Symmetric 2x2 chart tensor stored as (11, 12, 22).
using Sym2 = std::array<double, 3>;

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class GeometryError : public Error {
public:
    using Error::Error;
};

// Raised when a displacement leaves the tubular neighbourhood (or the
// injectivity margin of the Hanzawa map). Carries the tau monitor value;
// tau == infinity marks total loss of the normal-coordinate description.
class DegenerationError : public Error {
public:
    DegenerationError(const std::string& msg, double tau_value)
        : Error(msg), tau(tau_value) {}
    double tau;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
    ConfigError(const std::string& msg, std::vector<std::string> issue_list)
        : Error(msg), issues(std::move(issue_list)) {}
    std::vector<std::string> issues;
};

class SolverError : public Error {
public:
    SolverError(const std::string& msg, double time) : Error(msg), t(time) {}
    double t;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

}  // namespace kfsi
