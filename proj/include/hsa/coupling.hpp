#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>

#include <json.hpp>

#include "hsa/errors.hpp"
#include "hsa/geometry.hpp"

namespace hsa {

// Servo angles (A, B, C, D) in degrees. Angles are magnitudes; the rotation
// direction of each hand is absorbed into the fitted coupling gains.
struct MotorAngles {
    Eigen::Vector4d deg = Eigen::Vector4d::Zero();

    MotorAngles() = default;
    explicit MotorAngles(const Eigen::Vector4d& v) : deg(v) {}
    MotorAngles(double a, double b, double c, double d) : deg(a, b, c, d) {}

    double operator[](int i) const { return deg[i]; }

    void validate(const PlatformGeometry& geo) const {
        for (int i = 0; i < kActuatorCount; ++i) {
            if (!(deg[i] >= geo.theta_min && deg[i] <= geo.theta_max)) {
                throw RangeError(std::string("theta_") + actuator_name(i) + " = " + std::to_string(deg[i]) +
                                 " deg outside [" + std::to_string(geo.theta_min) + ", " +
                                 std::to_string(geo.theta_max) + "]");
            }
        }
    }
};

// Base-to-platform chord lengths (l_A, l_B, l_C, l_D) in mm.
struct ActuatorLengths {
    Eigen::Vector4d mm = Eigen::Vector4d::Zero();

    ActuatorLengths() = default;
    explicit ActuatorLengths(const Eigen::Vector4d& v) : mm(v) {}
    ActuatorLengths(double a, double b, double c, double d) : mm(a, b, c, d) {}

    double operator[](int i) const { return mm[i]; }

    bool all_positive() const { return (mm.array() > 0.0).all() && mm.allFinite(); }
};

// L = beta0 * theta + beta1.
struct CouplingModel {
    Eigen::Matrix4d beta0 = Eigen::Matrix4d::Zero();  // [mm/deg]
    Eigen::Vector4d beta1 = Eigen::Vector4d::Zero();  // [mm]
    bool circulant = false;

    bool finite() const { return beta0.allFinite() && beta1.allFinite(); }
};

// True when every entry depends only on (j - i) mod 4.
inline bool is_circulant(const Eigen::Matrix4d& m, double tol = 1e-12) {
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (std::abs(m(i, j) - m(0, (j - i + 4) % 4)) > tol) return false;
    return true;
}

// Circulant matrix whose first row is `first_row`.
inline Eigen::Matrix4d circulant_from_row(const Eigen::Vector4d& first_row) {
    Eigen::Matrix4d m;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) m(i, j) = first_row[(j - i + 4) % 4];
    return m;
}

// The coupled model that reproduces the independent single-HSA model exactly.
inline CouplingModel coupling_from_single(const SingleHsaModel& hsa) {
    CouplingModel model;
    model.beta0 = hsa.alpha0 * Eigen::Matrix4d::Identity();
    model.beta1 = Eigen::Vector4d::Constant(hsa.rest_length + hsa.alpha1);
    model.circulant = true;
    return model;
}

inline ActuatorLengths uncoupled_lengths(const MotorAngles& theta, const SingleHsaModel& hsa,
                                         const PlatformGeometry& geo) {
    theta.validate(geo);
    ActuatorLengths out;
    for (int i = 0; i < kActuatorCount; ++i) out.mm[i] = hsa.length(theta[i]);
    return out;
}

inline ActuatorLengths coupled_lengths(const MotorAngles& theta, const CouplingModel& model,
                                       const PlatformGeometry& geo) {
    theta.validate(geo);
    if (!model.finite()) throw ModelError("coupling model has non-finite entries");
    ActuatorLengths out(model.beta0 * theta.deg + model.beta1);
    for (int i = 0; i < kActuatorCount; ++i) {
        if (!(out.mm[i] > 0.0)) {
            throw ModelError(std::string("coupling model predicts non-positive length l_") + actuator_name(i) +
                             " = " + std::to_string(out.mm[i]) + " mm");
        }
    }
    return out;
}

inline void to_json(nlohmann::json& j, const CouplingModel& model) {
    nlohmann::json beta0 = nlohmann::json::array();
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) beta0.push_back(model.beta0(r, c));
    nlohmann::json beta1 = nlohmann::json::array();
    for (int r = 0; r < 4; ++r) beta1.push_back(model.beta1[r]);
    j = nlohmann::json{{"beta0", beta0}, {"beta1", beta1}, {"circulant", model.circulant}};
}

inline void from_json(const nlohmann::json& j, CouplingModel& model) {
    const auto& beta0 = j.at("beta0");
    const auto& beta1 = j.at("beta1");
    if (!beta0.is_array() || beta0.size() != 16) throw DomainError("model: beta0 must hold 16 numbers");
    if (!beta1.is_array() || beta1.size() != 4) throw DomainError("model: beta1 must hold 4 numbers");
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) model.beta0(r, c) = beta0.at(4 * r + c).get<double>();
    for (int r = 0; r < 4; ++r) model.beta1[r] = beta1.at(r).get<double>();
    model.circulant = j.at("circulant").get<bool>();
    if (model.circulant && !is_circulant(model.beta0))
        throw DomainError("model: flagged circulant but beta0 is not circulant");
}

}  // namespace hsa
