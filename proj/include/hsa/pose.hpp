#pragma once

#include <Eigen/Geometry>
#include <array>
#include <cmath>
#include <numbers>

#include "hsa/coupling.hpp"
#include "hsa/errors.hpp"
#include "hsa/geometry.hpp"
#include "hsa/pcc.hpp"

namespace hsa {

struct HomogeneousTransform {
    Eigen::Matrix4d t = Eigen::Matrix4d::Identity();

    HomogeneousTransform() = default;
    explicit HomogeneousTransform(const Eigen::Matrix4d& m) : t(m) {}

    Eigen::Matrix3d rotation() const { return t.topLeftCorner<3, 3>(); }
    Eigen::Vector3d translation() const { return t.topRightCorner<3, 1>(); }

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation() * p + translation(); }

    // Largest |R^T R - I| entry.
    double orthonormality_error() const {
        const Eigen::Matrix3d r = rotation();
        return (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    }

    bool is_valid(double tol = 1e-9) const {
        return t(3, 0) == 0.0 && t(3, 1) == 0.0 && t(3, 2) == 0.0 && t(3, 3) == 1.0 &&
               orthonormality_error() < tol && std::abs(rotation().determinant() - 1.0) < tol;
    }

    static HomogeneousTransform from_parts(const Eigen::Matrix3d& r, const Eigen::Vector3d& p) {
        Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
        m.topLeftCorner<3, 3>() = r;
        m.topRightCorner<3, 1>() = p;
        return HomogeneousTransform(m);
    }
};

struct Pose {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();  // platform centre [mm]
    double alpha = 0.0;                                  // bend angle s*kappa [rad]
    double phi = 0.0;                                    // bend-plane angle [rad]
    HomogeneousTransform transform;
};

/// Base-to-platform transform of a constant-curvature arc: Rz(phi) Ry(kappa s)
/// with translation Rz(phi) ((1 - cos ks)/k, 0, sin(ks)/k). Below the small-bend
/// threshold the translation uses its series in kappa*s.
inline HomogeneousTransform transform_from_arc(const ArcConfig& cfg) {
    const double th = cfg.kappa * cfg.s;
    const double cp = std::cos(cfg.phi), sp = std::sin(cfg.phi);
    const double ct = std::cos(th), st = std::sin(th);

    double radial = 0.0;  // (1 - cos th) / kappa
    double axial = 0.0;   // sin(th) / kappa
    if (th < kSmallBendThreshold) {
        const double th2 = th * th;
        radial = cfg.s * th / 2.0 * (1.0 - th2 / 12.0 + th2 * th2 / 360.0);
        axial = cfg.s * (1.0 - th2 / 6.0 + th2 * th2 / 120.0);
    } else {
        const double half = std::sin(th / 2.0);
        radial = 2.0 * half * half / cfg.kappa;
        axial = st / cfg.kappa;
    }

    Eigen::Matrix4d m;
    m << cp * ct, -sp, cp * st, cp * radial,
         sp * ct,  cp, sp * st, sp * radial,
         -st,     0.0,      ct,      axial,
         0.0,     0.0,     0.0,        1.0;
    return HomogeneousTransform(m);
}

inline Pose pose_from_arc(const ArcConfig& cfg) {
    Pose p;
    p.transform = transform_from_arc(cfg);
    p.position = (p.transform.t * Eigen::Vector4d(0.0, 0.0, 0.0, 1.0)).head<3>();
    p.alpha = cfg.kappa * cfg.s;
    p.phi = cfg.phi;
    return p;
}

struct ForwardKinematics {
    Pose pose;
    ArcConfig arc;
    ActuatorLengths lengths;
    double consistency_residual = 0.0;
};

inline ForwardKinematics forward_kinematics(const MotorAngles& theta, const CouplingModel& model,
                                            const PlatformGeometry& geo) {
    ForwardKinematics fk;
    fk.lengths = coupled_lengths(theta, model, geo);
    const ArcSolution sol = arc_from_lengths(fk.lengths, geo);
    fk.arc = sol.config;
    fk.consistency_residual = sol.consistency_residual;
    fk.pose = pose_from_arc(fk.arc);
    return fk;
}

/// Discretised-arc reference: rotate by phi about z, then chain n rigid steps,
/// each a half bend about the local y axis, a straight move of s/n along the
/// local z axis, and another half bend. Position error is O(1/n^2).
inline Pose oracle_pose(const ArcConfig& cfg, int n_segments) {
    if (n_segments < 1) throw DomainError("oracle needs at least one segment");
    const double step_len = cfg.s / n_segments;
    const double half_bend = cfg.kappa * cfg.s / (2.0 * n_segments);

    Eigen::Affine3d half_rot(Eigen::AngleAxisd(half_bend, Eigen::Vector3d::UnitY()));
    Eigen::Affine3d step = half_rot * Eigen::Translation3d(0.0, 0.0, step_len) * half_rot;

    Eigen::Affine3d t(Eigen::AngleAxisd(cfg.phi, Eigen::Vector3d::UnitZ()));
    for (int i = 0; i < n_segments; ++i) t = t * step;

    Pose p;
    p.transform = HomogeneousTransform(t.matrix());
    p.position = t.translation();
    const Eigen::Vector3d z_axis = t.linear().col(2);
    p.alpha = std::atan2(z_axis.head<2>().norm(), z_axis.z());
    p.phi = cfg.phi;
    return p;
}

/// Azimuth of the platform centre about the base z axis.
inline double observed_phi(const Eigen::Vector3d& position) {
    if (position.x() == 0.0 && position.y() == 0.0)
        throw DomainError("bend-plane angle undefined for a centre on the z axis");
    return std::atan2(position.y(), position.x());
}

inline Eigen::Quaterniond checked_unit(const Eigen::Quaterniond& q) {
    const double n = q.norm();
    if (std::abs(n - 1.0) <= 1e-6) return q;
    if (std::abs(n - 1.0) <= 1e-3) return q.normalized();
    throw DomainError("quaternion norm " + std::to_string(n) + " is not unit");
}

/// Tilt of the platform: angle between the rotated body z axis and world z, in [0, pi].
inline double alpha_from_quaternion(const Eigen::Quaterniond& q) {
    const Eigen::Vector3d z = checked_unit(q) * Eigen::Vector3d::UnitZ();
    return std::atan2(z.head<2>().norm(), z.z());
}

inline Eigen::Quaterniond quaternion_from_rotation(const Eigen::Matrix3d& r) {
    Eigen::Quaterniond q(r);
    q.normalize();
    if (q.w() < 0.0) q.coeffs() *= -1.0;
    return q;
}

// File formats carry quaternions scalar-last (x, y, z, w).
inline std::array<double, 4> to_xyzw(const Eigen::Quaterniond& q) { return {q.x(), q.y(), q.z(), q.w()}; }

inline Eigen::Quaterniond from_xyzw(double x, double y, double z, double w) { return Eigen::Quaterniond(w, x, y, z); }

}  // namespace hsa
