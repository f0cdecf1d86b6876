#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "hsa/coupling.hpp"
#include "hsa/errors.hpp"
#include "hsa/geometry.hpp"

namespace hsa {

// Below this value of kappa * length the arc/chord relations switch to their
// Taylor series; truncation error there is < 1e-24 relative.
inline constexpr double kSmallBendThreshold = 1e-6;

// Constant-curvature configuration of the platform's centre line.
struct ArcConfig {
    double kappa = 0.0;  // curvature [1/mm], >= 0
    double phi = 0.0;    // bend-plane angle about base z [rad], (-pi, pi]
    double s = 0.0;      // arc length [mm]
    double l_s = 0.0;    // centre chord [mm]
    double u = 0.0;      // (l_C - l_A) / (l_C + l_A)
    double v = 0.0;      // (l_D - l_B) / (l_D + l_B)

    double bend_angle() const { return kappa * s; }
};

struct ArcSolution {
    ArcConfig config;
    double consistency_residual = 0.0;  // |(l_A + l_C) - (l_B + l_D)| / 2 [mm]
};

inline double wrap_angle(double rad) {
    double w = std::remainder(rad, 2.0 * std::numbers::pi);
    if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
    return w;
}

namespace detail {

inline double arc_length_series(double kappa, double chord) {
    const double x2 = (kappa * chord) * (kappa * chord);
    return chord * (1.0 + x2 / 24.0 + 3.0 * x2 * x2 / 640.0);
}

inline double arc_length_direct(double kappa, double chord) { return 2.0 / kappa * std::asin(kappa * chord / 2.0); }

}  // namespace detail

// Arc length subtending chord `chord` at curvature `kappa`: (2/k) asin(k c / 2).
inline double arc_length_from_chord(double kappa, double chord) {
    if (kappa * chord < kSmallBendThreshold) return detail::arc_length_series(kappa, chord);
    return detail::arc_length_direct(kappa, chord);
}

// Inverse of arc_length_from_chord: (2/k) sin(k s / 2).
inline double chord_from_arc_length(double kappa, double s) {
    const double x = kappa * s;
    if (x < kSmallBendThreshold) {
        const double x2 = x * x;
        return s * (1.0 - x2 / 24.0 + x2 * x2 / 1920.0);
    }
    return 2.0 / kappa * std::sin(x / 2.0);
}

/// Bend-plane angle as the single-argument arctangent of the length products,
/// range (-pi/2, pi/2]. Only determines the bend plane up to a half turn;
/// arc_from_lengths uses the full-circle version.
inline double principal_bend_angle(const ActuatorLengths& l) {
    const double num = l[B] * l[C] - l[A] * l[D];
    const double den = l[C] * l[D] - l[A] * l[B];
    if (den == 0.0) {
        if (num == 0.0) return 0.0;
        return std::copysign(std::numbers::pi / 2.0, num);
    }
    return std::atan(num / den);
}

/// Chord lengths -> (kappa, phi, s, l_s).
///
/// l_s is the mean of all four lengths; measured data rarely satisfies
/// l_A + l_C = l_B + l_D, so the mismatch is returned as consistency_residual.
/// phi uses the two-argument arctangent of (l_B l_C - l_A l_D, l_C l_D - l_A l_B)
/// and is 0 when kappa is 0.
inline ArcSolution arc_from_lengths(const ActuatorLengths& l, const PlatformGeometry& geo) {
    for (int i = 0; i < kActuatorCount; ++i) {
        if (!(l[i] > 0.0) || !std::isfinite(l[i]))
            throw DomainError(std::string("non-positive actuator length l_") + actuator_name(i));
    }
    ArcSolution out;
    auto& cfg = out.config;
    cfg.l_s = (l[A] + l[B] + l[C] + l[D]) / 4.0;
    out.consistency_residual = std::abs((l[A] + l[C]) - (l[B] + l[D])) / 2.0;
    cfg.u = (l[C] - l[A]) / (l[C] + l[A]);
    cfg.v = (l[D] - l[B]) / (l[D] + l[B]);
    cfg.kappa = std::hypot(cfg.u, cfg.v) / geo.d;

    if (cfg.kappa * cfg.l_s / 2.0 > 1.0) {
        throw InfeasibleError("lengths outside the constant-curvature envelope: kappa*l_s/2 = " +
                              std::to_string(cfg.kappa * cfg.l_s / 2.0) + " > 1");
    }
    if (cfg.kappa == 0.0) {
        cfg.phi = 0.0;
    } else {
        const double num = l[B] * l[C] - l[A] * l[D];
        const double den = l[C] * l[D] - l[A] * l[B];
        cfg.phi = wrap_angle(std::atan2(num, den));
    }
    cfg.s = arc_length_from_chord(cfg.kappa, cfg.l_s);
    return out;
}

/// Builds a full ArcConfig (chord and strain ratios) from (kappa, phi, s).
inline ArcConfig make_arc(double kappa, double phi, double s, const PlatformGeometry& geo) {
    if (!(kappa >= 0.0)) throw DomainError("kappa must be non-negative");
    if (!(s > 0.0)) throw DomainError("arc length must be positive");
    if (kappa * s >= std::numbers::pi) throw InfeasibleError("bend angle kappa*s must stay below pi");
    ArcConfig cfg;
    cfg.kappa = kappa;
    cfg.phi = kappa == 0.0 ? 0.0 : wrap_angle(phi);
    cfg.s = s;
    cfg.l_s = chord_from_arc_length(kappa, s);
    const double quarter = std::numbers::pi / 4.0;
    cfg.u = kappa * geo.d * std::cos(quarter - cfg.phi);
    cfg.v = kappa * geo.d * std::sin(quarter - cfg.phi);
    return cfg;
}

/// Exact inverse of arc_from_lengths for consistent length sets:
/// l_A = l_s(1-u), l_C = l_s(1+u), l_B = l_s(1-v), l_D = l_s(1+v).
inline ActuatorLengths lengths_from_arc(const ArcConfig& in, const PlatformGeometry& geo) {
    const ArcConfig cfg = make_arc(in.kappa, in.phi, in.s, geo);
    if (std::abs(cfg.u) >= 1.0 || std::abs(cfg.v) >= 1.0) {
        throw InfeasibleError("strain ratio |u| or |v| >= 1: u = " + std::to_string(cfg.u) +
                              ", v = " + std::to_string(cfg.v));
    }
    return ActuatorLengths(cfg.l_s * (1.0 - cfg.u), cfg.l_s * (1.0 - cfg.v), cfg.l_s * (1.0 + cfg.u),
                           cfg.l_s * (1.0 + cfg.v));
}

}  // namespace hsa
