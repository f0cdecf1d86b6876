#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "hsa/errors.hpp"

namespace hsa {

enum class Handedness { left, right };

// Actuator slots in the order used everywhere in the library. A and C, B and D
// sit on opposite corners of the square. Seen from above A=(+,+), B=(+,-),
// C=(-,-), D=(-,+) in the base frame.
enum Actuator : int { A = 0, B = 1, C = 2, D = 3 };

inline constexpr int kActuatorCount = 4;

struct PlatformGeometry {
    double m = 43.68;                       // adjacent attachment spacing [mm]
    double d = 43.68 * std::numbers::sqrt2; // diagonal pair separation used by the curvature formula [mm]
    double theta_min = 0.0;                 // [deg]
    double theta_max = 180.0;               // [deg]
    std::array<Handedness, 4> handedness{Handedness::left, Handedness::right,
                                         Handedness::left, Handedness::right};

    void validate() const {
        if (!(m > 0.0) || !std::isfinite(m)) throw DomainError("geometry: m must be positive");
        if (!(d > 0.0) || !std::isfinite(d)) throw DomainError("geometry: d must be positive");
        if (!(theta_min < theta_max)) throw DomainError("geometry: theta_min must be below theta_max");
        int lefts = 0;
        for (auto h : handedness) lefts += h == Handedness::left ? 1 : 0;
        if (lefts != 2 || handedness[A] != handedness[C] || handedness[B] != handedness[D])
            throw DomainError("geometry: handedness must pair equal hands on the diagonals (A,C) and (B,D)");
    }
};

// Zero-force extension of one HSA as a linear function of its servo angle.
// alpha0/alpha1 are the bench-test fit (units taken as mm/deg and mm);
// rest_length has no published value and must come from configuration.
struct SingleHsaModel {
    double alpha0 = 0.124;
    double alpha1 = 0.119;
    double rest_length = 0.0;

    void validate() const {
        if (!(alpha0 > 0.0)) throw DomainError("hsa model: alpha0 must be positive");
        if (!std::isfinite(alpha1)) throw DomainError("hsa model: alpha1 must be finite");
        if (!(rest_length > 0.0) || !std::isfinite(rest_length))
            throw DomainError("hsa model: rest_length must be positive");
    }

    double length(double theta_deg) const { return rest_length + alpha0 * theta_deg + alpha1; }
};

inline PlatformGeometry default_geometry() { return PlatformGeometry{}; }

inline char actuator_name(int index) { return static_cast<char>('A' + index); }

inline std::string to_string(Handedness h) { return h == Handedness::left ? "L" : "R"; }

}  // namespace hsa
