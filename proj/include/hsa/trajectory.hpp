#pragma once

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "hsa/coupling.hpp"
#include "hsa/geometry.hpp"
#include "hsa/metrics.hpp"
#include "hsa/pose.hpp"

namespace hsa {

/// Servo command sequence exercising every motion type in turn:
/// uniform extension, uniform compression back to rest, a bend toward each
/// actuator (one servo driven out and back), and a full rotation of the bend
/// direction (servos phased a quarter turn apart).
inline std::vector<MotorAngles> composite_sweep(const PlatformGeometry& geo, int samples_per_phase) {
    if (samples_per_phase < 2) throw RangeError("composite sweep needs at least 2 samples per phase");
    const double lo = geo.theta_min, hi = geo.theta_max;
    const double mid = (lo + hi) / 2.0, amp = (hi - lo) / 2.0;
    const int n = samples_per_phase;
    std::vector<MotorAngles> out;

    for (int i = 0; i < n; ++i) {
        const double t = lo + (hi - lo) * i / (n - 1);
        out.emplace_back(t, t, t, t);
    }
    for (int i = 1; i < n; ++i) {
        const double t = hi - (hi - lo) * i / (n - 1);
        out.emplace_back(t, t, t, t);
    }
    for (int j = 0; j < 4; ++j) {
        for (int i = 1; i < 2 * n - 1; ++i) {
            const double frac = i < n ? static_cast<double>(i) / (n - 1) : static_cast<double>(2 * n - 2 - i) / (n - 1);
            Eigen::Vector4d th = Eigen::Vector4d::Constant(lo);
            th[j] = lo + (hi - lo) * frac;
            out.emplace_back(th);
        }
    }
    for (int i = 0; i < 2 * n; ++i) {
        const double w = 2.0 * std::numbers::pi * i / (2 * n);
        Eigen::Vector4d th;
        for (int j = 0; j < 4; ++j) th[j] = std::clamp(mid + amp * std::cos(w - j * std::numbers::pi / 2.0), lo, hi);
        out.emplace_back(th);
    }
    return out;
}

struct TrajectoryNoise {
    // Position noise: uniformly random direction, magnitude |N(bias, sigma)|.
    double position_sigma = 0.0;  // [mm]
    double position_bias = 0.0;   // [mm]
    double length_sigma = 0.0;    // [mm], i.i.d. Gaussian on observed lengths
};

/// Synthetic "observations" of a servo sequence: the model's own pose and
/// lengths, optionally perturbed. Servo speed only sets the timestamps
/// (time step = largest angle change / (6 * rpm) deg/s).
inline std::vector<TrajectoryRecord> synthesize_trajectory(std::span<const MotorAngles> thetas,
                                                           const CouplingModel& model, const PlatformGeometry& geo,
                                                           double speed_rpm, const TrajectoryNoise& noise,
                                                           std::uint64_t seed) {
    if (!(speed_rpm > 0.0)) throw RangeError("speed must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double deg_per_s = 6.0 * speed_rpm;

    std::vector<TrajectoryRecord> out;
    out.reserve(thetas.size());
    double time = 0.0;
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        if (k > 0) {
            const double step = (thetas[k].deg - thetas[k - 1].deg).cwiseAbs().maxCoeff();
            time += std::max(step, 1e-3) / deg_per_s;
        }
        const ForwardKinematics fk = forward_kinematics(thetas[k], model, geo);
        TrajectoryRecord rec;
        rec.time = time;
        rec.theta = thetas[k];
        rec.speed_rpm = speed_rpm;
        rec.observed_position = fk.pose.position;
        rec.observed_quaternion = quaternion_from_rotation(fk.pose.transform.rotation());
        rec.observed_lengths = fk.lengths;

        if (noise.position_sigma > 0.0 || noise.position_bias > 0.0) {
            Eigen::Vector3d dir(gauss(rng), gauss(rng), gauss(rng));
            dir.normalize();
            const double mag = std::abs(noise.position_bias + noise.position_sigma * gauss(rng));
            rec.observed_position += mag * dir;
        }
        if (noise.length_sigma > 0.0)
            for (int j = 0; j < 4; ++j) rec.observed_lengths->mm[j] += noise.length_sigma * gauss(rng);
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace hsa
