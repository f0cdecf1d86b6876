#pragma once

#include <Eigen/Geometry>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "hsa/coupling.hpp"
#include "hsa/errors.hpp"
#include "hsa/geometry.hpp"
#include "hsa/pcc.hpp"
#include "hsa/pose.hpp"

namespace hsa {

// All signed errors are (estimated - observed).

struct ErrorStats {
    double mean = 0.0;
    double std = 0.0;  // population (divides by n)
    double min = 0.0;
    double max = 0.0;
    std::size_t n = 0;
};

namespace detail {

// Pairwise summation: fixed reduction tree, so results do not depend on how
// callers chunk the work.
inline double pairwise_sum(std::span<const double> xs) {
    if (xs.size() <= 8) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

}  // namespace detail

inline ErrorStats compute_stats(std::span<const double> samples) {
    if (samples.empty()) throw EmptyDatasetError("no samples to summarise");
    ErrorStats st;
    st.n = samples.size();
    const double n = static_cast<double>(st.n);
    st.mean = detail::pairwise_sum(samples) / n;
    std::vector<double> sq(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) sq[i] = (samples[i] - st.mean) * (samples[i] - st.mean);
    st.std = std::sqrt(detail::pairwise_sum(sq) / n);
    const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
    st.min = *lo;
    st.max = *hi;
    // mean can drift an ulp outside [min, max] for near-constant samples
    st.mean = std::clamp(st.mean, st.min, st.max);
    return st;
}

struct TrajectoryRecord {
    double time = 0.0;  // [s]
    MotorAngles theta;
    Eigen::Vector3d observed_position = Eigen::Vector3d::Zero();  // [mm]
    Eigen::Quaterniond observed_quaternion = Eigen::Quaterniond::Identity();
    std::optional<ActuatorLengths> observed_lengths;
    double speed_rpm = 0.0;
};

struct Trajectory {
    double speed_rpm = 0.0;
    std::vector<TrajectoryRecord> records;
    std::string source;
};

using LengthModel = std::variant<CouplingModel, SingleHsaModel>;

inline ActuatorLengths predict_lengths(const MotorAngles& theta, const LengthModel& model,
                                       const PlatformGeometry& geo) {
    if (const auto* coupled = std::get_if<CouplingModel>(&model)) return coupled_lengths(theta, *coupled, geo);
    return uncoupled_lengths(theta, std::get<SingleHsaModel>(model), geo);
}

struct LengthErrors {
    ErrorStats pooled;                       // [mm]
    std::array<ErrorStats, 4> per_actuator;  // [mm]
};

inline LengthErrors length_errors(std::span<const TrajectoryRecord> records, const LengthModel& model,
                                  const PlatformGeometry& geo) {
    std::vector<double> pooled;
    std::array<std::vector<double>, 4> per;
    pooled.reserve(records.size() * 4);
    for (std::size_t k = 0; k < records.size(); ++k) {
        const auto& rec = records[k];
        if (!rec.observed_lengths)
            throw UnsupportedDatasetError("record " + std::to_string(k) + " has no observed lengths");
        const ActuatorLengths est = predict_lengths(rec.theta, model, geo);
        for (int j = 0; j < 4; ++j) {
            const double e = est[j] - (*rec.observed_lengths)[j];
            pooled.push_back(e);
            per[static_cast<std::size_t>(j)].push_back(e);
        }
    }
    LengthErrors out;
    out.pooled = compute_stats(pooled);
    for (std::size_t j = 0; j < 4; ++j) out.per_actuator[j] = compute_stats(per[j]);
    return out;
}

inline bool has_observed_lengths(std::span<const TrajectoryRecord> records) {
    return !records.empty() &&
           std::all_of(records.begin(), records.end(), [](const auto& r) { return r.observed_lengths.has_value(); });
}

inline double rad_to_deg(double r) { return r * 180.0 / std::numbers::pi; }
inline double deg_to_rad(double d) { return d * std::numbers::pi / 180.0; }

// Wraps to (-180, 180].
inline double wrap_degrees(double deg) {
    double w = std::remainder(deg, 360.0);
    if (w <= -180.0) w += 360.0;
    return w;
}

// A centre closer than this to the z axis has no meaningful azimuth.
inline constexpr double kAxisRadiusTolerance = 1e-9;  // [mm]

/// Per-record comparison of model prediction and observation, the row type of
/// the plot-ready CSV.
struct RecordEvaluation {
    double time = 0.0;
    Eigen::Vector3d predicted_position = Eigen::Vector3d::Zero();
    Eigen::Vector3d observed_position = Eigen::Vector3d::Zero();
    double position_error = 0.0;  // [mm], Euclidean distance
    double predicted_alpha_deg = 0.0;
    double observed_alpha_deg = 0.0;
    double alpha_error_deg = 0.0;
    std::optional<double> predicted_phi_deg;
    std::optional<double> observed_phi_deg;
    std::optional<double> phi_error_deg;  // absent when phi is undefined
};

inline RecordEvaluation evaluate_record(const TrajectoryRecord& rec, const CouplingModel& model,
                                        const PlatformGeometry& geo) {
    const ForwardKinematics fk = forward_kinematics(rec.theta, model, geo);
    RecordEvaluation ev;
    ev.time = rec.time;
    ev.predicted_position = fk.pose.position;
    ev.observed_position = rec.observed_position;
    ev.position_error = (fk.pose.position - rec.observed_position).norm();
    ev.predicted_alpha_deg = rad_to_deg(fk.pose.alpha);
    ev.observed_alpha_deg = rad_to_deg(alpha_from_quaternion(rec.observed_quaternion));
    ev.alpha_error_deg = ev.predicted_alpha_deg - ev.observed_alpha_deg;
    const bool pred_defined = fk.pose.position.head<2>().norm() > kAxisRadiusTolerance;
    const bool obs_defined = rec.observed_position.head<2>().norm() > kAxisRadiusTolerance;
    if (pred_defined) ev.predicted_phi_deg = rad_to_deg(fk.pose.phi);
    if (obs_defined) ev.observed_phi_deg = rad_to_deg(observed_phi(rec.observed_position));
    if (pred_defined && obs_defined) ev.phi_error_deg = wrap_degrees(*ev.predicted_phi_deg - *ev.observed_phi_deg);
    return ev;
}

inline std::vector<RecordEvaluation> evaluate_records(std::span<const TrajectoryRecord> records,
                                                      const CouplingModel& model, const PlatformGeometry& geo) {
    std::vector<RecordEvaluation> out;
    out.reserve(records.size());
    for (const auto& rec : records) out.push_back(evaluate_record(rec, model, geo));
    return out;
}

inline ErrorStats position_errors(std::span<const TrajectoryRecord> records, const CouplingModel& model,
                                  const PlatformGeometry& geo) {
    std::vector<double> e;
    e.reserve(records.size());
    for (const auto& ev : evaluate_records(records, model, geo)) e.push_back(ev.position_error);
    return compute_stats(e);
}

struct OrientationErrors {
    ErrorStats alpha;                // [deg]
    std::optional<ErrorStats> phi;   // [deg], absent when every record was skipped
    std::size_t phi_skipped = 0;
};

inline OrientationErrors orientation_errors(std::span<const TrajectoryRecord> records, const CouplingModel& model,
                                            const PlatformGeometry& geo) {
    std::vector<double> alpha, phi;
    OrientationErrors out;
    for (const auto& ev : evaluate_records(records, model, geo)) {
        alpha.push_back(ev.alpha_error_deg);
        if (ev.phi_error_deg)
            phi.push_back(*ev.phi_error_deg);
        else
            ++out.phi_skipped;
    }
    out.alpha = compute_stats(alpha);
    if (!phi.empty()) out.phi = compute_stats(phi);
    return out;
}

struct SpeedBucket {
    double speed_rpm = 0.0;
    std::size_t trajectory_count = 0;
    std::optional<ErrorStats> position;  // absent for a bucket without records
};

/// Position-error statistics per declared speed, ascending; trajectories with
/// equal speed are merged into one bucket.
inline std::vector<SpeedBucket> error_vs_speed(std::span<const Trajectory> trajectories, const CouplingModel& model,
                                               const PlatformGeometry& geo) {
    std::vector<const Trajectory*> sorted;
    for (const auto& t : trajectories) sorted.push_back(&t);
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const Trajectory* a, const Trajectory* b) { return a->speed_rpm < b->speed_rpm; });

    std::vector<SpeedBucket> out;
    std::vector<TrajectoryRecord> pooled;
    for (std::size_t i = 0; i < sorted.size();) {
        SpeedBucket bucket;
        bucket.speed_rpm = sorted[i]->speed_rpm;
        pooled.clear();
        for (; i < sorted.size() && sorted[i]->speed_rpm == bucket.speed_rpm; ++i) {
            ++bucket.trajectory_count;
            pooled.insert(pooled.end(), sorted[i]->records.begin(), sorted[i]->records.end());
        }
        if (!pooled.empty()) bucket.position = position_errors(pooled, model, geo);
        out.push_back(bucket);
    }
    return out;
}

inline void to_json(nlohmann::json& j, const ErrorStats& st) {
    j = nlohmann::json{{"mean", st.mean}, {"std", st.std}, {"min", st.min}, {"max", st.max}, {"n", st.n}};
}

}  // namespace hsa
