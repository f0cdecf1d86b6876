#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "hsa/coupling.hpp"
#include "hsa/errors.hpp"
#include "hsa/geometry.hpp"

namespace hsa {

struct CalibrationRecord {
    MotorAngles theta;
    ActuatorLengths measured;
};

struct CalibrationDataset {
    std::vector<CalibrationRecord> records;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }

    void validate(const PlatformGeometry& geo) const {
        if (records.empty()) throw EmptyDatasetError("calibration dataset is empty");
        for (std::size_t k = 0; k < records.size(); ++k) {
            try {
                records[k].theta.validate(geo);
            } catch (const RangeError& e) {
                throw RangeError("record " + std::to_string(k) + ": " + e.what());
            }
            if (!records[k].measured.all_positive())
                throw DomainError("record " + std::to_string(k) + ": lengths must be positive");
        }
    }
};

struct RegressionFit {
    Eigen::Matrix4d beta0 = Eigen::Matrix4d::Zero();
    Eigen::Vector4d beta1 = Eigen::Vector4d::Zero();
};

struct CirculantSplit {
    Eigen::Matrix4d symmetric = Eigen::Matrix4d::Zero();
    Eigen::Matrix4d deviation = Eigen::Matrix4d::Zero();
};

struct FitReport {
    Eigen::Matrix4d beta0_regression = Eigen::Matrix4d::Zero();
    Eigen::Matrix4d beta0_symmetric = Eigen::Matrix4d::Zero();
    Eigen::Matrix4d beta0_deviation = Eigen::Matrix4d::Zero();
    Eigen::Vector4d beta1_raw = Eigen::Vector4d::Zero();
    Eigen::Vector4d beta1_averaged = Eigen::Vector4d::Zero();
    double residual_rms = 0.0;  // [mm]
    std::size_t record_count = 0;
};

namespace detail {

// Rows are (theta_A, theta_B, theta_C, theta_D, 1).
inline Eigen::MatrixXd design_matrix(const CalibrationDataset& data) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(data.size()), 5);
    for (std::size_t k = 0; k < data.size(); ++k) {
        const auto row = static_cast<Eigen::Index>(k);
        x.block<1, 4>(row, 0) = data.records[k].theta.deg.transpose();
        x(row, 4) = 1.0;
    }
    return x;
}

inline Eigen::MatrixXd response_matrix(const CalibrationDataset& data) {
    Eigen::MatrixXd y(static_cast<Eigen::Index>(data.size()), 4);
    for (std::size_t k = 0; k < data.size(); ++k)
        y.row(static_cast<Eigen::Index>(k)) = data.records[k].measured.mm.transpose();
    return y;
}

inline std::string describe_null_space(const Eigen::MatrixXd& x, Eigen::Index rank) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeFullV);
    const Eigen::MatrixXd& v = svd.matrixV();
    std::ostringstream os;
    os.precision(6);
    static constexpr const char* names[5] = {"theta_A", "theta_B", "theta_C", "theta_D", "1"};
    for (Eigen::Index col = rank; col < v.cols(); ++col) {
        os << (col == rank ? "" : "; ") << "[";
        for (Eigen::Index r = 0; r < v.rows(); ++r) os << (r ? ", " : "") << names[r] << ": " << v(r, col);
        os << "]";
    }
    return os.str();
}

}  // namespace detail

/// Ordinary least squares of each measured length against (theta_A..theta_D, 1),
/// solved with a column-pivoting QR factorization. Throws IllPosedError when the
/// regressors are rank-deficient, listing the unidentifiable coefficient
/// combinations.
inline RegressionFit fit_regression(const CalibrationDataset& data) {
    if (data.empty()) throw EmptyDatasetError("calibration dataset is empty");
    const Eigen::MatrixXd x = detail::design_matrix(data);
    const Eigen::MatrixXd y = detail::response_matrix(data);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(1e-10);
    if (qr.rank() < 5) {
        throw IllPosedError("ill-posed calibration dataset: design matrix rank " + std::to_string(qr.rank()) +
                            " < 5 (need 5 affinely independent angle vectors); deficient directions " +
                            detail::describe_null_space(x, qr.rank()));
    }
    const Eigen::MatrixXd coef = qr.solve(y);  // 5 x 4, column j = actuator j
    RegressionFit fit;
    fit.beta0 = coef.topRows<4>().transpose();
    fit.beta1 = coef.row(4).transpose();
    return fit;
}

/// Projects onto circulant matrices by averaging each wrapped diagonal:
/// c_k = mean_i M[i][(i+k) mod 4]. This is the Frobenius-nearest circulant.
inline CirculantSplit symmetrize_circulant(const Eigen::Matrix4d& regression) {
    Eigen::Vector4d c = Eigen::Vector4d::Zero();
    for (int k = 0; k < 4; ++k) {
        for (int i = 0; i < 4; ++i) c[k] += regression(i, (i + k) % 4);
        c[k] /= 4.0;
    }
    CirculantSplit split;
    split.symmetric = circulant_from_row(c);
    split.deviation = regression - split.symmetric;
    return split;
}

inline Eigen::Vector4d average_intercept(const Eigen::Vector4d& raw) {
    return Eigen::Vector4d::Constant(raw.mean());
}

// RMS over every (record, actuator) residual of `model`; no range checks.
inline double residual_rms(const CalibrationDataset& data, const CouplingModel& model) {
    if (data.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& rec : data.records) {
        const Eigen::Vector4d r = model.beta0 * rec.theta.deg + model.beta1 - rec.measured.mm;
        sum += r.squaredNorm();
    }
    return std::sqrt(sum / (4.0 * static_cast<double>(data.size())));
}

struct FitResult {
    CouplingModel model;
    FitReport report;
};

inline FitResult fit(const CalibrationDataset& data) {
    const RegressionFit reg = fit_regression(data);
    const CirculantSplit split = symmetrize_circulant(reg.beta0);

    FitResult out;
    out.model.beta0 = split.symmetric;
    out.model.beta1 = average_intercept(reg.beta1);
    out.model.circulant = true;

    auto& rep = out.report;
    rep.beta0_regression = reg.beta0;
    rep.beta0_symmetric = split.symmetric;
    rep.beta0_deviation = split.deviation;
    rep.beta1_raw = reg.beta1;
    rep.beta1_averaged = out.model.beta1;
    rep.residual_rms = residual_rms(data, out.model);
    rep.record_count = data.size();
    return out;
}

/// Full Cartesian grid over [theta_min, theta_max] with spacing `grid_step`,
/// lexicographic in (A, B, C, D) with A slowest. Lengths come from
/// coupled_lengths plus i.i.d. Gaussian noise (angles exact).
inline CalibrationDataset generate_synthetic_dataset(const CouplingModel& model, const PlatformGeometry& geo,
                                                     double grid_step, double noise_sigma, std::uint64_t seed) {
    if (!(grid_step > 0.0)) throw RangeError("grid step must be positive");
    if (!(noise_sigma >= 0.0)) throw RangeError("noise sigma must be non-negative");
    const double span = geo.theta_max - geo.theta_min;
    const double steps = span / grid_step;
    const double rounded = std::round(steps);
    if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, steps))
        throw RangeError("grid step " + std::to_string(grid_step) + " does not divide the servo range " +
                         std::to_string(span));
    const int n = static_cast<int>(rounded) + 1;

    std::vector<double> grid(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) grid[static_cast<std::size_t>(i)] = i + 1 == n ? geo.theta_max : geo.theta_min + i * grid_step;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    CalibrationDataset data;
    data.records.reserve(static_cast<std::size_t>(n) * n * n * n);
    for (double a : grid)
        for (double b : grid)
            for (double c : grid)
                for (double d : grid) {
                    CalibrationRecord rec;
                    rec.theta = MotorAngles(a, b, c, d);
                    rec.measured = coupled_lengths(rec.theta, model, geo);
                    if (noise_sigma > 0.0)
                        for (int j = 0; j < 4; ++j) rec.measured.mm[j] += noise_sigma * noise(rng);
                    data.records.push_back(rec);
                }
    return data;
}

namespace detail {

inline nlohmann::json matrix_json(const Eigen::Matrix4d& m) {
    nlohmann::json a = nlohmann::json::array();
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) a.push_back(m(r, c));
    return a;
}

inline nlohmann::json vector_json(const Eigen::Vector4d& v) {
    nlohmann::json a = nlohmann::json::array();
    for (int r = 0; r < 4; ++r) a.push_back(v[r]);
    return a;
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const FitReport& rep) {
    j = nlohmann::json{
        {"beta0_regression", detail::matrix_json(rep.beta0_regression)},
        {"beta0_symmetric", detail::matrix_json(rep.beta0_symmetric)},
        {"beta0_deviation", detail::matrix_json(rep.beta0_deviation)},
        {"beta0_deviation_frobenius", rep.beta0_deviation.norm()},
        {"beta1_raw", detail::vector_json(rep.beta1_raw)},
        {"beta1_averaged", detail::vector_json(rep.beta1_averaged)},
        {"residual_rms_mm", rep.residual_rms},
        {"record_count", rep.record_count},
    };
}

}  // namespace hsa
