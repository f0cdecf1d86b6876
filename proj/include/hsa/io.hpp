#pragma once

#include <Eigen/Geometry>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "hsa/calibration.hpp"
#include "hsa/coupling.hpp"
#include "hsa/errors.hpp"
#include "hsa/geometry.hpp"
#include "hsa/metrics.hpp"
#include "hsa/pose.hpp"

namespace hsa::io {

inline constexpr std::string_view kCalibrationHeader =
    "theta_a_deg,theta_b_deg,theta_c_deg,theta_d_deg,l_a_mm,l_b_mm,l_c_mm,l_d_mm";

inline constexpr std::string_view kTrajectoryHeader =
    "time_s,theta_a_deg,theta_b_deg,theta_c_deg,theta_d_deg,x_mm,y_mm,z_mm,qx,qy,qz,qw,"
    "l_a_mm,l_b_mm,l_c_mm,l_d_mm,speed_rpm";

inline constexpr std::string_view kPoseHeader = "x_mm,y_mm,z_mm,alpha_deg,phi_deg";

inline constexpr int kSchemaVersion = 1;

// Shortest representation that parses back to the same double.
inline std::string format_double(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

struct Field {
    std::string text;
    std::size_t column = 1;  // 1-based
};

// 1-based column of the first non-blank character after the first '='.
inline std::size_t value_column(std::string_view line) {
    const auto eq = line.find('=');
    const auto v = line.find_first_not_of(" \t", eq + 1);
    return (v == std::string_view::npos ? line.size() : v) + 1;
}

inline std::vector<Field> split_csv(std::string_view line) {
    std::vector<Field> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        const auto end = comma == std::string_view::npos ? line.size() : comma;
        out.push_back({trim(line.substr(start, end - start)), start + 1});
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline double parse_double(const Field& f, const std::string& source, std::size_t line, std::string_view what) {
    double value = 0.0;
    const char* first = f.text.data();
    const char* last = first + f.text.size();
    if (!f.text.empty() && *first == '+') ++first;
    const auto res = std::from_chars(first, last, value);
    if (f.text.empty() || res.ec != std::errc{} || res.ptr != last || !std::isfinite(value))
        throw ParseError(source, line, f.column, "malformed number '" + f.text + "' in " + std::string(what));
    return value;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
    }
    return lines;
}

/// Writes to a sibling temporary file, then renames over `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw Error("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// Geometry configuration: `key = value` per line, `#` comments.

struct PlatformConfig {
    PlatformGeometry geometry;
    std::optional<SingleHsaModel> hsa;  // present when rest_length_mm is given
};

inline PlatformConfig parse_geometry_config(std::string_view text, const std::string& source = "<config>") {
    PlatformConfig cfg;
    std::optional<double> d, rest;
    double alpha0 = SingleHsaModel{}.alpha0, alpha1 = SingleHsaModel{}.alpha1;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        auto hash = raw.find('#');
        const std::string line = trim(std::string_view(raw).substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(source, lineno, 1, "expected key = value");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const Field val{trim(std::string_view(line).substr(eq + 1)), value_column(raw)};
        if (key == "handedness") {
            const auto parts = split_csv(val.text);
            if (parts.size() != 4) throw ParseError(source, lineno, val.column, "handedness needs 4 entries");
            for (std::size_t i = 0; i < 4; ++i) {
                if (parts[i].text == "L" || parts[i].text == "left")
                    cfg.geometry.handedness[i] = Handedness::left;
                else if (parts[i].text == "R" || parts[i].text == "right")
                    cfg.geometry.handedness[i] = Handedness::right;
                else
                    throw ParseError(source, lineno, val.column, "handedness entries must be L or R");
            }
            continue;
        }
        const double x = parse_double(val, source, lineno, key);
        if (key == "m_mm") cfg.geometry.m = x;
        else if (key == "d_mm") d = x;
        else if (key == "theta_min_deg") cfg.geometry.theta_min = x;
        else if (key == "theta_max_deg") cfg.geometry.theta_max = x;
        else if (key == "rest_length_mm") rest = x;
        else if (key == "alpha0") alpha0 = x;
        else if (key == "alpha1") alpha1 = x;
        else throw ParseError(source, lineno, 1, "unknown key '" + key + "'");
    }
    cfg.geometry.d = d.value_or(cfg.geometry.m * std::numbers::sqrt2);
    cfg.geometry.validate();
    if (rest) {
        cfg.hsa = SingleHsaModel{alpha0, alpha1, *rest};
        cfg.hsa->validate();
    }
    return cfg;
}

inline PlatformConfig load_geometry_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_geometry_config(ss.str(), path.string());
}

inline std::string format_geometry_config(const PlatformConfig& cfg) {
    const auto& g = cfg.geometry;
    std::ostringstream os;
    os << "m_mm = " << format_double(g.m) << "\n"
       << "d_mm = " << format_double(g.d) << "\n"
       << "theta_min_deg = " << format_double(g.theta_min) << "\n"
       << "theta_max_deg = " << format_double(g.theta_max) << "\n"
       << "handedness = ";
    for (int i = 0; i < 4; ++i) os << (i ? "," : "") << to_string(g.handedness[static_cast<std::size_t>(i)]);
    os << "\n";
    if (cfg.hsa) {
        os << "rest_length_mm = " << format_double(cfg.hsa->rest_length) << "\n"
           << "alpha0 = " << format_double(cfg.hsa->alpha0) << "\n"
           << "alpha1 = " << format_double(cfg.hsa->alpha1) << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Coupling model / fit report JSON.

inline CouplingModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in).get<CouplingModel>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(path.string() + ": invalid model file: " + e.what());
    }
}

inline std::string format_model(const CouplingModel& model) { return nlohmann::json(model).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Calibration CSV.

namespace detail {

inline bool is_comment(const std::string& line) {
    const auto t = trim(line);
    return t.empty() || t.front() == '#';
}

}  // namespace detail

inline CalibrationDataset parse_calibration_csv(const std::vector<std::string>& lines, const PlatformGeometry& geo,
                                                const std::string& source) {
    std::size_t i = 0;
    while (i < lines.size() && detail::is_comment(lines[i])) ++i;
    if (i == lines.size()) throw EmptyDatasetError(source + ": empty calibration file");
    if (trim(lines[i]) != kCalibrationHeader)
        throw ParseError(source, i + 1, 1, "expected header '" + std::string(kCalibrationHeader) + "'");
    ++i;

    CalibrationDataset data;
    for (; i < lines.size(); ++i) {
        if (detail::is_comment(lines[i])) continue;
        const std::size_t lineno = i + 1;
        const auto fields = split_csv(lines[i]);
        if (fields.size() != 8)
            throw ParseError(source, lineno, 1, "expected 8 columns, found " + std::to_string(fields.size()));
        CalibrationRecord rec;
        for (int j = 0; j < 4; ++j) {
            const auto& f = fields[static_cast<std::size_t>(j)];
            const double th = parse_double(f, source, lineno, "theta");
            if (th < geo.theta_min || th > geo.theta_max) {
                throw RangeError(source + ":" + std::to_string(lineno) + ":" + std::to_string(f.column) + ": row " +
                                 std::to_string(lineno) + " theta_" + actuator_name(j) + " = " + f.text +
                                 " deg outside [" + format_double(geo.theta_min) + ", " +
                                 format_double(geo.theta_max) + "]");
            }
            rec.theta.deg[j] = th;
        }
        for (int j = 0; j < 4; ++j) {
            const auto& f = fields[static_cast<std::size_t>(4 + j)];
            const double l = parse_double(f, source, lineno, "length");
            if (!(l > 0.0)) throw ParseError(source, lineno, f.column, "length must be positive");
            rec.measured.mm[j] = l;
        }
        data.records.push_back(rec);
    }
    if (data.empty()) throw EmptyDatasetError(source + ": calibration file has no records");
    return data;
}

inline CalibrationDataset load_calibration_csv(const std::filesystem::path& path,
                                               const PlatformGeometry& geo = default_geometry()) {
    return parse_calibration_csv(read_lines(path), geo, path.string());
}

inline std::string format_calibration_csv(const CalibrationDataset& data) {
    std::string out(kCalibrationHeader);
    out += '\n';
    for (const auto& rec : data.records) {
        for (int j = 0; j < 4; ++j) out += format_double(rec.theta[j]) + ',';
        for (int j = 0; j < 4; ++j) out += format_double(rec.measured[j]) + (j == 3 ? '\n' : ',');
    }
    return out;
}

// ---------------------------------------------------------------------------
// Trajectory CSV. Metadata precedes the header as `# key = value` lines.

struct DatasetHeader {
    int schema_version = kSchemaVersion;
    HomogeneousTransform base_alignment;  // mocap base frame -> model base frame
    std::string units = "mm,deg,s";
    std::string quaternion_convention = "xyzw";
};

struct LoadedTrajectory {
    DatasetHeader header;
    Trajectory trajectory;
};

inline LoadedTrajectory parse_trajectory_csv(const std::vector<std::string>& lines, const PlatformGeometry& geo,
                                             const std::string& source) {
    LoadedTrajectory out;
    out.trajectory.source = source;
    auto& hdr = out.header;
    std::size_t i = 0;
    for (; i < lines.size() && detail::is_comment(lines[i]); ++i) {
        const std::string body = trim(std::string_view(lines[i]).substr(lines[i].find('#') + 1));
        const auto eq = body.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        const std::size_t col = value_column(lines[i]);
        if (key == "schema_version") {
            const double v = parse_double({value, col}, source, i + 1, key);
            if (v != kSchemaVersion)
                throw ParseError(source, i + 1, col, "unsupported schema_version " + value);
            hdr.schema_version = kSchemaVersion;
        } else if (key == "base_alignment") {
            std::string spaced = value;
            for (auto& ch : spaced) if (ch == ' ') ch = ',';
            std::vector<Field> parts;
            for (auto& f : split_csv(spaced))
                if (!f.text.empty()) parts.push_back({f.text, col + f.column - 1});
            if (parts.size() != 16) throw ParseError(source, i + 1, col, "base_alignment needs 16 numbers");
            Eigen::Matrix4d m;
            for (int k = 0; k < 16; ++k) m(k / 4, k % 4) = parse_double(parts[static_cast<std::size_t>(k)], source, i + 1, key);
            hdr.base_alignment = HomogeneousTransform(m);
            if (!hdr.base_alignment.is_valid())
                throw ParseError(source, i + 1, col, "base_alignment is not a rigid transform");
        } else if (key == "units") {
            if (value != "mm,deg,s") throw ParseError(source, i + 1, col, "unsupported units '" + value + "'");
        } else if (key == "quaternion") {
            if (value != "xyzw")
                throw ParseError(source, i + 1, col, "unsupported quaternion convention '" + value + "'");
        }
    }
    if (i == lines.size()) throw EmptyDatasetError(source + ": empty trajectory file");
    if (trim(lines[i]) != kTrajectoryHeader)
        throw ParseError(source, i + 1, 1, "expected header '" + std::string(kTrajectoryHeader) + "'");
    ++i;

    const Eigen::Matrix3d align_r = hdr.base_alignment.rotation();
    const Eigen::Quaterniond align_q(align_r);
    const Eigen::Vector3d align_t = hdr.base_alignment.translation();
    auto& records = out.trajectory.records;
    for (; i < lines.size(); ++i) {
        if (detail::is_comment(lines[i])) continue;
        const std::size_t ln = i + 1;
        const auto f = split_csv(lines[i]);
        if (f.size() != 17) throw ParseError(source, ln, 1, "expected 17 columns, found " + std::to_string(f.size()));
        TrajectoryRecord rec;
        rec.time = parse_double(f[0], source, ln, "time_s");
        if (!records.empty() && !(rec.time > records.back().time))
            throw ParseError(source, ln, f[0].column, "non-monotone timestamp (row " + std::to_string(ln) + ")");
        for (int j = 0; j < 4; ++j) {
            const auto& fj = f[static_cast<std::size_t>(1 + j)];
            rec.theta.deg[j] = parse_double(fj, source, ln, "theta");
            if (rec.theta.deg[j] < geo.theta_min || rec.theta.deg[j] > geo.theta_max)
                throw RangeError(source + ":" + std::to_string(ln) + ":" + std::to_string(fj.column) + ": row " +
                                 std::to_string(ln) + " theta_" + actuator_name(j) + " = " + fj.text +
                                 " deg outside the servo range");
        }
        Eigen::Vector3d p;
        for (int k = 0; k < 3; ++k) p[k] = parse_double(f[static_cast<std::size_t>(5 + k)], source, ln, "position");
        double q[4];
        for (int k = 0; k < 4; ++k) q[k] = parse_double(f[static_cast<std::size_t>(8 + k)], source, ln, "quaternion");
        Eigen::Quaterniond quat = from_xyzw(q[0], q[1], q[2], q[3]);
        try {
            quat = checked_unit(quat);
        } catch (const DomainError& e) {
            throw ParseError(source, ln, f[8].column, e.what());
        }
        rec.observed_position = align_r * p + align_t;
        rec.observed_quaternion = align_q * quat;

        int present = 0;
        for (int k = 0; k < 4; ++k) present += f[static_cast<std::size_t>(12 + k)].text.empty() ? 0 : 1;
        if (present == 4) {
            ActuatorLengths l;
            for (int k = 0; k < 4; ++k) l.mm[k] = parse_double(f[static_cast<std::size_t>(12 + k)], source, ln, "length");
            rec.observed_lengths = l;
        } else if (present != 0) {
            throw ParseError(source, ln, f[12].column, "observed lengths must be all present or all empty");
        }
        rec.speed_rpm = parse_double(f[16], source, ln, "speed_rpm");
        if (!records.empty() && rec.speed_rpm != records.front().speed_rpm)
            throw ParseError(source, ln, f[16].column, "speed_rpm must be constant within a trajectory file");
        records.push_back(std::move(rec));
    }
    if (records.empty()) throw EmptyDatasetError(source + ": trajectory file has no records");
    out.trajectory.speed_rpm = records.front().speed_rpm;
    return out;
}

inline LoadedTrajectory load_trajectory_csv(const std::filesystem::path& path,
                                            const PlatformGeometry& geo = default_geometry()) {
    return parse_trajectory_csv(read_lines(path), geo, path.string());
}

/// Records are written as given (already in the model base frame) under the
/// supplied header.
inline std::string format_trajectory_csv(std::span<const TrajectoryRecord> records,
                                         const DatasetHeader& hdr = {}) {
    std::ostringstream os;
    os << "# schema_version = " << hdr.schema_version << "\n# base_alignment =";
    for (int k = 0; k < 16; ++k) os << ' ' << format_double(hdr.base_alignment.t(k / 4, k % 4));
    os << "\n# units = " << hdr.units << "\n# quaternion = " << hdr.quaternion_convention << "\n";
    os << kTrajectoryHeader << "\n";
    for (const auto& r : records) {
        os << format_double(r.time);
        for (int j = 0; j < 4; ++j) os << ',' << format_double(r.theta[j]);
        for (int k = 0; k < 3; ++k) os << ',' << format_double(r.observed_position[k]);
        for (double c : to_xyzw(r.observed_quaternion)) os << ',' << format_double(c);
        for (int j = 0; j < 4; ++j) os << ',' << (r.observed_lengths ? format_double((*r.observed_lengths)[j]) : "");
        os << ',' << format_double(r.speed_rpm) << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Pose output.

inline std::string format_pose_row(const Pose& p) {
    return format_double(p.position.x()) + ',' + format_double(p.position.y()) + ',' +
           format_double(p.position.z()) + ',' + format_double(rad_to_deg(p.alpha)) + ',' +
           format_double(rad_to_deg(p.phi));
}

inline nlohmann::json pose_json(const Pose& p) {
    nlohmann::json t = nlohmann::json::array();
    for (int k = 0; k < 16; ++k) t.push_back(p.transform.t(k / 4, k % 4));
    return {{"x_mm", p.position.x()}, {"y_mm", p.position.y()}, {"z_mm", p.position.z()},
            {"alpha_deg", rad_to_deg(p.alpha)}, {"phi_deg", rad_to_deg(p.phi)}, {"transform", t}};
}

inline std::string format_evaluation_csv(std::span<const RecordEvaluation> rows) {
    std::ostringstream os;
    os << "time_s,pred_x_mm,pred_y_mm,pred_z_mm,obs_x_mm,obs_y_mm,obs_z_mm,position_error_mm,"
          "pred_alpha_deg,obs_alpha_deg,alpha_error_deg,pred_phi_deg,obs_phi_deg,phi_error_deg\n";
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    for (const auto& r : rows) {
        os << format_double(r.time);
        for (int k = 0; k < 3; ++k) os << ',' << format_double(r.predicted_position[k]);
        for (int k = 0; k < 3; ++k) os << ',' << format_double(r.observed_position[k]);
        os << ',' << format_double(r.position_error) << ',' << format_double(r.predicted_alpha_deg) << ','
           << format_double(r.observed_alpha_deg) << ',' << format_double(r.alpha_error_deg) << ','
           << opt(r.predicted_phi_deg) << ',' << opt(r.observed_phi_deg) << ',' << opt(r.phi_error_deg) << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------

/// Chord lengths between matching base and platform corners, with the corners
/// at (+-m/2, +-m/2, 0) in each body's frame (A=(+,+), B=(+,-), C=(-,-),
/// D=(-,+)).
///
/// For an ideal arc these chords are l_s (1 - kappa r_J), r_J being the
/// corner's offset along the bend direction, so they agree with
/// lengths_from_arc only when the geometry's d equals the centre-to-corner
/// distance m/sqrt(2) and the pose carries no twist (phi = 0 for the arc
/// transform used here).
inline ActuatorLengths corner_lengths_from_pose(const HomogeneousTransform& platform_pose,
                                                const PlatformGeometry& geo) {
    const double h = geo.m / 2.0;
    const Eigen::Vector3d corners[4] = {{h, h, 0.0}, {h, -h, 0.0}, {-h, -h, 0.0}, {-h, h, 0.0}};
    ActuatorLengths out;
    for (int j = 0; j < 4; ++j) out.mm[j] = (platform_pose.apply(corners[j]) - corners[j]).norm();
    return out;
}

}  // namespace hsa::io
