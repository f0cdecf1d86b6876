#pragma once

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hsa/calibration.hpp"
#include "hsa/coupling.hpp"
#include "hsa/io.hpp"
#include "hsa/metrics.hpp"
#include "hsa/pose.hpp"
#include "hsa/trajectory.hpp"

namespace hsa::cli {

namespace fs = std::filesystem;

// Hardware results reported for the physical platform. They cannot be
// reproduced from software alone and are carried in every eval report for
// comparison.
inline nlohmann::json reference_hardware_values() {
    return {
        {"note", "measured on the physical 2x2 HSA platform; not reproducible without hardware"},
        {"position_error_mm", {{"mean", 5.5}, {"std", 1.72}}},
        {"alpha_error_deg", {{"mean", -2.8}, {"std", 1.9}, {"min", -5.85}, {"max", 0.2}}},
        {"phi_error_deg", {{"mean", -1.5}, {"min", -3.4}, {"max", 3.7}}},
        {"uncoupled_length_error_mm", {{"mean", 4.78}, {"std", 4.7}, {"min", -9.0}, {"max", 16.0}}},
        {"coupled_length_error_mm", {{"mean", 0.25}, {"std", 1.6}, {"min", -4.0}, {"max", 6.0}}},
        {"speed_sweep_mean_position_error_mm", {{"min", 5.5}, {"max", 5.7}, {"speed_rpm_range", {0.15, 30.0}}}},
    };
}

inline io::PlatformConfig load_config(const std::string& path) {
    if (path.empty()) return io::PlatformConfig{default_geometry(), std::nullopt};
    return io::load_geometry_config(path);
}

inline fs::path sibling_with_suffix(const fs::path& out, const std::string& suffix) {
    fs::path p = out;
    p.replace_extension();
    p += suffix;
    return p;
}

inline int cmd_fit(const std::string& dataset_path, const std::string& geometry_path, const std::string& out_model,
                   std::string report_path, std::ostream& out) {
    const auto cfg = load_config(geometry_path);
    const auto data = io::load_calibration_csv(dataset_path, cfg.geometry);
    const FitResult result = fit(data);
    if (report_path.empty()) report_path = sibling_with_suffix(out_model, ".report.json").string();
    io::write_file_atomic(out_model, io::format_model(result.model));
    io::write_file_atomic(report_path, nlohmann::json(result.report).dump(2) + "\n");
    out << "records: " << data.size() << "\n"
        << "residual_rms_mm: " << io::format_double(result.report.residual_rms) << "\n"
        << "beta0_deviation_frobenius: " << io::format_double(result.report.beta0_deviation.norm()) << "\n"
        << "model: " << out_model << "\n"
        << "report: " << report_path << "\n";
    return 0;
}

inline int cmd_fk(const std::string& model_path, const std::string& geometry_path, const std::vector<double>& theta,
                  const std::string& format, std::ostream& out) {
    const auto cfg = load_config(geometry_path);
    const auto model = io::load_model(model_path);
    const MotorAngles angles(theta.at(0), theta.at(1), theta.at(2), theta.at(3));
    const ForwardKinematics fk = forward_kinematics(angles, model, cfg.geometry);
    if (format == "json") {
        nlohmann::json j{
            {"theta_deg", {theta[0], theta[1], theta[2], theta[3]}},
            {"lengths_mm", {fk.lengths[A], fk.lengths[B], fk.lengths[C], fk.lengths[D]}},
            {"consistency_residual_mm", fk.consistency_residual},
            {"arc", {{"kappa_per_mm", fk.arc.kappa}, {"phi_rad", fk.arc.phi}, {"s_mm", fk.arc.s}, {"l_s_mm", fk.arc.l_s}}},
            {"pose", io::pose_json(fk.pose)},
        };
        out << j.dump(2) << "\n";
    } else {
        out << "l_a_mm,l_b_mm,l_c_mm,l_d_mm,consistency_residual_mm,kappa_per_mm,phi_rad,s_mm,l_s_mm,"
            << io::kPoseHeader << "\n";
        for (int j = 0; j < 4; ++j) out << io::format_double(fk.lengths[j]) << ',';
        out << io::format_double(fk.consistency_residual) << ',' << io::format_double(fk.arc.kappa) << ','
            << io::format_double(fk.arc.phi) << ',' << io::format_double(fk.arc.s) << ','
            << io::format_double(fk.arc.l_s) << ',' << io::format_pose_row(fk.pose) << "\n";
    }
    return 0;
}

inline std::vector<double> angle_grid(const PlatformGeometry& geo, double step) {
    if (!(step > 0.0)) throw RangeError("--step-deg must be positive");
    const double steps = (geo.theta_max - geo.theta_min) / step;
    if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
        throw RangeError("--step-deg must divide the servo range");
    const int n = static_cast<int>(std::round(steps)) + 1;
    std::vector<double> g;
    for (int i = 0; i < n; ++i) g.push_back(i + 1 == n ? geo.theta_max : geo.theta_min + i * step);
    return g;
}

inline int cmd_workspace(const std::string& model_path, const std::string& geometry_path, double step,
                         const std::string& out_csv, std::ostream& out) {
    const auto cfg = load_config(geometry_path);
    const auto model = io::load_model(model_path);
    const auto grid = angle_grid(cfg.geometry, step);
    std::string csv = "theta_a_deg,theta_b_deg,theta_c_deg,theta_d_deg," + std::string(io::kPoseHeader) + "\n";
    std::size_t rows = 0;
    for (double a : grid)
        for (double b : grid)
            for (double c : grid)
                for (double d : grid) {
                    const auto fk = forward_kinematics(MotorAngles(a, b, c, d), model, cfg.geometry);
                    csv += io::format_double(a) + ',' + io::format_double(b) + ',' + io::format_double(c) + ',' +
                           io::format_double(d) + ',' + io::format_pose_row(fk.pose) + '\n';
                    ++rows;
                }
    io::write_file_atomic(out_csv, csv);
    out << "rows: " << rows << "\n";
    return 0;
}

struct GenOptions {
    std::string kind = "calibration";
    std::string model_path;
    std::string geometry_path;
    std::string out;
    double step_deg = 30.0;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    double speed_rpm = 1.0;
    int samples_per_phase = 25;
    double position_sigma = 0.0;
    double position_bias = 0.0;
};

inline int cmd_gen(const GenOptions& opt, std::ostream& out) {
    const auto cfg = load_config(opt.geometry_path);
    const auto model = io::load_model(opt.model_path);
    if (opt.kind == "calibration") {
        const auto data = generate_synthetic_dataset(model, cfg.geometry, opt.step_deg, opt.noise_sigma, opt.seed);
        io::write_file_atomic(opt.out, io::format_calibration_csv(data));
        out << "records: " << data.size() << "\n";
    } else if (opt.kind == "trajectory") {
        const auto thetas = composite_sweep(cfg.geometry, opt.samples_per_phase);
        TrajectoryNoise noise{opt.position_sigma, opt.position_bias, opt.noise_sigma};
        const auto recs = synthesize_trajectory(thetas, model, cfg.geometry, opt.speed_rpm, noise, opt.seed);
        io::write_file_atomic(opt.out, io::format_trajectory_csv(recs));
        out << "records: " << recs.size() << "\n";
    } else {
        throw RangeError("unknown --kind '" + opt.kind + "' (expected calibration or trajectory)");
    }
    return 0;
}

inline nlohmann::json length_block(const LengthErrors& e) {
    nlohmann::json per = nlohmann::json::array();
    for (const auto& s : e.per_actuator) per.push_back(s);
    return {{"pooled", e.pooled}, {"per_actuator", per}};
}

inline nlohmann::json evaluation_report(const Trajectory& traj, const CouplingModel& model, const io::PlatformConfig& cfg) {
    const auto& recs = traj.records;
    nlohmann::json rep;
    rep["reference_hardware_values"] = reference_hardware_values();
    rep["source"] = traj.source;
    rep["speed_rpm"] = traj.speed_rpm;
    rep["records"] = recs.size();
    rep["error_convention"] = "estimated - observed";
    rep["position_error_mm"] = position_errors(recs, model, cfg.geometry);
    const auto orient = orientation_errors(recs, model, cfg.geometry);
    rep["alpha_error_deg"] = orient.alpha;
    rep["phi_error_deg"] = orient.phi ? nlohmann::json(*orient.phi) : nlohmann::json(nullptr);
    rep["phi_skipped"] = orient.phi_skipped;
    if (has_observed_lengths(recs)) {
        rep["coupled_length_error_mm"] = length_block(length_errors(recs, LengthModel{model}, cfg.geometry));
        rep["uncoupled_length_error_mm"] =
            cfg.hsa ? length_block(length_errors(recs, LengthModel{*cfg.hsa}, cfg.geometry)) : nlohmann::json(nullptr);
    } else {
        rep["coupled_length_error_mm"] = nullptr;
        rep["uncoupled_length_error_mm"] = nullptr;
    }
    return rep;
}

inline int cmd_eval(const std::string& model_path, const std::string& geometry_path,
                    const std::string& trajectory_path, const std::string& out_report, std::string plot_csv,
                    std::ostream& out) {
    const auto cfg = load_config(geometry_path);
    const auto model = io::load_model(model_path);
    const auto loaded = io::load_trajectory_csv(trajectory_path, cfg.geometry);
    const auto rep = evaluation_report(loaded.trajectory, model, cfg);
    if (plot_csv.empty()) plot_csv = sibling_with_suffix(out_report, ".records.csv").string();
    io::write_file_atomic(plot_csv, io::format_evaluation_csv(evaluate_records(loaded.trajectory.records, model, cfg.geometry)));
    io::write_file_atomic(out_report, rep.dump(2) + "\n");
    const auto& pos = rep["position_error_mm"];
    out << "records: " << loaded.trajectory.records.size() << "\n"
        << "position_error_mm mean " << io::format_double(pos["mean"].get<double>()) << " std "
        << io::format_double(pos["std"].get<double>()) << "\n"
        << "report: " << out_report << "\n"
        << "records_csv: " << plot_csv << "\n";
    return 0;
}

inline int cmd_speed_eval(const std::string& model_path, const std::string& geometry_path,
                          const std::string& trajectory_dir, const std::string& out_report, const std::string& format,
                          std::ostream& out) {
    const auto cfg = load_config(geometry_path);
    const auto model = io::load_model(model_path);
    if (!fs::is_directory(trajectory_dir)) throw Error("not a directory: " + trajectory_dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(trajectory_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    if (files.empty()) throw EmptyDatasetError("no trajectory .csv files in " + trajectory_dir);
    std::sort(files.begin(), files.end());

    std::vector<Trajectory> trajs;
    for (const auto& f : files) trajs.push_back(io::load_trajectory_csv(f, cfg.geometry).trajectory);
    const auto buckets = error_vs_speed(trajs, model, cfg.geometry);

    std::ostringstream table;
    table << "speed_rpm,trajectories,n,mean_mm,std_mm,min_mm,max_mm\n";
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& b : buckets) {
        table << io::format_double(b.speed_rpm) << ',' << b.trajectory_count;
        if (b.position) {
            const auto& s = *b.position;
            table << ',' << s.n << ',' << io::format_double(s.mean) << ',' << io::format_double(s.std) << ','
                  << io::format_double(s.min) << ',' << io::format_double(s.max) << "\n";
        } else {
            table << ",0,,,,\n";
        }
        rows.push_back(nlohmann::json{{"speed_rpm", b.speed_rpm},
                        {"trajectories", b.trajectory_count},
                        {"position_error_mm", b.position ? nlohmann::json(*b.position) : nlohmann::json(nullptr)}});
    }
    if (format == "csv") {
        io::write_file_atomic(out_report, table.str());
    } else {
        nlohmann::json rep{{"reference_hardware_values", reference_hardware_values()}, {"buckets", rows}};
        io::write_file_atomic(out_report, rep.dump(2) + "\n");
    }
    out << table.str();
    return 0;
}

/// Parses `args` (without the program name) and runs one subcommand. Returns
/// the process exit status; diagnostics go to `err`.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Forward kinematics toolkit for a 2x2 HSA platform"};
    app.require_subcommand(1);

    std::string geometry, model, out_path, report, format = "csv", speed_format = "json", plot_csv;
    double step = 30.0;
    std::vector<double> theta;
    std::string dataset, trajectory, dir;
    GenOptions gen;

    auto add_common = [&](CLI::App* sub, bool needs_model) {
        sub->add_option("--geometry", geometry, "Geometry config file (key = value); defaults built in");
        if (needs_model) sub->add_option("--model", model, "Coupling model JSON")->required();
    };

    auto* fit_cmd = app.add_subcommand("fit", "Fit a circulant coupling model to a calibration CSV");
    fit_cmd->add_option("dataset", dataset, "Calibration CSV")->required();
    add_common(fit_cmd, false);
    fit_cmd->add_option("--out", out_path, "Output model JSON")->required();
    fit_cmd->add_option("--report", report, "Output fit report JSON (default <out>.report.json)");

    auto* fk_cmd = app.add_subcommand("fk", "Forward kinematics for one set of servo angles");
    add_common(fk_cmd, true);
    fk_cmd->add_option("theta", theta, "Servo angles A B C D [deg]")->required()->expected(4);
    fk_cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));

    auto* ws_cmd = app.add_subcommand("workspace", "Sample the workspace on a servo-angle grid");
    add_common(ws_cmd, true);
    ws_cmd->add_option("--step-deg", step, "Grid step [deg]");
    ws_cmd->add_option("--out", out_path, "Output pose CSV")->required();

    auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic calibration or trajectory dataset");
    add_common(gen_cmd, true);
    gen_cmd->add_option("--kind", gen.kind, "calibration or trajectory")->check(CLI::IsMember({"calibration", "trajectory"}));
    gen_cmd->add_option("--out", out_path, "Output CSV")->required();
    gen_cmd->add_option("--step-deg", gen.step_deg, "Calibration grid step [deg]");
    gen_cmd->add_option("--noise-sigma", gen.noise_sigma, "Gaussian noise on lengths [mm]");
    gen_cmd->add_option("--seed", gen.seed, "Random seed");
    gen_cmd->add_option("--speed-rpm", gen.speed_rpm, "Declared servo speed for trajectories [rpm]");
    gen_cmd->add_option("--samples-per-phase", gen.samples_per_phase, "Trajectory samples per motion phase");
    gen_cmd->add_option("--position-sigma", gen.position_sigma, "Trajectory position noise spread [mm]");
    gen_cmd->add_option("--position-bias", gen.position_bias, "Trajectory position noise mean magnitude [mm]");

    auto* eval_cmd = app.add_subcommand("eval", "Compare a trajectory against model predictions");
    add_common(eval_cmd, true);
    eval_cmd->add_option("trajectory", trajectory, "Trajectory CSV")->required();
    eval_cmd->add_option("--out", out_path, "Output report JSON")->required();
    eval_cmd->add_option("--records-csv", plot_csv, "Per-record CSV (default <out>.records.csv)");

    auto* speed_cmd = app.add_subcommand("speed-eval", "Position error per declared servo speed");
    add_common(speed_cmd, true);
    speed_cmd->add_option("trajectory_dir", dir, "Directory of trajectory CSVs")->required();
    speed_cmd->add_option("--out", out_path, "Output report")->required();
    speed_cmd->add_option("--format", speed_format, "Report format (json or csv)")->check(CLI::IsMember({"csv", "json"}));

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, er;
        const int code = app.exit(e, o, er);
        out << o.str();
        err << er.str();
        return code;
    }

    try {
        if (fit_cmd->parsed()) return cmd_fit(dataset, geometry, out_path, report, out);
        if (fk_cmd->parsed()) return cmd_fk(model, geometry, theta, format, out);
        if (ws_cmd->parsed()) return cmd_workspace(model, geometry, step, out_path, out);
        if (gen_cmd->parsed()) {
            gen.model_path = model;
            gen.geometry_path = geometry;
            gen.out = out_path;
            return cmd_gen(gen, out);
        }
        if (eval_cmd->parsed()) return cmd_eval(model, geometry, trajectory, out_path, plot_csv, out);
        if (speed_cmd->parsed())
            return cmd_speed_eval(model, geometry, dir, out_path, speed_format, out);
    } catch (const IllPosedError& e) {
        err << "error: ill-posed dataset: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace hsa::cli
