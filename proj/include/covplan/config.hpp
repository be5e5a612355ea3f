#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "covplan/body_mask.hpp"
#include "covplan/grid2d.hpp"
#include "covplan/sensor.hpp"
#include "covplan/vec3.hpp"

namespace covplan {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// All pipeline tunables. Defaults follow the reference experiment scales
// (7.5 cm occupancy voxels, half that for the SDF, minimum reward 100).
struct PipelineConfig {
    std::string complete_mesh;
    std::string target_mesh;
    std::string body_file; // optional robot body JSON
    std::string out_dir = "out";

    double occupancy_voxel = 0.075;
    double sdf_voxel = 0.0375;
    double sdf_truncation = 0.375; // 10 * sdf_voxel

    double target_density = 50.0; // points per square meter
    std::uint64_t target_seed = 1;

    Vec3 start{0, 0, 0};
    double cost_threshold = 0.8;
    double max_step = 0.3;
    double inscribed_radius = 0.3;
    double penalty_weight = 1.0;

    int candidate_count = 300;
    std::uint64_t candidate_seed = 1;
    int overlap_n = 1;
    double yaw_offset = 0.0;

    SensorModel sensor;
    int mask_size = 1024;

    int min_reward = 100;
    std::string solver = "greedy"; // greedy | backtracking | probabilistic
    double lambda = 0.7;
    int trials = 32;
    std::uint64_t solver_seed = 1;

    double tsp_t0 = 0.0;     // 0: initial tour cost / n
    double tsp_alpha = 0.995;
    long tsp_iters = 0;      // 0: 20000 * n
    std::uint64_t tsp_seed = 1;

    double sim_cell_size = 0.05;
    double sim_band_lo = 0.1;
    double sim_band_hi = 1.5;
    std::vector<Vec2> footprint = {{0.35, 0.25}, {-0.35, 0.25}, {-0.35, -0.25}, {0.35, -0.25}};

    int workers = 0; // 0 = all cores

    void validate() const {
        if (occupancy_voxel <= 0 || sdf_voxel <= 0) throw ConfigError("voxel sizes must be positive");
        if (sdf_truncation < 2.0 * sdf_voxel)
            throw ConfigError("sdf_truncation must be at least 2 * sdf_voxel");
        if (target_density <= 0) throw ConfigError("target_density must be positive");
        if (cost_threshold <= 0 || cost_threshold > 1) throw ConfigError("cost_threshold must be in (0,1]");
        if (max_step <= 0) throw ConfigError("max_step must be positive");
        if (inscribed_radius <= 0) throw ConfigError("inscribed_radius must be positive");
        if (candidate_count < 1) throw ConfigError("candidate_count must be >= 1");
        if (overlap_n < 1) throw ConfigError("overlap_n must be >= 1");
        if (mask_size < 64) throw ConfigError("mask_size must be >= 64");
        if (min_reward < 0) throw ConfigError("min_reward must be >= 0");
        if (solver != "greedy" && solver != "backtracking" && solver != "probabilistic")
            throw ConfigError("solver must be greedy, backtracking or probabilistic");
        if (lambda <= 0) throw ConfigError("lambda must be positive");
        if (trials < 1) throw ConfigError("trials must be >= 1");
        if (sim_cell_size <= 0) throw ConfigError("sim_cell_size must be positive");
        try {
            sensor.validate();
            FootprintPolygon{footprint}.validate();
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
    }
};

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace detail

// Flat TOML-style "key = value" text. Strings quoted, arrays bracketed.
inline std::string serialize_config(const PipelineConfig& c) {
    std::ostringstream out;
    auto str = [&](const char* k, const std::string& v) { out << k << " = \"" << v << "\"\n"; };
    auto num = [&](const char* k, double v) { out << k << " = " << detail::format_double(v) << "\n"; };
    auto integer = [&](const char* k, long long v) { out << k << " = " << v << "\n"; };
    str("complete_mesh", c.complete_mesh);
    str("target_mesh", c.target_mesh);
    str("body_file", c.body_file);
    str("out_dir", c.out_dir);
    num("occupancy_voxel", c.occupancy_voxel);
    num("sdf_voxel", c.sdf_voxel);
    num("sdf_truncation", c.sdf_truncation);
    num("target_density", c.target_density);
    integer("target_seed", static_cast<long long>(c.target_seed));
    out << "start = [" << detail::format_double(c.start.x) << ", "
        << detail::format_double(c.start.y) << ", " << detail::format_double(c.start.z) << "]\n";
    num("cost_threshold", c.cost_threshold);
    num("max_step", c.max_step);
    num("inscribed_radius", c.inscribed_radius);
    num("penalty_weight", c.penalty_weight);
    integer("candidate_count", c.candidate_count);
    integer("candidate_seed", static_cast<long long>(c.candidate_seed));
    integer("overlap_n", c.overlap_n);
    num("yaw_offset", c.yaw_offset);
    num("sensor_fov_h", c.sensor.fov_h);
    num("sensor_fov_v", c.sensor.fov_v);
    num("sensor_range_min", c.sensor.range_min);
    num("sensor_range_max", c.sensor.range_max);
    out << "sensor_mount = [" << detail::format_double(c.sensor.mount_offset.translation.x)
        << ", " << detail::format_double(c.sensor.mount_offset.translation.y) << ", "
        << detail::format_double(c.sensor.mount_offset.translation.z) << "]\n";
    num("sensor_mount_yaw", c.sensor.mount_offset.yaw);
    integer("mask_size", c.mask_size);
    integer("min_reward", c.min_reward);
    str("solver", c.solver);
    num("lambda", c.lambda);
    integer("trials", c.trials);
    integer("solver_seed", static_cast<long long>(c.solver_seed));
    num("tsp_t0", c.tsp_t0);
    num("tsp_alpha", c.tsp_alpha);
    integer("tsp_iters", c.tsp_iters);
    integer("tsp_seed", static_cast<long long>(c.tsp_seed));
    num("sim_cell_size", c.sim_cell_size);
    num("sim_band_lo", c.sim_band_lo);
    num("sim_band_hi", c.sim_band_hi);
    out << "footprint = [";
    for (std::size_t i = 0; i < c.footprint.size(); ++i) {
        if (i) out << ", ";
        out << detail::format_double(c.footprint[i].x) << ", "
            << detail::format_double(c.footprint[i].y);
    }
    out << "]\n";
    integer("workers", c.workers);
    return out.str();
}

inline PipelineConfig parse_config_text(const std::string& text) {
    PipelineConfig c;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string s = detail::trim(line);
        if (s.empty() || s[0] == '#') continue;
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        std::string key = detail::trim(s.substr(0, eq));
        std::string value = detail::trim(s.substr(eq + 1));
        auto parse_num = [&](const std::string& v) {
            try {
                return std::stod(v);
            } catch (...) {
                throw ConfigError("config line " + std::to_string(line_no) + ": bad number '" +
                                  v + "'");
            }
        };
        auto parse_string = [&](const std::string& v) {
            if (v.size() >= 2 && v.front() == '"' && v.back() == '"')
                return v.substr(1, v.size() - 2);
            return v;
        };
        auto parse_array = [&](const std::string& v) {
            if (v.size() < 2 || v.front() != '[' || v.back() != ']')
                throw ConfigError("config line " + std::to_string(line_no) + ": expected array");
            std::vector<double> out;
            std::string body = v.substr(1, v.size() - 2);
            std::istringstream bs(body);
            std::string tok;
            while (std::getline(bs, tok, ',')) {
                tok = detail::trim(tok);
                if (!tok.empty()) out.push_back(parse_num(tok));
            }
            return out;
        };

        if (key == "complete_mesh") c.complete_mesh = parse_string(value);
        else if (key == "target_mesh") c.target_mesh = parse_string(value);
        else if (key == "body_file") c.body_file = parse_string(value);
        else if (key == "out_dir") c.out_dir = parse_string(value);
        else if (key == "occupancy_voxel") c.occupancy_voxel = parse_num(value);
        else if (key == "sdf_voxel") c.sdf_voxel = parse_num(value);
        else if (key == "sdf_truncation") c.sdf_truncation = parse_num(value);
        else if (key == "target_density") c.target_density = parse_num(value);
        else if (key == "target_seed") c.target_seed = static_cast<std::uint64_t>(parse_num(value));
        else if (key == "start") {
            auto a = parse_array(value);
            if (a.size() != 3) throw ConfigError("start: expected 3 numbers");
            c.start = {a[0], a[1], a[2]};
        } else if (key == "cost_threshold") c.cost_threshold = parse_num(value);
        else if (key == "max_step") c.max_step = parse_num(value);
        else if (key == "inscribed_radius") c.inscribed_radius = parse_num(value);
        else if (key == "penalty_weight") c.penalty_weight = parse_num(value);
        else if (key == "candidate_count") c.candidate_count = static_cast<int>(parse_num(value));
        else if (key == "candidate_seed") c.candidate_seed = static_cast<std::uint64_t>(parse_num(value));
        else if (key == "overlap_n") c.overlap_n = static_cast<int>(parse_num(value));
        else if (key == "yaw_offset") c.yaw_offset = parse_num(value);
        else if (key == "sensor_fov_h") c.sensor.fov_h = parse_num(value);
        else if (key == "sensor_fov_v") c.sensor.fov_v = parse_num(value);
        else if (key == "sensor_range_min") c.sensor.range_min = parse_num(value);
        else if (key == "sensor_range_max") c.sensor.range_max = parse_num(value);
        else if (key == "sensor_mount") {
            auto a = parse_array(value);
            if (a.size() != 3) throw ConfigError("sensor_mount: expected 3 numbers");
            c.sensor.mount_offset.translation = {a[0], a[1], a[2]};
        } else if (key == "sensor_mount_yaw") c.sensor.mount_offset.yaw = parse_num(value);
        else if (key == "mask_size") c.mask_size = static_cast<int>(parse_num(value));
        else if (key == "min_reward") c.min_reward = static_cast<int>(parse_num(value));
        else if (key == "solver") c.solver = parse_string(value);
        else if (key == "lambda") c.lambda = parse_num(value);
        else if (key == "trials") c.trials = static_cast<int>(parse_num(value));
        else if (key == "solver_seed") c.solver_seed = static_cast<std::uint64_t>(parse_num(value));
        else if (key == "tsp_t0") c.tsp_t0 = parse_num(value);
        else if (key == "tsp_alpha") c.tsp_alpha = parse_num(value);
        else if (key == "tsp_iters") c.tsp_iters = static_cast<long>(parse_num(value));
        else if (key == "tsp_seed") c.tsp_seed = static_cast<std::uint64_t>(parse_num(value));
        else if (key == "sim_cell_size") c.sim_cell_size = parse_num(value);
        else if (key == "sim_band_lo") c.sim_band_lo = parse_num(value);
        else if (key == "sim_band_hi") c.sim_band_hi = parse_num(value);
        else if (key == "footprint") {
            auto a = parse_array(value);
            if (a.size() < 6 || a.size() % 2 != 0)
                throw ConfigError("footprint: expected an even list of >= 6 numbers");
            c.footprint.clear();
            for (std::size_t i = 0; i < a.size(); i += 2) c.footprint.push_back({a[i], a[i + 1]});
        } else if (key == "workers") c.workers = static_cast<int>(parse_num(value));
        else throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    return c;
}

inline PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

inline void save_config(const PipelineConfig& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file: " + path);
    out << serialize_config(c);
}

} // namespace covplan
