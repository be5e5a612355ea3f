#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "covplan/building_gen.hpp"
#include "covplan/config.hpp"
#include "covplan/pipeline.hpp"

namespace fs = std::filesystem;
using covplan::PipelineConfig;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

// Config precedence: defaults < config file < command-line flags. Flags are
// registered against a scratch config; appliers copy only the flags the
// user actually passed onto the loaded config.
struct ConfigFlags {
    PipelineConfig scratch;
    std::vector<std::pair<CLI::Option*, std::function<void(PipelineConfig&)>>> appliers;

    void add(CLI::App* app) {
        auto bind = [&](CLI::Option* o, auto getter) {
            appliers.emplace_back(o, getter);
        };
        bind(app->add_option("--complete-mesh", scratch.complete_mesh, "complete model mesh"),
             [this](PipelineConfig& c) { c.complete_mesh = scratch.complete_mesh; });
        bind(app->add_option("--target-mesh", scratch.target_mesh, "target model mesh"),
             [this](PipelineConfig& c) { c.target_mesh = scratch.target_mesh; });
        bind(app->add_option("--body-file", scratch.body_file, "robot body JSON"),
             [this](PipelineConfig& c) { c.body_file = scratch.body_file; });
        bind(app->add_option("--out-dir", scratch.out_dir, "output directory"),
             [this](PipelineConfig& c) { c.out_dir = scratch.out_dir; });
        bind(app->add_option("--occupancy-voxel", scratch.occupancy_voxel, "occupancy voxel (m)"),
             [this](PipelineConfig& c) { c.occupancy_voxel = scratch.occupancy_voxel; });
        bind(app->add_option("--sdf-voxel", scratch.sdf_voxel, "SDF voxel (m)"),
             [this](PipelineConfig& c) { c.sdf_voxel = scratch.sdf_voxel; });
        bind(app->add_option("--sdf-truncation", scratch.sdf_truncation, "SDF truncation (m)"),
             [this](PipelineConfig& c) { c.sdf_truncation = scratch.sdf_truncation; });
        bind(app->add_option("--target-density", scratch.target_density, "target points per m^2"),
             [this](PipelineConfig& c) { c.target_density = scratch.target_density; });
        bind(app->add_option("--target-seed", scratch.target_seed, "target sampling seed"),
             [this](PipelineConfig& c) { c.target_seed = scratch.target_seed; });
        bind(app->add_option("--start", start_xyz, "start point x y z")->expected(3),
             [this](PipelineConfig& c) { c.start = {start_xyz[0], start_xyz[1], start_xyz[2]}; });
        bind(app->add_option("--cost-threshold", scratch.cost_threshold, "traversability cutoff"),
             [this](PipelineConfig& c) { c.cost_threshold = scratch.cost_threshold; });
        bind(app->add_option("--max-step", scratch.max_step, "max step height (m)"),
             [this](PipelineConfig& c) { c.max_step = scratch.max_step; });
        bind(app->add_option("--inscribed-radius", scratch.inscribed_radius,
                             "robot inscribed radius (m)"),
             [this](PipelineConfig& c) { c.inscribed_radius = scratch.inscribed_radius; });
        bind(app->add_option("--penalty-weight", scratch.penalty_weight, "cost layer weight"),
             [this](PipelineConfig& c) { c.penalty_weight = scratch.penalty_weight; });
        bind(app->add_option("--candidate-count", scratch.candidate_count,
                             "candidate positions to sample"),
             [this](PipelineConfig& c) { c.candidate_count = scratch.candidate_count; });
        bind(app->add_option("--candidate-seed", scratch.candidate_seed, "subsampling seed"),
             [this](PipelineConfig& c) { c.candidate_seed = scratch.candidate_seed; });
        bind(app->add_option("--overlap-n", scratch.overlap_n, "orientation overlap factor"),
             [this](PipelineConfig& c) { c.overlap_n = scratch.overlap_n; });
        bind(app->add_option("--yaw-offset", scratch.yaw_offset, "orientation fan offset (rad)"),
             [this](PipelineConfig& c) { c.yaw_offset = scratch.yaw_offset; });
        bind(app->add_option("--fov-h", scratch.sensor.fov_h, "horizontal FOV (deg)"),
             [this](PipelineConfig& c) { c.sensor.fov_h = scratch.sensor.fov_h; });
        bind(app->add_option("--fov-v", scratch.sensor.fov_v, "vertical FOV (deg)"),
             [this](PipelineConfig& c) { c.sensor.fov_v = scratch.sensor.fov_v; });
        bind(app->add_option("--range-min", scratch.sensor.range_min, "min range (m)"),
             [this](PipelineConfig& c) { c.sensor.range_min = scratch.sensor.range_min; });
        bind(app->add_option("--range-max", scratch.sensor.range_max, "max range (m)"),
             [this](PipelineConfig& c) { c.sensor.range_max = scratch.sensor.range_max; });
        bind(app->add_option("--mask-size", scratch.mask_size, "self mask direction count"),
             [this](PipelineConfig& c) { c.mask_size = scratch.mask_size; });
        bind(app->add_option("--min-reward", scratch.min_reward, "selection cutoff"),
             [this](PipelineConfig& c) { c.min_reward = scratch.min_reward; });
        bind(app->add_option("--solver", scratch.solver, "greedy|backtracking|probabilistic"),
             [this](PipelineConfig& c) { c.solver = scratch.solver; });
        bind(app->add_option("--lambda", scratch.lambda, "probabilistic rank decay"),
             [this](PipelineConfig& c) { c.lambda = scratch.lambda; });
        bind(app->add_option("--trials", scratch.trials, "probabilistic rollouts"),
             [this](PipelineConfig& c) { c.trials = scratch.trials; });
        bind(app->add_option("--solver-seed", scratch.solver_seed, "probabilistic seed"),
             [this](PipelineConfig& c) { c.solver_seed = scratch.solver_seed; });
        bind(app->add_option("--tsp-seed", scratch.tsp_seed, "annealing seed"),
             [this](PipelineConfig& c) { c.tsp_seed = scratch.tsp_seed; });
        bind(app->add_option("--tsp-iters", scratch.tsp_iters, "annealing iterations"),
             [this](PipelineConfig& c) { c.tsp_iters = scratch.tsp_iters; });
        bind(app->add_option("--sim-cell-size", scratch.sim_cell_size, "2D grid cell (m)"),
             [this](PipelineConfig& c) { c.sim_cell_size = scratch.sim_cell_size; });
        bind(app->add_option("--workers", scratch.workers, "worker threads (0 = all cores)"),
             [this](PipelineConfig& c) { c.workers = scratch.workers; });
    }

    std::vector<double> start_xyz{0, 0, 0};

    void apply(PipelineConfig& config) const {
        for (const auto& [opt, fn] : appliers)
            if (opt != nullptr && opt->count() > 0) fn(config);
    }
};

int cmd_plan(const std::string& config_path, const ConfigFlags& flags, bool dump_candidates,
             bool dump_cost_matrix, bool dump_coverage_matrix) {
    PipelineConfig config;
    if (!config_path.empty()) config = covplan::load_config(config_path);
    flags.apply(config);
    config.validate();

    fs::create_directories(config.out_dir);
    covplan::PipelineResult result = covplan::run_pipeline(config);

    fs::path out(config.out_dir);
    write_text(out / "plan.json", covplan::plan_to_json(result.plan).dump(2) + "\n");
    write_text(out / "report.json", covplan::report_to_json(result.report).dump(2) + "\n");
    write_text(out / "reward_trace.csv",
               covplan::reward_trace_csv(result.selection, result.plan.target_count));
    covplan::save_config(config, (out / "config_resolved.toml").string());

    if (dump_candidates) {
        std::ostringstream ss;
        for (const auto& c : result.candidates) {
            nlohmann::ordered_json j;
            j["id"] = c.id;
            j["vertex"] = c.graph_vertex;
            j["position"] = {c.position.x, c.position.y, c.position.z};
            j["yaw"] = c.yaw;
            j["reward"] = c.reward;
            ss << j.dump() << '\n';
        }
        write_text(out / "candidates.jsonl", ss.str());
    }
    if (dump_cost_matrix) {
        std::ostringstream ss;
        for (int i = 0; i < result.costs.n; ++i) {
            for (int j = 0; j < result.costs.n; ++j) {
                if (j) ss << ',';
                ss << result.costs.at(i, j);
            }
            ss << '\n';
        }
        write_text(out / "cost_matrix.csv", ss.str());
    }
    if (dump_coverage_matrix)
        covplan::save_coverage_matrix(result.matrix, (out / "coverage_matrix.bin").string());

    std::cout << "plan: " << result.plan.waypoints.size() << " waypoints, "
              << result.plan.total_path_length << " m, coverage "
              << result.plan.coverage_rate << "\n";
    std::cout << "plan hash: " << result.report.plan_hash << "\n";
    std::cout << "outputs in " << config.out_dir << "\n";
    return 0;
}

int cmd_simulate(const std::string& plan_path, const std::string& events_path,
                 const std::string& config_path, const ConfigFlags& flags,
                 const std::string& out_dir) {
    PipelineConfig config;
    if (!config_path.empty()) config = covplan::load_config(config_path);
    flags.apply(config);
    config.validate();

    covplan::CoveragePlan plan = covplan::plan_from_json(read_json(plan_path));
    std::vector<covplan::ObstacleEvent> events;
    if (!events_path.empty()) events = covplan::parse_events(read_json(events_path));

    covplan::ExecutionLog log = covplan::run_simulation(plan, events, config);

    fs::path out(out_dir.empty() ? config.out_dir : out_dir);
    fs::create_directories(out);
    write_text(out / "execution_log.jsonl", covplan::execution_log_jsonl(log));

    nlohmann::ordered_json summary;
    summary["planned_length"] = log.planned_length;
    summary["driven_length"] = log.driven_length;
    summary["waypoints_reached"] = log.waypoints_reached;
    summary["segments_replanned"] = log.segments_replanned;
    auto& path = summary["driven_path"] = nlohmann::ordered_json::array();
    for (const auto& p : log.driven_path) path.push_back({p.x, p.y});
    write_text(out / "sim_summary.json", summary.dump(2) + "\n");

    std::cout << "simulation: " << log.waypoints_reached << " waypoints reached, driven "
              << log.driven_length << " m (planned " << log.planned_length << " m), "
              << log.segments_replanned << " segments replanned\n";
    return 0;
}

int cmd_gen_building(const std::string& preset_name, const std::string& out_dir) {
    covplan::BuildingPreset preset;
    if (preset_name == "two_room")
        preset = covplan::BuildingPreset::TwoRoom;
    else if (preset_name == "full")
        preset = covplan::BuildingPreset::Full;
    else
        throw covplan::ConfigError("unknown preset: " + preset_name);

    covplan::BuildingModel model = covplan::generate_building(preset);
    fs::path out(out_dir);
    fs::create_directories(out);
    covplan::save_obj(model.complete, (out / "complete.obj").string());
    covplan::save_obj(model.target, (out / "target.obj").string());

    nlohmann::ordered_json j;
    j["preset"] = preset_name;
    j["wall_height"] = model.wall_height;
    j["start"] = {model.start.x, model.start.y, model.start.z};
    auto& rooms = j["rooms"] = nlohmann::ordered_json::array();
    for (const auto& r : model.rooms) {
        nlohmann::ordered_json jr;
        jr["name"] = r.name;
        jr["min"] = {r.min_x, r.min_y};
        jr["max"] = {r.max_x, r.max_y};
        jr["sealed"] = r.sealed;
        rooms.push_back(std::move(jr));
    }
    write_text(out / "building.json", j.dump(2) + "\n");
    std::cout << "building '" << preset_name << "' written to " << out_dir << " ("
              << model.complete.triangles.size() << " triangles)\n";
    return 0;
}

int cmd_plot_data(const std::string& plan_path, const std::string& out_dir) {
    covplan::CoveragePlan plan = covplan::plan_from_json(read_json(plan_path));
    fs::path out(out_dir);
    fs::create_directories(out);

    std::ostringstream wp;
    wp << "index,candidate_id,x,y,z,yaw,covered_count\n";
    for (const auto& w : plan.waypoints)
        wp << w.index << ',' << w.candidate_id << ',' << w.base_position.x << ','
           << w.base_position.y << ',' << w.base_position.z << ',' << w.base_yaw << ','
           << w.covered_targets.size() << '\n';
    write_text(out / "waypoints.csv", wp.str());

    std::ostringstream path;
    path << "leg,x,y,z\n";
    for (std::size_t k = 0; k < plan.legs.size(); ++k)
        for (const auto& p : plan.legs[k])
            path << k << ',' << p.x << ',' << p.y << ',' << p.z << '\n';
    write_text(out / "path.csv", path.str());

    std::cout << "plot data written to " << out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"covplan - model-based coverage path planner for ground robots"};
    app.require_subcommand(1);

    auto* plan = app.add_subcommand("plan", "compute a coverage plan from a config");
    std::string plan_config;
    bool dump_candidates = false, dump_cost = false, dump_matrix = false;
    plan->add_option("--config", plan_config, "config file (TOML-style key = value)");
    plan->add_flag("--dump-candidates", dump_candidates, "write candidates.jsonl");
    plan->add_flag("--dump-cost-matrix", dump_cost, "write cost_matrix.csv");
    plan->add_flag("--dump-coverage-matrix", dump_matrix, "write coverage_matrix.bin");
    ConfigFlags plan_flags;
    plan_flags.add(plan);

    auto* sim = app.add_subcommand("simulate", "execute a plan against scripted obstacles");
    std::string sim_plan, sim_events, sim_config, sim_out;
    sim->add_option("--plan", sim_plan, "plan.json from the plan subcommand")->required();
    sim->add_option("--events", sim_events, "obstacle events JSON");
    sim->add_option("--config", sim_config, "config file used for planning");
    sim->add_option("--out", sim_out, "output directory (default: config out_dir)");
    ConfigFlags sim_flags;
    sim_flags.add(sim);

    auto* gen = app.add_subcommand("gen-building", "generate the synthetic test building");
    std::string gen_preset = "full", gen_out = "building";
    gen->add_option("--preset", gen_preset, "two_room | full");
    gen->add_option("--out", gen_out, "output directory");

    auto* plot = app.add_subcommand("plot-data", "export plan geometry as CSV");
    std::string plot_plan, plot_out = "plot";
    plot->add_option("--plan", plot_plan, "plan.json")->required();
    plot->add_option("--out", plot_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (plan->parsed())
            return cmd_plan(plan_config, plan_flags, dump_candidates, dump_cost, dump_matrix);
        if (sim->parsed())
            return cmd_simulate(sim_plan, sim_events, sim_config, sim_flags, sim_out);
        if (gen->parsed()) return cmd_gen_building(gen_preset, gen_out);
        if (plot->parsed()) return cmd_plot_data(plot_plan, plot_out);
    } catch (const covplan::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const covplan::StageError& e) {
        std::cerr << "pipeline error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
