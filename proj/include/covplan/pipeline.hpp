#pragma once

#include <chrono>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "covplan/building_gen.hpp"
#include "covplan/config.hpp"
#include "covplan/grid2d.hpp"
#include "covplan/hash.hpp"
#include "covplan/mesh.hpp"
#include "covplan/route.hpp"
#include "covplan/sdf.hpp"
#include "covplan/set_cover.hpp"
#include "covplan/targets.hpp"
#include "covplan/traversability.hpp"
#include "covplan/visibility.hpp"
#include "covplan/voxel_grid.hpp"

namespace covplan {

struct StageError : std::runtime_error {
    std::string stage;
    StageError(const std::string& stage_, const std::string& what_)
        : std::runtime_error("stage '" + stage_ + "': " + what_), stage(stage_) {}
};

struct PlanWaypoint {
    int index = 0;             // position in tour order
    int candidate_id = -1;
    Vec3 base_position;
    double base_yaw = 0.0;
    Vec3 sensor_position;
    double sensor_yaw = 0.0;
    int graph_vertex = -1;
    std::vector<int> covered_targets; // marginal set claimed at selection
};

struct CoveragePlan {
    std::vector<PlanWaypoint> waypoints;
    std::vector<std::vector<Vec3>> legs; // polyline between consecutive waypoints
    double total_path_length = 0.0;
    double coverage_rate = 0.0;
    int target_count = 0;
    int covered_target_count = 0;
    Vec3 start;
    std::string config_hash, complete_mesh_hash, target_mesh_hash;
};

struct PipelineReport {
    std::vector<std::pair<std::string, double>> timings; // stage name, seconds
    double total_seconds = 0.0;
    StageCounters counters;
    int reachable_vertices = 0;
    int candidate_positions = 0;
    int candidate_count = 0;
    int selected_count = 0;
    std::string plan_hash;
};

struct PipelineResult {
    CoveragePlan plan;
    PipelineReport report;
    SelectionResult selection;
    std::vector<CandidateViewpoint> candidates; // with rewards filled in
    CoverageMatrix matrix;
    CostMatrix costs;
    Tour tour;
};

inline RobotBodyModel load_body_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open body file: " + path);
    nlohmann::json j;
    in >> j;
    RobotBodyModel body;
    auto so = j.at("sensor_origin");
    body.sensor_origin = {so.at(0).get<double>(), so.at(1).get<double>(), so.at(2).get<double>()};
    for (const auto& part : j.at("parts")) {
        std::vector<Vec3> pts;
        for (const auto& p : part)
            pts.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
        body.convex_parts.push_back(std::move(pts));
    }
    return body;
}

inline nlohmann::ordered_json plan_to_json(const CoveragePlan& plan) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["provenance"] = {{"config_hash", plan.config_hash},
                       {"complete_mesh_hash", plan.complete_mesh_hash},
                       {"target_mesh_hash", plan.target_mesh_hash}};
    j["coverage_rate"] = plan.coverage_rate;
    j["total_path_length"] = plan.total_path_length;
    j["target_count"] = plan.target_count;
    j["covered_target_count"] = plan.covered_target_count;
    j["start"] = {plan.start.x, plan.start.y, plan.start.z};
    auto& wps = j["waypoints"] = nlohmann::ordered_json::array();
    for (const auto& w : plan.waypoints) {
        nlohmann::ordered_json jw;
        jw["index"] = w.index;
        jw["candidate_id"] = w.candidate_id;
        jw["base_position"] = {w.base_position.x, w.base_position.y, w.base_position.z};
        jw["base_yaw"] = w.base_yaw;
        jw["sensor_position"] = {w.sensor_position.x, w.sensor_position.y, w.sensor_position.z};
        jw["sensor_yaw"] = w.sensor_yaw;
        jw["graph_vertex"] = w.graph_vertex;
        jw["covered_targets"] = w.covered_targets;
        wps.push_back(std::move(jw));
    }
    auto& legs = j["legs"] = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < plan.legs.size(); ++k) {
        nlohmann::ordered_json jl;
        jl["from"] = k;
        jl["to"] = k + 1;
        double len = 0.0;
        auto& poly = jl["polyline"] = nlohmann::ordered_json::array();
        for (std::size_t p = 0; p < plan.legs[k].size(); ++p) {
            const Vec3& v = plan.legs[k][p];
            poly.push_back({v.x, v.y, v.z});
            if (p > 0) len += (v - plan.legs[k][p - 1]).norm();
        }
        jl["length"] = len;
        legs.push_back(std::move(jl));
    }
    return j;
}

inline CoveragePlan plan_from_json(const nlohmann::json& j) {
    CoveragePlan plan;
    if (j.at("schema_version").get<int>() != 1)
        throw std::runtime_error("plan: unsupported schema version");
    plan.config_hash = j.at("provenance").at("config_hash").get<std::string>();
    plan.complete_mesh_hash = j.at("provenance").at("complete_mesh_hash").get<std::string>();
    plan.target_mesh_hash = j.at("provenance").at("target_mesh_hash").get<std::string>();
    plan.coverage_rate = j.at("coverage_rate").get<double>();
    plan.total_path_length = j.at("total_path_length").get<double>();
    plan.target_count = j.at("target_count").get<int>();
    plan.covered_target_count = j.at("covered_target_count").get<int>();
    plan.start = {j.at("start").at(0).get<double>(), j.at("start").at(1).get<double>(),
                  j.at("start").at(2).get<double>()};
    for (const auto& jw : j.at("waypoints")) {
        PlanWaypoint w;
        w.index = jw.at("index").get<int>();
        w.candidate_id = jw.at("candidate_id").get<int>();
        w.base_position = {jw.at("base_position").at(0).get<double>(),
                           jw.at("base_position").at(1).get<double>(),
                           jw.at("base_position").at(2).get<double>()};
        w.base_yaw = jw.at("base_yaw").get<double>();
        w.sensor_position = {jw.at("sensor_position").at(0).get<double>(),
                             jw.at("sensor_position").at(1).get<double>(),
                             jw.at("sensor_position").at(2).get<double>()};
        w.sensor_yaw = jw.at("sensor_yaw").get<double>();
        w.graph_vertex = jw.at("graph_vertex").get<int>();
        for (const auto& t : jw.at("covered_targets")) w.covered_targets.push_back(t.get<int>());
        plan.waypoints.push_back(std::move(w));
    }
    for (const auto& jl : j.at("legs")) {
        std::vector<Vec3> leg;
        for (const auto& p : jl.at("polyline"))
            leg.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
        plan.legs.push_back(std::move(leg));
    }
    return plan;
}

// Intermediate models, shared between `plan` and `simulate`.
struct PlanningModels {
    TriangleMesh complete;
    TriangleMesh target_model;
    VoxelOccupancyGrid grid;
    SignedDistanceField sdf;
    TraversabilityGraph graph;
    TargetPointSet targets;
};

inline PlanningModels build_models(const PipelineConfig& config, bool with_targets = true) {
    PlanningModels m;
    m.complete = load_mesh(config.complete_mesh);
    m.grid = voxelize(m.complete, config.occupancy_voxel);
    m.sdf = compute_sdf(m.complete, config.sdf_voxel, config.sdf_truncation, config.workers);
    m.graph = build_traversability_graph(m.complete, config.max_step, config.inscribed_radius);
    if (with_targets) {
        m.target_model = load_mesh(config.target_mesh);
        m.targets = sample_target_points(m.target_model, config.target_density, config.target_seed);
    }
    return m;
}

// The full planning pipeline: ingest, candidates, rewards, selection,
// waypoint conversion and tour optimization.
inline PipelineResult run_pipeline(const PipelineConfig& config) {
    config.validate();
    PipelineResult result;
    PipelineReport& report = result.report;
    using Clock = std::chrono::steady_clock;
    auto t_start = Clock::now();
    auto elapsed = [](Clock::time_point a) {
        return std::chrono::duration<double>(Clock::now() - a).count();
    };

    PlanningModels models;
    auto t0 = Clock::now();
    try {
        models = build_models(config);
    } catch (const std::exception& e) {
        throw StageError("prior_info", e.what());
    }
    report.timings.emplace_back("prior_info", elapsed(t0));

    std::vector<CandidateViewpoint> candidates;
    t0 = Clock::now();
    try {
        int start_vertex = models.graph.nearest_traversable(config.start, config.cost_threshold);
        if (start_vertex < 0) throw std::runtime_error("no traversable vertex near start point");
        auto reachable = reachable_vertices(models.graph, start_vertex, config.cost_threshold);
        report.reachable_vertices = static_cast<int>(reachable.size());
        auto positions =
            subsample_positions(reachable, config.candidate_count, config.candidate_seed);
        report.candidate_positions = static_cast<int>(positions.size());
        candidates = generate_candidates(positions, models.graph, config.sensor,
                                         config.sensor.mount_offset.translation.z,
                                         config.overlap_n, config.yaw_offset);
        report.candidate_count = static_cast<int>(candidates.size());
    } catch (const std::exception& e) {
        throw StageError("candidates", e.what());
    }
    report.timings.emplace_back("candidates", elapsed(t0));

    CoverageMatrix matrix;
    t0 = Clock::now();
    try {
        SelfOcclusionMask mask;
        if (!config.body_file.empty()) {
            RobotBodyModel body = load_body_model(config.body_file);
            mask = build_self_mask(body, config.mask_size);
        }
        VisibilityOptions opt;
        opt.workers = config.workers;
        opt.occupancy_voxel = config.occupancy_voxel;
        matrix = compute_rewards(candidates, models.targets, config.sensor,
                                 mask.size > 0 ? &mask : nullptr, &models.sdf, models.grid,
                                 &report.counters, opt);
    } catch (const std::exception& e) {
        throw StageError("reward", e.what());
    }
    report.timings.emplace_back("reward", elapsed(t0));

    SelectionResult selection;
    t0 = Clock::now();
    try {
        if (config.solver == "greedy")
            selection = select_greedy(matrix, config.min_reward);
        else if (config.solver == "backtracking")
            selection = select_backtracking(matrix, config.min_reward);
        else
            selection = select_probabilistic(matrix, config.min_reward, config.lambda,
                                             config.trials, config.solver_seed);
        report.selected_count = static_cast<int>(selection.selected.size());
        if (selection.selected.empty())
            throw std::runtime_error("no viewpoints selected (min_reward too high?)");
    } catch (const std::exception& e) {
        throw StageError("select_viewpoints", e.what());
    }
    report.timings.emplace_back("select_viewpoints", elapsed(t0));

    std::vector<Waypoint> waypoints;
    CostMatrix costs;
    int anchor = 0;
    t0 = Clock::now();
    try {
        waypoints.reserve(selection.selected.size());
        for (int id : selection.selected)
            waypoints.push_back(viewpoint_to_waypoint(candidates[static_cast<std::size_t>(id)],
                                                      config.sensor, models.graph,
                                                      config.cost_threshold));
        if (waypoints.size() > 1) {
            costs = pairwise_path_costs(models.graph, waypoints, config.cost_threshold,
                                        config.penalty_weight, config.workers);
            // anchor the open tour at the waypoint nearest the start point
            int start_vertex =
                models.graph.nearest_traversable(config.start, config.cost_threshold);
            auto from_start = shortest_paths(models.graph, start_vertex, config.cost_threshold,
                                             config.penalty_weight);
            double best = std::numeric_limits<double>::max();
            for (std::size_t i = 0; i < waypoints.size(); ++i) {
                double d = from_start.dist[static_cast<std::size_t>(waypoints[i].graph_vertex)];
                if (d < best) {
                    best = d;
                    anchor = static_cast<int>(i);
                }
            }
        }
    } catch (const std::exception& e) {
        throw StageError("waypoint_costs", e.what());
    }
    report.timings.emplace_back("waypoint_costs", elapsed(t0));

    Tour tour;
    t0 = Clock::now();
    try {
        if (waypoints.size() > 1) {
            Tour initial = mst_initial_tour(costs, anchor);
            AnnealSchedule schedule{config.tsp_t0, config.tsp_alpha, config.tsp_iters};
            tour = anneal_tour(initial, costs, schedule, config.tsp_seed);
        } else {
            tour.order = {0};
        }
    } catch (const std::exception& e) {
        throw StageError("waypoint_order", e.what());
    }
    report.timings.emplace_back("waypoint_order", elapsed(t0));

    t0 = Clock::now();
    try {
        CoveragePlan& plan = result.plan;
        plan.start = config.start;
        plan.coverage_rate = selection.coverage_rate;
        plan.target_count = models.targets.size();
        plan.covered_target_count = static_cast<int>(selection.covered.size());

        // marginal covered sets in selection order, then reordered by tour
        std::vector<std::vector<int>> marginal(selection.selected.size());
        {
            std::vector<std::uint8_t> seen(static_cast<std::size_t>(models.targets.size()), 0);
            for (std::size_t k = 0; k < selection.selected.size(); ++k) {
                int id = selection.selected[k];
                for (int t : candidates[static_cast<std::size_t>(id)].covered_ids)
                    if (!seen[static_cast<std::size_t>(t)]) {
                        seen[static_cast<std::size_t>(t)] = 1;
                        marginal[k].push_back(t);
                    }
            }
        }

        for (std::size_t pos = 0; pos < tour.order.size(); ++pos) {
            int sel_index = tour.order[pos];
            const Waypoint& w = waypoints[static_cast<std::size_t>(sel_index)];
            const CandidateViewpoint& c =
                candidates[static_cast<std::size_t>(w.source_viewpoint)];
            PlanWaypoint pw;
            pw.index = static_cast<int>(pos);
            pw.candidate_id = c.id;
            pw.base_position = w.base_position;
            pw.base_yaw = w.base_yaw;
            pw.sensor_position = c.position;
            pw.sensor_yaw = c.yaw;
            pw.graph_vertex = w.graph_vertex;
            pw.covered_targets = marginal[static_cast<std::size_t>(sel_index)];
            plan.waypoints.push_back(std::move(pw));
        }
        for (std::size_t k = 0; k + 1 < tour.order.size(); ++k) {
            int a = tour.order[k], b = tour.order[k + 1];
            const auto& vertex_path = costs.path(a, b);
            std::vector<Vec3> leg;
            leg.push_back(waypoints[static_cast<std::size_t>(a)].base_position);
            for (int v : vertex_path) leg.push_back(models.graph.nodes[static_cast<std::size_t>(v)]);
            leg.push_back(waypoints[static_cast<std::size_t>(b)].base_position);
            plan.legs.push_back(std::move(leg));
        }
        double total = 0.0;
        for (const auto& leg : plan.legs)
            for (std::size_t p = 1; p < leg.size(); ++p) total += (leg[p] - leg[p - 1]).norm();
        plan.total_path_length = total;

        plan.config_hash = hash_hex(fnv1a64(serialize_config(config)));
        plan.complete_mesh_hash = hash_file_hex(config.complete_mesh);
        plan.target_mesh_hash = hash_file_hex(config.target_mesh);

        result.selection = selection;
        result.candidates = std::move(candidates);
        result.matrix = std::move(matrix);
        result.costs = std::move(costs);
        result.tour = std::move(tour);
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError("assemble", e.what());
    }
    report.timings.emplace_back("assemble", elapsed(t0));

    report.total_seconds = elapsed(t_start);
    report.plan_hash = hash_hex(fnv1a64(plan_to_json(result.plan).dump()));
    return result;
}

inline nlohmann::ordered_json report_to_json(const PipelineReport& r) {
    nlohmann::ordered_json j;
    auto& timings = j["timings_seconds"] = nlohmann::ordered_json::object();
    for (const auto& [name, secs] : r.timings) timings[name] = secs;
    j["total_seconds"] = r.total_seconds;
    j["stage_counters"] = {{"pairs", r.counters.pairs},
                           {"rejected_frustum", r.counters.rejected_frustum},
                           {"rejected_mask", r.counters.rejected_mask},
                           {"rejected_sdf", r.counters.rejected_sdf},
                           {"rejected_ray", r.counters.rejected_ray},
                           {"visible", r.counters.visible}};
    j["reachable_vertices"] = r.reachable_vertices;
    j["candidate_positions"] = r.candidate_positions;
    j["candidate_count"] = r.candidate_count;
    j["selected_count"] = r.selected_count;
    j["plan_hash"] = r.plan_hash;
    return j;
}

// Dense pose sequence over the whole plan, with waypoint indices tagged at
// the leg joints; this is what the execution simulator drives along.
inline std::vector<PathPose> plan_to_poses(const CoveragePlan& plan, double step) {
    std::vector<PathPose> poses;
    if (plan.waypoints.empty()) return poses;
    if (plan.legs.empty()) {
        const auto& w = plan.waypoints.front();
        poses.push_back({{w.base_position.x, w.base_position.y}, w.base_yaw, 0.0, 0});
        return poses;
    }
    for (std::size_t k = 0; k < plan.legs.size(); ++k) {
        std::vector<Vec2> polyline;
        polyline.reserve(plan.legs[k].size());
        for (const auto& v : plan.legs[k]) polyline.push_back({v.x, v.y});
        auto sampled = sample_path(polyline, step);
        if (sampled.empty()) continue;
        std::size_t begin = 0;
        if (k == 0) {
            sampled.front().waypoint = 0;
        } else {
            begin = 1; // joint pose already emitted by the previous leg
        }
        sampled.back().waypoint = static_cast<int>(k + 1);
        for (std::size_t i = begin; i < sampled.size(); ++i) poses.push_back(sampled[i]);
    }
    // rebuild arclength over the concatenation
    double s = 0.0;
    for (std::size_t i = 0; i < poses.size(); ++i) {
        if (i > 0) s += (poses[i].position - poses[i - 1].position).norm();
        poses[i].arclength = s;
    }
    return poses;
}

inline std::vector<ObstacleEvent> parse_events(const nlohmann::json& j) {
    std::vector<ObstacleEvent> events;
    if (!j.contains("events") || !j.at("events").is_array())
        throw std::runtime_error("events file: missing 'events' array");
    int idx = 0;
    for (const auto& je : j.at("events")) {
        ObstacleEvent e;
        try {
            e.at_arclength = je.at("at_arclength_m").get<double>();
            for (const auto& p : je.at("polygon"))
                e.polygon.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
            if (e.polygon.size() < 3) throw std::runtime_error("polygon needs >= 3 points");
        } catch (const std::exception& ex) {
            throw std::runtime_error("events[" + std::to_string(idx) + "]: " + ex.what());
        }
        events.push_back(std::move(e));
        ++idx;
    }
    return events;
}

// Rebuilds the 2D world from the config and drives the plan through the
// scripted obstacle events.
inline ExecutionLog run_simulation(const CoveragePlan& plan,
                                   const std::vector<ObstacleEvent>& events,
                                   const PipelineConfig& config) {
    PlanningModels models = build_models(config, false);
    OccupancyGrid2D grid2d =
        project_occupancy(models.grid, models.graph, config.cost_threshold, config.sim_cell_size,
                          config.sim_band_lo, config.sim_band_hi);
    FootprintPolygon footprint{config.footprint};
    footprint.validate();
    auto poses = plan_to_poses(plan, config.sim_cell_size);
    return simulate_execution(poses, events, grid2d, footprint);
}

inline std::string execution_log_jsonl(const ExecutionLog& log) {
    std::ostringstream out;
    for (const auto& e : log.events) {
        nlohmann::ordered_json j;
        j["event"] = e.type;
        j["at_driven_m"] = e.at_driven;
        if (e.type == "waypoint_reached") j["waypoint"] = e.waypoint;
        if (e.type == "segment_replanned") {
            j["old_length"] = e.old_length;
            j["new_length"] = e.new_length;
        }
        out << j.dump() << '\n';
    }
    return out.str();
}

inline std::string reward_trace_csv(const SelectionResult& selection, int target_count) {
    std::ostringstream out;
    out << "step,candidate_id,marginal_reward,cumulative_coverage\n";
    long cumulative = 0;
    for (std::size_t k = 0; k < selection.selected.size(); ++k) {
        cumulative += selection.reward_trace[k];
        double rate = target_count > 0 ? static_cast<double>(cumulative) / target_count : 0.0;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", rate);
        out << k << ',' << selection.selected[k] << ',' << selection.reward_trace[k] << ','
            << buf << '\n';
    }
    return out.str();
}

} // namespace covplan
