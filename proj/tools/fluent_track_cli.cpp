#include "fluent_track/error.hpp"
#include "fluent_track/io.hpp"
#include "fluent_track/log.hpp"
#include "fluent_track/metrics.hpp"
#include "fluent_track/pipeline.hpp"
#include "fluent_track/render.hpp"
#include "fluent_track/simulator.hpp"
#include "fluent_track/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

namespace fs = std::filesystem;
using namespace fluent_track;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitInvariant = 3;

/// Runs jobs on up to `workers` threads; rethrows the first failure in job order.
void run_jobs(std::vector<std::function<void()>>& jobs, int workers) {
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                jobs[i]();
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int n = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
    std::vector<std::thread> pool;
    for (int i = 1; i < n; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

struct ModelOptions {
    std::string action_models;
    std::string transition_table;
    std::string likelihood = "full";
    double tau_s = -1;
    double tau_sigma = -1;
    double tau_c = -1;
    int max_contained = -1;
    int max_gap = -1;
    double entry_exit_cost = -1;

    void add(CLI::App* app) {
        app->add_option("--action-models", action_models, "Action models (JSON); defaults built in");
        app->add_option("--transition-table", transition_table, "Transition table (JSON); defaults built in");
        app->add_option("--likelihood", likelihood, "Likelihood terms: full, human or prior")
            ->check(CLI::IsMember({"full", "human", "prior"}));
        app->add_option("--tau-s", tau_s, "Person speed limit (m/s)");
        app->add_option("--tau-sigma", tau_sigma, "Minimum appearance similarity for gap links");
        app->add_option("--tau-c", tau_c, "Containment distance (m)");
        app->add_option("--max-contained", max_contained, "Objects per container");
        app->add_option("--max-gap", max_gap, "Longest bridged gap (frames)");
        app->add_option("--entry-exit-cost", entry_exit_cost, "Cost of starting or ending a track");
    }

    ModelParameters build() const {
        auto p = default_parameters();
        if (!action_models.empty()) {
            auto in = open_input(action_models);
            p.action_models = read_action_models(in, action_models, p.caog);
        }
        if (!transition_table.empty()) {
            auto in = open_input(transition_table);
            p.transition_table = read_transition_table(in, transition_table, p.caog);
        }
        if (likelihood == "human") p.likelihood = LikelihoodMode::HumanOnly;
        if (likelihood == "prior") p.likelihood = LikelihoodMode::PriorOnly;
        if (tau_s >= 0) p.tau_s = tau_s;
        if (tau_sigma >= 0) p.tau_sigma = tau_sigma;
        if (tau_c >= 0) p.tau_c = tau_c;
        if (max_contained >= 0) p.max_contained = max_contained;
        if (max_gap >= 0) p.max_gap_frames = max_gap;
        if (entry_exit_cost >= 0) p.entry_exit_cost = entry_exit_cost;
        p.validate();
        return p;
    }
};

std::string scenario_names() {
    std::string out;
    for (const auto& s : standard_suite()) out += (out.empty() ? "" : ", ") + s.name;
    return out;
}

void write_simulation(const Simulation& sim, const fs::path& dir, const CausalAndOrGraph& caog) {
    fs::create_directories(dir);
    auto det = open_output(dir / "detections.jsonl");
    write_detections(det, sim.detections);
    auto cam = open_output(dir / "camera.json");
    write_camera(cam, sim.camera);
    auto gt = open_output(dir / "ground_truth.jsonl");
    write_trajectories(gt, sim.ground_truth, caog);
}

void track_sequence(const fs::path& detections_path, const fs::path& camera_path, const fs::path& out_dir,
                    const ModelParameters& params, bool visible_only) {
    auto cam_in = open_input(camera_path);
    const auto camera = read_camera(cam_in, camera_path.string());
    auto det_in = open_input(detections_path);
    const auto detections = read_detections(det_in, detections_path.string());
    TrackerOptions options;
    options.hidden_states = !visible_only;
    const auto result = joint_solve(detections, camera, params, options);

    fs::create_directories(out_dir);
    auto traj = open_output(out_dir / "trajectories.jsonl");
    write_trajectories(traj, result.trajectories, params.caog);
    auto pg = open_output(out_dir / "parse_graphs.jsonl");
    write_parse_graphs(pg, result.parse_graphs, params.caog);

    std::map<std::string, int> frames_by_state;
    for (const auto& t : result.trajectories) {
        for (const auto& p : t.points) ++frames_by_state[std::string(to_string(p.state))];
    }
    // Energy spent along the chosen paths, split by term.
    EnergyBreakdown spent;
    for (const auto& path : result.flow.paths) {
        for (int v : path.nodes) spent += result.graph.node(v).interior_energy;
        for (int e : path.edges) spent += result.graph.edges()[static_cast<std::size_t>(e)].energy;
        spent += result.graph.node(path.nodes.back()).terminal_energy;
    }
    nlohmann::json summary = {{"detections", detections.size()},
                              {"trajectories", result.trajectories.size()},
                              {"containers", result.containers.tracks.size()},
                              {"container_objective", result.containers.objective},
                              {"object_objective", result.flow.objective},
                              {"graph_nodes", result.graph.nodes().size()},
                              {"graph_edges", result.graph.edges().size()},
                              {"frames_by_state", frames_by_state},
                              {"energy_totals",
                               {{"displacement", spent.displacement},
                                {"transition", spent.transition},
                                {"visibility", spent.visibility},
                                {"action", spent.action}}}};
    auto sum = open_output(out_dir / "summary.json");
    sum << summary.dump(2) << '\n';
    log(LogLevel::Info, "tracked " + detections_path.string() + ": " + std::to_string(result.trajectories.size()) +
                            " trajectories");
}

void evaluate_pair(const fs::path& pred_path, const fs::path& gt_path, const std::string& format,
                   const fs::path& out_path, const CausalAndOrGraph& caog, double gate) {
    auto pred_in = open_input(pred_path);
    const auto pred = read_trajectories(pred_in, pred_path.string(), caog);
    auto gt_in = open_input(gt_path);
    const auto gt = read_trajectories(gt_in, gt_path.string(), caog);
    const auto gt_table = frame_table(gt);
    const auto pred_table = frame_table(pred);
    int gt_count = 0;
    for (const auto& [f, objs] : gt_table) gt_count += static_cast<int>(objs.size());
    if (gt_count == 0) throw InputError(gt_path.string() + ": ground truth is empty");
    MatchOptions mo;
    mo.distance_gate = gate;
    const auto match = match_frames(gt_table, pred_table, mo);
    const auto clear = clear_metrics(match, gt_count);
    const auto fluents = fluent_metrics(match, gt_table, pred_table);

    std::ostringstream text;
    if (format == "csv") {
        write_metrics_csv(text, pred_path.parent_path().filename().string(), clear);
    } else {
        write_metrics_json(text, clear, fluents);
    }
    if (out_path.empty()) {
        std::cout << text.str();
    } else {
        auto out = open_output(out_path);
        out << text.str();
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-object tracking with visibility fluents over a causal And-Or graph"};
    app.set_config("--config", "", "TOML or INI file with option defaults; command-line flags win");
    app.require_subcommand(1);
    // Lets global flags such as --jobs follow the subcommand.
    app.fallthrough();
    int jobs = 1;
    app.add_option("--jobs,-j", jobs, "Worker threads for independent sequences")->check(CLI::PositiveNumber);

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Generate detections and ground truth for named scenarios");
    std::vector<std::string> scenarios;
    std::uint64_t seed = 0;
    std::string sim_out = "sim_out";
    NoiseProfile noise;
    sim_cmd->add_option("--scenario", scenarios, "Scenario name, or 'all' for the standard suite")->required();
    sim_cmd->add_option("--seed", seed, "Random seed");
    sim_cmd->add_option("--out", sim_out, "Output directory; one subdirectory per scenario");
    sim_cmd->add_option("--position-sigma", noise.position_sigma, "Ground position noise (m)");
    sim_cmd->add_option("--miss-probability", noise.miss_probability, "Per-frame detection miss probability");
    sim_cmd->add_option("--false-positives", noise.false_positives_per_frame, "Mean false positives per frame");
    sim_cmd->add_option("--descriptor-noise", noise.descriptor_noise, "Appearance descriptor noise");
    sim_cmd->add_option("--feature-noise", noise.feature_noise, "Pose and vehicle feature noise");

    // track
    auto* track_cmd = app.add_subcommand("track", "Run the joint tracker on detection files");
    std::string detections_file, camera_file, track_out;
    std::vector<std::string> track_dirs;
    bool visible_only = false;
    ModelOptions model;
    track_cmd->add_option("--detections", detections_file, "Detections (JSON Lines)");
    track_cmd->add_option("--camera", camera_file, "Camera (JSON)");
    track_cmd->add_option("--out", track_out, "Output directory for --detections/--camera");
    track_cmd->add_option("--sequence", track_dirs,
                          "Directory holding detections.jsonl and camera.json; outputs are written next to them");
    track_cmd->add_flag("--visible-only", visible_only, "Drop occluded and contained hypotheses");
    model.add(track_cmd);

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "CLEAR and visibility-fluent metrics");
    std::string pred_file, gt_file, eval_out, format = "json";
    std::vector<std::string> eval_dirs;
    double gate = 1.0;
    eval_cmd->add_option("--pred", pred_file, "Predicted trajectories (JSON Lines)");
    eval_cmd->add_option("--gt", gt_file, "Ground-truth trajectories (JSON Lines)");
    eval_cmd->add_option("--out", eval_out, "Report file; stdout when omitted");
    eval_cmd->add_option("--sequence", eval_dirs,
                         "Directory holding trajectories.jsonl and ground_truth.jsonl; writes metrics.<format>");
    eval_cmd->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv"}));
    eval_cmd->add_option("--gate", gate, "Ground-plane match gate (m)")->check(CLI::PositiveNumber);

    // fit-model
    auto* fit_cmd = app.add_subcommand("fit-model", "Fit action models and the transition table from labeled clips");
    std::string clips_file, fit_out = "model";
    double alpha = 1.0;
    fit_cmd->add_option("--clips", clips_file, "Labeled clips (JSON Lines)")->required();
    fit_cmd->add_option("--out", fit_out, "Output directory");
    fit_cmd->add_option("--alpha", alpha, "Laplace smoothing for the transition table")->check(CLI::NonNegativeNumber);

    // oracle
    auto* oracle_cmd = app.add_subcommand("oracle", "Compare the flow solver with exhaustive search");
    std::string kind = "single";
    int frames = 8, nodes_per_frame = 6;
    std::uint64_t oracle_seed = 0;
    oracle_cmd->add_option("--kind", kind, "Instance kind")->check(CLI::IsMember({"single", "multi", "binding"}));
    oracle_cmd->add_option("--seed", oracle_seed, "Instance seed");
    oracle_cmd->add_option("--frames", frames, "Maximum frames of the random instance")->check(CLI::PositiveNumber);
    oracle_cmd->add_option("--nodes-per-frame", nodes_per_frame, "Maximum nodes per frame")
        ->check(CLI::PositiveNumber);

    // render
    auto* render_cmd = app.add_subcommand("render", "Top-view SVG of trajectories");
    std::string render_in, render_out = "trajectories.svg";
    render_cmd->add_option("--trajectories", render_in, "Trajectories (JSON Lines)")->required();
    render_cmd->add_option("--out", render_out, "SVG file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInput;
    }

    try {
        const auto caog = default_caog();
        if (*sim_cmd) {
            std::vector<ScenarioScript> chosen;
            for (const auto& name : scenarios) {
                if (name == "all") {
                    for (auto& s : standard_suite()) chosen.push_back(std::move(s));
                    continue;
                }
                try {
                    chosen.push_back(find_scenario(name));
                } catch (const InputError&) {
                    throw InputError("unknown scenario '" + name + "'; valid names: " + scenario_names());
                }
            }
            std::vector<std::function<void()>> work;
            for (const auto& s : chosen) {
                work.emplace_back([&, s] { write_simulation(simulate(s, noise, seed), fs::path(sim_out) / s.name, caog); });
            }
            run_jobs(work, jobs);
        } else if (*track_cmd) {
            const auto params = model.build();
            std::vector<std::function<void()>> work;
            if (!detections_file.empty() || !camera_file.empty()) {
                if (detections_file.empty() || camera_file.empty()) {
                    throw InputError("--detections and --camera go together");
                }
                const fs::path out = track_out.empty() ? fs::path("track_out") : fs::path(track_out);
                work.emplace_back([&, out] { track_sequence(detections_file, camera_file, out, params, visible_only); });
            }
            for (const auto& dir : track_dirs) {
                const fs::path d(dir);
                work.emplace_back([&, d] {
                    track_sequence(d / "detections.jsonl", d / "camera.json", d, params, visible_only);
                });
            }
            if (work.empty()) throw InputError("nothing to track; pass --detections/--camera or --sequence");
            run_jobs(work, jobs);
        } else if (*eval_cmd) {
            std::vector<std::function<void()>> work;
            if (!pred_file.empty() || !gt_file.empty()) {
                if (pred_file.empty() || gt_file.empty()) throw InputError("--pred and --gt go together");
                work.emplace_back([&] { evaluate_pair(pred_file, gt_file, format, eval_out, caog, gate); });
            }
            for (const auto& dir : eval_dirs) {
                const fs::path d(dir);
                work.emplace_back([&, d] {
                    evaluate_pair(d / "trajectories.jsonl", d / "ground_truth.jsonl", format, d / ("metrics." + format),
                                  caog, gate);
                });
            }
            if (work.empty()) throw InputError("nothing to evaluate; pass --pred/--gt or --sequence");
            run_jobs(work, jobs);
        } else if (*fit_cmd) {
            auto in = open_input(clips_file);
            const auto clips = read_labeled_clips(in, clips_file, caog);
            std::vector<std::vector<Eigen::VectorXd>> poses(static_cast<std::size_t>(caog.action_count()));
            std::vector<std::vector<Eigen::VectorXd>> fluents(poses.size());
            std::vector<TransitionTriple> events;
            for (const auto& c : clips) {
                if (c.pose_feature) poses[static_cast<std::size_t>(c.action)].push_back(*c.pose_feature);
                if (c.vehicle_fluent_feature) fluents[static_cast<std::size_t>(c.action)].push_back(*c.vehicle_fluent_feature);
                events.insert(events.end(), c.transitions.begin(), c.transitions.end());
            }
            std::vector<ActionModel> models;
            for (int a = 0; a < caog.action_count(); ++a) {
                ActionModel m;
                m.name = caog.action(a).action.name;
                const auto& ps = poses[static_cast<std::size_t>(a)];
                if (ps.size() == 1) throw InputError("action '" + m.name + "' has fewer than 2 pose samples");
                if (!ps.empty()) m.pose = fit_pose_model(ps);
                const auto& fs_ = fluents[static_cast<std::size_t>(a)];
                if (!fs_.empty()) m.vehicle_template = fit_vehicle_template(fs_);
                models.push_back(std::move(m));
            }
            const auto table = fit_transition_table(caog, events, alpha);
            auto mo = open_output(fs::path(fit_out) / "action_models.json");
            write_action_models(mo, models);
            auto to = open_output(fs::path(fit_out) / "transition_table.json");
            write_transition_table(to, table, caog);
        } else if (*oracle_cmd) {
            InstanceSpec spec;
            spec.kind = kind == "multi"     ? InstanceKind::MultiNonInteracting
                        : kind == "binding" ? InstanceKind::BindingCapacity
                                            : InstanceKind::SingleObject;
            spec.max_frames = frames;
            spec.max_nodes_per_frame = nodes_per_frame;
            const OracleLimits limits;
            if (frames > limits.max_frames || nodes_per_frame > limits.max_nodes_per_frame) {
                throw LimitExceeded("oracle supports at most " + std::to_string(limits.max_frames) + " frames and " +
                                    std::to_string(limits.max_nodes_per_frame) + " nodes per frame");
            }
            const auto graph = random_instance(oracle_seed, spec);
            const auto oracle = brute_force_oracle(graph);
            const auto dp = solve_objects(graph);
            verify_solution(graph, dp, default_parameters());
            const nlohmann::json report = {{"dp_objective", dp.objective},
                                           {"oracle_objective", oracle.objective},
                                           {"gap", oracle.objective - dp.objective},
                                           {"dp_paths", dp.paths.size()},
                                           {"oracle_paths", oracle.paths.size()},
                                           {"enumerated_paths", oracle.enumerated_paths}};
            std::cout << report.dump(2) << '\n';
        } else if (*render_cmd) {
            auto in = open_input(render_in);
            const auto trajectories = read_trajectories(in, render_in, caog);
            RenderOptions ro;
            ro.title = fs::path(render_in).filename().string();
            auto out = open_output(render_out);
            render_svg(out, trajectories, ro);
        }
    } catch (const InputError& e) {
        log(LogLevel::Error, e.what());
        return kExitInput;
    } catch (const InvariantViolation& e) {
        log(LogLevel::Error, std::string("invariant violated: ") + e.what());
        return kExitInvariant;
    } catch (const std::exception& e) {
        log(LogLevel::Error, e.what());
        return 1;
    }
    return 0;
}
