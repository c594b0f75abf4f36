#pragma once

#include "fluent_track/caog.hpp"
#include "fluent_track/metrics.hpp"
#include "fluent_track/params.hpp"
#include "fluent_track/types.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fluent_track {

// Line-oriented formats report errors as "<source>:<line>: <message>" through InputError.

std::vector<Detection> read_detections(std::istream& in, const std::string& source);
void write_detections(std::ostream& out, std::span<const Detection> detections);

CameraModel read_camera(std::istream& in, const std::string& source);
void write_camera(std::ostream& out, const CameraModel& camera);

/// Actions are written by name and resolved against `caog` on reading.
std::vector<Trajectory> read_trajectories(std::istream& in, const std::string& source, const CausalAndOrGraph& caog);
void write_trajectories(std::ostream& out, std::span<const Trajectory> trajectories, const CausalAndOrGraph& caog);

std::vector<CausalParseGraph> read_parse_graphs(std::istream& in, const std::string& source,
                                                const CausalAndOrGraph& caog);
void write_parse_graphs(std::ostream& out, std::span<const CausalParseGraph> graphs, const CausalAndOrGraph& caog);

/// Whole-document JSON: {"actions": [{"name", "mu", "sigma", "vehicle_template"}]}.
/// Returns one model per action of `caog`, in action-id order.
std::vector<ActionModel> read_action_models(std::istream& in, const std::string& source,
                                            const CausalAndOrGraph& caog);
void write_action_models(std::ostream& out, std::span<const ActionModel> models);

/// Whole-document JSON: {"alpha", "rows": [{"state", "action", "next": {state: p}}]}; validated against `caog`.
ActionStateTable read_transition_table(std::istream& in, const std::string& source, const CausalAndOrGraph& caog);
void write_transition_table(std::ostream& out, const ActionStateTable& table, const CausalAndOrGraph& caog);

/// One labeled training sample: an action with optional features and observed state transitions.
struct LabeledClip {
    int action = 0;
    std::optional<Eigen::VectorXd> pose_feature;
    std::optional<Eigen::VectorXd> vehicle_fluent_feature;
    std::vector<TransitionTriple> transitions;
};

std::vector<LabeledClip> read_labeled_clips(std::istream& in, const std::string& source,
                                            const CausalAndOrGraph& caog);
void write_labeled_clips(std::ostream& out, std::span<const LabeledClip> clips, const CausalAndOrGraph& caog);

void write_metrics_json(std::ostream& out, const ClearMetrics& clear, const FluentMetrics& fluents);
void write_metrics_csv(std::ostream& out, const std::string& label, const ClearMetrics& clear);

/// Opens a file for reading or throws InputError naming it.
std::ifstream open_input(const std::filesystem::path& path);
/// Creates parent directories and opens a file for writing.
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace fluent_track
