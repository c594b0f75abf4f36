#pragma once

#include "fluent_track/types.hpp"

#include <array>
#include <functional>
#include <map>
#include <span>
#include <string_view>
#include <vector>

namespace fluent_track {

/// Ids of the default action vocabulary.
namespace action_id {
inline constexpr int kWalking = 0;
inline constexpr int kOpenVehicleDoor = 1;
inline constexpr int kEnterVehicle = 2;
inline constexpr int kExitVehicle = 3;
inline constexpr int kCloseVehicleDoor = 4;
inline constexpr int kOpenTrunk = 5;
inline constexpr int kLoadBaggage = 6;
inline constexpr int kUnloadBaggage = 7;
inline constexpr int kCloseTrunk = 8;
}  // namespace action_id

struct TransitionTriple {
    VisibilityState from = VisibilityState::Visible;
    int action = 0;
    VisibilityState to = VisibilityState::Visible;

    bool operator==(const TransitionTriple&) const = default;
};

struct ActionInfo {
    AtomicAction action;
    /// Whether the action is an interaction with a container (vehicle).
    bool involves_vehicle = false;
    /// Object classes that can perform the action.
    std::vector<ObjectClass> subjects;
};

/**
 * Causal And-Or graph over visibility fluents.
 *
 * Or-nodes are the three visibility states; the leaves are atomic actions.
 * The graph is the set of legal (state, action, next state) triples, with one
 * inertial action that keeps every state unchanged.
 */
class CausalAndOrGraph {
public:
    CausalAndOrGraph(std::vector<ActionInfo> actions, std::vector<TransitionTriple> legal,
                     int inertial_action);

    int action_count() const { return static_cast<int>(actions_.size()); }
    const std::vector<ActionInfo>& actions() const { return actions_; }
    const ActionInfo& action(int id) const;
    int action_id(std::string_view name) const;
    int inertial_action() const { return inertial_; }

    bool is_legal(VisibilityState from, int action, VisibilityState to) const;
    bool has_row(VisibilityState from, int action) const;
    std::vector<VisibilityState> successors(VisibilityState from, int action) const;
    bool applies_to(int action, ObjectClass cls) const;
    const std::vector<TransitionTriple>& triples() const { return triples_; }

    /// True when some action makes `from -> to` legal for `cls`.
    bool transition_possible(VisibilityState from, VisibilityState to, ObjectClass cls) const;

private:
    std::vector<ActionInfo> actions_;
    std::vector<TransitionTriple> triples_;
    std::vector<std::array<std::array<bool, 3>, 3>> legal_;  // [action][from][to]
    int inertial_;
};

/// Default grammar: containment is only reachable through occlusion.
CausalAndOrGraph default_caog();

/// p(next | state, action) for every legal (state, action) row.
class ActionStateTable {
public:
    using Row = std::array<double, 3>;

    void set_row(VisibilityState from, int action, const Row& probabilities);
    bool has_row(VisibilityState from, int action) const;
    const Row& row(VisibilityState from, int action) const;
    double probability(VisibilityState next, VisibilityState from, int action) const;

    const std::map<std::pair<int, int>, Row>& rows() const { return rows_; }

    /// Laplace constant used when fitting, recorded for serialization.
    double alpha = 0.0;

private:
    std::map<std::pair<int, int>, Row> rows_;
};

/// Checks that rows exist exactly for legal pairs, are non-negative, sum to one
/// and put mass only on legal successors.
void validate_table(const CausalAndOrGraph& caog, const ActionStateTable& table);

/// Laplace-smoothed estimate over legal successors only.
ActionStateTable fit_transition_table(const CausalAndOrGraph& caog,
                                      std::span<const TransitionTriple> events, double alpha);

/// Hand-set prior table for the default grammar.
ActionStateTable default_transition_table(const CausalAndOrGraph& caog);

/// Returns the action-likelihood energy of `trajectory.points[index]` under `action`,
/// or nullopt when no evidence is available.
using ActionEvidence =
    std::function<std::optional<double>(const Trajectory& trajectory, std::size_t index, int action)>;

/**
 * Turns solved trajectories into per-frame parse graphs.
 *
 * The action of each step is the legal action maximizing
 * p(next | state, a) * exp(-energy(a)); without evidence the energy is zero.
 * Ties go to the lowest action id. The final frame of a trajectory keeps the
 * action of its last step (or the inertial action for single-frame tracks).
 */
std::vector<CausalParseGraph> extract_parse_graphs(std::span<const Trajectory> trajectories,
                                                   const CausalAndOrGraph& caog,
                                                   const ActionStateTable& table,
                                                   const ActionEvidence& evidence = {});

}  // namespace fluent_track
