#include "fluent_track/caog.hpp"

#include "fluent_track/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace fluent_track {

namespace {

constexpr double kRowTolerance = 1e-9;

std::string describe(const CausalAndOrGraph& caog, VisibilityState from, int action,
                     VisibilityState to) {
    return "(" + std::string(to_string(from)) + ", " + caog.action(action).action.name + ", " +
           std::string(to_string(to)) + ")";
}

}  // namespace

CausalAndOrGraph::CausalAndOrGraph(std::vector<ActionInfo> actions,
                                   std::vector<TransitionTriple> legal, int inertial_action)
    : actions_(std::move(actions)), triples_(std::move(legal)), inertial_(inertial_action) {
    for (std::size_t i = 0; i < actions_.size(); ++i) {
        if (actions_[i].action.id != static_cast<int>(i)) {
            throw InputError("action ids must be contiguous from 0");
        }
    }
    if (inertial_ < 0 || inertial_ >= action_count()) throw InputError("inertial action out of range");
    legal_.assign(actions_.size(), {});
    for (const auto& t : triples_) {
        if (t.action < 0 || t.action >= action_count()) throw InputError("triple references unknown action");
        legal_[t.action][state_index(t.from)][state_index(t.to)] = true;
    }
    for (int a = 0; a < action_count(); ++a) {
        bool any = false;
        for (auto s : kAllStates) any = any || has_row(s, a);
        if (!any) throw InputError("action '" + actions_[a].action.name + "' has no transition");
    }
    for (auto s : kAllStates) {
        if (!is_legal(s, inertial_, s)) {
            throw InputError("inertial action must keep state " + std::string(to_string(s)));
        }
    }
}

const ActionInfo& CausalAndOrGraph::action(int id) const {
    if (id < 0 || id >= action_count()) throw InputError("unknown action id " + std::to_string(id));
    return actions_[id];
}

int CausalAndOrGraph::action_id(std::string_view name) const {
    for (const auto& a : actions_) {
        if (a.action.name == name) return a.action.id;
    }
    throw InputError("unknown action '" + std::string(name) + "'");
}

bool CausalAndOrGraph::is_legal(VisibilityState from, int action, VisibilityState to) const {
    if (action < 0 || action >= action_count()) return false;
    return legal_[action][state_index(from)][state_index(to)];
}

bool CausalAndOrGraph::has_row(VisibilityState from, int action) const {
    for (auto to : kAllStates) {
        if (is_legal(from, action, to)) return true;
    }
    return false;
}

std::vector<VisibilityState> CausalAndOrGraph::successors(VisibilityState from, int action) const {
    std::vector<VisibilityState> out;
    for (auto to : kAllStates) {
        if (is_legal(from, action, to)) out.push_back(to);
    }
    return out;
}

bool CausalAndOrGraph::applies_to(int action, ObjectClass cls) const {
    const auto& subjects = this->action(action).subjects;
    return std::find(subjects.begin(), subjects.end(), cls) != subjects.end();
}

bool CausalAndOrGraph::transition_possible(VisibilityState from, VisibilityState to,
                                           ObjectClass cls) const {
    for (int a = 0; a < action_count(); ++a) {
        if (is_legal(from, a, to) && applies_to(a, cls)) return true;
    }
    return false;
}

CausalAndOrGraph default_caog() {
    using enum VisibilityState;
    using enum ObjectClass;
    std::vector<ActionInfo> actions = {
        {{action_id::kWalking, "walking"}, false, {Person, Suitcase, Vehicle}},
        {{action_id::kOpenVehicleDoor, "opening_vehicle_door"}, true, {Person}},
        {{action_id::kEnterVehicle, "entering_vehicle"}, true, {Person}},
        {{action_id::kExitVehicle, "exiting_vehicle"}, true, {Person}},
        {{action_id::kCloseVehicleDoor, "closing_vehicle_door"}, true, {Person}},
        {{action_id::kOpenTrunk, "opening_vehicle_trunk"}, true, {Person}},
        {{action_id::kLoadBaggage, "loading_baggage"}, true, {Suitcase}},
        {{action_id::kUnloadBaggage, "unloading_baggage"}, true, {Suitcase}},
        {{action_id::kCloseTrunk, "closing_vehicle_trunk"}, true, {Person, Suitcase}},
    };
    std::vector<TransitionTriple> legal = {
        {Visible, action_id::kWalking, Visible},
        {Visible, action_id::kWalking, Occluded},
        {Occluded, action_id::kWalking, Occluded},
        {Occluded, action_id::kWalking, Visible},
        {Contained, action_id::kWalking, Contained},

        {Visible, action_id::kOpenVehicleDoor, Visible},
        {Visible, action_id::kOpenVehicleDoor, Occluded},

        {Visible, action_id::kEnterVehicle, Visible},
        {Visible, action_id::kEnterVehicle, Occluded},
        {Occluded, action_id::kEnterVehicle, Occluded},
        {Occluded, action_id::kEnterVehicle, Contained},

        {Contained, action_id::kExitVehicle, Contained},
        {Contained, action_id::kExitVehicle, Occluded},
        {Occluded, action_id::kExitVehicle, Occluded},
        {Occluded, action_id::kExitVehicle, Visible},

        {Occluded, action_id::kCloseVehicleDoor, Occluded},
        {Occluded, action_id::kCloseVehicleDoor, Visible},

        {Visible, action_id::kOpenTrunk, Visible},
        {Visible, action_id::kOpenTrunk, Occluded},

        {Visible, action_id::kLoadBaggage, Visible},
        {Visible, action_id::kLoadBaggage, Occluded},
        {Occluded, action_id::kLoadBaggage, Occluded},
        {Occluded, action_id::kLoadBaggage, Contained},

        {Contained, action_id::kUnloadBaggage, Contained},
        {Contained, action_id::kUnloadBaggage, Occluded},
        {Occluded, action_id::kUnloadBaggage, Occluded},
        {Occluded, action_id::kUnloadBaggage, Visible},

        {Occluded, action_id::kCloseTrunk, Occluded},
        {Occluded, action_id::kCloseTrunk, Visible},
    };
    return CausalAndOrGraph(std::move(actions), std::move(legal), action_id::kWalking);
}

void ActionStateTable::set_row(VisibilityState from, int action, const Row& probabilities) {
    rows_[{state_index(from), action}] = probabilities;
}

bool ActionStateTable::has_row(VisibilityState from, int action) const {
    return rows_.count({state_index(from), action}) > 0;
}

const ActionStateTable::Row& ActionStateTable::row(VisibilityState from, int action) const {
    auto it = rows_.find({state_index(from), action});
    if (it == rows_.end()) {
        throw InputError("no transition row for state " + std::string(to_string(from)) + " and action " +
                         std::to_string(action));
    }
    return it->second;
}

double ActionStateTable::probability(VisibilityState next, VisibilityState from, int action) const {
    return row(from, action)[state_index(next)];
}

void validate_table(const CausalAndOrGraph& caog, const ActionStateTable& table) {
    for (int a = 0; a < caog.action_count(); ++a) {
        for (auto s : kAllStates) {
            if (caog.has_row(s, a) != table.has_row(s, a)) {
                throw InputError("transition table row presence mismatch for state " +
                                 std::string(to_string(s)) + " and action " + caog.action(a).action.name);
            }
        }
    }
    for (const auto& [key, row] : table.rows()) {
        const auto from = static_cast<VisibilityState>(key.first);
        double sum = 0.0;
        for (auto to : kAllStates) {
            const double p = row[state_index(to)];
            if (!(p >= 0.0) || !std::isfinite(p)) throw InputError("negative or non-finite probability");
            if (p > 0.0 && !caog.is_legal(from, key.second, to)) {
                throw InputError("probability mass on illegal transition " + describe(caog, from, key.second, to));
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > kRowTolerance) throw InputError("transition row does not sum to 1");
    }
}

ActionStateTable fit_transition_table(const CausalAndOrGraph& caog,
                                      std::span<const TransitionTriple> events, double alpha) {
    if (!(alpha >= 0.0)) throw InputError("Laplace constant must be >= 0");
    std::map<std::pair<int, int>, std::array<double, 3>> counts;
    for (const auto& e : events) {
        if (!caog.is_legal(e.from, e.action, e.to)) {
            throw InputError("illegal observed transition " + describe(caog, e.from, e.action, e.to));
        }
        counts[{state_index(e.from), e.action}][state_index(e.to)] += 1.0;
    }
    ActionStateTable table;
    table.alpha = alpha;
    for (int a = 0; a < caog.action_count(); ++a) {
        for (auto s : kAllStates) {
            const auto next = caog.successors(s, a);
            if (next.empty()) continue;
            const auto c = counts[{state_index(s), a}];
            double denom = alpha * static_cast<double>(next.size());
            for (auto to : next) denom += c[state_index(to)];
            ActionStateTable::Row row{0.0, 0.0, 0.0};
            if (denom <= 0.0) {
                // alpha = 0 and nothing observed: fall back to uniform
                for (auto to : next) row[state_index(to)] = 1.0 / static_cast<double>(next.size());
            } else {
                for (auto to : next) row[state_index(to)] = (c[state_index(to)] + alpha) / denom;
            }
            table.set_row(s, a, row);
        }
    }
    return table;
}

ActionStateTable default_transition_table(const CausalAndOrGraph& caog) {
    using enum VisibilityState;
    ActionStateTable t;
    t.alpha = 1.0;
    t.set_row(Visible, action_id::kWalking, {0.9, 0.1, 0.0});
    t.set_row(Occluded, action_id::kWalking, {0.3, 0.7, 0.0});
    t.set_row(Contained, action_id::kWalking, {0.0, 0.0, 1.0});

    t.set_row(Visible, action_id::kOpenVehicleDoor, {0.6, 0.4, 0.0});

    t.set_row(Visible, action_id::kEnterVehicle, {0.3, 0.7, 0.0});
    t.set_row(Occluded, action_id::kEnterVehicle, {0.0, 0.3, 0.7});

    t.set_row(Contained, action_id::kExitVehicle, {0.0, 0.7, 0.3});
    t.set_row(Occluded, action_id::kExitVehicle, {0.7, 0.3, 0.0});

    t.set_row(Occluded, action_id::kCloseVehicleDoor, {0.7, 0.3, 0.0});

    t.set_row(Visible, action_id::kOpenTrunk, {0.6, 0.4, 0.0});

    t.set_row(Visible, action_id::kLoadBaggage, {0.3, 0.7, 0.0});
    t.set_row(Occluded, action_id::kLoadBaggage, {0.0, 0.3, 0.7});

    t.set_row(Contained, action_id::kUnloadBaggage, {0.0, 0.7, 0.3});
    t.set_row(Occluded, action_id::kUnloadBaggage, {0.7, 0.3, 0.0});

    t.set_row(Occluded, action_id::kCloseTrunk, {0.7, 0.3, 0.0});
    validate_table(caog, t);
    return t;
}

std::vector<CausalParseGraph> extract_parse_graphs(std::span<const Trajectory> trajectories,
                                                   const CausalAndOrGraph& caog,
                                                   const ActionStateTable& table,
                                                   const ActionEvidence& evidence) {
    std::map<int, const Trajectory*> by_id;
    for (const auto& traj : trajectories) by_id[traj.object_id] = &traj;
    const auto container_active = [&](int id, int frame) {
        auto it = by_id.find(id);
        if (it == by_id.end() || it->second->cls != ObjectClass::Vehicle) return false;
        return it->second->birth() <= frame && frame <= it->second->death();
    };

    std::map<int, CausalParseGraph> frames;
    for (const auto& traj : trajectories) {
        const auto& pts = traj.points;
        std::vector<int> labels(pts.size(), caog.inertial_action());
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            if (pts[i + 1].frame != pts[i].frame + 1) {
                throw InputError("trajectory " + std::to_string(traj.object_id) + " has a frame gap");
            }
            const auto from = pts[i].state;
            const auto to = pts[i + 1].state;
            int best = -1;
            double best_score = -1.0;
            for (int a = 0; a < caog.action_count(); ++a) {
                if (!caog.is_legal(from, a, to) || !caog.applies_to(a, traj.cls)) continue;
                double score = table.probability(to, from, a);
                if (evidence) {
                    if (auto e = evidence(traj, i, a)) score *= std::exp(-*e);
                }
                if (score > best_score) {
                    best_score = score;
                    best = a;
                }
            }
            if (best < 0) {
                throw InputError("trajectory " + std::to_string(traj.object_id) + " has illegal transition " +
                                 std::string(to_string(from)) + " -> " + std::string(to_string(to)) +
                                 " at frame " + std::to_string(pts[i].frame));
            }
            labels[i] = best;
        }
        if (pts.size() >= 2) labels.back() = labels[pts.size() - 2];
        if (pts.size() >= 2 && !caog.is_legal(pts.back().state, labels.back(), pts.back().state)) {
            labels.back() = caog.inertial_action();
        }
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const auto& p = pts[i];
            if ((p.state == VisibilityState::Contained) != p.container_id.has_value()) {
                throw InputError("container reference must be present exactly when Contained");
            }
            if (p.container_id && !container_active(*p.container_id, p.frame)) {
                throw InputError("object " + std::to_string(traj.object_id) +
                                 " references a container not active at frame " + std::to_string(p.frame));
            }
            auto& pg = frames[p.frame];
            pg.frame = p.frame;
            for (const auto& e : pg.entries) {
                if (e.object_id == traj.object_id) throw InputError("duplicate object id within a frame");
            }
            pg.entries.push_back({traj.object_id, p.location, std::nullopt, p.state, labels[i], p.container_id});
        }
    }
    std::vector<CausalParseGraph> out;
    out.reserve(frames.size());
    for (auto& [f, pg] : frames) out.push_back(std::move(pg));
    return out;
}

}  // namespace fluent_track
