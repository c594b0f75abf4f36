#include "fluent_track/io.hpp"

#include "fluent_track/error.hpp"

#include <json.hpp>

#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <ostream>

namespace fluent_track {

using nlohmann::json;

namespace {

json vector_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Eigen::VectorXd json_vector(const json& j) {
    if (!j.is_array()) throw InputError("expected a numeric array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw InputError("expected a numeric array");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

const json& field(const json& j, const char* name) {
    if (!j.is_object() || !j.contains(name)) throw InputError(std::string("missing field '") + name + "'");
    return j.at(name);
}

double number(const json& j, const char* name) {
    const auto& v = field(j, name);
    if (!v.is_number()) throw InputError(std::string("field '") + name + "' must be a number");
    return v.get<double>();
}

int integer(const json& j, const char* name) {
    const auto& v = field(j, name);
    if (!v.is_number_integer()) throw InputError(std::string("field '") + name + "' must be an integer");
    return v.get<int>();
}

std::string text(const json& j, const char* name) {
    const auto& v = field(j, name);
    if (!v.is_string()) throw InputError(std::string("field '") + name + "' must be a string");
    return v.get<std::string>();
}

/// Calls `fn` per non-blank line, prefixing errors with the source and line number.
void for_each_line(std::istream& in, const std::string& source, const std::function<void(const json&)>& fn) {
    std::string line;
    int number_of_line = 0;
    while (std::getline(in, line)) {
        ++number_of_line;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            fn(json::parse(line));
        } catch (const json::exception& e) {
            throw InputError(source + ":" + std::to_string(number_of_line) + ": malformed JSON: " + e.what());
        } catch (const InputError& e) {
            throw InputError(source + ":" + std::to_string(number_of_line) + ": " + e.what());
        }
    }
}

json parse_document(std::istream& in, const std::string& source) {
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InputError(source + ": malformed JSON: " + e.what());
    }
}

void write_line(std::ostream& out, const json& j) { out << j.dump() << '\n'; }

Point2 location(const json& j) {
    const auto v = json_vector(field(j, "location"));
    if (v.size() != 2) throw InputError("location must be [x, y]");
    return {v[0], v[1]};
}

int action_by_name(const CausalAndOrGraph& caog, const std::string& name) {
    for (const auto& a : caog.actions()) {
        if (a.action.name == name) return a.action.id;
    }
    throw InputError("unknown action '" + name + "'");
}

json point_json(int frame, const Point2& loc, VisibilityState state, int action, const std::optional<int>& container,
                const CausalAndOrGraph& caog) {
    json p = {{"frame", frame},
              {"location", {loc.x(), loc.y()}},
              {"state", std::string(to_string(state))},
              {"action", caog.action(action).action.name}};
    if (container) p["container_id"] = *container;
    return p;
}

}  // namespace

std::vector<Detection> read_detections(std::istream& in, const std::string& source) {
    std::vector<Detection> out;
    for_each_line(in, source, [&](const json& j) {
        Detection d;
        d.frame = integer(j, "frame");
        const auto box = json_vector(field(j, "bbox"));
        if (box.size() != 4) throw InputError("bbox must have four numbers");
        d.bbox = {box[0], box[1], box[2], box[3]};
        d.cls = parse_object_class(text(j, "class"));
        d.score = number(j, "score");
        d.descriptor = json_vector(field(j, "descriptor"));
        if (j.contains("pose_feature")) d.pose_feature = json_vector(j.at("pose_feature"));
        if (j.contains("vehicle_fluent_feature")) {
            d.vehicle_fluent_feature = json_vector(j.at("vehicle_fluent_feature"));
        }
        d.validate();
        out.push_back(std::move(d));
    });
    return out;
}

void write_detections(std::ostream& out, std::span<const Detection> detections) {
    for (const auto& d : detections) {
        json j = {{"frame", d.frame},
                  {"bbox", {d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h}},
                  {"class", std::string(to_string(d.cls))},
                  {"score", d.score},
                  {"descriptor", vector_json(d.descriptor)}};
        if (d.pose_feature) j["pose_feature"] = vector_json(*d.pose_feature);
        if (d.vehicle_fluent_feature) j["vehicle_fluent_feature"] = vector_json(*d.vehicle_fluent_feature);
        write_line(out, j);
    }
}

CameraModel read_camera(std::istream& in, const std::string& source) {
    const json j = parse_document(in, source);
    try {
        const auto& h = field(j, "homography");
        if (!h.is_array() || h.size() != 3) throw InputError("homography must be a 3x3 array");
        Eigen::Matrix3d m;
        for (int r = 0; r < 3; ++r) {
            const auto row = json_vector(h[static_cast<std::size_t>(r)]);
            if (row.size() != 3) throw InputError("homography must be a 3x3 array");
            m.row(r) = row.transpose();
        }
        return CameraModel(m, number(j, "frame_rate"));
    } catch (const DegenerateProjection& e) {
        throw DegenerateProjection(source + ": " + e.what());
    } catch (const InputError& e) {
        throw InputError(source + ": " + e.what());
    }
}

void write_camera(std::ostream& out, const CameraModel& camera) {
    json h = json::array();
    for (int r = 0; r < 3; ++r) h.push_back(vector_json(camera.homography().row(r).transpose()));
    out << json{{"homography", h}, {"frame_rate", camera.frame_rate()}}.dump(2) << '\n';
}

std::vector<Trajectory> read_trajectories(std::istream& in, const std::string& source, const CausalAndOrGraph& caog) {
    std::vector<Trajectory> out;
    for_each_line(in, source, [&](const json& j) {
        Trajectory t;
        t.object_id = integer(j, "object_id");
        t.cls = parse_object_class(text(j, "class"));
        const auto& pts = field(j, "track");
        if (!pts.is_array()) throw InputError("track must be an array");
        for (const auto& p : pts) {
            TrackPoint tp;
            tp.frame = integer(p, "frame");
            tp.location = location(p);
            tp.state = parse_visibility_state(text(p, "state"));
            tp.action = action_by_name(caog, text(p, "action"));
            if (p.contains("container_id")) tp.container_id = integer(p, "container_id");
            if (!t.points.empty() && tp.frame <= t.points.back().frame) {
                throw InputError("trajectory " + std::to_string(t.object_id) + " frames must increase");
            }
            t.points.push_back(std::move(tp));
        }
        out.push_back(std::move(t));
    });
    return out;
}

void write_trajectories(std::ostream& out, std::span<const Trajectory> trajectories, const CausalAndOrGraph& caog) {
    for (const auto& t : trajectories) {
        json pts = json::array();
        for (const auto& p : t.points) pts.push_back(point_json(p.frame, p.location, p.state, p.action, p.container_id, caog));
        write_line(out, {{"object_id", t.object_id}, {"class", std::string(to_string(t.cls))}, {"track", pts}});
    }
}

std::vector<CausalParseGraph> read_parse_graphs(std::istream& in, const std::string& source,
                                                const CausalAndOrGraph& caog) {
    std::vector<CausalParseGraph> out;
    for_each_line(in, source, [&](const json& j) {
        CausalParseGraph g;
        g.frame = integer(j, "frame");
        const auto& entries = field(j, "entries");
        if (!entries.is_array()) throw InputError("entries must be an array");
        for (const auto& e : entries) {
            ParseEntry pe;
            pe.object_id = integer(e, "object_id");
            pe.location = location(e);
            pe.state = parse_visibility_state(text(e, "state"));
            pe.action = action_by_name(caog, text(e, "action"));
            if (e.contains("container_id")) pe.container_id = integer(e, "container_id");
            if (e.contains("bbox")) {
                const auto b = json_vector(e.at("bbox"));
                if (b.size() != 4) throw InputError("bbox must have four numbers");
                pe.bbox = BBox{b[0], b[1], b[2], b[3]};
            }
            g.entries.push_back(std::move(pe));
        }
        out.push_back(std::move(g));
    });
    return out;
}

void write_parse_graphs(std::ostream& out, std::span<const CausalParseGraph> graphs, const CausalAndOrGraph& caog) {
    for (const auto& g : graphs) {
        json entries = json::array();
        for (const auto& e : g.entries) {
            json p = point_json(g.frame, e.location, e.state, e.action, e.container_id, caog);
            p.erase("frame");
            p["object_id"] = e.object_id;
            if (e.bbox) p["bbox"] = {e.bbox->x, e.bbox->y, e.bbox->w, e.bbox->h};
            entries.push_back(std::move(p));
        }
        write_line(out, {{"frame", g.frame}, {"entries", entries}});
    }
}

std::vector<ActionModel> read_action_models(std::istream& in, const std::string& source,
                                            const CausalAndOrGraph& caog) {
    const json doc = parse_document(in, source);
    std::vector<ActionModel> out(static_cast<std::size_t>(caog.action_count()));
    std::vector<bool> seen(out.size(), false);
    std::size_t index = 0;
    try {
        const auto& actions = field(doc, "actions");
        if (!actions.is_array()) throw InputError("actions must be an array");
        for (; index < actions.size(); ++index) {
            const auto& j = actions[index];
            const int id = action_by_name(caog, text(j, "name"));
            if (seen[static_cast<std::size_t>(id)]) throw InputError("action model listed twice");
            seen[static_cast<std::size_t>(id)] = true;
            ActionModel m;
            m.name = caog.action(id).action.name;
            if (j.contains("mu")) {
                const auto mean = json_vector(j.at("mu"));
                const auto& c = field(j, "sigma");
                if (!c.is_array() || c.size() != static_cast<std::size_t>(mean.size())) {
                    throw InputError("sigma must be square with the dimension of mu");
                }
                Eigen::MatrixXd cov(mean.size(), mean.size());
                for (Eigen::Index r = 0; r < mean.size(); ++r) {
                    const auto row = json_vector(c[static_cast<std::size_t>(r)]);
                    if (row.size() != mean.size()) throw InputError("sigma must be square");
                    cov.row(r) = row.transpose();
                }
                m.pose.emplace(mean, cov);
            }
            if (j.contains("vehicle_template")) m.vehicle_template = json_vector(j.at("vehicle_template"));
            out[static_cast<std::size_t>(id)] = std::move(m);
        }
    } catch (const InputError& e) {
        throw InputError(source + ": actions[" + std::to_string(index) + "]: " + e.what());
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
        if (!seen[i]) throw InputError(source + ": no model for action '" + caog.actions()[i].action.name + "'");
    }
    return out;
}

void write_action_models(std::ostream& out, std::span<const ActionModel> models) {
    json actions = json::array();
    for (const auto& m : models) {
        json j = {{"name", m.name}};
        if (m.pose) {
            j["mu"] = vector_json(m.pose->mean());
            json cov = json::array();
            for (Eigen::Index r = 0; r < m.pose->covariance().rows(); ++r) {
                cov.push_back(vector_json(m.pose->covariance().row(r).transpose()));
            }
            j["sigma"] = cov;
        }
        if (m.vehicle_template) j["vehicle_template"] = vector_json(*m.vehicle_template);
        actions.push_back(std::move(j));
    }
    out << json{{"actions", actions}}.dump(2) << '\n';
}

ActionStateTable read_transition_table(std::istream& in, const std::string& source, const CausalAndOrGraph& caog) {
    const json doc = parse_document(in, source);
    ActionStateTable table;
    std::size_t index = 0;
    try {
        if (doc.contains("alpha")) table.alpha = number(doc, "alpha");
        const auto& rows = field(doc, "rows");
        if (!rows.is_array()) throw InputError("rows must be an array");
        for (; index < rows.size(); ++index) {
            const auto& j = rows[index];
            const auto from = parse_visibility_state(text(j, "state"));
            const int action = action_by_name(caog, text(j, "action"));
            const auto& next = field(j, "next");
            if (!next.is_object()) throw InputError("next must map state names to probabilities");
            ActionStateTable::Row row{0.0, 0.0, 0.0};
            for (const auto& [name, p] : next.items()) {
                if (!p.is_number()) throw InputError("probability of '" + name + "' must be a number");
                row[static_cast<std::size_t>(state_index(parse_visibility_state(name)))] = p.get<double>();
            }
            if (table.has_row(from, action)) throw InputError("row listed twice");
            table.set_row(from, action, row);
        }
        index = rows.size();
        validate_table(caog, table);
    } catch (const InputError& e) {
        if (index < doc.at("rows").size()) {
            throw InputError(source + ": rows[" + std::to_string(index) + "]: " + e.what());
        }
        throw InputError(source + ": " + e.what());
    }
    return table;
}

void write_transition_table(std::ostream& out, const ActionStateTable& table, const CausalAndOrGraph& caog) {
    json rows = json::array();
    for (auto from : kAllStates) {
        for (int a = 0; a < caog.action_count(); ++a) {
            if (!table.has_row(from, a)) continue;
            const auto& r = table.row(from, a);
            json next = json::object();
            for (auto to : kAllStates) next[std::string(to_string(to))] = r[static_cast<std::size_t>(state_index(to))];
            rows.push_back({{"state", std::string(to_string(from))}, {"action", caog.action(a).action.name}, {"next", next}});
        }
    }
    out << json{{"alpha", table.alpha}, {"rows", rows}}.dump(2) << '\n';
}

std::vector<LabeledClip> read_labeled_clips(std::istream& in, const std::string& source,
                                            const CausalAndOrGraph& caog) {
    std::vector<LabeledClip> out;
    for_each_line(in, source, [&](const json& j) {
        LabeledClip c;
        c.action = action_by_name(caog, text(j, "action"));
        if (j.contains("pose_feature")) c.pose_feature = json_vector(j.at("pose_feature"));
        if (j.contains("vehicle_fluent_feature")) c.vehicle_fluent_feature = json_vector(j.at("vehicle_fluent_feature"));
        if (j.contains("transitions")) {
            const auto& ts = j.at("transitions");
            if (!ts.is_array()) throw InputError("transitions must be an array");
            for (const auto& t : ts) {
                if (!t.is_array() || t.size() != 2 || !t[0].is_string() || !t[1].is_string()) {
                    throw InputError("each transition is a [from, to] pair of state names");
                }
                c.transitions.push_back({parse_visibility_state(t[0].get<std::string>()), c.action,
                                         parse_visibility_state(t[1].get<std::string>())});
            }
        }
        out.push_back(std::move(c));
    });
    return out;
}

void write_labeled_clips(std::ostream& out, std::span<const LabeledClip> clips, const CausalAndOrGraph& caog) {
    for (const auto& c : clips) {
        json j = {{"action", caog.action(c.action).action.name}};
        if (c.pose_feature) j["pose_feature"] = vector_json(*c.pose_feature);
        if (c.vehicle_fluent_feature) j["vehicle_fluent_feature"] = vector_json(*c.vehicle_fluent_feature);
        json ts = json::array();
        for (const auto& t : c.transitions) ts.push_back({std::string(to_string(t.from)), std::string(to_string(t.to))});
        j["transitions"] = ts;
        write_line(out, j);
    }
}

void write_metrics_json(std::ostream& out, const ClearMetrics& clear, const FluentMetrics& fluents) {
    const auto opt = [](std::optional<double> v) { return v ? json(*v) : json(nullptr); };
    json states = json::object();
    for (auto s : kAllStates) {
        states[std::string(to_string(s))] = {{"precision", opt(fluents.precision(s))},
                                             {"recall", opt(fluents.recall(s))}};
    }
    json confusion = json::array();
    for (const auto& row : fluents.confusion) confusion.push_back({row[0], row[1], row[2]});
    json j = {{"MOTA", clear.mota}, {"MOTP", clear.motp}, {"MODA", clear.moda}, {"MODP", clear.modp},
              {"FP", clear.fp},     {"FN", clear.fn},     {"IDS", clear.ids},   {"Frag", clear.frag},
              {"fluents", states},  {"confusion", confusion}};
    out << j.dump(2) << '\n';
}

void write_metrics_csv(std::ostream& out, const std::string& label, const ClearMetrics& clear) {
    out << "sequence,MOTA,MOTP,MODA,MODP,FP,FN,IDS,Frag\n";
    out << label << std::setprecision(6) << std::fixed << ',' << clear.mota << ',' << clear.motp << ','
        << clear.moda << ',' << clear.modp << ',' << clear.fp << ',' << clear.fn << ',' << clear.ids << ','
        << clear.frag << '\n';
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "' for reading");
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
    return out;
}

}  // namespace fluent_track
