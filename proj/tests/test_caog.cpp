#include "fluent_track/caog.hpp"
#include "fluent_track/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace fluent_track;
using VS = VisibilityState;

namespace {

Trajectory make_track(int id, ObjectClass cls, int start, const std::vector<VS>& states,
                      std::optional<int> container = std::nullopt) {
    Trajectory t;
    t.object_id = id;
    t.cls = cls;
    for (std::size_t i = 0; i < states.size(); ++i) {
        TrackPoint p;
        p.frame = start + static_cast<int>(i);
        p.location = Point2(static_cast<double>(i), 0.0);
        p.state = states[i];
        if (states[i] == VS::Contained) p.container_id = container;
        t.points.push_back(p);
    }
    return t;
}

void check_rows_stochastic(const CausalAndOrGraph& caog, const ActionStateTable& table) {
    for (const auto& [key, row] : table.rows()) {
        double sum = 0.0;
        for (double p : row) {
            CHECK(p >= 0.0);
            sum += p;
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
    CHECK_NOTHROW(validate_table(caog, table));
}

}  // namespace

TEST_CASE("default grammar topology") {
    const auto g = default_caog();
    CHECK(g.action_count() == 9);
    CHECK_FALSE(g.is_legal(VS::Visible, action_id::kEnterVehicle, VS::Contained));
    CHECK(g.is_legal(VS::Visible, action_id::kWalking, VS::Visible));
    CHECK(g.is_legal(VS::Occluded, action_id::kEnterVehicle, VS::Contained));
    for (int a = 0; a < g.action_count(); ++a) {
        CHECK_FALSE(g.is_legal(VS::Visible, a, VS::Contained));
        CHECK_FALSE(g.is_legal(VS::Contained, a, VS::Visible));
    }
    for (auto s : kAllStates) CHECK(g.is_legal(s, g.inertial_action(), s));
    for (const auto& info : g.actions()) {
        const bool used = std::any_of(g.triples().begin(), g.triples().end(),
                                      [&](const TransitionTriple& t) { return t.action == info.action.id; });
        CHECK(used);
    }
    CHECK(g.action_id("entering_vehicle") == action_id::kEnterVehicle);
    CHECK_THROWS_AS(g.action_id("flying"), InputError);
}

TEST_CASE("grammar construction checks") {
    std::vector<ActionInfo> actions = {{{0, "stay"}, false, {ObjectClass::Person}},
                                       {{1, "hide"}, false, {ObjectClass::Person}}};
    const std::vector<TransitionTriple> no_hide = {
        {VS::Visible, 0, VS::Visible}, {VS::Occluded, 0, VS::Occluded}, {VS::Contained, 0, VS::Contained}};
    CHECK_THROWS_AS(CausalAndOrGraph(actions, no_hide, 0), InputError);

    const std::vector<TransitionTriple> no_inertia = {{VS::Visible, 0, VS::Visible}, {VS::Visible, 1, VS::Occluded}};
    CHECK_THROWS_AS(CausalAndOrGraph(actions, no_inertia, 0), InputError);

    auto ok = no_hide;
    ok.push_back({VS::Visible, 1, VS::Occluded});
    CHECK_NOTHROW(CausalAndOrGraph(actions, ok, 0));
}

TEST_CASE("transition table fitting") {
    const auto g = default_caog();
    const int enter = action_id::kEnterVehicle;
    std::vector<TransitionTriple> events;
    for (int i = 0; i < 8; ++i) events.push_back({VS::Visible, enter, VS::Occluded});
    for (int i = 0; i < 2; ++i) events.push_back({VS::Visible, enter, VS::Visible});

    const auto t = fit_transition_table(g, events, 1.0);
    CHECK(t.probability(VS::Occluded, VS::Visible, enter) == doctest::Approx(9.0 / 12.0).epsilon(1e-15));
    CHECK(t.probability(VS::Occluded, VS::Visible, enter) == doctest::Approx(0.75));
    check_rows_stochastic(g, t);

    const auto prior = fit_transition_table(g, std::vector<TransitionTriple>{}, 1.0);
    for (const auto& [key, row] : prior.rows()) {
        const auto succ = g.successors(static_cast<VS>(key.first), key.second);
        for (auto s : succ) CHECK(row[state_index(s)] == doctest::Approx(1.0 / succ.size()));
    }

    const std::vector<TransitionTriple> one = {{VS::Occluded, enter, VS::Contained}};
    const auto mle = fit_transition_table(g, one, 0.0);
    CHECK(mle.probability(VS::Contained, VS::Occluded, enter) == 1.0);
    CHECK(mle.probability(VS::Occluded, VS::Occluded, enter) == 0.0);

    const std::vector<TransitionTriple> illegal = {{VS::Visible, enter, VS::Contained}};
    CHECK_THROWS_AS(fit_transition_table(g, illegal, 1.0), InputError);
    CHECK_THROWS_AS(fit_transition_table(g, one, -1.0), InputError);
}

TEST_CASE("fitting ignores observation order") {
    const auto g = default_caog();
    std::vector<TransitionTriple> legal = g.triples();
    std::mt19937_64 rng(17);
    std::vector<TransitionTriple> events;
    for (int i = 0; i < 300; ++i) events.push_back(legal[rng() % legal.size()]);
    const auto base = fit_transition_table(g, events, 1.0);
    check_rows_stochastic(g, base);
    for (int trial = 0; trial < 20; ++trial) {
        std::shuffle(events.begin(), events.end(), rng);
        const auto t = fit_transition_table(g, events, 1.0);
        CHECK(t.rows() == base.rows());
    }
}

TEST_CASE("default table is valid") {
    const auto g = default_caog();
    check_rows_stochastic(g, default_transition_table(g));
}

TEST_CASE("validation rejects bad tables") {
    const auto g = default_caog();
    auto t = default_transition_table(g);
    t.set_row(VS::Visible, action_id::kWalking, {0.5, 0.4, 0.0});
    CHECK_THROWS_AS(validate_table(g, t), InputError);
    t.set_row(VS::Visible, action_id::kWalking, {0.5, 0.4, 0.1});
    CHECK_THROWS_AS(validate_table(g, t), InputError);
    auto extra = default_transition_table(g);
    extra.set_row(VS::Contained, action_id::kOpenTrunk, {0.0, 0.0, 1.0});
    CHECK_THROWS_AS(validate_table(g, extra), InputError);
}

TEST_CASE("parse graph action labels") {
    const auto g = default_caog();
    const auto table = default_transition_table(g);

    SUBCASE("constant visible track walks") {
        const std::vector<Trajectory> ts = {make_track(1, ObjectClass::Person, 3, std::vector<VS>(6, VS::Visible))};
        const auto pgs = extract_parse_graphs(ts, g, table);
        REQUIRE(pgs.size() == 6);
        for (const auto& pg : pgs) {
            REQUIRE(pg.entries.size() == 1);
            CHECK(pg.entries[0].action == action_id::kWalking);
            CHECK(pg.entries[0].state == VS::Visible);
        }
    }

    SUBCASE("occluded to contained is entering") {
        const std::vector<Trajectory> ts = {
            make_track(0, ObjectClass::Vehicle, 0, std::vector<VS>(10, VS::Visible)),
            make_track(1, ObjectClass::Person, 2, {VS::Visible, VS::Occluded, VS::Contained, VS::Contained}, 0)};
        const auto pgs = extract_parse_graphs(ts, g, table);
        std::map<int, int> action_at;
        for (const auto& pg : pgs) {
            for (const auto& e : pg.entries) {
                if (e.object_id == 1) action_at[pg.frame] = e.action;
            }
        }
        CHECK(action_at.at(3) == action_id::kEnterVehicle);
        CHECK(action_at.at(4) == action_id::kWalking);
    }

    SUBCASE("ties go to the lower action id") {
        // With no observations every legal row is uniform, so all four actions
        // that allow Visible -> Occluded for a person score 0.5.
        const auto flat = fit_transition_table(g, std::vector<TransitionTriple>{}, 1.0);
        const std::vector<Trajectory> ts = {make_track(1, ObjectClass::Person, 0, {VS::Visible, VS::Occluded})};
        CHECK(flat.probability(VS::Occluded, VS::Visible, action_id::kWalking) ==
              flat.probability(VS::Occluded, VS::Visible, action_id::kOpenTrunk));
        const auto pgs = extract_parse_graphs(ts, g, flat);
        CHECK(pgs[0].entries[0].action == action_id::kWalking);

        const ActionEvidence even = [](const Trajectory&, std::size_t, int a) -> std::optional<double> {
            return a == action_id::kWalking ? 3.0 : 1.0;
        };
        CHECK(extract_parse_graphs(ts, g, flat, even)[0].entries[0].action == action_id::kOpenVehicleDoor);
    }

    SUBCASE("evidence can overrule the prior") {
        const std::vector<Trajectory> ts = {make_track(1, ObjectClass::Person, 0, {VS::Visible, VS::Occluded})};
        const ActionEvidence evidence = [](const Trajectory&, std::size_t, int a) -> std::optional<double> {
            return a == action_id::kEnterVehicle ? 0.0 : 5.0;
        };
        const auto pgs = extract_parse_graphs(ts, g, table, evidence);
        CHECK(pgs[0].entries[0].action == action_id::kEnterVehicle);
    }

    SUBCASE("labels never alter states") {
        std::mt19937_64 rng(2);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<VS> states = {VS::Visible};
            for (int i = 0; i < 12; ++i) {
                std::vector<VS> options;
                for (auto s : kAllStates) {
                    if (g.transition_possible(states.back(), s, ObjectClass::Person)) options.push_back(s);
                }
                states.push_back(options[rng() % options.size()]);
            }
            const std::vector<Trajectory> ts = {make_track(0, ObjectClass::Vehicle, 0, std::vector<VS>(13, VS::Visible)),
                                                make_track(1, ObjectClass::Person, 0, states, 0)};
            const auto pgs = extract_parse_graphs(ts, g, table);
            for (const auto& pg : pgs) {
                for (const auto& e : pg.entries) {
                    if (e.object_id == 1) CHECK(e.state == states[static_cast<std::size_t>(pg.frame)]);
                }
            }
        }
    }

    SUBCASE("illegal sequences are rejected") {
        const std::vector<Trajectory> ts = {make_track(0, ObjectClass::Vehicle, 0, std::vector<VS>(3, VS::Visible)),
                                            make_track(1, ObjectClass::Person, 0, {VS::Visible, VS::Contained}, 0)};
        CHECK_THROWS_AS(extract_parse_graphs(ts, g, table), InputError);
    }

    SUBCASE("containers must be active") {
        const std::vector<Trajectory> ts = {
            make_track(0, ObjectClass::Vehicle, 0, std::vector<VS>(2, VS::Visible)),
            make_track(1, ObjectClass::Person, 0, {VS::Visible, VS::Occluded, VS::Contained}, 0)};
        CHECK_THROWS_AS(extract_parse_graphs(ts, g, table), InputError);
    }
}
