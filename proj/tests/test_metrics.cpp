#include "fluent_track/error.hpp"
#include "fluent_track/hungarian.hpp"
#include "fluent_track/metrics.hpp"

#include <doctest.h>

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

using namespace fluent_track;
using VS = VisibilityState;

namespace {

Trajectory straight(int id, int first, int last, Point2 origin, VS state = VS::Visible) {
    Trajectory t;
    t.object_id = id;
    for (int f = first; f <= last; ++f) {
        TrackPoint p;
        p.frame = f;
        p.location = origin + Point2(0.1 * f, 0.0);
        p.state = state;
        t.points.push_back(p);
    }
    return t;
}

FrameTable random_table(std::mt19937_64& rng, int frames, int max_objects, double spread) {
    std::uniform_real_distribution<double> u(0.0, spread);
    FrameTable t;
    for (int f = 0; f < frames; ++f) {
        const int n = static_cast<int>(rng() % static_cast<unsigned>(max_objects + 1));
        std::vector<int> ids(8);
        std::iota(ids.begin(), ids.end(), 0);
        std::shuffle(ids.begin(), ids.end(), rng);
        for (int k = 0; k < n; ++k) {
            FrameObject o;
            o.id = ids[static_cast<std::size_t>(k)];
            o.location = Point2(u(rng), u(rng));
            o.state = static_cast<VS>(rng() % 3);
            t[f].push_back(o);
        }
    }
    return t;
}

int total(const FrameTable& t) {
    int n = 0;
    for (const auto& [f, objs] : t) n += static_cast<int>(objs.size());
    return n;
}

/// Largest number of gated one-to-one pairs in one frame, by trying every permutation.
int brute_force_matches(const std::vector<FrameObject>& gt, const std::vector<FrameObject>& pred, double gate) {
    std::vector<int> idx(std::max(gt.size(), pred.size()));
    std::iota(idx.begin(), idx.end(), 0);
    int best = 0;
    do {
        int m = 0;
        for (std::size_t i = 0; i < gt.size(); ++i) {
            const auto j = static_cast<std::size_t>(idx[i]);
            if (j < pred.size() && (gt[i].location - pred[j].location).norm() <= gate) ++m;
        }
        best = std::max(best, m);
    } while (std::next_permutation(idx.begin(), idx.end()));
    return best;
}

}  // namespace

TEST_CASE("hungarian assignment") {
    Eigen::MatrixXd c(3, 3);
    c << 4, 1, 3, 2, 0, 5, 3, 2, 2;
    const auto a = hungarian(c);
    CHECK(a == std::vector<int>{1, 0, 2});

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 200; ++trial) {
        const int rows = 1 + static_cast<int>(rng() % 5);
        const int cols = 1 + static_cast<int>(rng() % 5);
        Eigen::MatrixXd m(rows, cols);
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < cols; ++j) m(i, j) = u(rng);
        }
        const auto got = hungarian(m);
        double got_cost = 0.0;
        for (int i = 0; i < rows; ++i) {
            if (got[static_cast<std::size_t>(i)] >= 0) got_cost += m(i, got[static_cast<std::size_t>(i)]);
        }
        // brute force over complete assignments of the smaller side
        std::vector<int> perm(static_cast<std::size_t>(std::max(rows, cols)));
        std::iota(perm.begin(), perm.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        do {
            double c2 = 0.0;
            for (int i = 0; i < rows; ++i) {
                if (perm[static_cast<std::size_t>(i)] < cols) c2 += m(i, perm[static_cast<std::size_t>(i)]);
            }
            best = std::min(best, c2);
        } while (std::next_permutation(perm.begin(), perm.end()));
        CHECK(got_cost <= best + 1e-12);
    }
}

TEST_CASE("matching examples") {
    const std::vector<Trajectory> gt = {straight(1, 0, 9, {0, 0}), straight(2, 0, 9, {5, 5})};
    SUBCASE("perfect prediction") {
        const auto m = match_frames(frame_table(gt), frame_table(gt));
        CHECK(m.fp == 0);
        CHECK(m.fn == 0);
        CHECK(m.ids == 0);
        CHECK(m.frag == 0);
        const auto c = clear_metrics(m, m.gt_count);
        CHECK(c.mota == 1.0);
        CHECK(c.moda == 1.0);
        CHECK(c.motp == 1.0);
    }
    SUBCASE("nothing predicted") {
        const std::vector<Trajectory> one = {straight(1, 0, 9, {0, 0})};
        const auto m = match_frames(frame_table(one), FrameTable{});
        CHECK(m.fn == 10);
        CHECK(m.fp == 0);
    }
    SUBCASE("identity switch") {
        const std::vector<Trajectory> one = {straight(1, 0, 9, {0, 0})};
        const std::vector<Trajectory> pred = {straight(7, 0, 4, {0, 0}), straight(8, 5, 9, {0, 0})};
        const auto m = match_frames(frame_table(one), frame_table(pred));
        CHECK(m.ids == 1);
        CHECK(m.fn == 0);
        CHECK(m.fp == 0);
        CHECK(m.frag == 0);
    }
    SUBCASE("fragmentation") {
        const std::vector<Trajectory> one = {straight(1, 0, 9, {0, 0})};
        const std::vector<Trajectory> pred = {straight(7, 0, 3, {0, 0}), straight(7, 6, 9, {0, 0})};
        const auto m = match_frames(frame_table(one), frame_table(pred));
        CHECK(m.frag == 1);
        CHECK(m.ids == 0);
        CHECK(m.fn == 2);
    }
    SUBCASE("gate") {
        const std::vector<Trajectory> one = {straight(1, 0, 0, {0, 0})};
        const std::vector<Trajectory> near = {straight(2, 0, 0, {0.99, 0})};
        const std::vector<Trajectory> far = {straight(2, 0, 0, {1.01, 0})};
        CHECK(match_frames(frame_table(one), frame_table(near)).matches == 1);
        CHECK(match_frames(frame_table(one), frame_table(far)).matches == 0);
    }
    SUBCASE("boxes use overlap") {
        FrameTable g, p;
        g[0].push_back({1, {0, 0}, BBox{0, 0, 10, 10}, VS::Visible});
        p[0].push_back({1, {50, 50}, BBox{2, 0, 10, 10}, VS::Visible});
        CHECK(match_frames(g, p).matches == 1);
        p[0][0].box = BBox{6, 0, 10, 10};
        CHECK(match_frames(g, p).matches == 0);
    }
    SUBCASE("duplicate ids") {
        FrameTable g = frame_table(gt);
        g[3].push_back(g[3].front());
        CHECK_THROWS_AS(match_frames(g, frame_table(gt)), InputError);
        CHECK_THROWS_AS(match_frames(frame_table(gt), g), InputError);
    }
}

TEST_CASE("matching maximizes matched pairs per frame") {
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 300; ++trial) {
        const auto g = random_table(rng, 1, 4, 2.0);
        const auto p = random_table(rng, 1, 4, 2.0);
        const auto m = match_frames(g, p);
        const auto gi = g.find(0);
        const auto pi = p.find(0);
        const std::vector<FrameObject> empty;
        const int best = brute_force_matches(gi == g.end() ? empty : gi->second, pi == p.end() ? empty : pi->second, 1.0);
        CHECK(m.matches == best);
    }
}

TEST_CASE("CLEAR fixtures") {
    const auto c = clear_metrics(100, 5, 10, 2);
    CHECK(std::abs(c.mota - 0.83) < 1e-12);
    CHECK(std::abs(c.moda - 0.85) < 1e-12);
    CHECK(clear_metrics(10, 0, 0, 0).mota == 1.0);
    CHECK(clear_metrics(10, 9, 8, 0).mota < 0.0);
    CHECK_THROWS_AS(clear_metrics(0, 0, 0, 0), InputError);

    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        const int gt = 1 + static_cast<int>(rng() % 500);
        const auto r = clear_metrics(gt, static_cast<int>(rng() % 100), static_cast<int>(rng() % 100),
                                     static_cast<int>(rng() % 20));
        CHECK(r.mota <= r.moda);
    }
}

TEST_CASE("metrics ignore prediction labels") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 100; ++trial) {
        const auto g = random_table(rng, 12, 4, 3.0);
        const auto p = random_table(rng, 12, 4, 3.0);
        if (total(g) == 0) continue;
        std::vector<int> relabel(8);
        std::iota(relabel.begin(), relabel.end(), 100);
        std::shuffle(relabel.begin(), relabel.end(), rng);
        FrameTable q = p;
        for (auto& [f, objs] : q) {
            for (auto& o : objs) o.id = relabel[static_cast<std::size_t>(o.id)];
        }
        const auto a = clear_metrics(match_frames(g, p), total(g));
        const auto b = clear_metrics(match_frames(g, q), total(g));
        CHECK(std::abs(a.mota - b.mota) < 1e-12);
        CHECK(std::abs(a.motp - b.motp) < 1e-12);
        CHECK(std::abs(a.modp - b.modp) < 1e-12);
        CHECK(a.ids == b.ids);
        CHECK(a.frag == b.frag);
        CHECK(a.mota <= a.moda);

        const auto ab = match_frames(g, p);
        const auto ba = match_frames(p, g);
        CHECK(ab.fp == ba.fn);
        CHECK(ab.fn == ba.fp);
    }
}

TEST_CASE("fluent scores") {
    SUBCASE("identical states") {
        const std::vector<Trajectory> gt = {straight(1, 0, 9, {0, 0}), straight(2, 0, 4, {5, 5}, VS::Occluded)};
        const auto g = frame_table(gt);
        const auto m = match_frames(g, g);
        const auto f = fluent_metrics(m, g, g);
        CHECK(*f.precision(VS::Visible) == 1.0);
        CHECK(*f.recall(VS::Visible) == 1.0);
        CHECK(*f.precision(VS::Occluded) == 1.0);
        CHECK(*f.recall(VS::Occluded) == 1.0);
        CHECK_FALSE(f.precision(VS::Contained).has_value());
        CHECK_FALSE(f.recall(VS::Contained).has_value());
    }
    SUBCASE("everything predicted visible") {
        const std::vector<Trajectory> gt = {straight(1, 0, 4, {0, 0}), straight(2, 0, 4, {5, 5}, VS::Occluded)};
        const std::vector<Trajectory> pred = {straight(1, 0, 4, {0, 0}), straight(2, 0, 4, {5, 5})};
        const auto g = frame_table(gt);
        const auto p = frame_table(pred);
        const auto f = fluent_metrics(match_frames(g, p), g, p);
        CHECK(*f.recall(VS::Occluded) == 0.0);
        CHECK(*f.precision(VS::Visible) == 0.5);
    }
    SUBCASE("confusion rows count matched ground truth") {
        std::mt19937_64 rng(31);
        for (int trial = 0; trial < 50; ++trial) {
            const auto g = random_table(rng, 10, 4, 2.0);
            const auto p = random_table(rng, 10, 4, 2.0);
            const auto m = match_frames(g, p);
            const auto f = fluent_metrics(m, g, p);
            std::array<int, 3> per_state{};
            for (const auto& fm : m.frames) {
                for (const auto& [gid, pid] : fm.pairs) {
                    for (const auto& o : g.at(fm.frame)) {
                        if (o.id == gid) ++per_state[static_cast<std::size_t>(state_index(o.state))];
                    }
                }
            }
            for (int s = 0; s < 3; ++s) {
                const auto& row = f.confusion[static_cast<std::size_t>(s)];
                CHECK(row[0] + row[1] + row[2] == per_state[static_cast<std::size_t>(s)]);
            }
        }
    }
}
