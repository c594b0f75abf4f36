#include "fluent_track/energy.hpp"
#include "fluent_track/error.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

using namespace fluent_track;
using VS = VisibilityState;

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // ln(2 * pi)

ActionStateTable table_with(double p_stay) {
    ActionStateTable t;
    t.set_row(VS::Visible, 0, {p_stay, 1.0 - p_stay, 0.0});
    return t;
}

ActionModel model_with(Eigen::VectorXd mean, Eigen::MatrixXd cov, std::optional<Eigen::VectorXd> tmpl) {
    ActionModel m;
    m.name = "probe";
    m.pose = GaussianPoseModel(std::move(mean), std::move(cov));
    m.vehicle_template = std::move(tmpl);
    return m;
}

}  // namespace

TEST_CASE("sigmoid") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(std::abs(sigmoid(50.0) - 1.0) < 1e-9);
    for (double x : {0.1, 1.0, 3.7, 20.0, 400.0}) CHECK(std::abs(sigmoid(x) + sigmoid(-x) - 1.0) < 1e-12);
    for (double x = -20.0; x < 20.0; x += 0.5) CHECK(sigmoid(x) < sigmoid(x + 0.5));
}

TEST_CASE("displacement energy") {
    // bound = 4 m/s * 5 frames / 20 fps = 1 m
    CHECK(displacement_energy({0.5, 0}, {0, 0}, VS::Visible, 4.0, 20.0, 5) == 0);
    CHECK(displacement_energy({3, 0}, {0, 0}, VS::Visible, 4.0, 20.0, 5) == 1);
    CHECK(displacement_energy({0, 0}, {0, 0}, VS::Occluded, 4.0, 20.0, 5) == 1);
    CHECK(displacement_energy({90, 0}, {0, 0}, VS::Occluded, 4.0, 20.0, 5) == 1);
    CHECK(displacement_energy({0, 0}, {0, 0}, VS::Contained, 4.0, 20.0, 1) == 1);
    CHECK_THROWS_AS(displacement_energy({0, 0}, {0, 0}, VS::Visible, 4.0, 20.0, 0), InputError);
}

TEST_CASE("transition energy") {
    CHECK(transition_energy(VS::Visible, VS::Visible, 0, table_with(1.0)) == 0.0);
    CHECK(transition_energy(VS::Visible, VS::Visible, 0, table_with(0.5)) == doctest::Approx(0.6931).epsilon(1e-4));
    CHECK(transition_energy(VS::Contained, VS::Visible, 0, table_with(0.5)) ==
          doctest::Approx(-std::log(1e-9)));
    CHECK(transition_energy(VS::Contained, VS::Visible, 0, table_with(0.5)) == doctest::Approx(20.723).epsilon(1e-4));
    CHECK_THROWS_AS(transition_energy(VS::Visible, VS::Occluded, 0, table_with(0.5)), InputError);

    double last = std::numeric_limits<double>::infinity();
    for (double p = 0.05; p <= 1.0; p += 0.05) {
        const double e = transition_energy(VS::Visible, VS::Visible, 0, table_with(std::min(p, 1.0)));
        CHECK(e < last);
        CHECK(e >= 0.0);
        last = e;
    }
}

TEST_CASE("visibility likelihood") {
    CHECK(visibility_likelihood(VS::Visible, {1.0, std::nullopt, std::nullopt}) == 0.0);
    CHECK(visibility_likelihood(VS::Contained, {std::nullopt, 0.8, std::nullopt}) == doctest::Approx(0.2));
    CHECK(visibility_likelihood(VS::Occluded, {std::nullopt, std::nullopt, 0.0}) == 0.5);

    Tracklet a, b;
    a.pooled_descriptor = Eigen::VectorXd::Unit(4, 1);
    b.pooled_descriptor = Eigen::VectorXd::Unit(4, 1);
    CHECK(visibility_likelihood(VS::Occluded, std::nullopt, std::nullopt, &a, &b) == 0.5);
    b.pooled_descriptor = Eigen::VectorXd::Unit(4, 2);
    CHECK(visibility_likelihood(VS::Occluded, std::nullopt, std::nullopt, &a, &b) == doctest::Approx(sigmoid(1.0)));

    CHECK_THROWS_AS(visibility_likelihood(VS::Visible, VisibilityEvidence{}), InputError);
    CHECK_THROWS_AS(visibility_likelihood(VS::Occluded, VisibilityEvidence{}), InputError);
    CHECK_THROWS_AS(visibility_likelihood(VS::Contained, VisibilityEvidence{}), InputError);

    for (double d = 0.0; d <= 2.0; d += 0.25) {
        const double v = visibility_likelihood(VS::Occluded, {std::nullopt, std::nullopt, d});
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("pose distance closed forms") {
    const GaussianPoseModel unit(Eigen::Vector2d(1.0, -2.0), Eigen::Matrix2d::Identity());
    CHECK(pose_distance(Eigen::Vector2d(1.0, -2.0), unit) == doctest::Approx(kLog2Pi).epsilon(1e-12));
    CHECK(pose_distance(Eigen::Vector2d(2.0, -2.0), unit) == doctest::Approx(kLog2Pi + 0.5).epsilon(1e-12));
    CHECK(pose_distance(Eigen::Vector2d(2.0, -2.0), unit) == doctest::Approx(2.3379).epsilon(1e-4));

    const GaussianPoseModel wide(Eigen::Vector2d::Zero(), 4.0 * Eigen::Matrix2d::Identity());
    CHECK(pose_distance(Eigen::Vector2d::Zero(), wide) ==
          doctest::Approx(kLog2Pi + 0.5 * std::log(16.0)).epsilon(1e-12));

    CHECK_THROWS_AS(pose_distance(Eigen::Vector3d::Zero(), unit), InputError);
    Eigen::Matrix2d indefinite;
    indefinite << 1, 2, 2, 1;
    CHECK_THROWS_AS(GaussianPoseModel(Eigen::Vector2d::Zero(), indefinite), InputError);
}

TEST_CASE("pose distance is smallest at the mean") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> n;
    Eigen::MatrixXd a(4, 4);
    for (int i = 0; i < 16; ++i) a(i / 4, i % 4) = n(rng);
    const GaussianPoseModel model(Eigen::Vector4d(0.3, -1, 2, 0), a * a.transpose() + Eigen::Matrix4d::Identity());
    const double at_mean = pose_distance(model.mean(), model);
    for (int i = 0; i < 500; ++i) {
        Eigen::Vector4d x;
        for (int k = 0; k < 4; ++k) x[k] = 3.0 * n(rng);
        CHECK(pose_distance(x, model) >= at_mean);
    }
}

TEST_CASE("pose distance agrees with a Monte-Carlo density estimate") {
    // Count Gaussian draws falling in a small disc around a query point; the
    // fraction over the disc area estimates the density.
    Eigen::Matrix2d cov;
    cov << 2.0, 0.5, 0.5, 1.0;
    const Eigen::Vector2d mean(1.0, -1.0);
    const GaussianPoseModel model(mean, cov);
    const Eigen::Matrix2d chol = cov.llt().matrixL();

    std::mt19937_64 rng(2024);
    std::normal_distribution<double> n;
    const int samples = 4'000'000;
    const double r = 0.12;
    const std::array<Eigen::Vector2d, 3> queries = {mean, mean + Eigen::Vector2d(0.8, 0.2),
                                                    mean + Eigen::Vector2d(-0.5, 1.0)};
    std::array<int, 3> hits{};
    for (int i = 0; i < samples; ++i) {
        const Eigen::Vector2d x = mean + chol * Eigen::Vector2d(n(rng), n(rng));
        for (std::size_t q = 0; q < queries.size(); ++q) {
            if ((x - queries[q]).squaredNorm() < r * r) ++hits[q];
        }
    }
    for (std::size_t q = 0; q < queries.size(); ++q) {
        const double density = hits[q] / (static_cast<double>(samples) * std::numbers::pi * r * r);
        const double estimate = -std::log(density);
        const double exact = pose_distance(queries[q], model);
        CAPTURE(q);
        CHECK(std::abs(estimate - exact) / exact < 0.01);
    }
}

TEST_CASE("vehicle fluent distance") {
    const Eigen::Vector2d t(1.0, 2.0);
    CHECK(vehicle_fluent_distance(t, t) == 0.0);
    CHECK(vehicle_fluent_distance(Eigen::Vector2d(4.0, 6.0), t) == 5.0);
    CHECK(vehicle_fluent_distance(Eigen::Vector4d(1, 1, 1, 1), Eigen::Vector4d::Zero()) == 2.0);
    CHECK_THROWS_AS(vehicle_fluent_distance(Eigen::Vector3d::Zero(), t), InputError);
}

TEST_CASE("action likelihood") {
    // Covariance I / (2 pi) makes the negative log density zero at the mean.
    const Eigen::Vector2d mu(0.5, 0.5);
    const auto m = model_with(mu, Eigen::Matrix2d::Identity() / (2.0 * std::numbers::pi), Eigen::VectorXd(mu));
    const Eigen::VectorXd pose = mu;
    const Eigen::VectorXd fluent = mu;
    CHECK(pose_distance(pose, *m.pose) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(action_likelihood(&pose, &fluent, m) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(action_likelihood(&pose, nullptr, m) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(action_likelihood(nullptr, nullptr, m) == 1.0);

    const auto far = model_with(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity(), Eigen::VectorXd(Eigen::Vector2d::Zero()));
    const Eigen::VectorXd far_pose = Eigen::Vector2d(10.0, 0.0);  // distance 50 + log(2 pi)
    const Eigen::VectorXd far_fluent = Eigen::Vector2d(30.0, 40.0);
    CHECK(std::abs(action_likelihood(&far_pose, &far_fluent, far) - 2.0) < 1e-9);

    ActionModel bare;
    bare.name = "bare";
    CHECK_THROWS_AS(action_likelihood(&pose, nullptr, bare), InputError);
    CHECK_THROWS_AS(action_likelihood(nullptr, &fluent, bare), InputError);

    std::mt19937_64 rng(9);
    std::normal_distribution<double> n;
    for (int i = 0; i < 200; ++i) {
        const Eigen::VectorXd p = Eigen::Vector2d(n(rng), n(rng));
        const Eigen::VectorXd f = Eigen::Vector2d(n(rng), n(rng));
        const double v = action_likelihood(&p, &f, far);
        CHECK(v > 0.0);
        CHECK(v < 2.0);
    }
}

TEST_CASE("edge cost breakdown") {
    CHECK(EnergyBreakdown::from_parts(0, 0, 0, 0).total == 0.0);
    CHECK(EnergyBreakdown::from_parts(1, 0.6931, 0.2, 1.0).total == doctest::Approx(2.8931).epsilon(1e-12));
    CHECK_THROWS_AS(EnergyBreakdown::from_parts(std::nan(""), 0, 0, 0), InputError);
    CHECK_THROWS_AS(EnergyBreakdown::from_parts(0, 0, 0, std::numeric_limits<double>::infinity()), InputError);

    auto params = default_parameters();
    const EnergyContext ctx{params, 10.0, 4.0};
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 300; ++i) {
        NodeObservation from, to;
        from.location = Point2(u(rng) * 3, u(rng) * 3);
        to.location = Point2(u(rng) * 3, u(rng) * 3);
        from.state = VS::Visible;
        to.state = u(rng) < 0.5 ? VS::Visible : VS::Occluded;
        from.visibility.detection_score = u(rng);
        const auto e = edge_cost(from, to, 1 + i % 4, action_id::kWalking, ctx);
        CHECK(std::abs(e.total - (e.displacement + e.transition + e.visibility + e.action)) < 1e-9);
        CHECK(e.displacement >= 0.0);
        CHECK(e.transition >= 0.0);
        CHECK(e.visibility >= 0.0);
        CHECK(e.action >= 0.0);
    }
}

TEST_CASE("likelihood modes") {
    auto params = default_parameters();
    NodeObservation node;
    node.visibility.detection_score = 0.9;
    const Eigen::VectorXd fluent = Eigen::VectorXd::Constant(4, 0.5);
    node.vehicle_feature = &fluent;
    const int act = action_id::kOpenVehicleDoor;

    const EnergyContext full{params, 10.0, 4.0};
    const auto e_full = likelihood_energy(node, act, full);
    CHECK(e_full.visibility == doctest::Approx(0.1));
    CHECK(e_full.action > 0.5);

    params.likelihood = LikelihoodMode::HumanOnly;
    const EnergyContext human{params, 10.0, 4.0};
    CHECK(likelihood_energy(node, act, human).action == 1.0);

    params.likelihood = LikelihoodMode::PriorOnly;
    const EnergyContext prior{params, 10.0, 4.0};
    CHECK(likelihood_energy(node, act, prior).total == 0.0);
}
