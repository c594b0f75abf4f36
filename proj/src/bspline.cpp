#include "fluent_track/bspline.hpp"

#include "fluent_track/error.hpp"

#include <algorithm>

namespace fluent_track {

BSplineCurve BSplineCurve::prepare(std::span<const double> params, std::span<const Point2> points, int degree,
                                   int control_count, std::vector<double>& u) {
    if (points.empty()) throw InputError("cannot fit a spline through zero points");
    if (params.size() != points.size()) throw InputError("spline parameter count mismatch");
    for (std::size_t i = 1; i < params.size(); ++i) {
        if (!(params[i] > params[i - 1])) throw InputError("spline parameters must be increasing");
    }
    BSplineCurve c;
    c.degree_ = degree;
    c.t0_ = params.front();
    c.t1_ = params.back();
    c.control_.assign(static_cast<std::size_t>(control_count), Point2::Zero());
    const std::size_t n = points.size();
    u.resize(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = n == 1 ? 0.0 : (params[i] - c.t0_) / (c.t1_ - c.t0_);
    return c;
}

Eigen::RowVectorXd BSplineCurve::basis_row(double u) const {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(control_.size()));
    const int span = span_index(u);
    const auto N = basis(span, u);
    for (int j = 0; j <= degree_; ++j) row[span - degree_ + j] = N[j];
    return row;
}

BSplineCurve BSplineCurve::interpolate(std::span<const double> params, std::span<const Point2> points) {
    const int n = static_cast<int>(points.size());
    std::vector<double> u;
    auto c = prepare(params, points, std::min(3, std::max(n - 1, 0)), n, u);
    if (n == 1) {
        c.knots_ = {0.0, 1.0};
        c.control_ = {points.front()};
        return c;
    }
    const int p = c.degree_;
    // averaged, clamped knot vector
    c.knots_.assign(static_cast<std::size_t>(n + p + 1), 0.0);
    for (int i = n; i < n + p + 1; ++i) c.knots_[i] = 1.0;
    for (int j = 1; j < n - p; ++j) {
        double s = 0.0;
        for (int i = j; i < j + p; ++i) s += u[i];
        c.knots_[j + p] = s / p;
    }
    Eigen::MatrixXd basis_matrix(n, n);
    Eigen::MatrixXd rhs(n, 2);
    for (int k = 0; k < n; ++k) {
        basis_matrix.row(k) = c.basis_row(u[k]);
        rhs.row(k) = points[k].transpose();
    }
    const Eigen::MatrixXd ctrl = basis_matrix.fullPivLu().solve(rhs);
    for (int k = 0; k < n; ++k) c.control_[k] = ctrl.row(k).transpose();
    return c;
}

BSplineCurve BSplineCurve::fit(std::span<const double> params, std::span<const Point2> points, int control_count,
                               std::span<const std::size_t> pinned) {
    const int n = static_cast<int>(points.size());
    if (control_count < 1 || control_count > n) throw InputError("control point count must be in [1, points]");
    if (static_cast<int>(pinned.size()) > control_count) throw InputError("too many pinned points for the fit");
    for (auto i : pinned) {
        if (i >= points.size()) throw InputError("pinned index out of range");
    }
    std::vector<double> u;
    auto c = prepare(params, points, std::min(3, control_count - 1), control_count, u);
    if (control_count == 1) {
        Point2 mean = Point2::Zero();
        for (const auto& p : points) mean += p;
        c.knots_ = {0.0, 1.0};
        c.control_ = {pinned.empty() ? Point2(mean / n) : points[pinned.front()]};
        return c;
    }
    const int p = c.degree_;
    const int m = control_count;
    // uniform clamped knot vector
    c.knots_.assign(static_cast<std::size_t>(m + p + 1), 0.0);
    for (int i = m; i < m + p + 1; ++i) c.knots_[i] = 1.0;
    for (int j = 1; j < m - p; ++j) c.knots_[j + p] = static_cast<double>(j) / (m - p);

    Eigen::MatrixXd a(n, m);
    Eigen::MatrixXd b(n, 2);
    for (int k = 0; k < n; ++k) {
        a.row(k) = c.basis_row(u[k]);
        b.row(k) = points[k].transpose();
    }
    // Equality-constrained least squares through its KKT system.
    const int q = static_cast<int>(pinned.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + q, m + q);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m + q, 2);
    kkt.topLeftCorner(m, m) = 2.0 * a.transpose() * a;
    rhs.topRows(m) = 2.0 * a.transpose() * b;
    for (int r = 0; r < q; ++r) {
        const auto i = static_cast<Eigen::Index>(pinned[static_cast<std::size_t>(r)]);
        kkt.block(m + r, 0, 1, m) = a.row(i);
        kkt.block(0, m + r, m, 1) = a.row(i).transpose();
        rhs.row(m + r) = b.row(i);
    }
    const Eigen::MatrixXd sol = kkt.fullPivLu().solve(rhs);
    for (int k = 0; k < m; ++k) c.control_[k] = sol.row(k).transpose();
    return c;
}

int BSplineCurve::span_index(double u) const {
    const int n = static_cast<int>(control_.size()) - 1;
    if (u >= knots_[n + 1]) return n;
    if (u <= knots_[degree_]) return degree_;
    int low = degree_;
    int high = n + 1;
    int mid = (low + high) / 2;
    while (u < knots_[mid] || u >= knots_[mid + 1]) {
        if (u < knots_[mid]) high = mid;
        else low = mid;
        mid = (low + high) / 2;
    }
    return mid;
}

std::vector<double> BSplineCurve::basis(int span, double u) const {
    const int p = degree_;
    std::vector<double> N(p + 1, 0.0), left(p + 1, 0.0), right(p + 1, 0.0);
    N[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = u - knots_[span + 1 - j];
        right[j] = knots_[span + j] - u;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double temp = N[r] / (right[r + 1] + left[j - r]);
            N[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        N[j] = saved;
    }
    return N;
}

Point2 BSplineCurve::evaluate(double param) const {
    if (control_.size() == 1) return control_.front();
    double u = (param - t0_) / (t1_ - t0_);
    u = std::clamp(u, 0.0, 1.0);
    const int span = span_index(u);
    const auto N = basis(span, u);
    Point2 out = Point2::Zero();
    for (int j = 0; j <= degree_; ++j) out += N[j] * control_[span - degree_ + j];
    return out;
}

}  // namespace fluent_track
