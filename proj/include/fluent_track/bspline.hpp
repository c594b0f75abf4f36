#pragma once

#include "fluent_track/types.hpp"

#include <span>
#include <vector>

namespace fluent_track {

/// Clamped B-spline curve in the ground plane.
class BSplineCurve {
public:
    /**
     * Global interpolation through `points` at increasing parameters `params`
     * (any scale, e.g. frame indices). Degree is min(3, n - 1) with averaged
     * clamped knots, so the curve passes through every data point.
     */
    static BSplineCurve interpolate(std::span<const double> params, std::span<const Point2> points);

    /**
     * Least-squares fit with `control_count` control points on uniform clamped
     * knots, degree min(3, control_count - 1). The curve passes exactly through
     * the data points listed in `pinned`; the rest are fitted in the
     * least-squares sense. Needs control_count <= points and pinned <= control_count.
     */
    static BSplineCurve fit(std::span<const double> params, std::span<const Point2> points, int control_count,
                            std::span<const std::size_t> pinned);

    /// Evaluates at a parameter on the same scale as the interpolation input.
    /// Values outside the data range are clamped to the ends.
    Point2 evaluate(double param) const;

    int degree() const { return degree_; }
    const std::vector<Point2>& control_points() const { return control_; }

private:
    int span_index(double u) const;
    std::vector<double> basis(int span, double u) const;
    Eigen::RowVectorXd basis_row(double u) const;
    static BSplineCurve prepare(std::span<const double> params, std::span<const Point2> points, int degree,
                                int control_count, std::vector<double>& normalized);

    int degree_ = 0;
    double t0_ = 0.0;
    double t1_ = 1.0;
    std::vector<double> knots_;
    std::vector<Point2> control_;
};

}  // namespace fluent_track
