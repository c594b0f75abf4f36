#pragma once

#include "fluent_track/types.hpp"

#include <iosfwd>
#include <span>
#include <string>

namespace fluent_track {

struct RenderOptions {
    double pixels_per_meter = 20.0;
    double margin_meters = 2.0;
    std::string title;
};

/**
 * Top-view SVG of trajectories on the ground plane.
 *
 * Each maximal run of one visibility state becomes one polyline in the
 * object's color: solid when Visible, dotted when Occluded, dashed when
 * Contained.
 */
void render_svg(std::ostream& out, std::span<const Trajectory> trajectories, const RenderOptions& options = {});

/// Stable color for an object id, as "#rrggbb".
std::string object_color(int object_id);

}  // namespace fluent_track
