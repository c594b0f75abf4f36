#include "fluent_track/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace fluent_track {

namespace {

const char* dash_style(VisibilityState s) {
    switch (s) {
        case VisibilityState::Visible: return "";
        case VisibilityState::Occluded: return " stroke-dasharray=\"1 4\" class=\"occluded\"";
        case VisibilityState::Contained: return " stroke-dasharray=\"8 5\" class=\"contained\"";
    }
    return "";
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string object_color(int object_id) {
    // Golden-angle hue steps keep neighboring ids apart.
    const double hue = std::fmod(std::abs(static_cast<double>(object_id)) * 137.50776405, 360.0);
    const double s = 0.65;
    const double l = 0.45;
    const double c = (1.0 - std::abs(2.0 * l - 1.0)) * s;
    const double hp = hue / 60.0;
    const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    if (hp < 1) { r = c; g = x; }
    else if (hp < 2) { r = x; g = c; }
    else if (hp < 3) { g = c; b = x; }
    else if (hp < 4) { g = x; b = c; }
    else if (hp < 5) { r = x; b = c; }
    else { r = c; b = x; }
    const double m = l - c / 2.0;
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround((r + m) * 255)),
                  static_cast<int>(std::lround((g + m) * 255)), static_cast<int>(std::lround((b + m) * 255)));
    return buf;
}

void render_svg(std::ostream& out, std::span<const Trajectory> trajectories, const RenderOptions& options) {
    double min_x = std::numeric_limits<double>::infinity();
    double min_y = min_x;
    double max_x = -min_x;
    double max_y = -min_x;
    for (const auto& t : trajectories) {
        for (const auto& p : t.points) {
            min_x = std::min(min_x, p.location.x());
            min_y = std::min(min_y, p.location.y());
            max_x = std::max(max_x, p.location.x());
            max_y = std::max(max_y, p.location.y());
        }
    }
    if (!std::isfinite(min_x)) {
        min_x = min_y = 0.0;
        max_x = 40.0;
        max_y = 30.0;
    }
    min_x -= options.margin_meters;
    min_y -= options.margin_meters;
    max_x += options.margin_meters;
    max_y += options.margin_meters;
    const double k = options.pixels_per_meter;
    const double width = (max_x - min_x) * k;
    const double height = (max_y - min_y) * k;
    // Ground y grows away from the camera, drawn upwards.
    const auto px = [&](const Point2& p) { return fmt((p.x() - min_x) * k) + "," + fmt((max_y - p.y()) * k); };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\"" << fmt(height)
        << "\" viewBox=\"0 0 " << fmt(width) << ' ' << fmt(height) << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!options.title.empty()) out << "<title>" << escape(options.title) << "</title>\n";
    for (const auto& t : trajectories) {
        const auto color = object_color(t.object_id);
        out << "<g id=\"object-" << t.object_id << "\" stroke=\"" << color << "\" fill=\"none\" stroke-width=\"2\">\n";
        std::size_t i = 0;
        while (i < t.points.size()) {
            std::size_t j = i;
            while (j + 1 < t.points.size() && t.points[j + 1].state == t.points[i].state) ++j;
            out << "<polyline" << dash_style(t.points[i].state) << " points=\"";
            // Runs start at the previous run's last point so the drawing stays connected.
            const std::size_t from = i > 0 ? i - 1 : i;
            for (std::size_t k2 = from; k2 <= j; ++k2) out << (k2 == from ? "" : " ") << px(t.points[k2].location);
            out << "\"/>\n";
            i = j + 1;
        }
        if (!t.points.empty()) {
            out << "<text x=\"" << fmt((t.points.front().location.x() - min_x) * k) << "\" y=\""
                << fmt((max_y - t.points.front().location.y()) * k) << "\" fill=\"" << color
                << "\" stroke=\"none\" font-size=\"10\">" << t.object_id << "</text>\n";
        }
        out << "</g>\n";
    }
    out << "</svg>\n";
}

}  // namespace fluent_track
