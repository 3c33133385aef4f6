#include "synthgen/shapes.hpp"

#include <cmath>

namespace linecolor::synthgen {

namespace {

double ellipse_distance(double x, double y, double rx, double ry) {
    double g = std::sqrt((x / rx) * (x / rx) + (y / ry) * (y / ry));
    if (g < 1e-9) return -std::min(rx, ry);
    // d = (g - 1) / |grad g|, with grad g = (x/rx^2, y/ry^2) / g
    double gx = x / (rx * rx), gy = y / (ry * ry);
    return (g - 1.0) * g / std::sqrt(gx * gx + gy * gy);
}

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
    double abx = bx - ax, aby = by - ay;
    double apx = px - ax, apy = py - ay;
    double t = (apx * abx + apy * aby) / (abx * abx + aby * aby);
    t = std::clamp(t, 0.0, 1.0);
    double dx = apx - t * abx, dy = apy - t * aby;
    return std::sqrt(dx * dx + dy * dy);
}

// Regular k-gon, circumradius r, one vertex at angle 0.
double polygon_distance(double x, double y, double r, int k) {
    double best = 1e300;
    bool inside = true;
    double prev_x = r, prev_y = 0;
    for (int i = 1; i <= k; ++i) {
        double a = 2.0 * M_PI * i / k;
        double vx = r * std::cos(a), vy = r * std::sin(a);
        best = std::min(best, segment_distance(x, y, prev_x, prev_y, vx, vy));
        // cross product sign test against each edge (vertices are CCW)
        double cross = (vx - prev_x) * (y - prev_y) - (vy - prev_y) * (x - prev_x);
        if (cross < 0) inside = false;
        prev_x = vx;
        prev_y = vy;
    }
    return inside ? -best : best;
}

double blob_radius(const SpriteSpec& s, double theta) {
    double r = 1.0;
    for (int i = 0; i < 3; ++i) r += s.blob_amp[i] * std::sin((i + 2) * theta + s.blob_phase[i]);
    return s.radius_x * r;
}

double blob_radius_deriv(const SpriteSpec& s, double theta) {
    double d = 0.0;
    for (int i = 0; i < 3; ++i) d += s.blob_amp[i] * (i + 2) * std::cos((i + 2) * theta + s.blob_phase[i]);
    return s.radius_x * d;
}

double blob_distance(const SpriteSpec& s, double x, double y) {
    double rho = std::sqrt(x * x + y * y);
    double theta = std::atan2(y, x);
    double rb = blob_radius(s, theta);
    double slope = blob_radius_deriv(s, theta) / std::max(rb, 1e-9);
    return (rho - rb) / std::sqrt(1.0 + slope * slope);
}

}  // namespace

double sprite_signed_distance(const SpriteSpec& spec, double tau, double px, double py) {
    auto c = spec.motion.center(tau);
    double s = spec.motion.scale(tau);
    double a = spec.motion.angle(tau);
    // world -> local: undo translation, rotation, scale
    double dx = px - c[0], dy = py - c[1];
    double ca = std::cos(-a), sa = std::sin(-a);
    double lx = (ca * dx - sa * dy) / s;
    double ly = (sa * dx + ca * dy) / s;

    double d_local;
    switch (spec.kind) {
        case ShapeKind::ellipse: d_local = ellipse_distance(lx, ly, spec.radius_x, spec.radius_y); break;
        case ShapeKind::polygon: d_local = polygon_distance(lx, ly, spec.radius_x, spec.polygon_sides); break;
        case ShapeKind::blob: d_local = blob_distance(spec, lx, ly); break;
        default: d_local = 1e300; break;
    }
    return d_local * s;
}

double shape_inradius(const SpriteSpec& spec) {
    switch (spec.kind) {
        case ShapeKind::ellipse: return std::min(spec.radius_x, spec.radius_y);
        case ShapeKind::polygon: return spec.radius_x * std::cos(M_PI / spec.polygon_sides);
        case ShapeKind::blob: {
            double amp = std::abs(spec.blob_amp[0]) + std::abs(spec.blob_amp[1]) + std::abs(spec.blob_amp[2]);
            return spec.radius_x * (1.0 - amp);
        }
    }
    return 0.0;
}

double shape_outradius(const SpriteSpec& spec) {
    switch (spec.kind) {
        case ShapeKind::ellipse: return std::max(spec.radius_x, spec.radius_y);
        case ShapeKind::polygon: return spec.radius_x;
        case ShapeKind::blob: {
            double amp = std::abs(spec.blob_amp[0]) + std::abs(spec.blob_amp[1]) + std::abs(spec.blob_amp[2]);
            return spec.radius_x * (1.0 + amp);
        }
    }
    return 0.0;
}

}  // namespace linecolor::synthgen
