#include "spreadkit/geometry.hpp"

#include <algorithm>

namespace spreadkit::geometry {

double segment_distance(Point2 p, Point2 a, Point2 b) {
    const Point2 ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 == 0.0) return norm(p - a);
    const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    return norm(p - (a + ab * t));
}

std::vector<Point2> clip_halfplane(const std::vector<Point2>& poly, Point2 normal, double offset) {
    std::vector<Point2> out;
    const std::size_t n = poly.size();
    out.reserve(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 a = poly[i];
        const Point2 b = poly[(i + 1) % n];
        const double da = dot(normal, a) - offset;
        const double db = dot(normal, b) - offset;
        if (da <= 0.0) out.push_back(a);
        if ((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0)) {
            const double t = da / (da - db);
            out.push_back(a + (b - a) * t);
        }
    }
    return out;
}

std::vector<Point2> simplify_polygon(const std::vector<Point2>& poly, double eps) {
    std::vector<Point2> pts;
    for (const auto& p : poly)
        if (pts.empty() || norm(p - pts.back()) > eps) pts.push_back(p);
    while (pts.size() > 1 && norm(pts.front() - pts.back()) <= eps) pts.pop_back();

    bool changed = true;
    while (changed && pts.size() > 3) {
        changed = false;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const Point2 a = pts[(i + pts.size() - 1) % pts.size()];
            const Point2 b = pts[i];
            const Point2 c = pts[(i + 1) % pts.size()];
            const double scale = norm(c - a);
            if (scale > 0.0 && std::abs(cross(b - a, c - a)) / scale <= eps * 1e-3) {
                pts.erase(pts.begin() + static_cast<long>(i));
                changed = true;
                break;
            }
        }
    }
    return pts;
}

bool is_convex_ccw(const std::vector<Point2>& poly, double tol) {
    const std::size_t n = poly.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 a = poly[i], b = poly[(i + 1) % n], c = poly[(i + 2) % n];
        if (cross(b - a, c - b) < -tol) return false;
    }
    return true;
}

bool strictly_contains(const std::vector<Point2>& poly, Point2 p) {
    const std::size_t n = poly.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i)
        if (cross(poly[(i + 1) % n] - poly[i], p - poly[i]) <= 0.0) return false;
    return true;
}

double polygon_area(const std::vector<Point2>& poly) {
    double a = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) a += cross(poly[i], poly[(i + 1) % poly.size()]);
    return 0.5 * a;
}

std::vector<Point2> densify_open(const std::vector<Point2>& line, double spacing) {
    std::vector<Point2> out;
    if (line.empty()) return out;
    for (std::size_t i = 0; i + 1 < line.size(); ++i) {
        const Point2 a = line[i], b = line[i + 1];
        const auto k = static_cast<std::size_t>(std::max(1.0, std::ceil(norm(b - a) / spacing)));
        for (std::size_t j = 0; j < k; ++j) out.push_back(a + (b - a) * (static_cast<double>(j) / k));
    }
    out.push_back(line.back());
    return out;
}

std::vector<Point2> densify_closed(const std::vector<Point2>& poly, double spacing) {
    if (poly.empty()) return {};
    std::vector<Point2> ring = poly;
    ring.push_back(poly.front());
    auto out = densify_open(ring, spacing);
    out.pop_back();
    return out;
}

}  // namespace spreadkit::geometry
