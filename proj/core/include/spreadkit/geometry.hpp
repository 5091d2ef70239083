#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace spreadkit::geometry {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    Point2 operator+(Point2 o) const { return {x + o.x, y + o.y}; }
    Point2 operator-(Point2 o) const { return {x - o.x, y - o.y}; }
    Point2 operator*(double s) const { return {x * s, y * s}; }
    friend bool operator==(const Point2&, const Point2&) = default;
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline Point2 unit_from_angle(double a) { return {std::cos(a), std::sin(a)}; }

double segment_distance(Point2 p, Point2 a, Point2 b);

// Keeps the part of a convex CCW polygon with dot(normal, x) <= offset.
std::vector<Point2> clip_halfplane(const std::vector<Point2>& poly, Point2 normal, double offset);

// Drops consecutive vertices closer than eps and collinear middle vertices.
std::vector<Point2> simplify_polygon(const std::vector<Point2>& poly, double eps);

bool is_convex_ccw(const std::vector<Point2>& poly, double tol = 1e-12);
bool strictly_contains(const std::vector<Point2>& poly, Point2 p);
double polygon_area(const std::vector<Point2>& poly);

// Points along the closed boundary with spacing at most `spacing`, vertices included.
std::vector<Point2> densify_closed(const std::vector<Point2>& poly, double spacing);
// Same for an open polyline.
std::vector<Point2> densify_open(const std::vector<Point2>& line, double spacing);

}  // namespace spreadkit::geometry
