#pragma once

// Level sets E_lambda(t) = {u(t,.) > lambda}, empirical spreading speeds,
// Hausdorff distances to predicted shapes and profile comparisons.

#include <array>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "spreadkit/fronts.hpp"
#include "spreadkit/geometry.hpp"
#include "spreadkit/simulate.hpp"
#include "spreadkit/speeds.hpp"

namespace spreadkit::analysis {

using geometry::Point2;
using simulate::Snapshot;

struct LevelSet {
    double t = 0.0;
    double level = 0.5;
    std::size_t dim = 1;
    std::vector<double> points1d;                  // 1-D crossings
    std::vector<Point2> points;                    // 2-D segment endpoints, deduplicated per edge
    std::vector<std::array<Point2, 2>> segments;   // 2-D marching-squares segments
    bool empty = true;
};

// Crossing points are placed by linear interpolation along grid edges.
// Saddle cells are resolved by comparing the cell average with the level.
LevelSet extract_level_set(const Snapshot& s, double level);

struct SpeedFit {
    double speed = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // root mean square of the fit residuals
    double t_lo = 0.0;
    double t_hi = 0.0;
    std::vector<double> times;
    std::vector<double> positions;

    nlohmann::json to_json() const;
};

// Farthest lambda-crossing along {s e : s > 0}; nullopt when there is none.
std::optional<double> ray_crossing(const Snapshot& s, std::span<const double> e, double level);

// Least-squares slope of the farthest crossing against t over [t_lo, t_hi].
// The default window is the second half of the covered time span.
// Throws InsufficientCrossings with fewer than 4 usable snapshots.
SpeedFit measure_speed(const std::vector<Snapshot>& snaps, std::span<const double> e, double level,
                       std::optional<std::array<double, 2>> window = std::nullopt);

// Max of the two directed distances. Throws EmptyInput.
double directed_hausdorff(std::span<const Point2> from, std::span<const Point2> to);
double hausdorff(std::span<const Point2> P, std::span<const Point2> Q);
double hausdorff(std::span<const double> P, std::span<const double> Q);

// Rescaled comparison region; points outside are dropped from both sets.
struct Window {
    double half_width = std::numeric_limits<double>::infinity();  // sup-norm box around the origin
    std::optional<Point2> apex;                                      // unscaled apex
    double apex_radius = 0.0;                                        // excluded disk around apex / t

    bool keep(Point2 p, double t) const;
};

struct ConvergencePoint {
    double t = 0.0;
    double distance = 0.0;
    std::size_t n_points = 0;
};

struct ConvergenceSeries {
    std::vector<ConvergencePoint> series;
    double final_distance = 0.0;
    bool nonincreasing_last3 = false;

    nlohmann::json to_json() const;
};

// Target boundary sampled at the given spacing, in rescaled coordinates.
using TargetBoundary = std::function<std::vector<Point2>(double spacing, double t)>;

ConvergenceSeries rescaled_convergence(const std::vector<Snapshot>& snaps, double level, const TargetBoundary& target,
                                       const Window& window = {});
// Wulff-shape target (1-D or 2-D).
ConvergenceSeries rescaled_convergence(const std::vector<Snapshot>& snaps, double level,
                                       const speeds::WulffShape& shape, const Window& window = {});

// U + W for a 2-D cone U (apex, axis angle, half-angle) and a Wulff shape W,
// clipped to the box |x|_inf <= box. The intersection runs over n_dir
// directions of the polar cone.
std::vector<Point2> cone_minkowski_sum(const speeds::WulffShape& shape, Point2 apex, double axis_angle,
                                       double half_angle, double box, std::size_t n_dir = 720);

struct ProfileErrorPoint {
    double t = 0.0;
    double position = 0.0;  // m_e(t)
    double error = 0.0;
};

// 1-D: sup over grid nodes with |x.e - m| <= L of |u - phi(x.e - m)|, phi shifted so phi(0) = level.
// Throws CrossingNotFound.
std::vector<ProfileErrorPoint> profile_error(const std::vector<Snapshot>& snaps, double e,
                                             const fronts::FrontProfile& front, double level = 0.5,
                                             double L = 10.0);

}  // namespace spreadkit::analysis
