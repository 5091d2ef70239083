#include "spreadkit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include <fmt/format.h>

#include "spreadkit/errors.hpp"

namespace spreadkit::analysis {

namespace {

// Position where the linear interpolant between (0, a) and (1, b) equals level.
double edge_fraction(double a, double b, double level) { return (level - a) / (b - a); }

std::optional<double> crossing_1d(const Snapshot& s, double sign, double level) {
    const auto& g = s.grid;
    std::optional<double> best;
    for (std::size_t i = 0; i + 1 < g.n; ++i) {
        const double a = s.u[i];
        const double b = s.u[i + 1];
        if ((a > level) == (b > level)) continue;
        const double x = g.coord(i) + edge_fraction(a, b, level) * g.dx;
        const double r = sign * x;
        if (r > 0.0 && (!best || r > *best)) best = r;
    }
    return best;
}

// Bucket grid over a point set for exact nearest-distance queries.
class NearestIndex {
public:
    explicit NearestIndex(std::span<const Point2> pts) : pts_(pts) {
        lo_ = hi_ = pts[0];
        for (const auto& p : pts) {
            lo_.x = std::min(lo_.x, p.x);
            lo_.y = std::min(lo_.y, p.y);
            hi_.x = std::max(hi_.x, p.x);
            hi_.y = std::max(hi_.y, p.y);
        }
        const double w = std::max(hi_.x - lo_.x, hi_.y - lo_.y);
        const double side = std::max(1.0, std::sqrt(static_cast<double>(pts.size())));
        h_ = w > 0.0 ? w / side : 1.0;
        nx_ = static_cast<long>((hi_.x - lo_.x) / h_) + 1;
        ny_ = static_cast<long>((hi_.y - lo_.y) / h_) + 1;
        cells_.assign(static_cast<std::size_t>(nx_ * ny_), {});
        for (std::size_t k = 0; k < pts.size(); ++k) cells_[cell_of(pts[k])].push_back(k);
    }

    double distance(Point2 p) const {
        const long cx = static_cast<long>(std::floor((p.x - lo_.x) / h_));
        const long cy = static_cast<long>(std::floor((p.y - lo_.y) / h_));
        const long rmax = std::max({std::abs(cx), std::abs(cx - nx_ + 1), std::abs(cy), std::abs(cy - ny_ + 1)});
        double best = std::numeric_limits<double>::infinity();
        for (long r = 0; r <= rmax; ++r) {
            for (long j = cy - r; j <= cy + r; ++j) {
                if (j < 0 || j >= ny_) continue;
                const bool edge_row = (j == cy - r || j == cy + r);
                for (long i = cx - r; i <= cx + r; i += edge_row ? 1 : 2 * r) {
                    if (i >= 0 && i < nx_)
                        for (std::size_t k : cells_[static_cast<std::size_t>(j * nx_ + i)])
                            best = std::min(best, geometry::norm(pts_[k] - p));
                    if (r == 0) break;
                }
            }
            // cells at ring r+1 and beyond are at least r*h away
            if (best <= static_cast<double>(r) * h_) break;
        }
        return best;
    }

private:
    std::size_t cell_of(Point2 p) const {
        const long i = std::min(nx_ - 1, static_cast<long>((p.x - lo_.x) / h_));
        const long j = std::min(ny_ - 1, static_cast<long>((p.y - lo_.y) / h_));
        return static_cast<std::size_t>(j * nx_ + i);
    }

    std::span<const Point2> pts_;
    Point2 lo_, hi_;
    double h_ = 1.0;
    long nx_ = 1, ny_ = 1;
    std::vector<std::vector<std::size_t>> cells_;
};

constexpr std::size_t kBruteForceLimit = 10'000;

}  // namespace

LevelSet extract_level_set(const Snapshot& s, double level) {
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must lie in (0, 1)");
    LevelSet ls;
    ls.t = s.t;
    ls.level = level;
    ls.dim = s.grid.dim;
    const auto& g = s.grid;
    const std::size_t n = g.n;

    if (g.dim == 1) {
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double a = s.u[i];
            const double b = s.u[i + 1];
            if ((a > level) != (b > level)) ls.points1d.push_back(g.coord(i) + edge_fraction(a, b, level) * g.dx);
        }
        ls.empty = ls.points1d.empty();
        return ls;
    }

    auto h_point = [&](std::size_t i, std::size_t j) {  // edge (i,j)-(i+1,j)
        return Point2{g.coord(i) + edge_fraction(s.at(i, j), s.at(i + 1, j), level) * g.dx, g.coord(j)};
    };
    auto v_point = [&](std::size_t i, std::size_t j) {  // edge (i,j)-(i,j+1)
        return Point2{g.coord(i), g.coord(j) + edge_fraction(s.at(i, j), s.at(i, j + 1), level) * g.dx};
    };

    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) {
            const bool in = s.at(i, j) > level;
            if (i + 1 < n && in != (s.at(i + 1, j) > level)) ls.points.push_back(h_point(i, j));
            if (j + 1 < n && in != (s.at(i, j + 1) > level)) ls.points.push_back(v_point(i, j));
        }

    for (std::size_t j = 0; j + 1 < n; ++j)
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double c[4] = {s.at(i, j), s.at(i + 1, j), s.at(i + 1, j + 1), s.at(i, j + 1)};
            int mask = 0;
            for (int k = 0; k < 4; ++k)
                if (c[k] > level) mask |= 1 << k;
            if (mask == 0 || mask == 15) continue;
            // edges: 0 bottom, 1 right, 2 top, 3 left
            auto edge = [&](int e) {
                switch (e) {
                    case 0: return h_point(i, j);
                    case 1: return v_point(i + 1, j);
                    case 2: return h_point(i, j + 1);
                    default: return v_point(i, j);
                }
            };
            auto add = [&](int a, int b) { ls.segments.push_back({edge(a), edge(b)}); };
            if (mask == 5 || mask == 10) {
                const bool center_in = 0.25 * (c[0] + c[1] + c[2] + c[3]) > level;
                // corners 0,2 inside (mask 5) or 1,3 inside (mask 10)
                if ((mask == 5) == center_in) {
                    add(0, 1);
                    add(2, 3);
                } else {
                    add(3, 0);
                    add(1, 2);
                }
                continue;
            }
            int ends[2];
            int m = 0;
            const int corner_a[4] = {0, 1, 3, 0};
            const int corner_b[4] = {1, 2, 2, 3};
            for (int e = 0; e < 4; ++e)
                if (((mask >> corner_a[e]) & 1) != ((mask >> corner_b[e]) & 1)) ends[m++] = e;
            add(ends[0], ends[1]);
        }
    ls.empty = ls.points.empty();
    return ls;
}

std::optional<double> ray_crossing(const Snapshot& s, std::span<const double> e, double level) {
    const auto& g = s.grid;
    if (e.size() != g.dim) throw std::invalid_argument("direction has the wrong dimension");
    if (g.dim == 1) return crossing_1d(s, e[0] >= 0.0 ? 1.0 : -1.0, level);

    const double en = std::hypot(e[0], e[1]);
    const double ex = e[0] / en;
    const double ey = e[1] / en;
    const double R = -g.origin();
    // largest s with s*e inside the box
    double smax = std::numeric_limits<double>::infinity();
    if (ex != 0.0) smax = std::min(smax, R / std::abs(ex));
    if (ey != 0.0) smax = std::min(smax, R / std::abs(ey));
    const double ds = 0.25 * g.dx;
    const auto steps = static_cast<std::size_t>(smax / ds);
    std::optional<double> best;
    auto sample = [&](double r) {
        const std::array<double, 2> x{r * ex, r * ey};
        return s.interpolate(x);
    };
    double prev = sample(0.0);
    for (std::size_t k = 1; k <= steps; ++k) {
        const double r = static_cast<double>(k) * ds;
        const double cur = sample(r);
        if ((prev > level) != (cur > level)) best = r - ds + edge_fraction(prev, cur, level) * ds;
        prev = cur;
    }
    return best;
}

nlohmann::json SpeedFit::to_json() const {
    return {{"speed", speed}, {"intercept", intercept}, {"residual", residual}, {"window", {t_lo, t_hi}},
            {"times", times},  {"positions", positions}};
}

SpeedFit measure_speed(const std::vector<Snapshot>& snaps, std::span<const double> e, double level,
                       std::optional<std::array<double, 2>> window) {
    if (snaps.empty()) throw InsufficientCrossings("no snapshots");
    SpeedFit fit;
    if (window) {
        fit.t_lo = (*window)[0];
        fit.t_hi = (*window)[1];
    } else {
        const auto [mn, mx] = std::minmax_element(snaps.begin(), snaps.end(),
                                                  [](const Snapshot& a, const Snapshot& b) { return a.t < b.t; });
        fit.t_lo = mn->t + 0.5 * (mx->t - mn->t);
        fit.t_hi = mx->t;
    }
    for (const auto& s : snaps) {
        if (s.t < fit.t_lo - 1e-12 || s.t > fit.t_hi + 1e-12) continue;
        const auto r = ray_crossing(s, e, level);
        if (!r) continue;
        fit.times.push_back(s.t);
        fit.positions.push_back(*r);
    }
    const std::size_t m = fit.times.size();
    if (m < 4)
        throw InsufficientCrossings(fmt::format("{} snapshots with a crossing in [{}, {}], need 4", m, fit.t_lo,
                                                fit.t_hi));
    double tm = 0.0, pm = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        tm += fit.times[k];
        pm += fit.positions[k];
    }
    tm /= static_cast<double>(m);
    pm /= static_cast<double>(m);
    double stt = 0.0, stp = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        stt += (fit.times[k] - tm) * (fit.times[k] - tm);
        stp += (fit.times[k] - tm) * (fit.positions[k] - pm);
    }
    fit.speed = stp / stt;
    fit.intercept = pm - fit.speed * tm;
    double ss = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double r = fit.positions[k] - (fit.intercept + fit.speed * fit.times[k]);
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / static_cast<double>(m));
    return fit;
}

double directed_hausdorff(std::span<const Point2> from, std::span<const Point2> to) {
    if (from.empty() || to.empty()) throw EmptyInput("Hausdorff distance of an empty set");
    double worst = 0.0;
    if (from.size() <= kBruteForceLimit && to.size() <= kBruteForceLimit) {
        for (const auto& p : from) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : to) best = std::min(best, geometry::dot(p - q, p - q));
            worst = std::max(worst, best);
        }
        return std::sqrt(worst);
    }
    NearestIndex index(to);
    for (const auto& p : from) worst = std::max(worst, index.distance(p));
    return worst;
}

double hausdorff(std::span<const Point2> P, std::span<const Point2> Q) {
    return std::max(directed_hausdorff(P, Q), directed_hausdorff(Q, P));
}

double hausdorff(std::span<const double> P, std::span<const double> Q) {
    if (P.empty() || Q.empty()) throw EmptyInput("Hausdorff distance of an empty set");
    std::vector<double> a(P.begin(), P.end()), b(Q.begin(), Q.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    auto directed = [](const std::vector<double>& from, const std::vector<double>& to) {
        double worst = 0.0;
        for (double p : from) {
            auto it = std::lower_bound(to.begin(), to.end(), p);
            double best = std::numeric_limits<double>::infinity();
            if (it != to.end()) best = *it - p;
            if (it != to.begin()) best = std::min(best, p - *std::prev(it));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(directed(a, b), directed(b, a));
}

bool Window::keep(Point2 p, double t) const {
    if (std::abs(p.x) > half_width || std::abs(p.y) > half_width) return false;
    if (apex && geometry::norm(p - *apex * (1.0 / t)) < apex_radius) return false;
    return true;
}

nlohmann::json ConvergenceSeries::to_json() const {
    nlohmann::json s = nlohmann::json::array();
    for (const auto& p : series) s.push_back({{"t", p.t}, {"distance", p.distance}, {"points", p.n_points}});
    return {{"series", s}, {"final", final_distance}, {"nonincreasing_last3", nonincreasing_last3}};
}

ConvergenceSeries rescaled_convergence(const std::vector<Snapshot>& snaps, double level, const TargetBoundary& target,
                                       const Window& window) {
    ConvergenceSeries out;
    for (const auto& s : snaps) {
        if (!(s.t > 0.0)) continue;
        const auto ls = extract_level_set(s, level);
        std::vector<Point2> P;
        if (ls.dim == 1) {
            for (double x : ls.points1d) P.push_back({x / s.t, 0.0});
        } else {
            for (const auto& p : ls.points) P.push_back(p * (1.0 / s.t));
        }
        std::erase_if(P, [&](Point2 p) { return !window.keep(p, s.t); });
        auto Q = target(s.grid.dx / s.t, s.t);
        std::erase_if(Q, [&](Point2 p) { return !window.keep(p, s.t); });
        if (P.empty() || Q.empty())
            throw EmptyInput(fmt::format("empty level set or target at t = {} (level {})", s.t, level));
        out.series.push_back({s.t, hausdorff(P, Q), P.size()});
    }
    if (out.series.empty()) throw EmptyInput("no snapshot with t > 0");
    out.final_distance = out.series.back().distance;
    const std::size_t m = out.series.size();
    out.nonincreasing_last3 = m >= 3 && out.series[m - 3].distance >= out.series[m - 2].distance &&
                              out.series[m - 2].distance >= out.series[m - 1].distance;
    return out;
}

ConvergenceSeries rescaled_convergence(const std::vector<Snapshot>& snaps, double level,
                                       const speeds::WulffShape& shape, const Window& window) {
    TargetBoundary target = [&shape](double spacing, double) -> std::vector<Point2> {
        if (shape.dim == 1) return {{shape.lo, 0.0}, {shape.hi, 0.0}};
        return shape.boundary(spacing);
    };
    return rescaled_convergence(snaps, level, target, window);
}

std::vector<Point2> cone_minkowski_sum(const speeds::WulffShape& shape, Point2 apex, double axis_angle,
                                       double half_angle, double box, std::size_t n_dir) {
    if (shape.dim != 2) throw std::invalid_argument("cone target needs a 2-D Wulff shape");
    std::vector<Point2> poly{{-box, -box}, {box, -box}, {box, box}, {-box, box}};
    // polar cone of U: directions at angle >= pi/2 + half_angle from the axis
    const double a0 = axis_angle + std::numbers::pi / 2 + half_angle;
    const double a1 = axis_angle + 3 * std::numbers::pi / 2 - half_angle;
    for (std::size_t k = 0; k <= n_dir; ++k) {
        const double a = a0 + (a1 - a0) * static_cast<double>(k) / static_cast<double>(n_dir);
        const Point2 nu = geometry::unit_from_angle(a);
        poly = geometry::clip_halfplane(poly, nu, shape.support(a) + geometry::dot(apex, nu));
    }
    return poly;
}

std::vector<ProfileErrorPoint> profile_error(const std::vector<Snapshot>& snaps, double e,
                                             const fronts::FrontProfile& front, double level, double L) {
    const double zl = front.crossing(level);
    const double sign = e >= 0.0 ? 1.0 : -1.0;
    std::vector<ProfileErrorPoint> out;
    for (const auto& s : snaps) {
        if (s.grid.dim != 1) throw std::invalid_argument("profile_error needs 1-D snapshots");
        const auto r = crossing_1d(s, sign, level);
        if (!r) throw CrossingNotFound(fmt::format("no {} crossing along e = {} at t = {}", level, sign, s.t));
        double err = 0.0;
        for (std::size_t i = 0; i < s.grid.n; ++i) {
            const double z = sign * s.grid.coord(i) - *r;
            if (std::abs(z) > L) continue;
            err = std::max(err, std::abs(s.u[i] - front.phi_at(z + zl)));
        }
        out.push_back({s.t, *r, err});
    }
    return out;
}

}  // namespace spreadkit::analysis
