#pragma once

// Critical speeds c*(e) = min_{lambda>0} k(lambda e)/lambda, the
// direction-dependent spreading speed w(e) = min_{xi.e>0} c*(xi)/(xi.e),
// and the Wulff shape W = {x : x.e <= c*(e) for all e}.

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "spreadkit/eigen.hpp"
#include "spreadkit/geometry.hpp"
#include "spreadkit/media.hpp"

namespace spreadkit::speeds {

using geometry::Point2;

struct CstarOptions {
    std::size_t M = 32;
    double lambda_lo = 1e-2;
    double lambda_hi = 1e2;
    std::size_t n_scan = 41;
    double rel_tol = 1e-6;
};

struct CstarResult {
    double cstar = 0.0;
    double lambda_min = 0.0;
    std::size_t evaluations = 0;
    std::vector<std::string> warnings;
};

// k evaluated at z = lambda * e.
using KAlongRay = std::function<double(double lambda)>;

// Log-spaced bracket scan followed by golden-section refinement of every
// interior bracket. lambda values above `lambda_limit` are skipped.
// Throws BracketFailure when the scan minimum sits on the boundary.
CstarResult minimize_speed(const KAlongRay& k, const CstarOptions& opts,
                           double lambda_limit = std::numeric_limits<double>::infinity());

// Requires a KPP-classified medium.
CstarResult cstar(eigen::KSolver& solver, std::span<const double> e, const CstarOptions& opts = {});
CstarResult cstar(const media::MediumSpec& medium, std::span<const double> e, const CstarOptions& opts = {});

struct SpeedTable {
    std::size_t dim = 0;
    std::vector<double> angles;  // 1-D: {0, pi} for e = +1, -1
    std::vector<double> cstar;
    std::vector<double> lambda_min;
    std::size_t M = 0;
    double lipschitz = 0.0;  // max |dc*/dangle| along the grid (2-D)
    std::string medium_hash;

    std::size_t size() const { return angles.size(); }
    double min_speed() const;
    double max_speed() const;
    // Periodic linear interpolation in angle (2-D); +-1 lookup in 1-D.
    double interpolate(double angle) const;
};

SpeedTable speed_table(eigen::KSolver& solver, std::size_t n_dir, const CstarOptions& opts = {},
                       std::size_t jobs = 1);
SpeedTable speed_table(const media::MediumSpec& medium, std::size_t n_dir, const CstarOptions& opts = {},
                       std::size_t jobs = 1);

// c* as a function of direction angle.
using CstarOracle = std::function<double(double angle)>;

struct FgResult {
    double w = 0.0;
    double xi_angle = 0.0;
    std::vector<double> minimizer_angles;  // grid minimizers within 1e-4 relative
    bool corner = false;                   // minimizers not contiguous on the grid
};

// Grid minimum over directions with xi.e >= delta, refined by golden
// section in angle on the neighbouring grid cells.
FgResult fg_speed(const SpeedTable& table, double e_angle, double delta = 0.05);
FgResult fg_speed(const CstarOracle& cstar, std::size_t n_dir, double e_angle, double delta = 0.05);

struct WulffShape {
    std::size_t dim = 0;
    double lo = 0.0;  // 1-D interval [lo, hi]
    double hi = 0.0;
    std::vector<Point2> vertices;  // 2-D, counterclockwise
    std::size_t n_dir = 0;
    std::size_t M = 0;
    std::string medium_hash;

    double support(double angle) const;
    bool contains(Point2 p) const;
    std::vector<Point2> boundary(double spacing) const;
};

WulffShape wulff(const SpeedTable& table);

struct RegularFgReport {
    double max_rel_mismatch = 0.0;
    std::size_t edges = 0;
    std::vector<double> normal_angles;
    std::vector<double> mismatches;
};

// |z.nu - c*(nu)| / c*(nu) at edge midpoints (2-D) or endpoints (1-D).
RegularFgReport regular_fg_check(const WulffShape& shape, const CstarOracle& cstar);
CstarOracle table_oracle(const SpeedTable& table);

}  // namespace spreadkit::speeds
