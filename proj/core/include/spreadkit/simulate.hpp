#pragma once

// Explicit time stepping of
//   u_t = div(A(x) grad u) + q(x).grad u + f(x,u)
// on [-R, R]^N (N = 1, 2) with u = 0 on the truncation boundary.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "spreadkit/fieldlang.hpp"
#include "spreadkit/media.hpp"

namespace spreadkit::simulate {

struct BallDatum {
    std::vector<double> center;
    double radius = 1.0;
    double height = 1.0;
};

// Indicator of {x : angle(x - apex, axis) <= half_angle}.
struct ConeDatum {
    std::vector<double> apex;
    std::vector<double> axis;
    double half_angle = 0.0;
    double height = 1.0;

    bool contains(std::span<const double> x) const;
    double distance(std::span<const double> x) const;
};

struct ExprDatum {
    std::string expression;  // in x1..xN, values must lie in [0,1]
};

using InitialDatum = std::variant<BallDatum, ConeDatum, ExprDatum>;

struct SimConfig {
    double R_dom = 50.0;
    double dx = 0.1;
    double dt = 0.0;  // 0 selects the largest stable step
    double T_final = 10.0;
    std::vector<double> snapshot_times;  // T_final is always included
    InitialDatum initial = BallDatum{{0.0}, 5.0, 1.0};

    double cfl_safety = 0.9;
    std::size_t frame_cells = 5;
    double frame_tol = 1e-4;
    // cone data: frame cells within speed*t + margin of the cone are not monitored
    double cone_monitor_speed = 3.0;
    double cone_monitor_margin = 10.0;
    double invasion_radius = 2.0;
    double invasion_level = 1.0 - 1e-2;
    bool throw_on_truncation = true;
};

// Uniform grid of n points per axis on [-R, R]; x1 varies fastest.
struct Grid {
    std::size_t dim = 1;
    std::size_t n = 0;
    double dx = 0.0;

    double origin() const { return -0.5 * static_cast<double>(n - 1) * dx; }
    double coord(std::size_t i) const { return origin() + static_cast<double>(i) * dx; }
    std::size_t size() const { return dim == 1 ? n : n * n; }
    std::size_t index(std::size_t i, std::size_t j = 0) const { return j * n + i; }
};

struct SimState {
    double t = 0.0;
    std::vector<double> u;
};

struct Snapshot {
    Grid grid;
    double t = 0.0;
    std::vector<double> u;

    double at(std::size_t i, std::size_t j = 0) const { return u[grid.index(i, j)]; }
    // Linear (1-D) or bilinear (2-D) interpolation; 0 outside the grid.
    double interpolate(std::span<const double> x) const;
};

struct SimResult {
    std::vector<Snapshot> snapshots;
    double dt = 0.0;
    std::size_t steps = 0;
    bool truncation_ok = true;
    double frame_max = 0.0;
    double invasion_min = 0.0;
    bool invaded = false;
    double final_max = 0.0;
};

class Simulator {
public:
    Simulator(const media::MediumSpec& medium, SimConfig cfg);

    const Grid& grid() const { return grid_; }
    const SimConfig& config() const { return cfg_; }
    double stable_dt() const { return dt_limit_; }

    // Throws SupportTooLarge when the datum reaches the monitored frame.
    SimState init() const;
    // One explicit Euler step; throws StabilityError on NaN or overshoot beyond 1e-12.
    void step(SimState& s, double dt) const;
    // Largest u on the monitored boundary frame.
    double frame_max(const SimState& s) const;
    SimResult run() const;

private:
    double reaction(std::size_t node, double u) const;

    const media::MediumSpec& medium_;
    SimConfig cfg_;
    Grid grid_;
    double dt_limit_ = 0.0;
    std::vector<double> face_x_;  // A11 at (i+1/2, j)
    std::vector<double> face_y_;  // A22 at (i, j+1/2)
    std::vector<double> a12_;     // nodal, empty when A is diagonal
    std::vector<double> qx_, qy_; // nodal, empty when q = 0
    bool f_has_x_ = true;
    mutable std::vector<double> next_;
};

SimResult run(const media::MediumSpec& medium, const SimConfig& cfg);

// Flat binary: int32 N, int32 dims[N], float64 dx, float64 t, then
// prod(dims) float64 values, x1 fastest; host (little-endian) byte order.
void write_snapshot(const std::filesystem::path& path, const Snapshot& s);
Snapshot read_snapshot(const std::filesystem::path& path);
void write_snapshot_csv(const std::filesystem::path& path, const Snapshot& s, const std::string& config_hash = {});

}  // namespace spreadkit::simulate
