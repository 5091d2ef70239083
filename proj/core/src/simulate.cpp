#include "spreadkit/simulate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <cstring>
#include <fstream>
#include <limits>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "spreadkit/errors.hpp"
#include "spreadkit/io.hpp"

namespace spreadkit::simulate {

namespace {

constexpr double kOvershoot = 1e-12;

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double largest_eigenvalue(std::span<const double> a, std::size_t dim) {
    if (dim == 1) return a[0];
    Eigen::Map<const Eigen::MatrixXd> m(a.data(), static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

}  // namespace

bool ConeDatum::contains(std::span<const double> x) const { return distance(x) == 0.0; }

double ConeDatum::distance(std::span<const double> x) const {
    const std::size_t n = x.size();
    const double an = norm(axis);
    double s = 0.0;
    double w2 = 0.0;
    for (std::size_t d = 0; d < n; ++d) {
        const double w = x[d] - apex[d];
        s += w * axis[d] / an;
        w2 += w * w;
    }
    const double wn = std::sqrt(w2);
    if (wn == 0.0) return 0.0;
    const double r = std::sqrt(std::max(0.0, w2 - s * s));
    const double beta = std::atan2(r, s);
    if (beta <= half_angle) return 0.0;
    if (beta >= half_angle + std::numbers::pi / 2) return wn;
    return wn * std::sin(beta - half_angle);
}

double Snapshot::interpolate(std::span<const double> x) const {
    const double o = grid.origin();
    const double last = static_cast<double>(grid.n - 1);
    auto locate = [&](double v, std::size_t& i, double& frac) {
        const double s = (v - o) / grid.dx;
        if (s < 0.0 || s > last) return false;
        i = std::min(static_cast<std::size_t>(s), grid.n - 2);
        frac = s - static_cast<double>(i);
        return true;
    };
    std::size_t i = 0, j = 0;
    double fx = 0.0, fy = 0.0;
    if (!locate(x[0], i, fx)) return 0.0;
    if (grid.dim == 1) return (1 - fx) * u[i] + fx * u[i + 1];
    if (!locate(x[1], j, fy)) return 0.0;
    return (1 - fx) * (1 - fy) * at(i, j) + fx * (1 - fy) * at(i + 1, j) + (1 - fx) * fy * at(i, j + 1) +
           fx * fy * at(i + 1, j + 1);
}

Simulator::Simulator(const media::MediumSpec& medium, SimConfig cfg) : medium_(medium), cfg_(std::move(cfg)) {
    const std::size_t N = medium_.dim();
    if (N != 1 && N != 2) throw ConfigError(fmt::format("simulation supports N = 1, 2 (got {})", N));
    if (!(cfg_.dx > 0.0) || !(cfg_.R_dom > 0.0) || !(cfg_.T_final >= 0.0))
        throw ConfigError("simulation needs dx > 0, R_dom > 0, T_final >= 0");
    const double cells = std::round(2.0 * cfg_.R_dom / cfg_.dx);
    if (std::abs(cells * cfg_.dx - 2.0 * cfg_.R_dom) > 1e-9 * cfg_.R_dom)
        throw ConfigError(fmt::format("2*R_dom = {} is not a multiple of dx = {}", 2 * cfg_.R_dom, cfg_.dx));
    grid_ = Grid{N, static_cast<std::size_t>(cells) + 1, cfg_.dx};
    if (grid_.n < 2 * cfg_.frame_cells + 3) throw ConfigError("grid too small for the boundary frame");

    const std::size_t n = grid_.n;
    const std::size_t size = grid_.size();
    const auto& A = medium_.diffusion();
    const auto& q = medium_.drift();
    const bool has_drift = !medium_.drift_free();
    std::vector<double> a11(size), a22(N == 2 ? size : 0);
    if (has_drift) {
        qx_.resize(size);
        if (N == 2) qy_.resize(size);
    }
    bool cross = false;
    if (N == 2) {
        const auto& e = A.entry(0, 1);
        cross = e.uses_x() || e.eval(std::array<double, 2>{0.0, 0.0}) != 0.0;
        if (cross) a12_.resize(size);
    }

    double amax = 0.0;
    double qmax = 0.0;
    std::vector<double> mat(N * N), qv(N), x(N);
    for (std::size_t k = 0; k < size; ++k) {
        x[0] = grid_.coord(k % n);
        if (N == 2) x[1] = grid_.coord(k / n);
        A.eval_matrix(x, mat);
        a11[k] = mat[0];
        if (N == 2) {
            a22[k] = mat[3];
            if (cross) a12_[k] = mat[1];
        }
        amax = std::max(amax, largest_eigenvalue(mat, N));
        if (has_drift) {
            q.eval_vector(x, qv);
            qx_[k] = qv[0];
            if (N == 2) qy_[k] = qv[1];
            qmax = std::max(qmax, norm(qv));
        }
    }

    face_x_.assign(size, 0.0);
    if (N == 2) face_y_.assign(size, 0.0);
    double amin_face = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < size; ++k) {
        const std::size_t i = k % n;
        const std::size_t j = k / n;
        if (i + 1 < n) {
            face_x_[k] = 0.5 * (a11[k] + a11[k + 1]);
            amin_face = std::min(amin_face, face_x_[k]);
        }
        if (N == 2 && j + 1 < n) {
            face_y_[k] = 0.5 * (a22[k] + a22[k + n]);
            amin_face = std::min(amin_face, face_y_[k]);
        }
    }

    const double dx2 = cfg_.dx * cfg_.dx;
    dt_limit_ = cfg_.cfl_safety * dx2 / (2.0 * static_cast<double>(N) * amax);
    if (has_drift) {
        dt_limit_ = std::min(dt_limit_, cfg_.dx / qmax);
        // centered advection keeps the comparison principle only at cell Peclet <= 1
        double peclet = 0.0;
        for (std::size_t k = 0; k < size; ++k) {
            const double qa = std::max(std::abs(qx_[k]), N == 2 ? std::abs(qy_[k]) : 0.0);
            peclet = std::max(peclet, qa * cfg_.dx / (2.0 * amin_face));
        }
        if (peclet > 1.0)
            throw ConfigError(fmt::format("cell Peclet number {:.4g} > 1; reduce dx", peclet));
    }
    if (cfg_.dt > 0.0) {
        if (cfg_.dt > dt_limit_ * (1.0 + 1e-12))
            throw ConfigError(fmt::format("dt = {} exceeds the stability limit {}", cfg_.dt, dt_limit_));
        dt_limit_ = cfg_.dt;
    }
    f_has_x_ = medium_.reaction().uses_x();
    next_.resize(size);
}

double Simulator::reaction(std::size_t node, double u) const {
    std::array<double, 2> x{0.0, 0.0};
    if (f_has_x_) {
        x[0] = grid_.coord(node % grid_.n);
        if (grid_.dim == 2) x[1] = grid_.coord(node / grid_.n);
    }
    return medium_.reaction_at(std::span<const double>(x.data(), grid_.dim), u);
}

SimState Simulator::init() const {
    const std::size_t n = grid_.n;
    const std::size_t N = grid_.dim;
    SimState s;
    s.u.assign(grid_.size(), 0.0);
    std::vector<double> x(N);

    auto check_height = [](double h) {
        if (!(h > 0.0 && h <= 1.0)) throw ConfigError(fmt::format("initial height {} outside (0, 1]", h));
    };
    std::visit(
        [&](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, BallDatum>) {
                check_height(d.height);
                if (d.center.size() != N) throw ConfigError("ball center has the wrong dimension");
                const double inner = -grid_.origin() - static_cast<double>(cfg_.frame_cells) * grid_.dx;
                for (double c : d.center)
                    if (std::abs(c) + d.radius >= inner)
                        throw SupportTooLarge(fmt::format("ball of radius {} at {} reaches the boundary frame",
                                                          d.radius, c));
                for (std::size_t k = 0; k < s.u.size(); ++k) {
                    x[0] = grid_.coord(k % n);
                    if (N == 2) x[1] = grid_.coord(k / n);
                    double r2 = 0.0;
                    for (std::size_t a = 0; a < N; ++a) r2 += (x[a] - d.center[a]) * (x[a] - d.center[a]);
                    if (r2 <= d.radius * d.radius) s.u[k] = d.height;
                }
            } else if constexpr (std::is_same_v<T, ConeDatum>) {
                check_height(d.height);
                if (d.apex.size() != N || d.axis.size() != N) throw ConfigError("cone has the wrong dimension");
                if (!(norm(d.axis) > 0.0)) throw ConfigError("cone axis must be nonzero");
                if (!(d.half_angle > 0.0 && d.half_angle < std::numbers::pi / 2))
                    throw ConfigError("cone half-angle must lie in (0, pi/2)");
                for (std::size_t k = 0; k < s.u.size(); ++k) {
                    x[0] = grid_.coord(k % n);
                    if (N == 2) x[1] = grid_.coord(k / n);
                    if (d.contains(x)) s.u[k] = d.height;
                }
            } else {
                const auto e = fieldlang::parse_expr(d.expression, N, false, medium_.params());
                for (std::size_t k = 0; k < s.u.size(); ++k) {
                    x[0] = grid_.coord(k % n);
                    if (N == 2) x[1] = grid_.coord(k / n);
                    const double v = e.eval(x);
                    if (!(v >= 0.0 && v <= 1.0))
                        throw ConfigError(fmt::format("initial datum {} outside [0, 1] at x1 = {}", v, x[0]));
                    s.u[k] = v;
                }
            }
        },
        cfg_.initial);

    for (std::size_t k = 0; k < s.u.size(); ++k) {
        const std::size_t i = k % n;
        const std::size_t j = k / n;
        if (i == 0 || i == n - 1 || (N == 2 && (j == 0 || j == n - 1))) s.u[k] = 0.0;
    }
    const double fm = frame_max(s);
    if (fm > cfg_.frame_tol)
        throw SupportTooLarge(fmt::format("initial datum reaches {} on the boundary frame", fm));
    return s;
}

void Simulator::step(SimState& s, double dt) const {
    const std::size_t n = grid_.n;
    const double h = grid_.dx;
    const double ih2 = 1.0 / (h * h);
    const double i2h = 1.0 / (2.0 * h);
    const auto& u = s.u;
    auto& v = next_;
    const bool drift = !qx_.empty();

    auto finish = [&](std::size_t k, double value) {
        if (!(value >= -kOvershoot && value <= 1.0 + kOvershoot))
            throw StabilityError(fmt::format("u = {} at node {}, t = {}", value, k, s.t + dt));
        v[k] = std::clamp(value, 0.0, 1.0);
    };

    if (grid_.dim == 1) {
        v[0] = v[n - 1] = 0.0;
        for (std::size_t k = 1; k + 1 < n; ++k) {
            double r = (face_x_[k] * (u[k + 1] - u[k]) - face_x_[k - 1] * (u[k] - u[k - 1])) * ih2;
            if (drift) r += qx_[k] * (u[k + 1] - u[k - 1]) * i2h;
            r += reaction(k, u[k]);
            finish(k, u[k] + dt * r);
        }
    } else {
        const bool cross = !a12_.empty();
        const double i4h2 = 0.25 * ih2;
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = 0.0;
            v[(n - 1) * n + i] = 0.0;
        }
        for (std::size_t j = 1; j + 1 < n; ++j) {
            v[j * n] = v[j * n + n - 1] = 0.0;
            for (std::size_t i = 1; i + 1 < n; ++i) {
                const std::size_t k = j * n + i;
                double r = (face_x_[k] * (u[k + 1] - u[k]) - face_x_[k - 1] * (u[k] - u[k - 1]) +
                            face_y_[k] * (u[k + n] - u[k]) - face_y_[k - n] * (u[k] - u[k - n])) *
                           ih2;
                if (cross) {
                    r += (a12_[k + 1] * (u[k + 1 + n] - u[k + 1 - n]) - a12_[k - 1] * (u[k - 1 + n] - u[k - 1 - n]) +
                          a12_[k + n] * (u[k + n + 1] - u[k + n - 1]) - a12_[k - n] * (u[k - n + 1] - u[k - n - 1])) *
                         i4h2;
                }
                if (drift) r += (qx_[k] * (u[k + 1] - u[k - 1]) + qy_[k] * (u[k + n] - u[k - n])) * i2h;
                r += reaction(k, u[k]);
                finish(k, u[k] + dt * r);
            }
        }
    }
    s.u.swap(v);
    s.t += dt;
}

double Simulator::frame_max(const SimState& s) const {
    const std::size_t n = grid_.n;
    const std::size_t w = cfg_.frame_cells;
    const auto* cone = std::get_if<ConeDatum>(&cfg_.initial);
    const double exclusion = cfg_.cone_monitor_speed * s.t + cfg_.cone_monitor_margin;
    auto in_frame = [&](std::size_t i) { return i < w || i >= n - w; };
    double m = 0.0;
    if (grid_.dim == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!in_frame(i)) continue;
            if (cone) {
                const double x = grid_.coord(i);
                if (cone->distance(std::span<const double>(&x, 1)) <= exclusion) continue;
            }
            m = std::max(m, s.u[i]);
        }
        return m;
    }
    std::array<double, 2> x{};
    for (std::size_t j = 0; j < n; ++j) {
        const bool row_frame = in_frame(j);
        for (std::size_t i = 0; i < n; ++i) {
            if (!row_frame && !in_frame(i)) {
                i = n - w - 1;  // jump to the right frame strip
                continue;
            }
            const double val = s.u[j * n + i];
            if (val <= m) continue;
            if (cone) {
                x = {grid_.coord(i), grid_.coord(j)};
                if (cone->distance(x) <= exclusion) continue;
            }
            m = val;
        }
    }
    return m;
}

SimResult Simulator::run() const {
    std::vector<double> times;
    for (double t : cfg_.snapshot_times)
        if (t >= 0.0 && t <= cfg_.T_final) times.push_back(t);
    times.push_back(cfg_.T_final);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                times.end());

    SimResult res;
    res.dt = dt_limit_;
    SimState s = init();
    auto snap = [&]() { res.snapshots.push_back(Snapshot{grid_, s.t, s.u}); };

    double t_prev = 0.0;
    for (double t_next : times) {
        const double span = t_next - t_prev;
        if (span > 0.0) {
            const auto nsteps = static_cast<std::size_t>(std::ceil(span / dt_limit_ - 1e-9));
            const double h = span / static_cast<double>(nsteps);
            for (std::size_t it = 0; it < nsteps; ++it) {
                step(s, h);
                ++res.steps;
                const double fm = frame_max(s);
                res.frame_max = std::max(res.frame_max, fm);
                if (fm > cfg_.frame_tol && res.truncation_ok) {
                    res.truncation_ok = false;
                    if (cfg_.throw_on_truncation)
                        throw TruncationInvalid(
                            fmt::format("boundary frame reached u = {:.3g} > {} at t = {:.6g}", fm, cfg_.frame_tol, s.t));
                }
            }
            s.t = t_next;
        }
        snap();
        t_prev = t_next;
    }

    // invasion indicator on the ball of radius invasion_radius at the origin
    const std::size_t n = grid_.n;
    double mn = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < s.u.size(); ++k) {
        const double x0 = grid_.coord(k % n);
        const double x1 = grid_.dim == 2 ? grid_.coord(k / n) : 0.0;
        if (x0 * x0 + x1 * x1 <= cfg_.invasion_radius * cfg_.invasion_radius) mn = std::min(mn, s.u[k]);
    }
    res.invasion_min = mn;
    res.invaded = mn >= cfg_.invasion_level;
    res.final_max = *std::max_element(s.u.begin(), s.u.end());
    return res;
}

SimResult run(const media::MediumSpec& medium, const SimConfig& cfg) { return Simulator(medium, cfg).run(); }

void write_snapshot(const std::filesystem::path& path, const Snapshot& s) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    const auto N = static_cast<std::int32_t>(s.grid.dim);
    const auto n = static_cast<std::int32_t>(s.grid.n);
    out.write(reinterpret_cast<const char*>(&N), sizeof N);
    for (std::int32_t d = 0; d < N; ++d) out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(&s.grid.dx), sizeof(double));
    out.write(reinterpret_cast<const char*>(&s.t), sizeof(double));
    out.write(reinterpret_cast<const char*>(s.u.data()), static_cast<std::streamsize>(s.u.size() * sizeof(double)));
}

Snapshot read_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::int32_t N = 0;
    in.read(reinterpret_cast<char*>(&N), sizeof N);
    if (!in || (N != 1 && N != 2)) throw std::runtime_error("bad snapshot header in " + path.string());
    std::vector<std::int32_t> dims(static_cast<std::size_t>(N));
    in.read(reinterpret_cast<char*>(dims.data()), static_cast<std::streamsize>(dims.size() * sizeof(std::int32_t)));
    if (N == 2 && dims[0] != dims[1]) throw std::runtime_error("non-square snapshot in " + path.string());
    Snapshot s;
    s.grid.dim = static_cast<std::size_t>(N);
    s.grid.n = static_cast<std::size_t>(dims[0]);
    in.read(reinterpret_cast<char*>(&s.grid.dx), sizeof(double));
    in.read(reinterpret_cast<char*>(&s.t), sizeof(double));
    s.u.resize(s.grid.size());
    in.read(reinterpret_cast<char*>(s.u.data()), static_cast<std::streamsize>(s.u.size() * sizeof(double)));
    if (!in) throw std::runtime_error("truncated snapshot " + path.string());
    return s;
}

void write_snapshot_csv(const std::filesystem::path& path, const Snapshot& s, const std::string& config_hash) {
    std::vector<std::pair<std::string, std::string>> meta{{"t", io::fmt17(s.t)}, {"dx", io::fmt17(s.grid.dx)}};
    if (!config_hash.empty()) meta.emplace_back("config_hash", config_hash);
    const std::size_t n = s.grid.n;
    if (s.grid.dim == 1) {
        io::CsvWriter w({"x", "u"}, meta);
        for (std::size_t i = 0; i < n; ++i) w.row({s.grid.coord(i), s.u[i]});
        w.save(path);
    } else {
        io::CsvWriter w({"x1", "x2", "u"}, meta);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i) w.row({s.grid.coord(i), s.grid.coord(j), s.at(i, j)});
        w.save(path);
    }
}

}  // namespace spreadkit::simulate
