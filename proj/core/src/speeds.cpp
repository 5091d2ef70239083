#include "spreadkit/speeds.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include "spreadkit/io.hpp"

namespace spreadkit::speeds {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 2.0 * std::numbers::pi;
const double kGolden = 0.5 * (std::sqrt(5.0) - 1.0);

double wrap_angle(double a) {
    a = std::fmod(a, kTwoPi);
    if (a < 0.0) a += kTwoPi;
    return a;
}

double angle_distance(double a, double b) {
    const double d = wrap_angle(a - b);
    return std::min(d, kTwoPi - d);
}

template <class F>
std::pair<double, double> golden_section(F&& f, double a, double b, double rel_tol, double abs_tol) {
    double c = b - kGolden * (b - a);
    double d = a + kGolden * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > std::max(rel_tol * 0.5 * std::abs(a + b), abs_tol)) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kGolden * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kGolden * (b - a);
            fd = f(d);
        }
    }
    return fc <= fd ? std::pair{c, fc} : std::pair{d, fd};
}

}  // namespace

CstarResult minimize_speed(const KAlongRay& k, const CstarOptions& opts, double lambda_limit) {
    if (opts.n_scan < 3 || !(opts.lambda_lo > 0.0) || !(opts.lambda_hi > opts.lambda_lo))
        throw std::invalid_argument("invalid lambda scan configuration");
    CstarResult res;
    const std::size_t n = opts.n_scan;
    std::vector<double> lam(n), g(n);
    const double ratio = std::log(opts.lambda_hi / opts.lambda_lo);
    std::size_t skipped = 0;
    for (std::size_t j = 0; j < n; ++j) {
        lam[j] = opts.lambda_lo * std::exp(ratio * static_cast<double>(j) / static_cast<double>(n - 1));
        if (lam[j] > lambda_limit) {
            g[j] = kInf;
            ++skipped;
            continue;
        }
        g[j] = k(lam[j]) / lam[j];
        ++res.evaluations;
    }
    if (skipped > 0)
        res.warnings.push_back(std::to_string(skipped) + " scan points above lambda " + io::fmt17(lambda_limit) +
                               " skipped (non-monotone stencil)");

    std::vector<std::size_t> brackets;
    for (std::size_t j = 1; j + 1 < n; ++j)
        if (std::isfinite(g[j]) && g[j] <= g[j - 1] && g[j] <= g[j + 1] && (g[j] < g[j - 1] || g[j] < g[j + 1]))
            brackets.push_back(j);

    if (brackets.empty()) {
        const auto it = std::min_element(g.begin(), g.end());
        const std::size_t j = static_cast<std::size_t>(it - g.begin());
        throw BracketFailure("no interior minimum of k(lambda e)/lambda on [" + io::fmt17(opts.lambda_lo) + ", " +
                                 io::fmt17(opts.lambda_hi) + "]; boundary minimum " + io::fmt17(*it) +
                                 " at lambda " + io::fmt17(lam[j]) + " (k(0) <= 0 or pathological medium)",
                             *it, lam[j]);
    }
    if (brackets.size() > 1) res.warnings.push_back(std::to_string(brackets.size()) + " brackets refined");

    res.cstar = kInf;
    for (std::size_t j : brackets) {
        double a = lam[j - 1];
        double b = std::min(lam[j + 1], lambda_limit);
        auto [l, v] = golden_section(
            [&](double x) {
                ++res.evaluations;
                return k(x) / x;
            },
            a, b, opts.rel_tol, 0.0);
        if (g[j] < v) {
            l = lam[j];
            v = g[j];
        }
        if (v < res.cstar) {
            res.cstar = v;
            res.lambda_min = l;
        }
    }
    return res;
}

CstarResult cstar(eigen::KSolver& solver, std::span<const double> e, const CstarOptions& opts) {
    const auto& medium = solver.medium();
    if (medium.reaction_class().tag != media::ReactionTag::KPP)
        throw std::invalid_argument("eigenvalue speeds require a KPP-classified medium (got " +
                                    media::to_string(medium.reaction_class().tag) + ")");
    if (e.size() != medium.dim()) throw std::invalid_argument("direction has the wrong dimension");

    const double limit = eigen::max_monotone_scale(solver.cell(opts.M), e);
    std::vector<double> psi;  // warm start along the scan
    std::vector<double> z(e.size());
    std::vector<std::string> failures;
    auto k = [&](double lambda) {
        for (std::size_t i = 0; i < e.size(); ++i) z[i] = lambda * e[i];
        if (auto cached = solver.cache().find(z, opts.M)) return *cached;
        auto r = solver.solve(z, opts.M, psi);
        psi = std::move(r.psi);
        return r.k;
    };
    return minimize_speed(k, opts, limit);
}

CstarResult cstar(const media::MediumSpec& medium, std::span<const double> e, const CstarOptions& opts) {
    eigen::KSolver solver(medium);
    return cstar(solver, e, opts);
}

double SpeedTable::min_speed() const { return *std::min_element(cstar.begin(), cstar.end()); }
double SpeedTable::max_speed() const { return *std::max_element(cstar.begin(), cstar.end()); }

double SpeedTable::interpolate(double angle) const {
    if (dim == 1) return std::cos(angle) >= 0.0 ? cstar[0] : cstar[1];
    const std::size_t n = cstar.size();
    const double t = wrap_angle(angle) / (kTwoPi / static_cast<double>(n));
    const auto i = static_cast<std::size_t>(std::floor(t)) % n;
    const double f = t - std::floor(t);
    return (1.0 - f) * cstar[i] + f * cstar[(i + 1) % n];
}

SpeedTable speed_table(eigen::KSolver& solver, std::size_t n_dir, const CstarOptions& opts, std::size_t jobs) {
    const std::size_t dim = solver.medium().dim();
    if (dim != 1 && dim != 2) throw std::invalid_argument("speed tables cover N = 1 or 2");
    SpeedTable t;
    t.dim = dim;
    t.M = opts.M;
    t.medium_hash = solver.medium().hash();
    if (dim == 1) {
        t.angles = {0.0, std::numbers::pi};
    } else {
        if (n_dir < 3) throw std::invalid_argument("2-D speed tables need n_dir >= 3");
        for (std::size_t i = 0; i < n_dir; ++i) t.angles.push_back(kTwoPi * static_cast<double>(i) / n_dir);
    }
    const std::size_t n = t.angles.size();
    t.cstar.assign(n, 0.0);
    t.lambda_min.assign(n, 0.0);

    solver.cell(opts.M);  // sample once before fanning out
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                std::vector<double> e = dim == 1 ? std::vector<double>{i == 0 ? 1.0 : -1.0}
                                                 : std::vector<double>{std::cos(t.angles[i]), std::sin(t.angles[i])};
                const auto r = cstar(solver, e, opts);
                t.cstar[i] = r.cstar;
                t.lambda_min[i] = r.lambda_min;
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
                next = n;
                return;
            }
        }
    };
    const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, n));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    if (dim == 2) {
        const double dth = kTwoPi / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
            t.lipschitz = std::max(t.lipschitz, std::abs(t.cstar[(i + 1) % n] - t.cstar[i]) / dth);
    }
    for (double c : t.cstar)
        if (!(c > 0.0)) throw DegenerateShape("nonpositive critical speed in table");
    return t;
}

SpeedTable speed_table(const media::MediumSpec& medium, std::size_t n_dir, const CstarOptions& opts,
                       std::size_t jobs) {
    eigen::KSolver solver(medium);
    return speed_table(solver, n_dir, opts, jobs);
}

// ---------------------------------------------------------------------------

namespace {

FgResult fg_on_grid(const std::vector<double>& angles, const std::vector<double>& values, const CstarOracle& refine,
                    double e_angle, double delta) {
    const std::size_t n = angles.size();
    std::vector<double> obj(n, kInf);
    for (std::size_t i = 0; i < n; ++i) {
        const double c = std::cos(angles[i] - e_angle);
        if (c >= delta) obj[i] = values[i] / c;
    }
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(obj[i])) continue;
        if (best == n || obj[i] < obj[best] * (1.0 - 1e-15) ||
            (obj[i] <= obj[best] * (1.0 + 1e-15) &&
             angle_distance(angles[i], e_angle) < angle_distance(angles[best], e_angle)))
            best = i;
    }
    if (best == n) throw std::invalid_argument("no grid direction within the delta cone around e");

    FgResult r;
    r.w = obj[best];
    r.xi_angle = angles[best];
    std::vector<std::size_t> near;
    for (std::size_t i = 0; i < n; ++i)
        if (obj[i] <= obj[best] * (1.0 + 1e-4)) near.push_back(i);
    for (std::size_t i : near) r.minimizer_angles.push_back(angles[i]);
    // more than one cyclic run of consecutive indices means separated minimizers
    std::size_t runs = 0;
    for (std::size_t j = 0; j < near.size(); ++j) {
        const std::size_t prev = near[(j + near.size() - 1) % near.size()];
        if (near.size() == 1 || (prev + 1) % n != near[j]) ++runs;
    }
    r.corner = runs > 1;

    if (n >= 3) {
        const double step = kTwoPi / static_cast<double>(n);
        auto f = [&](double th) {
            const double c = std::cos(th - e_angle);
            return c >= delta ? refine(th) / c : kInf;
        };
        const double a = angles[best] - step;
        const double b = angles[best] + step;
        const auto [th, v] = golden_section(f, a, b, 0.0, 1e-10);
        if (v < r.w) {
            r.w = v;
            r.xi_angle = wrap_angle(th);
        }
    }
    return r;
}

}  // namespace

FgResult fg_speed(const SpeedTable& table, double e_angle, double delta) {
    if (table.dim == 1) {
        FgResult r;
        const bool right = std::cos(e_angle) >= 0.0;
        r.w = right ? table.cstar[0] : table.cstar[1];
        r.xi_angle = right ? 0.0 : std::numbers::pi;
        r.minimizer_angles = {r.xi_angle};
        return r;
    }
    return fg_on_grid(table.angles, table.cstar, table_oracle(table), e_angle, delta);
}

FgResult fg_speed(const CstarOracle& cstar, std::size_t n_dir, double e_angle, double delta) {
    std::vector<double> angles(n_dir), values(n_dir);
    for (std::size_t i = 0; i < n_dir; ++i) {
        angles[i] = kTwoPi * static_cast<double>(i) / static_cast<double>(n_dir);
        values[i] = cstar(angles[i]);
    }
    return fg_on_grid(angles, values, cstar, e_angle, delta);
}

CstarOracle table_oracle(const SpeedTable& table) {
    return [table](double angle) { return table.interpolate(angle); };
}

// ---------------------------------------------------------------------------

double WulffShape::support(double angle) const {
    if (dim == 1) return std::cos(angle) >= 0.0 ? hi : -lo;
    const Point2 e = geometry::unit_from_angle(angle);
    double m = -kInf;
    for (const auto& v : vertices) m = std::max(m, geometry::dot(v, e));
    return m;
}

bool WulffShape::contains(Point2 p) const {
    if (dim == 1) return p.x >= lo && p.x <= hi;
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i)
        if (geometry::cross(vertices[(i + 1) % n] - vertices[i], p - vertices[i]) < -1e-12) return false;
    return true;
}

std::vector<Point2> WulffShape::boundary(double spacing) const {
    if (dim == 1) return {{lo, 0.0}, {hi, 0.0}};
    return geometry::densify_closed(vertices, spacing);
}

WulffShape wulff(const SpeedTable& table) {
    WulffShape w;
    w.dim = table.dim;
    w.n_dir = table.size();
    w.M = table.M;
    w.medium_hash = table.medium_hash;
    if (table.dim == 1) {
        w.lo = -table.cstar[1];
        w.hi = table.cstar[0];
        if (!(w.lo < 0.0 && w.hi > 0.0)) throw DegenerateShape("interval does not contain the origin");
        return w;
    }
    const double box = 4.0 * table.max_speed() + 1.0;
    std::vector<Point2> poly{{-box, -box}, {box, -box}, {box, box}, {-box, box}};
    for (std::size_t i = 0; i < table.size(); ++i) {
        poly = geometry::clip_halfplane(poly, geometry::unit_from_angle(table.angles[i]), table.cstar[i]);
        if (poly.empty()) throw DegenerateShape("half-plane intersection is empty");
    }
    poly = geometry::simplify_polygon(poly, 1e-12 * box);
    if (poly.size() < 3 || !geometry::strictly_contains(poly, {0.0, 0.0}))
        throw DegenerateShape("Wulff polygon does not contain the origin");
    w.vertices = std::move(poly);
    return w;
}

RegularFgReport regular_fg_check(const WulffShape& shape, const CstarOracle& cstar) {
    RegularFgReport rep;
    auto record = [&](double angle, double support) {
        const double c = cstar(angle);
        const double m = std::abs(support - c) / c;
        rep.normal_angles.push_back(angle);
        rep.mismatches.push_back(m);
        rep.max_rel_mismatch = std::max(rep.max_rel_mismatch, m);
        ++rep.edges;
    };
    if (shape.dim == 1) {
        record(0.0, shape.hi);
        record(std::numbers::pi, -shape.lo);
        return rep;
    }
    const auto& v = shape.vertices;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Point2 a = v[i], b = v[(i + 1) % v.size()];
        const Point2 t = b - a;
        const double len = geometry::norm(t);
        if (len == 0.0) continue;
        const Point2 nu{t.y / len, -t.x / len};
        const Point2 mid = (a + b) * 0.5;
        record(wrap_angle(std::atan2(nu.y, nu.x)), geometry::dot(mid, nu));
    }
    return rep;
}

}  // namespace spreadkit::speeds
