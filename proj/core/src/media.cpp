#include "spreadkit/media.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "spreadkit/io.hpp"

namespace spreadkit::media {

using fieldlang::CoefficientField;
using fieldlang::Expr;
using fieldlang::ParamTable;

std::string to_string(ReactionTag tag) {
    switch (tag) {
    case ReactionTag::KPP: return "KPP";
    case ReactionTag::Monostable: return "Monostable";
    case ReactionTag::Ignition: return "Ignition";
    case ReactionTag::BistableHomogeneous: return "Bistable-homogeneous";
    case ReactionTag::Unclassified: return "Unclassified";
    }
    return "?";
}

bool ValidationReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

const CheckResult* ValidationReport::first_failure() const {
    for (const auto& c : checks)
        if (!c.pass) return &c;
    return nullptr;
}

nlohmann::json ValidationReport::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : checks) {
        nlohmann::json j{{"name", c.name},
                         {"hypothesis", c.hypothesis},
                         {"worst_residual", c.worst_residual},
                         {"tol", c.tol},
                         {"pass", c.pass},
                         {"witness", c.witness}};
        if (!c.note.empty()) j["note"] = c.note;
        arr.push_back(std::move(j));
    }
    return {{"pass", all_pass()}, {"checks", arr}};
}

std::string builtin_reaction(std::string_view family, ParamTable& params) {
    auto def = [&](const char* name, double v) { params.try_emplace(name, v); };
    if (family == "logistic") {
        def("mu", 1.0);
        return "mu*u*(1-u)";
    }
    if (family == "bistable") {
        def("theta", 0.25);
        return "u*(1-u)*(u-theta)";
    }
    if (family == "ignition") {
        def("theta", 0.3);
        return "max(u-theta,0)*(1-u)";
    }
    if (family == "periodic_logistic") {
        def("eps", 0.5);
        return "(1+eps*sin(2*pi*x1))*u*(1-u)";
    }
    throw ConfigError("unknown builtin reaction family '" + std::string(family) + "'");
}

// ---------------------------------------------------------------------------

MediumSpec::MediumSpec(CoefficientField A, CoefficientField q, CoefficientField f, ParamTable params,
                       ReactionClass rc, ValidationReport report)
    : A_(std::move(A)), q_(std::move(q)), f_(std::move(f)), params_(std::move(params)), class_(std::move(rc)),
      report_(std::move(report)) {
    try {
        df_ = fieldlang::derivative_u(f_.entries()[0]);
    } catch (const NotDifferentiable&) {
        df_.reset();
    }
}

double MediumSpec::reaction_at(std::span<const double> x, double s) const {
    if (!(s > 0.0) || !(s < 1.0)) return 0.0;
    return f_.entries()[0].eval(x, s);
}

double MediumSpec::linearization_at(std::span<const double> x) const { return linearization().eval(x, 0.0); }

const Expr& MediumSpec::linearization() const {
    if (!df_) throw NotDifferentiable("reaction has no symbolic u-derivative: " + f_.entries()[0].to_string());
    return *df_;
}

bool MediumSpec::homogeneous() const { return !A_.uses_x() && !q_.uses_x() && !f_.uses_x(); }

bool MediumSpec::drift_free() const {
    return std::all_of(q_.entries().begin(), q_.entries().end(), [](const Expr& e) {
        return e.root().kind == fieldlang::NodeKind::Number && e.root().value == 0.0;
    });
}

nlohmann::json MediumSpec::describe() const {
    auto texts = [](const CoefficientField& c) {
        std::vector<std::string> v;
        for (const auto& e : c.entries()) v.push_back(e.to_string());
        return v;
    };
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [k, v] : params_) params[k] = v;
    return {{"dim", dim()},
            {"A_upper", texts(A_)},
            {"q", texts(q_)},
            {"f", f_.entries()[0].to_string()},
            {"params", params},
            {"reaction_class", to_string(class_.tag)}};
}

std::string MediumSpec::hash() const {
    nlohmann::json d = describe();
    d.erase("reaction_class");
    return io::hex64(io::fnv1a64(d.dump()));
}

// ---------------------------------------------------------------------------

std::vector<std::vector<double>> sample_points(std::size_t dim, const ValidationOptions& opts) {
    std::vector<std::vector<double>> pts;
    const std::size_t g = std::max<std::size_t>(opts.grid_per_axis, 1);
    std::size_t total = 1;
    for (std::size_t d = 0; d < dim; ++d) total *= g;
    pts.reserve(total + opts.n_random);
    std::vector<std::size_t> idx(dim, 0);
    for (std::size_t k = 0; k < total; ++k) {
        std::vector<double> x(dim);
        std::size_t r = k;
        for (std::size_t d = 0; d < dim; ++d) {
            x[d] = static_cast<double>(r % g) / static_cast<double>(g);
            r /= g;
        }
        pts.push_back(std::move(x));
    }
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t k = 0; k < opts.n_random; ++k) {
        std::vector<double> x(dim);
        for (auto& xi : x) xi = unit(rng);
        pts.push_back(std::move(x));
    }
    return pts;
}

namespace {

// f sampled on points x u-grid; values[p * nu + k] = f(x_p, s_k), raw (no clamp).
struct ReactionSamples {
    std::vector<std::vector<double>> points;
    std::vector<double> s;
    std::vector<double> values;
    std::size_t nu = 0;

    double at(std::size_t p, std::size_t k) const { return values[p * nu + k]; }
};

ReactionSamples sample_reaction(const CoefficientField& f, const ValidationOptions& opts) {
    ReactionSamples rs;
    rs.points = sample_points(f.dim(), opts);
    rs.nu = std::max<std::size_t>(opts.u_points, 3);
    rs.s.resize(rs.nu);
    for (std::size_t k = 0; k < rs.nu; ++k) rs.s[k] = static_cast<double>(k) / static_cast<double>(rs.nu - 1);
    rs.values.resize(rs.points.size() * rs.nu);
    const Expr& e = f.entries()[0];
    for (std::size_t p = 0; p < rs.points.size(); ++p)
        for (std::size_t k = 0; k < rs.nu; ++k) rs.values[p * rs.nu + k] = e.eval(rs.points[p], rs.s[k]);
    return rs;
}

// Smallest grid S such that f(x, .) is nonincreasing on [S, 1] at every sample.
std::pair<double, std::size_t> find_S(const ReactionSamples& rs, double tol) {
    std::size_t kS = rs.nu - 1;
    while (kS > 0) {
        bool ok = true;
        for (std::size_t p = 0; p < rs.points.size() && ok; ++p)
            if (rs.at(p, kS) > rs.at(p, kS - 1) + tol) ok = false;
        if (!ok) break;
        --kS;
    }
    return {rs.s[kS], kS};
}

double bisect_threshold(double lo, double hi, const std::function<bool(double)>& below) {
    // below(lo) true, below(hi) false
    for (int it = 0; it < 60 && hi - lo > 1e-14; ++it) {
        const double mid = 0.5 * (lo + hi);
        (below(mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::optional<ReactionClass> try_monostable(const CoefficientField& f, const ReactionSamples& rs, double tol) {
    for (std::size_t k = 1; k + 1 < rs.nu; ++k) {
        double mn = std::numeric_limits<double>::infinity(), mx = -mn;
        for (std::size_t p = 0; p < rs.points.size(); ++p) {
            mn = std::min(mn, rs.at(p, k));
            mx = std::max(mx, rs.at(p, k));
        }
        if (mn < -tol || !(mx > tol)) return std::nullopt;
    }
    ReactionClass rc;
    rc.tag = ReactionTag::Monostable;
    rc.S = find_S(rs, 1e-12).first;

    // KPP: f(x,s) <= d_u f(x,0) s
    if (f.entries()[0].has_nonsmooth()) {
        rc.notes.push_back("not KPP: reaction is not differentiable in u");
        return rc;
    }
    const Expr df = fieldlang::derivative_u(f.entries()[0]);
    for (std::size_t p = 0; p < rs.points.size(); ++p) {
        const double slope = df.eval(rs.points[p], 0.0);
        for (std::size_t k = 1; k + 1 < rs.nu; ++k)
            if (rs.at(p, k) > slope * rs.s[k] + tol) return rc;
    }
    rc.tag = ReactionTag::KPP;
    return rc;
}

std::optional<ReactionClass> try_ignition(const CoefficientField& f, const ReactionSamples& rs, double tol) {
    auto max_abs = [&](std::size_t k) {
        double m = 0.0;
        for (std::size_t p = 0; p < rs.points.size(); ++p) m = std::max(m, std::abs(rs.at(p, k)));
        return m;
    };
    std::size_t k0 = 0;
    while (k0 + 1 < rs.nu - 1 && max_abs(k0 + 1) <= tol) ++k0;
    if (k0 == 0) return std::nullopt;
    for (std::size_t k = k0 + 1; k + 1 < rs.nu; ++k) {
        double mn = std::numeric_limits<double>::infinity(), mx = -mn;
        for (std::size_t p = 0; p < rs.points.size(); ++p) {
            mn = std::min(mn, rs.at(p, k));
            mx = std::max(mx, rs.at(p, k));
        }
        if (mn < -tol || !(mx > tol)) return std::nullopt;
    }
    const Expr& e = f.entries()[0];
    const double theta = bisect_threshold(rs.s[k0], rs.s[k0 + 1], [&](double s) {
        for (const auto& x : rs.points)
            if (std::abs(e.eval(x, s)) > tol) return false;
        return true;
    });
    ReactionClass rc;
    rc.tag = ReactionTag::Ignition;
    rc.theta = theta;
    rc.S = find_S(rs, 1e-12).first;
    return rc;
}

std::optional<ReactionClass> try_bistable(const CoefficientField& f, const ReactionSamples& rs, double tol) {
    const Expr& e = f.entries()[0];
    if (e.uses_x()) return std::nullopt;
    // sign pattern over interior u-grid: (-)+ (0)? (+)+
    const std::vector<double> x0(f.dim(), 0.0);
    std::size_t k = 1;
    std::size_t n_neg = 0, n_zero = 0, n_pos = 0;
    while (k + 1 < rs.nu && rs.at(0, k) < -tol) ++k, ++n_neg;
    while (k + 1 < rs.nu && std::abs(rs.at(0, k)) <= tol && n_zero < 1) ++k, ++n_zero;
    while (k + 1 < rs.nu && rs.at(0, k) > tol) ++k, ++n_pos;
    if (k + 1 != rs.nu || n_neg == 0 || n_pos == 0) return std::nullopt;

    const std::size_t klo = n_neg;  // last negative sample
    const std::size_t khi = n_neg + n_zero + 1;
    const double theta =
        bisect_threshold(rs.s[klo], rs.s[khi], [&](double s) { return e.eval(x0, s) < 0.0; });

    constexpr std::size_t kIntervals = 10000;
    double integral = 0.0;
    for (std::size_t i = 0; i <= kIntervals; ++i) {
        const double s = static_cast<double>(i) / kIntervals;
        const double w = (i == 0 || i == kIntervals) ? 0.5 : 1.0;
        integral += w * e.eval(x0, s);
    }
    integral /= static_cast<double>(kIntervals);
    if (integral < -tol) return std::nullopt;

    ReactionClass rc;
    rc.tag = ReactionTag::BistableHomogeneous;
    rc.theta = theta;
    rc.integral = integral;
    rc.S = find_S(rs, 1e-12).first;
    rc.notes.push_back("theta also serves as the weak-stability threshold delta (same parameter)");
    if (std::abs(integral) <= tol) rc.notes.push_back("int_0^1 f vanishes: zero-speed boundary case");
    return rc;
}

ReactionClass classify_samples(const CoefficientField& f, const ReactionSamples& rs, double tol) {
    if (auto rc = try_monostable(f, rs, tol)) return *rc;
    if (auto rc = try_ignition(f, rs, tol)) return *rc;
    if (auto rc = try_bistable(f, rs, tol)) return *rc;
    throw Unclassifiable("reaction " + f.entries()[0].to_string() +
                         " matches none of KPP, Monostable, Ignition, Bistable-homogeneous");
}

std::vector<Expr> parse_all(const std::vector<std::string>& src, std::size_t dim, bool allow_u,
                            const ParamTable& params) {
    std::vector<Expr> out;
    out.reserve(src.size());
    for (const auto& s : src) out.push_back(fieldlang::parse_expr(s, dim, allow_u, params));
    return out;
}

CheckResult periodicity_check(const std::string& name, const CoefficientField& c, const ValidationOptions& o) {
    const auto rep = fieldlang::validate_periodicity(c, 100, o.seed, o.periodicity_tol);
    return {name, "coefficients are Z^N-periodic", rep.worst, o.periodicity_tol, rep.pass, rep.witness, {}};
}

}  // namespace

ReactionClass classify_reaction(const CoefficientField& f, const ParamTable& /*params*/, const ValidationOptions& opts) {
    return classify_samples(f, sample_reaction(f, opts), opts.tol);
}

MediumSpec build_medium(const MediumConfig& cfg, const ValidationOptions& opts) {
    const std::size_t n = cfg.dim;
    if (n == 0) throw ConfigError("medium dimension must be >= 1");
    ParamTable params = cfg.params;

    // diffusion
    std::vector<Expr> a_entries;
    const std::size_t n_upper = n * (n + 1) / 2;
    if (cfg.A.size() == n_upper) {
        a_entries = parse_all(cfg.A, n, false, params);
    } else if (cfg.A.size() == 1 || cfg.A.size() == n) {
        const auto diag = parse_all(cfg.A, n, false, params);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j)
                a_entries.push_back(i == j ? diag[cfg.A.size() == 1 ? 0 : i] : Expr());
    } else {
        throw ConfigError("A needs 1, N or N(N+1)/2 entries");
    }
    auto A = CoefficientField::symmetric_matrix(n, std::move(a_entries));

    std::vector<Expr> q_entries;
    if (cfg.q.empty()) {
        q_entries.assign(n, Expr());
    } else if (cfg.q.size() == n) {
        q_entries = parse_all(cfg.q, n, false, params);
    } else {
        throw ConfigError("q needs N entries");
    }
    auto q = CoefficientField::vector(n, std::move(q_entries));

    std::string f_src = cfg.f;
    if (f_src.rfind("builtin:", 0) == 0) f_src = builtin_reaction(std::string_view(f_src).substr(8), params);
    auto f = CoefficientField::scalar(n, fieldlang::parse_expr(f_src, n, true, params));

    ValidationReport report;
    const double tol = opts.tol;
    report.checks.push_back(periodicity_check("A_periodic", A, opts));
    report.checks.push_back(periodicity_check("q_periodic", q, opts));
    report.checks.push_back(periodicity_check("f_periodic", f, opts));

    const auto pts = sample_points(n, opts);

    {  // A symmetric positive definite
        CheckResult c{"A_positive_definite", "A(x) symmetric positive definite", 0.0, 0.0, true, {}, {}};
        double worst = std::numeric_limits<double>::infinity();
        std::vector<double> m(n * n);
        for (const auto& x : pts) {
            A.eval_matrix(x, m);
            Eigen::Map<const Eigen::MatrixXd> mat(m.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mat, Eigen::EigenvaluesOnly);
            const double lo = es.eigenvalues().minCoeff();
            if (lo < worst) {
                worst = lo;
                c.witness = x;
            }
        }
        c.worst_residual = worst;
        c.pass = worst > 0.0;
        c.note = "worst_residual is the minimum sampled eigenvalue";
        report.checks.push_back(std::move(c));
    }

    {  // div q = 0, fourth-order centered differences
        CheckResult c{"q_divergence_free", "div q = 0", 0.0, tol, true, {}, {}};
        constexpr double h = 1e-3;
        std::vector<double> xp(n);
        for (const auto& x : pts) {
            double div = 0.0;
            for (std::size_t d = 0; d < n; ++d) {
                const Expr& qd = q.entries()[d];
                auto at = [&](double off) {
                    xp = x;
                    xp[d] += off;
                    return qd.eval(xp);
                };
                div += (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
            }
            if (std::abs(div) > c.worst_residual) {
                c.worst_residual = std::abs(div);
                c.witness = x;
            }
        }
        c.pass = c.worst_residual <= tol;
        report.checks.push_back(std::move(c));
    }

    {  // zero cell average of q on the lattice grid
        CheckResult c{"q_mean_zero", "integral of q over the unit cell vanishes", 0.0, tol, true, {}, {}};
        std::size_t grid = 1;
        for (std::size_t d = 0; d < n; ++d) grid *= std::max<std::size_t>(opts.grid_per_axis, 1);
        std::vector<double> mean(n, 0.0), v(n);
        for (std::size_t p = 0; p < grid; ++p) {
            q.eval_vector(pts[p], v);
            for (std::size_t d = 0; d < n; ++d) mean[d] += v[d];
        }
        for (auto& m : mean) {
            m /= static_cast<double>(grid);
            c.worst_residual = std::max(c.worst_residual, std::abs(m));
        }
        c.witness = mean;
        c.pass = c.worst_residual <= tol;
        report.checks.push_back(std::move(c));
    }

    const ReactionSamples rs = sample_reaction(f, opts);
    for (const auto& [name, k] : {std::pair<const char*, std::size_t>{"f_zero_at_0", 0}, {"f_zero_at_1", rs.nu - 1}}) {
        CheckResult c{name, "f(x,0) = f(x,1) = 0", 0.0, tol, true, {}, {}};
        for (std::size_t p = 0; p < rs.points.size(); ++p) {
            const double r = std::abs(rs.at(p, k));
            if (r > c.worst_residual) {
                c.worst_residual = r;
                c.witness = rs.points[p];
            }
        }
        c.pass = c.worst_residual <= tol;
        report.checks.push_back(std::move(c));
    }

    {  // f(x,.) nonincreasing on [S,1]
        const auto [S, kS] = find_S(rs, 1e-12);
        CheckResult c{"f_nonincreasing_near_1", "f(x,.) nonincreasing in [S,1] for some S < 1", S, 1.0, kS + 1 < rs.nu,
                      {S}, "worst_residual is the recorded S"};
        report.checks.push_back(std::move(c));
    }

    ReactionClass rc;
    {
        CheckResult c{"reaction_class", "Monostable/KPP/Ignition/Bistable taxonomy", 0.0, 0.0, true, {}, {}};
        try {
            rc = classify_samples(f, rs, tol);
            c.note = to_string(rc.tag);
        } catch (const Unclassifiable& e) {
            rc.tag = ReactionTag::Unclassified;
            rc.S = find_S(rs, 1e-12).first;
            rc.notes.push_back(e.what());
            c.note = "Unclassified: eigenvalue speeds refused, simulation only";
        }
        if (rc.theta) c.witness = {*rc.theta};
        report.checks.push_back(std::move(c));
    }

    if (const CheckResult* bad = report.first_failure()) {
        std::ostringstream msg;
        msg << "hypothesis violated: " << bad->hypothesis << " (" << bad->name << ", residual " << bad->worst_residual
            << ", witness [";
        for (std::size_t i = 0; i < bad->witness.size(); ++i) msg << (i ? ", " : "") << bad->witness[i];
        msg << "])";
        throw MediumValidationError(msg.str(), std::move(report));
    }

    return MediumSpec(std::move(A), std::move(q), std::move(f), std::move(params), std::move(rc), std::move(report));
}

}  // namespace spreadkit::media
