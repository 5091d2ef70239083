#include "spreadkit/fronts.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>

#include "spreadkit/io.hpp"

namespace spreadkit::fronts {

namespace odeint = boost::numeric::odeint;

std::string to_string(FrontType t) {
    switch (t) {
    case FrontType::KPP: return "KPP";
    case FrontType::Ignition: return "Ignition";
    case FrontType::Bistable: return "Bistable";
    }
    return "?";
}

double FrontProfile::phi_at(double zeta) const {
    if (z.empty()) return 0.0;
    if (zeta < z.front()) return 1.0;
    if (zeta > z.back()) return 0.0;
    const double dz = z[1] - z[0];
    const auto i = std::min(static_cast<std::size_t>((zeta - z.front()) / dz), z.size() - 2);
    const double t = (zeta - z[i]) / dz;
    return (1.0 - t) * phi[i] + t * phi[i + 1];
}

double FrontProfile::crossing(double level) const {
    for (std::size_t i = 0; i + 1 < phi.size(); ++i)
        if (phi[i] >= level && phi[i + 1] < level) return z[i] + (phi[i] - level) / (phi[i] - phi[i + 1]) * (z[i + 1] - z[i]);
    throw CrossingNotFound("profile never crosses level " + io::fmt17(level));
}

double ode_residual(const std::vector<double>& phi, double dz, double c, const Reaction& f,
                    const std::vector<double>& kinks) {
    double worst = 0.0;
    for (std::size_t j = 2; j + 2 < phi.size(); ++j) {
        const auto [lo, hi] = std::minmax({phi[j - 2], phi[j - 1], phi[j], phi[j + 1], phi[j + 2]});
        if (std::any_of(kinks.begin(), kinks.end(), [&](double k) { return k >= lo && k <= hi; })) continue;
        const double d2 = (-phi[j + 2] + 16 * phi[j + 1] - 30 * phi[j] + 16 * phi[j - 1] - phi[j - 2]) / (12 * dz * dz);
        const double d1 = (-phi[j + 2] + 8 * phi[j + 1] - 8 * phi[j - 1] + phi[j - 2]) / (12 * dz);
        worst = std::max(worst, std::abs(d2 + c * d1 + f(phi[j])));
    }
    return worst;
}

namespace {

using State = std::array<double, 2>;
using Stepper = odeint::runge_kutta_dopri5<State>;
using DenseStepper = odeint::result_of::make_dense_output<Stepper>::type;

enum class Outcome { Undershoot, Overshoot, Reached };

struct System {
    const Reaction& f;
    double c;
    void operator()(const State& s, State& ds, double /*z*/) const {
        ds[0] = s[1];
        ds[1] = -c * s[1] - f(s[0]);
    }
};

// Positive growth rate of the unstable manifold of (1,0).
double unstable_rate(double c, double f1) { return 0.5 * (-c + std::sqrt(c * c - 4.0 * f1)); }

// Decay rate of the branch approaching (0,0).
double decay_rate(double c, double f0, FrontType type) {
    if (type == FrontType::KPP) return 0.5 * (c - std::sqrt(std::max(c * c - 4.0 * f0, 0.0)));
    return 0.5 * (c + std::sqrt(std::max(c * c - 4.0 * f0, 0.0)));
}

struct Trajectory {
    DenseStepper stepper;
    System sys;

    Trajectory(const Reaction& f, double c, double f1, const ShootOptions& o)
        : stepper(odeint::make_dense_output(o.abs_tol, o.rel_tol, Stepper())), sys{f, c} {
        const double mu = unstable_rate(c, f1);
        stepper.initialize(State{1.0 - o.amplitude, -o.amplitude * mu}, 0.0, 1e-3);
    }

    std::pair<double, double> step() { return stepper.do_step(sys); }
    State at(double z) {
        State s;
        stepper.calc_state(z, s);
        return s;
    }
    const State& state() const { return stepper.current_state(); }
    double z() const { return stepper.current_time(); }
};

Outcome classify(const Reaction& f, double c, double f1, const ShootOptions& o) {
    Trajectory tr(f, c, f1, o);
    while (tr.z() < o.z_max) {
        tr.step();
        const State& s = tr.state();
        if (!std::isfinite(s[0]) || !std::isfinite(s[1])) throw IntegratorFailure("non-finite state while shooting");
        if (s[0] < 0.0) return Outcome::Undershoot;
        if (s[1] > 0.0) return Outcome::Overshoot;
    }
    return Outcome::Overshoot;
}

// Samples the trajectory at `first + j*dz` for j in [0, count) with z >= 0,
// stopping at the first point where phi <= stop_below or an event occurs.
// Returns samples and the index of the first unusable point.
std::vector<double> sample_trajectory(const Reaction& f, double c, double f1, const ShootOptions& o, double first,
                                      std::size_t count, double stop_below, std::size_t& usable) {
    Trajectory tr(f, c, f1, o);
    std::vector<double> out;
    out.reserve(count);
    std::size_t j = 0;
    while (j < count && first + static_cast<double>(j) * o.dz < 0.0) {
        out.push_back(std::numeric_limits<double>::quiet_NaN());
        ++j;
    }
    usable = count;
    while (j < count) {
        const auto [z0, z1] = tr.step();
        (void)z0;
        for (; j < count && first + static_cast<double>(j) * o.dz <= z1; ++j) {
            const State s = tr.at(first + static_cast<double>(j) * o.dz);
            if (s[0] <= stop_below || s[1] >= 0.0) {
                usable = j;
                return out;
            }
            out.push_back(s[0]);
        }
        if (tr.z() > o.z_max) break;
    }
    usable = j;
    return out;
}

// z where the trajectory crosses 1/2.
double half_crossing(const Reaction& f, double c, double f1, const ShootOptions& o) {
    Trajectory tr(f, c, f1, o);
    while (tr.z() < o.z_max) {
        const auto [z0, z1] = tr.step();
        if (tr.state()[0] <= 0.5) {
            double a = z0, b = z1;
            for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(b)); ++it) {
                const double m = 0.5 * (a + b);
                (tr.at(m)[0] > 0.5 ? a : b) = m;
            }
            return 0.5 * (a + b);
        }
        if (tr.state()[1] >= 0.0) break;
    }
    throw IntegratorFailure("trajectory never reaches phi = 1/2");
}

FrontProfile build_profile(const Reaction& f, double c, double f1, double f0, FrontType type, const ShootOptions& o) {
    const double zh = half_crossing(f, c, f1, o);
    const auto n_half = static_cast<std::size_t>(std::llround(o.Z / o.dz));
    const std::size_t count = 2 * n_half + 1;
    const double first = zh - static_cast<double>(n_half) * o.dz;

    const double stop = type == FrontType::KPP ? 0.0 : o.tail_level;
    std::size_t usable = 0;
    auto traj = sample_trajectory(f, c, f1, o, first, count, stop, usable);
    if (usable < n_half + 1) throw IntegratorFailure("trajectory left the front before its midpoint");

    FrontProfile p;
    p.c = c;
    p.type = type;
    p.z.resize(count);
    p.phi.resize(count);
    const double mu = unstable_rate(c, f1);
    const double nu = decay_rate(c, f0, type);
    for (std::size_t j = 0; j < count; ++j) {
        const double za = first + static_cast<double>(j) * o.dz;
        p.z[j] = (static_cast<double>(j) - static_cast<double>(n_half)) * o.dz;
        if (za < 0.0) {
            p.phi[j] = 1.0 - o.amplitude * std::exp(mu * za);
        } else if (j < usable) {
            p.phi[j] = traj[j];
        } else {
            const double phis = p.phi[usable - 1];
            p.phi[j] = phis * std::exp(-nu * static_cast<double>(j - usable + 1) * o.dz);
        }
    }
    if (usable < count && type != FrontType::KPP)
        p.warnings.push_back("tail below " + io::fmt17(p.phi[usable - 1]) + " continued along the linear decay mode");
    p.residual = ode_residual(p.phi, o.dz, c, f, o.kinks);
    return p;
}

Reaction homogeneous_reaction(const media::MediumSpec& medium) {
    if (medium.reaction().uses_x()) throw std::invalid_argument("front ODE requires an x-independent reaction");
    const std::vector<double> x0(medium.dim(), 0.0);
    return [&medium, x0](double s) { return medium.reaction_at(x0, s); };
}

// f'(s) from the symbolic derivative when available, else one-sided differences.
double reaction_slope(const media::MediumSpec& medium, double s) {
    const std::vector<double> x0(medium.dim(), 0.0);
    if (medium.has_linearization()) return medium.linearization().eval(x0, s);
    const auto& e = medium.reaction().entries()[0];
    constexpr double h = 1e-5;
    if (s >= 1.0) return (3 * e.eval(x0, s) - 4 * e.eval(x0, s - h) + e.eval(x0, s - 2 * h)) / (2 * h);
    return (-3 * e.eval(x0, s) + 4 * e.eval(x0, s + h) - e.eval(x0, s + 2 * h)) / (2 * h);
}

}  // namespace

FrontProfile shoot_front(const Reaction& f, double f1, double f0, FrontType type, const ShootOptions& o) {
    if (type == FrontType::KPP) throw std::invalid_argument("use kpp_profile for KPP fronts");
    if (!(f1 < 0.0)) throw IntegratorFailure("f'(1) must be negative for a saddle at (1,0)");

    // upper bound from the slope bound sup f(s)/s
    double slope = 0.0;
    for (int i = 1; i <= 1000; ++i) {
        const double s = i / 1000.0;
        slope = std::max(slope, f(s) / s);
    }
    std::vector<double> candidates;
    if (slope > 0.0) candidates.push_back(2.0 * std::sqrt(slope));
    candidates.push_back(10.0);

    double lo = 0.0, hi = -1.0;
    for (double c : candidates)
        if (classify(f, c, f1, o) == Outcome::Overshoot) {
            hi = c;
            break;
        }
    if (hi < 0.0) throw NoSignChange("no overshoot found at the upper speed bound");

    std::vector<std::string> warnings;
    if (classify(f, lo, f1, o) != Outcome::Undershoot) {
        warnings.push_back("c = 0 does not undershoot: zero-speed boundary case");
        hi = 0.0;
    }
    double last_under = lo, last_over = hi;
    while (hi - lo > o.tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (classify(f, mid, f1, o) == Outcome::Undershoot) {
            lo = last_under = mid;
        } else {
            hi = last_over = mid;
        }
    }
    const double c = 0.5 * (lo + hi);
    FrontProfile p = build_profile(f, c, f1, f0, type, o);
    p.c_lo = last_under;
    p.c_hi = last_over;
    for (auto& w : warnings) p.warnings.push_back(std::move(w));
    return p;
}

FrontProfile shoot_front(const media::MediumSpec& medium, const ShootOptions& opts) {
    const auto tag = medium.reaction_class().tag;
    FrontType type;
    if (tag == media::ReactionTag::Ignition) type = FrontType::Ignition;
    else if (tag == media::ReactionTag::BistableHomogeneous) type = FrontType::Bistable;
    else throw std::invalid_argument("shooting requires an Ignition or Bistable-homogeneous reaction (got " +
                                     media::to_string(tag) + ")");
    const auto f = homogeneous_reaction(medium);
    ShootOptions o = opts;
    const auto& rc = medium.reaction_class();
    if (medium.reaction().entries()[0].has_nonsmooth() && rc.theta) o.kinks.push_back(*rc.theta);
    return shoot_front(f, reaction_slope(medium, 1.0), reaction_slope(medium, 0.0), type, o);
}

double kpp_minimal_speed(const media::MediumSpec& medium) {
    if (medium.reaction().uses_x()) throw std::invalid_argument("homogeneous reaction required");
    const std::vector<double> x0(medium.dim(), 0.0);
    const double mu0 = medium.linearization_at(x0);
    if (!(mu0 > 0.0)) throw NonPositiveLinearization("d_u f(0) = " + io::fmt17(mu0) + " is not positive");
    if (medium.reaction_class().tag != media::ReactionTag::KPP)
        throw std::invalid_argument("minimal speed formula requires a KPP reaction");
    return 2.0 * std::sqrt(mu0);
}

FrontProfile kpp_profile(const media::MediumSpec& medium, double c, const ShootOptions& opts) {
    const double cmin = kpp_minimal_speed(medium);
    if (c < cmin * (1.0 - 1e-12))
        throw SpeedBelowMinimal("speed " + io::fmt17(c) + " is below the minimal speed " + io::fmt17(cmin));
    const auto f = homogeneous_reaction(medium);
    auto p = build_profile(f, c, reaction_slope(medium, 1.0), reaction_slope(medium, 0.0), FrontType::KPP, opts);
    for (std::size_t j = 1; j < p.phi.size(); ++j)
        if (p.phi[j] > p.phi[j - 1]) throw IntegratorFailure("KPP profile is not monotone");
    return p;
}

}  // namespace spreadkit::fronts
