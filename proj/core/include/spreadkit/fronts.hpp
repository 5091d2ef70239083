#pragma once

// Planar fronts phi(x.e - ct) of the homogeneous equation:
//   phi'' + c phi' + f(phi) = 0,  phi(-inf) = 1, phi(+inf) = 0.

#include <functional>
#include <string>
#include <vector>

#include "spreadkit/media.hpp"

namespace spreadkit::fronts {

enum class FrontType { KPP, Ignition, Bistable };

std::string to_string(FrontType t);

struct FrontProfile {
    double c = 0.0;
    FrontType type = FrontType::Bistable;
    std::vector<double> z;    // uniform grid covering [-Z, Z]
    std::vector<double> phi;  // phi(0) = 1/2
    double residual = 0.0;    // max interior |phi'' + c phi' + f(phi)|, fourth-order differences
    double c_lo = 0.0;        // last undershoot speed (shooting only)
    double c_hi = 0.0;        // last overshoot speed (shooting only)
    std::vector<std::string> warnings;

    // Linear interpolation; 1 to the left of the grid, 0 to the right.
    double phi_at(double zeta) const;
    // Location where phi crosses `level`.
    double crossing(double level) const;
};

struct ShootOptions {
    double tol = 1e-13;        // bisection width on c
    double Z = 50.0;
    double dz = 0.01;
    double amplitude = 1e-6;   // offset from (1,0) along the unstable eigenvector
    double abs_tol = 1e-14;
    double rel_tol = 1e-12;
    double z_max = 1e4;        // trajectories still undecided here count as overshoot
    double tail_level = 1e-5;  // below this, phi continues along the decaying linear mode
    // phi levels where f is not differentiable; residual stencils straddling them are skipped
    std::vector<double> kinks;
};

using Reaction = std::function<double(double)>;

// Homogeneous ignition or bistable reaction; f1 = f'(1) < 0.
FrontProfile shoot_front(const Reaction& f, double f1, double f0, FrontType type, const ShootOptions& opts = {});

// Requires an x-independent medium classified Ignition or Bistable-homogeneous.
FrontProfile shoot_front(const media::MediumSpec& medium, const ShootOptions& opts = {});

// 2 sqrt(d_u f(0)) for homogeneous KPP reactions.
double kpp_minimal_speed(const media::MediumSpec& medium);

// Front of speed c >= kpp_minimal_speed, shot from the saddle (1,0).
FrontProfile kpp_profile(const media::MediumSpec& medium, double c, const ShootOptions& opts = {});

// max interior |phi'' + c phi' + f(phi)| with fourth-order centered differences,
// skipping stencils whose phi range contains a kink level.
double ode_residual(const std::vector<double>& phi, double dz, double c, const Reaction& f,
                    const std::vector<double>& kinks = {});

}  // namespace spreadkit::fronts
