#pragma once

#include <latwave/perturbation.hpp>
#include <latwave/se2.hpp>

#include <functional>
#include <string>
#include <vector>

namespace latwave {

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Point on the three-torus, components wrapped to [0, 2*pi).
struct TorusState {
    Vec2 psi = Vec2::Zero();
    double phi = 0.0;

    TorusState() = default;
    TorusState(const Vec2& psi_, double phi_)
        : psi(wrap_2pi(psi_.x()), wrap_2pi(psi_.y())), phi(wrap_2pi(phi_)) {}
};

struct SystemParams {
    Vec2 V = Vec2::Zero();
    double omega = 0.0;
    double epsilon = 0.0;
    PerturbationSpec spec;

    void validate() const {
        if (omega < 0.0) throw ValidationError("omega must be >= 0");
        if (epsilon < 0.0) throw ValidationError("epsilon must be >= 0");
    }
};

/// Time series of unwrapped lifts (psi1, psi2, phi).  `dt` is the sample
/// spacing; the integrator step may be finer.
struct Trajectory {
    double dt = 0.0;
    std::vector<double> times;
    std::vector<Eigen::Vector3d> states;

    size_t size() const { return times.size(); }
    Eigen::Vector3d wrapped(size_t i) const {
        const auto& s = states[i];
        return {wrap_2pi(s[0]), wrap_2pi(s[1]), wrap_2pi(s[2])};
    }
    void write_csv(const std::string& path, int sample_every = 1) const;
};

struct Derivs {
    Vec2 dpsi;
    double dphi;
};

/// dPsi = R_phi (V + eps F^Psi), dphi = omega + eps F^phi.
Derivs vector_field(const SystemParams& params, const TorusState& state);

/// Fixed-step classical RK4 with compensated state accumulation.  The
/// number of steps is round(t_end/dt); the actual step is t_end/n so the
/// final sample lands exactly on t_end.
Trajectory integrate(const SystemParams& params, const TorusState& initial,
                     double dt, double t_end, int sample_every = 1);

/// Co-rotating / time-rescaled field dPsi = eps R_phi G(Psi, phi), dphi = 1,
/// with G given directly by two trig polynomials.
struct RotatingFrameSystem {
    TrigPoly g1, g2;
    double epsilon = 0.0;
};

Trajectory integrate_rotating_frame(const RotatingFrameSystem& sys, const Vec2& psi0,
                                    double phi0, double dt, double t_end,
                                    int sample_every = 1);

/// Subtract the unperturbed circulation: Psi~(t) = Psi(t) - J R_phi(t) W
/// with W = V/omega.  Requires omega > 0.
Trajectory to_corotating_frame(const SystemParams& params, const Trajectory& traj);

/// Integrate from (J Psi(0), phi(0) - pi/2) over the trajectory's grid and
/// return the max torus distance to (J Psi(t), phi(t) - pi/2).
double conjugacy_residual(const SystemParams& params, const Trajectory& traj);

struct SurfaceDiagnostic {
    double phi_mean = 0.0;     ///< circular mean of phi over the tail
    double phi_maxdev = 0.0;   ///< max circular deviation from the mean
    std::vector<Eigen::Vector3d> samples;  ///< wrapped tail states (decimated)
};

SurfaceDiagnostic invariant_surface_diagnostic(const Trajectory& traj,
                                               double transient_fraction);

/// Distance on T^3 (componentwise circular metric, Euclidean norm).
double torus_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b);

}  // namespace latwave
