#include <latwave/center_bundle.hpp>

#include <cstdio>
#include <fstream>

namespace latwave {

namespace {

using State3 = Eigen::Vector3d;

// RK4 with Kahan-compensated accumulation of the state; keeps long runs
// (10^6+ steps) at the truncation floor instead of the roundoff walk.
template <typename Rhs>
class Rk4 {
public:
    Rk4(Rhs rhs, const State3& y0) : rhs_(std::move(rhs)), y_(y0), c_(State3::Zero()) {}

    const State3& state() const { return y_; }

    void step(double h) {
        const State3 k1 = rhs_(y_);
        const State3 k2 = rhs_(y_ + 0.5 * h * k1);
        const State3 k3 = rhs_(y_ + 0.5 * h * k2);
        const State3 k4 = rhs_(y_ + h * k3);
        const State3 inc = (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        for (int i = 0; i < 3; ++i) {
            const double a = inc[i] - c_[i];
            const double s = y_[i] + a;
            c_[i] = (s - y_[i]) - a;
            y_[i] = s;
        }
    }

private:
    Rhs rhs_;
    State3 y_;
    State3 c_;
};

template <typename Rhs>
Trajectory run_fixed_step(Rhs&& rhs, const State3& y0, double dt, double t_end,
                          int sample_every) {
    if (!(dt > 0.0)) throw ValidationError("dt must be > 0");
    if (!(t_end >= dt)) throw ValidationError("t_end must be >= dt");
    if (sample_every < 1) throw ValidationError("sample_every must be >= 1");

    const long nsteps = std::max<long>(1, std::lround(t_end / dt));
    const double h = t_end / static_cast<double>(nsteps);

    Trajectory traj;
    traj.dt = h * sample_every;
    traj.times.reserve(nsteps / sample_every + 2);
    traj.states.reserve(nsteps / sample_every + 2);

    Rk4<std::decay_t<Rhs>> stepper(std::forward<Rhs>(rhs), y0);
    traj.times.push_back(0.0);
    traj.states.push_back(stepper.state());
    for (long k = 1; k <= nsteps; ++k) {
        stepper.step(h);
        if (!stepper.state().allFinite())
            throw NumericalError("integration aborted: non-finite state at t=" +
                                 std::to_string(k * h));
        if (k % sample_every == 0) {  // keep samples strictly equispaced
            traj.times.push_back(k * h);
            traj.states.push_back(stepper.state());
        }
    }
    return traj;
}

}  // namespace

Derivs vector_field(const SystemParams& params, const TorusState& state) {
    const auto f = evaluate(params.spec, state.psi, state.phi);
    const Vec2 dpsi = rotation(state.phi) * (params.V + params.epsilon * f.f_psi);
    const double dphi = params.omega + params.epsilon * f.f_phi;
    return {dpsi, dphi};
}

Trajectory integrate(const SystemParams& params, const TorusState& initial,
                     double dt, double t_end, int sample_every) {
    params.validate();
    auto rhs = [&params](const State3& y) -> State3 {
        const Vec2 psi(y[0], y[1]);
        const auto f = evaluate(params.spec, psi, y[2]);
        const Vec2 dpsi = rotation(y[2]) * (params.V + params.epsilon * f.f_psi);
        return {dpsi.x(), dpsi.y(), params.omega + params.epsilon * f.f_phi};
    };
    const State3 y0(initial.psi.x(), initial.psi.y(), initial.phi);
    return run_fixed_step(rhs, y0, dt, t_end, sample_every);
}

Trajectory integrate_rotating_frame(const RotatingFrameSystem& sys, const Vec2& psi0,
                                    double phi0, double dt, double t_end,
                                    int sample_every) {
    auto rhs = [&sys](const State3& y) -> State3 {
        const Vec2 psi(y[0], y[1]);
        const Vec2 g(sys.g1.eval(psi, y[2]), sys.g2.eval(psi, y[2]));
        const Vec2 dpsi = sys.epsilon * (rotation(y[2]) * g);
        return {dpsi.x(), dpsi.y(), 1.0};
    };
    return run_fixed_step(rhs, State3(psi0.x(), psi0.y(), phi0), dt, t_end, sample_every);
}

Trajectory to_corotating_frame(const SystemParams& params, const Trajectory& traj) {
    if (!(params.omega > 0.0))
        throw ValidationError("co-rotating frame undefined for omega = 0");
    const Vec2 W = params.V / params.omega;
    Trajectory out;
    out.dt = traj.dt;
    out.times = traj.times;
    out.states.reserve(traj.size());
    for (size_t i = 0; i < traj.size(); ++i) {
        const auto& s = traj.states[i];
        const Vec2 psi(s[0], s[1]);
        const Vec2 tilde = psi - apply_j(rotation(s[2]) * W);
        out.states.emplace_back(tilde.x(), tilde.y(), s[2]);
    }
    return out;
}

double torus_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    const double d0 = wrap_pm_pi(a[0] - b[0]);
    const double d1 = wrap_pm_pi(a[1] - b[1]);
    const double d2 = wrap_pm_pi(a[2] - b[2]);
    return std::sqrt(d0 * d0 + d1 * d1 + d2 * d2);
}

double conjugacy_residual(const SystemParams& params, const Trajectory& traj) {
    if (traj.size() < 2) throw ValidationError("trajectory too short");
    const auto& s0 = traj.states.front();
    const Vec2 psi0 = apply_j(Vec2(s0[0], s0[1]));
    const double phi0 = s0[2] - std::numbers::pi / 2;
    const double t_end = traj.times.back() - traj.times.front();
    // Re-integrate on the same grid: step = sample spacing of `traj`.
    const Trajectory other =
        integrate(params, TorusState(psi0, phi0), traj.dt, t_end, 1);
    // `other` sampled every step of size traj.dt; compare sample-by-sample.
    const size_t n = std::min(traj.size(), other.size());
    double worst = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const auto& s = traj.states[i];
        const Vec2 jpsi = apply_j(Vec2(s[0], s[1]));
        const Eigen::Vector3d expected(jpsi.x(), jpsi.y(), s[2] - std::numbers::pi / 2);
        worst = std::max(worst, torus_distance(other.states[i], expected));
    }
    return worst;
}

SurfaceDiagnostic invariant_surface_diagnostic(const Trajectory& traj,
                                               double transient_fraction) {
    if (!(transient_fraction >= 0.0 && transient_fraction < 1.0))
        throw ValidationError("transient_fraction must be in [0, 1)");
    const size_t start = static_cast<size_t>(transient_fraction * traj.size());
    const size_t n = traj.size() - start;
    if (n < 10) throw ValidationError("insufficient post-transient data (< 10 samples)");

    double sum_sin = 0.0, sum_cos = 0.0;
    for (size_t i = start; i < traj.size(); ++i) {
        sum_sin += std::sin(traj.states[i][2]);
        sum_cos += std::cos(traj.states[i][2]);
    }
    SurfaceDiagnostic diag;
    diag.phi_mean = wrap_2pi(std::atan2(sum_sin, sum_cos));
    for (size_t i = start; i < traj.size(); ++i)
        diag.phi_maxdev = std::max(diag.phi_maxdev,
                                   circular_distance(traj.states[i][2], diag.phi_mean));

    const size_t stride = std::max<size_t>(1, n / 4096);
    for (size_t i = start; i < traj.size(); i += stride)
        diag.samples.push_back(traj.wrapped(i));
    return diag;
}

void Trajectory::write_csv(const std::string& path, int sample_every) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "t,psi1,psi2,phi,psi1_wrapped,psi2_wrapped,phi_wrapped\n";
    char buf[256];
    for (size_t i = 0; i < size(); i += sample_every) {
        const auto& s = states[i];
        const auto w = wrapped(i);
        std::snprintf(buf, sizeof(buf),
                      "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      times[i], s[0], s[1], s[2], w[0], w[1], w[2]);
        out << buf;
    }
}

}  // namespace latwave
