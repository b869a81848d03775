#pragma once

#include <latwave/center_bundle.hpp>
#include <latwave/perturbation.hpp>

#include <complex>
#include <optional>

namespace latwave {

struct ResonanceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The phi-averaged planar field on T^2.  Primary representation is an
/// exact trig table; when built from a source (H, W) a trapezoid
/// evaluator over phi is kept as an independent cross-check.
class AveragedField {
public:
    AveragedField() = default;
    AveragedField(TrigPoly c1, TrigPoly c2)
        : c1_(std::move(c1)), c2_(std::move(c2)) {}

    const TrigPoly& component1() const { return c1_; }
    const TrigPoly& component2() const { return c2_; }

    Vec2 eval(const Vec2& psi) const;
    Mat2 jacobian(const Vec2& psi) const;          // exact from the trig table
    double divergence(const Vec2& psi) const;      // trace of the Jacobian

    bool has_quadrature_source() const { return static_cast<bool>(source_); }
    Vec2 eval_quadrature(const Vec2& psi) const;   // trapezoid over phi
    int quadrature_order() const { return quadrature_order_; }

    struct Source {
        TrigPoly h1, h2;
        Vec2 W;
    };
    void set_source(Source s, int order) {
        source_ = std::move(s);
        quadrature_order_ = order;
    }

private:
    TrigPoly c1_, c2_;
    std::optional<Source> source_;
    int quadrature_order_ = 256;
};

/// Average of R_phi H(Psi + J R_phi W, phi) over one turn of phi, as an
/// exact trig table.  The shift by J R_phi W contributes Bessel-function
/// coefficients; W = 0 reduces to picking the constant phi-harmonic.
AveragedField average_rotating_frame(const TrigPoly& h1, const TrigPoly& h2,
                                     const Vec2& W, int quadrature_order = 256);

/// Build the co-rotating first-order field from the original system:
/// W = V/omega and H = (F^Psi - W F^phi)/omega at epsilon = 0.
AveragedField average_over_phi(const PerturbationSpec& spec, const Vec2& V,
                               double omega);

struct EquilibriumReport {
    Vec2 psi_star = Vec2::Zero();
    std::complex<double> ev1, ev2;
    bool stable = false;
    bool at_origin = false;
    std::array<Vec2, 4> conjugates;  ///< J^k psi_star wrapped to [0, 2pi)^2
};

struct EquilibriaResult {
    std::vector<EquilibriumReport> points;  ///< sorted by torus coordinates
    bool degenerate = false;
    std::string warning;
};

/// Newton from a 16x16 seed grid; roots deduped at torus distance 1e-6.
EquilibriaResult find_equilibria(const AveragedField& field);

struct PeriodicOrbitReport {
    std::vector<Vec2> samples;  ///< one period, uniform in time, 4 | size
    double period = 0.0;
    double beta = 0.0;          ///< mean divergence over the cycle
    bool stable = false;
    int st_sign = 0;            ///< +1 / -1 quarter-shift symmetry, 0 = none
};

struct OrbitSearchOptions {
    double dt = 1e-3;
    double transient_time = 200.0;
    double max_time = 2000.0;
    double return_tol = 1e-8;
    int max_crossings = 400;
};

/// Follow the flow of the averaged field from `seed`, detect a limit cycle
/// with a Poincare section through the orbit, and characterize it.
std::optional<PeriodicOrbitReport> find_periodic_orbit(
    const AveragedField& field, const Vec2& seed, const OrbitSearchOptions& opts = {});

/// M(phi) = mean of F^phi over the psi-torus: only psi-independent terms
/// survive.  Returned as a trig polynomial in phi.
TrigPoly compute_M(const PerturbationSpec& spec);

struct MZero {
    double phi_star = 0.0;
    double mu = 0.0;       ///< M'(phi_star)
    bool transverse = true;
};

/// All zeros of M in [0, 2pi): sign-change bracketing on 1024 samples plus
/// Newton, and tangential zeros located through M'.
std::vector<MZero> find_M_zeros(const TrigPoly& M);

struct ResonanceInfo {
    double margin = 0.0;
    Eigen::Vector2i worst_mode = Eigen::Vector2i::Zero();
};

/// min |n . R_phi* V| over the nonzero psi modes of the spec, closed under
/// the quarter-turn mode map.  Finite surrogate of the small-divisor bound.
ResonanceInfo resonance_margin(const Vec2& V, double phi_star,
                               const PerturbationSpec& spec);

/// Same, but throws ResonanceError (naming the mode) when margin < 1e-9.
ResonanceInfo resonance_check(const Vec2& V, double phi_star,
                              const PerturbationSpec& spec);

/// Solve D_Y(psi) . w = rhs(psi) termwise for zero-mean trig rhs on T^2.
TrigPoly solve_cohomological(const TrigPoly& rhs, const Vec2& w);

struct TravellingWaveReport {
    double phi_star = 0.0;
    double mu = 0.0;
    bool stable = false;
    bool transverse = true;
    double resonance_margin = 0.0;
    Eigen::Vector2i worst_mode = Eigen::Vector2i::Zero();
    Vec2 alpha_beta = Vec2::Zero();  ///< R_phi* V
};

struct Prediction {
    std::string mode;  ///< "rotating" | "travelling" | "none"
    std::string note;
    double guard_ratio = 0.0;  ///< omega / (eps * max |F^phi|)
    std::vector<EquilibriumReport> anchors;
    std::vector<PeriodicOrbitReport> meander_orbits;
    std::vector<TravellingWaveReport> travelling;
};

/// First-order outcome prediction: anchored/meandering waves via the
/// averaged field when the rotation dominates, travelling-wave tori via
/// M when it does not, and an explicit no-prediction band in between.
Prediction predict(const SystemParams& params);

std::string prediction_to_json(const Prediction& p);

}  // namespace latwave
