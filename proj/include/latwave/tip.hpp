#pragma once

#include <latwave/fhn.hpp>
#include <latwave/se2.hpp>

#include <optional>
#include <string>
#include <vector>

namespace latwave {

struct TipLostError : NumericalError {
    using NumericalError::NumericalError;
};
struct SpawnError : NumericalError {
    using NumericalError::NumericalError;
};

/// One zero-level segment, confined to its marching-squares cell.
struct ContourSegment {
    Vec2 a, b;
    int cell_ix = 0, cell_iy = 0;
};

/// Marching squares with linear edge interpolation; ambiguous (saddle)
/// cells are split by the sign of the cell-center average.
std::vector<ContourSegment> extract_zero_contours(const Grid& f, const GridSpec& grid);

/// Intersection of the u = 0 and v = 0 contours nearest to `previous`
/// (or to the domain center).  Empty when the contours do not cross.
std::optional<Vec2> find_tip(const Grid& u, const Grid& v, const GridSpec& grid,
                             std::optional<Vec2> previous = std::nullopt);

struct TipTrajectory {
    std::vector<double> t;
    std::vector<Vec2> xy;
    double sample_dt = 0.0;

    size_t size() const { return t.size(); }
    void append(double time, const Vec2& p);
    Vec2 interpolate(double time) const;

    void write_csv(const std::string& path) const;
    static TipTrajectory read_csv(const std::string& path);
};

struct MotionClassification {
    enum class Kind { AnchoredRotation, Meander, LinearDrift, Indeterminate };
    Kind kind = Kind::Indeterminate;
    std::optional<Vec2> anchor;
    std::optional<double> primary_period;
    std::optional<double> secondary_period;
    std::optional<Vec2> drift_velocity;
    double mean_radius = 0.0;
    bool st_symmetric = false;
    double st_residual = 0.0;
};

struct ClassifyOptions {
    double anchored_threshold = 0.05;  ///< center wobble / orbit radius
    double drift_threshold = 0.5;      ///< net displacement / path length
};

/// Discard the leading transient, estimate the rotation period from mean
/// crossings, slide a one-period circle fit, and sort the center motion
/// into anchored rotation, meander, or linear drift.
MotionClassification classify(const TipTrajectory& traj, double transient_fraction,
                              const ClassifyOptions& opts = {});

/// Mean distance between the quarter-turn of the path about `anchor` and
/// the path `quarter_period` later (negative values test the opposite
/// chirality).  Small residual = lattice-point anchoring with residual
/// spatio-temporal symmetry.
double st_symmetry_test(const TipTrajectory& traj, const Vec2& anchor,
                        double quarter_period);

std::string classification_to_json(const MotionClassification& c,
                                   double lattice_spacing);

// ---------------------------------------------------------------------------
// Spiral experiment drivers
// ---------------------------------------------------------------------------

struct SpawnOptions {
    double settle_time = 200.0;
    double dt = 0.01;
    int n_threads = 1;
    double u_excited = 2.0;
    double v_elevated = 1.0;  ///< offset above rest in the blocking half-plane
};

/// Cross-field stimulus (excited u for y < 0, refractory v for x < 0),
/// settled with zero inhomogeneity until a rotating spiral has formed.
/// Verifies a persistent tip over 50 consecutive samples.
FieldPair spawn_spiral(const GridSpec& grid, const SpawnOptions& opts = {});

struct RunOptions {
    double dt = 0.01;
    double t_end = 100.0;
    long sample_every = 50;
    int n_threads = 1;
    long snapshot_every = 0;           ///< steps; 0 = none
    std::string snapshot_prefix;
    int max_tip_gap = 5;               ///< consecutive lost samples tolerated
    std::optional<Vec2> tip_seed;      ///< first search near here (default: origin)
};

struct RunResult {
    TipTrajectory tips;
    FieldPair final_fields;
};

/// Advance the reaction-diffusion state while streaming tip samples; short
/// tip losses are gap-filled by linear interpolation.
RunResult run_with_tips(FieldPair fields, const InhomogeneityCoeffs& coeffs,
                        const GridSpec& grid, const RunOptions& opts);

}  // namespace latwave
