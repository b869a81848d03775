#pragma once

#include <latwave/center_bundle.hpp>
#include <latwave/se2.hpp>

#include <string>
#include <utility>

namespace latwave {

using Grid = Eigen::ArrayXXd;  // (ix, iy): x index contiguous, cell centers

/// Square domain [-half_width, half_width]^2 sampled at n x n cell centers
/// x_i = -half_width + (i + 0.5) dx, so a quarter turn about the origin maps
/// the grid onto itself.
struct GridSpec {
    int n = 200;
    double half_width = 10.0 * std::numbers::pi;

    GridSpec() = default;
    explicit GridSpec(int n_, double half_width_ = 10.0 * std::numbers::pi)
        : n(n_), half_width(half_width_) {
        if (n < 50) throw ValidationError("grid must have n >= 50 points per side");
    }

    double dx() const { return 2.0 * half_width / n; }
    double x(int i) const { return -half_width + (i + 0.5) * dx(); }
    double diffusion_dt_limit() const { return 0.9 * dx() * dx() / 4.0; }
};

struct FieldPair {
    Grid u, v;
    double time = 0.0;
};

/// Additive source amplitudes; the small-parameter factor is already folded
/// into A, B, C as in the experiment tables.
struct InhomogeneityCoeffs {
    double A1 = 0, B1 = 0, C1 = 0;
    double A2 = 0, B2 = 0, C2 = 0;

    bool all_zero() const {
        return A1 == 0 && B1 == 0 && C1 == 0 && A2 == 0 && B2 == 0 && C2 == 0;
    }
};

/// g_k = A_k + B_k (cos(x/2) + cos(y/2)) + C_k (cos((3x-y)/2) + cos((x+3y)/2)),
/// invariant under the quarter-turn about the origin and 4*pi translations.
std::pair<Grid, Grid> build_inhomogeneity(const InhomogeneityCoeffs& coeffs,
                                          const GridSpec& grid);

/// 5-point Laplacian with Neumann ghost reflection.
Grid laplacian(const Grid& f, const GridSpec& grid);

/// Homogeneous rest state: the real root of u^3 + 3u + 3.6 = 0 and
/// v = 2(u + 0.6).
std::pair<double, double> rest_state();

/// Explicit-Euler stepper for
///   u_t = lap u + (10/3)(u - u^3/3 - v) + g1
///   v_t = (3/10)(u + 0.6 - v/2) + g2
/// The update is Jacobi-style: each cell depends only on the previous time
/// level, so row-band threading is bitwise reproducible.
class FhnSolver {
public:
    FhnSolver(const GridSpec& grid, const InhomogeneityCoeffs& coeffs, double dt,
              int n_threads = 1);

    const GridSpec& grid() const { return grid_; }
    double dt() const { return dt_; }
    const Grid& g1() const { return g1_; }
    const Grid& g2() const { return g2_; }

    /// One time step; throws NumericalError when the divergence guard
    /// |u|, |v| <= 5 trips.
    void step(FieldPair& fields);

    /// `nsteps` steps; `on_sample(fields, step_index)` runs every
    /// `sample_every` steps (and once at entry when `sample_at_start`).
    template <typename Callback>
    void advance(FieldPair& fields, long nsteps, long sample_every, Callback&& on_sample,
                 bool sample_at_start = false) {
        if (sample_at_start) on_sample(fields, 0L);
        for (long k = 1; k <= nsteps; ++k) {
            step(fields);
            if (sample_every > 0 && k % sample_every == 0) on_sample(fields, k);
        }
    }

private:
    GridSpec grid_;
    double dt_;
    int n_threads_;
    Grid g1_, g2_;
    Grid un_, vn_;
};

FieldPair uniform_fields(const GridSpec& grid, double u0, double v0);

/// Quarter-turn rotation of the sample grid about the origin.
Grid rotate90(const Grid& f);
FieldPair rotate90(const FieldPair& fields);

/// Shift by whole cells; exposed cells are filled with the rest state.
FieldPair translate_cells(const FieldPair& fields, int di, int dj);

/// Average of the four quarter-turn images.
Grid symmetrize90(const Grid& f);

/// Raw snapshot: 32-byte text header ("FHN <n> <time>") then u and v as
/// little-endian doubles, x index fastest.
void write_snapshot(const std::string& path, const FieldPair& fields);
FieldPair read_snapshot(const std::string& path, GridSpec* grid_out = nullptr);

}  // namespace latwave
