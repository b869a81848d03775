#include <latwave/fhn.hpp>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <thread>
#include <vector>

namespace latwave {

std::pair<Grid, Grid> build_inhomogeneity(const InhomogeneityCoeffs& c,
                                          const GridSpec& grid) {
    const int n = grid.n;
    Grid g1(n, n), g2(n, n);
    for (int iy = 0; iy < n; ++iy) {
        const double y = grid.x(iy);
        for (int ix = 0; ix < n; ++ix) {
            const double x = grid.x(ix);
            const double first = std::cos(0.5 * x) + std::cos(0.5 * y);
            const double second =
                std::cos(0.5 * (3 * x - y)) + std::cos(0.5 * (x + 3 * y));
            g1(ix, iy) = c.A1 + c.B1 * first + c.C1 * second;
            g2(ix, iy) = c.A2 + c.B2 * first + c.C2 * second;
        }
    }
    return {std::move(g1), std::move(g2)};
}

Grid laplacian(const Grid& f, const GridSpec& grid) {
    const int n = grid.n;
    const double inv_dx2 = 1.0 / (grid.dx() * grid.dx());
    Grid out(n, n);
    for (int iy = 0; iy < n; ++iy) {
        const int ym = std::max(iy - 1, 0);       // Neumann: ghost = mirror cell
        const int yp = std::min(iy + 1, n - 1);
        for (int ix = 0; ix < n; ++ix) {
            const int xm = std::max(ix - 1, 0);
            const int xp = std::min(ix + 1, n - 1);
            out(ix, iy) = (f(xm, iy) + f(xp, iy) + f(ix, ym) + f(ix, yp) -
                           4.0 * f(ix, iy)) * inv_dx2;
        }
    }
    return out;
}

std::pair<double, double> rest_state() {
    double u = -1.0;  // real root of u^3 + 3u + 3.6 = 0
    for (int i = 0; i < 60; ++i) {
        const double f = u * u * u + 3.0 * u + 3.6;
        const double fp = 3.0 * u * u + 3.0;
        const double un = u - f / fp;
        if (un == u) break;
        u = un;
    }
    return {u, 2.0 * (u + 0.6)};
}

FhnSolver::FhnSolver(const GridSpec& grid, const InhomogeneityCoeffs& coeffs,
                     double dt, int n_threads)
    : grid_(grid), dt_(dt), n_threads_(std::max(1, n_threads)) {
    if (!(dt > 0.0)) throw ValidationError("dt must be > 0");
    if (dt > grid.diffusion_dt_limit())
        throw ValidationError("dt exceeds the diffusion stability bound 0.9*dx^2/4");
    auto [g1, g2] = build_inhomogeneity(coeffs, grid);
    g1_ = std::move(g1);
    g2_ = std::move(g2);
    un_.resize(grid.n, grid.n);
    vn_.resize(grid.n, grid.n);
}

void FhnSolver::step(FieldPair& fields) {
    const int n = grid_.n;
    const double inv_dx2 = 1.0 / (grid_.dx() * grid_.dx());
    const double dt = dt_;
    const Grid& u = fields.u;
    const Grid& v = fields.v;

    auto band = [&](int iy_begin, int iy_end) {
        constexpr double ru = 10.0 / 3.0;
        constexpr double rv = 3.0 / 10.0;
        for (int iy = iy_begin; iy < iy_end; ++iy) {
            const int ym = std::max(iy - 1, 0);
            const int yp = std::min(iy + 1, n - 1);
            const double* uc = u.col(iy).data();
            const double* ul = u.col(ym).data();
            const double* ur = u.col(yp).data();
            const double* vc = v.col(iy).data();
            const double* g1c = g1_.col(iy).data();
            const double* g2c = g2_.col(iy).data();
            double* uo = un_.col(iy).data();
            double* vo = vn_.col(iy).data();
            for (int ix = 0; ix < n; ++ix) {
                const int xm = std::max(ix - 1, 0);
                const int xp = std::min(ix + 1, n - 1);
                const double uu = uc[ix];
                const double lap =
                    (uc[xm] + uc[xp] + ul[ix] + ur[ix] - 4.0 * uu) * inv_dx2;
                uo[ix] = uu + dt * (lap + ru * (uu - uu * uu * uu / 3.0 - vc[ix]) +
                                    g1c[ix]);
                vo[ix] = vc[ix] + dt * (rv * (uu + 0.6 - 0.5 * vc[ix]) + g2c[ix]);
            }
        }
    };

    if (n_threads_ == 1) {
        band(0, n);
    } else {
        std::vector<std::thread> workers;
        const int chunk = (n + n_threads_ - 1) / n_threads_;
        for (int t = 0; t < n_threads_; ++t) {
            const int lo = t * chunk;
            const int hi = std::min(n, lo + chunk);
            if (lo < hi) workers.emplace_back(band, lo, hi);
        }
        for (auto& w : workers) w.join();
    }

    fields.u.swap(un_);
    fields.v.swap(vn_);
    fields.time += dt;

    const double umax = fields.u.abs().maxCoeff();
    const double vmax = fields.v.abs().maxCoeff();
    if (!(umax <= 5.0 && vmax <= 5.0) || !std::isfinite(umax) || !std::isfinite(vmax))
        throw NumericalError("field divergence guard tripped at t=" +
                             std::to_string(fields.time));
}

FieldPair uniform_fields(const GridSpec& grid, double u0, double v0) {
    FieldPair f;
    f.u = Grid::Constant(grid.n, grid.n, u0);
    f.v = Grid::Constant(grid.n, grid.n, v0);
    return f;
}

Grid rotate90(const Grid& f) {
    const int n = static_cast<int>(f.rows());
    Grid out(n, n);
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix)
            out(ix, iy) = f(iy, n - 1 - ix);
    return out;
}

FieldPair rotate90(const FieldPair& fields) {
    return {rotate90(fields.u), rotate90(fields.v), fields.time};
}

FieldPair translate_cells(const FieldPair& fields, int di, int dj) {
    const int n = static_cast<int>(fields.u.rows());
    const auto [ur, vr] = rest_state();
    FieldPair out;
    out.time = fields.time;
    out.u = Grid::Constant(n, n, ur);
    out.v = Grid::Constant(n, n, vr);
    for (int iy = 0; iy < n; ++iy) {
        const int sy = iy - dj;
        if (sy < 0 || sy >= n) continue;
        for (int ix = 0; ix < n; ++ix) {
            const int sx = ix - di;
            if (sx < 0 || sx >= n) continue;
            out.u(ix, iy) = fields.u(sx, sy);
            out.v(ix, iy) = fields.v(sx, sy);
        }
    }
    return out;
}

Grid symmetrize90(const Grid& f) {
    const Grid r1 = rotate90(f);
    const Grid r2 = rotate90(r1);
    const Grid r3 = rotate90(r2);
    return (f + r1 + r2 + r3) / 4.0;
}

void write_snapshot(const std::string& path, const FieldPair& fields) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    char header[32];
    std::memset(header, 0, sizeof(header));
    std::snprintf(header, sizeof(header), "FHN %d %.15g",
                  static_cast<int>(fields.u.rows()), fields.time);
    out.write(header, sizeof(header));
    out.write(reinterpret_cast<const char*>(fields.u.data()),
              static_cast<std::streamsize>(sizeof(double) * fields.u.size()));
    out.write(reinterpret_cast<const char*>(fields.v.data()),
              static_cast<std::streamsize>(sizeof(double) * fields.v.size()));
}

FieldPair read_snapshot(const std::string& path, GridSpec* grid_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char header[33] = {};
    in.read(header, 32);
    int n = 0;
    double time = 0.0;
    if (std::sscanf(header, "FHN %d %lg", &n, &time) != 2 || n < 1)
        throw std::runtime_error("bad snapshot header in " + path);
    FieldPair f;
    f.time = time;
    f.u.resize(n, n);
    f.v.resize(n, n);
    in.read(reinterpret_cast<char*>(f.u.data()),
            static_cast<std::streamsize>(sizeof(double) * f.u.size()));
    in.read(reinterpret_cast<char*>(f.v.data()),
            static_cast<std::streamsize>(sizeof(double) * f.v.size()));
    if (!in) throw std::runtime_error("truncated snapshot " + path);
    if (grid_out) *grid_out = GridSpec(n);
    return f;
}

}  // namespace latwave
