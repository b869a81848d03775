#include <latwave/tip.hpp>

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <unordered_map>

namespace latwave {

namespace {
constexpr double pi = std::numbers::pi;
}

// ---------------------------------------------------------------------------
// Contours and tips
// ---------------------------------------------------------------------------

std::vector<ContourSegment> extract_zero_contours(const Grid& f, const GridSpec& grid) {
    const int n = grid.n;
    std::vector<ContourSegment> segments;

    auto edge_point = [](const Vec2& p, double fp, const Vec2& q, double fq) {
        const double t = fp / (fp - fq);
        return Vec2(p + t * (q - p));
    };

    for (int iy = 0; iy < n - 1; ++iy) {
        for (int ix = 0; ix < n - 1; ++ix) {
            const double f00 = f(ix, iy), f10 = f(ix + 1, iy);
            const double f01 = f(ix, iy + 1), f11 = f(ix + 1, iy + 1);
            // zero counts as positive so flat regions emit nothing
            const bool s00 = f00 >= 0, s10 = f10 >= 0, s01 = f01 >= 0, s11 = f11 >= 0;
            const int pattern = (s00 ? 1 : 0) | (s10 ? 2 : 0) | (s01 ? 4 : 0) | (s11 ? 8 : 0);
            if (pattern == 0 || pattern == 15) continue;

            const Vec2 p00(grid.x(ix), grid.x(iy)), p10(grid.x(ix + 1), grid.x(iy));
            const Vec2 p01(grid.x(ix), grid.x(iy + 1)), p11(grid.x(ix + 1), grid.x(iy + 1));

            Vec2 bottom, right, top, left;
            if (s00 != s10) bottom = edge_point(p00, f00, p10, f10);
            if (s10 != s11) right = edge_point(p10, f10, p11, f11);
            if (s01 != s11) top = edge_point(p01, f01, p11, f11);
            if (s00 != s01) left = edge_point(p00, f00, p01, f01);

            auto emit = [&](const Vec2& a, const Vec2& b) {
                segments.push_back({a, b, ix, iy});
            };

            switch (pattern) {
                case 1: case 14: emit(bottom, left); break;
                case 2: case 13: emit(bottom, right); break;
                case 4: case 11: emit(left, top); break;
                case 8: case 7: emit(right, top); break;
                case 3: case 12: emit(left, right); break;
                case 5: case 10: emit(bottom, top); break;
                case 6: case 9: {
                    // saddle: resolve pairing by the center-value sign
                    const double center = 0.25 * (f00 + f10 + f01 + f11);
                    const bool center_pos = center >= 0;
                    const bool diag00 = (pattern == 9);  // s00 == s11 == true
                    if (diag00 == center_pos) {
                        emit(bottom, right);
                        emit(left, top);
                    } else {
                        emit(bottom, left);
                        emit(right, top);
                    }
                    break;
                }
                default: break;
            }
        }
    }
    return segments;
}

std::optional<Vec2> find_tip(const Grid& u, const Grid& v, const GridSpec& grid,
                             std::optional<Vec2> previous) {
    const auto useg = extract_zero_contours(u, grid);
    const auto vseg = extract_zero_contours(v, grid);
    if (useg.empty() || vseg.empty()) return std::nullopt;

    std::unordered_map<long, std::vector<size_t>> by_cell;
    by_cell.reserve(useg.size() * 2);
    for (size_t i = 0; i < useg.size(); ++i)
        by_cell[static_cast<long>(useg[i].cell_iy) * grid.n + useg[i].cell_ix].push_back(i);

    const Vec2 ref = previous.value_or(Vec2::Zero());
    std::optional<Vec2> best;
    double best_d = std::numeric_limits<double>::infinity();
    constexpr double eps = 1e-9;
    for (const auto& vs : vseg) {
        const auto it = by_cell.find(static_cast<long>(vs.cell_iy) * grid.n + vs.cell_ix);
        if (it == by_cell.end()) continue;
        for (size_t i : it->second) {
            const auto& us = useg[i];
            // bounding boxes already coincide (same cell); solve the 2x2 system
            const Vec2 d1 = us.b - us.a, d2 = vs.b - vs.a;
            Mat2 A;
            A << d1.x(), -d2.x(), d1.y(), -d2.y();
            const double det = A.determinant();
            if (std::abs(det) < 1e-300) continue;
            const Vec2 ts = A.inverse() * (vs.a - us.a);
            if (ts.x() < -eps || ts.x() > 1 + eps || ts.y() < -eps || ts.y() > 1 + eps)
                continue;
            const Vec2 p = us.a + ts.x() * d1;
            const double d = (p - ref).norm();
            if (d < best_d) {
                best_d = d;
                best = p;
            }
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

void TipTrajectory::append(double time, const Vec2& p) {
    if (!t.empty() && time <= t.back())
        throw ValidationError("tip samples must have strictly increasing time");
    t.push_back(time);
    xy.push_back(p);
}

Vec2 TipTrajectory::interpolate(double time) const {
    if (t.empty()) throw ValidationError("empty tip trajectory");
    if (time <= t.front()) return xy.front();
    if (time >= t.back()) return xy.back();
    const auto it = std::upper_bound(t.begin(), t.end(), time);
    const size_t i = static_cast<size_t>(it - t.begin());
    const double w = (time - t[i - 1]) / (t[i] - t[i - 1]);
    return xy[i - 1] + w * (xy[i] - xy[i - 1]);
}

void TipTrajectory::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "t,x,y\n";
    char buf[128];
    for (size_t i = 0; i < size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", t[i], xy[i].x(), xy[i].y());
        out << buf;
    }
}

TipTrajectory TipTrajectory::read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    TipTrajectory traj;
    std::string line;
    if (!std::getline(in, line) || line.rfind("t,x,y", 0) != 0)
        throw std::runtime_error("bad tip CSV header in " + path);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double tt, x, y;
        if (std::sscanf(line.c_str(), "%lg,%lg,%lg", &tt, &x, &y) != 3)
            throw std::runtime_error("bad tip CSV row: " + line);
        traj.append(tt, Vec2(x, y));
    }
    if (traj.size() >= 2) traj.sample_dt = traj.t[1] - traj.t[0];
    return traj;
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

namespace {

// Least-squares (Kasa) circle fit.
std::pair<Vec2, double> fit_circle(const std::vector<Vec2>& pts, size_t begin, size_t end) {
    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d atb = Eigen::Vector3d::Zero();
    for (size_t i = begin; i < end; ++i) {
        const Eigen::Vector3d row(pts[i].x(), pts[i].y(), 1.0);
        ata += row * row.transpose();
        atb += row * (pts[i].squaredNorm());
    }
    const Eigen::Vector3d c = ata.ldlt().solve(atb);
    const Vec2 center(c[0] / 2, c[1] / 2);
    const double r2 = c[2] + center.squaredNorm();
    return {center, r2 > 0 ? std::sqrt(r2) : 0.0};
}

// Upward crossing times of series - mean(series).
std::vector<double> mean_crossings(const std::vector<double>& times,
                                   const std::vector<double>& series) {
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(series.size());
    std::vector<double> crossings;
    for (size_t i = 1; i < series.size(); ++i) {
        const double a = series[i - 1] - mean, b = series[i] - mean;
        if (a < 0.0 && b >= 0.0) {
            const double w = a / (a - b);
            crossings.push_back(times[i - 1] + w * (times[i] - times[i - 1]));
        }
    }
    return crossings;
}

std::optional<double> estimate_period(const std::vector<double>& times,
                                      const std::vector<Vec2>& pts) {
    std::vector<double> xs(pts.size()), ys(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) {
        xs[i] = pts[i].x();
        ys[i] = pts[i].y();
    }
    for (const auto& series : {xs, ys}) {
        auto crossings = mean_crossings(times, series);
        if (crossings.size() >= 3) {
            std::vector<double> diffs;
            for (size_t i = 1; i < crossings.size(); ++i)
                diffs.push_back(crossings[i] - crossings[i - 1]);
            std::nth_element(diffs.begin(), diffs.begin() + diffs.size() / 2, diffs.end());
            return diffs[diffs.size() / 2];
        }
    }
    return std::nullopt;
}

}  // namespace

MotionClassification classify(const TipTrajectory& traj, double transient_fraction,
                              const ClassifyOptions& opts) {
    if (!(transient_fraction >= 0.0 && transient_fraction < 1.0))
        throw ValidationError("transient_fraction must be in [0, 1)");
    const size_t start = static_cast<size_t>(transient_fraction * traj.size());
    if (traj.size() - start < 200)
        throw ValidationError("classification needs at least 200 post-transient samples");

    std::vector<double> times(traj.t.begin() + start, traj.t.end());
    std::vector<Vec2> pts(traj.xy.begin() + start, traj.xy.end());
    const size_t n = pts.size();
    const double sample_dt = (times.back() - times.front()) / (n - 1);

    MotionClassification cls;

    auto drift_check = [&]() -> bool {
        const double net = (pts.back() - pts.front()).norm();
        double path = 0.0;
        for (size_t i = 1; i < n; ++i) path += (pts[i] - pts[i - 1]).norm();
        if (path == 0.0 || net < opts.drift_threshold * path) return false;
        // least-squares velocity
        double t_mean = 0.0;
        Vec2 p_mean = Vec2::Zero();
        for (size_t i = 0; i < n; ++i) {
            t_mean += times[i];
            p_mean += pts[i];
        }
        t_mean /= n;
        p_mean /= static_cast<double>(n);
        double denom = 0.0;
        Vec2 numer = Vec2::Zero();
        for (size_t i = 0; i < n; ++i) {
            denom += (times[i] - t_mean) * (times[i] - t_mean);
            numer += (times[i] - t_mean) * (pts[i] - p_mean);
        }
        cls.kind = MotionClassification::Kind::LinearDrift;
        cls.drift_velocity = numer / denom;
        return true;
    };

    const auto period = estimate_period(times, pts);
    if (!period || *period <= 2 * sample_dt) {
        if (!drift_check()) cls.kind = MotionClassification::Kind::Indeterminate;
        return cls;
    }

    const size_t w = std::max<size_t>(4, static_cast<size_t>(std::lround(*period / sample_dt)));
    if (n < 2 * w) {
        if (!drift_check()) cls.kind = MotionClassification::Kind::Indeterminate;
        return cls;
    }

    // sliding one-period circle fits
    std::vector<Vec2> centers;
    std::vector<double> center_times, radii;
    const size_t hop = std::max<size_t>(1, w / 4);
    for (size_t b = 0; b + w <= n; b += hop) {
        const auto [c, r] = fit_circle(pts, b, b + w);
        centers.push_back(c);
        radii.push_back(r);
        center_times.push_back(0.5 * (times[b] + times[b + w - 1]));
    }
    Vec2 c_mean = Vec2::Zero();
    double r_mean = 0.0;
    for (size_t i = 0; i < centers.size(); ++i) {
        c_mean += centers[i];
        r_mean += radii[i];
    }
    c_mean /= static_cast<double>(centers.size());
    r_mean /= static_cast<double>(radii.size());
    cls.mean_radius = r_mean;

    double spread = 0.0;
    for (const auto& c : centers) spread = std::max(spread, (c - c_mean).norm());

    if (spread < opts.anchored_threshold * r_mean) {
        cls.kind = MotionClassification::Kind::AnchoredRotation;
        cls.anchor = c_mean;
        cls.primary_period = *period;
        return cls;
    }

    // center path: bounded loop => meander
    double c_net = (centers.back() - centers.front()).norm();
    double c_path = 0.0;
    for (size_t i = 1; i < centers.size(); ++i)
        c_path += (centers[i] - centers[i - 1]).norm();
    double winding = 0.0;
    for (size_t i = 1; i < centers.size(); ++i) {
        const Vec2 a = centers[i - 1] - c_mean, b = centers[i] - c_mean;
        if (a.norm() < 1e-12 || b.norm() < 1e-12) continue;
        winding += std::atan2(a.x() * b.y() - a.y() * b.x(), a.dot(b));
    }
    if (c_path > 0.0 && c_net < 0.5 * c_path && std::abs(winding) >= pi) {
        cls.kind = MotionClassification::Kind::Meander;
        cls.anchor = c_mean;
        cls.primary_period = *period;
        cls.secondary_period =
            2 * pi * (center_times.back() - center_times.front()) / std::abs(winding);
        return cls;
    }

    if (drift_check()) return cls;
    cls.kind = MotionClassification::Kind::Indeterminate;
    return cls;
}

double st_symmetry_test(const TipTrajectory& traj, const Vec2& anchor,
                        double quarter_period) {
    if (traj.size() < 2) throw ValidationError("tip trajectory too short");
    const double t0 = traj.t.front(), t1 = traj.t.back();
    if (t1 - t0 < std::abs(quarter_period))
        throw ValidationError("trajectory shorter than one quarter period");
    const Mat2 rot = rotation(pi / 2);
    double sum = 0.0;
    long count = 0;
    for (size_t i = 0; i < traj.size(); ++i) {
        const double target_t = traj.t[i] + quarter_period;
        if (target_t < t0 || target_t > t1) continue;
        const Vec2 rotated = rot * (traj.xy[i] - anchor) + anchor;
        sum += (rotated - traj.interpolate(target_t)).norm();
        ++count;
    }
    if (count == 0) throw ValidationError("no overlapping samples for the symmetry test");
    return sum / static_cast<double>(count);
}

std::string classification_to_json(const MotionClassification& c,
                                   double lattice_spacing) {
    nlohmann::json j;
    switch (c.kind) {
        case MotionClassification::Kind::AnchoredRotation: j["kind"] = "anchored_rotation"; break;
        case MotionClassification::Kind::Meander: j["kind"] = "meander"; break;
        case MotionClassification::Kind::LinearDrift: j["kind"] = "linear_drift"; break;
        case MotionClassification::Kind::Indeterminate: j["kind"] = "indeterminate"; break;
    }
    j["anchor"] = nullptr;
    j["primary_period"] = nullptr;
    j["secondary_period"] = nullptr;
    j["drift_velocity"] = nullptr;
    j["lattice_distance"] = nullptr;
    j["dual_lattice_distance"] = nullptr;
    if (c.anchor) {
        j["anchor"] = {c.anchor->x(), c.anchor->y()};
        const LatticeSpec lattice(lattice_spacing);
        const LatticeSpec dual(lattice_spacing,
                               Vec2(lattice_spacing / 2, lattice_spacing / 2));
        j["lattice_distance"] = nearest_lattice_point(lattice, *c.anchor).distance;
        j["dual_lattice_distance"] = nearest_lattice_point(dual, *c.anchor).distance;
    }
    if (c.primary_period) j["primary_period"] = *c.primary_period;
    if (c.secondary_period) j["secondary_period"] = *c.secondary_period;
    if (c.drift_velocity) j["drift_velocity"] = {c.drift_velocity->x(), c.drift_velocity->y()};
    j["mean_radius"] = c.mean_radius;
    j["st_symmetric"] = c.st_symmetric;
    j["st_residual"] = c.st_residual;
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// Spiral experiment drivers
// ---------------------------------------------------------------------------

FieldPair spawn_spiral(const GridSpec& grid, const SpawnOptions& opts) {
    const auto [ur, vr] = rest_state();
    FieldPair fields = uniform_fields(grid, ur, vr);
    for (int iy = 0; iy < grid.n; ++iy) {
        const double y = grid.x(iy);
        for (int ix = 0; ix < grid.n; ++ix) {
            const double x = grid.x(ix);
            if (y < 0) fields.u(ix, iy) = opts.u_excited;
            if (x < 0) fields.v(ix, iy) = vr + opts.v_elevated;
        }
    }
    if (opts.settle_time <= 0.0) return fields;  // raw broken-wave data

    FhnSolver solver(grid, InhomogeneityCoeffs{}, opts.dt, opts.n_threads);
    const long nsteps = std::lround(opts.settle_time / opts.dt);
    solver.advance(fields, nsteps, 0, [](const FieldPair&, long) {});

    // require a persistent tip over 50 consecutive samples
    std::optional<Vec2> tip;
    const long verify_stride = std::max<long>(1, std::lround(0.1 / opts.dt));
    for (int s = 0; s < 50; ++s) {
        solver.advance(fields, verify_stride, 0, [](const FieldPair&, long) {});
        tip = find_tip(fields.u, fields.v, grid, tip);
        if (!tip)
            throw SpawnError("no rotating spiral after settling: tip lost at t=" +
                             std::to_string(fields.time));
    }
    return fields;
}

RunResult run_with_tips(FieldPair fields, const InhomogeneityCoeffs& coeffs,
                        const GridSpec& grid, const RunOptions& opts) {
    FhnSolver solver(grid, coeffs, opts.dt, opts.n_threads);
    const long nsteps = std::lround(opts.t_end / opts.dt);

    RunResult result;
    result.tips.sample_dt = opts.dt * opts.sample_every;

    std::optional<Vec2> last_tip = opts.tip_seed;
    double last_tip_time = fields.time;
    int gap = 0;
    long snapshot_counter = 0;

    auto on_sample = [&](const FieldPair& f, long) {
        const auto tip = find_tip(f.u, f.v, grid, last_tip);
        if (!tip) {
            if (++gap > opts.max_tip_gap)
                throw TipLostError("tip lost for more than " +
                                   std::to_string(opts.max_tip_gap) +
                                   " samples at t=" + std::to_string(f.time));
            return;
        }
        if (gap > 0 && last_tip) {
            // fill the gap linearly between the last good sample and this one
            const double t0 = last_tip_time, t1 = f.time;
            for (int k = 1; k <= gap; ++k) {
                const double tm = t0 + (t1 - t0) * k / (gap + 1);
                const double w = (tm - t0) / (t1 - t0);
                result.tips.append(tm, *last_tip + w * (*tip - *last_tip));
            }
        }
        gap = 0;
        result.tips.append(f.time, *tip);
        last_tip = tip;
        last_tip_time = f.time;
    };

    auto on_step = [&](const FieldPair& f, long k) {
        on_sample(f, k);
        if (opts.snapshot_every > 0 && !opts.snapshot_prefix.empty() &&
            k % opts.snapshot_every == 0) {
            char name[64];
            std::snprintf(name, sizeof(name), "_%06ld.snap", snapshot_counter++);
            write_snapshot(opts.snapshot_prefix + name, f);
        }
    };

    solver.advance(fields, nsteps, opts.sample_every, on_step, true);
    result.final_fields = std::move(fields);
    return result;
}

}  // namespace latwave
