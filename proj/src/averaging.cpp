#include <latwave/averaging.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace latwave {

namespace {

constexpr double pi = std::numbers::pi;

double bessel_j(int k, double r) {
    if (r == 0.0) return k == 0 ? 1.0 : 0.0;
    return std::cyl_bessel_j(static_cast<double>(k), r);
}

struct Harmonic {
    int k;
    Factor kind;  // Sin or Cos (k may be 0 only for Cos)
    double w;
};

// Expand rf(phi) * pf(m phi) into harmonics, rf in {cos, sin} at mode 1.
std::vector<Harmonic> product_to_sum(Factor rf, Factor pf, int m) {
    std::vector<Harmonic> out;
    if (pf == Factor::One) {
        out.push_back({1, rf, 1.0});
        return out;
    }
    if (rf == Factor::Cos && pf == Factor::Cos) {
        out.push_back({m + 1, Factor::Cos, 0.5});
        out.push_back({m - 1, Factor::Cos, 0.5});
    } else if (rf == Factor::Cos && pf == Factor::Sin) {
        out.push_back({m + 1, Factor::Sin, 0.5});
        if (m - 1 > 0) out.push_back({m - 1, Factor::Sin, 0.5});
    } else if (rf == Factor::Sin && pf == Factor::Cos) {
        out.push_back({m + 1, Factor::Sin, 0.5});
        if (m - 1 > 0) out.push_back({m - 1, Factor::Sin, -0.5});
    } else {
        out.push_back({m - 1, Factor::Cos, 0.5});
        out.push_back({m + 1, Factor::Cos, -0.5});
    }
    return out;
}

enum class DeltaPart { CosDelta, SinDelta };

// Mean over phi of harmonic(k phi) * {cos, sin}(r sin(phi + chi)).
double bessel_weight(const Harmonic& h, DeltaPart part, double r, double chi) {
    const bool even = (h.k % 2) == 0;
    if (part == DeltaPart::CosDelta) {
        if (!even) return 0.0;
        if (h.kind == Factor::Cos) return std::cos(h.k * chi) * bessel_j(h.k, r);
        return h.k == 0 ? 0.0 : -std::sin(h.k * chi) * bessel_j(h.k, r);
    }
    if (even) return 0.0;
    if (h.kind == Factor::Cos) return std::sin(h.k * chi) * bessel_j(h.k, r);
    return std::cos(h.k * chi) * bessel_j(h.k, r);
}

}  // namespace

Vec2 AveragedField::eval(const Vec2& psi) const {
    return {c1_.eval(psi, 0.0), c2_.eval(psi, 0.0)};
}

Mat2 AveragedField::jacobian(const Vec2& psi) const {
    Mat2 j = Mat2::Zero();
    auto accumulate = [&psi](const TrigPoly& p, double& dx, double& dy) {
        for (const auto& t : p.terms()) {
            if (t.psi_kind == Factor::One) continue;
            const double arg = t.n1 * psi.x() + t.n2 * psi.y();
            const double d = (t.psi_kind == Factor::Sin) ? t.coeff * std::cos(arg)
                                                         : -t.coeff * std::sin(arg);
            dx += d * t.n1;
            dy += d * t.n2;
        }
    };
    accumulate(c1_, j(0, 0), j(0, 1));
    accumulate(c2_, j(1, 0), j(1, 1));
    return j;
}

double AveragedField::divergence(const Vec2& psi) const {
    return jacobian(psi).trace();
}

Vec2 AveragedField::eval_quadrature(const Vec2& psi) const {
    if (!source_) throw ValidationError("averaged field has no quadrature source");
    const int n = quadrature_order_;
    Vec2 acc = Vec2::Zero();
    for (int j = 0; j < n; ++j) {
        const double phi = two_pi * j / n;
        const Vec2 shifted = psi + apply_j(rotation(phi) * source_->W);
        const Vec2 h(source_->h1.eval(shifted, phi), source_->h2.eval(shifted, phi));
        acc += rotation(phi) * h;
    }
    return acc / n;
}

AveragedField average_rotating_frame(const TrigPoly& h1, const TrigPoly& h2,
                                     const Vec2& W, int quadrature_order) {
    TrigPoly out[2];
    const TrigPoly* src[2] = {&h1, &h2};
    // R_phi rows: G1 picks (+cos, -sin), G2 picks (+sin, +cos).
    const Factor row_kind[2][2] = {{Factor::Cos, Factor::Sin}, {Factor::Sin, Factor::Cos}};
    const double row_sign[2][2] = {{1.0, -1.0}, {1.0, 1.0}};

    for (int s = 0; s < 2; ++s) {
        const TrigPoly canon = src[s]->canonicalized();
        for (const TrigTerm& t : canon.terms()) {
            // shift argument: n . (J R_phi W) = a sin(phi) + b cos(phi)
            const double a = t.n1 * W.x() + t.n2 * W.y();
            const double b = t.n1 * W.y() - t.n2 * W.x();
            const double r = std::hypot(a, b);
            const double chi = (r == 0.0) ? 0.0 : std::atan2(b, a);
            for (int d = 0; d < 2; ++d) {
                const auto harmonics = product_to_sum(row_kind[d][s], t.phi_kind, t.phi_mode);
                for (DeltaPart part : {DeltaPart::CosDelta, DeltaPart::SinDelta}) {
                    Factor psi_kind;
                    double psi_sign = 1.0;
                    if (t.psi_kind == Factor::One) {
                        if (part == DeltaPart::SinDelta) continue;
                        psi_kind = Factor::One;
                    } else if (t.psi_kind == Factor::Cos) {
                        psi_kind = (part == DeltaPart::CosDelta) ? Factor::Cos : Factor::Sin;
                        if (part == DeltaPart::SinDelta) psi_sign = -1.0;
                    } else {
                        psi_kind = (part == DeltaPart::CosDelta) ? Factor::Sin : Factor::Cos;
                    }
                    double integral = 0.0;
                    for (const auto& h : harmonics)
                        integral += h.w * bessel_weight(h, part, r, chi);
                    const double coeff = t.coeff * row_sign[d][s] * psi_sign * integral;
                    if (coeff == 0.0) continue;
                    TrigTerm o;
                    o.coeff = coeff;
                    o.phi_kind = Factor::One;
                    o.phi_mode = 0;
                    o.psi_kind = psi_kind;
                    o.n1 = t.n1;
                    o.n2 = t.n2;
                    out[d].add(o);
                }
            }
        }
    }
    AveragedField field(out[0].canonicalized(), out[1].canonicalized());
    // trapezoid resolution must cover the Bessel ladder of the largest shift
    double r_max = 0.0;
    int m_max = 0;
    for (const TrigPoly* p : src) {
        for (const TrigTerm& t : p->terms()) {
            r_max = std::max(r_max, std::hypot(t.n1 * W.x() + t.n2 * W.y(),
                                               t.n1 * W.y() - t.n2 * W.x()));
            m_max = std::max(m_max, std::abs(t.phi_mode));
        }
    }
    const int needed = 4 * static_cast<int>(std::ceil((2.2 * r_max + m_max + 64) / 4.0));
    field.set_source({h1.canonicalized(), h2.canonicalized(), W},
                     std::max(quadrature_order, needed));
    return field;
}

AveragedField average_over_phi(const PerturbationSpec& spec, const Vec2& V,
                               double omega) {
    if (!(omega > 0.0))
        throw ValidationError(
            "average_over_phi requires omega > 0; use the travelling-wave path");
    const Vec2 W = V / omega;
    const TrigPoly h1 = spec.f_psi1.minus(spec.f_phi, W.x()).scaled(1.0 / omega);
    const TrigPoly h2 = spec.f_psi2.minus(spec.f_phi, W.y()).scaled(1.0 / omega);
    return average_rotating_frame(h1, h2, W);
}

// ---------------------------------------------------------------------------
// Equilibria
// ---------------------------------------------------------------------------

namespace {

double torus_distance_2d(const Vec2& a, const Vec2& b) {
    const double d0 = wrap_pm_pi(a.x() - b.x());
    const double d1 = wrap_pm_pi(a.y() - b.y());
    return std::hypot(d0, d1);
}

Vec2 wrap_psi(const Vec2& psi) {
    return {wrap_2pi(psi.x()), wrap_2pi(psi.y())};
}

}  // namespace

EquilibriaResult find_equilibria(const AveragedField& field) {
    EquilibriaResult result;
    const double scale =
        field.component1().coeff_bound() + field.component2().coeff_bound();
    if (scale < 1e-14) {
        result.degenerate = true;
        result.warning = "degenerate field: averaged field vanishes identically";
        return result;
    }

    const int grid = 16;
    const double f_tol = 1e-12;
    std::vector<Vec2> roots;
    auto newton_from = [&](Vec2 x) -> std::optional<Vec2> {
        for (int it = 0; it < 60; ++it) {
            const Vec2 f = field.eval(x);
            if (f.norm() <= f_tol) return wrap_psi(x);
            const Mat2 jac = field.jacobian(x);
            const double det = jac.determinant();
            if (std::abs(det) < 1e-14) return std::nullopt;
            const Vec2 step = jac.inverse() * f;
            if (!step.allFinite() || step.norm() > two_pi) return std::nullopt;
            x -= step;
        }
        return std::nullopt;
    };
    auto add_root = [&](const Vec2& root) {
        for (const auto& r : roots)
            if (torus_distance_2d(r, root) < 1e-6) return false;
        roots.push_back(root);
        return true;
    };
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j)
            if (const auto root = newton_from(Vec2(two_pi * i / grid, two_pi * j / grid)))
                add_root(*root);
    // polish from the quarter-turn images of each root so conjugate sets
    // come out complete even when their Newton basins miss the seed grid
    for (int pass = 0; pass < 4; ++pass) {
        bool grew = false;
        const std::vector<Vec2> snapshot = roots;
        for (const Vec2& r : snapshot) {
            Vec2 img = r;
            for (int k = 0; k < 3; ++k) {
                img = apply_j(img);
                if (const auto root = newton_from(wrap_psi(img)))
                    grew = add_root(*root) || grew;
            }
        }
        if (!grew) break;
    }
    if (roots.empty()) {
        result.warning = "no equilibria found from any seed";
        return result;
    }

    for (const Vec2& root : roots) {
        EquilibriumReport rep;
        rep.psi_star = root;
        const Mat2 jac = field.jacobian(root);
        const double tr = jac.trace(), det = jac.determinant();
        const double disc = tr * tr - 4 * det;
        if (disc >= 0) {
            const double s = std::sqrt(disc);
            rep.ev1 = {(tr + s) / 2, 0.0};
            rep.ev2 = {(tr - s) / 2, 0.0};
        } else {
            const double s = std::sqrt(-disc);
            rep.ev1 = {tr / 2, s / 2};
            rep.ev2 = {tr / 2, -s / 2};
        }
        rep.stable = rep.ev1.real() < 0 && rep.ev2.real() < 0;
        rep.at_origin = torus_distance_2d(root, Vec2::Zero()) < 1e-8;
        Vec2 v = root;
        for (int k = 0; k < 4; ++k) {
            rep.conjugates[k] = wrap_psi(v);
            v = apply_j(v);
        }
        result.points.push_back(rep);
    }
    std::sort(result.points.begin(), result.points.end(),
              [](const EquilibriumReport& a, const EquilibriumReport& b) {
                  return std::make_pair(a.psi_star.x(), a.psi_star.y()) <
                         std::make_pair(b.psi_star.x(), b.psi_star.y());
              });
    return result;
}

// ---------------------------------------------------------------------------
// Periodic orbits of the averaged field
// ---------------------------------------------------------------------------

namespace {

class PlanarRk4 {
public:
    PlanarRk4(const AveragedField& field, const Vec2& y0) : field_(field), y_(y0) {}

    const Vec2& state() const { return y_; }
    void set_state(const Vec2& y) { y_ = y; }

    void step(double h) {
        const Vec2 k1 = field_.eval(y_);
        const Vec2 k2 = field_.eval(y_ + 0.5 * h * k1);
        const Vec2 k3 = field_.eval(y_ + 0.5 * h * k2);
        const Vec2 k4 = field_.eval(y_ + h * k3);
        y_ += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

private:
    const AveragedField& field_;
    Vec2 y_;
};

}  // namespace

std::optional<PeriodicOrbitReport> find_periodic_orbit(const AveragedField& field,
                                                       const Vec2& seed,
                                                       const OrbitSearchOptions& opts) {
    PlanarRk4 flow(field, seed);
    const double h = opts.dt;

    // transient
    for (double t = 0; t < opts.transient_time; t += h) {
        flow.step(h);
        if (!flow.state().allFinite()) return std::nullopt;
        if (field.eval(flow.state()).norm() < 1e-12) return std::nullopt;  // sank
    }

    // probe stretch: estimate the loop centroid
    Vec2 centroid = Vec2::Zero();
    Vec2 lo = flow.state(), hi = flow.state();
    long nprobe = 0;
    const double probe_time = std::min(200.0, opts.max_time / 4);
    for (double t = 0; t < probe_time; t += h) {
        flow.step(h);
        centroid += flow.state();
        lo = lo.cwiseMin(flow.state());
        hi = hi.cwiseMax(flow.state());
        ++nprobe;
    }
    centroid /= static_cast<double>(nprobe);
    if ((hi - lo).norm() < 10 * opts.return_tol) return std::nullopt;  // parked

    // Poincare section: the ray from the centroid through the current point.
    const Vec2 dir = (flow.state() - centroid).normalized();
    auto section_g = [&](const Vec2& x) {
        const Vec2 rel = x - centroid;
        return dir.x() * rel.y() - dir.y() * rel.x();
    };
    auto on_ray = [&](const Vec2& x) { return (x - centroid).dot(dir) > 0.0; };

    std::vector<Vec2> crossings;
    std::vector<double> crossing_times;
    double t = 0.0;
    double g_prev = section_g(flow.state());
    Vec2 y_prev = flow.state();
    double converged_period = 0.0;
    Vec2 orbit_start;
    bool found = false;
    while (t < opts.max_time && static_cast<int>(crossings.size()) < opts.max_crossings) {
        flow.step(h);
        t += h;
        const double g = section_g(flow.state());
        if (g_prev < 0.0 && g >= 0.0 && on_ray(flow.state())) {
            // bisection on the step fraction
            double a = 0.0, b = 1.0;
            Vec2 xa = y_prev;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (a + b);
                PlanarRk4 sub(field, y_prev);
                sub.step(h * mid);
                if (section_g(sub.state()) < 0.0) {
                    a = mid;
                    xa = sub.state();
                } else {
                    b = mid;
                }
            }
            PlanarRk4 sub(field, y_prev);
            sub.step(h * 0.5 * (a + b));
            const Vec2 xc = sub.state();
            const double tc = t - h + h * 0.5 * (a + b);
            if (!crossings.empty() &&
                (xc - crossings.back()).norm() < opts.return_tol) {
                converged_period = tc - crossing_times.back();
                orbit_start = xc;
                found = true;
                break;
            }
            crossings.push_back(xc);
            crossing_times.push_back(tc);
        }
        g_prev = g;
        y_prev = flow.state();
    }
    if (!found) return std::nullopt;

    PeriodicOrbitReport rep;
    rep.period = converged_period;
    int nsamp = static_cast<int>(std::ceil(converged_period / h));
    nsamp = std::max(256, ((nsamp + 3) / 4) * 4);
    const double hs = converged_period / nsamp;
    PlanarRk4 orbit(field, orbit_start);
    rep.samples.reserve(nsamp);
    double div_sum = 0.0;
    for (int i = 0; i < nsamp; ++i) {
        rep.samples.push_back(orbit.state());
        div_sum += field.divergence(orbit.state());
        orbit.step(hs);
    }
    rep.beta = div_sum / nsamp;  // (1/T) * trapezoid of div over one period
    rep.stable = rep.beta < 0.0;

    // quarter-shift symmetry: Psi(t - T/4) = +/- J Psi(t)
    const int quarter = nsamp / 4;
    double dplus = 0.0, dminus = 0.0;
    for (int i = 0; i < nsamp; ++i) {
        const Vec2 shifted = rep.samples[(i + nsamp - quarter) % nsamp];
        const Vec2 jpsi = apply_j(rep.samples[i]);
        dplus = std::max(dplus, (shifted - jpsi).norm());
        dminus = std::max(dminus, (shifted + jpsi).norm());
    }
    if (std::min(dplus, dminus) <= 1e-6)
        rep.st_sign = (dplus <= dminus) ? +1 : -1;
    else
        rep.st_sign = 0;
    return rep;
}

// ---------------------------------------------------------------------------
// Travelling-wave analysis
// ---------------------------------------------------------------------------

TrigPoly compute_M(const PerturbationSpec& spec) {
    TrigPoly m;
    const TrigPoly canon = spec.f_phi.canonicalized();
    for (const auto& t : canon.terms())
        if (t.psi_kind == Factor::One) m.add(t);
    return m.canonicalized();
}

std::vector<MZero> find_M_zeros(const TrigPoly& M) {
    if (M.empty())
        throw ValidationError(
            "M is identically zero: transverse-zero analysis does not apply "
            "(degenerate travelling-wave problem)");
    const TrigPoly Mp = M.dphi();
    const TrigPoly Mpp = Mp.dphi();

    auto refine = [](const TrigPoly& f, const TrigPoly& fp, double lo, double hi) {
        double flo = f.eval_phi(lo);
        double x = 0.5 * (lo + hi);
        for (int it = 0; it < 100; ++it) {
            const double fx = f.eval_phi(x);
            const double dfx = fp.eval_phi(x);
            double xn = (dfx != 0.0) ? x - fx / dfx : x;
            if (!(xn > lo && xn < hi)) {  // Newton left the bracket: bisect
                const double fm = f.eval_phi(0.5 * (lo + hi));
                if ((flo < 0) == (fm < 0)) {
                    lo = 0.5 * (lo + hi);
                    flo = fm;
                } else {
                    hi = 0.5 * (lo + hi);
                }
                xn = 0.5 * (lo + hi);
            }
            if (std::abs(xn - x) < 1e-15) {
                x = xn;
                break;
            }
            x = xn;
        }
        return x;
    };

    std::vector<MZero> zeros;
    auto push_zero = [&](double phi) {
        phi = wrap_2pi(phi);
        for (const auto& z : zeros)
            if (circular_distance(z.phi_star, phi) < 1e-7) return;
        MZero z;
        z.phi_star = phi;
        z.mu = Mp.eval_phi(phi);
        z.transverse = std::abs(z.mu) >= 1e-8;
        zeros.push_back(z);
    };

    const int n = 1024;
    std::vector<double> vals(n + 1);
    for (int j = 0; j <= n; ++j) vals[j] = M.eval_phi(two_pi * j / n);
    for (int j = 0; j < n; ++j) {
        const double lo = two_pi * j / n, hi = two_pi * (j + 1) / n;
        if (vals[j] == 0.0) push_zero(lo);
        else if ((vals[j] < 0) != (vals[j + 1] < 0)) push_zero(refine(M, Mp, lo, hi));
    }
    // tangential zeros: critical points where M itself vanishes
    std::vector<double> dvals(n + 1);
    for (int j = 0; j <= n; ++j) dvals[j] = Mp.eval_phi(two_pi * j / n);
    for (int j = 0; j < n; ++j) {
        const double lo = two_pi * j / n, hi = two_pi * (j + 1) / n;
        if ((dvals[j] < 0) != (dvals[j + 1] < 0)) {
            const double c = refine(Mp, Mpp, lo, hi);
            if (std::abs(M.eval_phi(c)) <= 1e-9) push_zero(c);
        }
    }
    std::sort(zeros.begin(), zeros.end(),
              [](const MZero& a, const MZero& b) { return a.phi_star < b.phi_star; });
    return zeros;
}

namespace {

std::vector<Eigen::Vector2i> spec_psi_modes(const PerturbationSpec& spec) {
    std::set<std::pair<int, int>> modes;
    auto collect = [&modes](const TrigPoly& p) {
        for (const auto& t : p.terms()) {
            if (t.psi_kind == Factor::One) continue;
            int n1 = t.n1, n2 = t.n2;
            for (int k = 0; k < 4; ++k) {  // close under the quarter-turn map
                modes.insert({n1, n2});
                const int tmp = n1;
                n1 = n2;
                n2 = -tmp;
            }
        }
    };
    collect(spec.f_psi1);
    collect(spec.f_psi2);
    collect(spec.f_phi);
    std::vector<Eigen::Vector2i> out;
    for (const auto& [a, b] : modes) out.emplace_back(a, b);
    return out;
}

}  // namespace

ResonanceInfo resonance_margin(const Vec2& V, double phi_star,
                               const PerturbationSpec& spec) {
    const Vec2 ab = rotation(phi_star) * V;
    ResonanceInfo info;
    info.margin = std::numeric_limits<double>::infinity();
    for (const auto& mode : spec_psi_modes(spec)) {
        const double d = std::abs(mode.x() * ab.x() + mode.y() * ab.y());
        if (d < info.margin) {
            info.margin = d;
            info.worst_mode = mode;
        }
    }
    return info;
}

ResonanceInfo resonance_check(const Vec2& V, double phi_star,
                              const PerturbationSpec& spec) {
    const ResonanceInfo info = resonance_margin(V, phi_star, spec);
    if (info.margin < 1e-9) {
        throw ResonanceError("resonant mode (" + std::to_string(info.worst_mode.x()) +
                             ", " + std::to_string(info.worst_mode.y()) +
                             "): |n1 a + n2 b| = " + std::to_string(info.margin));
    }
    return info;
}

TrigPoly solve_cohomological(const TrigPoly& rhs, const Vec2& w) {
    TrigPoly out;
    const TrigPoly canon = rhs.canonicalized();
    for (const auto& t : canon.terms()) {
        if (t.phi_kind != Factor::One)
            throw ValidationError("cohomological rhs must not depend on phi");
        if (t.psi_kind == Factor::One)
            throw ValidationError("cohomological rhs must have zero mean");
        const double d = t.n1 * w.x() + t.n2 * w.y();
        if (std::abs(d) < 1e-9)
            throw ResonanceError("resonant mode (" + std::to_string(t.n1) + ", " +
                                 std::to_string(t.n2) + ") against w");
        TrigTerm o = t;
        if (t.psi_kind == Factor::Cos) {
            o.psi_kind = Factor::Sin;
            o.coeff = t.coeff / d;
        } else {
            o.psi_kind = Factor::Cos;
            o.coeff = -t.coeff / d;
        }
        out.add(o);
    }
    return out.canonicalized();
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

namespace {

double sampled_max_abs(const TrigPoly& p) {
    if (p.empty()) return 0.0;
    double m = 0.0;
    const int n_psi = 24, n_phi = 512;
    for (int i = 0; i < n_psi; ++i)
        for (int j = 0; j < n_psi; ++j)
            for (int k = 0; k < n_phi; ++k)
                m = std::max(m, std::abs(p.eval(Vec2(two_pi * i / n_psi, two_pi * j / n_psi),
                                                two_pi * k / n_phi)));
    return m;
}

}  // namespace

Prediction predict(const SystemParams& params) {
    params.validate();
    const Z4Report z4 = check_z4_symmetry(params.spec);
    if (!z4.passes)
        throw ValidationError("perturbation spec violates the lattice symmetry law");

    Prediction pred;
    if (params.epsilon == 0.0) {
        pred.mode = "none";
        pred.note = "no prediction: Euclidean case, continuum of centers";
        pred.guard_ratio = std::numeric_limits<double>::infinity();
        return pred;
    }

    const double fmax = sampled_max_abs(params.spec.f_phi);
    pred.guard_ratio = (fmax > 0.0) ? params.omega / (params.epsilon * fmax)
                                    : std::numeric_limits<double>::infinity();

    const bool rotating = params.omega > 0.0 && pred.guard_ratio >= 2.0;
    const bool travelling = fmax == 0.0 ? params.omega == 0.0 : pred.guard_ratio <= 0.5;

    if (rotating) {
        pred.mode = "rotating";
        const AveragedField field = average_over_phi(params.spec, params.V, params.omega);
        EquilibriaResult eq = find_equilibria(field);
        if (eq.degenerate) {
            pred.note = eq.warning;
            return pred;
        }
        pred.anchors = std::move(eq.points);

        // scan a fixed seed set for limit cycles of the averaged field
        const Vec2 seeds[] = {{0.5, 0.5}, {3.0, 1.0}, {1.0, 3.0}, {4.5, 4.5},
                              {2.0, 5.5}, {5.5, 2.0}, {pi, pi / 2}, {pi / 2, pi}};
        for (const Vec2& seed : seeds) {
            bool near_eq = false;
            for (const auto& a : pred.anchors)
                if (torus_distance_2d(a.psi_star, wrap_psi(seed)) < 1e-3) near_eq = true;
            if (near_eq) continue;
            OrbitSearchOptions opts;
            opts.transient_time = 100.0;
            opts.max_time = 600.0;
            auto orbit = find_periodic_orbit(field, seed, opts);
            if (!orbit) continue;
            bool dup = false;
            for (const auto& o : pred.meander_orbits) {
                if (std::abs(o.period - orbit->period) > 1e-5 * std::max(1.0, o.period))
                    continue;
                double d = std::numeric_limits<double>::infinity();
                for (const auto& s : o.samples)
                    d = std::min(d, (s - orbit->samples.front()).norm());
                if (d < 1e-4) dup = true;
            }
            if (!dup) pred.meander_orbits.push_back(std::move(*orbit));
        }
        return pred;
    }

    if (travelling) {
        pred.mode = "travelling";
        const TrigPoly M = compute_M(params.spec);
        if (M.empty()) {
            pred.mode = "none";
            pred.note = "M is identically zero: no transverse travelling-wave zeros";
            return pred;
        }
        for (const MZero& z : find_M_zeros(M)) {
            TravellingWaveReport rep;
            rep.phi_star = z.phi_star;
            rep.mu = z.mu;
            rep.transverse = z.transverse;
            const ResonanceInfo res = resonance_margin(params.V, z.phi_star, params.spec);
            rep.resonance_margin = res.margin;
            rep.worst_mode = res.worst_mode;
            rep.alpha_beta = rotation(z.phi_star) * params.V;
            rep.stable = z.transverse && z.mu < 0.0 && res.margin >= 1e-9;
            pred.travelling.push_back(rep);
        }
        return pred;
    }

    pred.mode = "none";
    pred.note =
        "region-R boundary: omega is comparable to epsilon*max|F^phi|; "
        "first-order averaging makes no prediction here";
    return pred;
}

std::string prediction_to_json(const Prediction& p) {
    nlohmann::json j;
    j["mode"] = p.mode;
    if (!p.note.empty()) j["note"] = p.note;
    j["guard_ratio"] = std::isfinite(p.guard_ratio) ? nlohmann::json(p.guard_ratio)
                                                    : nlohmann::json("inf");
    j["anchors"] = nlohmann::json::array();
    for (const auto& a : p.anchors) {
        nlohmann::json ja;
        ja["psi_star"] = {a.psi_star.x(), a.psi_star.y()};
        ja["lattice_coords"] = {a.psi_star.x() / two_pi, a.psi_star.y() / two_pi};
        ja["eigenvalues"] = {{a.ev1.real(), a.ev1.imag()}, {a.ev2.real(), a.ev2.imag()}};
        ja["stable"] = a.stable;
        ja["at_origin"] = a.at_origin;
        ja["st_symmetric"] = a.at_origin;
        j["anchors"].push_back(ja);
    }
    j["meander_orbits"] = nlohmann::json::array();
    for (const auto& o : p.meander_orbits) {
        nlohmann::json jo;
        jo["period"] = o.period;
        jo["beta"] = o.beta;
        jo["stable"] = o.stable;
        jo["st_symmetric"] = o.st_sign != 0;
        jo["st_sign"] = o.st_sign;
        j["meander_orbits"].push_back(jo);
    }
    j["travelling"] = nlohmann::json::array();
    for (const auto& t : p.travelling) {
        nlohmann::json jt;
        jt["phi_star"] = t.phi_star;
        jt["mu"] = t.mu;
        jt["stable"] = t.stable;
        jt["transverse"] = t.transverse;
        jt["resonance_margin"] = t.resonance_margin;
        jt["worst_mode"] = {t.worst_mode.x(), t.worst_mode.y()};
        jt["alpha_beta"] = {t.alpha_beta.x(), t.alpha_beta.y()};
        j["travelling"].push_back(jt);
    }
    return j.dump(2);
}

}  // namespace latwave
