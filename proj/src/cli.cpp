#include <latwave/cli.hpp>

#include <latwave/averaging.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace latwave {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << text;
    if (!text.empty() && text.back() != '\n') out << "\n";
}

std::string out_path(const std::string& dir, const std::string& name) {
    if (dir.empty()) return name;
    fs::create_directories(dir);
    return (fs::path(dir) / name).string();
}

json diagnostic_json(const SurfaceDiagnostic& diag) {
    json j;
    j["phi_mean"] = diag.phi_mean;
    j["phi_maxdev"] = diag.phi_maxdev;
    j["n_samples"] = diag.samples.size();
    json samples = json::array();
    for (const auto& s : diag.samples) samples.push_back({s[0], s[1], s[2]});
    j["samples"] = std::move(samples);
    return j;
}

int cmd_validate(const std::string& preset, const std::string& config_path) {
    const ExperimentConfig cfg =
        preset.empty() ? load_config(config_path) : preset_config(preset);
    validate_config(cfg);
    std::cout << "ok: configuration valid";
    if (cfg.mode == "ode" || cfg.mode == "average" || cfg.mode == "predict")
        std::cout << " (perturbation satisfies the lattice symmetry law)";
    std::cout << "\n";
    return 0;
}

int cmd_ode_run(const std::string& config_path, const std::string& out_dir) {
    ExperimentConfig cfg = load_config(config_path);
    validate_config(cfg);
    if (cfg.mode != "ode") throw ValidationError("ode-run needs mode = ode");
    const Trajectory traj = integrate(cfg.params, TorusState(cfg.psi0, cfg.phi0),
                                      cfg.dt, cfg.t_end, cfg.sample_every);
    const auto diag = invariant_surface_diagnostic(traj, cfg.transient_fraction);
    traj.write_csv(out_path(out_dir, "trajectory.csv"));
    write_text(out_path(out_dir, "diagnostic.json"), diagnostic_json(diag).dump(2));
    std::cout << "phi_mean = " << diag.phi_mean << ", phi_maxdev = " << diag.phi_maxdev
              << "\n";
    return 0;
}

json trig_poly_json(const TrigPoly& p) {
    json terms = json::array();
    for (const auto& t : p.terms()) {
        json jt;
        jt["coeff"] = t.coeff;
        jt["phi"] = {{"kind", t.phi_kind == Factor::One ? "1"
                              : t.phi_kind == Factor::Sin ? "sin" : "cos"},
                     {"m", t.phi_mode}};
        jt["psi"] = {{"kind", t.psi_kind == Factor::One ? "1"
                              : t.psi_kind == Factor::Sin ? "sin" : "cos"},
                     {"n", {t.n1, t.n2}}};
        terms.push_back(jt);
    }
    return terms;
}

int cmd_average(const std::string& config_path, const std::string& out_dir) {
    ExperimentConfig cfg = load_config(config_path);
    validate_config(cfg);
    json j;
    if (cfg.params.omega > 0.0) {
        const AveragedField field =
            average_over_phi(cfg.params.spec, cfg.params.V, cfg.params.omega);
        j["path"] = "rotating";
        j["gcal"] = {{"component1", trig_poly_json(field.component1())},
                     {"component2", trig_poly_json(field.component2())}};
        const EquilibriaResult eq = find_equilibria(field);
        json eqs = json::array();
        for (const auto& e : eq.points) {
            eqs.push_back({{"psi_star", {e.psi_star.x(), e.psi_star.y()}},
                           {"stable", e.stable},
                           {"at_origin", e.at_origin}});
        }
        j["equilibria"] = std::move(eqs);
        if (eq.degenerate) j["warning"] = eq.warning;
    } else {
        const TrigPoly M = compute_M(cfg.params.spec);
        j["path"] = "travelling";
        j["M"] = trig_poly_json(M);
        if (!M.empty()) {
            json zeros = json::array();
            for (const auto& z : find_M_zeros(M))
                zeros.push_back({{"phi_star", z.phi_star},
                                 {"mu", z.mu},
                                 {"transverse", z.transverse}});
            j["zeros"] = std::move(zeros);
        }
    }
    const std::string text = j.dump(2);
    write_text(out_path(out_dir, "average.json"), text);
    std::cout << text << "\n";
    return 0;
}

int cmd_predict(const std::string& config_path, const std::string& out_dir) {
    ExperimentConfig cfg = load_config(config_path);
    validate_config(cfg);
    const std::string text = prediction_to_json(predict(cfg.params));
    write_text(out_path(out_dir, "prediction.json"), text);
    std::cout << text << "\n";
    return 0;
}

// Exploratory scan of the rotation-frequency axis at fixed epsilon: which
// regime does the first-order analysis assign to each omega?
int cmd_sweep(const std::string& config_path, const std::string& out_dir,
              double omega_min, double omega_max, int steps) {
    ExperimentConfig cfg = load_config(config_path);
    validate_config(cfg);
    if (!(omega_min >= 0.0 && omega_max > omega_min) || steps < 2)
        throw ValidationError("sweep needs 0 <= omega-min < omega-max and >= 2 steps");
    json rows = json::array();
    for (int k = 0; k < steps; ++k) {
        SystemParams p = cfg.params;
        p.omega = omega_min + (omega_max - omega_min) * k / (steps - 1);
        const Prediction pred = predict(p);
        json row;
        row["omega"] = p.omega;
        row["mode"] = pred.mode;
        row["guard_ratio"] = std::isfinite(pred.guard_ratio)
                                 ? json(pred.guard_ratio)
                                 : json("inf");
        row["anchors"] = pred.anchors.size();
        row["meander_orbits"] = pred.meander_orbits.size();
        row["stable_travelling"] = std::count_if(
            pred.travelling.begin(), pred.travelling.end(),
            [](const TravellingWaveReport& t) { return t.stable; });
        rows.push_back(row);
    }
    json j;
    j["epsilon"] = cfg.params.epsilon;
    j["rows"] = std::move(rows);
    const std::string text = j.dump(2);
    write_text(out_path(out_dir, "sweep.json"), text);
    std::cout << text << "\n";
    return 0;
}

int cmd_tip_analyze(const std::string& csv_path, double transient, double spacing,
                    double anchored_threshold, const std::string& out_file) {
    const TipTrajectory tips = TipTrajectory::read_csv(csv_path);
    MotionClassification cls = analyze_tips(tips, transient, anchored_threshold);
    const std::string text = classification_to_json(cls, spacing);
    if (!out_file.empty()) write_text(out_file, text);
    std::cout << text << "\n";
    return 0;
}

int cmd_pde_run(const std::string& config_path, const std::string& out_dir) {
    ExperimentConfig cfg = load_config(config_path);
    validate_config(cfg);
    if (cfg.mode != "pde") throw ValidationError("pde-run needs mode = pde");
    const auto out = run_pde_experiment(cfg, nullptr, cfg.tip_start, cfg.ic_rotation,
                                        out_path(out_dir, "run"));
    std::cout << classification_to_json(out.classification, cfg.lattice_spacing) << "\n";
    return 0;
}

int cmd_repro(const std::string& preset, const std::string& out_dir, bool fast);

}  // namespace

MotionClassification analyze_tips(const TipTrajectory& tips, double transient_fraction,
                                  double anchored_threshold, double mean_radius_floor) {
    ClassifyOptions opts;
    opts.anchored_threshold = anchored_threshold;
    MotionClassification cls = classify(tips, transient_fraction, opts);
    const bool periodic = cls.kind == MotionClassification::Kind::AnchoredRotation ||
                          cls.kind == MotionClassification::Kind::Meander;
    if (!periodic || !cls.anchor) return cls;

    const double period = (cls.kind == MotionClassification::Kind::Meander &&
                           cls.secondary_period)
                              ? *cls.secondary_period
                              : cls.primary_period.value_or(0.0);
    if (period <= 0.0) return cls;

    // post-transient slice
    TipTrajectory tail;
    tail.sample_dt = tips.sample_dt;
    const size_t start = static_cast<size_t>(transient_fraction * tips.size());
    for (size_t i = start; i < tips.size(); ++i) tail.append(tips.t[i], tips.xy[i]);
    if (tail.t.back() - tail.t.front() < period / 4) return cls;

    const double plus = st_symmetry_test(tail, *cls.anchor, period / 4);
    const double minus = st_symmetry_test(tail, *cls.anchor, -period / 4);
    cls.st_residual = std::min(plus, minus);
    cls.st_symmetric =
        cls.st_residual < 0.1 * std::max(cls.mean_radius, mean_radius_floor);
    return cls;
}

PdeRunOutput run_pde_experiment(const ExperimentConfig& cfg, const FieldPair* base,
                                const Vec2& tip_start, int ic_rotation,
                                const std::string& out_prefix) {
    const GridSpec grid(cfg.n);
    FieldPair fields;
    if (base) {
        fields = *base;
    } else {
        SpawnOptions so;
        so.settle_time = cfg.settle_time;
        so.dt = cfg.pde_dt;
        so.n_threads = cfg.threads;
        fields = spawn_spiral(grid, so);
    }

    const auto tip0 = find_tip(fields.u, fields.v, grid);
    if (!tip0) throw TipLostError("no tip in the initial state");
    fields = translate_cells(fields,
                             static_cast<int>(std::lround((tip_start.x() - tip0->x()) / grid.dx())),
                             static_cast<int>(std::lround((tip_start.y() - tip0->y()) / grid.dx())));
    Vec2 seed = tip_start;
    for (int k = 0; k < ic_rotation % 4; ++k) {
        fields = rotate90(fields);
        seed = rotation(std::numbers::pi / 2) * seed;
    }
    fields.time = 0.0;

    RunOptions ro;
    ro.dt = cfg.pde_dt;
    ro.t_end = cfg.pde_t_end;
    ro.sample_every = cfg.pde_sample_every;
    ro.n_threads = cfg.threads;
    ro.tip_seed = seed;
    if (cfg.snapshot_every > 0) {
        ro.snapshot_every = cfg.snapshot_every;
        ro.snapshot_prefix = out_prefix;
    }
    RunResult run = run_with_tips(std::move(fields), cfg.coeffs, grid, ro);

    PdeRunOutput out;
    out.tips = std::move(run.tips);
    out.tips.write_csv(out_prefix + "_tips.csv");
    write_snapshot(out_prefix + "_final.snap", run.final_fields);
    out.classification =
        analyze_tips(out.tips, cfg.transient_fraction, cfg.anchored_threshold);
    if (out.classification.anchor) {
        const LatticeSpec lattice(cfg.lattice_spacing);
        const LatticeSpec dual(cfg.lattice_spacing,
                               Vec2(cfg.lattice_spacing / 2, cfg.lattice_spacing / 2));
        out.lattice_distance =
            nearest_lattice_point(lattice, *out.classification.anchor).distance;
        out.dual_lattice_distance =
            nearest_lattice_point(dual, *out.classification.anchor).distance;
    }
    write_text(out_prefix + "_classification.json",
               classification_to_json(out.classification, cfg.lattice_spacing));
    return out;
}

namespace {

void apply_fast_settings(ExperimentConfig& cfg) {
    cfg.n = 100;
    cfg.pde_dt = 0.02;
    cfg.settle_time = 150.0;
    cfg.pde_t_end = std::min(cfg.pde_t_end, 450.0);
    cfg.pde_sample_every = 13;  // ~0.25 time units per tip sample
}

int cmd_repro(const std::string& preset, const std::string& out_dir, bool fast) {
    ExperimentConfig cfg = preset_config(preset);
    validate_config(cfg);
    const std::string dir = out_dir.empty() ? ("out_" + preset) : out_dir;
    fs::create_directories(dir);

    if (preset == "torus") {
        const Trajectory traj = integrate(cfg.params, TorusState(cfg.psi0, cfg.phi0),
                                          cfg.dt, cfg.t_end, cfg.sample_every);
        const auto diag = invariant_surface_diagnostic(traj, cfg.transient_fraction);
        traj.write_csv((fs::path(dir) / "torus_trajectory.csv").string());
        write_text((fs::path(dir) / "torus_diagnostic.json").string(),
                   diagnostic_json(diag).dump(2));
        std::cout << "phi_mean = " << diag.phi_mean << " (pi/4 = "
                  << std::numbers::pi / 4 << "), phi_maxdev = " << diag.phi_maxdev << "\n";
        return 0;
    }

    if (fast) apply_fast_settings(cfg);
    const GridSpec grid(cfg.n);
    SpawnOptions so;
    so.settle_time = cfg.settle_time;
    so.dt = cfg.pde_dt;
    so.n_threads = cfg.threads;
    const FieldPair base = spawn_spiral(grid, so);

    struct Ic {
        std::string tag;
        Vec2 start;
        int rotation;
    };
    std::vector<Ic> ics;
    if (preset == "exp1") {
        ics.push_back({"ic1", cfg.tip_start, 0});
    } else if (preset == "exp2") {
        for (int k = 0; k < 4; ++k) ics.push_back({"ic" + std::to_string(k + 1), cfg.tip_start, k});
        ics.push_back({"ic5", cfg.tip_start_extra.value_or(Vec2(-2.8, 7.9)), 0});
    } else if (preset == "exp3") {
        for (int k = 0; k < 4; ++k) ics.push_back({"ic" + std::to_string(k + 1), cfg.tip_start, k});
    }

    json summary;
    summary["preset"] = preset;
    summary["fast"] = fast;
    summary["runs"] = json::array();
    std::vector<std::optional<Vec2>> anchors;
    for (const auto& ic : ics) {
        const std::string prefix = (fs::path(dir) / (preset + "_" + ic.tag)).string();
        const auto out = run_pde_experiment(cfg, &base, ic.start, ic.rotation, prefix);
        json jr;
        jr["ic"] = ic.tag;
        jr["rotation_quarter_turns"] = ic.rotation;
        jr["classification"] = json::parse(
            classification_to_json(out.classification, cfg.lattice_spacing));
        summary["runs"].push_back(jr);
        anchors.push_back(out.classification.anchor);
        std::cout << ic.tag << ": kind="
                  << jr["classification"]["kind"].get<std::string>();
        if (out.classification.anchor)
            std::cout << " anchor=(" << out.classification.anchor->x() << ", "
                      << out.classification.anchor->y() << ") lattice_distance="
                      << out.lattice_distance;
        std::cout << "\n";
    }

    // conjugacy distances between successive quarter-turn runs
    if (ics.size() >= 4) {
        json conj = json::array();
        for (int k = 1; k < 4; ++k) {
            if (!anchors[0] || !anchors[k]) continue;
            const Vec2 expected = rotation(k * std::numbers::pi / 2) * (*anchors[0]);
            conj.push_back({{"pair", {0, k}},
                            {"distance", (expected - *anchors[k]).norm()}});
        }
        summary["conjugacy"] = std::move(conj);
    }
    write_text((fs::path(dir) / (preset + "_summary.json")).string(), summary.dump(2));
    return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"spiral-wave lattice symmetry-breaking laboratory"};
    app.require_subcommand(1);

    std::string config_path, preset, out_dir, out_file, csv_path;
    double transient = 0.5, spacing = 4.0 * std::numbers::pi, anchored_threshold = 0.05;
    bool fast = false;

    auto* validate = app.add_subcommand("validate", "check a configuration / spec symmetry");
    validate->add_option("config", config_path, "config file");
    validate->add_option("--preset", preset, "bundled preset name");

    auto* ode = app.add_subcommand("ode-run", "integrate the center-bundle system");
    ode->add_option("config", config_path)->required();
    ode->add_option("--out", out_dir, "output directory");

    auto* avg = app.add_subcommand("average", "averaged field / M analysis");
    avg->add_option("config", config_path)->required();
    avg->add_option("--out", out_dir);

    auto* pre = app.add_subcommand("predict", "first-order outcome prediction");
    pre->add_option("config", config_path)->required();
    pre->add_option("--out", out_dir);

    auto* pde = app.add_subcommand("pde-run", "reaction-diffusion run with tip tracking");
    pde->add_option("config", config_path)->required();
    pde->add_option("--out", out_dir);

    double omega_min = 0.0, omega_max = 1.0;
    int sweep_steps = 21;
    auto* swp = app.add_subcommand("sweep", "regime assignment across a rotation-frequency range");
    swp->add_option("config", config_path)->required();
    swp->add_option("--omega-min", omega_min);
    swp->add_option("--omega-max", omega_max);
    swp->add_option("--steps", sweep_steps);
    swp->add_option("--out", out_dir);

    auto* tip = app.add_subcommand("tip-analyze", "classify a tip CSV");
    tip->add_option("csv", csv_path)->required();
    tip->add_option("--transient", transient, "transient fraction to discard");
    tip->add_option("--spacing", spacing, "lattice spacing for distances");
    tip->add_option("--anchored-threshold", anchored_threshold);
    tip->add_option("--out", out_file, "write JSON here as well");

    auto* rep = app.add_subcommand("repro", "run a bundled experiment preset");
    rep->add_option("preset", preset)->required();
    rep->add_option("--out", out_dir);
    rep->add_flag("--fast", fast, "reduced grid and run length");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (validate->parsed()) {
            if (preset.empty() && config_path.empty())
                throw ConfigError("validate needs a config file or --preset");
            return cmd_validate(preset, config_path);
        }
        if (ode->parsed()) return cmd_ode_run(config_path, out_dir);
        if (avg->parsed()) return cmd_average(config_path, out_dir);
        if (pre->parsed()) return cmd_predict(config_path, out_dir);
        if (pde->parsed()) return cmd_pde_run(config_path, out_dir);
        if (swp->parsed())
            return cmd_sweep(config_path, out_dir, omega_min, omega_max, sweep_steps);
        if (tip->parsed())
            return cmd_tip_analyze(csv_path, transient, spacing, anchored_threshold, out_file);
        if (rep->parsed()) return cmd_repro(preset, out_dir, fast);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "validation failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace latwave
