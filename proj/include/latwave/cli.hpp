#pragma once

#include <latwave/config.hpp>
#include <latwave/tip.hpp>

#include <string>

namespace latwave {

/// Post-transient classification plus the quarter-period symmetry test
/// (both chiralities; the smaller residual is reported).
MotionClassification analyze_tips(const TipTrajectory& tips, double transient_fraction,
                                  double anchored_threshold, double mean_radius_floor = 1e-6);

struct PdeRunOutput {
    MotionClassification classification;
    TipTrajectory tips;
    double lattice_distance = -1.0;
    double dual_lattice_distance = -1.0;
};

/// One reaction-diffusion experiment: spawn (or reuse `base`), place the
/// core at tip_start, apply quarter-turn conjugation, run, classify.
PdeRunOutput run_pde_experiment(const ExperimentConfig& cfg, const FieldPair* base,
                                const Vec2& tip_start, int ic_rotation,
                                const std::string& out_prefix);

/// Entry point of the command-line tool.  Exit codes: 0 success, 1 usage
/// or config error, 2 numerical failure, 3 validation failure.
int run_cli(int argc, char** argv);

}  // namespace latwave
