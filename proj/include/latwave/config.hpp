#pragma once

#include <latwave/center_bundle.hpp>
#include <latwave/fhn.hpp>

#include <map>
#include <optional>
#include <string>

namespace latwave {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parsed experiment description; which blocks are meaningful depends on
/// the mode.
struct ExperimentConfig {
    std::string mode;  // ode | average | predict | pde | analyze

    // [run]
    double dt = 1e-3;
    double t_end = 100.0;
    int sample_every = 1;
    double transient_fraction = 0.5;

    // [system] + [spec]
    SystemParams params;
    Vec2 psi0 = Vec2::Zero();
    double phi0 = 0.0;

    // [pde]
    int n = 200;
    double pde_dt = 0.01;
    double pde_t_end = 100.0;
    double settle_time = 200.0;
    long pde_sample_every = 25;
    long snapshot_every = 0;
    InhomogeneityCoeffs coeffs;
    Vec2 tip_start = Vec2::Zero();
    std::optional<Vec2> tip_start_extra;
    int ic_rotation = 0;
    int threads = 1;

    // [analyze]
    std::string analyze_input;
    double anchored_threshold = 0.05;
    double lattice_spacing = 4.0 * std::numbers::pi;
};

/// Strict line-oriented `key = value` format with [section] headers and
/// '#' comments; unknown sections or keys are errors.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Bundled experiment presets (configs embedded in the binary).
std::vector<std::string> preset_names();
const std::string& preset_config_text(const std::string& name);
ExperimentConfig preset_config(const std::string& name);

/// Semantic checks for the given mode; throws ValidationError.  For modes
/// carrying a perturbation spec this includes the symmetry law.
void validate_config(const ExperimentConfig& cfg);

}  // namespace latwave
