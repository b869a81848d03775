#include <latwave/config.hpp>

#include <latwave/perturbation.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace latwave {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& v, int lineno) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size() || v.empty())
        throw ConfigError("line " + std::to_string(lineno) + ": expected a number, got '" + v + "'");
    return x;
}

long to_long(const std::string& v, int lineno) {
    const double x = to_double(v, lineno);
    const long l = std::lround(x);
    if (x != static_cast<double>(l))
        throw ConfigError("line " + std::to_string(lineno) + ": expected an integer, got '" + v + "'");
    return l;
}

Vec2 to_vec2(const std::string& v, int lineno) {
    const auto comma = v.find(',');
    if (comma == std::string::npos)
        throw ConfigError("line " + std::to_string(lineno) + ": expected 'x, y', got '" + v + "'");
    return {to_double(trim(v.substr(0, comma)), lineno),
            to_double(trim(v.substr(comma + 1)), lineno)};
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool saw_mode = false;

    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "run" && section != "system" && section != "spec" &&
                section != "pde" && section != "analyze")
                throw ConfigError("line " + std::to_string(lineno) + ": unknown section [" + section + "]");
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");

        auto unknown = [&]() -> ConfigError {
            return ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key +
                               "' in section [" + section + "]");
        };

        if (section == "run") {
            if (key == "mode") { cfg.mode = value; saw_mode = true; }
            else if (key == "dt") cfg.dt = to_double(value, lineno);
            else if (key == "t_end") cfg.t_end = to_double(value, lineno);
            else if (key == "sample_every") cfg.sample_every = static_cast<int>(to_long(value, lineno));
            else if (key == "transient_fraction") cfg.transient_fraction = to_double(value, lineno);
            else throw unknown();
        } else if (section == "system") {
            if (key == "V") cfg.params.V = to_vec2(value, lineno);
            else if (key == "omega") cfg.params.omega = to_double(value, lineno);
            else if (key == "epsilon") cfg.params.epsilon = to_double(value, lineno);
            else if (key == "psi0") cfg.psi0 = to_vec2(value, lineno);
            else if (key == "phi0") cfg.phi0 = to_double(value, lineno);
            else throw unknown();
        } else if (section == "spec") {
            try {
                if (key == "fpsi1") cfg.params.spec.f_psi1 = parse_trig_poly(value);
                else if (key == "fpsi2") cfg.params.spec.f_psi2 = parse_trig_poly(value);
                else if (key == "fphi") cfg.params.spec.f_phi = parse_trig_poly(value);
                else throw unknown();
            } catch (const ParseError& e) {
                throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
            }
        } else if (section == "pde") {
            if (key == "n") cfg.n = static_cast<int>(to_long(value, lineno));
            else if (key == "dt") cfg.pde_dt = to_double(value, lineno);
            else if (key == "t_end") cfg.pde_t_end = to_double(value, lineno);
            else if (key == "settle_time") cfg.settle_time = to_double(value, lineno);
            else if (key == "sample_every") cfg.pde_sample_every = to_long(value, lineno);
            else if (key == "snapshot_every") cfg.snapshot_every = to_long(value, lineno);
            else if (key == "A1") cfg.coeffs.A1 = to_double(value, lineno);
            else if (key == "B1") cfg.coeffs.B1 = to_double(value, lineno);
            else if (key == "C1") cfg.coeffs.C1 = to_double(value, lineno);
            else if (key == "A2") cfg.coeffs.A2 = to_double(value, lineno);
            else if (key == "B2") cfg.coeffs.B2 = to_double(value, lineno);
            else if (key == "C2") cfg.coeffs.C2 = to_double(value, lineno);
            else if (key == "tip_start") cfg.tip_start = to_vec2(value, lineno);
            else if (key == "tip_start_extra") cfg.tip_start_extra = to_vec2(value, lineno);
            else if (key == "ic_rotation") cfg.ic_rotation = static_cast<int>(to_long(value, lineno));
            else if (key == "threads") cfg.threads = static_cast<int>(to_long(value, lineno));
            else throw unknown();
        } else if (section == "analyze") {
            if (key == "input") cfg.analyze_input = value;
            else if (key == "transient_fraction") cfg.transient_fraction = to_double(value, lineno);
            else if (key == "anchored_threshold") cfg.anchored_threshold = to_double(value, lineno);
            else if (key == "lattice_spacing") cfg.lattice_spacing = to_double(value, lineno);
            else throw unknown();
        } else {
            throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
        }
    }
    if (!saw_mode) throw ConfigError("missing required key 'mode' in [run]");
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void validate_config(const ExperimentConfig& cfg) {
    const bool ode_like = cfg.mode == "ode" || cfg.mode == "average" || cfg.mode == "predict";
    if (!(ode_like || cfg.mode == "pde" || cfg.mode == "analyze"))
        throw ValidationError("unknown mode '" + cfg.mode + "'");
    if (ode_like) {
        cfg.params.validate();
        if (!(cfg.dt > 0.0) || !(cfg.t_end > 0.0))
            throw ValidationError("dt and t_end must be positive");
        if (cfg.sample_every < 1) throw ValidationError("sample_every must be >= 1");
        if (!(cfg.transient_fraction >= 0.0 && cfg.transient_fraction < 1.0))
            throw ValidationError("transient_fraction must be in [0, 1)");
        const Z4Report r = check_z4_symmetry(cfg.params.spec.canonicalized());
        if (!r.passes) {
            std::string msg = "perturbation spec violates the lattice symmetry law:";
            for (const auto& v : r.violating_terms) msg += "\n  " + v;
            throw ValidationError(msg);
        }
    }
    if (cfg.mode == "pde") {
        const GridSpec grid(cfg.n);  // throws when n < 50
        if (!(cfg.pde_dt > 0.0) || cfg.pde_dt > grid.diffusion_dt_limit())
            throw ValidationError("pde dt violates the diffusion stability bound");
        if (!(cfg.pde_t_end > 0.0)) throw ValidationError("pde t_end must be positive");
        if (cfg.settle_time < 0.0) throw ValidationError("settle_time must be >= 0");
        if (cfg.pde_sample_every < 1) throw ValidationError("sample_every must be >= 1");
        if (cfg.threads < 1) throw ValidationError("threads must be >= 1");
        if (cfg.ic_rotation < 0 || cfg.ic_rotation > 3)
            throw ValidationError("ic_rotation must be 0..3");
    }
    if (cfg.mode == "analyze") {
        if (cfg.analyze_input.empty()) throw ValidationError("analyze mode needs input = <tip csv>");
        if (!(cfg.transient_fraction >= 0.0 && cfg.transient_fraction < 1.0))
            throw ValidationError("transient_fraction must be in [0, 1)");
        if (!(cfg.lattice_spacing > 0.0)) throw ValidationError("lattice_spacing must be > 0");
    }
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

namespace {

const std::map<std::string, std::string>& preset_table() {
    static const std::map<std::string, std::string> presets = {
        {"torus", R"(# invariant-torus experiment on the center bundle
[run]
mode = ode
dt = 1e-3
t_end = 2000
sample_every = 100
transient_fraction = 0.5

[system]
V = 3.14159265358979312, 1.41421356237309515
omega = 0
epsilon = 0.1
psi0 = 1.0, 2.0
phi0 = 0.4

[spec]
fpsi1 = sin(5p)*sin(a+b) + cos(5p)*sin(a-b)
fpsi2 = cos(2p)*cos(2a+3b) - cos(2p)*cos(3a-2b)
fphi = 2*sin(4p) + cos(7a+6b) + cos(6a-7b)
)"},
        {"exp1", R"(# anchoring run, first coefficient set
[run]
mode = pde

[pde]
n = 200
dt = 0.01
t_end = 600
settle_time = 200
sample_every = 25
A1 = 0.028
B1 = 0.05
C1 = 0.06
A2 = -0.0044
B2 = -0.02
C2 = 0.01
tip_start = 5.0, 2.0
threads = 1

[analyze]
transient_fraction = 0.5
)"},
        {"exp2", R"(# conjugate multistability run, second coefficient set (5 initial conditions)
[run]
mode = pde

[pde]
n = 200
dt = 0.01
t_end = 600
settle_time = 200
sample_every = 25
A1 = 0.016
B1 = 0.05
C1 = 0.0001
A2 = 0.006
B2 = -0.0001
C2 = 0.03
tip_start = 5.0, 2.0
tip_start_extra = -2.8, 7.9
threads = 1

[analyze]
transient_fraction = 0.5
)"},
        {"exp3", R"(# meander run, third coefficient set (4 conjugate initial conditions)
[run]
mode = pde

[pde]
n = 200
dt = 0.01
t_end = 600
settle_time = 200
sample_every = 25
A1 = -0.016
B1 = -0.05
C1 = -0.0001
A2 = -0.012
B2 = 0.0001
C2 = -0.06
tip_start = 5.0, 2.0
threads = 1

[analyze]
transient_fraction = 0.5
)"},
    };
    return presets;
}

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& [name, text] : preset_table()) names.push_back(name);
    return names;
}

const std::string& preset_config_text(const std::string& name) {
    const auto& table = preset_table();
    const auto it = table.find(name);
    if (it == table.end()) {
        std::string msg = "unknown preset '" + name + "'; available:";
        for (const auto& [k, v] : table) msg += " " + k;
        throw ConfigError(msg);
    }
    return it->second;
}

ExperimentConfig preset_config(const std::string& name) {
    return parse_config(preset_config_text(name));
}

}  // namespace latwave
