#include <latwave/perturbation.hpp>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <map>
#include <random>
#include <sstream>
#include <tuple>

namespace latwave {

namespace {

double factor_value(Factor kind, double arg) {
    switch (kind) {
        case Factor::One: return 1.0;
        case Factor::Sin: return std::sin(arg);
        case Factor::Cos: return std::cos(arg);
    }
    return 1.0;
}

std::tuple<int, int, int, int, int> term_key(const TrigTerm& t) {
    return {static_cast<int>(t.phi_kind), t.phi_mode,
            static_cast<int>(t.psi_kind), t.n1, t.n2};
}

// Normalizes one term; returns false when the term is identically zero.
bool canonicalize_term(TrigTerm& t) {
    if (t.coeff == 0.0) return false;
    if (t.phi_kind == Factor::One) {
        t.phi_mode = 0;
    } else if (t.phi_mode == 0) {
        if (t.phi_kind == Factor::Sin) return false;
        t.phi_kind = Factor::One;
    } else if (t.phi_mode < 0) {
        t.phi_mode = -t.phi_mode;
        if (t.phi_kind == Factor::Sin) t.coeff = -t.coeff;
    }
    if (t.psi_kind == Factor::One) {
        t.n1 = t.n2 = 0;
    } else if (t.n1 == 0 && t.n2 == 0) {
        if (t.psi_kind == Factor::Sin) return false;
        t.psi_kind = Factor::One;
    } else {
        const int leading = (t.n1 != 0) ? t.n1 : t.n2;
        if (leading < 0) {
            t.n1 = -t.n1;
            t.n2 = -t.n2;
            if (t.psi_kind == Factor::Sin) t.coeff = -t.coeff;
        }
    }
    return true;
}

}  // namespace

double TrigTerm::eval(const Vec2& psi, double phi) const {
    return coeff * factor_value(phi_kind, phi_mode * phi) *
           factor_value(psi_kind, n1 * psi.x() + n2 * psi.y());
}

bool same_shape(const TrigTerm& a, const TrigTerm& b) {
    return term_key(a) == term_key(b);
}

bool term_key_less(const TrigTerm& a, const TrigTerm& b) {
    return term_key(a) < term_key(b);
}

double TrigPoly::eval(const Vec2& psi, double phi) const {
    double s = 0.0;
    for (const auto& t : terms_) s += t.eval(psi, phi);
    return s;
}

TrigPoly TrigPoly::dphi() const {
    TrigPoly out;
    for (const auto& t : terms_) {
        if (t.phi_kind == Factor::One) continue;
        TrigTerm d = t;
        if (t.phi_kind == Factor::Sin) {
            d.phi_kind = Factor::Cos;
            d.coeff = t.coeff * t.phi_mode;
        } else {
            d.phi_kind = Factor::Sin;
            d.coeff = -t.coeff * t.phi_mode;
        }
        out.add(d);
    }
    return out.canonicalized();
}

std::pair<TrigPoly, TrigPoly> TrigPoly::grad_psi() const {
    TrigPoly d1, d2;
    for (const auto& t : terms_) {
        if (t.psi_kind == Factor::One) continue;
        TrigTerm d = t;
        double sign;
        if (t.psi_kind == Factor::Sin) {
            d.psi_kind = Factor::Cos;
            sign = 1.0;
        } else {
            d.psi_kind = Factor::Sin;
            sign = -1.0;
        }
        TrigTerm g1 = d, g2 = d;
        g1.coeff = sign * t.coeff * t.n1;
        g2.coeff = sign * t.coeff * t.n2;
        if (g1.coeff != 0.0) d1.add(g1);
        if (g2.coeff != 0.0) d2.add(g2);
    }
    return {d1.canonicalized(), d2.canonicalized()};
}

TrigPoly TrigPoly::canonicalized() const {
    std::map<std::tuple<int, int, int, int, int>, double> acc;
    for (TrigTerm t : terms_) {
        if (!canonicalize_term(t)) continue;
        acc[term_key(t)] += t.coeff;
    }
    TrigPoly out;
    for (const auto& [key, coeff] : acc) {
        if (coeff == 0.0) continue;
        TrigTerm t;
        t.phi_kind = static_cast<Factor>(std::get<0>(key));
        t.phi_mode = std::get<1>(key);
        t.psi_kind = static_cast<Factor>(std::get<2>(key));
        t.n1 = std::get<3>(key);
        t.n2 = std::get<4>(key);
        t.coeff = coeff;
        out.add(t);
    }
    return out;
}

bool TrigPoly::is_canonical() const {
    return *this == canonicalized();
}

double TrigPoly::coeff_bound() const {
    double s = 0.0;
    for (const auto& t : terms_) s += std::abs(t.coeff);
    return s;
}

TrigPoly TrigPoly::scaled(double s) const {
    TrigPoly out = *this;
    for (auto& t : out.terms_) t.coeff *= s;
    return out;
}

TrigPoly TrigPoly::minus(const TrigPoly& other, double factor) const {
    TrigPoly out = *this;
    for (TrigTerm t : other.terms_) {
        t.coeff *= -factor;
        out.add(t);
    }
    return out.canonicalized();
}

bool TrigPoly::operator==(const TrigPoly& other) const {
    if (terms_.size() != other.terms_.size()) return false;
    for (size_t i = 0; i < terms_.size(); ++i) {
        if (!same_shape(terms_[i], other.terms_[i])) return false;
        if (terms_[i].coeff != other.terms_[i].coeff) return false;
    }
    return true;
}

PerturbationSpec PerturbationSpec::canonicalized() const {
    return {f_psi1.canonicalized(), f_psi2.canonicalized(), f_phi.canonicalized()};
}

bool PerturbationSpec::is_canonical() const {
    return f_psi1.is_canonical() && f_psi2.is_canonical() && f_phi.is_canonical();
}

PerturbationValue evaluate(const PerturbationSpec& spec, const Vec2& psi, double phi) {
    return {Vec2(spec.f_psi1.eval(psi, phi), spec.f_psi2.eval(psi, phi)),
            spec.f_phi.eval(psi, phi)};
}

TrigTerm z4_transform_term(const TrigTerm& t) {
    TrigTerm out = t;
    // -J psi = (-psi2, psi1), so n1 psi1 + n2 psi2 -> n2 psi1 - n1 psi2.
    out.n1 = t.n2;
    out.n2 = -t.n1;
    if (t.phi_kind != Factor::One) {
        const int s = ((t.phi_mode % 4) + 4) % 4;
        switch (s) {
            case 0: break;
            case 1:
                out.phi_kind = (t.phi_kind == Factor::Cos) ? Factor::Sin : Factor::Cos;
                if (t.phi_kind == Factor::Cos) out.coeff = -out.coeff;
                break;
            case 2: out.coeff = -out.coeff; break;
            case 3:
                out.phi_kind = (t.phi_kind == Factor::Cos) ? Factor::Sin : Factor::Cos;
                if (t.phi_kind == Factor::Sin) out.coeff = -out.coeff;
                break;
        }
    }
    return out;
}

TrigPoly z4_transform(const TrigPoly& p) {
    TrigPoly out;
    for (const auto& t : p.terms()) out.add(z4_transform_term(t));
    return out.canonicalized();
}

namespace {

std::string describe_term(const TrigTerm& t);  // defined with the serializer below

void compare_component(const std::string& name, const TrigPoly& orig,
                       const TrigPoly& transformed, Z4Report& report) {
    const double tol = 1e-12 * std::max(1.0, orig.coeff_bound());
    size_t i = 0, j = 0;
    const auto& a = orig.terms();
    const auto& b = transformed.terms();
    auto flag = [&](const TrigTerm& t, double delta) {
        std::ostringstream os;
        os << name << ": " << describe_term(t) << " (coefficient mismatch " << delta << ")";
        report.violating_terms.push_back(os.str());
        report.passes = false;
    };
    while (i < a.size() || j < b.size()) {
        if (j >= b.size() || (i < a.size() && term_key_less(a[i], b[j]))) {
            flag(a[i], a[i].coeff);
            ++i;
        } else if (i >= a.size() || term_key_less(b[j], a[i])) {
            flag(b[j], -b[j].coeff);
            ++j;
        } else {
            const double delta = a[i].coeff - b[j].coeff;
            if (std::abs(delta) > tol) flag(a[i], delta);
            ++i;
            ++j;
        }
    }
}

}  // namespace

Z4Report check_z4_symmetry(const PerturbationSpec& spec) {
    if (!spec.is_canonical())
        throw ValidationError("check_z4_symmetry requires a canonical spec");

    Z4Report report;
    report.passes = true;
    compare_component("fpsi1", spec.f_psi1, z4_transform(spec.f_psi1), report);
    compare_component("fpsi2", spec.f_psi2, z4_transform(spec.f_psi2), report);
    compare_component("fphi", spec.f_phi, z4_transform(spec.f_phi), report);

    // Numeric guard against canonicalization bugs.
    std::mt19937 rng(987654321u);
    std::uniform_real_distribution<double> u(0.0, two_pi);
    const double bound = spec.f_psi1.coeff_bound() + spec.f_psi2.coeff_bound() +
                         spec.f_phi.coeff_bound();
    const double tol = 1e-12 * std::max(1.0, bound);
    for (int k = 0; k < 64; ++k) {
        const Vec2 psi(u(rng), u(rng));
        const double phi = u(rng);
        const Vec2 psi_t(-psi.y(), psi.x());  // -J psi
        const double phi_t = phi + std::numbers::pi / 2;
        const auto lhs = evaluate(spec, psi_t, phi_t);
        const auto rhs = evaluate(spec, psi, phi);
        const double r = std::max((lhs.f_psi - rhs.f_psi).cwiseAbs().maxCoeff(),
                                  std::abs(lhs.f_phi - rhs.f_phi));
        report.max_numeric_residual = std::max(report.max_numeric_residual, r);
        if (r > tol) report.passes = false;
    }
    return report;
}

// ---------------------------------------------------------------------------
// Grammar
// ---------------------------------------------------------------------------

namespace {

struct LinearCombo {
    bool uses_phi = false;
    bool uses_psi = false;
    int m = 0, n1 = 0, n2 = 0;
};

void strip_spaces(std::string& s) {
    s.erase(std::remove_if(s.begin(), s.end(),
                           [](unsigned char c) { return std::isspace(c); }),
            s.end());
}

// Splits at top-level '+'/'-' (outside parentheses); signs stick to items.
std::vector<std::string> split_signed(const std::string& s) {
    std::vector<std::string> items;
    std::string cur;
    int depth = 0;
    for (size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (c == '(') ++depth;
        if (c == ')') --depth;
        const bool exponent_sign =
            i > 0 && (s[i - 1] == 'e' || s[i - 1] == 'E') && i > 1 &&
            (std::isdigit(static_cast<unsigned char>(s[i - 2])) || s[i - 2] == '.');
        if (depth == 0 && (c == '+' || c == '-') && i > 0 && !cur.empty() && !exponent_sign) {
            items.push_back(cur);
            cur.clear();
        }
        cur += c;
    }
    if (!cur.empty()) items.push_back(cur);
    return items;
}

int parse_mode_int(const std::string& s) {
    if (s.empty()) return 1;
    if (s == "+") return 1;
    if (s == "-") return -1;
    size_t pos = 0;
    int sign = 1;
    if (s[pos] == '+' || s[pos] == '-') {
        sign = (s[pos] == '-') ? -1 : 1;
        ++pos;
    }
    if (pos >= s.size()) throw ParseError("empty mode");
    for (size_t i = pos; i < s.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i])))
            throw ParseError("non-integer mode '" + s + "'");
    return sign * std::atoi(s.c_str() + pos);
}

LinearCombo parse_combo(const std::string& arg) {
    LinearCombo combo;
    for (const std::string& item : split_signed(arg)) {
        if (item.empty()) throw ParseError("empty item in '" + arg + "'");
        const char sym = item.back();
        const std::string coeff_str = item.substr(0, item.size() - 1);
        const int k = parse_mode_int(coeff_str);
        switch (sym) {
            case 'p': combo.uses_phi = true; combo.m += k; break;
            case 'a': combo.uses_psi = true; combo.n1 += k; break;
            case 'b': combo.uses_psi = true; combo.n2 += k; break;
            default:
                throw ParseError(std::string("unknown symbol '") + sym + "' in '" + arg + "'");
        }
    }
    if (combo.uses_phi && combo.uses_psi)
        throw ParseError("mixed phi/psi argument '" + arg + "'");
    return combo;
}

TrigTerm parse_term(std::string item) {
    double sign = 1.0;
    if (!item.empty() && (item[0] == '+' || item[0] == '-')) {
        if (item[0] == '-') sign = -1.0;
        item.erase(item.begin());
    }
    if (item.empty()) throw ParseError("empty term");

    // Split factors at top-level '*'.
    std::vector<std::string> factors;
    {
        std::string cur;
        int depth = 0;
        for (char c : item) {
            if (c == '(') ++depth;
            if (c == ')') --depth;
            if (c == '*' && depth == 0) {
                factors.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        factors.push_back(cur);
    }

    TrigTerm t;
    t.coeff = sign;
    bool have_coeff = false, have_phi = false, have_psi = false;
    for (const std::string& f : factors) {
        if (f.empty()) throw ParseError("empty factor in '" + item + "'");
        if (f.rfind("sin(", 0) == 0 || f.rfind("cos(", 0) == 0) {
            if (f.back() != ')') throw ParseError("missing ')' in '" + f + "'");
            const Factor kind = (f[0] == 's') ? Factor::Sin : Factor::Cos;
            const LinearCombo combo = parse_combo(f.substr(4, f.size() - 5));
            if (combo.uses_phi) {
                if (have_phi) throw ParseError("duplicate phi factor in '" + item + "'");
                have_phi = true;
                t.phi_kind = kind;
                t.phi_mode = combo.m;
            } else if (combo.uses_psi) {
                if (have_psi) throw ParseError("duplicate psi factor in '" + item + "'");
                have_psi = true;
                t.psi_kind = kind;
                t.n1 = combo.n1;
                t.n2 = combo.n2;
            } else {
                throw ParseError("empty trig argument in '" + f + "'");
            }
        } else {
            char* end = nullptr;
            const double v = std::strtod(f.c_str(), &end);
            if (end != f.c_str() + f.size())
                throw ParseError("malformed factor '" + f + "'");
            if (have_coeff) throw ParseError("duplicate coefficient in '" + item + "'");
            have_coeff = true;
            t.coeff *= v;
        }
    }
    return t;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string format_combo_part(int k, const char* sym, bool leading) {
    if (k == 0) return "";
    std::string s;
    if (k < 0) s += "-";
    else if (!leading) s += "+";
    if (std::abs(k) != 1) s += std::to_string(std::abs(k));
    s += sym;
    return s;
}

std::string describe_term(const TrigTerm& t) {
    std::string s;
    const double c = std::abs(t.coeff);
    std::vector<std::string> factors;
    if (t.phi_kind != Factor::One) {
        std::string f = (t.phi_kind == Factor::Sin) ? "sin(" : "cos(";
        f += format_combo_part(t.phi_mode, "p", true);
        f += ")";
        factors.push_back(f);
    }
    if (t.psi_kind != Factor::One) {
        std::string f = (t.psi_kind == Factor::Sin) ? "sin(" : "cos(";
        std::string arg = format_combo_part(t.n1, "a", true);
        arg += format_combo_part(t.n2, "b", arg.empty());
        f += arg + ")";
        factors.push_back(f);
    }
    if (factors.empty() || c != 1.0) s += format_double(c);
    for (const auto& f : factors) {
        if (!s.empty()) s += "*";
        s += f;
    }
    return s;
}

std::string serialize_signed(const std::vector<TrigTerm>& terms) {
    std::string out;
    for (const auto& t : terms) {
        if (out.empty()) {
            if (t.coeff < 0) out += "-";
        } else {
            out += (t.coeff < 0) ? " - " : " + ";
        }
        out += describe_term(t);
    }
    return out;
}

}  // namespace

TrigPoly parse_trig_poly(const std::string& text) {
    std::string s = text;
    strip_spaces(s);
    TrigPoly out;
    if (s.empty() || s == "0") return out;
    for (const std::string& item : split_signed(s)) out.add(parse_term(item));
    return out.canonicalized();
}

PerturbationSpec parse_spec(const std::string& text) {
    PerturbationSpec spec;
    bool seen1 = false, seen2 = false, seenp = false;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string stripped = line;
        strip_spaces(stripped);
        if (stripped.empty()) continue;
        const size_t sep = stripped.find_first_of(":=");
        if (sep == std::string::npos)
            throw ParseError("line " + std::to_string(lineno) + ": expected 'name = terms'");
        const std::string key = stripped.substr(0, sep);
        const std::string value = stripped.substr(sep + 1);
        try {
            if (key == "fpsi1") {
                if (seen1) throw ParseError("duplicate fpsi1");
                seen1 = true;
                spec.f_psi1 = parse_trig_poly(value);
            } else if (key == "fpsi2") {
                if (seen2) throw ParseError("duplicate fpsi2");
                seen2 = true;
                spec.f_psi2 = parse_trig_poly(value);
            } else if (key == "fphi") {
                if (seenp) throw ParseError("duplicate fphi");
                seenp = true;
                spec.f_phi = parse_trig_poly(value);
            } else {
                throw ParseError("unknown component '" + key + "'");
            }
        } catch (const ParseError& e) {
            throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return spec;
}

std::string serialize_trig_poly(const TrigPoly& p) {
    return serialize_signed(p.terms());
}

std::string serialize_spec(const PerturbationSpec& spec) {
    std::string out;
    if (!spec.f_psi1.empty()) out += "fpsi1 = " + serialize_trig_poly(spec.f_psi1) + "\n";
    if (!spec.f_psi2.empty()) out += "fpsi2 = " + serialize_trig_poly(spec.f_psi2) + "\n";
    if (!spec.f_phi.empty()) out += "fphi = " + serialize_trig_poly(spec.f_phi) + "\n";
    return out;
}

PerturbationSpec torus_preset_spec() {
    return parse_spec(
        "fpsi1 = sin(5p)*sin(a+b) + cos(5p)*sin(a-b)\n"
        "fpsi2 = cos(2p)*cos(2a+3b) - cos(2p)*cos(3a-2b)\n"
        "fphi  = 2*sin(4p) + cos(7a+6b) + cos(6a-7b)\n");
}

}  // namespace latwave
