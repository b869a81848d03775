#pragma once

#include <latwave/se2.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace latwave {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Factor : char { One, Sin, Cos };

/// One product term coeff * f(m*phi) * g(n1*psi1 + n2*psi2) with
/// f, g in {1, sin, cos}.  Canonical form: factors of kind One carry
/// zero modes; phi mode m >= 1 otherwise; the leading nonzero psi mode
/// is positive (cos is even, sin flips the coefficient sign).
struct TrigTerm {
    double coeff = 0.0;
    Factor phi_kind = Factor::One;
    int phi_mode = 0;
    Factor psi_kind = Factor::One;
    int n1 = 0;
    int n2 = 0;

    double eval(const Vec2& psi, double phi) const;
};

bool same_shape(const TrigTerm& a, const TrigTerm& b);
bool term_key_less(const TrigTerm& a, const TrigTerm& b);

/// Finite sum of TrigTerms on T^3 (or T^2 / S^1 when modes are unused).
class TrigPoly {
public:
    TrigPoly() = default;
    explicit TrigPoly(std::vector<TrigTerm> terms) : terms_(std::move(terms)) {}

    const std::vector<TrigTerm>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    double eval(const Vec2& psi, double phi) const;
    double eval_phi(double phi) const { return eval(Vec2::Zero(), phi); }

    /// d/dphi, exact termwise.
    TrigPoly dphi() const;
    /// Gradient in psi, exact termwise.
    std::pair<TrigPoly, TrigPoly> grad_psi() const;

    /// Merge duplicate shapes, normalize signs/modes, sort.  Idempotent.
    TrigPoly canonicalized() const;
    bool is_canonical() const;

    /// Sum of |coeff|: an upper bound for |value| on the torus.
    double coeff_bound() const;

    void add(const TrigTerm& t) { terms_.push_back(t); }

    TrigPoly scaled(double s) const;
    TrigPoly minus(const TrigPoly& other, double factor = 1.0) const;

    bool operator==(const TrigPoly& other) const;

private:
    std::vector<TrigTerm> terms_;
};

/// The symmetry-breaking data (F^Psi_1, F^Psi_2, F^phi) as exact
/// trigonometric polynomials on T^3.
struct PerturbationSpec {
    TrigPoly f_psi1, f_psi2, f_phi;

    PerturbationSpec canonicalized() const;
    bool is_canonical() const;
};

struct PerturbationValue {
    Vec2 f_psi;
    double f_phi;
};

PerturbationValue evaluate(const PerturbationSpec& spec, const Vec2& psi, double phi);

/// Image of a term under (psi, phi) -> (-J psi, phi + pi/2): psi modes
/// (n1, n2) -> (n2, -n1) and the phi factor picks up a quarter turn.
TrigTerm z4_transform_term(const TrigTerm& t);
TrigPoly z4_transform(const TrigPoly& p);

struct Z4Report {
    bool passes = false;
    std::vector<std::string> violating_terms;
    double max_numeric_residual = 0.0;
};

/// Symbolic invariance check of each component under the quarter-turn
/// substitution, cross-checked numerically at random states.
Z4Report check_z4_symmetry(const PerturbationSpec& spec);

/// Term grammar: `coeff*trig(k p)*trig(n1 a + n2 b)`; p = phi, a = psi1,
/// b = psi2; factors optional; terms separated by top-level +/-.
TrigPoly parse_trig_poly(const std::string& text);

/// Multi-line fragment: lines `fpsi1 = ...`, `fpsi2 = ...`, `fphi = ...`
/// (':' also accepted), '#' comments.
PerturbationSpec parse_spec(const std::string& text);

std::string serialize_trig_poly(const TrigPoly& p);
std::string serialize_spec(const PerturbationSpec& spec);

/// Perturbation used by the bundled `torus` preset.
PerturbationSpec torus_preset_spec();

}  // namespace latwave
