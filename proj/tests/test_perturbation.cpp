#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <latwave/perturbation.hpp>

#include <random>

using namespace latwave;

TEST_CASE("parse single terms") {
    TrigPoly p = parse_trig_poly("2*sin(4p)");
    REQUIRE(p.terms().size() == 1);
    CHECK(p.terms()[0].coeff == 2.0);
    CHECK(p.terms()[0].phi_kind == Factor::Sin);
    CHECK(p.terms()[0].phi_mode == 4);
    CHECK(p.terms()[0].psi_kind == Factor::One);

    p = parse_trig_poly("cos(7a+6b)");
    REQUIRE(p.terms().size() == 1);
    CHECK(p.terms()[0].coeff == 1.0);
    CHECK(p.terms()[0].psi_kind == Factor::Cos);
    CHECK(p.terms()[0].n1 == 7);
    CHECK(p.terms()[0].n2 == 6);

    p = parse_trig_poly("sin(5p)*sin(a+b)");
    REQUIRE(p.terms().size() == 1);
    CHECK(p.terms()[0].phi_kind == Factor::Sin);
    CHECK(p.terms()[0].phi_mode == 5);
    CHECK(p.terms()[0].psi_kind == Factor::Sin);
    CHECK(p.terms()[0].n1 == 1);
    CHECK(p.terms()[0].n2 == 1);
}

TEST_CASE("parse errors") {
    CHECK_THROWS_AS(parse_trig_poly("sin(1.5a)"), ParseError);
    CHECK_THROWS_AS(parse_trig_poly("tan(2p)"), ParseError);
    CHECK_THROWS_AS(parse_trig_poly("sin(2p"), ParseError);
    CHECK_THROWS_AS(parse_trig_poly("sin(a+p)"), ParseError);
    CHECK_THROWS_AS(parse_spec("fzeta = sin(p)"), ParseError);
    try {
        parse_spec("fphi = sin(p)\nfpsi1 = sin(1.5a)\n");
        CHECK(false);
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("evaluation of the torus preset spec") {
    const PerturbationSpec spec = torus_preset_spec();
    auto v = evaluate(spec, Vec2(0, 0), 0.0);
    CHECK(v.f_phi == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(v.f_psi.norm() == doctest::Approx(0.0).epsilon(1e-15));

    const PerturbationSpec empty;
    v = evaluate(empty, Vec2(1, 2), 0.5);
    CHECK(v.f_phi == 0.0);
    CHECK(v.f_psi.norm() == 0.0);
}

TEST_CASE("canonicalization is idempotent and evaluation-preserving") {
    // Deliberately messy input: negative modes, duplicates, zero terms.
    TrigPoly raw;
    raw.add({1.5, Factor::Sin, -3, Factor::Cos, -2, 1});
    raw.add({-0.5, Factor::Cos, 2, Factor::Sin, 0, -4});
    raw.add({0.25, Factor::One, 7, Factor::Sin, 1, 1});
    raw.add({0.75, Factor::Sin, 3, Factor::Cos, 2, -1});
    raw.add({0.0, Factor::Cos, 1, Factor::Cos, 1, 0});
    raw.add({2.0, Factor::Sin, 0, Factor::Cos, 1, 1});  // sin(0) kills it

    const TrigPoly canon = raw.canonicalized();
    CHECK(canon.is_canonical());
    CHECK(canon == canon.canonicalized());

    std::mt19937 rng(1234u);
    std::uniform_real_distribution<double> u(0.0, two_pi);
    for (int i = 0; i < 200; ++i) {
        const Vec2 psi(u(rng), u(rng));
        const double phi = u(rng);
        CHECK(std::abs(raw.eval(psi, phi) - canon.eval(psi, phi)) < 1e-14);
    }
}

TEST_CASE("parse -> serialize -> parse is the identity") {
    const PerturbationSpec spec = torus_preset_spec();
    const PerturbationSpec again = parse_spec(serialize_spec(spec));
    CHECK(spec.f_psi1 == again.f_psi1);
    CHECK(spec.f_psi2 == again.f_psi2);
    CHECK(spec.f_phi == again.f_phi);

    // Awkward coefficients survive the round trip exactly.
    TrigPoly p = parse_trig_poly("0.1*sin(3p)*cos(2a-5b) - 7.25e-3*cos(b) + 0.625");
    const TrigPoly q = parse_trig_poly(serialize_trig_poly(p));
    CHECK(p == q);
}

TEST_CASE("random canonical specs round-trip through text") {
    std::mt19937 rng(160914u);
    std::uniform_real_distribution<double> c(-3.0, 3.0);
    std::uniform_int_distribution<int> mode(-9, 9), kindpick(0, 2), nterms(1, 6);
    for (int trial = 0; trial < 40; ++trial) {
        PerturbationSpec spec;
        for (TrigPoly* comp : {&spec.f_psi1, &spec.f_psi2, &spec.f_phi}) {
            TrigPoly p;
            const int n = nterms(rng);
            for (int t = 0; t < n; ++t)
                p.add({c(rng), static_cast<Factor>(kindpick(rng)), mode(rng),
                       static_cast<Factor>(kindpick(rng)), mode(rng), mode(rng)});
            *comp = p.canonicalized();
        }
        const PerturbationSpec again = parse_spec(serialize_spec(spec));
        CHECK(again.f_psi1 == spec.f_psi1);
        CHECK(again.f_psi2 == spec.f_psi2);
        CHECK(again.f_phi == spec.f_phi);
    }
}

TEST_CASE("z4 symmetry of the torus preset spec") {
    const Z4Report r = check_z4_symmetry(torus_preset_spec());
    CHECK(r.passes);
    CHECK(r.violating_terms.empty());
    CHECK(r.max_numeric_residual < 1e-12);
}

TEST_CASE("z4 symmetry rejects sin(phi)") {
    PerturbationSpec spec;
    spec.f_phi = parse_trig_poly("sin(p)");
    const Z4Report r = check_z4_symmetry(spec);
    CHECK(!r.passes);
    CHECK(!r.violating_terms.empty());
}

TEST_CASE("empty spec passes") {
    const Z4Report r = check_z4_symmetry(PerturbationSpec{});
    CHECK(r.passes);
}

TEST_CASE("non-canonical spec is rejected") {
    PerturbationSpec spec;
    TrigPoly p;
    p.add({1.0, Factor::Sin, -2, Factor::One, 0, 0});
    spec.f_phi = p;
    CHECK_THROWS_AS(check_z4_symmetry(spec), ValidationError);
}

TEST_CASE("quarter-turn transform matches direct evaluation") {
    std::mt19937 rng(777u);
    std::uniform_real_distribution<double> u(0.0, two_pi);
    std::uniform_int_distribution<int> mode(-5, 5);
    std::uniform_int_distribution<int> kindpick(0, 2);
    for (int trial = 0; trial < 50; ++trial) {
        TrigTerm t;
        t.coeff = 1.0 + 0.1 * trial;
        t.phi_kind = static_cast<Factor>(kindpick(rng));
        t.phi_mode = mode(rng);
        t.psi_kind = static_cast<Factor>(kindpick(rng));
        t.n1 = mode(rng);
        t.n2 = mode(rng);
        TrigPoly p;
        p.add(t);
        const TrigPoly canon = p.canonicalized();
        const TrigPoly image = z4_transform(canon);
        for (int i = 0; i < 8; ++i) {
            const Vec2 psi(u(rng), u(rng));
            const double phi = u(rng);
            // image(psi, phi) must equal canon(-J psi, phi + pi/2)
            const Vec2 psi_t(-psi.y(), psi.x());
            CHECK(std::abs(image.eval(psi, phi) -
                           canon.eval(psi_t, phi + std::numbers::pi / 2)) < 1e-12);
        }
    }
}

TEST_CASE("derivatives are exact") {
    const TrigPoly p = parse_trig_poly("2*sin(4p) + cos(3p)*cos(2a-b)");
    const TrigPoly d = p.dphi();
    std::mt19937 rng(55u);
    std::uniform_real_distribution<double> u(0.0, two_pi);
    for (int i = 0; i < 50; ++i) {
        const Vec2 psi(u(rng), u(rng));
        const double phi = u(rng);
        const double h = 1e-6;
        const double fd = (p.eval(psi, phi + h) - p.eval(psi, phi - h)) / (2 * h);
        CHECK(std::abs(d.eval(psi, phi) - fd) < 1e-7);
    }
    const auto [g1, g2] = p.grad_psi();
    for (int i = 0; i < 50; ++i) {
        const Vec2 psi(u(rng), u(rng));
        const double phi = u(rng);
        const double h = 1e-6;
        const double fd1 = (p.eval(psi + Vec2(h, 0), phi) - p.eval(psi - Vec2(h, 0), phi)) / (2 * h);
        const double fd2 = (p.eval(psi + Vec2(0, h), phi) - p.eval(psi - Vec2(0, h), phi)) / (2 * h);
        CHECK(std::abs(g1.eval(psi, phi) - fd1) < 1e-6);
        CHECK(std::abs(g2.eval(psi, phi) - fd2) < 1e-6);
    }
}
