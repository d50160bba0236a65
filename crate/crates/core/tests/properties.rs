use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fpk::catalog::{generalized_heisenberg, regression_corpus};
use fpk::fstruct::{classify, stable_complex_structure, validate_fpk, FpkStructure};
use fpk::hamjac::{
    reeb_field, verify_jacobi_suite, EtaChoice, HamiltonianCalculus, HAMILTONIAN_TOL,
};
use fpk::symexpr::{
    evaluate_at, expr_zero, exprs_zero, parse_expr, random_polynomial, Chart, Expr,
};
use fpk::sympl::{
    build_symplectization, sign_change_across_zero, verify_determinant, verify_phi_power_vanishes,
};
use fpk::tensor::{EndField, VectorField};
use fpk::Error;

const TOL: f64 = 1e-9;

/// Builds an expression and its value at `x` side by side, so the folding
/// done by the constructors is checked against plain float arithmetic.
#[allow(clippy::eq_op)]
fn twin(rng: &mut ChaCha8Rng, x: &[f64], depth: u32) -> (Expr, f64) {
    if depth == 0 || rng.gen_bool(0.25) {
        if rng.gen_bool(0.6) {
            let i = rng.gen_range(0..x.len());
            return (Expr::var(i), x[i]);
        }
        let c = *[0.0, 1.0, -1.0, 2.5].get(rng.gen_range(0..4)).unwrap();
        return (Expr::num(c), c);
    }
    let (a, va) = twin(rng, x, depth - 1);
    match rng.gen_range(0..8) {
        0 => {
            let (b, vb) = twin(rng, x, depth - 1);
            (&a + &b, va + vb)
        }
        1 => {
            let (b, vb) = twin(rng, x, depth - 1);
            (&a - &b, va - vb)
        }
        2 => {
            let (b, vb) = twin(rng, x, depth - 1);
            (&a * &b, va * vb)
        }
        3 => {
            let (b, vb) = twin(rng, x, depth - 1);
            (&a / &(Expr::num(2.0) + b.powi(2)), va / (2.0 + vb * vb))
        }
        4 => (-&a, -va),
        5 => (&a - &a, 0.0),
        6 => (a.sin(), va.sin()),
        _ => (a.cos().exp(), va.cos().exp()),
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

fn heis(n: usize, alphas: &[f64]) -> FpkStructure {
    generalized_heisenberg(n, alphas.len(), alphas).unwrap()
}

fn alphas() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 1..=2)
        .prop_filter("some constant away from zero", |a| a.iter().any(|v| v.abs() > 0.2))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn folding_preserves_values(seed in any::<u64>(), x in prop::collection::vec(-2.0f64..2.0, 3)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (e, want) = twin(&mut rng, &x, 5);
        let got = evaluate_at(&e, &x).unwrap();
        prop_assert!(close(got, want), "{} vs {}", got, want);
    }

    #[test]
    fn display_then_parse_evaluates_the_same(seed in any::<u64>(), x in prop::collection::vec(-2.0f64..2.0, 3)) {
        let chart = Chart::unit_box(&["u", "v", "w"], 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (e, _) = twin(&mut rng, &x, 5);
        let text = e.display(&chart).to_string();
        let back = parse_expr(&text, &chart).unwrap();
        let (a, b) = (evaluate_at(&e, &x).unwrap(), evaluate_at(&back, &x).unwrap());
        prop_assert!(close(a, b), "{}: {} vs {}", text, a, b);
    }

    #[test]
    fn parser_never_panics_and_rejections_have_positions(text in "[-+*/^() xyz0-9.a-z]{0,24}") {
        let chart = Chart::unit_box(&["x", "y", "z"], 1).unwrap();
        match parse_expr(&text, &chart) {
            Ok(_) => {}
            Err(Error::Syntax { position, .. }) => prop_assert!(position <= text.len()),
            Err(Error::UnknownCoordinate(name)) => prop_assert!(text.contains(&name)),
            Err(e) => prop_assert!(false, "unexpected {:?}", e),
        }
    }

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>()) {
        let chart = Chart::unit_box(&["x", "y"], seed).unwrap();
        let e = parse_expr("sin(x)^2 + cos(y)^2 - 1", &chart).unwrap();
        prop_assert_eq!(expr_zero(&e, &chart, 30, TOL).unwrap(), expr_zero(&e, &chart, 30, TOL).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn heisenberg_family_validates_and_refits(n in 1usize..=2, a in alphas(), seed in any::<u64>()) {
        let s = heis(n, &a).reseeded(seed);
        for r in validate_fpk(&s, 30, TOL).unwrap() {
            prop_assert!(r.pass, "{}", r);
        }
        let c = classify(&s, 30, TOL).unwrap();
        prop_assert!(c.almost_s);
        for (fit, want) in c.fitted_alpha.iter().zip(&a) {
            prop_assert!((fit - want).abs() <= TOL);
        }
    }

    #[test]
    fn projectors_are_complementary_and_orthogonal(n in 1usize..=2, a in alphas()) {
        let s = heis(n, &a);
        let chart = s.chart();
        let (l, m) = (s.l(), s.m());
        let id = EndField::identity(chart);
        let mut exprs = l.add(&m).sub(&id).entries();
        exprs.extend(l.compose(&l).sub(&l).entries());
        exprs.extend(m.compose(&m).sub(&m).entries());
        exprs.extend(l.compose(&m).entries());
        let fields = s.test_fields("orthogonality");
        for x in &fields {
            for y in &fields {
                exprs.push(s.metric().apply(&l.apply(x), &m.apply(y)));
            }
        }
        let r = exprs_zero("projectors", &exprs, chart, 20, TOL).unwrap();
        prop_assert!(r.pass, "{}", r);
    }

    #[test]
    fn bracket_is_antisymmetric_and_one_brackets_to_reeb(a in -3.0f64..3.0, seed in any::<u64>()) {
        prop_assume!(a.abs() > 0.2);
        let s = heis(1, &[a]);
        let choice = EtaChoice::minimal(&[a]).unwrap();
        let calc = HamiltonianCalculus::new(&s, &choice).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_polynomial(&mut rng, 3, 2);
        let g = random_polynomial(&mut rng, 3, 2);
        let sum = calc.bracket(&f, &g) + calc.bracket(&g, &f);
        let reeb = reeb_field(&s).unwrap();
        let unit = calc.bracket(&Expr::one(), &g) - reeb.apply(&g);
        let r = exprs_zero("antisymmetry", &[sum, unit], s.chart(), 20, HAMILTONIAN_TOL).unwrap();
        prop_assert!(r.pass, "{}", r);
    }

    #[test]
    fn symplectization_box_keeps_tau_above_margin(a in alphas()) {
        let s = heis(1, &a);
        let sp = build_symplectization(&s).unwrap();
        // tau is linear in t, so its minimum over the box sits at a corner.
        let low: f64 = a
            .iter()
            .zip(&sp.t_box)
            .map(|(&al, &c)| (al * c as f64).min(al * (c as f64 + 1.0)))
            .sum();
        prop_assert!(low >= 0.1 - 1e-12, "{:?} {:?} {}", a, sp.t_box, low);
    }
}

#[test]
fn eta_choice_matters_only_when_k_exceeds_one() {
    // k = 1: c = 1/alpha is the only admissible choice.
    assert!(EtaChoice::new(&[2.0], vec![0.5]).is_ok());
    assert!(EtaChoice::new(&[2.0], vec![0.4]).is_err());

    // k = 2: z1 has a Hamiltonian field for c = (1, 0) but not for the
    // minimal choice, and each choice is self-consistent on its own.
    let s = heis(1, &[1.0, 2.0]);
    let chart = s.chart();
    let z1 = parse_expr("z1", chart).unwrap();
    let skew = EtaChoice::new(s.alpha(), vec![1.0, 0.0]).unwrap();
    let minimal = EtaChoice::minimal(s.alpha()).unwrap();

    let calc = HamiltonianCalculus::new(&s, &skew).unwrap();
    let h = calc.hamiltonian(&z1);
    assert!(calc.residuals(&h, "z1", 50, HAMILTONIAN_TOL).unwrap().iter().all(|r| r.pass));
    let fs: Vec<Expr> = ["1", "x1", "z1", "x1*z1"].iter().map(|t| parse_expr(t, chart).unwrap()).collect();
    for r in verify_jacobi_suite(&s, &skew, &fs, 50, HAMILTONIAN_TOL).unwrap() {
        assert!(r.pass, "{}", r);
    }

    let calc = HamiltonianCalculus::new(&s, &minimal).unwrap();
    let h = calc.hamiltonian(&z1);
    let reports = calc.residuals(&h, "z1", 50, HAMILTONIAN_TOL).unwrap();
    assert!(reports.iter().any(|r| !r.pass));
}

#[test]
fn reeb_field_picks_out_the_weighted_frame() {
    let s = heis(2, &[0.0, 1.0]);
    let reeb = reeb_field(&s).unwrap();
    let diff = reeb.sub(&s.xi()[1]);
    assert!(exprs_zero("reeb", diff.comps(), s.chart(), 20, 0.0).unwrap().pass);
}

#[test]
fn stable_complex_structure_squares_to_minus_one() {
    for (name, s) in regression_corpus().unwrap() {
        let (ext, j) = stable_complex_structure(&s).unwrap();
        let sq = j.compose(&j).add(&EndField::identity(&ext));
        let r = exprs_zero("J^2 = -Id", &sq.entries(), &ext, 30, TOL).unwrap();
        assert!(r.pass, "{}: {}", name, r);
    }
}

#[test]
fn symplectic_side_identities_on_the_corpus() {
    for (name, s) in regression_corpus().unwrap() {
        let r = verify_phi_power_vanishes(&s, 50, 1e-12).unwrap();
        assert!(r.pass, "{}: {}", name, r);
        let Ok(sp) = build_symplectization(&s) else {
            assert!(s.alpha().iter().all(|&a| a == 0.0), "{}", name);
            continue;
        };
        for r in verify_determinant(&sp, &s, 30, 2.0, 1e-6).unwrap() {
            assert!(r.pass, "{}: {}", name, r);
        }
        // The top coefficient goes like tau^n: it flips sign across tau = 0
        // exactly when n is odd.
        let flips = sign_change_across_zero(&sp, &s, 20).unwrap();
        let expected = if s.n() % 2 == 1 { 0.0 } else { 20.0 };
        assert_eq!(flips.max_residual, expected, "{}", name);
    }
}

#[test]
fn coordinate_fields_bracket_to_zero() {
    let chart = Chart::unit_box(&["a", "b"], 1).unwrap();
    let frame = VectorField::frame(&chart);
    let br = fpk::tensor::lie_bracket(&frame[0], &frame[1]);
    assert!(br.comps().iter().all(Expr::is_zero));
}
