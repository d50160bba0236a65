//! Symplectization of an almost S-structure: the product of the chart with
//! `R^k` (coordinates `t1..tk`), `alpha = sum t_i eta^i`, `omega = -d alpha`
//! and `tau = sum alpha^j t_j`. On `tau > 0` the form `omega` is
//! symplectic.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fstruct::{fundamental_form, FpkStructure};
use crate::symexpr::{check_pointwise, exprs_zero, CheckReport, Chart, Expr, Sampler, Tape};
use crate::tensor::{exterior_derivative, wedge, KForm};

/// Lower bound of `tau` on the sampling box.
pub const TAU_MARGIN: f64 = 0.1;
/// Top-degree coefficients below this count as vanishing.
pub const NONVANISHING_THRESHOLD: f64 = 1e-10;
/// Default tolerance for the top-power identity.
pub const TOP_POWER_TOL: f64 = 1e-8;
/// Default tolerance for `d omega = 0`.
pub const CLOSED_TOL: f64 = 1e-12;

const BOX_OFFSETS: [i32; 5] = [-2, -1, 0, 1, 2];

#[derive(Clone, Debug)]
pub struct Symplectization {
    pub chart: Chart,
    pub alpha_form: KForm,
    pub omega: KForm,
    pub tau: Expr,
    /// Lower corners `a_j` of the t-box `prod [a_j, a_j + 1]`.
    pub t_box: Vec<i32>,
}

/// Smallest `tau` over the box `prod [a_j, a_j + 1]`.
fn tau_min(alpha: &[f64], corner: &[i32]) -> f64 {
    alpha
        .iter()
        .zip(corner)
        .map(|(&a, &c)| a * if a > 0.0 { c as f64 } else { c as f64 + 1.0 })
        .sum()
}

/// Box with `tau >= TAU_MARGIN`; the one closest to the origin in the
/// `l1` sense, ties broken lexicographically.
fn choose_t_box(alpha: &[f64]) -> Result<Vec<i32>> {
    let k = alpha.len();
    let mut best: Option<(i32, Vec<i32>)> = None;
    let mut corner = vec![0usize; k];
    loop {
        let c: Vec<i32> = corner.iter().map(|&i| BOX_OFFSETS[i]).collect();
        if tau_min(alpha, &c) >= TAU_MARGIN {
            let size: i32 = c.iter().map(|v| v.abs()).sum();
            let better = match &best {
                None => true,
                Some((s, b)) => (size, &c) < (*s, b),
            };
            if better {
                best = Some((size, c));
            }
        }
        let mut i = k;
        loop {
            if i == 0 {
                return best.map(|(_, c)| c).ok_or(Error::EmptyPositiveCone);
            }
            i -= 1;
            corner[i] += 1;
            if corner[i] < BOX_OFFSETS.len() {
                break;
            }
            corner[i] = 0;
        }
    }
}

pub fn build_symplectization(s: &FpkStructure) -> Result<Symplectization> {
    if s.alpha().iter().all(|&a| a == 0.0) {
        return Err(Error::AllAlphaZero);
    }
    let t_box = choose_t_box(s.alpha())?;
    let names = s.chart().fresh_names("t", s.k());
    let bounds: Vec<(f64, f64)> = t_box.iter().map(|&a| (a as f64, a as f64 + 1.0)).collect();
    let chart = s.chart().extend(&names, &bounds)?;
    let base = s.chart().dim();
    let t = |i: usize| Expr::var(base + i);

    let mut alpha_form = KForm::zero(&chart, 1)?;
    for (i, eta) in s.eta().iter().enumerate() {
        alpha_form = alpha_form.add(&eta.extend_to(&chart)?.scale(&t(i)));
    }
    let omega = exterior_derivative(&alpha_form)?.scale(&Expr::num(-1.0));
    let tau = Expr::sum(
        s.alpha()
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0.0)
            .map(|(i, &a)| t(i).scale(a)),
    );
    Ok(Symplectization {
        chart,
        alpha_form,
        omega,
        tau,
        t_box,
    })
}

impl Symplectization {
    fn dt(&self, base: usize, i: usize) -> KForm {
        KForm::dx(&self.chart, base + i)
    }
}

/// `omega = sum eta^j ^ dt_j + tau Phi`.
pub fn verify_expansion(
    sp: &Symplectization,
    s: &FpkStructure,
    samples: usize,
    tol: f64,
) -> Result<CheckReport> {
    let base = s.chart().dim();
    let phi = fundamental_form(s)?.extend_to(&sp.chart)?;
    let mut rhs = phi.scale(&sp.tau);
    for (j, eta) in s.eta().iter().enumerate() {
        rhs = rhs.add(&wedge(&eta.extend_to(&sp.chart)?, &sp.dt(base, j))?);
    }
    exprs_zero(
        "omega = sum eta^j ^ dt_j + tau Phi",
        &sp.omega.sub(&rhs).coefficient_exprs(),
        &sp.chart,
        samples,
        tol,
    )
}

fn power(form: &KForm, m: usize) -> Result<KForm> {
    let mut out = KForm::scalar(form.chart(), Expr::one());
    for _ in 0..m {
        out = wedge(&out, form)?;
    }
    Ok(out)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

#[derive(Clone, Debug, Serialize)]
pub struct TopPowerReport {
    /// `(n + k)! / n!`.
    pub expected_factor: f64,
    /// Least-squares ratio of the two top-degree coefficients.
    pub fitted_factor: f64,
    pub identity: CheckReport,
    pub nonvanishing: CheckReport,
    pub closed: CheckReport,
}

impl TopPowerReport {
    pub fn reports(&self) -> Vec<CheckReport> {
        let factor = CheckReport::new(
            format!("combinatorial factor (n+k)!/n! = {}", self.expected_factor),
            (self.fitted_factor - self.expected_factor).abs(),
            None,
            self.identity.samples,
            self.identity.tolerance,
        );
        vec![
            factor,
            self.identity.clone(),
            self.nonvanishing.clone(),
            self.closed.clone(),
        ]
    }

    pub fn pass(&self) -> bool {
        self.reports().iter().all(|r| r.pass)
    }
}

/// Top-degree coefficients of `omega^(n+k)` and of
/// `eta^1 ^ dt_1 ^ ... ^ eta^k ^ dt_k ^ (tau Phi)^n`.
fn top_coefficients(sp: &Symplectization, s: &FpkStructure) -> Result<(Expr, Expr)> {
    let (n, k) = (s.n(), s.k());
    let base = s.chart().dim();
    let top: Vec<usize> = (0..sp.chart.dim()).collect();
    let lhs = power(&sp.omega, n + k)?;
    let mut rhs = KForm::scalar(&sp.chart, Expr::one());
    for (j, eta) in s.eta().iter().enumerate() {
        rhs = wedge(&rhs, &eta.extend_to(&sp.chart)?)?;
        rhs = wedge(&rhs, &sp.dt(base, j))?;
    }
    if n > 0 {
        let tau_phi = fundamental_form(s)?.extend_to(&sp.chart)?.scale(&sp.tau);
        rhs = wedge(&rhs, &power(&tau_phi, n)?)?;
    }
    Ok((lhs.coeff(&top), rhs.coeff(&top)))
}

/// Checks `omega^(n+k) = (n+k)!/n! eta^1 ^ dt_1 ^ ... ^ (tau Phi)^n`, that
/// the top coefficient does not vanish on the box and that `d omega = 0`.
pub fn verify_top_power(
    sp: &Symplectization,
    s: &FpkStructure,
    samples: usize,
    tol: f64,
) -> Result<TopPowerReport> {
    let (n, k) = (s.n(), s.k());
    let expected = factorial(n + k) / factorial(n);
    let (lhs, rhs) = top_coefficients(sp, s)?;

    let tape = Tape::compile(&[lhs.clone(), rhs.clone()]);
    let (mut uv, mut vv) = (0.0, 0.0);
    let mut sampler = Sampler::new(&sp.chart, "top power factor");
    for _ in 0..samples {
        if let Ok(v) = tape.eval(&sampler.next_point()) {
            uv += v[0] * v[1];
            vv += v[1] * v[1];
        }
    }
    let fitted = if vv > 0.0 { uv / vv } else { f64::NAN };

    let identity = exprs_zero(
        &format!("omega^(n+k) = {} eta^1 ^ dt_1 ^ ... ^ (tau Phi)^n", expected),
        &[lhs.clone() - rhs.scale(expected)],
        &sp.chart,
        samples,
        tol,
    )?;
    let top = Tape::compile(&[lhs]);
    let nonvanishing = check_pointwise(
        "omega^(n+k) nonvanishing on the tau >= 0.1 box",
        &sp.chart,
        samples,
        0.0,
        |x| Ok((NONVANISHING_THRESHOLD - top.eval(x)?[0].abs()).max(0.0)),
    )?;
    let closed = exprs_zero(
        "d omega = 0",
        &exterior_derivative(&sp.omega)?.coefficient_exprs(),
        &sp.chart,
        samples,
        CLOSED_TOL,
    )?;
    Ok(TopPowerReport {
        expected_factor: expected,
        fitted_factor: fitted,
        identity,
        nonvanishing,
        closed,
    })
}

fn omega_matrix(sp: &Symplectization) -> Tape {
    let dim = sp.chart.dim();
    let entries: Vec<Expr> = (0..dim)
        .flat_map(|a| (0..dim).map(move |b| (a, b)))
        .map(|(a, b)| sp.omega.coeff(&[a, b]))
        .collect();
    Tape::compile(&entries)
}

/// Pointwise determinant of `omega`: nonvanishing on the box, and scaling
/// as `tau^(2n)` when the `t` coordinates are multiplied by `lambda`.
pub fn verify_determinant(
    sp: &Symplectization,
    s: &FpkStructure,
    samples: usize,
    lambda: f64,
    tol: f64,
) -> Result<Vec<CheckReport>> {
    let dim = sp.chart.dim();
    let base = s.chart().dim();
    let tape = omega_matrix(sp);
    let det = |x: &[f64]| -> std::result::Result<f64, crate::symexpr::GuardHit> {
        Ok(DMatrix::from_row_slice(dim, dim, &tape.eval(x)?).determinant())
    };
    let nonzero = check_pointwise(
        "|det omega| > 1e-10 on the tau >= 0.1 box",
        &sp.chart,
        samples,
        0.0,
        |x| Ok((NONVANISHING_THRESHOLD - det(x)?.abs()).max(0.0)),
    )?;
    let exponent = 2 * s.n() as i32;
    let scaling = check_pointwise(
        &format!("det omega scales as tau^{} along t -> {} t", exponent, lambda),
        &sp.chart,
        samples,
        tol,
        |x| {
            let mut y = x.to_vec();
            for v in &mut y[base..] {
                *v *= lambda;
            }
            Ok(det(&y)? / det(x)? / lambda.powi(exponent) - 1.0)
        },
    )?;
    Ok(vec![nonzero, scaling])
}

/// Samples base points and `t = +-r alpha / |alpha|^2`, so that
/// `tau = +-r`, and counts samples where the top coefficient of
/// `omega^(n+k)` does not change sign. The coefficient is proportional to
/// `tau^n`, so the count is zero for odd `n` and equals `samples` for even
/// `n`.
pub fn sign_change_across_zero(
    sp: &Symplectization,
    s: &FpkStructure,
    samples: usize,
) -> Result<CheckReport> {
    let (lhs, _) = top_coefficients(sp, s)?;
    let tape = Tape::compile(&[lhs]);
    let base = s.chart().dim();
    let norm2: f64 = s.alpha().iter().map(|a| a * a).sum();
    let mut bounds = s.chart().bounds().to_vec();
    bounds.push((0.05, 1.0));
    let mut sampler = Sampler::with_bounds(bounds, s.chart().seed(), "tau sign change");
    let mut misses = 0;
    let mut done = 0;
    let mut witness = None;
    for _ in 0..samples * 5 {
        if done == samples {
            break;
        }
        let draw = sampler.next_point();
        let r = draw[base];
        let at = |sign: f64| {
            let mut x = draw[..base].to_vec();
            x.extend(s.alpha().iter().map(|a| sign * r * a / norm2));
            x
        };
        let (plus, minus) = (at(1.0), at(-1.0));
        let (Ok(p), Ok(m)) = (tape.eval(&plus), tape.eval(&minus)) else {
            continue;
        };
        done += 1;
        if p[0] * m[0] >= 0.0 {
            misses += 1;
            witness.get_or_insert(plus);
        }
    }
    let witness = witness.map(|w| sp.chart.point(w)).transpose()?;
    Ok(CheckReport::new(
        "top coefficient of omega^(n+k) changes sign across tau = 0",
        misses as f64,
        witness,
        done,
        0.0,
    ))
}

/// `Phi^(n+1) = 0` on the base chart; vacuous when its degree exceeds the
/// dimension.
pub fn verify_phi_power_vanishes(s: &FpkStructure, samples: usize, tol: f64) -> Result<CheckReport> {
    let name = "Phi^m = 0 for m = n + 1";
    if 2 * (s.n() + 1) > s.chart().dim() {
        return Ok(CheckReport::vacuous(name, tol));
    }
    let p = power(&fundamental_form(s)?, s.n() + 1)?;
    exprs_zero(name, &p.coefficient_exprs(), s.chart(), samples, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{generalized_heisenberg, standard_contact};

    #[test]
    fn box_search() {
        assert_eq!(choose_t_box(&[1.0]).unwrap(), vec![1]);
        assert_eq!(choose_t_box(&[1.0, 2.0]).unwrap(), vec![0, 1]);
        assert_eq!(choose_t_box(&[-1.0]).unwrap(), vec![-2]);
        assert_eq!(choose_t_box(&[1.0, -1.0]).unwrap(), vec![0, -2]);
        assert!(tau_min(&[1.0, -1.0], &[0, -1]) < TAU_MARGIN);
        assert_eq!(choose_t_box(&[0.01]).unwrap_err(), Error::EmptyPositiveCone);
    }

    #[test]
    fn contact_symplectization() {
        let s = standard_contact(1).unwrap();
        let sp = build_symplectization(&s).unwrap();
        assert_eq!(sp.chart.names(), ["x1", "y1", "z1", "t1"]);
        assert!(verify_expansion(&sp, &s, 50, 1e-9).unwrap().pass);
        let top = verify_top_power(&sp, &s, 50, 1e-8).unwrap();
        assert_eq!(top.expected_factor, 2.0);
        assert!(top.pass(), "{:#?}", top);
        assert!(sign_change_across_zero(&sp, &s, 30).unwrap().pass);
    }

    #[test]
    fn zero_constants_are_refused() {
        let s = generalized_heisenberg(1, 2, &[0.0, 0.0]).unwrap();
        assert_eq!(build_symplectization(&s).unwrap_err(), Error::AllAlphaZero);
    }

    #[test]
    fn tau_is_the_weighted_sum() {
        let s = generalized_heisenberg(1, 2, &[1.0, 2.0]).unwrap();
        let sp = build_symplectization(&s).unwrap();
        let t1 = sp.chart.var("t1").unwrap();
        let t2 = sp.chart.var("t2").unwrap();
        let diff = sp.tau.clone() - t1 - t2.scale(2.0);
        assert!(exprs_zero("tau", &[diff], &sp.chart, 10, 0.0).unwrap().pass);
    }
}
