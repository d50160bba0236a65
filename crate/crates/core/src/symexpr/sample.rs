use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::chart::{Chart, Point};
use super::eval::{GuardHit, Tape};
use super::expr::Expr;
use crate::error::{Error, Result};

/// Default number of sample points per identity.
pub const DEFAULT_SAMPLES: usize = 100;
/// Default tolerance for first-derivative identities.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Draws are abandoned once this many per requested sample have been made.
const MAX_DRAWS_PER_SAMPLE: usize = 5;
/// More than this fraction of guarded draws is reported as exhaustion.
const MAX_GUARD_FRACTION: f64 = 0.8;

/// Outcome of checking one identity at sampled points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub identity: String,
    pub pass: bool,
    pub max_residual: f64,
    /// Point where the largest residual occurred; absent for vacuous checks.
    pub witness: Option<Point>,
    pub samples: usize,
    pub tolerance: f64,
    /// The identity refers to pieces the structure does not have (k = 0 or
    /// n = 0) and was not evaluated.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub vacuous: bool,
}

impl CheckReport {
    pub fn new(
        identity: impl Into<String>,
        max_residual: f64,
        witness: Option<Point>,
        samples: usize,
        tolerance: f64,
    ) -> CheckReport {
        CheckReport {
            identity: identity.into(),
            pass: max_residual <= tolerance,
            max_residual,
            witness,
            samples,
            tolerance,
            vacuous: false,
        }
    }

    pub fn vacuous(identity: impl Into<String>, tolerance: f64) -> CheckReport {
        CheckReport {
            identity: identity.into(),
            pass: true,
            max_residual: 0.0,
            witness: None,
            samples: 0,
            tolerance,
            vacuous: true,
        }
    }

    pub fn renamed(mut self, identity: impl Into<String>) -> CheckReport {
        self.identity = identity.into();
        self
    }
}

impl std::fmt::Display for CheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let status = match (self.vacuous, self.pass) {
            (true, _) => "SKIP",
            (false, true) => "PASS",
            (false, false) => "FAIL",
        };
        write!(
            f,
            "{} {} (residual {:.3e}, tol {:.1e}, {} samples)",
            status, self.identity, self.max_residual, self.tolerance, self.samples
        )?;
        if let (false, Some(w)) = (self.pass, &self.witness) {
            write!(f, " at {}", w)?;
        }
        Ok(())
    }
}

// FNV-1a, used only to derive per-label seeds that are stable across builds.
fn label_hash(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Uniform sampler over a chart's box, seeded from the chart seed and a
/// call-site label so independent checks draw independent points.
pub struct Sampler {
    rng: ChaCha8Rng,
    bounds: Vec<(f64, f64)>,
}

impl Sampler {
    pub fn new(chart: &Chart, label: &str) -> Sampler {
        Sampler::with_bounds(chart.bounds().to_vec(), chart.seed(), label)
    }

    pub fn with_bounds(bounds: Vec<(f64, f64)>, seed: u64, label: &str) -> Sampler {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed ^ label_hash(label)),
            bounds,
        }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        let rng = &mut self.rng;
        self.bounds
            .iter()
            .map(|&(lo, hi)| rng.gen_range(lo..=hi))
            .collect()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Collects `samples` points on which `residual` evaluates without hitting a
/// division guard and reports the largest residual. Non-finite residuals
/// count as infinite.
pub fn check_pointwise<F>(
    identity: &str,
    chart: &Chart,
    samples: usize,
    tol: f64,
    mut residual: F,
) -> Result<CheckReport>
where
    F: FnMut(&[f64]) -> std::result::Result<f64, GuardHit>,
{
    assert!(samples >= 1, "at least one sample is required");
    let mut sampler = Sampler::new(chart, identity);
    let mut worst = -1.0f64;
    let mut witness = Vec::new();
    let mut good = 0;
    let mut draws = 0;
    let mut guard_hits = 0;
    while good < samples && draws < samples * MAX_DRAWS_PER_SAMPLE {
        let x = sampler.next_point();
        draws += 1;
        match residual(&x) {
            Ok(r) => {
                let r = if r.is_finite() { r.abs() } else { f64::INFINITY };
                if r > worst {
                    worst = r;
                    witness = x;
                }
                good += 1;
            }
            Err(_) => guard_hits += 1,
        }
    }
    if good < samples || guard_hits as f64 > MAX_GUARD_FRACTION * draws as f64 {
        return Err(Error::SamplingExhausted {
            identity: identity.to_string(),
            guard_hits,
            draws,
        });
    }
    Ok(CheckReport::new(
        identity,
        worst,
        Some(chart.point(witness)?),
        good,
        tol,
    ))
}

/// Checks that every expression in `exprs` vanishes: the residual at a point
/// is the largest magnitude among them.
pub fn exprs_zero(
    identity: &str,
    exprs: &[Expr],
    chart: &Chart,
    samples: usize,
    tol: f64,
) -> Result<CheckReport> {
    let tape = Tape::compile(exprs);
    if tape.required_dim() > chart.dim() {
        return Err(Error::DimensionMismatch(format!(
            "`{}` references coordinates outside the chart",
            identity
        )));
    }
    let mut scratch = Vec::new();
    let mut out = Vec::new();
    check_pointwise(identity, chart, samples, tol, |x| {
        tape.eval_into(x, &mut scratch, &mut out)?;
        Ok(out
            .iter()
            .map(|v| if v.is_finite() { v.abs() } else { f64::INFINITY })
            .fold(0.0, f64::max))
    })
}

/// Sampling test of `e == 0` on the chart's box.
pub fn expr_zero(e: &Expr, chart: &Chart, samples: usize, tol: f64) -> Result<CheckReport> {
    exprs_zero("expr == 0", std::slice::from_ref(e), chart, samples, tol)
}

/// Random polynomial of total degree at most `degree` in the first `vars`
/// chart coordinates, with coefficients uniform in [-1, 1].
pub fn random_polynomial<R: Rng>(rng: &mut R, vars: usize, degree: u32) -> Expr {
    let mut terms = Vec::new();
    let mut exps = vec![0u32; vars];
    loop {
        let total: u32 = exps.iter().sum();
        if total <= degree {
            let coeff: f64 = rng.gen_range(-1.0..=1.0);
            let mono = exps
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0)
                .fold(Expr::num(coeff), |acc, (i, &p)| acc * Expr::var(i).powi(p));
            terms.push(mono);
        }
        // Odometer over exponent vectors in [0, degree]^vars.
        let mut i = 0;
        loop {
            if i == vars {
                return Expr::sum(terms);
            }
            exps[i] += 1;
            if exps[i] <= degree {
                break;
            }
            exps[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse_expr;

    fn chart() -> Chart {
        Chart::unit_box(&["x", "y"], 11).unwrap()
    }

    #[test]
    fn pythagorean_identity_passes() {
        let c = chart();
        let e = parse_expr("sin(x)^2 + cos(x)^2 - 1", &c).unwrap();
        let r = expr_zero(&e, &c, 100, 1e-9).unwrap();
        assert!(r.pass);
        assert_eq!(r.samples, 100);
    }

    #[test]
    fn commutator_has_zero_residual() {
        let c = chart();
        let r = expr_zero(&parse_expr("x*y - y*x", &c).unwrap(), &c, 100, 1e-9).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_residual, 0.0);
    }

    #[test]
    fn offset_fails_with_its_magnitude() {
        let c = chart();
        let r = expr_zero(&parse_expr("x - x - 0.001", &c).unwrap(), &c, 100, 1e-9).unwrap();
        assert!(!r.pass);
        assert!((r.max_residual - 1e-3).abs() < 1e-15);
        assert!(r.witness.is_some());
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let c = chart();
        let e = parse_expr("sin(3*x*y) + x", &c).unwrap();
        let a = expr_zero(&e, &c, 50, 1e-9).unwrap();
        let b = expr_zero(&e, &c, 50, 1e-9).unwrap();
        assert_eq!(a, b);
        let other = expr_zero(&e, &c.with_seed(12), 50, 1e-9).unwrap();
        assert_ne!(a.witness, other.witness);
    }

    #[test]
    fn guarded_draws_are_redrawn_or_exhausted() {
        // 1/(x - x) is guarded everywhere.
        let c = chart();
        let x = c.var("x").unwrap();
        let e = Expr::one() / (&x - &x);
        assert!(matches!(
            expr_zero(&e, &c, 10, 1e-9),
            Err(Error::SamplingExhausted { .. })
        ));
        // Guarded on roughly half the box: redraws succeed.
        let c2 = Chart::new(&["x"], &[(-1.0, 1.0)], 5).unwrap();
        let x = c2.var("x").unwrap();
        let step = Expr::one() / (&x - 0.0);
        let r = check_pointwise("half", &c2, 20, 1.0, |p| {
            if p[0] < 0.0 {
                super::super::eval::evaluate_at(&(Expr::one() / (&x - &x)), p)
            } else {
                super::super::eval::evaluate_at(&(&step * 0.0), p)
            }
        })
        .unwrap();
        assert!(r.pass);
        assert_eq!(r.samples, 20);
    }

    #[test]
    fn random_polynomial_respects_degree() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = Chart::unit_box(&["x", "y", "z"], 0).unwrap();
        let p = random_polynomial(&mut rng, 3, 2);
        // Third derivative of a degree-2 polynomial vanishes.
        let d3 = crate::symexpr::partial(
            &crate::symexpr::partial(&crate::symexpr::partial(&p, 0), 1),
            2,
        );
        assert!(expr_zero(&d3, &c, 10, 0.0).unwrap().pass);
        assert!(p.max_var().unwrap() <= 2);
    }
}
