//! Hamiltonian vector fields and the Jacobi bracket of an almost
//! S-structure with at least one nonzero structure constant.
//!
//! For a function `f` the Hamiltonian field `X_f` is the solution of
//!
//! ```text
//! eta^j(X_f) = alpha^j f,    i(X_f) Phi = df - (xi . f) eta
//! ```
//!
//! with `xi = sum alpha^j xi_j` and `eta = sum c_j eta^j`. It is assembled as
//! `X_E + sum alpha^j f xi_j` where `X_E` lies in `E = Im phi` and solves
//! `Phi(X_E, Y) = beta(l Y)` for `beta = df - (xi . f) eta`. The linear
//! system is inverted once symbolically; the inverse is reused for every
//! function.
//!
//! When `k >= 2` the second equation is solvable only if
//! `xi_i . f = c_i (xi . f)` for every `i`, which holds for functions of the
//! base coordinates. The residual report of the second equation exposes the
//! other cases.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fstruct::{fundamental_form, FpkStructure};
use crate::symexpr::{
    check_pointwise, evaluate_at, exprs_zero, gradient, CheckReport, Chart, Expr, GuardHit, Tape,
};
use crate::tensor::{interior_product, lie_bracket, lie_derivative, KForm, VectorField};

/// Largest allowed `|sum c_j alpha^j - 1|`.
pub const ETA_CHOICE_TOL: f64 = 1e-12;
/// Default tolerance for Hamiltonian and bracket identities.
pub const HAMILTONIAN_TOL: f64 = 1e-7;
/// Pivots smaller than this at the box midpoint make the restriction
/// singular.
pub const PIVOT_THRESHOLD: f64 = 1e-12;

/// Constant coefficients of `eta = sum c_j eta^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct EtaChoice {
    c: Vec<f64>,
}

impl EtaChoice {
    /// Accepts `c` when `sum c_j alpha^j = 1`.
    pub fn new(alpha: &[f64], c: Vec<f64>) -> Result<EtaChoice> {
        if c.len() != alpha.len() {
            return Err(Error::InvalidEtaChoice(format!(
                "{} coefficients given for {} structure constants",
                c.len(),
                alpha.len()
            )));
        }
        let pairing: f64 = c.iter().zip(alpha).map(|(a, b)| a * b).sum();
        if !((pairing - 1.0).abs() <= ETA_CHOICE_TOL) {
            return Err(Error::InvalidEtaChoice(format!(
                "sum c_j alpha^j = {} instead of 1",
                pairing
            )));
        }
        Ok(EtaChoice { c })
    }

    /// Minimal-norm choice `c = alpha / |alpha|^2`.
    pub fn minimal(alpha: &[f64]) -> Result<EtaChoice> {
        let norm2: f64 = alpha.iter().map(|a| a * a).sum();
        if norm2 == 0.0 {
            return Err(Error::AllAlphaZero);
        }
        EtaChoice::new(alpha, alpha.iter().map(|a| a / norm2).collect())
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.c
    }
}

/// `xi = sum alpha^j xi_j`.
pub fn reeb_field(s: &FpkStructure) -> Result<VectorField> {
    if s.alpha().iter().all(|&a| a == 0.0) {
        return Err(Error::AllAlphaZero);
    }
    Ok(s.xi()
        .iter()
        .zip(s.alpha())
        .filter(|(_, &a)| a != 0.0)
        .fold(VectorField::zero(s.chart()), |acc, (x, &a)| {
            acc.add(&x.scale(&Expr::num(a)))
        }))
}

#[derive(Clone, Debug)]
pub struct HamiltonianField {
    pub f: Expr,
    pub x_f: VectorField,
}

/// Precomputed data for Hamiltonian fields and brackets on one structure.
#[derive(Clone, Debug)]
pub struct HamiltonianCalculus {
    s: FpkStructure,
    choice: EtaChoice,
    reeb: VectorField,
    eta: KForm,
    phi_form: KForm,
    // X_E = solve * beta, with beta as a column of 1-form components.
    solve: Vec<Vec<Expr>>,
    // Coefficients a^j in eta^j(X_f) = a^j f.
    frame_coeffs: Vec<f64>,
}

impl HamiltonianCalculus {
    pub fn new(s: &FpkStructure, choice: &EtaChoice) -> Result<HamiltonianCalculus> {
        let reeb = reeb_field(s)?;
        EtaChoice::new(s.alpha(), choice.c.clone())?;
        let chart = s.chart();
        let dim = chart.dim();
        let phi_form = fundamental_form(s)?;
        let etas: Vec<Vec<Expr>> = s.eta().iter().map(KForm::one_form_comps).collect();
        let eta_comps: Vec<Expr> = (0..dim)
            .map(|a| {
                Expr::sum(
                    etas.iter()
                        .zip(&choice.c)
                        .filter(|(e, &c)| c != 0.0 && !e[a].is_zero())
                        .map(|(e, &c)| e[a].scale(c)),
                )
            })
            .collect();
        let eta = KForm::one_form(chart, eta_comps)?;

        // B(X, Y) = Phi(X, Y) + sum eta^i(X) eta^i(Y) is nondegenerate, and
        // B(X_E, Y) = beta(l Y) forces eta^i(X_E) = 0 because l xi_i = 0.
        let bt: Vec<Vec<Expr>> = (0..dim)
            .map(|b| {
                (0..dim)
                    .map(|a| {
                        let vertical = Expr::sum(
                            etas.iter()
                                .filter(|e| !e[a].is_zero() && !e[b].is_zero())
                                .map(|e| &e[a] * &e[b]),
                        );
                        phi_form.coeff(&[a, b]) + vertical
                    })
                    .collect()
            })
            .collect();
        let inv = symbolic_inverse(bt, &chart.midpoint())?;
        let l = s.l();
        // solve[c][a] = sum_b inv[c][b] l[a][b]
        let solve = (0..dim)
            .map(|c| {
                (0..dim)
                    .map(|a| {
                        Expr::sum(
                            (0..dim)
                                .filter(|&b| !inv[c][b].is_zero() && !l.entry(a, b).is_zero())
                                .map(|b| &inv[c][b] * l.entry(a, b)),
                        )
                    })
                    .collect()
            })
            .collect();
        Ok(HamiltonianCalculus {
            s: s.clone(),
            choice: choice.clone(),
            reeb,
            eta,
            phi_form,
            solve,
            frame_coeffs: s.alpha().to_vec(),
        })
    }

    /// Replaces the coefficients `a^j` in `eta^j(X_f) = a^j f`. Only
    /// `a = alpha` gives a consistent calculus; other values exist to show
    /// that the bracket identities then fail.
    pub fn with_frame_coefficients(mut self, a: Vec<f64>) -> Result<HamiltonianCalculus> {
        if a.len() != self.s.k() {
            return Err(Error::DimensionMismatch(format!(
                "{} frame coefficients for k = {}",
                a.len(),
                self.s.k()
            )));
        }
        self.frame_coeffs = a;
        Ok(self)
    }

    pub fn structure(&self) -> &FpkStructure {
        &self.s
    }
    pub fn chart(&self) -> &Chart {
        self.s.chart()
    }
    pub fn choice(&self) -> &EtaChoice {
        &self.choice
    }
    pub fn reeb(&self) -> &VectorField {
        &self.reeb
    }
    /// `eta = sum c_j eta^j`.
    pub fn eta(&self) -> &KForm {
        &self.eta
    }
    pub fn fundamental_form(&self) -> &KForm {
        &self.phi_form
    }

    /// `beta = df - (xi . f) eta` as components.
    fn beta(&self, f: &Expr) -> Vec<Expr> {
        let dim = self.chart().dim();
        let df = gradient(f, dim);
        let xf = self.reeb.apply(f);
        let eta = self.eta.one_form_comps();
        df.into_iter()
            .zip(eta)
            .map(|(d, e)| if xf.is_zero() || e.is_zero() { d } else { d - &xf * e })
            .collect()
    }

    pub fn field(&self, f: &Expr) -> VectorField {
        let beta = self.beta(f);
        let dim = self.chart().dim();
        let mut comps: Vec<Expr> = (0..dim)
            .map(|c| {
                Expr::sum(
                    (0..dim)
                        .filter(|&a| !self.solve[c][a].is_zero() && !beta[a].is_zero())
                        .map(|a| &self.solve[c][a] * &beta[a]),
                )
            })
            .collect();
        for (xi, &a) in self.s.xi().iter().zip(&self.frame_coeffs) {
            if a == 0.0 {
                continue;
            }
            let af = f.scale(a);
            for (comp, x) in comps.iter_mut().zip(xi.comps()) {
                if !x.is_zero() {
                    *comp = &*comp + &af * x;
                }
            }
        }
        VectorField::new(self.chart(), comps).expect("chart dimension")
    }

    pub fn hamiltonian(&self, f: &Expr) -> HamiltonianField {
        HamiltonianField {
            f: f.clone(),
            x_f: self.field(f),
        }
    }

    /// `{f, g} = X_f . g - (xi . f) g`.
    pub fn bracket(&self, f: &Expr, g: &Expr) -> Expr {
        self.bracket_with(&self.field(f), f, g)
    }

    fn bracket_with(&self, x_f: &VectorField, f: &Expr, g: &Expr) -> Expr {
        x_f.apply(g) - self.reeb.apply(f) * g
    }

    /// Residuals of both defining equations of `X_f`.
    pub fn residuals(
        &self,
        h: &HamiltonianField,
        label: &str,
        samples: usize,
        tol: f64,
    ) -> Result<Vec<CheckReport>> {
        let chart = self.chart();
        let ham1: Vec<Expr> = self
            .s
            .eta()
            .iter()
            .zip(self.s.alpha())
            .map(|(e, &a)| e.apply(&[&h.x_f]) - h.f.scale(a))
            .collect();
        let contracted = interior_product(&h.x_f, &self.phi_form).one_form_comps();
        let ham2: Vec<Expr> = contracted
            .into_iter()
            .zip(self.beta(&h.f))
            .map(|(l, r)| l - r)
            .collect();
        Ok(vec![
            exprs_zero(&format!("eta^j(X_f) = alpha^j f for f = {}", label), &ham1, chart, samples, tol)?,
            exprs_zero(
                &format!("i(X_f) Phi = df - (xi.f) eta for f = {}", label),
                &ham2,
                chart,
                samples,
                tol,
            )?,
        ])
    }

    /// Compares the bracket with `i([X_f, X_g]) eta` and with
    /// `X_f . g - X_g . f + Phi(X_f, X_g)`.
    pub fn bracket_cross_checks(
        &self,
        f: &Expr,
        g: &Expr,
        label: &str,
        samples: usize,
        tol: f64,
    ) -> Result<Vec<CheckReport>> {
        let chart = self.chart();
        let (xf, xg) = (self.field(f), self.field(g));
        let b = self.bracket_with(&xf, f, g);
        let via_commutator = self.eta.apply(&[&lie_bracket(&xf, &xg)]);
        let via_phi = xf.apply(g) - xg.apply(f) + self.phi_form.apply(&[&xf, &xg]);
        Ok(vec![
            exprs_zero(
                &format!("{{f,g}} = i([X_f, X_g]) eta for {}", label),
                &[b.clone() - via_commutator],
                chart,
                samples,
                tol,
            )?,
            exprs_zero(
                &format!("{{f,g}} = X_f.g - X_g.f + Phi(X_f, X_g) for {}", label),
                &[b - via_phi],
                chart,
                samples,
                tol,
            )?,
        ])
    }
}

/// Gauss-Jordan inverse over expressions. Pivots are chosen by magnitude at
/// `at`, tracked numerically alongside the symbolic elimination.
fn symbolic_inverse(m: Vec<Vec<Expr>>, at: &[f64]) -> Result<Vec<Vec<Expr>>> {
    let n = m.len();
    let mut sym: Vec<Vec<Expr>> = m
        .into_iter()
        .enumerate()
        .map(|(i, mut row)| {
            row.extend((0..n).map(|j| Expr::num(if i == j { 1.0 } else { 0.0 })));
            row
        })
        .collect();
    let mut num: Vec<Vec<f64>> = sym
        .iter()
        .map(|row| {
            row.iter()
                .map(|e| evaluate_at(e, at).unwrap_or(f64::NAN))
                .collect()
        })
        .collect();
    for col in 0..n {
        let (best, mag) = (col..n)
            .map(|r| (r, num[r][col].abs()))
            .filter(|(_, v)| v.is_finite())
            .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if mag < PIVOT_THRESHOLD {
            return Err(Error::SingularRestriction);
        }
        sym.swap(col, best);
        num.swap(col, best);
        let pivot = sym[col][col].clone();
        let pv = num[col][col];
        for j in 0..2 * n {
            if !sym[col][j].is_zero() {
                sym[col][j] = &sym[col][j] / &pivot;
            }
            num[col][j] /= pv;
        }
        for r in 0..n {
            if r == col || sym[r][col].is_zero() {
                continue;
            }
            let factor = sym[r][col].clone();
            let fv = num[r][col];
            for j in 0..2 * n {
                if !sym[col][j].is_zero() {
                    sym[r][j] = &sym[r][j] - &factor * &sym[col][j];
                }
                num[r][j] -= fv * num[col][j];
            }
            // Exact elimination; keeps later structural-zero tests effective.
            sym[r][col] = Expr::zero();
        }
    }
    Ok(sym.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// `X_f` for one function.
pub fn hamiltonian_field(s: &FpkStructure, c: &EtaChoice, f: &Expr) -> Result<HamiltonianField> {
    Ok(HamiltonianCalculus::new(s, c)?.hamiltonian(f))
}

/// `{f, g} = X_f . g - (xi . f) g`.
pub fn jacobi_bracket(s: &FpkStructure, c: &EtaChoice, f: &Expr, g: &Expr) -> Result<Expr> {
    Ok(HamiltonianCalculus::new(s, c)?.bracket(f, g))
}

/// Pointwise numeric solution of the defining equations of `X_f`, built
/// from numeric values of `phi`, `Phi`, `eta^i` and `df` only and solved by
/// least squares.
pub struct HamiltonianOracle {
    dim: usize,
    k: usize,
    alpha: Vec<f64>,
    c: Vec<f64>,
    phi: Tape,
    phi_form: Tape,
    etas: Tape,
    xis: Tape,
    f: Tape,
}

impl HamiltonianOracle {
    pub fn new(s: &FpkStructure, c: &EtaChoice, f: &Expr) -> Result<HamiltonianOracle> {
        let dim = s.chart().dim();
        let phi_form = fundamental_form(s)?;
        let pf: Vec<Expr> = (0..dim)
            .flat_map(|a| (0..dim).map(move |b| (a, b)))
            .map(|(a, b)| phi_form.coeff(&[a, b]))
            .collect();
        let etas: Vec<Expr> = s.eta().iter().flat_map(KForm::one_form_comps).collect();
        let xis: Vec<Expr> = s.xi().iter().flat_map(|x| x.comps().to_vec()).collect();
        let mut fv = vec![f.clone()];
        fv.extend(gradient(f, dim));
        Ok(HamiltonianOracle {
            dim,
            k: s.k(),
            alpha: s.alpha().to_vec(),
            c: c.coefficients().to_vec(),
            phi: Tape::compile(&s.phi().entries()),
            phi_form: Tape::compile(&pf),
            etas: Tape::compile(&etas),
            xis: Tape::compile(&xis),
            f: Tape::compile(&fv),
        })
    }

    pub fn solve(&self, x: &[f64]) -> std::result::Result<DVector<f64>, GuardHit> {
        let (n, k) = (self.dim, self.k);
        let phi = DMatrix::from_row_slice(n, n, &self.phi.eval(x)?);
        let l = -(&phi * &phi);
        let pf = DMatrix::from_row_slice(n, n, &self.phi_form.eval(x)?);
        let etas = DMatrix::from_row_slice(k, n, &self.etas.eval(x)?);
        let xis = DMatrix::from_row_slice(k, n, &self.xis.eval(x)?);
        let fv = self.f.eval(x)?;
        let df = DVector::from_column_slice(&fv[1..]);
        let reeb = xis.transpose() * DVector::from_column_slice(&self.alpha);
        let xi_f = reeb.dot(&df);
        let eta = etas.transpose() * DVector::from_column_slice(&self.c);
        let beta = &df - eta * xi_f;
        let rhs_phi = l.transpose() * beta;

        let mut a = DMatrix::zeros(k + n, n);
        let mut rhs = DVector::zeros(k + n);
        for i in 0..k {
            a.row_mut(i).copy_from(&etas.row(i));
            rhs[i] = self.alpha[i] * fv[0];
        }
        for b in 0..n {
            for col in 0..n {
                a[(k + b, col)] = pf[(col, b)];
            }
            rhs[k + b] = rhs_phi[b];
        }
        let svd = a.svd(true, true);
        Ok(svd
            .solve(&rhs, 1e-13)
            .expect("both factors were computed"))
    }
}

/// Every bracket identity for the functions in `fs`, one report per
/// function, pair or triple.
pub fn verify_jacobi_suite(
    s: &FpkStructure,
    c: &EtaChoice,
    fs: &[Expr],
    samples: usize,
    tol: f64,
) -> Result<Vec<CheckReport>> {
    verify_with(&HamiltonianCalculus::new(s, c)?, fs, samples, tol)
}

/// [`verify_jacobi_suite`] on a prepared calculus.
pub fn verify_with(
    calc: &HamiltonianCalculus,
    fs: &[Expr],
    samples: usize,
    tol: f64,
) -> Result<Vec<CheckReport>> {
    if fs.is_empty() {
        return Err(Error::DimensionMismatch("the function list is empty".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::DimensionMismatch("tolerance must be positive".into()));
    }
    let s = calc.structure();
    let chart = calc.chart();
    let labels: Vec<String> = fs.iter().map(|f| f.display(chart).to_string()).collect();
    let fields: Vec<VectorField> = fs.iter().map(|f| calc.field(f)).collect();
    let reeb_f: Vec<Expr> = fs.iter().map(|f| calc.reeb().apply(f)).collect();
    let eta = calc.eta();
    let mut reports = Vec::new();

    for (idx, f) in fs.iter().enumerate() {
        let lab = &labels[idx];
        let h = HamiltonianField {
            f: f.clone(),
            x_f: fields[idx].clone(),
        };
        reports.extend(calc.residuals(&h, lab, samples, tol)?);

        // [xi_i, X_f] = X_(xi_i . f)
        let mut exprs = Vec::new();
        for xi in s.xi() {
            let lhs = lie_bracket(xi, &fields[idx]);
            let rhs = calc.field(&xi.apply(f));
            exprs.extend(lhs.sub(&rhs).comps().iter().cloned());
        }
        reports.push(exprs_zero(
            &format!("[xi_i, X_f] = X_(xi_i.f) for f = {}", lab),
            &exprs,
            chart,
            samples,
            tol,
        )?);

        let target = eta.scale(&reeb_f[idx]);
        let mut exprs = Vec::new();
        for (e, &a) in s.eta().iter().zip(s.alpha()) {
            let lhs = lie_derivative(&fields[idx], e);
            exprs.extend(lhs.sub(&target.scale(&Expr::num(a))).coefficient_exprs());
        }
        reports.push(exprs_zero(
            &format!("L(X_f) eta^j = alpha^j (xi.f) eta for f = {}", lab),
            &exprs,
            chart,
            samples,
            tol,
        )?);
        let lhs = lie_derivative(&fields[idx], eta);
        reports.push(exprs_zero(
            &format!("L(X_f) eta = (xi.f) eta for f = {}", lab),
            &lhs.sub(&target).coefficient_exprs(),
            chart,
            samples,
            tol,
        )?);
    }

    let n = fs.len();
    let brackets: Vec<Vec<Expr>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| calc.bracket_with(&fields[i], &fs[i], &fs[j]))
                .collect()
        })
        .collect();

    for i in 0..n {
        for j in i..n {
            let pair = format!("({}, {})", labels[i], labels[j]);
            reports.push(exprs_zero(
                &format!("{{f,g}} + {{g,f}} = 0 for {}", pair),
                &[&brackets[i][j] + &brackets[j][i]],
                chart,
                samples,
                tol,
            )?);

            let lhs = calc.field(&brackets[i][j]);
            let rhs = lie_bracket(&fields[i], &fields[j]);
            reports.push(exprs_zero(
                &format!("X_{{f,g}} = [X_f, X_g] for {}", pair),
                lhs.sub(&rhs).comps(),
                chart,
                samples,
                tol,
            )?);

            let mut exprs = Vec::new();
            for xi in s.xi() {
                let lhs = xi.apply(&brackets[i][j]);
                let rhs = calc.bracket(&xi.apply(&fs[i]), &fs[j])
                    + calc.bracket_with(&fields[i], &fs[i], &xi.apply(&fs[j]));
                exprs.push(lhs - rhs);
            }
            reports.push(exprs_zero(
                &format!("xi_i.{{f,g}} = {{xi_i.f, g}} + {{f, xi_i.g}} for {}", pair),
                &exprs,
                chart,
                samples,
                tol,
            )?);
        }
    }

    for i in 0..n {
        for j in 0..n {
            reports.push(support_check(calc, &fields[i], &fs[i], &fs[j], &labels[i], &labels[j], samples, tol)?);
        }
    }

    for i in 0..n {
        for j in i + 1..n {
            for l in j + 1..n {
                let outer = |a: usize, b: usize, c: usize| {
                    calc.bracket_with(&fields[a], &fs[a], &brackets[b][c])
                };
                let cyclic = outer(i, j, l) + outer(j, l, i) + outer(l, i, j);
                reports.push(exprs_zero(
                    &format!(
                        "{{f,{{g,h}}}} + cyclic = 0 for ({}, {}, {})",
                        labels[i], labels[j], labels[l]
                    ),
                    &[cyclic],
                    chart,
                    samples,
                    tol,
                )?);
            }
        }
    }
    Ok(reports)
}

/// At each sample `p`, `g_p = g - g(p) - dg(p)(x - p)` has a critical zero
/// at `p`, so `{f, g_p}(p)` must vanish.
#[allow(clippy::too_many_arguments)]
fn support_check(
    calc: &HamiltonianCalculus,
    x_f: &VectorField,
    f: &Expr,
    g: &Expr,
    f_label: &str,
    g_label: &str,
    samples: usize,
    tol: f64,
) -> Result<CheckReport> {
    let chart = calc.chart();
    let dim = chart.dim();
    let mut jet = vec![g.clone()];
    jet.extend(gradient(g, dim));
    let jet = Tape::compile(&jet);
    check_pointwise(
        &format!("g(p) = 0, dg(p) = 0 => {{f,g}}(p) = 0 for ({}, {})", f_label, g_label),
        chart,
        samples,
        tol,
        |p| {
            let v = jet.eval(p)?;
            let linear = Expr::sum(
                (0..dim).map(|a| (Expr::var(a) - p[a]).scale(v[1 + a])),
            );
            let g_p = g - v[0] - linear;
            evaluate_at(&calc.bracket_with(x_f, f, &g_p), p)
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{generalized_heisenberg, standard_contact};
    use crate::symexpr::parse_expr;

    fn contact() -> (FpkStructure, EtaChoice) {
        let s = standard_contact(1).unwrap();
        let c = EtaChoice::minimal(s.alpha()).unwrap();
        (s, c)
    }

    #[test]
    fn reeb_field_sums_the_frame() {
        let s = generalized_heisenberg(1, 2, &[1.0, 2.0]).unwrap();
        let r = reeb_field(&s).unwrap();
        assert_eq!(r.comps()[2].as_const(), Some(1.0));
        assert_eq!(r.comps()[3].as_const(), Some(2.0));
        let z = generalized_heisenberg(1, 2, &[0.0, 0.0]).unwrap();
        assert_eq!(reeb_field(&z).unwrap_err(), Error::AllAlphaZero);
    }

    #[test]
    fn eta_choice_must_pair_to_one() {
        assert!(EtaChoice::new(&[1.0, 2.0], vec![1.0, 0.0]).is_ok());
        assert!(matches!(
            EtaChoice::new(&[1.0, 2.0], vec![1.0, 1.0]),
            Err(Error::InvalidEtaChoice(_))
        ));
        assert_eq!(
            EtaChoice::minimal(&[1.0, 2.0]).unwrap().coefficients(),
            &[0.2, 0.4]
        );
    }

    #[test]
    fn constants_map_to_multiples_of_the_reeb_field() {
        let (s, c) = contact();
        let calc = HamiltonianCalculus::new(&s, &c).unwrap();
        let x1 = calc.field(&Expr::one());
        assert_eq!(x1.comps(), calc.reeb().comps());
        let x3 = calc.field(&Expr::num(3.0));
        let diff = x3.sub(&calc.reeb().scale(&Expr::num(3.0)));
        assert!(exprs_zero("3xi", diff.comps(), s.chart(), 20, 1e-12).unwrap().pass);
    }

    #[test]
    fn contact_field_of_x_matches_oracle() {
        let (s, c) = contact();
        let f = parse_expr("x1", s.chart()).unwrap();
        let h = hamiltonian_field(&s, &c, &f).unwrap();
        let oracle = HamiltonianOracle::new(&s, &c, &f).unwrap();
        let tape = Tape::compile(h.x_f.comps());
        let r = check_pointwise("oracle", s.chart(), 20, 1e-9, |x| {
            let sym = tape.eval(x)?;
            let num = oracle.solve(x)?;
            Ok(sym.iter().zip(num.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        })
        .unwrap();
        assert!(r.pass, "{}", r);
    }

    #[test]
    fn bracket_of_unit_is_reeb_derivative() {
        let (s, c) = contact();
        let g = parse_expr("z1 * x1 + sin(y1)", s.chart()).unwrap();
        let calc = HamiltonianCalculus::new(&s, &c).unwrap();
        let lhs = calc.bracket(&Expr::one(), &g);
        let rhs = calc.reeb().apply(&g);
        assert!(exprs_zero("{1,g}", &[lhs - rhs], s.chart(), 50, 1e-12).unwrap().pass);
        for r in calc.bracket_cross_checks(&Expr::var(0), &Expr::var(1), "(x1, y1)", 50, 1e-9).unwrap() {
            assert!(r.pass, "{}", r);
        }
    }

    #[test]
    fn contact_suite_passes_and_wrong_coefficient_breaks_it() {
        let (s, c) = contact();
        let fs: Vec<Expr> = ["1", "x1", "y1", "x1*y1"]
            .iter()
            .map(|t| parse_expr(t, s.chart()).unwrap())
            .collect();
        let reports = verify_jacobi_suite(&s, &c, &fs, 30, 1e-7).unwrap();
        for r in &reports {
            assert!(r.pass, "{}", r);
        }
        let bad = HamiltonianCalculus::new(&s, &c)
            .unwrap()
            .with_frame_coefficients(vec![1.5])
            .unwrap();
        let reports = verify_with(&bad, &fs, 30, 1e-7).unwrap();
        assert!(reports
            .iter()
            .any(|r| r.identity.starts_with("X_{f,g}") && !r.pass));
    }
}
