//! Metric f-structures with parallelizable kernel: the tuple
//! `(phi, xi_i, eta^j, g)` with structure constants `alpha`, its axioms,
//! classification and the kernel-distribution propositions.
//!
//! Sign conventions: the fundamental form is `Phi(X, Y) = g(phi X, Y)` and
//! an almost S-structure satisfies `d eta^i = -alpha^i Phi`. Inputs written
//! with `phi` in the second slot of `g` have the opposite sign of `Phi`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::symexpr::{
    check_pointwise, exprs_zero, CheckReport, Chart, Expr, GuardHit, Sampler, Tape,
};
use crate::tensor::{
    exterior_derivative, interior_product, lie_bracket, lie_derivative, nijenhuis_pair,
    random_fields, EndField, KForm, MetricField, VectorField,
};

/// Random fields added to the coordinate frame when testing universally
/// quantified tensor identities.
pub const RANDOM_FIELDS: usize = 10;
/// Smallest eigenvalue a metric may have at a sample.
pub const MIN_METRIC_EIGENVALUE: f64 = 1e-10;
/// Default relative singular-value threshold for numeric rank.
pub const RANK_RATIO: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct FpkStructure {
    chart: Chart,
    n: usize,
    k: usize,
    phi: EndField,
    xi: Vec<VectorField>,
    eta: Vec<KForm>,
    g: MetricField,
    alpha: Vec<f64>,
}

impl FpkStructure {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        chart: &Chart,
        n: usize,
        k: usize,
        phi: EndField,
        xi: Vec<VectorField>,
        eta: Vec<KForm>,
        g: MetricField,
        alpha: Vec<f64>,
    ) -> Result<FpkStructure> {
        let s = FpkStructure {
            chart: chart.clone(),
            n,
            k,
            phi,
            xi,
            eta,
            g,
            alpha,
        };
        s.check_dimensions()?;
        Ok(s)
    }

    fn check_dimensions(&self) -> Result<()> {
        let dim = self.chart.dim();
        let mismatch = |msg: String| Err(Error::DimensionMismatch(msg));
        if dim != 2 * self.n + self.k {
            return mismatch(format!(
                "chart dimension {} differs from 2n + k = {}",
                dim,
                2 * self.n + self.k
            ));
        }
        if self.phi.chart() != &self.chart || self.g.chart() != &self.chart {
            return mismatch("phi and g must live on the structure's chart".into());
        }
        if self.xi.len() != self.k || self.eta.len() != self.k || self.alpha.len() != self.k {
            return mismatch(format!(
                "expected {} frame fields, coframe forms and constants; got {}, {}, {}",
                self.k,
                self.xi.len(),
                self.eta.len(),
                self.alpha.len()
            ));
        }
        if self.xi.iter().any(|x| x.chart() != &self.chart) {
            return mismatch("xi must live on the structure's chart".into());
        }
        if self.eta.iter().any(|e| e.chart() != &self.chart || e.degree() != 1) {
            return mismatch("eta must be 1-forms on the structure's chart".into());
        }
        if self.alpha.iter().any(|a| !a.is_finite()) {
            return mismatch("alpha constants must be finite".into());
        }
        Ok(())
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn phi(&self) -> &EndField {
        &self.phi
    }
    pub fn xi(&self) -> &[VectorField] {
        &self.xi
    }
    pub fn eta(&self) -> &[KForm] {
        &self.eta
    }
    pub fn metric(&self) -> &MetricField {
        &self.g
    }
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Same structure with another chart seed.
    pub fn reseeded(&self, seed: u64) -> FpkStructure {
        self.on_chart(&self.chart.with_seed(seed))
    }

    /// Same structure on a chart with the same coordinates and another box.
    pub fn with_bounds(&self, bounds: &[(f64, f64)]) -> Result<FpkStructure> {
        Ok(self.on_chart(&self.chart.with_bounds(bounds)?))
    }

    fn on_chart(&self, chart: &Chart) -> FpkStructure {
        let rows = self.phi.rows().to_vec();
        FpkStructure {
            chart: chart.clone(),
            n: self.n,
            k: self.k,
            phi: EndField::new(chart, rows).expect("same dimension"),
            xi: self
                .xi
                .iter()
                .map(|x| VectorField::new(chart, x.comps().to_vec()).expect("same dimension"))
                .collect(),
            eta: self
                .eta
                .iter()
                .map(|e| KForm::one_form(chart, e.one_form_comps()).expect("same dimension"))
                .collect(),
            g: MetricField::new(chart, self.g.rows()).expect("symmetric"),
            alpha: self.alpha.clone(),
        }
    }

    pub fn with_phi(&self, phi: EndField) -> Result<FpkStructure> {
        let mut s = self.clone();
        s.phi = phi;
        s.check_dimensions()?;
        Ok(s)
    }

    pub fn with_eta(&self, i: usize, eta: KForm) -> Result<FpkStructure> {
        let mut s = self.clone();
        *s.eta.get_mut(i).ok_or_else(|| Error::DimensionMismatch(format!("no eta^{}", i + 1)))? =
            eta;
        s.check_dimensions()?;
        Ok(s)
    }

    pub fn with_alpha(&self, alpha: Vec<f64>) -> Result<FpkStructure> {
        let mut s = self.clone();
        s.alpha = alpha;
        s.check_dimensions()?;
        Ok(s)
    }

    /// Projection `l = -phi^2` onto `E = Im phi`.
    pub fn l(&self) -> EndField {
        self.phi.compose(&self.phi).scale(&Expr::num(-1.0))
    }

    /// Projection `m = phi^2 + Id` onto `T = ker phi`.
    pub fn m(&self) -> EndField {
        self.phi
            .compose(&self.phi)
            .add(&EndField::identity(&self.chart))
    }

    /// `l d/dx^j` for every coordinate; spans `E` pointwise.
    pub fn e_frame(&self) -> Vec<VectorField> {
        let l = self.l();
        (0..self.chart.dim()).map(|j| l.column(j)).collect()
    }

    /// Coordinate frame followed by seeded random fields.
    pub fn test_fields(&self, label: &str) -> Vec<VectorField> {
        let mut v = VectorField::frame(&self.chart);
        v.extend(random_fields(&self.chart, label, RANDOM_FIELDS));
        v
    }

    /// `sum_i (eta^i (x) xi_i)` as an endomorphism.
    fn frame_projector(&self) -> EndField {
        let etas: Vec<Vec<Expr>> = self.eta.iter().map(|e| e.one_form_comps()).collect();
        EndField::from_fn(&self.chart, |r, c| {
            Expr::sum((0..self.k).map(|i| self.xi[i].comp(r) * &etas[i][c]))
        })
    }
}

fn vacuous_if(cond: bool, name: &str, tol: f64, f: impl FnOnce() -> Result<CheckReport>) -> Result<CheckReport> {
    if cond {
        Ok(CheckReport::vacuous(name, tol))
    } else {
        f()
    }
}

/// Checks every axiom of a metric f.pk-structure.
pub fn validate_fpk(s: &FpkStructure, samples: usize, tol: f64) -> Result<Vec<CheckReport>> {
    s.check_dimensions()?;
    let chart = &s.chart;
    let dim = chart.dim();
    let id = EndField::identity(chart);
    let phi2 = s.phi.compose(&s.phi);
    let l = s.l();
    let m = s.m();
    let mut reports = Vec::new();

    let name = "f-structure: phi^3 + phi = 0";
    reports.push(exprs_zero(name, &phi2.compose(&s.phi).add(&s.phi).entries(), chart, samples, tol)?);

    let name = "frame duality: eta^i(xi_j) = delta^i_j";
    reports.push(vacuous_if(s.k == 0, name, tol, || {
        let mut exprs = Vec::new();
        for (i, eta) in s.eta.iter().enumerate() {
            for (j, xi) in s.xi.iter().enumerate() {
                let delta = if i == j { 1.0 } else { 0.0 };
                exprs.push(eta.apply(&[xi]) - delta);
            }
        }
        exprs_zero(name, &exprs, chart, samples, tol)
    })?);

    let name = "kernel: phi xi_i = 0";
    reports.push(vacuous_if(s.k == 0, name, tol, || {
        let exprs: Vec<Expr> = s.xi.iter().flat_map(|x| s.phi.apply(x).comps().to_vec()).collect();
        exprs_zero(name, &exprs, chart, samples, tol)
    })?);

    let name = "cokernel: eta^i o phi = 0";
    reports.push(vacuous_if(s.k == 0, name, tol, || {
        let exprs: Vec<Expr> = s
            .eta
            .iter()
            .flat_map(|e| s.phi.pull_one_form(e).one_form_comps())
            .collect();
        exprs_zero(name, &exprs, chart, samples, tol)
    })?);

    let name = "phi^2 = -Id + sum eta^i (x) xi_i";
    let rhs = s.frame_projector().sub(&id);
    reports.push(exprs_zero(name, &phi2.sub(&rhs).entries(), chart, samples, tol)?);

    let name = "projectors: l + m = Id";
    reports.push(exprs_zero(name, &l.add(&m).sub(&id).entries(), chart, samples, tol)?);

    let name = "projectors: l^2 = l, m^2 = m";
    let mut exprs = l.compose(&l).sub(&l).entries();
    exprs.extend(m.compose(&m).sub(&m).entries());
    reports.push(exprs_zero(name, &exprs, chart, samples, tol)?);

    let name = "projectors: l m = m l = 0";
    let mut exprs = l.compose(&m).entries();
    exprs.extend(m.compose(&l).entries());
    reports.push(exprs_zero(name, &exprs, chart, samples, tol)?);

    let fields = s.test_fields("validate");
    let pairs = field_pairs(&fields, dim);

    let name = "metric: g(X, Y) = g(Y, X)";
    let exprs: Vec<Expr> = pairs
        .iter()
        .map(|(x, y)| s.g.apply(x, y) - s.g.apply(y, x))
        .collect();
    reports.push(exprs_zero(name, &exprs, chart, samples, tol)?);

    reports.push(metric_positivity(&s.g, samples)?);

    let name = "compatibility: g(X, Y) = g(phi X, phi Y) + sum eta^i(X) eta^i(Y)";
    let exprs: Vec<Expr> = pairs
        .iter()
        .map(|(x, y)| {
            let etas = Expr::sum(s.eta.iter().map(|e| e.apply(&[x]) * e.apply(&[y])));
            s.g.apply(x, y) - s.g.apply(&s.phi.apply(x), &s.phi.apply(y)) - etas
        })
        .collect();
    reports.push(exprs_zero(name, &exprs, chart, samples, tol)?);

    let name = "splitting: g(l X, m Y) = 0";
    let exprs: Vec<Expr> = pairs
        .iter()
        .map(|(x, y)| s.g.apply(&l.apply(x), &m.apply(y)))
        .collect();
    reports.push(exprs_zero(name, &exprs, chart, samples, tol)?);

    let rank = numeric_rank(&s.phi, samples, RANK_RATIO)?;
    let off = rank
        .min_rank
        .abs_diff(2 * s.n)
        .max(rank.max_rank.abs_diff(2 * s.n));
    reports.push(CheckReport::new(
        format!("rank: phi has constant rank 2n = {}", 2 * s.n),
        off as f64,
        None,
        samples,
        0.0,
    ));
    Ok(reports)
}

/// All coordinate-frame pairs plus consecutive pairs of the random fields.
fn field_pairs(fields: &[VectorField], dim: usize) -> Vec<(VectorField, VectorField)> {
    let (frame, random) = fields.split_at(dim);
    let mut pairs = Vec::new();
    for a in frame {
        for b in frame {
            pairs.push((a.clone(), b.clone()));
        }
    }
    for i in 0..random.len() {
        pairs.push((random[i].clone(), random[(i + 1) % random.len()].clone()));
    }
    pairs
}

/// Residual is how far the smallest eigenvalue falls below
/// [`MIN_METRIC_EIGENVALUE`]; the tolerance is zero.
fn metric_positivity(g: &MetricField, samples: usize) -> Result<CheckReport> {
    let num = g.numeric();
    check_pointwise("metric: g positive definite", g.chart(), samples, 0.0, |x| {
        let mat = num.at(x)?;
        let min = SymmetricEigen::new(mat)
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        Ok((MIN_METRIC_EIGENVALUE - min).max(0.0))
    })
}

/// `Phi(X, Y) = g(phi X, Y)`; stored from the `i < j` entries. Fails with
/// `DegreeOverflow` on a one-dimensional chart.
pub fn fundamental_form(s: &FpkStructure) -> Result<KForm> {
    let dim = s.chart.dim();
    let mut terms = Vec::new();
    for i in 0..dim {
        for j in i + 1..dim {
            terms.push((vec![i, j], phi_g_entry(s, i, j)));
        }
    }
    KForm::from_terms(&s.chart, 2, terms)
}

/// `g(phi d_i, d_j)` computed directly from the matrices.
fn phi_g_entry(s: &FpkStructure, i: usize, j: usize) -> Expr {
    let dim = s.chart.dim();
    Expr::sum(
        (0..dim)
            .filter(|&a| !s.phi.entry(a, i).is_zero() && !s.g.entry(a, j).is_zero())
            .map(|a| s.phi.entry(a, i) * s.g.entry(a, j)),
    )
}

/// Reports on the fundamental form: antisymmetry of `g(phi ., .)`, the
/// kernel lemma `i(xi_i) Phi = 0`, and rank `2n`.
pub fn fundamental_form_reports(
    s: &FpkStructure,
    samples: usize,
    tol: f64,
) -> Result<Vec<CheckReport>> {
    let chart = &s.chart;
    let dim = chart.dim();
    let phi_form = fundamental_form(s)?;
    let mut reports = Vec::new();

    let name = "Phi antisymmetric: g(phi X, Y) = -g(phi Y, X)";
    let mut exprs = Vec::new();
    for i in 0..dim {
        for j in i..dim {
            exprs.push(phi_g_entry(s, i, j) + phi_g_entry(s, j, i));
        }
    }
    reports.push(exprs_zero(name, &exprs, chart, samples, tol)?);

    reports.push(lemma_kernel(s, &phi_form, samples, tol)?);

    let name = "Phi(xi_i, xi_j) = 0";
    reports.push(vacuous_if(s.k == 0, name, tol, || {
        let mut exprs = Vec::new();
        for a in &s.xi {
            for b in &s.xi {
                exprs.push(phi_form.apply(&[a, b]));
            }
        }
        exprs_zero(name, &exprs, chart, samples, tol)
    })?);

    let entries: Vec<Expr> = (0..dim)
        .flat_map(|i| (0..dim).map(move |j| (i, j)))
        .map(|(i, j)| phi_form.coeff(&[i, j]))
        .collect();
    let rank = matrix_rank_range(chart, &entries, dim, samples, RANK_RATIO, "Phi rank")?;
    let off = rank.min_rank.abs_diff(2 * s.n).max(rank.max_rank.abs_diff(2 * s.n));
    reports.push(CheckReport::new(
        format!("Phi has rank 2n = {}", 2 * s.n),
        off as f64,
        None,
        samples,
        0.0,
    ));
    Ok(reports)
}

fn lemma_kernel(s: &FpkStructure, phi_form: &KForm, samples: usize, tol: f64) -> Result<CheckReport> {
    let name = "kernel lemma: i(xi_i) Phi = 0";
    vacuous_if(s.k == 0, name, tol, || {
        let exprs: Vec<Expr> = s
            .xi
            .iter()
            .flat_map(|x| interior_product(x, phi_form).coefficient_exprs())
            .collect();
        exprs_zero(name, &exprs, &s.chart, samples, tol)
    })
}

/// `N(X, Y) = [phi, phi](X, Y) + sum d eta^i(X, Y) xi_i`.
pub fn normality_tensor(s: &FpkStructure, x: &VectorField, y: &VectorField) -> VectorField {
    let mut out = nijenhuis_pair(&s.phi, x, y);
    for (eta, xi) in s.eta.iter().zip(&s.xi) {
        let d_eta = exterior_derivative(eta).expect("1-form on a chart of dimension >= 2");
        out = out.add(&xi.scale(&d_eta.apply(&[x, y])));
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub almost_k: bool,
    pub almost_s: bool,
    pub fitted_alpha: Vec<f64>,
    pub normal: bool,
    pub cr_integrable: bool,
    pub reports: Vec<CheckReport>,
}

/// Decides the almost-K, almost-S, normal and CR-integrable properties and
/// re-derives the structure constants by least squares. A structure is
/// almost-S only with its declared constants: a fit that disagrees with
/// them is reported, not adopted.
pub fn classify(s: &FpkStructure, samples: usize, tol: f64) -> Result<Classification> {
    let chart = &s.chart;
    let dim = chart.dim();
    let Ok(phi_form) = fundamental_form(s) else {
        return Err(Error::AlphaFitIllPosed);
    };
    let d_phi = if dim > 2 {
        Some(exterior_derivative(&phi_form)?)
    } else {
        None
    };
    let mut reports = Vec::new();

    let name = "almost-K: d Phi = 0";
    let closed = match &d_phi {
        Some(d) => exprs_zero(name, &d.coefficient_exprs(), chart, samples, tol)?,
        None => CheckReport::vacuous(name, tol),
    };
    let almost_k = closed.pass;
    reports.push(closed);

    // Involutivity of T = ker phi: i([xi_i, xi_j]) Phi = 0.
    let name = "involutive T: i([xi_i, xi_j]) Phi = 0";
    reports.push(vacuous_if(s.k < 2, name, tol, || {
        let mut exprs = Vec::new();
        for a in 0..s.k {
            for b in a + 1..s.k {
                let br = lie_bracket(&s.xi[a], &s.xi[b]);
                exprs.extend(interior_product(&br, &phi_form).coefficient_exprs());
            }
        }
        exprs_zero(name, &exprs, chart, samples, tol)
    })?);

    let d_etas: Vec<KForm> = s
        .eta
        .iter()
        .map(exterior_derivative)
        .collect::<Result<_>>()?;
    let e_frame = s.e_frame();
    let fitted_alpha = fit_alpha(s, &d_etas, &phi_form, &e_frame, samples)?;

    let mut alpha_ok = true;
    for (i, (d_eta, a)) in d_etas.iter().zip(&fitted_alpha).enumerate() {
        let name = format!("d eta^{} = -alpha^{} Phi (fitted alpha = {:.12})", i + 1, i + 1, a);
        let residual = d_eta.add(&phi_form.scale(&Expr::num(*a)));
        let r = exprs_zero(&name, &residual.coefficient_exprs(), chart, samples, tol)?;
        alpha_ok &= r.pass;
        reports.push(r);
    }
    let mut declared_ok = true;
    for (i, (declared, fitted)) in s.alpha.iter().zip(&fitted_alpha).enumerate() {
        declared_ok &= (declared - fitted).abs() <= tol;
        reports.push(CheckReport::new(
            format!("declared alpha^{} = {} agrees with fitted", i + 1, declared),
            (declared - fitted).abs(),
            None,
            samples,
            tol,
        ));
    }

    let frame = VectorField::frame(chart);
    let name = "normal: N(d_a, d_b) = 0";
    let mut exprs = Vec::new();
    for a in 0..dim {
        for b in a + 1..dim {
            exprs.extend(normality_tensor(s, &frame[a], &frame[b]).comps().to_vec());
        }
    }
    let normal = exprs_zero(name, &exprs, chart, samples, tol)?;
    let is_normal = normal.pass;
    reports.push(normal);

    let name = "CR-integrable: N(l d_a, l d_b) = 0";
    let mut exprs = Vec::new();
    for a in 0..dim {
        for b in a + 1..dim {
            exprs.extend(normality_tensor(s, &e_frame[a], &e_frame[b]).comps().to_vec());
        }
    }
    let cr = vacuous_if(s.n == 0, name, tol, || exprs_zero(name, &exprs, chart, samples, tol))?;
    let cr_integrable = cr.pass;
    reports.push(cr);

    Ok(Classification {
        almost_k,
        almost_s: almost_k && alpha_ok && declared_ok,
        fitted_alpha,
        normal: is_normal,
        cr_integrable,
        reports,
    })
}

/// Least-squares `alpha^i = -<d eta^i, Phi> / <Phi, Phi>` over sampled
/// E-frame pairs.
fn fit_alpha(
    s: &FpkStructure,
    d_etas: &[KForm],
    phi_form: &KForm,
    e_frame: &[VectorField],
    samples: usize,
) -> Result<Vec<f64>> {
    if s.k == 0 {
        return Ok(Vec::new());
    }
    let dim = s.chart.dim();
    let mut exprs = Vec::new();
    for a in 0..dim {
        for b in a + 1..dim {
            let (x, y) = (&e_frame[a], &e_frame[b]);
            exprs.push(phi_form.apply(&[x, y]));
            for d in d_etas {
                exprs.push(d.apply(&[x, y]));
            }
        }
    }
    if exprs.is_empty() {
        return Err(Error::AlphaFitIllPosed);
    }
    let tape = Tape::compile(&exprs);
    let stride = 1 + s.k;
    let mut uv = vec![0.0; s.k];
    let mut vv = 0.0;
    let mut sampler = Sampler::new(&s.chart, "alpha fit");
    let mut used = 0;
    let mut draws = 0;
    while used < samples && draws < 5 * samples {
        draws += 1;
        let Ok(vals) = tape.eval(&sampler.next_point()) else {
            continue;
        };
        used += 1;
        for chunk in vals.chunks(stride) {
            let v = chunk[0];
            vv += v * v;
            for i in 0..s.k {
                uv[i] += chunk[1 + i] * v;
            }
        }
    }
    if vv <= f64::MIN_POSITIVE || used == 0 {
        return Err(Error::AlphaFitIllPosed);
    }
    Ok(uv.iter().map(|u| -u / vv).collect())
}

/// The kernel lemma and the identity `d Phi(X, Y, Z) = -Phi([X, Y], Z)` for
/// `X, Y` in the xi-frame; both hold for every metric f.pk-structure.
pub fn unconditional_propositions(
    s: &FpkStructure,
    samples: usize,
    tol: f64,
) -> Result<Vec<CheckReport>> {
    let chart = &s.chart;
    let phi_form = fundamental_form(s)?;
    let mut reports = vec![lemma_kernel(s, &phi_form, samples, tol)?];

    let name = "d Phi(xi_i, xi_j, Z) = -Phi([xi_i, xi_j], Z)";
    reports.push(vacuous_if(s.k == 0 || chart.dim() < 3, name, tol, || {
        let d_phi = exterior_derivative(&phi_form)?;
        let zs = s.test_fields("d Phi identity");
        let mut exprs = Vec::new();
        for a in 0..s.k {
            for b in 0..s.k {
                let br = lie_bracket(&s.xi[a], &s.xi[b]);
                for z in &zs {
                    exprs.push(
                        d_phi.apply(&[&s.xi[a], &s.xi[b], z]) + phi_form.apply(&[&br, z]),
                    );
                }
            }
        }
        exprs_zero(name, &exprs, chart, samples, tol)
    })?);
    Ok(reports)
}

/// Kernel-distribution propositions. The commuting-frame and invariance
/// checks require an almost S-structure and are refused otherwise.
pub fn structure_propositions(
    s: &FpkStructure,
    samples: usize,
    tol: f64,
) -> Result<Vec<CheckReport>> {
    let class = classify(s, samples, tol)?;
    if !class.almost_s {
        let failed: Vec<&str> = class
            .reports
            .iter()
            .filter(|r| !r.pass)
            .map(|r| r.identity.as_str())
            .collect();
        return Err(Error::PreconditionNotAlmostS(failed.join("; ")));
    }
    let mut reports = unconditional_propositions(s, samples, tol)?;
    let chart = &s.chart;

    let name = "commuting frame: [xi_i, xi_j] = 0";
    reports.push(vacuous_if(s.k < 2, name, tol, || {
        let mut exprs = Vec::new();
        for a in 0..s.k {
            for b in a + 1..s.k {
                exprs.extend(lie_bracket(&s.xi[a], &s.xi[b]).comps().to_vec());
            }
        }
        exprs_zero(name, &exprs, chart, samples, tol)
    })?);

    let name = "invariant coframe: L(xi_i) eta^j = 0";
    reports.push(vacuous_if(s.k == 0, name, tol, || {
        let mut exprs = Vec::new();
        for xi in &s.xi {
            for eta in &s.eta {
                exprs.extend(lie_derivative(xi, eta).coefficient_exprs());
            }
        }
        exprs_zero(name, &exprs, chart, samples, tol)
    })?);

    let name = "invariant fundamental form: L(xi_i) Phi = 0";
    reports.push(vacuous_if(s.k == 0, name, tol, || {
        let phi_form = fundamental_form(s)?;
        let exprs: Vec<Expr> = s
            .xi
            .iter()
            .flat_map(|xi| lie_derivative(xi, &phi_form).coefficient_exprs())
            .collect();
        exprs_zero(name, &exprs, chart, samples, tol)
    })?);
    Ok(reports)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RankRange {
    pub min_rank: usize,
    pub max_rank: usize,
}

impl RankRange {
    pub fn is_constant(&self) -> bool {
        self.min_rank == self.max_rank
    }
}

/// Singular-value rank of an endomorphism field at sampled points, counting
/// values above `ratio` times the largest.
pub fn numeric_rank(e: &EndField, samples: usize, ratio: f64) -> Result<RankRange> {
    matrix_rank_range(e.chart(), &e.entries(), e.dim(), samples, ratio, "numeric rank")
}

fn matrix_rank_range(
    chart: &Chart,
    entries: &[Expr],
    dim: usize,
    samples: usize,
    ratio: f64,
    label: &str,
) -> Result<RankRange> {
    let tape = Tape::compile(entries);
    let mut min_rank = usize::MAX;
    let mut max_rank = 0;
    check_pointwise(label, chart, samples, f64::INFINITY, |x| {
        let v = tape.eval(x)?;
        let r = rank_of(&DMatrix::from_row_slice(dim, dim, &v), ratio);
        min_rank = min_rank.min(r);
        max_rank = max_rank.max(r);
        Ok::<f64, GuardHit>(0.0)
    })?;
    Ok(RankRange { min_rank, max_rank })
}

pub(crate) fn rank_of(m: &DMatrix<f64>, ratio: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let largest = sv.iter().cloned().fold(0.0, f64::max);
    if largest == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > ratio * largest).count()
}

/// Complex structure on `TM + R^k`, realized on the chart extended by `k`
/// coordinates standing for the basis `tau_i` of `R^k`:
/// `J = phi` on `E`, `J xi_i = tau_i`, `J tau_i = -xi_i`.
pub fn stable_complex_structure(s: &FpkStructure) -> Result<(Chart, EndField)> {
    let base = s.chart.dim();
    let names = s.chart.fresh_names("tau", s.k);
    let ext = s.chart.extend(&names, &vec![(-1.0, 1.0); s.k])?;
    let etas: Vec<Vec<Expr>> = s.eta.iter().map(|e| e.one_form_comps()).collect();
    let j = EndField::from_fn(&ext, |r, c| match (r < base, c < base) {
        (true, true) => s.phi.entry(r, c).clone(),
        // tau_i component of J d_c is eta^i(d_c).
        (false, true) => etas[r - base][c].clone(),
        (true, false) => -s.xi[c - base].comp(r),
        (false, false) => Expr::zero(),
    });
    Ok((ext, j))
}
