use nalgebra::DMatrix;

use super::field::{lie_bracket, VectorField};
use super::form::KForm;
use crate::error::{Error, Result};
use crate::symexpr::{Chart, Expr, GuardHit, Tape};

/// Endomorphism field; `entry(i, j)` is the i-th component of the image of
/// `d/dx^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct EndField {
    chart: Chart,
    rows: Vec<Vec<Expr>>,
}

impl EndField {
    pub fn new(chart: &Chart, rows: Vec<Vec<Expr>>) -> Result<EndField> {
        let n = chart.dim();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "endomorphism must be {}x{}",
                n, n
            )));
        }
        Ok(EndField {
            chart: chart.clone(),
            rows,
        })
    }

    pub fn from_fn(chart: &Chart, f: impl Fn(usize, usize) -> Expr) -> EndField {
        let n = chart.dim();
        EndField {
            chart: chart.clone(),
            rows: (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect(),
        }
    }

    pub fn identity(chart: &Chart) -> EndField {
        EndField::from_fn(chart, |i, j| Expr::num(if i == j { 1.0 } else { 0.0 }))
    }

    pub fn zero(chart: &Chart) -> EndField {
        EndField::from_fn(chart, |_, _| Expr::zero())
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<Expr>] {
        &self.rows
    }

    /// Image of column `j`, i.e. of `d/dx^j`.
    pub fn column(&self, j: usize) -> VectorField {
        VectorField::new(&self.chart, self.rows.iter().map(|r| r[j].clone()).collect())
            .expect("square matrix")
    }

    pub fn apply(&self, x: &VectorField) -> VectorField {
        let comps = self
            .rows
            .iter()
            .map(|row| {
                Expr::sum(
                    row.iter()
                        .zip(x.comps())
                        .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                        .map(|(a, b)| a * b),
                )
            })
            .collect();
        VectorField::new(&self.chart, comps).expect("square matrix")
    }

    /// Pullback of a 1-form, `eta o self`.
    pub fn pull_one_form(&self, eta: &KForm) -> KForm {
        let e = eta.one_form_comps();
        let n = self.dim();
        let comps = (0..n)
            .map(|j| {
                Expr::sum(
                    (0..n)
                        .filter(|&i| !e[i].is_zero() && !self.rows[i][j].is_zero())
                        .map(|i| &e[i] * &self.rows[i][j]),
                )
            })
            .collect();
        KForm::one_form(&self.chart, comps).expect("matching dimension")
    }

    /// Matrix product `self * other` (apply `other` first).
    pub fn compose(&self, other: &EndField) -> EndField {
        let n = self.dim();
        EndField::from_fn(&self.chart, |i, j| {
            Expr::sum(
                (0..n)
                    .filter(|&k| !self.rows[i][k].is_zero() && !other.rows[k][j].is_zero())
                    .map(|k| &self.rows[i][k] * &other.rows[k][j]),
            )
        })
    }

    pub fn add(&self, other: &EndField) -> EndField {
        EndField::from_fn(&self.chart, |i, j| &self.rows[i][j] + &other.rows[i][j])
    }

    pub fn sub(&self, other: &EndField) -> EndField {
        EndField::from_fn(&self.chart, |i, j| &self.rows[i][j] - &other.rows[i][j])
    }

    pub fn scale(&self, f: &Expr) -> EndField {
        EndField::from_fn(&self.chart, |i, j| f * &self.rows[i][j])
    }

    pub fn entries(&self) -> Vec<Expr> {
        self.rows.iter().flatten().cloned().collect()
    }

    /// Compiles the entries for repeated numeric evaluation.
    pub fn numeric(&self) -> NumericMatrix {
        NumericMatrix::compile(self.dim(), &self.entries())
    }
}

/// Row-major square matrix of compiled expressions.
pub struct NumericMatrix {
    n: usize,
    tape: Tape,
}

impl NumericMatrix {
    pub fn compile(n: usize, entries: &[Expr]) -> NumericMatrix {
        assert_eq!(entries.len(), n * n);
        NumericMatrix {
            n,
            tape: Tape::compile(entries),
        }
    }

    pub fn at(&self, x: &[f64]) -> std::result::Result<DMatrix<f64>, GuardHit> {
        let v = self.tape.eval(x)?;
        Ok(DMatrix::from_row_slice(self.n, self.n, &v))
    }
}

/// Symmetric metric field. Only the upper triangle is stored, so the
/// `(i, j)` and `(j, i)` entries are the same expression.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricField {
    chart: Chart,
    upper: Vec<Vec<Expr>>,
}

impl MetricField {
    /// Builds from a full matrix whose entries must be structurally
    /// symmetric; offending index pairs are reported.
    pub fn new(chart: &Chart, rows: Vec<Vec<Expr>>) -> Result<MetricField> {
        let n = chart.dim();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(format!("metric must be {}x{}", n, n)));
        }
        let bad: Vec<String> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| rows[i][j] != rows[j][i])
            .map(|(i, j)| format!("[{}][{}] vs [{}][{}]", i, j, j, i))
            .collect();
        if !bad.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "metric is not symmetric: {}",
                bad.join(", ")
            )));
        }
        Ok(MetricField::from_fn(chart, |i, j| rows[i][j].clone()))
    }

    /// Uses `f(i, j)` for `i <= j` only.
    pub fn from_fn(chart: &Chart, f: impl Fn(usize, usize) -> Expr) -> MetricField {
        let n = chart.dim();
        MetricField {
            chart: chart.clone(),
            upper: (0..n).map(|i| (i..n).map(|j| f(i, j)).collect()).collect(),
        }
    }

    pub fn euclidean(chart: &Chart) -> MetricField {
        MetricField::from_fn(chart, |i, j| Expr::num(if i == j { 1.0 } else { 0.0 }))
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.upper.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        &self.upper[a][b - a]
    }

    pub fn apply(&self, x: &VectorField, y: &VectorField) -> Expr {
        let n = self.dim();
        let mut terms = Vec::new();
        for i in 0..n {
            if x.comp(i).is_zero() {
                continue;
            }
            for j in 0..n {
                let g = self.entry(i, j);
                if g.is_zero() || y.comp(j).is_zero() {
                    continue;
                }
                terms.push(g * x.comp(i) * y.comp(j));
            }
        }
        Expr::sum(terms)
    }

    /// Full matrix, with each symmetric pair sharing one expression.
    pub fn rows(&self) -> Vec<Vec<Expr>> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.entry(i, j).clone()).collect())
            .collect()
    }

    pub fn numeric(&self) -> NumericMatrix {
        NumericMatrix::compile(self.dim(), &self.rows().concat())
    }
}

/// Nijenhuis torsion evaluated on a pair of fields:
/// `phi^2 [X,Y] + [phi X, phi Y] - phi [phi X, Y] - phi [X, phi Y]`.
pub fn nijenhuis_pair(phi: &EndField, x: &VectorField, y: &VectorField) -> VectorField {
    let px = phi.apply(x);
    let py = phi.apply(y);
    let xy = lie_bracket(x, y);
    phi.apply(&phi.apply(&xy))
        .add(&lie_bracket(&px, &py))
        .sub(&phi.apply(&lie_bracket(&px, y)))
        .sub(&phi.apply(&lie_bracket(x, &py)))
}
