//! JSON manifold-definition documents.
//!
//! ```json
//! {
//!   "n": 1, "k": 1,
//!   "coordinates": ["x1", "y1", "z1"],
//!   "box": [[-1, 1], [-1, 1], [-1, 1]],
//!   "seed": 7,
//!   "phi": [["0", "-1", "0"], ["1", "0", "0"], ["0", "y1", "0"]],
//!   "xi": [["0", "0", "1"]],
//!   "eta": [["y1", "0", "1"]],
//!   "g": [["1 + y1^2", "0", "y1"], ["0", "1", "0"], ["y1", "0", "1"]],
//!   "alpha": [1]
//! }
//! ```
//!
//! `phi[i][j]` is the i-th component of `phi(d/dx^j)`; `xi[a]` lists the
//! components of `xi_a`; `eta[a]` the coefficients of `eta^a` on `dx^j`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fstruct::FpkStructure;
use crate::symexpr::{exprs_zero, parse_expr, Chart, Expr};
use crate::tensor::{EndField, KForm, MetricField, VectorField};

/// Optional per-suite tolerance overrides.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symplectic: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldDocument {
    pub n: usize,
    pub k: usize,
    pub coordinates: Vec<String>,
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    pub seed: u64,
    pub phi: Vec<Vec<String>>,
    pub xi: Vec<Vec<String>>,
    pub eta: Vec<Vec<String>>,
    pub g: Vec<Vec<String>>,
    pub alpha: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
}

fn schema(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Schema {
        field: field.into(),
        reason: reason.into(),
    }
}

fn check_len<T>(field: &str, v: &[T], expected: usize) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(schema(
            field,
            format!("expected {} entries, found {}", expected, v.len()),
        ))
    }
}

fn parse_row(field: &str, row: &[String], dim: usize, chart: &Chart) -> Result<Vec<Expr>> {
    check_len(field, row, dim)?;
    row.iter()
        .enumerate()
        .map(|(j, text)| parse_expr(text, chart).map_err(|e| e.in_field(format!("{}[{}]", field, j))))
        .collect()
}

fn parse_matrix(field: &str, rows: &[Vec<String>], count: usize, dim: usize, chart: &Chart) -> Result<Vec<Vec<Expr>>> {
    check_len(field, rows, count)?;
    rows.iter()
        .enumerate()
        .map(|(i, row)| parse_row(&format!("{}[{}]", field, i), row, dim, chart))
        .collect()
}

fn render(e: &Expr, chart: &Chart) -> String {
    e.display(chart).to_string()
}

impl ManifoldDocument {
    pub fn from_json(text: &str) -> Result<ManifoldDocument> {
        serde_json::from_str(text).map_err(|e| schema("document", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<ManifoldDocument> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {}", path.display(), e)))?;
        ManifoldDocument::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents always serialize");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())
            .map_err(|e| Error::Io(format!("{}: {}", path.display(), e)))
    }

    /// Parses and shape-checks every field. Axioms are not checked here.
    pub fn to_structure(&self) -> Result<FpkStructure> {
        let dim = 2 * self.n + self.k;
        check_len("coordinates", &self.coordinates, dim)?;
        check_len("box", &self.bounds, dim)?;
        let bounds: Vec<(f64, f64)> = self.bounds.iter().map(|b| (b[0], b[1])).collect();
        let chart = Chart::new(&self.coordinates, &bounds, self.seed)
            .map_err(|e| schema("coordinates", e.to_string()))?;
        check_len("alpha", &self.alpha, self.k)?;
        if let Some(i) = self.alpha.iter().position(|a| !a.is_finite()) {
            return Err(schema(format!("alpha[{}]", i), "not a finite number"));
        }

        let phi = EndField::new(&chart, parse_matrix("phi", &self.phi, dim, dim, &chart)?)?;
        let xi = parse_matrix("xi", &self.xi, self.k, dim, &chart)?
            .into_iter()
            .map(|c| VectorField::new(&chart, c))
            .collect::<Result<Vec<_>>>()?;
        let eta = parse_matrix("eta", &self.eta, self.k, dim, &chart)?
            .into_iter()
            .map(|c| KForm::one_form(&chart, c))
            .collect::<Result<Vec<_>>>()?;
        let g = symmetric_metric(&chart, parse_matrix("g", &self.g, dim, dim, &chart)?)?;
        FpkStructure::new(&chart, self.n, self.k, phi, xi, eta, g, self.alpha.clone())
            .map_err(|e| schema("document", e.to_string()))
    }

    pub fn from_structure(s: &FpkStructure) -> ManifoldDocument {
        let chart = s.chart();
        let rows = |m: &[Vec<Expr>]| -> Vec<Vec<String>> {
            m.iter()
                .map(|r| r.iter().map(|e| render(e, chart)).collect())
                .collect()
        };
        ManifoldDocument {
            n: s.n(),
            k: s.k(),
            coordinates: chart.names().to_vec(),
            bounds: chart.bounds().iter().map(|&(a, b)| [a, b]).collect(),
            seed: chart.seed(),
            phi: rows(s.phi().rows()),
            xi: s
                .xi()
                .iter()
                .map(|x| x.comps().iter().map(|e| render(e, chart)).collect())
                .collect(),
            eta: s
                .eta()
                .iter()
                .map(|e| e.one_form_comps().iter().map(|c| render(c, chart)).collect())
                .collect(),
            g: rows(&s.metric().rows()),
            alpha: s.alpha().to_vec(),
            tolerances: None,
        }
    }
}

/// Accepts entry pairs that are the same expression or sample to the same
/// function; the upper entry is kept. Other pairs are reported by position.
fn symmetric_metric(chart: &Chart, mut rows: Vec<Vec<Expr>>) -> Result<MetricField> {
    let dim = rows.len();
    let mut bad = Vec::new();
    for i in 0..dim {
        for j in i + 1..dim {
            if rows[i][j] == rows[j][i] {
                continue;
            }
            let diff = &rows[i][j] - &rows[j][i];
            let same = exprs_zero("g symmetry", &[diff], chart, 20, 1e-12)
                .map(|r| r.pass)
                .unwrap_or(false);
            if same {
                rows[j][i] = rows[i][j].clone();
            } else {
                bad.push(format!("g[{}][{}] vs g[{}][{}]", i, j, j, i));
            }
        }
    }
    if !bad.is_empty() {
        return Err(schema("g", format!("not symmetric: {}", bad.join(", "))));
    }
    MetricField::new(chart, rows)
}
