use std::fmt;
use std::sync::Arc;

use serde::ser::{Serialize, SerializeMap, Serializer};

use super::expr::Expr;
use crate::error::{Error, Result};

#[derive(Debug, PartialEq)]
struct ChartInner {
    names: Vec<String>,
    bounds: Vec<(f64, f64)>,
    seed: u64,
}

/// A coordinate patch: ordered coordinate names, a closed sampling box and
/// the seed every sampling check on this chart derives its RNG from.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart(Arc<ChartInner>);

fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Chart {
    pub fn new<S: AsRef<str>>(names: &[S], bounds: &[(f64, f64)], seed: u64) -> Result<Chart> {
        if names.is_empty() {
            return Err(Error::InvalidChart("dimension must be at least 1".into()));
        }
        if names.len() != bounds.len() {
            return Err(Error::InvalidChart(format!(
                "{} coordinates but {} intervals",
                names.len(),
                bounds.len()
            )));
        }
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        for (i, name) in names.iter().enumerate() {
            if !is_identifier(name) || matches!(name.as_str(), "sin" | "cos" | "exp") {
                return Err(Error::InvalidChart(format!("`{}` is not a valid coordinate name", name)));
            }
            if names[..i].contains(name) {
                return Err(Error::InvalidChart(format!("duplicate coordinate `{}`", name)));
            }
        }
        for (name, &(lo, hi)) in names.iter().zip(bounds) {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::InvalidChart(format!(
                    "interval [{}, {}] for `{}` must have positive length",
                    lo, hi, name
                )));
            }
        }
        Ok(Chart(Arc::new(ChartInner {
            names,
            bounds: bounds.to_vec(),
            seed,
        })))
    }

    /// Chart with every coordinate sampled from [-1, 1].
    pub fn unit_box<S: AsRef<str>>(names: &[S], seed: u64) -> Result<Chart> {
        Chart::new(names, &vec![(-1.0, 1.0); names.len()], seed)
    }

    pub fn dim(&self) -> usize {
        self.0.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.0.names
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.0.bounds
    }

    pub fn seed(&self) -> u64 {
        self.0.seed
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.0
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownCoordinate(name.to_string()))
    }

    pub fn var(&self, name: &str) -> Result<Expr> {
        self.index_of(name).map(Expr::var)
    }

    /// Coordinate functions in chart order.
    pub fn coords(&self) -> Vec<Expr> {
        (0..self.dim()).map(Expr::var).collect()
    }

    pub fn with_seed(&self, seed: u64) -> Chart {
        Chart(Arc::new(ChartInner {
            names: self.0.names.clone(),
            bounds: self.0.bounds.clone(),
            seed,
        }))
    }

    pub fn with_bounds(&self, bounds: &[(f64, f64)]) -> Result<Chart> {
        Chart::new(&self.0.names, bounds, self.0.seed)
    }

    /// Appends coordinates after the existing ones. Expressions over `self`
    /// stay valid over the result because existing indices are unchanged.
    pub fn extend<S: AsRef<str>>(&self, names: &[S], bounds: &[(f64, f64)]) -> Result<Chart> {
        let mut all: Vec<String> = self.0.names.clone();
        all.extend(names.iter().map(|s| s.as_ref().to_string()));
        let mut b = self.0.bounds.clone();
        b.extend_from_slice(bounds);
        Chart::new(&all, &b, self.0.seed)
    }

    /// Names `prefix1..prefixN`, with underscores appended until none of them
    /// collides with an existing coordinate.
    pub fn fresh_names(&self, prefix: &str, count: usize) -> Vec<String> {
        let mut p = prefix.to_string();
        loop {
            let names: Vec<String> = (1..=count).map(|i| format!("{}{}", p, i)).collect();
            if names.iter().all(|n| !self.0.names.contains(n)) {
                return names;
            }
            p.push('_');
        }
    }

    /// True when `self` is `other` with coordinates appended.
    pub fn extends(&self, other: &Chart) -> bool {
        self.dim() >= other.dim() && self.0.names[..other.dim()] == other.0.names[..]
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.0.bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    pub fn point(&self, values: Vec<f64>) -> Result<Point> {
        if values.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "point has {} values, chart has {} coordinates",
                values.len(),
                self.dim()
            )));
        }
        Ok(Point {
            chart: self.clone(),
            values,
        })
    }

    /// Point from `(name, value)` pairs; every coordinate must be covered
    /// exactly once.
    pub fn point_from_pairs(&self, pairs: &[(&str, f64)]) -> Result<Point> {
        let mut values = vec![None; self.dim()];
        for (name, v) in pairs {
            let i = self.index_of(name)?;
            if values[i].replace(*v).is_some() {
                return Err(Error::DimensionMismatch(format!("coordinate `{}` given twice", name)));
            }
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| {
                    Error::DimensionMismatch(format!("point misses coordinate `{}`", self.0.names[i]))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        self.point(values)
    }
}

/// A point of a chart; values are in chart order.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    chart: Chart,
    values: Vec<f64>,
}

impl Point {
    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        Ok(self.values[self.chart.index_of(name)?])
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (n, v)) in self.chart.names().iter().zip(&self.values).enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}: {:.6}", n, v)?;
        }
        write!(f, "}}")
    }
}

/// Serialized as an object keyed by coordinate name, in chart order.
impl Serialize for Point {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.values.len()))?;
        for (n, v) in self.chart.names().iter().zip(&self.values) {
            map.serialize_entry(n, v)?;
        }
        map.end()
    }
}
