use std::collections::BTreeMap;

use super::field::VectorField;
use crate::error::{Error, Result};
use crate::symexpr::{partial, Chart, Expr};

/// Alternating covariant k-tensor stored sparsely as
/// `sum_{i1 < ... < ik} c_I dx^i1 ^ ... ^ dx^ik`. Missing keys are zero.
///
/// Evaluation on vector fields uses the determinant convention
/// `(dx^i ^ dx^j)(X, Y) = X^i Y^j - X^j Y^i`, which makes the coordinate
/// exterior derivative agree with the invariant formula without factorials.
#[derive(Clone, Debug, PartialEq)]
pub struct KForm {
    chart: Chart,
    degree: usize,
    coeffs: BTreeMap<Vec<usize>, Expr>,
}

/// Sorts `idx` in place and returns the sign of the sorting permutation, or
/// `None` when an index repeats.
fn sort_with_sign(idx: &mut [usize]) -> Option<f64> {
    let mut sign = 1.0;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

impl KForm {
    pub fn zero(chart: &Chart, degree: usize) -> Result<KForm> {
        if degree > chart.dim() {
            return Err(Error::DegreeOverflow {
                degree,
                dim: chart.dim(),
            });
        }
        Ok(KForm {
            chart: chart.clone(),
            degree,
            coeffs: BTreeMap::new(),
        })
    }

    pub fn scalar(chart: &Chart, f: Expr) -> KForm {
        let mut k = KForm::zero(chart, 0).expect("degree 0 always fits");
        k.insert(vec![], f);
        k
    }

    /// `sum_i comps[i] dx^i`.
    pub fn one_form(chart: &Chart, comps: Vec<Expr>) -> Result<KForm> {
        if comps.len() != chart.dim() {
            return Err(Error::DimensionMismatch(format!(
                "1-form has {} components on a {}-dimensional chart",
                comps.len(),
                chart.dim()
            )));
        }
        let mut k = KForm::zero(chart, 1)?;
        for (i, c) in comps.into_iter().enumerate() {
            k.insert(vec![i], c);
        }
        Ok(k)
    }

    pub fn dx(chart: &Chart, i: usize) -> KForm {
        let mut k = KForm::zero(chart, 1).expect("charts have dimension >= 1");
        k.insert(vec![i], Expr::one());
        k
    }

    /// Builds a form from `(indices, coefficient)` terms in any index
    /// order; terms with repeated indices vanish and duplicates accumulate.
    pub fn from_terms<I>(chart: &Chart, degree: usize, terms: I) -> Result<KForm>
    where
        I: IntoIterator<Item = (Vec<usize>, Expr)>,
    {
        let mut k = KForm::zero(chart, degree)?;
        for (idx, c) in terms {
            if idx.len() != degree || idx.iter().any(|&i| i >= chart.dim()) {
                return Err(Error::DimensionMismatch(format!(
                    "index tuple {:?} does not fit a degree-{} form on a {}-dimensional chart",
                    idx,
                    degree,
                    chart.dim()
                )));
            }
            k.accumulate(idx, c);
        }
        Ok(k)
    }

    fn insert(&mut self, idx: Vec<usize>, c: Expr) {
        if c.is_zero() {
            self.coeffs.remove(&idx);
        } else {
            self.coeffs.insert(idx, c);
        }
    }

    /// Adds `c dx^idx` for an arbitrary index order.
    fn accumulate(&mut self, mut idx: Vec<usize>, c: Expr) {
        if c.is_zero() {
            return;
        }
        let Some(sign) = sort_with_sign(&mut idx) else {
            return;
        };
        let term = if sign < 0.0 { -c } else { c };
        let sum = match self.coeffs.get(&idx) {
            Some(old) => old + &term,
            None => term,
        };
        self.insert(idx, sum);
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Stored (nonzero) terms with strictly increasing keys.
    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Expr)> {
        self.coeffs.iter()
    }

    pub fn is_structurally_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient on `dx^idx` for any index order.
    pub fn coeff(&self, idx: &[usize]) -> Expr {
        let mut sorted = idx.to_vec();
        match sort_with_sign(&mut sorted) {
            None => Expr::zero(),
            Some(sign) => match self.coeffs.get(&sorted) {
                None => Expr::zero(),
                Some(c) if sign < 0.0 => -c,
                Some(c) => c.clone(),
            },
        }
    }

    /// The 0-form's value; zero for the empty form.
    pub fn as_scalar(&self) -> Expr {
        debug_assert_eq!(self.degree, 0);
        self.coeff(&[])
    }

    /// Components of a 1-form in chart order.
    pub fn one_form_comps(&self) -> Vec<Expr> {
        debug_assert_eq!(self.degree, 1);
        (0..self.chart.dim()).map(|i| self.coeff(&[i])).collect()
    }

    pub fn add(&self, other: &KForm) -> KForm {
        debug_assert_eq!(self.degree, other.degree);
        let mut out = self.clone();
        for (idx, c) in &other.coeffs {
            out.accumulate(idx.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &KForm) -> KForm {
        self.add(&other.scale(&Expr::num(-1.0)))
    }

    pub fn scale(&self, f: &Expr) -> KForm {
        let mut out = KForm {
            chart: self.chart.clone(),
            degree: self.degree,
            coeffs: BTreeMap::new(),
        };
        for (idx, c) in &self.coeffs {
            out.insert(idx.clone(), f * c);
        }
        out
    }

    /// Every coefficient expression; a form vanishes iff all of these do.
    pub fn coefficient_exprs(&self) -> Vec<Expr> {
        self.coeffs.values().cloned().collect()
    }

    /// Value on `fields` (one per slot), by the determinant convention.
    pub fn apply(&self, fields: &[&VectorField]) -> Expr {
        assert_eq!(fields.len(), self.degree, "form evaluated on wrong number of fields");
        let perms = permutations(self.degree);
        Expr::sum(self.coeffs.iter().map(|(idx, c)| {
            let det = Expr::sum(perms.iter().map(|(perm, sign)| {
                let prod = perm
                    .iter()
                    .enumerate()
                    .fold(Expr::one(), |acc, (slot, &p)| acc * fields[slot].comp(idx[p]));
                prod.scale(*sign)
            }));
            c * det
        }))
    }

    /// The same form on a chart with coordinates appended.
    pub fn extend_to(&self, chart: &Chart) -> Result<KForm> {
        if !chart.extends(&self.chart) {
            return Err(Error::DimensionMismatch(
                "target chart does not extend the form's chart".into(),
            ));
        }
        Ok(KForm {
            chart: chart.clone(),
            degree: self.degree,
            coeffs: self.coeffs.clone(),
        })
    }
}

fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..n).collect();
    heap_permute(n, &mut idx, &mut out);
    out.into_iter()
        .map(|p| {
            let mut s = p.clone();
            let sign = sort_with_sign(&mut s).expect("permutation has no repeats");
            (p, sign)
        })
        .collect()
}

fn heap_permute(k: usize, idx: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(idx.clone());
        return;
    }
    for i in 0..k {
        heap_permute(k - 1, idx, out);
        if k.is_multiple_of(2) {
            idx.swap(i, k - 1);
        } else {
            idx.swap(0, k - 1);
        }
    }
}

/// Exterior product with shuffle signs.
pub fn wedge(a: &KForm, b: &KForm) -> Result<KForm> {
    let degree = a.degree + b.degree;
    let mut out = KForm::zero(&a.chart, degree)?;
    for (i, ca) in &a.coeffs {
        for (j, cb) in &b.coeffs {
            let mut idx = i.clone();
            idx.extend_from_slice(j);
            out.accumulate(idx, ca * cb);
        }
    }
    Ok(out)
}

/// `d(f dx^I) = sum_j (df/dx^j) dx^j ^ dx^I`.
pub fn exterior_derivative(a: &KForm) -> Result<KForm> {
    let mut out = KForm::zero(&a.chart, a.degree + 1)?;
    for (idx, c) in &a.coeffs {
        if c.as_const().is_some() {
            continue;
        }
        for j in 0..a.chart.dim() {
            if idx.contains(&j) {
                continue;
            }
            let dc = partial(c, j);
            if dc.is_zero() {
                continue;
            }
            let mut k = vec![j];
            k.extend_from_slice(idx);
            out.accumulate(k, dc);
        }
    }
    Ok(out)
}

/// Contraction of the first slot with `x`. On 0-forms the result is the
/// empty 0-form.
pub fn interior_product(x: &VectorField, a: &KForm) -> KForm {
    if a.degree == 0 {
        return KForm::zero(&a.chart, 0).expect("degree 0 always fits");
    }
    let mut out = KForm::zero(&a.chart, a.degree - 1).expect("lower degree fits");
    for (idx, c) in &a.coeffs {
        for (pos, &i) in idx.iter().enumerate() {
            let xi = x.comp(i);
            if xi.is_zero() {
                continue;
            }
            let mut rest = idx.clone();
            rest.remove(pos);
            let term = c * xi;
            out.accumulate(rest, if pos % 2 == 1 { -term } else { term });
        }
    }
    out
}

/// Cartan's formula `L_X = d i_X + i_X d`; on 0-forms this is `X . f`.
pub fn lie_derivative(x: &VectorField, a: &KForm) -> KForm {
    if a.degree == 0 {
        return KForm::scalar(&a.chart, x.apply(&a.as_scalar()));
    }
    let first = exterior_derivative(&interior_product(x, a)).expect("degree is preserved");
    if a.degree == a.chart.dim() {
        return first;
    }
    let second = interior_product(x, &exterior_derivative(a).expect("degree below top"));
    first.add(&second)
}
