use crate::error::{Error, Result};
use crate::symexpr::{partial, random_polynomial, Chart, Expr, Sampler};

/// Contravariant vector field `X = sum X^i d/dx^i`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    chart: Chart,
    comps: Vec<Expr>,
}

impl VectorField {
    pub fn new(chart: &Chart, comps: Vec<Expr>) -> Result<VectorField> {
        if comps.len() != chart.dim() {
            return Err(Error::DimensionMismatch(format!(
                "vector field has {} components on a {}-dimensional chart",
                comps.len(),
                chart.dim()
            )));
        }
        Ok(VectorField {
            chart: chart.clone(),
            comps,
        })
    }

    pub fn zero(chart: &Chart) -> VectorField {
        VectorField {
            chart: chart.clone(),
            comps: vec![Expr::zero(); chart.dim()],
        }
    }

    /// Coordinate field `d/dx^i`.
    pub fn coord(chart: &Chart, i: usize) -> VectorField {
        let mut v = VectorField::zero(chart);
        v.comps[i] = Expr::one();
        v
    }

    pub fn frame(chart: &Chart) -> Vec<VectorField> {
        (0..chart.dim()).map(|i| VectorField::coord(chart, i)).collect()
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn comps(&self) -> &[Expr] {
        &self.comps
    }

    pub fn comp(&self, i: usize) -> &Expr {
        &self.comps[i]
    }

    /// Directional derivative `X . f`.
    pub fn apply(&self, f: &Expr) -> Expr {
        Expr::sum(
            self.comps
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(i, c)| c * partial(f, i)),
        )
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        self.zip(other, |a, b| a - b)
    }

    /// Pointwise product with a scalar field.
    pub fn scale(&self, f: &Expr) -> VectorField {
        self.map(|c| f * c)
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> VectorField {
        VectorField {
            chart: self.chart.clone(),
            comps: self.comps.iter().map(f).collect(),
        }
    }

    fn zip(&self, other: &VectorField, f: impl Fn(&Expr, &Expr) -> Expr) -> VectorField {
        debug_assert_eq!(self.comps.len(), other.comps.len());
        VectorField {
            chart: self.chart.clone(),
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| f(a, b)).collect(),
        }
    }

    /// The same field on a chart with extra coordinates appended; the new
    /// components are zero.
    pub fn extend_to(&self, chart: &Chart) -> Result<VectorField> {
        if !chart.extends(&self.chart) {
            return Err(Error::DimensionMismatch(
                "target chart does not extend the field's chart".into(),
            ));
        }
        let mut comps = self.comps.clone();
        comps.resize(chart.dim(), Expr::zero());
        VectorField::new(chart, comps)
    }
}

/// Lie bracket `[X, Y]^i = X . Y^i - Y . X^i`.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> VectorField {
    let comps = x
        .comps
        .iter()
        .zip(&y.comps)
        .map(|(xi, yi)| x.apply(yi) - y.apply(xi))
        .collect();
    VectorField {
        chart: x.chart.clone(),
        comps,
    }
}

/// `count` fields whose components are random quadratic polynomials in all
/// chart coordinates, seeded from the chart seed and `label`.
pub fn random_fields(chart: &Chart, label: &str, count: usize) -> Vec<VectorField> {
    let mut sampler = Sampler::new(chart, label);
    let dim = chart.dim();
    (0..count)
        .map(|_| {
            let comps = (0..dim)
                .map(|_| random_polynomial(sampler.rng(), dim, 2))
                .collect();
            VectorField::new(chart, comps).expect("component count matches")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::exprs_zero;

    fn chart() -> Chart {
        Chart::unit_box(&["x", "y", "z"], 4).unwrap()
    }

    fn vanishes(v: &VectorField) -> bool {
        exprs_zero("v", v.comps(), v.chart(), 50, 1e-12).unwrap().pass
    }

    #[test]
    fn coordinate_fields_commute() {
        let c = chart();
        let b = lie_bracket(&VectorField::coord(&c, 0), &VectorField::coord(&c, 1));
        assert!(b.comps().iter().all(Expr::is_zero));
    }

    #[test]
    fn bracket_of_x_dy_with_dx() {
        // [x d/dy, d/dx] = -d/dy
        let c = chart();
        let x = c.var("x").unwrap();
        let xdy = VectorField::coord(&c, 1).scale(&x);
        let b = lie_bracket(&xdy, &VectorField::coord(&c, 0));
        let expected = VectorField::coord(&c, 1).scale(&Expr::num(-1.0));
        assert!(vanishes(&b.sub(&expected)));
    }

    #[test]
    fn bracket_is_antisymmetric() {
        let c = chart();
        let [x, y, z] = [0, 1, 2].map(Expr::var);
        let a = VectorField::new(&c, vec![&x * &y, z.sin(), Expr::one()]).unwrap();
        let b = VectorField::new(&c, vec![y.exp(), &x * &z, &y * &y]).unwrap();
        assert!(vanishes(&lie_bracket(&a, &b).add(&lie_bracket(&b, &a))));
    }

    #[test]
    fn wrong_component_count_is_rejected() {
        let c = chart();
        assert!(VectorField::new(&c, vec![Expr::one()]).is_err());
    }
}
