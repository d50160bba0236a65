//! Concrete structures used as the regression corpus and as document
//! templates.

use crate::error::{Error, Result};
use crate::fstruct::{rank_of, FpkStructure};
use crate::symexpr::{check_pointwise, exprs_zero, Chart, Expr, DEFAULT_SAMPLES, DEFAULT_TOL};
use crate::tensor::{exterior_derivative, EndField, KForm, MetricField, VectorField};

/// Seed given to catalog charts.
pub const CATALOG_SEED: u64 = 20_240_601;

fn coordinate_names(n: usize, k: usize) -> Vec<String> {
    let mut names = Vec::with_capacity(2 * n + k);
    names.extend((1..=n).map(|j| format!("x{}", j)));
    names.extend((1..=n).map(|j| format!("y{}", j)));
    names.extend((1..=k).map(|i| format!("z{}", i)));
    names
}

/// Heisenberg-type model on `R^(2n+k)` with coordinates
/// `x1..xn, y1..yn, z1..zk`:
/// `eta^i = dz_i + alpha^i sum_j y_j dx_j`, `xi_i = d/dz_i`,
/// `phi` rotates the horizontal lifts of `d/dx_j` and `d/dy_j`,
/// `g = sum (dx_j^2 + dy_j^2) + sum eta^i (x) eta^i`.
pub fn generalized_heisenberg(n: usize, k: usize, alphas: &[f64]) -> Result<FpkStructure> {
    if n == 0 || k == 0 {
        return Err(Error::DimensionMismatch(format!(
            "generalized_heisenberg needs n >= 1 and k >= 1, got n = {}, k = {}",
            n, k
        )));
    }
    if alphas.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "expected {} structure constants, got {}",
            k,
            alphas.len()
        )));
    }
    let dim = 2 * n + k;
    let chart = Chart::unit_box(&coordinate_names(n, k), CATALOG_SEED)?;
    let x = |j: usize| j;
    let y = |j: usize| n + j;
    let z = |i: usize| 2 * n + i;

    let eta: Vec<KForm> = (0..k)
        .map(|i| {
            let mut comps = vec![Expr::zero(); dim];
            comps[z(i)] = Expr::one();
            for j in 0..n {
                comps[x(j)] = Expr::var(y(j)).scale(alphas[i]);
            }
            KForm::one_form(&chart, comps)
        })
        .collect::<Result<_>>()?;
    let xi: Vec<VectorField> = (0..k).map(|i| VectorField::coord(&chart, z(i))).collect();

    let mut rows = vec![vec![Expr::zero(); dim]; dim];
    for j in 0..n {
        rows[y(j)][x(j)] = Expr::one();
        rows[x(j)][y(j)] = Expr::num(-1.0);
        for i in 0..k {
            rows[z(i)][y(j)] = Expr::var(y(j)).scale(alphas[i]);
        }
    }
    let phi = EndField::new(&chart, rows)?;
    let g = pullback_metric_plus_etas(&chart, 2 * n, delta, &eta);
    FpkStructure::new(&chart, n, k, phi, xi, eta, g, alphas.to_vec())
}

/// `generalized_heisenberg(n, 1, [1])`, the standard contact metric
/// structure on `R^(2n+1)` with `eta = dz + sum y_j dx_j`.
pub fn standard_contact(n: usize) -> Result<FpkStructure> {
    generalized_heisenberg(n, 1, &[1.0])
}

fn delta(a: usize, b: usize) -> Expr {
    Expr::num(if a == b { 1.0 } else { 0.0 })
}

/// `G(a, b)` on the first `base` coordinates plus `sum eta^i (x) eta^i`.
fn pullback_metric_plus_etas(
    chart: &Chart,
    base: usize,
    g_base: impl Fn(usize, usize) -> Expr,
    eta: &[KForm],
) -> MetricField {
    let comps: Vec<Vec<Expr>> = eta.iter().map(KForm::one_form_comps).collect();
    MetricField::from_fn(chart, |a, b| {
        let horizontal = if a < base && b < base {
            g_base(a, b)
        } else {
            Expr::zero()
        };
        let vertical = Expr::sum(
            comps
                .iter()
                .filter(|c| !c[a].is_zero() && !c[b].is_zero())
                .map(|c| &c[a] * &c[b]),
        );
        horizontal + vertical
    })
}

/// Data on a symplectic base chart: `omega`, a compatible almost complex
/// structure `j` and metric `g` related by `g(X, Y) = omega(X, J Y)`.
#[derive(Clone, Debug)]
pub struct SymplecticBase {
    pub omega: KForm,
    pub j: EndField,
    pub g: MetricField,
}

/// Builds the almost S-structure on the base chart times `R^k` with
/// `eta^i = dz_i + theta^i`, where the `theta^i` are base 1-forms with
/// `d theta^i = -alpha^i omega`.
///
/// `xi_i = d/dz_i`, `phi` is the horizontal lift of `J` (horizontal lift
/// of `d/du_a` is `d/du_a - sum_i theta^i_a d/dz_i`), and
/// `g = pi^* G + sum eta^i (x) eta^i`. All input relations are checked at
/// sampled points first.
pub fn from_symplectic_base(
    base_dim_2n: usize,
    base: &SymplecticBase,
    k: usize,
    alphas: &[f64],
    connection: &[KForm],
) -> Result<FpkStructure> {
    let bchart = base.omega.chart();
    if bchart.dim() != base_dim_2n || !base_dim_2n.is_multiple_of(2) || base_dim_2n == 0 {
        return Err(Error::DimensionMismatch(format!(
            "base dimension {} must be even, positive and match the chart of omega ({})",
            base_dim_2n,
            bchart.dim()
        )));
    }
    if base.omega.degree() != 2 {
        return Err(Error::DimensionMismatch("omega must be a 2-form".into()));
    }
    if base.j.chart() != bchart || base.g.chart() != bchart {
        return Err(Error::DimensionMismatch(
            "omega, J and G must share one base chart".into(),
        ));
    }
    if alphas.len() != k || connection.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "expected {} structure constants and connection forms, got {} and {}",
            k,
            alphas.len(),
            connection.len()
        )));
    }
    if let Some(bad) = connection.iter().position(|t| t.chart() != bchart || t.degree() != 1) {
        return Err(Error::DimensionMismatch(format!(
            "connection form {} must be a 1-form on the base chart",
            bad + 1
        )));
    }
    check_base_relations(base, alphas, connection)?;

    let n = base_dim_2n / 2;
    let names = bchart.fresh_names("z", k);
    let chart = bchart.extend(&names, &vec![(-1.0, 1.0); k])?;
    let dim = base_dim_2n + k;
    let thetas: Vec<Vec<Expr>> = connection.iter().map(KForm::one_form_comps).collect();

    let eta: Vec<KForm> = (0..k)
        .map(|i| {
            let mut comps = thetas[i].clone();
            comps.resize(dim, Expr::zero());
            comps[base_dim_2n + i] = Expr::one();
            KForm::one_form(&chart, comps)
        })
        .collect::<Result<_>>()?;
    let xi: Vec<VectorField> = (0..k)
        .map(|i| VectorField::coord(&chart, base_dim_2n + i))
        .collect();
    let phi = EndField::from_fn(&chart, |r, a| {
        if a >= base_dim_2n {
            Expr::zero()
        } else if r < base_dim_2n {
            base.j.entry(r, a).clone()
        } else {
            let theta = &thetas[r - base_dim_2n];
            -Expr::sum(
                (0..base_dim_2n)
                    .filter(|&b| !theta[b].is_zero() && !base.j.entry(b, a).is_zero())
                    .map(|b| &theta[b] * base.j.entry(b, a)),
            )
        }
    });
    let g = pullback_metric_plus_etas(&chart, base_dim_2n, |a, b| base.g.entry(a, b).clone(), &eta);
    FpkStructure::new(&chart, n, k, phi, xi, eta, g, alphas.to_vec())
}

fn require(relation: &str, exprs: &[Expr], chart: &Chart) -> Result<()> {
    let r = exprs_zero(relation, exprs, chart, DEFAULT_SAMPLES, DEFAULT_TOL)?;
    if r.pass {
        Ok(())
    } else {
        Err(Error::PreconditionViolated {
            relation: relation.to_string(),
            residual: r.max_residual,
        })
    }
}

fn check_base_relations(base: &SymplecticBase, alphas: &[f64], connection: &[KForm]) -> Result<()> {
    let chart = base.omega.chart();
    let dim = chart.dim();
    if dim >= 3 {
        require(
            "omega closed: d omega = 0",
            &exterior_derivative(&base.omega)?.coefficient_exprs(),
            chart,
        )?;
    }

    let omega_entries: Vec<Expr> = (0..dim)
        .flat_map(|a| (0..dim).map(move |b| (a, b)))
        .map(|(a, b)| base.omega.coeff(&[a, b]))
        .collect();
    let tape = crate::symexpr::Tape::compile(&omega_entries);
    let r = check_pointwise("omega nondegenerate", chart, DEFAULT_SAMPLES, 0.0, |x| {
        let m = nalgebra::DMatrix::from_row_slice(dim, dim, &tape.eval(x)?);
        Ok((dim - rank_of(&m, crate::fstruct::RANK_RATIO)) as f64)
    })?;
    if !r.pass {
        return Err(Error::PreconditionViolated {
            relation: "omega nondegenerate".into(),
            residual: r.max_residual,
        });
    }

    let j2 = base.j.compose(&base.j).add(&EndField::identity(chart));
    require("J^2 = -Id", &j2.entries(), chart)?;

    let frame = VectorField::frame(chart);
    let mut exprs = Vec::new();
    for a in &frame {
        for b in &frame {
            exprs.push(base.g.apply(a, b) - base.omega.apply(&[a, &base.j.apply(b)]));
        }
    }
    require("G(X, Y) = omega(X, J Y)", &exprs, chart)?;

    let num = base.g.numeric();
    let r = check_pointwise("G positive definite", chart, DEFAULT_SAMPLES, 0.0, |x| {
        let m = num.at(x)?;
        let min = m.symmetric_eigenvalues().min();
        Ok((crate::fstruct::MIN_METRIC_EIGENVALUE - min).max(0.0))
    })?;
    if !r.pass {
        return Err(Error::PreconditionViolated {
            relation: "G positive definite".into(),
            residual: r.max_residual,
        });
    }

    for (i, (theta, a)) in connection.iter().zip(alphas).enumerate() {
        let residual = exterior_derivative(theta)?.add(&base.omega.scale(&Expr::num(*a)));
        require(
            &format!("d theta^{} = -alpha^{} omega", i + 1, i + 1),
            &residual.coefficient_exprs(),
            chart,
        )?;
    }
    Ok(())
}

/// `R^2` with `omega = dx ^ dy`, the standard `J` and Euclidean `G`.
pub fn symplectic_plane() -> Result<SymplecticBase> {
    let chart = Chart::unit_box(&["x", "y"], CATALOG_SEED)?;
    plane_with_density(&chart, Expr::one())
}

/// `omega = rho dx ^ dy`, `G = rho (dx^2 + dy^2)`, standard `J`.
fn plane_with_density(chart: &Chart, rho: Expr) -> Result<SymplecticBase> {
    let omega = KForm::from_terms(chart, 2, [(vec![0, 1], rho.clone())])?;
    let j = EndField::new(
        chart,
        vec![
            vec![Expr::zero(), Expr::num(-1.0)],
            vec![Expr::one(), Expr::zero()],
        ],
    )?;
    let g = MetricField::from_fn(chart, |a, b| if a == b { rho.clone() } else { Expr::zero() });
    Ok(SymplecticBase { omega, j, g })
}

/// Structure over the symplectic plane with connection forms
/// `theta^i = alpha^i (y dx - x dy) / 2`.
pub fn symplectic_plane_bundle(alphas: &[f64]) -> Result<FpkStructure> {
    let base = symplectic_plane()?;
    let chart = base.omega.chart().clone();
    let (x, y) = (Expr::var(0), Expr::var(1));
    let connection: Vec<KForm> = alphas
        .iter()
        .map(|&a| KForm::one_form(&chart, vec![y.scale(0.5 * a), x.scale(-0.5 * a)]))
        .collect::<Result<_>>()?;
    from_symplectic_base(2, &base, alphas.len(), alphas, &connection)
}

/// Structure over the plane with `omega = (1 + x^2) dx ^ dy` and
/// `theta^i = -alpha^i (x + x^3 / 3) dy`; its metric and `phi` vary with
/// position.
pub fn warped_plane_bundle(alphas: &[f64]) -> Result<FpkStructure> {
    let chart = Chart::unit_box(&["x", "y"], CATALOG_SEED)?;
    let x = Expr::var(0);
    let base = plane_with_density(&chart, Expr::one() + x.powi(2))?;
    let primitive = &x + x.powi(3).scale(1.0 / 3.0);
    let connection: Vec<KForm> = alphas
        .iter()
        .map(|&a| KForm::one_form(&chart, vec![Expr::zero(), primitive.scale(-a)]))
        .collect::<Result<_>>()?;
    from_symplectic_base(2, &base, alphas.len(), alphas, &connection)
}

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 4] = [
    "standard_contact",
    "generalized_heisenberg",
    "symplectic_plane_bundle",
    "warped_plane_bundle",
];

/// Catalog entry by name. `standard_contact` uses `n` only; the plane
/// bundles take `k` from `alphas`.
pub fn by_name(name: &str, n: usize, k: usize, alphas: &[f64]) -> Result<FpkStructure> {
    match name {
        "standard_contact" => standard_contact(n),
        "generalized_heisenberg" => generalized_heisenberg(n, k, alphas),
        "symplectic_plane_bundle" => symplectic_plane_bundle(alphas),
        "warped_plane_bundle" => warped_plane_bundle(alphas),
        other => Err(Error::Schema {
            field: "catalog".into(),
            reason: format!("unknown entry `{}`; known: {}", other, NAMES.join(", ")),
        }),
    }
}

/// The structures every suite runs against, with display labels.
pub fn regression_corpus() -> Result<Vec<(String, FpkStructure)>> {
    Ok(vec![
        ("standard_contact(1)".into(), standard_contact(1)?),
        ("standard_contact(2)".into(), standard_contact(2)?),
        ("generalized_heisenberg(1,1,(1))".into(), generalized_heisenberg(1, 1, &[1.0])?),
        ("generalized_heisenberg(1,2,(1,2))".into(), generalized_heisenberg(1, 2, &[1.0, 2.0])?),
        ("generalized_heisenberg(2,2,(0,1))".into(), generalized_heisenberg(2, 2, &[0.0, 1.0])?),
        ("symplectic_plane_bundle((1,1))".into(), symplectic_plane_bundle(&[1.0, 1.0])?),
        ("warped_plane_bundle((1,-2))".into(), warped_plane_bundle(&[1.0, -2.0])?),
        ("symplectic_plane_bundle((0,0))".into(), symplectic_plane_bundle(&[0.0, 0.0])?),
    ])
}
