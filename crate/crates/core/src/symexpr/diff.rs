use std::collections::HashMap;

use super::chart::Chart;
use super::expr::{Expr, Node};
use crate::error::Result;

/// Exact partial derivative with respect to the named coordinate.
pub fn differentiate(e: &Expr, coord: &str, chart: &Chart) -> Result<Expr> {
    Ok(partial(e, chart.index_of(coord)?))
}

/// Partial derivative by coordinate index. Shared subtrees of `e` are
/// differentiated once and the results shared in the output.
pub fn partial(e: &Expr, var: usize) -> Expr {
    let mut memo = HashMap::new();
    partial_memo(e, var, &mut memo)
}

fn partial_memo(e: &Expr, var: usize, memo: &mut HashMap<usize, (Expr, Expr)>) -> Expr {
    if let Some((_, d)) = memo.get(&e.id()) {
        return d.clone();
    }
    let d = match e.node() {
        Node::Const(_) => Expr::zero(),
        Node::Var(i) => Expr::num(if *i == var { 1.0 } else { 0.0 }),
        Node::Neg(a) => -partial_memo(a, var, memo),
        Node::Sin(a) => a.cos() * partial_memo(a, var, memo),
        Node::Cos(a) => -(a.sin() * partial_memo(a, var, memo)),
        Node::Exp(a) => e * partial_memo(a, var, memo),
        Node::Add(a, b) => partial_memo(a, var, memo) + partial_memo(b, var, memo),
        Node::Sub(a, b) => partial_memo(a, var, memo) - partial_memo(b, var, memo),
        Node::Mul(a, b) => {
            let da = partial_memo(a, var, memo);
            let db = partial_memo(b, var, memo);
            da * b + a * db
        }
        Node::Div(a, b) => {
            let da = partial_memo(a, var, memo);
            let db = partial_memo(b, var, memo);
            if db.is_zero() {
                da / b
            } else {
                (da * b - a * db) / b.powi(2)
            }
        }
        Node::Pow(a, n) => {
            let da = partial_memo(a, var, memo);
            Expr::num(*n as f64) * a.powi(n - 1) * da
        }
    };
    // The source is kept alive alongside its derivative so the pointer key
    // cannot be reused while the memo exists.
    memo.insert(e.id(), (e.clone(), d.clone()));
    d
}

/// Gradient in chart order.
pub fn gradient(e: &Expr, dim: usize) -> Vec<Expr> {
    (0..dim).map(|i| partial(e, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::{evaluate, parse_expr};

    #[test]
    fn product_and_chain_rules() {
        let c = Chart::unit_box(&["x", "y", "z"], 0).unwrap();
        let p = c.point(vec![0.3, -0.7, 1.1]).unwrap();
        let d = differentiate(&parse_expr("x*y", &c).unwrap(), "x", &c).unwrap();
        assert_eq!(evaluate(&d, &p).unwrap(), -0.7);
        let d = differentiate(&parse_expr("sin(z)", &c).unwrap(), "z", &c).unwrap();
        assert_eq!(evaluate(&d, &p).unwrap(), 1.1f64.cos());
        assert!(differentiate(&parse_expr("x", &c).unwrap(), "w", &c).is_err());
    }

    #[test]
    fn quotient_rule_matches_finite_difference() {
        // d/dx (x^2 / y) at (2, 4); central difference with h = 1e-6.
        let c = Chart::unit_box(&["x", "y"], 0).unwrap();
        let e = parse_expr("x^2 / y", &c).unwrap();
        let h = 1e-6;
        let f = |x: f64| evaluate(&e, &c.point(vec![x, 4.0]).unwrap()).unwrap();
        let fd = (f(2.0 + h) - f(2.0 - h)) / (2.0 * h);
        assert!((fd - 1.0).abs() < 1e-6);
        let d = differentiate(&e, "x", &c).unwrap();
        let v = evaluate(&d, &c.point(vec![2.0, 4.0]).unwrap()).unwrap();
        assert!((v - fd).abs() < 1e-6);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shared_subtrees_stay_shared() {
        let c = Chart::unit_box(&["x"], 0).unwrap();
        let x = c.var("x").unwrap();
        // Doubling 30 times would be 2^30 nodes as a tree.
        let mut e = x.sin();
        for _ in 0..30 {
            e = &e * &e;
        }
        let d = partial(&e, 0);
        assert!(d.node_count() < 400);
    }
}
