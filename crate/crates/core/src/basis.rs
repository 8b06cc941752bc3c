//! Nodal Lagrange bases on the reference interval `[0, 1]` and Gauss quadrature.
//!
//! Derivatives returned by [`NodalBasis::eval`] are taken with respect to the
//! reference coordinate. Mapping to a physical element of length `L` divides the
//! first derivative by `L` and the second by `L^2`; that scaling is left to the
//! caller.

use crate::error::{Error, Result};

pub const MAX_GAUSS_POINTS: usize = 20;
pub const MAX_DEGREE: usize = 4;

/// Quadrature rule on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Iterates over `(point, weight)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }

    /// Rule mapped onto `[lo, hi]`.
    pub fn mapped(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let len = hi - lo;
        self.iter().map(move |(x, w)| (lo + len * x, len * w))
    }
}

/// Legendre polynomial `P_n(x)` and its derivative on `[-1, 1]`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    // P_n' from the standard recurrence; only used away from +-1
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss-Legendre rule with `n_points` nodes on `[0, 1]`.
pub fn gauss_rule(n_points: usize) -> Result<QuadratureRule> {
    if n_points == 0 || n_points > MAX_GAUSS_POINTS {
        return Err(Error::UnsupportedOrder {
            what: "Gauss rule",
            order: n_points,
        });
    }
    let n = n_points;
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // descending x on [-1,1] -> fill from both ends on [0,1]
        points[i] = 0.5 * (1.0 - x);
        points[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.5;
    }
    Ok(QuadratureRule { points, weights })
}

/// Gauss-Lobatto nodes (`n_points >= 2`) on `[0, 1]`, ascending.
pub fn lobatto_points(n_points: usize) -> Result<Vec<f64>> {
    if !(2..=MAX_GAUSS_POINTS).contains(&n_points) {
        return Err(Error::UnsupportedOrder {
            what: "Gauss-Lobatto rule",
            order: n_points,
        });
    }
    let n = n_points - 1;
    let mut nodes = vec![0.0; n_points];
    nodes[n] = 1.0;
    // interior nodes are roots of P_n'; Newton on P_n' with
    // P_n'' = (2x P_n' - n(n+1) P_n) / (1 - x^2)
    for i in 1..n {
        let mut x = -(std::f64::consts::PI * i as f64 / n as f64).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let ddp = (2.0 * x * dp - (n * (n + 1)) as f64 * p) / (1.0 - x * x);
            let dx = dp / ddp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = 0.5 * (1.0 + x);
    }
    Ok(nodes)
}

/// Lagrange basis interpolating at a fixed node set on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeBasis {
    nodes: Vec<f64>,
}

impl LagrangeBasis {
    pub fn from_nodes(nodes: Vec<f64>) -> Self {
        assert!(!nodes.is_empty());
        Self { nodes }
    }

    pub fn degree(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Values (`deriv = 0`), first or second derivatives of every basis
    /// function at `x`.
    pub fn eval(&self, x: f64, deriv: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(x, deriv, &mut out);
        out
    }

    pub fn eval_into(&self, x: f64, deriv: usize, out: &mut [f64]) {
        let nodes = &self.nodes;
        let n = nodes.len();
        for i in 0..n {
            let xi = nodes[i];
            // product over j not in `skip`
            let prod = |skip: &[usize]| -> f64 {
                (0..n)
                    .filter(|j| *j != i && !skip.contains(j))
                    .map(|j| (x - nodes[j]) / (xi - nodes[j]))
                    .product()
            };
            out[i] = match deriv {
                0 => prod(&[]),
                1 => (0..n)
                    .filter(|&m| m != i)
                    .map(|m| prod(&[m]) / (xi - nodes[m]))
                    .sum(),
                2 => {
                    let mut s = 0.0;
                    for m in (0..n).filter(|&m| m != i) {
                        for l in (0..n).filter(|&l| l != i && l != m) {
                            s += prod(&[m, l]) / ((xi - nodes[m]) * (xi - nodes[l]));
                        }
                    }
                    s
                }
                _ => panic!("derivative order {deriv} not supported"),
            };
        }
    }
}

/// Evaluation interface shared by the spatial and temporal bases.
pub trait NodalBasis {
    fn lagrange(&self) -> &LagrangeBasis;

    fn degree(&self) -> usize {
        self.lagrange().degree()
    }

    fn len(&self) -> usize {
        self.lagrange().len()
    }

    fn eval(&self, x: f64, deriv: usize) -> Vec<f64> {
        self.lagrange().eval(x, deriv)
    }
}

/// `P_k` on the reference element with equispaced nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialBasis(LagrangeBasis);

impl SpatialBasis {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 || k > MAX_DEGREE {
            return Err(Error::UnsupportedOrder {
                what: "spatial degree",
                order: k,
            });
        }
        let nodes = (0..=k).map(|i| i as f64 / k as f64).collect();
        Ok(Self(LagrangeBasis::from_nodes(nodes)))
    }
}

impl NodalBasis for SpatialBasis {
    fn lagrange(&self) -> &LagrangeBasis {
        &self.0
    }
}

/// `P^q` on the reference slab. Nodal at Gauss-Lobatto points for `q >= 1`, so
/// the first and last functions carry the traces at the slab ends.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalBasis(LagrangeBasis);

impl TemporalBasis {
    pub fn new(q: usize) -> Result<Self> {
        if q > MAX_DEGREE {
            return Err(Error::UnsupportedOrder {
                what: "temporal degree",
                order: q,
            });
        }
        let nodes = if q == 0 {
            vec![0.5]
        } else {
            lobatto_points(q + 1)?
        };
        Ok(Self(LagrangeBasis::from_nodes(nodes)))
    }
}

impl NodalBasis for TemporalBasis {
    fn lagrange(&self) -> &LagrangeBasis {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn midpoint_rule() {
        let r = gauss_rule(1).unwrap();
        assert_eq!(r.points, vec![0.5]);
        assert!((r.weights[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_point_rule() {
        let r = gauss_rule(2).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((r.points[0] - 0.5 * (1.0 - s)).abs() < 1e-15);
        assert!((r.points[1] - 0.5 * (1.0 + s)).abs() < 1e-15);
        assert!((r.weights[0] - 0.5).abs() < 1e-15);
        assert!((r.weights[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn three_point_rule_integrates_quintic() {
        let r = gauss_rule(3).unwrap();
        let v: f64 = r.iter().map(|(x, w)| w * x.powi(5)).sum();
        assert!((v - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn unsupported_orders() {
        assert!(gauss_rule(0).is_err());
        assert!(gauss_rule(21).is_err());
        assert!(SpatialBasis::new(0).is_err());
        assert!(TemporalBasis::new(5).is_err());
    }

    #[test]
    fn exactness_up_to_twenty_points() {
        for n in 1..=MAX_GAUSS_POINTS {
            let r = gauss_rule(n).unwrap();
            let wsum: f64 = r.weights.iter().sum();
            assert!((wsum - 1.0).abs() < 1e-13, "n={n}");
            assert!(r.weights.iter().all(|&w| w > 0.0));
            for p in 0..2 * n {
                let v: f64 = r.iter().map(|(x, w)| w * x.powi(p as i32)).sum();
                assert!((v - 1.0 / (p as f64 + 1.0)).abs() < 1e-13, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn lobatto_nodes() {
        assert_eq!(lobatto_points(2).unwrap(), vec![0.0, 1.0]);
        let p3 = lobatto_points(3).unwrap();
        assert!((p3[1] - 0.5).abs() < 1e-15);
        let p4 = lobatto_points(4).unwrap();
        let s = 1.0 / 5f64.sqrt();
        assert!((p4[1] - 0.5 * (1.0 - s)).abs() < 1e-14);
        assert!((p4[2] - 0.5 * (1.0 + s)).abs() < 1e-14);
    }

    #[test]
    fn p1_values_and_slopes() {
        let b = SpatialBasis::new(1).unwrap();
        assert_eq!(b.eval(0.5, 0), vec![0.5, 0.5]);
        for x in [0.0, 0.3, 1.0] {
            assert_eq!(b.eval(x, 1), vec![-1.0, 1.0]);
            assert_eq!(b.eval(x, 2), vec![0.0, 0.0]);
        }
    }

    #[test]
    fn nodal_property() {
        for k in 1..=MAX_DEGREE {
            let b = SpatialBasis::new(k).unwrap();
            for (j, &xj) in b.lagrange().nodes().iter().enumerate() {
                let v = b.eval(xj, 0);
                for (i, vi) in v.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((vi - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn constant_temporal_basis() {
        let t = TemporalBasis::new(0).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.eval(0.17, 0), vec![1.0]);
        assert_eq!(t.eval(0.17, 1), vec![0.0]);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let b = SpatialBasis::new(3).unwrap();
        let x = 0.37;
        let eps = 1e-5;
        let (p, m) = (b.eval(x + eps, 0), b.eval(x - eps, 0));
        let (dp, dm) = (b.eval(x + eps, 1), b.eval(x - eps, 1));
        let d1 = b.eval(x, 1);
        let d2 = b.eval(x, 2);
        for i in 0..4 {
            assert!((d1[i] - (p[i] - m[i]) / (2.0 * eps)).abs() < 1e-7);
            assert!((d2[i] - (dp[i] - dm[i]) / (2.0 * eps)).abs() < 1e-6);
        }
    }

    #[test]
    fn basis_products_integrate_exactly() {
        // phi_i phi_j of P_k has degree 2k; monomial expansion via nodal values
        // is avoided by comparing against a 20-point rule.
        let fine = gauss_rule(20).unwrap();
        for k in 1..=3 {
            let b = SpatialBasis::new(k).unwrap();
            let r = gauss_rule(k + 1).unwrap();
            let integrate = |rule: &QuadratureRule, i: usize, j: usize| -> f64 {
                rule.iter()
                    .map(|(x, w)| {
                        let v = b.eval(x, 0);
                        w * v[i] * v[j]
                    })
                    .sum()
            };
            for i in 0..=k {
                for j in 0..=k {
                    assert!((integrate(&r, i, j) - integrate(&fine, i, j)).abs() < 1e-12);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn partition_of_unity(x in 0.0f64..=1.0, k in 1usize..=4, q in 0usize..=4) {
            let s = SpatialBasis::new(k).unwrap();
            let t = TemporalBasis::new(q).unwrap();
            for v in [s.eval(x, 0), t.eval(x, 0)] {
                prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            for v in [s.eval(x, 1), t.eval(x, 1), s.eval(x, 2)] {
                prop_assert!(v.iter().sum::<f64>().abs() < 1e-10);
            }
        }
    }
}
