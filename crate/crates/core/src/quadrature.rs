//! Gauss-Legendre rules, composite panels and Richardson extrapolation.

use std::f64::consts::PI;

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Nodes by Newton iteration on the Legendre recurrence.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss rule needs at least one node");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(order, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule over `panels` equal sub-intervals.
    pub fn composite(&self, a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + k as f64 * h;
                self.integrate(lo, lo + h, &f)
            })
            .sum()
    }

    /// Flattened `(node, weight)` list of the composite rule.
    pub fn composite_points(&self, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
        let h = (b - a) / panels as f64;
        (0..panels)
            .flat_map(|k| {
                let lo = a + k as f64 * h;
                self.mapped(lo, lo + h).collect::<Vec<_>>()
            })
            .collect()
    }
}

/// `(P_n(x), P_n'(x))`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Extrapolates `f(h) = L + sum_k c_k h^{p_k}` to `h = 0`.
///
/// Needs one more sample than exponents. Solves the small Vandermonde-like
/// system by Gaussian elimination with partial pivoting.
pub fn richardson(samples: &[(f64, f64)], exponents: &[f64]) -> f64 {
    let m = exponents.len() + 1;
    assert_eq!(samples.len(), m, "richardson needs exponents.len() + 1 samples");
    let mut a = vec![vec![0.0; m + 1]; m];
    for (row, &(h, v)) in a.iter_mut().zip(samples) {
        row[0] = 1.0;
        for (k, p) in exponents.iter().enumerate() {
            row[k + 1] = h.powf(*p);
        }
        row[m] = v;
    }
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty pivot range");
        a.swap(col, piv);
        for r in 0..m {
            if r != col {
                let factor = a[r][col] / a[col][col];
                for c in col..=m {
                    a[r][c] -= factor * a[col][c];
                }
            }
        }
    }
    a[0][m] / a[0][0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_exact_for_polynomials() {
        for order in 1..=12 {
            let rule = GaussRule::new(order);
            let wsum: f64 = rule.weights.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-14);
            let deg = 2 * order - 1;
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            let got = rule.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
            assert!((got - exact).abs() < 1e-13, "order {order}");
            let even = 2 * order - 2;
            let got = rule.integrate(0.0, 1.0, |x| x.powi(even as i32));
            assert!((got - 1.0 / (even as f64 + 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn composite_smooth() {
        let rule = GaussRule::new(6);
        let v = rule.composite(0.0, PI, 4, f64::sin);
        assert!((v - 2.0).abs() < 1e-13);
        let pts = rule.composite_points(0.0, PI, 4);
        assert_eq!(pts.len(), 24);
        let v2: f64 = pts.iter().map(|(x, w)| w * x.sin()).sum();
        assert!((v - v2).abs() < 1e-15);
    }

    #[test]
    fn richardson_removes_leading_terms() {
        let f = |h: f64| 3.0 + 2.0 * h - 5.0 * h * h + 0.1 * h.powi(3);
        let s: Vec<_> = [0.1, 0.05, 0.025].iter().map(|&h| (h, f(h))).collect();
        let l = richardson(&s, &[1.0, 2.0]);
        assert!((l - 3.0).abs() < 5e-5);
        let g = |h: f64| -1.0 + h + h.powf(1.5);
        let s: Vec<_> = [0.1, 0.05, 0.025].iter().map(|&h| (h, g(h))).collect();
        assert!((richardson(&s, &[1.0, 1.5]) + 1.0).abs() < 1e-12);
    }
}
