//! One-dimensional quadrature and interpolation building blocks.

use std::f64::consts::PI;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on the three-term recurrence, sorted
    /// ascending.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let m = order.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(order, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        if order % 2 == 1 {
            nodes[order / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped affinely to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Barycentric interpolation weights for this node set,
    /// `(-1)^k sqrt((1 - x_k^2) w_k)`.
    pub fn barycentric_weights(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .zip(&self.weights)
            .enumerate()
            .map(|(k, (x, w))| {
                let s = ((1.0 - x * x) * w).sqrt();
                if k % 2 == 0 {
                    s
                } else {
                    -s
                }
            })
            .collect()
    }
}

fn legendre_with_derivative(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=order {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if order == 0 { 1.0 } else { p1 };
    let d = order as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Barycentric Lagrange interpolation on arbitrary distinct nodes.
pub fn barycentric_eval(nodes: &[f64], bary: &[f64], values: &[f64], x: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((xn, b), v) in nodes.iter().zip(bary).zip(values) {
        let d = x - xn;
        if d == 0.0 {
            return *v;
        }
        let c = b / d;
        num += c * v;
        den += c;
    }
    num / den
}

/// Equispaced periodic nodes `2 pi j / m` and the matching trapezoid weight.
pub fn periodic_trapezoid(m: usize) -> (Vec<f64>, f64) {
    let h = 2.0 * PI / m as f64;
    ((0..m).map(|j| j as f64 * h).collect(), h)
}

/// Cardinal function of trigonometric interpolation on `m` equispaced
/// nodes, evaluated at offset `x` from a node.
pub fn trig_cardinal(m: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let s = half.sin();
    if s.abs() < 1e-15 {
        // x is a multiple of 2 pi
        return 1.0;
    }
    let mf = m as f64;
    if m.is_multiple_of(2) {
        (mf * half).sin() * half.cos() / (mf * s)
    } else {
        (mf * half).sin() / (mf * s)
    }
}

/// Trigonometric interpolant of periodic samples `values[j] = f(2 pi j / m)`.
pub fn trig_interpolate(values: &[f64], theta: f64) -> f64 {
    let m = values.len();
    let h = 2.0 * PI / m as f64;
    let r = theta.rem_euclid(2.0 * PI) / h;
    let nearest = r.round();
    if (r - nearest).abs() < 1e-13 {
        return values[(nearest as usize) % m];
    }
    values
        .iter()
        .enumerate()
        .map(|(j, v)| v * trig_cardinal(m, theta - j as f64 * h))
        .sum()
}

/// Extrapolates `(h_k, f(h_k))` samples to `h = 0` with Neville's scheme.
pub fn extrapolate_to_zero(h: &[f64], f: &[f64]) -> f64 {
    assert_eq!(h.len(), f.len());
    let mut p = f.to_vec();
    let n = p.len();
    for level in 1..n {
        for i in 0..(n - level) {
            let hi = h[i];
            let hj = h[i + level];
            p[i] = (hj * p[i] - hi * p[i + 1]) / (hj - hi);
        }
    }
    p[0]
}

/// Breakpoints of a panel partition of `[lo, hi]` graded geometrically
/// (ratio 2) away from `center`, with innermost half-width `width`.
pub fn graded_breakpoints(lo: f64, hi: f64, center: f64, width: f64) -> Vec<f64> {
    assert!(lo < hi && width > 0.0);
    let c = center.clamp(lo, hi);
    let mut right = vec![c];
    let mut w = width;
    while *right.last().unwrap() < hi {
        let next = (c + w).min(hi);
        right.push(next);
        w *= 2.0;
    }
    let mut left = vec![];
    let mut w = width;
    let mut last = c;
    while last > lo {
        last = (c - w).max(lo);
        left.push(last);
        w *= 2.0;
    }
    left.reverse();
    left.extend(right);
    left.dedup();
    left
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for order in [1, 2, 5, 16, 33] {
            let gl = GaussLegendre::new(order);
            let total: f64 = gl.weights.iter().sum();
            assert!((total - 2.0).abs() < 1e-14);
            for deg in 0..(2 * order) {
                let got = gl.integrate(0.0, 1.0, |x| x.powi(deg as i32));
                let want = 1.0 / (deg as f64 + 1.0);
                assert!((got - want).abs() < 1e-14, "order {order} degree {deg}");
            }
            assert!(gl.nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn barycentric_reproduces_polynomials() {
        let gl = GaussLegendre::new(8);
        let bary = gl.barycentric_weights();
        let f = |x: f64| 3.0 * x.powi(7) - x.powi(2) + 0.5;
        let values: Vec<f64> = gl.nodes.iter().map(|&x| f(x)).collect();
        for x in [-0.93, -0.2, 0.0, 0.41, 1.0] {
            assert!((barycentric_eval(&gl.nodes, &bary, &values, x) - f(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn trig_interpolation_is_exact_for_bandlimited() {
        for m in [16, 17] {
            let f = |t: f64| 1.0 + (3.0 * t).cos() - 0.5 * (2.0 * t).sin();
            let (nodes, _) = periodic_trapezoid(m);
            let values: Vec<f64> = nodes.iter().map(|&t| f(t)).collect();
            for t in [0.1, 2.0, 4.4, 6.2] {
                assert!((trig_interpolate(&values, t) - f(t)).abs() < 1e-13, "m={m}");
            }
        }
    }

    #[test]
    fn neville_extrapolation_removes_polynomial_error() {
        let h = [0.1, 0.05, 0.025, 0.0125];
        let f: Vec<f64> = h.iter().map(|x| 2.0 + 3.0 * x - x * x + 0.5 * x * x * x).collect();
        assert!((extrapolate_to_zero(&h, &f) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn graded_panels_cover_interval() {
        let b = graded_breakpoints(-PI, PI, 0.3, 1e-4);
        assert_eq!(b[0], -PI);
        assert_eq!(*b.last().unwrap(), PI);
        assert!(b.windows(2).all(|w| w[0] < w[1]));
        assert!(b.contains(&0.3));
        assert!(b.len() < 50);
    }
}
