//! Shared numerical machinery: Gauss-Legendre quadrature, a monotone cubic
//! (PCHIP) interpolant, complex cubic roots, and small statistics helpers.

use num_complex::Complex64 as C64;

/// Gauss-Legendre rule on [-1, 1], nodes found by Newton iteration on P_n.
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let mut x =
                (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_and_derivative(n, x);
                let dx = -p / dp;
                x += dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_and_derivative(n, x);
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        GaussLegendre { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Integral of e^{-t} g(t) over t in (0, inf): composite rule over dyadic
    /// segments, with the exponential weight evaluated explicitly. The tail
    /// beyond t = 48 is below 1e-20 for any polynomially bounded g.
    pub fn integrate_exp_weighted<F: FnMut(f64) -> f64>(&self, mut g: F) -> f64 {
        const EDGES: [f64; 8] = [0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 24.0, 48.0];
        let mut sum = 0.0;
        for w in EDGES.windows(2) {
            sum += self.integrate(w[0], w[1], |t| (-t).exp() * g(t));
        }
        sum
    }
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
///
/// Shape-preserving: does not overshoot monotone data, which keeps sign and
/// monotonicity invariants of tabulated potential curves intact. Evaluation
/// outside the grid clamps to the end intervals' cubics.
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        assert!(x.len() >= 2 && x.len() == y.len());
        assert!(x.windows(2).all(|w| w[1] > w[0]), "x must be increasing");
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] <= 0.0 {
                d[i] = 0.0;
            } else {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        d[0] = edge_slope(h[0], h.get(1).copied().unwrap_or(h[0]), delta[0], *delta.get(1).unwrap_or(&delta[0]));
        d[n - 1] = edge_slope(
            h[n - 2],
            if n >= 3 { h[n - 3] } else { h[n - 2] },
            delta[n - 2],
            if n >= 3 { delta[n - 3] } else { delta[n - 2] },
        );
        Pchip { x, y, d }
    }

    fn interval(&self, x: f64) -> usize {
        let n = self.x.len();
        match self.x.partition_point(|&xi| xi <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.x.last().unwrap()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.interval(x);
        let h = self.x[i + 1] - self.x[i];
        let t = (x - self.x[i]) / h;
        let (h00, h10, h01, h11) = hermite_basis(t);
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }

    /// Analytic derivative dy/dx of the interpolant.
    pub fn derivative(&self, x: f64) -> f64 {
        let i = self.interval(x);
        let h = self.x[i + 1] - self.x[i];
        let t = (x - self.x[i]) / h;
        let dh00 = 6.0 * t * t - 6.0 * t;
        let dh10 = 3.0 * t * t - 4.0 * t + 1.0;
        let dh01 = -dh00;
        let dh11 = 3.0 * t * t - 2.0 * t;
        (dh00 * self.y[i] + dh01 * self.y[i + 1]) / h + dh10 * self.d[i] + dh11 * self.d[i + 1]
    }
}

fn hermite_basis(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        2.0 * t3 - 3.0 * t2 + 1.0,
        t3 - 2.0 * t2 + t,
        -2.0 * t3 + 3.0 * t2,
        t3 - t2,
    )
}

fn edge_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    // Non-centered three-point estimate, clamped per Fritsch-Carlson.
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d1 * d0 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Roots of the monic complex cubic z^3 + a2 z^2 + a1 z + a0.
pub fn cubic_roots(a2: C64, a1: C64, a0: C64) -> [C64; 3] {
    let third = 1.0 / 3.0;
    let shift = a2 * third;
    let p = a1 - a2 * a2 * third;
    let q = a2 * a2 * a2 * (2.0 / 27.0) - a2 * a1 * third + a0;
    let omega = C64::from_polar(1.0, std::f64::consts::TAU / 3.0);

    let mut roots = if p.norm() < 1e-300 && q.norm() < 1e-300 {
        [C64::new(0.0, 0.0); 3]
    } else {
        let s = (q * q * 0.25 + p * p * p / 27.0).sqrt();
        let c1 = -q * 0.5 + s;
        let c2 = -q * 0.5 - s;
        let u3 = if c1.norm() >= c2.norm() { c1 } else { c2 };
        let u = u3.powf(third);
        if u.norm() < 1e-300 {
            // p == 0: three cube roots of -q.
            let r = (-q).powf(third);
            [r, r * omega, r * omega * omega]
        } else {
            let v = -p / (u * 3.0);
            [
                u + v,
                u * omega + v * omega.conj(),
                u * omega * omega + v * omega.conj() * omega.conj(),
            ]
        }
    };
    for r in roots.iter_mut() {
        let mut z = *r - shift;
        // A couple of Newton polish steps on the original cubic.
        for _ in 0..2 {
            let f = ((z + a2) * z + a1) * z + a0;
            let df = (z * 3.0 + a2 * 2.0) * z + a1;
            if df.norm() > 1e-300 {
                z -= f / df;
            }
        }
        *r = z;
    }
    roots
}

/// P(Poisson(lambda) >= c).
pub fn poisson_tail(lambda: f64, c: u32) -> f64 {
    if c == 0 {
        return 1.0;
    }
    if lambda <= 0.0 {
        return 0.0;
    }
    let mut term = (-lambda).exp();
    let mut cdf = term;
    for k in 1..c {
        term *= lambda / k as f64;
        cdf += term;
    }
    (1.0 - cdf).max(0.0)
}

/// Two-sided Kolmogorov-Smirnov statistic of samples against a model CDF.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(8);
        let v = gl.integrate(0.0, 2.0, |x| x.powi(7) - 3.0 * x * x + 1.0);
        assert_relative_eq!(v, 256.0 / 8.0 - 8.0 + 2.0, max_relative = 1e-13);
    }

    #[test]
    fn exp_weighted_quadrature_matches_gamma_integrals() {
        let gl = GaussLegendre::new(32);
        // int_0^inf t^3 e^-t dt = 6
        let v = gl.integrate_exp_weighted(|t| t * t * t);
        assert_relative_eq!(v, 6.0, max_relative = 1e-12);
        // int_0^inf e^-t / (1+t) dt = 0.596347...
        let v = gl.integrate_exp_weighted(|t| 1.0 / (1.0 + t));
        assert_relative_eq!(v, 0.596_347_362_323_194, max_relative = 1e-12);
    }

    #[test]
    fn pchip_preserves_monotonicity_and_interpolates() {
        let x: Vec<f64> = (0..30).map(|i| (i as f64 * 0.3).exp()).collect();
        let y: Vec<f64> = x.iter().map(|&v| -1.0 / (v * v * v)).collect();
        let p = Pchip::new(x.clone(), y.clone());
        for i in 0..x.len() {
            assert_relative_eq!(p.eval(x[i]), y[i], max_relative = 1e-14);
        }
        // strictly increasing everywhere sampled
        let mut prev = f64::NEG_INFINITY;
        let mut t = x[0];
        while t < *x.last().unwrap() {
            let v = p.eval(t);
            assert!(v >= prev - 1e-12);
            prev = v;
            t *= 1.01;
        }
    }

    #[test]
    fn pchip_derivative_matches_finite_differences() {
        let x: Vec<f64> = (0..50).map(|i| 0.1 * (i as f64 * 0.2).exp()).collect();
        let y: Vec<f64> = x.iter().map(|&v| (v).sin() / v).collect();
        let p = Pchip::new(x, y);
        for &t in &[0.5, 1.0, 3.0, 8.0] {
            let h = 1e-6 * t;
            let fd = (p.eval(t + h) - p.eval(t - h)) / (2.0 * h);
            assert_relative_eq!(p.derivative(t), fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn cubic_roots_reproduce_known_factorizations() {
        // (z-1)(z-2i)(z+3) = z^3 + (2 - 2i) z^2 + (-3 - 4i) z + 6i
        let roots = cubic_roots(
            C64::new(2.0, -2.0),
            C64::new(-3.0, -4.0),
            C64::new(0.0, 6.0),
        );
        let mut expected = [C64::new(1.0, 0.0), C64::new(0.0, 2.0), C64::new(-3.0, 0.0)];
        for r in roots {
            let (idx, _) = expected
                .iter()
                .enumerate()
                .min_by(|a, b| (r - a.1).norm().partial_cmp(&(r - b.1).norm()).unwrap())
                .unwrap();
            assert!((r - expected[idx]).norm() < 1e-10, "root {r} unmatched");
            expected[idx] = C64::new(f64::MAX, f64::MAX);
        }
    }

    #[test]
    fn poisson_tail_closed_forms() {
        assert_relative_eq!(poisson_tail(1.0, 1), 1.0 - (-1.0f64).exp(), epsilon = 1e-15);
        assert_eq!(poisson_tail(5.0, 0), 1.0);
        assert_eq!(poisson_tail(0.0, 3), 0.0);
    }
}
