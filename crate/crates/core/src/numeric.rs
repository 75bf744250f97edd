//! Small numerical helpers shared across modules.

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `ln(1 + e^x)` without overflow.
pub fn log1pexp(x: f64) -> f64 {
    if x > 35.0 {
        x
    } else if x < -35.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// Adaptive Simpson quadrature to the given absolute tolerance.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

/// Gauss-Hermite nodes and weights for `int e^{-x^2} f(x) dx ~ sum w_i f(x_i)`
/// (physicists' convention). Nodes come out in ascending order.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[n - 1],
            3 => 1.91 * z - 0.91 * nodes[n - 2],
            _ => 2.0 * z - nodes[n - i + 1],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let mut p1 = std::f64::consts::PI.powf(-0.25);
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[n - 1 - i] = z;
        nodes[i] = -z;
        weights[n - 1 - i] = 2.0 / (pp * pp);
        weights[i] = weights[n - 1 - i];
    }
    (nodes, weights)
}

/// Trigamma function (derivative of digamma), by recurrence into the
/// asymptotic regime.
pub fn trigamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return f64::INFINITY;
    }
    if x < 0.0 {
        // reflection: psi'(1-x) + psi'(x) = pi^2 / sin^2(pi x)
        let s = (std::f64::consts::PI * x).sin();
        return std::f64::consts::PI * std::f64::consts::PI / (s * s) - trigamma(1.0 - x);
    }
    let mut acc = 0.0;
    let mut y = x;
    while y < 8.0 {
        acc += 1.0 / (y * y);
        y += 1.0;
    }
    // asymptotic series
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    acc + inv * (1.0 + 0.5 * inv + inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 / 30.0))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_polynomial_exactly() {
        let got = adaptive_simpson(&|x| x * x * x - 2.0 * x + 1.0, -1.0, 3.0, 1e-12);
        // antiderivative x^4/4 - x^2 + x
        let want = (81.0 / 4.0 - 9.0 + 3.0) - (0.25 - 1.0 - 1.0);
        assert!((got - want).abs() < 1e-10);
    }

    #[test]
    fn simpson_gaussian_integral() {
        let inv_sqrt_2pi = (2.0 * std::f64::consts::PI).sqrt().recip();
        let got = adaptive_simpson(&|x: f64| inv_sqrt_2pi * (-0.5 * x * x).exp(), -10.0, 10.0, 1e-12);
        assert!((got - 1.0).abs() < 1e-10);
    }

    #[test]
    fn hermite_rules_integrate_moments() {
        for n in [5, 21, 42] {
            let (x, w) = gauss_hermite(n);
            let total: f64 = w.iter().sum();
            assert!((total - std::f64::consts::PI.sqrt()).abs() < 1e-10, "n={n}");
            let m2: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi * xi).sum();
            assert!((m2 - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-9, "n={n}");
            // nodes ascending and symmetric
            for k in 1..n {
                assert!(x[k] > x[k - 1]);
            }
        }
    }

    #[test]
    fn trigamma_known_values() {
        let pi2_6 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((trigamma(1.0) - pi2_6).abs() < 1e-12);
        // psi'(2) = pi^2/6 - 1
        assert!((trigamma(2.0) - (pi2_6 - 1.0)).abs() < 1e-12);
        // psi'(0.5) = pi^2/2
        assert!((trigamma(0.5) - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-10);
        // finite difference of digamma
        let h = 1e-5;
        let d = (statrs::function::gamma::digamma(3.2 + h) - statrs::function::gamma::digamma(3.2 - h)) / (2.0 * h);
        assert!((trigamma(3.2) - d).abs() < 1e-8);
    }

    #[test]
    fn stable_logistic() {
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
        assert!(sigmoid(-800.0) >= 0.0);
        assert!(sigmoid(800.0) <= 1.0);
        assert!((logit(sigmoid(1.7)) - 1.7).abs() < 1e-12);
        assert!((log1pexp(-50.0) - (-50f64).exp()).abs() < 1e-30);
        assert!((log1pexp(50.0) - 50.0).abs() < 1e-12);
    }
}
