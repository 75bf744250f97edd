use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

/// Penalized-complexity prior settings for the barrier field, defined by
/// the tail conditions `Pr(sigma > sigma_upper) = sigma_tail` and
/// `Pr(range < range_lower) = range_tail`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcPrior {
    pub sigma_upper: f64,
    pub sigma_tail: f64,
    pub range_lower: f64,
    pub range_tail: f64,
}

impl PcPrior {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.sigma_upper > 0.0 && self.range_lower > 0.0) {
            return Err(crate::Error::invalid("PC prior thresholds must be positive"));
        }
        for t in [self.sigma_tail, self.range_tail] {
            if !(t > 0.0 && t < 1.0) {
                return Err(crate::Error::invalid("PC prior tail probabilities must lie in (0,1)"));
            }
        }
        Ok(())
    }

    pub fn sigma_logpdf(&self, sigma: f64) -> f64 {
        pc_sigma_logpdf(sigma, self.sigma_upper, self.sigma_tail)
    }

    pub fn range_logpdf(&self, range: f64) -> f64 {
        pc_range_logpdf(range, self.range_lower, self.range_tail)
    }
}

/// PC prior for a standard deviation: exponential with rate
/// `lambda = -ln(alpha)/u`, so that `Pr(sigma > u) = alpha`.
/// Returns `-inf` outside the support.
pub fn pc_sigma_logpdf(sigma: f64, u: f64, alpha: f64) -> f64 {
    if sigma < 0.0 {
        return f64::NEG_INFINITY;
    }
    let lambda = -alpha.ln() / u;
    lambda.ln() - lambda * sigma
}

/// PC prior for a spatial range in two dimensions: the inverse range is
/// exponential, giving `p(r) = lambda r^-2 exp(-lambda/r)` with
/// `lambda = -u ln(alpha)`, so that `Pr(r < u) = alpha`.
pub fn pc_range_logpdf(range: f64, u: f64, alpha: f64) -> f64 {
    if range <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let lambda = -u * alpha.ln();
    lambda.ln() - 2.0 * range.ln() - lambda / range
}

/// Gamma log-density in the shape-rate parameterization.
pub fn gamma_logpdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

/// Gaussian log-density.
pub fn normal_logpdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * (2.0 * std::f64::consts::PI).ln() - sd.ln() - 0.5 * z * z
}

/// A prior description for a single named hyperparameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HyperPriorSpec {
    PcSigma { u: f64, alpha: f64 },
    PcRange { u: f64, alpha: f64 },
    Gamma { shape: f64, rate: f64 },
    Normal { mean: f64, sd: f64 },
}

/// Log-density of `theta` under the given prior; out-of-support values
/// evaluate to `-inf` by contract.
pub fn hyperprior_logpdf(theta: f64, spec: &HyperPriorSpec) -> f64 {
    match *spec {
        HyperPriorSpec::PcSigma { u, alpha } => pc_sigma_logpdf(theta, u, alpha),
        HyperPriorSpec::PcRange { u, alpha } => pc_range_logpdf(theta, u, alpha),
        HyperPriorSpec::Gamma { shape, rate } => gamma_logpdf(theta, shape, rate),
        HyperPriorSpec::Normal { mean, sd } => normal_logpdf(theta, mean, sd),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::adaptive_simpson;

    #[test]
    fn pc_sigma_at_origin_is_log_rate() {
        let v = pc_sigma_logpdf(0.0, 1.0, 0.01);
        let lambda: f64 = -(0.01f64).ln();
        assert!((lambda - 4.605170185988091).abs() < 1e-12);
        assert!((v - lambda.ln()).abs() < 1e-12);
        assert_eq!(pc_sigma_logpdf(-0.1, 1.0, 0.01), f64::NEG_INFINITY);
    }

    #[test]
    fn pc_sigma_normalizes_and_hits_tail() {
        let (u, alpha) = (1.0, 0.01);
        let pdf = |s: f64| pc_sigma_logpdf(s, u, alpha).exp();
        let total = adaptive_simpson(&pdf, 0.0, 60.0, 1e-10);
        assert!((total - 1.0).abs() < 1e-8, "total {total}");
        let tail = adaptive_simpson(&pdf, u, 60.0, 1e-10);
        assert!((tail - alpha).abs() < 1e-8, "tail {tail}");
    }

    #[test]
    fn pc_range_normalizes_and_hits_tail() {
        let (u, alpha) = (500.0, 0.01);
        let pdf = |r: f64| pc_range_logpdf(r, u, alpha).exp();
        // substitute t = 1/r for the unbounded side: int_u^inf p(r) dr
        // = int_0^{1/u} lambda e^{-lambda t} dt; integrate directly in r on
        // a wide interval plus the analytic tail bound.
        let below = adaptive_simpson(&pdf, 1e-6, u, 1e-10);
        assert!((below - alpha).abs() < 1e-7, "below {below}");
        let lambda = -u * (alpha as f64).ln();
        // analytic CDF: F(r) = exp(-lambda / r)
        let big = 1e9;
        let upper = adaptive_simpson(&pdf, u, big, 1e-10);
        let want = (-lambda / big).exp() - (-lambda / u).exp();
        assert!((upper - want).abs() < 1e-6);
    }

    #[test]
    fn gamma_pdf_value() {
        // Gamma(2, 8) at 0.25: 64 * 0.25 * e^-2
        let want = 64.0 * 0.25 * (-2.0f64).exp();
        assert!((want - 2.165364933739973).abs() < 1e-12);
        let got = gamma_logpdf(0.25, 2.0, 8.0).exp();
        assert!((got - want).abs() < 1e-12);
        // normalization by quadrature
        let total = adaptive_simpson(&|x| gamma_logpdf(x, 2.0, 8.0).exp(), 0.0, 40.0, 1e-11);
        assert!((total - 1.0).abs() < 1e-8);
        assert_eq!(gamma_logpdf(0.0, 2.0, 8.0), f64::NEG_INFINITY);
    }

    /// Scaled Student-t density with the given degrees of freedom and scale.
    fn student_t_pdf(x: f64, nu: f64, scale: f64) -> f64 {
        let coef = statrs::function::gamma::ln_gamma((nu + 1.0) / 2.0)
            - statrs::function::gamma::ln_gamma(nu / 2.0)
            - 0.5 * (nu * std::f64::consts::PI).ln()
            - scale.ln();
        (coef - 0.5 * (nu + 1.0) * (1.0 + (x / scale).powi(2) / nu).ln()).exp()
    }

    #[test]
    fn gamma_precision_mixture_is_student_t() {
        // x | tau ~ N(0, 1/tau), tau ~ Gamma(2, 8)  =>  x ~ t(nu=4, s=2)
        for &x in &[0.0, 1.0, 3.0] {
            let integrand = |log_tau: f64| {
                let tau: f64 = log_tau.exp();
                let normal = (0.5 * tau.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
                    - 0.5 * tau * x * x)
                    .exp();
                // Jacobian of tau = e^u
                normal * gamma_logpdf(tau, 2.0, 8.0).exp() * tau
            };
            let got = adaptive_simpson(&integrand, -45.0, 12.0, 1e-11);
            let want = student_t_pdf(x, 4.0, 2.0);
            assert!((got - want).abs() < 1e-6, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn hyperprior_dispatch() {
        assert_eq!(
            hyperprior_logpdf(0.3, &HyperPriorSpec::Gamma { shape: 2.0, rate: 8.0 }),
            gamma_logpdf(0.3, 2.0, 8.0)
        );
        assert_eq!(
            hyperprior_logpdf(0.5, &HyperPriorSpec::Normal { mean: 0.0, sd: 0.5 }),
            normal_logpdf(0.5, 0.0, 0.5)
        );
        assert!(hyperprior_logpdf(-1.0, &HyperPriorSpec::PcRange { u: 1.0, alpha: 0.05 }).is_infinite());
    }
}
