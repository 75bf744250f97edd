//! Gaussian Markov random fields: sparse precision construction for the
//! barrier SPDE field and the BYM expert-bias field, densities, sampling,
//! and hyperprior evaluation.

mod cholesky;
mod precision;
mod priors;
mod sparse;

pub use cholesky::{CholeskyFactor, JitterPolicy};
pub use precision::{barrier_precision, bym_precision, BarrierFem, BarrierHyper, BymHyper};
pub use priors::{
    gamma_logpdf, hyperprior_logpdf, normal_logpdf, pc_range_logpdf, pc_sigma_logpdf,
    HyperPriorSpec, PcPrior,
};
pub use sparse::{SparseSym, SparseSymBuilder};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.8378770664093453;

/// Log-density of `N(0, Q^-1)` at `x`, via sparse Cholesky.
pub fn gmrf_logpdf(x: &[f64], q: &SparseSym) -> Result<f64> {
    if x.len() != q.dim() {
        return Err(Error::invalid(format!(
            "dimension mismatch: x has {}, Q has {}",
            x.len(),
            q.dim()
        )));
    }
    let factor = CholeskyFactor::new(q, &[])?;
    Ok(-0.5 * q.dim() as f64 * LN_2PI + 0.5 * factor.logdet() - 0.5 * q.quad_form(x))
}

/// Streaming sampler for `N(0, Q^-1)`; draws are reproducible for a fixed
/// seed. Each thread of use should own its own sampler.
pub struct GmrfSampler {
    factor: CholeskyFactor,
    rng: ChaCha12Rng,
}

impl GmrfSampler {
    pub fn new(q: &SparseSym, seed: u64) -> Result<Self> {
        Ok(GmrfSampler {
            factor: CholeskyFactor::new(q, &[])?,
            rng: ChaCha12Rng::seed_from_u64(seed),
        })
    }

    pub fn from_factor(factor: CholeskyFactor, seed: u64) -> Self {
        GmrfSampler {
            factor,
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    pub fn dim(&self) -> usize {
        self.factor.dim()
    }

    pub fn draw(&mut self) -> Vec<f64> {
        let z: Vec<f64> = (0..self.factor.dim())
            .map(|_| StandardNormal.sample(&mut self.rng))
            .collect();
        self.factor.sample_from_std_normal(&z)
    }
}

/// `n` i.i.d. draws from `N(0, Q^-1)`.
pub fn gmrf_sample(q: &SparseSym, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut sampler = GmrfSampler::new(q, seed)?;
    Ok((0..n).map(|_| sampler.draw()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_logpdf(x: &[f64], m: &[Vec<f64>]) -> f64 {
        // dense Cholesky logdet + quadratic form, independent of the sparse path
        let n = m.len();
        let mut a = m.to_vec();
        let mut logdet = 0.0;
        for i in 0..n {
            for j in 0..i {
                let s = a[i][j] - (0..j).map(|k| a[i][k] * a[j][k]).sum::<f64>();
                a[i][j] = s / a[j][j];
            }
            let d = a[i][i] - (0..i).map(|k| a[i][k] * a[i][k]).sum::<f64>();
            a[i][i] = d.sqrt();
            logdet += 2.0 * a[i][i].ln();
        }
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += x[i] * m[i][j] * x[j];
            }
        }
        -0.5 * n as f64 * LN_2PI + 0.5 * logdet - 0.5 * quad
    }

    #[test]
    fn logpdf_standard_normal_cases() {
        let q = SparseSym::identity(2);
        let v = gmrf_logpdf(&[0.0, 0.0], &q).unwrap();
        assert!((v + LN_2PI).abs() < 1e-14);
        let v = gmrf_logpdf(&[1.0, 0.0], &q).unwrap();
        assert!((v + LN_2PI + 0.5).abs() < 1e-14);
    }

    #[test]
    fn logpdf_matches_dense_oracle_on_path_bym() {
        let g = crate::geometry::NeighborGraph::new(5, (0..4).map(|i| (i, i + 1)));
        let q = bym_precision(&g, &BymHyper { tau_u: 1.3, tau_v: 0.7 });
        let x = [0.3, -1.2, 0.05, 2.0, -0.4];
        let got = gmrf_logpdf(&x, &q).unwrap();
        let want = dense_logpdf(&x, &q.to_dense());
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn logpdf_rejects_dimension_mismatch() {
        let q = SparseSym::identity(3);
        assert!(gmrf_logpdf(&[0.0, 0.0], &q).is_err());
    }

    #[test]
    fn sample_variance_diagonal_case() {
        let q = SparseSym::identity(1).scaled(4.0); // precision 4 => variance 1/4
        let draws = gmrf_sample(&q, 100_000, 7).unwrap();
        let var = draws.iter().map(|d| d[0] * d[0]).sum::<f64>() / draws.len() as f64;
        assert!((var - 0.25).abs() < 0.01, "var {var}");
    }

    #[test]
    fn sample_covariance_2x2() {
        let mut b = SparseSymBuilder::new(2);
        b.add(0, 0, 2.0);
        b.add(1, 1, 2.0);
        b.add(0, 1, -1.0);
        let q = b.build();
        // Q^-1 = (1/3) [[2, 1], [1, 2]]
        let draws = gmrf_sample(&q, 100_000, 11).unwrap();
        let mut cov = [[0.0f64; 2]; 2];
        for d in &draws {
            for i in 0..2 {
                for j in 0..2 {
                    cov[i][j] += d[i] * d[j];
                }
            }
        }
        let n = draws.len() as f64;
        let want = [[2.0 / 3.0, 1.0 / 3.0], [1.0 / 3.0, 2.0 / 3.0]];
        for i in 0..2 {
            for j in 0..2 {
                let got = cov[i][j] / n;
                assert!((got - want[i][j]).abs() < 0.02, "cov[{i}][{j}] = {got}");
            }
        }
    }

    #[test]
    fn sampler_rejects_non_pd() {
        let mut b = SparseSymBuilder::new(2);
        b.add(0, 0, -1.0);
        b.add(1, 1, 1.0);
        let q = b.build();
        assert!(GmrfSampler::new(&q, 1).is_err());
    }
}
