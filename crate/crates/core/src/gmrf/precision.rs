use serde::{Deserialize, Serialize};

use super::cholesky::CholeskyFactor;
use super::sparse::{SparseSym, SparseSymBuilder};
use crate::error::{Error, Result};
use crate::geometry::{Mesh, NeighborGraph, Subdomain};

/// Hyperparameters of the BYM expert-bias field: precisions of the
/// structured (graph) effect and the unstructured (i.i.d.) effect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BymHyper {
    pub tau_u: f64,
    pub tau_v: f64,
}

impl BymHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_u >= 0.0) {
            return Err(Error::invalid("tau_u must be nonnegative"));
        }
        if !(self.tau_v > 0.0) {
            return Err(Error::invalid("tau_v must be positive"));
        }
        Ok(())
    }
}

/// Hyperparameters of the barrier field: marginal standard deviation,
/// correlation range through water, and the land range as a fraction of it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierHyper {
    pub sigma_phi: f64,
    pub range_r: f64,
    pub barrier_fraction: f64,
}

impl BarrierHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_phi > 0.0) {
            return Err(Error::invalid("sigma_phi must be positive"));
        }
        if !(self.range_r > 0.0) {
            return Err(Error::invalid("range_r must be positive"));
        }
        if !(self.barrier_fraction > 0.0 && self.barrier_fraction < 1.0) {
            return Err(Error::invalid("barrier_fraction must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// BYM precision `Q = tau_u R + tau_v I`, where `R` has vertex degrees on
/// the diagonal and -1 for every neighbor pair.
pub fn bym_precision(graph: &NeighborGraph, hyper: &BymHyper) -> SparseSym {
    let n = graph.n_vertices();
    let mut b = SparseSymBuilder::new(n);
    let deg = graph.degrees();
    for k in 0..n {
        b.add(k, k, hyper.tau_u * deg[k] as f64 + hyper.tau_v);
    }
    for &(i, j) in graph.edges() {
        b.add(i, j, -hyper.tau_u);
    }
    b.build()
}

/// Finite-element building blocks of the barrier SPDE precision on a mesh:
/// per-subdomain lumped mass vectors and stiffness matrices, plus the set of
/// water-interior vertices used for marginal-variance normalization.
#[derive(Debug, Clone)]
pub struct BarrierFem {
    n: usize,
    mass_water: Vec<f64>,
    mass_land: Vec<f64>,
    stiff_water: SparseSym,
    stiff_land: SparseSym,
    water_interior: Vec<usize>,
}

impl BarrierFem {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        let n = mesh.n_vertices();
        let n_water = mesh
            .subdomain()
            .iter()
            .filter(|&&s| s == Subdomain::Water)
            .count();
        if n_water == 0 {
            return Err(Error::invalid("barrier mesh has no water triangles"));
        }
        let mut mass_water = vec![0.0; n];
        let mut mass_land = vec![0.0; n];
        let mut stiff_water = SparseSymBuilder::new(n);
        let mut stiff_land = SparseSymBuilder::new(n);
        for t in 0..mesh.n_triangles() {
            let tri = mesh.triangles()[t];
            let [p0, p1, p2] = mesh.triangle_points(t);
            let area = mesh.triangle_area(t);
            let water = mesh.subdomain()[t] == Subdomain::Water;
            let mass = if water { &mut mass_water } else { &mut mass_land };
            for &v in &tri {
                mass[v] += area / 3.0;
            }
            // P1 stiffness: grad of barycentric basis functions
            let b = [p1.y - p2.y, p2.y - p0.y, p0.y - p1.y];
            let c = [p2.x - p1.x, p0.x - p2.x, p1.x - p0.x];
            let stiff = if water { &mut stiff_water } else { &mut stiff_land };
            for i in 0..3 {
                for j in i..3 {
                    stiff.add(tri[i], tri[j], (b[i] * b[j] + c[i] * c[j]) / (4.0 * area));
                }
            }
        }
        // Water-interior vertices: off the mesh boundary and touching no
        // land triangle; these define the variance normalization target.
        let boundary = mesh.boundary_vertices();
        let mut touches_land = vec![false; n];
        for t in 0..mesh.n_triangles() {
            if mesh.subdomain()[t] == Subdomain::Land {
                for &v in &mesh.triangles()[t] {
                    touches_land[v] = true;
                }
            }
        }
        let water_interior: Vec<usize> = (0..n)
            .filter(|&v| !boundary[v] && !touches_land[v])
            .collect();
        Ok(BarrierFem {
            n,
            mass_water,
            mass_land,
            stiff_water: stiff_water.build(),
            stiff_land: stiff_land.build(),
            water_interior,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn water_interior(&self) -> &[usize] {
        &self.water_interior
    }

    /// Precision of the discretized barrier SPDE at unit nominal variance,
    /// together with the median marginal variance over water-interior
    /// vertices (used to pin the field's sigma exactly).
    ///
    /// With `K = C + (r^2/8) G_w + (r_b^2/8) G_l` and the noise covariance
    /// `D = (pi/2)(r^2 C_w + r_b^2 C_l)` (lumped, diagonal), the precision is
    /// `Q = K D^-1 K`.
    pub fn unit_precision(&self, range: f64, fraction: f64) -> Result<(SparseSym, f64)> {
        if !(range > 0.0) || !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::invalid("range must be positive and fraction in (0,1)"));
        }
        let n = self.n;
        let r2 = range * range;
        let rb2 = (fraction * range).powi(2);

        // full rows of K
        let mut k_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut add_full = |i: usize, j: usize, v: f64| {
            k_rows[i].push((j, v));
            if i != j {
                k_rows[j].push((i, v));
            }
        };
        for (i, j, v) in self.stiff_water.iter_upper() {
            add_full(i, j, v * r2 / 8.0);
        }
        for (i, j, v) in self.stiff_land.iter_upper() {
            add_full(i, j, v * rb2 / 8.0);
        }
        for i in 0..n {
            add_full(i, i, self.mass_water[i] + self.mass_land[i]);
        }
        for row in k_rows.iter_mut() {
            row.sort_unstable_by_key(|&(j, _)| j);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for &(j, v) in row.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += v,
                    _ => merged.push((j, v)),
                }
            }
            *row = merged;
        }

        let mut d_inv = vec![0.0; n];
        for i in 0..n {
            let d = std::f64::consts::FRAC_PI_2
                * (r2 * self.mass_water[i] + rb2 * self.mass_land[i]);
            if !(d > 0.0) {
                return Err(Error::invalid(format!("vertex {i} has zero mass (isolated?)")));
            }
            d_inv[i] = 1.0 / d;
        }

        // Q = K D^-1 K
        let mut b = SparseSymBuilder::new(n);
        for k in 0..n {
            let row = &k_rows[k];
            let w = d_inv[k];
            for (ai, &(i, vi)) in row.iter().enumerate() {
                for &(j, vj) in &row[ai..] {
                    b.add(i, j, vi * vj * w);
                }
            }
        }
        let q = b.build();

        let factor = CholeskyFactor::new(&q, &[])?;
        let diag = factor.diag_inverse();
        let mut vars: Vec<f64> = if self.water_interior.is_empty() {
            diag.clone()
        } else {
            self.water_interior.iter().map(|&v| diag[v]).collect()
        };
        vars.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = if vars.len() % 2 == 1 {
            vars[vars.len() / 2]
        } else {
            0.5 * (vars[vars.len() / 2 - 1] + vars[vars.len() / 2])
        };
        Ok((q, median))
    }

    /// Barrier precision normalized so the median marginal variance over
    /// water-interior vertices equals `sigma_phi^2`.
    pub fn precision(&self, hyper: &BarrierHyper) -> Result<SparseSym> {
        hyper.validate()?;
        let (q, median) = self.unit_precision(hyper.range_r, hyper.barrier_fraction)?;
        Ok(q.scaled(median / (hyper.sigma_phi * hyper.sigma_phi)))
    }
}

/// One-shot barrier precision construction; see [`BarrierFem`] for the
/// cached form used during hyperparameter optimization.
pub fn barrier_precision(mesh: &Mesh, hyper: &BarrierHyper) -> Result<SparseSym> {
    BarrierFem::new(mesh)?.precision(hyper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{adjacency, build_mesh, build_uniform_mesh, MeshParams, Polygon, Raster};
    use crate::gmrf::{gmrf_sample, GmrfSampler};

    fn path_graph(n: usize) -> NeighborGraph {
        NeighborGraph::new(n, (0..n - 1).map(|i| (i, i + 1)))
    }

    #[test]
    fn bym_structure_matrix_on_path() {
        let g = path_graph(3);
        let q = bym_precision(&g, &BymHyper { tau_u: 1.0, tau_v: 0.0 });
        let want = [[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]];
        let dense = q.to_dense();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(dense[i][j], want[i][j]);
            }
        }
    }

    #[test]
    fn bym_identity_term() {
        let g = path_graph(4);
        let q = bym_precision(&g, &BymHyper { tau_u: 0.0, tau_v: 2.0 });
        let dense = q.to_dense();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(dense[i][j], if i == j { 2.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn bym_two_vertex_arithmetic() {
        let g = NeighborGraph::new(2, [(0, 1)]);
        let q = bym_precision(&g, &BymHyper { tau_u: 2.0, tau_v: 1.0 });
        let dense = q.to_dense();
        assert_eq!(dense[0], vec![3.0, -2.0]);
        assert_eq!(dense[1], vec![-2.0, 3.0]);
    }

    #[test]
    fn bym_row_sums_equal_tau_v() {
        let domain = Raster::filled(8, 8, 1.0, 0.0, 0.0).unwrap();
        let mesh = build_uniform_mesh(&domain, 2.0).unwrap();
        let g = adjacency(&mesh);
        let hyper = BymHyper { tau_u: 1.7, tau_v: 0.4 };
        let q = bym_precision(&g, &hyper);
        let ones = vec![1.0; g.n_vertices()];
        for s in q.mat_vec(&ones) {
            assert!((s - hyper.tau_v).abs() < 1e-12);
        }
    }

    fn water_mesh(km: f64, edge: f64, offset: f64) -> crate::geometry::Mesh {
        let domain = Raster::filled(10, 10, km * 100.0, 0.0, 0.0).unwrap();
        let params = MeshParams {
            max_edge_inner: edge,
            max_edge_outer: edge * 2.0,
            cutoff: edge / 10.0,
            offset_inner: offset,
            offset_outer: offset,
        };
        build_mesh(&domain, &[], &params, &[]).unwrap()
    }

    #[test]
    fn barrier_rejects_all_land() {
        let domain = Raster::filled(5, 5, 1.0, 0.0, 0.0).unwrap();
        let everything = Polygon::rectangle(-10.0, -10.0, 20.0, 20.0).unwrap();
        let params = MeshParams {
            max_edge_inner: 2.0,
            max_edge_outer: 2.0,
            cutoff: 0.1,
            offset_inner: 0.0,
            offset_outer: 0.0,
        };
        let mesh = build_mesh(&domain, &[everything], &params, &[]).unwrap();
        assert!(BarrierFem::new(&mesh).is_err());
    }

    #[test]
    fn barrier_precision_is_normalized_and_factorizable() {
        let mesh = water_mesh(10.0, 1000.0, 2000.0);
        let fem = BarrierFem::new(&mesh).unwrap();
        let hyper = BarrierHyper {
            sigma_phi: 0.7,
            range_r: 3000.0,
            barrier_fraction: 0.2,
        };
        let q = fem.precision(&hyper).unwrap();
        let f = CholeskyFactor::new(&q, &[]).unwrap();
        assert!(f.jitter() <= 1e-8 * q.max_diag());
        // median marginal variance over water-interior vertices is sigma^2
        let diag = f.diag_inverse();
        let mut vars: Vec<f64> = fem.water_interior().iter().map(|&v| diag[v]).collect();
        vars.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = if vars.len() % 2 == 1 {
            vars[vars.len() / 2]
        } else {
            0.5 * (vars[vars.len() / 2 - 1] + vars[vars.len() / 2])
        };
        assert!((median - 0.49).abs() < 1e-9, "median {median}");
    }

    #[test]
    fn barrier_sigma_scaling_doubles_sampled_sd() {
        let mesh = water_mesh(10.0, 1200.0, 1200.0);
        let fem = BarrierFem::new(&mesh).unwrap();
        let base = BarrierHyper {
            sigma_phi: 0.5,
            range_r: 2500.0,
            barrier_fraction: 0.2,
        };
        let double = BarrierHyper {
            sigma_phi: 1.0,
            ..base
        };
        let q1 = fem.precision(&base).unwrap();
        let q2 = fem.precision(&double).unwrap();
        // Monte Carlo pooled standard deviation over water-interior vertices
        let n_samples = 10_000;
        let pooled_sd = |q: &SparseSym, seed: u64| -> f64 {
            let mut sampler = GmrfSampler::new(q, seed).unwrap();
            let mut sumsq = 0.0;
            for _ in 0..n_samples {
                let x = sampler.draw();
                for &v in fem.water_interior() {
                    sumsq += x[v] * x[v];
                }
            }
            (sumsq / (n_samples as f64 * fem.water_interior().len() as f64)).sqrt()
        };
        let s1 = pooled_sd(&q1, 42);
        let s2 = pooled_sd(&q2, 43);
        let ratio = s2 / s1;
        assert!((ratio - 2.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn sample_determinism() {
        let g = path_graph(6);
        let q = bym_precision(&g, &BymHyper { tau_u: 1.0, tau_v: 0.5 });
        let a = gmrf_sample(&q, 5, 99).unwrap();
        let b = gmrf_sample(&q, 5, 99).unwrap();
        assert_eq!(a, b);
    }
}
