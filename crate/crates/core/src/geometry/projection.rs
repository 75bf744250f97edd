use super::{Mesh, Point};

/// Sparse barycentric projection matrix: rows are target points, columns are
/// mesh vertices. Every nonempty row has at most three positive weights
/// summing to one; points outside the mesh get empty rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    n_cols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl ProjectionMatrix {
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        ProjectionMatrix { n_cols, rows }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    /// Dense matrix-vector product `A v`; empty rows give 0.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n_cols);
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, w)| w * v[j]).sum())
            .collect()
    }
}

const WEIGHT_DROP: f64 = 1e-12;

/// Builds the barycentric projection from mesh vertices to the given points.
/// A point lying in several triangles (on a shared edge or vertex) is
/// assigned to the lowest-index triangle containing it.
pub fn projection_matrix(mesh: &Mesh, points: &[Point]) -> ProjectionMatrix {
    let rows = points
        .iter()
        .map(|p| locate_barycentric(mesh, p).unwrap_or_default())
        .collect();
    ProjectionMatrix::from_rows(mesh.n_vertices(), rows)
}

fn locate_barycentric(mesh: &Mesh, p: &Point) -> Option<Vec<(usize, f64)>> {
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let [a, b, c] = mesh.triangle_points(t);
        // quick reject on the bounding box
        let (xmin, xmax) = (a.x.min(b.x).min(c.x), a.x.max(b.x).max(c.x));
        let (ymin, ymax) = (a.y.min(b.y).min(c.y), a.y.max(b.y).max(c.y));
        let tol = 1e-9 * (xmax - xmin).max(ymax - ymin).max(1.0);
        if p.x < xmin - tol || p.x > xmax + tol || p.y < ymin - tol || p.y > ymax + tol {
            continue;
        }
        let d = cross(&a, &b, &c);
        let w0 = cross(p, &b, &c) / d;
        let w1 = cross(&a, p, &c) / d;
        let w2 = cross(&a, &b, p) / d;
        let eps = 1e-9;
        if w0 >= -eps && w1 >= -eps && w2 >= -eps {
            let mut row: Vec<(usize, f64)> = tri
                .iter()
                .zip([w0, w1, w2])
                .filter(|&(_, w)| w > WEIGHT_DROP)
                .map(|(&v, w)| (v, w))
                .collect();
            let total: f64 = row.iter().map(|&(_, w)| w).sum();
            for e in row.iter_mut() {
                e.1 /= total;
            }
            return Some(row);
        }
    }
    None
}

fn cross(a: &Point, b: &Point, c: &Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Transposes a projection matrix and renormalizes every nonzero row to sum
/// to one. Rows of the result correspond to mesh vertices; vertices outside
/// the model area keep empty rows.
pub fn reverse_projection(a: &ProjectionMatrix) -> ProjectionMatrix {
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); a.n_cols()];
    for (i, row) in a.rows().iter().enumerate() {
        for &(j, w) in row {
            rows[j].push((i, w));
        }
    }
    for row in rows.iter_mut() {
        let total: f64 = row.iter().map(|&(_, w)| w).sum();
        if total > 0.0 {
            for e in row.iter_mut() {
                e.1 /= total;
            }
        }
    }
    ProjectionMatrix::from_rows(a.n_rows(), rows)
}

/// Projects raster values onto mesh vertices through a reverse projection.
///
/// Missing entries are excluded from the weighted sum, with the remaining
/// weights renormalized. In categorical mode the weighted mean is rounded
/// half-up to the nearest category. A vertex whose contributing cells are
/// all missing (or whose row is empty) yields a missing output.
pub fn project_to_mesh(
    a_tilde: &ProjectionMatrix,
    values: &[Option<f64>],
    categorical: bool,
) -> Vec<Option<f64>> {
    assert_eq!(values.len(), a_tilde.n_cols());
    a_tilde
        .rows()
        .iter()
        .map(|row| {
            let mut sum = 0.0;
            let mut weight = 0.0;
            for &(j, w) in row {
                if let Some(v) = values[j] {
                    sum += w * v;
                    weight += w;
                }
            }
            if weight <= 0.0 {
                None
            } else {
                let mean = sum / weight;
                Some(if categorical { (mean + 0.5).floor() } else { mean })
            }
        })
        .collect()
}
