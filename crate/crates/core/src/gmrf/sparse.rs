use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Symmetric sparse matrix stored as the upper triangle, row-wise with
/// sorted column indices. The storage convention guarantees symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    dim: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseSym {
    pub fn zero(dim: usize) -> Self {
        SparseSym {
            dim,
            rows: vec![Vec::new(); dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        SparseSym {
            dim,
            rows: (0..dim).map(|i| vec![(i, 1.0)]).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Upper-triangle entries of row `i` (columns >= i), sorted.
    pub fn row_upper(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// Iterates over all upper-triangle entries `(i, j, v)` with `j >= i`.
    pub fn iter_upper(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(j, v)| (i, j, v)))
    }

    pub fn nnz_upper(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn diag(&self, i: usize) -> f64 {
        match self.rows[i].first() {
            Some(&(j, v)) if j == i => v,
            _ => 0.0,
        }
    }

    pub fn max_diag(&self) -> f64 {
        (0..self.dim).map(|i| self.diag(i)).fold(0.0f64, f64::max)
    }

    /// Full adjacency stored symmetrically: for each row, the columns of all
    /// nonzero off-diagonal entries.
    pub fn neighbor_lists(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.dim];
        for (i, j, _) in self.iter_upper() {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for list in adj.iter_mut() {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    /// Symmetric matrix-vector product.
    pub fn mat_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        let mut y = vec![0.0; self.dim];
        for (i, j, v) in self.iter_upper() {
            y[i] += v * x[j];
            if i != j {
                y[j] += v * x[i];
            }
        }
        y
    }

    /// Quadratic form `x' Q x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim);
        let mut s = 0.0;
        for (i, j, v) in self.iter_upper() {
            if i == j {
                s += v * x[i] * x[i];
            } else {
                s += 2.0 * v * x[i] * x[j];
            }
        }
        s
    }

    pub fn scaled(&self, c: f64) -> SparseSym {
        let rows = self
            .rows
            .iter()
            .map(|row| row.iter().map(|&(j, v)| (j, c * v)).collect())
            .collect();
        SparseSym { dim: self.dim, rows }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.dim]; self.dim];
        for (i, j, v) in self.iter_upper() {
            m[i][j] = v;
            m[j][i] = v;
        }
        m
    }

    /// Coordinate-format text: `dim <n>` header, then `row col value` lines
    /// for the upper triangle.
    pub fn write_coord_text(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "dim {}", self.dim)?;
        for (i, j, v) in self.iter_upper() {
            writeln!(w, "{i} {j} {v}")?;
        }
        Ok(())
    }

    pub fn read_coord_text(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let display = path.display().to_string();
        let reader = BufReader::new(File::open(path)?);
        let mut builder: Option<SparseSymBuilder> = None;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse {
                path: display.clone(),
                line: lineno + 1,
                msg,
            };
            let toks: Vec<&str> = trimmed.split_whitespace().collect();
            if toks[0] == "dim" {
                let d: usize = toks
                    .get(1)
                    .ok_or_else(|| err("missing dimension".into()))?
                    .parse()
                    .map_err(|e| err(format!("bad dimension: {e}")))?;
                builder = Some(SparseSymBuilder::new(d));
            } else {
                let b = builder
                    .as_mut()
                    .ok_or_else(|| err("entry before dim header".into()))?;
                if toks.len() != 3 {
                    return Err(err("expected `row col value`".into()));
                }
                let i: usize = toks[0].parse().map_err(|e| err(format!("bad row: {e}")))?;
                let j: usize = toks[1].parse().map_err(|e| err(format!("bad col: {e}")))?;
                let v: f64 = toks[2].parse().map_err(|e| err(format!("bad value: {e}")))?;
                b.add(i, j, v);
            }
        }
        builder
            .map(|b| b.build())
            .ok_or_else(|| Error::invalid(format!("{display}: missing dim header")))
    }
}

/// Accumulating builder; duplicate entries are summed.
#[derive(Debug, Clone)]
pub struct SparseSymBuilder {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseSymBuilder {
    pub fn new(dim: usize) -> Self {
        SparseSymBuilder {
            dim,
            entries: Vec::new(),
        }
    }

    /// Adds `v` at `(i, j)`; the pair is normalized into the upper triangle.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.dim && j < self.dim);
        if v != 0.0 {
            self.entries.push((i.min(j), i.max(j), v));
        }
    }

    pub fn build(mut self) -> SparseSym {
        self.entries
            .sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.dim];
        for (i, j, v) in self.entries {
            match rows[i].last_mut() {
                Some(last) if last.0 == j => last.1 += v,
                _ => rows[i].push((j, v)),
            }
        }
        SparseSym { dim: self.dim, rows }
    }
}
