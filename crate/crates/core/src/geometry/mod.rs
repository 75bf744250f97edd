//! Meshes, rasters, polygons and the projection algebra between them.
//!
//! All coordinates are planar (meters). Latent fields live on triangular
//! meshes; observations live at survey points or raster cells. The two are
//! connected by barycentric projection matrices (`A` maps mesh vertices to
//! points, its row-normalized transpose maps raster values onto vertices).

mod mesh;
mod polygon;
mod projection;
mod raster;

pub use mesh::{adjacency, build_mesh, build_uniform_mesh, Mesh, MeshParams, Subdomain};
pub use polygon::{read_polygons, write_polygons, Polygon};
pub use projection::{project_to_mesh, projection_matrix, reverse_projection, ProjectionMatrix};
pub use raster::Raster;

use serde::{Deserialize, Serialize};

/// A planar point in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Undirected vertex-neighbor graph of a mesh (the structure matrix support
/// of the BYM model).
#[derive(Debug, Clone)]
pub struct NeighborGraph {
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl NeighborGraph {
    /// Builds a graph from an edge list; self-loops are rejected and
    /// duplicate edges collapsed.
    pub fn new(n_vertices: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut set = std::collections::BTreeSet::new();
        for (a, b) in edges {
            assert!(a < n_vertices && b < n_vertices, "edge index out of range");
            assert!(a != b, "self-loop");
            set.insert((a.min(b), a.max(b)));
        }
        NeighborGraph {
            n_vertices,
            edges: set.into_iter().collect(),
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Number of neighbors of each vertex.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n_vertices];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }
}
