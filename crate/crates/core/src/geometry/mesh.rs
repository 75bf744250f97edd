use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use super::{NeighborGraph, Point, Polygon, Raster};
use crate::error::{Error, Result};

/// Per-triangle subdomain label of the barrier model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subdomain {
    Water,
    Land,
}

/// A conforming triangulation with water/land subdomain labels.
///
/// Carrier of all latent fields: the barrier SPDE field lives on the
/// vertices of the survey mesh, the BYM bias fields on the vertices of the
/// uniform expert mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    subdomain: Vec<Subdomain>,
}

impl Mesh {
    /// Validates indices, orientation and conformity. Triangles are
    /// normalized to counter-clockwise orientation.
    pub fn new(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        subdomain: Vec<Subdomain>,
    ) -> Result<Self> {
        if triangles.len() != subdomain.len() {
            return Err(Error::invalid("one subdomain label per triangle required"));
        }
        let mut tris = triangles;
        let mut edge_use: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for tri in tris.iter_mut() {
            for &v in tri.iter() {
                if v >= vertices.len() {
                    return Err(Error::invalid(format!("triangle index {v} out of range")));
                }
            }
            let area2 = signed_area2(&vertices[tri[0]], &vertices[tri[1]], &vertices[tri[2]]);
            if area2 < 0.0 {
                tri.swap(1, 2);
            } else if area2 == 0.0 {
                return Err(Error::invalid(format!("degenerate triangle {tri:?}")));
            }
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                *edge_use.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        if edge_use.values().any(|&c| c > 2) {
            return Err(Error::invalid("non-conforming triangulation: edge shared by >2 triangles"));
        }
        Ok(Mesh {
            vertices,
            triangles: tris,
            subdomain,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn subdomain(&self) -> &[Subdomain] {
        &self.subdomain
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * signed_area2(&a, &b, &c).abs()
    }

    pub fn triangle_centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangle_points(t);
        Point::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    }

    /// Unique undirected vertex pairs connected by a triangle edge.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut set = std::collections::BTreeSet::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                set.insert((a.min(b), a.max(b)));
            }
        }
        set.into_iter().collect()
    }

    /// Edges belonging to exactly one triangle.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        let mut count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        count.into_iter().filter(|&(_, c)| c == 1).map(|(e, _)| e).collect()
    }

    /// Vertices lying on at least one boundary edge.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut on_boundary = vec![false; self.n_vertices()];
        for (a, b) in self.boundary_edges() {
            on_boundary[a] = true;
            on_boundary[b] = true;
        }
        on_boundary
    }

    /// Triangles incident to each vertex.
    pub fn vertex_triangles(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_vertices()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                out[v].push(t);
            }
        }
        out
    }

    /// Shortest edge length.
    pub fn min_edge_length(&self) -> f64 {
        self.edges()
            .iter()
            .map(|&(a, b)| self.vertices[a].dist(&self.vertices[b]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Plain-text serialization: a `VERTICES` section (x y per line) and a
    /// `TRIANGLES` section (i j k label per line).
    pub fn write_text(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "VERTICES")?;
        for v in &self.vertices {
            writeln!(w, "{} {}", v.x, v.y)?;
        }
        writeln!(w, "TRIANGLES")?;
        for (tri, sd) in self.triangles.iter().zip(&self.subdomain) {
            let label = match sd {
                Subdomain::Water => "water",
                Subdomain::Land => "land",
            };
            writeln!(w, "{} {} {} {}", tri[0], tri[1], tri[2], label)?;
        }
        Ok(())
    }

    pub fn read_text(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let display = path.display().to_string();
        let reader = BufReader::new(File::open(path)?);
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        let mut subdomain = Vec::new();
        #[derive(PartialEq)]
        enum Section {
            None,
            Vertices,
            Triangles,
        }
        let mut section = Section::None;
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
            match trimmed {
                "VERTICES" => {
                    section = Section::Vertices;
                    continue;
                }
                "TRIANGLES" => {
                    section = Section::Triangles;
                    continue;
                }
                _ => {}
            }
            let toks: Vec<&str> = trimmed.split_whitespace().collect();
            match section {
                Section::Vertices => {
                    if toks.len() != 2 {
                        return Err(err("expected `x y`".into()));
                    }
                    let x: f64 = toks[0].parse().map_err(|e| err(format!("bad x: {e}")))?;
                    let y: f64 = toks[1].parse().map_err(|e| err(format!("bad y: {e}")))?;
                    vertices.push(Point::new(x, y));
                }
                Section::Triangles => {
                    if toks.len() != 4 {
                        return Err(err("expected `i j k label`".into()));
                    }
                    let mut tri = [0usize; 3];
                    for (slot, tok) in tri.iter_mut().zip(&toks[..3]) {
                        *slot = tok.parse().map_err(|e| err(format!("bad index: {e}")))?;
                    }
                    let sd = match toks[3] {
                        "water" => Subdomain::Water,
                        "land" => Subdomain::Land,
                        other => return Err(err(format!("unknown label {other:?}"))),
                    };
                    triangles.push(tri);
                    subdomain.push(sd);
                }
                Section::None => return Err(err("content before VERTICES section".into())),
            }
        }
        Mesh::new(vertices, triangles, subdomain)
    }
}

fn signed_area2(a: &Point, b: &Point, c: &Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Mesh construction parameters, following the usual triangulation controls:
/// maximum edge lengths inside the study area and in the outer extension,
/// the minimum allowed distance between points (`cutoff`), and the inner and
/// outer extension distances.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MeshParams {
    pub max_edge_inner: f64,
    pub max_edge_outer: f64,
    pub cutoff: f64,
    pub offset_inner: f64,
    pub offset_outer: f64,
}

impl MeshParams {
    fn validate(&self) -> Result<()> {
        if !(self.max_edge_inner > 0.0) {
            return Err(Error::invalid("max_edge_inner must be positive"));
        }
        if self.max_edge_inner > self.max_edge_outer {
            return Err(Error::invalid("max_edge_inner must not exceed max_edge_outer"));
        }
        if !(self.cutoff >= 0.0 && self.cutoff < self.max_edge_inner) {
            return Err(Error::invalid("cutoff must satisfy 0 <= cutoff < max_edge_inner"));
        }
        if self.offset_inner < 0.0 || self.offset_outer < 0.0 {
            return Err(Error::invalid("offsets must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

impl Rect {
    fn expand(&self, d: f64) -> Rect {
        Rect {
            x0: self.x0 - d,
            y0: self.y0 - d,
            x1: self.x1 + d,
            y1: self.y1 + d,
        }
    }

    fn contains(&self, p: &Point) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    /// Distance from an interior point to the rectangle outline (0 outside).
    fn interior_margin(&self, p: &Point) -> f64 {
        if !self.contains(p) {
            return 0.0;
        }
        (p.x - self.x0)
            .min(self.x1 - p.x)
            .min(p.y - self.y0)
            .min(self.y1 - p.y)
    }

    fn corners(&self) -> [Point; 4] {
        [
            Point::new(self.x0, self.y0),
            Point::new(self.x1, self.y0),
            Point::new(self.x1, self.y1),
            Point::new(self.x0, self.y1),
        ]
    }

    /// Points along the rectangle outline at spacing at most `spacing`,
    /// corners included.
    fn boundary_samples(&self, spacing: f64) -> Vec<Point> {
        let corners = self.corners();
        let mut pts = Vec::new();
        for k in 0..4 {
            let a = corners[k];
            let b = corners[(k + 1) % 4];
            let len = a.dist(&b);
            let nseg = (len / spacing).ceil().max(1.0) as usize;
            for s in 0..nseg {
                let t = s as f64 / nseg as f64;
                pts.push(Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
            }
        }
        pts
    }
}

/// Hexagonal point lattice over a rectangle at the given spacing.
fn hex_lattice(rect: &Rect, spacing: f64) -> Vec<Point> {
    let mut pts = Vec::new();
    let dy = spacing * 3f64.sqrt() / 2.0;
    let mut j = 0usize;
    loop {
        let y = rect.y0 + j as f64 * dy;
        if y > rect.y1 + 1e-9 {
            break;
        }
        let x_off = if j % 2 == 1 { spacing / 2.0 } else { 0.0 };
        let mut i = 0usize;
        loop {
            let x = rect.x0 + x_off + i as f64 * spacing;
            if x > rect.x1 + 1e-9 {
                break;
            }
            pts.push(Point::new(x, y));
            i += 1;
        }
        j += 1;
    }
    pts
}

/// Greedy minimum-distance filter on a candidate sequence. Returns the
/// retained points and, for every candidate, the index of the retained
/// point it maps to (itself, or the nearby point it merged into).
struct CutoffMerge {
    cutoff: f64,
    cell: f64,
    grid: std::collections::HashMap<(i64, i64), Vec<usize>>,
    retained: Vec<Point>,
}

impl CutoffMerge {
    fn new(cutoff: f64) -> Self {
        CutoffMerge {
            cutoff,
            cell: cutoff.max(1e-12),
            grid: std::collections::HashMap::new(),
            retained: Vec::new(),
        }
    }

    fn key(&self, p: &Point) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    /// Adds a candidate; returns the index of the retained representative.
    fn push(&mut self, p: Point) -> usize {
        if self.cutoff > 0.0 {
            let (kx, ky) = self.key(&p);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(ids) = self.grid.get(&(kx + dx, ky + dy)) {
                        for &id in ids {
                            if self.retained[id].dist(&p) < self.cutoff {
                                return id;
                            }
                        }
                    }
                }
            }
        }
        let id = self.retained.len();
        self.retained.push(p);
        let key = self.key(&p);
        self.grid.entry(key).or_default().push(id);
        id
    }
}

/// Builds the survey (barrier-model) mesh: a constrained Delaunay
/// triangulation of the raster extent plus inner and outer extension rings,
/// with barrier polygon outlines as constraint chains, forced points merged
/// into the vertex set, and land/water labels assigned by triangle-centroid
/// containment.
pub fn build_mesh(
    domain: &Raster,
    barriers: &[Polygon],
    params: &MeshParams,
    forced_points: &[Point],
) -> Result<Mesh> {
    params.validate()?;
    if !(domain.width() > 0.0 && domain.height() > 0.0) {
        return Err(Error::invalid("domain has zero area"));
    }
    let (x0, y0, x1, y1) = domain.extent();
    let r0 = Rect { x0, y0, x1, y1 };
    let r1 = r0.expand(params.offset_inner);
    let r2 = r1.expand(params.offset_outer);

    for (i, p) in forced_points.iter().enumerate() {
        if !r1.contains(p) {
            return Err(Error::invalid(format!(
                "forced point {i} at ({}, {}) lies outside the extended domain",
                p.x, p.y
            )));
        }
    }

    let mut merge = CutoffMerge::new(params.cutoff);

    // Forced points first so they win all cutoff merges.
    for p in forced_points {
        merge.push(*p);
    }

    // Barrier outlines, sampled finely enough that constraint segments stay
    // shorter than the inner edge limit. Chains record the retained
    // representative of each sample so constraints survive merging.
    let barrier_spacing = 0.75 * params.max_edge_inner;
    let mut chains: Vec<Vec<Option<usize>>> = Vec::new();
    for poly in barriers {
        let verts = poly.vertices();
        let n = verts.len();
        let mut chain = Vec::new();
        for k in 0..n {
            let a = verts[k];
            let b = verts[(k + 1) % n];
            let len = a.dist(&b);
            let nseg = (len / barrier_spacing).ceil().max(1.0) as usize;
            for s in 0..nseg {
                let t = s as f64 / nseg as f64;
                let p = Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
                if r1.contains(&p) {
                    chain.push(Some(merge.push(p)));
                } else {
                    chain.push(None);
                }
            }
        }
        chains.push(chain);
    }

    // Inner region boundary and fill.
    for p in r1.boundary_samples(0.9 * params.max_edge_inner) {
        merge.push(p);
    }
    let h1 = 0.85 * params.max_edge_inner;
    for p in hex_lattice(&r1, h1) {
        if r1.interior_margin(&p) >= 0.3 * h1 {
            merge.push(p);
        }
    }

    // Outer extension ring, coarser.
    if params.offset_outer > 0.0 {
        for p in r2.boundary_samples(0.9 * params.max_edge_outer) {
            merge.push(p);
        }
        let h2 = 0.85 * params.max_edge_outer;
        for p in hex_lattice(&r2, h2) {
            let outside_r1 = !r1.contains(&p)
                && (p.x - r1.x0.max(p.x.min(r1.x1))).hypot(p.y - r1.y0.max(p.y.min(r1.y1)))
                    >= 0.35 * h2;
            if outside_r1 && r2.interior_margin(&p) >= 0.3 * h2 {
                merge.push(p);
            }
        }
    }

    triangulate(&merge.retained, &chains, barriers)
}

fn triangulate(points: &[Point], chains: &[Vec<Option<usize>>], barriers: &[Polygon]) -> Result<Mesh> {
    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> =
        ConstrainedDelaunayTriangulation::new();
    let mut handles = Vec::with_capacity(points.len());
    for p in points {
        let h = cdt
            .insert(Point2::new(p.x, p.y))
            .map_err(|e| Error::invalid(format!("triangulation insert failed: {e:?}")))?;
        handles.push(h);
    }

    // Constraint chains along barrier outlines; segments whose endpoints
    // merged together or that would cross another constraint are skipped.
    for chain in chains {
        let m = chain.len();
        for k in 0..m {
            let (Some(a), Some(b)) = (chain[k], chain[(k + 1) % m]) else {
                continue;
            };
            if a == b {
                continue;
            }
            let (ha, hb) = (handles[a], handles[b]);
            if cdt.can_add_constraint(ha, hb) {
                cdt.add_constraint(ha, hb);
            }
        }
    }

    let vertices: Vec<Point> = cdt
        .vertices()
        .map(|v| {
            let p = v.position();
            Point::new(p.x, p.y)
        })
        .collect();
    let mut triangles = Vec::with_capacity(cdt.num_inner_faces());
    let mut subdomain = Vec::with_capacity(cdt.num_inner_faces());
    for face in cdt.inner_faces() {
        let vs = face.vertices();
        let tri = [vs[0].index(), vs[1].index(), vs[2].index()];
        let centroid = {
            let [a, b, c] = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
            Point::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
        };
        let land = barriers.iter().any(|poly| poly.contains(&centroid));
        triangles.push(tri);
        subdomain.push(if land { Subdomain::Land } else { Subdomain::Water });
    }
    Mesh::new(vertices, triangles, subdomain)
}

/// Builds the uniform expert mesh: a square lattice over the raster extent
/// with every cell split along the same diagonal, giving near-constant edge
/// lengths (max/min ratio sqrt(2)) and degree-6 interior vertices. All
/// triangles are labeled water.
pub fn build_uniform_mesh(domain: &Raster, edge: f64) -> Result<Mesh> {
    let width = domain.width();
    let height = domain.height();
    if !(edge > 0.0) {
        return Err(Error::invalid("edge must be positive"));
    }
    if edge >= width || edge >= height {
        return Err(Error::invalid(format!(
            "edge {edge} must be smaller than the domain extent {width}x{height}"
        )));
    }
    let nx = (width / edge).round().max(1.0) as usize;
    let ny = (height / edge).round().max(1.0) as usize;
    let hx = width / nx as f64;
    let hy = height / ny as f64;
    let (x0, y0, _, _) = domain.extent();

    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Point::new(x0 + i as f64 * hx, y0 + j as f64 * hy));
        }
    }
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let v00 = vid(i, j);
            let v10 = vid(i + 1, j);
            let v01 = vid(i, j + 1);
            let v11 = vid(i + 1, j + 1);
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let n = triangles.len();
    Mesh::new(vertices, triangles, vec![Subdomain::Water; n])
}

/// The vertex-neighbor graph whose edges are exactly the (deduplicated)
/// triangle edges of the mesh.
pub fn adjacency(mesh: &Mesh) -> NeighborGraph {
    NeighborGraph::new(mesh.n_vertices(), mesh.edges())
}
