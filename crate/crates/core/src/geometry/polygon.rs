use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::Point;
use crate::error::{Error, Result};

/// A simple planar polygon (implicitly closed). Used for barrier (land)
/// outlines and expert assessment regions.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::invalid("polygon needs at least 3 vertices"));
        }
        Ok(Polygon { vertices })
    }

    /// Axis-aligned rectangle helper.
    pub fn rectangle(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<Self> {
        if !(xmax > xmin && ymax > ymin) {
            return Err(Error::invalid("rectangle must have positive extent"));
        }
        Polygon::new(vec![
            Point::new(xmin, ymin),
            Point::new(xmax, ymin),
            Point::new(xmax, ymax),
            Point::new(xmin, ymax),
        ])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Even-odd containment test, boundary inclusive.
    pub fn contains(&self, p: &Point) -> bool {
        let n = self.vertices.len();
        let eps = 1e-9 * self.scale().max(1.0);
        let mut inside = false;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if point_on_segment(p, &a, &b, eps) {
                return true;
            }
            // Ray cast toward +x.
            if (a.y > p.y) != (b.y > p.y) {
                let t = (p.y - a.y) / (b.y - a.y);
                let x_cross = a.x + t * (b.x - a.x);
                if x_cross > p.x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    fn scale(&self) -> f64 {
        let mut m = 0.0f64;
        for v in &self.vertices {
            m = m.max(v.x.abs()).max(v.y.abs());
        }
        m
    }
}

fn point_on_segment(p: &Point, a: &Point, b: &Point, eps: f64) -> bool {
    let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    let len = a.dist(b);
    if len == 0.0 {
        return p.dist(a) <= eps;
    }
    if cross.abs() > eps * len {
        return false;
    }
    let dot = (p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y);
    dot >= -eps * len && dot <= len * len + eps * len
}

/// Reads newline-delimited polygon blocks: one `x y` pair per line, blank
/// lines separating polygons.
pub fn read_polygons(path: impl AsRef<Path>) -> Result<Vec<Polygon>> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let reader = BufReader::new(File::open(path)?);
    let mut polygons = Vec::new();
    let mut current: Vec<Point> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            if !current.is_empty() {
                polygons.push(Polygon::new(std::mem::take(&mut current))?);
            }
            continue;
        }
        let mut it = trimmed.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<f64> {
            tok.ok_or_else(|| Error::Parse {
                path: display.clone(),
                line: lineno + 1,
                msg: "expected `x y`".into(),
            })?
            .parse()
            .map_err(|e| Error::Parse {
                path: display.clone(),
                line: lineno + 1,
                msg: format!("bad coordinate: {e}"),
            })
        };
        let x = parse(it.next())?;
        let y = parse(it.next())?;
        current.push(Point::new(x, y));
    }
    if !current.is_empty() {
        polygons.push(Polygon::new(current)?);
    }
    Ok(polygons)
}

pub fn write_polygons(path: impl AsRef<Path>, polygons: &[Polygon]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (i, poly) in polygons.iter().enumerate() {
        if i > 0 {
            writeln!(w)?;
        }
        for v in poly.vertices() {
            writeln!(w, "{} {}", v.x, v.y)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn containment_with_inclusive_boundary() {
        let square = Polygon::rectangle(0.0, 0.0, 2.0, 2.0).unwrap();
        assert!(square.contains(&Point::new(1.0, 1.0)));
        assert!(!square.contains(&Point::new(3.0, 1.0)));
        assert!(square.contains(&Point::new(0.0, 1.0))); // edge
        assert!(square.contains(&Point::new(2.0, 2.0))); // corner
        assert!(!square.contains(&Point::new(2.0000001, 2.0)));
    }

    #[test]
    fn concave_polygon() {
        // L-shape
        let poly = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(3.0, 0.0),
            Point::new(3.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 3.0),
            Point::new(0.0, 3.0),
        ])
        .unwrap();
        assert!(poly.contains(&Point::new(0.5, 2.0)));
        assert!(!poly.contains(&Point::new(2.0, 2.0)));
        assert!(poly.contains(&Point::new(2.0, 0.5)));
    }

    #[test]
    fn polygon_file_round_trip() {
        let dir = std::env::temp_dir().join("sdm_polygon_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("barriers.txt");
        let polys = vec![
            Polygon::rectangle(0.0, 0.0, 1.0, 1.0).unwrap(),
            Polygon::new(vec![
                Point::new(5.0, 5.0),
                Point::new(6.5, 5.0),
                Point::new(6.0, 7.25),
            ])
            .unwrap(),
        ];
        write_polygons(&path, &polys).unwrap();
        let back = read_polygons(&path).unwrap();
        assert_eq!(polys, back);
    }
}
