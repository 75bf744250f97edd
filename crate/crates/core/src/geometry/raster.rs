use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::Point;
use crate::error::{Error, Result};

/// A rectangular grid of real or categorical values with missing entries.
///
/// Values are stored row-major with the first row at the top (north), the
/// ESRI ASCII convention. `xllcorner`/`yllcorner` give the lower-left corner
/// of the grid in planar coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub ncols: usize,
    pub nrows: usize,
    pub cell_size: f64,
    pub xllcorner: f64,
    pub yllcorner: f64,
    pub values: Vec<Option<f64>>,
}

impl Raster {
    pub fn new(
        ncols: usize,
        nrows: usize,
        cell_size: f64,
        xllcorner: f64,
        yllcorner: f64,
        values: Vec<Option<f64>>,
    ) -> Result<Self> {
        if ncols == 0 || nrows == 0 {
            return Err(Error::invalid("raster must have at least one row and column"));
        }
        if !(cell_size > 0.0) {
            return Err(Error::invalid(format!("cell size must be positive, got {cell_size}")));
        }
        if values.len() != ncols * nrows {
            return Err(Error::invalid(format!(
                "raster value count {} does not match {ncols}x{nrows}",
                values.len()
            )));
        }
        Ok(Raster {
            ncols,
            nrows,
            cell_size,
            xllcorner,
            yllcorner,
            values,
        })
    }

    /// An all-missing raster with the given geometry.
    pub fn filled(ncols: usize, nrows: usize, cell_size: f64, xll: f64, yll: f64) -> Result<Self> {
        Raster::new(ncols, nrows, cell_size, xll, yll, vec![None; ncols * nrows])
    }

    pub fn n_cells(&self) -> usize {
        self.ncols * self.nrows
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.nrows && col < self.ncols);
        row * self.ncols + col
    }

    /// Center of the cell at `(row, col)`; row 0 is the northernmost.
    pub fn cell_center(&self, row: usize, col: usize) -> Point {
        Point {
            x: self.xllcorner + (col as f64 + 0.5) * self.cell_size,
            y: self.yllcorner + (self.nrows as f64 - row as f64 - 0.5) * self.cell_size,
        }
    }

    /// All cell centers in storage order.
    pub fn cell_centers(&self) -> Vec<Point> {
        let mut pts = Vec::with_capacity(self.n_cells());
        for row in 0..self.nrows {
            for col in 0..self.ncols {
                pts.push(self.cell_center(row, col));
            }
        }
        pts
    }

    /// `(xmin, ymin, xmax, ymax)` of the grid outline.
    pub fn extent(&self) -> (f64, f64, f64, f64) {
        (
            self.xllcorner,
            self.yllcorner,
            self.xllcorner + self.ncols as f64 * self.cell_size,
            self.yllcorner + self.nrows as f64 * self.cell_size,
        )
    }

    pub fn width(&self) -> f64 {
        self.ncols as f64 * self.cell_size
    }

    pub fn height(&self) -> f64 {
        self.nrows as f64 * self.cell_size
    }

    /// True when every present value is one of the categories 1..=4.
    pub fn is_categorical(&self) -> bool {
        self.values.iter().flatten().all(|&v| {
            let r = v.round();
            (v - r).abs() < 1e-9 && (1.0..=4.0).contains(&r)
        })
    }

    /// Same geometry, different values.
    pub fn with_values(&self, values: Vec<Option<f64>>) -> Result<Self> {
        Raster::new(
            self.ncols,
            self.nrows,
            self.cell_size,
            self.xllcorner,
            self.yllcorner,
            values,
        )
    }

    /// Reads an ESRI ASCII grid. `NODATA_value` entries map to missing.
    pub fn read_esri_ascii(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let display = path.display().to_string();
        let file = File::open(path)?;
        let reader = BufReader::new(file);

        let mut ncols: Option<usize> = None;
        let mut nrows: Option<usize> = None;
        let mut xll: Option<f64> = None;
        let mut yll: Option<f64> = None;
        let mut cell: Option<f64> = None;
        let mut nodata: Option<f64> = None;
        let mut values: Vec<Option<f64>> = Vec::new();

        let parse_err = |line: usize, msg: String| Error::Parse {
            path: display.clone(),
            line,
            msg,
        };

        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = lineno + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let mut tokens = trimmed.split_whitespace();
            let first = tokens.next().unwrap();
            let key = first.to_ascii_lowercase();
            let header = matches!(
                key.as_str(),
                "ncols" | "nrows" | "xllcorner" | "yllcorner" | "cellsize" | "nodata_value"
            );
            if header {
                let value = tokens
                    .next()
                    .ok_or_else(|| parse_err(lineno, format!("missing value for {first}")))?;
                match key.as_str() {
                    "ncols" => {
                        ncols = Some(value.parse().map_err(|e| {
                            parse_err(lineno, format!("bad ncols {value:?}: {e}"))
                        })?)
                    }
                    "nrows" => {
                        nrows = Some(value.parse().map_err(|e| {
                            parse_err(lineno, format!("bad nrows {value:?}: {e}"))
                        })?)
                    }
                    "xllcorner" => {
                        xll = Some(value.parse().map_err(|e| {
                            parse_err(lineno, format!("bad xllcorner {value:?}: {e}"))
                        })?)
                    }
                    "yllcorner" => {
                        yll = Some(value.parse().map_err(|e| {
                            parse_err(lineno, format!("bad yllcorner {value:?}: {e}"))
                        })?)
                    }
                    "cellsize" => {
                        cell = Some(value.parse().map_err(|e| {
                            parse_err(lineno, format!("bad cellsize {value:?}: {e}"))
                        })?)
                    }
                    "nodata_value" => {
                        nodata = Some(value.parse().map_err(|e| {
                            parse_err(lineno, format!("bad NODATA_value {value:?}: {e}"))
                        })?)
                    }
                    _ => unreachable!(),
                }
            } else {
                for tok in trimmed.split_whitespace() {
                    let v: f64 = tok
                        .parse()
                        .map_err(|e| parse_err(lineno, format!("bad value {tok:?}: {e}")))?;
                    let missing = nodata.map(|nd| v == nd).unwrap_or(false);
                    values.push(if missing { None } else { Some(v) });
                }
            }
        }

        let ncols = ncols.ok_or_else(|| parse_err(0, "missing ncols header".into()))?;
        let nrows = nrows.ok_or_else(|| parse_err(0, "missing nrows header".into()))?;
        let xll = xll.ok_or_else(|| parse_err(0, "missing xllcorner header".into()))?;
        let yll = yll.ok_or_else(|| parse_err(0, "missing yllcorner header".into()))?;
        let cell = cell.ok_or_else(|| parse_err(0, "missing cellsize header".into()))?;
        Raster::new(ncols, nrows, cell, xll, yll, values)
    }

    /// Writes an ESRI ASCII grid; missing entries become `NODATA_value`
    /// (-9999). Values are written in shortest round-trip form.
    pub fn write_esri_ascii(&self, path: impl AsRef<Path>) -> Result<()> {
        const NODATA: f64 = -9999.0;
        let file = File::create(path)?;
        let mut w = BufWriter::new(file);
        writeln!(w, "ncols {}", self.ncols)?;
        writeln!(w, "nrows {}", self.nrows)?;
        writeln!(w, "xllcorner {}", self.xllcorner)?;
        writeln!(w, "yllcorner {}", self.yllcorner)?;
        writeln!(w, "cellsize {}", self.cell_size)?;
        writeln!(w, "NODATA_value {}", NODATA)?;
        for row in 0..self.nrows {
            let mut line = String::new();
            for col in 0..self.ncols {
                if col > 0 {
                    line.push(' ');
                }
                match self.values[self.index(row, col)] {
                    Some(v) => line.push_str(&format!("{v}")),
                    None => line.push_str(&format!("{NODATA}")),
                }
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}
