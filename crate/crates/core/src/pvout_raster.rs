//! ESRI ASCII grids and the PV_out raster sampled per rooftop.
//!
//! Row 0 of a grid file (and of [`AsciiGrid::values`]) is the northernmost
//! row. Cells are half-open: a point on a shared edge belongs to the cell to
//! its east / north.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geometry::{point_in_polygon, BBox, FootprintPolygon, LocalProjection, Point2};

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("implausible PV_out {value} at row {row}, col {col} (expected 0 < v < 10 MWh/kWp)")]
    Implausible { row: usize, col: usize, value: f64 },
    #[error("no PV_out value for building {building_id}")]
    MissingPvout { building_id: String },
    #[error("district {district} covers no PV_out cell")]
    EmptyDistrictRaster { district: String },
    #[error("footprint extent {footprints:?} does not overlap grid extent {grid:?}")]
    FrameMismatch { footprints: BBox, grid: BBox },
}

/// Raw ESRI ASCII grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AsciiGrid {
    pub ncols: usize,
    pub nrows: usize,
    pub xllcorner: f64,
    pub yllcorner: f64,
    pub cellsize: f64,
    pub nodata: f64,
    /// Row-major, northernmost row first.
    pub values: Vec<f64>,
}

const HEADER_KEYS: [&str; 6] = ["ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value"];

fn parse_err(line: usize, message: impl Into<String>) -> RasterError {
    RasterError::Parse { line, message: message.into() }
}

impl AsciiGrid {
    pub fn parse(text: &str) -> Result<Self, RasterError> {
        let mut header: [Option<f64>; 6] = [None; 6];
        let mut header_lines = [0usize; 6];
        let mut center_registered = [false; 2];
        let mut lines = text.lines().enumerate().peekable();

        while let Some(&(idx, line)) = lines.peek() {
            let mut tokens = line.split_whitespace();
            let Some(key) = tokens.next() else {
                lines.next();
                continue;
            };
            let key_lc = key.to_ascii_lowercase();
            let slot = match key_lc.as_str() {
                "xllcenter" => {
                    center_registered[0] = true;
                    Some(2)
                }
                "yllcenter" => {
                    center_registered[1] = true;
                    Some(3)
                }
                k => HEADER_KEYS.iter().position(|h| *h == k),
            };
            let Some(slot) = slot else {
                if key.parse::<f64>().is_ok() {
                    break;
                }
                return Err(parse_err(idx + 1, format!("unknown header keyword '{key}'")));
            };
            let value = tokens
                .next()
                .ok_or_else(|| parse_err(idx + 1, format!("missing value for '{key}'")))?;
            let value: f64 = value
                .parse()
                .map_err(|_| parse_err(idx + 1, format!("non-numeric value '{value}' for '{key}'")))?;
            if tokens.next().is_some() {
                return Err(parse_err(idx + 1, format!("trailing tokens after '{key}'")));
            }
            if header[slot].replace(value).is_some() {
                return Err(parse_err(idx + 1, format!("duplicate header keyword '{key}'")));
            }
            header_lines[slot] = idx + 1;
            lines.next();
        }

        let header_line = lines.peek().map_or(text.lines().count(), |(i, _)| *i + 1);
        let need = |slot: usize| {
            header[slot].ok_or_else(|| parse_err(header_line, format!("missing header keyword '{}'", HEADER_KEYS[slot])))
        };
        let count = |slot: usize| -> Result<usize, RasterError> {
            let v = need(slot)?;
            if v.fract() != 0.0 || v < 1.0 {
                return Err(parse_err(header_lines[slot], format!("{} must be a positive integer", HEADER_KEYS[slot])));
            }
            Ok(v as usize)
        };
        let ncols = count(0)?;
        let nrows = count(1)?;
        let cellsize = need(4)?;
        if !(cellsize > 0.0 && cellsize.is_finite()) {
            return Err(parse_err(header_lines[4], "cellsize must be positive"));
        }
        let mut xllcorner = need(2)?;
        let mut yllcorner = need(3)?;
        if center_registered[0] {
            xllcorner -= 0.5 * cellsize;
        }
        if center_registered[1] {
            yllcorner -= 0.5 * cellsize;
        }
        let nodata = header[5].unwrap_or(-9999.0);

        let mut values = Vec::with_capacity(ncols * nrows);
        let mut rows = 0usize;
        let mut last_line = header_line;
        for (idx, line) in lines {
            last_line = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            if rows == nrows {
                return Err(parse_err(idx + 1, format!("more than {nrows} data rows")));
            }
            let before = values.len();
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| parse_err(idx + 1, format!("non-numeric cell value '{tok}'")))?;
                values.push(v);
            }
            let got = values.len() - before;
            if got != ncols {
                return Err(parse_err(idx + 1, format!("expected {ncols} values, found {got}")));
            }
            rows += 1;
        }
        if rows != nrows {
            return Err(parse_err(last_line, format!("expected {nrows} data rows, found {rows}")));
        }
        Ok(Self { ncols, nrows, xllcorner, yllcorner, cellsize, nodata, values })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, RasterError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| RasterError::Io { path: path.to_owned(), source })?;
        Self::parse(&text)
    }

    /// Serializes the grid. `precision = None` writes the shortest
    /// round-tripping representation of each value; nodata cells always use
    /// the header's nodata token.
    pub fn to_ascii(&self, precision: Option<usize>) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<13}{}", "ncols", self.ncols);
        let _ = writeln!(out, "{:<13}{}", "nrows", self.nrows);
        let _ = writeln!(out, "{:<13}{}", "xllcorner", self.xllcorner);
        let _ = writeln!(out, "{:<13}{}", "yllcorner", self.yllcorner);
        let _ = writeln!(out, "{:<13}{}", "cellsize", self.cellsize);
        let _ = writeln!(out, "{:<13}{}", "NODATA_value", self.nodata);
        for row in self.values.chunks(self.ncols) {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                if self.is_nodata(*v) {
                    let _ = write!(out, "{}", self.nodata);
                } else {
                    match precision {
                        Some(p) => {
                            let _ = write!(out, "{v:.p$}");
                        }
                        None => {
                            let _ = write!(out, "{v}");
                        }
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>, precision: Option<usize>) -> Result<(), RasterError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_ascii(precision))
            .map_err(|source| RasterError::Io { path: path.to_owned(), source })
    }

    pub fn is_nodata(&self, v: f64) -> bool {
        v == self.nodata || v.is_nan()
    }

    pub fn extent(&self) -> BBox {
        BBox {
            min_x: self.xllcorner,
            min_y: self.yllcorner,
            max_x: self.xllcorner + self.ncols as f64 * self.cellsize,
            max_y: self.yllcorner + self.nrows as f64 * self.cellsize,
        }
    }

    /// `(row, col)` of the cell containing `p`, row 0 northernmost.
    pub fn cell_of(&self, p: Point2) -> Option<(usize, usize)> {
        let fx = ((p.x - self.xllcorner) / self.cellsize).floor();
        let fy = ((p.y - self.yllcorner) / self.cellsize).floor();
        if !(fx >= 0.0 && fy >= 0.0 && fx < self.ncols as f64 && fy < self.nrows as f64) {
            return None;
        }
        let col = fx as usize;
        let row_from_south = fy as usize;
        Some((self.nrows - 1 - row_from_south, col))
    }

    pub fn cell_center(&self, row: usize, col: usize) -> Point2 {
        Point2::new(
            self.xllcorner + (col as f64 + 0.5) * self.cellsize,
            self.yllcorner + ((self.nrows - 1 - row) as f64 + 0.5) * self.cellsize,
        )
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.ncols + col]
    }

    /// Cell value at `p`, `None` outside the extent or on nodata.
    pub fn sample(&self, p: Point2) -> Option<f64> {
        let (row, col) = self.cell_of(p)?;
        let v = self.get(row, col);
        (!self.is_nodata(v)).then_some(v)
    }
}

/// What to do when a rooftop falls on a nodata cell or outside the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NodataPolicy {
    Fail,
    /// Use the nearest valid cell center.
    #[default]
    Nearest,
}

/// Maps working-frame meters onto the grid's own coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum GridFrame {
    /// Grid is in the same projected meters as the footprints.
    #[default]
    Identity,
    /// Grid is in lon/lat degrees; footprints were projected with this.
    Geographic(LocalProjection),
}

impl GridFrame {
    pub fn to_grid(&self, p: Point2) -> Point2 {
        match self {
            GridFrame::Identity => p,
            GridFrame::Geographic(proj) => {
                let (lon, lat) = proj.inverse(p);
                Point2::new(lon, lat)
            }
        }
    }

    pub fn from_grid(&self, p: Point2) -> Point2 {
        match self {
            GridFrame::Identity => p,
            GridFrame::Geographic(proj) => proj.forward(p.x, p.y),
        }
    }
}

/// Yearly specific PV output, MWh per kWp, one value per cell.
///
/// Sampling methods take points in the working (footprint) frame and map them
/// through [`GridFrame`].
#[derive(Debug, Clone, PartialEq)]
pub struct PvOutGrid {
    grid: AsciiGrid,
    frame: GridFrame,
}

impl PvOutGrid {
    /// Checks that every non-nodata value lies in (0, 10).
    pub fn new(grid: AsciiGrid) -> Result<Self, RasterError> {
        for (i, &v) in grid.values.iter().enumerate() {
            if grid.is_nodata(v) {
                continue;
            }
            if !(v > 0.0 && v < 10.0) {
                return Err(RasterError::Implausible { row: i / grid.ncols, col: i % grid.ncols, value: v });
            }
        }
        Ok(Self { grid, frame: GridFrame::Identity })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RasterError> {
        Self::new(AsciiGrid::read(path)?)
    }

    pub fn with_frame(mut self, frame: GridFrame) -> Self {
        self.frame = frame;
        self
    }

    pub fn grid(&self) -> &AsciiGrid {
        &self.grid
    }

    pub fn frame(&self) -> &GridFrame {
        &self.frame
    }

    pub fn sample(&self, p: Point2) -> Option<f64> {
        self.grid.sample(self.frame.to_grid(p))
    }

    /// Nearest valid cell center to `p` (grid coordinates); ties go to the
    /// first cell in row-major order.
    fn nearest_valid(&self, q: Point2) -> Option<f64> {
        let g = &self.grid;
        let mut best: Option<(f64, f64)> = None;
        for row in 0..g.nrows {
            for col in 0..g.ncols {
                let v = g.get(row, col);
                if g.is_nodata(v) {
                    continue;
                }
                let d = g.cell_center(row, col).distance(q);
                if best.map_or(true, |(bd, _)| d < bd) {
                    best = Some((d, v));
                }
            }
        }
        best.map(|(_, v)| v)
    }

    /// PV_out at the footprint centroid, with `policy` applied on nodata.
    pub fn sample_for_building(&self, poly: &FootprintPolygon, policy: NodataPolicy) -> Result<f64, RasterError> {
        let q = self.frame.to_grid(poly.centroid());
        if let Some(v) = self.grid.sample(q) {
            return Ok(v);
        }
        let missing = || RasterError::MissingPvout { building_id: poly.id().to_owned() };
        match policy {
            NodataPolicy::Fail => Err(missing()),
            NodataPolicy::Nearest => self.nearest_valid(q).ok_or_else(missing),
        }
    }

    /// Mean over valid cells whose centers fall inside any of `parts`.
    pub fn district_mean_pvout(&self, name: &str, parts: &[FootprintPolygon]) -> Result<f64, RasterError> {
        let g = &self.grid;
        // Running mean: exact for uniform grids.
        let mut mean = 0.0;
        let mut n = 0usize;
        for part in parts {
            let bb = part.bbox();
            // Equirectangular maps axis-aligned boxes to axis-aligned boxes.
            let lo = self.frame.to_grid(Point2::new(bb.min_x, bb.min_y));
            let hi = self.frame.to_grid(Point2::new(bb.max_x, bb.max_y));
            let c0 = (((lo.x - g.xllcorner) / g.cellsize).floor().max(0.0) as usize).min(g.ncols);
            let c1 = (((hi.x - g.xllcorner) / g.cellsize).ceil().max(0.0) as usize).min(g.ncols);
            let s0 = (((lo.y - g.yllcorner) / g.cellsize).floor().max(0.0) as usize).min(g.nrows);
            let s1 = (((hi.y - g.yllcorner) / g.cellsize).ceil().max(0.0) as usize).min(g.nrows);
            for from_south in s0..s1 {
                let row = g.nrows - 1 - from_south;
                for col in c0..c1 {
                    let v = g.get(row, col);
                    if g.is_nodata(v) {
                        continue;
                    }
                    let center = self.frame.from_grid(g.cell_center(row, col));
                    if point_in_polygon(part, center) {
                        n += 1;
                        mean += (v - mean) / n as f64;
                    }
                }
            }
        }
        if n == 0 {
            return Err(RasterError::EmptyDistrictRaster { district: name.to_owned() });
        }
        Ok(mean)
    }

    /// Errors unless the footprint extent (working frame) overlaps the grid.
    pub fn check_overlap(&self, footprints: &BBox) -> Result<(), RasterError> {
        if footprints.is_empty() {
            return Ok(());
        }
        let lo = self.frame.to_grid(Point2::new(footprints.min_x, footprints.min_y));
        let hi = self.frame.to_grid(Point2::new(footprints.max_x, footprints.max_y));
        let fp = BBox { min_x: lo.x, min_y: lo.y, max_x: hi.x, max_y: hi.y };
        let grid = self.grid.extent();
        if fp.intersects(&grid) {
            Ok(())
        } else {
            Err(RasterError::FrameMismatch { footprints: fp, grid })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TWO_BY_TWO: &str = "ncols        2\nnrows        2\nxllcorner    0\nyllcorner    0\ncellsize     1000\nNODATA_value -9999\n1.5 1.6\n1.7 1.8\n";

    fn square(x0: f64, y0: f64, s: f64) -> FootprintPolygon {
        FootprintPolygon::new(
            "b7",
            vec![
                Point2::new(x0, y0),
                Point2::new(x0 + s, y0),
                Point2::new(x0 + s, y0 + s),
                Point2::new(x0, y0 + s),
            ],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn parses_two_by_two() {
        let g = AsciiGrid::parse(TWO_BY_TWO).unwrap();
        assert_eq!((g.ncols, g.nrows), (2, 2));
        assert_eq!(g.values, vec![1.5, 1.6, 1.7, 1.8]);
        assert_eq!(g.nodata, -9999.0);
        // Northernmost row first.
        assert_eq!(g.sample(Point2::new(500.0, 1500.0)), Some(1.5));
        assert_eq!(g.sample(Point2::new(500.0, 500.0)), Some(1.7));
    }

    #[test]
    fn header_is_case_insensitive() {
        let text = TWO_BY_TWO.replace("ncols", "NCOLS").replace("NODATA_value", "nodata_value");
        assert!(AsciiGrid::parse(&text).is_ok());
    }

    #[test]
    fn too_many_values_on_a_row() {
        let text = TWO_BY_TWO.replace("1.5 1.6", "1.5 1.6 1.65");
        match AsciiGrid::parse(&text) {
            Err(RasterError::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_names_line() {
        let text = TWO_BY_TWO.replace("1.8", "x");
        match AsciiGrid::parse(&text) {
            Err(RasterError::Parse { line, message }) => {
                assert_eq!(line, 8);
                assert!(message.contains("'x'"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_rows_and_bad_header() {
        let text = TWO_BY_TWO.replace("1.7 1.8\n", "");
        assert!(matches!(AsciiGrid::parse(&text), Err(RasterError::Parse { .. })));
        let text = TWO_BY_TWO.replace("cellsize     1000\n", "");
        assert!(matches!(AsciiGrid::parse(&text), Err(RasterError::Parse { .. })));
        let text = TWO_BY_TWO.replace("ncols        2", "ncols        2.5");
        assert!(matches!(AsciiGrid::parse(&text), Err(RasterError::Parse { line: 1, .. })));
    }

    #[test]
    fn nodata_cell_is_flagged() {
        let g = AsciiGrid::parse(&TWO_BY_TWO.replace("1.6", "-9999")).unwrap();
        assert!(g.is_nodata(g.get(0, 1)));
        assert_eq!(g.sample(Point2::new(1500.0, 1500.0)), None);
    }

    #[test]
    fn implausible_value_rejected() {
        let g = AsciiGrid::parse(&TWO_BY_TWO.replace("1.6", "12.0")).unwrap();
        assert!(matches!(PvOutGrid::new(g), Err(RasterError::Implausible { row: 0, col: 1, .. })));
    }

    #[test]
    fn half_open_cells() {
        let g = AsciiGrid::parse(TWO_BY_TWO).unwrap();
        // Center of the south-west cell.
        assert_eq!(g.sample(Point2::new(500.0, 500.0)), Some(1.7));
        // On the column boundary: east cell wins.
        assert_eq!(g.sample(Point2::new(1000.0, 500.0)), Some(1.8));
        // On the row boundary: north cell wins.
        assert_eq!(g.sample(Point2::new(500.0, 1000.0)), Some(1.5));
        assert_eq!(g.sample(Point2::new(2000.0, 500.0)), None);
        assert_eq!(g.sample(Point2::new(-0.1, 500.0)), None);
    }

    #[test]
    fn building_sampling_and_policies() {
        let text = "ncols 3\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 100\nNODATA_value -9999\n1.6911 -9999 1.7\n";
        let grid = PvOutGrid::new(AsciiGrid::parse(text).unwrap()).unwrap();
        let b = square(40.0, 40.0, 20.0);
        assert_eq!(grid.sample_for_building(&b, NodataPolicy::Fail).unwrap(), 1.6911);

        // Centroid (160, 50) on nodata: nearest centers are (50,50) at 110 and (250,50) at 90.
        let b = square(150.0, 40.0, 20.0);
        assert_eq!(grid.sample_for_building(&b, NodataPolicy::Nearest).unwrap(), 1.7);
        match grid.sample_for_building(&b, NodataPolicy::Fail) {
            Err(RasterError::MissingPvout { building_id }) => assert_eq!(building_id, "b7"),
            other => panic!("unexpected {other:?}"),
        }
        // Equidistant: row-major first wins.
        let b = square(140.0, 40.0, 20.0);
        assert_eq!(grid.sample_for_building(&b, NodataPolicy::Nearest).unwrap(), 1.6911);
    }

    #[test]
    fn district_means() {
        let uniform = "ncols 4\nnrows 4\nxllcorner 0\nyllcorner 0\ncellsize 10\nNODATA_value -9999\n1.7 1.7 1.7 1.7\n1.7 1.7 1.7 1.7\n1.7 1.7 1.7 1.7\n1.7 1.7 1.7 1.7\n";
        let grid = PvOutGrid::new(AsciiGrid::parse(uniform).unwrap()).unwrap();
        assert_eq!(grid.district_mean_pvout("all", &[square(0.0, 0.0, 40.0)]).unwrap(), 1.7);
        assert_eq!(grid.district_mean_pvout("part", &[square(3.0, 3.0, 14.0)]).unwrap(), 1.7);

        let two = "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 10\nNODATA_value -9999\n1.5 1.9\n";
        let grid = PvOutGrid::new(AsciiGrid::parse(two).unwrap()).unwrap();
        let m = grid.district_mean_pvout("d", &[square(0.0, -5.0, 20.0)]).unwrap();
        assert!((m - 1.7).abs() < 1e-12);

        let dead = "ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 10\nNODATA_value -9999\n-9999\n";
        let grid = PvOutGrid::new(AsciiGrid::parse(dead).unwrap()).unwrap();
        assert!(matches!(
            grid.district_mean_pvout("d", &[square(0.0, 0.0, 10.0)]),
            Err(RasterError::EmptyDistrictRaster { .. })
        ));
    }

    #[test]
    fn overlap_check() {
        let grid = PvOutGrid::new(AsciiGrid::parse(TWO_BY_TWO).unwrap()).unwrap();
        assert!(grid.check_overlap(&square(10.0, 10.0, 5.0).bbox()).is_ok());
        assert!(matches!(
            grid.check_overlap(&square(1e6, 1e6, 5.0).bbox()),
            Err(RasterError::FrameMismatch { .. })
        ));
    }

    #[test]
    fn geographic_frame_samples_in_degrees() {
        let text = "ncols 2\nnrows 1\nxllcorner 35.0\nyllcorner 33.0\ncellsize 0.5\nNODATA_value -9999\n1.6 1.8\n";
        let proj = LocalProjection::new(35.6, 33.2);
        let grid = PvOutGrid::new(AsciiGrid::parse(text).unwrap())
            .unwrap()
            .with_frame(GridFrame::Geographic(proj));
        assert_eq!(grid.sample(Point2::new(0.0, 0.0)), Some(1.8));
        assert_eq!(grid.sample(proj.forward(35.2, 33.2)), Some(1.6));
    }

    proptest! {
        #[test]
        fn write_then_load_reproduces_tokens(
            ncols in 1usize..6,
            nrows in 1usize..6,
            cells in proptest::collection::vec(prop_oneof![Just(-9999i32), 1000i32..2500], 36),
        ) {
            let mut text = format!(
                "{:<13}{}\n{:<13}{}\n{:<13}{}\n{:<13}{}\n{:<13}{}\n{:<13}{}\n",
                "ncols", ncols, "nrows", nrows, "xllcorner", 250000.5, "yllcorner", -12.25,
                "cellsize", 1000, "NODATA_value", -9999
            );
            for r in 0..nrows {
                let row: Vec<String> = (0..ncols)
                    .map(|c| {
                        let v = cells[r * ncols + c];
                        if v == -9999 { "-9999".to_owned() } else { format!("{}", v as f64 / 1000.0) }
                    })
                    .collect();
                text.push_str(&row.join(" "));
                text.push('\n');
            }
            let grid = AsciiGrid::parse(&text).unwrap();
            prop_assert_eq!(grid.to_ascii(None), text);
        }

        #[test]
        fn every_in_extent_point_maps_to_one_cell(x in 0.0f64..2000.0, y in 0.0f64..2000.0) {
            let g = AsciiGrid::parse(TWO_BY_TWO).unwrap();
            let (row, col) = g.cell_of(Point2::new(x, y)).unwrap();
            let c = g.cell_center(row, col);
            prop_assert!(x >= c.x - 500.0 && x < c.x + 500.0);
            prop_assert!(y >= c.y - 500.0 && y < c.y + 500.0);
        }
    }
}
