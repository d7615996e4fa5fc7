//! Check-in records, gridding into a discrete location domain, and
//! geographic block partitions.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution as _, Normal, WeightedIndex};
use serde::{Deserialize, Serialize};

use crate::distribution::Distribution;
use crate::error::{invalid, Error, Result};
use crate::partition::Partition;
use crate::seed::rng_for;

/// The bundled synthetic corpus (10,000 fabricated records).
pub const SYNTHETIC_CHECKINS: &str = include_str!("../data/synthetic_checkins.tsv");

/// Largest tolerated fraction of malformed lines.
pub const MAX_MALFORMED_FRACTION: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckinRecord {
    pub user: String,
    pub timestamp: String,
    pub lat: f64,
    pub lon: f64,
    pub location: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LoadReport {
    pub records: Vec<CheckinRecord>,
    pub lines: usize,
    pub malformed: usize,
    /// 1-based numbers of the first malformed lines.
    pub malformed_lines: Vec<usize>,
}

fn parse_line(line: &str) -> Option<CheckinRecord> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 5 {
        return None;
    }
    let lat: f64 = cols[2].trim().parse().ok()?;
    let lon: f64 = cols[3].trim().parse().ok()?;
    if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
        return None;
    }
    Some(CheckinRecord {
        user: cols[0].to_string(),
        timestamp: cols[1].to_string(),
        lat,
        lon,
        location: cols[4].trim_end().to_string(),
    })
}

/// Parses `user \t time \t lat \t lon \t location` lines. Blank lines are
/// ignored; malformed lines are skipped and counted.
pub fn parse_checkins<R: BufRead>(reader: R) -> Result<LoadReport> {
    let mut records = Vec::new();
    let mut lines = 0;
    let mut malformed_lines = Vec::new();
    let mut malformed = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Ingest(format!("line {}: {e}", i + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        lines += 1;
        match parse_line(&line) {
            Some(r) => records.push(r),
            None => {
                malformed += 1;
                if malformed_lines.len() < 10 {
                    malformed_lines.push(i + 1);
                }
            }
        }
    }
    if lines > 0 && malformed as f64 > MAX_MALFORMED_FRACTION * lines as f64 {
        return Err(Error::Ingest(format!(
            "{malformed} of {lines} lines are malformed (first at lines {malformed_lines:?})"
        )));
    }
    if malformed > 0 {
        log::warn!("skipped {malformed} malformed check-in lines");
    }
    Ok(LoadReport {
        records,
        lines,
        malformed,
        malformed_lines,
    })
}

pub fn load_checkins(path: &Path) -> Result<LoadReport> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_checkins(std::io::BufReader::new(file))
}

/// A regular latitude/longitude grid; cells are indexed row-major, latitude
/// first. Cells are half-open `[a, a + cell)` except the last row and
/// column, which also hold the upper boundary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
    pub cell: f64,
    rows: usize,
    cols: usize,
}

const SNAP_TOL: f64 = 1e-9;

fn cells_along(span: f64, cell: f64) -> usize {
    let q = span / cell;
    if (q - q.round()).abs() < SNAP_TOL {
        q.round() as usize
    } else {
        q.ceil() as usize
    }
}

impl Grid {
    pub fn new(lat_min: f64, lat_max: f64, lon_min: f64, lon_max: f64, cell: f64) -> Result<Self> {
        if !(cell > 0.0) || !cell.is_finite() {
            return Err(invalid(format!("cell size must be positive, got {cell}")));
        }
        if !(lat_min < lat_max) || !(lon_min < lon_max) {
            return Err(invalid("bounding box is degenerate"));
        }
        if lat_min < -90.0 || lat_max > 90.0 || lon_min < -180.0 || lon_max > 180.0 {
            return Err(invalid("bounding box leaves the globe"));
        }
        Ok(Grid {
            lat_min,
            lat_max,
            lon_min,
            lon_max,
            cell,
            rows: cells_along(lat_max - lat_min, cell),
            cols: cells_along(lon_max - lon_min, cell),
        })
    }

    /// 25N to 50N, 130W to 60W, in 0.2 degree cells: 125 x 350 cells.
    pub fn continental_us() -> Self {
        Grid::new(25.0, 50.0, -130.0, -60.0, 0.2).expect("valid grid")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn k(&self) -> usize {
        self.rows * self.cols
    }

    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        (self.lat_min..=self.lat_max).contains(&lat) && (self.lon_min..=self.lon_max).contains(&lon)
    }

    fn snap(v: f64, min: f64, cell: f64, n: usize) -> usize {
        (((v - min) / cell + SNAP_TOL).floor().max(0.0) as usize).min(n - 1)
    }

    pub fn cell_of(&self, lat: f64, lon: f64) -> Option<usize> {
        if !self.contains(lat, lon) {
            return None;
        }
        let r = Self::snap(lat, self.lat_min, self.cell, self.rows);
        let c = Self::snap(lon, self.lon_min, self.cell, self.cols);
        Some(r * self.cols + c)
    }

    /// South-west corner of a cell.
    pub fn corner(&self, index: usize) -> (f64, f64) {
        let (r, c) = (index / self.cols, index % self.cols);
        (self.lat_min + r as f64 * self.cell, self.lon_min + c as f64 * self.cell)
    }

    pub fn descriptor(&self, partition: Option<&Partition>) -> GridDescriptor {
        GridDescriptor {
            bbox: [self.lat_min, self.lat_max, self.lon_min, self.lon_max],
            cell: self.cell,
            rows: self.rows,
            cols: self.cols,
            k: self.k(),
            block_sizes: partition.map(Partition::sizes),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDescriptor {
    /// `[lat_min, lat_max, lon_min, lon_max]`.
    pub bbox: [f64; 4],
    pub cell: f64,
    pub rows: usize,
    pub cols: usize,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_sizes: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Occupancy {
    pub kept: usize,
    pub dropped: usize,
    /// Records per non-empty cell.
    pub counts: BTreeMap<usize, u64>,
}

/// Normalized cell counts over every grid cell, empty cells included.
pub fn grid_empirical(records: &[CheckinRecord], grid: &Grid) -> Result<(Distribution, Occupancy)> {
    let mut counts = BTreeMap::new();
    let mut dropped = 0;
    for r in records {
        match grid.cell_of(r.lat, r.lon) {
            Some(c) => *counts.entry(c).or_insert(0u64) += 1,
            None => dropped += 1,
        }
    }
    let kept = records.len() - dropped;
    if kept == 0 {
        return Err(Error::Ingest("no record falls inside the bounding box".into()));
    }
    let mut masses = vec![0.0; grid.k()];
    for (&c, &n) in &counts {
        masses[c] = n as f64;
    }
    let p = Distribution::from_masses(&masses)?;
    Ok((p, Occupancy { kept, dropped, counts }))
}

/// `m1` equal latitude bands by `m2` equal longitude bands; the last band
/// in each direction absorbs the remainder rows or columns.
pub fn geo_partition(grid: &Grid, m1: usize, m2: usize) -> Result<Partition> {
    if m1 == 0 || m2 == 0 {
        return Err(invalid("m1 and m2 must be at least 1"));
    }
    if m1 > grid.rows || m2 > grid.cols {
        return Err(invalid(format!(
            "{m1} x {m2} bands exceed the {} x {} grid",
            grid.rows, grid.cols
        )));
    }
    let (h, w) = (grid.rows / m1, grid.cols / m2);
    let block_of = (0..grid.k())
        .map(|i| {
            let (r, c) = (i / grid.cols, i % grid.cols);
            (r / h).min(m1 - 1) * m2 + (c / w).min(m2 - 1)
        })
        .collect();
    Partition::new(block_of)
}

const CITIES: [(f64, f64); 24] = [
    (40.71, -74.01),
    (34.05, -118.24),
    (41.88, -87.63),
    (29.76, -95.37),
    (33.45, -112.07),
    (39.95, -75.17),
    (29.42, -98.49),
    (32.72, -117.16),
    (32.78, -96.80),
    (37.77, -122.42),
    (30.27, -97.74),
    (47.61, -122.33),
    (39.74, -104.99),
    (42.36, -71.06),
    (36.17, -115.14),
    (45.52, -122.68),
    (25.77, -80.19),
    (33.75, -84.39),
    (44.98, -93.27),
    (38.91, -77.04),
    (35.23, -80.84),
    (39.10, -94.58),
    (36.16, -86.78),
    (42.33, -83.05),
];

/// Deterministic fabricated check-ins: city clusters with Zipf popularity,
/// a uniform background inside the continental box, and a few records
/// outside it.
pub fn synthetic_checkins(n: usize, seed: u64) -> Vec<CheckinRecord> {
    let mut rng = rng_for(seed, &[]);
    let popularity: Vec<f64> = (0..CITIES.len()).map(|i| 1.0 / (i + 1) as f64).collect();
    let city = WeightedIndex::new(&popularity).expect("positive weights");
    let spread = Normal::new(0.0, 0.25).expect("valid spread");
    let users = (n / 12).max(1);
    (0..n)
        .map(|i| {
            let u: f64 = rng.gen();
            let (lat, lon) = if u < 0.02 {
                (rng.gen_range(45.0..55.0), rng.gen_range(-5.0..15.0))
            } else if u < 0.07 {
                (rng.gen_range(25.0..50.0), rng.gen_range(-125.0..-67.0))
            } else {
                let (clat, clon) = CITIES[city.sample(&mut rng)];
                (clat + spread.sample(&mut rng), clon + spread.sample(&mut rng))
            };
            let day = rng.gen_range(0..300u32);
            let secs = rng.gen_range(0..86_400u32);
            CheckinRecord {
                user: format!("u{:05}", rng.gen_range(0..users)),
                timestamp: format!(
                    "2010-{:02}-{:02}T{:02}:{:02}:{:02}Z",
                    day / 28 + 1,
                    day % 28 + 1,
                    secs / 3600,
                    secs / 60 % 60,
                    secs % 60
                ),
                lat: (lat * 1e5).round() / 1e5,
                lon: (lon * 1e5).round() / 1e5,
                location: format!("{}", 100_000 + i),
            }
        })
        .collect()
}

pub fn to_tsv(records: &[CheckinRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let _ = writeln!(
            out,
            "{}\t{}\t{:.5}\t{:.5}\t{}",
            r.user, r.timestamp, r.lat, r.lon, r.location
        );
    }
    out
}
