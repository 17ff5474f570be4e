//! Spatio-temporal grid over snapshot points.
//!
//! Rows are fixed-height latitude bands. Each row is split into equal
//! longitude columns whose width is chosen from the highest |latitude| of the
//! row and its two neighbours, so a point's ε-ball always falls inside the
//! 3x3 column/row neighbourhood. Time is bucketed by `max(Δt, 1)` seconds and
//! probed over {b-1, b, b+1}.

use rustc_hash::FxHashMap;

use crate::geo::{ProximityConfig, METERS_PER_DEGREE};

/// Lower bound on the grid cell edge.
pub const MIN_CELL_M: f64 = 10.0;

// Columns wider than this collapse a row into a single cell; it only
// happens within a few cells of the poles.
const MAX_COLUMN_DEG: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridKey {
    pub cell_x: i64,
    pub cell_y: i64,
    pub time_bucket: i64,
}

#[derive(Clone, Debug)]
pub struct GridIndex {
    cell_m: f64,
    bucket_s: i64,
    row_deg: f64,
    cells: FxHashMap<GridKey, Vec<u32>>,
}

impl GridIndex {
    pub fn new(cfg: &ProximityConfig) -> Self {
        let cell_m = cfg.epsilon_m().max(MIN_CELL_M);
        GridIndex {
            cell_m,
            bucket_s: cfg.delta_t_s().max(1),
            row_deg: cell_m * 1.001 / METERS_PER_DEGREE,
            cells: FxHashMap::default(),
        }
    }

    pub fn build(cfg: &ProximityConfig, points: impl Iterator<Item = (f64, f64, i64)>) -> Self {
        let mut index = GridIndex::new(cfg);
        for (i, (lat, lon, t)) in points.enumerate() {
            let key = index.key(lat, lon, t);
            index.cells.entry(key).or_default().push(i as u32);
        }
        index
    }

    pub fn cell_m(&self) -> f64 {
        self.cell_m
    }

    /// Whether probing this index with `cfg` is guaranteed complete.
    pub fn covers(&self, cfg: &ProximityConfig) -> bool {
        cfg.epsilon_m() <= self.cell_m && cfg.delta_t_s() <= self.bucket_s
    }

    pub fn len_cells(&self) -> usize {
        self.cells.len()
    }

    fn row(&self, lat: f64) -> i64 {
        ((lat + 90.0) / self.row_deg).floor() as i64
    }

    fn columns(&self, row: i64) -> (i64, f64) {
        let lo = (row - 1) as f64 * self.row_deg - 90.0;
        let hi = (row + 2) as f64 * self.row_deg - 90.0;
        let phi = lo.abs().max(hi.abs()).min(90.0);
        let cos = phi.to_radians().cos();
        let min_width = self.cell_m * 1.01 / (METERS_PER_DEGREE * cos.max(1e-300));
        if min_width.is_nan() || min_width >= MAX_COLUMN_DEG {
            return (1, 360.0);
        }
        let n = (360.0 / min_width).floor().max(1.0) as i64;
        (n, 360.0 / n as f64)
    }

    fn column(&self, row: i64, lon: f64) -> i64 {
        let (n, width) = self.columns(row);
        (((lon + 180.0) / width).floor() as i64).rem_euclid(n)
    }

    fn bucket(&self, t: i64) -> i64 {
        t.div_euclid(self.bucket_s)
    }

    pub fn key(&self, lat: f64, lon: f64, t: i64) -> GridKey {
        let row = self.row(lat);
        GridKey {
            cell_x: self.column(row, lon),
            cell_y: row,
            time_bucket: self.bucket(t),
        }
    }

    /// Calls `f` with every indexed point id in the 3x3x3 neighbourhood of
    /// `(lat, lon, t)`. Each id is visited at most once.
    pub fn probe(&self, lat: f64, lon: f64, t: i64, mut f: impl FnMut(u32)) {
        let row = self.row(lat);
        let bucket = self.bucket(t);
        for cell_y in row - 1..=row + 1 {
            let (n, _) = self.columns(cell_y);
            let col = self.column(cell_y, lon);
            let mut cols = [col - 1, col, col + 1].map(|c| c.rem_euclid(n));
            cols.sort_unstable();
            let mut prev = None;
            for cell_x in cols {
                if prev == Some(cell_x) {
                    continue;
                }
                prev = Some(cell_x);
                for time_bucket in bucket - 1..=bucket + 1 {
                    let key = GridKey {
                        cell_x,
                        cell_y,
                        time_bucket,
                    };
                    if let Some(ids) = self.cells.get(&key) {
                        ids.iter().copied().for_each(&mut f);
                    }
                }
            }
        }
    }
}
