//! Box-counting dimension estimates of classified grids.
//!
//! The estimate is an upper box-counting proxy, not a Hausdorff dimension;
//! every serialized estimate says so in its metadata.

use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::dynamics::{classify_grid, ir_candidates_at, jr_candidates_at, DynamicsError, GridClassification, Window};
use crate::model::{FunctionModel, ModelConfig, ModelError};

pub const PROXY: &str = "upper-box-count";

/// Minimum number of scales entering a fit.
pub const MIN_FIT_POINTS: usize = 4;

/// Minimum number of rungs in the default ladder.
pub const MIN_LADDER_RUNGS: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DimensionError {
    #[error("no cells selected")]
    EmptySet,
    #[error("scale {0} is not a positive integer multiple of the cell size")]
    Scale(f64),
    #[error("scales must be strictly decreasing")]
    ScaleOrder,
    #[error("cells are not square (width {width}, height {height})")]
    NonSquareCells { width: f64, height: f64 },
    #[error("need at least {needed} scales, have {available}")]
    InsufficientScales { needed: usize, available: usize },
    #[error("counts must be positive")]
    ZeroCount,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Square cells of side `cell` with lower-left corner `origin`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    pub origin: Complex64,
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridGeometry {
    pub fn of(grid: &GridClassification) -> Result<GridGeometry, DimensionError> {
        let (width, height) = (grid.cell_width(), grid.cell_height());
        if ((width - height) / width).abs() > 1e-12 {
            return Err(DimensionError::NonSquareCells { width, height });
        }
        Ok(GridGeometry { origin: grid.window.corner(), cell: width, nx: grid.nx, ny: grid.ny })
    }

    /// Scale as a whole number of cells.
    fn multiple(&self, scale: f64) -> Result<usize, DimensionError> {
        let m = scale / self.cell;
        let r = m.round();
        if r < 1.0 || (m - r).abs() > 1e-9 * r {
            return Err(DimensionError::Scale(scale));
        }
        Ok(r as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCounts {
    pub scales: Vec<f64>,
    pub counts: Vec<u64>,
    /// Raw cell size when the counts come from a grid.
    pub cell_size: Option<f64>,
}

impl BoxCounts {
    pub fn new(scales: Vec<f64>, counts: Vec<u64>) -> BoxCounts {
        BoxCounts { scales, counts, cell_size: None }
    }
}

fn check_decreasing(scales: &[f64]) -> Result<(), DimensionError> {
    if scales.windows(2).all(|w| w[1] < w[0]) {
        Ok(())
    } else {
        Err(DimensionError::ScaleOrder)
    }
}

/// Occupied boxes per scale. `cells` are row-major indices with row 0 at the
/// top; boxes are anchored at the lower-left corner of the grid.
pub fn box_count(cells: &[usize], geometry: &GridGeometry, scales: &[f64]) -> Result<BoxCounts, DimensionError> {
    box_count_with_offsets(cells, geometry, scales, false)
}

/// As [`box_count`]; with `offsets` the counts are summed over four anchors
/// shifted by half a box in each direction, which leaves fitted slopes comparable.
pub fn box_count_with_offsets(
    cells: &[usize],
    geometry: &GridGeometry,
    scales: &[f64],
    offsets: bool,
) -> Result<BoxCounts, DimensionError> {
    if cells.is_empty() {
        return Err(DimensionError::EmptySet);
    }
    check_decreasing(scales)?;
    let nx = geometry.nx;
    let ny = geometry.ny;
    let mut counts = Vec::with_capacity(scales.len());
    let mut keys = Vec::with_capacity(cells.len());
    for &s in scales {
        let m = geometry.multiple(s)?;
        let shifts: &[(usize, usize)] = if offsets { &[(0, 0), (1, 0), (0, 1), (1, 1)] } else { &[(0, 0)] };
        let mut total = 0u64;
        for &(sx, sy) in shifts {
            let (ox, oy) = (sx * (m / 2), sy * (m / 2));
            keys.clear();
            keys.extend(cells.iter().map(|&k| {
                let (i, j) = (k % nx, ny - 1 - k / nx);
                (((i + ox) / m) as u64) << 32 | ((j + oy) / m) as u64
            }));
            keys.sort_unstable();
            keys.dedup();
            total += keys.len() as u64;
        }
        counts.push(total);
    }
    Ok(BoxCounts { scales: scales.to_vec(), counts, cell_size: Some(geometry.cell) })
}

/// Box counts of a point cloud, boxes anchored at `origin`.
pub fn box_count_points(points: &[Complex64], origin: Complex64, scales: &[f64]) -> Result<BoxCounts, DimensionError> {
    if points.is_empty() {
        return Err(DimensionError::EmptySet);
    }
    check_decreasing(scales)?;
    let mut counts = Vec::with_capacity(scales.len());
    for &s in scales {
        if !(s > 0.0) {
            return Err(DimensionError::Scale(s));
        }
        let mut keys: Vec<(i64, i64)> = points
            .iter()
            .map(|p| (((p.re - origin.re) / s).floor() as i64, ((p.im - origin.im) / s).floor() as i64))
            .collect();
        keys.sort_unstable();
        keys.dedup();
        counts.push(keys.len() as u64);
    }
    Ok(BoxCounts::new(scales.to_vec(), counts))
}

/// Dyadic ladder from a quarter of the shorter side down to two cells.
pub fn default_scales(geometry: &GridGeometry) -> Result<Vec<f64>, DimensionError> {
    let quarter = geometry.nx.min(geometry.ny) / 4;
    let mut m = if quarter >= 1 { 1usize << quarter.ilog2() } else { 0 };
    let mut scales = Vec::new();
    while m >= 2 {
        scales.push(m as f64 * geometry.cell);
        m /= 2;
    }
    if scales.len() < MIN_LADDER_RUNGS {
        return Err(DimensionError::InsufficientScales { needed: MIN_LADDER_RUNGS, available: scales.len() });
    }
    Ok(scales)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub scales: Vec<f64>,
    pub counts: Vec<u64>,
    /// How many of the leading scales entered the fit.
    pub fitted: usize,
    pub slope: f64,
    pub r2: f64,
    pub ci95: f64,
    pub params: serde_json::Value,
}

/// Least-squares slope of `ln N` against `ln(1/s)`. A finest scale equal to
/// the raw cell size is left out of the fit.
pub fn fit_dimension(counts: &BoxCounts) -> Result<DimensionEstimate, DimensionError> {
    check_decreasing(&counts.scales)?;
    let mut n = counts.scales.len().min(counts.counts.len());
    if let (Some(cell), Some(&last)) = (counts.cell_size, counts.scales.get(n.wrapping_sub(1))) {
        if n > 0 && ((last - cell) / cell).abs() < 1e-9 {
            n -= 1;
        }
    }
    if n < MIN_FIT_POINTS {
        return Err(DimensionError::InsufficientScales { needed: MIN_FIT_POINTS, available: n });
    }
    if counts.counts[..n].contains(&0) {
        return Err(DimensionError::ZeroCount);
    }
    let xs: Vec<f64> = counts.scales[..n].iter().map(|s| -s.ln()).collect();
    let ys: Vec<f64> = counts.counts[..n].iter().map(|&c| (c as f64).ln()).collect();
    let (slope, r2, ci95) = ols(&xs, &ys);
    Ok(DimensionEstimate {
        scales: counts.scales.clone(),
        counts: counts.counts.clone(),
        fitted: n,
        slope,
        r2,
        ci95,
        params: serde_json::Value::Null,
    })
}

/// `(slope, r², 95% half-width of the slope)`.
fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    let df = n - 2.0;
    let t = StudentsT::new(0.0, 1.0, df).expect("df ≥ 2").inverse_cdf(0.975);
    let ci95 = t * (sse / df / sxx).sqrt();
    (slope, r2, ci95)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    IR,
    JR,
}

/// Everything needed to reproduce an estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionRun {
    pub model: ModelConfig,
    pub window: Window,
    pub resolution: (usize, usize),
    pub max_iter: usize,
    pub escape_radius: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub target: Target,
    #[serde(default)]
    pub scales: Option<Vec<f64>>,
    #[serde(default)]
    pub offsets: bool,
}

impl DimensionRun {
    pub fn execute(&self) -> Result<DimensionEstimate, DimensionError> {
        let model = self.model.build()?;
        let grid = classify_grid(&model, self.window, self.resolution, self.max_iter, self.escape_radius, self.r)?;
        self.estimate_on(&grid, self.r)
    }

    /// Estimate from an already classified grid at level `r`.
    pub fn estimate_on(&self, grid: &GridClassification, r: f64) -> Result<DimensionEstimate, DimensionError> {
        let cells = match self.target {
            Target::IR => ir_candidates_at(grid, r),
            Target::JR => jr_candidates_at(grid, r),
        };
        let geometry = GridGeometry::of(grid)?;
        let scales = match &self.scales {
            Some(s) => s.clone(),
            None => default_scales(&geometry)?,
        };
        let counts = box_count_with_offsets(&cells, &geometry, &scales, self.offsets)?;
        let mut est = fit_dimension(&counts)?;
        let mut run = self.clone();
        run.r = r;
        run.scales = Some(scales);
        est.params = serde_json::to_value(&run).expect("run parameters serialize");
        Ok(est)
    }
}

pub fn estimate_set_dimension(
    model: &FunctionModel,
    window: Window,
    resolution: (usize, usize),
    max_iter: usize,
    escape_radius: f64,
    r: f64,
    target: Target,
) -> Result<DimensionEstimate, DimensionError> {
    let run = DimensionRun {
        model: ModelConfig::from(model),
        window,
        resolution,
        max_iter,
        escape_radius,
        r,
        target,
        scales: None,
        offsets: false,
    };
    let grid = classify_grid(model, window, resolution, max_iter, escape_radius, r)?;
    run.estimate_on(&grid, r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdimReport {
    pub entries: Vec<(f64, Result<DimensionEstimate, DimensionError>)>,
    /// Smallest successful `J_R` slope.
    pub edim: Option<f64>,
    /// `I_R` slope at the smallest `R`.
    pub ir_slope: Option<f64>,
    /// `edim ≥ ir_slope − 0.1`, when both exist.
    pub sandwich_ok: Option<bool>,
}

pub const SANDWICH_SLACK: f64 = 0.1;

/// One `J_R` estimate per `R` from a single grid.
pub fn estimate_edim(
    model: &FunctionModel,
    window: Window,
    resolution: (usize, usize),
    max_iter: usize,
    escape_radius: f64,
    r_list: &[f64],
) -> Result<EdimReport, DimensionError> {
    if r_list.is_empty() || !r_list.windows(2).all(|w| w[0] < w[1]) {
        return Err(DimensionError::ScaleOrder);
    }
    let r0 = r_list[0];
    let grid = classify_grid(model, window, resolution, max_iter, escape_radius, r0)?;
    if let Some(&last) = r_list.last() {
        if last >= escape_radius {
            return Err(DynamicsError::Radii { escape_radius, r: last }.into());
        }
    }
    let run = DimensionRun {
        model: ModelConfig::from(model),
        window,
        resolution,
        max_iter,
        escape_radius,
        r: r0,
        target: Target::JR,
        scales: None,
        offsets: false,
    };
    let entries: Vec<_> = r_list.iter().map(|&r| (r, run.estimate_on(&grid, r))).collect();
    let edim = entries.iter().filter_map(|(_, e)| e.as_ref().ok().map(|e| e.slope)).reduce(f64::min);
    let ir_slope = DimensionRun { target: Target::IR, ..run }.estimate_on(&grid, r0).ok().map(|e| e.slope);
    let sandwich_ok = match (edim, ir_slope) {
        (Some(e), Some(i)) => Some(e >= i - SANDWICH_SLACK),
        _ => None,
    };
    Ok(EdimReport { entries, edim, ir_slope, sandwich_ok })
}

impl DimensionEstimate {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "scale,count")?;
        for (s, c) in self.scales.iter().zip(&self.counts) {
            writeln!(out, "{s:?},{c}")?;
        }
        Ok(())
    }

    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "slope": self.slope,
            "r2": self.r2,
            "ci95": self.ci95,
            "params": self.params,
            "proxy": PROXY,
        })
    }
}
