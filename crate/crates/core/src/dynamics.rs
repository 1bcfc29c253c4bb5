//! Finite-horizon orbit classification and grid approximations of
//! `J_R(f) = {z : |f^n(z)| ≥ R for all n ≥ 1}` and of `I_R(f)`.
//!
//! The stopping rule is a heuristic: an orbit counts as escaped at step `n`
//! when `|f^n| ≥ escape_radius` and the next two moduli strictly increase.

use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::FunctionModel;
use crate::EvalError;

pub const DEFAULT_ESCAPE_RADIUS: f64 = 100.0;
pub const DEFAULT_R: f64 = 50.0;

/// Strictly increasing follow-up moduli needed to confirm an escape.
pub const CONFIRMATION_STEPS: usize = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("max_iter must be at least 1")]
    NoIterations,
    #[error("need escape_radius > R > 0, got escape_radius = {escape_radius}, R = {r}")]
    Radii { escape_radius: f64, r: f64 },
    #[error("window half-widths must be positive and finite")]
    DegenerateWindow,
    #[error("resolution must be at least 1×1")]
    EmptyResolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrbitStatus {
    Escaped { at_step: usize },
    OverflowEscaped { at_step: usize },
    BoundedHorizon,
    Undetermined,
}

impl OrbitStatus {
    pub fn escaped(&self) -> bool {
        matches!(self, OrbitStatus::Escaped { .. } | OrbitStatus::OverflowEscaped { .. })
    }

    pub fn escape_step(&self) -> Option<usize> {
        match *self {
            OrbitStatus::Escaped { at_step } | OrbitStatus::OverflowEscaped { at_step } => Some(at_step),
            _ => None,
        }
    }

    /// Label used in CSV output.
    pub fn label(&self) -> &'static str {
        match self {
            OrbitStatus::Escaped { .. } => "escaped",
            OrbitStatus::OverflowEscaped { .. } => "overflow",
            OrbitStatus::BoundedHorizon => "bounded",
            OrbitStatus::Undetermined => "undetermined",
        }
    }

    /// PGM gray level.
    pub fn gray(&self) -> u8 {
        match self {
            OrbitStatus::Escaped { .. } | OrbitStatus::OverflowEscaped { .. } => 255,
            OrbitStatus::BoundedHorizon => 0,
            OrbitStatus::Undetermined => 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub start: Complex64,
    /// `f^n(z)` for `n = 1..=iterates.len()`.
    pub iterates: Vec<Complex64>,
    /// `|f^n(z)|` for `n = 1..=moduli.len()`; an overflowing step is not recorded.
    pub moduli: Vec<f64>,
    pub status: OrbitStatus,
    pub r: f64,
    pub stayed_above_r: bool,
    /// Some evaluation fell back to a Taylor expansion whose remainder exceeded the tolerance.
    pub reduced_accuracy: bool,
    /// Set when an evaluation failed and the orbit was abandoned.
    pub diagnostic: Option<String>,
}

impl OrbitRecord {
    /// `|f^n(z)|`, 1-based like the iterate index.
    pub fn modulus_at(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|k| self.moduli.get(k).copied())
    }

    pub fn min_modulus(&self) -> f64 {
        self.moduli.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn check_radii(max_iter: usize, escape_radius: f64, r: f64) -> Result<(), DynamicsError> {
    if max_iter == 0 {
        return Err(DynamicsError::NoIterations);
    }
    if !(r > 0.0 && escape_radius > r && escape_radius.is_finite()) {
        return Err(DynamicsError::Radii { escape_radius, r });
    }
    Ok(())
}

pub fn iterate_orbit(
    model: &FunctionModel,
    z0: Complex64,
    max_iter: usize,
    escape_radius: f64,
    r: f64,
) -> Result<OrbitRecord, DynamicsError> {
    check_radii(max_iter, escape_radius, r)?;
    Ok(run_orbit(model, z0, max_iter, escape_radius, r))
}

fn run_orbit(model: &FunctionModel, z0: Complex64, max_iter: usize, escape_radius: f64, r: f64) -> OrbitRecord {
    let mut moduli = Vec::with_capacity(max_iter.min(64));
    let mut iterates = Vec::with_capacity(max_iter.min(64));
    let mut reduced_accuracy = false;
    let mut diagnostic = None;
    // (step at which |f^n| first reached the escape radius, confirmations so far)
    let mut candidate: Option<(usize, usize)> = None;
    let mut z = z0;
    let mut status = None;

    for n in 1..=max_iter {
        match model.value(z) {
            Ok(e) => {
                reduced_accuracy |= e.reduced_accuracy;
                z = e.value;
                let m = z.norm();
                let prev = moduli.last().copied();
                moduli.push(m);
                iterates.push(z);
                candidate = match candidate {
                    Some((start, k)) if prev.is_some_and(|p| m > p) => Some((start, k + 1)),
                    _ if m >= escape_radius => Some((n, 0)),
                    _ => None,
                };
                if let Some((start, k)) = candidate {
                    if k >= CONFIRMATION_STEPS {
                        status = Some(OrbitStatus::Escaped { at_step: start });
                        break;
                    }
                }
            }
            Err(EvalError::Overflow { .. }) => {
                status = Some(match candidate {
                    Some((start, _)) => OrbitStatus::Escaped { at_step: start },
                    None => OrbitStatus::OverflowEscaped { at_step: n },
                });
                break;
            }
            Err(err) => {
                diagnostic = Some(format!("step {n}: {err}"));
                status = Some(OrbitStatus::Undetermined);
                break;
            }
        }
    }

    let status = status.unwrap_or_else(|| {
        if moduli.iter().all(|&m| m < escape_radius) {
            OrbitStatus::BoundedHorizon
        } else {
            OrbitStatus::Undetermined
        }
    });
    let stayed_above_r = moduli.iter().all(|&m| m >= r);
    OrbitRecord { start: z0, iterates, moduli, status, r, stayed_above_r, reduced_accuracy, diagnostic }
}

/// Axis-aligned rectangle given by its center and half-widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub center: Complex64,
    pub half_width: f64,
    pub half_height: f64,
}

impl Window {
    pub fn new(center: Complex64, half_width: f64, half_height: f64) -> Result<Window, DynamicsError> {
        let ok = |h: f64| h > 0.0 && h.is_finite();
        if !(ok(half_width) && ok(half_height) && center.is_finite()) {
            return Err(DynamicsError::DegenerateWindow);
        }
        Ok(Window { center, half_width, half_height })
    }

    pub fn square(center: Complex64, half_width: f64) -> Result<Window, DynamicsError> {
        Window::new(center, half_width, half_width)
    }

    /// Lower-left corner.
    pub fn corner(&self) -> Complex64 {
        self.center - Complex64::new(self.half_width, self.half_height)
    }
}

/// Per-cell summary; enough to recompute candidate sets for any `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub status: OrbitStatus,
    /// Smallest recorded modulus along the orbit (`+∞` if none was recorded).
    pub min_modulus: f64,
    pub flagged: bool,
}

/// Orbit statuses at the cell centers of a window. Cell `(i, j)` has column
/// `i` counted from the left edge and row `j` counted from the top edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridClassification {
    pub window: Window,
    pub nx: usize,
    pub ny: usize,
    pub r: f64,
    pub max_iter: usize,
    pub escape_radius: f64,
    /// Row-major, `cells[j * nx + i]`.
    pub cells: Vec<CellRecord>,
}

impl GridClassification {
    pub fn cell_width(&self) -> f64 {
        2.0 * self.window.half_width / self.nx as f64
    }

    pub fn cell_height(&self) -> f64 {
        2.0 * self.window.half_height / self.ny as f64
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Complex64 {
        cell_center(&self.window, self.nx, self.ny, i, j)
    }

    pub fn cell(&self, i: usize, j: usize) -> &CellRecord {
        &self.cells[j * self.nx + i]
    }

    pub fn index_of(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    pub fn escaped_fraction(&self) -> f64 {
        self.cells.iter().filter(|c| c.status.escaped()).count() as f64 / self.cells.len() as f64
    }

    /// Writes a binary graymap, top row first.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "P5\n{} {}\n255\n", self.nx, self.ny)?;
        let bytes: Vec<u8> = self.cells.iter().map(|c| c.status.gray()).collect();
        out.write_all(&bytes)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "i,j,re,im,status,escape_step,stayed_above_R")?;
        for (k, cell) in self.cells.iter().enumerate() {
            let (i, j) = self.index_of(k);
            let z = self.cell_center(i, j);
            let step = cell.status.escape_step().map(|s| s.to_string()).unwrap_or_default();
            let above = cell.min_modulus >= self.r;
            writeln!(out, "{i},{j},{:?},{:?},{},{step},{above}", z.re, z.im, cell.status.label())?;
        }
        Ok(())
    }
}

fn cell_center(window: &Window, nx: usize, ny: usize, i: usize, j: usize) -> Complex64 {
    let dx = 2.0 * window.half_width / nx as f64;
    let dy = 2.0 * window.half_height / ny as f64;
    Complex64::new(
        window.center.re - window.half_width + (i as f64 + 0.5) * dx,
        window.center.im + window.half_height - (j as f64 + 0.5) * dy,
    )
}

/// Classify every cell center. Rows are processed in parallel; the result
/// does not depend on the thread count.
pub fn classify_grid(
    model: &FunctionModel,
    window: Window,
    resolution: (usize, usize),
    max_iter: usize,
    escape_radius: f64,
    r: f64,
) -> Result<GridClassification, DynamicsError> {
    check_radii(max_iter, escape_radius, r)?;
    Window::new(window.center, window.half_width, window.half_height)?;
    let (nx, ny) = resolution;
    if nx == 0 || ny == 0 {
        return Err(DynamicsError::EmptyResolution);
    }
    let mut cells =
        vec![CellRecord { status: OrbitStatus::Undetermined, min_modulus: f64::INFINITY, flagged: false }; nx * ny];
    cells.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        for (i, cell) in row.iter_mut().enumerate() {
            let rec = run_orbit(model, cell_center(&window, nx, ny, i, j), max_iter, escape_radius, r);
            *cell = CellRecord {
                status: rec.status,
                min_modulus: rec.min_modulus(),
                flagged: rec.reduced_accuracy || rec.diagnostic.is_some(),
            };
        }
    });
    Ok(GridClassification { window, nx, ny, r, max_iter, escape_radius, cells })
}

/// Finite-horizon outer approximation of `J_R` at the grid's own `R`.
pub fn jr_candidates(grid: &GridClassification) -> Vec<usize> {
    jr_candidates_at(grid, grid.r)
}

pub fn ir_candidates(grid: &GridClassification) -> Vec<usize> {
    ir_candidates_at(grid, grid.r)
}

/// `J_R` candidates for another `R ≤ escape_radius` without recomputing orbits.
pub fn jr_candidates_at(grid: &GridClassification, r: f64) -> Vec<usize> {
    select(grid, r, |s| !matches!(s, OrbitStatus::Undetermined))
}

pub fn ir_candidates_at(grid: &GridClassification, r: f64) -> Vec<usize> {
    select(grid, r, |s| s.escaped())
}

fn select(grid: &GridClassification, r: f64, keep: impl Fn(&OrbitStatus) -> bool) -> Vec<usize> {
    grid.cells.iter().enumerate().filter(|(_, c)| c.min_modulus >= r && keep(&c.status)).map(|(k, _)| k).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exponential_from_one() {
        let rec = iterate_orbit(&FunctionModel::exponential(), c(1.0, 0.0), 10, 100.0, 10.0).unwrap();
        assert_eq!(rec.status, OrbitStatus::Escaped { at_step: 3 });
        assert!((rec.modulus_at(2).unwrap() - 1f64.exp().exp()).abs() < 1e-12);
        assert!(!rec.stayed_above_r);
    }

    #[test]
    fn immediate_overflow() {
        let rec = iterate_orbit(&FunctionModel::exponential(), c(800.0, 0.0), 5, 100.0, 10.0).unwrap();
        assert_eq!(rec.status, OrbitStatus::OverflowEscaped { at_step: 1 });
        assert!(rec.moduli.is_empty());
        assert!(rec.stayed_above_r);
    }

    #[test]
    fn bounded_and_undetermined_at_horizon() {
        let exp = FunctionModel::exponential();
        // 0 → 1 → e → e^e stays below 100 for two steps
        let rec = iterate_orbit(&exp, c(0.0, 0.0), 2, 100.0, 10.0).unwrap();
        assert_eq!(rec.status, OrbitStatus::BoundedHorizon);
        // crosses the radius at the last step, no room to confirm
        let rec = iterate_orbit(&exp, c(1.0, 0.0), 3, 100.0, 10.0).unwrap();
        assert_eq!(rec.status, OrbitStatus::Undetermined);
    }

    #[test]
    fn rejects_bad_parameters() {
        let exp = FunctionModel::exponential();
        assert_eq!(iterate_orbit(&exp, c(0.0, 0.0), 0, 100.0, 10.0), Err(DynamicsError::NoIterations));
        assert!(iterate_orbit(&exp, c(0.0, 0.0), 5, 10.0, 10.0).is_err());
        assert!(Window::square(c(0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn single_cell_grid_matches_orbit() {
        let exp = FunctionModel::exponential();
        let w = Window::square(c(0.5, 0.25), 1.0).unwrap();
        let g = classify_grid(&exp, w, (1, 1), 10, 100.0, 10.0).unwrap();
        let rec = iterate_orbit(&exp, c(0.5, 0.25), 10, 100.0, 10.0).unwrap();
        assert_eq!(g.cells[0].status, rec.status);
        assert_eq!(g.cell_center(0, 0), c(0.5, 0.25));
    }

    #[test]
    fn pgm_and_csv_layout() {
        let exp = FunctionModel::exponential();
        let w = Window::square(c(0.0, 0.0), 2.0).unwrap();
        let g = classify_grid(&exp, w, (3, 2), 10, 100.0, 10.0).unwrap();
        let mut pgm = Vec::new();
        g.write_pgm(&mut pgm).unwrap();
        assert!(pgm.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(pgm.len(), b"P5\n3 2\n255\n".len() + 6);
        let mut csv = Vec::new();
        g.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().next(), Some("i,j,re,im,status,escape_step,stayed_above_R"));
        assert_eq!(text.lines().count(), 7);
    }
}
