//! Axis-aligned cubes `Q(x, r)` (side `2r`) and enumerable cube families.

use super::{Grid, ALIGN_TOL};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Open axis-aligned cube centered at `center` with half-side `r` (side `2r`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub center: Vec<f64>,
    pub half_side: f64,
}

impl Cube {
    pub fn new(center: Vec<f64>, half_side: f64) -> Self {
        Cube { center, half_side }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Geometric measure `(2r)^dim`.
    ///
    /// For lattice-aligned cubes the norms use the discrete measure
    /// (cell count x cell measure) instead; see [`AlignedCube::discrete_measure`].
    pub fn measure(&self) -> f64 {
        (2.0 * self.half_side).powi(self.dim() as i32)
    }

    /// Whether the midpoint `x` lies in the closed cube.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.center
            .iter()
            .zip(x)
            .all(|(c, xi)| (xi - c).abs() <= self.half_side)
    }

    /// Resolve this cube against the lattice, requiring its faces to lie on
    /// cell boundaries and the whole cube to sit inside the domain box.
    pub fn aligned(&self, grid: &Grid) -> Result<AlignedCube> {
        if self.dim() != grid.dim() {
            return Err(Error::GridMismatch(format!(
                "cube dim {} vs grid dim {}",
                self.dim(),
                grid.dim()
            )));
        }
        if !(self.half_side > 0.0) {
            return Err(Error::InvalidParams(format!(
                "cube half-side must be positive, got {}",
                self.half_side
            )));
        }
        let h = grid.cell_side();
        let w = 2.0 * self.half_side / h;
        let cells = w.round();
        if (w - cells).abs() > ALIGN_TOL || cells < 1.0 {
            return Err(Error::UnalignedCube(format!(
                "side {} is {} cells, not a whole number >= 1",
                2.0 * self.half_side,
                w
            )));
        }
        let cells = cells as usize;
        let mut start = [0usize; 2];
        for a in 0..grid.dim() {
            let lo = self.center[a] - self.half_side;
            let s = (lo - grid.box_min()[a]) / h;
            let si = s.round();
            if (s - si).abs() > ALIGN_TOL {
                return Err(Error::UnalignedCube(format!(
                    "low face on axis {a} at {lo} is not on a cell boundary"
                )));
            }
            if si < -0.5 || (si as usize) + cells > grid.resolution()[a] {
                return Err(Error::OutsideDomain(format!(
                    "cube [{} cells from offset {}] exceeds axis {a} of the domain",
                    cells, si
                )));
            }
            start[a] = si as usize;
        }
        Ok(AlignedCube { start, cells })
    }

    /// Snap the center to the nearest lattice-compatible position, keeping
    /// the size (in cells) fixed. Used where an exact offset is irrational.
    pub fn snap_to(&self, grid: &Grid) -> Result<Cube> {
        let h = grid.cell_side();
        let cells = (2.0 * self.half_side / h).round().max(1.0);
        let half = 0.5 * cells * h;
        let parity = 0.5 * (cells as usize % 2) as f64;
        let mut center = Vec::with_capacity(self.dim());
        for a in 0..self.dim() {
            // centers of k-cell cubes sit on the lattice shifted by k/2 cells
            let t = (self.center[a] - grid.box_min()[a]) / h - parity;
            let c = grid.box_min()[a] + (t.round() + parity) * h;
            center.push(c);
        }
        let snapped = Cube::new(center, half);
        snapped.aligned(grid)?;
        Ok(snapped)
    }
}

/// A cube resolved to lattice cells: equal extent `cells` on each axis,
/// starting at cell `start[a]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignedCube {
    pub start: [usize; 2],
    pub cells: usize,
}

impl AlignedCube {
    /// Number of lattice cells covered.
    pub fn cell_count(&self, grid: &Grid) -> usize {
        self.cells.pow(grid.dim() as u32)
    }

    /// Discrete measure: cell count x cell measure.
    pub fn discrete_measure(&self, grid: &Grid) -> f64 {
        self.cell_count(grid) as f64 * grid.cell_measure()
    }

    /// Flat indices of the covered cells, in row-major order.
    pub fn flat_indices<'g>(&self, grid: &'g Grid) -> impl Iterator<Item = usize> + 'g {
        let start = self.start;
        let cells = self.cells;
        let dim = grid.dim();
        let nx = grid.resolution()[0];
        (0..if dim == 1 { 1 } else { cells }).flat_map(move |dy| {
            let row = if dim == 1 { 0 } else { (start[1] + dy) * nx };
            (0..cells).map(move |dx| row + start[0] + dx)
        })
    }
}

/// How a family of cubes is enumerated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FamilyPolicy {
    /// Every lattice-aligned square window: O(N^2) in 1D, O(N^3) in 2D.
    AllAligned,
    /// Windows of side 1, 2, 4, ... cells at offsets that are multiples of
    /// the side.
    Dyadic,
    /// Exactly `count` aligned cubes drawn from a seeded generator.
    Sampled { seed: u64, count: usize },
}

/// A reproducible family of lattice-aligned cubes inside the domain box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeFamily {
    pub policy: FamilyPolicy,
    pub include_full_domain: bool,
}

impl CubeFamily {
    pub fn all_aligned() -> Self {
        CubeFamily {
            policy: FamilyPolicy::AllAligned,
            include_full_domain: true,
        }
    }

    pub fn dyadic() -> Self {
        CubeFamily {
            policy: FamilyPolicy::Dyadic,
            include_full_domain: true,
        }
    }

    pub fn sampled(seed: u64, count: usize) -> Self {
        CubeFamily {
            policy: FamilyPolicy::Sampled { seed, count },
            include_full_domain: true,
        }
    }

    pub fn without_full_domain(mut self) -> Self {
        self.include_full_domain = false;
        self
    }
}

fn cube_from_cells(grid: &Grid, start: &[usize], cells: usize) -> Cube {
    let h = grid.cell_side();
    let half = 0.5 * cells as f64 * h;
    let center: Vec<f64> = (0..grid.dim())
        .map(|a| grid.box_min()[a] + start[a] as f64 * h + half)
        .collect();
    Cube::new(center, half)
}

/// Enumerate the cubes of `family` on `grid`, in a deterministic order.
pub fn enumerate_cubes(grid: &Grid, family: &CubeFamily) -> Result<Vec<Cube>> {
    let mut cubes = Vec::new();
    if family.include_full_domain {
        cubes.push(grid.full_box_cube()?);
    }
    let res = grid.resolution();
    let max_len = *res.iter().min().expect("grid has at least one axis");
    match &family.policy {
        FamilyPolicy::AllAligned => {
            for len in 1..=max_len {
                match grid.dim() {
                    1 => {
                        for off in 0..=(res[0] - len) {
                            cubes.push(cube_from_cells(grid, &[off], len));
                        }
                    }
                    _ => {
                        for oy in 0..=(res[1] - len) {
                            for ox in 0..=(res[0] - len) {
                                cubes.push(cube_from_cells(grid, &[ox, oy], len));
                            }
                        }
                    }
                }
            }
        }
        FamilyPolicy::Dyadic => {
            let mut len = 1usize;
            while len <= max_len {
                match grid.dim() {
                    1 => {
                        for k in 0..res[0] / len {
                            cubes.push(cube_from_cells(grid, &[k * len], len));
                        }
                    }
                    _ => {
                        for ky in 0..res[1] / len {
                            for kx in 0..res[0] / len {
                                cubes.push(cube_from_cells(grid, &[kx * len, ky * len], len));
                            }
                        }
                    }
                }
                len *= 2;
            }
        }
        FamilyPolicy::Sampled { seed, count } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for _ in 0..*count {
                let len = rng.gen_range(1..=max_len);
                let mut start = [0usize; 2];
                for (a, s) in start.iter_mut().enumerate().take(grid.dim()) {
                    *s = rng.gen_range(0..=(res[a] - len));
                }
                cubes.push(cube_from_cells(grid, &start[..grid.dim()], len));
            }
        }
    }
    Ok(cubes)
}
