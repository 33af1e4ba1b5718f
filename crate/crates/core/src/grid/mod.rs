//! Uniform lattices over a bounded box, grid functions, cubes and cube
//! families, and summed tables for O(1) window integrals.
//!
//! Functions live on a bounded box rather than all of `R^n`; every supremum
//! over cubes elsewhere in the crate becomes a maximum over a lattice-aligned
//! [`CubeFamily`]. Samples sit at cell midpoints, so generators with a point
//! singularity stay finite as long as the singularity falls between sample
//! points (the constructors reject it otherwise).

mod cube;
mod generator;
mod io;
mod table;

pub use cube::{enumerate_cubes, AlignedCube, Cube, CubeFamily, FamilyPolicy};
pub use generator::Generator;
pub use table::{MeanTable, SummedTable};

use crate::error::{Error, Result};
use crate::sum::csum;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Relative slack used when testing whether a coordinate lies on the lattice.
pub(crate) const ALIGN_TOL: f64 = 1e-9;

/// Uniform lattice over `[box_min, box_max]`, n in {1, 2}.
///
/// The cell side must come out identical on every axis; the constructor
/// rejects boxes/resolutions that would make it anisotropic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    box_min: Vec<f64>,
    box_max: Vec<f64>,
    resolution: Vec<usize>,
    cell_side: f64,
}

impl Grid {
    pub fn new(
        dim: usize,
        box_min: Vec<f64>,
        box_max: Vec<f64>,
        resolution: Vec<usize>,
    ) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if box_min.len() != dim || box_max.len() != dim || resolution.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "expected {dim} components for box_min/box_max/resolution, got {}/{}/{}",
                box_min.len(),
                box_max.len(),
                resolution.len()
            )));
        }
        for a in 0..dim {
            if !box_min[a].is_finite() || !box_max[a].is_finite() || box_max[a] <= box_min[a] {
                return Err(Error::InvalidGrid(format!(
                    "degenerate box on axis {a}: [{}, {}]",
                    box_min[a], box_max[a]
                )));
            }
            if resolution[a] < 2 {
                return Err(Error::InvalidGrid(format!(
                    "resolution must be >= 2 per axis, got {} on axis {a}",
                    resolution[a]
                )));
            }
        }
        let side0 = (box_max[0] - box_min[0]) / resolution[0] as f64;
        for a in 1..dim {
            let side = (box_max[a] - box_min[a]) / resolution[a] as f64;
            if (side - side0).abs() > ALIGN_TOL * side0 {
                return Err(Error::InvalidGrid(format!(
                    "cell side must be uniform across axes: axis 0 gives {side0}, axis {a} gives {side}; \
                     adjust the box or the per-axis resolution"
                )));
            }
        }
        Ok(Grid {
            dim,
            box_min,
            box_max,
            resolution,
            cell_side: side0,
        })
    }

    /// 1D grid over `[lo, hi]` with `n` cells.
    pub fn new_1d(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Grid::new(1, vec![lo], vec![hi], vec![n])
    }

    /// 2D grid over the product box with `(nx, ny)` cells.
    pub fn new_2d(min: [f64; 2], max: [f64; 2], res: [usize; 2]) -> Result<Self> {
        Grid::new(2, min.to_vec(), max.to_vec(), res.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn box_min(&self) -> &[f64] {
        &self.box_min
    }

    pub fn box_max(&self) -> &[f64] {
        &self.box_max
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn cell_side(&self) -> f64 {
        self.cell_side
    }

    pub fn cell_measure(&self) -> f64 {
        self.cell_side.powi(self.dim as i32)
    }

    pub fn num_cells(&self) -> usize {
        self.resolution.iter().product()
    }

    /// Midpoint coordinate of cell `i` along `axis`.
    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.box_min[axis] + (i as f64 + 0.5) * self.cell_side
    }

    /// Midpoints along one axis.
    pub fn axis_midpoints(&self, axis: usize) -> Vec<f64> {
        (0..self.resolution[axis]).map(|i| self.coord(axis, i)).collect()
    }

    /// Flat index of a cell; x varies fastest in 2D.
    #[inline]
    pub fn flat_index(&self, ix: usize, iy: usize) -> usize {
        ix + iy * self.resolution[0]
    }

    /// Midpoint of the cell with the given flat index, padded to two entries.
    #[inline]
    pub fn midpoint(&self, flat: usize) -> [f64; 2] {
        match self.dim {
            1 => [self.coord(0, flat), 0.0],
            _ => {
                let nx = self.resolution[0];
                [self.coord(0, flat % nx), self.coord(1, flat / nx)]
            }
        }
    }

    /// Whether the domain box is itself a cube (always true in 1D).
    pub fn box_is_cube(&self) -> bool {
        self.dim == 1 || self.resolution.windows(2).all(|w| w[0] == w[1])
    }

    /// Same box, `factor` times the resolution per axis.
    pub fn refine(&self, factor: usize) -> Result<Grid> {
        Grid::new(
            self.dim,
            self.box_min.clone(),
            self.box_max.clone(),
            self.resolution.iter().map(|r| r * factor).collect(),
        )
    }

    /// The whole domain as a `Cube`, for families that must contain it.
    pub fn full_box_cube(&self) -> Result<Cube> {
        if !self.box_is_cube() {
            return Err(Error::InvalidGrid(
                "domain box is not a cube; cannot form the full-domain cube".into(),
            ));
        }
        let center: Vec<f64> = (0..self.dim)
            .map(|a| 0.5 * (self.box_min[a] + self.box_max[a]))
            .collect();
        let half = 0.5 * (self.box_max[0] - self.box_min[0]);
        Ok(Cube::new(center, half))
    }
}

/// Complex-valued samples at the cell midpoints of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn from_values(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.num_cells() {
            return Err(Error::InvalidGrid(format!(
                "value count {} does not match cell count {}",
                values.len(),
                grid.num_cells()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite(format!("value at cell {i} is not finite")));
        }
        Ok(GridFunction { grid, values })
    }

    /// Sample `generator` at every cell midpoint. See [`Generator`].
    pub fn sample(grid: &Grid, generator: &Generator) -> Result<Self> {
        generator.sample(grid)
    }

    pub fn zero(grid: &Grid) -> Self {
        GridFunction {
            grid: grid.clone(),
            values: vec![Complex64::new(0.0, 0.0); grid.num_cells()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn value(&self, flat: usize) -> Complex64 {
        self.values[flat]
    }

    /// True when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    /// Real parts, rejecting functions with any nonzero imaginary part.
    pub fn real_values(&self) -> Result<Vec<f64>> {
        if !self.is_real() {
            return Err(Error::ComplexInput(
                "function has nonzero imaginary parts".into(),
            ));
        }
        Ok(self.values.iter().map(|v| v.re).collect())
    }

    /// Pointwise modulus as a real grid function.
    pub fn modulus(&self) -> GridFunction {
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| Complex64::new(v.norm(), 0.0)).collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> GridFunction {
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Pointwise product, used to form `b·f` before applying an operator.
    pub fn pointwise_mul(&self, other: &GridFunction) -> Result<GridFunction> {
        self.check_same_grid(other)?;
        Ok(GridFunction {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.check_same_grid(other)?;
        Ok(GridFunction {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(
                "operands live on different grids".into(),
            ));
        }
        Ok(())
    }

    /// `sum_i f_i * cell_measure`, compensated.
    pub fn integral(&self) -> Complex64 {
        let cm = self.grid.cell_measure();
        crate::sum::csum_complex(self.values.iter().map(|v| v * cm))
    }

    /// Mean of the real parts over an aligned cube.
    pub fn real_mean_over(&self, cells: &AlignedCube) -> f64 {
        let cm = self.grid.cell_measure();
        let total = csum(cells.flat_indices(&self.grid).map(|i| self.values[i].re * cm));
        total / cells.discrete_measure(&self.grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_1d_cell_side_and_measure() {
        let g = Grid::new_1d(-2.0, 2.0, 400).unwrap();
        assert!((g.cell_side() - 0.01).abs() < 1e-15);
        assert!((g.cell_measure() - 0.01).abs() < 1e-15);
        assert_eq!(g.num_cells(), 400);
    }

    #[test]
    fn grid_2d_cell_side_and_measure() {
        let g = Grid::new_2d([-1.0, -1.0], [1.0, 1.0], [100, 100]).unwrap();
        assert!((g.cell_side() - 0.02).abs() < 1e-15);
        assert!((g.cell_measure() - 4e-4).abs() < 1e-18);
    }

    #[test]
    fn grid_rejects_resolution_below_two() {
        assert!(Grid::new_1d(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn grid_rejects_anisotropic_cells() {
        let err = Grid::new_2d([0.0, 0.0], [1.0, 2.0], [100, 100]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("uniform"), "unexpected message: {msg}");
    }

    #[test]
    fn grid_rejects_degenerate_box() {
        assert!(Grid::new_1d(1.0, 1.0, 10).is_err());
        assert!(Grid::new_1d(2.0, 1.0, 10).is_err());
    }

    #[test]
    fn midpoints_are_centered() {
        let g = Grid::new_1d(0.0, 1.0, 4).unwrap();
        assert_eq!(g.axis_midpoints(0), vec![0.125, 0.375, 0.625, 0.875]);
    }

    #[test]
    fn from_values_rejects_nan() {
        let g = Grid::new_1d(0.0, 1.0, 2).unwrap();
        let vals = vec![Complex64::new(f64::NAN, 0.0), Complex64::new(0.0, 0.0)];
        assert!(GridFunction::from_values(g, vals).is_err());
    }
}
