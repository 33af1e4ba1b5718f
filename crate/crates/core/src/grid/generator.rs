//! Canonical sample functions: indicators, power laws, log, sign, and seeded
//! random steps. These span the extremal functions the function spaces in
//! this crate are built around.

use super::{Cube, Grid, GridFunction};
use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Generator {
    /// Indicator of a closed cube (which must sit inside the domain box).
    Indicator { cube: Cube },
    /// `|x|^(-beta)`, `beta >= 0`. With `cap_radius = Some(rho)` the values
    /// inside `|x| < rho` are clamped to `rho^(-beta)`.
    PowerNeg { beta: f64, cap_radius: Option<f64> },
    /// `|x|^alpha`, `0 < alpha < 1`.
    PowerPos { alpha: f64 },
    /// `log |x|`.
    LogAbs,
    /// `sgn(x_1)`.
    Sign,
    /// Sum of `pieces` seeded random indicator bumps with random heights.
    RandomStep { seed: u64, pieces: usize },
    Constant { re: f64, im: f64 },
}

fn radius(x: &[f64; 2], dim: usize) -> f64 {
    if dim == 1 {
        x[0].abs()
    } else {
        x[0].hypot(x[1])
    }
}

impl Generator {
    pub(crate) fn sample(&self, grid: &Grid) -> Result<GridFunction> {
        let n = grid.num_cells();
        let mut values = vec![Complex64::new(0.0, 0.0); n];
        match self {
            Generator::Indicator { cube } => {
                if cube.dim() != grid.dim() {
                    return Err(Error::GridMismatch(format!(
                        "indicator cube dim {} vs grid dim {}",
                        cube.dim(),
                        grid.dim()
                    )));
                }
                for a in 0..grid.dim() {
                    if cube.center[a] - cube.half_side < grid.box_min()[a] - 1e-12
                        || cube.center[a] + cube.half_side > grid.box_max()[a] + 1e-12
                    {
                        return Err(Error::OutsideDomain(format!(
                            "indicator cube exceeds the domain on axis {a}"
                        )));
                    }
                }
                for (i, v) in values.iter_mut().enumerate() {
                    let x = grid.midpoint(i);
                    if cube.contains(&x[..grid.dim()]) {
                        *v = Complex64::new(1.0, 0.0);
                    }
                }
            }
            Generator::PowerNeg { beta, cap_radius } => {
                if !(*beta >= 0.0) {
                    return Err(Error::InvalidParams(format!(
                        "negative-power exponent must satisfy beta >= 0, got {beta}"
                    )));
                }
                if let Some(rho) = cap_radius {
                    if !(*rho > 0.0) {
                        return Err(Error::InvalidParams(format!(
                            "cap radius must be positive, got {rho}"
                        )));
                    }
                }
                for (i, v) in values.iter_mut().enumerate() {
                    let mut r = radius(&grid.midpoint(i), grid.dim());
                    if let Some(rho) = cap_radius {
                        r = r.max(*rho);
                    }
                    if r == 0.0 && *beta > 0.0 {
                        return Err(Error::SingularSample(format!(
                            "|x|^(-{beta}) sampled at the origin (cell {i}); offset the box so \
                             no midpoint hits 0, or set a cap radius"
                        )));
                    }
                    *v = Complex64::new(r.powf(-beta), 0.0);
                }
            }
            Generator::PowerPos { alpha } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(Error::InvalidParams(format!(
                        "Holder exponent must lie in (0,1), got {alpha}"
                    )));
                }
                for (i, v) in values.iter_mut().enumerate() {
                    let r = radius(&grid.midpoint(i), grid.dim());
                    *v = Complex64::new(r.powf(*alpha), 0.0);
                }
            }
            Generator::LogAbs => {
                for (i, v) in values.iter_mut().enumerate() {
                    let r = radius(&grid.midpoint(i), grid.dim());
                    if r == 0.0 {
                        return Err(Error::SingularSample(format!(
                            "log|x| sampled at the origin (cell {i})"
                        )));
                    }
                    *v = Complex64::new(r.ln(), 0.0);
                }
            }
            Generator::Sign => {
                for (i, v) in values.iter_mut().enumerate() {
                    *v = Complex64::new(grid.midpoint(i)[0].signum(), 0.0);
                }
            }
            Generator::RandomStep { seed, pieces } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let max_len = *grid.resolution().iter().min().unwrap();
                for _ in 0..*pieces {
                    let len = rng.gen_range(1..=max_len);
                    let mut start = [0usize; 2];
                    for (a, s) in start.iter_mut().enumerate().take(grid.dim()) {
                        *s = rng.gen_range(0..=(grid.resolution()[a] - len));
                    }
                    let height = rng.gen_range(-1.0..1.0f64);
                    let nx = grid.resolution()[0];
                    match grid.dim() {
                        1 => {
                            for i in start[0]..start[0] + len {
                                values[i].re += height;
                            }
                        }
                        _ => {
                            for iy in start[1]..start[1] + len {
                                for ix in start[0]..start[0] + len {
                                    values[ix + iy * nx].re += height;
                                }
                            }
                        }
                    }
                }
            }
            Generator::Constant { re, im } => {
                values.fill(Complex64::new(*re, *im));
            }
        }
        GridFunction::from_values(grid.clone(), values)
    }
}
