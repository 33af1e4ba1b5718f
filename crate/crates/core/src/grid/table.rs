//! Summed tables (integral images) for O(1) window integrals.
//!
//! A window integral is recovered as a difference of prefix sums; storing the
//! prefixes in double-double keeps that difference within 1e-12 *relative to
//! the window*, even when the window carries a tiny fraction of the total
//! mass. The same machinery backs the signed [`MeanTable`] used for cube
//! averages `b_Q`.

use super::{AlignedCube, Cube, Grid, GridFunction};
use crate::error::{Error, Result};
use crate::sum::Dd;

/// Prefix sums of `|f|^q * cell_measure` over the lattice.
#[derive(Debug, Clone)]
pub struct SummedTable {
    grid: Grid,
    exponent: f64,
    prefix: Vec<Dd>,
}

/// Prefix sums of an arbitrary per-cell quantity.
fn build_prefix(grid: &Grid, cell: impl Fn(usize) -> f64) -> Vec<Dd> {
    match grid.dim() {
        1 => {
            let n = grid.resolution()[0];
            let mut prefix = Vec::with_capacity(n + 1);
            let mut acc = Dd::ZERO;
            prefix.push(acc);
            for i in 0..n {
                acc = acc.add_f64(cell(i));
                prefix.push(acc);
            }
            prefix
        }
        _ => {
            let (nx, ny) = (grid.resolution()[0], grid.resolution()[1]);
            // prefix[x + y*(nx+1)] = sum over cells with ix < x, iy < y
            let mut prefix = vec![Dd::ZERO; (nx + 1) * (ny + 1)];
            for iy in 0..ny {
                let mut row = Dd::ZERO;
                for ix in 0..nx {
                    row = row.add_f64(cell(ix + iy * nx));
                    let above = prefix[(ix + 1) + iy * (nx + 1)];
                    prefix[(ix + 1) + (iy + 1) * (nx + 1)] = above.add(row);
                }
            }
            prefix
        }
    }
}

fn window_sum(grid: &Grid, prefix: &[Dd], ac: &AlignedCube) -> f64 {
    match grid.dim() {
        1 => {
            let s = ac.start[0];
            prefix[s + ac.cells].sub(prefix[s]).to_f64()
        }
        _ => {
            let nx1 = grid.resolution()[0] + 1;
            let (x0, y0) = (ac.start[0], ac.start[1]);
            let (x1, y1) = (x0 + ac.cells, y0 + ac.cells);
            let a = prefix[x1 + y1 * nx1];
            let b = prefix[x1 + y0 * nx1];
            let c = prefix[x0 + y1 * nx1];
            let d = prefix[x0 + y0 * nx1];
            a.sub(b).sub(c).add(d).to_f64()
        }
    }
}

impl SummedTable {
    /// Build the table of `|f|^q * cell_measure`, `q >= 1`.
    pub fn new(f: &GridFunction, exponent: f64) -> Result<Self> {
        if !(exponent >= 1.0) {
            return Err(Error::InvalidParams(format!(
                "summed-table exponent must be >= 1, got {exponent}"
            )));
        }
        let grid = f.grid().clone();
        let cm = grid.cell_measure();
        let vals = f.values();
        let prefix = build_prefix(&grid, |i| vals[i].norm().powf(exponent) * cm);
        Ok(SummedTable {
            grid,
            exponent,
            prefix,
        })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `sum over cells of Q of |f|^q * cell_measure` for an aligned cube.
    pub fn query(&self, cube: &Cube) -> Result<f64> {
        let ac = cube.aligned(&self.grid)?;
        Ok(self.query_aligned(&ac))
    }

    pub fn query_aligned(&self, ac: &AlignedCube) -> f64 {
        window_sum(&self.grid, &self.prefix, ac)
    }
}

/// Prefix sums of the signed real part times cell measure; gives cube means.
#[derive(Debug, Clone)]
pub struct MeanTable {
    grid: Grid,
    prefix: Vec<Dd>,
}

impl MeanTable {
    pub fn new(b: &GridFunction) -> Result<Self> {
        let vals = b.real_values()?;
        let grid = b.grid().clone();
        let cm = grid.cell_measure();
        let prefix = build_prefix(&grid, |i| vals[i] * cm);
        Ok(MeanTable { grid, prefix })
    }

    /// Average of `b` over an aligned cube, weighted like every other
    /// integral in the crate (midpoint values x cell measure).
    pub fn mean_aligned(&self, ac: &AlignedCube) -> f64 {
        window_sum(&self.grid, &self.prefix, ac) / ac.discrete_measure(&self.grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{enumerate_cubes, CubeFamily, Generator};
    use crate::sum::csum;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct-summation oracle the table must reproduce.
    fn direct_window(f: &GridFunction, q: f64, cube: &Cube) -> f64 {
        let ac = cube.aligned(f.grid()).unwrap();
        let cm = f.grid().cell_measure();
        csum(
            ac.flat_indices(f.grid())
                .map(|i| f.value(i).norm().powf(q) * cm),
        )
    }

    #[test]
    fn constant_window_integral() {
        let g = Grid::new_1d(-2.0, 2.0, 400).unwrap();
        let f = GridFunction::from_values(g.clone(), vec![Complex64::new(1.0, 0.0); 400]).unwrap();
        let t = SummedTable::new(&f, 2.0).unwrap();
        let q = Cube::new(vec![0.0], 1.0); // measure 2
        assert!((t.query(&q).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn indicator_full_box_integral() {
        let g = Grid::new_1d(-2.0, 2.0, 400).unwrap();
        let f = GridFunction::sample(
            &g,
            &Generator::Indicator {
                cube: Cube::new(vec![0.0], 1.0),
            },
        )
        .unwrap();
        let t = SummedTable::new(&f, 1.0).unwrap();
        let full = g.full_box_cube().unwrap();
        assert!((t.query(&full).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn random_windows_match_direct_sum_1d() {
        let g = Grid::new_1d(-2.0, 2.0, 257).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let vals: Vec<Complex64> = (0..257)
            .map(|_| Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let f = GridFunction::from_values(g.clone(), vals).unwrap();
        for q in [1.0, 1.5, 2.0] {
            let t = SummedTable::new(&f, q).unwrap();
            for cube in enumerate_cubes(&g, &CubeFamily::sampled(5, 200)).unwrap() {
                let direct = direct_window(&f, q, &cube);
                let fast = t.query(&cube).unwrap();
                let scale = direct.abs().max(1e-300);
                assert!(
                    (fast - direct).abs() <= 1e-12 * scale,
                    "q={q} cube={cube:?}: {fast} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn random_windows_match_direct_sum_2d() {
        let g = Grid::new_2d([-1.0, -1.0], [1.0, 1.0], [48, 48]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let vals: Vec<Complex64> = (0..48 * 48)
            .map(|_| Complex64::new(rng.gen_range(0.0..5.0), 0.0))
            .collect();
        let f = GridFunction::from_values(g.clone(), vals).unwrap();
        let t = SummedTable::new(&f, 1.5).unwrap();
        for cube in enumerate_cubes(&g, &CubeFamily::sampled(9, 150)).unwrap() {
            let direct = direct_window(&f, 1.5, &cube);
            let fast = t.query(&cube).unwrap();
            assert!((fast - direct).abs() <= 1e-12 * direct.abs().max(1e-300));
        }
    }

    #[test]
    fn tiny_window_inside_huge_mass_stays_relative() {
        // A 1-cell window of mass ~1e-9 sitting next to cells of mass ~1e6.
        let g = Grid::new_1d(0.0, 1.0, 100).unwrap();
        let mut vals = vec![Complex64::new(1e8, 0.0); 100];
        vals[50] = Complex64::new(1e-7, 0.0);
        let f = GridFunction::from_values(g.clone(), vals).unwrap();
        let t = SummedTable::new(&f, 1.0).unwrap();
        let h = g.cell_side();
        let cube = Cube::new(vec![0.5 + 0.5 * h], 0.5 * h);
        let got = t.query(&cube).unwrap();
        let want = 1e-7 * g.cell_measure();
        assert!((got - want).abs() <= 1e-12 * want, "{got} vs {want}");
    }

    #[test]
    fn mean_table_matches_direct_mean() {
        let g = Grid::new_2d([-1.0, -1.0], [1.0, 1.0], [32, 32]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vals: Vec<Complex64> = (0..32 * 32)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), 0.0))
            .collect();
        let b = GridFunction::from_values(g.clone(), vals).unwrap();
        let t = MeanTable::new(&b).unwrap();
        let cube = Cube::new(vec![0.25, -0.25], 0.25);
        let ac = cube.aligned(&g).unwrap();
        let direct = b.real_mean_over(&ac);
        assert!((t.mean_aligned(&ac) - direct).abs() < 1e-14);
    }
}
