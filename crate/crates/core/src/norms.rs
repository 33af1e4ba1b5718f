//! The six norms/seminorms, exactly on the discrete measure.
//!
//! Strong norms are compensated power sums; weak norms take the exact
//! discrete supremum over order statistics, `max_v v * (measure{|f| >= v})^(1/q)`
//! over the distinct sample moduli `v`, which is where the supremum
//! `sup_λ λ * measure{|f| > λ}^(1/q)` of a step distribution function is
//! attained (as `λ` increases to `v`). This keeps Chebyshev and the
//! weak-to-strong embedding exact rather than approximate.
//!
//! Sup-over-cubes norms take a [`CubeFamily`]; the full-domain member makes
//! `M^p_p = L^p` and `WM^p_p = L^{p,∞}` identities exact.

use crate::error::{Error, Result};
use crate::grid::{enumerate_cubes, AlignedCube, Cube, CubeFamily, Grid, GridFunction, MeanTable, SummedTable};
use crate::sum::csum;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Tolerance on the exponent relations `1/s = 1/p − α/n` etc.
pub const RELATION_TOL: f64 = 1e-12;

/// Exponent bundle with the validity constraints used across the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub p: f64,
    pub q: f64,
    pub alpha: Option<f64>,
}

impl NormParams {
    /// Morrey-family exponents: `1 <= q <= p < infinity`.
    pub fn morrey(p: f64, q: f64) -> Result<Self> {
        if !(1.0 <= q && q <= p && p.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "Morrey exponents need 1 <= q <= p < inf, got q={q}, p={p}"
            )));
        }
        Ok(NormParams { p, q, alpha: None })
    }

    /// Lebesgue exponent `p >= 1` (the `q = p` corner of the family).
    pub fn lebesgue(p: f64) -> Result<Self> {
        Self::morrey(p, p)
    }

    /// Fractional-integration source/target pair: given `(p, q, alpha)` in
    /// dimension `n`, returns `(s, t)` with `1/s = 1/p - alpha/n` and
    /// `1/t = 1/q - alpha/n`, rejecting inadmissible combinations.
    pub fn fractional_targets(p: f64, q: f64, alpha: f64, dim: usize) -> Result<(f64, f64)> {
        let n = dim as f64;
        if !(alpha > 0.0 && alpha < n) {
            return Err(Error::InvalidParams(format!(
                "need 0 < alpha < n, got alpha={alpha}, n={n}"
            )));
        }
        let inv_s = 1.0 / p - alpha / n;
        let inv_t = 1.0 / q - alpha / n;
        if inv_s <= 0.0 || inv_t <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "target exponents diverge: 1/s={inv_s}, 1/t={inv_t} (need p, q < n/alpha)"
            )));
        }
        Ok((1.0 / inv_s, 1.0 / inv_t))
    }

    /// Check `l/s = q/p` to the relation tolerance.
    pub fn check_adams_relation(p: f64, q: f64, s: f64, l: f64) -> Result<()> {
        if (l / s - q / p).abs() > RELATION_TOL {
            return Err(Error::InvalidParams(format!(
                "relation l/s = q/p violated: {} vs {}",
                l / s,
                q / p
            )));
        }
        Ok(())
    }
}

/// Step distribution function of `|f|` restricted to a cube: sorted
/// descending distinct moduli with cumulative cell counts.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionFunction {
    /// Distinct nonzero moduli, descending.
    values: Vec<f64>,
    /// `counts[k]` = number of cells with `|f| >= values[k]`.
    counts: Vec<usize>,
    cell_measure: f64,
}

impl DistributionFunction {
    fn from_moduli(mut moduli: Vec<f64>, cell_measure: f64) -> Self {
        moduli.sort_by(|a, b| b.partial_cmp(a).expect("finite moduli"));
        let mut values = Vec::new();
        let mut counts = Vec::new();
        for (i, &v) in moduli.iter().enumerate() {
            if v <= 0.0 {
                break;
            }
            if values.last() != Some(&v) {
                values.push(v);
                counts.push(i + 1);
            } else {
                *counts.last_mut().unwrap() = i + 1;
            }
        }
        DistributionFunction {
            values,
            counts,
            cell_measure,
        }
    }

    /// Right-continuous `measure{|f| > lambda}`.
    pub fn measure_above(&self, lambda: f64) -> f64 {
        // first index with values[k] <= lambda; all before it are > lambda
        let k = self.values.partition_point(|&v| v > lambda);
        if k == 0 {
            0.0
        } else {
            self.counts[k - 1] as f64 * self.cell_measure
        }
    }

    /// Distinct nonzero moduli, descending.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Cumulative cell counts aligned with `values()`.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn cell_measure(&self) -> f64 {
        self.cell_measure
    }

    /// Exact discrete `sup_λ λ measure{|f|>λ}^{1/q}`, attained as λ
    /// increases to each distinct modulus `v`.
    ///
    /// Each candidate is computed as `(k * (v^q * cm))^{1/q}` — the same
    /// expression shape as the strong norm's power sum — so that windows
    /// where Chebyshev is an equality (constant or indicator windows) give
    /// the bit-identical value rather than an up-rounded one.
    pub fn weak_functional(&self, q: f64) -> f64 {
        let inv_q = 1.0 / q;
        let mut best = 0.0f64;
        for (v, &k) in self.values.iter().zip(&self.counts) {
            let term = v.powf(q) * self.cell_measure;
            let cand = (k as f64 * term).powf(inv_q);
            best = best.max(cand);
        }
        best
    }
}

fn cube_moduli(f: &GridFunction, ac: &AlignedCube) -> Vec<f64> {
    ac.flat_indices(f.grid()).map(|i| f.value(i).norm()).collect()
}

/// Exact step distribution function of `|f|` on an aligned cube.
pub fn distribution_function(f: &GridFunction, region: &Cube) -> Result<DistributionFunction> {
    let ac = region.aligned(f.grid())?;
    Ok(DistributionFunction::from_moduli(
        cube_moduli(f, &ac),
        f.grid().cell_measure(),
    ))
}

/// `(sum over Q of |f|^p * cell_measure)^(1/p)`.
pub fn lp_norm(f: &GridFunction, p: f64, region: &Cube) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParams(format!("need p >= 1, got {p}")));
    }
    let ac = region.aligned(f.grid())?;
    let cm = f.grid().cell_measure();
    let sum = csum(
        ac.flat_indices(f.grid())
            .map(|i| f.value(i).norm().powf(p) * cm),
    );
    Ok(sum.powf(1.0 / p))
}

/// Exact discrete weak-`L^p` functional over a cube.
pub fn weak_lp_norm(f: &GridFunction, p: f64, region: &Cube) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParams(format!("need p >= 1, got {p}")));
    }
    Ok(distribution_function(f, region)?.weak_functional(p))
}

fn weak_functional_of_cells(moduli: Vec<f64>, cm: f64, q: f64) -> f64 {
    DistributionFunction::from_moduli(moduli, cm).weak_functional(q)
}

/// Morrey scaling factor `|Q|^{1/p - 1/q}` on the discrete measure.
fn scaling(grid: &Grid, ac: &AlignedCube, p: f64, q: f64) -> f64 {
    ac.discrete_measure(grid).powf(1.0 / p - 1.0 / q)
}

fn max_over_family<F>(
    grid: &Grid,
    family: &CubeFamily,
    per_cube: F,
) -> Result<(f64, Option<Cube>)>
where
    F: Fn(&AlignedCube) -> f64 + Sync,
{
    let cubes = enumerate_cubes(grid, family)?;
    let aligned: Vec<(Cube, AlignedCube)> = cubes
        .into_iter()
        .map(|c| {
            let ac = c.aligned(grid)?;
            Ok((c, ac))
        })
        .collect::<Result<_>>()?;
    let best = aligned
        .par_iter()
        .map(|(c, ac)| (per_cube(ac), c))
        .reduce_with(|a, b| if b.0 > a.0 { b } else { a });
    match best {
        Some((v, c)) => Ok((v, Some(c.clone()))),
        None => Ok((0.0, None)),
    }
}

/// Morrey norm: `max over Q of |Q|^{1/p-1/q} (integral over Q of |f|^q)^{1/q}`,
/// with the winning cube as witness.
pub fn morrey_norm_with_witness(
    f: &GridFunction,
    params: &NormParams,
    family: &CubeFamily,
) -> Result<(f64, Option<Cube>)> {
    let (p, q) = (params.p, params.q);
    NormParams::morrey(p, q)?;
    let table = SummedTable::new(f, q)?;
    let grid = f.grid();
    max_over_family(grid, family, |ac| {
        scaling(grid, ac, p, q) * table.query_aligned(ac).powf(1.0 / q)
    })
}

pub fn morrey_norm(f: &GridFunction, params: &NormParams, family: &CubeFamily) -> Result<f64> {
    morrey_norm_with_witness(f, params, family).map(|(v, _)| v)
}

/// Weak Morrey norm: the Morrey scaling applied to the per-cube weak-`L^q`
/// functional.
pub fn weak_morrey_norm_with_witness(
    f: &GridFunction,
    params: &NormParams,
    family: &CubeFamily,
) -> Result<(f64, Option<Cube>)> {
    let (p, q) = (params.p, params.q);
    NormParams::morrey(p, q)?;
    let grid = f.grid();
    let cm = grid.cell_measure();
    max_over_family(grid, family, |ac| {
        scaling(grid, ac, p, q) * weak_functional_of_cells(cube_moduli(f, ac), cm, q)
    })
}

pub fn weak_morrey_norm(f: &GridFunction, params: &NormParams, family: &CubeFamily) -> Result<f64> {
    weak_morrey_norm_with_witness(f, params, family).map(|(v, _)| v)
}

/// Mean oscillation of `b` over one aligned cube: `(1/|Q|) sum |b - b_Q| cm`,
/// with `b_Q` computed from the same cell weights.
fn mean_oscillation(b: &GridFunction, vals: &[f64], means: &MeanTable, ac: &AlignedCube) -> f64 {
    let grid = b.grid();
    let b_q = means.mean_aligned(ac);
    let cm = grid.cell_measure();
    let total = csum(ac.flat_indices(grid).map(|i| (vals[i] - b_q).abs() * cm));
    total / ac.discrete_measure(grid)
}

/// BMO seminorm: `max over Q of (1/|Q|) integral over Q of |b - b_Q|`.
pub fn bmo_norm_with_witness(
    b: &GridFunction,
    family: &CubeFamily,
) -> Result<(f64, Option<Cube>)> {
    let vals = b.real_values()?;
    let means = MeanTable::new(b)?;
    max_over_family(b.grid(), family, |ac| mean_oscillation(b, &vals, &means, ac))
}

pub fn bmo_norm(b: &GridFunction, family: &CubeFamily) -> Result<f64> {
    bmo_norm_with_witness(b, family).map(|(v, _)| v)
}

/// Pair-enumeration cutoff for the difference-quotient Lipschitz seminorm:
/// all pairs up to this many cells, strided subsampling plus all adjacent
/// pairs beyond it. Adjacent pairs must always be present because short-range
/// quotients can attain the supremum.
pub const LIP_ALL_PAIRS_LIMIT: usize = 4096;

/// Difference-quotient Lipschitz seminorm
/// `max over sample pairs of |b(x)-b(y)| / |x-y|^alpha`.
pub fn lipschitz_norm_diff(b: &GridFunction, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParams(format!(
            "need 0 < alpha < 1, got {alpha}"
        )));
    }
    let vals = b.real_values()?;
    let grid = b.grid();
    let n = grid.num_cells();
    let mids: Vec<[f64; 2]> = (0..n).map(|i| grid.midpoint(i)).collect();
    let dim = grid.dim();

    let quotient = |i: usize, j: usize| -> f64 {
        let dx = mids[i][0] - mids[j][0];
        let dy = mids[i][1] - mids[j][1];
        let d = if dim == 1 { dx.abs() } else { dx.hypot(dy) };
        (vals[i] - vals[j]).abs() / d.powf(alpha)
    };

    let indices: Vec<usize> = if n <= LIP_ALL_PAIRS_LIMIT {
        (0..n).collect()
    } else {
        let stride = n.div_ceil(LIP_ALL_PAIRS_LIMIT / 2);
        (0..n).step_by(stride).collect()
    };

    let mut best = indices
        .par_iter()
        .map(|&i| {
            let mut m = 0.0f64;
            for &j in &indices {
                if j > i {
                    m = m.max(quotient(i, j));
                }
            }
            m
        })
        .reduce(|| 0.0, f64::max);

    if n > LIP_ALL_PAIRS_LIMIT {
        // adjacent pairs along each axis
        let nx = grid.resolution()[0];
        match dim {
            1 => {
                for i in 0..n - 1 {
                    best = best.max(quotient(i, i + 1));
                }
            }
            _ => {
                let ny = grid.resolution()[1];
                for iy in 0..ny {
                    for ix in 0..nx {
                        let i = ix + iy * nx;
                        if ix + 1 < nx {
                            best = best.max(quotient(i, i + 1));
                        }
                        if iy + 1 < ny {
                            best = best.max(quotient(i, i + nx));
                        }
                    }
                }
            }
        }
    }
    Ok(best)
}

/// Which oscillation functional characterizes the Lipschitz seminorm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OscForm {
    /// `sup_Q |Q|^{-1-alpha/n} integral over Q of |b - b_Q|`.
    Integral,
    /// `sup_Q |Q|^{-alpha/n} ((1/|Q|) integral of |b - b_Q|^q)^{1/q}`, `1 < q < inf`.
    PowerMean(f64),
    /// `sup_Q |Q|^{-alpha/n} max over Q of |b - b_Q|`.
    EssSup,
}

/// Oscillation-based Lipschitz seminorm in the selected form.
///
/// The power-mean form requires `q > 1`; requesting `q = 1` under it is
/// rejected because that case is the `Integral` form.
pub fn lipschitz_norm_osc(
    b: &GridFunction,
    alpha: f64,
    form: OscForm,
    family: &CubeFamily,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParams(format!(
            "need 0 < alpha < 1, got {alpha}"
        )));
    }
    if let OscForm::PowerMean(q) = form {
        if !(q > 1.0 && q.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "power-mean oscillation form needs 1 < q < inf, got {q}; \
                 q = 1 is the integral form and q = inf the essential-sup form"
            )));
        }
    }
    let vals = b.real_values()?;
    let means = MeanTable::new(b)?;
    let grid = b.grid();
    let n = grid.dim() as f64;
    let cm = grid.cell_measure();
    let (v, _) = max_over_family(grid, family, |ac| {
        let measure = ac.discrete_measure(grid);
        let b_q = means.mean_aligned(ac);
        match form {
            OscForm::Integral => {
                let total = csum(ac.flat_indices(grid).map(|i| (vals[i] - b_q).abs() * cm));
                measure.powf(-1.0 - alpha / n) * total
            }
            OscForm::PowerMean(q) => {
                let total = csum(
                    ac.flat_indices(grid)
                        .map(|i| (vals[i] - b_q).abs().powf(q) * cm),
                );
                measure.powf(-alpha / n) * (total / measure).powf(1.0 / q)
            }
            OscForm::EssSup => {
                let sup = ac
                    .flat_indices(grid)
                    .map(|i| (vals[i] - b_q).abs())
                    .fold(0.0, f64::max);
                measure.powf(-alpha / n) * sup
            }
        }
    })?;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Generator;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn indicator_on(g: &Grid) -> GridFunction {
        GridFunction::sample(
            g,
            &Generator::Indicator {
                cube: Cube::new(vec![0.0; g.dim()], 1.0),
            },
        )
        .unwrap()
    }

    fn random_real(g: &Grid, seed: u64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals = (0..g.num_cells())
            .map(|_| Complex64::new(rng.gen_range(-2.0..2.0), 0.0))
            .collect();
        GridFunction::from_values(g.clone(), vals).unwrap()
    }

    #[test]
    fn lp_of_indicator() {
        let g = Grid::new_1d(-2.0, 2.0, 400).unwrap();
        let f = indicator_on(&g);
        let full = g.full_box_cube().unwrap();
        assert_relative_eq!(
            lp_norm(&f, 2.0, &full).unwrap(),
            2.0f64.sqrt(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn lp_of_zero() {
        let g = Grid::new_1d(-2.0, 2.0, 64).unwrap();
        let f = GridFunction::zero(&g);
        assert_eq!(lp_norm(&f, 1.5, &g.full_box_cube().unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn lp_of_inverse_sqrt_matches_refined_quadrature() {
        // Oracle: the midpoint sums at h and h/4 extrapolate the O(sqrt(h))
        // error away exactly (2*I_{h/4} - I_h), recovering the integral of
        // |x|^{-1/2} over [-1,1], which is 4.
        let gen = Generator::PowerNeg {
            beta: 0.5,
            cap_radius: None,
        };
        let coarse = Grid::new_1d(-1.0, 1.0, 500).unwrap();
        let fine = Grid::new_1d(-1.0, 1.0, 2000).unwrap();
        let i_h = lp_norm(
            &GridFunction::sample(&coarse, &gen).unwrap(),
            1.0,
            &coarse.full_box_cube().unwrap(),
        )
        .unwrap();
        let i_h4 = lp_norm(
            &GridFunction::sample(&fine, &gen).unwrap(),
            1.0,
            &fine.full_box_cube().unwrap(),
        )
        .unwrap();
        let extrapolated = 2.0 * i_h4 - i_h;
        assert!((i_h - 4.0).abs() / 4.0 < 0.03, "midpoint sum too far: {i_h}");
        assert!(
            (extrapolated - 4.0).abs() < 5e-3,
            "refinement oracle: {extrapolated}"
        );
    }

    #[test]
    fn weak_lp_of_indicator() {
        let g = Grid::new_1d(-2.0, 2.0, 400).unwrap();
        let f = indicator_on(&g);
        let full = g.full_box_cube().unwrap();
        assert_relative_eq!(
            weak_lp_norm(&f, 3.0, &full).unwrap(),
            2.0f64.powf(1.0 / 3.0),
            max_relative = 1e-14
        );
        assert_eq!(
            weak_lp_norm(&GridFunction::zero(&g), 3.0, &full).unwrap(),
            0.0
        );
    }

    #[test]
    fn weak_lp_of_capped_inverse_power() {
        // |x|^{-1/p} clipped at 100 cells from the origin lands on the
        // distribution-function value 2^{1/p} within 1%.
        for p in [2.0, 3.0] {
            let g = Grid::new_1d(-1.0, 1.0, 8000).unwrap();
            let f = GridFunction::sample(
                &g,
                &Generator::PowerNeg {
                    beta: 1.0 / p,
                    cap_radius: Some(100.0 * g.cell_side()),
                },
            )
            .unwrap();
            let got = weak_lp_norm(&f, p, &g.full_box_cube().unwrap()).unwrap();
            let want = 2.0f64.powf(1.0 / p);
            assert!((got - want).abs() / want < 0.01, "p={p}: {got} vs {want}");
        }
    }

    #[test]
    fn weak_lp_matches_level_scan_oracle() {
        let g = Grid::new_1d(-2.0, 2.0, 200).unwrap();
        let f = random_real(&g, 5);
        let full = g.full_box_cube().unwrap();
        let fast = weak_lp_norm(&f, 2.5, &full).unwrap();
        // Oracle: dense scan over shifted levels lambda just below each value.
        let cm = g.cell_measure();
        let mut oracle = 0.0f64;
        for i in 0..g.num_cells() {
            let v = f.value(i).norm();
            if v <= 0.0 {
                continue;
            }
            let count = (0..g.num_cells())
                .filter(|&j| f.value(j).norm() >= v)
                .count();
            oracle = oracle.max(v * (count as f64 * cm).powf(1.0 / 2.5));
        }
        assert_relative_eq!(fast, oracle, max_relative = 1e-14);
    }

    #[test]
    fn distribution_function_of_indicator_steps() {
        let g = Grid::new_1d(-2.0, 2.0, 400).unwrap();
        let d = distribution_function(&indicator_on(&g), &g.full_box_cube().unwrap()).unwrap();
        assert_relative_eq!(d.measure_above(0.5), 2.0, max_relative = 1e-14);
        assert_eq!(d.measure_above(1.0), 0.0); // right-continuous at the jump
        assert_relative_eq!(d.measure_above(0.0), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn distribution_function_matches_direct_count() {
        let g = Grid::new_1d(-1.0, 1.0, 157).unwrap();
        let f = random_real(&g, 9);
        let d = distribution_function(&f, &g.full_box_cube().unwrap()).unwrap();
        let cm = g.cell_measure();
        for lambda in [0.0, 0.3, 0.999, 1.5, 2.5] {
            let direct = (0..g.num_cells())
                .filter(|&i| f.value(i).norm() > lambda)
                .count() as f64
                * cm;
            assert_eq!(d.measure_above(lambda), direct);
        }
    }

    #[test]
    fn morrey_equals_lp_when_p_equals_q() {
        let g = Grid::new_1d(-2.0, 2.0, 400).unwrap();
        let f = indicator_on(&g);
        let params = NormParams::morrey(2.0, 2.0).unwrap();
        let m = morrey_norm(&f, &params, &CubeFamily::dyadic()).unwrap();
        assert_relative_eq!(m, 2.0f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn morrey_of_constant_is_box_measure_power() {
        let g = Grid::new_1d(-2.0, 2.0, 400).unwrap();
        let f = GridFunction::sample(&g, &Generator::Constant { re: 1.0, im: 0.0 }).unwrap();
        for (p, q) in [(3.0, 1.0), (3.0, 2.0), (2.0, 2.0)] {
            let params = NormParams::morrey(p, q).unwrap();
            let m = morrey_norm(&f, &params, &CubeFamily::dyadic()).unwrap();
            assert_relative_eq!(m, 4.0f64.powf(1.0 / p), max_relative = 1e-12);
        }
    }

    #[test]
    fn morrey_rejects_q_above_p() {
        let g = Grid::new_1d(-2.0, 2.0, 16).unwrap();
        let f = indicator_on(&g);
        let params = NormParams { p: 2.0, q: 3.0, alpha: None };
        assert!(morrey_norm(&f, &params, &CubeFamily::dyadic()).is_err());
    }

    #[test]
    fn morrey_matches_brute_force_oracle() {
        let g = Grid::new_1d(-1.0, 1.0, 64).unwrap();
        let f = GridFunction::sample(
            &g,
            &Generator::PowerNeg {
                beta: 1.0 / 3.0,
                cap_radius: None,
            },
        )
        .unwrap();
        let params = NormParams::morrey(3.0, 2.0).unwrap();
        let fam = CubeFamily::all_aligned();
        let fast = morrey_norm(&f, &params, &fam).unwrap();
        // Oracle: direct per-cube loops, no summed table.
        let cm = g.cell_measure();
        let mut oracle = 0.0f64;
        for cube in enumerate_cubes(&g, &fam).unwrap() {
            let ac = cube.aligned(&g).unwrap();
            let sum = csum(ac.flat_indices(&g).map(|i| f.value(i).norm().powf(2.0) * cm));
            let val = ac.discrete_measure(&g).powf(1.0 / 3.0 - 1.0 / 2.0) * sum.powf(0.5);
            oracle = oracle.max(val);
        }
        assert_relative_eq!(fast, oracle, max_relative = 1e-13);
    }

    #[test]
    fn weak_morrey_indicator_example() {
        // p=2, q=1: the inner weak-L1 over Q(0,1) is 2; larger cubes shrink
        // under the |Q|^{-1/2} factor. Oracle: brute force over all windows.
        let g = Grid::new_1d(-2.0, 2.0, 128).unwrap();
        let f = indicator_on(&g);
        let params = NormParams::morrey(2.0, 1.0).unwrap();
        let fam = CubeFamily::all_aligned();
        let fast = weak_morrey_norm(&f, &params, &fam).unwrap();
        let cm = g.cell_measure();
        let mut oracle = 0.0f64;
        for cube in enumerate_cubes(&g, &fam).unwrap() {
            let ac = cube.aligned(&g).unwrap();
            let mods = cube_moduli(&f, &ac);
            let mut inner = 0.0f64;
            for &v in &mods {
                if v > 0.0 {
                    let count = mods.iter().filter(|&&u| u >= v).count();
                    inner = inner.max(v * (count as f64 * cm));
                }
            }
            oracle = oracle.max(ac.discrete_measure(&g).powf(1.0 / 2.0 - 1.0) * inner);
        }
        assert_relative_eq!(fast, oracle, max_relative = 1e-13);
        // the Q(0,1) window value: |Q|^{-1/2} * 2 = 2^{1/2}
        assert!(fast >= 2.0f64.sqrt() - 1e-12);
    }

    #[test]
    fn weak_morrey_equals_weak_lp_when_p_equals_q() {
        let g = Grid::new_1d(-2.0, 2.0, 256).unwrap();
        let f = random_real(&g, 21);
        let params = NormParams::lebesgue(2.0).unwrap();
        let wm = weak_morrey_norm(&f, &params, &CubeFamily::dyadic()).unwrap();
        let wl = weak_lp_norm(&f, 2.0, &g.full_box_cube().unwrap()).unwrap();
        assert_eq!(wm, wl);
    }

    #[test]
    fn weak_morrey_zero_function() {
        let g = Grid::new_1d(-2.0, 2.0, 64).unwrap();
        let params = NormParams::morrey(2.0, 1.0).unwrap();
        assert_eq!(
            weak_morrey_norm(&GridFunction::zero(&g), &params, &CubeFamily::dyadic()).unwrap(),
            0.0
        );
    }

    #[test]
    fn bmo_of_constant_vanishes() {
        let g = Grid::new_1d(-1.0, 1.0, 128).unwrap();
        let b = GridFunction::sample(&g, &Generator::Constant { re: 3.25, im: 0.0 }).unwrap();
        assert_eq!(bmo_norm(&b, &CubeFamily::all_aligned()).unwrap(), 0.0);
    }

    #[test]
    fn bmo_of_sign_on_symmetric_window() {
        let g = Grid::new_1d(-1.0, 1.0, 128).unwrap();
        let b = GridFunction::sample(&g, &Generator::Sign).unwrap();
        let v = bmo_norm(&b, &CubeFamily::all_aligned()).unwrap();
        // symmetric window around 0: b_Q = 0 and mean |b| = 1
        assert_eq!(v, 1.0);
    }

    #[test]
    fn bmo_rejects_complex_input() {
        let g = Grid::new_1d(-1.0, 1.0, 8).unwrap();
        let vals = vec![Complex64::new(0.0, 1.0); 8];
        let b = GridFunction::from_values(g, vals).unwrap();
        assert!(matches!(
            bmo_norm(&b, &CubeFamily::dyadic()),
            Err(Error::ComplexInput(_))
        ));
    }

    #[test]
    fn bmo_of_log_is_stable_under_refinement() {
        let fam = CubeFamily::all_aligned();
        let coarse = Grid::new_1d(-2.0, 2.0, 256).unwrap();
        let fine = Grid::new_1d(-2.0, 2.0, 512).unwrap();
        let v1 = bmo_norm(&GridFunction::sample(&coarse, &Generator::LogAbs).unwrap(), &fam).unwrap();
        let v2 = bmo_norm(&GridFunction::sample(&fine, &Generator::LogAbs).unwrap(), &fam).unwrap();
        assert!(v1.is_finite() && v1 > 0.0);
        assert!((v1 - v2).abs() / v1 < 0.05, "refinement moved BMO: {v1} -> {v2}");
    }

    #[test]
    fn lipschitz_diff_of_constant_vanishes() {
        let g = Grid::new_1d(0.0, 1.0, 64).unwrap();
        let b = GridFunction::sample(&g, &Generator::Constant { re: 7.0, im: 0.0 }).unwrap();
        assert_eq!(lipschitz_norm_diff(&b, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn lipschitz_diff_of_sqrt_attains_one_with_origin_sample() {
        // A box whose midpoints include 0 makes pairs (0, y) give exactly
        // sqrt(y)/sqrt(y) = 1.
        let n = 64;
        let h: f64 = 2.0 / n as f64;
        let g = Grid::new_1d(-1.0 - h / 2.0, 1.0 - h / 2.0, n).unwrap();
        let b = GridFunction::sample(&g, &Generator::PowerPos { alpha: 0.5 }).unwrap();
        let v = lipschitz_norm_diff(&b, 0.5).unwrap();
        assert!((v - 1.0).abs() < 1e-3, "got {v}");
    }

    #[test]
    fn lipschitz_diff_of_identity_matches_all_pairs_oracle() {
        let g = Grid::new_1d(0.0, 1.0, 40).unwrap();
        let vals: Vec<Complex64> = (0..40)
            .map(|i| Complex64::new(g.coord(0, i), 0.0))
            .collect();
        let b = GridFunction::from_values(g.clone(), vals).unwrap();
        let fast = lipschitz_norm_diff(&b, 0.5).unwrap();
        let mut oracle = 0.0f64;
        for i in 0..40 {
            for j in 0..i {
                let d = (g.coord(0, i) - g.coord(0, j)).abs();
                oracle = oracle.max(d / d.sqrt());
            }
        }
        assert_eq!(fast, oracle);
        // farthest pair dominates for b(x) = x: distance just under 1
        assert!((fast - (39.0f64 * g.cell_side()).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn lipschitz_diff_rejects_bad_alpha() {
        let g = Grid::new_1d(0.0, 1.0, 8).unwrap();
        let b = GridFunction::zero(&g);
        assert!(lipschitz_norm_diff(&b, 0.0).is_err());
        assert!(lipschitz_norm_diff(&b, 1.0).is_err());
    }

    #[test]
    fn oscillation_forms_vanish_for_constants() {
        let g = Grid::new_1d(-1.0, 1.0, 64).unwrap();
        let b = GridFunction::sample(&g, &Generator::Constant { re: -2.5, im: 0.0 }).unwrap();
        let fam = CubeFamily::dyadic();
        for form in [OscForm::Integral, OscForm::PowerMean(2.0), OscForm::EssSup] {
            assert_eq!(lipschitz_norm_osc(&b, 0.5, form, &fam).unwrap(), 0.0);
        }
    }

    #[test]
    fn oscillation_rejects_q_one_under_power_mean() {
        let g = Grid::new_1d(-1.0, 1.0, 16).unwrap();
        let b = GridFunction::zero(&g);
        assert!(lipschitz_norm_osc(&b, 0.5, OscForm::PowerMean(1.0), &CubeFamily::dyadic()).is_err());
    }

    #[test]
    fn oscillation_forms_comparable_to_diff_form() {
        let g = Grid::new_1d(-1.0, 1.0, 256).unwrap();
        let b = GridFunction::sample(&g, &Generator::PowerPos { alpha: 0.5 }).unwrap();
        let diff = lipschitz_norm_diff(&b, 0.5).unwrap();
        let fam = CubeFamily::all_aligned();
        for form in [OscForm::Integral, OscForm::PowerMean(2.0), OscForm::EssSup] {
            let v = lipschitz_norm_osc(&b, 0.5, form, &fam).unwrap();
            let ratio = v / diff;
            assert!(
                (0.1..=10.0).contains(&ratio),
                "{form:?} out of range: ratio {ratio}"
            );
        }
    }

    #[test]
    fn ess_sup_form_grows_under_refinement_for_steps() {
        // A step is not Lipschitz: windows crossing the jump make the q=inf
        // form blow up as cells shrink.
        let fam = CubeFamily::all_aligned();
        let mut last = 0.0;
        for n in [32, 64, 128] {
            let g = Grid::new_1d(-1.0, 1.0, n).unwrap();
            let b = GridFunction::sample(&g, &Generator::Sign).unwrap();
            let v = lipschitz_norm_osc(&b, 0.5, OscForm::EssSup, &fam).unwrap();
            assert!(v > last, "n={n}: {v} did not grow past {last}");
            last = v;
        }
    }

    #[test]
    fn chebyshev_weak_below_strong_per_cube() {
        let g = Grid::new_1d(-2.0, 2.0, 100).unwrap();
        let f = random_real(&g, 33);
        for cube in enumerate_cubes(&g, &CubeFamily::sampled(17, 60)).unwrap() {
            let weak = weak_lp_norm(&f, 2.0, &cube).unwrap();
            let strong = lp_norm(&f, 2.0, &cube).unwrap();
            assert!(weak <= strong, "cube {cube:?}: {weak} > {strong}");
        }
    }

    #[test]
    fn family_growth_is_monotone() {
        // sampled(seed, 10) is a prefix of sampled(seed, 50), so the larger
        // family can only raise a sup-over-cubes norm
        let g = Grid::new_1d(-2.0, 2.0, 64).unwrap();
        let f = random_real(&g, 2);
        let params = NormParams::morrey(3.0, 2.0).unwrap();
        type NormFn = fn(&GridFunction, &NormParams, &CubeFamily) -> Result<f64>;
        let norms: [(NormFn, &str); 2] = [(morrey_norm, "morrey"), (weak_morrey_norm, "weak")];
        for (norm, name) in norms {
            let small = norm(&f, &params, &CubeFamily::sampled(1, 10).without_full_domain()).unwrap();
            let large = norm(&f, &params, &CubeFamily::sampled(1, 50).without_full_domain()).unwrap();
            let all = norm(&f, &params, &CubeFamily::all_aligned()).unwrap();
            assert!(small <= large && large <= all, "{name}: {small} {large} {all}");
        }
    }

    #[test]
    fn absolute_homogeneity() {
        let g = Grid::new_1d(-2.0, 2.0, 64).unwrap();
        let f = random_real(&g, 8);
        let c = -3.0f64;
        let scaled = f.scale(Complex64::new(c, 0.0));
        let params = NormParams::morrey(3.0, 2.0).unwrap();
        let fam = CubeFamily::dyadic();
        let full = g.full_box_cube().unwrap();
        let pairs = [
            (lp_norm(&scaled, 2.0, &full).unwrap(), lp_norm(&f, 2.0, &full).unwrap()),
            (
                weak_lp_norm(&scaled, 2.0, &full).unwrap(),
                weak_lp_norm(&f, 2.0, &full).unwrap(),
            ),
            (
                morrey_norm(&scaled, &params, &fam).unwrap(),
                morrey_norm(&f, &params, &fam).unwrap(),
            ),
            (
                weak_morrey_norm(&scaled, &params, &fam).unwrap(),
                weak_morrey_norm(&f, &params, &fam).unwrap(),
            ),
        ];
        for (s, u) in pairs {
            assert_relative_eq!(s, c.abs() * u, max_relative = 1e-13);
        }
    }

    #[test]
    fn bmo_invariant_under_exact_constant_shift() {
        // integer-valued step plus integer constant keeps all sums exact,
        // so the invariance is bitwise
        let g = Grid::new_1d(-1.0, 1.0, 64).unwrap();
        let b = GridFunction::sample(&g, &Generator::Sign).unwrap();
        let shifted = GridFunction::from_values(
            g.clone(),
            b.values().iter().map(|v| v + Complex64::new(2.0, 0.0)).collect(),
        )
        .unwrap();
        let fam = CubeFamily::all_aligned();
        assert_eq!(bmo_norm(&b, &fam).unwrap(), bmo_norm(&shifted, &fam).unwrap());
    }

    #[test]
    fn fractional_targets_and_relations() {
        let (s, t) = NormParams::fractional_targets(1.5, 4.0 / 3.0, 0.5, 1).unwrap();
        assert_relative_eq!(s, 6.0, max_relative = 1e-12);
        assert_relative_eq!(t, 4.0, max_relative = 1e-12);
        assert!(NormParams::fractional_targets(4.0, 2.0, 0.5, 1).is_err());
        NormParams::check_adams_relation(1.5, 4.0 / 3.0, 6.0, 16.0 / 3.0).unwrap();
        assert!(NormParams::check_adams_relation(1.5, 4.0 / 3.0, 6.0, 5.0).is_err());
    }
}
