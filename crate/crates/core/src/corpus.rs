//! Seeded function corpora for the verification suites.
//!
//! The default corpus cycles through the extremal shapes the function spaces
//! are built around: indicators of random cubes, `|x|^{-beta}`, `log|x|`,
//! `|x|^alpha`, and random step functions. Same seed, same grid, same
//! members; a shorter corpus is a prefix of a longer one with the same seed.

use crate::error::Result;
use crate::grid::{Cube, Generator, Grid, GridFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub seed: u64,
    pub count: usize,
    /// Upper bound on the exponents of `|x|^{-beta}` members; callers pick
    /// `beta_max < n/p` so the members stay in the spaces under test.
    pub beta_max: f64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            seed: 71,
            count: 50,
            beta_max: 0.45,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    /// Provenance string carried into report metadata.
    pub id: String,
    pub generator: Generator,
    pub function: GridFunction,
}

/// Indicator cubes drawn here span at least two cells per axis; one-cell
/// indicators can turn the pointwise-domination bound into an exact tie,
/// which a tolerance-zero check should not hinge on.
const MIN_INDICATOR_CELLS: usize = 2;

/// Build the seeded default corpus on `grid`.
pub fn build_corpus(grid: &Grid, spec: &CorpusSpec) -> Result<Vec<CorpusEntry>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut entries = Vec::with_capacity(spec.count);
    let n_min = *grid.resolution().iter().min().unwrap();
    let h = grid.cell_side();
    let mut alpha_cycle = [0.25, 0.5, 0.75].iter().cycle();

    for i in 0..spec.count {
        let generator = if i == 0 {
            Generator::LogAbs
        } else {
            match (i - 1) % 4 {
                0 => {
                    let len = rng.gen_range(MIN_INDICATOR_CELLS..=(n_min / 2).max(2));
                    let mut center = Vec::with_capacity(grid.dim());
                    for a in 0..grid.dim() {
                        let start = rng.gen_range(0..=(grid.resolution()[a] - len));
                        center.push(grid.box_min()[a] + (start as f64 + len as f64 / 2.0) * h);
                    }
                    Generator::Indicator {
                        cube: Cube::new(center, len as f64 * h / 2.0),
                    }
                }
                1 => Generator::PowerNeg {
                    beta: spec.beta_max * rng.gen_range(0.25..0.95),
                    cap_radius: None,
                },
                2 => Generator::RandomStep {
                    seed: rng.gen(),
                    pieces: 3 + (i % 5),
                },
                _ => Generator::PowerPos {
                    alpha: *alpha_cycle.next().unwrap(),
                },
            }
        };
        let function = GridFunction::sample(grid, &generator)?;
        entries.push(CorpusEntry {
            id: generator_id(&generator),
            generator,
            function,
        });
    }
    Ok(entries)
}

/// Stable provenance string for a generator.
pub fn generator_id(generator: &Generator) -> String {
    match generator {
        Generator::Indicator { cube } => format!(
            "chi[center={:?},half_side={:.6}]",
            cube.center, cube.half_side
        ),
        Generator::PowerNeg { beta, cap_radius } => match cap_radius {
            Some(r) => format!("negpow[beta={beta:.6},cap={r:.6}]"),
            None => format!("negpow[beta={beta:.6}]"),
        },
        Generator::PowerPos { alpha } => format!("abspow[alpha={alpha}]"),
        Generator::LogAbs => "log_abs".into(),
        Generator::Sign => "sign".into(),
        Generator::RandomStep { seed, pieces } => format!("step[seed={seed},pieces={pieces}]"),
        Generator::Constant { re, im } => format!("const[{re}+{im}i]"),
    }
}
