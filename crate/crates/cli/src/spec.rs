//! Flag-string parsers: grids, generators, cube families, corpora.

use anyhow::{anyhow, bail, Context, Result};
use morrey_core::corpus::CorpusSpec;
use morrey_core::{Cube, CubeFamily, Generator, Grid};

/// `1d:N[:lo:hi]` or `2d:N[:lo:hi]` (square box, default `[-2, 2]^n`).
pub fn parse_grid(spec: &str) -> Result<Grid> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 2 && parts.len() != 4 {
        bail!("grid spec '{spec}' is not 1d:N[:lo:hi] or 2d:N[:lo:hi]");
    }
    let n: usize = parts[1]
        .parse()
        .with_context(|| format!("bad resolution in grid spec '{spec}'"))?;
    let (lo, hi) = if parts.len() == 4 {
        (
            parts[2].parse::<f64>().context("bad grid lower bound")?,
            parts[3].parse::<f64>().context("bad grid upper bound")?,
        )
    } else {
        (-2.0, 2.0)
    };
    let grid = match parts[0] {
        "1d" => Grid::new_1d(lo, hi, n),
        "2d" => Grid::new_2d([lo, lo], [hi, hi], [n, n]),
        other => bail!("grid spec dimension '{other}' is not 1d or 2d"),
    };
    grid.map_err(|e| anyhow!("{e}"))
}

/// Generator specs:
/// `log_abs` | `sign` | `abs_pow:A` | `neg_pow:B[:cap]` |
/// `chi:C1[,C2]:R` | `step:SEED:PIECES` | `const:RE[,IM]`.
pub fn parse_generator(spec: &str) -> Result<Generator> {
    let parts: Vec<&str> = spec.split(':').collect();
    let gen = match parts[0] {
        "log_abs" => Generator::LogAbs,
        "sign" => Generator::Sign,
        "abs_pow" => Generator::PowerPos {
            alpha: one_float(&parts, spec)?,
        },
        "neg_pow" => {
            let beta = one_float(&parts, spec)?;
            let cap_radius = match parts.get(2) {
                Some(s) => Some(s.parse::<f64>().context("bad cap radius")?),
                None => None,
            };
            Generator::PowerNeg { beta, cap_radius }
        }
        "chi" => {
            if parts.len() != 3 {
                bail!("indicator spec '{spec}' is not chi:C1[,C2]:R");
            }
            let center: Vec<f64> = parts[1]
                .split(',')
                .map(|s| s.parse::<f64>().context("bad indicator center"))
                .collect::<Result<_>>()?;
            let half: f64 = parts[2].parse().context("bad indicator half-side")?;
            Generator::Indicator {
                cube: Cube::new(center, half),
            }
        }
        "step" => {
            if parts.len() != 3 {
                bail!("step spec '{spec}' is not step:SEED:PIECES");
            }
            Generator::RandomStep {
                seed: parts[1].parse().context("bad step seed")?,
                pieces: parts[2].parse().context("bad step piece count")?,
            }
        }
        "const" => {
            let comps: Vec<&str> = parts
                .get(1)
                .ok_or_else(|| anyhow!("const spec '{spec}' is missing a value"))?
                .split(',')
                .collect();
            Generator::Constant {
                re: comps[0].parse().context("bad constant")?,
                im: match comps.get(1) {
                    Some(s) => s.parse().context("bad imaginary part")?,
                    None => 0.0,
                },
            }
        }
        other => bail!(
            "unknown generator '{other}' \
             (expected log_abs|sign|abs_pow|neg_pow|chi|step|const)"
        ),
    };
    Ok(gen)
}

fn one_float(parts: &[&str], spec: &str) -> Result<f64> {
    parts
        .get(1)
        .ok_or_else(|| anyhow!("spec '{spec}' is missing its parameter"))?
        .parse::<f64>()
        .with_context(|| format!("bad parameter in '{spec}'"))
}

/// `dyadic` | `all` | `sampled:SEED:COUNT`, with an optional `:nofull`
/// suffix to drop the full-domain cube.
pub fn parse_family(spec: &str) -> Result<CubeFamily> {
    let (body, nofull) = match spec.strip_suffix(":nofull") {
        Some(b) => (b, true),
        None => (spec, false),
    };
    let parts: Vec<&str> = body.split(':').collect();
    let fam = match parts[0] {
        "dyadic" => CubeFamily::dyadic(),
        "all" => CubeFamily::all_aligned(),
        "sampled" => {
            if parts.len() != 3 {
                bail!("sampled family spec '{spec}' is not sampled:SEED:COUNT");
            }
            CubeFamily::sampled(
                parts[1].parse().context("bad family seed")?,
                parts[2].parse().context("bad family count")?,
            )
        }
        other => bail!("unknown family '{other}' (expected dyadic|all|sampled)"),
    };
    Ok(if nofull { fam.without_full_domain() } else { fam })
}

/// `default[:seed=S][:count=N][:beta_max=B]` or a single generator spec.
pub enum CorpusChoice {
    Default(CorpusSpec),
    Single(Generator),
}

pub fn parse_corpus(spec: &str) -> Result<CorpusChoice> {
    if let Some(rest) = spec.strip_prefix("default") {
        let mut cs = CorpusSpec::default();
        for kv in rest.split(':').filter(|s| !s.is_empty()) {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| anyhow!("corpus option '{kv}' is not key=value"))?;
            match key {
                "seed" => cs.seed = value.parse().context("bad corpus seed")?,
                "count" => cs.count = value.parse().context("bad corpus count")?,
                "beta_max" => cs.beta_max = value.parse().context("bad corpus beta_max")?,
                other => bail!("unknown corpus option '{other}'"),
            }
        }
        Ok(CorpusChoice::Default(cs))
    } else {
        Ok(CorpusChoice::Single(parse_generator(spec)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_specs_parse() {
        let g = parse_grid("1d:400").unwrap();
        assert_eq!(g.resolution(), &[400]);
        assert_eq!(g.box_min(), &[-2.0]);
        let g2 = parse_grid("2d:64:-1:1").unwrap();
        assert_eq!(g2.resolution(), &[64, 64]);
        assert!(parse_grid("3d:10").is_err());
        assert!(parse_grid("1d").is_err());
    }

    #[test]
    fn generator_specs_parse() {
        assert!(matches!(parse_generator("log_abs").unwrap(), Generator::LogAbs));
        assert!(matches!(
            parse_generator("abs_pow:0.5").unwrap(),
            Generator::PowerPos { .. }
        ));
        assert!(matches!(
            parse_generator("neg_pow:0.3:0.05").unwrap(),
            Generator::PowerNeg {
                cap_radius: Some(_),
                ..
            }
        ));
        match parse_generator("chi:0.5,0.5:0.25").unwrap() {
            Generator::Indicator { cube } => assert_eq!(cube.center, vec![0.5, 0.5]),
            other => panic!("{other:?}"),
        }
        assert!(parse_generator("nope").is_err());
    }

    #[test]
    fn family_and_corpus_specs_parse() {
        assert!(parse_family("dyadic").is_ok());
        assert!(parse_family("sampled:7:100:nofull").is_ok());
        assert!(parse_family("bad").is_err());
        match parse_corpus("default:count=10:seed=3").unwrap() {
            CorpusChoice::Default(cs) => {
                assert_eq!(cs.count, 10);
                assert_eq!(cs.seed, 3);
            }
            _ => panic!("expected default corpus"),
        }
        assert!(matches!(
            parse_corpus("abs_pow:0.25").unwrap(),
            CorpusChoice::Single(_)
        ));
    }
}
