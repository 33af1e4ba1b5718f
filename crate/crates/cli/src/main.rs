//! Command-line front end: norm computation, operator application,
//! verification suites, corpus listing.
//!
//! Exit codes: 0 all exact-tolerance claims pass, 1 an exact claim failed,
//! 2 configuration/usage error.

mod output;
mod spec;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use morrey_core::corpus::{build_corpus, generator_id, CorpusEntry};
use morrey_core::embeddings::{
    self, NormSpec, OperatorSpec, Report,
};
use morrey_core::norms::{self, NormParams, OscForm};
use morrey_core::operators;
use morrey_core::paluszynski::{self, FourierExpansion};
use morrey_core::{Grid, GridFunction, KernelSpec};
use output::{Format, RunReport};
use spec::{parse_corpus, parse_family, parse_generator, parse_grid, CorpusChoice};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "morrey",
    version,
    about = "Morrey/BMO/Lipschitz norms, singular integrals, commutators, and \
             inequality verifiers on uniform grids"
)]
struct Cli {
    /// Worker threads (default: MORREY_THREADS env var, then all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a norm of a generated function
    Norm {
        #[command(subcommand)]
        cmd: NormCmd,
    },
    /// Apply an operator to a grid-function file
    Operator {
        #[command(subcommand)]
        cmd: OperatorCmd,
    },
    /// Run a verification suite
    Verify {
        #[command(subcommand)]
        cmd: VerifyCmd,
    },
    /// Inspect the seeded default corpus
    Corpus {
        #[command(subcommand)]
        cmd: CorpusCmd,
    },
}

#[derive(Subcommand)]
enum NormCmd {
    /// Emit {norm, p, q, alpha, family, value, argmax_cube} as JSON
    Compute(NormArgs),
}

#[derive(Args)]
struct NormArgs {
    /// lp | weak-lp | morrey | weak-morrey | bmo | lip-diff | lip-osc
    #[arg(long)]
    norm: String,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Oscillation form for lip-osc: integral | power:Q | ess-sup
    #[arg(long, default_value = "power:2")]
    osc_form: String,
    /// Function under the norm (generator spec)
    #[arg(long, conflicts_with = "b")]
    f: Option<String>,
    /// Symbol for the seminorms (generator spec)
    #[arg(long)]
    b: Option<String>,
    #[arg(long, default_value = "1d:400")]
    grid: String,
    #[arg(long, default_value = "dyadic")]
    family: String,
    /// Optional report path
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum OperatorCmd {
    /// Read a grid-function file, apply T or I_alpha, write the image
    Apply {
        /// hilbert | riesz1 | riesz2 (required unless --alpha picks I_alpha)
        #[arg(long)]
        kernel: Option<String>,
        /// Order of the fractional integral; selects I_alpha over T
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Args, Clone)]
struct SuiteArgs {
    #[arg(long, default_value = "1d:800")]
    grid: String,
    #[arg(long, default_value = "dyadic")]
    family: String,
    #[arg(long, default_value = "default")]
    corpus: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Weak-to-strong embedding at tolerance zero over a corpus
    Embedding {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q1: f64,
        #[arg(long)]
        q2: f64,
        #[command(flatten)]
        suite: SuiteArgs,
    },
    /// The three-link norm chain
    Chain {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q1: f64,
        #[arg(long)]
        q2: f64,
        #[command(flatten)]
        suite: SuiteArgs,
    },
    /// Pointwise domination of [b,T] by I_alpha at tolerance zero
    Domination {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value = "hilbert")]
        kernel: String,
        /// Symbol b (generator spec)
        #[arg(long, default_value = "abs_pow:0.5")]
        b: String,
        #[command(flatten)]
        suite: SuiteArgs,
    },
    /// Oscillation-form equivalence band for the Lipschitz seminorm
    Lemma31 {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value = "abs_pow:0.5")]
        b: String,
        /// Ratio band bound
        #[arg(long, default_value_t = 10.0)]
        c_star: f64,
        #[command(flatten)]
        suite: SuiteArgs,
    },
    /// Empirical operator-norm ratio stability under refinement
    OperatorBound {
        /// frac | commutator
        #[arg(long)]
        operator: String,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value = "hilbert")]
        kernel: String,
        #[arg(long, default_value = "log_abs")]
        b: String,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: Option<f64>,
        /// Target norm: morrey | weak-morrey | lp | weak-lp
        #[arg(long, default_value = "morrey")]
        target: String,
        /// Relation fixing the target's second exponent: peetre | adams
        #[arg(long, default_value = "peetre")]
        relation: String,
        #[command(flatten)]
        suite: SuiteArgs,
    },
    /// Oscillation identity and the operator lower-bound chain
    BmoLower {
        #[arg(long, default_value = "hilbert")]
        kernel: String,
        #[arg(long, default_value = "log_abs")]
        b: String,
        /// Base point z0 of the expansion, comma-separated
        #[arg(long, default_value = "1")]
        z0: String,
        /// Cube spec CENTER[,CENTER2]:SIDE
        #[arg(long, default_value = "2:0.5")]
        cube: String,
        /// Truncation order per axis
        #[arg(long, default_value_t = 128)]
        m: usize,
        #[arg(long, default_value_t = 1.5)]
        margin: f64,
        #[arg(long, default_value_t = 3.0)]
        p: f64,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        /// Identity residual tolerance
        #[arg(long, default_value_t = 1e-2)]
        eps_id: f64,
        /// Write the expansion cache here
        #[arg(long)]
        expansion_out: Option<PathBuf>,
        /// Reuse a cached expansion instead of rebuilding
        #[arg(long)]
        expansion_in: Option<PathBuf>,
        #[command(flatten)]
        suite: SuiteArgs,
    },
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Print the member ids of the seeded default corpus
    List {
        #[arg(long, default_value = "1d:400")]
        grid: String,
        #[arg(long, default_value_t = 71)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = 0.45)]
        beta_max: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli
        .threads
        .or_else(|| std::env::var("MORREY_THREADS").ok().and_then(|s| s.parse().ok()))
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Norm { cmd: NormCmd::Compute(args) } => norm_compute(args),
        Command::Operator { cmd } => operator_apply(cmd),
        Command::Verify { cmd } => verify(cmd),
        Command::Corpus { cmd } => corpus_list(cmd),
    }
}

fn corpus_members(grid: &Grid, spec: &str) -> Result<Vec<CorpusEntry>> {
    match parse_corpus(spec)? {
        CorpusChoice::Default(cs) => build_corpus(grid, &cs).map_err(|e| anyhow!("{e}")),
        CorpusChoice::Single(gen) => {
            let function = GridFunction::sample(grid, &gen).map_err(|e| anyhow!("{e}"))?;
            Ok(vec![CorpusEntry {
                id: generator_id(&gen),
                generator: gen,
                function,
            }])
        }
    }
}

fn norm_compute(args: NormArgs) -> Result<u8> {
    let grid = parse_grid(&args.grid)?;
    let family = parse_family(&args.family)?;
    let gen_spec = args
        .f
        .as_deref()
        .or(args.b.as_deref())
        .ok_or_else(|| anyhow!("provide the function via --f or --b"))?;
    let f = GridFunction::sample(&grid, &parse_generator(gen_spec)?)
        .map_err(|e| anyhow!("{e}"))?;
    let full = grid.full_box_cube().map_err(|e| anyhow!("{e}"))?;

    let need_p = || args.p.ok_or_else(|| anyhow!("--p is required for this norm"));
    let need_q = || args.q.ok_or_else(|| anyhow!("--q is required for this norm"));
    let need_alpha = || {
        args.alpha
            .ok_or_else(|| anyhow!("--alpha is required for this norm"))
    };

    let (value, argmax) = match args.norm.as_str() {
        "lp" => (norms::lp_norm(&f, need_p()?, &full).map_err(|e| anyhow!("{e}"))?, None),
        "weak-lp" => (
            norms::weak_lp_norm(&f, need_p()?, &full).map_err(|e| anyhow!("{e}"))?,
            None,
        ),
        "morrey" => {
            let params = NormParams { p: need_p()?, q: need_q()?, alpha: None };
            norms::morrey_norm_with_witness(&f, &params, &family).map_err(|e| anyhow!("{e}"))?
        }
        "weak-morrey" => {
            let params = NormParams { p: need_p()?, q: need_q()?, alpha: None };
            norms::weak_morrey_norm_with_witness(&f, &params, &family)
                .map_err(|e| anyhow!("{e}"))?
        }
        "bmo" => norms::bmo_norm_with_witness(&f, &family).map_err(|e| anyhow!("{e}"))?,
        "lip-diff" => (
            norms::lipschitz_norm_diff(&f, need_alpha()?).map_err(|e| anyhow!("{e}"))?,
            None,
        ),
        "lip-osc" => {
            let form = parse_osc_form(&args.osc_form)?;
            (
                norms::lipschitz_norm_osc(&f, need_alpha()?, form, &family)
                    .map_err(|e| anyhow!("{e}"))?,
                None,
            )
        }
        other => bail!("unknown norm '{other}'"),
    };

    let record = serde_json::json!({
        "norm": args.norm,
        "p": args.p,
        "q": args.q,
        "alpha": args.alpha,
        "family": args.family,
        "function": gen_spec,
        "grid": { "resolution": grid.resolution(), "box_min": grid.box_min(), "box_max": grid.box_max() },
        "value": value,
        "argmax_cube": argmax,
    });
    let text = serde_json::to_string_pretty(&record)?;
    println!("{text}");
    if let Some(path) = args.out {
        std::fs::write(path, text)?;
    }
    Ok(0)
}

fn parse_osc_form(spec: &str) -> Result<OscForm> {
    match spec {
        "integral" => Ok(OscForm::Integral),
        "ess-sup" => Ok(OscForm::EssSup),
        other => match other.strip_prefix("power:") {
            Some(q) => Ok(OscForm::PowerMean(q.parse().context("bad oscillation q")?)),
            None => bail!("unknown oscillation form '{other}' (integral|power:Q|ess-sup)"),
        },
    }
}

fn operator_apply(cmd: OperatorCmd) -> Result<u8> {
    let OperatorCmd::Apply { kernel, alpha, input, output } = cmd;
    let f = GridFunction::read_csv(&input).map_err(|e| anyhow!("{e}"))?;
    let image = match alpha {
        Some(a) => operators::frac_integral(a, &f).map_err(|e| anyhow!("{e}"))?,
        None => {
            let name = kernel.ok_or_else(|| anyhow!("--kernel is required without --alpha"))?;
            let k = KernelSpec::parse(&name).map_err(|e| anyhow!("{e}"))?;
            operators::cz_apply(&k, &f).map_err(|e| anyhow!("{e}"))?
        }
    };
    image.write_csv(&output).map_err(|e| anyhow!("{e}"))?;
    println!("wrote {}", output.display());
    Ok(0)
}

fn finish_suite(
    suite: &SuiteArgs,
    config: serde_json::Value,
    reports: Vec<Report>,
) -> Result<u8> {
    let run = RunReport::new(config, reports);
    run.print_summaries();
    if let Some(path) = &suite.out {
        run.write(path, suite.format.parse::<Format>()?)?;
        println!("report written to {}", path.display());
    }
    Ok(run.exit_code())
}

fn verify(cmd: VerifyCmd) -> Result<u8> {
    match cmd {
        VerifyCmd::Embedding { p, q1, q2, suite } => {
            let grid = parse_grid(&suite.grid)?;
            let family = parse_family(&suite.family)?;
            let members = corpus_members(&grid, &suite.corpus)?;
            let mut reports = Vec::new();
            for entry in &members {
                let r = embeddings::verify_embedding(&entry.function, p, q1, q2, &family)
                    .map_err(|e| anyhow!("{e}"))?
                    .with_meta("member", &entry.id);
                reports.push(r);
            }
            let config = serde_json::json!({
                "command": "verify embedding", "p": p, "q1": q1, "q2": q2,
                "grid": suite.grid, "family": suite.family, "corpus": suite.corpus,
            });
            finish_suite(&suite, config, reports)
        }
        VerifyCmd::Chain { p, q1, q2, suite } => {
            let grid = parse_grid(&suite.grid)?;
            let family = parse_family(&suite.family)?;
            let members = corpus_members(&grid, &suite.corpus)?;
            let mut reports = Vec::new();
            for entry in &members {
                for r in embeddings::verify_chain(&entry.function, p, q1, q2, &family)
                    .map_err(|e| anyhow!("{e}"))?
                {
                    reports.push(r.with_meta("member", &entry.id));
                }
            }
            let config = serde_json::json!({
                "command": "verify chain", "p": p, "q1": q1, "q2": q2,
                "grid": suite.grid, "family": suite.family, "corpus": suite.corpus,
            });
            finish_suite(&suite, config, reports)
        }
        VerifyCmd::Domination { alpha, kernel, b, suite } => {
            let grid = parse_grid(&suite.grid)?;
            let k = KernelSpec::parse(&kernel).map_err(|e| anyhow!("{e}"))?;
            let symbol = GridFunction::sample(&grid, &parse_generator(&b)?)
                .map_err(|e| anyhow!("{e}"))?;
            let members = corpus_members(&grid, &suite.corpus)?;
            let mut reports = Vec::new();
            for entry in &members {
                let r = embeddings::verify_pointwise_domination(&symbol, alpha, &entry.function, &k)
                    .map_err(|e| anyhow!("{e}"))?
                    .with_meta("member", &entry.id)
                    .with_meta("symbol", &b);
                reports.push(r);
            }
            let config = serde_json::json!({
                "command": "verify domination", "alpha": alpha, "kernel": kernel, "b": b,
                "grid": suite.grid, "corpus": suite.corpus,
            });
            finish_suite(&suite, config, reports)
        }
        VerifyCmd::Lemma31 { alpha, b, c_star, suite } => {
            let grid = parse_grid(&suite.grid)?;
            let family = parse_family(&suite.family)?;
            let symbol = GridFunction::sample(&grid, &parse_generator(&b)?)
                .map_err(|e| anyhow!("{e}"))?;
            let report = embeddings::verify_lemma_oscillation(&symbol, alpha, &family, c_star)
                .map_err(|e| anyhow!("{e}"))?
                .with_meta("symbol", &b);
            let config = serde_json::json!({
                "command": "verify lemma31", "alpha": alpha, "b": b, "c_star": c_star,
                "grid": suite.grid, "family": suite.family,
            });
            finish_suite(&suite, config, vec![report])
        }
        VerifyCmd::OperatorBound {
            operator,
            alpha,
            kernel,
            b,
            p,
            q,
            target,
            relation,
            suite,
        } => {
            let grid = parse_grid(&suite.grid)?;
            let family = parse_family(&suite.family)?;
            let q = q.unwrap_or(p);
            let dim = grid.dim();
            let op = match operator.as_str() {
                "frac" => OperatorSpec::FracIntegral {
                    alpha: alpha.ok_or_else(|| anyhow!("--alpha is required for frac"))?,
                },
                "commutator" => OperatorSpec::Commutator {
                    kernel: KernelSpec::parse(&kernel).map_err(|e| anyhow!("{e}"))?,
                    symbol: parse_generator(&b)?,
                    alpha,
                },
                other => bail!("unknown operator '{other}' (frac|commutator)"),
            };
            let source = NormSpec::Morrey { p, q };
            let (s, t) = match alpha {
                Some(a) => {
                    let (s, peetre_t) = NormParams::fractional_targets(p, q, a, dim)
                        .map_err(|e| anyhow!("{e}"))?;
                    let t = match relation.as_str() {
                        "peetre" => peetre_t,
                        "adams" => s * q / p,
                        other => bail!("unknown relation '{other}' (peetre|adams)"),
                    };
                    (s, t)
                }
                None => (p, q),
            };
            let target = match target.as_str() {
                "morrey" => NormSpec::Morrey { p: s, q: t },
                "weak-morrey" => NormSpec::WeakMorrey { p: s, q: t },
                "lp" => NormSpec::Lp { p: s },
                "weak-lp" => NormSpec::WeakLp { p: s },
                other => bail!("unknown target norm '{other}'"),
            };
            let corpus_spec = match parse_corpus(&suite.corpus)? {
                CorpusChoice::Default(cs) => cs,
                CorpusChoice::Single(_) => {
                    bail!("operator-bound needs the default corpus (ratio sup over members)")
                }
            };
            let report =
                embeddings::verify_operator_bound(&op, &source, &target, &grid, &corpus_spec, &family)
                    .map_err(|e| anyhow!("{e}"))?;
            let config = serde_json::json!({
                "command": "verify operator-bound", "operator": operator, "alpha": alpha,
                "kernel": kernel, "b": b, "p": p, "q": q, "target": target, "relation": relation,
                "grid": suite.grid, "family": suite.family, "corpus": suite.corpus,
            });
            finish_suite(&suite, config, vec![report])
        }
        VerifyCmd::BmoLower {
            kernel,
            b,
            z0,
            cube,
            m,
            margin,
            p,
            q,
            eps_id,
            expansion_out,
            expansion_in,
            suite,
        } => {
            let grid = parse_grid(&suite.grid)?;
            let k = KernelSpec::parse(&kernel).map_err(|e| anyhow!("{e}"))?;
            let symbol = GridFunction::sample(&grid, &parse_generator(&b)?)
                .map_err(|e| anyhow!("{e}"))?;
            let z0_vec: Vec<f64> = z0
                .split(',')
                .map(|s| s.parse::<f64>().context("bad z0 component"))
                .collect::<Result<_>>()?;
            let (center_part, side_part) = cube
                .rsplit_once(':')
                .ok_or_else(|| anyhow!("cube spec '{cube}' is not CENTER[,CENTER2]:SIDE"))?;
            let x0: Vec<f64> = center_part
                .split(',')
                .map(|s| s.parse::<f64>().context("bad cube center"))
                .collect::<Result<_>>()?;
            let side: f64 = side_part.parse().context("bad cube side")?;

            let expansion = match &expansion_in {
                Some(path) => FourierExpansion::read_json(path).map_err(|e| anyhow!("{e}"))?,
                None => paluszynski::reciprocal_expansion(&k, &z0_vec, m, margin)
                    .map_err(|e| anyhow!("{e}"))?,
            };
            if let Some(path) = &expansion_out {
                expansion.write_json(path).map_err(|e| anyhow!("{e}"))?;
                println!("expansion cache written to {}", path.display());
            }
            let identity =
                paluszynski::oscillation_identity_check(&symbol, &k, &expansion, &x0, side, eps_id)
                    .map_err(|e| anyhow!("{e}"))?;
            let lower = paluszynski::bmo_lower_bound(&symbol, &k, &expansion, &x0, side, p, q)
                .map_err(|e| anyhow!("{e}"))?;
            println!(
                "implied lower bound on the weak operator norm: {:.6e} (empirical {:.6e})",
                lower.implied_lower_bound, lower.empirical_lower_bound
            );
            let mut reports = vec![identity];
            reports.extend(lower.links.iter().cloned());
            let config = serde_json::json!({
                "command": "verify bmo-lower", "kernel": kernel, "b": b, "z0": z0,
                "cube": cube, "M": m, "margin": margin, "p": p, "q": q, "eps_id": eps_id,
                "grid": suite.grid,
                "reconstruction_error": expansion.reconstruction_error(),
                "sum_abs_coeffs": expansion.sum_abs_coeffs(),
                "tail_estimate": expansion.tail_estimate(),
                "implied_lower_bound": lower.implied_lower_bound,
                "empirical_lower_bound": lower.empirical_lower_bound,
            });
            finish_suite(&suite, config, reports)
        }
    }
}

fn corpus_list(cmd: CorpusCmd) -> Result<u8> {
    let CorpusCmd::List { grid, seed, count, beta_max } = cmd;
    let g = parse_grid(&grid)?;
    let members = build_corpus(
        &g,
        &morrey_core::corpus::CorpusSpec { seed, count, beta_max },
    )
    .map_err(|e| anyhow!("{e}"))?;
    for (i, entry) in members.iter().enumerate() {
        println!("{i:4}  {}", entry.id);
    }
    Ok(0)
}
