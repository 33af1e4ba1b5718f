//! Verifiers for the embedding, chain, domination, oscillation-equivalence
//! and operator-bound claims.
//!
//! Exactness policy: claims whose proofs are per-cube or per-point
//! inequalities (the weak-to-strong embedding, Chebyshev, the pointwise
//! domination) are tested at tolerance 0 — they hold exactly on the discrete
//! measure. Norm equivalences with unspecified analytic constants (the
//! oscillation forms, the final chain link, the operator bounds) are tested
//! as bounded-ratio properties with refinement stability, and their reports
//! are marked non-exact so exit codes only reflect the exact claims.

use crate::corpus::{build_corpus, CorpusSpec};
use crate::error::{Error, Result};
use crate::grid::{Cube, CubeFamily, Generator, Grid, GridFunction};
use crate::norms::{
    self, lipschitz_norm_diff, lipschitz_norm_osc, lp_norm, morrey_norm_with_witness,
    weak_lp_norm, weak_morrey_norm_with_witness, NormParams, OscForm, RELATION_TOL,
};
use crate::operators::{commutator_kernel_form, frac_integral, frac_integral_no_diagonal, KernelSpec};
use crate::sum::csum;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Extremal location attached to a report: the cube or point where the
/// checked quantity peaks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cube: Option<Cube>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    pub note: String,
}

/// One verified claim: `pass` iff `lhs <= rhs` within `tolerance`
/// (relative; 0 for exact claims). `exact` marks the claims whose failure
/// should flip a process exit code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub claim: String,
    pub detail: String,
    pub lhs: f64,
    pub rhs: f64,
    pub constant_used: f64,
    pub tolerance: f64,
    pub exact: bool,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl Report {
    pub fn check(
        claim: impl Into<String>,
        detail: impl Into<String>,
        lhs: f64,
        rhs: f64,
        constant_used: f64,
        tolerance: f64,
        exact: bool,
    ) -> Self {
        let pass = lhs <= rhs + tolerance * rhs.abs();
        Report {
            claim: claim.into(),
            detail: detail.into(),
            lhs,
            rhs,
            constant_used,
            tolerance,
            exact,
            pass,
            witness: None,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_witness(mut self, witness: Witness) -> Self {
        self.witness = Some(witness);
        self
    }

    pub fn with_meta(mut self, key: &str, value: impl Serialize) -> Self {
        self.metadata.insert(
            key.to_string(),
            serde_json::to_value(value).expect("serializable metadata"),
        );
        self
    }

    /// One-line summary for terminal output.
    pub fn summary(&self) -> String {
        format!(
            "{}: {} (lhs={:.6e}, rhs={:.6e})",
            self.claim,
            if self.pass { "PASS" } else { "FAIL" },
            self.lhs,
            self.rhs
        )
    }
}

/// The explicit constant `2 (q1/(q2-q1))^{1/q2}` of the weak-to-strong
/// Morrey embedding.
pub fn embedding_constant(q1: f64, q2: f64) -> Result<f64> {
    if !(1.0 <= q1 && q1 < q2) {
        return Err(Error::InvalidParams(format!(
            "embedding constant needs 1 <= q1 < q2, got q1={q1}, q2={q2}"
        )));
    }
    Ok(2.0 * (q1 / (q2 - q1)).powf(1.0 / q2))
}

/// The level-split threshold `N = wm |Q|^{-1/p} (q1/(q2-q1))^{1/q2}` from
/// the embedding's layer-cake argument.
pub fn proof_threshold(wm_norm: f64, cube_measure: f64, p: f64, q1: f64, q2: f64) -> Result<f64> {
    if !(wm_norm >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "weak norm must be nonnegative, got {wm_norm}"
        )));
    }
    if !(cube_measure > 0.0) {
        return Err(Error::InvalidParams(format!(
            "cube measure must be positive, got {cube_measure}"
        )));
    }
    if !(1.0 <= q1 && q1 < q2 && q2 <= p) {
        return Err(Error::InvalidParams(format!(
            "threshold needs 1 <= q1 < q2 <= p, got q1={q1}, q2={q2}, p={p}"
        )));
    }
    Ok(wm_norm * cube_measure.powf(-1.0 / p) * (q1 / (q2 - q1)).powf(1.0 / q2))
}

/// Layer-cake route to the power integral: exact piecewise integration of
/// the step distribution function,
/// `q int_0^inf lambda^{q-1} measure{|f|>lambda} dlambda
///  = sum_k measure_k (v_k^q - v_{k+1}^q)`.
pub fn layer_cake_integral(f: &GridFunction, q: f64, region: &Cube) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::InvalidParams(format!("need q >= 1, got {q}")));
    }
    let dist = norms::distribution_function(f, region)?;
    let values = dist.values();
    let counts = dist.counts();
    let cm = dist.cell_measure();
    let terms = (0..values.len()).map(|k| {
        let upper = values[k].powf(q);
        let lower = if k + 1 < values.len() {
            values[k + 1].powf(q)
        } else {
            0.0
        };
        counts[k] as f64 * cm * (upper - lower)
    });
    Ok(csum(terms))
}

/// Weak-to-strong embedding on a shared cube family:
/// `morrey(f; p, q1) <= 2 (q1/(q2-q1))^{1/q2} weak_morrey(f; p, q2)`,
/// exact (tolerance 0) because the layer-cake argument is per cube.
pub fn verify_embedding(
    f: &GridFunction,
    p: f64,
    q1: f64,
    q2: f64,
    family: &CubeFamily,
) -> Result<Report> {
    if !(1.0 <= q1 && q1 < q2 && q2 <= p) {
        return Err(Error::InvalidParams(format!(
            "embedding needs 1 <= q1 < q2 <= p, got q1={q1}, q2={q2}, p={p}"
        )));
    }
    let constant = embedding_constant(q1, q2)?;
    let (lhs, witness_cube) =
        morrey_norm_with_witness(f, &NormParams { p, q: q1, alpha: None }, family)?;
    let (weak, _) = weak_morrey_norm_with_witness(f, &NormParams { p, q: q2, alpha: None }, family)?;
    let rhs = constant * weak;
    let mut report = Report::check(
        "embedding.weak-to-strong",
        format!("morrey(p={p}, q1={q1}) <= 2(q1/(q2-q1))^(1/q2) * weak_morrey(p={p}, q2={q2})"),
        lhs,
        rhs,
        constant,
        0.0,
        true,
    )
    .with_meta("weak_morrey", weak);
    if let Some(cube) = witness_cube {
        report = report.with_witness(Witness {
            cube: Some(cube),
            point: None,
            note: "cube attaining the strong-norm supremum".into(),
        });
    }
    Ok(report)
}

/// The three-link chain
/// `morrey(q1) <= C_embed * weak_morrey(q2) <= C_embed * morrey(q2)` plus the
/// final comparison against the weak Lebesgue norm, whose constant is not
/// explicit; that link is reported as an empirical ratio.
pub fn verify_chain(
    f: &GridFunction,
    p: f64,
    q1: f64,
    q2: f64,
    family: &CubeFamily,
) -> Result<Vec<Report>> {
    if !(1.0 <= q1 && q1 < q2 && q2 < p) {
        return Err(Error::InvalidParams(format!(
            "chain needs 1 <= q1 < q2 < p, got q1={q1}, q2={q2}, p={p}"
        )));
    }
    let c_embed = embedding_constant(q1, q2)?;
    let (m1, _) = morrey_norm_with_witness(f, &NormParams { p, q: q1, alpha: None }, family)?;
    let (wm2, _) = weak_morrey_norm_with_witness(f, &NormParams { p, q: q2, alpha: None }, family)?;
    let (m2, _) = morrey_norm_with_witness(f, &NormParams { p, q: q2, alpha: None }, family)?;
    let (wlp, _) = weak_morrey_norm_with_witness(f, &NormParams { p, q: p, alpha: None }, family)?;

    let values = serde_json::json!({
        "morrey_q1": m1, "weak_morrey_q2": wm2, "morrey_q2": m2, "weak_lebesgue": wlp,
    });
    let link1 = Report::check(
        "chain.embedding",
        "morrey(q1) <= C_embed * weak_morrey(q2)",
        m1,
        c_embed * wm2,
        c_embed,
        0.0,
        true,
    )
    .with_meta("values", &values);
    let link2 = Report::check(
        "chain.chebyshev",
        "weak_morrey(q2) <= morrey(q2), constant exactly 1",
        wm2,
        m2,
        1.0,
        0.0,
        true,
    )
    .with_meta("values", &values);
    let ratio = if wlp > 0.0 { m2 / wlp } else { 0.0 };
    let link3 = Report::check(
        "chain.weak-lebesgue",
        "morrey(q2) <= C * weak_lebesgue (constant not explicit; empirical ratio reported)",
        m2,
        f64::MAX,
        f64::NAN,
        0.0,
        false,
    )
    .with_meta("values", &values)
    .with_meta("empirical_ratio", ratio)
    .with_meta("weak_lebesgue", wlp);
    Ok(vec![link1, link2, link3])
}

/// Pointwise domination of the commutator by the fractional integral:
/// `|[b,T]f(x_i)| <= L * I_alpha(|f|)(x_i)` with `L` the difference-quotient
/// Lipschitz seminorm of `b`, both sides on identical quadrature (diagonal
/// excluded), so the bound is term-by-term and exact.
pub fn verify_pointwise_domination(
    b: &GridFunction,
    alpha: f64,
    f: &GridFunction,
    kernel: &KernelSpec,
) -> Result<Report> {
    b.check_same_grid(f)?;
    let lip = lipschitz_norm_diff(b, alpha)?;
    let comm = commutator_kernel_form(kernel, b, f)?;
    let ia = frac_integral_no_diagonal(alpha, &f.modulus())?;

    let grid = f.grid();
    let mut worst_margin = f64::NEG_INFINITY;
    let mut worst_point = 0usize;
    let mut max_lhs = 0.0f64;
    for i in 0..grid.num_cells() {
        let lhs_i = comm.value(i).norm();
        let rhs_i = lip * ia.value(i).re;
        let margin = lhs_i - rhs_i;
        max_lhs = max_lhs.max(lhs_i);
        if margin > worst_margin {
            worst_margin = margin;
            worst_point = i;
        }
    }
    let point = grid.midpoint(worst_point)[..grid.dim()].to_vec();
    Ok(Report::check(
        "domination.pointwise",
        format!("max_i |[b,T]f(x_i)| - L*I_alpha(|f|)(x_i) <= 0 with L = lip_diff(b, {alpha})"),
        worst_margin,
        0.0,
        lip,
        0.0,
        true,
    )
    .with_witness(Witness {
        cube: None,
        point: Some(point),
        note: "grid point with the largest margin".into(),
    })
    .with_meta("lipschitz_diff", lip)
    .with_meta("max_commutator", max_lhs))
}

/// Lipschitz-oscillation equivalence: pairwise ratios among the
/// difference-quotient form and the three oscillation forms must lie in
/// `[1/c_star, c_star]`. Constants are not explicit, so this is a
/// bounded-ratio property, not an exact claim.
pub fn verify_lemma_oscillation(
    b: &GridFunction,
    alpha: f64,
    family: &CubeFamily,
    c_star: f64,
) -> Result<Report> {
    if !(c_star > 1.0) {
        return Err(Error::InvalidParams(format!(
            "ratio band bound must exceed 1, got {c_star}"
        )));
    }
    let diff = lipschitz_norm_diff(b, alpha)?;
    let integral = lipschitz_norm_osc(b, alpha, OscForm::Integral, family)?;
    let power2 = lipschitz_norm_osc(b, alpha, OscForm::PowerMean(2.0), family)?;
    let ess = lipschitz_norm_osc(b, alpha, OscForm::EssSup, family)?;
    let forms = [
        ("diff", diff),
        ("integral", integral),
        ("power_mean_q2", power2),
        ("ess_sup", ess),
    ];

    let all_zero = forms.iter().all(|(_, v)| *v == 0.0);
    let mut worst = 1.0f64;
    let mut worst_pair = ("-", "-");
    if !all_zero {
        for (i, (name_i, vi)) in forms.iter().enumerate() {
            for (name_j, vj) in forms.iter().skip(i + 1) {
                let ratio = if *vj == 0.0 { f64::INFINITY } else { vi / vj };
                let dev = ratio.max(1.0 / ratio);
                if dev > worst {
                    worst = dev;
                    worst_pair = (name_i, name_j);
                }
            }
        }
    }
    let mut report = Report::check(
        "lipschitz.oscillation-equivalence",
        format!("pairwise form ratios within [1/{c_star}, {c_star}] (skipped when all forms vanish)"),
        if all_zero { 1.0 } else { worst },
        c_star,
        c_star,
        0.0,
        false,
    );
    for (name, v) in forms {
        report = report.with_meta(name, v);
    }
    Ok(report
        .with_meta("worst_pair", format!("{}/{}", worst_pair.0, worst_pair.1))
        .with_meta("all_zero", all_zero))
}

/// Which operator an empirical bound check exercises.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OperatorSpec {
    FracIntegral { alpha: f64 },
    Commutator {
        kernel: KernelSpec,
        symbol: Generator,
        /// Holder order of the symbol when the target space is fractional;
        /// `None` for the bounded-mean-oscillation (same-exponent) case.
        alpha: Option<f64>,
    },
}

/// Which norm measures source or target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormSpec {
    Lp { p: f64 },
    WeakLp { p: f64 },
    Morrey { p: f64, q: f64 },
    WeakMorrey { p: f64, q: f64 },
}

impl NormSpec {
    pub fn exponents(&self) -> (f64, f64) {
        match *self {
            NormSpec::Lp { p } | NormSpec::WeakLp { p } => (p, p),
            NormSpec::Morrey { p, q } | NormSpec::WeakMorrey { p, q } => (p, q),
        }
    }

    pub fn evaluate(&self, f: &GridFunction, family: &CubeFamily) -> Result<f64> {
        let full = f.grid().full_box_cube()?;
        match *self {
            NormSpec::Lp { p } => lp_norm(f, p, &full),
            NormSpec::WeakLp { p } => weak_lp_norm(f, p, &full),
            NormSpec::Morrey { p, q } => {
                norms::morrey_norm(f, &NormParams { p, q, alpha: None }, family)
            }
            NormSpec::WeakMorrey { p, q } => {
                norms::weak_morrey_norm(f, &NormParams { p, q, alpha: None }, family)
            }
        }
    }

    pub fn label(&self) -> String {
        match *self {
            NormSpec::Lp { p } => format!("L^{p}"),
            NormSpec::WeakLp { p } => format!("weak-L^{p}"),
            NormSpec::Morrey { p, q } => format!("M^{p}_{q}"),
            NormSpec::WeakMorrey { p, q } => format!("WM^{p}_{q}"),
        }
    }
}

/// Enforce the exponent relations tying source to target.
fn validate_operator_relations(
    op: &OperatorSpec,
    source: &NormSpec,
    target: &NormSpec,
    dim: usize,
) -> Result<()> {
    let (p, q) = source.exponents();
    let (s, t) = target.exponents();
    let n = dim as f64;
    let frac_relations = |alpha: f64| -> Result<()> {
        if (1.0 / s - (1.0 / p - alpha / n)).abs() > RELATION_TOL {
            return Err(Error::InvalidParams(format!(
                "target exponent s={s} violates 1/s = 1/p - alpha/n for p={p}, alpha={alpha}, n={n}"
            )));
        }
        let peetre_ok = (1.0 / t - (1.0 / q - alpha / n)).abs() <= RELATION_TOL;
        let adams_ok = (t / s - q / p).abs() <= RELATION_TOL;
        if !(peetre_ok || adams_ok) {
            return Err(Error::InvalidParams(format!(
                "target exponent t={t} satisfies neither 1/t = 1/q - alpha/n nor t/s = q/p \
                 (q={q}, s={s}, alpha={alpha}, n={n})"
            )));
        }
        Ok(())
    };
    match op {
        OperatorSpec::FracIntegral { alpha } => frac_relations(*alpha),
        OperatorSpec::Commutator { alpha: Some(a), .. } => frac_relations(*a),
        OperatorSpec::Commutator { alpha: None, .. } => {
            if (s - p).abs() > RELATION_TOL || (t - q).abs() > RELATION_TOL {
                return Err(Error::InvalidParams(format!(
                    "same-exponent commutator bound needs (s,t) = (p,q), got ({s},{t}) vs ({p},{q})"
                )));
            }
            Ok(())
        }
    }
}

fn apply_operator(op: &OperatorSpec, f: &GridFunction) -> Result<GridFunction> {
    match op {
        OperatorSpec::FracIntegral { alpha } => frac_integral(*alpha, f),
        OperatorSpec::Commutator { kernel, symbol, .. } => {
            let b = GridFunction::sample(f.grid(), symbol)?;
            commutator_kernel_form(kernel, &b, f)
        }
    }
}

fn ratio_sup_over_corpus(
    op: &OperatorSpec,
    source: &NormSpec,
    target: &NormSpec,
    grid: &Grid,
    corpus_spec: &CorpusSpec,
    family: &CubeFamily,
) -> Result<(f64, Option<String>)> {
    let corpus = build_corpus(grid, corpus_spec)?;
    let mut sup = 0.0f64;
    let mut argmax = None;
    for entry in &corpus {
        let src = source.evaluate(&entry.function, family)?;
        if src == 0.0 {
            // 0/0 members are excluded from the sup by rule
            continue;
        }
        let image = apply_operator(op, &entry.function)?;
        let tgt = target.evaluate(&image, family)?;
        let ratio = tgt / src;
        if ratio > sup {
            sup = ratio;
            argmax = Some(entry.id.clone());
        }
    }
    Ok((sup, argmax))
}

/// Relative change allowed between the coarse and refined ratio sups.
pub const OPERATOR_BOUND_STABILITY: f64 = 0.25;

/// Empirical operator-norm check: the sup over a seeded corpus of
/// `target_norm(op f) / source_norm(f)` must be finite and move less than
/// [`OPERATOR_BOUND_STABILITY`] under one grid refinement. The analytic
/// constants are not reproducible, so this is a stability property.
pub fn verify_operator_bound(
    op: &OperatorSpec,
    source: &NormSpec,
    target: &NormSpec,
    grid: &Grid,
    corpus_spec: &CorpusSpec,
    family: &CubeFamily,
) -> Result<Report> {
    validate_operator_relations(op, source, target, grid.dim())?;
    let (coarse, witness) = ratio_sup_over_corpus(op, source, target, grid, corpus_spec, family)?;
    let fine_grid = grid.refine(2)?;
    let (fine, _) = ratio_sup_over_corpus(op, source, target, &fine_grid, corpus_spec, family)?;
    let change = if coarse > 0.0 {
        (fine - coarse).abs() / coarse
    } else {
        f64::INFINITY
    };
    let op_label = match op {
        OperatorSpec::FracIntegral { alpha } => format!("I_{alpha}"),
        OperatorSpec::Commutator { kernel, .. } => format!("[b,T_{}]", kernel.name()),
    };
    let mut report = Report::check(
        "operator-bound.stability",
        format!(
            "{}: {} -> {} ratio sup finite, change under refinement < {}",
            op_label,
            source.label(),
            target.label(),
            OPERATOR_BOUND_STABILITY
        ),
        change,
        OPERATOR_BOUND_STABILITY,
        f64::NAN,
        0.0,
        false,
    )
    .with_meta("ratio_coarse", coarse)
    .with_meta("ratio_fine", fine)
    .with_meta("grid_coarse", grid.resolution())
    .with_meta("grid_fine", fine_grid.resolution());
    report.pass = report.pass && coarse.is_finite() && fine.is_finite() && coarse > 0.0;
    if let Some(id) = witness {
        report = report.with_meta("argmax_member", id);
    }
    Ok(report)
}
