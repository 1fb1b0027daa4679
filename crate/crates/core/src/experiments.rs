//! Scenario runners that measure boundedness and divergence at finite resolution.
//!
//! Every runner returns a [`ScenarioResult`]: a table of per-point
//! measurements, a handful of empirical constants, a verdict and, where the
//! scenario has one, the trace the verdict was read from. Random inputs come
//! from one ChaCha8 stream per `(resolution, trial)`, so results depend only
//! on the seed and not on thread scheduling.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{DigitConvention, GeneratorSequence, VIndex};
use crate::io::fmt_sig12;
use crate::martingale::{
    build_counterexample, default_alphas, select_sharpness_subsequence, spread, validate_atom,
    Coset, LambdaRule, MartingaleSpec, PAtom, PhiRule,
};
use crate::norms::{
    hardy_norm, hardy_power, lebesgue_table, lp_norm, modulus_hp, restricted_maximal,
    select_convention, support_measure, weak_lp,
};
use crate::transform::{
    dirichlet_closed, partial_sum, DirichletSweep, Grid, GridFunction, PartialSumSweep,
};

pub const DEFAULT_SEED: u64 = 0x5eed_0001;

/// Cell budget used by scans unless configured otherwise.
pub const DEFAULT_SCAN_CELLS: u64 = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Bounded,
    Growing,
    Violated,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Bounded => "bounded",
            Verdict::Growing => "growing",
            Verdict::Violated => "violated",
        })
    }
}

/// Thresholds shared by the scans.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub seed: u64,
    /// Random inputs per resolution.
    pub trials: usize,
    /// Largest allowed quotient of a constant measured at two resolutions.
    pub stability_factor: f64,
    /// A trace is growing if it increases strictly over this many consecutive points ...
    pub growth_run: usize,
    /// ... and its last value in that run is at least this multiple of the first.
    pub growth_total: f64,
    /// Desk-scale stand-in for `sup = ∞`: the sequence must set a new record this many times.
    pub record_increases: usize,
    pub max_cells: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            trials: 50,
            stability_factor: 2.0,
            growth_run: 4,
            growth_total: 4.0,
            record_increases: 2,
            max_cells: DEFAULT_SCAN_CELLS,
        }
    }
}

impl ScanConfig {
    fn grid(&self, gens: &Arc<GeneratorSequence>, resolution: usize) -> Result<Grid> {
        Grid::with_cap(gens.clone(), resolution, self.max_cells)
    }
}

/// Measurements, constants and verdict of one scenario run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub id: String,
    pub seed: u64,
    pub params: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub constants: BTreeMap<String, f64>,
    pub verdict: Verdict,
    pub trace_label: String,
    pub trace: Vec<f64>,
    pub notes: Vec<String>,
}

impl ScenarioResult {
    fn new(id: &str, seed: u64, columns: &[&str]) -> Self {
        Self {
            id: id.to_string(),
            seed,
            params: BTreeMap::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            constants: BTreeMap::new(),
            verdict: Verdict::Bounded,
            trace_label: String::new(),
            trace: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    fn constant(&mut self, key: &str, value: f64) {
        self.constants.insert(key.to_string(), value);
    }

    fn downgrade(&mut self, verdict: Verdict) {
        let rank = |v: Verdict| match v {
            Verdict::Bounded => 0,
            Verdict::Growing => 1,
            Verdict::Violated => 2,
        };
        if rank(verdict) > rank(self.verdict) {
            self.verdict = verdict;
        }
    }

    /// Column `name` as a vector.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Table as CSV at 12 significant digits, preceded by `# key=value` lines
    /// for the id, seed, verdict, parameters and constants.
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "# id={}", self.id)?;
        writeln!(out, "# seed={}", self.seed)?;
        writeln!(out, "# verdict={}", self.verdict)?;
        for (k, v) in &self.params {
            writeln!(out, "# {k}={v}")?;
        }
        for (k, v) in &self.constants {
            writeln!(out, "# {k}={}", fmt_sig12(*v))?;
        }
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| fmt_sig12(x)).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    /// Line chart of the positive entries of the trace on a log-scale y axis.
    pub fn trace_svg(&self) -> Option<String> {
        let points: Vec<(usize, f64)> = self
            .trace
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > 0.0 && v.is_finite())
            .map(|(i, v)| (i, v.log10()))
            .collect();
        if points.len() < 2 {
            return None;
        }
        let (w, h, pad) = (640.0, 400.0, 48.0);
        let x_max = points.last().map(|p| p.0).unwrap_or(1).max(1) as f64;
        let lo = points
            .iter()
            .map(|p| p.1)
            .fold(f64::INFINITY, f64::min)
            .floor();
        let hi = points
            .iter()
            .map(|p| p.1)
            .fold(f64::NEG_INFINITY, f64::max)
            .ceil();
        let span = (hi - lo).max(1.0);
        let sx = |i: usize| pad + (w - 2.0 * pad) * i as f64 / x_max;
        let sy = |y: f64| h - pad - (h - 2.0 * pad) * (y - lo) / span;
        let mut svg = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"12\">\n"
        );
        svg += &format!(
            "<text x=\"{pad}\" y=\"20\">{} ({}, log scale)</text>\n",
            self.id, self.trace_label
        );
        svg += &format!(
            "<line x1=\"{pad}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"black\"/>\n<line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{y}\" stroke=\"black\"/>\n",
            y = h - pad,
            x2 = w - pad
        );
        for e in lo as i32..=hi as i32 {
            let y = sy(e as f64);
            svg += &format!(
                "<text x=\"4\" y=\"{y:.1}\">1e{e}</text>\n<line x1=\"{pad}\" y1=\"{y:.1}\" x2=\"{x2}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>\n",
                x2 = w - pad
            );
        }
        let path: Vec<String> = points
            .iter()
            .map(|&(i, y)| format!("{:.1},{:.1}", sx(i), sy(y)))
            .collect();
        svg += &format!(
            "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"{}\"/>\n",
            path.join(" ")
        );
        for &(i, y) in &points {
            svg += &format!(
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"steelblue\"/>\n",
                sx(i),
                sy(y)
            );
        }
        svg += "</svg>\n";
        Some(svg)
    }
}

/// The longest strictly increasing run of consecutive entries with at least
/// `run` points whose last value is at least `total` times its first, as
/// `(start, length)`.
pub fn growing_run(trace: &[f64], run: usize, total: f64) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = 0;
    for end in 0..trace.len() {
        let breaks = end + 1 == trace.len()
            || trace[end + 1].partial_cmp(&trace[end]) != Some(std::cmp::Ordering::Greater);
        if !breaks {
            continue;
        }
        let len = end - start + 1;
        if len >= run
            && trace[start] > 0.0
            && trace[end] >= total * trace[start]
            && best.is_none_or(|(_, l)| len > l)
        {
            best = Some((start, len));
        }
        start = end + 1;
    }
    best
}

/// Number of times the sequence sets a new strict maximum after its first entry.
pub fn record_increases(values: &[f64]) -> usize {
    let mut count = 0;
    let mut best = match values.first() {
        Some(&v) => v,
        None => return 0,
    };
    for &v in &values[1..] {
        if v > best {
            count += 1;
            best = v;
        }
    }
    count
}

/// `max / min` of positive values; `1` for fewer than two values.
pub fn spread_quotient(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    if values.len() < 2 || hi == lo {
        1.0
    } else if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// The random stream of one `(resolution, trial)` point under `seed`.
pub fn stream(seed: u64, resolution: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((resolution as u64) << 32) | trial as u64);
    rng
}

/// Values with real and imaginary parts uniform in `[-1, 1)`.
pub fn random_function(grid: &Grid, rng: &mut impl Rng) -> GridFunction {
    GridFunction::from_fn(grid, |_| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// Cells on which a random atom takes independent values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomCells {
    /// The `m_r` rank-`(r+1)` children of the support `I_r(x)`.
    Children,
    /// Every rank-`N` cell of the support.
    #[default]
    Leaves,
}

impl FromStr for AtomCells {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "children" => Ok(AtomCells::Children),
            "leaves" => Ok(AtomCells::Leaves),
            _ => Err(Error::InvalidArgument(format!("unknown atom cells {s:?}"))),
        }
    }
}

/// A random p-atom supported on `I_rank(x)`: uniform values on the chosen
/// cells, mean removed, scaled to 90% of `M_rank^{1/p}`.
pub fn random_atom(
    grid: &Grid,
    p: f64,
    rank: usize,
    representative: usize,
    cells: AtomCells,
    rng: &mut impl Rng,
) -> Result<PAtom> {
    if rank >= grid.resolution() {
        return Err(Error::InvalidArgument(format!(
            "support rank {rank} leaves no room below resolution {}",
            grid.resolution()
        )));
    }
    let support = Coset {
        rank,
        representative: representative % grid.base(rank),
    };
    let block = grid.base(rank);
    let children = grid.radices()[rank] as usize;
    let draws: Vec<f64> = match cells {
        AtomCells::Children => (0..children).map(|_| rng.random_range(-1.0..1.0)).collect(),
        AtomCells::Leaves => (0..grid.size() / block)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect(),
    };
    let mut values = vec![0.0; grid.size()];
    for (slot, i) in support.members(grid).enumerate() {
        values[i] = match cells {
            AtomCells::Children => draws[slot % children],
            AtomCells::Leaves => draws[slot],
        };
    }
    let count = grid.size() / block;
    let mean = support.members(grid).map(|i| values[i]).sum::<f64>() / count as f64;
    for i in support.members(grid) {
        values[i] -= mean;
    }
    let sup = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if sup == 0.0 {
        return Err(Error::InvalidArgument("degenerate random atom".into()));
    }
    let scale = 0.9 * (block as f64).powf(1.0 / p) / sup;
    for v in &mut values {
        *v *= scale;
    }
    validate_atom(&GridFunction::from_real(grid, values)?, p, support)
}

fn index(m: &GeneratorSequence, n: usize) -> Result<VIndex> {
    m.decompose(n as u64)
}

/// `(M_{⟨n⟩}/M_{|n|})^{1/p-1}`.
fn inverse_rate(m: &GeneratorSequence, n: usize, p: f64) -> Result<f64> {
    Ok(spread(&index(m, n)?, m).powf(-(1.0 / p - 1.0)))
}

fn check_open_exponent(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidExponent(p))
    }
}

/// Normalised partial sums of random atoms:
/// `r(n, a) = ‖S_n a‖_{H_p} (M_{⟨n⟩}/M_{|n|})^{1/p-1}` for every `1 ≤ n ≤ M_N`.
///
/// Records the maximum per resolution; bounded when the maximum at the
/// finest resolution is at most `stability_factor` times the one at the
/// coarsest.
pub fn atom_ratio_scan(
    p: f64,
    gens: &Arc<GeneratorSequence>,
    resolutions: &[usize],
    cells: AtomCells,
    cfg: &ScanConfig,
) -> Result<ScenarioResult> {
    check_open_exponent(p)?;
    let mut out = ScenarioResult::new(
        "atom_ratio",
        cfg.seed,
        &[
            "N",
            "trial",
            "support_rank",
            "max_ratio",
            "argmax_n",
            "atom_hardy_power",
            "max_below_support",
        ],
    );
    out.param("p", p)
        .param("m", gens)
        .param("resolutions", format!("{resolutions:?}"))
        .param("trials", cfg.trials)
        .param("cells", format!("{cells:?}").to_lowercase());
    let mut maxima = Vec::new();
    for &res in resolutions {
        let grid = cfg.grid(gens, res)?;
        let m = grid.generators();
        let rates: Vec<f64> = (1..=grid.size())
            .map(|n| inverse_rate(m, n, p))
            .collect::<Result<_>>()?;
        let rows: Vec<Vec<f64>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| -> Result<Vec<f64>> {
                let mut rng = stream(cfg.seed, res, t);
                let rank = rng.random_range(0..res);
                let rep = rng.random_range(0..grid.base(rank));
                let atom = random_atom(&grid, p, rank, rep, cells, &mut rng)?;
                let mut sweep = PartialSumSweep::new(atom.values());
                let (mut best, mut arg, mut below) = (0.0f64, 0usize, 0.0f64);
                while sweep.advance() {
                    let n = sweep.index();
                    if n <= grid.base(rank) {
                        below = below.max(sweep.current().sup_norm());
                        continue;
                    }
                    let r = hardy_norm(sweep.current(), p)? * rates[n - 1];
                    if r > best {
                        best = r;
                        arg = n;
                    }
                }
                let hp = hardy_power(atom.values(), p)?;
                Ok(vec![
                    res as f64,
                    t as f64,
                    rank as f64,
                    best,
                    arg as f64,
                    hp,
                    below,
                ])
            })
            .collect::<Result<_>>()?;
        let max = rows.iter().map(|r| r[3]).fold(0.0, f64::max);
        let hp = rows.iter().map(|r| r[5]).fold(0.0, f64::max);
        let below = rows.iter().map(|r| r[6]).fold(0.0, f64::max);
        out.constant(&format!("max_ratio_N{res}"), max);
        out.constant(&format!("max_atom_hardy_power_N{res}"), hp);
        out.constant(&format!("max_below_support_N{res}"), below);
        maxima.push(max);
        out.rows.extend(rows);
    }
    out.trace_label = "max ratio per resolution".into();
    out.trace = maxima.clone();
    if let (Some(first), Some(last)) = (maxima.first(), maxima.last()) {
        let q = last / first;
        out.constant("quotient_last_first", q);
        if q > cfg.stability_factor {
            out.downgrade(Verdict::Growing);
        }
    }
    if out
        .constants
        .iter()
        .any(|(k, &v)| k.starts_with("max_below_support") && v > 1e-9)
    {
        out.downgrade(Verdict::Violated);
        out.notes
            .push("S_n a is not zero for some n ≤ M_rank".into());
    }
    Ok(out)
}

/// Index sequences used by the divergence scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceVariant {
    /// `α_k = M_k + 1` for `1 ≤ k < N`.
    MnPlusOne,
    /// A caller-supplied sequence, by default `α_k = M_{2^k} + 1`.
    General(Option<Vec<u64>>),
}

impl DivergenceVariant {
    fn name(&self) -> &'static str {
        match self {
            DivergenceVariant::MnPlusOne => "mn_plus_1",
            DivergenceVariant::General(_) => "general",
        }
    }

    fn alphas(&self, m: &GeneratorSequence, resolution: usize) -> Vec<u64> {
        match self {
            DivergenceVariant::MnPlusOne => (1..resolution).map(|k| m.base(k) + 1).collect(),
            DivergenceVariant::General(Some(a)) => a.clone(),
            DivergenceVariant::General(None) => default_alphas(m, resolution),
        }
    }
}

/// Check that `ρ(α_k)` is unbounded and that
/// `(M_{|α_k|}/M_{⟨α_k⟩})^{1/p-1} / Φ_{α_k}` is unbounded, both in the
/// desk-scale sense of [`record_increases`].
pub fn check_divergence_hypotheses(
    alphas: &[VIndex],
    p: f64,
    phi: &PhiRule,
    m: &GeneratorSequence,
    cfg: &ScanConfig,
) -> Result<()> {
    let rho: Vec<f64> = alphas.iter().map(|a| a.rho() as f64).collect();
    let quotient: Vec<f64> = alphas
        .iter()
        .map(|a| spread(a, m).powf(1.0 / p - 1.0) / phi.eval(a, m))
        .collect();
    for (condition, values) in [
        ("unbounded ρ(α_k)", rho),
        ("unbounded rate over Φ", quotient),
    ] {
        if record_increases(&values) < cfg.record_increases {
            let failing = non_records(&values);
            return Err(Error::GrowthCondition {
                condition: format!(
                    "{condition}: fewer than {} record increases",
                    cfg.record_increases
                ),
                failing,
            });
        }
    }
    Ok(())
}

fn non_records(values: &[f64]) -> Vec<usize> {
    let mut best = f64::NEG_INFINITY;
    let mut out = Vec::new();
    for (k, &v) in values.iter().enumerate() {
        if v > best {
            best = v;
        } else {
            out.push(k);
        }
    }
    out
}

/// Weak-type norms of `S_{α_k} f / Φ_{α_k}` for the divergence martingale.
///
/// For each resolution the martingale is rebuilt, the closed partial sums are
/// compared with spectral truncation, and the trace of the finest resolution
/// decides the verdict.
pub fn divergence_scan(
    p: f64,
    gens: &Arc<GeneratorSequence>,
    variant: &DivergenceVariant,
    phi: &PhiRule,
    resolutions: &[usize],
    cfg: &ScanConfig,
) -> Result<ScenarioResult> {
    check_open_exponent(p)?;
    let mut out = ScenarioResult::new(
        "divergence",
        cfg.seed,
        &[
            "N",
            "k",
            "alpha",
            "top",
            "bottom",
            "rho",
            "phi",
            "weak_partial",
            "weak_lower",
            "weak_kernel",
            "closed_error",
        ],
    );
    out.param("p", p)
        .param("m", gens)
        .param("variant", variant.name())
        .param("phi", serde_json::to_string(phi)?)
        .param("resolutions", format!("{resolutions:?}"));
    let mut trace = Vec::new();
    for &res in resolutions {
        let grid = cfg.grid(gens, res)?;
        let m = grid.generators();
        let alphas: Vec<VIndex> = variant
            .alphas(m, res)
            .iter()
            .map(|&a| m.decompose(a))
            .collect::<Result<_>>()?;
        if let DivergenceVariant::General(_) = variant {
            check_divergence_hypotheses(&alphas, p, phi, m, cfg)?;
        }
        let values: Vec<u64> = alphas.iter().map(VIndex::value).collect();
        let spec =
            build_counterexample(p, &values, LambdaRule::Divergence, Some(phi.clone()), &grid)?;
        let realized: Vec<usize> = spec.realized_terms().collect();
        let rows: Vec<Vec<f64>> = realized
            .par_iter()
            .map(|&k| -> Result<Vec<f64>> {
                let a = &spec.alphas()[k];
                let j = a.value() as usize;
                let phi_k = phi.eval(a, m);
                let (lower, kernel) = spec.closed_partial_sum_parts(j)?;
                let closed = &lower + &kernel;
                let direct = partial_sum(spec.realized(), j)?;
                Ok(vec![
                    res as f64,
                    k as f64,
                    j as f64,
                    a.top() as f64,
                    a.bottom() as f64,
                    a.rho() as f64,
                    phi_k,
                    weak_lp(&direct.scale(1.0 / phi_k), p)?,
                    weak_lp(&lower, p)?,
                    weak_lp(&kernel, p)?,
                    closed.max_abs_diff(&direct),
                ])
            })
            .collect::<Result<_>>()?;
        let closed_error = rows.iter().map(|r| r[10]).fold(0.0, f64::max);
        out.constant(&format!("closed_error_N{res}"), closed_error);
        if closed_error > 1e-9 {
            out.downgrade(Verdict::Violated);
            out.notes
                .push(format!("closed partial sums disagree at N = {res}"));
        }
        let indices: Vec<usize> = realized
            .iter()
            .map(|&k| spec.alphas()[k].value() as usize)
            .collect();
        if !indices.is_empty() {
            let star = restricted_maximal(spec.realized(), &indices)?;
            out.constant(&format!("restricted_maximal_lp_N{res}"), lp_norm(&star, p)?);
        }
        out.constant(
            &format!("hardy_norm_N{res}"),
            hardy_norm(spec.realized(), p)?,
        );
        out.constant(&format!("budget_N{res}"), spec.budget());
        trace = rows.iter().map(|r| r[7]).collect();
        out.rows.extend(rows);
    }
    out.trace_label = "weak norm of S_{α_k} f / Φ".into();
    match growing_run(&trace, cfg.growth_run, cfg.growth_total) {
        Some((start, len)) => {
            out.downgrade(Verdict::Growing);
            out.constant("growth_run_start", start as f64);
            out.constant("growth_run_length", len as f64);
            out.constant("growth_factor", trace[start + len - 1] / trace[start]);
        }
        None => out
            .notes
            .push("no growing run at the configured thresholds".into()),
    }
    out.notes
        .push("the summability condition on the weights uses M_<α_k> in place of M_<n_k>".into());
    out.trace = trace;
    Ok(out)
}

/// Index sequences with bounded `ρ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundedVariant {
    /// `n_k = M_k`, `ρ = 0`.
    Mn,
    /// `n_k = M_k + M_{k-1}`, `ρ = 1`.
    MnPlusMnMinus1,
    /// `n_k = M_k + M_{k-2}`, `ρ = 2`.
    RhoBounded,
}

impl BoundedVariant {
    pub const ALL: [BoundedVariant; 3] = [
        BoundedVariant::Mn,
        BoundedVariant::MnPlusMnMinus1,
        BoundedVariant::RhoBounded,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundedVariant::Mn => "mn",
            BoundedVariant::MnPlusMnMinus1 => "mn_plus_mn-1",
            BoundedVariant::RhoBounded => "rho_bounded",
        }
    }

    /// The indices `n_k ≤ M_N`.
    pub fn indices(self, grid: &Grid) -> Vec<usize> {
        let res = grid.resolution();
        match self {
            BoundedVariant::Mn => (0..=res).map(|k| grid.base(k)).collect(),
            BoundedVariant::MnPlusMnMinus1 => {
                (1..res).map(|k| grid.base(k) + grid.base(k - 1)).collect()
            }
            BoundedVariant::RhoBounded => {
                (2..res).map(|k| grid.base(k) + grid.base(k - 2)).collect()
            }
        }
    }
}

impl FromStr for BoundedVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown variant {s:?}")))
    }
}

fn counterexample_for(p: f64, grid: &Grid) -> Result<MartingaleSpec> {
    let alphas = default_alphas(grid.generators(), grid.resolution().max(2));
    build_counterexample(p, &alphas, LambdaRule::Divergence, None, grid)
}

/// `max_k ‖S_{n_k} f‖_{H_p} / ‖f‖_{H_p}` over random functions and the
/// divergence martingale; bounded when the maxima agree within
/// `stability_factor` across resolutions.
pub fn boundedness_scan(
    p: f64,
    gens: &Arc<GeneratorSequence>,
    variant: BoundedVariant,
    resolutions: &[usize],
    cfg: &ScanConfig,
) -> Result<ScenarioResult> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    let mut out = ScenarioResult::new(
        "boundedness",
        cfg.seed,
        &["N", "trial", "max_ratio", "argmax_n"],
    );
    out.param("p", p)
        .param("m", gens)
        .param("variant", variant.name())
        .param("resolutions", format!("{resolutions:?}"))
        .param("trials", cfg.trials);
    out.notes
        .push("trial -1 is the divergence martingale".into());
    let (mut random_max, mut spec_max) = (Vec::new(), Vec::new());
    for &res in resolutions {
        let grid = cfg.grid(gens, res)?;
        let indices = variant.indices(&grid);
        let ratio = |f: &GridFunction| -> Result<(f64, usize)> {
            let whole = hardy_norm(f, p)?;
            let mut best = (0.0, 0);
            for &n in &indices {
                let r = hardy_norm(&partial_sum(f, n)?, p)? / whole;
                if r > best.0 {
                    best = (r, n);
                }
            }
            Ok(best)
        };
        let mut rows: Vec<Vec<f64>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let f = random_function(&grid, &mut stream(cfg.seed, res, t));
                let (r, n) = ratio(&f)?;
                Ok(vec![res as f64, t as f64, r, n as f64])
            })
            .collect::<Result<_>>()?;
        let spec = counterexample_for(p, &grid)?;
        let (r, n) = ratio(spec.realized())?;
        rows.push(vec![res as f64, -1.0, r, n as f64]);
        let rmax = rows[..rows.len() - 1]
            .iter()
            .map(|r| r[2])
            .fold(0.0, f64::max);
        out.constant(&format!("max_ratio_random_N{res}"), rmax);
        out.constant(&format!("ratio_martingale_N{res}"), r);
        random_max.push(rmax);
        spec_max.push(r);
        out.rows.extend(rows);
    }
    let q_random = spread_quotient(&random_max);
    let q_spec = spread_quotient(&spec_max);
    out.constant("quotient_random", q_random);
    out.constant("quotient_martingale", q_spec);
    if q_random > cfg.stability_factor || q_spec > cfg.stability_factor {
        out.downgrade(Verdict::Growing);
    }
    out.trace_label = "martingale ratio per resolution".into();
    out.trace = spec_max;
    Ok(out)
}

/// Terms of `Σ_{k=1}^{M_N} ‖S_k f‖_p^p / k^{2-p}` and their ratio to `‖f‖_{H_p}^p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimonSum {
    pub sum: f64,
    pub hardy_power: f64,
    pub ratio: f64,
}

pub fn simon_sum(f: &GridFunction, p: f64) -> Result<SimonSum> {
    check_open_exponent(p)?;
    let mut sweep = PartialSumSweep::new(f);
    let mut sum = 0.0;
    while sweep.advance() {
        let k = sweep.index() as f64;
        sum += lp_norm(sweep.current(), p)?.powf(p) / k.powf(2.0 - p);
    }
    let hp = hardy_power(f, p)?;
    Ok(SimonSum {
        sum,
        hardy_power: hp,
        ratio: sum / hp,
    })
}

/// Stability of the Simon ratio across resolutions for random functions and
/// the divergence martingale.
pub fn simon_scan(
    p: f64,
    gens: &Arc<GeneratorSequence>,
    resolutions: &[usize],
    cfg: &ScanConfig,
) -> Result<ScenarioResult> {
    check_open_exponent(p)?;
    let mut out = ScenarioResult::new(
        "simon",
        cfg.seed,
        &["N", "trial", "sum", "hardy_power", "ratio"],
    );
    out.param("p", p)
        .param("m", gens)
        .param("resolutions", format!("{resolutions:?}"))
        .param("trials", cfg.trials);
    out.notes
        .push("trial -1 is the divergence martingale".into());
    let (mut random_max, mut spec_ratio) = (Vec::new(), Vec::new());
    for &res in resolutions {
        let grid = cfg.grid(gens, res)?;
        let mut rows: Vec<Vec<f64>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let f = random_function(&grid, &mut stream(cfg.seed, res, t));
                let s = simon_sum(&f, p)?;
                Ok(vec![res as f64, t as f64, s.sum, s.hardy_power, s.ratio])
            })
            .collect::<Result<_>>()?;
        let s = simon_sum(counterexample_for(p, &grid)?.realized(), p)?;
        rows.push(vec![res as f64, -1.0, s.sum, s.hardy_power, s.ratio]);
        let rmax = rows[..rows.len() - 1]
            .iter()
            .map(|r| r[4])
            .fold(0.0, f64::max);
        out.constant(&format!("max_ratio_random_N{res}"), rmax);
        out.constant(&format!("ratio_martingale_N{res}"), s.ratio);
        random_max.push(rmax);
        spec_ratio.push(s.ratio);
        out.rows.extend(rows);
    }
    let q_random = spread_quotient(&random_max);
    let q_spec = spread_quotient(&spec_ratio);
    out.constant("quotient_random", q_random);
    out.constant("quotient_martingale", q_spec);
    if q_random > cfg.stability_factor || q_spec > cfg.stability_factor {
        out.downgrade(Verdict::Growing);
    }
    out.trace_label = "random max ratio per resolution".into();
    out.trace = random_max;
    Ok(out)
}

/// Functions used by the modulus scan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusFunction {
    /// Weights `λ (M_{⟨α_k⟩}/M_{|α_k|})^{1/p-1}` on the greedy gap subsequence.
    Sharpness,
    /// Weights `λ (M_{⟨α_k⟩}/M_{|α_k|})^{2(1/p-1)}`, so that the modulus is
    /// `o((M_{⟨α_k⟩}/M_{|α_k|})^{1/p-1})`.
    FastDecay,
}

/// Indices `n` at which the modulus scan evaluates `S_n f - f`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusIndices {
    /// The realised `α_k` of the martingale.
    Alphas,
    /// `M_k`, `0 ≤ k ≤ N`.
    ScaledBases,
}

impl FromStr for ModulusFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sharpness" => Ok(ModulusFunction::Sharpness),
            "fast_decay" => Ok(ModulusFunction::FastDecay),
            _ => Err(Error::InvalidArgument(format!(
                "unknown modulus function {s:?}"
            ))),
        }
    }
}

impl FromStr for ModulusIndices {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alphas" => Ok(ModulusIndices::Alphas),
            "mn" => Ok(ModulusIndices::ScaledBases),
            _ => Err(Error::InvalidArgument(format!("unknown index rule {s:?}"))),
        }
    }
}

/// The martingale of the modulus scan at one resolution.
pub fn modulus_martingale(p: f64, grid: &Grid, rule: ModulusFunction) -> Result<MartingaleSpec> {
    let m = grid.generators();
    let candidates: Vec<u64> = (1..m.depth()).map(|k| m.base(k) + 1).collect();
    let alphas = select_sharpness_subsequence(&candidates, p, m)?;
    match rule {
        ModulusFunction::Sharpness => {
            build_counterexample(p, &alphas, LambdaRule::ModulusSharpness, None, grid)
        }
        ModulusFunction::FastDecay => {
            let lam = m.lambda() as f64;
            let lambdas = alphas
                .iter()
                .map(|&a| Ok(lam * spread(&m.decompose(a)?, m).powf(-2.0 * (1.0 / p - 1.0))))
                .collect::<Result<Vec<_>>>()?;
            build_counterexample(p, &alphas, LambdaRule::Explicit(lambdas), None, grid)
        }
    }
}

/// `(k, ω(1/M_k, f), ‖S_n f - f‖_{H_p})` along `n_k`, the empirical constant in
/// `‖S_n f - f‖_{H_p} ≤ C (M_{|n|}/M_{⟨n⟩})^{1/p-1} ω(1/M_k, f)` with
/// `M_k < n ≤ M_{k+1}`, and the tail bound `ω(1/M_n, f)^p ≤ C Σ_{|α_k| ≥ n} |λ_k|^p`.
///
/// The convergence criterion is read with the in-text `o(·)` condition on the
/// modulus as its hypothesis; the displayed inequality is its conclusion.
pub fn modulus_convergence_scan(
    p: f64,
    gens: &Arc<GeneratorSequence>,
    function: ModulusFunction,
    indices: ModulusIndices,
    resolutions: &[usize],
    cfg: &ScanConfig,
) -> Result<ScenarioResult> {
    check_open_exponent(p)?;
    let mut out = ScenarioResult::new(
        "modulus",
        cfg.seed,
        &[
            "N",
            "n",
            "k",
            "modulus_k",
            "modulus_top",
            "target_rate",
            "error_hp",
            "error_weak",
            "constant",
        ],
    );
    out.param("p", p)
        .param("m", gens)
        .param("function", format!("{function:?}").to_lowercase())
        .param("indices", format!("{indices:?}").to_lowercase())
        .param("resolutions", format!("{resolutions:?}"));
    out.notes.push(
        "hypothesis of the convergence statement taken as the o(·) condition on the modulus".into(),
    );
    let (mut tails, mut constants) = (Vec::new(), Vec::new());
    let mut last_rows = Vec::new();
    for &res in resolutions {
        let grid = cfg.grid(gens, res)?;
        let m = grid.generators();
        let spec = modulus_martingale(p, &grid, function)?;
        let f = spec.realized();
        let ns: Vec<usize> = match indices {
            ModulusIndices::Alphas => spec
                .realized_terms()
                .map(|k| spec.alphas()[k].value() as usize)
                .collect(),
            ModulusIndices::ScaledBases => (0..=res).map(|k| grid.base(k)).collect(),
        };
        let rows: Vec<Vec<f64>> = ns
            .par_iter()
            .map(|&n| -> Result<Vec<f64>> {
                let idx = index(m, n)?;
                // M_k < n ≤ M_{k+1}
                let k = if n == grid.base(idx.top()) {
                    idx.top().saturating_sub(1)
                } else {
                    idx.top()
                };
                let omega_k = modulus_hp(f, k, p)?;
                let omega_top = modulus_hp(f, idx.top(), p)?;
                let target = spread(&idx, m).powf(-(1.0 / p - 1.0));
                let err = &partial_sum(f, n)? - f;
                let err_hp = hardy_norm(&err, p)?;
                let constant = if omega_k > 0.0 {
                    err_hp * target / omega_k
                } else {
                    0.0
                };
                Ok(vec![
                    res as f64,
                    n as f64,
                    k as f64,
                    omega_k,
                    omega_top,
                    target,
                    err_hp,
                    weak_lp(&err, p)?,
                    constant,
                ])
            })
            .collect::<Result<_>>()?;
        let c = rows.iter().map(|r| r[8]).fold(0.0, f64::max);
        out.constant(&format!("convergence_constant_N{res}"), c);
        constants.push(c);

        let mut tail_c = 0.0f64;
        let mut tail_leak = 0.0f64;
        for n in 0..=res {
            let omega_p = modulus_hp(f, n, p)?.powf(p);
            let budget = spec.tail_budget(n);
            if budget > 0.0 {
                tail_c = tail_c.max(omega_p / budget);
            } else {
                tail_leak = tail_leak.max(omega_p);
            }
        }
        out.constant(&format!("tail_constant_N{res}"), tail_c);
        out.constant(
            &format!("atomic_constant_N{res}"),
            hardy_power(f, p)? / spec.tail_budget(0),
        );
        if tail_leak > 1e-9 {
            out.downgrade(Verdict::Violated);
            out.notes
                .push(format!("modulus non-zero past the last atom at N = {res}"));
        }
        tails.push(tail_c);

        if indices == ModulusIndices::ScaledBases {
            let gap = rows.iter().map(|r| (r[6] - r[4]).abs()).fold(0.0, f64::max);
            out.constant(&format!("identity_error_N{res}"), gap);
            if gap > 1e-9 {
                out.downgrade(Verdict::Violated);
            }
        }
        last_rows = rows.clone();
        out.rows.extend(rows);
    }
    let q_tail = spread_quotient(&tails);
    let q_c = spread_quotient(&constants);
    out.constant("quotient_tail_constant", q_tail);
    out.constant("quotient_convergence_constant", q_c);
    if q_tail > cfg.stability_factor || q_c > cfg.stability_factor {
        out.downgrade(Verdict::Growing);
    }
    if indices == ModulusIndices::Alphas && !last_rows.is_empty() {
        let rate: Vec<f64> = last_rows.iter().map(|r| r[4] / r[5]).collect();
        out.constant(
            "modulus_rate_min",
            rate.iter().copied().fold(f64::INFINITY, f64::min),
        );
        out.constant("modulus_rate_max", rate.iter().copied().fold(0.0, f64::max));
        out.constant(
            "weak_error_floor",
            last_rows.iter().map(|r| r[7]).fold(f64::INFINITY, f64::min),
        );
        out.constant(
            "error_last_over_first",
            last_rows.last().expect("non-empty")[6] / last_rows[0][6],
        );
        if function == ModulusFunction::Sharpness && spread_quotient(&rate) > cfg.stability_factor {
            out.downgrade(Verdict::Growing);
        }
    }
    out.trace_label = "H_p error along n_k".into();
    out.trace = last_rows.iter().map(|r| r[6]).collect();
    Ok(out)
}

/// `n μ(supp D_n)` against `M_{|n|}/(2M_{⟨n⟩}) ≤ n μ(supp D_n) ≤ λ M_{|n|}/M_{⟨n⟩}`
/// and `1/(2M_{⟨n⟩}) ≤ μ(supp D_n) ≤ 1/M_{⟨n⟩}` for every `1 ≤ n < M_N`.
pub fn supp_measure_scan(
    gens: &Arc<GeneratorSequence>,
    resolution: usize,
    cfg: &ScanConfig,
) -> Result<ScenarioResult> {
    let grid = cfg.grid(gens, resolution)?;
    let m = grid.generators();
    let lam = m.lambda() as f64;
    let mut out = ScenarioResult::new(
        "supp_measure",
        cfg.seed,
        &["n", "support", "n_support", "lower", "upper", "inside"],
    );
    out.param("m", gens).param("N", resolution);
    let mut sweep = DirichletSweep::new(&grid);
    let mut escapes = 0usize;
    while sweep.advance() && sweep.index() < grid.size() {
        let n = sweep.index();
        let idx = index(m, n)?;
        let mu = support_measure(sweep.current());
        let (top, bottom) = (grid.base(idx.top()) as f64, grid.base(idx.bottom()) as f64);
        let (lower, upper) = (top / (2.0 * bottom), lam * top / bottom);
        let tol = 1e-12;
        let inside = 1.0 / (2.0 * bottom) <= mu + tol
            && mu <= 1.0 / bottom + tol
            && lower <= n as f64 * mu + tol
            && n as f64 * mu <= upper + tol;
        if !inside {
            escapes += 1;
        }
        out.rows.push(vec![
            n as f64,
            mu,
            n as f64 * mu,
            lower,
            upper,
            f64::from(u8::from(inside)),
        ]);
    }
    out.constant("escapes", escapes as f64);
    if escapes > 0 {
        out.downgrade(Verdict::Violated);
    }
    out.trace_label = "n μ(supp D_n)".into();
    out.trace = out.column("n_support").unwrap_or_default();
    Ok(out)
}

/// `D_{M_k} = M_k 1_{I_k}` for `k ≤ N` and closed form against direct summation
/// for every `1 ≤ n ≤ M_N`.
pub fn kernel_identity_scan(
    gens: &Arc<GeneratorSequence>,
    resolution: usize,
    cfg: &ScanConfig,
) -> Result<ScenarioResult> {
    let grid = cfg.grid(gens, resolution)?;
    let mut out = ScenarioResult::new(
        "kernel_identity",
        cfg.seed,
        &["n", "closed_error", "indicator_error"],
    );
    out.param("m", gens).param("N", resolution);
    let check = |n: usize, direct: &GridFunction| -> Result<Vec<f64>> {
        let closed = dirichlet_closed(&grid, n)?.max_abs_diff(direct);
        let indicator = match (0..=resolution).find(|&k| grid.base(k) == n) {
            Some(k) => {
                let expected = GridFunction::from_fn(&grid, |x| {
                    Complex64::new(if grid.rank_of(x) >= k { n as f64 } else { 0.0 }, 0.0)
                });
                direct.max_abs_diff(&expected)
            }
            None => f64::NAN,
        };
        Ok(vec![n as f64, closed, indicator])
    };
    // Kernels are checked in batches to bound memory at M_N² / BATCH cells.
    const BATCH: usize = 256;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(grid.size());
    let mut batch = Vec::with_capacity(BATCH);
    let mut sweep = DirichletSweep::new(&grid);
    loop {
        let more = sweep.advance();
        if more {
            batch.push((sweep.index(), sweep.current().clone()));
        }
        if batch.len() == BATCH || (!more && !batch.is_empty()) {
            let done: Vec<Vec<f64>> = batch
                .par_iter()
                .map(|(n, d)| check(*n, d))
                .collect::<Result<_>>()?;
            rows.extend(done);
            batch.clear();
        }
        if !more {
            break;
        }
    }
    let closed = rows.iter().map(|r| r[1]).fold(0.0, f64::max);
    let indicator = rows
        .iter()
        .filter(|r| !r[2].is_nan())
        .map(|r| r[2])
        .fold(0.0, f64::max);
    out.constant("max_closed_error", closed);
    out.constant("max_indicator_error", indicator);
    if closed > 1e-9 || indicator > 1e-9 {
        out.downgrade(Verdict::Violated);
    }
    out.rows = rows
        .into_iter()
        .map(|mut r| {
            if r[2].is_nan() {
                r[2] = -1.0;
            }
            r
        })
        .collect();
    out.notes
        .push("indicator_error is -1 where n is not a scaled base".into());
    Ok(out)
}

/// For every `1 ≤ n < min(M_N, limit)` with `|n| ≠ ⟨n⟩` and every level `s < N`:
/// whether `min_{I_s \ I_{s+1}} |D_n| ≥ M_{⟨n⟩}` and whether
/// `|D_n| = |D_{n - M_{|n|}}|` there.
///
/// The pass condition is the bound on `s = ⟨n⟩`; the other levels are reported.
pub fn lower_kernel_scan(
    gens: &Arc<GeneratorSequence>,
    resolution: usize,
    limit: usize,
    cfg: &ScanConfig,
) -> Result<ScenarioResult> {
    let grid = cfg.grid(gens, resolution)?;
    let m = grid.generators();
    let end = grid.size().min(limit);
    let mut out = ScenarioResult::new(
        "kernel_lower",
        cfg.seed,
        &["s", "tested", "bound_holds", "modulus_equal", "min_margin"],
    );
    out.param("m", gens)
        .param("N", resolution)
        .param("limit", limit);
    let mut moduli: Vec<Vec<f64>> = vec![vec![0.0; grid.size()]];
    let mut sweep = DirichletSweep::new(&grid);
    while sweep.advance() && sweep.index() < end {
        moduli.push(sweep.current().abs_values());
    }
    let levels: Vec<usize> = (0..grid.size()).map(|x| grid.rank_of(x)).collect();
    let mut per_level = vec![(0usize, 0usize, 0usize, f64::INFINITY); resolution];
    let mut diagonal_margin = f64::INFINITY;
    let (mut bound_failures, mut equality_failures) = (Vec::new(), Vec::new());
    let mut failing_radices = std::collections::BTreeSet::new();
    for n in 1..moduli.len() {
        let idx = index(m, n)?;
        if idx.rho() == 0 {
            continue;
        }
        let shifted = &moduli[n - grid.base(idx.top())];
        let floor = grid.base(idx.bottom()) as f64;
        let mut min = vec![f64::INFINITY; resolution];
        let mut equal = vec![true; resolution];
        for (x, &s) in levels.iter().enumerate() {
            if s >= resolution {
                continue;
            }
            min[s] = min[s].min(moduli[n][x]);
            if (moduli[n][x] - shifted[x]).abs() > 1e-9 {
                equal[s] = false;
            }
        }
        for s in 0..resolution {
            let margin = min[s] - floor;
            let entry = &mut per_level[s];
            entry.0 += 1;
            entry.1 += usize::from(margin >= -1e-6);
            entry.2 += usize::from(equal[s]);
            entry.3 = entry.3.min(margin);
        }
        let d = min[idx.bottom()] - floor;
        diagonal_margin = diagonal_margin.min(d);
        if d < -1e-6 {
            bound_failures.push(n);
            failing_radices.insert(grid.radices()[idx.bottom()]);
        }
        if !equal[idx.bottom()] {
            equality_failures.push(n);
        }
    }
    for (s, (tested, holds, equal, margin)) in per_level.into_iter().enumerate() {
        out.rows.push(vec![
            s as f64,
            tested as f64,
            holds as f64,
            equal as f64,
            margin,
        ]);
    }
    let holding: Vec<String> = out
        .rows
        .iter()
        .filter(|r| r[1] > 0.0 && r[2] == r[1])
        .map(|r| format!("{}", r[0]))
        .collect();
    out.notes.push(format!(
        "levels s where the bound holds for every tested n: [{}]",
        holding.join(",")
    ));
    out.constant("min_margin_at_bottom", diagonal_margin);
    out.constant("bound_failures_at_bottom", bound_failures.len() as f64);
    out.constant(
        "equality_failures_at_bottom",
        equality_failures.len() as f64,
    );
    if !failing_radices.is_empty() {
        out.notes.push(format!(
            "bound fails only where m_<n> is in {failing_radices:?}"
        ));
    }
    for (what, failing) in [
        ("bound", &bound_failures),
        ("modulus equality", &equality_failures),
    ] {
        if !failing.is_empty() {
            out.downgrade(Verdict::Violated);
            out.notes.push(format!("{what} fails at n = {failing:?}"));
        }
    }
    Ok(out)
}

/// `c_s(n) = (M_N/M_s) ∫_{I_N} |D_n(x - t)| dμ(t)` for `x ∈ I_s \ I_{s+1}`,
/// maximised over `n < M_R`, `x` and the level `1 ≤ N ≤ R`, for each `R` in
/// `resolutions`; bounded when the maxima agree within `stability_factor`.
pub fn upper_kernel_scan(
    gens: &Arc<GeneratorSequence>,
    resolutions: &[usize],
    cfg: &ScanConfig,
) -> Result<ScenarioResult> {
    let mut out = ScenarioResult::new("kernel_upper", cfg.seed, &["R", "N", "s", "max_constant"]);
    out.param("m", gens)
        .param("resolutions", format!("{resolutions:?}"));
    let mut maxima = Vec::new();
    for &res in resolutions {
        let grid = cfg.grid(gens, res)?;
        let size = grid.size();
        let mut kernels = Vec::with_capacity(size);
        let mut sweep = DirichletSweep::new(&grid);
        while sweep.advance() && sweep.index() < size {
            kernels.push(sweep.current().abs_values());
        }
        let table: Vec<Vec<f64>> = (1..=res)
            .into_par_iter()
            .map(|level| {
                let block = grid.base(level);
                let mut best = vec![0.0f64; level];
                for moduli in &kernels {
                    let mut sums = vec![0.0; block];
                    for (i, v) in moduli.iter().enumerate() {
                        sums[i % block] += v;
                    }
                    for (x, sum) in sums.iter().enumerate() {
                        let s = grid.rank_of(x);
                        if s >= level {
                            continue;
                        }
                        // (1/M_R) Σ over the coset, times M_N/M_s
                        let c = sum / size as f64 * block as f64 / grid.base(s) as f64;
                        best[s] = best[s].max(c);
                    }
                }
                best
            })
            .collect();
        let mut max = 0.0f64;
        for (level, best) in table.iter().enumerate() {
            for (s, &c) in best.iter().enumerate() {
                out.rows
                    .push(vec![res as f64, (level + 1) as f64, s as f64, c]);
                max = max.max(c);
            }
        }
        out.constant(&format!("max_constant_R{res}"), max);
        maxima.push(max);
    }
    let q = spread_quotient(&maxima);
    out.constant("quotient", q);
    if q > cfg.stability_factor {
        out.downgrade(Verdict::Growing);
    }
    out.trace_label = "max constant per resolution".into();
    out.trace = maxima;
    Ok(out)
}

/// Exact Lebesgue constants with their two-sided bounds under the digit
/// convention chosen by [`select_convention`].
pub fn lebesgue_scan(
    gens: &Arc<GeneratorSequence>,
    resolution: usize,
    limit: usize,
    cfg: &ScanConfig,
) -> Result<ScenarioResult> {
    let grid = cfg.grid(gens, resolution)?;
    let verdict = select_convention(&grid, limit);
    let mut out = ScenarioResult::new(
        "lebesgue",
        cfg.seed,
        &["n", "value", "lower_bound", "upper_bound", "inside"],
    );
    out.param("m", gens)
        .param("N", resolution)
        .param("limit", limit);
    for (c, bad) in &verdict.violations {
        out.constant(&format!("violations_{}", c.name()), bad.len() as f64);
        if !bad.is_empty() {
            let shown: Vec<String> = bad.iter().take(8).map(u64::to_string).collect();
            out.notes.push(format!(
                "{} violates the bracket at n = {}…",
                c.name(),
                shown.join(",")
            ));
        }
    }
    let convention = match verdict.winner {
        Some(c) => c,
        None => {
            out.downgrade(Verdict::Violated);
            out.notes
                .push("no digit convention satisfies the bracket".into());
            DigitConvention::FromZero
        }
    };
    out.param("convention", convention.name());
    for r in lebesgue_table(&grid, limit, convention) {
        let inside = r.within_bounds();
        if !inside {
            out.downgrade(Verdict::Violated);
        }
        out.rows.push(vec![
            r.n as f64,
            r.value,
            r.lower_bound,
            r.upper_bound,
            f64::from(u8::from(inside)),
        ]);
    }
    out.trace_label = "L_n".into();
    out.trace = out.column("value").unwrap_or_default();
    Ok(out)
}
