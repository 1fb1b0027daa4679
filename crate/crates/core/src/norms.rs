//! Quasi-norms, Lebesgue constants and maximal operators at finite resolution.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{DigitConvention, Variation};
use crate::transform::{dirichlet_direct, DirichletSweep, Grid, GridFunction, PartialSumSweep};

/// Relative offset used to approach an achieved value from below in [`weak_lp`].
pub const WEAK_LP_OFFSET: f64 = 1e-12;

/// Values with modulus at or below this are treated as zero when measuring supports.
pub const SUPPORT_THRESHOLD: f64 = 1e-9;

/// Relative size below which a sample counts as an exact zero in `L_p` sums.
pub const ROUNDING_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    Lp,
    WeakLp,
    Hardy,
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormKind::Lp => "Lp",
            NormKind::WeakLp => "WeakLp",
            NormKind::Hardy => "Hardy",
        })
    }
}

/// One row of a norm table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub n: Option<u64>,
    pub resolution: usize,
    pub p: f64,
    pub kind: NormKind,
    pub value: f64,
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
}

impl NormReport {
    pub const CSV_HEADER: &'static str = "n,N,p,kind,value,lower_bound,upper_bound";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(crate::io::fmt_sig12).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}",
            self.n.map(|n| n.to_string()).unwrap_or_default(),
            self.resolution,
            crate::io::fmt_sig12(self.p),
            self.kind,
            crate::io::fmt_sig12(self.value),
            opt(self.lower_bound),
            opt(self.upper_bound)
        )
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(p));
    }
    Ok(())
}

/// `∫ |f|^p dμ` for non-negative samples on equal-measure cells.
///
/// Samples at most [`ROUNDING_FLOOR`] times the largest one are treated as
/// zero: for `p < 1` a rounding residue `ε` would otherwise contribute `ε^p`.
fn lp_power_of_moduli(moduli: &[f64], p: f64) -> f64 {
    let floor = ROUNDING_FLOOR * moduli.iter().copied().fold(0.0, f64::max);
    let sum: f64 = moduli
        .iter()
        .filter(|&&v| v > floor)
        .map(|v| v.powf(p))
        .sum();
    sum / moduli.len() as f64
}

fn lp_of_moduli(moduli: &[f64], p: f64) -> f64 {
    lp_power_of_moduli(moduli, p).powf(1.0 / p)
}

/// `‖f‖_p = (∫ |f|^p dμ)^{1/p}`.
pub fn lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(lp_of_moduli(&f.abs_values(), p))
}

/// `∫ |f|^p dμ`, the additive form of the quasi-norm.
pub fn lp_power(f: &GridFunction, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(lp_power_of_moduli(&f.abs_values(), p))
}

/// `sup_λ λ μ(|f| > λ)^{1/p}` over the achieved values of `|f|`.
///
/// Each achieved value `a` is probed at `λ = a (1 - 1e-12)`, which counts every
/// cell with `|f| ≥ a` up to rounding.
pub fn weak_lp(f: &GridFunction, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(weak_lp_of_moduli(f.abs_values(), p))
}

pub(crate) fn weak_lp_of_moduli(mut moduli: Vec<f64>, p: f64) -> f64 {
    let total = moduli.len() as f64;
    moduli.sort_by(|a, b| b.total_cmp(a));
    let mut best = 0.0f64;
    let mut i = 0;
    while i < moduli.len() {
        let a = moduli[i];
        if a <= 0.0 {
            break;
        }
        let level = a * (1.0 - WEAK_LP_OFFSET);
        let count = moduli.partition_point(|&v| v > level);
        best = best.max(level * (count as f64 / total).powf(1.0 / p));
        i = count.max(i + 1);
    }
    best
}

/// `μ{x : |f(x)| > 1e-9}`.
pub fn support_measure(f: &GridFunction) -> f64 {
    let hits = f
        .values()
        .iter()
        .filter(|v| v.norm() > SUPPORT_THRESHOLD)
        .count();
    hits as f64 / f.grid().size() as f64
}

/// The two-sided estimate `v/(4λ) + v*/λ + 1/(2λ) ≤ L_n ≤ 3v/2 + 4v* - 1`.
pub fn lebesgue_bounds(variation: Variation, lambda: u32) -> (f64, f64) {
    let (v, vs, lam) = (variation.v as f64, variation.v_star as f64, lambda as f64);
    let lower = v / (4.0 * lam) + vs / lam + 1.0 / (2.0 * lam);
    let upper = 1.5 * v + 4.0 * vs - 1.0;
    (lower, upper)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LebesgueReport {
    pub n: u64,
    pub resolution: usize,
    /// `L_n = ‖D_n‖_1`.
    pub value: f64,
    pub convention: DigitConvention,
    pub lower_bound: f64,
    pub upper_bound: f64,
}

impl LebesgueReport {
    fn new(grid: &Grid, n: usize, kernel: &GridFunction, convention: DigitConvention) -> Self {
        let value = lp_of_moduli(&kernel.abs_values(), 1.0);
        let m = grid.generators();
        let variation = m
            .decompose(n as u64)
            .expect("1 ≤ n < M_N")
            .variation(m, convention);
        let (lower_bound, upper_bound) = lebesgue_bounds(variation, m.lambda());
        Self {
            n: n as u64,
            resolution: grid.resolution(),
            value,
            convention,
            lower_bound,
            upper_bound,
        }
    }

    pub fn within_bounds(&self) -> bool {
        let slack = 1e-12 * self.value.max(1.0);
        self.lower_bound <= self.value + slack && self.value <= self.upper_bound + slack
    }

    pub fn to_norm_report(&self) -> NormReport {
        NormReport {
            n: Some(self.n),
            resolution: self.resolution,
            p: 1.0,
            kind: NormKind::Lp,
            value: self.value,
            lower_bound: Some(self.lower_bound),
            upper_bound: Some(self.upper_bound),
        }
    }
}

/// `L_n = ‖D_n‖_1` with the two-sided bounds under `convention`, for `1 ≤ n < M_N`.
///
/// `n = M_N` is accepted and reported with the bounds of `M_N` read on the
/// next level of the generator sequence.
pub fn lebesgue_constant(
    grid: &Grid,
    n: usize,
    convention: DigitConvention,
) -> Result<LebesgueReport> {
    if n == 0 {
        return Err(Error::ZeroIndex);
    }
    let kernel = dirichlet_direct(grid, n)?;
    Ok(LebesgueReport::new(grid, n, &kernel, convention))
}

/// Lebesgue constants for every `1 ≤ n < min(M_N, limit)` in one kernel sweep.
pub fn lebesgue_table(
    grid: &Grid,
    limit: usize,
    convention: DigitConvention,
) -> Vec<LebesgueReport> {
    let end = grid.size().min(limit);
    let mut sweep = DirichletSweep::new(grid);
    let mut out = Vec::with_capacity(end.saturating_sub(1));
    while sweep.advance() && sweep.index() < end {
        out.push(LebesgueReport::new(
            grid,
            sweep.index(),
            sweep.current(),
            convention,
        ));
    }
    out
}

/// Outcome of running the exact Lebesgue constants against both digit conventions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConventionVerdict {
    pub winner: Option<DigitConvention>,
    /// Indices `n` violating the bracket, per convention.
    pub violations: Vec<(DigitConvention, Vec<u64>)>,
}

/// Decide which summation convention for `v`, `v*` is compatible with the
/// exact constants on `1 ≤ n < min(M_N, limit)`: the one with fewest
/// violations, provided it has none.
pub fn select_convention(grid: &Grid, limit: usize) -> ConventionVerdict {
    let end = grid.size().min(limit);
    let mut values = Vec::new();
    let mut sweep = DirichletSweep::new(grid);
    while sweep.advance() && sweep.index() < end {
        values.push(LebesgueReport::new(
            grid,
            sweep.index(),
            sweep.current(),
            DigitConvention::FromZero,
        ));
    }
    let m = grid.generators();
    let violations: Vec<_> = DigitConvention::ALL
        .iter()
        .map(|&c| {
            let bad = values
                .iter()
                .filter_map(|r| {
                    let variation = m.decompose(r.n).expect("n ≥ 1").variation(m, c);
                    let (lower_bound, upper_bound) = lebesgue_bounds(variation, m.lambda());
                    let report = LebesgueReport {
                        convention: c,
                        lower_bound,
                        upper_bound,
                        ..r.clone()
                    };
                    (!report.within_bounds()).then_some(r.n)
                })
                .collect::<Vec<_>>();
            (c, bad)
        })
        .collect();
    let winner = violations
        .iter()
        .filter(|(_, bad)| bad.is_empty())
        .map(|(c, _)| *c)
        .next();
    ConventionVerdict { winner, violations }
}

/// `f*(x) = max_{0≤k≤N} |S_{M_k} f(x)|`, the maximal function of the finite
/// martingale generated by `f`.
pub fn maximal_function(f: &GridFunction) -> Vec<f64> {
    let grid = f.grid();
    let mut star = f.abs_values();
    // Coset averages from the finest level down: level k has M_k entries.
    let mut level: Vec<Complex64> = f.values().to_vec();
    for k in (0..grid.resolution()).rev() {
        let block = grid.base(k);
        let radix = grid.radices()[k] as usize;
        let coarse: Vec<Complex64> = (0..block)
            .map(|r| (0..radix).map(|c| level[r + c * block]).sum::<Complex64>() / radix as f64)
            .collect();
        for (i, s) in star.iter_mut().enumerate() {
            *s = s.max(coarse[i % block].norm());
        }
        level = coarse;
    }
    star
}

/// `‖f‖_{H_p} = ‖f*‖_p`.
pub fn hardy_norm(f: &GridFunction, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(lp_of_moduli(&maximal_function(f), p))
}

/// `‖f‖_{H_p}^p`.
pub fn hardy_power(f: &GridFunction, p: f64) -> Result<f64> {
    Ok(hardy_norm(f, p)?.powf(p))
}

/// `sup_k |S_{α_k} f|` over the supplied indices.
pub fn restricted_maximal(f: &GridFunction, indices: &[usize]) -> Result<GridFunction> {
    if indices.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    let size = f.grid().size();
    if let Some(&bad) = indices.iter().find(|&&n| n > size) {
        return Err(Error::IndexOutOfRange {
            n: bad as u64,
            max: size as u64,
        });
    }
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut sweep = PartialSumSweep::new(f);
    let mut best = vec![0.0f64; size];
    for &n in &sorted {
        while sweep.index() < n {
            sweep.advance();
        }
        for (b, v) in best.iter_mut().zip(sweep.current().values()) {
            *b = b.max(v.norm());
        }
    }
    GridFunction::from_real(f.grid(), best)
}

/// `ω(1/M_n, f)_{H_p} = ‖f - S_{M_n} f‖_{H_p}`.
pub fn modulus_hp(f: &GridFunction, n: usize, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let tail = f - &crate::transform::conditional_expectation(f, n)?;
    hardy_norm(&tail, p)
}
