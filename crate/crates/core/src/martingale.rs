//! p-atoms and the counterexample martingales built from them.
//!
//! For an increasing sequence `α_k` with distinct top digits `|α_k|` and real
//! weights `λ_k`, the martingale is `f = Σ λ_k a_k` with
//!
//! ```text
//! a_k = (M_{|α_k|}^{1/p-1} / λ) (D_{M_{|α_k|+1}} - D_{M_{|α_k|}})
//! ```
//!
//! where `λ` is the largest radix. Each `a_k` is a p-atom supported on
//! `I_{|α_k|}`, its spectrum is flat on the block `[M_{|α_k|}, M_{|α_k|+1})`,
//! and the partial sums of `f` have a closed form inside every block.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GeneratorSequence, GroupPoint, VIndex};
use crate::transform::{dirichlet_closed, Grid, GridFunction};

/// Tolerance on the mean of an atom, relative to `∫_I |a| dμ`.
pub const ATOM_MEAN_TOL: f64 = 1e-9;
/// Relative tolerance on the sup bound `μ(I)^{-1/p}`.
pub const ATOM_BOUND_TOL: f64 = 1e-9;

/// The interval `I_rank(x)`, stored by the index of `x` reduced modulo `M_rank`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coset {
    pub rank: usize,
    pub representative: usize,
}

impl Coset {
    pub fn new(grid: &Grid, rank: usize, base: &GroupPoint) -> Result<Self> {
        if rank > grid.resolution() {
            return Err(Error::IndexOutOfRange {
                n: rank as u64,
                max: grid.resolution() as u64,
            });
        }
        if base.resolution() != grid.resolution() {
            return Err(Error::ResolutionMismatch {
                left: base.resolution(),
                right: grid.resolution(),
            });
        }
        let index = grid.generators().index_of(base)? as usize;
        Ok(Self {
            rank,
            representative: index % grid.base(rank),
        })
    }

    /// `I_rank = I_rank(0)`.
    pub fn origin(rank: usize) -> Self {
        Self {
            rank,
            representative: 0,
        }
    }

    pub fn contains(&self, grid: &Grid, index: usize) -> bool {
        index % grid.base(self.rank) == self.representative
    }

    pub fn measure(&self, grid: &Grid) -> f64 {
        1.0 / grid.base(self.rank) as f64
    }

    pub fn members(&self, grid: &Grid) -> impl Iterator<Item = usize> {
        let step = grid.base(self.rank);
        (self.representative..grid.size()).step_by(step)
    }
}

/// A failed atom condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum AtomViolation {
    Exponent { p: f64 },
    Mean { mean: f64, tolerance: f64 },
    Bound { sup: f64, bound: f64 },
    Support { max_outside: f64 },
}

impl fmt::Display for AtomViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomViolation::Exponent { p } => write!(f, "exponent p = {p} is not in (0, 1]"),
            AtomViolation::Mean { mean, tolerance } => {
                write!(f, "mean |∫_I a dμ| = {mean:e} exceeds {tolerance:e}")
            }
            AtomViolation::Bound { sup, bound } => {
                write!(f, "sup |a| = {sup} exceeds μ(I)^(-1/p) = {bound}")
            }
            AtomViolation::Support { max_outside } => {
                write!(f, "a is non-zero off I (max |a| = {max_outside:e})")
            }
        }
    }
}

/// A function checked to be a p-atom for a given interval.
#[derive(Clone, Debug, PartialEq)]
pub struct PAtom {
    p: f64,
    support: Coset,
    base_point: GroupPoint,
    values: GridFunction,
}

impl PAtom {
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn support(&self) -> Coset {
        self.support
    }

    pub fn support_rank(&self) -> usize {
        self.support.rank
    }

    pub fn base_point(&self) -> &GroupPoint {
        &self.base_point
    }

    pub fn values(&self) -> &GridFunction {
        &self.values
    }

    pub fn into_function(self) -> GridFunction {
        self.values
    }
}

/// Check the three atom conditions: zero mean on `I`, `‖a‖_∞ ≤ μ(I)^{-1/p}`,
/// and `a = 0` off `I`. All failures are reported together.
pub fn validate_atom(a: &GridFunction, p: f64, support: Coset) -> Result<PAtom> {
    let grid = a.grid();
    if support.rank > grid.resolution() || support.representative >= grid.base(support.rank) {
        return Err(Error::InvalidArgument(format!(
            "coset {support:?} does not fit resolution {}",
            grid.resolution()
        )));
    }
    let mut violations = Vec::new();
    if !(p > 0.0 && p <= 1.0) {
        violations.push(AtomViolation::Exponent { p });
    }
    let scale = 1.0 / grid.size() as f64;
    let mut integral = Complex64::new(0.0, 0.0);
    let mut mass = 0.0;
    let mut sup = 0.0f64;
    let mut max_outside = 0.0f64;
    for (i, v) in a.values().iter().enumerate() {
        let modulus = v.norm();
        sup = sup.max(modulus);
        if support.contains(grid, i) {
            integral += v * scale;
            mass += modulus * scale;
        } else if modulus != 0.0 {
            max_outside = max_outside.max(modulus);
        }
    }
    let tolerance = ATOM_MEAN_TOL * mass.max(1.0);
    if integral.norm() > tolerance {
        violations.push(AtomViolation::Mean {
            mean: integral.norm(),
            tolerance,
        });
    }
    if p > 0.0 {
        let bound = (grid.base(support.rank) as f64).powf(1.0 / p);
        if sup > bound * (1.0 + ATOM_BOUND_TOL) {
            violations.push(AtomViolation::Bound { sup, bound });
        }
    }
    if max_outside > 0.0 {
        violations.push(AtomViolation::Support { max_outside });
    }
    if !violations.is_empty() {
        return Err(Error::NotAnAtom(violations));
    }
    Ok(PAtom {
        p,
        support,
        base_point: grid.point(support.representative),
        values: a.clone(),
    })
}

/// `M_{|α|}^{1/p-1} / λ`, the height factor of the counterexample atom.
fn atom_scale(grid: &Grid, top: usize, p: f64) -> f64 {
    (grid.base(top) as f64).powf(1.0 / p - 1.0) / grid.generators().lambda() as f64
}

/// Add `weight · (D_{M_{top+1}} - D_{M_top})` into `out`, using the indicator
/// form of both kernels.
fn add_block_difference(out: &mut [Complex64], grid: &Grid, top: usize, weight: f64) {
    let inner = grid.base(top + 1) as f64 - grid.base(top) as f64;
    let outer = -(grid.base(top) as f64);
    for (i, v) in out.iter_mut().enumerate() {
        let rank = grid.rank_of(i);
        if rank > top {
            *v += weight * inner;
        } else if rank == top {
            *v += weight * outer;
        }
    }
}

/// The atom `(M_{|α|}^{1/p-1}/λ)(D_{M_{|α|+1}} - D_{M_{|α|}})`, supported on `I_{|α|}`.
pub fn counterexample_atom(alpha: &VIndex, p: f64, grid: &Grid) -> Result<PAtom> {
    let top = alpha.top();
    if top + 1 > grid.resolution() {
        return Err(Error::ResolutionUnavailable {
            requested: top + 1,
            available: grid.resolution(),
        });
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    let mut values = vec![Complex64::new(0.0, 0.0); grid.size()];
    add_block_difference(&mut values, grid, top, atom_scale(grid, top, p));
    let a = GridFunction::new(grid.clone(), values)?;
    validate_atom(&a, p, Coset::origin(top))
}

/// Closed-form non-decreasing normalising sequences `Φ_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhiRule {
    Constant {
        value: f64,
    },
    /// `max(1, ln M_{|n|})`.
    LogScaledBase,
    /// `n^exponent`.
    Power {
        exponent: f64,
    },
}

impl Default for PhiRule {
    fn default() -> Self {
        PhiRule::Constant { value: 1.0 }
    }
}

impl PhiRule {
    pub fn eval(&self, n: &VIndex, m: &GeneratorSequence) -> f64 {
        match self {
            PhiRule::Constant { value } => *value,
            PhiRule::LogScaledBase => (m.base(n.top()) as f64).ln().max(1.0),
            PhiRule::Power { exponent } => (n.value() as f64).powf(*exponent),
        }
    }
}

impl std::str::FromStr for PhiRule {
    type Err = Error;

    /// `const:<c>`, `log`, or `pow:<e>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown Φ rule {s:?}"));
        if s == "log" {
            return Ok(PhiRule::LogScaledBase);
        }
        let (tag, arg) = s.split_once(':').ok_or_else(bad)?;
        let arg: f64 = arg.parse().map_err(|_| bad())?;
        match tag {
            "const" if arg > 0.0 => Ok(PhiRule::Constant { value: arg }),
            "pow" if arg >= 0.0 => Ok(PhiRule::Power { exponent: arg }),
            _ => Err(bad()),
        }
    }
}

/// How the weights `λ_k` are chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "lambdas", rename_all = "snake_case")]
pub enum LambdaRule {
    /// `λ_k = (M_{⟨α_k⟩}/M_{|α_k|})^{(1/p-1)/2} Φ_{α_k}^{1/2}`: the weak-type divergence construction.
    Divergence,
    /// `λ_k = λ (M_{⟨α_k⟩}/M_{|α_k|})^{1/p-1}`: the modulus-of-continuity sharpness construction.
    ModulusSharpness,
    Explicit(Vec<f64>),
}

impl LambdaRule {
    pub fn name(&self) -> &'static str {
        match self {
            LambdaRule::Divergence => "divergence",
            LambdaRule::ModulusSharpness => "modulus_sharpness",
            LambdaRule::Explicit(_) => "explicit",
        }
    }
}

/// `M_{|n|} / M_{⟨n⟩}`.
pub fn spread(n: &VIndex, m: &GeneratorSequence) -> f64 {
    m.base(n.top()) as f64 / m.base(n.bottom()) as f64
}

/// Terms `M_{⟨α⟩}^{(1-p)/2} Φ_α^{p/2} / M_{|α|}^{(1-p)/2}` of the summability
/// condition imposed on the divergence weights.
pub fn divergence_tail_terms(
    alphas: &[VIndex],
    p: f64,
    phi: &PhiRule,
    m: &GeneratorSequence,
) -> Vec<f64> {
    alphas
        .iter()
        .map(|a| spread(a, m).powf(-(1.0 - p) / 2.0) * phi.eval(a, m).powf(p / 2.0))
        .collect()
}

/// Desk-scale finiteness check of the divergence tail: the terms must be
/// non-increasing. Returns the indices `k` where a term exceeds its predecessor.
pub fn divergence_tail_failures(terms: &[f64]) -> Vec<usize> {
    terms
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] > w[0] * (1.0 + 1e-12))
        .map(|(k, _)| k + 1)
        .collect()
}

/// Indices `k` violating the gap conditions of the sharpness construction:
/// `M_{|α_k|}/M_{⟨α_k⟩}` strictly increasing, and
/// `(M_{|α_k|}/M_{⟨α_k⟩})^{2(1/p-1)} ≤ (M_{|α_{k+1}|}/M_{⟨α_{k+1}⟩})^{1/p-1}`.
pub fn sharpness_gap_failures(alphas: &[VIndex], p: f64, m: &GeneratorSequence) -> Vec<usize> {
    let e = 1.0 / p - 1.0;
    alphas
        .windows(2)
        .enumerate()
        .filter(|(_, w)| {
            let (r0, r1) = (spread(&w[0], m), spread(&w[1], m));
            !(r1 > r0 && r0.powf(2.0 * e) <= r1.powf(e) * (1.0 + 1e-12))
        })
        .map(|(k, _)| k + 1)
        .collect()
}

/// Greedy subsequence satisfying the sharpness gap conditions: a candidate is
/// kept only if both conditions hold against the last kept index.
pub fn select_sharpness_subsequence(
    candidates: &[u64],
    p: f64,
    m: &GeneratorSequence,
) -> Result<Vec<u64>> {
    let mut kept: Vec<VIndex> = Vec::new();
    for &c in candidates {
        let idx = m.decompose(c)?;
        let accept = match kept.last() {
            None => true,
            Some(last) => {
                last.top() < idx.top()
                    && sharpness_gap_failures(&[last.clone(), idx.clone()], p, m).is_empty()
            }
        };
        if accept {
            kept.push(idx);
        }
    }
    Ok(kept.iter().map(VIndex::value).collect())
}

/// `α_k = M_{2^k} + 1` for every `k` with `2^k < resolution`.
pub fn default_alphas(m: &GeneratorSequence, resolution: usize) -> Vec<u64> {
    (0..)
        .map(|k| 1usize << k)
        .take_while(|&t| t < resolution)
        .map(|t| m.base(t) + 1)
        .collect()
}

/// Serialised form of a [`MartingaleSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MartingaleRecord {
    pub p: f64,
    pub alphas: Vec<u64>,
    pub lambdas: Vec<f64>,
    pub rule: String,
    pub phi: Option<PhiRule>,
    #[serde(rename = "N")]
    pub resolution: usize,
    pub m: String,
}

/// A counterexample martingale and its truncation at the grid resolution.
#[derive(Clone, Debug)]
pub struct MartingaleSpec {
    p: f64,
    alphas: Vec<VIndex>,
    lambdas: Vec<f64>,
    rule: LambdaRule,
    phi: Option<PhiRule>,
    grid: Grid,
    realized: GridFunction,
}

/// Build `f = Σ_{|α_k| < N} λ_k a_k` with weights chosen by `rule`.
///
/// The indices must increase with strictly increasing top digits, so that the
/// spectral blocks of the atoms are disjoint.
pub fn build_counterexample(
    p: f64,
    alphas: &[u64],
    rule: LambdaRule,
    phi: Option<PhiRule>,
    grid: &Grid,
) -> Result<MartingaleSpec> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    if alphas.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    let m = grid.generators();
    let indices = alphas
        .iter()
        .map(|&a| m.decompose(a))
        .collect::<Result<Vec<_>>>()?;
    let non_increasing: Vec<usize> = indices
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1].top() <= w[0].top())
        .map(|(k, _)| k + 1)
        .collect();
    if !non_increasing.is_empty() {
        return Err(Error::GrowthCondition {
            condition: "strictly increasing top digits |α_k|".into(),
            failing: non_increasing,
        });
    }
    let phi_rule = phi.clone().unwrap_or_default();
    let lambdas = match &rule {
        LambdaRule::Divergence => {
            let terms = divergence_tail_terms(&indices, p, &phi_rule, m);
            let failing = divergence_tail_failures(&terms);
            if !failing.is_empty() {
                return Err(Error::GrowthCondition {
                    condition: "summable divergence tail (non-increasing terms)".into(),
                    failing,
                });
            }
            indices
                .iter()
                .map(|a| spread(a, m).powf(-(1.0 / p - 1.0) / 2.0) * phi_rule.eval(a, m).sqrt())
                .collect()
        }
        LambdaRule::ModulusSharpness => {
            let failing = sharpness_gap_failures(&indices, p, m);
            if !failing.is_empty() {
                return Err(Error::GrowthCondition {
                    condition: "sharpness gap conditions".into(),
                    failing,
                });
            }
            let lam = m.lambda() as f64;
            indices
                .iter()
                .map(|a| lam * spread(a, m).powf(-(1.0 / p - 1.0)))
                .collect()
        }
        LambdaRule::Explicit(values) => {
            if values.len() != indices.len() {
                return Err(Error::LengthMismatch {
                    expected: indices.len(),
                    found: values.len(),
                });
            }
            values.clone()
        }
    };
    let mut values = vec![Complex64::new(0.0, 0.0); grid.size()];
    for (a, &l) in indices.iter().zip(&lambdas) {
        if a.top() < grid.resolution() {
            add_block_difference(&mut values, grid, a.top(), l * atom_scale(grid, a.top(), p));
        }
    }
    let realized = GridFunction::new(grid.clone(), values)?;
    Ok(MartingaleSpec {
        p,
        alphas: indices,
        lambdas,
        rule,
        phi,
        grid: grid.clone(),
        realized,
    })
}

impl MartingaleSpec {
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn alphas(&self) -> &[VIndex] {
        &self.alphas
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn rule(&self) -> &LambdaRule {
        &self.rule
    }

    pub fn phi(&self) -> Option<&PhiRule> {
        self.phi.as_ref()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn resolution(&self) -> usize {
        self.grid.resolution()
    }

    /// Largest radix, the `λ` of the atom normalisation.
    pub fn radix_bound(&self) -> u32 {
        self.grid.generators().lambda()
    }

    /// The truncation `f_N`.
    pub fn realized(&self) -> &GridFunction {
        &self.realized
    }

    /// Positions `k` whose atoms are resolved at this resolution.
    pub fn realized_terms(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.alphas.len()).filter(|&k| self.alphas[k].top() < self.resolution())
    }

    /// `Σ_k |λ_k|^p` over the whole supplied sequence.
    pub fn budget(&self) -> f64 {
        self.lambdas.iter().map(|l| l.abs().powf(self.p)).sum()
    }

    /// `Σ_{n ≤ |α_k| < N} |λ_k|^p`.
    pub fn tail_budget(&self, n: usize) -> f64 {
        self.realized_terms()
            .filter(|&k| self.alphas[k].top() >= n)
            .map(|k| self.lambdas[k].abs().powf(self.p))
            .sum()
    }

    /// The atom `a_k` at this resolution.
    pub fn atom(&self, k: usize) -> Result<PAtom> {
        counterexample_atom(&self.alphas[k], self.p, &self.grid)
    }

    /// Spectrum predicted for `f_N`: `λ_k M_{|α_k|}^{1/p-1}/λ` on each block
    /// `[M_{|α_k|}, M_{|α_k|+1})`, zero elsewhere.
    pub fn expected_coefficients(&self) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.grid.size()];
        for k in self.realized_terms() {
            let top = self.alphas[k].top();
            let c = self.lambdas[k] * atom_scale(&self.grid, top, self.p);
            out[self.grid.base(top)..self.grid.base(top + 1)].fill(Complex64::new(c, 0.0));
        }
        out
    }

    /// The realised block containing `j`, i.e. `l` with `M_{|α_l|} ≤ j < M_{|α_l|+1}`.
    pub fn block_of(&self, j: usize) -> Option<usize> {
        self.realized_terms().find(|&k| {
            let top = self.alphas[k].top();
            self.grid.base(top) <= j && j < self.grid.base(top + 1)
        })
    }

    /// The closed form of `S_j f` split as `(S_{M_{|α_l|}} f, λ_l M_{|α_l|}^{1/p-1} ψ_{M_{|α_l|}} D_{j - M_{|α_l|}} / λ)`.
    ///
    /// Outside every block the second part is zero and the first is the sum of
    /// the atoms whose blocks lie entirely below `j`.
    pub fn closed_partial_sum_parts(&self, j: usize) -> Result<(GridFunction, GridFunction)> {
        let grid = &self.grid;
        if j > grid.size() {
            return Err(Error::IndexOutOfRange {
                n: j as u64,
                max: grid.size() as u64,
            });
        }
        let block = self.block_of(j);
        let mut lower = vec![Complex64::new(0.0, 0.0); grid.size()];
        for k in self.realized_terms() {
            let top = self.alphas[k].top();
            if grid.base(top + 1) <= j {
                add_block_difference(
                    &mut lower,
                    grid,
                    top,
                    self.lambdas[k] * atom_scale(grid, top, self.p),
                );
            }
        }
        let lower = GridFunction::new(grid.clone(), lower)?;
        let partial = match block {
            None => GridFunction::zeros(grid),
            Some(l) => {
                let top = self.alphas[l].top();
                let start = grid.base(top);
                let kernel = dirichlet_closed(grid, j - start)?;
                let psi = GridFunction::character(grid, start)?;
                psi.pointwise_mul(&kernel)
                    .scale(self.lambdas[l] * atom_scale(grid, top, self.p))
            }
        };
        Ok((lower, partial))
    }

    /// `S_j f` from the closed form.
    pub fn closed_partial_sum(&self, j: usize) -> Result<GridFunction> {
        let (lower, partial) = self.closed_partial_sum_parts(j)?;
        Ok(&lower + &partial)
    }

    pub fn to_record(&self) -> MartingaleRecord {
        MartingaleRecord {
            p: self.p,
            alphas: self.alphas.iter().map(VIndex::value).collect(),
            lambdas: self.lambdas.clone(),
            rule: self.rule.name().to_string(),
            phi: self.phi.clone(),
            resolution: self.resolution(),
            m: self.grid.generators().to_string(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_record())?)
    }

    /// Rebuild from a record; the stored weights are used verbatim.
    pub fn from_record(record: &MartingaleRecord) -> Result<Self> {
        let gens: GeneratorSequence = record.m.parse()?;
        let grid = Grid::new(gens, record.resolution)?;
        let mut spec = build_counterexample(
            record.p,
            &record.alphas,
            LambdaRule::Explicit(record.lambdas.clone()),
            record.phi.clone(),
            &grid,
        )?;
        spec.rule = match record.rule.as_str() {
            "divergence" => LambdaRule::Divergence,
            "modulus_sharpness" => LambdaRule::ModulusSharpness,
            "explicit" => LambdaRule::Explicit(record.lambdas.clone()),
            other => return Err(Error::Format(format!("unknown lambda rule {other:?}"))),
        };
        Ok(spec)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_record(&serde_json::from_str(text)?)
    }
}
