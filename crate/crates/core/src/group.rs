//! Mixed-radix arithmetic on a bounded Vilenkin group.
//!
//! A generator sequence `m = (m_0, m_1, ...)` fixes the place values
//! `M_0 = 1, M_{k+1} = m_k M_k`. Natural numbers are written in that number
//! system (digits `n_j ∈ Z_{m_j}`), and a point of the group truncated at
//! resolution `N` is a coordinate vector `(x_0, ..., x_{N-1})`.
//!
//! Cosets of rank `N` are enumerated little-endian: the point `x` sits at
//! index `Σ x_k M_k`, so `x_0` varies fastest. The same ordering is used by
//! every grid, transform and file format in the crate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on the number of positions materialised for repeating sequences.
const MAX_DEPTH: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "radices", rename_all = "snake_case")]
pub enum GeneratorPattern {
    /// A finite explicit list; positions past its end are unavailable.
    Finite(Vec<u32>),
    /// The block is repeated forever: `2^` or `(2,3)^`.
    Cyclic(Vec<u32>),
    /// The list, then its last entry forever: `2,3,4`.
    RepeatLast(Vec<u32>),
}

/// The radices `m_k` together with their scaled bases `M_k`.
///
/// Repeating patterns are materialised up to the deepest position whose scaled
/// base still fits in 64 bits.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GeneratorSequence {
    pattern: GeneratorPattern,
    radices: Vec<u32>,
    bases: Vec<u64>,
    lambda: u32,
}

impl GeneratorSequence {
    /// Exactly the given radices, failing if any scaled base overflows.
    pub fn from_radices(radices: Vec<u32>) -> Result<Self> {
        validate_block(&radices)?;
        let mut bases = Vec::with_capacity(radices.len() + 1);
        bases.push(1u64);
        for (k, &m) in radices.iter().enumerate() {
            let next = bases[k]
                .checked_mul(m as u64)
                .ok_or(Error::Overflow { index: k + 1 })?;
            bases.push(next);
        }
        let lambda = radices.iter().copied().max().unwrap_or(2);
        Ok(Self {
            pattern: GeneratorPattern::Finite(radices.clone()),
            radices,
            bases,
            lambda,
        })
    }

    /// The constant sequence `m_k = radix`; `constant(2)` is the Walsh-Paley case.
    pub fn constant(radix: u32) -> Result<Self> {
        Self::from_pattern(GeneratorPattern::Cyclic(vec![radix]))
    }

    pub fn cyclic(block: Vec<u32>) -> Result<Self> {
        Self::from_pattern(GeneratorPattern::Cyclic(block))
    }

    pub fn repeat_last(list: Vec<u32>) -> Result<Self> {
        Self::from_pattern(GeneratorPattern::RepeatLast(list))
    }

    pub fn walsh() -> Self {
        Self::constant(2).expect("radix 2 is valid")
    }

    pub fn from_pattern(pattern: GeneratorPattern) -> Result<Self> {
        let block = match &pattern {
            GeneratorPattern::Finite(r) => return Self::from_radices(r.clone()),
            GeneratorPattern::Cyclic(b) | GeneratorPattern::RepeatLast(b) => b,
        };
        validate_block(block)?;
        let lambda = *block.iter().max().expect("validated non-empty");
        let radix_at = |k: usize| match &pattern {
            GeneratorPattern::Cyclic(b) => b[k % b.len()],
            _ => block[k.min(block.len() - 1)],
        };
        let mut radices = Vec::new();
        let mut bases = vec![1u64];
        for k in 0..MAX_DEPTH {
            let m = radix_at(k);
            match bases[k].checked_mul(m as u64) {
                Some(next) => {
                    radices.push(m);
                    bases.push(next);
                }
                None => break,
            }
        }
        Ok(Self {
            pattern,
            radices,
            bases,
            lambda,
        })
    }

    pub fn pattern(&self) -> &GeneratorPattern {
        &self.pattern
    }

    /// Number of positions available (`N_max`).
    pub fn depth(&self) -> usize {
        self.radices.len()
    }

    /// `m_k`.
    pub fn radix(&self, k: usize) -> u32 {
        self.radices[k]
    }

    pub fn radices(&self) -> &[u32] {
        &self.radices
    }

    /// `M_k`, for `k ≤ depth()`.
    pub fn base(&self, k: usize) -> u64 {
        self.bases[k]
    }

    /// `λ = sup m_k`.
    pub fn lambda(&self) -> u32 {
        self.lambda
    }

    /// `M_0, ..., M_n`.
    pub fn scaled_bases(&self, n: usize) -> Result<&[u64]> {
        self.check_resolution(n)?;
        Ok(&self.bases[..=n])
    }

    pub fn check_resolution(&self, n: usize) -> Result<()> {
        if n > self.depth() {
            return Err(Error::ResolutionUnavailable {
                requested: n,
                available: self.depth(),
            });
        }
        Ok(())
    }

    /// Coordinates of the rank-`resolution` coset stored at `index`.
    pub fn point_of(&self, index: u64, resolution: usize) -> Result<GroupPoint> {
        let size = self.scaled_bases(resolution)?[resolution];
        if index >= size {
            return Err(Error::IndexOutOfRange {
                n: index,
                max: size - 1,
            });
        }
        let mut rest = index;
        let coords = self.radices[..resolution]
            .iter()
            .map(|&m| {
                let d = (rest % m as u64) as u32;
                rest /= m as u64;
                d
            })
            .collect();
        Ok(GroupPoint { coords })
    }

    /// Place value of a point: the inverse of [`point_of`](Self::point_of).
    pub fn index_of(&self, point: &GroupPoint) -> Result<u64> {
        self.validate_point(point)?;
        Ok(point
            .coords
            .iter()
            .zip(&self.bases)
            .map(|(&x, &b)| x as u64 * b)
            .sum())
    }

    pub fn validate_point(&self, point: &GroupPoint) -> Result<()> {
        self.check_resolution(point.resolution())?;
        for (k, &x) in point.coords.iter().enumerate() {
            if x >= self.radices[k] {
                return Err(Error::CoordinateOutOfRange {
                    position: k,
                    value: x,
                    radix: self.radices[k],
                });
            }
        }
        Ok(())
    }

    /// `x ⊕ y` on points of equal resolution.
    pub fn add(&self, x: &GroupPoint, y: &GroupPoint) -> Result<GroupPoint> {
        self.combine(x, y, |a, b, m| (a + b) % m)
    }

    /// `x ⊖ y` on points of equal resolution.
    pub fn sub(&self, x: &GroupPoint, y: &GroupPoint) -> Result<GroupPoint> {
        self.combine(x, y, |a, b, m| (a + m - b) % m)
    }

    fn combine(
        &self,
        x: &GroupPoint,
        y: &GroupPoint,
        op: impl Fn(u32, u32, u32) -> u32,
    ) -> Result<GroupPoint> {
        if x.resolution() != y.resolution() {
            return Err(Error::ResolutionMismatch {
                left: x.resolution(),
                right: y.resolution(),
            });
        }
        self.validate_point(x)?;
        self.validate_point(y)?;
        let coords = x
            .coords
            .iter()
            .zip(&y.coords)
            .zip(&self.radices)
            .map(|((&a, &b), &m)| op(a, b, m))
            .collect();
        Ok(GroupPoint { coords })
    }

    /// `x ⊖ y` computed directly on coset indices at the given resolution.
    pub fn sub_index(&self, x: u64, y: u64, resolution: usize) -> u64 {
        let (mut x, mut y, mut out) = (x, y, 0u64);
        for k in 0..resolution {
            let m = self.radices[k] as u64;
            let (a, b) = (x % m, y % m);
            out += ((a + m - b) % m) * self.bases[k];
            x /= m;
            y /= m;
        }
        out
    }

    /// `x ⊕ y` computed directly on coset indices at the given resolution.
    pub fn add_index(&self, x: u64, y: u64, resolution: usize) -> u64 {
        let (mut x, mut y, mut out) = (x, y, 0u64);
        for k in 0..resolution {
            let m = self.radices[k] as u64;
            out += ((x % m + y % m) % m) * self.bases[k];
            x /= m;
            y /= m;
        }
        out
    }

    /// The `s` with `x ∈ I_s \ I_{s+1}`, i.e. the first non-zero coordinate of
    /// the coset at `index`; the origin coset reports `resolution`.
    pub fn rank_of(&self, index: u64, resolution: usize) -> usize {
        let mut rest = index;
        for k in 0..resolution {
            let m = self.radices[k] as u64;
            if !rest.is_multiple_of(m) {
                return k;
            }
            rest /= m;
        }
        resolution
    }

    /// Digit expansion and statistics of `n ≥ 1`.
    pub fn decompose(&self, n: u64) -> Result<VIndex> {
        VIndex::new(n, self)
    }
}

fn validate_block(block: &[u32]) -> Result<()> {
    if block.is_empty() {
        return Err(Error::ParseGenerators {
            input: String::new(),
            reason: "empty radix list".into(),
        });
    }
    for (position, &radix) in block.iter().enumerate() {
        if radix < 2 {
            return Err(Error::InvalidRadix { position, radix });
        }
    }
    Ok(())
}

fn join(block: &[u32]) -> String {
    block
        .iter()
        .map(|m| m.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for GeneratorSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.pattern {
            GeneratorPattern::Cyclic(b) if b.len() == 1 => write!(f, "{}^", b[0]),
            GeneratorPattern::Cyclic(b) => write!(f, "({})^", join(b)),
            GeneratorPattern::RepeatLast(b) => write!(f, "{}", join(b)),
            GeneratorPattern::Finite(b) => write!(f, "[{}]", join(b)),
        }
    }
}

impl FromStr for GeneratorSequence {
    type Err = Error;

    /// Accepted forms: `2^` (constant), `(2,3,4)^` (block repeated),
    /// `2,3,4` (last entry repeated) and `[2,3,4]` (finite).
    fn from_str(s: &str) -> Result<Self> {
        let input = s.trim();
        let bad = |reason: &str| Error::ParseGenerators {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let parse_list = |body: &str| -> Result<Vec<u32>> {
            body.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<u32>()
                        .map_err(|_| bad(&format!("{:?} is not a radix", t.trim())))
                })
                .collect()
        };
        let wrap = |e: Error| match e {
            Error::InvalidRadix { .. } | Error::ParseGenerators { .. } => bad(&e.to_string()),
            other => other,
        };
        if input.is_empty() {
            return Err(bad("empty input"));
        }
        if let Some(body) = input.strip_suffix('^') {
            let body = body.trim();
            let list = match body.strip_prefix('(').and_then(|b| b.strip_suffix(')')) {
                Some(inner) => parse_list(inner)?,
                None if !body.contains(',') => parse_list(body)?,
                None => return Err(bad("a repeated block must be parenthesised")),
            };
            return Self::cyclic(list).map_err(wrap);
        }
        if let Some(inner) = input.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
            return Self::from_radices(parse_list(inner)?).map_err(wrap);
        }
        Self::repeat_last(parse_list(input)?).map_err(wrap)
    }
}

/// A natural number `n ≥ 1` with its digits and the statistics `|n|`, `⟨n⟩`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VIndex {
    value: u64,
    digits: Vec<u32>,
    top: usize,
    bottom: usize,
}

impl VIndex {
    pub fn new(n: u64, m: &GeneratorSequence) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroIndex);
        }
        let limit = m.base(m.depth());
        if n >= limit {
            return Err(Error::IndexOutOfRange { n, max: limit - 1 });
        }
        let mut digits = Vec::new();
        let mut rest = n;
        let mut k = 0;
        while rest > 0 {
            let r = m.radix(k) as u64;
            digits.push((rest % r) as u32);
            rest /= r;
            k += 1;
        }
        let top = digits.len() - 1;
        let bottom = digits.iter().position(|&d| d != 0).expect("n > 0");
        Ok(Self {
            value: n,
            digits,
            top,
            bottom,
        })
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    /// `n_j`, zero past the top digit.
    pub fn digit(&self, j: usize) -> u32 {
        self.digits.get(j).copied().unwrap_or(0)
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    /// `|n|`: position of the highest non-zero digit.
    pub fn top(&self) -> usize {
        self.top
    }

    /// `⟨n⟩`: position of the lowest non-zero digit.
    pub fn bottom(&self) -> usize {
        self.bottom
    }

    /// `ρ(n) = |n| - ⟨n⟩`.
    pub fn rho(&self) -> usize {
        self.top - self.bottom
    }

    /// `Σ n_j M_j`.
    pub fn reconstruct(&self, m: &GeneratorSequence) -> u64 {
        self.digits
            .iter()
            .enumerate()
            .map(|(j, &d)| d as u64 * m.base(j))
            .sum()
    }

    /// The variation functions `v(n)` and `v*(n)`.
    ///
    /// With `δ_j = sign n_j` and `δ*_j = |⊖n_j - 1| δ_j`,
    /// `v = Σ |δ_{j+1} - δ_j| + δ_0` and `v* = Σ δ*_j`, both sums starting at
    /// the position chosen by `convention`.
    pub fn variation(&self, m: &GeneratorSequence, convention: DigitConvention) -> Variation {
        let start = convention.first_position();
        let delta = |j: usize| u32::from(self.digit(j) != 0);
        // δ vanishes past the top digit, so the sums stop at |n| + 1.
        let v: u32 = (start..=self.top)
            .map(|j| delta(j + 1).abs_diff(delta(j)))
            .sum::<u32>()
            + delta(0);
        let v_star = (start..=self.top)
            .filter(|&j| self.digit(j) != 0)
            .map(|j| {
                let radix = m.radix(j);
                let inverse = (radix - self.digit(j)) % radix;
                inverse.abs_diff(1)
            })
            .sum();
        Variation { v, v_star }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Variation {
    pub v: u32,
    pub v_star: u32,
}

/// First summation index used by [`VIndex::variation`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DigitConvention {
    /// Sums start at `j = 0`.
    FromZero,
    /// Sums start at `j = 1`.
    #[default]
    FromOne,
}

impl DigitConvention {
    pub const ALL: [DigitConvention; 2] = [DigitConvention::FromZero, DigitConvention::FromOne];

    fn first_position(self) -> usize {
        match self {
            DigitConvention::FromZero => 0,
            DigitConvention::FromOne => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DigitConvention::FromZero => "from0",
            DigitConvention::FromOne => "from1",
        }
    }
}

impl FromStr for DigitConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "from0" => Ok(Self::FromZero),
            "from1" => Ok(Self::FromOne),
            other => Err(Error::InvalidArgument(format!(
                "unknown digit convention {other:?} (expected from0 or from1)"
            ))),
        }
    }
}

/// A point of the group truncated at some resolution: `x_k ∈ Z_{m_k}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupPoint {
    coords: Vec<u32>,
}

impl GroupPoint {
    pub fn new(coords: Vec<u32>, m: &GeneratorSequence) -> Result<Self> {
        let point = Self { coords };
        m.validate_point(&point)?;
        Ok(point)
    }

    pub fn origin(resolution: usize) -> Self {
        Self {
            coords: vec![0; resolution],
        }
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    pub fn resolution(&self) -> usize {
        self.coords.len()
    }

    pub fn is_origin(&self) -> bool {
        self.coords.iter().all(|&x| x == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gens(s: &str) -> GeneratorSequence {
        s.parse().unwrap()
    }

    #[test]
    fn scaled_bases_follow_the_recursion() {
        assert_eq!(gens("2^").scaled_bases(3).unwrap(), &[1, 2, 4, 8]);
        assert_eq!(gens("2,3,4").scaled_bases(3).unwrap(), &[1, 2, 6, 24]);
        let walsh = GeneratorSequence::walsh();
        for k in 0..=20 {
            assert_eq!(walsh.base(k), 1 << k);
        }
        assert_eq!(walsh.depth(), 63);
    }

    #[test]
    fn overflow_is_reported() {
        let err = GeneratorSequence::from_radices(vec![1 << 31; 3]).unwrap_err();
        assert!(matches!(err, Error::Overflow { index: 3 }));
        let short = GeneratorSequence::from_radices(vec![2, 3]).unwrap();
        assert!(matches!(
            short.scaled_bases(3),
            Err(Error::ResolutionUnavailable { .. })
        ));
    }

    #[test]
    fn parses_every_text_form() {
        let c = gens("(2,3,4)^");
        assert_eq!(&c.radices()[..7], &[2, 3, 4, 2, 3, 4, 2]);
        assert_eq!(c.lambda(), 4);
        let r = gens("2,3,4");
        assert_eq!(&r.radices()[..5], &[2, 3, 4, 4, 4]);
        let f = gens("[5,2]");
        assert_eq!(f.radices(), &[5, 2]);
        assert_eq!(gens("3^").radices()[10], 3);
        for text in ["2^", "(2,3)^", "2,3,4", "[2,7]"] {
            assert_eq!(gens(text).to_string(), text);
        }
        for bad in ["", "1^", "2,x", "2,3^", "(2,1)^", "[0]"] {
            assert!(bad.parse::<GeneratorSequence>().is_err(), "{bad}");
        }
    }

    #[test]
    fn digit_statistics_of_named_indices() {
        for text in ["2^", "(2,3)^", "3^"] {
            let m = gens(text);
            for k in 1..8 {
                let n = m.decompose(m.base(k) + 1).unwrap();
                assert_eq!((n.top(), n.bottom(), n.rho()), (k, 0, k));
                let n = m.decompose(m.base(k) + m.base(k - 1)).unwrap();
                assert_eq!((n.top(), n.bottom(), n.rho()), (k, k - 1, 1));
                let n = m.decompose(m.base(k)).unwrap();
                assert_eq!((n.top(), n.bottom(), n.rho()), (k, k, 0));
            }
        }
    }

    #[test]
    fn zero_and_out_of_range_indices_fail() {
        let m = GeneratorSequence::from_radices(vec![2, 2]).unwrap();
        assert!(matches!(m.decompose(0), Err(Error::ZeroIndex)));
        assert!(matches!(m.decompose(4), Err(Error::IndexOutOfRange { .. })));
        assert!(m.decompose(3).is_ok());
    }

    #[test]
    fn variation_examples() {
        let w = GeneratorSequence::walsh();
        let one = w.decompose(1).unwrap();
        assert_eq!(
            one.variation(&w, DigitConvention::FromOne),
            Variation { v: 1, v_star: 0 }
        );
        let five = w.decompose(5).unwrap();
        assert_eq!(
            five.variation(&w, DigitConvention::FromOne),
            Variation { v: 3, v_star: 0 }
        );
        assert_eq!(five.variation(&w, DigitConvention::FromZero).v, 4);
        // ⊖1 = 1 in Z_2, so v* vanishes for every Walsh index.
        for n in 1..200 {
            let idx = w.decompose(n).unwrap();
            for c in DigitConvention::ALL {
                assert_eq!(idx.variation(&w, c).v_star, 0);
            }
        }
        let t = gens("3^");
        let one = t.decompose(1).unwrap();
        assert_eq!(one.variation(&t, DigitConvention::FromZero).v_star, 1);
        assert_eq!(one.variation(&t, DigitConvention::FromOne).v_star, 0);
    }

    #[test]
    fn group_law_examples() {
        let w = GeneratorSequence::walsh();
        let x = GroupPoint::new(vec![1, 0, 1, 1], &w).unwrap();
        assert!(w.add(&x, &x).unwrap().is_origin());
        let m = GeneratorSequence::from_radices(vec![3, 2]).unwrap();
        let y = GroupPoint::new(vec![2, 1], &m).unwrap();
        assert_eq!(m.add(&y, &y).unwrap().coords(), &[1, 0]);
        assert!(m.sub(&y, &y).unwrap().is_origin());
        let short = GroupPoint::new(vec![1], &m).unwrap();
        assert!(matches!(
            m.add(&y, &short),
            Err(Error::ResolutionMismatch { .. })
        ));
        assert!(GroupPoint::new(vec![3, 0], &m).is_err());
    }

    #[test]
    fn rank_of_locates_the_annulus() {
        let m = gens("(2,3)^");
        assert_eq!(m.rank_of(0, 4), 4);
        assert_eq!(m.rank_of(1, 4), 0);
        assert_eq!(m.rank_of(2, 4), 1);
        assert_eq!(m.rank_of(6, 4), 2);
        assert_eq!(m.rank_of(12, 4), 3);
    }

    #[test]
    fn exhaustive_round_trip_small_grids() {
        for text in ["2^", "(2,3)^", "3^", "(2,3,4)^"] {
            let m = gens(text);
            let n_res = (0..).find(|&k| m.base(k + 1) > 4096).unwrap();
            for n in 1..m.base(n_res) {
                let idx = m.decompose(n).unwrap();
                assert_eq!(idx.reconstruct(&m), n);
                let p = m.point_of(n, n_res).unwrap();
                assert_eq!(&p.coords()[..idx.digits().len()], idx.digits());
                assert_eq!(m.index_of(&p).unwrap(), n);
            }
        }
    }

    fn arb_gens() -> impl Strategy<Value = GeneratorSequence> {
        prop::collection::vec(2u32..6, 1..4).prop_map(|b| GeneratorSequence::cyclic(b).unwrap())
    }

    proptest! {
        #[test]
        fn place_value_ratio_is_bracketed_by_rho(m in arb_gens(), raw in 1u64..1_000_000) {
            let n = m.decompose(raw).unwrap();
            let ratio = m.base(n.top()) as f64 / m.base(n.bottom()) as f64;
            let rho = n.rho() as i32;
            prop_assert!(2f64.powi(rho) <= ratio);
            prop_assert!(ratio <= (m.lambda() as f64).powi(rho));
        }

        #[test]
        fn group_is_abelian(m in arb_gens(), a in 0u64..1 << 12, b in 0u64..1 << 12, c in 0u64..1 << 12) {
            let res = (0..).find(|&k| m.base(k + 1) > 1 << 12).unwrap();
            let size = m.base(res);
            let (x, y, z) = (
                m.point_of(a % size, res).unwrap(),
                m.point_of(b % size, res).unwrap(),
                m.point_of(c % size, res).unwrap(),
            );
            let xy = m.add(&x, &y).unwrap();
            prop_assert_eq!(&xy, &m.add(&y, &x).unwrap());
            prop_assert_eq!(
                m.add(&xy, &z).unwrap(),
                m.add(&x, &m.add(&y, &z).unwrap()).unwrap()
            );
            prop_assert_eq!(m.add(&x, &GroupPoint::origin(res)).unwrap(), x.clone());
            prop_assert!(m.add(&m.sub(&GroupPoint::origin(res), &x).unwrap(), &x).unwrap().is_origin());
            let (ia, ib) = (a % size, b % size);
            prop_assert_eq!(m.sub_index(ia, ib, res), m.index_of(&m.sub(&x, &y).unwrap()).unwrap());
            prop_assert_eq!(m.add_index(ia, ib, res), m.index_of(&xy).unwrap());
        }
    }
}
