//! Vilenkin characters, spectral transforms, Dirichlet kernels and partial sums.
//!
//! Everything here works on a [`Grid`]: the rank-`N` cosets of the group,
//! stored little-endian so that a coset index and a character index share the
//! same digit layout. The fast transform is a product of `N` small DFTs, one
//! per digit, and needs no reordering.

use std::f64::consts::TAU;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::group::{GeneratorSequence, GroupPoint, VIndex};

/// Largest grid (number of cosets) any routine will materialise.
pub const MAX_GRID_CELLS: u64 = 1 << 20;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// The rank-`N` cosets of a Vilenkin group together with a shared table of
/// roots of unity.
#[derive(Clone, Debug)]
pub struct Grid {
    gens: Arc<GeneratorSequence>,
    resolution: usize,
    size: usize,
    /// `L = lcm(m_0, ..., m_{N-1})`; every character value is an `L`-th root of unity.
    period: u32,
    roots: Arc<[Complex64]>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.resolution == other.resolution && self.radices() == other.radices()
    }
}

impl Grid {
    pub fn new(gens: impl Into<Arc<GeneratorSequence>>, resolution: usize) -> Result<Self> {
        Self::with_cap(gens, resolution, MAX_GRID_CELLS)
    }

    /// Like [`Grid::new`] with a caller-supplied cell budget (never above [`MAX_GRID_CELLS`]).
    pub fn with_cap(
        gens: impl Into<Arc<GeneratorSequence>>,
        resolution: usize,
        cap: u64,
    ) -> Result<Self> {
        let gens = gens.into();
        let size = gens.scaled_bases(resolution)?[resolution];
        let cap = cap.min(MAX_GRID_CELLS);
        if size > cap {
            return Err(Error::ResolutionOverCap {
                resolution,
                size,
                cap,
            });
        }
        let period = gens.radices()[..resolution]
            .iter()
            .fold(1u32, |acc, &m| lcm(acc, m));
        let roots = (0..period)
            .map(|j| root_of_unity(j as u64, period as u64))
            .collect();
        Ok(Self {
            gens,
            resolution,
            size: size as usize,
            period,
            roots,
        })
    }

    pub fn generators(&self) -> &GeneratorSequence {
        &self.gens
    }

    pub fn shared_generators(&self) -> Arc<GeneratorSequence> {
        self.gens.clone()
    }

    /// `N`.
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// `M_N`, the number of cosets.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn radices(&self) -> &[u32] {
        &self.gens.radices()[..self.resolution]
    }

    /// `M_k` for `k ≤ N`.
    pub fn base(&self, k: usize) -> usize {
        self.gens.base(k) as usize
    }

    /// The same group at another resolution.
    pub fn at_resolution(&self, resolution: usize) -> Result<Self> {
        Self::new(self.gens.clone(), resolution)
    }

    /// `s` such that the coset at `index` lies in `I_s \ I_{s+1}` (`N` for the origin).
    pub fn rank_of(&self, index: usize) -> usize {
        self.gens.rank_of(index as u64, self.resolution)
    }

    pub fn point(&self, index: usize) -> GroupPoint {
        self.gens
            .point_of(index as u64, self.resolution)
            .expect("index inside the grid")
    }

    /// `x ⊖ y` on coset indices.
    pub fn sub_index(&self, x: usize, y: usize) -> usize {
        self.gens.sub_index(x as u64, y as u64, self.resolution) as usize
    }

    /// `exp(2πi j / L)` from the shared table.
    fn root(&self, j: u64) -> Complex64 {
        self.roots[(j % self.period as u64) as usize]
    }

    /// Step through the root table that realises `exp(2πi / m_k)`.
    fn step(&self, k: usize) -> u64 {
        (self.period / self.radices()[k]) as u64
    }

    /// `ψ_n` evaluated on every coset, for `n < M_N`.
    pub fn character_values(&self, n: usize) -> Result<Vec<Complex64>> {
        if n >= self.size {
            return Err(Error::IndexOutOfRange {
                n: n as u64,
                max: self.size as u64 - 1,
            });
        }
        // ψ_n(x) = exp(2πi Σ n_k x_k step_k / L); build the phase sums digit by digit.
        let mut phase = vec![0u64; self.size];
        let mut rest = n as u64;
        let mut block = 1usize;
        for k in 0..self.resolution {
            let m = self.radices()[k] as u64;
            let digit = rest % m;
            rest /= m;
            let increment = digit * self.step(k) % self.period as u64;
            for x in 1..m as usize {
                let (head, tail) = phase.split_at_mut(x * block);
                let shift = increment * x as u64;
                for (dst, &src) in tail[..block].iter_mut().zip(&head[..block]) {
                    *dst = src + shift;
                }
            }
            block *= m as usize;
        }
        Ok(phase.into_iter().map(|ph| self.root(ph)).collect())
    }

    /// `ψ_n(x)` at a single coset.
    pub fn character_at(&self, n: usize, index: usize) -> Complex64 {
        let (mut n, mut x, mut phase) = (n as u64, index as u64, 0u64);
        for k in 0..self.resolution {
            let m = self.radices()[k] as u64;
            phase += (n % m) * (x % m) * self.step(k);
            n /= m;
            x /= m;
        }
        self.root(phase)
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u32, b: u32) -> u32 {
    a / gcd(a, b) * b
}

/// `exp(2πi j / n)`, exact on the real and imaginary axes.
fn root_of_unity(j: u64, n: u64) -> Complex64 {
    let j = j % n;
    if (4 * j).is_multiple_of(n) {
        return match 4 * j / n {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    let (s, c) = (TAU * j as f64 / n as f64).sin_cos();
    Complex64::new(c, s)
}

/// `ψ_n(x) = Π_k exp(2πi n_k x_k / m_k)`, evaluated directly from the digits.
pub fn character(m: &GeneratorSequence, n: &VIndex, x: &GroupPoint) -> Complex64 {
    x.coords()
        .iter()
        .enumerate()
        .map(|(k, &xk)| {
            let radix = m.radix(k) as u64;
            root_of_unity(n.digit(k) as u64 * xk as u64, radix)
        })
        .product()
}

/// A function constant on the rank-`N` cosets, i.e. an element of the
/// `N`-th martingale level.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.size() {
            return Err(Error::LengthMismatch {
                expected: grid.size(),
                found: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            values: vec![ZERO; grid.size()],
            grid: grid.clone(),
        }
    }

    pub fn constant(grid: &Grid, c: Complex64) -> Self {
        Self {
            values: vec![c; grid.size()],
            grid: grid.clone(),
        }
    }

    pub fn from_fn(grid: &Grid, f: impl FnMut(usize) -> Complex64) -> Self {
        Self {
            values: (0..grid.size()).map(f).collect(),
            grid: grid.clone(),
        }
    }

    pub fn from_real(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        Self::new(
            grid.clone(),
            values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
        )
    }

    /// The character `ψ_n` as a function.
    pub fn character(grid: &Grid, n: usize) -> Result<Self> {
        Ok(Self {
            values: grid.character_values(n)?,
            grid: grid.clone(),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn resolution(&self) -> usize {
        self.grid.resolution()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// `∫ f dμ`.
    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.grid.size() as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn abs_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        assert_eq!(self.grid, other.grid, "functions on different grids");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        self.map(|v| v * c)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> GridFunction {
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise product; used for `ψ_n · D_k` style expressions.
    pub fn pointwise_mul(&self, other: &GridFunction) -> GridFunction {
        assert_eq!(self.grid, other.grid, "functions on different grids");
        GridFunction {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    /// `f + c·g` in place.
    pub fn add_scaled(&mut self, other: &GridFunction, c: Complex64) {
        assert_eq!(self.grid, other.grid, "functions on different grids");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    /// The same function viewed on a finer grid (constant on the new cosets).
    pub fn refine(&self, resolution: usize) -> Result<GridFunction> {
        if resolution < self.resolution() {
            return Err(Error::ResolutionMismatch {
                left: self.resolution(),
                right: resolution,
            });
        }
        let grid = self.grid.at_resolution(resolution)?;
        let coarse = self.grid.size();
        Ok(GridFunction::from_fn(&grid, |i| self.values[i % coarse]))
    }
}

impl Add for &GridFunction {
    type Output = GridFunction;

    fn add(self, rhs: &GridFunction) -> GridFunction {
        let mut out = self.clone();
        out.add_scaled(rhs, Complex64::new(1.0, 0.0));
        out
    }
}

impl Sub for &GridFunction {
    type Output = GridFunction;

    fn sub(self, rhs: &GridFunction) -> GridFunction {
        let mut out = self.clone();
        out.add_scaled(rhs, Complex64::new(-1.0, 0.0));
        out
    }
}

impl Mul<Complex64> for &GridFunction {
    type Output = GridFunction;

    fn mul(self, c: Complex64) -> GridFunction {
        self.map(|v| v * c)
    }
}

/// Vilenkin-Fourier coefficients `f̂(0), ..., f̂(M_N - 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralVector {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralVector {
    pub fn new(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.size() {
            return Err(Error::LengthMismatch {
                expected: grid.size(),
                found: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Zero every coefficient with index `≥ n`.
    pub fn truncate(&mut self, n: usize) {
        let n = n.min(self.coeffs.len());
        self.coeffs[n..].fill(ZERO);
    }
}

/// Apply one small DFT per digit: stage `k` mixes radix `m_k` at stride `M_k`.
fn staged_transform(grid: &Grid, data: &mut [Complex64], inverse: bool) {
    let mut stride = 1usize;
    let mut scratch_in = Vec::new();
    let mut scratch_out = Vec::new();
    for k in 0..grid.resolution() {
        let radix = grid.radices()[k] as usize;
        let step = grid.step(k);
        let span = stride * radix;
        if radix == 2 {
            for start in (0..data.len()).step_by(span) {
                for j in start..start + stride {
                    let (a, b) = (data[j], data[j + stride]);
                    data[j] = a + b;
                    data[j + stride] = a - b;
                }
            }
        } else {
            scratch_in.resize(radix, ZERO);
            scratch_out.resize(radix, ZERO);
            for start in (0..data.len()).step_by(span) {
                for j in start..start + stride {
                    for c in 0..radix {
                        scratch_in[c] = data[j + c * stride];
                    }
                    for (u, out) in scratch_out.iter_mut().enumerate() {
                        let mut acc = ZERO;
                        for (c, &v) in scratch_in.iter().enumerate() {
                            let w = grid.root(((u * c) % radix) as u64 * step);
                            acc += v * if inverse { w } else { w.conj() };
                        }
                        *out = acc;
                    }
                    for u in 0..radix {
                        data[j + u * stride] = scratch_out[u];
                    }
                }
            }
        }
        stride = span;
    }
}

/// `f̂(n) = (1/M_N) Σ_x f(x) conj(ψ_n(x))`, in `O(M_N Σ m_k)`.
pub fn forward(f: &GridFunction) -> SpectralVector {
    let mut coeffs = f.values.clone();
    staged_transform(&f.grid, &mut coeffs, false);
    let scale = 1.0 / f.grid.size() as f64;
    coeffs.iter_mut().for_each(|c| *c *= scale);
    SpectralVector {
        grid: f.grid.clone(),
        coeffs,
    }
}

/// `f(x) = Σ_n f̂(n) ψ_n(x)`.
pub fn inverse(s: &SpectralVector) -> GridFunction {
    let mut values = s.coeffs.clone();
    staged_transform(&s.grid, &mut values, true);
    GridFunction {
        grid: s.grid.clone(),
        values,
    }
}

/// Quadratic-time reference transforms built straight from the characters.
pub mod naive {
    use super::*;

    pub fn forward(f: &GridFunction) -> SpectralVector {
        let grid = f.grid();
        let scale = 1.0 / grid.size() as f64;
        let coeffs = (0..grid.size())
            .map(|n| {
                let psi = grid.character_values(n).expect("n < M_N");
                f.values()
                    .iter()
                    .zip(&psi)
                    .map(|(v, w)| v * w.conj())
                    .sum::<Complex64>()
                    * scale
            })
            .collect();
        SpectralVector {
            grid: grid.clone(),
            coeffs,
        }
    }

    pub fn inverse(s: &SpectralVector) -> GridFunction {
        let grid = s.grid();
        let mut out = GridFunction::zeros(grid);
        for (n, &c) in s.coeffs().iter().enumerate() {
            if c != ZERO {
                let psi = GridFunction::character(grid, n).expect("n < M_N");
                out.add_scaled(&psi, c);
            }
        }
        out
    }
}

fn check_kernel_index(grid: &Grid, n: usize) -> Result<()> {
    if n > grid.size() {
        return Err(Error::IndexOutOfRange {
            n: n as u64,
            max: grid.size() as u64,
        });
    }
    Ok(())
}

/// `D_n = Σ_{k<n} ψ_k` by literal summation (`D_0 = 0`).
pub fn dirichlet_direct(grid: &Grid, n: usize) -> Result<GridFunction> {
    check_kernel_index(grid, n)?;
    let mut sweep = DirichletSweep::new(grid);
    for _ in 0..n {
        sweep.advance();
    }
    Ok(sweep.into_current())
}

/// `D_n = ψ_n Σ_j D_{M_j} Σ_{u=m_j-n_j}^{m_j-1} r_j^u`, with `D_{M_j} = M_j 1_{I_j}`.
///
/// For `n = M_N` the character `ψ_n` is not resolved at resolution `N`; the
/// expression collapses to its only surviving term `D_{M_N}`.
pub fn dirichlet_closed(grid: &Grid, n: usize) -> Result<GridFunction> {
    check_kernel_index(grid, n)?;
    if n == 0 {
        return Ok(GridFunction::zeros(grid));
    }
    let size = grid.size();
    if n == size {
        let mut out = GridFunction::zeros(grid);
        out.values[0] = Complex64::new(size as f64, 0.0);
        return Ok(out);
    }
    let digits = grid.generators().decompose(n as u64)?;
    let psi = grid.character_values(n)?;
    let values = (0..size)
        .map(|i| {
            let point = grid.point(i);
            let mut acc = ZERO;
            for j in 0..grid.resolution() {
                // D_{M_j}(x) = M_j on I_j and 0 outside; I_j shrinks with j.
                if point.coords()[..j].iter().any(|&c| c != 0) {
                    break;
                }
                let radix = grid.radices()[j] as u64;
                let xj = point.coords()[j] as u64;
                let nj = digits.digit(j) as u64;
                let geometric: Complex64 = (radix - nj..radix)
                    .map(|u| grid.root(u * xj % radix * grid.step(j)))
                    .sum();
                acc += geometric * grid.base(j) as f64;
            }
            psi[i] * acc
        })
        .collect();
    Ok(GridFunction {
        grid: grid.clone(),
        values,
    })
}

/// Walks `D_0, D_1, ..., D_{M_N}` by adding one character at a time.
pub struct DirichletSweep {
    grid: Grid,
    n: usize,
    current: GridFunction,
}

impl DirichletSweep {
    pub fn new(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            n: 0,
            current: GridFunction::zeros(grid),
        }
    }

    /// Index of the kernel currently held.
    pub fn index(&self) -> usize {
        self.n
    }

    pub fn current(&self) -> &GridFunction {
        &self.current
    }

    pub fn into_current(self) -> GridFunction {
        self.current
    }

    /// Move from `D_n` to `D_{n+1}`; returns false once `D_{M_N}` is reached.
    pub fn advance(&mut self) -> bool {
        if self.n >= self.grid.size() {
            return false;
        }
        let psi = self.grid.character_values(self.n).expect("n < M_N");
        for (d, p) in self.current.values.iter_mut().zip(psi) {
            *d += p;
        }
        self.n += 1;
        true
    }
}

/// `S_n f = Σ_{k<n} f̂(k) ψ_k` by spectral truncation.
pub fn partial_sum(f: &GridFunction, n: usize) -> Result<GridFunction> {
    check_kernel_index(f.grid(), n)?;
    let mut s = forward(f);
    s.truncate(n);
    Ok(inverse(&s))
}

/// `S_n f(x) = ∫ f(t) D_n(x ⊖ t) dμ(t)`, using the closed-form kernel.
pub fn partial_sum_convolution(f: &GridFunction, n: usize) -> Result<GridFunction> {
    let grid = f.grid();
    let kernel = dirichlet_closed(grid, n)?;
    Ok(convolve(f, &kernel))
}

/// `(f * g)(x) = ∫ f(t) g(x ⊖ t) dμ(t)`.
pub fn convolve(f: &GridFunction, g: &GridFunction) -> GridFunction {
    let grid = f.grid();
    assert_eq!(grid, g.grid(), "functions on different grids");
    let scale = 1.0 / grid.size() as f64;
    GridFunction::from_fn(grid, |x| {
        f.values()
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != ZERO)
            .map(|(t, v)| v * g.values()[grid.sub_index(x, t)])
            .sum::<Complex64>()
            * scale
    })
}

/// `S_{M_k} f`: the average of `f` over each rank-`k` coset.
pub fn conditional_expectation(f: &GridFunction, k: usize) -> Result<GridFunction> {
    if k > f.resolution() {
        return Err(Error::IndexOutOfRange {
            n: k as u64,
            max: f.resolution() as u64,
        });
    }
    let grid = f.grid();
    let block = grid.base(k);
    let mut avg = vec![ZERO; block];
    for (i, v) in f.values().iter().enumerate() {
        avg[i % block] += v;
    }
    let scale = block as f64 / grid.size() as f64;
    avg.iter_mut().for_each(|v| *v *= scale);
    Ok(GridFunction::from_fn(grid, |i| avg[i % block]))
}

/// Walks `S_0 f, S_1 f, ..., S_{M_N} f` from the spectrum of `f`.
pub struct PartialSumSweep {
    spectrum: SpectralVector,
    n: usize,
    current: GridFunction,
}

impl PartialSumSweep {
    pub fn new(f: &GridFunction) -> Self {
        Self::from_spectrum(forward(f))
    }

    pub fn from_spectrum(spectrum: SpectralVector) -> Self {
        let current = GridFunction::zeros(spectrum.grid());
        Self {
            spectrum,
            n: 0,
            current,
        }
    }

    pub fn index(&self) -> usize {
        self.n
    }

    pub fn current(&self) -> &GridFunction {
        &self.current
    }

    pub fn spectrum(&self) -> &SpectralVector {
        &self.spectrum
    }

    /// Move from `S_n f` to `S_{n+1} f`; returns false at `n = M_N`.
    pub fn advance(&mut self) -> bool {
        let grid = self.spectrum.grid();
        if self.n >= grid.size() {
            return false;
        }
        let c = self.spectrum.coeffs()[self.n];
        if c != ZERO {
            let psi = grid.character_values(self.n).expect("n < M_N");
            for (v, p) in self.current.values.iter_mut().zip(psi) {
                *v += c * p;
            }
        }
        self.n += 1;
        true
    }
}
