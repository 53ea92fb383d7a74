//! Dense statevector engine.
//!
//! Qubits are numbered from 1 and qubit 1 is the most significant bit of the
//! basis index: `k = Σ_p b_p · 2^(n-p)`. The engine is generic over the
//! amplitude type so that circuits built only from real gates (RY, CZ) can
//! run on `f64` amplitudes; `Complex64` is the default.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{arg_err, Result, VqecError};

/// Largest register the engine will allocate.
pub const MAX_QUBITS: usize = 24;

/// Scalar type usable as a statevector amplitude.
pub trait Amplitude:
    Copy
    + Send
    + Sync
    + fmt::Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + 'static
{
    const ZERO: Self;
    const ONE: Self;
    fn norm_sqr(self) -> f64;
}

impl Amplitude for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    #[inline]
    fn norm_sqr(self) -> f64 {
        self * self
    }
}

impl Amplitude for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    const ONE: Self = Complex64::new(1.0, 0.0);
    #[inline]
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
}

pub(crate) fn check_qubits(n: usize) -> Result<()> {
    if n == 0 {
        return arg_err("register needs at least one qubit");
    }
    if n > MAX_QUBITS {
        return Err(VqecError::Capacity {
            what: "qubits",
            value: n,
            limit: MAX_QUBITS,
        });
    }
    Ok(())
}

/// The state `|x⟩` of an `n`-qubit register as `2^n` amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector<A: Amplitude = Complex64> {
    n: usize,
    amps: Vec<A>,
}

/// Statevector restricted to real amplitudes.
pub type RealStatevector = Statevector<f64>;

impl<A: Amplitude> Statevector<A> {
    /// `|0…0⟩` on `n` qubits, `1 ≤ n ≤ 24`.
    pub fn zero_state(n: usize) -> Result<Self> {
        check_qubits(n)?;
        let mut amps = vec![A::ZERO; 1 << n];
        amps[0] = A::ONE;
        Ok(Self { n, amps })
    }

    /// Wraps explicit amplitudes; the length must be a power of two and the
    /// vector must have unit norm.
    pub fn from_amplitudes(amps: Vec<A>) -> Result<Self> {
        let n = log2_exact(amps.len())?;
        check_qubits(n)?;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return arg_err(format!("amplitudes have squared norm {norm}, expected 1"));
        }
        Ok(Self { n, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[A] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<A> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn mask(&self, qubit: usize) -> Result<usize> {
        if qubit == 0 || qubit > self.n {
            return Err(VqecError::QubitIndex { qubit, n: self.n });
        }
        Ok(1 << (self.n - qubit))
    }

    /// Applies `RY(angle) = [[cos(a/2), -sin(a/2)], [sin(a/2), cos(a/2)]]`
    /// on `qubit` (1-based).
    pub fn apply_ry(&mut self, qubit: usize, angle: f64) -> Result<()> {
        let mask = self.mask(qubit)?;
        let (s, c) = half_angle_sin_cos(angle);
        rotate(&mut self.amps, mask, c, s);
        Ok(())
    }

    /// Applies the real matrix `[[0, -1], [1, 0]] = RY(π)` exactly, i.e.
    /// without the rounding of `cos(π/2)`.
    pub(crate) fn apply_ry_pi(&mut self, qubit: usize) -> Result<()> {
        let mask = self.mask(qubit)?;
        for chunk in self.amps.chunks_exact_mut(2 * mask) {
            let (lo, hi) = chunk.split_at_mut(mask);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let x0 = *a0;
                *a0 = -*a1;
                *a1 = x0;
            }
        }
        Ok(())
    }

    /// Applies CZ between qubits `a` and `b`: negates every amplitude whose
    /// basis index has both bits set.
    pub fn apply_cz(&mut self, a: usize, b: usize) -> Result<()> {
        if a == b {
            return arg_err(format!("CZ needs two distinct qubits, got {a} twice"));
        }
        let both = self.mask(a)? | self.mask(b)?;
        for (k, amp) in self.amps.iter_mut().enumerate() {
            if k & both == both {
                *amp = -*amp;
            }
        }
        Ok(())
    }

    /// Negates the amplitudes at every index where `flips` is set. A block of
    /// commuting CZ gates is one such diagonal.
    pub fn apply_sign_flips(&mut self, flips: &[bool]) -> Result<()> {
        crate::error::check_dim(self.amps.len(), flips.len(), "sign-flip table")?;
        for (amp, &flip) in self.amps.iter_mut().zip(flips) {
            if flip {
                *amp = -*amp;
            }
        }
        Ok(())
    }

    /// Outcome distribution `p_k = |⟨k|x⟩|²`.
    pub fn pmf(&self) -> Pmf {
        Pmf {
            n: self.n,
            probs: self.amps.iter().map(|a| a.norm_sqr()).collect(),
        }
    }
}

impl RealStatevector {
    /// Lifts a real state into the complex representation.
    pub fn to_complex(&self) -> Statevector<Complex64> {
        Statevector {
            n: self.n,
            amps: self.amps.iter().map(|&a| Complex64::new(a, 0.0)).collect(),
        }
    }

    pub(crate) fn from_raw(n: usize, amps: Vec<f64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << n);
        Self { n, amps }
    }
}

#[inline]
/// `sin` and `cos` of `angle/2`, exact when the half angle is within rounding
/// of a multiple of π/2, where the rotation is a signed permutation.
fn half_angle_sin_cos(angle: f64) -> (f64, f64) {
    let half = 0.5 * angle;
    let k = (half / FRAC_PI_2).round();
    if (half - k * FRAC_PI_2).abs() <= 4.0 * f64::EPSILON * half.abs().max(1.0) {
        match (k as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        half.sin_cos()
    }
}

fn rotate<A: Amplitude>(amps: &mut [A], mask: usize, c: f64, s: f64) {
    for chunk in amps.chunks_exact_mut(2 * mask) {
        let (lo, hi) = chunk.split_at_mut(mask);
        for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
            let x0 = *a0;
            let x1 = *a1;
            *a0 = x0 * c - x1 * s;
            *a1 = x0 * s + x1 * c;
        }
    }
}

fn log2_exact(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return arg_err(format!("length {len} is not a power of two"));
    }
    Ok(len.trailing_zeros() as usize)
}

/// A probability mass function over the `2^n` computational basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    n: usize,
    probs: Vec<f64>,
}

impl Pmf {
    /// Validates nonnegativity and unit sum.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let n = log2_exact(probs.len())?;
        check_qubits(n)?;
        if let Some(bad) = probs.iter().find(|p| !(**p >= 0.0)) {
            return arg_err(format!("probability {bad} is negative or NaN"));
        }
        let total: f64 = probs.iter().sum();
        let tol = 1e-12 + probs.len() as f64 * f64::EPSILON;
        if (total - 1.0).abs() > tol {
            return arg_err(format!("probabilities sum to {total}, expected 1"));
        }
        Ok(Self { n, probs })
    }

    /// Point mass `e_k`.
    pub fn canonical(n: usize, k: usize) -> Result<Self> {
        check_qubits(n)?;
        if k >= 1 << n {
            return arg_err(format!("basis index {k} out of range for n = {n}"));
        }
        let mut probs = vec![0.0; 1 << n];
        probs[k] = 1.0;
        Ok(Self { n, probs })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        check_qubits(n)?;
        let dim = 1usize << n;
        Ok(Self {
            n,
            probs: vec![1.0 / dim as f64; dim],
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Draws `shots` i.i.d. basis indices.
    pub fn sample_indices<R: Rng + ?Sized>(&self, shots: usize, rng: &mut R) -> Result<Vec<usize>> {
        if shots == 0 {
            return arg_err("shot count must be at least 1");
        }
        let dist = WeightedIndex::new(&self.probs)
            .map_err(|e| VqecError::Argument(format!("cannot sample from pmf: {e}")))?;
        Ok((0..shots).map(|_| dist.sample(rng)).collect())
    }

    /// Draws `shots` i.i.d. measurement outcomes, deterministic given the
    /// generator state.
    pub fn sample_bitstrings<R: Rng + ?Sized>(
        &self,
        shots: usize,
        rng: &mut R,
    ) -> Result<Vec<Bitstring>> {
        let n = self.n;
        Ok(self
            .sample_indices(shots, rng)?
            .into_iter()
            .map(|index| Bitstring { n, index })
            .collect())
    }
}

/// A measurement outcome `b ∈ {0,1}^n`, stored as its basis index.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bitstring {
    n: usize,
    index: usize,
}

impl Bitstring {
    pub fn from_index(n: usize, index: usize) -> Result<Self> {
        check_qubits(n)?;
        if index >= 1 << n {
            return arg_err(format!("basis index {index} out of range for n = {n}"));
        }
        Ok(Self { n, index })
    }

    /// Builds from bits listed qubit 1 first.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        check_qubits(bits.len())?;
        let mut index = 0;
        for &b in bits {
            if b > 1 {
                return arg_err(format!("bit value {b} is not 0 or 1"));
            }
            index = (index << 1) | b as usize;
        }
        Ok(Self {
            n: bits.len(),
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn index(&self) -> usize {
        self.index
    }

    /// Bit of qubit `p` (1-based).
    pub fn bit(&self, p: usize) -> u8 {
        debug_assert!(p >= 1 && p <= self.n);
        ((self.index >> (self.n - p)) & 1) as u8
    }

    /// All bits, qubit 1 first.
    pub fn bits(&self) -> Vec<u8> {
        (1..=self.n).map(|p| self.bit(p)).collect()
    }
}

impl fmt::Debug for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bitstring({self})")
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}
