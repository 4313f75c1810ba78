//! Multi-indices and reproducible standard complex Gaussian coefficients.
//!
//! "Standard complex Gaussian" here means density `(1/π) e^{-|ω|²}` on C:
//! real and imaginary parts are independent centered normals of variance 1/2,
//! so `E|ω|² = 1` and `P(|ω| ≥ λ) = e^{-λ²}` exactly. Using unit variance per
//! component instead would rescale every downstream statistic by √2.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index sets larger than this are refused outright.
pub const MAX_INDEX_COUNT: usize = 1 << 28;

/// A multi-index `j = (j_1, .., j_n)` with order `|j| = Σ j_k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        Self(entries)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `ln(j!) = Σ ln(j_k!)`.
    pub fn ln_factorial(&self) -> f64 {
        self.0.iter().map(|&e| ln_factorial(e as usize)).sum()
    }

    /// `j! = Π j_k!` (overflows to infinity for large entries).
    pub fn factorial(&self) -> f64 {
        self.ln_factorial().exp()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn ln_factorial(k: usize) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

/// Number of multi-indices in N^n with `|j| ≤ degree`, i.e. C(degree + n, n).
pub fn index_count(n: usize, degree: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::Domain("dimension n must be at least 1".into()));
    }
    // C(degree + n, n) built incrementally; each partial product is itself a binomial.
    let mut count: u128 = 1;
    for i in 1..=n as u128 {
        count = count * (degree as u128 + i) / i;
        if count > MAX_INDEX_COUNT as u128 {
            return Err(Error::Capacity(format!(
                "C({}+{n}, {n}) exceeds {MAX_INDEX_COUNT} multi-indices",
                degree
            )));
        }
    }
    Ok(count as usize)
}

/// All multi-indices with `|j| ≤ degree`, stored flat in graded lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSet {
    n: usize,
    degree: usize,
    entries: Vec<u32>,
    grade_start: Vec<usize>,
}

impl IndexSet {
    pub fn new(n: usize, degree: usize) -> Result<Self> {
        let count = index_count(n, degree)?;
        let mut entries = Vec::with_capacity(count * n);
        let mut grade_start = Vec::with_capacity(degree + 2);
        let mut scratch = vec![0u32; n];
        for grade in 0..=degree {
            grade_start.push(entries.len() / n);
            push_compositions(grade as u32, 0, &mut scratch, &mut entries);
        }
        grade_start.push(count);
        debug_assert_eq!(entries.len(), count * n);
        Ok(Self { n, degree, entries, grade_start })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.entries.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries of the multi-index at graded-lex rank `rank`.
    #[inline]
    pub fn entries(&self, rank: usize) -> &[u32] {
        &self.entries[rank * self.n..(rank + 1) * self.n]
    }

    /// Rank range holding grade `k`.
    #[inline]
    pub fn grade(&self, k: usize) -> std::ops::Range<usize> {
        self.grade_start[k]..self.grade_start[k + 1]
    }

    pub fn get(&self, rank: usize) -> MultiIndex {
        MultiIndex(self.entries(rank).to_vec())
    }

    pub fn rank_of(&self, j: &MultiIndex) -> Option<usize> {
        if j.dim() != self.n {
            return None;
        }
        let k = j.order() as usize;
        if k > self.degree {
            return None;
        }
        self.grade(k).find(|&rank| self.entries(rank) == j.entries())
    }

    pub fn iter(&self) -> impl Iterator<Item = MultiIndex> + '_ {
        (0..self.len()).map(move |rank| self.get(rank))
    }
}

/// Appends every composition of `remaining` into the slots `pos..` in lexicographic order.
fn push_compositions(remaining: u32, pos: usize, scratch: &mut [u32], out: &mut Vec<u32>) {
    let n = scratch.len();
    if pos == n - 1 {
        scratch[pos] = remaining;
        out.extend_from_slice(scratch);
        return;
    }
    for first in 0..=remaining {
        scratch[pos] = first;
        push_compositions(remaining - first, pos + 1, scratch, out);
    }
}

/// Every multi-index with `|j| ≤ degree` in graded lexicographic order.
pub fn enumerate_indices(n: usize, degree: usize) -> Result<Vec<MultiIndex>> {
    Ok(IndexSet::new(n, degree)?.iter().collect())
}

/// Master seed plus the stream labels a particular draw is keyed by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub master: u64,
    pub experiment: u64,
    pub trial: u64,
}

/// ChaCha stream ids; one generator key serves several independent purposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Coefficients = 0,
    Directions = 1,
    Perturbation = 2,
    Auxiliary = 3,
}

impl Seed {
    pub fn new(master: u64) -> Self {
        Self { master, experiment: 0, trial: 0 }
    }

    pub fn with_labels(master: u64, experiment: u64, trial: u64) -> Self {
        Self { master, experiment, trial }
    }

    /// Same master, new labels.
    pub fn derive(&self, experiment: u64, trial: u64) -> Self {
        Self { master: self.master, experiment, trial }
    }

    /// 256-bit generator key; a pure function of `(master, experiment, trial)`.
    pub fn key(&self) -> [u8; 32] {
        let mut state = self.master;
        let mut mixed = splitmix64(&mut state);
        mixed ^= self.experiment.wrapping_mul(0xD6E8_FEB8_6659_FD93);
        state = mixed;
        let mut mixed = splitmix64(&mut state);
        mixed ^= self.trial.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        state = mixed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        key
    }

    pub fn rng(&self, stream: Stream) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key());
        rng.set_stream(stream as u64);
        rng
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform in (0, 1].
#[inline]
pub(crate) fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform in [0, 1).
#[inline]
pub(crate) fn unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// One standard complex Gaussian from two 64-bit words: `|ω|² ~ Exp(1)`, uniform phase.
#[inline]
pub fn complex_gaussian(rng: &mut impl RngCore) -> Complex64 {
    let radius = (-open_unit(rng.next_u64()).ln()).sqrt();
    let phase = std::f64::consts::TAU * unit(rng.next_u64());
    Complex64::from_polar(radius, phase)
}

/// Words of ChaCha output consumed per coefficient.
const WORDS_PER_COEFFICIENT: u128 = 4;

/// Coefficients `ω_j` for every `|j| ≤ degree`, in graded-lex order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    indices: Arc<IndexSet>,
    values: Vec<Complex64>,
}

impl CoefficientTable {
    pub fn new(indices: Arc<IndexSet>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != indices.len() {
            return Err(Error::Precondition(format!(
                "{} coefficients supplied for {} multi-indices",
                values.len(),
                indices.len()
            )));
        }
        Ok(Self { indices, values })
    }

    pub fn zeros(n: usize, degree: usize) -> Result<Self> {
        let indices = Arc::new(IndexSet::new(n, degree)?);
        let values = vec![Complex64::new(0.0, 0.0); indices.len()];
        Ok(Self { indices, values })
    }

    pub fn n(&self) -> usize {
        self.indices.n()
    }

    pub fn degree(&self) -> usize {
        self.indices.degree()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn indices(&self) -> &Arc<IndexSet> {
        &self.indices
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn get(&self, j: &MultiIndex) -> Option<Complex64> {
        self.indices.rank_of(j).map(|rank| self.values[rank])
    }

    pub fn set(&mut self, j: &MultiIndex, value: Complex64) -> Result<()> {
        let rank = self
            .indices
            .rank_of(j)
            .ok_or_else(|| Error::Precondition(format!("multi-index {j} not in table")))?;
        self.values[rank] = value;
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (MultiIndex, Complex64)> + '_ {
        self.indices.iter().zip(self.values.iter().copied())
    }
}

/// Draws the coefficient table for `(seed, n, degree)`.
///
/// The draw for rank `k` always reads the same words of the keyed ChaCha
/// stream, so raising `degree` appends coefficients without disturbing earlier ones.
pub fn sample_coefficients(seed: Seed, n: usize, degree: usize) -> Result<CoefficientTable> {
    let indices = Arc::new(IndexSet::new(n, degree)?);
    Ok(sample_on(seed, indices))
}

/// As [`sample_coefficients`], reusing a prebuilt index set.
pub fn sample_on(seed: Seed, indices: Arc<IndexSet>) -> CoefficientTable {
    let mut rng = seed.rng(Stream::Coefficients);
    rng.set_word_pos(0);
    let values = (0..indices.len())
        .map(|rank| {
            debug_assert_eq!(rng.get_word_pos(), rank as u128 * WORDS_PER_COEFFICIENT);
            complex_gaussian(&mut rng)
        })
        .collect();
    CoefficientTable { indices, values }
}

/// `P(|ω| ≤ λ) = 1 - e^{-λ²}`, which lies in `[λ²/2, λ²]` for `0 < λ ≤ 1`.
pub fn small_ball_probability(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Domain(format!("λ = {lambda} outside (0, 1]")));
    }
    Ok(-(-lambda * lambda).exp_m1())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn enumerate_one_dimensional() {
        let got = enumerate_indices(1, 3).unwrap();
        assert_eq!(got, vec![idx(&[0]), idx(&[1]), idx(&[2]), idx(&[3])]);
    }

    #[test]
    fn enumerate_graded_lex_within_grade() {
        let got = enumerate_indices(2, 1).unwrap();
        assert_eq!(got, vec![idx(&[0, 0]), idx(&[0, 1]), idx(&[1, 0])]);
    }

    #[test]
    fn enumerate_degree_zero() {
        assert_eq!(enumerate_indices(3, 0).unwrap(), vec![idx(&[0, 0, 0])]);
    }

    #[test]
    fn enumerate_counts_match_binomial() {
        for n in 1..=4 {
            for degree in 0..=12 {
                let all = enumerate_indices(n, degree).unwrap();
                assert_eq!(all.len(), index_count(n, degree).unwrap());
                for w in all.windows(2) {
                    assert!((w[0].order(), &w[0]) < (w[1].order(), &w[1]));
                }
                assert!(all.iter().all(|j| j.order() as usize <= degree && j.dim() == n));
            }
        }
        assert_eq!(index_count(2, 3).unwrap(), 10);
        assert_eq!(index_count(3, 4).unwrap(), 35);
    }

    #[test]
    fn capacity_error_on_huge_sets() {
        assert!(matches!(index_count(40, 1000), Err(Error::Capacity(_))));
        assert!(matches!(index_count(0, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn rank_lookup_round_trips() {
        let set = IndexSet::new(3, 5).unwrap();
        for rank in 0..set.len() {
            assert_eq!(set.rank_of(&set.get(rank)), Some(rank));
        }
        assert_eq!(set.rank_of(&idx(&[6, 0, 0])), None);
    }

    #[test]
    fn factorial_accessor() {
        assert_eq!(idx(&[3, 2]).factorial().round(), 12.0);
        assert_eq!(idx(&[0, 0, 0]).factorial(), 1.0);
    }

    #[test]
    fn sampling_is_reproducible_and_extends() {
        let seed = Seed::with_labels(11, 3, 5);
        let a = sample_coefficients(seed, 2, 6).unwrap();
        let b = sample_coefficients(seed, 2, 6).unwrap();
        assert_eq!(a, b);
        let c = sample_coefficients(seed, 2, 9).unwrap();
        assert_eq!(&c.values()[..a.len()], a.values());
        let other = sample_coefficients(seed.derive(3, 6), 2, 6).unwrap();
        assert_ne!(a.values(), other.values());
    }

    #[test]
    fn labels_separate_streams() {
        let base = Seed::new(1);
        let keys = [base.key(), base.derive(1, 0).key(), base.derive(0, 1).key(), Seed::new(2).key()];
        for i in 0..keys.len() {
            for j in i + 1..keys.len() {
                assert_ne!(keys[i], keys[j]);
            }
        }
    }

    #[test]
    fn moments_and_tail() {
        let table = sample_coefficients(Seed::new(2024), 1, 99_999).unwrap();
        let draws = table.values();
        let count = draws.len() as f64;
        let mean = draws.iter().sum::<Complex64>() / count;
        let bound = 3.0 / count.sqrt();
        assert!(mean.re.abs() < bound && mean.im.abs() < bound, "mean {mean}");
        let second = draws.iter().map(|w| w.norm_sqr()).sum::<f64>() / count;
        assert!((second - 1.0).abs() < 0.01, "E|ω|² = {second}");
        let tail = draws.iter().filter(|w| w.norm() >= 1.0).count() as f64 / count;
        assert!((tail - (-1.0f64).exp()).abs() < 0.005, "tail {tail}");
    }

    #[test]
    fn small_ball_values() {
        let p1 = small_ball_probability(1.0).unwrap();
        assert!((p1 - 0.632_120_558_828_557_7).abs() < 1e-15);
        assert!((0.5..=1.0).contains(&p1));
        let half = small_ball_probability(0.5).unwrap();
        assert!((half - 0.221_199_216_928_595_1).abs() < 1e-15);
        assert!((0.125..=0.25).contains(&half));
        let tiny = 1e-6;
        assert!((small_ball_probability(tiny).unwrap() / (tiny * tiny) - 1.0).abs() < 1e-6);
        assert!(small_ball_probability(0.0).is_err());
        assert!(small_ball_probability(1.5).is_err());
        assert!(small_ball_probability(f64::NAN).is_err());
    }

    #[test]
    fn gauss_product_converges_to_positive_limit() {
        // Π_{|j|≤J} (1 - e^{-(1+ε)^{2|j|}}) over N^2, grade k has k+1 indices.
        let eps: f64 = 0.1;
        let mut log_product = 0.0;
        let mut previous = 0.0;
        let mut partials = Vec::new();
        for k in 0..200usize {
            let q = (1.0 + eps).powi(2 * k as i32);
            log_product += (k as f64 + 1.0) * (-(-q).exp()).ln_1p();
            assert!(log_product <= previous);
            previous = log_product;
            partials.push(log_product.exp());
        }
        let limit = *partials.last().unwrap();
        assert!(limit > 0.0);
        // the tail beyond grade 100 no longer moves the product
        assert!((partials[100] - limit).abs() < 1e-12 * limit.max(1e-300));
    }
}
