//! Bipartite entanglement of pure states: Schmidt coefficients, entanglement
//! spectra, von Neumann entropy and random-state references.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{build_hva, InitStrategy};
use crate::error::{Error, Result};
use crate::models::ModelKind;
use crate::seeds::derive_seed;
use crate::state::StateVector;

/// Schmidt coefficients below this are treated as zero.
pub const SCHMIDT_CUTOFF: f64 = 1e-7;

/// `-2 ln SCHMIDT_CUTOFF`, the largest spectrum value ever reported.
pub const XI_CUTOFF: f64 = 32.236_191_301_916_64;

/// Entries above this are ignored by [`spectrum_distance`].
pub const DISTANCE_WINDOW: f64 = 30.0;

/// Subsystem A is qubits `0..cut_size`, B the rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bipartition {
    pub cut_size: usize,
}

impl Bipartition {
    pub fn new(cut_size: usize, num_qubits: usize) -> Result<Self> {
        if cut_size == 0 || cut_size >= num_qubits {
            return Err(Error::InvalidSize(format!(
                "cut size {cut_size} must lie in 1..{num_qubits}"
            )));
        }
        Ok(Self { cut_size })
    }

    pub fn half(num_qubits: usize) -> Result<Self> {
        Self::new(num_qubits / 2, num_qubits)
    }

    fn check(&self, num_qubits: usize) -> Result<()> {
        Self::new(self.cut_size, num_qubits).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntanglementSpectrum {
    /// Ascending, clamped at [`XI_CUTOFF`].
    pub xi: Vec<f64>,
    /// Nats.
    pub entropy: f64,
}

impl EntanglementSpectrum {
    /// Number of entries strictly below the cutoff.
    pub fn finite_count(&self) -> usize {
        self.xi.iter().filter(|&&x| x < XI_CUTOFF).count()
    }
}

/// Amplitude matrix with rows indexed by the A bits and columns by the B bits.
fn amplitude_matrix(state: &StateVector, cut: Bipartition) -> Result<DMatrix<Complex64>> {
    cut.check(state.num_qubits())?;
    let rows = 1usize << cut.cut_size;
    let cols = 1usize << (state.num_qubits() - cut.cut_size);
    // Column-major storage: element (a, b) sits at a + rows * b, which is the
    // basis index itself.
    Ok(DMatrix::from_column_slice(rows, cols, state.amplitudes()))
}

/// Schmidt coefficients (descending) and `xi_k = -2 ln s_k` (ascending, clamped).
pub fn schmidt(state: &StateVector, cut: Bipartition) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = amplitude_matrix(state, cut)?;
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    let xi = s.iter().map(|&sk| xi_of(sk)).collect();
    Ok((s, xi))
}

fn xi_of(s: f64) -> f64 {
    if s < SCHMIDT_CUTOFF {
        XI_CUTOFF
    } else {
        (-2.0 * s.ln()).clamp(0.0, XI_CUTOFF)
    }
}

fn entropy_of(s: &[f64]) -> f64 {
    s.iter()
        .map(|&sk| sk * sk)
        .filter(|&w| w > 0.0)
        .map(|w| -w * w.ln())
        .sum()
}

/// Von Neumann entropy of the reduced state on A, in nats.
pub fn entropy(state: &StateVector, cut: Bipartition) -> Result<f64> {
    Ok(entropy_of(&schmidt(state, cut)?.0))
}

pub fn entanglement_spectrum(state: &StateVector, cut: Bipartition) -> Result<EntanglementSpectrum> {
    let (s, xi) = schmidt(state, cut)?;
    Ok(EntanglementSpectrum {
        xi,
        entropy: entropy_of(&s),
    })
}

/// Mean half-cut entropy of Haar-random states on `d_a * d_b` dimensions:
/// `sum_{k=d_b+1}^{d_a d_b} 1/k - (d_a - 1) / (2 d_b)` with `d_a <= d_b`.
pub fn page_entropy(d_a: usize, d_b: usize) -> f64 {
    let (d_a, d_b) = if d_a > d_b {
        log::warn!("page_entropy called with d_A = {d_a} > d_B = {d_b}; swapping");
        (d_b, d_a)
    } else {
        (d_a, d_b)
    };
    if d_a <= 1 {
        return 0.0;
    }
    let correction = -((d_a - 1) as f64) / (2.0 * d_b as f64);
    let terms = std::iter::once(correction).chain(((d_b + 1)..=(d_a * d_b)).rev().map(|k| 1.0 / k as f64));
    neumaier_sum(terms)
}

/// Compensated summation, so small cases such as `page_entropy(2, 2)` round exactly.
fn neumaier_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in terms {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + comp
}

/// Page entropy for a qubit cut.
pub fn page_entropy_qubits(num_qubits: usize, cut: Bipartition) -> f64 {
    page_entropy(1 << cut.cut_size, 1 << (num_qubits - cut.cut_size))
}

/// Normalized complex-Gaussian state.
pub fn haar_random_state(num_qubits: usize, seed: u64) -> Result<StateVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = (0..1usize << num_qubits)
        .map(|_| {
            Complex64::new(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            )
        })
        .collect();
    let mut psi = StateVector::from_amplitudes(amps)?;
    psi.normalize();
    Ok(psi)
}

/// Entrywise statistics over a batch of spectra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageSpectrum {
    pub xi_mean: Vec<f64>,
    pub xi_std: Vec<f64>,
    pub entropy_mean: f64,
    pub entropy_std: f64,
    pub num_samples: usize,
}

impl AverageSpectrum {
    fn from_samples(samples: &[EntanglementSpectrum]) -> Self {
        let n = samples.len() as f64;
        let k = samples[0].xi.len();
        let mut xi_mean = vec![0.0; k];
        for s in samples {
            xi_mean.iter_mut().zip(&s.xi).for_each(|(m, x)| *m += x / n);
        }
        let mut xi_std = vec![0.0; k];
        for s in samples {
            for ((v, x), m) in xi_std.iter_mut().zip(&s.xi).zip(&xi_mean) {
                *v += (x - m).powi(2);
            }
        }
        let denom = (n - 1.0).max(1.0);
        xi_std.iter_mut().for_each(|v| *v = (*v / denom).sqrt());
        let entropy_mean = samples.iter().map(|s| s.entropy).sum::<f64>() / n;
        let entropy_std = (samples
            .iter()
            .map(|s| (s.entropy - entropy_mean).powi(2))
            .sum::<f64>()
            / denom)
            .sqrt();
        Self {
            xi_mean,
            xi_std,
            entropy_mean,
            entropy_std,
            num_samples: samples.len(),
        }
    }
}

fn check_samples(num_samples: usize) -> Result<()> {
    if num_samples == 0 {
        return Err(Error::InvalidParameter("num_samples must be at least 1".into()));
    }
    Ok(())
}

/// Averaged spectrum of Haar-random states; sample `s` uses `derive_seed(seed, 0, s)`.
pub fn haar_reference_spectrum(
    num_qubits: usize,
    cut: Bipartition,
    num_samples: usize,
    seed: u64,
) -> Result<AverageSpectrum> {
    check_samples(num_samples)?;
    cut.check(num_qubits)?;
    let spectra = (0..num_samples as u64)
        .into_par_iter()
        .map(|s| entanglement_spectrum(&haar_random_state(num_qubits, derive_seed(seed, 0, s))?, cut))
        .collect::<Result<Vec<_>>>()?;
    Ok(AverageSpectrum::from_samples(&spectra))
}

/// Averaged half-cut spectrum of HVA states at uniformly random parameters.
pub fn hva_average_spectrum(
    kind: ModelKind,
    num_qubits: usize,
    p: usize,
    num_samples: usize,
    seed: u64,
) -> Result<AverageSpectrum> {
    check_samples(num_samples)?;
    let circuit = build_hva(kind, num_qubits, p)?;
    let cut = Bipartition::half(num_qubits)?;
    let spectra = (0..num_samples as u64)
        .into_par_iter()
        .map(|s| {
            let theta = circuit.initial_parameters(InitStrategy::Random, derive_seed(seed, 0, s));
            entanglement_spectrum(&circuit.apply(&theta)?, cut)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AverageSpectrum::from_samples(&spectra))
}

/// Mean absolute difference over indices where both entries are at most
/// [`DISTANCE_WINDOW`]. Returns 0 when nothing is retained.
pub fn spectrum_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let kept: Vec<f64> = a
        .iter()
        .zip(b)
        .filter(|(x, y)| **x <= DISTANCE_WINDOW && **y <= DISTANCE_WINDOW)
        .map(|(x, y)| (x - y).abs())
        .collect();
    if kept.is_empty() {
        return Ok(0.0);
    }
    Ok(kept.iter().sum::<f64>() / kept.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_constant() {
        assert!((XI_CUTOFF + 2.0 * SCHMIDT_CUTOFF.ln()).abs() < 1e-12);
    }

    #[test]
    fn singlet_spectrum() {
        let psi = StateVector::singlet_product(2).unwrap();
        let (s, xi) = schmidt(&psi, Bipartition::new(1, 2).unwrap()).unwrap();
        for v in &s {
            assert!((v - 0.5f64.sqrt()).abs() < 1e-14);
        }
        for v in &xi {
            assert!((v - 2f64.ln()).abs() < 1e-12);
        }
        assert!((entropy(&psi, Bipartition::new(1, 2).unwrap()).unwrap() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn product_state_spectrum() {
        let psi = StateVector::plus(4).unwrap();
        let sp = entanglement_spectrum(&psi, Bipartition::half(4).unwrap()).unwrap();
        assert_eq!(sp.xi.len(), 4);
        assert!(sp.xi[0].abs() < 1e-12);
        assert!(sp.xi[1..].iter().all(|&x| x == XI_CUTOFF));
        assert_eq!(sp.finite_count(), 1);
        assert!(sp.entropy.abs() < 1e-12);
    }

    #[test]
    fn page_values() {
        assert!((page_entropy(2, 2) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(page_entropy(1, 8), 0.0);
        assert_eq!(page_entropy(8, 2), page_entropy(2, 8));
        let approx = 256f64.ln() - 0.5;
        assert!((page_entropy(256, 256) - approx).abs() < 0.01);
    }

    #[test]
    fn bipartition_bounds() {
        assert!(Bipartition::new(0, 4).is_err());
        assert!(Bipartition::new(4, 4).is_err());
        assert!(Bipartition::new(3, 4).is_ok());
    }

    #[test]
    fn distance_basics() {
        let a = [0.1, 1.0, 31.0];
        let b = [0.3, 2.0, 5.0];
        assert_eq!(spectrum_distance(&a, &a).unwrap(), 0.0);
        let d = spectrum_distance(&a, &b).unwrap();
        assert!((d - 0.6).abs() < 1e-12);
        assert_eq!(d, spectrum_distance(&b, &a).unwrap());
        assert!(spectrum_distance(&a, &b[..2]).is_err());
    }

    #[test]
    fn haar_sampling_is_seeded() {
        let cut = Bipartition::half(6).unwrap();
        let a = haar_reference_spectrum(6, cut, 4, 9).unwrap();
        let b = haar_reference_spectrum(6, cut, 4, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.xi_mean.windows(2).all(|w| w[0] <= w[1]));
        assert!(haar_reference_spectrum(6, cut, 0, 9).is_err());
    }
}
