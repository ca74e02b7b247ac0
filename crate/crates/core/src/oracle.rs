//! Exact reference ground states: dense diagonalization for small systems,
//! matrix-free Lanczos beyond that, and an on-disk cache of solutions.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::pauli::{CompiledSum, PauliSum};
use crate::state::StateVector;

/// Largest system the dense solver accepts.
pub const DENSE_LIMIT: usize = 10;

/// Systems up to this size go to the dense solver in [`ground_state`].
pub const AUTO_DENSE_MAX: usize = 8;

pub const DEFAULT_LANCZOS_TOL: f64 = 1e-10;

/// Fidelity above which a variational state counts as the ground state.
pub const SUCCESS_FIDELITY: f64 = 0.999;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundSolution {
    pub energy: f64,
    pub state: StateVector,
    /// `E_1 - E_0`. From Lanczos this is the second Ritz value minus the first,
    /// which overestimates the gap and cannot see a degenerate ground state.
    pub gap: f64,
    pub method: SolverMethod,
    /// `||H psi - E psi||`.
    pub residual: f64,
}

/// Rotates the global phase so the largest-magnitude amplitude (lowest index
/// among near-ties) is real and positive.
pub fn fix_phase(state: &mut StateVector) {
    let amps = state.amplitudes();
    let max = amps.iter().map(|a| a.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = amps
        .iter()
        .position(|a| a.norm() >= max * (1.0 - 1e-9))
        .expect("maximum exists");
    let phase = amps[pivot].conj() / amps[pivot].norm();
    state.amplitudes_mut().iter_mut().for_each(|a| *a *= phase);
}

fn residual_norm(h: &CompiledSum, psi: &[Complex64], energy: f64) -> f64 {
    let mut hpsi = vec![ZERO; psi.len()];
    h.apply_into(psi, &mut hpsi);
    hpsi.iter()
        .zip(psi)
        .map(|(a, b)| (a - b * energy).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Lowest eigenpair by full Hermitian diagonalization.
pub fn ground_state_dense(h: &PauliSum, num_qubits: usize) -> Result<GroundSolution> {
    if num_qubits > DENSE_LIMIT {
        return Err(Error::DenseTooLarge {
            num_qubits,
            limit: DENSE_LIMIT,
        });
    }
    let m = h.to_dense(num_qubits)?;
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energy = eig.eigenvalues[order[0]];
    let gap = order
        .get(1)
        .map(|&i| eig.eigenvalues[i] - energy)
        .unwrap_or(f64::INFINITY);
    let mut state = StateVector::from_amplitudes(eig.eigenvectors.column(order[0]).iter().copied().collect())?;
    state.normalize();
    fix_phase(&mut state);
    let residual = residual_norm(&h.compile(), state.amplitudes(), energy);
    Ok(GroundSolution {
        energy,
        state,
        gap,
        method: SolverMethod::Dense,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    pub tol: f64,
    /// Krylov vectors kept per cycle.
    pub max_krylov: usize,
    /// Extra cycles restarted from the current Ritz vector.
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_LANCZOS_TOL,
            max_krylov: 300,
            max_restarts: 4,
            seed: 0x5eed,
        }
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn axpy(y: &mut [Complex64], a: Complex64, x: &[Complex64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

fn vec_norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

struct Cycle {
    ritz: Vec<f64>,
    vector: Vec<Complex64>,
    krylov_dim: usize,
}

/// One Lanczos cycle with full reorthogonalization.
fn lanczos_cycle(h: &CompiledSum, start: Vec<Complex64>, opts: &LanczosOptions) -> Cycle {
    let dim = start.len();
    let max_k = opts.max_krylov.min(dim).max(1);
    let mut basis: Vec<Vec<Complex64>> = vec![start];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![ZERO; dim];
    let e = loop {
        let j = basis.len() - 1;
        h.apply_into(&basis[j], &mut w);
        alpha.push(dot(&basis[j], &w).re);
        // Two Gram-Schmidt passes against the whole basis.
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                axpy(&mut w, -c, v);
            }
        }
        let b = vec_norm(&w);
        let k = basis.len();
        let exhausted = b < 1e-13 || k == max_k;
        if exhausted || k % 10 == 0 {
            let t = DMatrix::from_fn(k, k, |r, c| {
                if r == c {
                    alpha[r]
                } else if r + 1 == c {
                    beta[r]
                } else if c + 1 == r {
                    beta[c]
                } else {
                    0.0
                }
            });
            let e = SymmetricEigen::new(t);
            let i0 = argmin(e.eigenvalues.as_slice());
            let ritz_res = b * e.eigenvectors[(k - 1, i0)].abs();
            if exhausted || ritz_res < 0.1 * opts.tol {
                break e;
            }
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    };
    let mut order: Vec<usize> = (0..e.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let y = e.eigenvectors.column(order[0]);
    let mut vector = vec![ZERO; dim];
    for (v, &c) in basis.iter().zip(y.iter()) {
        axpy(&mut vector, Complex64::new(c, 0.0), v);
    }
    let n = vec_norm(&vector);
    vector.iter_mut().for_each(|x| *x /= n);
    Cycle {
        ritz: order.iter().map(|&i| e.eigenvalues[i]).collect(),
        vector,
        krylov_dim: basis.len(),
    }
}

fn argmin(xs: &[f64]) -> usize {
    xs.iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty")
}

/// Lowest eigenpair by Lanczos iteration using only matrix-vector products.
pub fn ground_state_lanczos(h: &PauliSum, num_qubits: usize, opts: &LanczosOptions) -> Result<GroundSolution> {
    h.check_sites(num_qubits)?;
    if !(opts.tol > 0.0) || opts.max_krylov == 0 {
        return Err(Error::InvalidParameter("Lanczos needs tol > 0 and max_krylov >= 1".into()));
    }
    let compiled = h.compile();
    let dim = 1usize << num_qubits;
    crate::state::check_size(num_qubits)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let n = vec_norm(&start);
    start.iter_mut().for_each(|x| *x /= n);

    let mut gap = f64::INFINITY;
    let mut total_dim = 0;
    let mut last = (f64::NAN, f64::INFINITY);
    for cycle_index in 0..=opts.max_restarts {
        let cycle = lanczos_cycle(&compiled, start, opts);
        total_dim += cycle.krylov_dim;
        if cycle_index == 0 {
            gap = cycle.ritz.get(1).map(|e1| e1 - cycle.ritz[0]).unwrap_or(f64::INFINITY);
        }
        let energy = cycle.ritz[0];
        let residual = residual_norm(&compiled, &cycle.vector, energy);
        if residual < opts.tol {
            let mut state = StateVector::from_amplitudes(cycle.vector)?;
            fix_phase(&mut state);
            return Ok(GroundSolution {
                energy,
                state,
                gap,
                method: SolverMethod::Lanczos,
                residual,
            });
        }
        last = (energy, residual);
        log::debug!("Lanczos cycle {cycle_index}: energy {energy}, residual {residual:e}");
        start = cycle.vector;
    }
    Err(Error::LanczosNotConverged {
        krylov_dim: total_dim,
        residual: last.1,
    })
}

/// Dense for small systems, Lanczos otherwise.
pub fn ground_state(h: &PauliSum, num_qubits: usize) -> Result<GroundSolution> {
    if num_qubits <= AUTO_DENSE_MAX {
        ground_state_dense(h, num_qubits)
    } else {
        ground_state_lanczos(h, num_qubits, &LanczosOptions::default())
    }
}

pub fn solve_model(spec: &ModelSpec) -> Result<GroundSolution> {
    spec.validate()?;
    ground_state(&spec.build()?.full, spec.num_qubits)
}

/// `|<a|b>|`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner_product(b)?.norm())
}

/// `2 c sqrt(eps (1 - eps)) + eps` for infidelity `eps` and operator norm `c`.
pub fn observable_error_bound(infidelity: f64, operator_norm: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&infidelity) {
        return Err(Error::InvalidParameter(format!(
            "infidelity must lie in [0, 1], got {infidelity}"
        )));
    }
    if !(operator_norm >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "operator norm must be non-negative, got {operator_norm}"
        )));
    }
    Ok(2.0 * operator_norm * (infidelity * (1.0 - infidelity)).sqrt() + infidelity)
}

/// Entanglement entropy of the oracle state across the half cut.
pub fn ground_state_entropy(solution: &GroundSolution) -> Result<f64> {
    let n = solution.state.num_qubits();
    crate::entanglement::entropy(&solution.state, crate::entanglement::Bipartition::half(n)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CacheMeta {
    spec: ModelSpec,
    energy: f64,
    gap: f64,
    method: SolverMethod,
    residual: f64,
    sha256: String,
}

/// Directory of solved reference states. Each entry is a JSON metadata file
/// and a raw little-endian `(re, im)` amplitude file checked by SHA-256.
#[derive(Debug, Clone)]
pub struct ReferenceCache {
    dir: PathBuf,
}

fn cache_err(e: impl std::fmt::Display) -> Error {
    Error::Cache(e.to_string())
}

impl ReferenceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn stem(spec: &ModelSpec) -> String {
        // Bit pattern keeps distinct order parameters distinct.
        format!(
            "{}_n{}_{:016x}",
            spec.kind.name(),
            spec.num_qubits,
            spec.order_parameter.to_bits()
        )
    }

    fn paths(&self, spec: &ModelSpec) -> (PathBuf, PathBuf) {
        let stem = Self::stem(spec);
        (
            self.dir.join(format!("{stem}.json")),
            self.dir.join(format!("{stem}.bin")),
        )
    }

    fn encode(state: &StateVector) -> Vec<u8> {
        let mut bytes = Vec::with_capacity(state.dim() * 16);
        for a in state.amplitudes() {
            bytes.extend_from_slice(&a.re.to_le_bytes());
            bytes.extend_from_slice(&a.im.to_le_bytes());
        }
        bytes
    }

    /// Cached solution, `Ok(None)` when absent; a checksum mismatch is an error.
    pub fn load(&self, spec: &ModelSpec) -> Result<Option<GroundSolution>> {
        let (meta_path, bin_path) = self.paths(spec);
        if !meta_path.exists() || !bin_path.exists() {
            return Ok(None);
        }
        let meta: CacheMeta =
            serde_json::from_str(&fs::read_to_string(&meta_path).map_err(cache_err)?).map_err(cache_err)?;
        let bytes = fs::read(&bin_path).map_err(cache_err)?;
        if hex::encode(Sha256::digest(&bytes)) != meta.sha256 {
            return Err(Error::Cache(format!("checksum mismatch for {}", bin_path.display())));
        }
        if meta.spec != *spec || bytes.len() != 16usize << spec.num_qubits {
            return Err(Error::Cache(format!("entry {} does not match request", meta_path.display())));
        }
        let amps = bytes
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                    f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
                )
            })
            .collect();
        Ok(Some(GroundSolution {
            energy: meta.energy,
            state: StateVector::from_amplitudes(amps)?,
            gap: meta.gap,
            method: meta.method,
            residual: meta.residual,
        }))
    }

    pub fn store(&self, spec: &ModelSpec, solution: &GroundSolution) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(cache_err)?;
        let (meta_path, bin_path) = self.paths(spec);
        let bytes = Self::encode(&solution.state);
        let meta = CacheMeta {
            spec: spec.clone(),
            energy: solution.energy,
            gap: solution.gap,
            method: solution.method,
            residual: solution.residual,
            sha256: hex::encode(Sha256::digest(&bytes)),
        };
        fs::write(&bin_path, &bytes).map_err(cache_err)?;
        fs::write(&meta_path, serde_json::to_string_pretty(&meta).map_err(cache_err)?).map_err(cache_err)?;
        Ok(())
    }

    pub fn get_or_solve(&self, spec: &ModelSpec) -> Result<GroundSolution> {
        if let Some(sol) = self.load(spec)? {
            return Ok(sol);
        }
        let sol = solve_model(spec)?;
        self.store(spec, &sol)?;
        Ok(sol)
    }
}
