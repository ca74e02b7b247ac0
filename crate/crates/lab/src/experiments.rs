//! One function per experiment. Each takes fully resolved parameters and
//! returns its results in memory; writing files is left to the caller.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use hva_core::ansatz::build_hva;
use hva_core::entanglement::{
    entanglement_spectrum, haar_reference_spectrum, hva_average_spectrum, page_entropy_qubits,
    spectrum_distance, AverageSpectrum, Bipartition, EntanglementSpectrum,
};
use hva_core::gradient::{first_bond_zz, linear_slope, sample_variance, single_term_gradient_sample, GradientAnsatz};
use hva_core::oracle::{self, GroundSolution, ReferenceCache};
use hva_core::{derive_seed, fidelity, optimize, EnergyObjective, InitStrategy, ModelKind, ModelSpec, OptimizationTrace, OptimizerConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest system for which an exact reference is computed.
pub const ORACLE_MAX_QUBITS: usize = 20;

/// Seed streams under the master seed.
pub mod streams {
    pub const INIT: u64 = 1;
    pub const SPECTRUM: u64 = 2;
    pub const HAAR: u64 = 3;
    pub const OVERPARAM: u64 = 4;
    pub const GRADIENT: u64 = 5;
}

/// Where exact references come from.
#[derive(Debug, Clone, Default)]
pub struct Oracle {
    cache: Option<ReferenceCache>,
}

impl Oracle {
    pub fn new(cache_dir: Option<PathBuf>) -> Self {
        Self {
            cache: cache_dir.map(ReferenceCache::new),
        }
    }

    /// `None` (with a warning) when the system is too large for an exact solve.
    pub fn solve(&self, spec: &ModelSpec) -> Result<Option<GroundSolution>> {
        if spec.num_qubits > ORACLE_MAX_QUBITS {
            log::warn!(
                "no exact reference for N = {} (limit {ORACLE_MAX_QUBITS}); fidelity omitted",
                spec.num_qubits
            );
            return Ok(None);
        }
        let sol = match &self.cache {
            Some(c) => c.get_or_solve(spec)?,
            None => oracle::solve_model(spec)?,
        };
        Ok(Some(sol))
    }
}

/// Seed of the `index`-th initialization of a run keyed by `key`.
pub fn init_seed(master: u64, stream: u64, key: u64, index: u64) -> u64 {
    derive_seed(derive_seed(master, stream, key), 0, index)
}

/// Model spec for `kind` at size `n` with order parameter `order`.
pub fn model_spec(kind: ModelKind, n: usize, order: f64) -> Result<ModelSpec> {
    let spec = ModelSpec::new(kind, n, order);
    spec.validate()?;
    Ok(spec)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct OptimizeParams {
    pub spec: ModelSpec,
    pub p: usize,
    pub init: InitStrategy,
    pub seed: u64,
    pub optimizer: OptimizerConfig,
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub trace: OptimizationTrace,
    pub oracle: Option<GroundSolution>,
    pub fidelity: Option<f64>,
}

impl OptimizeOutcome {
    pub fn infidelity(&self) -> Option<f64> {
        self.fidelity.map(|f| 1.0 - f)
    }
}

pub fn run_optimize(params: &OptimizeParams, oracle: &Oracle) -> Result<OptimizeOutcome> {
    let groups = params.spec.build()?;
    let circuit = build_hva(params.spec.kind, params.spec.num_qubits, params.p)?;
    let reference = oracle.solve(&params.spec)?;
    let optimizer = params.optimizer.clone();
    if reference.is_none() && matches!(optimizer.stop, hva_core::StopMode::Residual { .. }) {
        bail!("residual stopping needs an exact reference, unavailable at N = {}", params.spec.num_qubits);
    }
    optimizer.validate()?;
    let objective = EnergyObjective::new(&circuit, &groups.full)?;
    let theta0 = circuit.initial_parameters(params.init, derive_seed(params.seed, streams::INIT, 0));
    let trace = optimize(&objective, &theta0, &optimizer, reference.as_ref().map(|r| r.energy))?;
    let fid = match &reference {
        Some(r) => Some(fidelity(&circuit.apply(&trace.final_parameters)?, &r.state)?),
        None => None,
    };
    Ok(OptimizeOutcome {
        trace,
        oracle: reference,
        fidelity: fid,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub energy: f64,
    pub residual: Option<f64>,
    pub grad_norm: f64,
}

pub fn trace_rows(trace: &OptimizationTrace) -> Vec<TraceRow> {
    trace
        .energies
        .iter()
        .enumerate()
        .map(|(t, &energy)| TraceRow {
            iteration: t,
            energy,
            residual: trace.residuals.get(t).copied(),
            grad_norm: trace.grad_norms[t],
        })
        .collect()
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SpectrumSampleParams {
    pub kind: ModelKind,
    pub n: usize,
    pub p_list: Vec<usize>,
    pub order: f64,
    pub samples: usize,
    pub haar_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct DepthSpectrum {
    pub p: usize,
    pub average: AverageSpectrum,
    pub distance_to_haar: f64,
}

#[derive(Debug, Clone)]
pub struct SpectrumSampleOutcome {
    pub per_depth: Vec<DepthSpectrum>,
    pub haar: AverageSpectrum,
    pub page_entropy: f64,
    pub ground_entropy: Option<f64>,
    pub ground_spectrum: Option<EntanglementSpectrum>,
}

pub fn run_spectrum_sample(params: &SpectrumSampleParams, oracle: &Oracle) -> Result<SpectrumSampleOutcome> {
    let spec = model_spec(params.kind, params.n, params.order)?;
    let cut = Bipartition::half(params.n)?;
    let haar = haar_reference_spectrum(
        params.n,
        cut,
        params.haar_samples,
        derive_seed(params.seed, streams::HAAR, 0),
    )?;
    let per_depth = params
        .p_list
        .iter()
        .map(|&p| {
            let average = hva_average_spectrum(
                params.kind,
                params.n,
                p,
                params.samples,
                derive_seed(params.seed, streams::SPECTRUM, p as u64),
            )?;
            let distance_to_haar = spectrum_distance(&average.xi_mean, &haar.xi_mean)?;
            Ok(DepthSpectrum {
                p,
                average,
                distance_to_haar,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ground = oracle.solve(&spec)?;
    let ground_spectrum = match &ground {
        Some(g) => Some(entanglement_spectrum(&g.state, cut)?),
        None => None,
    };
    Ok(SpectrumSampleOutcome {
        per_depth,
        haar,
        page_entropy: page_entropy_qubits(params.n, cut),
        ground_entropy: ground_spectrum.as_ref().map(|s| s.entropy),
        ground_spectrum,
    })
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct MilestoneSpectrum {
    pub percentage: f64,
    pub iteration: usize,
    pub energy: f64,
    pub spectrum: EntanglementSpectrum,
}

#[derive(Debug, Clone)]
pub struct SpectrumDynamicsOutcome {
    pub optimize: OptimizeOutcome,
    pub milestones: Vec<MilestoneSpectrum>,
}

pub const DEFAULT_MILESTONES: [f64; 5] = [0.0, 25.0, 50.0, 75.0, 100.0];

pub fn run_spectrum_dynamics(
    params: &OptimizeParams,
    milestones: &[f64],
    oracle: &Oracle,
) -> Result<SpectrumDynamicsOutcome> {
    let mut params = params.clone();
    params.optimizer.snapshot_percentages = milestones.to_vec();
    let outcome = run_optimize(&params, oracle)?;
    let circuit = build_hva(params.spec.kind, params.spec.num_qubits, params.p)?;
    let cut = Bipartition::half(params.spec.num_qubits)?;
    let milestones = outcome
        .trace
        .snapshots
        .iter()
        .map(|s| {
            Ok(MilestoneSpectrum {
                percentage: s.percentage,
                iteration: s.iteration,
                energy: outcome.trace.energies[s.iteration],
                spectrum: entanglement_spectrum(&circuit.apply(&s.parameters)?, cut)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumDynamicsOutcome {
        optimize: outcome,
        milestones,
    })
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerEntropyRow {
    pub iteration: usize,
    pub layer: usize,
    pub entropy: f64,
}

#[derive(Debug, Clone)]
pub struct EntropyDynamicsOutcome {
    pub optimize: OptimizeOutcome,
    pub rows: Vec<LayerEntropyRow>,
    /// Layer `ceil(p/2)` at the final iteration.
    pub mid_layer: usize,
    pub mid_entropy: f64,
    pub final_entropy: f64,
    pub page_entropy: f64,
}

/// Entropies of the state after every layer, for each recorded iterate.
pub fn run_entropy_dynamics(params: &OptimizeParams, oracle: &Oracle) -> Result<EntropyDynamicsOutcome> {
    let mut params = params.clone();
    params.optimizer.record_history = true;
    let outcome = run_optimize(&params, oracle)?;
    let n = params.spec.num_qubits;
    let circuit = build_hva(params.spec.kind, n, params.p)?;
    let cut = Bipartition::half(n)?;
    let per_iter = outcome
        .trace
        .history
        .par_iter()
        .map(|(it, theta)| {
            // Layer 0 is the preparation state.
            let mut states = vec![circuit.prep_state()?];
            states.extend(circuit.apply_layers(theta)?);
            states
                .iter()
                .enumerate()
                .map(|(layer, psi)| {
                    Ok(LayerEntropyRow {
                        iteration: *it,
                        layer,
                        entropy: hva_core::entropy(psi, cut)?,
                    })
                })
                .collect::<hva_core::Result<Vec<_>>>()
        })
        .collect::<hva_core::Result<Vec<_>>>()?;
    let last = per_iter.last().ok_or_else(|| anyhow!("empty history"))?;
    let mid_layer = params.p.div_ceil(2);
    let mid_entropy = last[mid_layer].entropy;
    let final_entropy = last[params.p].entropy;
    Ok(EntropyDynamicsOutcome {
        optimize: outcome,
        rows: per_iter.into_iter().flatten().collect(),
        mid_layer,
        mid_entropy,
        final_entropy,
        page_entropy: page_entropy_qubits(n, cut),
    })
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct OverparamParams {
    pub kind: ModelKind,
    pub n_list: Vec<usize>,
    /// Depths per system size.
    pub p_lists: Vec<Vec<usize>>,
    pub order: f64,
    pub num_inits: usize,
    pub seed: u64,
    pub optimizer: OptimizerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverparamRun {
    pub n: usize,
    pub p: usize,
    pub init_index: usize,
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverparamSummary {
    pub n: usize,
    pub p: usize,
    pub num_inits: usize,
    pub converged_ratio: f64,
    pub non_converged: usize,
    /// Over converged runs only.
    pub mean_iterations: Option<f64>,
    pub std_iterations: Option<f64>,
    /// Init index of the converged run that took the most iterations.
    pub worst_init: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct OverparamOutcome {
    pub runs: Vec<OverparamRun>,
    pub summaries: Vec<OverparamSummary>,
    /// `(N, p̃)`; `None` when even the deepest tested circuit had failures.
    pub thresholds: Vec<(usize, Option<usize>)>,
    /// Residual traces of the worst converged run per `(N, p)`.
    pub worst_traces: Vec<((usize, usize), Vec<f64>)>,
}

/// Least `p` such that every tested depth `>= p` converged for all inits.
pub fn threshold(summaries: &[OverparamSummary]) -> Option<usize> {
    let mut sorted: Vec<&OverparamSummary> = summaries.iter().collect();
    sorted.sort_by_key(|s| s.p);
    let mut best = None;
    for s in sorted.iter().rev() {
        if s.non_converged == 0 {
            best = Some(s.p);
        } else {
            break;
        }
    }
    best
}

fn mean_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    (Some(mean), Some(sample_variance(xs).sqrt()))
}

pub fn run_overparam(params: &OverparamParams, oracle: &Oracle) -> Result<OverparamOutcome> {
    if params.n_list.len() != params.p_lists.len() {
        bail!("one depth list per system size is required");
    }
    let mut runs = Vec::new();
    let mut summaries = Vec::new();
    let mut thresholds = Vec::new();
    let mut worst_traces = Vec::new();
    for (&n, p_list) in params.n_list.iter().zip(&params.p_lists) {
        let spec = model_spec(params.kind, n, params.order)?;
        let e0 = oracle
            .solve(&spec)?
            .ok_or_else(|| anyhow!("over-parameterization runs need an exact reference"))?
            .energy;
        let h = spec.build()?.full;
        let mut n_summaries = Vec::new();
        for &p in p_list {
            let circuit = build_hva(params.kind, n, p)?;
            let objective = EnergyObjective::new(&circuit, &h)?;
            let traces = (0..params.num_inits)
                .into_par_iter()
                .map(|i| {
                    let seed = init_seed(params.seed, streams::OVERPARAM, (n * 1000 + p) as u64, i as u64);
                    let theta = circuit.init_random(seed);
                    optimize(&objective, &theta, &params.optimizer, Some(e0))
                })
                .collect::<hva_core::Result<Vec<_>>>()?;
            let p_runs: Vec<OverparamRun> = traces
                .iter()
                .enumerate()
                .map(|(i, t)| OverparamRun {
                    n,
                    p,
                    init_index: i,
                    converged: t.converged,
                    iterations: t.iterations_used,
                    final_residual: t.final_residual().expect("reference supplied"),
                })
                .collect();
            let iters: Vec<f64> = p_runs
                .iter()
                .filter(|r| r.converged)
                .map(|r| r.iterations as f64)
                .collect();
            let (mean_iterations, std_iterations) = mean_std(&iters);
            let worst_init = p_runs
                .iter()
                .filter(|r| r.converged)
                .max_by_key(|r| (r.iterations, std::cmp::Reverse(r.init_index)))
                .map(|r| r.init_index);
            if let Some(w) = worst_init {
                worst_traces.push(((n, p), traces[w].residuals.clone()));
            }
            let non_converged = p_runs.iter().filter(|r| !r.converged).count();
            log::info!("overparam N={n} p={p}: {non_converged}/{} not converged", params.num_inits);
            n_summaries.push(OverparamSummary {
                n,
                p,
                num_inits: params.num_inits,
                converged_ratio: (params.num_inits - non_converged) as f64 / params.num_inits as f64,
                non_converged,
                mean_iterations,
                std_iterations,
                worst_init,
            });
            runs.extend(p_runs);
        }
        thresholds.push((n, threshold(&n_summaries)));
        summaries.extend(n_summaries);
    }
    Ok(OverparamOutcome {
        runs,
        summaries,
        thresholds,
        worst_traces,
    })
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct GradVarianceParams {
    pub ansatz: GradientAnsatz,
    pub n_list: Vec<usize>,
    pub p_list: Vec<usize>,
    pub samples: usize,
    pub init: InitStrategy,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradVarianceRow {
    pub ansatz: String,
    pub init: String,
    pub n: usize,
    pub p: usize,
    pub variance: f64,
    pub ln_variance: f64,
    pub mean_abs_gradient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradSlopeRow {
    pub ansatz: String,
    pub init: String,
    pub p: usize,
    /// Least-squares slope of `ln Var` against `N`.
    pub slope: f64,
}

#[derive(Debug, Clone)]
pub struct GradVarianceOutcome {
    pub rows: Vec<GradVarianceRow>,
    pub slopes: Vec<GradSlopeRow>,
}

impl GradVarianceOutcome {
    pub fn mean_slope(&self) -> f64 {
        self.slopes.iter().map(|s| s.slope).sum::<f64>() / self.slopes.len() as f64
    }
}

/// Variance of `d<Z_0 Z_1>/d theta_0` over initializations, per `(N, p)`.
pub fn run_grad_variance(params: &GradVarianceParams) -> Result<GradVarianceOutcome> {
    if params.samples < 2 {
        bail!("variance needs at least two samples");
    }
    let term = first_bond_zz();
    let keys: Vec<(usize, usize)> = params
        .n_list
        .iter()
        .flat_map(|&n| params.p_list.iter().map(move |&p| (n, p)))
        .collect();
    let rows = keys
        .par_iter()
        .map(|&(n, p)| {
            let g = single_term_gradient_sample(
                params.ansatz,
                n,
                p,
                &term,
                0,
                params.init,
                params.samples,
                derive_seed(params.seed, streams::GRADIENT, (n * 1000 + p) as u64),
            )?;
            let variance = sample_variance(&g);
            Ok(GradVarianceRow {
                ansatz: params.ansatz.name(),
                init: params.init.name().to_string(),
                n,
                p,
                variance,
                ln_variance: variance.ln(),
                mean_abs_gradient: g.iter().map(|x| x.abs()).sum::<f64>() / g.len() as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let slopes = params
        .p_list
        .iter()
        .filter(|_| params.n_list.len() >= 2)
        .map(|&p| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|r| r.p == p)
                .map(|r| (r.n as f64, r.ln_variance))
                .unzip();
            GradSlopeRow {
                ansatz: params.ansatz.name(),
                init: params.init.name().to_string(),
                p,
                slope: linear_slope(&xs, &ys),
            }
        })
        .collect();
    Ok(GradVarianceOutcome { rows, slopes })
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SweepParams {
    pub kind: ModelKind,
    pub n_list: Vec<usize>,
    pub values: Vec<f64>,
    pub init: InitStrategy,
    pub seed: u64,
    pub optimizer: OptimizerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub model: String,
    pub n: usize,
    pub p: usize,
    pub order: f64,
    pub energy: f64,
    pub oracle_energy: Option<f64>,
    pub fidelity: Option<f64>,
    pub infidelity: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Inclusive grid `start, start + step, ..., stop`.
pub fn order_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || stop < start {
        bail!("grid needs step > 0 and stop >= start");
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    // Round away accumulated binary noise so CSV values read cleanly.
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e10).round() / 1e10)
        .collect())
}

fn sweep_row(kind: ModelKind, p: usize, order: f64, out: &OptimizeOutcome, n: usize) -> SweepRow {
    SweepRow {
        model: kind.name().to_string(),
        n,
        p,
        order,
        energy: out.trace.final_energy(),
        oracle_energy: out.oracle.as_ref().map(|o| o.energy),
        fidelity: out.fidelity,
        infidelity: out.infidelity(),
        iterations: out.trace.iterations_used,
        converged: out.trace.converged,
    }
}

/// Depth `N/2` runs across order-parameter values.
pub fn run_sweep_order(params: &SweepParams, oracle: &Oracle) -> Result<Vec<SweepRow>> {
    let keys: Vec<(usize, f64)> = params
        .n_list
        .iter()
        .flat_map(|&n| params.values.iter().map(move |&v| (n, v)))
        .collect();
    keys.par_iter()
        .map(|&(n, v)| {
            let p = n / 2;
            let run = OptimizeParams {
                spec: model_spec(params.kind, n, v)?,
                p,
                init: params.init,
                seed: params.seed,
                optimizer: params.optimizer.clone(),
            };
            let out = run_optimize(&run, oracle)?;
            Ok(sweep_row(params.kind, p, v, &out, n))
        })
        .collect()
}

/// Depth `N` runs on the long-range chain.
pub fn run_mhs(
    n_list: &[usize],
    init: InitStrategy,
    seed: u64,
    optimizer: &OptimizerConfig,
    oracle: &Oracle,
) -> Result<Vec<SweepRow>> {
    n_list
        .par_iter()
        .map(|&n| {
            let run = OptimizeParams {
                spec: model_spec(ModelKind::Mhs, n, 0.0)?,
                p: n,
                init,
                seed,
                optimizer: optimizer.clone(),
            };
            let out = run_optimize(&run, oracle)?;
            Ok(sweep_row(ModelKind::Mhs, n, 0.0, &out, n))
        })
        .collect()
}
