//! Experiment driver: resolves a flat configuration, runs one experiment and
//! writes its CSV tables, manifest and optional plots.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Result};
use hva_core::gradient::GradientAnsatz;
use hva_core::{InitStrategy, ModelKind, OptimizerConfig, StopMode};
use serde::Serialize;

use config::{parse_init, parse_model, Experiment, ExperimentConfig};
use experiments::*;
use output::{LinePlot, OutputDir, RunManifest, Series, SEED_SCHEME};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub emit_plots: bool,
    /// Enables the full-scale defaults (more samples, larger systems).
    pub heavy: bool,
}

/// Fills every key `experiment` reads with its default and validates values.
pub fn resolve(experiment: Experiment, cfg: &ExperimentConfig, heavy: bool) -> Result<ExperimentConfig> {
    use Experiment::*;
    let mut r = cfg.clone();
    let keys = experiment.keys();
    let uses = |k: &str| keys.contains(&k);

    if uses("model") {
        let default = match experiment {
            SpectrumSample | SpectrumDynamics => "xxz",
            _ => "tfim",
        };
        let m = r.model.get_or_insert_with(|| default.into()).clone();
        match (experiment, m.as_str()) {
            (GradVariance, "rqc") => {}
            (_, m) => {
                parse_model(m)?;
            }
        }
    }
    if uses("n") {
        let n = *r.n.get_or_insert(match experiment {
            SpectrumSample | SpectrumDynamics => 12,
            _ => 8,
        });
        if n < 2 {
            bail!("n must be at least 2");
        }
    }
    if uses("p") {
        let n = r.n.expect("set above");
        r.p.get_or_insert((n / 2).max(1));
    }
    if uses("n_list") {
        r.n_list.get_or_insert_with(|| match (experiment, heavy) {
            (Overparam, false) | (SweepOrder, _) => vec![4, 6, 8],
            (Overparam, true) => vec![4, 6, 8, 10, 12],
            (Mhs, false) => vec![4, 8],
            (Mhs, true) => vec![4, 8, 12, 16],
            _ => vec![4, 6, 8, 10, 12],
        });
        if r.n_list.as_ref().is_some_and(|l| l.is_empty()) {
            bail!("n_list must not be empty");
        }
    }
    if uses("p_list") {
        match experiment {
            SpectrumSample => {
                let n = r.n.expect("set above");
                r.p_list.get_or_insert_with(|| (1..=n).collect());
            }
            GradVariance => {
                let rqc = r.model.as_deref() == Some("rqc");
                r.p_list.get_or_insert_with(|| vec![if rqc { RQC_GRAD_DEPTH } else { HVA_GRAD_DEPTH }]);
            }
            // Overparam defaults depend on N and are expanded in `run`.
            _ => {}
        }
        if r.p_list.as_ref().is_some_and(|l| l.is_empty() || l.contains(&0)) {
            bail!("p_list must hold positive depths");
        }
    }
    if uses("order") {
        r.order.get_or_insert(1.0);
    }
    if uses("init") {
        let default = if experiment == GradVariance { "random" } else { "identity" };
        let init = parse_init(r.init.get_or_insert_with(|| default.into()), r.jitter)?;
        if let InitStrategy::NearIdentity { jitter } = init {
            r.jitter = Some(jitter);
        }
    }
    if uses("seed") {
        r.seed.get_or_insert(0);
    }
    if uses("samples") {
        let s = *r.samples.get_or_insert(match (experiment, heavy) {
            (SpectrumSample, false) => 500,
            (SpectrumSample, true) => 5000,
            _ => 20,
        });
        if s < 2 {
            bail!("samples must be at least 2");
        }
    }
    if uses("haar_samples") {
        if r.haar_samples.get_or_insert(200) == &0 {
            bail!("haar_samples must be positive");
        }
    }
    if uses("num_inits") && *r.num_inits.get_or_insert(100) == 0 {
        bail!("num_inits must be positive");
    }
    if uses("milestones") {
        let m = r.milestones.get_or_insert_with(|| DEFAULT_MILESTONES.to_vec());
        if m.iter().any(|x| !(0.0..=100.0).contains(x)) {
            bail!("milestones are percentages in [0, 100]");
        }
    }
    if uses("grid_start") {
        r.grid_start.get_or_insert(0.5);
        r.grid_stop.get_or_insert(1.5);
        r.grid_step.get_or_insert(0.02);
        order_grid(r.grid_start.unwrap(), r.grid_stop.unwrap(), r.grid_step.unwrap())?;
    }
    if uses("learning_rate") {
        r.learning_rate.get_or_insert(0.01);
        let default_stop = if experiment == Overparam { StopMode::residual() } else { StopMode::energy_delta() };
        if uses("stop") {
            r.stop.get_or_insert_with(|| stop_name(default_stop).into());
        }
        let stop = match r.stop.as_deref() {
            None => default_stop,
            Some("energy_delta") => StopMode::energy_delta(),
            Some("residual") => StopMode::residual(),
            Some(other) => bail!("unknown stop mode `{other}` (energy_delta, residual)"),
        };
        r.tol.get_or_insert(stop.tol());
        r.max_iter.get_or_insert(stop.max_iter());
        optimizer_config(&r)?.validate()?;
    }
    Ok(r)
}

/// Default grad-variance depth for HVA circuits. At p = 1 the XXZ gradient of
/// `Z_0 Z_1` with respect to `theta_0` vanishes identically near the identity.
pub const HVA_GRAD_DEPTH: usize = 2;

/// Default grad-variance depth for the random-circuit baseline, deep enough
/// that its variance has reached the scrambled regime for N <= 12.
pub const RQC_GRAD_DEPTH: usize = 100;

fn stop_name(s: StopMode) -> &'static str {
    match s {
        StopMode::EnergyDelta { .. } => "energy_delta",
        StopMode::Residual { .. } => "residual",
    }
}

/// Optimizer settings from a resolved configuration.
pub fn optimizer_config(r: &ExperimentConfig) -> Result<OptimizerConfig> {
    let tol = r.tol.ok_or_else(|| anyhow!("tol unresolved"))?;
    let max_iter = r.max_iter.ok_or_else(|| anyhow!("max_iter unresolved"))?;
    let stop = match r.stop.as_deref().unwrap_or("residual") {
        "energy_delta" => StopMode::EnergyDelta { tol, max_iter },
        _ => StopMode::Residual { tol, max_iter },
    };
    Ok(OptimizerConfig::default()
        .with_learning_rate(r.learning_rate.unwrap_or(0.01))
        .with_stop(stop))
}

fn init_of(r: &ExperimentConfig) -> Result<InitStrategy> {
    parse_init(r.init.as_deref().unwrap_or("identity"), r.jitter)
}

fn model_of(r: &ExperimentConfig) -> Result<ModelKind> {
    parse_model(r.model.as_deref().unwrap_or("tfim"))
}

fn cache_of(r: &ExperimentConfig) -> Oracle {
    Oracle::new(r.cache_dir.as_ref().map(PathBuf::from))
}

/// Default over-parameterization depths for size `n`.
pub fn default_overparam_depths(n: usize) -> Vec<usize> {
    (1..=n + 4).collect()
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    model: &'a str,
    n: usize,
    p: usize,
    order: f64,
    init: String,
    seed: u64,
    iterations: usize,
    converged: bool,
    final_energy: f64,
    oracle_energy: Option<f64>,
    residual: Option<f64>,
    fidelity: Option<f64>,
}

#[derive(Serialize)]
struct SpectrumRow {
    p: usize,
    k: usize,
    xi_mean: f64,
    minus_xi_mean: f64,
    xi_std: f64,
}

#[derive(Serialize)]
struct EntropyRow {
    p: usize,
    entropy_mean: f64,
    entropy_std: f64,
    page_entropy: f64,
    ground_entropy: Option<f64>,
    distance_to_haar: f64,
}

#[derive(Serialize)]
struct MilestoneRow {
    percentage: f64,
    iteration: usize,
    energy: f64,
    k: usize,
    xi: f64,
    minus_xi: f64,
}

#[derive(Serialize)]
struct ThresholdRow {
    n: usize,
    p_tilde: Option<usize>,
    max_tested_p: usize,
    num_inits: usize,
    /// A finite seed sample bounds the threshold but cannot prove trap-freeness.
    note: &'static str,
}

#[derive(Serialize)]
struct WorstTraceRow {
    n: usize,
    p: usize,
    iteration: usize,
    residual: f64,
}

#[derive(Serialize)]
struct ScalingRow {
    n: usize,
    p: usize,
    mid_layer: usize,
    mid_entropy: f64,
    final_entropy: f64,
    page_entropy: f64,
    fidelity: Option<f64>,
}

struct Written {
    models: Vec<String>,
    num_qubits: Vec<usize>,
    depths: Vec<usize>,
    optimizer: Option<OptimizerConfig>,
}

fn summary_row<'a>(
    model: &'a str,
    r: &ExperimentConfig,
    p: usize,
    out: &OptimizeOutcome,
) -> SummaryRow<'a> {
    SummaryRow {
        model,
        n: r.n.unwrap_or(0),
        p,
        order: r.order.unwrap_or(0.0),
        init: init_of(r).map(|i| i.to_string()).unwrap_or_default(),
        seed: r.seed.unwrap_or(0),
        iterations: out.trace.iterations_used,
        converged: out.trace.converged,
        final_energy: out.trace.final_energy(),
        oracle_energy: out.oracle.as_ref().map(|o| o.energy),
        residual: out.trace.final_residual(),
        fidelity: out.fidelity,
    }
}

fn optimize_params(r: &ExperimentConfig) -> Result<OptimizeParams> {
    let kind = model_of(r)?;
    let n = r.n.ok_or_else(|| anyhow!("n unresolved"))?;
    Ok(OptimizeParams {
        spec: model_spec(kind, n, r.order.unwrap_or(1.0))?,
        p: r.p.ok_or_else(|| anyhow!("p unresolved"))?,
        init: init_of(r)?,
        seed: r.seed.unwrap_or(0),
        optimizer: optimizer_config(r)?,
    })
}

/// Runs `experiment` with a resolved configuration, writing into `opts.out`.
pub fn run(experiment: Experiment, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunManifest> {
    let r = resolve(experiment, cfg, opts.heavy)?;
    let started = Instant::now();
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut out = OutputDir::new(opts.out.as_deref())?;
    let mut plots: Vec<(String, LinePlot)> = Vec::new();
    let written = match experiment {
        Experiment::Optimize => {
            let params = optimize_params(&r)?;
            let res = run_optimize(&params, &cache_of(&r))?;
            let kind = params.spec.kind.name();
            out.csv("trace.csv", &trace_rows(&res.trace))?;
            out.csv("summary.csv", &[summary_row(kind, &r, params.p, &res)])?;
            if res.trace.residuals.is_empty() {
                log::warn!("no exact reference; trace has no residual column values");
            }
            plots.push((
                "trace.svg".into(),
                trace_plot(&res, &format!("{kind} N={} p={}", params.spec.num_qubits, params.p)),
            ));
            Written {
                models: vec![kind.into()],
                num_qubits: vec![params.spec.num_qubits],
                depths: vec![params.p],
                optimizer: Some(params.optimizer),
            }
        }
        Experiment::SpectrumSample => {
            let kind = model_of(&r)?;
            let params = SpectrumSampleParams {
                kind,
                n: r.n.unwrap(),
                p_list: r.p_list.clone().unwrap(),
                order: r.order.unwrap(),
                samples: r.samples.unwrap(),
                haar_samples: r.haar_samples.unwrap(),
                seed: r.seed.unwrap(),
            };
            let res = run_spectrum_sample(&params, &cache_of(&r))?;
            let mut rows = Vec::new();
            let mut entropy = Vec::new();
            let mut spec_plot = LinePlot::new(&format!("{kind} N={} average spectrum", params.n), "k", "xi");
            for d in &res.per_depth {
                rows.extend(spectrum_rows(d.p, &d.average.xi_mean, &d.average.xi_std));
                entropy.push(EntropyRow {
                    p: d.p,
                    entropy_mean: d.average.entropy_mean,
                    entropy_std: d.average.entropy_std,
                    page_entropy: res.page_entropy,
                    ground_entropy: res.ground_entropy,
                    distance_to_haar: d.distance_to_haar,
                });
                spec_plot = spec_plot.with(indexed(&format!("p={}", d.p), &d.average.xi_mean));
            }
            out.csv("spectrum.csv", &rows)?;
            out.csv("haar_spectrum.csv", &spectrum_rows(0, &res.haar.xi_mean, &res.haar.xi_std))?;
            out.csv("entropy.csv", &entropy)?;
            plots.push(("spectrum.svg".into(), spec_plot.with(indexed("Haar", &res.haar.xi_mean))));
            let ps: Vec<(f64, f64)> = entropy.iter().map(|e| (e.p as f64, e.entropy_mean)).collect();
            let mut ent_plot = LinePlot::new("average entropy", "p", "S (nats)")
                .with(Series::new("HVA", ps.clone()))
                .with(Series::new("Page", ps.iter().map(|&(p, _)| (p, res.page_entropy)).collect()));
            if let Some(g) = res.ground_entropy {
                ent_plot = ent_plot.with(Series::new("ground", ps.iter().map(|&(p, _)| (p, g)).collect()));
            }
            plots.push(("entropy.svg".into(), ent_plot));
            Written {
                models: vec![kind.name().into()],
                num_qubits: vec![params.n],
                depths: params.p_list,
                optimizer: None,
            }
        }
        Experiment::SpectrumDynamics => {
            let params = optimize_params(&r)?;
            let res = run_spectrum_dynamics(&params, r.milestones.as_deref().unwrap(), &cache_of(&r))?;
            let kind = params.spec.kind.name();
            let mut rows = Vec::new();
            let mut plot = LinePlot::new("spectrum during optimization", "k", "xi");
            for m in &res.milestones {
                for (k, &xi) in m.spectrum.xi.iter().enumerate() {
                    rows.push(MilestoneRow {
                        percentage: m.percentage,
                        iteration: m.iteration,
                        energy: m.energy,
                        k,
                        xi,
                        minus_xi: -xi,
                    });
                }
                plot = plot.with(indexed(&format!("{}%", m.percentage), &m.spectrum.xi));
            }
            out.csv("spectra.csv", &rows)?;
            out.csv("trace.csv", &trace_rows(&res.optimize.trace))?;
            out.csv("summary.csv", &[summary_row(kind, &r, params.p, &res.optimize)])?;
            out.json("snapshots.json", &res.optimize.trace.snapshots)?;
            plots.push(("spectra.svg".into(), plot));
            Written {
                models: vec![kind.into()],
                num_qubits: vec![params.spec.num_qubits],
                depths: vec![params.p],
                optimizer: Some(params.optimizer),
            }
        }
        Experiment::EntropyDynamics => {
            let params = optimize_params(&r)?;
            let res = run_entropy_dynamics(&params, &cache_of(&r))?;
            let kind = params.spec.kind.name();
            out.csv("entropy_layers.csv", &res.rows)?;
            out.csv("trace.csv", &trace_rows(&res.optimize.trace))?;
            out.csv(
                "scaling.csv",
                &[ScalingRow {
                    n: params.spec.num_qubits,
                    p: params.p,
                    mid_layer: res.mid_layer,
                    mid_entropy: res.mid_entropy,
                    final_entropy: res.final_entropy,
                    page_entropy: res.page_entropy,
                    fidelity: res.optimize.fidelity,
                }],
            )?;
            let mut plot = LinePlot::new("entropy per layer", "iteration", "S (nats)");
            for layer in 1..=params.p {
                let pts = res
                    .rows
                    .iter()
                    .filter(|row| row.layer == layer)
                    .map(|row| (row.iteration as f64, row.entropy))
                    .collect();
                plot = plot.with(Series::new(format!("layer {layer}"), pts));
            }
            plots.push(("entropy_layers.svg".into(), plot));
            Written {
                models: vec![kind.into()],
                num_qubits: vec![params.spec.num_qubits],
                depths: vec![params.p],
                optimizer: Some(params.optimizer),
            }
        }
        Experiment::Overparam => {
            let kind = model_of(&r)?;
            let n_list = r.n_list.clone().unwrap();
            let p_lists: Vec<Vec<usize>> = n_list
                .iter()
                .map(|&n| r.p_list.clone().unwrap_or_else(|| default_overparam_depths(n)))
                .collect();
            let optimizer = optimizer_config(&r)?;
            let params = OverparamParams {
                kind,
                n_list: n_list.clone(),
                p_lists: p_lists.clone(),
                order: r.order.unwrap(),
                num_inits: r.num_inits.unwrap(),
                seed: r.seed.unwrap(),
                optimizer: optimizer.clone(),
            };
            let res = run_overparam(&params, &cache_of(&r))?;
            out.csv("runs.csv", &res.runs)?;
            out.csv("summary.csv", &res.summaries)?;
            let thresholds: Vec<ThresholdRow> = res
                .thresholds
                .iter()
                .zip(&p_lists)
                .map(|(&(n, p_tilde), ps)| ThresholdRow {
                    n,
                    p_tilde,
                    max_tested_p: ps.iter().copied().max().unwrap_or(0),
                    num_inits: params.num_inits,
                    note: "least tested p from which every sampled init converged; not a proof of trap-freeness",
                })
                .collect();
            out.csv("thresholds.csv", &thresholds)?;
            let worst: Vec<WorstTraceRow> = res
                .worst_traces
                .iter()
                .flat_map(|((n, p), tr)| {
                    tr.iter().enumerate().map(move |(i, &residual)| WorstTraceRow {
                        n: *n,
                        p: *p,
                        iteration: i,
                        residual,
                    })
                })
                .collect();
            out.csv("worst_traces.csv", &worst)?;
            let mut ratio = LinePlot::new("converged ratio", "p", "ratio");
            let mut iters = LinePlot::new("mean iterations (converged)", "p", "iterations");
            for &n in &n_list {
                let s: Vec<_> = res.summaries.iter().filter(|s| s.n == n).collect();
                ratio = ratio.with(Series::new(format!("N={n}"), s.iter().map(|s| (s.p as f64, s.converged_ratio)).collect()));
                iters = iters.with(Series::new(
                    format!("N={n}"),
                    s.iter().filter_map(|s| s.mean_iterations.map(|m| (s.p as f64, m))).collect(),
                ));
            }
            plots.push(("ratio.svg".into(), ratio));
            plots.push(("iterations.svg".into(), iters));
            let mut depths: Vec<usize> = p_lists.concat();
            depths.sort_unstable();
            depths.dedup();
            Written {
                models: vec![kind.name().into()],
                num_qubits: n_list,
                depths,
                optimizer: Some(optimizer),
            }
        }
        Experiment::GradVariance => {
            let model = r.model.clone().unwrap();
            let ansatz = match model.as_str() {
                "rqc" => GradientAnsatz::RandomCircuit,
                m => GradientAnsatz::Hva(parse_model(m)?),
            };
            let params = GradVarianceParams {
                ansatz,
                n_list: r.n_list.clone().unwrap(),
                p_list: r.p_list.clone().unwrap(),
                samples: r.samples.unwrap(),
                init: init_of(&r)?,
                seed: r.seed.unwrap(),
            };
            let res = run_grad_variance(&params)?;
            out.csv("variance.csv", &res.rows)?;
            out.csv("slopes.csv", &res.slopes)?;
            let mut plot = LinePlot::new(&format!("{model} gradient variance"), "N", "Var").log_y();
            for &p in &params.p_list {
                plot = plot.with(Series::new(
                    format!("p={p}"),
                    res.rows.iter().filter(|x| x.p == p).map(|x| (x.n as f64, x.variance)).collect(),
                ));
            }
            plots.push(("variance.svg".into(), plot));
            Written {
                models: vec![model],
                num_qubits: params.n_list,
                depths: params.p_list,
                optimizer: None,
            }
        }
        Experiment::SweepOrder => {
            let kind = model_of(&r)?;
            let optimizer = optimizer_config(&r)?;
            let params = SweepParams {
                kind,
                n_list: r.n_list.clone().unwrap(),
                values: order_grid(r.grid_start.unwrap(), r.grid_stop.unwrap(), r.grid_step.unwrap())?,
                init: init_of(&r)?,
                seed: r.seed.unwrap(),
                optimizer: optimizer.clone(),
            };
            let rows = run_sweep_order(&params, &cache_of(&r))?;
            out.csv("sweep.csv", &rows)?;
            let mut plot = LinePlot::new(&format!("{kind} infidelity, p = N/2"), "order parameter", "1 - F").log_y();
            for &n in &params.n_list {
                plot = plot.with(Series::new(
                    format!("N={n}"),
                    rows.iter()
                        .filter(|x| x.n == n)
                        .filter_map(|x| x.infidelity.map(|i| (x.order, i.max(1e-16))))
                        .collect(),
                ));
            }
            plots.push(("sweep.svg".into(), plot));
            Written {
                models: vec![kind.name().into()],
                num_qubits: params.n_list.clone(),
                depths: params.n_list.iter().map(|n| n / 2).collect(),
                optimizer: Some(optimizer),
            }
        }
        Experiment::Mhs => {
            let optimizer = optimizer_config(&r)?;
            let n_list = r.n_list.clone().unwrap();
            let rows = run_mhs(&n_list, init_of(&r)?, r.seed.unwrap(), &optimizer, &cache_of(&r))?;
            out.csv("mhs.csv", &rows)?;
            plots.push((
                "mhs.svg".into(),
                LinePlot::new("MHS infidelity, p = N", "N", "1 - F").log_y().with(Series::new(
                    "HVA",
                    rows.iter()
                        .filter_map(|x| x.infidelity.map(|i| (x.n as f64, i.max(1e-16))))
                        .collect(),
                )),
            ));
            Written {
                models: vec!["mhs".into()],
                num_qubits: n_list.clone(),
                depths: n_list,
                optimizer: Some(optimizer),
            }
        }
    };
    if opts.emit_plots {
        for (name, plot) in &plots {
            out.text(&format!("plots/{name}"), &plot.to_svg())?;
        }
    }
    out.text("config.toml", &toml::to_string(&r)?)?;
    let mut outputs = out.written().to_vec();
    outputs.push("manifest.json".into());
    let manifest = RunManifest {
        experiment: experiment.name().into(),
        init: r.init.clone(),
        master_seed: r.seed.unwrap_or(0),
        seed_scheme: SEED_SCHEME.into(),
        config: r,
        models: written.models,
        num_qubits: written.num_qubits,
        depths: written.depths,
        optimizer: written.optimizer,
        software_version: env!("CARGO_PKG_VERSION").into(),
        started_unix_seconds: started_unix,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        outputs,
    };
    out.json("manifest.json", &manifest)?;
    Ok(manifest)
}

fn spectrum_rows(p: usize, mean: &[f64], std: &[f64]) -> Vec<SpectrumRow> {
    mean.iter()
        .zip(std)
        .enumerate()
        .map(|(k, (&m, &s))| SpectrumRow {
            p,
            k,
            xi_mean: m,
            minus_xi_mean: -m,
            xi_std: s,
        })
        .collect()
}

fn indexed(name: &str, ys: &[f64]) -> Series {
    Series::new(name, ys.iter().enumerate().map(|(k, &y)| (k as f64, y)).collect())
}

fn trace_plot(res: &OptimizeOutcome, title: &str) -> LinePlot {
    let pts: Vec<(f64, f64)> = if res.trace.residuals.is_empty() {
        res.trace.grad_norms.iter().enumerate().map(|(i, &g)| (i as f64, g)).collect()
    } else {
        res.trace
            .residuals
            .iter()
            .enumerate()
            .map(|(i, &e)| (i as f64, e.max(1e-16)))
            .collect()
    };
    let label = if res.trace.residuals.is_empty() { "gradient norm" } else { "residual energy" };
    LinePlot::new(title, "iteration", label).log_y().with(Series::new(label, pts))
}

/// Reads the manifest written into `dir`.
pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    Ok(serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?)
}
