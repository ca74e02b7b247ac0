//! Adam (and a plain gradient-descent baseline) driving the variational energy,
//! with stopping rules and a per-iteration trace.

use serde::{Deserialize, Serialize};

use crate::ansatz::ParameterVector;
use crate::error::{Error, Result};
use crate::gradient::EnergyObjective;

/// When to stop iterating.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum StopMode {
    /// Stop once `|E_t - E_{t-1}| < tol`.
    EnergyDelta { tol: f64, max_iter: usize },
    /// Stop once `E_t - E_ground < tol`; needs a reference energy.
    Residual { tol: f64, max_iter: usize },
}

impl StopMode {
    pub const fn energy_delta() -> Self {
        StopMode::EnergyDelta {
            tol: 1e-13,
            max_iter: 15_000,
        }
    }

    pub const fn residual() -> Self {
        StopMode::Residual {
            tol: 1e-4,
            max_iter: 3000,
        }
    }

    pub fn max_iter(&self) -> usize {
        match *self {
            StopMode::EnergyDelta { max_iter, .. } | StopMode::Residual { max_iter, .. } => max_iter,
        }
    }

    pub fn tol(&self) -> f64 {
        match *self {
            StopMode::EnergyDelta { tol, .. } | StopMode::Residual { tol, .. } => tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Adam,
    GradientDescent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub method: Method,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub stop: StopMode,
    /// Percentages of `iterations_used` at which parameter snapshots are reported.
    pub snapshot_percentages: Vec<f64>,
    /// Keep the thinned parameter history even without snapshot percentages.
    pub record_history: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: Method::Adam,
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            stop: StopMode::energy_delta(),
            snapshot_percentages: Vec::new(),
            record_history: false,
        }
    }
}

impl OptimizerConfig {
    pub fn with_stop(mut self, stop: StopMode) -> Self {
        self.stop = stop;
        self
    }

    pub fn with_learning_rate(mut self, lr: f64) -> Self {
        self.learning_rate = lr;
        self
    }

    pub fn with_snapshots(mut self, percentages: Vec<f64>) -> Self {
        self.snapshot_percentages = percentages;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam moment constants must lie in [0, 1)");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.stop.tol() > 0.0) || self.stop.max_iter() == 0 {
            return bad("stopping tolerance must be positive and max_iter >= 1");
        }
        if self
            .snapshot_percentages
            .iter()
            .any(|p| !(0.0..=100.0).contains(p))
        {
            return bad("snapshot percentages must lie in [0, 100]");
        }
        Ok(())
    }
}

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(num_parameters: usize, learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            m: vec![0.0; num_parameters],
            v: vec![0.0; num_parameters],
            t: 0,
        }
    }

    pub fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for ((x, g), (m, v)) in theta
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *x -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

enum Rule {
    Adam(Adam),
    Descent(f64),
}

impl Rule {
    fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        match self {
            Rule::Adam(a) => a.step(theta, grad),
            Rule::Descent(lr) => theta.iter_mut().zip(grad).for_each(|(x, g)| *x -= *lr * g),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub percentage: f64,
    pub iteration: usize,
    pub parameters: ParameterVector,
}

/// Record of one optimization run. Entry `t` of the per-iteration vectors
/// belongs to the parameters after `t` updates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub energies: Vec<f64>,
    /// `E_t - E_ground`; empty when no reference energy was supplied.
    pub residuals: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    /// Thinned `(iteration, parameters)` history; always ends with the final point.
    pub history: Vec<(usize, ParameterVector)>,
    pub converged: bool,
    pub iterations_used: usize,
    pub final_parameters: ParameterVector,
}

impl OptimizationTrace {
    pub fn final_energy(&self) -> f64 {
        *self.energies.last().expect("trace holds at least one energy")
    }

    pub fn min_energy(&self) -> f64 {
        self.energies.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.residuals.last().copied()
    }
}

/// Upper bound on stored history entries before the stride doubles.
pub const HISTORY_CAPACITY: usize = 2048;

/// Parameter history with a doubling stride: entries are kept at multiples of
/// `stride`, and when full every other entry is dropped and the stride doubles.
#[derive(Debug, Default)]
struct History {
    stride: usize,
    entries: Vec<(usize, ParameterVector)>,
}

impl History {
    fn new() -> Self {
        Self {
            stride: 1,
            entries: Vec::new(),
        }
    }

    fn offer(&mut self, t: usize, theta: &[f64]) {
        if t % self.stride != 0 {
            return;
        }
        self.entries.push((t, ParameterVector::new(theta.to_vec()).expect("finite")));
        if self.entries.len() > HISTORY_CAPACITY {
            self.stride *= 2;
            let stride = self.stride;
            self.entries.retain(|(it, _)| it % stride == 0);
        }
    }

    fn finish(mut self, t: usize, theta: &[f64]) -> Vec<(usize, ParameterVector)> {
        if self.entries.last().map(|(it, _)| *it) != Some(t) {
            self.entries.push((t, ParameterVector::new(theta.to_vec()).expect("finite")));
        }
        self.entries
    }
}

/// Entry of `history` whose iteration is nearest to `pct` percent of `total`.
fn nearest_snapshot(history: &[(usize, ParameterVector)], pct: f64, total: usize) -> Snapshot {
    let target = (pct / 100.0 * total as f64).round() as i64;
    let (iteration, parameters) = history
        .iter()
        .min_by_key(|(it, _)| (*it as i64 - target).abs())
        .expect("history is never empty")
        .clone();
    Snapshot {
        percentage: pct,
        iteration,
        parameters,
    }
}

/// Runs the configured optimizer from `theta0` until the stop rule fires.
pub fn optimize(
    objective: &EnergyObjective,
    theta0: &[f64],
    config: &OptimizerConfig,
    oracle_energy: Option<f64>,
) -> Result<OptimizationTrace> {
    config.validate()?;
    objective.circuit().check_parameters(theta0)?;
    let mut theta = ParameterVector::new(theta0.to_vec())?.into_vec();
    if matches!(config.stop, StopMode::Residual { .. }) && oracle_energy.is_none() {
        return Err(Error::InvalidParameter(
            "residual stopping requires a reference ground energy".into(),
        ));
    }
    let mut rule = match config.method {
        Method::Adam => Rule::Adam(Adam::new(
            theta.len(),
            config.learning_rate,
            config.beta1,
            config.beta2,
            config.epsilon,
        )),
        Method::GradientDescent => Rule::Descent(config.learning_rate),
    };
    let keep_history = config.record_history || !config.snapshot_percentages.is_empty();
    let mut history = History::new();
    let max_iter = config.stop.max_iter();

    let mut energies = Vec::new();
    let mut residuals = Vec::new();
    let mut grad_norms = Vec::new();
    let mut converged;
    let mut t = 0usize;
    loop {
        let (e, grad) = objective.energy_and_gradient(&theta)?;
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !e.is_finite() || !gnorm.is_finite() {
            return Err(Error::Diverged {
                iteration: t,
                energy: e,
            });
        }
        energies.push(e);
        grad_norms.push(gnorm);
        if let Some(e0) = oracle_energy {
            residuals.push(e - e0);
        }
        if keep_history {
            history.offer(t, &theta);
        }
        converged = match config.stop {
            StopMode::Residual { tol, .. } => residuals[t] < tol,
            StopMode::EnergyDelta { tol, .. } => t > 0 && (e - energies[t - 1]).abs() < tol,
        };
        if converged || t == max_iter {
            break;
        }
        rule.step(&mut theta, &grad);
        t += 1;
    }

    let history = if keep_history {
        history.finish(t, &theta)
    } else {
        Vec::new()
    };
    let snapshots = config
        .snapshot_percentages
        .iter()
        .map(|&pct| nearest_snapshot(&history, pct, t))
        .collect();
    Ok(OptimizationTrace {
        energies,
        residuals,
        grad_norms,
        snapshots,
        history,
        converged,
        iterations_used: t,
        final_parameters: ParameterVector::new(theta)?,
    })
}
