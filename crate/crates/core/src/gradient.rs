//! Variational energy and its exact gradient by adjoint (reverse) sweeps.
//!
//! For a circuit `U_M ... U_1 |psi_0>` with `U_k = exp(-i a_k/2 G_k)`,
//!
//! ```text
//! dE/da_k = Im <lambda_k| G_k |psi_k>
//! ```
//!
//! where `psi_k` is the state after step `k` and `lambda_k` is `H psi_M`
//! pulled back through steps `M..k+1`. One forward pass and one backward
//! pass that un-applies each step to both vectors yield every component.
//! Steps that share a parameter add their contributions.

use serde::{Deserialize, Serialize};

use crate::ansatz::{build_hva, build_rqc_baseline, Angle, Circuit, InitStrategy};
use crate::error::{Error, Result};
use crate::models::ModelKind;
use crate::pauli::{CompiledSum, PauliString, PauliSum};
use crate::seeds::derive_seed;
use crate::state::{sum_matrix_element, IMAGINARY_TOLERANCE};

/// A circuit paired with the compiled cost operator.
#[derive(Debug, Clone)]
pub struct EnergyObjective<'a> {
    circuit: &'a Circuit,
    hamiltonian: CompiledSum,
}

impl<'a> EnergyObjective<'a> {
    pub fn new(circuit: &'a Circuit, hamiltonian: &PauliSum) -> Result<Self> {
        hamiltonian.check_sites(circuit.num_qubits())?;
        Ok(Self {
            circuit,
            hamiltonian: hamiltonian.compile(),
        })
    }

    pub fn circuit(&self) -> &Circuit {
        self.circuit
    }

    pub fn num_parameters(&self) -> usize {
        self.circuit.num_parameters()
    }

    pub fn energy(&self, theta: &[f64]) -> Result<f64> {
        self.circuit.apply(theta)?.expectation_compiled(&self.hamiltonian)
    }

    /// Energy and full gradient in one forward and one backward sweep.
    pub fn energy_and_gradient(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let per_step = self.step_gradients(theta)?;
        let mut grad = vec![0.0; self.num_parameters()];
        for (step, g) in self.circuit.steps().iter().zip(&per_step.1) {
            if let Angle::Parameter(i) = step.angle {
                grad[i] += g;
            }
        }
        Ok((per_step.0, grad))
    }

    pub fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(self.energy_and_gradient(theta)?.1)
    }

    /// Derivative with respect to each step's angle, as if no parameters were
    /// shared. Fixed-angle steps report their derivative too.
    pub fn step_gradients(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let circuit = self.circuit;
        let mut psi = circuit.apply(theta)?;
        let mut lambda = psi.apply_sum(&self.hamiltonian)?;
        let e = psi.inner_product(&lambda)?;
        if e.im.abs() > IMAGINARY_TOLERANCE {
            return Err(Error::ComplexExpectation {
                imag: e.im,
                tol: IMAGINARY_TOLERANCE,
            });
        }
        let steps = circuit.steps();
        let mut grads = vec![0.0; steps.len()];
        for (k, step) in steps.iter().enumerate().rev() {
            let g = circuit.generator(step);
            grads[k] = sum_matrix_element(&lambda, g, &psi).im;
            let back = -circuit.step_angle(step, theta);
            psi.apply_commuting_sum_rotation(g, back)?;
            lambda.apply_commuting_sum_rotation(g, back)?;
        }
        Ok((e.re, grads))
    }
}

/// `<psi(theta)| H |psi(theta)>`.
pub fn energy(circuit: &Circuit, theta: &[f64], h: &PauliSum) -> Result<f64> {
    EnergyObjective::new(circuit, h)?.energy(theta)
}

/// Exact `dE/dtheta` for every parameter.
pub fn gradient(circuit: &Circuit, theta: &[f64], h: &PauliSum) -> Result<Vec<f64>> {
    EnergyObjective::new(circuit, h)?.gradient(theta)
}

/// Circuit family sampled by [`single_term_gradient_sample`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientAnsatz {
    Hva(ModelKind),
    /// A fresh random-axis circuit is drawn for every sample.
    RandomCircuit,
}

impl GradientAnsatz {
    pub fn name(&self) -> String {
        match self {
            GradientAnsatz::Hva(kind) => kind.to_string(),
            GradientAnsatz::RandomCircuit => "rqc".to_string(),
        }
    }
}

/// The `Z_0 Z_1` observable on the first bond.
pub fn first_bond_zz() -> PauliString {
    PauliString::pair(1.0, 0, 1, crate::pauli::Pauli::Z).expect("two distinct sites")
}

/// `d<term>/dtheta_j` at `num_samples` independent initializations.
///
/// Sample `s` uses seeds derived from `(seed, s)`, so the sample set is
/// independent of evaluation order.
pub fn single_term_gradient_sample(
    ansatz: GradientAnsatz,
    n: usize,
    p: usize,
    term: &PauliString,
    parameter_index: usize,
    init: InitStrategy,
    num_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let observable = PauliSum::new(vec![term.clone()]);
    let fixed = match ansatz {
        GradientAnsatz::Hva(kind) => Some(build_hva(kind, n, p)?),
        GradientAnsatz::RandomCircuit => None,
    };
    (0..num_samples as u64)
        .map(|s| {
            let drawn;
            let circuit = match &fixed {
                Some(c) => c,
                None => {
                    drawn = build_rqc_baseline(n, p, derive_seed(seed, 1, s))?;
                    &drawn
                }
            };
            if parameter_index >= circuit.num_parameters() {
                return Err(Error::InvalidParameter(format!(
                    "parameter index {parameter_index} out of range ({})",
                    circuit.num_parameters()
                )));
            }
            let theta = circuit.initial_parameters(init, derive_seed(seed, 2, s));
            let grad = EnergyObjective::new(circuit, &observable)?.gradient(&theta)?;
            Ok(grad[parameter_index])
        })
        .collect()
}

/// Sample variance with the `n - 1` denominator.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Least-squares slope of `ys` against `xs`.
pub fn linear_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
