//! Layered circuits built from commuting-group rotations.
//!
//! A [`Circuit`] is a fixed preparation state followed by an ordered list of
//! [`RotationStep`]s. Each step rotates by `exp(-i a/2 G)` for one generator
//! group `G`; the angle `a` is either a (possibly shared) circuit parameter or
//! a fixed constant.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{build_tfim, GeneratorGroup, ModelKind};
use crate::pauli::{Pauli, PauliString, PauliSum};
use crate::state::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prep {
    PlusState,
    SingletProduct,
}

impl Prep {
    pub fn state(self, num_qubits: usize) -> Result<StateVector> {
        match self {
            Prep::PlusState => StateVector::plus(num_qubits),
            Prep::SingletProduct => StateVector::singlet_product(num_qubits),
        }
    }
}

/// Which construction produced a circuit; fixes the random-initialization range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnsatzFamily {
    HvaTfim,
    HvaXxz,
    RandomCircuit,
}

impl AnsatzFamily {
    /// Upper end of the uniform range `[0, hi]` used by random initialization.
    pub fn random_range(self) -> f64 {
        match self {
            AnsatzFamily::HvaTfim => PI,
            AnsatzFamily::HvaXxz | AnsatzFamily::RandomCircuit => 2.0 * PI,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Angle {
    Parameter(usize),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationStep {
    /// Index into [`Circuit::generators`].
    pub generator: usize,
    pub angle: Angle,
    /// Zero-based layer the step belongs to.
    pub layer: usize,
}

/// Real parameter vector in radians; all entries finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterVector(Vec<f64>);

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "parameter {i} is not finite: {}",
                values[i]
            )));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ParameterVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitStrategy {
    /// Every parameter set to pi.
    Identity,
    /// I.i.d. uniform on `[0, hi]`, `hi` set by the ansatz family.
    Random,
    /// `pi + U(-jitter, jitter)` per entry.
    NearIdentity { jitter: f64 },
}

impl InitStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            InitStrategy::Identity => "identity",
            InitStrategy::Random => "random",
            InitStrategy::NearIdentity { .. } => "near_identity",
        }
    }
}

impl fmt::Display for InitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitStrategy::NearIdentity { jitter } => write!(f, "near_identity({jitter})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Angle used by [`Circuit::init_identity`]: pi plus [`IDENTITY_OFFSET`].
///
/// With exactly pi every rotation is `(-i)^k` times a Pauli product, the energy
/// gradient vanishes to ~1e-15 and an energy-change stopping rule fires on the
/// first step. The offset gives gradients of order 1e-6, well above Adam's
/// epsilon, while the initial state stays a product across the half cut to
/// within Schmidt weight 1e-7.
pub const IDENTITY_ANGLE: f64 = PI + IDENTITY_OFFSET;

pub const IDENTITY_OFFSET: f64 = 1e-8;

/// Default jitter half-width (radians) for near-identity sampling.
pub const DEFAULT_NEAR_IDENTITY_JITTER: f64 = 0.1;

impl FromStr for InitStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(InitStrategy::Identity),
            "random" => Ok(InitStrategy::Random),
            "near_identity" => Ok(InitStrategy::NearIdentity {
                jitter: DEFAULT_NEAR_IDENTITY_JITTER,
            }),
            other => Err(Error::InvalidParameter(format!(
                "unknown initialization `{other}` (identity, random, near_identity)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    family: AnsatzFamily,
    prep: Prep,
    generators: Vec<GeneratorGroup>,
    steps: Vec<RotationStep>,
    num_parameters: usize,
    num_layers: usize,
}

impl Circuit {
    /// Validates generators (sites in range, mutually commuting terms) and steps.
    pub fn new(
        num_qubits: usize,
        family: AnsatzFamily,
        prep: Prep,
        generators: Vec<GeneratorGroup>,
        steps: Vec<RotationStep>,
        num_parameters: usize,
    ) -> Result<Self> {
        for g in &generators {
            g.terms.check_sites(num_qubits)?;
            if !g.terms.is_commuting() {
                return Err(Error::NonCommutingGroup(g.label.clone()));
            }
        }
        for s in &steps {
            if s.generator >= generators.len() {
                return Err(Error::InvalidParameter(format!(
                    "step references generator {} of {}",
                    s.generator,
                    generators.len()
                )));
            }
            match s.angle {
                Angle::Parameter(i) if i >= num_parameters => {
                    return Err(Error::InvalidParameter(format!(
                        "step references parameter {i} of {num_parameters}"
                    )))
                }
                Angle::Fixed(a) if !a.is_finite() => {
                    return Err(Error::InvalidParameter("non-finite fixed angle".into()))
                }
                _ => {}
            }
        }
        let num_layers = steps.iter().map(|s| s.layer + 1).max().unwrap_or(0);
        Ok(Self {
            num_qubits,
            family,
            prep,
            generators,
            steps,
            num_parameters,
            num_layers,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn family(&self) -> AnsatzFamily {
        self.family
    }

    pub fn prep(&self) -> Prep {
        self.prep
    }

    pub fn generators(&self) -> &[GeneratorGroup] {
        &self.generators
    }

    pub fn steps(&self) -> &[RotationStep] {
        &self.steps
    }

    pub fn num_parameters(&self) -> usize {
        self.num_parameters
    }

    pub fn num_layers(&self) -> usize {
        self.num_layers
    }

    pub fn generator(&self, step: &RotationStep) -> &PauliSum {
        &self.generators[step.generator].terms
    }

    /// Parameter index to the steps that read it.
    pub fn sharing(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (k, s) in self.steps.iter().enumerate() {
            if let Angle::Parameter(i) = s.angle {
                map.entry(i).or_default().push(k);
            }
        }
        map
    }

    pub fn prep_state(&self) -> Result<StateVector> {
        self.prep.state(self.num_qubits)
    }

    pub fn step_angle(&self, step: &RotationStep, theta: &[f64]) -> f64 {
        match step.angle {
            Angle::Parameter(i) => theta[i],
            Angle::Fixed(a) => a,
        }
    }

    pub fn check_parameters(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.num_parameters {
            return Err(Error::DimensionMismatch {
                expected: self.num_parameters,
                actual: theta.len(),
            });
        }
        Ok(())
    }

    /// Prep state with every rotation step applied in order.
    pub fn apply(&self, theta: &[f64]) -> Result<StateVector> {
        self.check_parameters(theta)?;
        let mut psi = self.prep_state()?;
        for s in &self.steps {
            psi.apply_commuting_sum_rotation(self.generator(s), self.step_angle(s, theta))?;
        }
        Ok(psi)
    }

    /// States after each complete layer `1..=num_layers`.
    pub fn apply_layers(&self, theta: &[f64]) -> Result<Vec<StateVector>> {
        self.check_parameters(theta)?;
        let mut psi = self.prep_state()?;
        let mut out = Vec::with_capacity(self.num_layers);
        for (k, s) in self.steps.iter().enumerate() {
            psi.apply_commuting_sum_rotation(self.generator(s), self.step_angle(s, theta))?;
            let last_of_layer = self.steps.get(k + 1).is_none_or(|n| n.layer != s.layer);
            if last_of_layer {
                out.push(psi.clone());
            }
        }
        Ok(out)
    }

    pub fn init_identity(&self) -> ParameterVector {
        ParameterVector(vec![IDENTITY_ANGLE; self.num_parameters])
    }

    /// Uniform on `[0, hi]` with `hi` from [`AnsatzFamily::random_range`].
    pub fn init_random(&self, seed: u64) -> ParameterVector {
        let hi = self.family.random_range();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ParameterVector((0..self.num_parameters).map(|_| rng.random::<f64>() * hi).collect())
    }

    pub fn init_near_identity(&self, jitter: f64, seed: u64) -> ParameterVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ParameterVector(
            (0..self.num_parameters)
                .map(|_| PI + jitter * (2.0 * rng.random::<f64>() - 1.0))
                .collect(),
        )
    }

    pub fn initial_parameters(&self, strategy: InitStrategy, seed: u64) -> ParameterVector {
        match strategy {
            InitStrategy::Identity => self.init_identity(),
            InitStrategy::Random => self.init_random(seed),
            InitStrategy::NearIdentity { jitter } => self.init_near_identity(jitter, seed),
        }
    }

    pub fn description(&self) -> CircuitDescription {
        CircuitDescription {
            num_qubits: self.num_qubits,
            family: self.family,
            prep: self.prep,
            num_parameters: self.num_parameters,
            num_layers: self.num_layers,
            generators: self.generators.clone(),
            steps: self
                .steps
                .iter()
                .map(|s| StepDescription {
                    generator: self.generators[s.generator].label.clone(),
                    angle: s.angle,
                    layer: s.layer,
                })
                .collect(),
            sharing: self.sharing(),
        }
    }
}

/// JSON-friendly view of a circuit for run manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitDescription {
    pub num_qubits: usize,
    pub family: AnsatzFamily,
    pub prep: Prep,
    pub num_parameters: usize,
    pub num_layers: usize,
    pub generators: Vec<GeneratorGroup>,
    pub steps: Vec<StepDescription>,
    pub sharing: BTreeMap<usize, Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDescription {
    pub generator: String,
    pub angle: Angle,
    pub layer: usize,
}

/// Depth-`p` TFIM ansatz on `|+>^N`: per layer `H_zz` (beta) then `H_x` (gamma).
pub fn build_hva_tfim(n: usize, p: usize) -> Result<Circuit> {
    let groups = build_tfim(n, 1.0)?.groups;
    let steps = (0..p)
        .flat_map(|l| {
            [
                RotationStep {
                    generator: 0,
                    angle: Angle::Parameter(2 * l),
                    layer: l,
                },
                RotationStep {
                    generator: 1,
                    angle: Angle::Parameter(2 * l + 1),
                    layer: l,
                },
            ]
        })
        .collect();
    Circuit::new(n, AnsatzFamily::HvaTfim, Prep::PlusState, groups, steps, 2 * p)
}

/// Depth-`p` XXZ ansatz on the singlet product.
///
/// Per layer the odd bonds act first (`theta` on zz, `phi` shared by xx and yy),
/// then the even bonds (`beta` on zz, `gamma` shared by xx and yy). Parameter
/// layout is `[theta_l, phi_l, beta_l, gamma_l]` for each layer `l`.
pub fn build_hva_xxz(n: usize, p: usize) -> Result<Circuit> {
    let groups = crate::models::build_xxz(n, 1.0)?.groups;
    let idx = |label: &str| {
        groups
            .iter()
            .position(|g| g.label == label)
            .expect("xxz generator labels")
    };
    let order = [
        (idx("zz_odd"), 0),
        (idx("xx_odd"), 1),
        (idx("yy_odd"), 1),
        (idx("zz_even"), 2),
        (idx("xx_even"), 3),
        (idx("yy_even"), 3),
    ];
    let steps = (0..p)
        .flat_map(|l| {
            order.iter().map(move |&(generator, offset)| RotationStep {
                generator,
                angle: Angle::Parameter(4 * l + offset),
                layer: l,
            })
        })
        .collect();
    Circuit::new(n, AnsatzFamily::HvaXxz, Prep::SingletProduct, groups, steps, 4 * p)
}

/// HVA circuit for a model kind; MHS shares the XXZ generators.
pub fn build_hva(kind: ModelKind, n: usize, p: usize) -> Result<Circuit> {
    match kind {
        ModelKind::Tfim => build_hva_tfim(n, p),
        ModelKind::Xxz | ModelKind::Mhs => build_hva_xxz(n, p),
    }
}

/// Random-circuit baseline on `|+>^N`.
///
/// Each of the `p` layers rotates every qubit about a randomly drawn axis in
/// `{X, Y, Z}` (one parameter per qubit) and then applies a fixed `ZZ(pi/2)`
/// ladder on `(0,1), (1,2), ..., (N-2,N-1)`.
pub fn build_rqc_baseline(n: usize, p: usize, seed: u64) -> Result<Circuit> {
    if n < 2 {
        return Err(Error::InvalidSize(format!(
            "random circuit needs at least 2 qubits, got {n}"
        )));
    }
    let mut generators = Vec::with_capacity(4 * n);
    for q in 0..n {
        for axis in Pauli::ALL {
            let term = PauliString::single(1.0, q, axis)?;
            generators.push(GeneratorGroup {
                label: term.label(),
                terms: PauliSum::new(vec![term]),
            });
        }
    }
    let ladder_base = generators.len();
    for q in 0..n - 1 {
        let term = PauliString::pair(1.0, q, q + 1, Pauli::Z)?;
        generators.push(GeneratorGroup {
            label: term.label(),
            terms: PauliSum::new(vec![term]),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut steps = Vec::with_capacity(p * (2 * n - 1));
    for l in 0..p {
        for q in 0..n {
            let axis = rng.random_range(0..3usize);
            steps.push(RotationStep {
                generator: 3 * q + axis,
                angle: Angle::Parameter(l * n + q),
                layer: l,
            });
        }
        for q in 0..n - 1 {
            steps.push(RotationStep {
                generator: ladder_base + q,
                angle: Angle::Fixed(PI / 2.0),
                layer: l,
            });
        }
    }
    Circuit::new(n, AnsatzFamily::RandomCircuit, Prep::PlusState, generators, steps, n * p)
}
