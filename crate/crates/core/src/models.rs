//! Spin-chain Hamiltonians on a periodic ring and their generator groupings.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, PauliSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Transverse-field Ising: `-sum Z_i Z_{i+1} - g sum X_i`.
    Tfim,
    /// `sum X_i X_{i+1} + Y_i Y_{i+1} + Delta Z_i Z_{i+1}`.
    Xxz,
    /// Modified Haldane-Shastry chain with inverse chord-distance-squared couplings.
    Mhs,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Tfim => "tfim",
            ModelKind::Xxz => "xxz",
            ModelKind::Mhs => "mhs",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tfim" => Ok(ModelKind::Tfim),
            "xxz" => Ok(ModelKind::Xxz),
            "mhs" => Ok(ModelKind::Mhs),
            other => Err(Error::InvalidParameter(format!("unknown model `{other}`"))),
        }
    }
}

/// Model selection as recorded in run manifests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(rename = "N")]
    pub num_qubits: usize,
    /// `g` for the TFIM, `Delta` for XXZ, ignored for MHS.
    pub order_parameter: f64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, num_qubits: usize, order_parameter: f64) -> Self {
        Self {
            kind,
            num_qubits,
            order_parameter,
        }
    }

    pub fn tfim(num_qubits: usize, g: f64) -> Self {
        Self::new(ModelKind::Tfim, num_qubits, g)
    }

    pub fn xxz(num_qubits: usize, delta: f64) -> Self {
        Self::new(ModelKind::Xxz, num_qubits, delta)
    }

    pub fn mhs(num_qubits: usize) -> Self {
        Self::new(ModelKind::Mhs, num_qubits, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_qubits;
        match self.kind {
            ModelKind::Tfim => {
                if n < 3 {
                    return Err(Error::InvalidSize(format!(
                        "TFIM ring needs at least 3 sites, got {n}"
                    )));
                }
                if !(self.order_parameter.is_finite() && self.order_parameter > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "TFIM field g must be finite and positive, got {}",
                        self.order_parameter
                    )));
                }
            }
            ModelKind::Xxz | ModelKind::Mhs => {
                if n < 4 || n % 2 != 0 {
                    return Err(Error::InvalidSize(format!(
                        "{} needs an even number of sites >= 4, got {n}",
                        self.kind
                    )));
                }
                if !self.order_parameter.is_finite() {
                    return Err(Error::InvalidParameter("non-finite order parameter".into()));
                }
            }
        }
        if n > crate::state::MAX_QUBITS {
            return Err(Error::InvalidSize(format!("{n} sites exceeds the simulator limit")));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<HamiltonianGroups> {
        match self.kind {
            ModelKind::Tfim => build_tfim(self.num_qubits, self.order_parameter),
            ModelKind::Xxz => build_xxz(self.num_qubits, self.order_parameter),
            ModelKind::Mhs => build_mhs(self.num_qubits),
        }
    }
}

/// One circuit generator `H_s` with its label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorGroup {
    pub label: String,
    pub terms: PauliSum,
}

/// Cost Hamiltonian plus the ordered generator groups used by the ansatz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianGroups {
    pub spec: ModelSpec,
    pub full: PauliSum,
    pub groups: Vec<GeneratorGroup>,
}

impl HamiltonianGroups {
    pub fn group(&self, label: &str) -> Option<&GeneratorGroup> {
        self.groups.iter().find(|g| g.label == label)
    }
}

fn ring_bond(i: usize, n: usize) -> (usize, usize) {
    (i, (i + 1) % n)
}

fn bond_sum(bonds: &[(usize, usize)], pauli: Pauli, coefficient: f64) -> PauliSum {
    bonds
        .iter()
        .map(|&(i, j)| PauliString::pair(coefficient, i, j, pauli).expect("distinct ring sites"))
        .collect()
}

fn group(label: &str, terms: PauliSum) -> GeneratorGroup {
    debug_assert!(terms.is_commuting(), "group {label} must commute");
    GeneratorGroup {
        label: label.to_string(),
        terms,
    }
}

/// Even bonds `(0,1), (2,3), ...` and odd bonds `(1,2), ..., (N-1,0)`.
pub fn even_odd_bonds(n: usize) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let even = (0..n / 2).map(|i| (2 * i, 2 * i + 1)).collect();
    let odd = (0..n / 2).map(|i| ring_bond(2 * i + 1, n)).collect();
    (even, odd)
}

/// `H = H_zz + g H_x` with `H_zz = -sum Z_i Z_{i+1}` and `H_x = -sum X_i` on a ring.
pub fn build_tfim(n: usize, g: f64) -> Result<HamiltonianGroups> {
    let spec = ModelSpec::tfim(n, g);
    spec.validate()?;
    let bonds: Vec<_> = (0..n).map(|i| ring_bond(i, n)).collect();
    let h_zz = bond_sum(&bonds, Pauli::Z, -1.0);
    let h_x: PauliSum = (0..n)
        .map(|i| PauliString::single(-1.0, i, Pauli::X).expect("site in range"))
        .collect();
    let full = h_zz.plus(&h_x.scaled(g));
    Ok(HamiltonianGroups {
        spec,
        full,
        groups: vec![group("zz", h_zz), group("x", h_x)],
    })
}

fn xxz_groups(n: usize) -> Vec<GeneratorGroup> {
    let (even, odd) = even_odd_bonds(n);
    vec![
        group("zz_even", bond_sum(&even, Pauli::Z, 1.0)),
        group("xx_even", bond_sum(&even, Pauli::X, 1.0)),
        group("yy_even", bond_sum(&even, Pauli::Y, 1.0)),
        group("zz_odd", bond_sum(&odd, Pauli::Z, 1.0)),
        group("xx_odd", bond_sum(&odd, Pauli::X, 1.0)),
        group("yy_odd", bond_sum(&odd, Pauli::Y, 1.0)),
    ]
}

/// `H = sum_i X_i X_{i+1} + Y_i Y_{i+1} + Delta Z_i Z_{i+1}` on a ring of even length.
///
/// The zz generators are always present in the groups even when `Delta = 0`.
pub fn build_xxz(n: usize, delta: f64) -> Result<HamiltonianGroups> {
    let spec = ModelSpec::xxz(n, delta);
    spec.validate()?;
    let mut full = PauliSum::default();
    for i in 0..n {
        let (a, b) = ring_bond(i, n);
        full.push(PauliString::pair(1.0, a, b, Pauli::X)?);
        full.push(PauliString::pair(1.0, a, b, Pauli::Y)?);
        if delta != 0.0 {
            full.push(PauliString::pair(delta, a, b, Pauli::Z)?);
        }
    }
    Ok(HamiltonianGroups {
        spec,
        full,
        groups: xxz_groups(n),
    })
}

/// Chord-distance coupling `1/d_jk^2` with `d_jk = (N/pi) |sin(pi (j-k)/N)|`.
pub fn mhs_coupling(n: usize, j: usize, k: usize) -> f64 {
    let d = n as f64 / PI * (PI * (j as f64 - k as f64) / n as f64).sin().abs();
    d.powi(2).recip()
}

/// `H = sum_{j<k} (-X_j X_k - Y_j Y_k + Z_j Z_k) / d_jk^2`, with the XXZ generators.
pub fn build_mhs(n: usize) -> Result<HamiltonianGroups> {
    let spec = ModelSpec::mhs(n);
    spec.validate()?;
    let mut full = PauliSum::default();
    for j in 0..n {
        for k in j + 1..n {
            let c = mhs_coupling(n, j, k);
            full.push(PauliString::pair(-c, j, k, Pauli::X)?);
            full.push(PauliString::pair(-c, j, k, Pauli::Y)?);
            full.push(PauliString::pair(c, j, k, Pauli::Z)?);
        }
    }
    Ok(HamiltonianGroups {
        spec,
        full,
        groups: xxz_groups(n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::StateVector;

    #[test]
    fn tfim_layout() {
        let h = build_tfim(4, 1.0).unwrap();
        assert_eq!(h.full.len(), 8);
        assert_eq!(h.groups.len(), 2);
        assert!(h.groups.iter().all(|g| g.terms.len() == 4 && g.terms.is_commuting()));
        let e = StateVector::plus(4).unwrap().expectation(&h.full).unwrap();
        assert!((e + 4.0).abs() < 1e-12);
    }

    #[test]
    fn tfim_rejects_bad_input() {
        assert!(matches!(build_tfim(2, 1.0), Err(Error::InvalidSize(_))));
        assert!(matches!(build_tfim(4, 0.0), Err(Error::InvalidParameter(_))));
        assert!(build_tfim(4, -1.0).is_err());
    }

    #[test]
    fn xxz_bonds_and_groups() {
        let (even, odd) = even_odd_bonds(6);
        assert_eq!(even, vec![(0, 1), (2, 3), (4, 5)]);
        assert_eq!(odd, vec![(1, 2), (3, 4), (5, 0)]);
        let h = build_xxz(4, 1.0).unwrap();
        let labels: Vec<_> = h.groups.iter().map(|g| g.label.as_str()).collect();
        assert_eq!(
            labels,
            ["zz_even", "xx_even", "yy_even", "zz_odd", "xx_odd", "yy_odd"]
        );
        assert!(h.groups.iter().all(|g| g.terms.is_commuting()));
        assert!(build_xxz(5, 1.0).is_err());
        assert!(build_xxz(2, 1.0).is_err());
    }

    #[test]
    fn xxz_singlet_energy() {
        let h = build_xxz(4, 1.0).unwrap();
        let e = StateVector::singlet_product(4).unwrap().expectation(&h.full).unwrap();
        assert!((e + 6.0).abs() < 1e-12);
    }

    #[test]
    fn xxz_zero_anisotropy_drops_zz_from_cost_only() {
        let h = build_xxz(4, 0.0).unwrap();
        assert_eq!(h.full.len(), 8);
        assert!(h.full.terms().iter().all(|t| !t.is_diagonal()));
        assert!(h.group("zz_even").is_some() && h.group("zz_odd").is_some());
    }

    #[test]
    fn mhs_couplings() {
        let nn = mhs_coupling(4, 0, 1);
        let d = 4.0 / (PI * 2f64.sqrt());
        assert!((nn - 1.0 / (d * d)).abs() < 1e-12);
        assert!((nn - 1.2337005501361697).abs() < 1e-12);
        // |sin| symmetry: distance 1 and N-1 are equivalent.
        assert!((mhs_coupling(8, 0, 1) - mhs_coupling(8, 0, 7)).abs() < 1e-12);
        assert!((mhs_coupling(8, 2, 5) - mhs_coupling(8, 1, 6)).abs() < 1e-12);
        let h = build_mhs(6).unwrap();
        assert_eq!(h.full.len(), 3 * 6 * 5 / 2);
        assert_eq!(h.groups, build_xxz(6, 0.3).unwrap().groups);
    }

    #[test]
    fn spec_serializes_with_capital_n() {
        let json = serde_json::to_string(&ModelSpec::xxz(8, 1.0)).unwrap();
        assert_eq!(json, r#"{"kind":"xxz","N":8,"order_parameter":1.0}"#);
    }
}
