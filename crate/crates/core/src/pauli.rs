//! Pauli strings and weighted sums of them.
//!
//! A [`PauliString`] is stored both as a site map (for display and
//! serialization) and as a pair of bit masks used by the statevector kernels.
//! With qubit 0 as the least-significant bit of a basis index `x`,
//!
//! ```text
//! P |x> = i^{n_Y} (-1)^{popcount(x & z_mask)} |x ^ x_mask>
//! ```
//!
//! where `x_mask` marks X and Y factors and `z_mask` marks Y and Z factors.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest register the bit-mask representation supports.
pub const MAX_SITES: usize = 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    fn letter(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Phase-free tensor product of single-site Pauli operators with a real weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "PauliStringRepr", try_from = "PauliStringRepr")]
pub struct PauliString {
    coefficient: f64,
    factors: BTreeMap<usize, Pauli>,
    x_mask: u64,
    z_mask: u64,
    num_y: u32,
}

impl PauliString {
    /// Builds a string from `(site, pauli)` pairs. Duplicate sites are rejected.
    pub fn new<I>(coefficient: f64, factors: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, Pauli)>,
    {
        let mut map = BTreeMap::new();
        for (site, p) in factors {
            if site >= MAX_SITES {
                return Err(Error::SiteOutOfRange {
                    site,
                    num_qubits: MAX_SITES,
                });
            }
            if map.insert(site, p).is_some() {
                return Err(Error::DuplicateSite(site));
            }
        }
        Ok(Self::from_map(coefficient, map))
    }

    pub fn identity(coefficient: f64) -> Self {
        Self::from_map(coefficient, BTreeMap::new())
    }

    pub fn single(coefficient: f64, site: usize, pauli: Pauli) -> Result<Self> {
        Self::new(coefficient, [(site, pauli)])
    }

    /// `coefficient * P_i P_j` for the same Pauli on two distinct sites.
    pub fn pair(coefficient: f64, i: usize, j: usize, pauli: Pauli) -> Result<Self> {
        Self::new(coefficient, [(i, pauli), (j, pauli)])
    }

    fn from_map(coefficient: f64, factors: BTreeMap<usize, Pauli>) -> Self {
        let (mut x_mask, mut z_mask, mut num_y) = (0u64, 0u64, 0u32);
        for (&site, &p) in &factors {
            let bit = 1u64 << site;
            match p {
                Pauli::X => x_mask |= bit,
                Pauli::Z => z_mask |= bit,
                Pauli::Y => {
                    x_mask |= bit;
                    z_mask |= bit;
                    num_y += 1;
                }
            }
        }
        Self {
            coefficient,
            factors,
            x_mask,
            z_mask,
            num_y,
        }
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn factors(&self) -> &BTreeMap<usize, Pauli> {
        &self.factors
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }

    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }

    /// `i^{n_Y}`, the constant part of the phase picked up on any basis state.
    pub fn y_phase(&self) -> Complex64 {
        i_pow(self.num_y)
    }

    pub fn is_identity(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn is_diagonal(&self) -> bool {
        self.x_mask == 0
    }

    /// Highest site index acted on, if any.
    pub fn max_site(&self) -> Option<usize> {
        self.factors.keys().next_back().copied()
    }

    pub fn with_coefficient(&self, coefficient: f64) -> Self {
        Self {
            coefficient,
            ..self.clone()
        }
    }

    /// Same operator string, same weight, with sites relabeled by `map`.
    pub fn relabeled(&self, map: impl Fn(usize) -> usize) -> Result<Self> {
        Self::new(
            self.coefficient,
            self.factors.iter().map(|(&s, &p)| (map(s), p)),
        )
    }

    /// Symplectic commutation test; coefficients are irrelevant.
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let anti = (self.x_mask & other.z_mask) ^ (self.z_mask & other.x_mask);
        anti.count_ones() % 2 == 0
    }

    pub fn check_sites(&self, num_qubits: usize) -> Result<()> {
        match self.max_site() {
            Some(site) if site >= num_qubits => Err(Error::SiteOutOfRange { site, num_qubits }),
            _ => Ok(()),
        }
    }

    /// Operator label without the coefficient, e.g. `Z0 Z1`; `I` for identity.
    pub fn label(&self) -> String {
        if self.factors.is_empty() {
            return "I".to_string();
        }
        self.factors
            .iter()
            .map(|(s, p)| format!("{}{}", p.letter(), s))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} * {}", self.coefficient, self.label())
    }
}

/// Parses labels of the form `X0 Y3 Z4` (or `I`), with unit coefficient.
impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "I" || s.is_empty() {
            return Ok(Self::identity(1.0));
        }
        let mut factors = Vec::new();
        for tok in s.split_whitespace() {
            let mut chars = tok.chars();
            let p = match chars.next() {
                Some('X') => Pauli::X,
                Some('Y') => Pauli::Y,
                Some('Z') => Pauli::Z,
                _ => return Err(Error::InvalidParameter(format!("bad Pauli token `{tok}`"))),
            };
            let site: usize = chars
                .as_str()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad Pauli token `{tok}`")))?;
            factors.push((site, p));
        }
        Self::new(1.0, factors)
    }
}

#[derive(Serialize, Deserialize)]
struct PauliStringRepr {
    coefficient: f64,
    paulis: String,
}

impl From<PauliString> for PauliStringRepr {
    fn from(p: PauliString) -> Self {
        Self {
            coefficient: p.coefficient,
            paulis: p.label(),
        }
    }
}

impl TryFrom<PauliStringRepr> for PauliString {
    type Error = Error;

    fn try_from(r: PauliStringRepr) -> Result<Self> {
        Ok(r.paulis.parse::<PauliString>()?.with_coefficient(r.coefficient))
    }
}

/// `i^k` for integer `k`.
pub(crate) fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Ordered weighted list of Pauli strings; Hermitian by construction.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PauliSum {
    terms: Vec<PauliString>,
}

impl PauliSum {
    pub fn new(terms: Vec<PauliString>) -> Self {
        Self { terms }
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, term: PauliString) {
        self.terms.push(term);
    }

    /// Every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| t.with_coefficient(t.coefficient * factor))
                .collect(),
        }
    }

    /// Concatenation of the two term lists (operator sum).
    pub fn plus(&self, other: &PauliSum) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { terms }
    }

    pub fn max_site(&self) -> Option<usize> {
        self.terms.iter().filter_map(PauliString::max_site).max()
    }

    pub fn check_sites(&self, num_qubits: usize) -> Result<()> {
        self.terms.iter().try_for_each(|t| t.check_sites(num_qubits))
    }

    /// True when every pair of terms commutes.
    pub fn is_commuting(&self) -> bool {
        self.terms.iter().enumerate().all(|(i, a)| {
            self.terms[i + 1..].iter().all(|b| a.commutes_with(b))
        })
    }

    /// Sum of absolute coefficients; an upper bound on the operator norm.
    pub fn coefficient_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coefficient.abs()).sum()
    }

    /// Dense `2^n x 2^n` matrix in the project bit order.
    pub fn to_dense(&self, num_qubits: usize) -> Result<DMatrix<Complex64>> {
        self.check_sites(num_qubits)?;
        let dim = 1usize << num_qubits;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for t in &self.terms {
            let w = t.y_phase() * t.coefficient;
            let (xm, zm) = (t.x_mask as usize, t.z_mask as usize);
            for col in 0..dim {
                let sign = if (col & zm).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                m[(col ^ xm, col)] += w * sign;
            }
        }
        Ok(m)
    }

    /// Terms bucketed by flip mask for fast matrix-free products.
    pub fn compile(&self) -> CompiledSum {
        let mut blocks: BTreeMap<u64, Vec<(u64, Complex64)>> = BTreeMap::new();
        for t in &self.terms {
            blocks
                .entry(t.x_mask)
                .or_default()
                .push((t.z_mask, t.y_phase() * t.coefficient));
        }
        CompiledSum {
            blocks: blocks.into_iter().collect(),
            max_site: self.max_site(),
        }
    }
}

impl FromIterator<PauliString> for PauliSum {
    fn from_iter<I: IntoIterator<Item = PauliString>>(iter: I) -> Self {
        Self {
            terms: iter.into_iter().collect(),
        }
    }
}

/// A [`PauliSum`] regrouped by X-flip mask.
///
/// All terms sharing a flip mask map `|x>` to the same `|x ^ mask>`, so one
/// pass over the amplitudes per mask suffices.
#[derive(Debug, Clone)]
pub struct CompiledSum {
    pub(crate) blocks: Vec<(u64, Vec<(u64, Complex64)>)>,
    max_site: Option<usize>,
}

impl CompiledSum {
    pub fn check_sites(&self, num_qubits: usize) -> Result<()> {
        match self.max_site {
            Some(site) if site >= num_qubits => Err(Error::SiteOutOfRange { site, num_qubits }),
            _ => Ok(()),
        }
    }

    /// `out = H psi` on raw amplitude slices of equal length.
    pub fn apply_into(&self, psi: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(psi.len(), out.len());
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for (xm, terms) in &self.blocks {
            let xm = *xm as usize;
            for (y, o) in out.iter_mut().enumerate() {
                let x = y ^ xm;
                let mut w = Complex64::new(0.0, 0.0);
                for &(zm, c) in terms {
                    if (x as u64 & zm).count_ones() % 2 == 0 {
                        w += c;
                    } else {
                        w -= c;
                    }
                }
                *o += w * psi[x];
            }
        }
    }
}
