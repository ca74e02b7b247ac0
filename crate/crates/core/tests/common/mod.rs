//! Reference matrices built from Kronecker products of 2x2 Pauli matrices,
//! independent of the bit-mask kernels under test.
#![allow(dead_code)]

use hva_core::ansatz::{Angle, Circuit, Prep};
use hva_core::pauli::{Pauli, PauliString, PauliSum};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C = Complex64;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn single(p: Option<Pauli>) -> DMatrix<C> {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    match p {
        None => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        Some(Pauli::X) => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        Some(Pauli::Y) => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        Some(Pauli::Z) => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    }
}

/// Full matrix of a Pauli string. Qubit 0 is the least significant bit, so it
/// is the rightmost Kronecker factor.
pub fn kron_string(p: &PauliString, n: usize) -> DMatrix<C> {
    let mut m = DMatrix::from_element(1, 1, c(1.0, 0.0));
    for q in (0..n).rev() {
        m = m.kronecker(&single(p.factors().get(&q).copied()));
    }
    m * c(p.coefficient(), 0.0)
}

pub fn kron_sum(h: &PauliSum, n: usize) -> DMatrix<C> {
    let d = 1 << n;
    h.terms()
        .iter()
        .fold(DMatrix::zeros(d, d), |acc, t| acc + kron_string(t, n))
}

/// `exp(-i a/2 G)` for Hermitian `G` through its eigendecomposition.
pub fn expm_hermitian(g: &DMatrix<C>, a: f64) -> DMatrix<C> {
    let eig = g.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(&DVector::from_iterator(
        g.nrows(),
        eig.eigenvalues.iter().map(|&l| C::from_polar(1.0, -a / 2.0 * l)),
    ));
    v * phases * v.adjoint()
}

fn plus_dense(n: usize) -> DVector<C> {
    let h = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut v = DVector::from_element(1, c(1.0, 0.0));
    for _ in 0..n {
        v = v.kronecker(&DVector::from_vec(vec![h, h]));
    }
    v
}

/// `(|01> - |10>)/sqrt 2` on every pair `(2i, 2i+1)`; in the two-qubit basis
/// index `b_{2i} + 2 b_{2i+1}` that is `(0, 1, -1, 0)/sqrt 2`.
fn singlet_dense(n: usize) -> DVector<C> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let pair = DVector::from_vec(vec![c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)]);
    let mut v = DVector::from_element(1, c(1.0, 0.0));
    for _ in 0..n / 2 {
        v = pair.kronecker(&v);
    }
    v
}

pub fn prep_dense(prep: Prep, n: usize) -> DVector<C> {
    match prep {
        Prep::PlusState => plus_dense(n),
        Prep::SingletProduct => singlet_dense(n),
    }
}

/// Circuit output computed with dense matrix exponentials.
pub fn circuit_dense(circuit: &Circuit, theta: &[f64]) -> DVector<C> {
    let n = circuit.num_qubits();
    let mut psi = prep_dense(circuit.prep(), n);
    for step in circuit.steps() {
        let a = match step.angle {
            Angle::Parameter(i) => theta[i],
            Angle::Fixed(x) => x,
        };
        let g = kron_sum(circuit.generator(step), n);
        psi = expm_hermitian(&g, a) * psi;
    }
    psi
}

pub fn max_abs_diff(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Reduced density matrix of qubits `0..n_a` by explicit partial trace.
pub fn reduced_density(psi: &[C], n: usize, n_a: usize) -> DMatrix<C> {
    let da = 1 << n_a;
    let db = 1 << (n - n_a);
    DMatrix::from_fn(da, da, |i, j| {
        (0..db).map(|b| psi[i + (b << n_a)] * psi[j + (b << n_a)].conj()).sum()
    })
}
