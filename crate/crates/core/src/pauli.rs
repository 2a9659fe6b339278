//! Pauli-string decomposition of Hermitian matrices.
//!
//! Index convention shared by the whole crate: a string (i, j, k, ...) has its
//! leftmost factor acting on qubit 0, which is the most significant bit of the
//! computational basis index. Coefficients come from the trace formula
//! c_P = Tr(P M) / 2^q and are real for Hermitian input.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Threshold below which a coefficient counts as zero. Exact coefficients in
/// this model are surds of order 1e-2..1e1 while accumulated float noise stays
/// near 1e-15, so the gap is wide.
pub const ZERO_TOLERANCE: f64 = 1e-10;

const PAULI_NAMES: [char; 4] = ['I', 'X', 'Y', 'Z'];

/// Tensor product of single-qubit Paulis, stored as factor indices
/// 0 = I, 1 = X, 2 = Y, 3 = Z.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString {
    indices: Vec<u8>,
}

impl PauliString {
    pub fn new(indices: Vec<u8>) -> Self {
        assert!(indices.iter().all(|&i| i < 4), "Pauli factor index out of range");
        Self { indices }
    }

    pub fn identity(num_qubits: usize) -> Self {
        Self { indices: vec![0; num_qubits] }
    }

    pub fn indices(&self) -> &[u8] {
        &self.indices
    }

    pub fn num_qubits(&self) -> usize {
        self.indices.len()
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> usize {
        self.indices.iter().filter(|&&i| i != 0).count()
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    /// True when every factor is I or Z, i.e. the operator is diagonal.
    pub fn is_diagonal(&self) -> bool {
        self.indices.iter().all(|&i| i == 0 || i == 3)
    }

    /// Basis action P |col> = phase |row>.
    pub fn column_action(&self, col: usize) -> (usize, Complex64) {
        let q = self.num_qubits();
        let mut row = col;
        let mut phase = Complex64::new(1.0, 0.0);
        for (pos, &p) in self.indices.iter().enumerate() {
            let bit_pos = q - 1 - pos;
            let bit = (col >> bit_pos) & 1;
            match p {
                0 => {}
                1 => row ^= 1 << bit_pos,
                2 => {
                    row ^= 1 << bit_pos;
                    phase *= if bit == 0 {
                        Complex64::new(0.0, 1.0)
                    } else {
                        Complex64::new(0.0, -1.0)
                    };
                }
                3 => {
                    if bit == 1 {
                        phase = -phase;
                    }
                }
                _ => unreachable!(),
            }
        }
        (row, phase)
    }

    /// Tr(P M) without materializing P.
    pub fn trace_with(&self, m: &DMatrix<Complex64>) -> Complex64 {
        let dim = 1usize << self.num_qubits();
        debug_assert_eq!(m.nrows(), dim);
        let mut total = Complex64::new(0.0, 0.0);
        for col in 0..dim {
            let (row, phase) = self.column_action(col);
            total += phase * m[(col, row)];
        }
        total
    }

    /// Dense matrix of the string.
    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.num_qubits();
        let mut m = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let (row, phase) = self.column_action(col);
            m[(row, col)] = phase;
        }
        m
    }
}

impl std::fmt::Display for PauliString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &i in &self.indices {
            write!(f, "{}", PAULI_NAMES[i as usize])?;
        }
        Ok(())
    }
}

/// Sparse real-coefficient expansion of a Hermitian operator in the Pauli
/// basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliDecomposition {
    pub num_qubits: usize,
    pub terms: BTreeMap<PauliString, f64>,
    pub zero_tolerance: f64,
}

impl PauliDecomposition {
    pub fn empty(num_qubits: usize) -> Self {
        Self { num_qubits, terms: BTreeMap::new(), zero_tolerance: ZERO_TOLERANCE }
    }

    pub fn coefficient(&self, indices: &[u8]) -> f64 {
        self.terms.get(&PauliString::new(indices.to_vec())).copied().unwrap_or(0.0)
    }

    pub fn identity_coefficient(&self) -> f64 {
        self.coefficient(&vec![0u8; self.num_qubits])
    }

    /// Terms other than the identity string.
    pub fn non_identity_terms(&self) -> impl Iterator<Item = (&PauliString, f64)> {
        self.terms.iter().filter(|(s, _)| !s.is_identity()).map(|(s, &c)| (s, c))
    }

    pub fn num_non_identity(&self) -> usize {
        self.non_identity_terms().count()
    }
}

/// Expand a Hermitian matrix in the Pauli basis via the trace formula.
pub fn decompose(m: &DMatrix<Complex64>) -> Result<PauliDecomposition> {
    let dim = m.nrows();
    if dim == 0 || !dim.is_power_of_two() || m.ncols() != dim {
        return Err(Error::NotPowerOfTwo { dim });
    }
    let deviation = (m - m.adjoint()).norm();
    if deviation > 1e-10 {
        return Err(Error::NotHermitian { deviation });
    }
    let num_qubits = dim.trailing_zeros() as usize;
    let mut terms = BTreeMap::new();
    let mut indices = vec![0u8; num_qubits];
    loop {
        let string = PauliString::new(indices.clone());
        let coefficient = string.trace_with(m) / dim as f64;
        debug_assert!(coefficient.im.abs() < 1e-10);
        if coefficient.re.abs() > ZERO_TOLERANCE {
            terms.insert(string, coefficient.re);
        }
        if !next_indices(&mut indices) {
            break;
        }
    }
    Ok(PauliDecomposition { num_qubits, terms, zero_tolerance: ZERO_TOLERANCE })
}

fn next_indices(indices: &mut [u8]) -> bool {
    for slot in indices.iter_mut().rev() {
        *slot += 1;
        if *slot < 4 {
            return true;
        }
        *slot = 0;
    }
    false
}

/// Sum of coefficient-weighted strings as a dense matrix.
pub fn reconstruct(decomposition: &PauliDecomposition) -> DMatrix<Complex64> {
    let dim = 1usize << decomposition.num_qubits;
    let mut m = DMatrix::zeros(dim, dim);
    for (string, &coefficient) in &decomposition.terms {
        for col in 0..dim {
            let (row, phase) = string.column_action(col);
            m[(row, col)] += phase * coefficient;
        }
    }
    m
}

/// Number of terms acting on every qubit (the quantity minimized by the
/// embedding search).
pub fn objective_full_weight(decomposition: &PauliDecomposition) -> usize {
    decomposition
        .terms
        .iter()
        .filter(|(s, c)| s.weight() == decomposition.num_qubits && c.abs() > decomposition.zero_tolerance)
        .count()
}
