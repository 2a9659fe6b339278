//! Statevector and density-matrix simulation with parametric noise.
//!
//! Qubit 0 is the most significant bit of the computational index. The noisy
//! backend is exact (no trajectory sampling): a depolarizing channel on the
//! gate's support follows every gate, and measurement pushes the Born
//! distribution through a left-stochastic readout confusion map before
//! sampling.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::pauli::PauliDecomposition;

type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn mat_x() -> Mat2 {
    [[ZERO, ONE], [ONE, ZERO]]
}

fn mat_y() -> Mat2 {
    [[ZERO, Complex64::new(0.0, -1.0)], [Complex64::new(0.0, 1.0), ZERO]]
}

fn mat_z() -> Mat2 {
    [[ONE, ZERO], [ZERO, -ONE]]
}

fn mat_h() -> Mat2 {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[s, s], [s, -s]]
}

fn mat_phase(phi: f64) -> Mat2 {
    [[ONE, ZERO], [ZERO, Complex64::from_polar(1.0, phi)]]
}

fn mat_rx(theta: f64) -> Mat2 {
    let c = Complex64::new((theta / 2.0).cos(), 0.0);
    let s = Complex64::new(0.0, -(theta / 2.0).sin());
    [[c, s], [s, c]]
}

fn mat_rz(theta: f64) -> Mat2 {
    [[Complex64::from_polar(1.0, -theta / 2.0), ZERO], [ZERO, Complex64::from_polar(1.0, theta / 2.0)]]
}

fn apply_single(amps: &mut [Complex64], width: usize, target: usize, m: &Mat2, control_mask: usize) {
    let bit = 1usize << (width - 1 - target);
    for base in 0..amps.len() {
        if base & bit != 0 || base & control_mask != control_mask {
            continue;
        }
        let pair = base | bit;
        let (a, b) = (amps[base], amps[pair]);
        amps[base] = m[0][0] * a + m[0][1] * b;
        amps[pair] = m[1][0] * a + m[1][1] * b;
    }
}

fn apply_gate_slice(amps: &mut [Complex64], width: usize, gate: &Gate, control_mask: usize) {
    let qubit_bit = |q: usize| 1usize << (width - 1 - q);
    match gate {
        Gate::X(q) => apply_single(amps, width, *q, &mat_x(), control_mask),
        Gate::Y(q) => apply_single(amps, width, *q, &mat_y(), control_mask),
        Gate::Z(q) => apply_single(amps, width, *q, &mat_z(), control_mask),
        Gate::H(q) => apply_single(amps, width, *q, &mat_h(), control_mask),
        Gate::Phase(q, phi) => apply_single(amps, width, *q, &mat_phase(*phi), control_mask),
        Gate::Rx(q, theta) => apply_single(amps, width, *q, &mat_rx(*theta), control_mask),
        Gate::Rz(q, theta) => apply_single(amps, width, *q, &mat_rz(*theta), control_mask),
        Gate::Cnot(c, t) => apply_single(amps, width, *t, &mat_x(), control_mask | qubit_bit(*c)),
        Gate::Cy(c, t) => apply_single(amps, width, *t, &mat_y(), control_mask | qubit_bit(*c)),
        Gate::Cz(c, t) => apply_single(amps, width, *t, &mat_z(), control_mask | qubit_bit(*c)),
        Gate::Crx(c, t, theta) => {
            apply_single(amps, width, *t, &mat_rx(*theta), control_mask | qubit_bit(*c))
        }
        Gate::Crz(c, t, theta) => {
            apply_single(amps, width, *t, &mat_rz(*theta), control_mask | qubit_bit(*c))
        }
        Gate::Controlled(c, sub) => {
            let mask = control_mask | qubit_bit(*c);
            for inner in &sub.gates {
                apply_gate_slice(amps, width, inner, mask);
            }
        }
    }
}

/// Pure state over 2^width amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// |0...0>.
    pub fn zero_state(width: usize) -> Self {
        Self::basis_state(width, 0)
    }

    /// A computational basis state by index.
    pub fn basis_state(width: usize, index: usize) -> Self {
        let mut amplitudes = vec![ZERO; 1 << width];
        amplitudes[index] = ONE;
        Self { amplitudes }
    }

    pub fn width(&self) -> usize {
        self.amplitudes.len().trailing_zeros() as usize
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Born probabilities.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Mixed state as an explicit matrix.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn from_pure(state: &StateVector) -> Self {
        let dim = state.amplitudes.len();
        let mut matrix = DMatrix::zeros(dim, dim);
        for r in 0..dim {
            for c in 0..dim {
                matrix[(r, c)] = state.amplitudes[r] * state.amplitudes[c].conj();
            }
        }
        Self { matrix }
    }

    pub fn maximally_mixed(width: usize) -> Self {
        let dim = 1usize << width;
        Self { matrix: DMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0) }
    }

    pub fn width(&self) -> usize {
        self.matrix.nrows().trailing_zeros() as usize
    }

    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.matrix.nrows()).map(|i| self.matrix[(i, i)].re).collect()
    }

    /// Check Hermiticity, unit trace and positivity (up to 1e-9).
    pub fn validate(&self) -> Result<()> {
        let herm = (&self.matrix - self.matrix.adjoint()).norm();
        if herm > 1e-9 {
            return Err(Error::NotHermitian { deviation: herm });
        }
        let trace = self.matrix.trace();
        if (trace - ONE).norm() > 1e-9 {
            return Err(Error::NotUnitTrace { trace: trace.re });
        }
        let min_eig = self
            .matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-9 {
            return Err(Error::NotHermitian { deviation: -min_eig });
        }
        Ok(())
    }
}

/// Readout confusion: measured distribution is A times the true one.
#[derive(Debug, Clone)]
pub enum ReadoutNoise {
    /// The same symmetric bit-flip probability on every qubit.
    UniformFlip(f64),
    /// Per-qubit symmetric flip probabilities (index = qubit).
    PerQubitFlip(Vec<f64>),
    /// Full left-stochastic matrix; entry (x, y) is the probability of
    /// reading x when the true outcome is y.
    Confusion(DMatrix<f64>),
}

impl ReadoutNoise {
    pub fn ideal() -> Self {
        ReadoutNoise::UniformFlip(0.0)
    }

    pub fn validate(&self, width: usize) -> Result<()> {
        match self {
            ReadoutNoise::UniformFlip(p) => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::InvalidProbability { what: "readout flip", value: *p });
                }
            }
            ReadoutNoise::PerQubitFlip(ps) => {
                if ps.len() != width {
                    return Err(Error::WidthMismatch { expected: width, got: ps.len() });
                }
                for &p in ps {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(Error::InvalidProbability { what: "readout flip", value: p });
                    }
                }
            }
            ReadoutNoise::Confusion(a) => {
                let dim = 1usize << width;
                if a.nrows() != dim || a.ncols() != dim {
                    return Err(Error::WidthMismatch { expected: dim, got: a.nrows() });
                }
                for col in 0..dim {
                    let mut sum = 0.0;
                    for row in 0..dim {
                        let v = a[(row, col)];
                        if !(-1e-12..=1.0 + 1e-12).contains(&v) {
                            return Err(Error::InvalidProbability { what: "confusion entry", value: v });
                        }
                        sum += v;
                    }
                    if (sum - 1.0).abs() > 1e-12 {
                        return Err(Error::NotLeftStochastic { column: col, sum });
                    }
                }
            }
        }
        Ok(())
    }

    fn flip_probabilities(&self, width: usize) -> Option<Vec<f64>> {
        match self {
            ReadoutNoise::UniformFlip(p) => Some(vec![*p; width]),
            ReadoutNoise::PerQubitFlip(ps) => Some(ps.clone()),
            ReadoutNoise::Confusion(_) => None,
        }
    }

    /// Push a distribution through the confusion map.
    pub fn apply(&self, probs: &[f64]) -> Vec<f64> {
        let dim = probs.len();
        let width = dim.trailing_zeros() as usize;
        match self.flip_probabilities(width) {
            Some(flips) => {
                let mut current = probs.to_vec();
                for (q, &p) in flips.iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    let bit = 1usize << (width - 1 - q);
                    let mut next = vec![0.0; dim];
                    for x in 0..dim {
                        next[x] = (1.0 - p) * current[x] + p * current[x ^ bit];
                    }
                    current = next;
                }
                current
            }
            None => match self {
                ReadoutNoise::Confusion(a) => {
                    let mut out = vec![0.0; dim];
                    for x in 0..dim {
                        for y in 0..dim {
                            out[x] += a[(x, y)] * probs[y];
                        }
                    }
                    out
                }
                _ => unreachable!(),
            },
        }
    }

    /// Eigenvalue of the twirled confusion map on the parity vector of the
    /// given index-space mask. Closed form for product flip noise, the
    /// double sum otherwise.
    pub fn twirled_eigenvalue(&self, mask: usize, width: usize) -> f64 {
        match self.flip_probabilities(width) {
            Some(flips) => {
                let mut lambda = 1.0;
                for (q, &p) in flips.iter().enumerate() {
                    if mask & (1usize << (width - 1 - q)) != 0 {
                        lambda *= 1.0 - 2.0 * p;
                    }
                }
                lambda
            }
            None => match self {
                ReadoutNoise::Confusion(a) => {
                    let dim = 1usize << width;
                    let mut total = 0.0;
                    for x in 0..dim {
                        for y in 0..dim {
                            let sign = if ((x ^ y) & mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                            total += sign * a[(x, y)];
                        }
                    }
                    total / dim as f64
                }
                _ => unreachable!(),
            },
        }
    }
}

/// Per-arity depolarizing probabilities plus readout confusion.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub readout: ReadoutNoise,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self { p1: 0.0, p2: 0.0, p3: 0.0, readout: ReadoutNoise::ideal() }
    }

    pub fn validate(&self) -> Result<()> {
        for (what, p) in [("p1", self.p1), ("p2", self.p2), ("p3", self.p3)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidProbability { what, value: p });
            }
        }
        Ok(())
    }

    pub fn probability_for_arity(&self, arity: usize) -> f64 {
        match arity {
            0 | 1 => self.p1,
            2 => self.p2,
            _ => self.p3,
        }
    }
}

impl Default for NoiseModel {
    /// Stand-in parameters that qualitatively reproduce the strong-coupling
    /// degradation of a small superconducting device.
    fn default() -> Self {
        Self { p1: 0.001, p2: 0.01, p3: 0.03, readout: ReadoutNoise::UniformFlip(0.02) }
    }
}

/// Run a circuit on a pure state.
pub fn simulate_pure(circuit: &Circuit, initial: &StateVector) -> Result<StateVector> {
    if initial.width() != circuit.width {
        return Err(Error::WidthMismatch { expected: circuit.width, got: initial.width() });
    }
    let mut state = initial.clone();
    for gate in &circuit.gates {
        apply_gate_slice(&mut state.amplitudes, circuit.width, gate, 0);
    }
    debug_assert!((state.norm() - 1.0).abs() < 1e-9);
    Ok(state)
}

fn apply_gate_density(rho: &mut DMatrix<Complex64>, width: usize, gate: &Gate) {
    let dim = rho.nrows();
    // U rho: gate on each column.
    for col in 0..dim {
        let mut column: Vec<Complex64> = rho.column(col).iter().copied().collect();
        apply_gate_slice(&mut column, width, gate, 0);
        for row in 0..dim {
            rho[(row, col)] = column[row];
        }
    }
    // (U rho) U^dagger = (U (U rho)^dagger)^dagger.
    let mut adj = rho.adjoint();
    for col in 0..dim {
        let mut column: Vec<Complex64> = adj.column(col).iter().copied().collect();
        apply_gate_slice(&mut column, width, gate, 0);
        for row in 0..dim {
            adj[(row, col)] = column[row];
        }
    }
    *rho = adj.adjoint();
}

fn depolarize(rho: &mut DMatrix<Complex64>, width: usize, support: &[usize], p: f64) {
    if p == 0.0 || support.is_empty() {
        return;
    }
    let dim = rho.nrows();
    let mask: usize = support.iter().map(|&q| 1usize << (width - 1 - q)).sum();
    let subspace = 1usize << support.len();
    let mut mixed = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            if (i & mask) != (j & mask) {
                continue;
            }
            // Partial trace over the support, re-embedded maximally mixed.
            let mut sum = ZERO;
            let mut w = 0usize;
            loop {
                sum += rho[((i & !mask) | w, (j & !mask) | w)];
                if w == mask {
                    break;
                }
                w = (w.wrapping_sub(mask)) & mask;
            }
            mixed[(i, j)] = sum / subspace as f64;
        }
    }
    *rho = rho.clone() * Complex64::new(1.0 - p, 0.0) + mixed * Complex64::new(p, 0.0);
}

/// Run a circuit on a density matrix, applying the arity-matched depolarizing
/// channel on each gate's support after the gate.
pub fn simulate_density(
    circuit: &Circuit,
    initial: &DensityMatrix,
    noise: &NoiseModel,
) -> Result<DensityMatrix> {
    if initial.width() != circuit.width {
        return Err(Error::WidthMismatch { expected: circuit.width, got: initial.width() });
    }
    noise.validate()?;
    let mut rho = initial.clone();
    for gate in &circuit.gates {
        apply_gate_density(&mut rho.matrix, circuit.width, gate);
        let support = gate.support();
        depolarize(&mut rho.matrix, circuit.width, &support, noise.probability_for_arity(support.len()));
    }
    debug_assert!((rho.matrix.trace() - ONE).norm() < 1e-9);
    Ok(rho)
}

/// Full unitary of a circuit, column by column.
pub fn circuit_unitary(circuit: &Circuit) -> DMatrix<Complex64> {
    let dim = 1usize << circuit.width;
    let mut u = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let state = simulate_pure(circuit, &StateVector::basis_state(circuit.width, col))
            .expect("width matches by construction");
        for row in 0..dim {
            u[(row, col)] = state.amplitudes[row];
        }
    }
    u
}

/// Draw `shots` samples from a distribution pushed through the readout map.
pub fn sample_distribution(
    probs: &[f64],
    shots: u64,
    readout: &ReadoutNoise,
    seed: u64,
) -> Result<Vec<u64>> {
    let width = probs.len().trailing_zeros() as usize;
    readout.validate(width)?;
    let noisy = readout.apply(probs);
    let mut cumulative = Vec::with_capacity(noisy.len());
    let mut acc = 0.0;
    for &p in &noisy {
        acc += p;
        cumulative.push(acc);
    }
    let total = acc;
    let mut counts = vec![0u64; probs.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..shots {
        let draw: f64 = rng.random::<f64>() * total;
        let index = cumulative.partition_point(|&c| c < draw).min(counts.len() - 1);
        counts[index] += 1;
    }
    Ok(counts)
}

/// Shot histogram of a pure state under readout noise.
pub fn sample_counts(
    state: &StateVector,
    shots: u64,
    readout: &ReadoutNoise,
    seed: u64,
) -> Result<Vec<u64>> {
    sample_distribution(&state.probabilities(), shots, readout, seed)
}

/// Expectation of a Pauli-decomposed observable on a pure state.
pub fn expectation(state: &StateVector, observable: &PauliDecomposition) -> Result<f64> {
    if observable.num_qubits != state.width() {
        return Err(Error::WidthMismatch { expected: observable.num_qubits, got: state.width() });
    }
    let mut total = ZERO;
    for (string, &coefficient) in &observable.terms {
        let mut value = ZERO;
        for col in 0..state.amplitudes.len() {
            let (row, phase) = string.column_action(col);
            value += state.amplitudes[row].conj() * phase * state.amplitudes[col];
        }
        total += value * coefficient;
    }
    debug_assert!(total.im.abs() < 1e-10);
    Ok(total.re)
}

/// Expectation of a Pauli-decomposed observable on a density matrix.
pub fn expectation_density(rho: &DensityMatrix, observable: &PauliDecomposition) -> Result<f64> {
    if observable.num_qubits != rho.width() {
        return Err(Error::WidthMismatch { expected: observable.num_qubits, got: rho.width() });
    }
    let mut total = ZERO;
    for (string, &coefficient) in &observable.terms {
        total += string.trace_with(&rho.matrix) * coefficient;
    }
    debug_assert!(total.im.abs() < 1e-10);
    Ok(total.re)
}

/// Parity expectation sum p(x) (-1)^{popcount(x & mask)} of a distribution.
pub fn parity_expectation(probs: &[f64], mask: usize) -> f64 {
    probs
        .iter()
        .enumerate()
        .map(|(x, &p)| if (x & mask).count_ones() % 2 == 0 { p } else { -p })
        .sum()
}

/// Same parity expectation from a shot histogram.
pub fn parity_from_counts(counts: &[u64], mask: usize) -> f64 {
    let shots: u64 = counts.iter().sum();
    if shots == 0 {
        return 0.0;
    }
    counts
        .iter()
        .enumerate()
        .map(|(x, &c)| {
            let signed = if (x & mask).count_ones() % 2 == 0 { c as f64 } else { -(c as f64) };
            signed
        })
        .sum::<f64>()
        / shots as f64
}

/// Index-space mask with the bit of each listed qubit set.
pub fn mask_for_qubits(qubits: &[usize], width: usize) -> usize {
    qubits.iter().map(|&q| 1usize << (width - 1 - q)).sum()
}

/// Index-space mask of the Z factors of a diagonal Pauli string.
pub fn diagonal_mask(string: &crate::pauli::PauliString) -> Result<usize> {
    if !string.is_diagonal() {
        return Err(Error::NotDiagonalObservable { string: string.to_string() });
    }
    let width = string.num_qubits();
    let qubits: Vec<usize> =
        string.indices().iter().enumerate().filter(|(_, &p)| p == 3).map(|(q, _)| q).collect();
    Ok(mask_for_qubits(&qubits, width))
}

/// Eigenvalue of a diagonal observable on each computational basis state.
pub fn diagonal_observable_values(observable: &PauliDecomposition) -> Result<Vec<f64>> {
    let dim = 1usize << observable.num_qubits;
    let mut values = vec![0.0; dim];
    for (string, &coefficient) in &observable.terms {
        let mask = diagonal_mask(string)?;
        for (x, value) in values.iter_mut().enumerate() {
            *value += if (x & mask).count_ones() % 2 == 0 { coefficient } else { -coefficient };
        }
    }
    Ok(values)
}

/// Mean and standard error of per-shot observable values over a histogram.
pub fn mean_and_stderr_from_counts(values: &[f64], counts: &[u64]) -> (f64, f64) {
    let shots: u64 = counts.iter().sum();
    if shots == 0 {
        return (0.0, 0.0);
    }
    let mean = counts
        .iter()
        .zip(values)
        .map(|(&c, &v)| c as f64 * v)
        .sum::<f64>()
        / shots as f64;
    if shots < 2 {
        return (mean, 0.0);
    }
    let variance = counts
        .iter()
        .zip(values)
        .map(|(&c, &v)| c as f64 * (v - mean) * (v - mean))
        .sum::<f64>()
        / (shots as f64 - 1.0);
    (mean, (variance / shots as f64).sqrt())
}
