//! Gate-level circuit representation.
//!
//! Circuits are ordered gate lists over a small register; depth is the layer
//! count of a greedy as-soon-as-possible schedule, which is what unitary
//! folding stretches. Angles are radians; rotation gates follow the
//! exp(-i theta P / 2) convention.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// One gate from the fixed set.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    X(usize),
    Y(usize),
    Z(usize),
    H(usize),
    /// diag(1, e^{i phi}) on one qubit.
    Phase(usize, f64),
    Rx(usize, f64),
    Rz(usize, f64),
    /// Control first, target second.
    Cnot(usize, usize),
    Cy(usize, usize),
    Cz(usize, usize),
    Crx(usize, usize, f64),
    Crz(usize, usize, f64),
    /// Sub-circuit applied when the control qubit is set. The sub-circuit
    /// shares the register indexing and must not touch the control.
    Controlled(usize, Box<Circuit>),
}

impl Gate {
    /// Distinct qubits the gate acts on, sorted.
    pub fn support(&self) -> Vec<usize> {
        let mut qubits = match self {
            Gate::X(q) | Gate::Y(q) | Gate::Z(q) | Gate::H(q) | Gate::Phase(q, _)
            | Gate::Rx(q, _) | Gate::Rz(q, _) => vec![*q],
            Gate::Cnot(c, t) | Gate::Cy(c, t) | Gate::Cz(c, t) | Gate::Crx(c, t, _)
            | Gate::Crz(c, t, _) => vec![*c, *t],
            Gate::Controlled(c, sub) => {
                let mut qs = vec![*c];
                for gate in &sub.gates {
                    qs.extend(gate.support());
                }
                qs
            }
        };
        qubits.sort_unstable();
        qubits.dedup();
        qubits
    }

    /// Number of qubits touched; selects the depolarizing probability.
    pub fn arity(&self) -> usize {
        self.support().len()
    }

    pub fn dagger(&self) -> Gate {
        match self {
            Gate::Phase(q, phi) => Gate::Phase(*q, -phi),
            Gate::Rx(q, theta) => Gate::Rx(*q, -theta),
            Gate::Rz(q, theta) => Gate::Rz(*q, -theta),
            Gate::Crx(c, t, theta) => Gate::Crx(*c, *t, -theta),
            Gate::Crz(c, t, theta) => Gate::Crz(*c, *t, -theta),
            Gate::Controlled(c, sub) => Gate::Controlled(*c, Box::new(sub.dagger())),
            other => other.clone(),
        }
    }

    fn write_line(&self, out: &mut String) {
        use std::fmt::Write;
        match self {
            Gate::X(q) => write!(out, "X {q}"),
            Gate::Y(q) => write!(out, "Y {q}"),
            Gate::Z(q) => write!(out, "Z {q}"),
            Gate::H(q) => write!(out, "H {q}"),
            Gate::Phase(q, phi) => write!(out, "PHASE {q} {phi}"),
            Gate::Rx(q, theta) => write!(out, "RX {q} {theta}"),
            Gate::Rz(q, theta) => write!(out, "RZ {q} {theta}"),
            Gate::Cnot(c, t) => write!(out, "CNOT {c} {t}"),
            Gate::Cy(c, t) => write!(out, "CY {c} {t}"),
            Gate::Cz(c, t) => write!(out, "CZ {c} {t}"),
            Gate::Crx(c, t, theta) => write!(out, "CRX {c} {t} {theta}"),
            Gate::Crz(c, t, theta) => write!(out, "CRZ {c} {t} {theta}"),
            Gate::Controlled(c, sub) => {
                write!(out, "CTRL {c} {{").unwrap();
                for (i, gate) in sub.gates.iter().enumerate() {
                    if i > 0 {
                        write!(out, " ;").unwrap();
                    }
                    out.push(' ');
                    gate.write_line(out);
                }
                write!(out, " }}")
            }
        }
        .unwrap();
    }
}

/// Ordered list of gates on a fixed-width register.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub width: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(width: usize) -> Self {
        Self { width, gates: Vec::new() }
    }

    /// Append a gate. Panics on malformed qubit indices; builders are
    /// expected to produce well-formed gates.
    pub fn push(&mut self, gate: Gate) {
        let support = gate.support();
        assert!(
            support.iter().all(|&q| q < self.width),
            "gate {gate:?} exceeds register width {}",
            self.width
        );
        if let Gate::Cnot(c, t) | Gate::Cy(c, t) | Gate::Cz(c, t) | Gate::Crx(c, t, _)
        | Gate::Crz(c, t, _) = &gate
        {
            assert_ne!(c, t, "control and target coincide");
        }
        if let Gate::Controlled(c, sub) = &gate {
            assert!(!sub.gates.iter().any(|g| g.support().contains(c)));
        }
        self.gates.push(gate);
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) {
        for gate in gates {
            self.push(gate);
        }
    }

    /// Greedy ASAP layering: gate indices per layer.
    pub fn layers(&self) -> Vec<Vec<usize>> {
        let mut last_layer = vec![usize::MAX; self.width];
        let mut layers: Vec<Vec<usize>> = Vec::new();
        for (index, gate) in self.gates.iter().enumerate() {
            let layer = gate
                .support()
                .iter()
                .map(|&q| last_layer[q].wrapping_add(1))
                .max()
                .unwrap_or(0);
            if layer == layers.len() {
                layers.push(Vec::new());
            }
            layers[layer].push(index);
            for q in gate.support() {
                last_layer[q] = layer;
            }
        }
        layers
    }

    pub fn depth(&self) -> usize {
        self.layers().len()
    }

    pub fn dagger(&self) -> Circuit {
        let mut out = Circuit::new(self.width);
        for gate in self.gates.iter().rev() {
            out.push(gate.dagger());
        }
        out
    }

    /// One gate per line: kind, qubits, angle.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for gate in &self.gates {
            gate.write_line(&mut out);
            out.push('\n');
        }
        out
    }

    /// Unitary folding: the circuit becomes V (V'V)^n followed by a partial
    /// fold of its last `s` layers, stretching the depth from d to
    /// (2n+1)d + 2s while leaving the noiseless unitary unchanged.
    pub fn fold(&self, n: usize, s: usize) -> Result<FoldedCircuit> {
        let layers = self.layers();
        let depth = layers.len();
        if s > 0 && s >= depth {
            return Err(Error::FoldTooLong { s, depth });
        }
        let layer_gates: Vec<Vec<Gate>> = layers
            .iter()
            .map(|layer| layer.iter().map(|&i| self.gates[i].clone()).collect())
            .collect();
        let mut circuit = Circuit::new(self.width);
        for layer in &layer_gates {
            circuit.extend(layer.iter().cloned());
        }
        for _ in 0..n {
            for layer in layer_gates.iter().rev() {
                circuit.extend(layer.iter().rev().map(Gate::dagger));
            }
            for layer in &layer_gates {
                circuit.extend(layer.iter().cloned());
            }
        }
        for layer in layer_gates[depth - s.min(depth)..].iter().rev() {
            circuit.extend(layer.iter().rev().map(Gate::dagger));
        }
        for layer in &layer_gates[depth - s.min(depth)..] {
            circuit.extend(layer.iter().cloned());
        }
        let scale = if depth == 0 {
            1.0
        } else {
            1.0 + 2.0 * (n * depth + s) as f64 / depth as f64
        };
        Ok(FoldedCircuit { circuit, scale })
    }
}

/// A folded circuit and its noise-scale factor lambda = 1 + 2k/d.
#[derive(Debug, Clone)]
pub struct FoldedCircuit {
    pub circuit: Circuit,
    pub scale: f64,
}

/// Output of the two-beam interferometer reference model.
#[derive(Debug, Clone)]
pub struct InterferometerOutput {
    pub rho_out: DMatrix<Complex64>,
    /// Probability of detection along the vertical output port.
    pub vertical_intensity: f64,
    /// Fringe visibility |Tr(U rho)|.
    pub visibility: f64,
}

/// Mach-Zehnder interferometer with an internal register: ancilla path states
/// are mixed by beam splitters and mirrors while one arm applies `u_r` to the
/// register, producing interference fringes in phi whose visibility is
/// |Tr(u_r rho_r)|.
pub fn mach_zehnder_reference(
    rho_r: &DMatrix<Complex64>,
    u_r: &DMatrix<Complex64>,
    phi: f64,
) -> Result<InterferometerOutput> {
    let trace = rho_r.trace();
    if (trace - Complex64::new(1.0, 0.0)).norm() > 1e-9 {
        return Err(Error::NotUnitTrace { trace: trace.re });
    }
    let dim = rho_r.nrows();
    let u_rho = u_r * rho_r;
    let u_rho_udag = &u_rho * u_r.adjoint();
    let rho_udag = rho_r * u_r.adjoint();
    let phase = Complex64::from_polar(1.0, phi);

    let block =
        |a: Complex64, b: Complex64, c: Complex64, d: Complex64, m: &DMatrix<Complex64>| {
            let mut out = DMatrix::<Complex64>::zeros(2 * dim, 2 * dim);
            out.view_mut((0, 0), (dim, dim)).copy_from(&(m * a));
            out.view_mut((0, dim), (dim, dim)).copy_from(&(m * b));
            out.view_mut((dim, 0), (dim, dim)).copy_from(&(m * c));
            out.view_mut((dim, dim), (dim, dim)).copy_from(&(m * d));
            out
        };
    let one = Complex64::new(1.0, 0.0);
    let quarter = Complex64::new(0.25, 0.0);
    let rho_out = (block(one, one, one, one, &u_rho_udag)
        + block(one, -one, -one, one, rho_r)
        + block(phase, phase, -phase, -phase, &rho_udag)
        + block(phase.conj(), -phase.conj(), phase.conj(), -phase.conj(), &u_rho))
        * quarter;

    let interference = u_rho.trace();
    let visibility = interference.norm();
    let vertical_intensity = 0.5 * (1.0 + visibility * (phi - interference.arg()).cos());
    Ok(InterferometerOutput { rho_out, vertical_intensity, visibility })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sample_circuit() -> Circuit {
        let mut c = Circuit::new(3);
        c.push(Gate::H(0));
        c.push(Gate::H(1));
        c.push(Gate::Cnot(0, 1));
        c.push(Gate::Rx(2, 0.3));
        c.push(Gate::Cz(1, 2));
        c.push(Gate::Rz(0, -0.25));
        c
    }

    #[test]
    fn layering_packs_disjoint_gates() {
        let c = sample_circuit();
        let layers = c.layers();
        assert_eq!(layers.len(), 3);
        assert_eq!(layers[0], vec![0, 1, 3]);
        assert_eq!(layers[1], vec![2]);
        assert_eq!(layers[2], vec![4, 5]);
        assert_eq!(c.depth(), 3);
    }

    #[test]
    fn folding_arithmetic() {
        let mut c = Circuit::new(1);
        for _ in 0..4 {
            c.push(Gate::H(0));
        }
        assert_eq!(c.depth(), 4);
        let folded = c.fold(1, 0).unwrap();
        assert_eq!(folded.circuit.depth(), 12);
        assert_abs_diff_eq!(folded.scale, 3.0);

        let unchanged = c.fold(0, 0).unwrap();
        assert_eq!(unchanged.circuit, c);
        assert_abs_diff_eq!(unchanged.scale, 1.0);

        let mut ten = Circuit::new(1);
        for _ in 0..10 {
            ten.push(Gate::Rx(0, 0.1));
        }
        let partial = ten.fold(0, 2).unwrap();
        assert_eq!(partial.circuit.depth(), 14);
        assert_abs_diff_eq!(partial.scale, 1.4);

        assert!(matches!(ten.fold(0, 10), Err(Error::FoldTooLong { .. })));
    }

    #[test]
    fn fold_depth_is_exact_on_multiqubit_circuits() {
        let c = sample_circuit();
        let d = c.depth();
        for (n, s) in [(0usize, 0usize), (1, 0), (2, 1), (0, 2), (3, 2)] {
            let folded = c.fold(n, s).unwrap();
            assert_eq!(folded.circuit.depth(), (2 * n + 1) * d + 2 * s, "n={n} s={s}");
        }
    }

    #[test]
    fn dagger_reverses_and_negates() {
        let c = sample_circuit();
        let d = c.dagger();
        assert_eq!(d.gates.len(), c.gates.len());
        assert_eq!(d.gates[0], Gate::Rz(0, 0.25));
        assert_eq!(d.gates.last().unwrap(), &Gate::H(0));
    }

    #[test]
    fn text_serialization() {
        let mut c = Circuit::new(4);
        c.push(Gate::X(1));
        c.push(Gate::Rx(0, 0.5));
        c.push(Gate::Phase(3, -0.25));
        let mut sub = Circuit::new(4);
        sub.push(Gate::Y(1));
        sub.push(Gate::Z(2));
        c.push(Gate::Controlled(3, Box::new(sub)));
        assert_eq!(c.to_text(), "X 1\nRX 0 0.5\nPHASE 3 -0.25\nCTRL 3 { Y 1 ; Z 2 }\n");
    }

    #[test]
    fn interferometer_identity_arm() {
        let mut rho = DMatrix::<Complex64>::zeros(2, 2);
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
        let eye = DMatrix::<Complex64>::identity(2, 2);
        let out = mach_zehnder_reference(&rho, &eye, 0.0).unwrap();
        assert_abs_diff_eq!(out.vertical_intensity, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.visibility, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.rho_out.trace().re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn interferometer_visibility_of_pure_state() {
        // |psi> = |0>, U = Rx(theta): v = |cos(theta/2)|.
        let theta = 0.8f64;
        let mut rho = DMatrix::<Complex64>::zeros(2, 2);
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
        let mut u = DMatrix::<Complex64>::zeros(2, 2);
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        u[(0, 0)] = Complex64::new(c, 0.0);
        u[(0, 1)] = Complex64::new(0.0, -s);
        u[(1, 0)] = Complex64::new(0.0, -s);
        u[(1, 1)] = Complex64::new(c, 0.0);
        let out = mach_zehnder_reference(&rho, &u, 0.3).unwrap();
        assert_abs_diff_eq!(out.visibility, c.abs(), epsilon = 1e-12);
    }

    #[test]
    fn interferometer_rejects_unnormalized_state() {
        let rho = DMatrix::<Complex64>::identity(2, 2);
        let eye = DMatrix::<Complex64>::identity(2, 2);
        assert!(matches!(mach_zehnder_reference(&rho, &eye, 0.0), Err(Error::NotUnitTrace { .. })));
    }
}
