//! Trotter-step and correlation-circuit compilers for the optimally embedded
//! three-qubit vacuum-sector Hamiltonian.
//!
//! The step circuit is a fixed template over the 15 Pauli strings of the
//! optimal embedding, grouped into a single-qubit block, three two-qubit
//! blocks and two three-qubit blocks. Every rotation angle is 2 c_P dt for
//! the corresponding coefficient, so the same template serves any coupling
//! values; the identity coefficient contributes only a global phase and is
//! dropped.

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::pauli::{PauliDecomposition, PauliString};

/// Strings the step template can realize. Anything else in the decomposition
/// signals an incompatible embedding.
const TEMPLATE_STRINGS: [[u8; 3]; 15] = [
    [1, 0, 0],
    [0, 3, 0],
    [0, 0, 1],
    [0, 0, 3],
    [0, 1, 1],
    [0, 2, 2],
    [0, 3, 3],
    [0, 3, 1],
    [1, 0, 3],
    [3, 0, 1],
    [3, 0, 3],
    [3, 3, 0],
    [3, 3, 1],
    [3, 1, 1],
    [3, 2, 2],
];

fn validate_template(coefficients: &PauliDecomposition) -> Result<()> {
    if coefficients.num_qubits != 3 {
        return Err(Error::WidthMismatch { expected: 3, got: coefficients.num_qubits });
    }
    for (string, _) in coefficients.non_identity_terms() {
        if !TEMPLATE_STRINGS.iter().any(|t| t == string.indices()) {
            return Err(Error::TemplateMismatch { string: string.to_string() });
        }
    }
    // The last block applies one angle to both ZXX and ZYY, which must come
    // with opposite coefficients (they do for every coupling of this model).
    let c311 = coefficients.coefficient(&[3, 1, 1]);
    let c322 = coefficients.coefficient(&[3, 2, 2]);
    if (c311 + c322).abs() > 1e-10 {
        return Err(Error::TemplateMismatch { string: "ZYY".into() });
    }
    Ok(())
}

fn push_step_gates(circuit: &mut Circuit, coefficients: &PauliDecomposition, dt: f64) {
    let angle = |indices: &[u8]| 2.0 * coefficients.coefficient(indices) * dt;

    // Single-qubit block.
    circuit.push(Gate::Rx(0, angle(&[1, 0, 0])));
    circuit.push(Gate::Rz(1, angle(&[0, 3, 0])));
    circuit.push(Gate::Rx(2, angle(&[0, 0, 1])));
    circuit.push(Gate::Rz(2, angle(&[0, 0, 3])));

    // XX + YY + ZZ on qubits 1, 2.
    circuit.push(Gate::Cnot(1, 2));
    circuit.push(Gate::Rx(1, angle(&[0, 1, 1])));
    circuit.push(Gate::Cz(1, 2));
    circuit.push(Gate::Rx(1, -angle(&[0, 2, 2])));
    circuit.push(Gate::Cz(1, 2));
    circuit.push(Gate::Rz(2, angle(&[0, 3, 3])));
    circuit.push(Gate::Cnot(1, 2));

    // ZX on qubits 1, 2 and XZ on qubits 0, 2.
    circuit.push(Gate::Cy(1, 2));
    circuit.push(Gate::Rx(2, angle(&[0, 3, 1])));
    circuit.push(Gate::Cy(1, 2));
    circuit.push(Gate::H(0));
    circuit.push(Gate::H(2));
    circuit.push(Gate::Cy(0, 2));
    circuit.push(Gate::Rx(2, angle(&[1, 0, 3])));
    circuit.push(Gate::Cy(0, 2));
    circuit.push(Gate::H(0));
    circuit.push(Gate::H(2));

    // ZX and ZZ on qubits 0, 2 plus ZZ on qubits 0, 1.
    circuit.push(Gate::Cy(0, 2));
    circuit.push(Gate::Rx(2, angle(&[3, 0, 1])));
    circuit.push(Gate::Cy(0, 2));
    circuit.push(Gate::Cnot(0, 2));
    circuit.push(Gate::Rz(2, angle(&[3, 0, 3])));
    circuit.push(Gate::Cnot(0, 2));
    circuit.push(Gate::Cnot(0, 1));
    circuit.push(Gate::Rz(1, angle(&[3, 3, 0])));
    circuit.push(Gate::Cnot(0, 1));

    // ZZX.
    circuit.push(Gate::Cnot(0, 1));
    circuit.push(Gate::Cy(1, 2));
    circuit.push(Gate::Rx(2, angle(&[3, 3, 1])));
    circuit.push(Gate::Cy(1, 2));
    circuit.push(Gate::Cnot(0, 1));

    // ZXX - ZYY pair.
    circuit.push(Gate::Cnot(1, 2));
    circuit.push(Gate::H(1));
    circuit.push(Gate::Cnot(0, 1));
    circuit.push(Gate::Cnot(1, 2));
    circuit.push(Gate::Rz(1, angle(&[3, 1, 1])));
    circuit.push(Gate::Rz(2, angle(&[3, 1, 1])));
    circuit.push(Gate::Cnot(1, 2));
    circuit.push(Gate::Cnot(0, 1));
    circuit.push(Gate::H(1));
    circuit.push(Gate::Cnot(1, 2));
}

/// One first-order Trotter step exp(-i H dt) for the embedded Hamiltonian.
pub fn trotter_step(coefficients: &PauliDecomposition, dt: f64) -> Result<Circuit> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidTimeStep { dt });
    }
    validate_template(coefficients)?;
    let mut circuit = Circuit::new(3);
    push_step_gates(&mut circuit, coefficients, dt);
    Ok(circuit)
}

/// Number of Trotter steps for time t, requiring t on the dt grid.
pub fn steps_on_grid(t: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidTimeStep { dt });
    }
    if t < 0.0 || !t.is_finite() {
        return Err(Error::OffTimeGrid { t, dt });
    }
    let ratio = t / dt;
    if (ratio - ratio.round()).abs() > 1e-9 {
        return Err(Error::OffTimeGrid { t, dt });
    }
    Ok(ratio.round() as usize)
}

fn push_preparation(circuit: &mut Circuit, vacuum_index: usize, register_width: usize) {
    for q in 0..register_width {
        if vacuum_index & (1usize << (register_width - 1 - q)) != 0 {
            circuit.push(Gate::X(q));
        }
    }
}

/// Vacuum preparation followed by round(t/dt) Trotter steps.
pub fn compile_evolution(
    coefficients: &PauliDecomposition,
    vacuum_index: usize,
    t: f64,
    dt: f64,
    prepare_vacuum: bool,
) -> Result<Circuit> {
    let steps = steps_on_grid(t, dt)?;
    validate_template(coefficients)?;
    let mut circuit = Circuit::new(3);
    if prepare_vacuum {
        push_preparation(&mut circuit, vacuum_index, 3);
    }
    for _ in 0..steps {
        push_step_gates(&mut circuit, coefficients, dt);
    }
    Ok(circuit)
}

/// Index of the ancilla qubit in correlation circuits.
pub const ANCILLA: usize = 3;

fn push_controlled_string(circuit: &mut Circuit, string: &PauliString) {
    for (q, &p) in string.indices().iter().enumerate() {
        match p {
            0 => {}
            1 => circuit.push(Gate::Cnot(ANCILLA, q)),
            2 => circuit.push(Gate::Cy(ANCILLA, q)),
            3 => circuit.push(Gate::Cz(ANCILLA, q)),
            _ => unreachable!(),
        }
    }
}

/// Ancilla interferometric circuit whose Z readout on the ancilla is
/// Re{ e^{-i phi} <vac| U^dag(t) P_alpha U(t-s) P_beta U(s) |vac> }.
///
/// The register (qubits 0-2) is prepared in the embedded vacuum and evolved
/// without controls; only the two Pauli strings are ancilla-controlled, the
/// first one inside an X sandwich that flips the controlling branch.
#[allow(clippy::too_many_arguments)]
pub fn green_circuit(
    coefficients: &PauliDecomposition,
    vacuum_index: usize,
    t: f64,
    s: f64,
    dt: f64,
    p_alpha: &PauliString,
    p_beta: &PauliString,
    phi: f64,
) -> Result<Circuit> {
    if s > t {
        return Err(Error::TimeOrdering { t, s });
    }
    let steps_s = steps_on_grid(s, dt)?;
    let steps_rest = steps_on_grid(t - s, dt)?;
    validate_template(coefficients)?;
    if p_alpha.num_qubits() != 3 || p_beta.num_qubits() != 3 {
        return Err(Error::WidthMismatch {
            expected: 3,
            got: p_alpha.num_qubits().max(p_beta.num_qubits()),
        });
    }
    let mut circuit = Circuit::new(4);
    push_preparation(&mut circuit, vacuum_index, 3);
    circuit.push(Gate::H(ANCILLA));
    circuit.push(Gate::Phase(ANCILLA, phi));
    for _ in 0..steps_s {
        push_step_gates(&mut circuit, coefficients, dt);
    }
    circuit.push(Gate::X(ANCILLA));
    push_controlled_string(&mut circuit, p_beta);
    circuit.push(Gate::X(ANCILLA));
    for _ in 0..steps_rest {
        push_step_gates(&mut circuit, coefficients, dt);
    }
    push_controlled_string(&mut circuit, p_alpha);
    circuit.push(Gate::H(ANCILLA));
    Ok(circuit)
}
