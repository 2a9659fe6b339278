//! Particle-density observable and the lesser Green function, evaluated
//! either densely (oracles) or from ancilla-circuit measurements.
//!
//! The density operator nu is diagonal with eigenvalue d0 = Tr(nu)/2^M on the
//! identity string; writing nu = d0 I + sum_a P_a with coefficient-weighted
//! strings P_a, the two-time correlator expands into two density expectations
//! plus a sum over string pairs, each pair measured by two runs of the
//! ancilla circuit (phases 0 and pi/2 reading out real and imaginary parts).

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::mitigation::{
    trex_calibrate, twirled_diagonal_measurement, zne_pipeline, FitModel, TrexCalibration,
    ZneConfig,
};
use crate::model::EmbeddedModel;
use crate::pauli::{PauliDecomposition, PauliString};
use crate::rng::stream_seed;
use crate::sim::{
    diagonal_observable_values, mean_and_stderr_from_counts, sample_distribution,
    simulate_density, simulate_pure, DensityMatrix, NoiseModel, ReadoutNoise, StateVector,
};
use crate::trotter::{self, ANCILLA};

/// Diagonal particle-density operator in the embedded basis.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    pub decomposition: PauliDecomposition,
}

impl DensityOperator {
    pub fn new(decomposition: PauliDecomposition) -> Result<Self> {
        for (string, _) in decomposition.terms.iter() {
            if !string.is_diagonal() {
                return Err(Error::NotDiagonalObservable { string: string.to_string() });
            }
        }
        Ok(Self { decomposition })
    }

    pub fn identity_coefficient(&self) -> f64 {
        self.decomposition.identity_coefficient()
    }

    /// The coefficient-weighted non-identity strings.
    pub fn pauli_terms(&self) -> Vec<(PauliString, f64)> {
        self.decomposition.non_identity_terms().map(|(s, c)| (s.clone(), c)).collect()
    }
}

/// T-REx settings: twirl count and calibration shot budget (0 = exact
/// expectation-value calibration).
#[derive(Debug, Clone)]
pub struct TrexOptions {
    pub num_twirls: usize,
    pub calibration_shots: u64,
}

impl Default for TrexOptions {
    fn default() -> Self {
        Self { num_twirls: 16, calibration_shots: 0 }
    }
}

/// ZNE settings: fold scales and extrapolation model.
#[derive(Debug, Clone)]
pub struct ZneOptions {
    pub scales: Vec<f64>,
    pub model: FitModel,
}

impl Default for ZneOptions {
    fn default() -> Self {
        Self { scales: vec![1.0, 3.0, 5.0], model: FitModel::Auto }
    }
}

#[derive(Debug, Clone)]
pub enum MitigationChoice {
    None,
    Trex(TrexOptions),
    Zne(ZneOptions),
}

/// How to execute compiled circuits: Trotter step, optional gate/readout
/// noise, optional shot sampling, mitigation.
#[derive(Debug, Clone)]
pub struct CircuitRun {
    pub dt: f64,
    pub noise: Option<NoiseModel>,
    pub shots: Option<u64>,
    pub seed: u64,
    pub mitigation: MitigationChoice,
    /// Compile correlation circuits with PHASE(-phi) instead of PHASE(phi);
    /// the assembly compensates, so results are convention-independent.
    pub conjugate_phase: bool,
}

impl CircuitRun {
    /// Noiseless expectation-value execution.
    pub fn expectation(dt: f64) -> Self {
        Self {
            dt,
            noise: None,
            shots: None,
            seed: 0,
            mitigation: MitigationChoice::None,
            conjugate_phase: false,
        }
    }

    fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    fn readout(&self) -> ReadoutNoise {
        self.noise.as_ref().map(|n| n.readout.clone()).unwrap_or_else(ReadoutNoise::ideal)
    }
}

fn final_probabilities(circuit: &Circuit, run: &CircuitRun) -> Result<Vec<f64>> {
    match &run.noise {
        None => {
            Ok(simulate_pure(circuit, &StateVector::zero_state(circuit.width))?.probabilities())
        }
        Some(noise) => {
            let initial = DensityMatrix::from_pure(&StateVector::zero_state(circuit.width));
            Ok(simulate_density(circuit, &initial, noise)?.probabilities())
        }
    }
}

/// Calibrate the twirled readout for circuits of the given width when the
/// run uses T-REx.
pub fn prepare_trex_calibration(width: usize, run: &CircuitRun) -> Result<Option<TrexCalibration>> {
    match &run.mitigation {
        MitigationChoice::Trex(options) => {
            let calibration = trex_calibrate(
                width,
                options.num_twirls,
                options.calibration_shots,
                &run.readout(),
                stream_seed(run.seed, 0x40 + width as u64),
            )?;
            Ok(Some(calibration))
        }
        _ => Ok(None),
    }
}

/// Measure a diagonal observable at the end of a circuit under the run's
/// noise, shot and mitigation settings. Returns (value, stderr).
pub fn measure_diagonal_observable(
    circuit: &Circuit,
    observable: &PauliDecomposition,
    run: &CircuitRun,
    calibration: Option<&TrexCalibration>,
) -> Result<(f64, f64)> {
    match &run.mitigation {
        MitigationChoice::Zne(options) => {
            let noise = run.noise.clone().unwrap_or_else(NoiseModel::noiseless);
            let config = ZneConfig { scales: options.scales.clone(), model: options.model.clone() };
            let outcome = zne_pipeline(
                circuit,
                observable,
                &config,
                &noise,
                run.shots,
                stream_seed(run.seed, 0x30),
            )?;
            Ok((outcome.fit.value, outcome.fit.stderr))
        }
        MitigationChoice::Trex(options) => {
            let probs = final_probabilities(circuit, run)?;
            let owned;
            let calibration = match calibration {
                Some(c) => c,
                None => {
                    owned = prepare_trex_calibration(circuit.width, run)?
                        .expect("Trex mitigation yields a calibration");
                    &owned
                }
            };
            twirled_diagonal_measurement(
                &probs,
                observable,
                &run.readout(),
                calibration,
                options.num_twirls,
                run.shots,
                stream_seed(run.seed, 0x20),
            )
        }
        MitigationChoice::None => {
            let probs = final_probabilities(circuit, run)?;
            let values = diagonal_observable_values(observable)?;
            match run.shots {
                None => {
                    let measured = run.readout().apply(&probs);
                    let value = measured.iter().zip(&values).map(|(&p, &v)| p * v).sum();
                    Ok((value, 0.0))
                }
                Some(shots) => {
                    let counts = sample_distribution(
                        &probs,
                        shots,
                        &run.readout(),
                        stream_seed(run.seed, 0x10),
                    )?;
                    Ok(mean_and_stderr_from_counts(&values, &counts))
                }
            }
        }
    }
}

/// Backend for the particle-density time series.
#[derive(Debug, Clone)]
pub enum DensityMethod {
    /// Dense exp(-iHt) evolution.
    Exact,
    /// Compiled Trotter circuits under the given run settings.
    Circuit(CircuitRun),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub t: f64,
    pub value: f64,
    pub stderr: f64,
}

/// Particle-density expectation over a time grid.
pub fn density_series(
    model: &EmbeddedModel,
    times: &[f64],
    method: &DensityMethod,
) -> Result<Vec<SeriesPoint>> {
    match method {
        DensityMethod::Exact => Ok(times
            .iter()
            .map(|&t| SeriesPoint { t, value: model.exact_density_expectation(t), stderr: 0.0 })
            .collect()),
        DensityMethod::Circuit(run) => {
            let calibration = prepare_trex_calibration(model.num_qubits, run)?;
            times
                .par_iter()
                .enumerate()
                .map(|(index, &t)| {
                    let task = run.with_seed(stream_seed(run.seed, index as u64));
                    let circuit = model.evolution_circuit(t, run.dt, true)?;
                    let (value, stderr) = measure_diagonal_observable(
                        &circuit,
                        &model.density.decomposition,
                        &task,
                        calibration.as_ref(),
                    )?;
                    Ok(SeriesPoint { t, value, stderr })
                })
                .collect()
        }
    }
}

/// Backend for the lesser Green function.
#[derive(Debug, Clone)]
pub enum GreenMethod {
    /// Dense evolution without Trotterization.
    Exact,
    /// Ancilla-circuit evaluation under the given run settings.
    Circuit(CircuitRun),
}

/// One evaluated Green-function point.
#[derive(Debug, Clone)]
pub struct GreenPoint {
    pub t: f64,
    pub s: f64,
    pub value: Complex64,
    pub stderr_re: f64,
    pub stderr_im: f64,
}

fn vacuum_vector(model: &EmbeddedModel) -> DVector<Complex64> {
    let dim = model.hamiltonian.nrows();
    let mut v = DVector::zeros(dim);
    v[model.vacuum_index] = Complex64::new(1.0, 0.0);
    v
}

/// Dense-evolution reference: -i <vac| nu(t) nu(s) |vac> for t >= s >= 0.
pub fn exact_green_oracle(model: &EmbeddedModel, t: f64, s: f64) -> Result<Complex64> {
    if s > t || s < 0.0 {
        return Err(Error::TimeOrdering { t, s });
    }
    let nu = model.density_matrix_operator();
    let vac = vacuum_vector(model);
    let ket = model.evolve_exact(&(nu * model.evolve_exact(&vac, s)), t - s);
    let bra = model.evolve_exact(&vac, t);
    let value = (bra.adjoint() * nu * ket)[(0, 0)];
    Ok(Complex64::new(0.0, -1.0) * value)
}

/// The reverse-ordered companion term +i <vac| nu(s) nu(t) |vac>, exposed for
/// the anticommutator cross-check.
pub fn greater_green_oracle(model: &EmbeddedModel, t: f64, s: f64) -> Result<Complex64> {
    if s > t || s < 0.0 {
        return Err(Error::TimeOrdering { t, s });
    }
    let nu = model.density_matrix_operator();
    let vac = vacuum_vector(model);
    // <vac| nu(s) nu(t) |vac> = (<vac| U+(s) nu U(s-t)) nu U(t) |vac>.
    let bra_side = model.evolve_exact(&(nu * model.evolve_exact(&vac, s)), t - s);
    let ket_side = nu * model.evolve_exact(&vac, t);
    let value = (bra_side.adjoint() * ket_side)[(0, 0)];
    Ok(Complex64::new(0.0, 1.0) * value)
}

/// Same sandwich as the exact oracle but with the Trotter-step unitary, which
/// is what the circuit path realizes in expectation mode.
pub fn trotter_green_oracle(
    model: &EmbeddedModel,
    t: f64,
    s: f64,
    dt: f64,
) -> Result<Complex64> {
    if s > t || s < 0.0 {
        return Err(Error::TimeOrdering { t, s });
    }
    let steps_s = trotter::steps_on_grid(s, dt)?;
    let steps_rest = trotter::steps_on_grid(t - s, dt)?;
    let step = model.trotter_unitary(dt)?;
    let nu = model.density_matrix_operator();
    let mut ket = vacuum_vector(model);
    for _ in 0..steps_s {
        ket = &step * ket;
    }
    ket = nu * ket;
    for _ in 0..steps_rest {
        ket = &step * ket;
    }
    let mut bra = vacuum_vector(model);
    for _ in 0..(steps_s + steps_rest) {
        bra = &step * bra;
    }
    let value = (bra.adjoint() * nu * ket)[(0, 0)];
    Ok(Complex64::new(0.0, -1.0) * value)
}

fn ancilla_z_observable() -> PauliDecomposition {
    let mut observable = PauliDecomposition::empty(4);
    observable.terms.insert(PauliString::new(vec![0, 0, 0, 3]), 1.0);
    observable
}

/// Lesser Green function G<(t, s).
///
/// The circuit path runs two density circuits and, per string pair, two
/// ancilla circuits (phi = 0 for the real part of the pair element, phi =
/// pi/2 for the imaginary part), then assembles
/// -i [ d0 (nu(t) + nu(s)) - d0^2 + sum_ab c_a c_b M_ab ].
pub fn lesser_green(
    model: &EmbeddedModel,
    t: f64,
    s: f64,
    method: &GreenMethod,
) -> Result<GreenPoint> {
    if s > t || s < 0.0 {
        return Err(Error::TimeOrdering { t, s });
    }
    match method {
        GreenMethod::Exact => {
            let value = exact_green_oracle(model, t, s)?;
            Ok(GreenPoint { t, s, value, stderr_re: 0.0, stderr_im: 0.0 })
        }
        GreenMethod::Circuit(run) => {
            let register_calibration = prepare_trex_calibration(model.num_qubits, run)?;
            let ancilla_calibration = prepare_trex_calibration(model.num_qubits + 1, run)?;
            let nu_observable = &model.density.decomposition;

            let run_t = run.with_seed(stream_seed(run.seed, 0));
            let circuit_t = model.evolution_circuit(t, run.dt, true)?;
            let (nu_t, sigma_t) = measure_diagonal_observable(
                &circuit_t,
                nu_observable,
                &run_t,
                register_calibration.as_ref(),
            )?;
            let run_s = run.with_seed(stream_seed(run.seed, 1));
            let circuit_s = model.evolution_circuit(s, run.dt, true)?;
            let (nu_s, sigma_s) = measure_diagonal_observable(
                &circuit_s,
                nu_observable,
                &run_s,
                register_calibration.as_ref(),
            )?;

            let terms = model.density.pauli_terms();
            let z_ancilla = ancilla_z_observable();
            let phase_sign = if run.conjugate_phase { -1.0 } else { 1.0 };
            let mut tasks = Vec::new();
            for (a, (string_a, coeff_a)) in terms.iter().enumerate() {
                for (b, (string_b, coeff_b)) in terms.iter().enumerate() {
                    for (phase_index, phi) in [0.0, std::f64::consts::FRAC_PI_2]
                        .into_iter()
                        .enumerate()
                    {
                        let task_index = (a * terms.len() + b) * 2 + phase_index;
                        tasks.push((
                            task_index,
                            string_a.clone(),
                            string_b.clone(),
                            *coeff_a * *coeff_b,
                            phase_sign * phi,
                        ));
                    }
                }
            }
            let measured: Vec<(f64, f64, f64)> = tasks
                .par_iter()
                .map(|(task_index, string_a, string_b, weight, phi)| {
                    let task = run.with_seed(stream_seed(run.seed, 2 + *task_index as u64));
                    let circuit = trotter::green_circuit(
                        &model.coefficients,
                        model.vacuum_index,
                        t,
                        s,
                        run.dt,
                        string_a,
                        string_b,
                        *phi,
                    )?;
                    let (value, stderr) = measure_diagonal_observable(
                        &circuit,
                        &z_ancilla,
                        &task,
                        ancilla_calibration.as_ref(),
                    )?;
                    Ok((*weight, value, stderr))
                })
                .collect::<Result<_>>()?;

            let d0 = model.density.identity_coefficient();
            let mut bracket_re = d0 * (nu_t + nu_s) - d0 * d0;
            let mut bracket_im = 0.0;
            let mut var_re = d0 * d0 * (sigma_t * sigma_t + sigma_s * sigma_s);
            let mut var_im = 0.0;
            for (task, (weight, value, stderr)) in tasks.iter().zip(&measured) {
                let phase_index = task.0 % 2;
                let contribution = weight * value;
                let variance = (weight * stderr) * (weight * stderr);
                if phase_index == 0 {
                    bracket_re += contribution;
                    var_re += variance;
                } else {
                    // With PHASE(-phi) the phi = pi/2 run reads -Im instead.
                    bracket_im += phase_sign * contribution;
                    var_im += variance;
                }
            }
            // G = -i (bracket_re + i bracket_im).
            let value = Complex64::new(bracket_im, -bracket_re);
            Ok(GreenPoint {
                t,
                s,
                value,
                stderr_re: var_im.sqrt(),
                stderr_im: var_re.sqrt(),
            })
        }
    }
}

/// Expectation-readout mask of the ancilla qubit in Green circuits.
pub fn ancilla_mask() -> usize {
    crate::sim::mask_for_qubits(&[ANCILLA], 4)
}
