//! Twirled readout error extinction (T-REx) and zero-noise extrapolation.
//!
//! Random bit flips applied around the measurement diagonalize the readout
//! confusion map; its eigenvalue lambda_w on the parity vector of mask w is
//! estimated on the all-zeros state and later divides measured Z_w
//! expectations. Twirl flips are realized as a relabelling of the confusion
//! map (the flip gates themselves are treated as noiseless), keeping gate
//! noise out of the measurement twirl.
//!
//! ZNE amplifies gate noise by unitary folding at scales lambda = 1 + 2k/d
//! and extrapolates the observable back to lambda = 0.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::pauli::PauliDecomposition;
use crate::rng::stream_seed;
use crate::sim::{
    diagonal_mask, diagonal_observable_values, mean_and_stderr_from_counts, parity_expectation,
    sample_distribution, simulate_density, DensityMatrix, NoiseModel, ReadoutNoise, StateVector,
};

/// Below this calibration eigenvalue, division amplifies noise beyond use.
pub const LAMBDA_FLOOR: f64 = 0.05;

/// Estimated twirled-readout eigenvalues, one per Z mask.
#[derive(Debug, Clone)]
pub struct TrexCalibration {
    pub width: usize,
    /// lambda_w indexed by the index-space mask w.
    pub lambdas: Vec<f64>,
    /// Standard error of each estimate over the twirl batches.
    pub stderrs: Vec<f64>,
    pub num_twirls: usize,
    pub shots_per_twirl: u64,
    pub seed: u64,
}

impl TrexCalibration {
    pub fn lambda(&self, mask: usize) -> f64 {
        self.lambdas[mask]
    }
}

fn twirled_readout_distribution(probs: &[f64], readout: &ReadoutNoise, twirl: usize) -> Vec<f64> {
    let dim = probs.len();
    // X_s before measurement permutes the true distribution; the classical
    // XOR after measurement permutes it back.
    let mut flipped = vec![0.0; dim];
    for x in 0..dim {
        flipped[x] = probs[x ^ twirl];
    }
    let measured = readout.apply(&flipped);
    let mut relabelled = vec![0.0; dim];
    for x in 0..dim {
        relabelled[x] = measured[x ^ twirl];
    }
    relabelled
}

fn batch_stats(batches: &[f64]) -> (f64, f64) {
    let n = batches.len() as f64;
    let mean = batches.iter().sum::<f64>() / n;
    if batches.len() < 2 {
        return (mean, 0.0);
    }
    let variance = batches.iter().map(|b| (b - mean) * (b - mean)).sum::<f64>() / (n - 1.0);
    (mean, (variance / n).sqrt())
}

/// Estimate every lambda_w on the all-zeros state, averaging over uniformly
/// random twirl masks. `shots` = 0 runs in expectation-value mode; otherwise
/// the shot budget is split evenly across twirls.
pub fn trex_calibrate(
    width: usize,
    num_twirls: usize,
    shots: u64,
    readout: &ReadoutNoise,
    seed: u64,
) -> Result<TrexCalibration> {
    readout.validate(width)?;
    let num_twirls = num_twirls.max(1);
    let dim = 1usize << width;
    let shots_per_twirl = if shots == 0 { 0 } else { (shots / num_twirls as u64).max(1) };
    let mut zero = vec![0.0; dim];
    zero[0] = 1.0;

    let mut mask_rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, 0));
    let mut batches: Vec<Vec<f64>> = vec![Vec::with_capacity(num_twirls); dim];
    for twirl_index in 0..num_twirls {
        let twirl = mask_rng.random_range(0..dim);
        let distribution = twirled_readout_distribution(&zero, readout, twirl);
        if shots_per_twirl == 0 {
            for (w, batch) in batches.iter_mut().enumerate() {
                batch.push(parity_expectation(&distribution, w));
            }
        } else {
            let counts = sample_distribution(
                &distribution,
                shots_per_twirl,
                &ReadoutNoise::ideal(),
                stream_seed(seed, 1 + twirl_index as u64),
            )?;
            for (w, batch) in batches.iter_mut().enumerate() {
                batch.push(crate::sim::parity_from_counts(&counts, w));
            }
        }
    }
    let mut lambdas = Vec::with_capacity(dim);
    let mut stderrs = Vec::with_capacity(dim);
    for batch in &batches {
        let (mean, stderr) = batch_stats(batch);
        lambdas.push(mean);
        stderrs.push(stderr);
    }
    Ok(TrexCalibration { width, lambdas, stderrs, num_twirls, shots_per_twirl, seed })
}

/// Undo the twirled-readout attenuation of a Z_w expectation.
pub fn trex_mitigate(raw: f64, calibration: &TrexCalibration, mask: usize) -> Result<f64> {
    let lambda = calibration.lambda(mask);
    if lambda.abs() < LAMBDA_FLOOR {
        return Err(Error::LambdaBelowFloor { mask, lambda });
    }
    Ok(raw / lambda)
}

/// Twirled, mitigated measurement of a diagonal observable given the final
/// pre-measurement distribution. Returns (value, stderr over twirl batches).
pub fn twirled_diagonal_measurement(
    probs: &[f64],
    observable: &PauliDecomposition,
    readout: &ReadoutNoise,
    calibration: &TrexCalibration,
    num_twirls: usize,
    shots: Option<u64>,
    seed: u64,
) -> Result<(f64, f64)> {
    let num_twirls = num_twirls.max(1);
    let dim = probs.len();
    let masks: Vec<(usize, f64)> = observable
        .non_identity_terms()
        .map(|(string, c)| diagonal_mask(string).map(|m| (m, c)))
        .collect::<Result<_>>()?;
    let offset = observable.identity_coefficient();
    for (mask, _) in &masks {
        // Fail fast on unrecoverable masks.
        let lambda = calibration.lambda(*mask);
        if lambda.abs() < LAMBDA_FLOOR {
            return Err(Error::LambdaBelowFloor { mask: *mask, lambda });
        }
    }
    let shots_per_twirl = shots.map(|s| (s / num_twirls as u64).max(1));
    let mut mask_rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, 0));
    let mut batches = Vec::with_capacity(num_twirls);
    for twirl_index in 0..num_twirls {
        let twirl = mask_rng.random_range(0..dim);
        let distribution = twirled_readout_distribution(probs, readout, twirl);
        let mut value = offset;
        match shots_per_twirl {
            None => {
                for &(mask, coefficient) in &masks {
                    let raw = parity_expectation(&distribution, mask);
                    value += coefficient * trex_mitigate(raw, calibration, mask)?;
                }
            }
            Some(batch_shots) => {
                let counts = sample_distribution(
                    &distribution,
                    batch_shots,
                    &ReadoutNoise::ideal(),
                    stream_seed(seed, 1 + twirl_index as u64),
                )?;
                for &(mask, coefficient) in &masks {
                    let raw = crate::sim::parity_from_counts(&counts, mask);
                    value += coefficient * trex_mitigate(raw, calibration, mask)?;
                }
            }
        }
        batches.push(value);
    }
    Ok(batch_stats(&batches))
}

/// Extrapolation model for ZNE.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FitModel {
    /// Linear for two points, quadratic for three or more.
    Auto,
    Linear,
    Polynomial(usize),
    Exponential,
}

/// Noise scales and extrapolation model.
#[derive(Debug, Clone)]
pub struct ZneConfig {
    pub scales: Vec<f64>,
    pub model: FitModel,
}

impl Default for ZneConfig {
    fn default() -> Self {
        Self { scales: vec![1.0, 3.0, 5.0], model: FitModel::Auto }
    }
}

impl ZneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scales.len() < 2 {
            return Err(Error::TooFewPoints { needed: 2, got: self.scales.len() });
        }
        for (i, &a) in self.scales.iter().enumerate() {
            if a < 1.0 - 1e-12 {
                return Err(Error::UnrealizableScale { requested: a, nearest: vec![1.0] });
            }
            for &b in &self.scales[i + 1..] {
                if (a - b).abs() < 1e-12 {
                    return Err(Error::DegenerateFit);
                }
            }
        }
        if !self.scales.iter().any(|&s| (s - 1.0).abs() < 1e-12) {
            return Err(Error::UnrealizableScale { requested: 1.0, nearest: self.scales.clone() });
        }
        if let FitModel::Polynomial(order) = self.model {
            if order + 1 > self.scales.len() {
                return Err(Error::TooFewPoints { needed: order + 1, got: self.scales.len() });
            }
        }
        Ok(())
    }
}

/// Result of an extrapolation to zero noise.
#[derive(Debug, Clone)]
pub struct ZneFit {
    pub value: f64,
    pub stderr: f64,
    /// The model actually used (Auto resolved, fallbacks applied).
    pub model: FitModel,
    pub fell_back_to_linear: bool,
}

fn weighted_polynomial_fit(
    points: &[(f64, f64, f64)],
    order: usize,
) -> Result<(f64, f64)> {
    let n = points.len();
    if n < order + 1 {
        return Err(Error::TooFewPoints { needed: order + 1, got: n });
    }
    let weighted = points.iter().any(|&(_, _, s)| s > 0.0);
    let mut design = DMatrix::<f64>::zeros(n, order + 1);
    let mut rhs = DMatrix::<f64>::zeros(n, 1);
    let mut weights = vec![1.0; n];
    for (i, &(x, y, sigma)) in points.iter().enumerate() {
        if weighted {
            // Zero-stderr points in a weighted fit get a tight effective sigma.
            let s = if sigma > 0.0 { sigma } else { 1e-12 };
            weights[i] = 1.0 / (s * s);
        }
        for j in 0..=order {
            design[(i, j)] = x.powi(j as i32);
        }
        rhs[(i, 0)] = y;
    }
    let mut normal = DMatrix::<f64>::zeros(order + 1, order + 1);
    let mut moment = DMatrix::<f64>::zeros(order + 1, 1);
    for i in 0..n {
        for a in 0..=order {
            moment[(a, 0)] += weights[i] * design[(i, a)] * rhs[(i, 0)];
            for b in 0..=order {
                normal[(a, b)] += weights[i] * design[(i, a)] * design[(i, b)];
            }
        }
    }
    let covariance = normal.clone().try_inverse().ok_or(Error::DegenerateFit)?;
    if covariance.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateFit);
    }
    let beta = &covariance * moment;
    let stderr = if weighted { covariance[(0, 0)].max(0.0).sqrt() } else { 0.0 };
    Ok((beta[(0, 0)], stderr))
}

/// Weighted least-squares extrapolation of (lambda, value, stderr) points to
/// lambda = 0. An exponential fit over values of mixed sign falls back to
/// linear and flags it.
pub fn zne_extrapolate(points: &[(f64, f64, f64)], model: &FitModel) -> Result<ZneFit> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: points.len() });
    }
    let resolved = match model {
        FitModel::Auto => {
            if points.len() == 2 {
                FitModel::Linear
            } else {
                FitModel::Polynomial(2)
            }
        }
        other => other.clone(),
    };
    match resolved {
        FitModel::Linear => {
            let (value, stderr) = weighted_polynomial_fit(points, 1)?;
            Ok(ZneFit { value, stderr, model: FitModel::Linear, fell_back_to_linear: false })
        }
        FitModel::Polynomial(order) => {
            let (value, stderr) = weighted_polynomial_fit(points, order)?;
            Ok(ZneFit { value, stderr, model: FitModel::Polynomial(order), fell_back_to_linear: false })
        }
        FitModel::Exponential => {
            let sign = points[0].1.signum();
            if points.iter().any(|&(_, v, _)| v == 0.0 || v.signum() != sign) {
                let (value, stderr) = weighted_polynomial_fit(points, 1)?;
                return Ok(ZneFit {
                    value,
                    stderr,
                    model: FitModel::Linear,
                    fell_back_to_linear: true,
                });
            }
            let log_points: Vec<(f64, f64, f64)> = points
                .iter()
                .map(|&(x, v, s)| (x, v.abs().ln(), if s > 0.0 { s / v.abs() } else { 0.0 }))
                .collect();
            let (log_value, log_stderr) = weighted_polynomial_fit(&log_points, 1)?;
            let value = sign * log_value.exp();
            Ok(ZneFit {
                value,
                stderr: value.abs() * log_stderr,
                model: FitModel::Exponential,
                fell_back_to_linear: false,
            })
        }
        FitModel::Auto => unreachable!(),
    }
}

/// Global and partial fold counts realizing a scale on a circuit of the given
/// depth, i.e. lambda = 1 + 2(n d + s)/d.
pub fn realize_scale(depth: usize, lambda: f64) -> Result<(usize, usize)> {
    if depth == 0 {
        if (lambda - 1.0).abs() < 1e-9 {
            return Ok((0, 0));
        }
        return Err(Error::UnrealizableScale { requested: lambda, nearest: vec![1.0] });
    }
    let k_exact = (lambda - 1.0) * depth as f64 / 2.0;
    if k_exact < -1e-9 {
        return Err(Error::UnrealizableScale { requested: lambda, nearest: vec![1.0] });
    }
    let k = k_exact.round();
    if (k_exact - k).abs() > 1e-9 {
        let lower = 1.0 + 2.0 * k_exact.floor().max(0.0) / depth as f64;
        let upper = 1.0 + 2.0 * k_exact.ceil() / depth as f64;
        return Err(Error::UnrealizableScale { requested: lambda, nearest: vec![lower, upper] });
    }
    let k = k as usize;
    Ok((k / depth, k % depth))
}

/// Per-scale measurements and the extrapolated fit.
#[derive(Debug, Clone)]
pub struct ZneOutcome {
    /// (lambda, value, stderr) per configured scale.
    pub points: Vec<(f64, f64, f64)>,
    pub fit: ZneFit,
}

/// Fold the circuit at each configured scale, measure the diagonal observable
/// under noise, and extrapolate to zero noise.
pub fn zne_pipeline(
    circuit: &Circuit,
    observable: &PauliDecomposition,
    config: &ZneConfig,
    noise: &NoiseModel,
    shots: Option<u64>,
    seed: u64,
) -> Result<ZneOutcome> {
    config.validate()?;
    let values = diagonal_observable_values(observable)?;
    let depth = circuit.depth();
    let mut points = Vec::with_capacity(config.scales.len());
    for (index, &scale) in config.scales.iter().enumerate() {
        let (n, s) = realize_scale(depth, scale)?;
        let folded = circuit.fold(n, s)?;
        let initial = DensityMatrix::from_pure(&StateVector::zero_state(circuit.width));
        let rho = simulate_density(&folded.circuit, &initial, noise)?;
        let probs = rho.probabilities();
        let point = match shots {
            None => {
                let measured = noise.readout.apply(&probs);
                let value: f64 =
                    measured.iter().zip(&values).map(|(&p, &v)| p * v).sum();
                (folded.scale, value, 0.0)
            }
            Some(shot_count) => {
                let counts = sample_distribution(
                    &probs,
                    shot_count,
                    &noise.readout,
                    stream_seed(seed, index as u64),
                )?;
                let (mean, stderr) = mean_and_stderr_from_counts(&values, &counts);
                (folded.scale, mean, stderr)
            }
        };
        points.push(point);
    }
    let fit = zne_extrapolate(&points, &config.model)?;
    Ok(ZneOutcome { points, fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use crate::pauli::PauliString;
    use approx::assert_abs_diff_eq;

    #[test]
    fn calibration_is_exact_for_ideal_readout() {
        let cal = trex_calibrate(3, 8, 0, &ReadoutNoise::ideal(), 5).unwrap();
        for w in 0..8 {
            assert_abs_diff_eq!(cal.lambda(w), 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(cal.stderrs[w], 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn calibration_matches_closed_form_for_product_noise() {
        let (p, q) = (0.03, 0.08);
        let readout = ReadoutNoise::PerQubitFlip(vec![p, q]);
        let cal = trex_calibrate(2, 16, 0, &readout, 11).unwrap();
        // Masks are in index space: bit 1<<1 is qubit 0, bit 1<<0 is qubit 1.
        assert_abs_diff_eq!(cal.lambda(0b10), 1.0 - 2.0 * p, epsilon = 1e-13);
        assert_abs_diff_eq!(cal.lambda(0b01), 1.0 - 2.0 * q, epsilon = 1e-13);
        assert_abs_diff_eq!(cal.lambda(0b11), (1.0 - 2.0 * p) * (1.0 - 2.0 * q), epsilon = 1e-13);
        assert_abs_diff_eq!(cal.lambda(0), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn sampled_calibration_converges() {
        let readout = ReadoutNoise::UniformFlip(0.02);
        let cal = trex_calibrate(3, 16, 160_000, &readout, 23).unwrap();
        for w in 1..8usize {
            let expected = (1.0f64 - 0.04).powi(w.count_ones() as i32);
            assert!(
                (cal.lambda(w) - expected).abs() < 5.0 * cal.stderrs[w].max(1e-3),
                "mask {w}: {} vs {expected}",
                cal.lambda(w)
            );
        }
    }

    #[test]
    fn mitigation_divides_and_enforces_floor() {
        let cal = TrexCalibration {
            width: 1,
            lambdas: vec![1.0, 0.9],
            stderrs: vec![0.0, 0.0],
            num_twirls: 1,
            shots_per_twirl: 0,
            seed: 0,
        };
        assert_abs_diff_eq!(trex_mitigate(0.45, &cal, 1).unwrap(), 0.5, epsilon = 1e-14);
        let degenerate = TrexCalibration { lambdas: vec![1.0, 1e-6], ..cal };
        assert!(matches!(
            trex_mitigate(0.45, &degenerate, 1),
            Err(Error::LambdaBelowFloor { .. })
        ));
    }

    #[test]
    fn twirled_equals_untwirled_without_readout_noise() {
        let probs = [0.1, 0.2, 0.3, 0.4];
        let mut observable = PauliDecomposition::empty(2);
        observable.terms.insert(PauliString::identity(2), 0.25);
        observable.terms.insert(PauliString::new(vec![3, 0]), 0.5);
        observable.terms.insert(PauliString::new(vec![3, 3]), -0.125);
        let cal = trex_calibrate(2, 4, 0, &ReadoutNoise::ideal(), 3).unwrap();
        let (twirled, stderr) = twirled_diagonal_measurement(
            &probs,
            &observable,
            &ReadoutNoise::ideal(),
            &cal,
            4,
            None,
            7,
        )
        .unwrap();
        let values = diagonal_observable_values(&observable).unwrap();
        let direct: f64 = probs.iter().zip(&values).map(|(&p, &v)| p * v).sum();
        assert_abs_diff_eq!(twirled, direct, epsilon = 1e-13);
        assert_abs_diff_eq!(stderr, 0.0, epsilon = 1e-13);
    }

    #[test]
    fn linear_and_exponential_recovery() {
        let linear: Vec<(f64, f64, f64)> =
            [1.0, 1.4, 3.0].iter().map(|&l| (l, 0.8 - 0.1 * l, 0.0)).collect();
        let fit = zne_extrapolate(&linear, &FitModel::Linear).unwrap();
        assert_abs_diff_eq!(fit.value, 0.8, epsilon = 1e-12);

        let exponential: Vec<(f64, f64, f64)> =
            [1.0f64, 2.0, 3.0].iter().map(|&l| (l, 0.5 * (-0.3 * l).exp(), 0.0)).collect();
        let fit = zne_extrapolate(&exponential, &FitModel::Exponential).unwrap();
        assert_abs_diff_eq!(fit.value, 0.5, epsilon = 1e-6);
        assert!(!fit.fell_back_to_linear);
    }

    #[test]
    fn exponential_falls_back_on_sign_changes() {
        let points = [(1.0, 0.5, 0.0), (2.0, -0.1, 0.0), (3.0, 0.05, 0.0)];
        let fit = zne_extrapolate(&points, &FitModel::Exponential).unwrap();
        assert!(fit.fell_back_to_linear);
        assert_eq!(fit.model, FitModel::Linear);
    }

    #[test]
    fn underdetermined_and_degenerate_fits_error() {
        assert!(matches!(
            zne_extrapolate(&[(1.0, 0.5, 0.0)], &FitModel::Linear),
            Err(Error::TooFewPoints { .. })
        ));
        let duplicated = [(1.0, 0.4, 0.0), (1.0, 0.6, 0.0), (1.0, 0.5, 0.0)];
        assert!(matches!(
            zne_extrapolate(&duplicated, &FitModel::Polynomial(2)),
            Err(Error::DegenerateFit)
        ));
    }

    #[test]
    fn auto_model_resolution() {
        let two = [(1.0, 0.7, 0.01), (3.0, 0.5, 0.01)];
        assert_eq!(zne_extrapolate(&two, &FitModel::Auto).unwrap().model, FitModel::Linear);
        let three = [(1.0, 0.7, 0.01), (2.0, 0.6, 0.01), (3.0, 0.52, 0.01)];
        assert_eq!(
            zne_extrapolate(&three, &FitModel::Auto).unwrap().model,
            FitModel::Polynomial(2)
        );
    }

    #[test]
    fn scale_realization() {
        assert_eq!(realize_scale(10, 3.0).unwrap(), (1, 0));
        assert_eq!(realize_scale(10, 1.4).unwrap(), (0, 2));
        assert_eq!(realize_scale(4, 1.0).unwrap(), (0, 0));
        match realize_scale(10, 1.3) {
            Err(Error::UnrealizableScale { nearest, .. }) => {
                assert_abs_diff_eq!(nearest[0], 1.2, epsilon = 1e-12);
                assert_abs_diff_eq!(nearest[1], 1.4, epsilon = 1e-12);
            }
            other => panic!("expected unrealizable scale, got {other:?}"),
        }
    }

    #[test]
    fn zne_pipeline_is_exact_without_noise() {
        let mut circuit = Circuit::new(2);
        circuit.extend([Gate::X(0), Gate::H(1), Gate::Cz(0, 1), Gate::H(1)]);
        let mut observable = PauliDecomposition::empty(2);
        observable.terms.insert(PauliString::new(vec![3, 0]), 1.0);
        let config = ZneConfig { scales: vec![1.0, 3.0, 5.0], model: FitModel::Auto };
        let outcome =
            zne_pipeline(&circuit, &observable, &config, &NoiseModel::noiseless(), None, 1).unwrap();
        for &(_, value, _) in &outcome.points {
            assert_abs_diff_eq!(value, outcome.points[0].1, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(outcome.fit.value, outcome.points[0].1, epsilon = 1e-9);
    }

    #[test]
    fn zne_pipeline_checks_realizability() {
        let mut circuit = Circuit::new(1);
        circuit.extend([Gate::X(0), Gate::X(0)]);
        let mut observable = PauliDecomposition::empty(1);
        observable.terms.insert(PauliString::new(vec![3]), 1.0);
        let config = ZneConfig { scales: vec![1.0, 1.5], model: FitModel::Auto };
        assert!(matches!(
            zne_pipeline(&circuit, &observable, &config, &NoiseModel::default(), None, 1),
            Err(Error::UnrealizableScale { .. })
        ));
    }
}
