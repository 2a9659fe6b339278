//! Qubit-embedding optimization: search the permutations of computational
//! basis states for one minimizing the number of full-weight Pauli terms.
//!
//! The sector Hamiltonian of dimension d is zero-padded to the next power of
//! two and relabelled: computational index l carries sector state
//! `permutation[l]`, so the embedded matrix is
//! `out[l, m] = padded[permutation[l], permutation[m]]`. Exhaustive search is
//! feasible up to three qubits; beyond that a greedy best-improvement descent
//! over transpositions with random restarts is used.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pauli::ZERO_TOLERANCE;
use crate::rng::stream_seed;

/// The optimal relabelling for the four-site vacuum-sector problem, in the
/// conventional 1-indexed form: computational position l carries padded
/// sector state `FOUR_SITE_OPTIMAL_PERMUTATION[l-1]`.
pub const FOUR_SITE_OPTIMAL_PERMUTATION: [usize; 8] = [7, 6, 1, 2, 4, 5, 8, 3];

/// A relabelling of computational basis states together with its objective.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Embedding {
    /// 0-based: computational index l holds padded sector state permutation[l].
    permutation: Vec<usize>,
    pub num_qubits: usize,
    /// Count of full-weight Pauli terms of the embedded Hamiltonian.
    pub objective_value: usize,
}

impl Embedding {
    pub fn new(permutation: Vec<usize>, objective_value: usize) -> Result<Self> {
        let num_qubits = check_power_of_two(permutation.len())?;
        check_bijection(&permutation)?;
        Ok(Self { permutation, num_qubits, objective_value })
    }

    /// Build from the 1-indexed printed form, leaving the objective unset.
    pub fn from_one_indexed(permutation: &[usize]) -> Result<Self> {
        let zero_based: Vec<usize> = permutation.iter().map(|&p| p.wrapping_sub(1)).collect();
        Self::new(zero_based, 0)
    }

    pub fn identity(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        Self { permutation: (0..dim).collect(), num_qubits, objective_value: 0 }
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn one_indexed(&self) -> Vec<usize> {
        self.permutation.iter().map(|&p| p + 1).collect()
    }

    /// Computational index holding the given 0-based sector state.
    pub fn computational_index_of(&self, sector_state: usize) -> Option<usize> {
        self.permutation.iter().position(|&p| p == sector_state)
    }
}

fn check_bijection(permutation: &[usize]) -> Result<()> {
    let len = permutation.len();
    let mut seen = vec![false; len];
    for &p in permutation {
        if p >= len || seen[p] {
            return Err(Error::NotABijection { len });
        }
        seen[p] = true;
    }
    Ok(())
}

fn check_power_of_two(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo { dim: len });
    }
    Ok(len.trailing_zeros() as usize)
}

/// Smallest power of two that fits a sector of dimension d.
pub fn pad_dimension(d: usize) -> usize {
    d.next_power_of_two().max(1)
}

fn padded_matrix(h_sector: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let d = h_sector.nrows();
    let dim = pad_dimension(d);
    let mut padded = DMatrix::zeros(dim, dim);
    padded.view_mut((0, 0), (d, d)).copy_from(h_sector);
    padded
}

/// Zero-pad the sector matrix to the minimal qubit dimension and relabel
/// basis states: `out[l, m] = padded[permutation[l], permutation[m]]`.
pub fn pad_and_permute(
    h_sector: &DMatrix<Complex64>,
    permutation: &[usize],
) -> Result<DMatrix<Complex64>> {
    let dim = pad_dimension(h_sector.nrows());
    if permutation.len() != dim {
        return Err(Error::WrongEmbeddingSize { len: permutation.len(), expected: dim });
    }
    check_bijection(permutation)?;
    let padded = padded_matrix(h_sector);
    let mut out = DMatrix::zeros(dim, dim);
    for l in 0..dim {
        for m in 0..dim {
            out[(l, m)] = padded[(permutation[l], permutation[m])];
        }
    }
    Ok(out)
}

/// Precomputed full-weight Pauli traces for fast objective evaluation.
struct ObjectiveEvaluator {
    padded: DMatrix<Complex64>,
    dim: usize,
    num_qubits: usize,
    /// Per string: the column-flip mask and the per-column phase.
    strings: Vec<(usize, Vec<Complex64>)>,
    /// Threshold at trace level (coefficient threshold times 2^q).
    threshold: f64,
}

impl ObjectiveEvaluator {
    fn new(h_sector: &DMatrix<Complex64>) -> Self {
        let padded = padded_matrix(h_sector);
        let dim = padded.nrows();
        let num_qubits = dim.trailing_zeros() as usize;
        let mut strings = Vec::new();
        let mut indices = vec![1u8; num_qubits];
        loop {
            let string = crate::pauli::PauliString::new(indices.clone());
            let mut mask = 0usize;
            let mut phases = Vec::with_capacity(dim);
            for col in 0..dim {
                let (row, phase) = string.column_action(col);
                mask = row ^ col;
                phases.push(phase);
            }
            strings.push((mask, phases));
            // Advance over non-identity factors only.
            let mut done = true;
            for slot in indices.iter_mut().rev() {
                *slot += 1;
                if *slot < 4 {
                    done = false;
                    break;
                }
                *slot = 1;
            }
            if done {
                break;
            }
        }
        Self { padded, dim, num_qubits, strings, threshold: ZERO_TOLERANCE * dim as f64 }
    }

    fn trace(&self, permutation: &[usize], string: &(usize, Vec<Complex64>)) -> Complex64 {
        let (mask, phases) = string;
        let mut total = Complex64::new(0.0, 0.0);
        for col in 0..self.dim {
            total += phases[col] * self.padded[(permutation[col], permutation[col ^ mask])];
        }
        total
    }

    fn objective(&self, permutation: &[usize]) -> usize {
        self.strings
            .iter()
            .filter(|s| self.trace(permutation, s).norm() > self.threshold)
            .count()
    }

    fn traces(&self, permutation: &[usize]) -> Vec<Complex64> {
        self.strings.iter().map(|s| self.trace(permutation, s)).collect()
    }

    /// Objective after swapping positions i and j, via O(1)-per-string trace
    /// updates against the cached traces of the current permutation.
    fn objective_after_swap(
        &self,
        permutation: &[usize],
        traces: &[Complex64],
        i: usize,
        j: usize,
    ) -> usize {
        let lookup = |col: usize| -> usize {
            if col == i {
                permutation[j]
            } else if col == j {
                permutation[i]
            } else {
                permutation[col]
            }
        };
        let mut count = 0;
        for ((mask, phases), &base) in self.strings.iter().zip(traces) {
            let mut affected = [i, j, i ^ mask, j ^ mask];
            affected.sort_unstable();
            let mut trace = base;
            let mut last = usize::MAX;
            for &col in &affected {
                if col == last {
                    continue;
                }
                last = col;
                let new_entry = self.padded[(lookup(col), lookup(col ^ mask))];
                let old_entry = self.padded[(permutation[col], permutation[col ^ mask])];
                trace += phases[col] * (new_entry - old_entry);
            }
            if trace.norm() > self.threshold {
                count += 1;
            }
        }
        count
    }
}

/// Outcome of the exhaustive search: the best embedding and the number of
/// permutations attaining each objective value.
#[derive(Debug, Clone)]
pub struct SearchResult {
    pub embedding: Embedding,
    pub histogram: BTreeMap<usize, usize>,
}

impl SearchResult {
    /// Objective values sorted descending with one entry per permutation
    /// (the shape plotted against permutation rank).
    pub fn sorted_objectives(&self) -> Vec<(usize, usize)> {
        self.histogram.iter().rev().map(|(&obj, &count)| (obj, count)).collect()
    }
}

/// Exhaustively score every permutation of the embedded basis. Refuses more
/// than three qubits, where 2^M! is out of reach.
pub fn brute_force_search(h_sector: &DMatrix<Complex64>) -> Result<SearchResult> {
    let dim = pad_dimension(h_sector.nrows());
    let num_qubits = check_power_of_two(dim)?;
    if num_qubits > 3 {
        return Err(Error::BruteForceTooLarge { qubits: num_qubits });
    }
    let evaluator = ObjectiveEvaluator::new(h_sector);

    // Parallel over the choice of first element; Heap's algorithm on the rest.
    let partials: Vec<(BTreeMap<usize, usize>, (usize, Vec<usize>))> = (0..dim)
        .into_par_iter()
        .map(|first| {
            let mut histogram = BTreeMap::new();
            let mut best: (usize, Vec<usize>) = (usize::MAX, Vec::new());
            let mut rest: Vec<usize> = (0..dim).filter(|&x| x != first).collect();
            let mut perm = Vec::with_capacity(dim);
            heap_permutations(&mut rest, dim - 1, &mut |tail| {
                perm.clear();
                perm.push(first);
                perm.extend_from_slice(tail);
                let objective = evaluator.objective(&perm);
                *histogram.entry(objective).or_insert(0) += 1;
                if objective < best.0 || (objective == best.0 && perm < best.1) {
                    best = (objective, perm.clone());
                }
            });
            (histogram, best)
        })
        .collect();

    let mut histogram = BTreeMap::new();
    let mut best: (usize, Vec<usize>) = (usize::MAX, Vec::new());
    for (partial, candidate) in partials {
        for (objective, count) in partial {
            *histogram.entry(objective).or_insert(0) += count;
        }
        if candidate.0 < best.0 || (candidate.0 == best.0 && candidate.1 < best.1) {
            best = candidate;
        }
    }
    let embedding = Embedding { permutation: best.1, num_qubits, objective_value: best.0 };
    Ok(SearchResult { embedding, histogram })
}

fn heap_permutations(items: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k <= 1 {
        visit(items);
        return;
    }
    for i in 0..k {
        heap_permutations(items, k - 1, visit);
        if k % 2 == 0 {
            items.swap(i, k - 1);
        } else {
            items.swap(0, k - 1);
        }
    }
}

fn greedy_descent(evaluator: &ObjectiveEvaluator, mut perm: Vec<usize>) -> (usize, Vec<usize>) {
    let dim = evaluator.dim;
    // Full recomputation per neighbour is cheap up to four qubits; beyond
    // that, incremental trace updates keep the neighbourhood scan O(d^2)
    // instead of O(d^3) per string.
    let incremental = evaluator.num_qubits >= 5;
    let mut current = evaluator.objective(&perm);
    loop {
        let traces = if incremental { evaluator.traces(&perm) } else { Vec::new() };
        let mut best: Option<(usize, (usize, usize))> = None;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let candidate = if incremental {
                    evaluator.objective_after_swap(&perm, &traces, i, j)
                } else {
                    perm.swap(i, j);
                    let value = evaluator.objective(&perm);
                    perm.swap(i, j);
                    value
                };
                // Strict improvement over the best seen keeps the first,
                // lexicographically smallest transposition among ties.
                if candidate < best.map_or(current, |(b, _)| b) {
                    best = Some((candidate, (i, j)));
                }
            }
        }
        match best {
            Some((value, (i, j))) if value < current => {
                perm.swap(i, j);
                current = value;
            }
            _ => break,
        }
    }
    (current, perm)
}

/// Greedy best-improvement local search over transpositions, restarted from
/// `restarts` random permutations derived deterministically from `seed`.
pub fn greedy_local_search(
    h_sector: &DMatrix<Complex64>,
    restarts: usize,
    seed: u64,
) -> Result<Embedding> {
    let dim = pad_dimension(h_sector.nrows());
    let num_qubits = check_power_of_two(dim)?;
    let evaluator = ObjectiveEvaluator::new(h_sector);
    let restarts = restarts.max(1);
    let outcomes: Vec<(usize, Vec<usize>)> = (0..restarts)
        .into_par_iter()
        .map(|restart| {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, restart as u64));
            let mut perm: Vec<usize> = (0..dim).collect();
            perm.shuffle(&mut rng);
            greedy_descent(&evaluator, perm)
        })
        .collect();
    let (objective_value, permutation) = outcomes
        .into_iter()
        .min_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)))
        .expect("at least one restart");
    Ok(Embedding { permutation, num_qubits, objective_value })
}

/// Objective of an arbitrary permutation, for reporting and verification.
pub fn embedding_objective(h_sector: &DMatrix<Complex64>, permutation: &[usize]) -> Result<usize> {
    let dim = pad_dimension(h_sector.nrows());
    if permutation.len() != dim {
        return Err(Error::WrongEmbeddingSize { len: permutation.len(), expected: dim });
    }
    check_bijection(permutation)?;
    Ok(ObjectiveEvaluator::new(h_sector).objective(permutation))
}
