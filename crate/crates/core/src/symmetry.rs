//! Charge-conjugation / translation symmetry sectors of the gauge-invariant basis.
//!
//! The charge conjugation C+ shifts matter and fields by one site while
//! exchanging particles and holes and flipping the field sign; on gauge
//! configurations it acts as a pure permutation. Its square is the two-site
//! translation T2, so the Hilbert space splits into eigensectors labelled by
//! (T2, C) with C an N-th root of unity and T2 = C^2. Sector bases are built
//! from orbit projectors, which keeps the coefficients exact surds and the
//! ordering reproducible.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{basis_index, GaugeConfig, LatticeSpec};

/// Direction of the charge-conjugation shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Shift sites forward by one (C+).
    Plus,
    /// The inverse transformation (C- = C+ dagger).
    Minus,
}

/// Eigenvalue pair labelling a symmetry sector.
///
/// The conjugation eigenvalue is exp(2 pi i exponent / order); the translation
/// eigenvalue is its square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SectorLabel {
    pub exponent: usize,
    pub order: usize,
}

impl SectorLabel {
    pub fn c(&self) -> Complex64 {
        root_of_unity(self.exponent, self.order)
    }

    pub fn t2(&self) -> Complex64 {
        root_of_unity(2 * self.exponent % self.order, self.order)
    }
}

impl std::fmt::Display for SectorLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(T2={}, C={})", phase_name(self.t2()), phase_name(self.c()))
    }
}

fn root_of_unity(j: usize, order: usize) -> Complex64 {
    match (4 * j) % (4 * order) {
        0 => Complex64::new(1.0, 0.0),
        x if x == order => Complex64::new(0.0, 1.0),
        x if x == 2 * order => Complex64::new(-1.0, 0.0),
        x if x == 3 * order => Complex64::new(0.0, -1.0),
        _ => Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / order as f64),
    }
}

fn phase_name(z: Complex64) -> String {
    match (z.re, z.im) {
        (1.0, 0.0) => "+1".into(),
        (-1.0, 0.0) => "-1".into(),
        (0.0, 1.0) => "+i".into(),
        (0.0, -1.0) => "-i".into(),
        _ => format!("{:+.4}{:+.4}i", z.re, z.im),
    }
}

/// One symmetry block: an orthonormal symmetrized basis and the projected
/// Hamiltonian.
#[derive(Debug, Clone)]
pub struct SectorBlock {
    pub label: SectorLabel,
    /// Columns are the symmetrized vectors over the gauge-invariant basis.
    pub basis_vectors: DMatrix<Complex64>,
    /// V^dagger H V for the stacked vectors V.
    pub hamiltonian: DMatrix<Complex64>,
}

impl SectorBlock {
    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_deviation(&self) -> f64 {
        let gram = self.basis_vectors.adjoint() * &self.basis_vectors;
        let eye = DMatrix::<Complex64>::identity(gram.nrows(), gram.ncols());
        (gram - eye).norm()
    }
}

fn conjugated(config: &GaugeConfig, spec: &LatticeSpec) -> GaugeConfig {
    let num_sites = spec.num_sites;
    let n = spec.group_order;
    let mut fields = vec![0usize; num_sites];
    let mut occupations = vec![0u8; num_sites];
    for x in 0..num_sites {
        let xp = (x + 1) % num_sites;
        fields[xp] = (n - 1) - config.field_indices[x];
        occupations[xp] = 1 - config.occupations[x];
    }
    GaugeConfig { field_indices: fields, occupations }
}

/// Index permutation implementing the charge conjugation on a basis:
/// position i maps to `perm[i]`.
pub fn charge_conjugation_permutation(
    basis: &[GaugeConfig],
    spec: &LatticeSpec,
    direction: Direction,
) -> Result<Vec<usize>> {
    let index = basis_index(basis);
    let mut forward = vec![0usize; basis.len()];
    for (i, config) in basis.iter().enumerate() {
        let image = conjugated(config, spec);
        forward[i] = *index.get(&image).ok_or(Error::SymmetryClosure { index: i })?;
    }
    match direction {
        Direction::Plus => Ok(forward),
        Direction::Minus => {
            let mut inverse = vec![0usize; basis.len()];
            for (i, &j) in forward.iter().enumerate() {
                inverse[j] = i;
            }
            Ok(inverse)
        }
    }
}

/// Unitary matrix of the charge conjugation on the basis.
pub fn charge_conjugation_matrix(
    basis: &[GaugeConfig],
    spec: &LatticeSpec,
    direction: Direction,
) -> Result<DMatrix<Complex64>> {
    let perm = charge_conjugation_permutation(basis, spec, direction)?;
    let dim = basis.len();
    let mut m = DMatrix::zeros(dim, dim);
    for (i, &j) in perm.iter().enumerate() {
        m[(j, i)] = Complex64::new(1.0, 0.0);
    }
    Ok(m)
}

/// Orbits of the conjugation permutation, ordered by (electric energy,
/// staggered mass, smallest member index). The energy key uses the integer
/// quantity sum (2k - n + 1)^2 so ties are resolved exactly.
fn ordered_orbits(basis: &[GaugeConfig], spec: &LatticeSpec, perm: &[usize]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; basis.len()];
    let mut orbits = Vec::new();
    for start in 0..basis.len() {
        if seen[start] {
            continue;
        }
        let mut orbit = vec![start];
        seen[start] = true;
        let mut j = perm[start];
        while j != start {
            seen[j] = true;
            orbit.push(j);
            j = perm[j];
        }
        orbits.push(orbit);
    }
    let n = spec.group_order as i64;
    let key = |orbit: &Vec<usize>| {
        let config = &basis[orbit[0]];
        let electric: i64 = config
            .field_indices
            .iter()
            .map(|&k| {
                let v = 2 * k as i64 - n + 1;
                v * v
            })
            .sum();
        (electric, config.staggered_mass(), *orbit.iter().min().unwrap())
    };
    orbits.sort_by_key(key);
    orbits
}

/// Split the Hamiltonian into its (T2, C) symmetry blocks.
///
/// Vectors are built per orbit as (1/sqrt(L)) sum_j conj(c)^j C^j |rep>, then
/// phase-canonicalized so the first nonzero component (in basis order) is
/// real positive. Blocks are ordered by (T2 exponent, C exponent), which for
/// N=4 gives (+,+), (+,-), (-,+i), (-,-i); empty sectors are omitted.
pub fn sector_decompose(
    basis: &[GaugeConfig],
    spec: &LatticeSpec,
    h: &DMatrix<f64>,
) -> Result<Vec<SectorBlock>> {
    let dim = basis.len();
    let hc: DMatrix<Complex64> = h.map(|x| Complex64::new(x, 0.0));
    let c_matrix = charge_conjugation_matrix(basis, spec, Direction::Plus)?;
    let commutator = (&hc * &c_matrix - &c_matrix * &hc).norm();
    let tolerance = 1e-10 * hc.norm().max(1.0);
    if commutator > tolerance {
        return Err(Error::SymmetryCommutator { norm: commutator });
    }

    let perm = charge_conjugation_permutation(basis, spec, Direction::Plus)?;
    let orbits = ordered_orbits(basis, spec, &perm);
    let order = spec.num_sites;

    let mut exponents: Vec<usize> = (0..order).collect();
    exponents.sort_by_key(|&j| (2 * j % order, j));

    let mut blocks = Vec::new();
    for j in exponents {
        let label = SectorLabel { exponent: j, order };
        let mut vectors: Vec<DVector<Complex64>> = Vec::new();
        for orbit in &orbits {
            let len = orbit.len();
            // The eigenvalue exists on this orbit iff c^len = 1.
            if (j * len) % order != 0 {
                continue;
            }
            let mut v = DVector::<Complex64>::zeros(dim);
            let norm = 1.0 / (len as f64).sqrt();
            for (step, &member) in orbit.iter().enumerate() {
                v[member] = label.c().conj().powu(step as u32) * norm;
            }
            let first = (0..dim).find(|&i| v[i].norm() > 1e-12).expect("orbit vector is nonzero");
            let phase = v[first].conj() / v[first].norm();
            v *= phase;
            vectors.push(v);
        }
        if vectors.is_empty() {
            continue;
        }
        let stacked = DMatrix::from_columns(&vectors);
        let hamiltonian = stacked.adjoint() * &hc * &stacked;
        blocks.push(SectorBlock { label, basis_vectors: stacked, hamiltonian });
    }
    Ok(blocks)
}

/// The configuration representing the Dirac vacuum with zero background
/// field: odd sites filled, every link at the central (zero-eigenvalue)
/// field index. Requires odd group order and half filling.
pub fn vacuum_config(spec: &LatticeSpec) -> Result<GaugeConfig> {
    if spec.group_order % 2 == 0 || spec.filling != spec.num_sites / 2 {
        return Err(Error::VacuumSectorNotFound);
    }
    Ok(GaugeConfig {
        field_indices: vec![(spec.group_order - 1) / 2; spec.num_sites],
        occupations: (0..spec.num_sites).map(|x| (x % 2) as u8).collect(),
    })
}

/// The block containing the Dirac vacuum, together with the index of the
/// vector equal to the vacuum configuration (overlap 1 up to 1e-12).
pub fn vacuum_sector<'a>(
    blocks: &'a [SectorBlock],
    basis: &[GaugeConfig],
    spec: &LatticeSpec,
) -> Result<(&'a SectorBlock, usize)> {
    let vacuum = vacuum_config(spec)?;
    let index = basis_index(basis);
    let vacuum_row = *index.get(&vacuum).ok_or(Error::VacuumSectorNotFound)?;
    for block in blocks {
        for col in 0..block.basis_vectors.ncols() {
            if (block.basis_vectors[(vacuum_row, col)].norm() - 1.0).abs() < 1e-12 {
                let deviation = block.orthonormality_deviation();
                if deviation > 1e-9 {
                    return Err(Error::NotOrthonormal { deviation });
                }
                return Ok((block, col));
            }
        }
    }
    Err(Error::VacuumSectorNotFound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_hamiltonian, enumerate_basis, Couplings};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    const XI: f64 = 0.6;
    const MU: f64 = 0.1;

    fn setup() -> (LatticeSpec, Vec<GaugeConfig>, DMatrix<f64>) {
        let spec = LatticeSpec::new(4, 3).unwrap();
        let basis = enumerate_basis(&spec);
        let h = build_hamiltonian(&basis, &Couplings::new(XI, MU), &spec).unwrap();
        (spec, basis, h)
    }

    fn eq8(xi: f64, mu: f64) -> DMatrix<f64> {
        let s = xi / 2.0_f64.sqrt();
        let diag = [
            -2.0 * mu,
            PI / 3.0,
            2.0 * mu + 2.0 * PI / 3.0,
            PI,
            -2.0 * mu + 4.0 * PI / 3.0,
            4.0 * PI / 3.0,
            2.0 * mu + 4.0 * PI / 3.0,
        ];
        let off = [xi, s, s, s, s, xi];
        let mut m = DMatrix::zeros(7, 7);
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        for (i, &v) in off.iter().enumerate() {
            m[(i, i + 1)] = v;
            m[(i + 1, i)] = v;
        }
        m
    }

    #[test]
    fn conjugation_is_unitary_of_order_four() {
        let (spec, basis, _) = setup();
        let c = charge_conjugation_matrix(&basis, &spec, Direction::Plus).unwrap();
        let c_minus = charge_conjugation_matrix(&basis, &spec, Direction::Minus).unwrap();
        let eye = DMatrix::<Complex64>::identity(18, 18);
        assert_abs_diff_eq!((&c * c.adjoint() - &eye).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((&c_minus - c.adjoint()).norm(), 0.0, epsilon = 1e-14);
        let c4 = &c * &c * &c * &c;
        assert_abs_diff_eq!((c4 - eye).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn vacuum_is_fixed_and_backgrounds_swap() {
        let (spec, basis, _) = setup();
        let index = basis_index(&basis);
        let perm = charge_conjugation_permutation(&basis, &spec, Direction::Plus).unwrap();
        let vac = index[&vacuum_config(&spec).unwrap()];
        assert_eq!(perm[vac], vac);
        let plus = index[&GaugeConfig { field_indices: vec![2; 4], occupations: vec![0, 1, 0, 1] }];
        let minus = index[&GaugeConfig { field_indices: vec![0; 4], occupations: vec![0, 1, 0, 1] }];
        assert_eq!(perm[plus], minus);
        assert_eq!(perm[minus], plus);
    }

    #[test]
    fn sector_dimensions_and_vacuum_block() {
        let (spec, basis, h) = setup();
        let blocks = sector_decompose(&basis, &spec, &h).unwrap();
        let dims: Vec<usize> = blocks.iter().map(|b| b.dim()).collect();
        assert_eq!(dims, vec![7, 5, 3, 3]);
        assert_eq!(dims.iter().sum::<usize>(), 18);

        let vacuum_block = &blocks[0];
        let expected = eq8(XI, MU).map(|x| Complex64::new(x, 0.0));
        assert_abs_diff_eq!((&vacuum_block.hamiltonian - expected).norm(), 0.0, epsilon = 1e-10);

        let (found, position) = vacuum_sector(&blocks, &basis, &spec).unwrap();
        assert_eq!(found.label, blocks[0].label);
        assert_eq!(position, 0);
    }

    #[test]
    fn off_diagonal_blocks_match_known_matrices() {
        let (spec, basis, h) = setup();
        let blocks = sector_decompose(&basis, &spec, &h).unwrap();

        let s = XI / 2.0_f64.sqrt();
        let diag = [
            PI / 3.0,
            2.0 * MU + 2.0 * PI / 3.0,
            PI,
            -2.0 * MU + 4.0 * PI / 3.0,
            4.0 * PI / 3.0,
        ];
        let pm = &blocks[1].hamiltonian;
        for (i, &v) in diag.iter().enumerate() {
            assert_abs_diff_eq!(pm[(i, i)].re, v, epsilon = 1e-12);
        }
        for i in 0..4 {
            assert_abs_diff_eq!(pm[(i, i + 1)].re, s, epsilon = 1e-12);
        }

        for block in &blocks[2..] {
            let expected = [PI / 3.0, PI, 4.0 * PI / 3.0];
            for (i, &v) in expected.iter().enumerate() {
                assert_abs_diff_eq!(block.hamiltonian[(i, i)].re, v, epsilon = 1e-12);
            }
            let mut off = block.hamiltonian.clone();
            for i in 0..3 {
                off[(i, i)] = Complex64::new(0.0, 0.0);
            }
            assert_abs_diff_eq!(off.norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn block_vectors_are_conjugation_eigenvectors() {
        let (spec, basis, h) = setup();
        let c = charge_conjugation_matrix(&basis, &spec, Direction::Plus).unwrap();
        let blocks = sector_decompose(&basis, &spec, &h).unwrap();
        for block in &blocks {
            assert!(block.orthonormality_deviation() < 1e-12);
            for col in 0..block.basis_vectors.ncols() {
                let v = block.basis_vectors.column(col).clone_owned();
                let residual = (&c * &v) - v * block.label.c();
                assert_abs_diff_eq!(residual.norm(), 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn reassembled_spectrum_matches() {
        let (spec, basis, h) = setup();
        let blocks = sector_decompose(&basis, &spec, &h).unwrap();
        let mut block_eigs: Vec<f64> = blocks
            .iter()
            .flat_map(|b| {
                b.hamiltonian.clone().symmetric_eigen().eigenvalues.iter().copied().collect::<Vec<_>>()
            })
            .collect();
        let mut full_eigs: Vec<f64> = h
            .map(|x| Complex64::new(x, 0.0))
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        block_eigs.sort_by(f64::total_cmp);
        full_eigs.sort_by(f64::total_cmp);
        for (a, b) in block_eigs.iter().zip(&full_eigs) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn symmetrized_vectors_match_printed_coefficients() {
        let (spec, basis, h) = setup();
        let index = basis_index(&basis);
        let blocks = sector_decompose(&basis, &spec, &h).unwrap();
        let config = |fields: [usize; 4], occ: [u8; 4]| {
            index[&GaugeConfig { field_indices: fields.to_vec(), occupations: occ.to_vec() }]
        };

        // Second vacuum-sector vector: equal-weight combination of the four
        // one-meson states around the vacuum.
        let v = blocks[0].basis_vectors.column(1);
        for (fields, occ) in [
            ([2, 1, 1, 1], [1, 0, 0, 1]),
            ([1, 1, 1, 0], [1, 1, 0, 0]),
            ([1, 0, 1, 1], [0, 0, 1, 1]),
            ([1, 1, 2, 1], [0, 1, 1, 0]),
        ] {
            let z = v[config(fields, occ)];
            assert_abs_diff_eq!(z.re, 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-12);
        }

        // Third vector: the two-meson pair at 1/sqrt(2).
        let v = blocks[0].basis_vectors.column(2);
        for (fields, occ) in [([2, 1, 2, 1], [1, 0, 1, 0]), ([1, 0, 1, 0], [1, 0, 1, 0])] {
            assert_abs_diff_eq!(v[config(fields, occ)].re, 1.0 / 2.0_f64.sqrt(), epsilon = 1e-12);
        }

        // A C=+i vector: magnitudes 1/2 with one factor of i between
        // consecutive orbit members.
        let v = blocks[2].basis_vectors.column(0).clone_owned();
        let members = [
            config([1, 0, 1, 1], [0, 0, 1, 1]),
            config([1, 1, 2, 1], [0, 1, 1, 0]),
            config([1, 1, 1, 0], [1, 1, 0, 0]),
            config([2, 1, 1, 1], [1, 0, 0, 1]),
        ];
        for &m in &members {
            assert_abs_diff_eq!(v[m].norm(), 0.5, epsilon = 1e-12);
        }
        let ratio = v[members[1]] / v[members[0]];
        assert!(
            (ratio - Complex64::new(0.0, 1.0)).norm() < 1e-12
                || (ratio - Complex64::new(0.0, -1.0)).norm() < 1e-12
        );
    }

    #[test]
    fn zero_couplings_give_diagonal_blocks() {
        let spec = LatticeSpec::new(4, 3).unwrap();
        let basis = enumerate_basis(&spec);
        let h = build_hamiltonian(&basis, &Couplings::new(0.0, 0.0), &spec).unwrap();
        let blocks = sector_decompose(&basis, &spec, &h).unwrap();
        for block in &blocks {
            let mut off = block.hamiltonian.clone();
            for i in 0..block.dim() {
                off[(i, i)] = Complex64::new(0.0, 0.0);
            }
            assert_abs_diff_eq!(off.norm(), 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn pipeline_works_at_n_equals_two() {
        let spec = LatticeSpec::new(2, 3).unwrap();
        let basis = enumerate_basis(&spec);
        assert_eq!(basis.len(), 6);
        let h = build_hamiltonian(&basis, &Couplings::new(0.6, 0.1), &spec).unwrap();
        let blocks = sector_decompose(&basis, &spec, &h).unwrap();
        let dims: Vec<usize> = blocks.iter().map(|b| b.dim()).collect();
        assert_eq!(dims, vec![4, 2]);
        let (block, position) = vacuum_sector(&blocks, &basis, &spec).unwrap();
        assert_eq!(block.dim(), 4);
        assert_eq!(position, 0);
    }

    #[test]
    fn perturbed_vectors_are_rejected() {
        let (spec, basis, h) = setup();
        let mut blocks = sector_decompose(&basis, &spec, &h).unwrap();
        let vacuum_row = basis_index(&basis)[&vacuum_config(&spec).unwrap()];
        blocks[0].basis_vectors[(vacuum_row, 1)] += Complex64::new(1e-3, 0.0);
        assert!(matches!(
            vacuum_sector(&blocks, &basis, &spec),
            Err(Error::NotOrthonormal { .. })
        ));
    }

    #[test]
    fn commutator_violation_detected() {
        let (spec, basis, mut h) = setup();
        h[(0, 1)] += 0.5;
        h[(1, 0)] += 0.5;
        assert!(matches!(
            sector_decompose(&basis, &spec, &h),
            Err(Error::SymmetryCommutator { .. })
        ));
    }
}
