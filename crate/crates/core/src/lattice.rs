//! Gauge-invariant basis of the Z_n Schwinger model on a periodic chain.
//!
//! Sites `x = 0..N-1` carry staggered fermions (occupation 0 or 1), links
//! `(x, x+1)` carry a Z_n electric field index `k in 0..n`, with link `N-1`
//! closing the chain back to site 0. The physical basis consists of all
//! configurations satisfying the lattice Gauss law at every site; the
//! Hamiltonian acts on that basis with a diagonal mass + electric part and
//! nearest-neighbour hopping that raises or lowers the traversed link.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Lattice geometry and truncation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeSpec {
    /// Number of sites N (even).
    pub num_sites: usize,
    /// Order n of the Z_n gauge group truncation.
    pub group_order: usize,
    /// Total fermion number.
    pub filling: usize,
}

impl LatticeSpec {
    /// Lattice of `num_sites` sites at half filling.
    pub fn new(num_sites: usize, group_order: usize) -> Result<Self> {
        Self::with_filling(num_sites, group_order, num_sites / 2)
    }

    pub fn with_filling(num_sites: usize, group_order: usize, filling: usize) -> Result<Self> {
        if num_sites == 0 || num_sites % 2 != 0 {
            return Err(Error::InvalidLattice(format!(
                "number of sites must be even and positive, got {num_sites}"
            )));
        }
        if group_order < 1 {
            return Err(Error::InvalidLattice("group order must be at least 1".into()));
        }
        if filling > num_sites {
            return Err(Error::InvalidLattice(format!(
                "filling {filling} exceeds the number of sites {num_sites}"
            )));
        }
        Ok(Self { num_sites, group_order, filling })
    }
}

/// One basis element: site occupations plus link field indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GaugeConfig {
    /// Field index k_x per link (x, x+1), ordered before occupations so that
    /// the derived lexicographic order sorts on fields first.
    pub field_indices: Vec<usize>,
    /// Occupation n_x per site.
    pub occupations: Vec<u8>,
}

impl GaugeConfig {
    /// Staggered particle-number weight: sum over x of (-1)^x n_x.
    pub fn staggered_mass(&self) -> i64 {
        self.occupations
            .iter()
            .enumerate()
            .map(|(x, &n)| if x % 2 == 0 { n as i64 } else { -(n as i64) })
            .sum()
    }

    /// Electric contribution (1/2) sum of e_k^2 over the links.
    pub fn electric_energy(&self, group_order: usize) -> f64 {
        0.5 * self
            .field_indices
            .iter()
            .map(|&k| {
                let e = electric_field_value(k, group_order);
                e * e
            })
            .sum::<f64>()
    }
}

/// Dimensionless couplings of the rescaled Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Couplings {
    /// Hopping strength.
    pub xi: f64,
    /// Staggered mass.
    pub mu: f64,
}

impl Couplings {
    pub fn new(xi: f64, mu: f64) -> Self {
        Self { xi, mu }
    }
}

fn electric_field_value(k: usize, n: usize) -> f64 {
    (2.0 * std::f64::consts::PI / n as f64).sqrt() * (k as f64 - (n as f64 - 1.0) / 2.0)
}

/// Electric field eigenvalue e_k = sqrt(2 pi / n) (k - (n-1)/2).
pub fn electric_eigenvalue(k: usize, n: usize) -> Result<f64> {
    if n < 1 || k >= n {
        return Err(Error::FieldIndexOutOfRange { k, n });
    }
    Ok(electric_field_value(k, n))
}

/// Gauss-law residue at site x: what the occupation must be congruent to mod n.
fn gauss_residue(config: &GaugeConfig, x: usize, n: usize) -> i64 {
    let num_sites = config.occupations.len();
    let k = config.field_indices[x] as i64;
    let k_prev = config.field_indices[(x + num_sites - 1) % num_sites] as i64;
    // (-1)^x - 1 is 0 on even sites and -2 on odd sites.
    let offset: i64 = if x % 2 == 0 { 0 } else { -1 };
    (k - k_prev - offset).rem_euclid(n as i64)
}

/// True iff the configuration satisfies the Z_n Gauss law at every site:
/// k_x - k_{x-1} = n_x + ((-1)^x - 1)/2 (mod n).
pub fn check_gauss_law(config: &GaugeConfig, spec: &LatticeSpec) -> bool {
    let n = spec.group_order;
    (0..spec.num_sites).all(|x| {
        let residue = gauss_residue(config, x, n);
        (config.occupations[x] as i64).rem_euclid(n as i64) == residue
    })
}

/// Every gauge-invariant configuration at the configured filling, in
/// lexicographic order on (field_indices, occupations).
pub fn enumerate_basis(spec: &LatticeSpec) -> Vec<GaugeConfig> {
    let num_sites = spec.num_sites;
    let n = spec.group_order;
    let mut out = Vec::new();
    let mut fields = vec![0usize; num_sites];
    loop {
        let probe = GaugeConfig { field_indices: fields.clone(), occupations: vec![0; num_sites] };
        // The Gauss law fixes each occupation modulo n; solutions in {0, 1}.
        let mut candidates: Vec<Vec<u8>> = Vec::with_capacity(num_sites);
        let mut feasible = true;
        for x in 0..num_sites {
            let residue = gauss_residue(&probe, x, n);
            let site: Vec<u8> = [0u8, 1u8]
                .into_iter()
                .filter(|&occ| (occ as i64).rem_euclid(n as i64) == residue)
                .collect();
            if site.is_empty() {
                feasible = false;
                break;
            }
            candidates.push(site);
        }
        if feasible {
            collect_occupations(&candidates, spec.filling, &mut Vec::new(), &fields, &mut out);
        }
        // Next field tuple in lexicographic order.
        let mut pos = num_sites;
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            fields[pos] += 1;
            if fields[pos] < n {
                break;
            }
            fields[pos] = 0;
        }
        if fields.iter().all(|&k| k == 0) {
            break;
        }
    }
    out.sort();
    out
}

fn collect_occupations(
    candidates: &[Vec<u8>],
    filling: usize,
    prefix: &mut Vec<u8>,
    fields: &[usize],
    out: &mut Vec<GaugeConfig>,
) {
    let placed: usize = prefix.iter().map(|&b| b as usize).sum();
    if placed > filling {
        return;
    }
    if prefix.len() == candidates.len() {
        if placed == filling {
            out.push(GaugeConfig { field_indices: fields.to_vec(), occupations: prefix.clone() });
        }
        return;
    }
    for &occ in &candidates[prefix.len()] {
        prefix.push(occ);
        collect_occupations(candidates, filling, prefix, fields, out);
        prefix.pop();
    }
}

/// Index lookup table for a basis in its canonical order.
pub fn basis_index(basis: &[GaugeConfig]) -> HashMap<GaugeConfig, usize> {
    basis.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect()
}

/// Hamiltonian matrix over the gauge-invariant basis.
///
/// Diagonal: mu * sum (-1)^x n_x + (1/2) sum e_{k_x}^2. Off-diagonal: xi/2
/// between configurations related by a single hop, where moving a particle
/// from site x+1 to x raises the traversed link index cyclically (and the
/// reverse hop lowers it). The result is real symmetric.
pub fn build_hamiltonian(
    basis: &[GaugeConfig],
    couplings: &Couplings,
    spec: &LatticeSpec,
) -> Result<DMatrix<f64>> {
    for (i, config) in basis.iter().enumerate() {
        let filled: usize = config.occupations.iter().map(|&b| b as usize).sum();
        if !check_gauss_law(config, spec) || filled != spec.filling {
            return Err(Error::GaussLawViolation { index: i });
        }
    }
    let index = basis_index(basis);
    let dim = basis.len();
    let num_sites = spec.num_sites;
    let n = spec.group_order;
    let mut h = DMatrix::zeros(dim, dim);
    for (i, config) in basis.iter().enumerate() {
        h[(i, i)] = couplings.mu * config.staggered_mass() as f64 + config.electric_energy(n);
        for x in 0..num_sites {
            let xp = (x + 1) % num_sites;
            // Hop x+1 -> x raises k_x.
            if config.occupations[xp] == 1 && config.occupations[x] == 0 {
                let mut target = config.clone();
                target.occupations[xp] = 0;
                target.occupations[x] = 1;
                target.field_indices[x] = (target.field_indices[x] + 1) % n;
                if let Some(&j) = index.get(&target) {
                    h[(j, i)] += couplings.xi / 2.0;
                }
            }
            // Hop x -> x+1 lowers k_x.
            if config.occupations[x] == 1 && config.occupations[xp] == 0 {
                let mut target = config.clone();
                target.occupations[x] = 0;
                target.occupations[xp] = 1;
                target.field_indices[x] = (target.field_indices[x] + n - 1) % n;
                if let Some(&j) = index.get(&target) {
                    h[(j, i)] += couplings.xi / 2.0;
                }
            }
        }
    }
    Ok(h)
}
