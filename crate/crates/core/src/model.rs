//! The 1D Fermi-Hubbard Hamiltonian and the staggered quench operators.
//!
//! Energies are measured in units of the hopping `J` (so `J = 1` internally;
//! interaction and temperature enter as `U/J` and `T/J`, times as `tJ`).

use std::sync::Arc;

use crate::fock::{
    apply_annihilation, apply_creation, mode, weighted_number_operator, SectorBasis,
    SparseOperator, Spin,
};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

/// Chain parameters. `u` is the on-site interaction in units of the hopping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HubbardParams<T> {
    pub sites: usize,
    pub u: T,
    pub boundary: Boundary,
}

impl<T: Scalar> HubbardParams<T> {
    pub fn new(sites: usize, u: T, boundary: Boundary) -> Result<Self> {
        if sites < 2 {
            return Err(Error::InvalidArgument("need at least 2 sites".into()));
        }
        Ok(HubbardParams { sites, u, boundary })
    }
}

/// Which staggered operator: `Plus` alternates spin (staggered magnetization),
/// `Minus` alternates density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StaggeredKind {
    Plus,
    Minus,
}

impl StaggeredKind {
    pub fn label(self) -> &'static str {
        match self {
            StaggeredKind::Plus => "plus",
            StaggeredKind::Minus => "minus",
        }
    }
}

/// Hubbard Hamiltonian
/// `H0 = -J sum_{x,s} (c^dag_{s,x} c_{s,x+1} + h.c.) + U sum_x n_dn,x n_up,x`
/// on the given sector basis.
pub fn build_hubbard<T: Scalar>(
    params: &HubbardParams<T>,
    basis: &Arc<SectorBasis>,
) -> Result<SparseOperator<T>> {
    if basis.sector.sites != params.sites {
        return Err(Error::InvalidArgument(format!(
            "basis has {} sites, params {}",
            basis.sector.sites, params.sites
        )));
    }
    let sites = params.sites;
    let mut bonds: Vec<(usize, usize)> = (0..sites - 1).map(|x| (x, x + 1)).collect();
    if params.boundary == Boundary::Periodic {
        bonds.push((sites - 1, 0));
    }
    let minus_j = -T::one();
    let mut entries: Vec<(u32, u32, T)> = Vec::new();
    for (col, &s) in basis.states().iter().enumerate() {
        // on-site interaction
        let doublons = (0..sites)
            .filter(|&x| s.occupied(mode(x, Spin::Up)) && s.occupied(mode(x, Spin::Down)))
            .count();
        if doublons > 0 {
            entries.push((col as u32, col as u32, params.u * T::from_f64_c(doublons as f64)));
        }
        // hopping, both directions of every bond
        for &(a, b) in &bonds {
            for spin in [Spin::Up, Spin::Down] {
                for (src, dst) in [(mode(b, spin), mode(a, spin)), (mode(a, spin), mode(b, spin))] {
                    let Some((s1, sg1)) = apply_annihilation(src, s) else { continue };
                    let Some((s2, sg2)) = apply_creation(dst, s1) else { continue };
                    let row = basis
                        .index_of(s2)
                        .expect("hopping conserves the sector");
                    entries.push((
                        row as u32,
                        col as u32,
                        minus_j * T::from_f64_c((sg1 * sg2) as f64),
                    ));
                }
            }
        }
    }
    SparseOperator::new(basis.clone(), entries, true)
}

/// Per-mode weights of the staggered operators: `(-1)^x` for spin up and
/// `-(-1)^x` (`Plus`) or `+(-1)^x` (`Minus`) for spin down. The sublattice
/// phase starts at `+1` for `x = 0`.
pub fn staggered_weights<T: Scalar>(kind: StaggeredKind, sites: usize) -> Vec<T> {
    let mut w = vec![T::zero(); 2 * sites];
    for x in 0..sites {
        let sgn = if x % 2 == 0 { T::one() } else { -T::one() };
        w[mode(x, Spin::Up)] = sgn;
        w[mode(x, Spin::Down)] = match kind {
            StaggeredKind::Plus => -sgn,
            StaggeredKind::Minus => sgn,
        };
    }
    w
}

/// Staggered magnetization (`Plus`) or density (`Minus`) operator.
pub fn staggered_operator<T: Scalar>(
    kind: StaggeredKind,
    sites: usize,
    basis: &Arc<SectorBasis>,
) -> Result<SparseOperator<T>> {
    weighted_number_operator(&staggered_weights(kind, sites), basis)
}

/// Quenched Hamiltonian `H0 - q O`.
pub fn quench_hamiltonian<T: Scalar>(
    h0: &SparseOperator<T>,
    o: &SparseOperator<T>,
    q: T,
) -> Result<SparseOperator<T>> {
    h0.add_scaled(o, -q)
}
