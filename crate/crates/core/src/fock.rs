//! Fermionic Fock space over a finite set of modes, organized in symmetry
//! sectors of fixed particle number per spin species.
//!
//! Modes are indexed `m = 2x + spin` for site `x` and spin `up = 0`,
//! `down = 1`, which keeps the two spin orbitals of a site adjacent. States
//! are occupation bitmasks; creation and annihilation operators carry the
//! Jordan-Wigner sign `(-1)^(number of occupied modes below m)` relative to
//! that fixed mode ordering.

use std::sync::Arc;

use ndarray::{Array1, Array2};

use crate::{Error, Result, Scalar};

/// Spin species of a mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spin {
    Up,
    Down,
}

/// Mode index of site `x` with spin `s`.
pub fn mode(x: usize, s: Spin) -> usize {
    2 * x + match s {
        Spin::Up => 0,
        Spin::Down => 1,
    }
}

/// Site of mode `m`.
pub fn site_of(m: usize) -> usize {
    m / 2
}

/// Spin of mode `m`.
pub fn spin_of(m: usize) -> Spin {
    if m % 2 == 0 { Spin::Up } else { Spin::Down }
}

/// Occupation-number basis state as a bitmask; bit `m` is the occupation of
/// mode `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockState(pub u64);

impl FockState {
    pub const VACUUM: FockState = FockState(0);

    pub fn occupied(self, m: usize) -> bool {
        (self.0 >> m) & 1 == 1
    }

    pub fn particle_count(self) -> u32 {
        self.0.count_ones()
    }

    fn jw_sign(self, m: usize) -> i8 {
        let below = self.0 & ((1u64 << m) - 1);
        if below.count_ones() % 2 == 0 { 1 } else { -1 }
    }
}

/// Apply `c^dagger_m`. Returns the new state and the Jordan-Wigner sign, or
/// `None` if the mode is already occupied.
pub fn apply_creation(m: usize, s: FockState) -> Option<(FockState, i8)> {
    if s.occupied(m) {
        return None;
    }
    Some((FockState(s.0 | (1u64 << m)), s.jw_sign(m)))
}

/// Apply `c_m`. Returns the new state and the Jordan-Wigner sign, or `None`
/// if the mode is empty.
pub fn apply_annihilation(m: usize, s: FockState) -> Option<(FockState, i8)> {
    if !s.occupied(m) {
        return None;
    }
    Some((FockState(s.0 & !(1u64 << m)), s.jw_sign(m)))
}

/// Particle-number and magnetization sector of an `L`-site chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymmetrySector {
    pub sites: usize,
    pub n_up: usize,
    pub n_down: usize,
}

impl SymmetrySector {
    pub fn half_filling(sites: usize) -> Self {
        SymmetrySector { sites, n_up: sites / 2, n_down: sites / 2 }
    }

    pub fn n_modes(&self) -> usize {
        2 * self.sites
    }

    pub fn total_particles(&self) -> usize {
        self.n_up + self.n_down
    }
}

/// Ordered basis of a symmetry sector: all bitmasks with the sector's
/// per-spin occupations, ascending by mask value.
#[derive(Debug)]
pub struct SectorBasis {
    pub sector: SymmetrySector,
    states: Vec<FockState>,
}

impl SectorBasis {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> FockState {
        self.states[i]
    }

    /// Position of `s` in the basis, if it belongs to the sector.
    pub fn index_of(&self, s: FockState) -> Option<usize> {
        self.states.binary_search(&s).ok()
    }

    pub fn n_modes(&self) -> usize {
        self.sector.n_modes()
    }

    fn compatible(&self, other: &SectorBasis) -> bool {
        self.sector == other.sector
    }
}

/// Enumerate the basis of the `(n_up, n_down)` sector on `sites` sites.
pub fn build_sector_basis(sites: usize, n_up: usize, n_down: usize) -> Result<Arc<SectorBasis>> {
    if sites == 0 || sites > 32 || n_up > sites || n_down > sites {
        return Err(Error::InvalidSector { sites, n_up, n_down });
    }
    let ups = spread_combinations(sites, n_up, 0);
    let downs = spread_combinations(sites, n_down, 1);
    let mut states = Vec::with_capacity(ups.len() * downs.len());
    for &u in &ups {
        for &d in &downs {
            states.push(FockState(u | d));
        }
    }
    states.sort_unstable();
    Ok(Arc::new(SectorBasis {
        sector: SymmetrySector { sites, n_up, n_down },
        states,
    }))
}

/// All ways to occupy `count` of `sites` orbitals, with site `x` mapped to
/// bit `2x + offset`.
fn spread_combinations(sites: usize, count: usize, offset: usize) -> Vec<u64> {
    let mut out = Vec::new();
    let mut pick = vec![0usize; count];
    fn rec(sites: usize, offset: usize, pick: &mut Vec<usize>, depth: usize, start: usize, out: &mut Vec<u64>) {
        if depth == pick.len() {
            let mask = pick.iter().take(depth).fold(0u64, |m, &x| m | 1u64 << (2 * x + offset));
            out.push(mask);
            return;
        }
        for x in start..sites {
            pick[depth] = x;
            rec(sites, offset, pick, depth + 1, x + 1, out);
        }
    }
    rec(sites, offset, &mut pick, 0, 0, &mut out);
    out
}

/// Sparse operator on a sector basis, stored as (row, col, value) triplets.
/// Duplicate coordinates accumulate. Values are real: every operator built
/// here (Hamiltonians, number operators, their quenched combinations) is
/// real in the occupation basis.
#[derive(Debug, Clone)]
pub struct SparseOperator<T> {
    basis: Arc<SectorBasis>,
    entries: Vec<(u32, u32, T)>,
    hermitian: bool,
}

impl<T: Scalar> SparseOperator<T> {
    pub fn new(basis: Arc<SectorBasis>, entries: Vec<(u32, u32, T)>, hermitian: bool) -> Result<Self> {
        let dim = basis.len() as u32;
        if entries.iter().any(|&(r, c, _)| r >= dim || c >= dim) {
            return Err(Error::InvalidArgument("entry index out of range".into()));
        }
        let op = SparseOperator { basis, entries, hermitian };
        if hermitian {
            let err = op.hermiticity_error();
            if err > T::from_f64_c(1e-12) {
                return Err(Error::NotHermitian(err.to_f64().unwrap_or(f64::NAN)));
            }
        }
        Ok(op)
    }

    /// Diagonal operator from per-state values.
    pub fn diagonal(basis: Arc<SectorBasis>, diag: Vec<T>) -> Result<Self> {
        if diag.len() != basis.len() {
            return Err(Error::InvalidArgument("diagonal length != basis size".into()));
        }
        let entries = diag
            .into_iter()
            .enumerate()
            .filter(|&(_, v)| v != T::zero())
            .map(|(i, v)| (i as u32, i as u32, v))
            .collect();
        Ok(SparseOperator { basis, entries, hermitian: true })
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn entries(&self) -> &[(u32, u32, T)] {
        &self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn same_basis(&self, other: &Self) -> bool {
        self.basis.compatible(&other.basis)
    }

    /// Largest |A - A^T| entry after accumulating duplicates.
    pub fn hermiticity_error(&self) -> T {
        let mut acc: std::collections::BTreeMap<(u32, u32), T> = std::collections::BTreeMap::new();
        for &(r, c, v) in &self.entries {
            *acc.entry((r, c)).or_insert_with(T::zero) += v;
        }
        let mut err = T::zero();
        for (&(r, c), &v) in &acc {
            let vt = acc.get(&(c, r)).copied().unwrap_or_else(T::zero);
            err = err.max((v - vt).abs());
        }
        err
    }

    pub fn to_dense(&self) -> Array2<T> {
        let n = self.dim();
        let mut m: Array2<T> = Array2::zeros((n, n));
        for &(r, c, v) in &self.entries {
            m[(r as usize, c as usize)] += v;
        }
        m
    }

    /// If the operator is purely diagonal, its diagonal as a vector.
    pub fn as_diagonal(&self) -> Option<Array1<T>> {
        if self.entries.iter().any(|&(r, c, _)| r != c) {
            return None;
        }
        let mut d: Array1<T> = Array1::zeros(self.dim());
        for &(r, _, v) in &self.entries {
            d[r as usize] += v;
        }
        Some(d)
    }

    pub fn apply(&self, x: &Array1<T>) -> Array1<T> {
        let mut y: Array1<T> = Array1::zeros(self.dim());
        for &(r, c, v) in &self.entries {
            y[r as usize] += v * x[c as usize];
        }
        y
    }

    /// `self + factor * other`, requiring a shared basis.
    pub fn add_scaled(&self, other: &Self, factor: T) -> Result<Self> {
        if !self.same_basis(other) {
            return Err(Error::BasisMismatch);
        }
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().map(|&(r, c, v)| (r, c, factor * v)));
        SparseOperator::new(self.basis.clone(), entries, self.hermitian && other.hermitian)
    }
}

/// Diagonal operator `sum_m w(m) n_m` weighting the occupation of each mode.
pub fn weighted_number_operator<T: Scalar>(
    weights: &[T],
    basis: &Arc<SectorBasis>,
) -> Result<SparseOperator<T>> {
    if weights.len() != basis.n_modes() {
        return Err(Error::WeightLength { expected: basis.n_modes(), got: weights.len() });
    }
    let diag = basis
        .states()
        .iter()
        .map(|s| {
            weights
                .iter()
                .enumerate()
                .filter(|&(m, _)| s.occupied(m))
                .fold(T::zero(), |acc, (_, &w)| acc + w)
        })
        .collect();
    SparseOperator::diagonal(basis.clone(), diag)
}

/// Sparse amplitude vector over occupation bitmasks, not restricted to a
/// sector. Used to assemble k-producible states mode block by mode block.
#[derive(Debug, Clone, Default)]
pub struct FockVector<T> {
    entries: Vec<(FockState, T)>,
}

impl<T: Scalar> FockVector<T> {
    pub fn vacuum() -> Self {
        FockVector { entries: vec![(FockState::VACUUM, T::one())] }
    }

    pub fn from_entries(mut entries: Vec<(FockState, T)>) -> Self {
        entries.sort_unstable_by_key(|&(s, _)| s);
        let mut merged: Vec<(FockState, T)> = Vec::with_capacity(entries.len());
        for (s, a) in entries {
            match merged.last_mut() {
                Some((last, acc)) if *last == s => *acc += a,
                _ => merged.push((s, a)),
            }
        }
        merged.retain(|&(_, a)| a != T::zero());
        FockVector { entries: merged }
    }

    pub fn entries(&self) -> &[(FockState, T)] {
        &self.entries
    }

    pub fn norm(&self) -> T {
        self.entries.iter().map(|&(_, a)| a * a).fold(T::zero(), |s, v| s + v).sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        FockVector {
            entries: self.entries.iter().map(|&(s, a)| (s, a / n)).collect(),
        }
    }

    /// Apply `c^dagger_m` to every component, dropping Pauli-blocked ones.
    pub fn create(&self, m: usize) -> Self {
        let entries = self
            .entries
            .iter()
            .filter_map(|&(s, a)| {
                apply_creation(m, s).map(|(s2, sign)| (s2, a * T::from_f64_c(sign as f64)))
            })
            .collect();
        FockVector::from_entries(entries)
    }

    pub fn add_scaled(&self, other: &Self, factor: T) -> Self {
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().map(|&(s, a)| (s, factor * a)));
        FockVector::from_entries(entries)
    }

    /// Mean and variance of the mode-weight observable `sum_m w(m) n_m` in
    /// this (normalized) state.
    pub fn weight_moments(&self, weights: &[T]) -> (T, T) {
        let mut mean = T::zero();
        let mut second = T::zero();
        for &(s, a) in &self.entries {
            let p = a * a;
            let val = weights
                .iter()
                .enumerate()
                .filter(|&(m, _)| s.occupied(m))
                .fold(T::zero(), |acc, (_, &w)| acc + w);
            mean += p * val;
            second += p * val * val;
        }
        (mean, second - mean * mean)
    }

    /// Dense coefficients in a sector basis. Errors if any component lies
    /// outside the sector.
    pub fn project(&self, basis: &SectorBasis) -> Result<Array1<T>> {
        let mut v: Array1<T> = Array1::zeros(basis.len());
        for &(s, a) in &self.entries {
            match basis.index_of(s) {
                Some(i) => v[i] = a,
                None => {
                    return Err(Error::InvalidArgument(format!(
                        "state {:#b} outside target sector",
                        s.0
                    )))
                }
            }
        }
        Ok(v)
    }
}

/// Binomial coefficient, used to cross-check sector sizes.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}
