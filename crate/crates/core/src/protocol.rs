//! Exact simulation of the step-quench protocol and extraction of the
//! linear-response signal `xi(t,T) = Delta O(t)/q`.
//!
//! The post-quench dynamics are computed non-perturbatively: `H = H0 - q O`
//! is diagonalized once, the equilibrium density matrix is rotated into its
//! eigenbasis, and the expectation value becomes a sum of cosines
//! `Delta O(t) = sum_ab M_ab cos((E_a - E_b) t) - <O>_eq` with
//! `M = (C rho C^T) .* (V^T O V)`, evaluated on the whole time grid with two
//! dense products per block of time points.

use ndarray::{Array1, Array2};

use crate::fock::SparseOperator;
use crate::kernel::DriveProfile;
use crate::model::quench_hamiltonian;
use crate::spectral::{
    diagonalize, operator_in_eigenbasis, thermal_expectation, thermal_state, Spectrum,
    ThermalState, TimeGrid, TimeSeries,
};
use crate::{EigScalar, Error, Result, Scalar};

/// Time points evaluated per dense product; bounds the scratch memory.
const TIME_BLOCK: usize = 256;

/// One simulated quench: the deviation `Delta O(t)` of the quenched
/// expectation value from equilibrium.
#[derive(Debug, Clone)]
pub struct QuenchRun<T> {
    pub q: T,
    pub temperature: T,
    pub delta_o: TimeSeries<T>,
    pub o_equilibrium: T,
    pub operator_label: String,
}

impl<T: Scalar> QuenchRun<T> {
    /// The quench leaves the state continuous, so the signal starts at zero.
    pub fn onset_error(&self) -> T {
        self.delta_o.values[0].abs()
    }
}

/// Simulate a step quench `H0 -> H0 - q O` from the thermal state of `H0`.
pub fn simulate_quench<T: EigScalar>(
    h0: &SparseOperator<T>,
    o: &SparseOperator<T>,
    q: T,
    temperature: T,
    grid: &TimeGrid<T>,
) -> Result<QuenchRun<T>> {
    let spectrum = diagonalize(h0)?;
    let state = thermal_state(&spectrum, temperature)?;
    simulate_quench_with(h0, &spectrum, &state, o, q, grid, "custom")
}

/// Same as [`simulate_quench`] but reusing a precomputed eigendecomposition
/// and thermal state of `H0` (they are shared across `q`, the quench sign,
/// and the operator in parameter scans).
pub fn simulate_quench_with<T: EigScalar>(
    h0: &SparseOperator<T>,
    h0_spectrum: &Spectrum<T>,
    state: &ThermalState<T>,
    o: &SparseOperator<T>,
    q: T,
    grid: &TimeGrid<T>,
    operator_label: &str,
) -> Result<QuenchRun<T>> {
    let prop = QuenchPropagator::prepare(h0, h0_spectrum, o, q, operator_label)?;
    prop.run(h0_spectrum, state, o, grid)
}

/// Diagonalized quench data for one `(O, q)`; temperature-independent, so a
/// scan can evaluate many thermal states against one preparation.
pub struct QuenchPropagator<T> {
    pub q: T,
    label: String,
    quench_spectrum: Spectrum<T>,
    /// `V_q^T V_0`: unquenched eigenbasis expressed in the quenched one.
    overlap: ndarray::Array2<T>,
    /// Observable in the quenched eigenbasis.
    o_quenched: ndarray::Array2<T>,
}

impl<T: EigScalar> QuenchPropagator<T> {
    pub fn prepare(
        h0: &SparseOperator<T>,
        h0_spectrum: &Spectrum<T>,
        o: &SparseOperator<T>,
        q: T,
        label: &str,
    ) -> Result<Self> {
        if q == T::zero() {
            return Err(Error::InvalidArgument("quench amplitude must be nonzero".into()));
        }
        if !h0.same_basis(o) {
            return Err(Error::BasisMismatch);
        }
        let quenched = quench_hamiltonian(h0, o, q)?;
        let quench_spectrum = diagonalize(&quenched)?;
        let overlap = quench_spectrum.eigenvectors.t().dot(&h0_spectrum.eigenvectors);
        let o_quenched = operator_in_eigenbasis(&quench_spectrum, o);
        Ok(QuenchPropagator { q, label: label.to_string(), quench_spectrum, overlap, o_quenched })
    }

    pub fn run(
        &self,
        h0_spectrum: &Spectrum<T>,
        state: &ThermalState<T>,
        o: &SparseOperator<T>,
        grid: &TimeGrid<T>,
    ) -> Result<QuenchRun<T>> {
        // thermal ensemble rotated into the quenched eigenbasis
        let mut scaled = self.overlap.clone();
        for (mut col, &w) in scaled.columns_mut().into_iter().zip(state.weights.iter()) {
            col.mapv_inplace(|v| v * w);
        }
        let mut pair_amplitudes = scaled.dot(&self.overlap.t());
        pair_amplitudes.zip_mut_with(&self.o_quenched, |m, &o| *m *= o);

        let o_eq = thermal_expectation(h0_spectrum, state, o);
        let values =
            cosine_quadratic_form(&pair_amplitudes, &self.quench_spectrum.eigenvalues, grid, o_eq);
        Ok(QuenchRun {
            q: self.q,
            temperature: state.temperature,
            delta_o: TimeSeries::new(T::zero(), grid.dt, values),
            o_equilibrium: o_eq,
            operator_label: self.label.clone(),
        })
    }
}

/// `out_k = sum_ab M_ab cos((E_a - E_b) t_k) - offset`, evaluated as
/// `c^T M c + s^T M s` with `c_a = cos(E_a t)`, `s_a = sin(E_a t)` so the
/// grid sweep reduces to dense products.
fn cosine_quadratic_form<T: Scalar>(
    m: &Array2<T>,
    energies: &Array1<T>,
    grid: &TimeGrid<T>,
    offset: T,
) -> Vec<T> {
    let n = energies.len();
    let mut out = Vec::with_capacity(grid.len);
    let mut start = 0;
    while start < grid.len {
        let width = TIME_BLOCK.min(grid.len - start);
        let mut cos_block: Array2<T> = Array2::zeros((n, width));
        let mut sin_block: Array2<T> = Array2::zeros((n, width));
        for j in 0..width {
            let t = grid.dt * T::from_f64_c((start + j) as f64);
            for a in 0..n {
                let phase = energies[a] * t;
                cos_block[(a, j)] = phase.cos();
                sin_block[(a, j)] = phase.sin();
            }
        }
        let mc = m.dot(&cos_block);
        let ms = m.dot(&sin_block);
        for j in 0..width {
            let mut acc = T::zero();
            for a in 0..n {
                acc += cos_block[(a, j)] * mc[(a, j)] + sin_block[(a, j)] * ms[(a, j)];
            }
            out.push(acc - offset);
        }
        start += width;
    }
    out
}

/// Combine runs at `+q` and `-q` into the symmetrized linear-response signal
/// `xi(t) = [Delta O|_{+q} - Delta O|_{-q}]/(2q)`, cancelling even orders.
pub fn xi_symmetrized<T: Scalar>(
    run_plus: &QuenchRun<T>,
    run_minus: &QuenchRun<T>,
) -> Result<TimeSeries<T>> {
    if run_plus.q != -run_minus.q || run_plus.q == T::zero() {
        return Err(Error::MismatchedRuns(format!(
            "amplitudes must be opposite and nonzero, got {} and {}",
            run_plus.q, run_minus.q
        )));
    }
    if run_plus.temperature != run_minus.temperature {
        return Err(Error::MismatchedRuns("temperatures differ".into()));
    }
    if run_plus.operator_label != run_minus.operator_label {
        return Err(Error::MismatchedRuns("operators differ".into()));
    }
    if !run_plus.delta_o.same_grid(&run_minus.delta_o) {
        return Err(Error::MismatchedRuns("time grids differ".into()));
    }
    let scale = T::one() / (T::from_f64_c(2.0) * run_plus.q);
    let values = run_plus
        .delta_o
        .values
        .iter()
        .zip(&run_minus.delta_o.values)
        .map(|(&p, &m)| (p - m) * scale)
        .collect();
    Ok(TimeSeries::new(T::zero(), run_plus.delta_o.dt, values))
}

/// Linear-response prediction `Delta O_pred = (chi * f)(t)` by discrete
/// causal convolution (trapezoid weights). A delta pulse short-circuits to
/// `q chi(t)`; the step drive reduces to `q int_0^t chi`.
pub fn kubo_convolve<T: Scalar>(chi: &TimeSeries<T>, drive: &DriveProfile<T>) -> TimeSeries<T> {
    if let DriveProfile::DeltaPulse { q } = drive {
        let values = chi.values.iter().map(|&c| *q * c).collect();
        return TimeSeries::new(chi.t0, chi.dt, values);
    }
    let n = chi.len();
    let half = T::from_f64_c(0.5);
    let drive_samples: Vec<T> = (0..n).map(|j| drive.sample(chi.time(j))).collect();
    let mut values = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = T::zero();
        for j in 0..=k {
            let w = if j == 0 || j == k { half } else { T::one() };
            acc += w * chi.values[k - j] * drive_samples[j];
        }
        values.push(acc * chi.dt);
    }
    TimeSeries::new(chi.t0, chi.dt, values)
}

/// Default grid rule: `pi T t_max >= 14`, making the kernel tail below
/// 1e-6 of its peak weight.
pub fn default_grid<T: Scalar>(dt: T, temperature: T) -> TimeGrid<T> {
    TimeGrid::for_temperature(dt, temperature, T::from_f64_c(14.0))
}
