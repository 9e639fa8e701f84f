//! Eigendecompositions, thermal states, and the three routes to the quantum
//! Fisher information: the exact eigenbasis formula, the tanh-weighted
//! spectral sum, and the time-domain response integral
//! `F_Q = 4T int chi(t,T)/sinh(pi t T) dt`.
//!
//! The response function follows the convention
//! `chi(t,T) = i theta(t) <[O(t), O(0)]>`, which is real and, expanded in the
//! eigenbasis of `H0`, becomes `sum (rho_a - rho_b) |O_ab|^2 sin(omega_ab t)`
//! with `omega_ab = eps_b - eps_a`.

use ndarray::{Array1, Array2};

use crate::fock::SparseOperator;
use crate::numeric::{fit_t2_t3, simpson_uniform};
use crate::{EigScalar, Error, Result, Scalar};

/// Weight below which a spectral pair is dropped; far below every tolerance
/// used by callers.
const PAIR_EPS: f64 = 1e-14;

/// Dense eigendecomposition of a hermitian operator. Eigenvalues ascend;
/// eigenvector `k` is column `k`.
#[derive(Debug, Clone)]
pub struct Spectrum<T> {
    pub eigenvalues: Array1<T>,
    pub eigenvectors: Array2<T>,
}

impl<T: Scalar> Spectrum<T> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Max residual `||H v_k - eps_k v_k||` over eigenpairs.
    pub fn residual_error(&self, op: &SparseOperator<T>) -> T {
        let n = self.dim();
        let mut hv: Array2<T> = Array2::zeros((n, n));
        for &(r, c, v) in op.entries() {
            let (r, c) = (r as usize, c as usize);
            for k in 0..n {
                hv[(r, k)] += v * self.eigenvectors[(c, k)];
            }
        }
        let mut worst = T::zero();
        for k in 0..n {
            let mut acc = T::zero();
            for i in 0..n {
                let d = hv[(i, k)] - self.eigenvalues[k] * self.eigenvectors[(i, k)];
                acc += d * d;
            }
            worst = worst.max(acc.sqrt());
        }
        worst
    }

    /// Max deviation of `V^T V` from the identity.
    pub fn orthonormality_error(&self) -> T {
        let g = self.eigenvectors.t().dot(&self.eigenvectors);
        let mut worst = T::zero();
        for ((i, j), &v) in g.indexed_iter() {
            let expect = if i == j { T::one() } else { T::zero() };
            worst = worst.max((v - expect).abs());
        }
        worst
    }
}

/// Canonical weights of a thermal state at temperature `T` (k_B = 1),
/// restricted to the operator's symmetry sector.
#[derive(Debug, Clone)]
pub struct ThermalState<T> {
    pub temperature: T,
    pub weights: Array1<T>,
    pub log_z: T,
}

/// Spectral decomposition of the response function: one `(omega, weight)`
/// entry per ordered eigenpair, `weight = (rho_a - rho_b) |O_ab|^2`.
#[derive(Debug, Clone)]
pub struct SpectralResponse<T> {
    pub peaks: Vec<(T, T)>,
}

impl<T: Scalar> SpectralResponse<T> {
    /// How far the peak list is from exact antisymmetry under
    /// `(omega, weight) -> (-omega, -weight)`.
    pub fn antisymmetry_error(&self) -> T {
        // (omega, weight) -> (-omega, -weight) reverses the lexicographic
        // order, so matching i against n-1-i pairs negated entries even when
        // frequencies are degenerate
        let mut sorted: Vec<(T, T)> = self.peaks.clone();
        sorted.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap()
                .then(a.1.partial_cmp(&b.1).unwrap())
        });
        let mut err = T::zero();
        let n = sorted.len();
        for i in 0..n {
            let (w1, a1) = sorted[i];
            let (w2, a2) = sorted[n - 1 - i];
            err = err.max((w1 + w2).abs().max((a1 + a2).abs()));
        }
        err
    }

    /// `chi'(0) = sum weight * omega`, the initial slope of the response.
    pub fn initial_slope(&self) -> T {
        self.peaks.iter().map(|&(w, a)| w * a).fold(T::zero(), |s, v| s + v)
    }
}

/// Uniformly sampled real signal starting at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    pub t0: T,
    pub dt: T,
    pub values: Vec<T>,
}

impl<T: Scalar> TimeSeries<T> {
    pub fn new(t0: T, dt: T, values: Vec<T>) -> Self {
        assert!(dt > T::zero(), "time step must be positive");
        assert!(values.iter().all(|v| v.is_finite()), "series must be finite");
        TimeSeries { t0, dt, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> T {
        self.t0 + self.dt * T::from_f64_c(i as f64)
    }

    pub fn last_time(&self) -> T {
        self.time(self.len().saturating_sub(1))
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.t0 == other.t0 && self.dt == other.dt && self.len() == other.len()
    }
}

/// Uniform time grid `0, dt, ..., (len-1) dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T> {
    pub dt: T,
    pub len: usize,
}

impl<T: Scalar> TimeGrid<T> {
    /// Grid reaching at least `t_max`.
    pub fn to(dt: T, t_max: T) -> Self {
        let steps = (t_max / dt).to_f64().expect("finite").ceil() as usize;
        TimeGrid { dt, len: steps + 1 }
    }

    /// Grid long enough that the thermal kernel tail is negligible:
    /// `pi T t_max >= pi_t_tmax`.
    pub fn for_temperature(dt: T, temperature: T, pi_t_tmax: T) -> Self {
        Self::to(dt, pi_t_tmax / (T::pi() * temperature))
    }

    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        let dt = self.dt;
        (0..self.len).map(move |i| dt * T::from_f64_c(i as f64))
    }

    pub fn t_max(&self) -> T {
        self.dt * T::from_f64_c((self.len - 1) as f64)
    }
}

/// Full dense eigendecomposition of a hermitian sparse operator.
pub fn diagonalize<T: EigScalar>(op: &SparseOperator<T>) -> Result<Spectrum<T>> {
    if !op.is_hermitian() {
        return Err(Error::NotHermitian(
            op.hermiticity_error().to_f64().unwrap_or(f64::NAN),
        ));
    }
    let (eigenvalues, eigenvectors) = T::sym_eigh(&op.to_dense())?;
    Ok(Spectrum { eigenvalues, eigenvectors })
}

/// Canonical weights `rho_k = exp(-(eps_k - eps_min)/T) / Z` with the shift
/// keeping the exponentials in range.
pub fn thermal_state<T: Scalar>(spectrum: &Spectrum<T>, temperature: T) -> Result<ThermalState<T>> {
    if !(temperature > T::zero()) {
        return Err(Error::NonPositiveTemperature(
            temperature.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let eps_min = spectrum.eigenvalues[0];
    let boltzmann: Array1<T> = spectrum
        .eigenvalues
        .mapv(|e| (-(e - eps_min) / temperature).exp());
    let z: T = boltzmann.iter().copied().sum();
    Ok(ThermalState {
        temperature,
        weights: boltzmann.mapv(|w| w / z),
        log_z: z.ln() - eps_min / temperature,
    })
}

/// Transform an operator into the eigenbasis: `V^T O V`.
pub fn operator_in_eigenbasis<T: Scalar>(
    spectrum: &Spectrum<T>,
    op: &SparseOperator<T>,
) -> Array2<T> {
    let v = &spectrum.eigenvectors;
    let ov = match op.as_diagonal() {
        Some(d) => {
            let mut x = v.clone();
            for (mut row, &scale) in x.rows_mut().into_iter().zip(d.iter()) {
                row.mapv_inplace(|e| e * scale);
            }
            x
        }
        None => {
            let n = op.dim();
            let mut x: Array2<T> = Array2::zeros((n, n));
            for &(r, c, val) in op.entries() {
                let (r, c) = (r as usize, c as usize);
                for k in 0..n {
                    x[(r, k)] += val * v[(c, k)];
                }
            }
            x
        }
    };
    v.t().dot(&ov)
}

/// Thermal expectation value `Tr[rho O]`.
pub fn thermal_expectation<T: Scalar>(
    spectrum: &Spectrum<T>,
    state: &ThermalState<T>,
    op: &SparseOperator<T>,
) -> T {
    let v = &spectrum.eigenvectors;
    let n = spectrum.dim();
    let mut acc = T::zero();
    match op.as_diagonal() {
        Some(d) => {
            // sum_s o_s sum_k rho_k V[s,k]^2
            for s in 0..n {
                if d[s] == T::zero() {
                    continue;
                }
                let mut occ = T::zero();
                for k in 0..n {
                    occ += state.weights[k] * v[(s, k)] * v[(s, k)];
                }
                acc += d[s] * occ;
            }
        }
        None => {
            for k in 0..n {
                let col = v.column(k).to_owned();
                let ocol = op.apply(&col);
                acc += state.weights[k] * col.dot(&ocol);
            }
        }
    }
    acc
}

/// QFI of a density matrix diagonalized alongside `H0`:
/// `F_Q = 2 sum_{a,b} (rho_a - rho_b)^2 / (rho_a + rho_b) |O_ab|^2`.
/// Pairs with `rho_a + rho_b` below 1e-30 are skipped; their contribution is
/// bounded by the sum itself since `|rho_a - rho_b| <= rho_a + rho_b`.
pub fn qfi_exact<T: EigScalar>(
    spectrum: &Spectrum<T>,
    state: &ThermalState<T>,
    op: &SparseOperator<T>,
) -> Result<T> {
    if op.dim() != spectrum.dim() {
        return Err(Error::BasisMismatch);
    }
    let o_eig = operator_in_eigenbasis(spectrum, op);
    let n = spectrum.dim();
    let floor = T::from_f64_c(1e-30);
    let two = T::from_f64_c(2.0);
    let mut f = T::zero();
    for a in 0..n {
        let ra = state.weights[a];
        for b in 0..n {
            let rb = state.weights[b];
            let sum = ra + rb;
            if sum < floor {
                continue;
            }
            let diff = ra - rb;
            let o2 = o_eig[(a, b)] * o_eig[(a, b)];
            f += two * diff * diff / sum * o2;
        }
    }
    Ok(f)
}

/// QFI of a pure state: `4 (<O^2> - <O>^2)`.
pub fn qfi_pure<T: Scalar>(state: &Array1<T>, op: &SparseOperator<T>) -> Result<T> {
    if state.len() != op.dim() {
        return Err(Error::BasisMismatch);
    }
    let norm_err = (state.dot(state).sqrt() - T::one()).abs();
    if norm_err > T::from_f64_c(1e-8) {
        return Err(Error::NotNormalized(norm_err.to_f64().unwrap_or(f64::NAN)));
    }
    let o_state = op.apply(state);
    let mean = state.dot(&o_state);
    let second = o_state.dot(&o_state);
    Ok(T::from_f64_c(4.0) * (second - mean * mean))
}

/// All spectral pairs contributing to the response function.
pub fn response_peaks<T: Scalar>(
    spectrum: &Spectrum<T>,
    state: &ThermalState<T>,
    op: &SparseOperator<T>,
) -> Result<SpectralResponse<T>> {
    if op.dim() != spectrum.dim() {
        return Err(Error::BasisMismatch);
    }
    let o_eig = operator_in_eigenbasis(spectrum, op);
    let n = spectrum.dim();
    let eps = T::from_f64_c(PAIR_EPS);
    let mut peaks = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let diff = state.weights[a] - state.weights[b];
            let o2 = o_eig[(a, b)] * o_eig[(a, b)];
            if diff.abs() <= eps || o2 <= eps {
                continue;
            }
            peaks.push((
                spectrum.eigenvalues[b] - spectrum.eigenvalues[a],
                diff * o2,
            ));
        }
    }
    Ok(SpectralResponse { peaks })
}

/// Response function on a time grid: `chi(t) = sum weight sin(omega t)`.
pub fn chi_t<T: Scalar>(peaks: &SpectralResponse<T>, grid: &TimeGrid<T>) -> TimeSeries<T> {
    let mut values = vec![T::zero(); grid.len];
    for (i, t) in grid.times().enumerate() {
        let mut acc = T::zero();
        for &(omega, weight) in &peaks.peaks {
            acc += weight * (omega * t).sin();
        }
        values[i] = acc;
    }
    TimeSeries::new(T::zero(), grid.dt, values)
}

/// Frequency-domain QFI route: `F_Q = sum 2 tanh(omega/2T) weight` over the
/// peak list. Identical to `qfi_exact` for canonical weights, where
/// `(rho_a - rho_b)/(rho_a + rho_b) = tanh(omega_ab / 2T)`.
pub fn qfi_from_chi_w<T: Scalar>(peaks: &SpectralResponse<T>, temperature: T) -> T {
    let two = T::from_f64_c(2.0);
    peaks
        .peaks
        .iter()
        .map(|&(omega, weight)| two * (omega / (two * temperature)).tanh() * weight)
        .fold(T::zero(), |s, v| s + v)
}

/// Time-domain QFI route: `4T int_0^tc chi(t)/sinh(pi t T) dt` by composite
/// Simpson quadrature. The `t -> 0` integrand limit is `chi'(0)/(pi T)`, with
/// the slope estimated from the first two samples (the series is odd in `t`).
pub fn qfi_from_chi_t<T: Scalar>(chi: &TimeSeries<T>, temperature: T, t_cutoff: T) -> Result<T> {
    if chi.t0 != T::zero() {
        return Err(Error::InvalidArgument("response series must start at t=0".into()));
    }
    if chi.dt.to_f64().unwrap_or(1.0) > 0.1 {
        return Err(Error::GridTooCoarse(chi.dt.to_f64().unwrap_or(f64::NAN)));
    }
    let n_cut = cutoff_index(chi, t_cutoff)?;
    let pi_t = T::pi() * temperature;
    let mut integrand = Vec::with_capacity(n_cut + 1);
    // chi(t) ~ c t + O(t^3): Richardson estimate of c from the first samples
    let c = (T::from_f64_c(8.0) * chi.values[1] - chi.values[2])
        / (T::from_f64_c(6.0) * chi.dt);
    integrand.push(c / pi_t);
    for i in 1..=n_cut {
        integrand.push(chi.values[i] / (pi_t * chi.time(i)).sinh());
    }
    Ok(T::from_f64_c(4.0) * temperature * simpson_uniform(&integrand, chi.dt))
}

pub(crate) fn cutoff_index<T: Scalar>(series: &TimeSeries<T>, t_cutoff: T) -> Result<usize> {
    if series.len() < 5 {
        return Err(Error::InvalidArgument("series too short".into()));
    }
    let idx = (t_cutoff / series.dt).to_f64().expect("finite");
    let n_cut = (idx + 1e-9).floor() as usize;
    if n_cut + 1 > series.len() {
        return Err(Error::InvalidArgument(format!(
            "series ends at t={} before the cutoff {}",
            series.last_time(),
            t_cutoff
        )));
    }
    Ok(n_cut.max(4))
}

/// Short-time slope fit `xi(t) ~ c2 t^2 + c3 t^3` over samples `1..=4`,
/// returning `c2`. Signals after a step quench vanish quadratically.
pub(crate) fn quadratic_onset<T: Scalar>(series: &TimeSeries<T>) -> T {
    let ts: Vec<T> = (1..5).map(|i| series.time(i)).collect();
    let ys: Vec<T> = (1..5).map(|i| series.values[i]).collect();
    fit_t2_t3(&ts, &ys).0
}
