//! Integration kernels turning drive-induced dynamics into the QFI.
//!
//! The step quench uses `F_Q = int_0^tc xi(t) kappa(t,T) dt` with
//! `kappa = 4 pi T^2 / (sinh(pi t T) tanh(pi t T))`; a delta pulse uses
//! `1/sinh`; finite ramps and tabulated drives are handled by deconvolving
//! the drive in frequency space. Additive measurement noise is treated with
//! Wiener deconvolution over replicate shots.

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::numeric::{fit_line, simpson_prefix, simpson_uniform};
use crate::spectral::{cutoff_index, quadratic_onset, TimeGrid, TimeSeries};
use crate::{Error, Result, Scalar};

/// Kernel argument below which the small-`u` series of `kappa_step` is used.
const KAPPA_SERIES_CUT: f64 = 1e-3;
/// Magnitude cap on frequency-domain filters near drive zeros.
const FILTER_CAP: f64 = 1e4;
/// Fraction of the window smoothly tapered to zero before FFT-based
/// deconvolution; estimates are only trusted before the taper.
const TAPER_FRACTION: f64 = 0.1;

/// Causal drive profile `f(t)` coupled to the quench operator.
#[derive(Debug, Clone)]
pub enum DriveProfile<T> {
    /// `f(t) = q theta(t)`.
    Step { q: T },
    /// `f(t) = q delta(t)`.
    DeltaPulse { q: T },
    /// Linear ramp reaching `q` at `ramp_time`.
    LinearRamp { q: T, ramp_time: T },
    /// Arbitrary sampled causal drive.
    Tabulated { samples: TimeSeries<T> },
}

impl<T: Scalar> DriveProfile<T> {
    /// Overall amplitude scale of the drive.
    pub fn amplitude(&self) -> T {
        match self {
            DriveProfile::Step { q }
            | DriveProfile::DeltaPulse { q }
            | DriveProfile::LinearRamp { q, .. } => *q,
            DriveProfile::Tabulated { samples } => samples
                .values
                .iter()
                .fold(T::zero(), |m, &v| if v.abs() > m.abs() { v } else { m }),
        }
    }

    /// Pointwise value. The delta pulse is distributional and returns zero;
    /// convolutions special-case it.
    pub fn sample(&self, t: T) -> T {
        if t < T::zero() {
            return T::zero();
        }
        match self {
            DriveProfile::Step { q } => *q,
            DriveProfile::DeltaPulse { .. } => T::zero(),
            DriveProfile::LinearRamp { q, ramp_time } => {
                if *ramp_time <= T::zero() || t >= *ramp_time {
                    *q
                } else {
                    *q * t / *ramp_time
                }
            }
            DriveProfile::Tabulated { samples } => {
                let idx = ((t - samples.t0) / samples.dt).to_f64().unwrap_or(-1.0);
                if idx < 0.0 {
                    return T::zero();
                }
                let i = idx.round() as usize;
                samples.values.get(i).copied().unwrap_or_else(T::zero)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DriveProfile::Step { q }
            | DriveProfile::DeltaPulse { q } => {
                if *q == T::zero() {
                    return Err(Error::InvalidArgument("drive amplitude is zero".into()));
                }
            }
            DriveProfile::LinearRamp { q, ramp_time } => {
                if *q == T::zero() {
                    return Err(Error::InvalidArgument("drive amplitude is zero".into()));
                }
                if *ramp_time < T::zero() {
                    return Err(Error::InvalidArgument("ramp time must be >= 0".into()));
                }
            }
            DriveProfile::Tabulated { samples } => {
                if samples.t0 < T::zero() {
                    return Err(Error::InvalidArgument("tabulated drive must be causal".into()));
                }
                if samples.values.iter().all(|&v| v == T::zero()) {
                    return Err(Error::InvalidArgument("tabulated drive is identically zero".into()));
                }
            }
        }
        Ok(())
    }

    /// Analytic Fourier transform `f^(omega)` where one exists (away from
    /// the distributional `omega = 0` part of non-decaying drives).
    fn fourier(&self, omega: T) -> Option<Complex<T>> {
        match self {
            DriveProfile::Step { q } => {
                if omega == T::zero() {
                    None
                } else {
                    // q/(i omega)
                    Some(Complex::new(T::zero(), -*q / omega))
                }
            }
            DriveProfile::DeltaPulse { q } => Some(Complex::new(*q, T::zero())),
            DriveProfile::LinearRamp { q, ramp_time } => {
                if omega == T::zero() {
                    return None;
                }
                if *ramp_time <= T::zero() {
                    return Some(Complex::new(T::zero(), -*q / omega));
                }
                // (e^{-i a} - 1)/(omega a) * q with a = omega * ramp_time
                let a = omega * *ramp_time;
                let num = Complex::new(a.cos() - T::one(), -a.sin());
                Some(num * (*q / (omega * a)))
            }
            DriveProfile::Tabulated { .. } => None,
        }
    }
}

/// Step-quench kernel `4 pi T^2 / (sinh(pi t T) tanh(pi t T))`, evaluated by
/// a two-term series `4/(pi t^2) (1 + u^2/6 - 7u^4/120)` for small `u = pi t T`
/// where the direct form loses accuracy.
pub fn kappa_step<T: Scalar>(t: T, temperature: T) -> Result<T> {
    if !(t > T::zero()) {
        return Err(Error::InvalidArgument(format!("kernel needs t > 0, got {t}")));
    }
    if !(temperature > T::zero()) {
        return Err(Error::NonPositiveTemperature(
            temperature.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let u = T::pi() * t * temperature;
    if u < T::from_f64_c(KAPPA_SERIES_CUT) {
        let u2 = u * u;
        let series = T::one() + u2 / T::from_f64_c(6.0)
            - u2 * u2 * T::from_f64_c(7.0 / 120.0);
        Ok(T::from_f64_c(4.0) / (T::pi() * t * t) * series)
    } else {
        let four_pi_t2 = T::from_f64_c(4.0) * T::pi() * temperature * temperature;
        Ok(four_pi_t2 / (u.sinh() * u.tanh()))
    }
}

/// Result of a kernel-weighted quadrature: the integral value and a rigorous
/// bound on the neglected tail, `max|xi| kappa(t_c)/(pi T)` (valid since
/// `(ln kappa)' <= -pi T`).
#[derive(Debug, Clone, Copy)]
pub struct KernelIntegral<T> {
    pub value: T,
    pub tail_bound: T,
}

/// Step-quench QFI: `int_0^tc xi(t) kappa(t,T) dt` by composite Simpson.
/// The `t=0` integrand limit is `c2 * 4/pi` from the quadratic onset of
/// `xi = c2 t^2 + O(t^3)`, fitted to the first grid points.
pub fn qfi_from_quench<T: Scalar>(
    xi: &TimeSeries<T>,
    temperature: T,
    t_cutoff: T,
) -> Result<KernelIntegral<T>> {
    let integrand = quench_integrand(xi, temperature)?;
    let n_cut = cutoff_index(xi, t_cutoff)?;
    let value = simpson_uniform(&integrand[..=n_cut], xi.dt);
    let xi_max = xi.values.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    let t_c = xi.time(n_cut);
    let tail_bound = xi_max * kappa_step(t_c, temperature)? / (T::pi() * temperature);
    Ok(KernelIntegral { value, tail_bound })
}

fn quench_integrand<T: Scalar>(xi: &TimeSeries<T>, temperature: T) -> Result<Vec<T>> {
    if xi.t0 != T::zero() {
        return Err(Error::InvalidArgument("quench signal must start at t=0".into()));
    }
    if xi.dt.to_f64().unwrap_or(1.0) > 0.1 {
        return Err(Error::GridTooCoarse(xi.dt.to_f64().unwrap_or(f64::NAN)));
    }
    if xi.len() < 5 {
        return Err(Error::InvalidArgument("signal too short".into()));
    }
    let mut integrand = Vec::with_capacity(xi.len());
    let c2 = quadratic_onset(xi);
    integrand.push(c2 * T::from_f64_c(4.0) / T::pi());
    for i in 1..xi.len() {
        integrand.push(xi.values[i] * kappa_step(xi.time(i), temperature)?);
    }
    Ok(integrand)
}

/// Partial integrals `F_Q(t_cutoff)` at every other grid point, for
/// convergence studies.
pub fn qfi_cutoff_series<T: Scalar>(
    xi: &TimeSeries<T>,
    temperature: T,
) -> Result<TimeSeries<T>> {
    let integrand = quench_integrand(xi, temperature)?;
    let partial = simpson_prefix(&integrand, xi.dt);
    Ok(TimeSeries::new(
        T::zero(),
        xi.dt * T::from_f64_c(2.0),
        partial,
    ))
}

/// Exponential convergence fit of `log |F_inf - F(t_c)|` against `t_c` over
/// the tail window `pi T t_c in [3, 10]`.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceFit<T> {
    /// Positive decay constant; the residual shrinks like `exp(-rate t_c)`.
    pub rate: T,
    pub intercept: T,
    /// RMS residual of the straight-line fit in log space.
    pub fit_residual: T,
    pub points: usize,
}

pub fn convergence_fit<T: Scalar>(
    partial: &TimeSeries<T>,
    f_infinity: T,
    temperature: T,
) -> Result<ConvergenceFit<T>> {
    let pi_t = T::pi() * temperature;
    let floor = T::from_f64_c(1e-12) * f_infinity.abs().max(T::one());
    let mut ts = Vec::new();
    let mut logs = Vec::new();
    for (i, &f) in partial.values.iter().enumerate() {
        let t_c = partial.time(i);
        let x = pi_t * t_c;
        if x < T::from_f64_c(3.0) || x > T::from_f64_c(10.0) {
            continue;
        }
        let resid = (f_infinity - f).abs();
        if resid <= floor {
            continue;
        }
        ts.push(t_c);
        logs.push(resid.ln());
    }
    if ts.len() < 10 {
        return Err(Error::TailBelowNoiseFloor);
    }
    let (intercept, slope, fit_residual) = fit_line(&ts, &logs);
    Ok(ConvergenceFit { rate: -slope, intercept, fit_residual, points: ts.len() })
}

/// Kernel `kappa_f(tau, T)` for a drive, sampled on a time grid. The entry
/// at `tau = 0` is stored as zero: the kernels diverge there and integrators
/// treat the first point by extrapolating the finite integrand limit.
#[derive(Debug, Clone)]
pub struct KernelEval<T> {
    pub series: TimeSeries<T>,
}

/// `F_Q = 4T int Delta O(tau) kappa_f(tau) d tau` requires the kernel for
/// the specific drive: closed forms for step and delta pulse, discrete
/// Fourier synthesis for ramps (filter `g(a) = i a / (1 - e^{-ia})` applied
/// to the step kernel) and tabulated drives (regularized inversion of the
/// sampled transform).
pub fn kernel_for_drive<T: Scalar>(
    drive: &DriveProfile<T>,
    temperature: T,
    grid: &TimeGrid<T>,
) -> Result<KernelEval<T>> {
    drive.validate()?;
    if !(temperature > T::zero()) {
        return Err(Error::NonPositiveTemperature(
            temperature.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let four_t = T::from_f64_c(4.0) * temperature;
    match drive {
        DriveProfile::Step { q } => {
            let mut values = vec![T::zero(); grid.len];
            for i in 1..grid.len {
                let t = grid.dt * T::from_f64_c(i as f64);
                values[i] = kappa_step(t, temperature)? / (four_t * *q);
            }
            Ok(KernelEval { series: TimeSeries::new(T::zero(), grid.dt, values) })
        }
        DriveProfile::DeltaPulse { q } => {
            let mut values = vec![T::zero(); grid.len];
            for i in 1..grid.len {
                let t = grid.dt * T::from_f64_c(i as f64);
                values[i] = T::one() / (*q * (T::pi() * t * temperature).sinh());
            }
            Ok(KernelEval { series: TimeSeries::new(T::zero(), grid.dt, values) })
        }
        DriveProfile::LinearRamp { q, ramp_time } => {
            let step = kernel_for_drive(&DriveProfile::Step { q: *q }, temperature, grid)?;
            if *ramp_time <= T::from_f64_c(1e-12) {
                return Ok(step);
            }
            // kappa_ramp^(omega) = kappa_step^(omega) * conj(g(omega t0))
            let n_fft = (8 * grid.len).next_power_of_two();
            let mut buf: Vec<Complex<T>> = step
                .series
                .values
                .iter()
                .map(|&v| Complex::new(v, T::zero()))
                .chain(std::iter::repeat(Complex::new(T::zero(), T::zero())))
                .take(n_fft)
                .collect();
            fft_in_place(&mut buf, false);
            for (k, b) in buf.iter_mut().enumerate() {
                let omega = bin_frequency(k, n_fft, grid.dt);
                *b = *b * ramp_filter(omega * *ramp_time).conj();
            }
            fft_in_place(&mut buf, true);
            let scale = T::one() / T::from_f64_c(n_fft as f64);
            let mut values: Vec<T> = buf[..grid.len].iter().map(|c| c.re * scale).collect();
            values[0] = T::zero();
            Ok(KernelEval { series: TimeSeries::new(T::zero(), grid.dt, values) })
        }
        DriveProfile::Tabulated { samples } => {
            // kappa_f^(omega) = s^(omega) * f^(omega) / (|f^|^2 + eps) with
            // s(t) = theta(t)/sinh(pi t T); drive zeros must be isolated.
            // The zero check runs on the unpadded window, where interior
            // dead bands are not blurred by padding leakage.
            check_invertible(samples)?;
            let n_fft = (8 * grid.len.max(samples.len())).next_power_of_two();
            let f_hat = tabulated_transform(samples, n_fft);
            let mut s_buf: Vec<Complex<T>> = (0..n_fft)
                .map(|i| {
                    if i == 0 || i >= grid.len {
                        Complex::new(T::zero(), T::zero())
                    } else {
                        let t = grid.dt * T::from_f64_c(i as f64);
                        Complex::new(T::one() / (T::pi() * t * temperature).sinh(), T::zero())
                    }
                })
                .collect();
            fft_in_place(&mut s_buf, false);
            let f_max2 = f_hat.iter().map(|c| c.norm_sqr()).fold(T::zero(), T::max);
            let reg = f_max2 * T::from_f64_c(1e-12);
            for (s, f) in s_buf.iter_mut().zip(&f_hat) {
                *s = *s * *f / (f.norm_sqr() + reg);
            }
            fft_in_place(&mut s_buf, true);
            let scale = T::one() / T::from_f64_c(n_fft as f64);
            let mut values: Vec<T> = s_buf[..grid.len].iter().map(|c| c.re * scale).collect();
            values[0] = T::zero();
            Ok(KernelEval { series: TimeSeries::new(T::zero(), grid.dt, values) })
        }
    }
}

/// Ramp deconvolution filter `g(a) = i a / (1 - e^{-ia})`, capped near its
/// poles (the drive transform has isolated zeros there; the paired signal
/// vanishes at the same frequencies).
fn ramp_filter<T: Scalar>(a: T) -> Complex<T> {
    if a == T::zero() {
        return Complex::new(T::one(), T::zero());
    }
    let denom = Complex::new(T::one() - a.cos(), a.sin());
    let cap = T::from_f64_c(FILTER_CAP);
    if denom.norm_sqr() < T::from_f64_c(1e-24) {
        return Complex::new(cap, T::zero());
    }
    let g = Complex::new(T::zero(), a) / denom;
    let norm = g.norm();
    if norm > cap {
        g * (cap / norm)
    } else {
        g
    }
}

/// `F_Q = 4T int Delta O(tau) kappa_f(tau) d tau` for a sampled signal and a
/// matching kernel grid. The `tau = 0` integrand is extrapolated
/// quadratically from the first interior points.
pub fn qfi_from_drive<T: Scalar>(
    delta_o: &TimeSeries<T>,
    kernel: &KernelEval<T>,
    temperature: T,
    t_cutoff: T,
) -> Result<T> {
    if !delta_o.same_grid(&kernel.series) {
        return Err(Error::MismatchedRuns("signal and kernel grids differ".into()));
    }
    let n_cut = cutoff_index(delta_o, t_cutoff)?;
    let mut g: Vec<T> = (0..=n_cut)
        .map(|i| delta_o.values[i] * kernel.series.values[i])
        .collect();
    // quadratic extrapolation of the finite limit at tau = 0
    let (g1, g2, g3) = (g[1], g[2], g[3]);
    g[0] = g1 * T::from_f64_c(3.0) - g2 * T::from_f64_c(3.0) + g3;
    Ok(T::from_f64_c(4.0) * temperature * simpson_uniform(&g, delta_o.dt))
}

/// Power spectral densities for Wiener deconvolution, per FFT bin of the
/// padded grid (`wiener_fft_len` bins).
#[derive(Debug, Clone)]
pub struct WienerConfig<T> {
    pub s_chi: Vec<T>,
    pub s_noise: Vec<T>,
}

impl<T: Scalar> WienerConfig<T> {
    /// Flat densities, e.g. `flat(1, 0, n)` for exact inversion.
    pub fn flat(s_chi: T, s_noise: T, series_len: usize) -> Self {
        let n = wiener_fft_len(series_len);
        WienerConfig { s_chi: vec![s_chi; n], s_noise: vec![s_noise; n] }
    }
}

/// FFT length used by the Wiener pipeline for a series of `n` samples.
pub fn wiener_fft_len(n: usize) -> usize {
    (2 * n).next_power_of_two()
}

/// Wiener estimate of the response function from a noisy signal:
/// `chi^ = v^ dO^` with `v^ = f^* S_chi / (|f^|^2 S_chi + S_n)`.
///
/// The last `TAPER_FRACTION` of the window is smoothly tapered before the
/// transform; the estimate is only meaningful before the taper.
pub fn wiener_deconvolve<T: Scalar>(
    delta_o: &TimeSeries<T>,
    drive: &DriveProfile<T>,
    cfg: &WienerConfig<T>,
) -> Result<TimeSeries<T>> {
    drive.validate()?;
    if cfg.s_chi.iter().all(|&v| v == T::zero()) {
        return Err(Error::EmptySignalDensity);
    }
    if cfg.s_chi.iter().chain(&cfg.s_noise).any(|&v| v < T::zero()) {
        return Err(Error::InvalidArgument("spectral densities must be >= 0".into()));
    }
    let n = delta_o.len();
    let n_fft = wiener_fft_len(n);
    if cfg.s_chi.len() != n_fft || cfg.s_noise.len() != n_fft {
        return Err(Error::InvalidArgument(format!(
            "config has {} bins, expected {}",
            cfg.s_chi.len(),
            n_fft
        )));
    }
    let mut buf: Vec<Complex<T>> = tapered(delta_o)
        .into_iter()
        .map(|v| Complex::new(v, T::zero()))
        .chain(std::iter::repeat(Complex::new(T::zero(), T::zero())))
        .take(n_fft)
        .collect();
    fft_in_place(&mut buf, false);
    // continuous-transform normalization
    for b in buf.iter_mut() {
        *b = *b * delta_o.dt;
    }
    let f_tab = match drive {
        DriveProfile::Tabulated { samples } => Some(tabulated_transform(samples, n_fft)),
        _ => None,
    };
    for k in 0..n_fft {
        let omega = bin_frequency(k, n_fft, delta_o.dt);
        let f_hat = match &f_tab {
            Some(f) => f[k],
            None => drive
                .fourier(omega)
                .unwrap_or_else(|| Complex::new(T::from_f64_c(f64::INFINITY), T::zero())),
        };
        let v_hat = if f_hat.re.is_infinite() {
            // distributional omega = 0 part of a non-decaying drive: the
            // Wiener gain vanishes there
            Complex::new(T::zero(), T::zero())
        } else {
            let denom = f_hat.norm_sqr() * cfg.s_chi[k] + cfg.s_noise[k];
            if denom == T::zero() {
                Complex::new(T::zero(), T::zero())
            } else {
                f_hat.conj() * (cfg.s_chi[k] / denom)
            }
        };
        buf[k] = buf[k] * v_hat;
    }
    fft_in_place(&mut buf, true);
    let scale = T::one() / (T::from_f64_c(n_fft as f64) * delta_o.dt);
    let values: Vec<T> = buf[..n].iter().map(|c| c.re * scale).collect();
    Ok(TimeSeries::new(delta_o.t0, delta_o.dt, values))
}

/// Estimate the signal and noise power spectral densities from replicate
/// shots: the noise density is the per-bin sample variance across shots, the
/// signal density is the mean transform's power with the noise-on-the-mean
/// removed, referred back through the drive. Returns the shot mean and a
/// config ready for [`wiener_deconvolve`] of that mean.
pub fn estimate_spectra<T: Scalar>(
    shots: &[TimeSeries<T>],
    drive: &DriveProfile<T>,
) -> Result<(TimeSeries<T>, WienerConfig<T>)> {
    if shots.len() < 2 {
        return Err(Error::InvalidArgument("need at least two replicate shots".into()));
    }
    let n = shots[0].len();
    if shots.iter().any(|s| !s.same_grid(&shots[0])) {
        return Err(Error::MismatchedRuns("shots on different grids".into()));
    }
    let n_fft = wiener_fft_len(n);
    let dt = shots[0].dt;
    let mut transforms = Vec::with_capacity(shots.len());
    for shot in shots {
        let mut buf: Vec<Complex<T>> = tapered(shot)
            .into_iter()
            .map(|v| Complex::new(v, T::zero()))
            .chain(std::iter::repeat(Complex::new(T::zero(), T::zero())))
            .take(n_fft)
            .collect();
        fft_in_place(&mut buf, false);
        for b in buf.iter_mut() {
            *b = *b * dt;
        }
        transforms.push(buf);
    }
    let s_count = T::from_f64_c(shots.len() as f64);
    let mut s_chi = vec![T::zero(); n_fft];
    let mut s_noise = vec![T::zero(); n_fft];
    let f_tab = match drive {
        DriveProfile::Tabulated { samples } => Some(tabulated_transform(samples, n_fft)),
        _ => None,
    };
    for k in 0..n_fft {
        let mean = transforms
            .iter()
            .fold(Complex::new(T::zero(), T::zero()), |acc, t| acc + t[k])
            / s_count;
        let var = transforms
            .iter()
            .map(|t| (t[k] - mean).norm_sqr())
            .fold(T::zero(), |a, v| a + v)
            / T::from_f64_c((shots.len() - 1) as f64);
        // noise on the *mean* is var/S; subtracting twice that keeps
        // pure-noise bins at zero signal density instead of retaining the
        // positive half of their fluctuations
        let noise_on_mean = var / s_count;
        let signal_power =
            (mean.norm_sqr() - T::from_f64_c(2.0) * noise_on_mean).max(T::zero());
        let omega = bin_frequency(k, n_fft, dt);
        let f2 = match &f_tab {
            Some(f) => f[k].norm_sqr(),
            None => drive.fourier(omega).map(|f| f.norm_sqr()).unwrap_or(T::infinity()),
        };
        s_chi[k] = if f2.is_infinite() || f2 == T::zero() {
            T::zero()
        } else {
            signal_power / f2
        };
        s_noise[k] = noise_on_mean;
    }
    let mut mean_values = vec![T::zero(); n];
    for shot in shots {
        for (m, &v) in mean_values.iter_mut().zip(&shot.values) {
            *m += v / s_count;
        }
    }
    Ok((
        TimeSeries::new(shots[0].t0, dt, mean_values),
        WienerConfig { s_chi, s_noise },
    ))
}

/// Signal with a raised-cosine rolloff over its final `TAPER_FRACTION`.
fn tapered<T: Scalar>(series: &TimeSeries<T>) -> Vec<T> {
    let n = series.len();
    let start = ((1.0 - TAPER_FRACTION) * n as f64) as usize;
    let width = (n - start).max(1);
    series
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if i < start {
                v
            } else {
                let x = (i - start) as f64 / width as f64;
                v * T::from_f64_c(0.5 * (1.0 + (std::f64::consts::PI * x).cos()))
            }
        })
        .collect()
}

/// First grid index at which the taper begins; estimates beyond it are
/// distorted by design.
pub fn taper_start(len: usize) -> usize {
    ((1.0 - TAPER_FRACTION) * len as f64) as usize
}

fn tabulated_transform<T: Scalar>(samples: &TimeSeries<T>, n_fft: usize) -> Vec<Complex<T>> {
    let mut buf: Vec<Complex<T>> = samples
        .values
        .iter()
        .map(|&v| Complex::new(v, T::zero()))
        .chain(std::iter::repeat(Complex::new(T::zero(), T::zero())))
        .take(n_fft)
        .collect();
    fft_in_place(&mut buf, false);
    for b in buf.iter_mut() {
        *b = *b * samples.dt;
    }
    buf
}

/// A drive is invertible only if its transform has isolated zeros. The
/// sampled transform is scanned for interior dead bands: a run of two or
/// more near-zero bins that recovers at a higher frequency (a terminal
/// high-frequency rolloff is tamed by regularization and passes).
fn check_invertible<T: Scalar>(samples: &TimeSeries<T>) -> Result<()> {
    let n = samples.len().next_power_of_two();
    let f_hat = tabulated_transform(samples, n);
    let max_mag = f_hat.iter().map(|c| c.norm()).fold(T::zero(), T::max);
    let threshold = max_mag * T::from_f64_c(1e-6);
    let mut dead_band: Option<(usize, usize)> = None;
    let mut run_start = None;
    let mut run_len = 0usize;
    for k in 0..=n / 2 {
        if f_hat[k].norm() < threshold {
            if run_len == 0 {
                run_start = Some(k);
            }
            run_len += 1;
        } else {
            if run_len >= 2 {
                dead_band = Some((run_start.unwrap(), run_len));
            }
            run_len = 0;
            run_start = None;
        }
    }
    if let Some((k0, _)) = dead_band {
        return Err(Error::NonInvertibleDrive {
            omega: bin_frequency(k0, n, samples.dt).to_f64().unwrap_or(f64::NAN),
            threshold: threshold.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

/// Signed angular frequency of DFT bin `k`.
fn bin_frequency<T: Scalar>(k: usize, n: usize, dt: T) -> T {
    let two_pi = T::from_f64_c(2.0 * std::f64::consts::PI);
    let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    two_pi * T::from_f64_c(kk) / (T::from_f64_c(n as f64) * dt)
}

fn fft_in_place<T: Scalar>(buf: &mut [Complex<T>], inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(buf.len())
    } else {
        planner.plan_fft_forward(buf.len())
    };
    fft.process(buf);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectralResponse;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kappa_two_evaluation_paths_agree() {
        // pi t T = ln(1 + sqrt 2) makes sinh = 1
        let temperature = 0.4;
        let u = (1.0 + 2.0f64.sqrt()).ln();
        let t = u / (std::f64::consts::PI * temperature);
        let direct = kappa_step(t, temperature).unwrap();
        let via_parts = 4.0 * std::f64::consts::PI * temperature * temperature
            / (u.sinh() * u.tanh());
        assert_abs_diff_eq!(direct, via_parts, epsilon = 1e-12 * direct);
    }

    #[test]
    fn kappa_small_t_limit() {
        let temperature = 0.4;
        for &t in &[1e-6, 1e-4, 5e-4] {
            let k = kappa_step(t, temperature).unwrap();
            assert_abs_diff_eq!(k * t * t, 4.0 / std::f64::consts::PI, epsilon = 1e-6);
        }
        // series and direct evaluation agree across the switchover
        let u_cut = KAPPA_SERIES_CUT;
        for &frac in &[0.5, 0.99, 1.01, 2.0] {
            let t = frac * u_cut / (std::f64::consts::PI * temperature);
            let k = kappa_step(t, temperature).unwrap();
            let u = std::f64::consts::PI * t * temperature;
            let direct = 4.0 * std::f64::consts::PI * temperature * temperature
                / (u.sinh() * u.tanh());
            assert_abs_diff_eq!(k, direct, epsilon = 1e-10 * k);
        }
    }

    #[test]
    fn kappa_large_t_exponential_decay() {
        // kappa ~ 8 pi T^2 e^{-pi t T} asymptotically
        let temperature = 0.5;
        for &u in &[15.0, 25.0] {
            let t = u / (std::f64::consts::PI * temperature);
            let k = kappa_step(t, temperature).unwrap();
            let asym = 8.0 * std::f64::consts::PI * temperature * temperature * (-u).exp();
            assert_abs_diff_eq!(k / asym, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn kappa_positive_strictly_decreasing() {
        let temperature = 0.3;
        let mut prev = f64::INFINITY;
        for i in 1..400 {
            let t = 0.02 * i as f64;
            let k = kappa_step(t, temperature).unwrap();
            assert!(k > 0.0 && k < prev);
            prev = k;
        }
        assert!(kappa_step(0.0, temperature).is_err());
        assert!(kappa_step(-1.0, temperature).is_err());
        assert!(kappa_step(1.0, 0.0).is_err());
    }

    #[test]
    fn step_kernel_integration_by_parts_identity() {
        // -d/dt [1/sinh(pi t T)] = pi T cosh/sinh^2 = kappa/(4T)
        let temperature = 0.4;
        let h = 1e-4;
        for i in 1..200 {
            let t = 0.05 * i as f64;
            let pi_t = std::f64::consts::PI * temperature;
            let s = |x: f64| 1.0 / (pi_t * x).sinh();
            // 4th-order central difference
            let deriv = (-s(t + 2.0 * h) + 8.0 * s(t + h) - 8.0 * s(t - h) + s(t - 2.0 * h))
                / (12.0 * h);
            let kappa = kappa_step(t, temperature).unwrap();
            assert_abs_diff_eq!(-deriv, kappa / (4.0 * temperature), epsilon = 1e-10 * kappa.max(1.0));
        }
    }

    fn synthetic_two_level(delta: f64, w: f64, temperature: f64) -> (TimeSeries<f64>, f64) {
        // xi(t) = 2w (1 - cos(delta t))/delta; F = 4 w tanh(delta/2T)
        let grid = TimeGrid::for_temperature(0.005, temperature, 35.0);
        let values = grid
            .times()
            .map(|t| 2.0 * w * (1.0 - (delta * t).cos()) / delta)
            .collect();
        (
            TimeSeries::new(0.0, grid.dt, values),
            4.0 * w * (delta / (2.0 * temperature)).tanh(),
        )
    }

    #[test]
    fn quench_integral_matches_two_level_closed_form() {
        let (xi, expect) = synthetic_two_level(1.3, 0.4, 0.45);
        let f = qfi_from_quench(&xi, 0.45, xi.last_time()).unwrap();
        assert_abs_diff_eq!(f.value, expect, epsilon = 1e-6 * expect);
        assert!(f.tail_bound < 1e-5 * expect);
        // and agrees with the tanh route on the same synthetic pair
        let peaks = SpectralResponse { peaks: vec![(1.3, 0.4), (-1.3, -0.4)] };
        let f_w = crate::spectral::qfi_from_chi_w(&peaks, 0.45);
        assert_abs_diff_eq!(f.value, f_w, epsilon = 1e-6 * expect);
    }

    #[test]
    fn quench_integral_zero_signal() {
        let xi = TimeSeries::new(0.0, 0.02, vec![0.0; 600]);
        let f = qfi_from_quench(&xi, 0.4, 10.0).unwrap();
        assert_eq!(f.value, 0.0);
    }

    #[test]
    fn quench_integral_rejects_coarse_grid() {
        let xi = TimeSeries::new(0.0, 0.2, vec![0.0; 100]);
        assert!(matches!(
            qfi_from_quench(&xi, 0.4, 10.0),
            Err(Error::GridTooCoarse(_))
        ));
    }

    #[test]
    fn cutoff_series_converges_monotonically_in_the_tail() {
        let (xi, expect) = synthetic_two_level(0.9, 0.3, 0.4);
        let partial = qfi_cutoff_series(&xi, 0.4).unwrap();
        // increments shrink exponentially at the end
        let n = partial.len();
        let d1 = (partial.values[n - 1] - partial.values[n - 2]).abs();
        let d2 = (partial.values[n / 2 + 1] - partial.values[n / 2]).abs();
        assert!(d1 < d2);
        assert_abs_diff_eq!(partial.values[n - 1], expect, epsilon = 1e-5 * expect);
    }

    #[test]
    fn convergence_fit_recovers_synthetic_rate() {
        let temperature = 0.4;
        let pi_t = std::f64::consts::PI * temperature;
        let f_inf = 10.0;
        let dt = 0.05;
        let values: Vec<f64> = (0..700)
            .map(|i| f_inf - 3.0 * (-pi_t * dt * i as f64).exp())
            .collect();
        let partial = TimeSeries::new(0.0, dt, values);
        let fit = convergence_fit(&partial, f_inf, temperature).unwrap();
        assert_abs_diff_eq!(fit.rate, pi_t, epsilon = 1e-6);
        assert!(fit.fit_residual < 1e-9);
        assert!(fit.points >= 10);
    }

    #[test]
    fn convergence_fit_flags_noise_floor() {
        // residuals below the floor everywhere
        let values: Vec<f64> = vec![10.0; 600];
        let partial = TimeSeries::new(0.0, 0.05, values);
        assert!(matches!(
            convergence_fit(&partial, 10.0, 0.4),
            Err(Error::TailBelowNoiseFloor)
        ));
    }

    #[test]
    fn delta_kernel_closed_form() {
        let temperature = 0.4;
        let grid = TimeGrid::to(0.02, 5.0);
        let q = 2.0e-3;
        let k = kernel_for_drive(&DriveProfile::DeltaPulse { q }, temperature, &grid).unwrap();
        for i in 1..grid.len {
            let t = 0.02 * i as f64;
            let expect = 1.0 / (q * (std::f64::consts::PI * t * temperature).sinh());
            assert_abs_diff_eq!(k.series.values[i], expect, epsilon = 1e-12 * expect.abs());
        }
    }

    #[test]
    fn step_kernel_scaling() {
        let temperature = 0.4;
        let grid = TimeGrid::to(0.02, 5.0);
        let q = 1e-3;
        let k = kernel_for_drive(&DriveProfile::Step { q }, temperature, &grid).unwrap();
        for i in (1..grid.len).step_by(17) {
            let t = 0.02 * i as f64;
            let expect = kappa_step(t, temperature).unwrap() / (4.0 * temperature * q);
            assert_abs_diff_eq!(k.series.values[i], expect, epsilon = 1e-12 * expect);
        }
    }

    #[test]
    fn ramp_kernel_degenerates_to_step() {
        let temperature = 0.4;
        let grid = TimeGrid::to(0.02, 8.0);
        let q = 1e-3f64;
        let step = kernel_for_drive(&DriveProfile::Step { q }, temperature, &grid).unwrap();
        let ramp = kernel_for_drive(
            &DriveProfile::LinearRamp { q, ramp_time: 1e-10 },
            temperature,
            &grid,
        )
        .unwrap();
        for i in 1..grid.len {
            let a = ramp.series.values[i];
            let b = step.series.values[i];
            assert!(
                (a - b).abs() <= 1e-4 * (1.0 + b.abs()),
                "mismatch at {i}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn round_trip_deconvolution_smooth_drive() {
        // phi * f then deconvolve recovers phi for a smooth invertible drive
        let dt = 0.02;
        let n = 1024;
        let phi = TimeSeries::new(
            0.0,
            dt,
            (0..n)
                .map(|i| {
                    let t = i as f64 * dt;
                    (-((t - 4.0) / 0.8).powi(2)).exp()
                })
                .collect(),
        );
        let drive_samples = TimeSeries::new(
            0.0,
            dt,
            (0..n)
                .map(|i| {
                    let t = i as f64 * dt;
                    (-((t - 1.0) / 0.3).powi(2)).exp()
                })
                .collect(),
        );
        let drive = DriveProfile::Tabulated { samples: drive_samples };
        let convolved = crate::protocol::kubo_convolve(&phi, &drive);
        let cfg = WienerConfig::flat(1.0, 0.0, convolved.len());
        let recovered = wiener_deconvolve(&convolved, &drive, &cfg).unwrap();
        for i in 0..taper_start(n).min(700) {
            assert_abs_diff_eq!(recovered.values[i], phi.values[i], epsilon = 1e-6);
        }
    }

    #[test]
    fn wiener_noiseless_step_is_a_derivative() {
        // Delta O = q int chi: deconvolution returns chi = d(Delta O/q)/dt
        let dt = 0.01;
        let n = 2048;
        let q = 1e-3;
        let chi_exact: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                (1.4 * t).sin() * (-0.08 * t).exp()
            })
            .collect();
        // cumulative trapezoid
        let mut cum = vec![0.0; n];
        for i in 1..n {
            cum[i] = cum[i - 1] + 0.5 * dt * (chi_exact[i - 1] + chi_exact[i]);
        }
        let delta_o = TimeSeries::new(0.0, dt, cum.iter().map(|v| q * v).collect());
        let cfg = WienerConfig::flat(1.0, 0.0, n);
        let est = wiener_deconvolve(&delta_o, &DriveProfile::Step { q }, &cfg).unwrap();
        for i in 1..taper_start(n) - 50 {
            assert!(
                (est.values[i] - chi_exact[i]).abs() < 2e-3,
                "chi mismatch at {i}: {} vs {}",
                est.values[i],
                chi_exact[i]
            );
        }
    }

    #[test]
    fn wiener_pure_noise_is_not_amplified() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let normal = Normal::new(0.0f64, 1e-4).unwrap();
        let dt = 0.02;
        let n = 512;
        let q = 1e-3;
        let shots: Vec<TimeSeries<f64>> = (0..20)
            .map(|_| {
                TimeSeries::new(0.0, dt, (0..n).map(|_| normal.sample(&mut rng)).collect())
            })
            .collect();
        let drive = DriveProfile::Step { q };
        let (mean, cfg) = estimate_spectra(&shots, &drive).unwrap();
        let est = wiener_deconvolve(&mean, &drive, &cfg).unwrap();
        // per bin the Wiener gain is <= the exact inversion 1/f^, so pure
        // noise must come out weaker than a naive deconvolution of the same
        // data
        let naive =
            wiener_deconvolve(&mean, &drive, &WienerConfig::flat(1.0, 0.0, n)).unwrap();
        let rms = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
        let ratio = rms(&est.values) / rms(&naive.values);
        assert!(ratio <= 1.0, "wiener gain must not exceed exact inversion");
        assert!(ratio < 0.7, "estimated densities should suppress pure noise, got {ratio}");
    }

    #[test]
    fn all_zero_signal_density_rejected() {
        let delta_o = TimeSeries::new(0.0, 0.02, vec![0.0; 64]);
        let cfg = WienerConfig::flat(0.0, 1.0, 64);
        assert!(matches!(
            wiener_deconvolve(&delta_o, &DriveProfile::Step { q: 1e-3 }, &cfg),
            Err(Error::EmptySignalDensity)
        ));
    }

    #[test]
    fn sinusoidal_drive_rejected_as_non_invertible() {
        // whole number of periods in the window: the transform is a pair of
        // spikes with dead bands on either side
        let dt = 0.02;
        let n = 1024usize;
        let w0 = 2.0 * std::f64::consts::PI * 8.0 / (n as f64 * dt);
        let samples = TimeSeries::new(
            0.0,
            dt,
            (0..n).map(|i| (w0 * i as f64 * dt).sin()).collect(),
        );
        let drive = DriveProfile::Tabulated { samples };
        let grid = TimeGrid::to(dt, 10.0);
        let res = kernel_for_drive(&drive, 0.4, &grid);
        assert!(
            matches!(res, Err(Error::NonInvertibleDrive { .. })),
            "got {res:?}"
        );
    }

    #[test]
    fn qfi_from_drive_delta_matches_two_level() {
        // Delta O_delta = q chi with a single pair: F = 4 w tanh(delta/2T)
        let temperature = 0.45;
        let (delta, w) = (1.3f64, 0.4);
        let q = 2e-3;
        let grid = TimeGrid::for_temperature(0.005, temperature, 35.0);
        let chi: Vec<f64> = grid.times().map(|t| 2.0 * w * (delta * t).sin()).collect();
        let delta_o = TimeSeries::new(0.0, grid.dt, chi.iter().map(|c| q * c).collect());
        let kernel =
            kernel_for_drive(&DriveProfile::DeltaPulse { q }, temperature, &grid).unwrap();
        let f = qfi_from_drive(&delta_o, &kernel, temperature, grid.t_max()).unwrap();
        let expect = 4.0 * w * (delta / (2.0 * temperature)).tanh();
        assert_abs_diff_eq!(f, expect, epsilon = 2e-5 * expect);
    }
}
