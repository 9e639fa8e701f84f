//! Quantum Fisher information of thermal states from quench dynamics.
//!
//! The crate simulates a measurement protocol in which a many-body system in
//! thermal equilibrium is weakly quenched with an observable `O` and the QFI
//! is recovered by integrating the subsequent expectation-value dynamics
//! against an exponentially decaying kernel. It also provides fermionic
//! k-producibility bounds that turn a measured QFI into a certified
//! multipartite mode-entanglement depth, demonstrated on the 1D Fermi-Hubbard
//! chain.
//!
//! Modules roughly follow the data flow:
//!
//! - [`fock`]: occupation-number bases of symmetry sectors, second-quantized
//!   operators with Jordan-Wigner signs.
//! - [`model`]: the Fermi-Hubbard Hamiltonian and staggered quench operators.
//! - [`spectral`]: eigendecompositions, thermal states, and the exact /
//!   frequency-domain / time-domain QFI routes.
//! - [`protocol`]: exact post-quench dynamics and extraction of the
//!   linear-response signal.
//! - [`kernel`]: integration kernels for step, pulse, ramp, and tabulated
//!   drives, plus Wiener deconvolution for noisy data.
//! - [`bounds`]: k-producibility bounds on the QFI and entanglement-depth
//!   certification.
//! - [`cli`]: the scan/trace/qscan/bounds command-line driver.
//!
//! Everything numerical is generic over [`Scalar`] (`f32`/`f64`); bound
//! combinatorics are generic over [`BoundScalar`] and also run on exact
//! rationals. The crate root exports `f64` aliases for the common types.

pub mod bounds;
pub mod cli;
pub mod fock;
pub mod kernel;
pub mod model;
mod numeric;
pub mod protocol;
mod scalar;
pub mod spectral;

pub use scalar::{BoundScalar, EigScalar, Scalar};

// links the system BLAS/LAPACK that lapack-sys declares
use openblas_src as _;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid sector: L={sites}, N_up={n_up}, N_down={n_down}")]
    InvalidSector { sites: usize, n_up: usize, n_down: usize },
    #[error("weight vector has {got} entries, basis has {expected} modes")]
    WeightLength { expected: usize, got: usize },
    #[error("operators defined on different bases")]
    BasisMismatch,
    #[error("operator is not hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("eigensolver: {0}")]
    Eigensolver(String),
    #[error("temperature must be positive (got {0})")]
    NonPositiveTemperature(f64),
    #[error("state is not normalized (|norm - 1| = {0:e})")]
    NotNormalized(f64),
    #[error("time grid too coarse: dt*J = {0} exceeds 0.1")]
    GridTooCoarse(f64),
    #[error("quench runs do not match: {0}")]
    MismatchedRuns(String),
    #[error("drive is not invertible: |f^(omega)| below {threshold:e} near omega = {omega}")]
    NonInvertibleDrive { omega: f64, threshold: f64 },
    #[error("signal power spectral density is identically zero")]
    EmptySignalDensity,
    #[error("convergence tail below the numerical noise floor; rate omitted")]
    TailBelowNoiseFloor,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code class: config/domain errors exit 2, numeric
    /// failures exit 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Eigensolver(_)
            | Error::TailBelowNoiseFloor
            | Error::NonInvertibleDrive { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// `f64` aliases for the main pipeline types.
pub type SparseOperator64 = fock::SparseOperator<f64>;
pub type FockVector64 = fock::FockVector<f64>;
pub type Spectrum64 = spectral::Spectrum<f64>;
pub type ThermalState64 = spectral::ThermalState<f64>;
pub type TimeSeries64 = spectral::TimeSeries<f64>;
pub type TimeGrid64 = spectral::TimeGrid<f64>;
pub type SpectralResponse64 = spectral::SpectralResponse<f64>;
pub type QuenchRun64 = protocol::QuenchRun<f64>;
pub type DriveProfile64 = kernel::DriveProfile<f64>;
pub type KernelEval64 = kernel::KernelEval<f64>;
pub type BoundResult64 = bounds::BoundResult<f64>;
pub type CertificationResult64 = bounds::CertificationResult<f64>;
