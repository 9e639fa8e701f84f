//! Scalar abstractions: the float pipeline is generic over [`Scalar`], dense
//! eigendecompositions additionally require [`EigScalar`] (LAPACK dispatch),
//! and the combinatorial bound machinery only needs [`BoundScalar`], which is
//! also satisfied by exact rationals.

use ndarray::{Array1, Array2, LinalgScalar};
use num_traits::{Float, FromPrimitive, NumAssign, Signed};

use crate::Result;

/// Real scalar for the numerical pipeline. Implemented for `f32` and `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumAssign
    + Signed
    + LinalgScalar
    + rustfft::FftNum
    + std::iter::Sum<Self>
    + std::fmt::Display
    + std::fmt::LowerExp
    + Default
{
    /// Shorthand for lossless-enough conversion from `f64` literals.
    fn from_f64_c(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant representable")
    }

    fn pi() -> Self {
        Self::from_f64_c(std::f64::consts::PI)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Scalar with a dense symmetric eigensolver.
///
/// `sym_eigh` returns eigenvalues in ascending order and the orthonormal
/// eigenvector matrix with column `i` belonging to eigenvalue `i`.
pub trait EigScalar: Scalar {
    fn sym_eigh(matrix: &Array2<Self>) -> Result<(Array1<Self>, Array2<Self>)>;
}

impl EigScalar for f64 {
    fn sym_eigh(matrix: &Array2<Self>) -> Result<(Array1<Self>, Array2<Self>)> {
        lapack::eigh_f64(matrix)
    }
}

impl EigScalar for f32 {
    fn sym_eigh(matrix: &Array2<Self>) -> Result<(Array1<Self>, Array2<Self>)> {
        lapack::eigh_f32(matrix)
    }
}

/// Scalar for the entanglement-bound combinatorics. The blanket impl covers
/// the floats as well as `num::rational::Ratio` / `num::BigRational`, so the
/// optimality oracles can run in exact arithmetic.
pub trait BoundScalar: Clone + PartialOrd + Signed + std::fmt::Debug {}

impl<T: Clone + PartialOrd + Signed + std::fmt::Debug> BoundScalar for T {}

mod lapack {
    //! Thin wrappers over LAPACK's divide-and-conquer symmetric eigensolver.
    //!
    //! The input is copied; symmetric matrices are layout-agnostic, so the
    //! row-major ndarray buffer can be handed to the column-major routine
    //! directly. Eigenvectors come back as columns in column-major order,
    //! i.e. contiguous runs of the output buffer, and are transposed into
    //! the returned row-major array.

    use ndarray::{Array1, Array2, ShapeBuilder};
    use std::os::raw::c_int;

    use crate::{Error, Result};

    macro_rules! eigh_impl {
        ($name:ident, $ty:ty, $routine:ident) => {
            pub fn $name(matrix: &Array2<$ty>) -> Result<(Array1<$ty>, Array2<$ty>)> {
                let n = matrix.nrows();
                if n != matrix.ncols() {
                    return Err(Error::Eigensolver(format!(
                        "matrix not square: {}x{}",
                        matrix.nrows(),
                        matrix.ncols()
                    )));
                }
                if n == 0 {
                    return Err(Error::Eigensolver("empty matrix".into()));
                }
                let mut a: Vec<$ty> = matrix.iter().copied().collect();
                let mut w = vec![<$ty>::default(); n];
                let nn = n as c_int;
                let mut info: c_int = 0;
                let jobz = b'V' as std::os::raw::c_char;
                let uplo = b'L' as std::os::raw::c_char;
                unsafe {
                    // workspace query
                    let (mut wkopt, mut iwkopt) = (<$ty>::default(), 0 as c_int);
                    lapack_sys::$routine(
                        &jobz,
                        &uplo,
                        &nn,
                        a.as_mut_ptr(),
                        &nn,
                        w.as_mut_ptr(),
                        &mut wkopt,
                        &(-1 as c_int),
                        &mut iwkopt,
                        &(-1 as c_int),
                        &mut info,
                    );
                    if info != 0 {
                        return Err(Error::Eigensolver(format!(
                            "workspace query failed: info={info}"
                        )));
                    }
                    let mut work = vec![<$ty>::default(); wkopt as usize];
                    let mut iwork = vec![0 as c_int; iwkopt as usize];
                    lapack_sys::$routine(
                        &jobz,
                        &uplo,
                        &nn,
                        a.as_mut_ptr(),
                        &nn,
                        w.as_mut_ptr(),
                        work.as_mut_ptr(),
                        &(work.len() as c_int),
                        iwork.as_mut_ptr(),
                        &(iwork.len() as c_int),
                        &mut info,
                    );
                }
                if info != 0 {
                    return Err(Error::Eigensolver(format!("syevd failed: info={info}")));
                }
                // `a` now holds eigenvectors column-major: interpret as an
                // (n, n) Fortran-order array and convert to standard order.
                let vectors = Array2::from_shape_vec((n, n).f(), a)
                    .expect("buffer has n*n elements")
                    .as_standard_layout()
                    .into_owned();
                Ok((Array1::from(w), vectors))
            }
        };
    }

    eigh_impl!(eigh_f64, f64, dsyevd_);
    eigh_impl!(eigh_f32, f32, ssyevd_);
}
