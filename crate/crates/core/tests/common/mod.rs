//! Shared test oracles, deliberately independent of the library's
//! implementation paths: a cyclic Jacobi eigensolver (vs. LAPACK) and a
//! piecewise-exact midpoint propagator for time-dependent drives (vs. the
//! cosine-pair-sum evolution).

use ndarray::{Array1, Array2};
use qfi_quench::fock::SparseOperator;
use qfi_quench::spectral::{thermal_state, Spectrum, TimeGrid};
use qfi_quench::EigScalar;

/// Cyclic Jacobi diagonalization of a real symmetric matrix; eigenvalues
/// ascending, eigenvectors in columns.
#[allow(dead_code)]
pub fn jacobi_eigh(matrix: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = matrix.nrows();
    let mut a = matrix.clone();
    let mut v = Array2::<f64>::eye(n);
    let scale: f64 = matrix.iter().fold(0.0f64, |m, &x| m.max(x.abs())).max(1e-300);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].abs());
            }
        }
        if off < 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() < 1e-18 * scale {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let (aip, aiq) = (a[(i, p)], a[(i, q)]);
                    a[(i, p)] = c * aip - s * aiq;
                    a[(i, q)] = s * aip + c * aiq;
                }
                for i in 0..n {
                    let (api, aqi) = (a[(p, i)], a[(q, i)]);
                    a[(p, i)] = c * api - s * aqi;
                    a[(q, i)] = s * api + c * aqi;
                }
                for i in 0..n {
                    let (vip, viq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * vip - s * viq;
                    v[(i, q)] = s * vip + c * viq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
    let eigenvalues: Vec<f64> = idx.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (col, &i) in idx.iter().enumerate() {
        for r in 0..n {
            vectors[(r, col)] = v[(r, i)];
        }
    }
    (eigenvalues, vectors)
}

/// `Delta O(t)` of a thermal ensemble driven by `H(t) = H0 - f(t) O`,
/// integrated with piecewise-constant midpoint steps, each evolved by its
/// exact matrix exponential. `substeps` subdivides every grid interval.
#[allow(dead_code)]
pub fn driven_delta_o(
    h0: &SparseOperator<f64>,
    o: &SparseOperator<f64>,
    drive: impl Fn(f64) -> f64,
    temperature: f64,
    grid: &TimeGrid<f64>,
    substeps: usize,
) -> Vec<f64> {
    let spec0 = qfi_quench::spectral::diagonalize(h0).unwrap();
    let rho = thermal_state(&spec0, temperature).unwrap();
    let o_diag = o.as_diagonal().expect("driven observable is diagonal");
    let o_eq = qfi_quench::spectral::thermal_expectation(&spec0, &rho, o);
    let h0_dense = h0.to_dense();
    let n = spec0.dim();
    let dt_sub = grid.dt / substeps as f64;

    // cache the eigendecomposition per drive value (constant after a ramp)
    let mut cache: std::collections::HashMap<u64, Spectrum<f64>> = std::collections::HashMap::new();
    let mut decomposition = |f: f64| -> Spectrum<f64> {
        cache
            .entry(f.to_bits())
            .or_insert_with(|| {
                let mut h = h0_dense.clone();
                for (i, &ov) in o_diag.iter().enumerate() {
                    h[(i, i)] -= f * ov;
                }
                let (w, vecs) = f64::sym_eigh(&h).unwrap();
                Spectrum { eigenvalues: w, eigenvectors: vecs }
            })
            .clone()
    };

    let relevant: Vec<usize> = (0..n).filter(|&l| rho.weights[l] > 1e-14).collect();
    let mut re: Vec<Array1<f64>> = relevant
        .iter()
        .map(|&l| spec0.eigenvectors.column(l).to_owned())
        .collect();
    let mut im: Vec<Array1<f64>> = relevant.iter().map(|_| Array1::zeros(n)).collect();

    let mut out = Vec::with_capacity(grid.len);
    for k in 0..grid.len {
        // measure
        let mut total = 0.0;
        for (j, &l) in relevant.iter().enumerate() {
            let mut expect = 0.0;
            for s in 0..n {
                expect += o_diag[s] * (re[j][s] * re[j][s] + im[j][s] * im[j][s]);
            }
            total += rho.weights[l] * expect;
        }
        out.push(total - o_eq);
        if k + 1 == grid.len {
            break;
        }
        // advance one grid interval in midpoint substeps
        let t_k = grid.dt * k as f64;
        for sub in 0..substeps {
            let midpoint = t_k + (sub as f64 + 0.5) * dt_sub;
            let spec = decomposition(drive(midpoint));
            for j in 0..relevant.len() {
                let ar = spec.eigenvectors.t().dot(&re[j]);
                let ai = spec.eigenvectors.t().dot(&im[j]);
                let mut br = Array1::<f64>::zeros(n);
                let mut bi = Array1::<f64>::zeros(n);
                for idx in 0..n {
                    let phase = -spec.eigenvalues[idx] * dt_sub;
                    let (c, s) = (phase.cos(), phase.sin());
                    br[idx] = ar[idx] * c - ai[idx] * s;
                    bi[idx] = ar[idx] * s + ai[idx] * c;
                }
                re[j] = spec.eigenvectors.dot(&br);
                im[j] = spec.eigenvectors.dot(&bi);
            }
        }
    }
    out
}
