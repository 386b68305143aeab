//! Symmetric eigendecomposition, normal-space projectors, projected
//! gradients, and the eigengap / path-smoothness condition diagnostics.

use crate::density::LocalDensityInfo;
use crate::error::{Error, Result};
use crate::mat::{norm, vsub, Mat};

/// Relative asymmetry tolerated before a Hessian is rejected.
const SYMMETRY_TOL: f64 = 1e-8;

/// Eigendecomposition of a small symmetric matrix by cyclic Jacobi
/// rotations. Returns eigenvalues sorted descending and the matching
/// eigenvectors as columns, each with its largest-magnitude entry made
/// positive so results are deterministic across runs.
///
/// Sweeps stop when the off-diagonal Frobenius norm falls below 1e-12
/// (relative to the matrix scale once that is sharper than f64 allows),
/// with at most 100 sweeps.
pub fn eigen_sym(h: &Mat) -> (Vec<f64>, Mat) {
    assert_eq!(h.rows(), h.cols(), "eigen_sym requires a square matrix");
    let n = h.rows();
    let mut a = h.symmetrized();
    let mut v = Mat::identity(n);
    let mut d: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();

    if n > 1 {
        let tol = 1e-12_f64.max(1e-15 * a.frobenius());
        let mut b = d.clone();
        let mut z = vec![0.0; n];
        for _sweep in 0..100 {
            let mut off = 0.0;
            for p in 0..n - 1 {
                for q in (p + 1)..n {
                    off += 2.0 * a[(p, q)] * a[(p, q)];
                }
            }
            if off.sqrt() < tol {
                break;
            }
            for p in 0..n - 1 {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = 0.5 * (d[q] - d[p]) / apq;
                    let mut t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        t = -t;
                    }
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let tau = s / (1.0 + c);
                    let hpq = t * apq;
                    z[p] -= hpq;
                    z[q] += hpq;
                    d[p] -= hpq;
                    d[q] += hpq;
                    a[(p, q)] = 0.0;
                    // only the upper triangle is kept current
                    for j in 0..p {
                        let g = a[(j, p)];
                        let hh = a[(j, q)];
                        a[(j, p)] = g - s * (hh + g * tau);
                        a[(j, q)] = hh + s * (g - hh * tau);
                    }
                    for j in (p + 1)..q {
                        let g = a[(p, j)];
                        let hh = a[(j, q)];
                        a[(p, j)] = g - s * (hh + g * tau);
                        a[(j, q)] = hh + s * (g - hh * tau);
                    }
                    for j in (q + 1)..n {
                        let g = a[(p, j)];
                        let hh = a[(q, j)];
                        a[(p, j)] = g - s * (hh + g * tau);
                        a[(q, j)] = hh + s * (g - hh * tau);
                    }
                    for j in 0..n {
                        let g = v[(j, p)];
                        let hh = v[(j, q)];
                        v[(j, p)] = g - s * (hh + g * tau);
                        v[(j, q)] = hh + s * (g - hh * tau);
                    }
                }
            }
            for i in 0..n {
                b[i] += z[i];
                d[i] = b[i];
                z[i] = 0.0;
            }
        }
    }

    // sort descending with stable index tie-break
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap().then(i.cmp(&j)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut u = Mat::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        // canonical sign: largest-magnitude entry positive
        let col = v.column(old_col);
        let mut lead = 0;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > col[lead].abs() {
                lead = i;
            }
        }
        let flip = if col[lead] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            u[(i, new_col)] = flip * col[i];
        }
    }
    (eigenvalues, u)
}

/// Operator (spectral) norm of a symmetric matrix.
pub fn operator_norm_sym(m: &Mat) -> f64 {
    let (eigs, _) = eigen_sym(m);
    eigs.iter().fold(0.0_f64, |acc, &l| acc.max(l.abs()))
}

/// Local spectral data at a point: the eigenstructure of the Hessian, the
/// projector L onto the normal space spanned by the D-d smallest
/// eigenvectors, and the projected gradient G = L g.
#[derive(Debug, Clone)]
pub struct SpectralFrame {
    /// Hessian eigenvalues, sorted descending.
    pub eigenvalues: Vec<f64>,
    /// D×(D-d) orthonormal basis of the normal space.
    pub v: Mat,
    /// Projector L = V Vᵀ.
    pub l: Mat,
    /// Projected gradient G = L g.
    pub g_proj: Vec<f64>,
    /// λ_d - λ_{d+1} (infinite when d = 0: there is no tangent block).
    pub eigengap: f64,
    /// λ_{d+1}, the largest normal-space eigenvalue.
    pub lambda_next: f64,
}

/// Build the spectral frame for ridge dimension `d` from a gradient and a
/// symmetric Hessian. `d = 0` reduces to mode finding: L is the identity
/// and G = g.
pub fn spectral_frame(g: &[f64], h: &Mat, d: usize) -> Result<SpectralFrame> {
    let dim = h.rows();
    if h.cols() != dim || g.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: g.len().max(h.cols()),
        });
    }
    if d >= dim {
        return Err(Error::InvalidParameter(format!(
            "ridge dimension d={d} must satisfy 0 <= d < D={dim}"
        )));
    }
    if h.asymmetry() > SYMMETRY_TOL * h.max_abs().max(1.0) {
        return Err(Error::NotSymmetric);
    }
    let (eigenvalues, u) = eigen_sym(h);
    let lambda_next = eigenvalues[d];
    let eigengap = if d == 0 {
        f64::INFINITY
    } else {
        eigenvalues[d - 1] - eigenvalues[d]
    };
    let (v, l, g_proj) = if d == 0 {
        (u.clone(), Mat::identity(dim), g.to_vec())
    } else {
        let mut v = Mat::zeros(dim, dim - d);
        for (col, j) in (d..dim).enumerate() {
            for i in 0..dim {
                v[(i, col)] = u[(i, j)];
            }
        }
        let l = v.matmul(&v.transpose());
        let g_proj = l.matvec(g);
        (v, l, g_proj)
    };
    Ok(SpectralFrame {
        eigenvalues,
        v,
        l,
        g_proj,
        eigengap,
        lambda_next,
    })
}

/// Computable check of the eigengap assumption (A1) and the
/// path-smoothness assumption (A2) at a point.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConditionReport {
    pub a1_holds: bool,
    pub a2_holds: bool,
    pub beta_used: f64,
    pub lambda_next: f64,
    pub eigengap: f64,
    /// ||L^⊥ g|| · ||H'||_max
    pub a2_lhs: f64,
    /// β² / (2 D^{3/2})
    pub a2_rhs: f64,
}

/// Evaluate the (A1)/(A2) diagnostics from a density evaluation that
/// carries the Hessian derivative.
pub fn check_conditions(info: &LocalDensityInfo, d: usize, beta: f64) -> Result<ConditionReport> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter("beta must be > 0".into()));
    }
    let hprime = info.hprime.as_ref().ok_or(Error::MissingHprime)?;
    let frame = spectral_frame(&info.g, &info.hess, d)?;
    let dim = info.g.len() as f64;
    let lperp_g = vsub(&info.g, &frame.g_proj);
    let a2_lhs = norm(&lperp_g) * hprime.max_abs();
    let a2_rhs = beta * beta / (2.0 * dim.powf(1.5));
    Ok(ConditionReport {
        a1_holds: frame.lambda_next < -beta && frame.eigengap > beta,
        a2_holds: a2_lhs < a2_rhs,
        beta_used: beta,
        lambda_next: frame.lambda_next,
        eigengap: frame.eigengap,
        a2_lhs,
        a2_rhs,
    })
}

/// Left- and right-hand sides of the Weyl eigenvalue bound and the
/// Davis-Kahan projector bound for a pair of symmetric matrices. The
/// caller asserts lhs <= rhs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationBounds {
    /// max_i |λ_i(H) - λ_i(H̃)|
    pub weyl_lhs: f64,
    /// ||H - H̃|| (operator norm)
    pub weyl_rhs: f64,
    /// ||L - L̃|| (operator norm of the projector difference)
    pub dk_lhs: f64,
    /// ||H - H̃||_F / eigengap(H)
    pub dk_rhs: f64,
}

pub fn perturbation_bounds(h: &Mat, htilde: &Mat, d: usize) -> Result<PerturbationBounds> {
    if h.rows() != htilde.rows() || h.cols() != htilde.cols() {
        return Err(Error::DimensionMismatch {
            expected: h.rows(),
            actual: htilde.rows(),
        });
    }
    let zero = vec![0.0; h.rows()];
    let frame = spectral_frame(&zero, h, d)?;
    let frame_t = spectral_frame(&zero, htilde, d)?;
    if frame.eigengap == 0.0 {
        return Err(Error::GapDegenerate);
    }
    let diff = h.sub(htilde);
    let weyl_lhs = frame
        .eigenvalues
        .iter()
        .zip(&frame_t.eigenvalues)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    let dk_rhs = if frame.eigengap.is_infinite() {
        0.0
    } else {
        diff.frobenius() / frame.eigengap
    };
    Ok(PerturbationBounds {
        weyl_lhs,
        weyl_rhs: operator_norm_sym(&diff),
        dk_lhs: operator_norm_sym(&frame.l.sub(&frame_t.l)),
        dk_rhs,
    })
}
