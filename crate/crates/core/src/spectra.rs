//! Numerical spectrahedral analysis: semidefiniteness tests, numerical
//! kernels, cone membership, and the minimal-face extremality test.
//!
//! Extremality is decided by pure linear algebra: the minimal face of a cone
//! element is the set of symmetric-subspace tensors annihilating its Gram
//! kernel, and the element is extremal exactly when that space is a line.

use nalgebra::{DMatrix, DVector, Matrix3};

use crate::coeffs::{from_coeffs, orbit_reps};
use crate::error::{Error, Result};
use crate::maps::{restrict_alt, restrict_sym};
use crate::tensor::{dim_w, CrossingTensor, FlavorDim};

/// Relative singular-value threshold separating numerical kernels from
/// roundoff. Exact kernels of O(1)-scaled rays sit at O(1e-15); this leaves
/// six orders of magnitude of headroom.
pub const RANK_REL_TOL: f64 = 1e-9;

/// Default relative tolerance for semidefiniteness checks.
pub const PSD_TOL: f64 = 1e-9;

/// Outcome of a semidefiniteness test.
#[derive(Debug, Clone, Copy)]
pub struct PsdCheck {
    pub psd: bool,
    pub min_eig: f64,
}

/// Tests `form >= -tol * scale` in the spectral sense, with
/// `scale = max(1, spectral radius)`. Errors on non-symmetric input.
pub fn psd_check(form: &DMatrix<f64>, tol: f64) -> Result<PsdCheck> {
    if form.nrows() != form.ncols() {
        return Err(Error::DimMismatch(format!(
            "{}x{} matrix is not square",
            form.nrows(),
            form.ncols()
        )));
    }
    let max_asym = (form - form.transpose()).abs().max();
    if max_asym > 1e-10 * form.abs().max().max(1.0) {
        return Err(Error::NotSymmetric { max_asym });
    }
    let eigs = form.clone().symmetric_eigen().eigenvalues;
    let min_eig = eigs.min();
    let radius = eigs.abs().max();
    let scale = radius.max(1.0);
    Ok(PsdCheck {
        psd: min_eig >= -tol * scale,
        min_eig,
    })
}

/// Orthonormal basis of a numerical kernel, with the tolerance that
/// produced it.
#[derive(Debug, Clone)]
pub struct KernelBasis {
    /// Columns orthonormally span the kernel.
    pub basis: DMatrix<f64>,
    pub tol: f64,
    pub dim: usize,
    pub rank: usize,
}

/// Singular directions of a symmetric form below `tol * sigma_max`.
pub fn kernel_basis(form: &DMatrix<f64>, tol: f64) -> Result<KernelBasis> {
    if form.nrows() != form.ncols() {
        return Err(Error::DimMismatch(format!(
            "{}x{} matrix is not square",
            form.nrows(),
            form.ncols()
        )));
    }
    let max_asym = (form - form.transpose()).abs().max();
    if max_asym > 1e-10 * form.abs().max().max(1.0) {
        return Err(Error::NotSymmetric { max_asym });
    }
    let d = form.nrows();
    let eig = form.clone().symmetric_eigen();
    let sigma_max = eig.eigenvalues.abs().max();
    if sigma_max == 0.0 {
        return Ok(KernelBasis {
            basis: DMatrix::identity(d, d),
            tol,
            dim: d,
            rank: 0,
        });
    }
    let cutoff = tol * sigma_max;
    let cols: Vec<usize> = (0..d)
        .filter(|&i| eig.eigenvalues[i].abs() < cutoff)
        .collect();
    let mut basis = DMatrix::zeros(d, cols.len());
    for (out, &i) in cols.iter().enumerate() {
        basis.set_column(out, &eig.eigenvectors.column(i));
    }
    Ok(KernelBasis {
        basis,
        tol,
        dim: cols.len(),
        rank: d - cols.len(),
    })
}

/// Numerical rank at the crate-default threshold.
pub fn rank_of(form: &DMatrix<f64>) -> usize {
    kernel_basis(form, RANK_REL_TOL)
        .expect("rank_of expects a symmetric matrix")
        .rank
}

/// Numerical rank with an absolute floor under the singular-value cutoff,
/// for forms that may be roundoff-level images of a larger object (for
/// instance the wedge restriction of a fully symmetric tensor).
pub fn rank_with_floor(form: &DMatrix<f64>, floor: f64) -> usize {
    let eig = form.clone().symmetric_eigen().eigenvalues;
    let sigma_max = eig.abs().max();
    let cutoff = (RANK_REL_TOL * sigma_max).max(floor);
    eig.iter().filter(|v| v.abs() >= cutoff).count()
}

/// Cone membership: both restrictions must be positive semidefinite.
pub fn in_cone(s: &CrossingTensor, tol: f64) -> Result<bool> {
    let r = psd_check(restrict_sym(s).matrix(), tol)?;
    if !r.psd {
        return Ok(false);
    }
    let rp = psd_check(restrict_alt(s).matrix(), tol)?;
    Ok(rp.psd)
}

/// Linear span of the minimal face of a cone element: all symmetric-subspace
/// tensors whose Gram form annihilates the Gram kernel of `s`.
#[derive(Debug, Clone)]
pub struct FaceSpace {
    pub basis: Vec<CrossingTensor>,
    pub dim: usize,
}

impl FaceSpace {
    /// Distance from `s` to its projection onto the face span
    /// (in free-component coordinates).
    pub fn residual_of(&self, s: &CrossingTensor) -> f64 {
        let c = crate::coeffs::to_coeffs(s);
        let v = DVector::from_column_slice(c.values());
        if self.dim == 0 {
            return v.norm();
        }
        let mut q = DMatrix::zeros(v.len(), self.dim);
        for (j, b) in self.basis.iter().enumerate() {
            let cb = crate::coeffs::to_coeffs(b);
            q.set_column(j, &DVector::from_column_slice(cb.values()));
        }
        // basis columns are orthonormal (right singular vectors)
        let proj = &q * (q.transpose() * &v);
        (v - proj).norm()
    }
}

/// Computes the face span of `s` by stacking the kernel-annihilation
/// constraints over the free components. Errors if `s` is outside the cone.
pub fn face_space(s: &CrossingTensor, tol: f64) -> Result<FaceSpace> {
    let n = s.n();
    let check = psd_check(&s.gram(), tol)?;
    if !check.psd {
        return Err(Error::NotInCone {
            min_eig: check.min_eig,
        });
    }
    let fd = FlavorDim::new(n)?;
    let kern = kernel_basis(&s.gram(), RANK_REL_TOL)?;
    let dw = dim_w(n);

    // basis tensors of the symmetric subspace, one per free component
    let reps = orbit_reps(n);
    debug_assert_eq!(reps.len(), dw);
    let mut basis_tensors = Vec::with_capacity(dw);
    for a in 0..dw {
        let mut c = vec![0.0; dw];
        c[a] = 1.0;
        basis_tensors.push(from_coeffs(fd, &c)?);
    }

    if kern.dim == 0 {
        // empty kernel constrains nothing: the face spans everything
        return Ok(FaceSpace {
            basis: basis_tensors,
            dim: dw,
        });
    }

    // constraint rows: (gram(T_a) q)[r] = 0 for every kernel vector q
    let rows = kern.dim * n * n;
    let mut c = DMatrix::zeros(rows, dw);
    for (a, t) in basis_tensors.iter().enumerate() {
        let g = t.gram();
        for (qi, q) in kern.basis.column_iter().enumerate() {
            let gq = &g * q;
            for r in 0..n * n {
                c[(qi * n * n + r, a)] = gq[r];
            }
        }
    }

    let svd = c.svd(false, true);
    let smax = svd.singular_values.max();
    let v_t = svd.v_t.expect("svd requested v_t");
    let cutoff = if smax > 0.0 { RANK_REL_TOL * smax } else { f64::INFINITY };
    let mut basis = Vec::new();
    for i in 0..v_t.nrows().min(svd.singular_values.len()) {
        if svd.singular_values[i] < cutoff {
            let coeffs: Vec<f64> = v_t.row(i).iter().copied().collect();
            basis.push(from_coeffs(fd, &coeffs)?);
        }
    }
    // rows of v_t beyond the singular-value count also span the null space
    for i in svd.singular_values.len()..v_t.nrows() {
        let coeffs: Vec<f64> = v_t.row(i).iter().copied().collect();
        basis.push(from_coeffs(fd, &coeffs)?);
    }
    let dim = basis.len();
    Ok(FaceSpace { basis, dim })
}

/// Extremality via the minimal face: true exactly when the face span is a
/// line. Rejects the zero tensor.
pub fn is_extremal(s: &CrossingTensor, tol: f64) -> Result<bool> {
    if s.max_abs() == 0.0 {
        return Err(Error::ZeroTensor);
    }
    Ok(face_space(s, tol)?.dim == 1)
}

/// Dual-cone element exposing the ray of `s`: the projection into the
/// symmetric subspace of the orthogonal projector onto the Gram kernel of
/// `s`. It pairs to zero with `s` and strictly positively with every cone
/// element outside the minimal face of `s`; for an extremal `s` that face
/// is the ray itself.
pub fn exposing_dual(s: &CrossingTensor, tol: f64) -> Result<CrossingTensor> {
    let n = s.n();
    let check = psd_check(&s.gram(), tol)?;
    if !check.psd {
        return Err(Error::NotInCone {
            min_eig: check.min_eig,
        });
    }
    let kern = kernel_basis(&s.gram(), RANK_REL_TOL)?;
    let proj = &kern.basis * kern.basis.transpose();
    let mut raw = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    raw[((i * n + j) * n + k) * n + l] = proj[(i * n + j, k * n + l)];
                }
            }
        }
    }
    crate::tensor::project_w(FlavorDim::new(n)?, &raw)
}

/// Backward-stable minimum eigenvalue of a symmetric 3x3 matrix.
pub fn min_eig3_accurate(m: &Matrix3<f64>) -> f64 {
    m.symmetric_eigen().eigenvalues.min()
}

/// Closed-form minimum eigenvalue of a symmetric 3x3 matrix. Fast but only
/// accurate to about 1e-8 of scale near degenerate spectra; callers report
/// final values through [`min_eig3_accurate`].
pub fn min_eig3(m: &Matrix3<f64>) -> f64 {
    let p1 = m[(0, 1)] * m[(0, 1)] + m[(0, 2)] * m[(0, 2)] + m[(1, 2)] * m[(1, 2)];
    let q = (m[(0, 0)] + m[(1, 1)] + m[(2, 2)]) / 3.0;
    let d0 = m[(0, 0)] - q;
    let d1 = m[(1, 1)] - q;
    let d2 = m[(2, 2)] - q;
    let p2 = d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * p1;
    if p2 <= 0.0 {
        return q;
    }
    let p = (p2 / 6.0).sqrt();
    let b = (m - Matrix3::identity() * q) / p;
    let r = (b.determinant() / 2.0).clamp(-1.0, 1.0);
    // acos(r)/3 lies in [0, pi/3]; shifting by 2 pi / 3 lands in
    // [2 pi / 3, pi] where the cosine is smallest
    let phi = r.acos() / 3.0;
    q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos()
}

/// Real roots of `c0 + c1 t + c2 t^2 + c3 t^3`, degenerate degrees included.
pub fn real_roots_cubic(c0: f64, c1: f64, c2: f64, c3: f64) -> Vec<f64> {
    let scale = c0.abs().max(c1.abs()).max(c2.abs()).max(c3.abs());
    if scale == 0.0 {
        return vec![0.0];
    }
    let eps = 1e-12 * scale;
    if c3.abs() <= eps {
        if c2.abs() <= eps {
            if c1.abs() <= eps {
                return vec![];
            }
            return vec![-c0 / c1];
        }
        let disc = c1 * c1 - 4.0 * c2 * c0;
        if disc < 0.0 {
            return vec![];
        }
        let sq = disc.sqrt();
        return vec![(-c1 + sq) / (2.0 * c2), (-c1 - sq) / (2.0 * c2)];
    }
    // depressed cubic s^3 + p s + q with t = s - c2/(3 c3)
    let a = c2 / c3;
    let b = c1 / c3;
    let c = c0 / c3;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let shift = -a / 3.0;
    let disc = -4.0 * p * p * p - 27.0 * q * q;
    let mut roots = Vec::new();
    if disc >= 0.0 && p < 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        for k in 0..3 {
            roots.push(m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift);
        }
    } else {
        // single real root by Cardano
        let half_q = q / 2.0;
        let inner = half_q * half_q + p * p * p / 27.0;
        let s = if inner >= 0.0 {
            let sq = inner.sqrt();
            (-half_q + sq).cbrt() + (-half_q - sq).cbrt()
        } else {
            // fall back to the trig branch (numerical disc sign flip)
            let m = 2.0 * (-p / 3.0).sqrt();
            let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
            m * (arg.acos() / 3.0).cos()
        };
        roots.push(s + shift);
    }
    // one Newton polish per root
    roots
        .into_iter()
        .map(|mut t| {
            for _ in 0..3 {
                let f = c0 + t * (c1 + t * (c2 + t * c3));
                let df = c1 + t * (2.0 * c2 + t * 3.0 * c3);
                if df.abs() > 1e-300 {
                    t -= f / df;
                }
            }
            t
        })
        .collect()
}

/// Finds `t` such that `t1 + t * t2` is rank-deficient, by solving the cubic
/// `det(t1 + t t2) = 0`. Already-degenerate `t1` returns `t = 0`; when the
/// pencil determinant has no real root in `t` (possible only for singular
/// `t2`) the swapped pencil decides, and its nonzero root is inverted back.
pub fn find_degenerate(t1: &Matrix3<f64>, t2: &Matrix3<f64>) -> Result<(f64, Matrix3<f64>)> {
    for (name, m) in [("t1", t1), ("t2", t2)] {
        let max_asym = (m - m.transpose()).abs().max();
        if max_asym > 1e-10 * m.abs().max().max(1.0) {
            let _ = name;
            return Err(Error::NotSymmetric { max_asym });
        }
    }
    let scale1 = t1.abs().max().max(1e-300);
    if t1.determinant().abs() < 1e-10 * scale1.powi(3) {
        return Ok((0.0, *t1));
    }

    // cubic coefficients of det(t1 + t t2) by interpolation at -2,-1,1,2
    let p = |t: f64| (t1 + t2 * t).determinant();
    let (pm2, pm1, p1, p2) = (p(-2.0), p(-1.0), p(1.0), p(2.0));
    let c0 = t1.determinant();
    let c2 = (p1 + pm1) / 2.0 - c0;
    let c3 = (p2 - pm2 - 2.0 * (p1 - pm1)) / 12.0;
    let c1 = p1 - c0 - c2 - c3;

    let roots = real_roots_cubic(c0, c1, c2, c3);
    if let Some(&t) = roots
        .iter()
        .filter(|t| t.is_finite())
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
    {
        return Ok((t, t1 + t2 * t));
    }

    // no real root: t2 must be singular; a nonzero root s of
    // det(t2 + s t1) = 0 gives the degenerate direction t = 1/s
    let q = |s: f64| (t2 + t1 * s).determinant();
    let (qm2, qm1, q1, q2) = (q(-2.0), q(-1.0), q(1.0), q(2.0));
    let d0 = t2.determinant();
    let d2 = (q1 + qm1) / 2.0 - d0;
    let d3 = (q2 - qm2 - 2.0 * (q1 - qm1)) / 12.0;
    let d1 = q1 - d0 - d2 - d3;
    let s = real_roots_cubic(d0, d1, d2, d3)
        .into_iter()
        .filter(|s| s.is_finite() && s.abs() > 1e-9)
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
        .ok_or(Error::SingularMatrix {
            det: t2.determinant(),
        })?;
    let t = 1.0 / s;
    Ok((t, t1 + t2 * t))
}
