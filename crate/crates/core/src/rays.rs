//! The three families of extremal rays for three flavors, their
//! constructors, validity checks, classification, and a seeded sampler.
//!
//! First kind: fourth powers of a covector. Second kind: the symmetric plus
//! wedge square of a covector pair. Third kind: an eleven-term fully
//! symmetric tensor plus a wedge-supported correction, parameterized by a
//! dual frame and three reals `(d, g, h)` subject to `g^2 > 1 - d^2 + d h`.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::coeffs::from_coeffs;
use crate::error::{Error, Result};
use crate::maps::{restrict_alt, restrict_sym, sym_index};
use crate::spectra::{self, face_space, in_cone, is_extremal, real_roots_cubic, PSD_TOL};
use crate::tensor::{sym_power, CrossingTensor, FlavorDim};

/// Validity margin of third-kind parameters: `g^2 - (1 - d^2 + d h)`.
/// Must be strictly positive.
pub fn type3_margin(d: f64, g: f64, h: f64) -> f64 {
    g * g - (1.0 - d * d + d * h)
}

/// Tagged description of an extremal ray.
#[derive(Debug, Clone, PartialEq)]
pub enum ExtremalRay {
    /// Fourth power of a nonzero covector.
    Type1 { alpha: Vec<f64> },
    /// Symmetric-plus-wedge square of two independent covectors.
    Type2 { alpha: Vec<f64>, beta: Vec<f64> },
    /// Third kind: `frame` rows are the dual-basis covectors.
    Type3 {
        frame: Matrix3<f64>,
        d: f64,
        g: f64,
        h: f64,
    },
}

#[derive(Serialize, Deserialize)]
struct RayJson {
    #[serde(rename = "type")]
    kind: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    frame: Option<[[f64; 3]; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h: Option<f64>,
}

impl Serialize for ExtremalRay {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let json = match self {
            ExtremalRay::Type1 { alpha } => RayJson {
                kind: 1,
                alpha: Some(alpha.clone()),
                beta: None,
                frame: None,
                d: None,
                g: None,
                h: None,
            },
            ExtremalRay::Type2 { alpha, beta } => RayJson {
                kind: 2,
                alpha: Some(alpha.clone()),
                beta: Some(beta.clone()),
                frame: None,
                d: None,
                g: None,
                h: None,
            },
            ExtremalRay::Type3 { frame, d, g, h } => {
                let mut rows = [[0.0; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        rows[i][j] = frame[(i, j)];
                    }
                }
                RayJson {
                    kind: 3,
                    alpha: None,
                    beta: None,
                    frame: Some(rows),
                    d: Some(*d),
                    g: Some(*g),
                    h: Some(*h),
                }
            }
        };
        json.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for ExtremalRay {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let json = RayJson::deserialize(de)?;
        match json.kind {
            1 => Ok(ExtremalRay::Type1 {
                alpha: json.alpha.ok_or_else(|| D::Error::missing_field("alpha"))?,
            }),
            2 => Ok(ExtremalRay::Type2 {
                alpha: json.alpha.ok_or_else(|| D::Error::missing_field("alpha"))?,
                beta: json.beta.ok_or_else(|| D::Error::missing_field("beta"))?,
            }),
            3 => {
                let rows = json.frame.ok_or_else(|| D::Error::missing_field("frame"))?;
                Ok(ExtremalRay::Type3 {
                    frame: Matrix3::from_fn(|i, j| rows[i][j]),
                    d: json.d.ok_or_else(|| D::Error::missing_field("d"))?,
                    g: json.g.ok_or_else(|| D::Error::missing_field("g"))?,
                    h: json.h.ok_or_else(|| D::Error::missing_field("h"))?,
                })
            }
            k => Err(D::Error::custom(format!("unknown ray type {k}"))),
        }
    }
}

impl ExtremalRay {
    /// Builds the ray's tensor representative.
    pub fn build(&self) -> Result<CrossingTensor> {
        match self {
            ExtremalRay::Type1 { alpha } => ray_type1(alpha),
            ExtremalRay::Type2 { alpha, beta } => ray_type2(alpha, beta),
            ExtremalRay::Type3 { frame, d, g, h } => ray_type3(frame, *d, *g, *h),
        }
    }

    pub fn kind(&self) -> u8 {
        match self {
            ExtremalRay::Type1 { .. } => 1,
            ExtremalRay::Type2 { .. } => 2,
            ExtremalRay::Type3 { .. } => 3,
        }
    }
}

/// First-kind ray: the fourth power of a nonzero covector.
pub fn ray_type1(alpha: &[f64]) -> Result<CrossingTensor> {
    let norm: f64 = alpha.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-14 {
        return Err(Error::ZeroCovector);
    }
    sym_power(alpha)
}

/// Second-kind ray: `(a v b)^{x2} + (a ^ b)^{x2}`, equivalently half the sum
/// of the two interleaved fourth powers. Requires independent covectors.
pub fn ray_type2(alpha: &[f64], beta: &[f64]) -> Result<CrossingTensor> {
    let n = alpha.len();
    if beta.len() != n {
        return Err(Error::DimMismatch(
            "covectors live on different flavor spaces".into(),
        ));
    }
    FlavorDim::new(n)?;
    let aa: f64 = alpha.iter().map(|x| x * x).sum();
    let bb: f64 = beta.iter().map(|x| x * x).sum();
    let ab: f64 = alpha.iter().zip(beta).map(|(x, y)| x * y).sum();
    let gram_det = aa * bb - ab * ab;
    if gram_det <= 1e-12 * (aa * bb).max(1e-300) {
        return Err(Error::DependentCovectors);
    }
    let mut comp = vec![0.0; n * n * n * n];
    let mut idx = 0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    comp[idx] = 0.5
                        * (alpha[i] * beta[j] * alpha[k] * beta[l]
                            + beta[i] * alpha[j] * beta[k] * alpha[l]);
                    idx += 1;
                }
            }
        }
    }
    Ok(CrossingTensor::from_components_unchecked(n, comp))
}

/// Free components of the identity-frame third-kind ray, in `m` order.
fn type3_identity_coeffs(d: f64, g: f64, h: f64, with_correction: bool) -> [f64; 21] {
    let m19 = if with_correction {
        2.0 * g * g + 2.0 * d * d - 1.0 - d * h
    } else {
        1.0 + d * h
    };
    [
        1.0,
        0.0,
        0.0,
        1.0,
        1.0,
        0.0,
        0.0,
        1.0,
        1.0,
        0.0,
        d,
        d,
        g,
        g,
        h,
        1.0 + d * d,
        d * g,
        1.0 + d * h,
        m19,
        g * (d + h),
        1.0 + g * g + h * h,
    ]
}

/// Identity-frame third-kind ray.
pub fn ray_type3_identity(d: f64, g: f64, h: f64) -> Result<CrossingTensor> {
    let margin = type3_margin(d, g, h);
    if margin <= 0.0 {
        return Err(Error::InvalidRayParams { margin });
    }
    from_coeffs(
        FlavorDim::new(3).expect("3 flavors"),
        &type3_identity_coeffs(d, g, h, true),
    )
}

/// Third-kind ray for a general dual frame (rows of `frame` are the
/// covectors). Errors when the frame is singular or the parameter
/// inequality fails, carrying the validity margin.
pub fn ray_type3(frame: &Matrix3<f64>, d: f64, g: f64, h: f64) -> Result<CrossingTensor> {
    let det = frame.determinant();
    if det.abs() < 1e-10 * frame.abs().max().max(1.0).powi(3) {
        return Err(Error::SingularMatrix { det });
    }
    let id = ray_type3_identity(d, g, h)?;
    let a = DMatrix::from_fn(3, 3, |i, j| frame[(i, j)]);
    Ok(id.act(&a))
}

/// The fully symmetric eleven-term part of the third-kind construction,
/// without the wedge-supported correction. Defined for any parameters.
pub fn type3_symmetric_part(frame: &Matrix3<f64>, d: f64, g: f64, h: f64) -> Result<CrossingTensor> {
    let det = frame.determinant();
    if det.abs() < 1e-10 * frame.abs().max().max(1.0).powi(3) {
        return Err(Error::SingularMatrix { det });
    }
    let id = from_coeffs(
        FlavorDim::new(3).expect("3 flavors"),
        &type3_identity_coeffs(d, g, h, false),
    )?;
    let a = DMatrix::from_fn(3, 3, |i, j| frame[(i, j)]);
    Ok(id.act(&a))
}

/// Expected symmetric-restriction matrix of the identity-frame third-kind
/// ray, on the basis `{e1^2, e2^2, e3^2, e1 v e2, e1 v e3, e2 v e3}`.
pub fn type3_expected_sym_matrix(d: f64, g: f64, h: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(
        6,
        6,
        &[
            1.0, 1.0, 1.0, 0.0, 0.0, 0.0, //
            1.0, 1.0 + d * d, 1.0 + d * h, 0.0, d, d * g, //
            1.0, 1.0 + d * h, 1.0 + g * g + h * h, g, h, g * (d + h), //
            0.0, 0.0, g, 1.0, 0.0, d, //
            0.0, d, h, 0.0, 1.0, g, //
            0.0, d * g, g * (d + h), d, g, d * d + g * g,
        ],
    )
}

/// The explicit kernel basis of the symmetric restriction of an
/// identity-frame third-kind ray, as vectors on the symmetric-square basis.
/// Three parameter cases: generic (`d, g != 0`), `d = 0`, and `g = 0`.
pub fn type3_expected_kernel(d: f64, g: f64, h: f64) -> Result<Vec<DVector<f64>>> {
    let margin = type3_margin(d, g, h);
    if margin <= 0.0 {
        return Err(Error::InvalidRayParams { margin });
    }
    let n = 3;
    let s = |i: usize, j: usize| sym_index(n, i, j);
    let mut v = vec![DVector::zeros(6), DVector::zeros(6), DVector::zeros(6)];
    let eps = 1e-9;
    if d.abs() > eps && g.abs() > eps {
        v[0][s(0, 0)] = 1.0;
        v[0][s(1, 1)] = -1.0;
        v[0][s(0, 2)] = d;

        v[1][s(0, 0)] = d - h;
        v[1][s(1, 1)] = h;
        v[1][s(2, 2)] = -d;
        v[1][s(0, 1)] = d * g;

        v[2][s(0, 0)] = d * d + g * g - d * h;
        v[2][s(1, 1)] = -(g * g - d * h);
        v[2][s(2, 2)] = -d * d;
        v[2][s(1, 2)] = d * g;
    } else if d.abs() <= eps {
        // (g e1 - e2) v e3
        v[0][s(0, 2)] = g;
        v[0][s(1, 2)] = -1.0;

        v[1][s(0, 0)] = 1.0;
        v[1][s(1, 1)] = -1.0;

        v[2][s(1, 1)] = g;
        v[2][s(2, 2)] = -g;
        v[2][s(1, 2)] = h;
        v[2][s(0, 1)] = g * g;
    } else {
        v[0][s(1, 1)] = -1.0;
        v[0][s(2, 2)] = 1.0;
        v[0][s(0, 2)] = d - h;

        // (d e1 - e3) v e2
        v[1][s(0, 1)] = d;
        v[1][s(1, 2)] = -1.0;

        v[2][s(0, 0)] = d - h;
        v[2][s(1, 1)] = h;
        v[2][s(2, 2)] = -d;
    }
    Ok(v)
}

/// Outcome of classifying a cone element.
#[derive(Debug, Clone)]
pub enum Classification {
    Ray(ExtremalRay),
    NotExtremal {
        /// A face-span element linearly independent of the input, witnessing
        /// that the minimal face is more than a line.
        certificate: Option<Box<CrossingTensor>>,
    },
    NotInCone {
        min_eig: f64,
    },
}

/// Rank triple `(gram, symmetric restriction, wedge restriction)`. Ranks
/// carry an absolute floor at the tensor scale so restrictions that vanish
/// up to roundoff report rank zero.
pub fn rank_signature(s: &CrossingTensor) -> (usize, usize, usize) {
    let floor = 1e-12 * s.max_abs();
    (
        spectra::rank_with_floor(&s.gram(), floor),
        spectra::rank_with_floor(restrict_sym(s).matrix(), floor),
        spectra::rank_with_floor(restrict_alt(s).matrix(), floor),
    )
}

fn sym_vec_to_matrix(w: &DVector<f64>) -> Matrix3<f64> {
    let mut g = Matrix3::zeros();
    for i in 0..3 {
        g[(i, i)] = w[i];
        for j in (i + 1)..3 {
            let v = w[sym_index(3, i, j)];
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// Evaluates `S(z (x) z, e_i v e_j)` as a symmetric 3x3 form.
fn squared_slot_form(s: &CrossingTensor, z: &Vector3<f64>) -> Matrix3<f64> {
    let mut b = Matrix3::zeros();
    for i in 0..3 {
        for j in i..3 {
            let mut acc = 0.0;
            for a in 0..3 {
                for c in 0..3 {
                    acc += z[a] * z[c] * 0.5 * (s.get(a, c, i, j) + s.get(a, c, j, i));
                }
            }
            b[(i, j)] = acc;
            b[(j, i)] = acc;
        }
    }
    b
}

fn recover_type3(s: &CrossingTensor) -> Result<ExtremalRay> {
    let alt = restrict_alt(s);
    let eig = alt.matrix().clone().symmetric_eigen();
    let imax = (0..3)
        .max_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
        .expect("3x3 eigenproblem");
    let w = eig.eigenvectors.column(imax);
    // Hodge dual of the rank-one wedge direction spans the common kernel
    let z0 = Vector3::new(w[2], -w[1], w[0]);
    let szz = s.eval_product_state(z0.as_slice(), z0.as_slice());
    if szz <= 0.0 {
        return Err(Error::NotInCone { min_eig: szz });
    }
    let z = z0 / szz.powf(0.25);

    let b = squared_slot_form(s, &z);
    let b_inner = |u: &Vector3<f64>, v: &Vector3<f64>| (u.transpose() * b * v)[(0, 0)];

    // seed vectors least aligned with z, orthonormalized against z under b
    let mut seeds: Vec<Vector3<f64>> = (0..3).map(|i| Vector3::ith(i, 1.0)).collect();
    seeds.sort_by(|u, v| {
        u.dot(&z)
            .abs()
            .partial_cmp(&v.dot(&z).abs())
            .expect("finite")
    });
    let ortho = |v: &Vector3<f64>, prev: &[Vector3<f64>]| -> Option<Vector3<f64>> {
        let mut r = *v;
        for p in prev {
            r -= *p * b_inner(p, &r);
        }
        let nrm = b_inner(&r, &r);
        if nrm > 1e-12 {
            Some(r / nrm.sqrt())
        } else {
            None
        }
    };
    let zn = z; // b(z, z) = S(z^2, z^2) = 1 by normalization
    let mut xb = None;
    let mut yb = None;
    for seed in &seeds {
        match xb {
            None => xb = ortho(seed, &[zn]),
            Some(x) if yb.is_none() => yb = ortho(seed, &[zn, x]),
            _ => {}
        }
    }
    let (xb, yb) = match (xb, yb) {
        (Some(x), Some(y)) => (x, y),
        _ => {
            return Err(Error::DimMismatch(
                "squared-slot form is numerically degenerate".into(),
            ))
        }
    };

    // cubic condition S(e2 (x) e2, e2 v z) = 0 along e2 = xb + t yb
    let f = |t: f64| -> f64 {
        let e2 = xb + yb * t;
        let bz = squared_slot_form(s, &e2);
        (e2.transpose() * bz * zn)[(0, 0)]
    };
    let (fm2, fm1, f0, f1, f2) = (f(-2.0), f(-1.0), f(0.0), f(1.0), f(2.0));
    let c0 = f0;
    let c2 = (f1 + fm1) / 2.0 - c0;
    let c3 = (f2 - fm2 - 2.0 * (f1 - fm1)) / 12.0;
    let c1 = f1 - c0 - c2 - c3;
    let e2_raw = if c3.abs() < 1e-10 * (c0.abs() + c1.abs() + c2.abs()).max(1e-30) {
        // the cubic coefficient is S(yb^2, yb v z); when it vanishes, yb
        // itself satisfies the condition
        yb
    } else {
        let t0 = real_roots_cubic(c0, c1, c2, c3)
            .into_iter()
            .filter(|t| t.is_finite())
            .min_by(|a, b| a.abs().total_cmp(&b.abs()))
            .ok_or_else(|| Error::DimMismatch("no real root for the frame cubic".into()))?;
        xb + yb * t0
    };
    let e2 = e2_raw / b_inner(&e2_raw, &e2_raw).sqrt();
    let e3 = ortho(&seeds[2], &[zn, e2])
        .or_else(|| ortho(&seeds[1], &[zn, e2]))
        .or_else(|| ortho(&seeds[0], &[zn, e2]))
        .ok_or_else(|| Error::DimMismatch("could not complete the frame".into()))?;

    let mut basis = Matrix3::zeros();
    basis.set_column(0, &zn);
    basis.set_column(1, &e2);
    basis.set_column(2, &e3);
    let a = DMatrix::from_fn(3, 3, |i, j| basis[(i, j)]);
    let in_frame = s.act(&a);
    let d = 0.5 * (in_frame.get(1, 1, 0, 2) + in_frame.get(1, 1, 2, 0));
    let g = 0.5 * (in_frame.get(2, 2, 0, 1) + in_frame.get(2, 2, 1, 0));
    let h = 0.5 * (in_frame.get(2, 2, 0, 2) + in_frame.get(2, 2, 2, 0));
    let margin = type3_margin(d, g, h);
    if margin <= 0.0 {
        return Err(Error::InvalidRayParams { margin });
    }
    let frame = basis
        .try_inverse()
        .ok_or(Error::SingularMatrix { det: 0.0 })?;
    Ok(ExtremalRay::Type3 { frame, d, g, h })
}

fn certificate_of(s: &CrossingTensor, tol: f64) -> Option<Box<CrossingTensor>> {
    let face = face_space(s, tol).ok()?;
    if face.dim < 2 {
        return None;
    }
    let ss = s.pair(s);
    for b in &face.basis {
        let t = b.sub(&s.scale(b.pair(s) / ss));
        if t.max_abs() > 1e-8 * b.max_abs().max(1.0) {
            return Some(Box::new(t));
        }
    }
    None
}

/// Decision tree classifying a three-flavor cone element into the extremal
/// families, or returning a non-extremality certificate.
pub fn classify(s: &CrossingTensor, tol: f64) -> Result<Classification> {
    if s.n() != 3 {
        return Err(Error::RequiresThreeFlavors(s.n()));
    }
    if s.max_abs() == 0.0 {
        return Err(Error::ZeroTensor);
    }
    if !in_cone(s, tol)? {
        let min_eig = spectra::psd_check(&s.gram(), tol)?.min_eig;
        return Ok(Classification::NotInCone { min_eig });
    }

    let r = restrict_sym(s);
    let rank_r = spectra::rank_of(r.matrix());
    if rank_r == 1 {
        // factor R(S) = gamma (x) gamma, then split by the signature of gamma
        let eig = r.matrix().clone().symmetric_eigen();
        let imax = (0..6)
            .max_by(|&a, &b| eig.eigenvalues[a].abs().total_cmp(&eig.eigenvalues[b].abs()))
            .expect("6x6 eigenproblem");
        let lam = eig.eigenvalues[imax];
        let w = eig.eigenvectors.column(imax) * lam.abs().sqrt();
        let gamma = sym_vec_to_matrix(&w.clone_owned());
        let geig = gamma.symmetric_eigen();
        let gmax = geig.eigenvalues.abs().max();
        let sig: Vec<(f64, Vector3<f64>)> = (0..3)
            .filter(|&i| geig.eigenvalues[i].abs() > 1e-7 * gmax)
            .map(|i| (geig.eigenvalues[i], geig.eigenvectors.column(i).clone_owned()))
            .collect();
        let candidate = match sig.len() {
            1 => {
                let alpha = (sig[0].1 * sig[0].0.abs().sqrt()).as_slice().to_vec();
                Some(ExtremalRay::Type1 { alpha })
            }
            2 => {
                let (lp, vp) = if sig[0].0 > 0.0 { sig[0] } else { sig[1] };
                let (lm, vm) = if sig[0].0 > 0.0 { sig[1] } else { sig[0] };
                if lp > 0.0 && lm < 0.0 {
                    let a = vp * lp.sqrt();
                    let b = vm * (-lm).sqrt();
                    Some(ExtremalRay::Type2 {
                        alpha: (a + b).as_slice().to_vec(),
                        beta: (a - b).as_slice().to_vec(),
                    })
                } else {
                    None
                }
            }
            _ => None,
        };
        if let Some(ray) = candidate {
            if let Ok(built) = ray.build() {
                if built.max_diff(s) < 1e-7 * s.max_abs() {
                    return Ok(Classification::Ray(ray));
                }
            }
        }
        return Ok(Classification::NotExtremal {
            certificate: certificate_of(s, tol),
        });
    }

    let rank_rp = spectra::rank_of(restrict_alt(s).matrix());
    if rank_rp == 1 && rank_r == 3 && is_extremal(s, tol)? {
        return Ok(Classification::Ray(recover_type3(s)?));
    }
    Ok(Classification::NotExtremal {
        certificate: certificate_of(s, tol),
    })
}

/// Which family to draw from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RayKind {
    Type1,
    Type2,
    Type3,
    Mixed,
}

impl std::str::FromStr for RayKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "type1" => Ok(RayKind::Type1),
            "type2" => Ok(RayKind::Type2),
            "type3" => Ok(RayKind::Type3),
            "mixed" => Ok(RayKind::Mixed),
            other => Err(Error::BadInput(format!("unknown ray kind {other:?}"))),
        }
    }
}

/// Deterministic, cloneable ray sampler.
///
/// Third-kind parameters: `(d, h)` come from a truncated Cauchy draw so both
/// near-boundary and deep-interior rays appear; the squared `g` is uniform
/// over a band starting just above the validity threshold, clamped at zero
/// (which covers the `g = 0` family when the threshold is negative). Frames
/// are Gaussian with rejection on near-singular draws, rescaled to unit
/// determinant.
#[derive(Debug, Clone)]
pub struct RaySampler {
    rng: ChaCha8Rng,
}

impl RaySampler {
    pub fn new(seed: u64) -> Self {
        RaySampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    fn unit_covector(&mut self) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..3).map(|_| self.normal()).collect();
            let nrm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nrm > 1e-6 {
                return v.iter().map(|x| x / nrm).collect();
            }
        }
    }

    fn truncated_cauchy(&mut self, cap: f64) -> f64 {
        loop {
            let u: f64 = self.rng.random();
            let c = (std::f64::consts::PI * (u - 0.5)).tan();
            if c.abs() <= cap {
                return c;
            }
        }
    }

    /// Random unit-determinant frame, rejecting ill-conditioned draws.
    pub fn sl3_frame(&mut self) -> Matrix3<f64> {
        loop {
            let a = Matrix3::from_fn(|_, _| self.normal());
            let det = a.determinant();
            if det.abs() >= 0.1 {
                return a * (1.0 / det).cbrt();
            }
        }
    }

    /// Valid third-kind parameters `(d, g, h)`.
    pub fn type3_params(&mut self) -> (f64, f64, f64) {
        let d = self.truncated_cauchy(10.0);
        let h = self.truncated_cauchy(10.0);
        let threshold = 1.0 - d * d + d * h;
        let lo = threshold + 1e-3;
        let hi = threshold + 25.0;
        let target = lo + (hi - lo) * self.rng.random::<f64>();
        let g2 = target.max(0.0);
        let sign = if self.rng.random::<bool>() { 1.0 } else { -1.0 };
        let g = sign * g2.sqrt();
        debug_assert!(type3_margin(d, g, h) > 0.0);
        (d, g, h)
    }

    pub fn sample(&mut self, kind: RayKind) -> ExtremalRay {
        let kind = match kind {
            RayKind::Mixed => match self.rng.random_range(0..3u32) {
                0 => RayKind::Type1,
                1 => RayKind::Type2,
                _ => RayKind::Type3,
            },
            k => k,
        };
        match kind {
            RayKind::Type1 => ExtremalRay::Type1 {
                alpha: self.unit_covector(),
            },
            RayKind::Type2 => loop {
                let alpha = self.unit_covector();
                let beta = self.unit_covector();
                let ab: f64 = alpha.iter().zip(&beta).map(|(x, y)| x * y).sum();
                if 1.0 - ab * ab > 0.01 {
                    break ExtremalRay::Type2 { alpha, beta };
                }
            },
            RayKind::Type3 => {
                let (d, g, h) = self.type3_params();
                ExtremalRay::Type3 {
                    frame: self.sl3_frame(),
                    d,
                    g,
                    h,
                }
            }
            RayKind::Mixed => unreachable!("resolved above"),
        }
    }
}

/// Confirms a built ray against the cone and extremality tests.
pub fn verify_ray(s: &CrossingTensor) -> Result<bool> {
    Ok(in_cone(s, PSD_TOL)? && is_extremal(s, PSD_TOL)?)
}
