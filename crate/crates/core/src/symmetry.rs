//! Invariant sectors of the dual tensor space under rotation and reflection
//! groups on the flavor space, with the block projection used by the
//! reflection sector.
//!
//! Invariance equations are assembled numerically from group generators
//! (the three axis reflections and the infinitesimal rotation generators)
//! and solved as null spaces on the 21-dimensional coefficient space; the
//! known closed-form bases are recovered as cross-checks in the tests.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    elastic_margin_poly, inelastic_margin, BoundReport, MembershipConfig, Verdict,
};
use crate::coeffs::{from_coeffs, to_coeffs};
use crate::error::{Error, Result};
use crate::tensor::{dim_w, CrossingTensor, FlavorDim};

/// Residual tolerance for sector invariance checks.
pub const INVARIANCE_TOL: f64 = 1e-10;

/// Supported sectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    O3,
    Z2Cubed,
    SO2,
}

impl std::str::FromStr for Sector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "o3" => Ok(Sector::O3),
            "z2cubed" => Ok(Sector::Z2Cubed),
            "so2" => Ok(Sector::SO2),
            other => Err(Error::BadInput(format!("unknown sector {other:?}"))),
        }
    }
}

/// Basis of an invariant subspace, as coefficient vectors.
#[derive(Debug, Clone)]
pub struct SymmetrySector {
    pub sector: Sector,
    /// Rows are orthonormal coefficient vectors spanning the subspace.
    pub basis: DMatrix<f64>,
    pub dim: usize,
}

fn axis_reflection(axis: usize) -> DMatrix<f64> {
    DMatrix::from_fn(3, 3, |i, j| {
        if i != j {
            0.0
        } else if i == axis {
            -1.0
        } else {
            1.0
        }
    })
}

fn rotation_generator(axis: usize) -> DMatrix<f64> {
    // (J v)_i = sum_p eps_{i p axis} v_p
    let mut j = DMatrix::zeros(3, 3);
    let (a, b) = match axis {
        0 => (1, 2),
        1 => (2, 0),
        _ => (0, 1),
    };
    j[(a, b)] = -1.0;
    j[(b, a)] = 1.0;
    j
}

/// Matrix of `M -> Q . M - M` on the coefficient space for a finite
/// group element `Q` acting on the flavor space.
fn finite_constraint_rows(q: &DMatrix<f64>) -> DMatrix<f64> {
    let n3 = FlavorDim::new(3).expect("3 flavors");
    let d = dim_w(3);
    let mut rows = DMatrix::zeros(d, d);
    for a in 0..d {
        let mut c = vec![0.0; d];
        c[a] = 1.0;
        let t = from_coeffs(n3, &c).expect("unit coefficient vector");
        // induced action on the dual side is the pullback along Q^T
        let moved = t.act(&q.transpose());
        let delta = moved.sub(&t);
        let dc = to_coeffs(&delta);
        for (r, v) in dc.values().iter().enumerate() {
            rows[(r, a)] = *v;
        }
    }
    rows
}

/// Matrix of the infinitesimal action of a rotation generator on the
/// coefficient space.
fn infinitesimal_constraint_rows(j: &DMatrix<f64>) -> DMatrix<f64> {
    let n3 = FlavorDim::new(3).expect("3 flavors");
    let d = dim_w(3);
    let mut rows = DMatrix::zeros(d, d);
    for a in 0..d {
        let mut c = vec![0.0; d];
        c[a] = 1.0;
        let t = from_coeffs(n3, &c).expect("unit coefficient vector");
        let mut lie = CrossingTensor::zeros(n3);
        for i in 0..3 {
            for jj in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let mut acc = 0.0;
                        for p in 0..3 {
                            acc += j[(i, p)] * t.get(p, jj, k, l)
                                + j[(jj, p)] * t.get(i, p, k, l)
                                + j[(k, p)] * t.get(i, jj, p, l)
                                + j[(l, p)] * t.get(i, jj, k, p);
                        }
                        lie.set(i, jj, k, l, acc);
                    }
                }
            }
        }
        let dc = to_coeffs(&lie);
        for (r, v) in dc.values().iter().enumerate() {
            rows[(r, a)] = *v;
        }
    }
    rows
}

fn constraint_matrix(sector: Sector) -> DMatrix<f64> {
    let mut blocks: Vec<DMatrix<f64>> = Vec::new();
    match sector {
        Sector::Z2Cubed => {
            for axis in 0..3 {
                blocks.push(finite_constraint_rows(&axis_reflection(axis)));
            }
        }
        Sector::SO2 => {
            blocks.push(infinitesimal_constraint_rows(&rotation_generator(2)));
        }
        Sector::O3 => {
            for axis in 0..3 {
                blocks.push(infinitesimal_constraint_rows(&rotation_generator(axis)));
                blocks.push(finite_constraint_rows(&axis_reflection(axis)));
            }
        }
    }
    let d = dim_w(3);
    let mut stacked = DMatrix::zeros(blocks.len() * d, d);
    for (i, b) in blocks.iter().enumerate() {
        stacked.view_mut((i * d, 0), (d, d)).copy_from(b);
    }
    stacked
}

/// Null-space basis of the sector's invariance equations.
pub fn invariant_basis(sector: Sector) -> SymmetrySector {
    let c = constraint_matrix(sector);
    let svd = c.svd(false, true);
    let smax = svd.singular_values.max();
    let v_t = svd.v_t.expect("svd requested v_t");
    let cutoff = if smax > 0.0 { 1e-10 * smax } else { f64::INFINITY };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for i in 0..v_t.nrows() {
        let keep = i >= svd.singular_values.len() || svd.singular_values[i] < cutoff;
        if keep {
            rows.push(v_t.row(i).iter().copied().collect());
        }
    }
    let dim = rows.len();
    let mut basis = DMatrix::zeros(dim, dim_w(3));
    for (i, r) in rows.iter().enumerate() {
        for (j, v) in r.iter().enumerate() {
            basis[(i, j)] = *v;
        }
    }
    SymmetrySector { sector, basis, dim }
}

/// Largest invariance-equation residual of a tensor for a sector, with the
/// index of the worst equation.
pub fn invariance_residual(m: &CrossingTensor, sector: Sector) -> Result<(f64, usize)> {
    if m.n() != 3 {
        return Err(Error::RequiresThreeFlavors(m.n()));
    }
    let c = constraint_matrix(sector);
    let coeffs = nalgebra::DVector::from_column_slice(to_coeffs(m).values());
    let r = &c * coeffs;
    let mut worst = (0.0, 0usize);
    for (i, v) in r.iter().enumerate() {
        if v.abs() > worst.0 {
            worst = (v.abs(), i);
        }
    }
    Ok(worst)
}

/// The rotation-invariant two-parameter family on the dual side, with
/// components `a1 d_ab d_cd + (a2 - a1) d_ac d_bd + a1 d_ad d_bc`.
/// Elastic bounds for it reduce to `a2 >= |a1|`.
pub fn o3_tensor(a1: f64, a2: f64) -> CrossingTensor {
    let n3 = FlavorDim::new(3).expect("3 flavors");
    let mut t = CrossingTensor::zeros(n3);
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    let mut v = 0.0;
                    if i == j && k == l {
                        v += a1;
                    }
                    if i == k && j == l {
                        v += a2 - a1;
                    }
                    if i == l && j == k {
                        v += a1;
                    }
                    t.set(i, j, k, l, v);
                }
            }
        }
    }
    t
}

/// Zeroes every component carrying an index with odd multiplicity: the
/// orthogonal projection onto the reflection-invariant sector, equivalently
/// the truncation of the Gram form to its diagonal blocks. Idempotent,
/// linear, norm-nonincreasing, and rank-nondecreasing on cone elements.
pub fn z2_project(s: &CrossingTensor) -> Result<CrossingTensor> {
    if s.n() != 3 {
        return Err(Error::RequiresThreeFlavors(s.n()));
    }
    let mut out = CrossingTensor::zeros(FlavorDim::new(3).expect("3 flavors"));
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    let mut mult = [0usize; 3];
                    for idx in [i, j, k, l] {
                        mult[idx] += 1;
                    }
                    if mult.iter().all(|&c| c % 2 == 0) {
                        out.set(i, j, k, l, s.get(i, j, k, l));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Bound check restricted to a sector: verifies invariance (error with the
/// violated equation index otherwise), then runs the elastic checker and
/// the inelastic sampler.
pub fn sector_membership(
    m: &CrossingTensor,
    sector: Sector,
    cfg: &MembershipConfig,
) -> Result<BoundReport> {
    let (residual, index) = invariance_residual(m, sector)?;
    if residual > INVARIANCE_TOL * m.max_abs().max(1.0) {
        return Err(Error::NotInvariant { index, residual });
    }
    let elastic = elastic_margin_poly(m, &cfg.grid)?;
    let inelastic = inelastic_margin(m, &cfg.sampler)?;
    let verdict = if !elastic.pass {
        Verdict::ViolatesElastic
    } else if !inelastic.pass_so_far {
        Verdict::ViolatesInelastic
    } else {
        Verdict::PassesAllSampled
    };
    Ok(BoundReport {
        elastic,
        inelastic,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::SamplerConfig;
    use crate::rays::{ray_type3, ray_type3_identity, RayKind, RaySampler};
    use crate::spectra::rank_of;
    use crate::tensor::{project_w, sym_product};
    use nalgebra::Matrix3;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sector_dimensions_and_inclusions() {
        let o3 = invariant_basis(Sector::O3);
        let z2 = invariant_basis(Sector::Z2Cubed);
        let so2 = invariant_basis(Sector::SO2);
        assert_eq!(o3.dim, 2);
        assert_eq!(z2.dim, 9);
        assert_eq!(so2.dim, 5);

        // every rotation-invariant element satisfies the smaller sectors
        let n3 = FlavorDim::new(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let a1 = rng.random::<f64>() * 2.0 - 1.0;
            let a2 = rng.random::<f64>() * 2.0 - 1.0;
            let m = o3_tensor(a1, a2);
            for sector in [Sector::O3, Sector::SO2, Sector::Z2Cubed] {
                let (r, _) = invariance_residual(&m, sector).unwrap();
                assert!(r < 1e-12, "sector {sector:?} residual {r}");
            }
            let _ = n3;
        }

        // every rotation-about-axis invariant satisfies the reflections
        for row in 0..so2.dim {
            let c: Vec<f64> = so2.basis.row(row).iter().copied().collect();
            let m = from_coeffs(FlavorDim::new(3).unwrap(), &c).unwrap();
            let (r, _) = invariance_residual(&m, Sector::Z2Cubed).unwrap();
            assert!(r < 1e-10);
        }
    }

    #[test]
    fn o3_tensor_matches_three_term_expansion() {
        // oracle: a1 (sum e_i^2)^{x2} + a2 (sum e_i^4 + 2 sum (e_i v e_j)^{x2})
        //         + (2 a2 - 4 a1) sum (e_i ^ e_j)^{x2}
        let e = |i: usize| {
            let mut v = vec![0.0; 3];
            v[i] = 1.0;
            v
        };
        let (a1, a2) = (0.7, -0.3);
        let n3 = FlavorDim::new(3).unwrap();
        let mut t1 = CrossingTensor::zeros(n3);
        for i in 0..3 {
            for k in 0..3 {
                t1.set(i, i, k, k, t1.get(i, i, k, k) + 1.0);
            }
        }
        let mut t2 = CrossingTensor::zeros(n3);
        let mut t3 = CrossingTensor::zeros(n3);
        for i in 0..3 {
            let p = sym_product([&e(i), &e(i), &e(i), &e(i)]).unwrap();
            t2 = t2.add(&p);
        }
        for i in 0..3 {
            for j in (i + 1)..3 {
                let ei = e(i);
                let ej = e(j);
                let mut vee = CrossingTensor::zeros(n3);
                let mut wedge = CrossingTensor::zeros(n3);
                for a in 0..3 {
                    for b in 0..3 {
                        for c in 0..3 {
                            for d in 0..3 {
                                let vab = 0.5 * (ei[a] * ej[b] + ej[a] * ei[b]);
                                let vcd = 0.5 * (ei[c] * ej[d] + ej[c] * ei[d]);
                                let wab = 0.5 * (ei[a] * ej[b] - ej[a] * ei[b]);
                                let wcd = 0.5 * (ei[c] * ej[d] - ej[c] * ei[d]);
                                vee.set(a, b, c, d, vab * vcd);
                                wedge.set(a, b, c, d, wab * wcd);
                            }
                        }
                    }
                }
                t2 = t2.add(&vee.scale(2.0));
                t3 = t3.add(&wedge);
            }
        }
        let expect = t1
            .scale(a1)
            .add(&t2.scale(a2))
            .add(&t3.scale(2.0 * a2 - 4.0 * a1));
        let got = o3_tensor(a1, a2);
        assert!(got.max_diff(&expect) < 1e-14);
        assert_eq!(o3_tensor(0.0, 0.0).max_abs(), 0.0);
    }

    #[test]
    fn o3_elastic_region_is_a2_at_least_abs_a1() {
        use crate::bounds::GridConfig;
        let cfg = GridConfig {
            n_theta: 61,
            n_phi: 121,
            ..GridConfig::default()
        };
        let pass = elastic_margin_poly(&o3_tensor(1.0, 2.0), &cfg).unwrap();
        assert!(pass.pass);
        let fail = elastic_margin_poly(&o3_tensor(1.0, 0.5), &cfg).unwrap();
        assert!(!fail.pass);
        // closed-form margin: a2 - |a1| at unit covectors
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..8 {
            let a1 = rng.random::<f64>() * 4.0 - 2.0;
            let a2 = rng.random::<f64>() * 4.0 - 2.0;
            let r = elastic_margin_poly(&o3_tensor(a1, a2), &cfg).unwrap();
            let expect = a2 - a1.abs();
            assert!(
                (r.margin - expect).abs() < 1e-7 * (1.0 + expect.abs()),
                "margin {} expected {}",
                r.margin,
                expect
            );
        }
    }

    #[test]
    fn o3_inelastic_integrand_identity() {
        // for diagonal group elements the pairing against the identity-frame
        // third-kind ray has a closed form in the eigenvalues
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..20 {
            let a1 = rng.random::<f64>() * 2.0 - 1.0;
            let a2 = rng.random::<f64>() * 2.0 - 1.0;
            let lam: Vec<f64> = (0..3).map(|_| 0.2 + rng.random::<f64>() * 2.0).collect();
            let mut sampler = RaySampler::new(rng.random());
            let (d, g, h) = sampler.type3_params();
            let s = ray_type3_identity(d, g, h).unwrap();
            let m = o3_tensor(a1, a2);
            let diag = DMatrix::from_fn(3, 3, |i, j| if i == j { lam[i] } else { 0.0 });
            // induced action on the dual side: pullback along the transpose
            let moved = m.act(&diag.transpose());
            let got = s.pair(&moved);
            let mu = g * g + d * d - 1.0 - d * h;
            let expect = (a1 + a2)
                * (lam[0].powi(4)
                    + 2.0 * lam[0].powi(2) * lam[1].powi(2)
                    + 2.0 * lam[0].powi(2) * lam[2].powi(2)
                    + (1.0 + d * d) * lam[1].powi(4)
                    + 2.0 * (1.0 + d * h) * lam[1].powi(2) * lam[2].powi(2)
                    + (1.0 + g * g + h * h) * lam[2].powi(4))
                + 4.0 * (a2 - a1) * mu * lam[1].powi(2) * lam[2].powi(2);
            assert!(
                (got - expect).abs() < 1e-9 * expect.abs().max(1.0),
                "got {got}, expected {expect}"
            );
        }
    }

    #[test]
    fn z2_projection_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let raw: Vec<f64> = (0..81).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let s = project_w(FlavorDim::new(3).unwrap(), &raw).unwrap();
            let p = z2_project(&s).unwrap();
            assert!(p.symmetry_residual() < 1e-13);
            let pp = z2_project(&p).unwrap();
            assert!(p.max_diff(&pp) == 0.0);
            assert!(p.frobenius_norm() <= s.frobenius_norm() + 1e-14);
            let (r, _) = invariance_residual(&p, Sector::Z2Cubed).unwrap();
            assert!(r < 1e-13);
        }
        // invariant tensors are fixed
        let m = o3_tensor(0.3, 0.8);
        assert!(z2_project(&m).unwrap().max_diff(&m) < 1e-15);
    }

    #[test]
    fn z2_projection_does_not_drop_rank_on_cone_elements() {
        let mut sampler = RaySampler::new(43);
        for _ in 0..60 {
            let mut s = CrossingTensor::zeros(FlavorDim::new(3).unwrap());
            for _ in 0..3 {
                let ray = sampler.sample(RayKind::Mixed);
                s = s.add(&ray.build().unwrap());
            }
            let p = z2_project(&s).unwrap();
            assert!(rank_of(&p.gram()) >= rank_of(&s.gram()));
        }
    }

    #[test]
    fn projected_third_kind_ray_is_block_diagonal() {
        let s = ray_type3(&Matrix3::identity(), 1.0, 2.0, 0.0).unwrap();
        let p = z2_project(&s).unwrap();
        // all odd-multiplicity components vanish
        assert_eq!(p.get(1, 1, 0, 2), 0.0);
        assert_eq!(p.get(2, 2, 0, 1), 0.0);
        // the even blocks survive
        assert_eq!(p.get(0, 0, 1, 1), s.get(0, 0, 1, 1));
        assert_eq!(p.get(1, 2, 1, 2), s.get(1, 2, 1, 2));
    }

    #[test]
    fn sector_membership_validates_invariance() {
        let m = o3_tensor(1.0, 1.5);
        let mut cfg = MembershipConfig::with_seed(3);
        cfg.grid.n_theta = 61;
        cfg.grid.n_phi = 121;
        cfg.sampler = SamplerConfig {
            budget: 1500,
            refine_count: 6,
            refine_iters: 100,
            ..SamplerConfig::default()
        };
        let r = sector_membership(&m, Sector::O3, &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::PassesAllSampled);
        assert!(r.inelastic.margin > 0.0);

        let bad = sector_membership(&o3_tensor(1.0, 0.9), Sector::O3, &cfg).unwrap();
        assert_eq!(bad.verdict, Verdict::ViolatesElastic);

        // non-invariant input errors with an equation index
        let mut c = vec![0.0; 21];
        c[1] = 1.0; // a component with odd index multiplicity
        let m = from_coeffs(FlavorDim::new(3).unwrap(), &c).unwrap();
        assert!(matches!(
            sector_membership(&m, Sector::Z2Cubed, &cfg),
            Err(Error::NotInvariant { .. })
        ));
    }
}
