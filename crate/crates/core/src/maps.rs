//! Restriction maps onto symmetric and antisymmetric two-tensor arguments,
//! together with the correction map that inverts the symmetric restriction.
//!
//! Basis conventions (fixed across the crate):
//! * symmetric products use the 1/2 normalization `u v = (uv + vu)/2`, and
//!   the `Sym^2` basis is `e_1^2, ..., e_n^2` followed by `e_i v e_j (i<j)`
//!   in lexicographic order;
//! * the wedge basis is `e_i ^ e_j (i<j)` in lexicographic order, with
//!   `u ^ v = (uv - vu)/2`.
//!
//! Matrix entries of the restricted forms are the tensor evaluated directly
//! on these basis elements (no extra rescaling).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tensor::{CrossingTensor, FlavorDim};

/// Symmetric bilinear form on the symmetric-square basis
/// (`n(n+1)/2 x n(n+1)/2` matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct SymForm {
    n: usize,
    mat: DMatrix<f64>,
}

/// Symmetric bilinear form on the wedge basis (`n(n-1)/2 x n(n-1)/2`).
#[derive(Debug, Clone, PartialEq)]
pub struct AltForm {
    n: usize,
    mat: DMatrix<f64>,
}

pub fn sym_dim(n: usize) -> usize {
    n * (n + 1) / 2
}

pub fn alt_dim(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Index of `e_i v e_j` in the symmetric-square basis (any argument order).
pub fn sym_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    if i == j {
        i
    } else {
        n + i * n - i * (i + 1) / 2 + (j - i - 1)
    }
}

/// Index of `e_i ^ e_j` (`i < j`) in the wedge basis.
pub fn alt_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Basis pair `(i, j)` at wedge index `a`.
pub fn alt_pair(n: usize, a: usize) -> (usize, usize) {
    let mut idx = a;
    for i in 0..n {
        let row = n - i - 1;
        if idx < row {
            return (i, i + 1 + idx);
        }
        idx -= row;
    }
    unreachable!("wedge index out of range")
}

/// Basis pair `(i, j)` (with `i <= j`) at symmetric index `a`.
pub fn sym_pair(n: usize, a: usize) -> (usize, usize) {
    if a < n {
        (a, a)
    } else {
        let (i, j) = alt_pair(n, a - n);
        (i, j)
    }
}

impl SymForm {
    pub fn new(n: FlavorDim, mat: DMatrix<f64>) -> Result<Self> {
        let d = sym_dim(n.get());
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::DimMismatch(format!(
                "symmetric form must be {d}x{d}, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let max_asym = (&mat - mat.transpose()).abs().max();
        if max_asym > 1e-12 * mat.abs().max().max(1.0) {
            return Err(Error::NotSymmetric { max_asym });
        }
        Ok(SymForm { n: n.get(), mat })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// Evaluation on symmetric products of basis vectors: `T(e_a v e_b, e_c v e_d)`.
    #[inline]
    pub fn eval(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.mat[(sym_index(self.n, a, b), sym_index(self.n, c, d))]
    }
}

impl AltForm {
    pub fn new(n: FlavorDim, mat: DMatrix<f64>) -> Result<Self> {
        let d = alt_dim(n.get());
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::DimMismatch(format!(
                "wedge form must be {d}x{d}, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let max_asym = (&mat - mat.transpose()).abs().max();
        if max_asym > 1e-12 * mat.abs().max().max(1.0) {
            return Err(Error::NotSymmetric { max_asym });
        }
        Ok(AltForm { n: n.get(), mat })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// Signed evaluation on wedges of basis vectors, `A(e_i ^ e_j, e_k ^ e_l)`,
    /// zero when an index repeats inside a wedge.
    #[inline]
    pub fn eval(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        if i == j || k == l {
            return 0.0;
        }
        let s1 = if i < j { 1.0 } else { -1.0 };
        let s2 = if k < l { 1.0 } else { -1.0 };
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let (k, l) = if k < l { (k, l) } else { (l, k) };
        s1 * s2 * self.mat[(alt_index(self.n, i, j), alt_index(self.n, k, l))]
    }
}

/// Restriction of a tensor to symmetric two-tensor arguments.
pub fn restrict_sym(s: &CrossingTensor) -> SymForm {
    let n = s.n();
    let d = sym_dim(n);
    let mut mat = DMatrix::zeros(d, d);
    for a in 0..d {
        let (i, j) = sym_pair(n, a);
        for b in a..d {
            let (k, l) = sym_pair(n, b);
            // e_i v e_j as a matrix has entries 1/2 off the diagonal
            let v = 0.25
                * (s.get(i, j, k, l) + s.get(i, j, l, k) + s.get(j, i, k, l)
                    + s.get(j, i, l, k));
            mat[(a, b)] = v;
            mat[(b, a)] = v;
        }
    }
    SymForm { n, mat }
}

/// Restriction of a tensor to wedge arguments; vanishes exactly on the
/// fully symmetric part.
pub fn restrict_alt(s: &CrossingTensor) -> AltForm {
    let n = s.n();
    let d = alt_dim(n);
    let mut mat = DMatrix::zeros(d, d);
    for a in 0..d {
        let (i, j) = alt_pair(n, a);
        for b in a..d {
            let (k, l) = alt_pair(n, b);
            let v = 0.25
                * (s.get(i, j, k, l) - s.get(i, j, l, k) - s.get(j, i, k, l)
                    + s.get(j, i, l, k));
            mat[(a, b)] = v;
            mat[(b, a)] = v;
        }
    }
    AltForm { n, mat }
}

/// The correction map taking a symmetric-square form to a wedge form:
/// `h(T)(e_i ^ e_j, e_k ^ e_l) = T(e_i v e_l, e_j v e_k) - T(e_i v e_k, e_j v e_l)`.
///
/// Composing with the inverse restriction reproduces the wedge restriction;
/// on symmetric squares it is -1/2 times the Kulkarni-Nomizu product.
pub fn h_map(t: &SymForm) -> AltForm {
    let n = t.n();
    let d = alt_dim(n);
    let mat = DMatrix::from_fn(d, d, |a, b| {
        let (i, j) = alt_pair(n, a);
        let (k, l) = alt_pair(n, b);
        t.eval(i, l, j, k) - t.eval(i, k, j, l)
    });
    AltForm { n, mat }
}

/// Inverse of the symmetric restriction: the unique symmetric-subspace tensor
/// with the prescribed symmetric part, assembled from the form itself on
/// symmetric slots plus its correction on wedge slots.
pub fn r_inverse(t: &SymForm) -> CrossingTensor {
    let n = t.n();
    let h = h_map(t);
    let mut comp = vec![0.0; n * n * n * n];
    let mut idx = 0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    comp[idx] = t.eval(i, j, k, l) + h.eval(i, j, k, l);
                    idx += 1;
                }
            }
        }
    }
    let fd = FlavorDim::new(n).expect("form carries a valid flavor dim");
    let raw = CrossingTensor::from_components_unchecked(n, comp);
    // assembly is exact in exact arithmetic; the projection exposes any
    // convention bug as a nonzero delta
    let projected = crate::tensor::project_w(fd, raw.components()).expect("length is n^4");
    debug_assert!(raw.max_diff(&projected) < 1e-10 * raw.max_abs().max(1.0));
    projected
}

/// Max-norm of the cyclic sum over the first three slots of the four-tensor
/// induced by a wedge form. Zero exactly on algebraic curvature tensors;
/// identically zero for three flavors.
pub fn bianchi_residual(a: &AltForm) -> f64 {
    let n = a.n();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let c = a.eval(i, j, k, l) + a.eval(j, k, i, l) + a.eval(k, i, j, l);
                    worst = worst.max(c.abs());
                }
            }
        }
    }
    worst
}

/// Tolerance on the Bianchi residual accepted by [`sigma`] for `n >= 4`.
pub const BIANCHI_TOL: f64 = 1e-10;

/// Section of the wedge restriction over the fully-symmetric-free part:
/// `sigma(A) = (2/3)(A + tau A)` as a four-tensor. Satisfies
/// `restrict_alt(sigma(A)) = A` and `sigma(A).tot() = 0`.
///
/// For four or more flavors the input must satisfy the first Bianchi
/// identity; for three flavors every wedge form does.
pub fn sigma(a: &AltForm) -> Result<CrossingTensor> {
    let n = a.n();
    if n >= 4 {
        let res = bianchi_residual(a);
        let tol = BIANCHI_TOL * a.matrix().abs().max().max(1.0);
        if res > tol {
            return Err(Error::BianchiViolation {
                residual: res,
                tol,
            });
        }
    }
    let mut comp = vec![0.0; n * n * n * n];
    let mut idx = 0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    comp[idx] = (2.0 / 3.0) * (a.eval(i, j, k, l) + a.eval(i, l, k, j));
                    idx += 1;
                }
            }
        }
    }
    Ok(CrossingTensor::from_components_unchecked(n, comp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{project_w, sym_power, sym_product};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_w(rng: &mut ChaCha8Rng, n: usize) -> CrossingTensor {
        let raw: Vec<f64> = (0..n * n * n * n)
            .map(|_| rng.random::<f64>() * 2.0 - 1.0)
            .collect();
        project_w(FlavorDim::new(n).unwrap(), &raw).unwrap()
    }

    fn random_sym_form(rng: &mut ChaCha8Rng, n: usize) -> SymForm {
        let d = sym_dim(n);
        let a = DMatrix::from_fn(d, d, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        SymForm::new(FlavorDim::new(n).unwrap(), &a + a.transpose()).unwrap()
    }

    fn random_alt_form(rng: &mut ChaCha8Rng, n: usize) -> AltForm {
        let d = alt_dim(n);
        let a = DMatrix::from_fn(d, d, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        AltForm::new(FlavorDim::new(n).unwrap(), &a + a.transpose()).unwrap()
    }

    #[test]
    fn basis_indexing_is_consistent() {
        for n in 2..=5 {
            for a in 0..sym_dim(n) {
                let (i, j) = sym_pair(n, a);
                assert_eq!(sym_index(n, i, j), a);
                assert_eq!(sym_index(n, j, i), a);
            }
            for a in 0..alt_dim(n) {
                let (i, j) = alt_pair(n, a);
                assert_eq!(alt_index(n, i, j), a);
            }
        }
        // three-flavor order used throughout: 11, 22, 33, 12, 13, 23
        assert_eq!(sym_index(3, 0, 0), 0);
        assert_eq!(sym_index(3, 1, 1), 1);
        assert_eq!(sym_index(3, 2, 2), 2);
        assert_eq!(sym_index(3, 0, 1), 3);
        assert_eq!(sym_index(3, 0, 2), 4);
        assert_eq!(sym_index(3, 1, 2), 5);
    }

    #[test]
    fn restrict_sym_of_fourth_power() {
        let alpha = [1.0, 0.0, 0.0];
        let s = sym_power(&alpha).unwrap();
        let r = restrict_sym(&s);
        assert_eq!(r.matrix()[(0, 0)], 1.0);
        assert_eq!(r.matrix().iter().filter(|&&x| x != 0.0).count(), 1);
        // the wedge restriction of a fully symmetric tensor vanishes
        let rp = restrict_alt(&s);
        assert_eq!(rp.matrix().abs().max(), 0.0);
    }

    #[test]
    fn restrictions_are_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let s = random_w(&mut rng, 3);
        let t = random_w(&mut rng, 3);
        let combo = s.scale(1.7).add(&t.scale(-0.3));
        let lhs = restrict_sym(&combo);
        let rhs = restrict_sym(&s).matrix() * 1.7 + restrict_sym(&t).matrix() * (-0.3);
        assert!((lhs.matrix() - rhs).abs().max() < 1e-13);
        let lhs = restrict_alt(&combo);
        let rhs = restrict_alt(&s).matrix() * 1.7 + restrict_alt(&t).matrix() * (-0.3);
        assert!((lhs.matrix() - rhs).abs().max() < 1e-13);
    }

    #[test]
    fn h_of_symmetric_square_is_wedge_square() {
        // gamma = a1 v a2: h(gamma tensor gamma) = (a1 ^ a2) tensor (a1 ^ a2)
        // expressed on the wedge basis, i.e. a single 1 at (12,12) for n=3.
        let n = FlavorDim::new(3).unwrap();
        let d = sym_dim(3);
        let mut g = DMatrix::zeros(d, d);
        let idx = sym_index(3, 0, 1);
        g[(idx, idx)] = 1.0;
        let t = SymForm::new(n, g).unwrap();
        let h = h_map(&t);
        let mut expect = DMatrix::zeros(3, 3);
        expect[(alt_index(3, 0, 1), alt_index(3, 0, 1))] = 1.0;
        assert!((h.matrix() - expect).abs().max() < 1e-15);
    }

    #[test]
    fn h_matches_alt_restriction_through_the_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..100 {
            let s = random_w(&mut rng, 3);
            let lhs = h_map(&restrict_sym(&s));
            let rhs = restrict_alt(&s);
            assert!((lhs.matrix() - rhs.matrix()).abs().max() < 1e-12);
        }
    }

    #[test]
    fn h_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let t1 = random_sym_form(&mut rng, 3);
        let t2 = random_sym_form(&mut rng, 3);
        let combo = SymForm::new(
            FlavorDim::new(3).unwrap(),
            t1.matrix() * 2.0 + t2.matrix() * 0.5,
        )
        .unwrap();
        let lhs = h_map(&combo);
        let rhs = h_map(&t1).matrix() * 2.0 + h_map(&t2).matrix() * 0.5;
        assert!((lhs.matrix() - rhs).abs().max() < 1e-13);
    }

    #[test]
    fn inverse_round_trips_both_ways() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..100 {
            let t = random_sym_form(&mut rng, 3);
            let s = r_inverse(&t);
            let back = restrict_sym(&s);
            assert!((back.matrix() - t.matrix()).abs().max() < 1e-12);
        }
        for _ in 0..100 {
            let s = random_w(&mut rng, 3);
            let back = r_inverse(&restrict_sym(&s));
            assert!(back.max_diff(&s) < 1e-12);
        }
    }

    #[test]
    fn inverse_of_identity_round_trips() {
        let n = FlavorDim::new(3).unwrap();
        let t = SymForm::new(n, DMatrix::identity(6, 6)).unwrap();
        let s = r_inverse(&t);
        assert!((restrict_sym(&s).matrix() - t.matrix()).abs().max() < 1e-13);
        assert!(s.symmetry_residual() < 1e-13);
    }

    #[test]
    fn sigma_inverts_alt_restriction_and_kills_tot() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for _ in 0..100 {
            let a = random_alt_form(&mut rng, 3);
            let s = sigma(&a).unwrap();
            assert!(s.symmetry_residual() < 1e-13);
            let back = restrict_alt(&s);
            assert!((back.matrix() - a.matrix()).abs().max() < 1e-12);
            assert!(s.tot().max_abs() < 1e-12);
        }
        let zero = AltForm::new(FlavorDim::new(3).unwrap(), DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(sigma(&zero).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn decomposition_into_tot_plus_sigma_part() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..100 {
            let s = random_w(&mut rng, 3);
            let rebuilt = s.tot().add(&sigma(&restrict_alt(&s)).unwrap());
            assert!(rebuilt.max_diff(&s) < 1e-12);
        }
    }

    #[test]
    fn bianchi_automatic_for_three_flavors() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        for _ in 0..50 {
            let a = random_alt_form(&mut rng, 3);
            assert!(bianchi_residual(&a) < 1e-13);
        }
    }

    #[test]
    fn bianchi_violated_for_a_split_wedge_pattern_in_4d() {
        // A = (e1^e2) v (e3^e4) has a nonzero cyclic sum
        let n = FlavorDim::new(4).unwrap();
        let d = alt_dim(4);
        let mut m = DMatrix::zeros(d, d);
        let a12 = alt_index(4, 0, 1);
        let a34 = alt_index(4, 2, 3);
        m[(a12, a34)] = 0.5;
        m[(a34, a12)] = 0.5;
        let a = AltForm::new(n, m).unwrap();
        assert!(bianchi_residual(&a) > 0.1);
        assert!(matches!(
            sigma(&a),
            Err(Error::BianchiViolation { .. })
        ));
    }

    #[test]
    fn sigma_never_lands_in_the_cone() {
        use crate::spectra::psd_check;
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..100 {
            let a = random_alt_form(&mut rng, 3);
            let norm = a.matrix().norm();
            if norm < 1e-6 {
                continue;
            }
            let s = sigma(&a).unwrap();
            let check = psd_check(&s.gram(), 1e-9).unwrap();
            assert!(
                check.min_eig < -1e-10 * norm,
                "sigma of a nonzero curvature form must leave the cone"
            );
        }
    }

    #[test]
    fn tot_of_second_kind_ray_drops_the_wedge_part() {
        let a1 = [1.0, 0.0, 0.0];
        let a2 = [0.0, 1.0, 0.0];
        let ray = crate::rays::ray_type2(&a1, &a2).unwrap();
        let vee_sq = sym_product([&a1, &a2, &a1, &a2]).unwrap();
        // tot((a1 v a2)^{x2}) equals the symmetric product a1 a2 a1 a2
        assert!(ray.tot().max_diff(&vee_sq) < 1e-14);
    }
}
