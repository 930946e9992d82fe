//! Four-tensors on an n-dimensional flavor space with the index symmetries
//! that carve out the positivity-cone ambient space.
//!
//! A [`CrossingTensor`] stores all `n^4` components of a real four-tensor
//! satisfying three generating symmetries:
//!
//! * pair exchange            `S[i,j,k,l] = S[k,l,i,j]`
//! * crossing transposition   `S[i,j,k,l] = S[i,l,k,j]`
//! * simultaneous swap        `S[i,j,k,l] = S[j,i,l,k]`
//!
//! Together these generate a dihedral group of order 8 acting on the index
//! slots; the invariant subspace has dimension `n(n+1)(n(n+1)+2)/8`. The same
//! component machinery serves both the cone side and its dual (the
//! Wilson-coefficient side): only the pairing connects the two.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Index-slot permutations generating the order-8 symmetry group.
///
/// Entry `p` maps the tuple `t` to `(t[p[0]], t[p[1]], t[p[2]], t[p[3]])`.
/// The first three rows are the identity, the crossing transposition and the
/// slot-pair exchange; the rest close the group.
pub const SYMMETRY_GROUP: [[usize; 4]; 8] = [
    [0, 1, 2, 3],
    [0, 3, 2, 1], // crossing: swap slots 2 and 4
    [2, 3, 0, 1], // pair exchange
    [2, 1, 0, 3],
    [1, 0, 3, 2], // simultaneous swap
    [3, 2, 1, 0],
    [1, 2, 3, 0],
    [3, 0, 1, 2],
];

/// All 24 permutations of four slots, used by the total symmetrization map.
pub const S4: [[usize; 4]; 24] = [
    [0, 1, 2, 3],
    [0, 1, 3, 2],
    [0, 2, 1, 3],
    [0, 2, 3, 1],
    [0, 3, 1, 2],
    [0, 3, 2, 1],
    [1, 0, 2, 3],
    [1, 0, 3, 2],
    [1, 2, 0, 3],
    [1, 2, 3, 0],
    [1, 3, 0, 2],
    [1, 3, 2, 0],
    [2, 0, 1, 3],
    [2, 0, 3, 1],
    [2, 1, 0, 3],
    [2, 1, 3, 0],
    [2, 3, 0, 1],
    [2, 3, 1, 0],
    [3, 0, 1, 2],
    [3, 0, 2, 1],
    [3, 1, 0, 2],
    [3, 1, 2, 0],
    [3, 2, 0, 1],
    [3, 2, 1, 0],
];

/// Entrywise tolerance for symmetry checks on O(1)-scaled inputs.
pub const SYM_TOL: f64 = 1e-12;

/// Number of flavors. Classification features require `n = 3`; the tensor
/// space and restriction maps work for any `n` up to the soft cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlavorDim(usize);

impl FlavorDim {
    pub fn new(n: usize) -> Result<Self> {
        if (1..=8).contains(&n) {
            Ok(FlavorDim(n))
        } else {
            Err(Error::BadFlavorDim(n))
        }
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// Dimension of the symmetry-constrained tensor space: `n(n+1)(n(n+1)+2)/8`.
///
/// Equals the number of index orbits under the order-8 group, so it also
/// counts the free components of a [`CrossingTensor`].
pub fn dim_w(n: usize) -> usize {
    n * (n + 1) * (n * (n + 1) + 2) / 8
}

/// Dense four-tensor with the crossing/pair-exchange/swap symmetries.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingTensor {
    n: usize,
    comp: Vec<f64>,
}

#[inline]
fn flat(n: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * n + j) * n + k) * n + l
}

impl CrossingTensor {
    /// Zero tensor on `n` flavors.
    pub fn zeros(n: FlavorDim) -> Self {
        let n = n.get();
        CrossingTensor {
            n,
            comp: vec![0.0; n * n * n * n],
        }
    }

    /// Wraps raw components after verifying the symmetries hold entrywise.
    pub fn from_components(n: FlavorDim, comp: Vec<f64>) -> Result<Self> {
        let nn = n.get();
        if comp.len() != nn * nn * nn * nn {
            return Err(Error::DimMismatch(format!(
                "expected {} components, got {}",
                nn * nn * nn * nn,
                comp.len()
            )));
        }
        let t = CrossingTensor { n: nn, comp };
        let residual = t.symmetry_residual();
        let scale = t.max_abs().max(1.0);
        if residual > SYM_TOL * scale {
            return Err(Error::NotCrossingSymmetric { residual });
        }
        Ok(t)
    }

    pub(crate) fn from_components_unchecked(n: usize, comp: Vec<f64>) -> Self {
        debug_assert_eq!(comp.len(), n * n * n * n);
        CrossingTensor { n, comp }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> FlavorDim {
        FlavorDim(self.n)
    }

    /// Raw component slice in row-major `(i,j,k,l)` order.
    pub fn components(&self) -> &[f64] {
        &self.comp
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.comp[flat(self.n, i, j, k, l)]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        let n = self.n;
        self.comp[flat(n, i, j, k, l)] = v;
    }

    /// Largest violation of the three generating symmetries over all entries.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        let mut t = [0usize; 4];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        t[0] = i;
                        t[1] = j;
                        t[2] = k;
                        t[3] = l;
                        let v = self.get(i, j, k, l);
                        for p in &SYMMETRY_GROUP[1..] {
                            let w = self.get(t[p[0]], t[p[1]], t[p[2]], t[p[3]]);
                            worst = worst.max((v - w).abs());
                        }
                    }
                }
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.comp.iter().fold(0.0, |a: f64, &x| a.max(x.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.comp.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scale(&self, c: f64) -> CrossingTensor {
        CrossingTensor {
            n: self.n,
            comp: self.comp.iter().map(|x| c * x).collect(),
        }
    }

    pub fn add(&self, other: &CrossingTensor) -> CrossingTensor {
        assert_eq!(self.n, other.n, "flavor dimensions differ");
        CrossingTensor {
            n: self.n,
            comp: self
                .comp
                .iter()
                .zip(&other.comp)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &CrossingTensor) -> CrossingTensor {
        self.add(&other.scale(-1.0))
    }

    /// `max |self - other|` over all components.
    pub fn max_diff(&self, other: &CrossingTensor) -> f64 {
        assert_eq!(self.n, other.n, "flavor dimensions differ");
        self.comp
            .iter()
            .zip(&other.comp)
            .fold(0.0, |a: f64, (x, y)| a.max((x - y).abs()))
    }
}

/// Orthogonal projection of a raw `n^4` array onto the symmetric subspace,
/// by averaging over the order-8 index group. Idempotent; the identity on
/// tensors already satisfying the symmetries.
pub fn project_w(n: FlavorDim, raw: &[f64]) -> Result<CrossingTensor> {
    let nn = n.get();
    if raw.len() != nn * nn * nn * nn {
        return Err(Error::DimMismatch(format!(
            "expected {} components, got {}",
            nn * nn * nn * nn,
            raw.len()
        )));
    }
    let mut out = vec![0.0; raw.len()];
    let mut t = [0usize; 4];
    for i in 0..nn {
        for j in 0..nn {
            for k in 0..nn {
                for l in 0..nn {
                    t[0] = i;
                    t[1] = j;
                    t[2] = k;
                    t[3] = l;
                    // summing the orbit in sorted source order makes every
                    // entry of an orbit the bit-identical average, so the
                    // output symmetries hold exactly
                    let mut sources = [0usize; 8];
                    for (s, p) in sources.iter_mut().zip(&SYMMETRY_GROUP) {
                        *s = flat(nn, t[p[0]], t[p[1]], t[p[2]], t[p[3]]);
                    }
                    sources.sort_unstable();
                    let acc: f64 = sources.iter().map(|&s| raw[s]).sum();
                    out[flat(nn, i, j, k, l)] = acc / 8.0;
                }
            }
        }
    }
    Ok(CrossingTensor {
        n: nn,
        comp: out,
    })
}

/// The `n^4 x n^4` matrix of [`project_w`] acting on flattened components.
/// Used to cross-check `dim_w` against the numerically computed rank.
pub fn projection_operator(n: FlavorDim) -> DMatrix<f64> {
    let nn = n.get();
    let size = nn * nn * nn * nn;
    let mut p = DMatrix::zeros(size, size);
    let mut t = [0usize; 4];
    for i in 0..nn {
        for j in 0..nn {
            for k in 0..nn {
                for l in 0..nn {
                    t[0] = i;
                    t[1] = j;
                    t[2] = k;
                    t[3] = l;
                    let row = flat(nn, i, j, k, l);
                    for perm in &SYMMETRY_GROUP {
                        let col = flat(nn, t[perm[0]], t[perm[1]], t[perm[2]], t[perm[3]]);
                        p[(row, col)] += 0.125;
                    }
                }
            }
        }
    }
    p
}

/// Totally symmetric product of four covectors with the `1/4!` normalization.
pub fn sym_product(covectors: [&[f64]; 4]) -> Result<CrossingTensor> {
    let n = covectors[0].len();
    if covectors.iter().any(|a| a.len() != n) {
        return Err(Error::DimMismatch(
            "covectors live on different flavor spaces".into(),
        ));
    }
    FlavorDim::new(n)?;
    let mut comp = vec![0.0; n * n * n * n];
    let mut t = [0usize; 4];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    t[0] = i;
                    t[1] = j;
                    t[2] = k;
                    t[3] = l;
                    let mut acc = 0.0;
                    for p in &S4 {
                        acc += covectors[0][t[p[0]]]
                            * covectors[1][t[p[1]]]
                            * covectors[2][t[p[2]]]
                            * covectors[3][t[p[3]]];
                    }
                    comp[flat(n, i, j, k, l)] = acc / 24.0;
                }
            }
        }
    }
    Ok(CrossingTensor { n, comp })
}

/// Fourth symmetric power of a covector; equals the plain fourth tensor power.
pub fn sym_power(alpha: &[f64]) -> Result<CrossingTensor> {
    sym_product([alpha, alpha, alpha, alpha])
}

impl CrossingTensor {
    /// Total symmetrization over all four slots. Idempotent; its kernel is
    /// the curvature-like complement of the fully symmetric part.
    pub fn tot(&self) -> CrossingTensor {
        let n = self.n;
        let mut comp = vec![0.0; self.comp.len()];
        let mut t = [0usize; 4];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        t[0] = i;
                        t[1] = j;
                        t[2] = k;
                        t[3] = l;
                        let mut acc = 0.0;
                        for p in &S4 {
                            acc += self.get(t[p[0]], t[p[1]], t[p[2]], t[p[3]]);
                        }
                        comp[flat(n, i, j, k, l)] = acc / 24.0;
                    }
                }
            }
        }
        CrossingTensor { n, comp }
    }

    /// Natural pairing: full contraction of components. Bilinear and
    /// symmetric in its arguments.
    pub fn pair(&self, other: &CrossingTensor) -> f64 {
        assert_eq!(self.n, other.n, "flavor dimensions differ");
        self.comp
            .iter()
            .zip(&other.comp)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// The `n^2 x n^2` Gram form `G[(i,j),(k,l)] = S[i,j,k,l]` with flat
    /// index `i*n + j`. Positive semidefiniteness of this matrix is cone
    /// membership. Reading the upper triangle for both halves makes the
    /// matrix symmetric exactly.
    pub fn gram(&self) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n * n, n * n, |r, c| {
            let (r, c) = if r <= c { (r, c) } else { (c, r) };
            self.get(r / n, r % n, c / n, c % n)
        })
    }

    /// Trace of [`Self::gram`], a positive scale for nonzero cone elements.
    pub fn gram_trace(&self) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += self.get(i, j, i, j);
            }
        }
        acc
    }

    /// Evaluation as a bilinear form on decomposables:
    /// `sum_{ijkl} S[i,j,k,l] a[i] b[j] a[k] b[l]`.
    pub fn eval_product_state(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = self.n;
        assert!(a.len() == n && b.len() == n, "covector length mismatch");
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let ab = a[i] * b[j];
                if ab == 0.0 {
                    continue;
                }
                for k in 0..n {
                    for l in 0..n {
                        acc += self.get(i, j, k, l) * ab * a[k] * b[l];
                    }
                }
            }
        }
        acc
    }

    /// Pullback along `A` on all four slots:
    /// `(A*S)(v1,..,v4) = S(A v1, .., A v4)`.
    ///
    /// Composition convention: `act(B, act(A, S)) = act(A * B, S)`.
    /// Implemented as four successive mode products.
    pub fn act(&self, a: &DMatrix<f64>) -> CrossingTensor {
        let n = self.n;
        assert!(a.nrows() == n && a.ncols() == n, "matrix size mismatch");
        let mut cur = self.comp.clone();
        // mode m: new[.., i_m = x, ..] = sum_y A[y, x] * old[.., i_m = y, ..]
        for mode in 0..4 {
            let mut next = vec![0.0; cur.len()];
            let stride = n.pow(3 - mode as u32);
            let outer = n.pow(mode as u32);
            for o in 0..outer {
                for inner in 0..stride {
                    let base = o * n * stride + inner;
                    for x in 0..n {
                        let mut acc = 0.0;
                        for y in 0..n {
                            acc += a[(y, x)] * cur[base + y * stride];
                        }
                        next[base + x * stride] = acc;
                    }
                }
            }
            cur = next;
        }
        CrossingTensor { n, comp: cur }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_cov(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    fn random_raw(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n * n * n * n)
            .map(|_| rng.random::<f64>() * 2.0 - 1.0)
            .collect()
    }

    pub(crate) fn random_w(rng: &mut ChaCha8Rng, n: usize) -> CrossingTensor {
        let raw = random_raw(rng, n);
        project_w(FlavorDim::new(n).unwrap(), &raw).unwrap()
    }

    #[test]
    fn symmetry_group_is_closed_of_order_8() {
        // every product of two group elements is again a group element
        for p in &SYMMETRY_GROUP {
            for q in &SYMMETRY_GROUP {
                let prod = [p[q[0]], p[q[1]], p[q[2]], p[q[3]]];
                assert!(SYMMETRY_GROUP.contains(&prod), "{prod:?} not in group");
            }
        }
        let mut distinct = SYMMETRY_GROUP.to_vec();
        distinct.sort();
        distinct.dedup();
        assert_eq!(distinct.len(), 8);
    }

    #[test]
    fn dim_w_formula_values() {
        assert_eq!(dim_w(1), 1);
        assert_eq!(dim_w(2), 6);
        assert_eq!(dim_w(3), 21);
        assert_eq!(dim_w(4), 55);
        assert_eq!(dim_w(5), 120);
    }

    #[test]
    fn dim_w_matches_projection_rank() {
        // the averaging operator is a symmetric projector, so its rank is
        // the count of near-unit eigenvalues
        for n in 1..=5 {
            let p = projection_operator(FlavorDim::new(n).unwrap());
            let rank = p
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .filter(|&&s| s > 0.5)
                .count();
            assert_eq!(rank, dim_w(n), "rank mismatch at n={n}");
        }
    }

    #[test]
    fn project_fixes_fully_symmetric_tensor() {
        let a = unit_cov(3, 0);
        let t = sym_power(&a).unwrap();
        let p = project_w(t.dim(), t.components().to_vec().as_slice()).unwrap();
        assert!(t.max_diff(&p) == 0.0);
        assert_eq!(t.get(0, 0, 0, 0), 1.0);
    }

    #[test]
    fn project_single_entry_orbit() {
        // raw delta at (0,1,0,1): the eight images split 4/4 over
        // {(0,1,0,1), (1,0,1,0)}, so the average puts 1/2 on each and
        // nothing elsewhere.
        let n = FlavorDim::new(2).unwrap();
        let mut raw = vec![0.0; 16];
        raw[flat(2, 0, 1, 0, 1)] = 1.0;
        let p = project_w(n, &raw).unwrap();
        assert_eq!(p.get(0, 1, 0, 1), 0.5);
        assert_eq!(p.get(1, 0, 1, 0), 0.5);
        assert_eq!(p.get(0, 1, 1, 0), 0.0);
        assert_eq!(p.get(1, 0, 0, 1), 0.0);
        assert_eq!(p.get(0, 0, 1, 1), 0.0);

        // raw delta at (0,1,1,0): orbit of size 4, each entry hit twice.
        let mut raw = vec![0.0; 16];
        raw[flat(2, 0, 1, 1, 0)] = 1.0;
        let p = project_w(n, &raw).unwrap();
        assert_eq!(p.get(0, 1, 1, 0), 0.25);
        assert_eq!(p.get(1, 0, 0, 1), 0.25);
        assert_eq!(p.get(0, 0, 1, 1), 0.25);
        assert_eq!(p.get(1, 1, 0, 0), 0.25);
        assert_eq!(p.get(0, 1, 0, 1), 0.0);
    }

    #[test]
    fn sym_product_counts_matching_permutations() {
        // product a1 a1 a2 a2: 4 of the 24 permutations hit slot pattern
        // (0,0,1,1), so the component there is 1/6.
        let a1 = unit_cov(3, 0);
        let a2 = unit_cov(3, 1);
        let t = sym_product([&a1, &a1, &a2, &a2]).unwrap();
        assert!((t.get(0, 0, 1, 1) - 1.0 / 6.0).abs() < 1e-15);
        assert!((t.get(0, 1, 0, 1) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn sym_product_argument_order_irrelevant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a: Vec<f64> = (0..3).map(|_| rng.random::<f64>() - 0.5).collect();
        let b: Vec<f64> = (0..3).map(|_| rng.random::<f64>() - 0.5).collect();
        let c: Vec<f64> = (0..3).map(|_| rng.random::<f64>() - 0.5).collect();
        let d: Vec<f64> = (0..3).map(|_| rng.random::<f64>() - 0.5).collect();
        let t1 = sym_product([&a, &b, &c, &d]).unwrap();
        let t2 = sym_product([&d, &b, &a, &c]).unwrap();
        assert!(t1.max_diff(&t2) < 1e-15);
    }

    #[test]
    fn tot_is_idempotent_and_fixes_powers() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_w(&mut rng, 3);
        let t1 = s.tot();
        let t2 = t1.tot();
        assert!(t1.max_diff(&t2) < 1e-14);

        let a = unit_cov(3, 0);
        let p = sym_power(&a).unwrap();
        assert!(p.tot().max_diff(&p) < 1e-15);
    }

    #[test]
    fn pair_is_symmetric_and_matches_simple_contraction() {
        let a = unit_cov(3, 0);
        let s = sym_power(&a).unwrap();
        let m = sym_power(&a).unwrap();
        assert_eq!(s.pair(&m), 1.0);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_w(&mut rng, 3);
        let y = random_w(&mut rng, 3);
        assert!((x.pair(&y) - y.pair(&x)).abs() < 1e-14);
    }

    #[test]
    fn projection_is_pair_compatible() {
        // pairing any W element against a projected raw tensor agrees with
        // pairing against the raw tensor itself
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let raw = random_raw(&mut rng, 3);
            let m = random_w(&mut rng, 3);
            let p = project_w(FlavorDim::new(3).unwrap(), &raw).unwrap();
            let direct: f64 = raw
                .iter()
                .zip(m.components())
                .map(|(a, b)| a * b)
                .sum();
            assert!((p.pair(&m) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn gram_is_symmetric_and_sparse_for_powers() {
        let a = unit_cov(3, 0);
        let s = sym_power(&a).unwrap();
        let g = s.gram();
        assert_eq!(g[(0, 0)], 1.0);
        assert_eq!(g.iter().filter(|&&x| x != 0.0).count(), 1);

        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let s = random_w(&mut rng, 3);
        let g = s.gram();
        assert_eq!((&g - g.transpose()).abs().max(), 0.0);
    }

    #[test]
    fn gram_eigenvalues_split_into_rescaled_blocks() {
        // Eigenvalues of the full Gram form are those of the two restriction
        // blocks after compensating for the basis normalization: the paired
        // basis vectors have squared length 1/2, so the sym block rescales by
        // D^{-1/2} R D^{-1/2} with D = diag(1,..,1,1/2,..,1/2) and the alt
        // block by a plain factor of 2.
        use crate::maps::{restrict_alt, restrict_sym};
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let s = random_w(&mut rng, 3);
            let g = s.gram();
            let mut eig_g: Vec<f64> =
                g.symmetric_eigen().eigenvalues.iter().copied().collect();

            let r = restrict_sym(&s);
            let mut d = DMatrix::identity(6, 6);
            for a in 3..6 {
                d[(a, a)] = std::f64::consts::SQRT_2;
            }
            let r_scaled = &d * r.matrix() * &d;
            let mut eig: Vec<f64> = r_scaled
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .copied()
                .collect();
            let rp = restrict_alt(&s);
            let rp_scaled = rp.matrix() * 2.0;
            eig.extend(rp_scaled.symmetric_eigen().eigenvalues.iter());

            eig_g.sort_by(f64::total_cmp);
            eig.sort_by(f64::total_cmp);
            for (a, b) in eig_g.iter().zip(&eig) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn act_identity_and_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let s = random_w(&mut rng, 3);
        let id = DMatrix::identity(3, 3);
        assert!(s.act(&id).max_diff(&s) < 1e-15);

        let a = DMatrix::from_fn(3, 3, |_, _| rng.random::<f64>() - 0.5);
        let b = DMatrix::from_fn(3, 3, |_, _| rng.random::<f64>() - 0.5);
        let lhs = s.act(&(&a * &b));
        let rhs = s.act(&a).act(&b);
        assert!(lhs.max_diff(&rhs) < 1e-12);
    }

    #[test]
    fn act_is_pair_adjoint_under_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let s = random_w(&mut rng, 3);
        let m = random_w(&mut rng, 3);
        let a = DMatrix::from_fn(3, 3, |_, _| rng.random::<f64>() - 0.5);
        let lhs = s.act(&a).pair(&m);
        let rhs = s.pair(&m.act(&a.transpose()));
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn act_mode_product_matches_naive_pullback() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let s = random_w(&mut rng, 3);
        let a = DMatrix::from_fn(3, 3, |_, _| rng.random::<f64>() - 0.5);
        let fast = s.act(&a);
        let mut naive = CrossingTensor::zeros(FlavorDim::new(3).unwrap());
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let mut acc = 0.0;
                        for p in 0..3 {
                            for q in 0..3 {
                                for r in 0..3 {
                                    for t in 0..3 {
                                        acc += s.get(p, q, r, t)
                                            * a[(p, i)]
                                            * a[(q, j)]
                                            * a[(r, k)]
                                            * a[(t, l)];
                                    }
                                }
                            }
                        }
                        naive.set(i, j, k, l, acc);
                    }
                }
            }
        }
        assert!(fast.max_diff(&naive) < 1e-12);
    }

    #[test]
    fn eval_product_state_matches_pairing_with_second_kind_ray() {
        use crate::rays::ray_type2;
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..20 {
            let m = random_w(&mut rng, 3);
            let a: Vec<f64> = (0..3).map(|_| rng.random::<f64>() - 0.5).collect();
            let b: Vec<f64> = (0..3).map(|_| rng.random::<f64>() - 0.5).collect();
            let ray = ray_type2(&a, &b).unwrap();
            let lhs = ray.pair(&m);
            let rhs = m.eval_product_state(&a, &b);
            assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn project_is_idempotent(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let raw = random_raw(&mut rng, 3);
            let n = FlavorDim::new(3).unwrap();
            let p1 = project_w(n, &raw).unwrap();
            let p2 = project_w(n, p1.components().to_vec().as_slice()).unwrap();
            prop_assert!(p1.max_diff(&p2) < 1e-13);
            prop_assert!(p1.symmetry_residual() < 1e-13);
        }

        #[test]
        fn coeff_roundtrip(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c: Vec<f64> = (0..21).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let t = coeffs::from_coeffs(FlavorDim::new(3).unwrap(), &c).unwrap();
            let back = coeffs::to_coeffs(&t);
            for (x, y) in c.iter().zip(back.values()) {
                prop_assert!((x - y).abs() < 1e-15);
            }
        }
    }
}
