//! Positivity-bound checkers for the dual cone of Wilson-coefficient
//! tensors: the elastic conditions over product states, the sampled
//! inelastic conditions over third-kind rays, combined membership reports,
//! and two-parameter region scans.
//!
//! Margins are degree-one homogeneous in the checked tensor: the elastic
//! margin is the minimum of `M(a (x) b, a (x) b)` over unit covectors, the
//! inelastic margin the minimum of `ray(M) / trace(gram(ray))` over the
//! evaluated rays. Pass thresholds rescale with the tensor so verdicts are
//! invariant under positive scaling.

use nalgebra::Matrix3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffs::{from_coeffs, to_coeffs};
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, nelder_mead_polished};
use crate::rays::{ray_type3, type3_margin, ExtremalRay, RayKind, RaySampler};
use crate::spectra::min_eig3;
use crate::tensor::{CrossingTensor, FlavorDim};

/// Seed used whenever a caller does not choose one.
pub const DEFAULT_SEED: u64 = 42;

/// Relative violation threshold for certified verdicts.
pub const VIOLATION_TOL_REL: f64 = 1e-9;

/// Normalized-margin half-width of the boundary class in region scans.
pub const BOUNDARY_BAND: f64 = 0.02;

fn scale_of(m: &CrossingTensor) -> f64 {
    m.max_abs()
}

fn normalized(x: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        x / scale
    } else {
        x
    }
}

/// Max absolute value of the nine decomposability quadrics of a flattened
/// two-tensor; zero exactly on outer products.
pub fn decomposable_residual(u: &[f64; 9]) -> f64 {
    let quads = [
        (0, 4, 1, 3),
        (0, 5, 2, 3),
        (0, 7, 1, 6),
        (0, 8, 2, 6),
        (1, 5, 2, 4),
        (1, 8, 2, 7),
        (3, 7, 4, 6),
        (3, 8, 5, 6),
        (4, 8, 5, 7),
    ];
    quads
        .iter()
        .map(|&(a, b, c, d)| (u[a] * u[b] - u[c] * u[d]).abs())
        .fold(0.0, f64::max)
}

/// The symmetric 3x3 matrix of quadratic forms `q1..q6` at a homogenized
/// direction `(t0, t1, t2)`, assembled from the 21 free components. Its
/// minimum eigenvalue over all unit directions is the elastic margin.
pub fn q_matrix(m: &[f64], t0: f64, t1: f64, t2: f64) -> Matrix3<f64> {
    debug_assert_eq!(m.len(), 21);
    let q = |a: usize, b: usize, c: usize, d: usize, e: usize, f: usize| {
        m[a - 1] * t0 * t0
            + 2.0 * m[b - 1] * t0 * t1
            + 2.0 * m[c - 1] * t0 * t2
            + m[d - 1] * t1 * t1
            + 2.0 * m[e - 1] * t1 * t2
            + m[f - 1] * t2 * t2
    };
    let q1 = q(1, 2, 3, 5, 7, 9);
    let q2 = q(2, 4, 6, 10, 11, 14);
    let q3 = q(3, 6, 8, 12, 13, 15);
    let q4 = q(5, 10, 12, 16, 17, 19);
    let q5 = q(7, 11, 13, 17, 18, 20);
    let q6 = q(9, 14, 15, 19, 20, 21);
    Matrix3::new(q1, q2, q3, q2, q4, q5, q3, q5, q6)
}

fn direction(theta: f64, phi: f64) -> [f64; 3] {
    [theta.cos(), theta.sin() * phi.cos(), theta.sin() * phi.sin()]
}

/// How an elastic margin was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElasticMethod {
    PolynomialGrid,
    SphereOptimizer,
}

/// Elastic checker outcome. The witness pair of unit covectors reproduces
/// the margin through the pairing with the ray it generates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElasticReport {
    pub pass: bool,
    pub margin: f64,
    pub witness_alpha: Vec<f64>,
    pub witness_beta: Vec<f64>,
    pub method: ElasticMethod,
}

/// Grid + local-refinement configuration for the polynomial elastic check.
#[derive(Debug, Clone)]
pub struct GridConfig {
    pub n_theta: usize,
    pub n_phi: usize,
    pub refine_cells: usize,
    pub refine_iters: usize,
    pub tol_rel: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n_theta: 181,
            n_phi: 361,
            refine_cells: 16,
            refine_iters: 200,
            tol_rel: VIOLATION_TOL_REL,
        }
    }
}

fn require_three_flavors(m: &CrossingTensor) -> Result<()> {
    if m.n() != 3 {
        return Err(Error::RequiresThreeFlavors(m.n()));
    }
    Ok(())
}

/// Elastic margin via the polynomial conditions: the quadratic-form matrix
/// is scanned over homogenized directions on the unit hemisphere (so the
/// large-parameter limits are interior points), then locally refined at the
/// lowest cells. The witness covector pair comes from the losing direction
/// and the eigen-direction of its losing block.
pub fn elastic_margin_poly(m: &CrossingTensor, cfg: &GridConfig) -> Result<ElasticReport> {
    require_three_flavors(m)?;
    let coeffs: Vec<f64> = to_coeffs(m).values().to_vec();
    let value = |theta: f64, phi: f64| {
        let b = direction(theta, phi);
        min_eig3(&q_matrix(&coeffs, b[0], b[1], b[2]))
    };

    let half_pi = std::f64::consts::FRAC_PI_2;
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut worst: Vec<(f64, f64, f64)> = Vec::new(); // (value, theta, phi)
    for it in 0..cfg.n_theta {
        let theta = half_pi * it as f64 / (cfg.n_theta.max(2) - 1) as f64;
        for ip in 0..cfg.n_phi {
            let phi = two_pi * ip as f64 / (cfg.n_phi.max(2) - 1) as f64;
            let v = value(theta, phi);
            if worst.len() < cfg.refine_cells {
                worst.push((v, theta, phi));
                worst.sort_by(|a, b| a.0.total_cmp(&b.0));
            } else if v < worst[cfg.refine_cells - 1].0 {
                worst[cfg.refine_cells - 1] = (v, theta, phi);
                worst.sort_by(|a, b| a.0.total_cmp(&b.0));
            }
        }
    }

    let step = half_pi / (cfg.n_theta.max(2) - 1) as f64;
    let mut best = worst[0];
    for &(_, theta, phi) in &worst {
        let r = nelder_mead_polished(
            |x: &[f64]| value(x[0], x[1]),
            &[theta, phi],
            step,
            cfg.refine_iters,
        );
        if r.f < best.0 {
            best = (r.f, r.x[0], r.x[1]);
        }
    }

    let beta = direction(best.1, best.2);
    let q = q_matrix(&coeffs, beta[0], beta[1], beta[2]);
    let eig = q.symmetric_eigen();
    let imin = (0..3)
        .min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
        .expect("3x3 eigenproblem");
    let alpha: Vec<f64> = eig.eigenvectors.column(imin).iter().copied().collect();
    // the grid objective is the fast closed form; the reported margin is the
    // stable eigenvalue at the final direction
    let margin = eig.eigenvalues[imin];
    let scale = scale_of(m);
    Ok(ElasticReport {
        pass: margin >= -cfg.tol_rel * scale,
        margin,
        witness_alpha: alpha,
        witness_beta: beta.to_vec(),
        method: ElasticMethod::PolynomialGrid,
    })
}

/// Multi-start configuration for the direct product-state minimizer.
#[derive(Debug, Clone)]
pub struct DirectConfig {
    pub starts: usize,
    pub iters: usize,
    pub seed: u64,
    pub tol_rel: f64,
}

impl Default for DirectConfig {
    fn default() -> Self {
        DirectConfig {
            starts: 64,
            iters: 400,
            seed: DEFAULT_SEED,
            tol_rel: VIOLATION_TOL_REL,
        }
    }
}

fn normalize3(x: &[f64]) -> Option<[f64; 3]> {
    let n = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    if n < 1e-12 {
        None
    } else {
        Some([x[0] / n, x[1] / n, x[2] / n])
    }
}

/// Independent elastic oracle: minimizes the product-state value over the
/// two unit covectors directly, by multi-start simplex search on the raw
/// six-dimensional parameterization (scale-invariant objective).
pub fn elastic_margin_direct(m: &CrossingTensor, cfg: &DirectConfig) -> Result<ElasticReport> {
    require_three_flavors(m)?;
    let objective = |x: &[f64]| match (normalize3(&x[0..3]), normalize3(&x[3..6])) {
        (Some(a), Some(b)) => m.eval_product_state(&a, &b),
        _ => f64::INFINITY,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best_x = vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0];
    let mut best_f = objective(&best_x);
    for _ in 0..cfg.starts {
        let x0: Vec<f64> = (0..6).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let r = nelder_mead(&objective, &x0, 0.5, cfg.iters);
        if r.f < best_f {
            best_f = r.f;
            best_x = r.x;
        }
    }
    let polish = nelder_mead(&objective, &best_x, 1e-4, cfg.iters);
    if polish.f < best_f {
        best_f = polish.f;
        best_x = polish.x;
    }

    let alpha = normalize3(&best_x[0..3]).expect("minimizer away from zero");
    let beta = normalize3(&best_x[3..6]).expect("minimizer away from zero");
    let scale = scale_of(m);
    Ok(ElasticReport {
        pass: best_f >= -cfg.tol_rel * scale,
        margin: best_f,
        witness_alpha: alpha.to_vec(),
        witness_beta: beta.to_vec(),
        method: ElasticMethod::SphereOptimizer,
    })
}

/// Sampling + refinement configuration for the inelastic checker.
#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub budget: usize,
    pub refine_count: usize,
    pub refine_iters: usize,
    pub seed: u64,
    pub tol_rel: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            budget: 20_000,
            refine_count: 32,
            refine_iters: 300,
            seed: DEFAULT_SEED,
            tol_rel: VIOLATION_TOL_REL,
        }
    }
}

/// Inelastic checker outcome. One-sided: a negative margin certifies a
/// violation, a nonnegative one only reports that none was found among the
/// evaluated rays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InelasticReport {
    pub pass_so_far: bool,
    pub margin: f64,
    pub witness: ExtremalRay,
    pub samples_used: usize,
    pub refine_evals: usize,
}

fn ray_params(ray: &ExtremalRay) -> Vec<f64> {
    match ray {
        ExtremalRay::Type3 { frame, d, g, h } => {
            let mut x: Vec<f64> = frame.iter().copied().collect();
            x.extend([*d, *g, *h]);
            x
        }
        _ => unreachable!("inelastic refinement only sees third-kind rays"),
    }
}

fn params_ray(x: &[f64]) -> ExtremalRay {
    ExtremalRay::Type3 {
        frame: Matrix3::from_column_slice(&x[0..9]),
        d: x[9],
        g: x[10],
        h: x[11],
    }
}

fn refine_objective(m: &CrossingTensor, x: &[f64]) -> f64 {
    let frame = Matrix3::from_column_slice(&x[0..9]);
    let (d, g, h) = (x[9], x[10], x[11]);
    let margin = type3_margin(d, g, h);
    let det = frame.determinant();
    if margin <= 1e-9 || det.abs() <= 0.05 {
        return 1e12 * (1.0 + (-margin).max(0.0) + (0.05 - det.abs()).max(0.0));
    }
    match ray_type3(&frame, d, g, h) {
        Ok(s) => s.pair(m) / s.gram_trace(),
        Err(_) => 1e12,
    }
}

/// Samples third-kind rays, normalizes each pairing by the Gram trace of
/// the ray, and locally refines the worst candidates over the full
/// `(frame, d, g, h)` parameterization.
pub fn inelastic_margin(m: &CrossingTensor, cfg: &SamplerConfig) -> Result<InelasticReport> {
    require_three_flavors(m)?;
    let mut sampler = RaySampler::new(cfg.seed);
    let mut worst: Vec<(f64, ExtremalRay)> = Vec::new();
    for _ in 0..cfg.budget {
        let ray = sampler.sample(RayKind::Type3);
        let s = ray.build()?;
        let v = s.pair(m) / s.gram_trace();
        if worst.len() < cfg.refine_count.max(1) {
            worst.push((v, ray));
            worst.sort_by(|a, b| a.0.total_cmp(&b.0));
        } else if v < worst.last().expect("nonempty").0 {
            let last = worst.len() - 1;
            worst[last] = (v, ray);
            worst.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
    }

    let mut best = worst[0].clone();
    let mut refine_evals = 0;
    for (v0, ray) in &worst {
        let x0 = ray_params(ray);
        let r = nelder_mead(|x| refine_objective(m, x), &x0, 0.1, cfg.refine_iters);
        refine_evals += r.evals;
        let candidate = params_ray(&r.x);
        if r.f < best.0 && candidate.build().is_ok() {
            best = (r.f, candidate);
        } else if *v0 < best.0 {
            best = (*v0, ray.clone());
        }
    }

    let scale = scale_of(m);
    Ok(InelasticReport {
        pass_so_far: best.0 >= -cfg.tol_rel * scale,
        margin: best.0,
        witness: best.1,
        samples_used: cfg.budget,
        refine_evals,
    })
}

/// Combined verdict over both checkers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    ViolatesElastic,
    ViolatesInelastic,
    PassesAllSampled,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub elastic: ElasticReport,
    pub inelastic: InelasticReport,
    pub verdict: Verdict,
}

/// Full membership configuration.
#[derive(Debug, Clone, Default)]
pub struct MembershipConfig {
    pub elastic_method: Option<ElasticMethod>,
    pub grid: GridConfig,
    pub direct: DirectConfig,
    pub sampler: SamplerConfig,
}

impl MembershipConfig {
    pub fn with_seed(seed: u64) -> Self {
        let mut cfg = MembershipConfig::default();
        cfg.direct.seed = seed;
        cfg.sampler.seed = seed;
        cfg
    }
}

/// Runs the elastic checker and the sampled inelastic checker; elastic
/// violations take precedence in the verdict. A passing verdict is sampled,
/// not certified.
pub fn membership(m: &CrossingTensor, cfg: &MembershipConfig) -> Result<BoundReport> {
    let elastic = match cfg.elastic_method.unwrap_or(ElasticMethod::PolynomialGrid) {
        ElasticMethod::PolynomialGrid => elastic_margin_poly(m, &cfg.grid)?,
        ElasticMethod::SphereOptimizer => elastic_margin_direct(m, &cfg.direct)?,
    };
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

/// Region-scan grid cell. Margins are normalized by the per-cell tensor
/// scale so the boundary band is dimensionless.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegionCell {
    pub status: u8,
    pub elastic_margin: f64,
    pub inelastic_margin: f64,
}

pub const STATUS_ELASTIC_FAIL: u8 = 0;
pub const STATUS_ELASTIC_ONLY: u8 = 1;
pub const STATUS_FULL_PASS: u8 = 2;
pub const STATUS_BOUNDARY: u8 = 3;

fn classify_margins(em: f64, im: f64, band: f64) -> u8 {
    if em <= -band {
        STATUS_ELASTIC_FAIL
    } else if em < band {
        STATUS_BOUNDARY
    } else if im <= -band {
        STATUS_ELASTIC_ONLY
    } else if im < band {
        STATUS_BOUNDARY
    } else {
        STATUS_FULL_PASS
    }
}

/// Two-parameter scan of `m0 + d1 * dir1 + d2 * dir2` over a square window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionScan {
    pub deltas1: Vec<f64>,
    pub deltas2: Vec<f64>,
    /// Row-major: `cells[i * deltas2.len() + j]` is `(deltas1[i], deltas2[j])`.
    pub cells: Vec<RegionCell>,
}

impl RegionScan {
    pub fn cell(&self, i: usize, j: usize) -> &RegionCell {
        &self.cells[i * self.deltas2.len() + j]
    }

    pub fn counts(&self) -> [usize; 4] {
        let mut c = [0usize; 4];
        for cell in &self.cells {
            c[cell.status as usize] += 1;
        }
        c
    }

    /// CSV with 12-significant-digit numbers and '.' decimal separator.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("delta1,delta2,status,elastic_margin,inelastic_margin\n");
        for (i, d1) in self.deltas1.iter().enumerate() {
            for (j, d2) in self.deltas2.iter().enumerate() {
                let c = self.cell(i, j);
                out.push_str(&format!(
                    "{:.11e},{:.11e},{},{:.11e},{:.11e}\n",
                    d1, d2, c.status, c.elastic_margin, c.inelastic_margin
                ));
            }
        }
        out
    }
}

/// Budgets and grids for [`region_scan`]. The elastic grid here is coarser
/// than the standalone checker's because every cell is refined locally;
/// the ray pool is shared across cells, which the linearity of the pairing
/// makes exact.
#[derive(Debug, Clone)]
pub struct RegionConfig {
    pub window: f64,
    pub resolution: usize,
    pub seed: u64,
    pub ray_budget: usize,
    pub elastic_theta: usize,
    pub elastic_phi: usize,
    pub refine_iters: usize,
    pub ray_refine_count: usize,
    pub ray_refine_iters: usize,
    pub band: f64,
    pub tol_rel: f64,
}

impl Default for RegionConfig {
    fn default() -> Self {
        RegionConfig {
            window: 0.4,
            resolution: 200,
            seed: DEFAULT_SEED,
            ray_budget: 20_000,
            elastic_theta: 61,
            elastic_phi: 121,
            refine_iters: 150,
            ray_refine_count: 8,
            ray_refine_iters: 120,
            band: BOUNDARY_BAND,
            tol_rel: VIOLATION_TOL_REL,
        }
    }
}

fn linspace(window: f64, resolution: usize) -> Vec<f64> {
    if window == 0.0 || resolution <= 1 {
        return vec![0.0];
    }
    (0..resolution)
        .map(|i| -window + 2.0 * window * i as f64 / (resolution - 1) as f64)
        .collect()
}

/// Classifies every grid point of a two-direction linear family around a
/// center tensor. Deterministic for a fixed seed: the third-kind ray pool
/// is drawn once and shared, per-cell work is seed-free, and cells merge by
/// index.
pub fn region_scan(
    m0: &CrossingTensor,
    dir1: &CrossingTensor,
    dir2: &CrossingTensor,
    cfg: &RegionConfig,
) -> Result<RegionScan> {
    require_three_flavors(m0)?;
    require_three_flavors(dir1)?;
    require_three_flavors(dir2)?;
    let g11 = dir1.pair(dir1);
    let g22 = dir2.pair(dir2);
    let g12 = dir1.pair(dir2);
    if g11 * g22 - g12 * g12 <= 1e-12 * (g11 * g22).max(1e-300) {
        return Err(Error::DependentCovectors);
    }

    let c0: Vec<f64> = to_coeffs(m0).values().to_vec();
    let c1: Vec<f64> = to_coeffs(dir1).values().to_vec();
    let c2: Vec<f64> = to_coeffs(dir2).values().to_vec();

    // shared third-kind ray pool with per-ray pairings against the family
    let mut sampler = RaySampler::new(cfg.seed);
    let mut pool: Vec<(ExtremalRay, f64, f64, f64, f64)> = Vec::with_capacity(cfg.ray_budget);
    for _ in 0..cfg.ray_budget {
        let ray = sampler.sample(RayKind::Type3);
        let s = ray.build()?;
        pool.push((ray, s.pair(m0), s.pair(dir1), s.pair(dir2), s.gram_trace()));
    }

    // per-direction quadratic-form triples for the elastic pre-scan
    let half_pi = std::f64::consts::FRAC_PI_2;
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut dirs: Vec<(f64, f64)> = Vec::with_capacity(cfg.elastic_theta * cfg.elastic_phi);
    for it in 0..cfg.elastic_theta {
        let theta = half_pi * it as f64 / (cfg.elastic_theta.max(2) - 1) as f64;
        for ip in 0..cfg.elastic_phi {
            let phi = two_pi * ip as f64 / (cfg.elastic_phi.max(2) - 1) as f64;
            dirs.push((theta, phi));
        }
    }
    let triples: Vec<[Matrix3<f64>; 3]> = dirs
        .iter()
        .map(|&(theta, phi)| {
            let b = direction(theta, phi);
            [
                q_matrix(&c0, b[0], b[1], b[2]),
                q_matrix(&c1, b[0], b[1], b[2]),
                q_matrix(&c2, b[0], b[1], b[2]),
            ]
        })
        .collect();

    let deltas1 = linspace(cfg.window, cfg.resolution);
    let deltas2 = linspace(cfg.window, cfg.resolution);
    let step = half_pi / (cfg.elastic_theta.max(2) - 1) as f64;

    let n2 = deltas2.len();
    let cells: Vec<RegionCell> = (0..deltas1.len() * n2)
        .into_par_iter()
        .map(|idx| {
            let d1 = deltas1[idx / n2];
            let d2 = deltas2[idx % n2];
            let cell_coeffs: Vec<f64> = (0..21)
                .map(|a| c0[a] + d1 * c1[a] + d2 * c2[a])
                .collect();
            let scale = cell_coeffs.iter().fold(0.0, |acc: f64, &x| acc.max(x.abs()));

            // elastic: coarse scan over the precomputed triples, refined
            let mut best = (f64::INFINITY, 0.0, 0.0);
            for (t, &(theta, phi)) in triples.iter().zip(&dirs) {
                let q = t[0] + t[1] * d1 + t[2] * d2;
                let v = min_eig3(&q);
                if v < best.0 {
                    best = (v, theta, phi);
                }
            }
            let refined = nelder_mead_polished(
                |x: &[f64]| {
                    let b = direction(x[0], x[1]);
                    min_eig3(&q_matrix(&cell_coeffs, b[0], b[1], b[2]))
                },
                &[best.1, best.2],
                step,
                cfg.refine_iters,
            );
            let accurate = |theta: f64, phi: f64| {
                let b = direction(theta, phi);
                crate::spectra::min_eig3_accurate(&q_matrix(&cell_coeffs, b[0], b[1], b[2]))
            };
            let em_raw = accurate(refined.x[0], refined.x[1]).min(accurate(best.1, best.2));

            // inelastic: shared pool, then local refinement near the band
            let mut im_raw = f64::INFINITY;
            let mut worst_rays: Vec<(f64, &ExtremalRay)> = Vec::new();
            for (ray, p0, p1, p2, tr) in &pool {
                let v = (p0 + d1 * p1 + d2 * p2) / tr;
                if v < im_raw {
                    im_raw = v;
                }
                if cfg.ray_refine_count > 0 {
                    if worst_rays.len() < cfg.ray_refine_count {
                        worst_rays.push((v, ray));
                        worst_rays.sort_by(|a, b| a.0.total_cmp(&b.0));
                    } else if v < worst_rays.last().expect("nonempty").0 {
                        let last = worst_rays.len() - 1;
                        worst_rays[last] = (v, ray);
                        worst_rays.sort_by(|a, b| a.0.total_cmp(&b.0));
                    }
                }
            }
            if normalized(im_raw, scale).abs() < 2.0 * cfg.band && cfg.ray_refine_count > 0 {
                let cell_m = from_coeffs(FlavorDim::new(3).expect("3 flavors"), &cell_coeffs)
                    .expect("21 coefficients");
                for (_, ray) in &worst_rays {
                    let x0 = ray_params(ray);
                    let r = nelder_mead(
                        |x| refine_objective(&cell_m, x),
                        &x0,
                        0.05,
                        cfg.ray_refine_iters,
                    );
                    if r.f < im_raw {
                        im_raw = r.f;
                    }
                }
            }

            let em = normalized(em_raw, scale);
            let im = normalized(im_raw, scale);
            RegionCell {
                status: classify_margins(em, im, cfg.band),
                elastic_margin: em,
                inelastic_margin: im,
            }
        })
        .collect();

    Ok(RegionScan {
        deltas1,
        deltas2,
        cells,
    })
}
