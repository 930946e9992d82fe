//! Two-flavor-coupling worked example: the pion-scattering coefficient
//! tensor built from two dimensionless four-derivative couplings, and its
//! closed-form bounds `l2 >= 0`, `l1 + l2 >= 0`.

use serde::{Deserialize, Serialize};

use crate::bounds::{membership, BoundReport, MembershipConfig, Verdict};
use crate::error::Result;
use crate::symmetry::o3_tensor;
use crate::tensor::CrossingTensor;

/// Dimensionless couplings (the overall decay-constant rescaling is
/// absorbed; positivity is scale-invariant).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChptParams {
    pub l1: f64,
    pub l2: f64,
}

/// The pion coefficient tensor
/// `(2 l1 + l2) d_ab d_cd + 2 l2 d_ac d_bd + (2 l1 + l2) d_ad d_bc`,
/// a rotation-invariant element with `a1 = 2 l1 + l2`, `a2 = 2 l1 + 3 l2`.
pub fn chpt_tensor(p: ChptParams) -> CrossingTensor {
    o3_tensor(2.0 * p.l1 + p.l2, 2.0 * p.l1 + 3.0 * p.l2)
}

/// Combined analytic and numerical bound report for a coupling pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChptReport {
    pub params: ChptParams,
    /// `l2 >= 0`
    pub l2_nonnegative: bool,
    /// `l1 + l2 >= 0`
    pub sum_nonnegative: bool,
    pub analytic_pass: bool,
    pub bounds: BoundReport,
}

/// Evaluates both closed-form inequalities and the numerical checkers.
/// The two verdicts agree away from the boundary; the report carries both.
pub fn chpt_bounds(p: ChptParams, cfg: &MembershipConfig) -> Result<ChptReport> {
    let m = chpt_tensor(p);
    let bounds = membership(&m, cfg)?;
    let l2_nonnegative = p.l2 >= 0.0;
    let sum_nonnegative = p.l1 + p.l2 >= 0.0;
    Ok(ChptReport {
        params: p,
        l2_nonnegative,
        sum_nonnegative,
        analytic_pass: l2_nonnegative && sum_nonnegative,
        bounds,
    })
}

/// Closed-form elastic margin over unit covectors:
/// `min(2 l2, 4 (l1 + l2))`.
pub fn chpt_elastic_margin_exact(p: ChptParams) -> f64 {
    (2.0 * p.l2).min(4.0 * (p.l1 + p.l2))
}

impl ChptReport {
    /// True when the analytic flags and the numerical verdict agree.
    pub fn consistent(&self) -> bool {
        match self.bounds.verdict {
            Verdict::PassesAllSampled => self.analytic_pass,
            Verdict::ViolatesElastic | Verdict::ViolatesInelastic => !self.analytic_pass,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{elastic_margin_poly, GridConfig, SamplerConfig};
    use crate::symmetry::{invariance_residual, Sector};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quick_cfg() -> MembershipConfig {
        let mut cfg = MembershipConfig::with_seed(5);
        cfg.grid = GridConfig {
            n_theta: 61,
            n_phi: 121,
            ..GridConfig::default()
        };
        cfg.sampler = SamplerConfig {
            budget: 1500,
            refine_count: 6,
            refine_iters: 100,
            ..SamplerConfig::default()
        };
        cfg
    }

    #[test]
    fn zero_couplings_give_zero_tensor() {
        let m = chpt_tensor(ChptParams { l1: 0.0, l2: 0.0 });
        assert_eq!(m.max_abs(), 0.0);
    }

    #[test]
    fn tensor_is_rotation_invariant() {
        let m = chpt_tensor(ChptParams { l1: 0.7, l2: -0.4 });
        let (r, _) = invariance_residual(&m, Sector::O3).unwrap();
        assert!(r < 1e-12);
    }

    #[test]
    fn product_state_value_matches_delta_contraction() {
        // M(a (x) b, a (x) b) = 2 (2 l1 + l2) (a . b)^2 + 2 l2 |a|^2 |b|^2
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let p = ChptParams {
                l1: rng.random::<f64>() * 2.0 - 1.0,
                l2: rng.random::<f64>() * 2.0 - 1.0,
            };
            let m = chpt_tensor(p);
            let a: Vec<f64> = (0..3).map(|_| rng.random::<f64>() - 0.5).collect();
            let b: Vec<f64> = (0..3).map(|_| rng.random::<f64>() - 0.5).collect();
            let got = m.eval_product_state(&a, &b);
            let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
            let na: f64 = a.iter().map(|x| x * x).sum();
            let nb: f64 = b.iter().map(|x| x * x).sum();
            let expect = 2.0 * (2.0 * p.l1 + p.l2) * dot * dot + 2.0 * p.l2 * na * nb;
            assert!((got - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_margin_matches_checker() {
        let cfg = GridConfig {
            n_theta: 61,
            n_phi: 121,
            ..GridConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..8 {
            let p = ChptParams {
                l1: rng.random::<f64>() * 2.0 - 1.0,
                l2: rng.random::<f64>() * 2.0 - 1.0,
            };
            let m = chpt_tensor(p);
            if m.max_abs() < 1e-9 {
                continue;
            }
            let r = elastic_margin_poly(&m, &cfg).unwrap();
            let expect = chpt_elastic_margin_exact(p);
            assert!(
                (r.margin - expect).abs() < 1e-7 * (1.0 + expect.abs()),
                "margin {} expected {}",
                r.margin,
                expect
            );
        }
    }

    #[test]
    fn representative_verdicts() {
        let cfg = quick_cfg();
        let pass = chpt_bounds(ChptParams { l1: 0.0, l2: 1.0 }, &cfg).unwrap();
        assert_eq!(pass.bounds.verdict, Verdict::PassesAllSampled);
        assert!(pass.consistent());

        let fail = chpt_bounds(ChptParams { l1: 1.0, l2: -1.0 }, &cfg).unwrap();
        assert_eq!(fail.bounds.verdict, Verdict::ViolatesElastic);
        assert!(!fail.l2_nonnegative);
        assert!(fail.consistent());
        // the losing product state has perpendicular covectors when the
        // trace coupling dominates
        let w = &fail.bounds.elastic;
        let dot: f64 = w
            .witness_alpha
            .iter()
            .zip(&w.witness_beta)
            .map(|(a, b)| a * b)
            .sum();
        assert!(dot.abs() < 1e-4, "witness dot {dot}");

        let edge = chpt_bounds(ChptParams { l1: -1.0, l2: 2.0 }, &cfg).unwrap();
        assert!(edge.analytic_pass);
        assert_eq!(edge.bounds.verdict, Verdict::PassesAllSampled);
    }
}
