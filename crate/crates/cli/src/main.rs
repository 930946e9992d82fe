//! Command-line surface for the positivity-cone library.
//!
//! Exit codes for `check`: 0 all sampled bounds pass, 2 elastic violation,
//! 3 inelastic violation, 1 input or usage error.

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use poscone::bounds::{
    elastic_margin_poly, membership, BoundReport, GridConfig, MembershipConfig, RegionConfig,
    Verdict, DEFAULT_SEED,
};
use poscone::chpt::{chpt_bounds, chpt_tensor, ChptParams};
use poscone::coeffs::{coeffs_from_json, from_coeffs, FIG1_REF_COEFFS};
use poscone::rays::{rank_signature, ray_type3_identity, ExtremalRay, RayKind, RaySampler};
use poscone::spectra::{is_extremal, kernel_basis, PSD_TOL, RANK_REL_TOL};
use poscone::symmetry::{o3_tensor, sector_membership, Sector};
use poscone::tensor::{dim_w, CrossingTensor, FlavorDim};

#[derive(Parser)]
#[command(
    name = "poscone",
    about = "Positivity-cone toolkit: flavored forward-limit bound checks, extremal rays, region scans",
    version
)]
struct Cli {
    /// Seed for every sampler in the invocation.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Relative violation tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Third-kind ray sampling budget.
    #[arg(long, global = true, default_value_t = 20_000)]
    budget: usize,
    /// Restrict checks to an invariant sector: o3, z2cubed, so2 or none.
    #[arg(long, global = true, default_value = "none")]
    symmetry: String,
    /// Write the main output to this path instead of stdout.
    #[arg(long, global = true)]
    out: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the dimension of the constrained tensor space per flavor count.
    Dims {
        /// Single flavor count; omit for the whole 1..=8 table.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Check a coefficient tensor against elastic and inelastic bounds.
    Check {
        /// Coefficient JSON path, or a built-in fixture name
        /// (`fig1-ref`, `fig1-ref-boundary`).
        #[arg(long)]
        input: String,
    },
    /// Build one extremal ray and verify it.
    Ray(RayArgs),
    /// Sample extremal rays and verify each one.
    Sample {
        /// Family: type1, type2, type3 or mixed.
        #[arg(long, default_value = "type3")]
        kind: String,
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Two-parameter region scan, CSV output.
    Region {
        /// Scan center: coefficient JSON path or built-in fixture name.
        #[arg(long, default_value = "fig1-ref")]
        center: String,
        #[arg(long, default_value_t = 0.4)]
        window: f64,
        #[arg(long, default_value_t = 200)]
        resolution: usize,
    },
    /// Pion-coupling report or coupling-plane scan.
    Chpt {
        #[arg(long, allow_hyphen_values = true)]
        l1: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        l2: Option<f64>,
        /// Scan the coupling plane instead of checking a single point.
        #[arg(long, default_value_t = false)]
        scan: bool,
        #[arg(long, default_value_t = 2.0)]
        window: f64,
        #[arg(long, default_value_t = 81)]
        resolution: usize,
    },
}

#[derive(Args)]
#[command(disable_help_flag = true)]
struct RayArgs {
    #[arg(long, action = ArgAction::Help, help = "Print help")]
    help: Option<bool>,
    /// First kind: fourth power of --alpha.
    #[arg(long, default_value_t = false)]
    type1: bool,
    /// Second kind: product square of --alpha and --beta.
    #[arg(long, default_value_t = false)]
    type2: bool,
    /// Third kind: parameters -d, -g, -h and an optional --frame.
    #[arg(long, default_value_t = false)]
    type3: bool,
    /// Covector, comma-separated (e.g. 1,0,0).
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    #[arg(short = 'd', long = "d", allow_hyphen_values = true)]
    d: Option<f64>,
    #[arg(short = 'g', long = "g", allow_hyphen_values = true)]
    g: Option<f64>,
    #[arg(short = 'h', long = "h", allow_hyphen_values = true)]
    h: Option<f64>,
    /// Dual frame rows, semicolon-separated (e.g. "1,0,0;0,1,0;0,0,1").
    #[arg(long, allow_hyphen_values = true)]
    frame: Option<String>,
}

fn emit(out: &Option<String>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| format!("cannot write {path}: {e}"))?;
            Ok(())
        }
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| format!("cannot write to stdout: {e}"))?;
            Ok(())
        }
    }
}

/// The caption reference fixture restored to the elastic cone boundary by
/// a shift along the dual-trace direction (which moves every elastic and
/// inelastic margin uniformly). Repairs the three-decimal rounding of the
/// published values.
fn boundary_restored_reference() -> Result<CrossingTensor, String> {
    let n3 = FlavorDim::new(3).expect("3 flavors");
    let m = from_coeffs(n3, &FIG1_REF_COEFFS).map_err(|e| e.to_string())?;
    let e = elastic_margin_poly(&m, &GridConfig::default()).map_err(|e| e.to_string())?;
    Ok(m.add(&o3_tensor(0.0, 1.0).scale(-e.margin)))
}

fn load_coeffs(input: &str) -> Result<CrossingTensor, String> {
    match input {
        "fig1-ref" => {
            let n3 = FlavorDim::new(3).expect("3 flavors");
            from_coeffs(n3, &FIG1_REF_COEFFS).map_err(|e| e.to_string())
        }
        "fig1-ref-boundary" => boundary_restored_reference(),
        path => {
            let text = fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))?;
            coeffs_from_json(&text).map_err(|e| e.to_string())
        }
    }
}

fn parse_covector(s: &str) -> Result<Vec<f64>, String> {
    let v: Result<Vec<f64>, _> = s.split(',').map(|x| x.trim().parse::<f64>()).collect();
    let v = v.map_err(|e| format!("bad covector {s:?}: {e}"))?;
    if v.len() != 3 {
        return Err(format!("covector must have 3 entries, got {}", v.len()));
    }
    Ok(v)
}

fn parse_frame(s: &str) -> Result<nalgebra::Matrix3<f64>, String> {
    let rows: Vec<Vec<f64>> = s
        .split(';')
        .map(parse_covector)
        .collect::<Result<_, _>>()?;
    if rows.len() != 3 {
        return Err(format!("frame must have 3 rows, got {}", rows.len()));
    }
    Ok(nalgebra::Matrix3::from_fn(|i, j| rows[i][j]))
}

fn membership_config(cli: &Cli) -> MembershipConfig {
    let mut cfg = MembershipConfig::with_seed(cli.seed);
    cfg.grid.tol_rel = cli.tol;
    cfg.direct.tol_rel = cli.tol;
    cfg.sampler.tol_rel = cli.tol;
    cfg.sampler.budget = cli.budget;
    cfg
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::PassesAllSampled => 0,
        Verdict::ViolatesElastic => 2,
        Verdict::ViolatesInelastic => 3,
    }
}

fn report_json(report: &BoundReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

fn cmd_check(cli: &Cli, input: &str) -> Result<u8, String> {
    let m = load_coeffs(input)?;
    let cfg = membership_config(cli);
    let report = if cli.symmetry == "none" {
        membership(&m, &cfg).map_err(|e| e.to_string())?
    } else {
        let sector: Sector = cli.symmetry.parse().map_err(|e: poscone::Error| e.to_string())?;
        sector_membership(&m, sector, &cfg).map_err(|e| e.to_string())?
    };
    emit(&cli.out, &(report_json(&report) + "\n"))?;
    if cli.out.is_some() {
        println!("verdict: {:?}", report.verdict);
    }
    Ok(verdict_code(report.verdict))
}

fn verify_and_print(ray: &ExtremalRay) -> Result<(), String> {
    let s = ray.build().map_err(|e| e.to_string())?;
    let (rk_gram, rk_sym, rk_alt) = rank_signature(&s);
    let kern = kernel_basis(&s.gram(), RANK_REL_TOL).map_err(|e| e.to_string())?;
    let extremal = is_extremal(&s, PSD_TOL).map_err(|e| e.to_string())?;
    println!(
        "{}",
        serde_json::to_string(ray).expect("ray serializes")
    );
    println!(
        "ranks: gram={rk_gram} sym={rk_sym} alt={rk_alt}; gram kernel dim={}; extremal={extremal}",
        kern.dim
    );
    Ok(())
}

fn cmd_ray(args: &RayArgs) -> Result<u8, String> {
    let ray = if args.type1 {
        let alpha = parse_covector(args.alpha.as_deref().ok_or("--type1 needs --alpha")?)?;
        ExtremalRay::Type1 { alpha }
    } else if args.type2 {
        let alpha = parse_covector(args.alpha.as_deref().ok_or("--type2 needs --alpha")?)?;
        let beta = parse_covector(args.beta.as_deref().ok_or("--type2 needs --beta")?)?;
        ExtremalRay::Type2 { alpha, beta }
    } else if args.type3 {
        let d = args.d.ok_or("--type3 needs -d")?;
        let g = args.g.ok_or("--type3 needs -g")?;
        let h = args.h.ok_or("--type3 needs -h")?;
        // validate the parameter inequality before touching the frame
        ray_type3_identity(d, g, h).map_err(|e| e.to_string())?;
        let frame = match &args.frame {
            Some(f) => parse_frame(f)?,
            None => nalgebra::Matrix3::identity(),
        };
        ExtremalRay::Type3 { frame, d, g, h }
    } else {
        return Err("choose one of --type1, --type2, --type3".into());
    };
    verify_and_print(&ray)?;
    Ok(0)
}

fn cmd_sample(cli: &Cli, kind: &str, count: usize) -> Result<u8, String> {
    let kind: RayKind = kind.parse().map_err(|e: poscone::Error| e.to_string())?;
    let mut sampler = RaySampler::new(cli.seed);
    let mut all_ok = true;
    let mut lines = String::new();
    for _ in 0..count {
        let ray = sampler.sample(kind);
        let s = ray.build().map_err(|e| e.to_string())?;
        let ok = poscone::rays::verify_ray(&s).map_err(|e| e.to_string())?;
        all_ok &= ok;
        lines.push_str(&serde_json::to_string(&ray).expect("ray serializes"));
        lines.push('\n');
    }
    emit(&cli.out, &lines)?;
    println!("sampled {count} rays; all extremal: {all_ok}");
    if all_ok {
        Ok(0)
    } else {
        Ok(1)
    }
}

fn unit_coeff_direction(index: usize) -> CrossingTensor {
    let mut c = vec![0.0; dim_w(3)];
    c[index] = 1.0;
    from_coeffs(FlavorDim::new(3).expect("3 flavors"), &c).expect("unit direction")
}

fn cmd_region(cli: &Cli, center: &str, window: f64, resolution: usize) -> Result<u8, String> {
    let m0 = load_coeffs(center)?;
    let dir1 = unit_coeff_direction(0);
    let dir2 = unit_coeff_direction(1);
    let cfg = RegionConfig {
        window,
        resolution,
        seed: cli.seed,
        ray_budget: cli.budget,
        tol_rel: cli.tol,
        ..RegionConfig::default()
    };
    let scan =
        poscone::bounds::region_scan(&m0, &dir1, &dir2, &cfg).map_err(|e| e.to_string())?;
    let counts = scan.counts();
    emit(&cli.out, &scan.to_csv())?;
    println!(
        "cells: elastic_fail={} elastic_only={} full_pass={} boundary={}",
        counts[0], counts[1], counts[2], counts[3]
    );
    Ok(0)
}

fn cmd_chpt(
    cli: &Cli,
    l1: Option<f64>,
    l2: Option<f64>,
    scan: bool,
    window: f64,
    resolution: usize,
) -> Result<u8, String> {
    if scan {
        let zero = chpt_tensor(ChptParams { l1: 0.0, l2: 0.0 });
        let dir1 = chpt_tensor(ChptParams { l1: 1.0, l2: 0.0 });
        let dir2 = chpt_tensor(ChptParams { l1: 0.0, l2: 1.0 });
        let cfg = RegionConfig {
            window,
            resolution,
            seed: cli.seed,
            ray_budget: cli.budget,
            tol_rel: cli.tol,
            ..RegionConfig::default()
        };
        let scan =
            poscone::bounds::region_scan(&zero, &dir1, &dir2, &cfg).map_err(|e| e.to_string())?;
        let counts = scan.counts();
        emit(&cli.out, &scan.to_csv())?;
        println!(
            "cells: elastic_fail={} elastic_only={} full_pass={} boundary={}",
            counts[0], counts[1], counts[2], counts[3]
        );
        return Ok(0);
    }
    let p = ChptParams {
        l1: l1.ok_or("chpt needs --l1 and --l2 (or --scan)")?,
        l2: l2.ok_or("chpt needs --l1 and --l2 (or --scan)")?,
    };
    let mut cfg = membership_config(cli);
    cfg.sampler.budget = cli.budget;
    let report = chpt_bounds(p, &cfg).map_err(|e| e.to_string())?;
    emit(
        &cli.out,
        &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"),
    )?;
    println!(
        "l2 >= 0: {}; l1 + l2 >= 0: {}; verdict: {:?}; elastic margin {:.11e}; inelastic margin {:.11e}",
        report.l2_nonnegative,
        report.sum_nonnegative,
        report.bounds.verdict,
        report.bounds.elastic.margin,
        report.bounds.inelastic.margin
    );
    Ok(verdict_code(report.bounds.verdict))
}

fn run(cli: &Cli) -> Result<u8, String> {
    match &cli.command {
        Command::Dims { n } => {
            match n {
                Some(n) => {
                    if !(1..=8).contains(n) {
                        return Err(format!("flavor count {n} out of range (1..=8)"));
                    }
                    println!("{}", dim_w(*n));
                }
                None => {
                    for n in 1..=8 {
                        println!("n={n}: dim={}", dim_w(n));
                    }
                }
            }
            Ok(0)
        }
        Command::Check { input } => cmd_check(cli, input),
        Command::Ray(args) => cmd_ray(args),
        Command::Sample { kind, count } => cmd_sample(cli, kind, *count),
        Command::Region {
            center,
            window,
            resolution,
        } => cmd_region(cli, center, *window, *resolution),
        Command::Chpt {
            l1,
            l2,
            scan,
            window,
            resolution,
        } => cmd_chpt(cli, *l1, *l2, *scan, *window, *resolution),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
