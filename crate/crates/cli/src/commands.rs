//! One function per subcommand. Each returns the process exit status on completion.

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use defect_forge::bulk::critical_points_with;
use defect_forge::closure::invert_full;
use defect_forge::identity::{run_algebraic, run_integral, IdentityLedger};
use defect_forge::profile::{
    check_invariants, energy_parts, ode_residual, residual_norm, solve_infinite,
    solve_unchecked, Grading, RadialGrid, RadialProfile, SolveReport, TruncationStep,
};
use defect_forge::sphere::moments as sphere_moments;
use defect_forge::stability::{full_verdict, Verdict};
use defect_forge::{BinghamCoeffs, OrderParams};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Domain, RunConfig};
use crate::profile_io::{read_meta, read_profile, sibling_meta, write_profile};
use crate::{Common, UsageError};

/// Provenance carried by every artifact.
#[derive(Serialize)]
struct Stamp<'a, T: Serialize> {
    command: &'a str,
    config_hash: String,
    seed: u64,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

fn write_json<T: Serialize>(path: &Path, cmd: &str, cfg: &RunConfig, body: T) -> anyhow::Result<()> {
    let stamp = Stamp {
        command: cmd,
        config_hash: cfg.hash(),
        seed: cfg.seed,
        config: cfg,
        body,
    };
    let mut text = serde_json::to_string_pretty(&stamp)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn short(hash: &str) -> &str {
    &hash[..12]
}

fn apply_seed(cfg: &mut RunConfig, c: &Common) {
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
}

#[derive(Args)]
pub struct MomentsArgs {
    #[arg(long, allow_hyphen_values = true)]
    f: f64,
    #[arg(long, allow_hyphen_values = true)]
    g: f64,
    /// Gauss-Legendre points per dimension.
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn moments(mut cfg: RunConfig, a: MomentsArgs) -> anyhow::Result<u8> {
    if let Some(o) = a.order {
        cfg.quadrature_order = o;
    }
    let m = sphere_moments(BinghamCoeffs::new(a.f, a.g), &cfg.quadrature())?;
    println!("{}", serde_json::to_string(&m)?);
    if let Some(p) = a.out {
        #[derive(Serialize)]
        struct Body {
            f: f64,
            g: f64,
            moments: defect_forge::MomentSet,
        }
        write_json(&p, "moments", &cfg, Body { f: a.f, g: a.g, moments: m })?;
    }
    Ok(0)
}

#[derive(Args)]
pub struct ClosureArgs {
    #[arg(long, allow_hyphen_values = true)]
    u: f64,
    #[arg(long, allow_hyphen_values = true)]
    v: f64,
    /// Newton tolerance on max(|u - u*|, |v - v*|).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ClosureResult {
    u: f64,
    v: f64,
    f: f64,
    g: f64,
    residual: f64,
    iters: usize,
}

pub fn closure(mut cfg: RunConfig, a: ClosureArgs) -> anyhow::Result<u8> {
    if let Some(t) = a.tol {
        cfg.tolerances.closure = t;
    }
    let inv = invert_full(OrderParams::new(a.u, a.v), &cfg.closure())?;
    let res = ClosureResult {
        u: a.u,
        v: a.v,
        f: inv.coeffs.f,
        g: inv.coeffs.g,
        residual: inv.residual,
        iters: inv.iterations,
    };
    println!("{}", serde_json::to_string(&res)?);
    if let Some(p) = a.out {
        write_json(&p, "closure", &cfg, res)?;
    }
    Ok(0)
}

#[derive(Args)]
pub struct TableArgs {
    /// Grid points per axis over the bounding box of the physical region.
    #[arg(long, default_value_t = 41)]
    steps: usize,
    /// Eigenvalue margin from the physical bounds.
    #[arg(long, default_value_t = 0.02)]
    margin: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn closure_table(cfg: RunConfig, a: TableArgs) -> anyhow::Result<u8> {
    if a.steps < 2 {
        return Err(UsageError("--steps must be at least 2".into()).into());
    }
    let out = a.out.or(cfg.output.table.clone()).unwrap_or_else(|| "closure_table.csv".into());
    let lin = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (a.steps - 1) as f64;
    let pts: Vec<OrderParams> = (0..a.steps)
        .flat_map(|i| (0..a.steps).map(move |j| (i, j)))
        .map(|(i, j)| OrderParams::new(lin(-0.5, 0.5, i), lin(-1.0 / 6.0, 1.0 / 3.0, j)))
        .filter(|t| t.is_physical(a.margin))
        .collect();
    let opts = cfg.closure();
    let rows: Vec<_> = pts.par_iter().map(|&t| (t, invert_full(t, &opts))).collect();
    let mut w = csv::Writer::from_path(&out).with_context(|| format!("creating {}", out.display()))?;
    w.write_record(["u", "v", "f", "g", "residual", "iterations"])?;
    let mut failed = 0;
    for (t, r) in &rows {
        match r {
            Ok(inv) => w.serialize((t.u, t.v, inv.coeffs.f, inv.coeffs.g, inv.residual, inv.iterations))?,
            Err(_) => failed += 1,
        }
    }
    w.flush()?;
    println!(
        "closure-table: {} states, {} failed -> {}",
        rows.len(),
        failed,
        out.display()
    );
    Ok(if failed == 0 { 0 } else { 2 })
}

#[derive(Args)]
pub struct AlphaArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn critical_points(mut cfg: RunConfig, a: AlphaArgs) -> anyhow::Result<u8> {
    if a.alpha.is_some() {
        cfg.alpha = a.alpha;
    }
    let cp = critical_points_with(cfg.alpha()?, cfg.quadrature_order.min(64).max(8))?;
    println!("{}", serde_json::to_string(&cp)?);
    if let Some(p) = a.out {
        write_json(&p, "critical-points", &cfg, &cp)?;
    }
    Ok(0)
}

#[derive(Args)]
pub struct ScanArgs {
    #[arg(long)]
    alpha_min: f64,
    #[arg(long)]
    alpha_max: f64,
    #[arg(long, default_value_t = 51)]
    steps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn phase_scan(cfg: RunConfig, a: ScanArgs) -> anyhow::Result<u8> {
    if a.steps < 2 || !(a.alpha_max > a.alpha_min) {
        return Err(UsageError("need --alpha-max > --alpha-min and --steps >= 2".into()).into());
    }
    let out = a.out.or(cfg.output.scan.clone()).unwrap_or_else(|| "phase_scan.csv".into());
    let order = cfg.quadrature_order.min(64).max(8);
    let alphas: Vec<f64> = (0..a.steps)
        .map(|i| a.alpha_min + (a.alpha_max - a.alpha_min) * i as f64 / (a.steps - 1) as f64)
        .collect();
    let sets = alphas
        .par_iter()
        .map(|&al| critical_points_with(al, order))
        .collect::<Result<Vec<_>, _>>()?;
    let mut w = csv::Writer::from_path(&out).with_context(|| format!("creating {}", out.display()))?;
    w.write_record(["alpha", "root_count", "eta_roots", "s2_values", "classification"])?;
    let join = |xs: &[f64]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
    for cp in &sets {
        let cls: Vec<String> = cp
            .classification
            .iter()
            .map(|c| serde_json::to_value(c).map(|v| v.as_str().unwrap_or("").to_string()))
            .collect::<Result<_, _>>()?;
        w.write_record([
            cp.alpha.to_string(),
            cp.eta_roots.len().to_string(),
            join(&cp.eta_roots),
            join(&cp.s2_values),
            cls.join(";"),
        ])?;
    }
    w.flush()?;
    println!("phase-scan: {} values of alpha -> {}", sets.len(), out.display());
    Ok(0)
}

#[derive(Args)]
pub struct SolveArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    k: Option<i32>,
    /// Finite domain [0, R] with the bulk value imposed at R.
    #[arg(long, conflicts_with = "infinite")]
    radius: Option<f64>,
    /// Infinite domain, approximated by doubling truncation radii.
    #[arg(long)]
    infinite: bool,
    /// Smallest truncation radius accepted on the infinite domain.
    #[arg(long, requires = "infinite")]
    min_radius: Option<f64>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Profile CSV (default profile.csv).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON sidecar (default meta.json next to the CSV).
    #[arg(long)]
    meta: Option<PathBuf>,
}

#[derive(Serialize)]
struct SolveMeta<'a> {
    alpha: f64,
    k: i32,
    s2: f64,
    nodes: usize,
    radius: f64,
    grading: Grading,
    extent: defect_forge::profile::Extent,
    energy: f64,
    energy_parts: EnergyJson,
    residual_u: f64,
    residual_v: f64,
    invariants: &'a defect_forge::profile::InvariantReport,
    invariants_pass: bool,
    solve: &'a SolveReport,
    truncation: &'a [TruncationStep],
    profile_csv: String,
}

#[derive(Serialize)]
struct EnergyJson {
    gradient: f64,
    centrifugal: f64,
    bulk: f64,
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn solve_profile(mut cfg: RunConfig, a: SolveArgs) -> anyhow::Result<u8> {
    if a.alpha.is_some() {
        cfg.alpha = a.alpha;
    }
    if a.k.is_some() {
        cfg.k = a.k;
    }
    if let Some(r) = a.radius {
        cfg.domain = Domain::Finite { radius: r };
    }
    if a.infinite && !matches!(cfg.domain, Domain::Infinite { .. }) {
        cfg.domain = Domain::infinite_default();
    }
    if let (Some(m), Domain::Infinite { min_radius, .. }) = (a.min_radius, &mut cfg.domain) {
        *min_radius = m;
    }
    if let Some(n) = a.nodes {
        cfg.grid.nodes = n;
    }
    if let Some(t) = a.tol {
        cfg.tolerances.solve = t;
    }
    if let Some(m) = a.max_iter {
        cfg.tolerances.max_iter = m;
    }
    let alpha = cfg.profile_alpha()?;
    let k = cfg.k()?;
    let out = a.out.or(cfg.output.profile.clone()).unwrap_or_else(|| "profile.csv".into());
    let meta = a.meta.or(cfg.output.meta.clone()).unwrap_or_else(|| sibling_meta(&out));
    let opts = cfg.solve_options();

    let (p, rep, steps) = match (&cfg.domain, cfg.truncation()) {
        (Domain::Finite { radius }, _) => {
            let grid = RadialGrid::geometric_near_zero(cfg.grid.nodes, *radius, cfg.grid.ratio)?;
            let (p, rep) = solve_unchecked(alpha, k, grid, &opts)?;
            (p, rep, Vec::new())
        }
        (Domain::Infinite { .. }, Some(pol)) => solve_infinite(alpha, k, &pol, &opts)?,
        _ => unreachable!(),
    };
    let inv = check_invariants(&p);
    let (ru, rv) = ode_residual(&p);
    let parts = energy_parts(&p);
    write_profile(&out, &p)?;
    let body = SolveMeta {
        alpha,
        k,
        s2: p.s2,
        nodes: p.len(),
        radius: p.grid.radius(),
        grading: p.grid.grading,
        extent: p.grid.extent,
        energy: parts.total(),
        energy_parts: EnergyJson {
            gradient: parts.gradient,
            centrifugal: parts.centrifugal,
            bulk: parts.bulk,
        },
        residual_u: residual_norm(&ru, p.r()),
        residual_v: residual_norm(&rv, p.r()),
        invariants: &inv,
        invariants_pass: inv.all_pass(),
        solve: &rep,
        truncation: &steps,
        profile_csv: file_name(&out),
    };
    let (res_u, res_v) = (body.residual_u, body.residual_v);
    write_json(&meta, "solve-profile", &cfg, body)?;
    let status = if !rep.converged {
        "not converged"
    } else if inv.all_pass() {
        "invariants pass"
    } else {
        "invariant failure"
    };
    println!(
        "solve-profile: alpha={alpha} k={k} N={} R={} E={:.12} iters={} residual={:.2e} {status} config={} -> {}",
        p.len(),
        p.grid.radius(),
        parts.total(),
        rep.iterations,
        res_u.max(res_v),
        short(&cfg.hash()),
        out.display()
    );
    Ok(if rep.converged && inv.all_pass() { 0 } else { 2 })
}

#[derive(Args)]
pub struct StabilityArgs {
    /// Profile CSV written by solve-profile.
    #[arg(long)]
    profile: PathBuf,
    /// Sidecar with alpha, k and grid data (default meta.json next to the profile).
    #[arg(long)]
    meta: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    k: Option<i32>,
    #[arg(long)]
    n_max: Option<u32>,
    #[arg(long)]
    m_max: Option<u32>,
    /// Node budget of the dense cross-check (0 skips it).
    #[arg(long)]
    cross_check_nodes: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Loads a profile with alpha and k from flags, else config, else the sidecar.
fn load_profile(
    cfg: &mut RunConfig,
    profile: &Path,
    meta: Option<PathBuf>,
    alpha: Option<f64>,
    k: Option<i32>,
) -> anyhow::Result<RadialProfile> {
    let meta_path = meta.unwrap_or_else(|| sibling_meta(profile));
    let side = if meta_path.exists() { Some(read_meta(&meta_path)?) } else { None };
    cfg.alpha = alpha.or(cfg.alpha).or(side.as_ref().map(|m| m.alpha));
    cfg.k = k.or(cfg.k).or(side.as_ref().map(|m| m.k));
    let alpha = cfg.profile_alpha()?;
    let k = cfg.k()?;
    let grading = side.as_ref().map(|m| m.grading).unwrap_or(Grading::GeometricNearZero);
    read_profile(profile, alpha, k, grading, side.map(|m| m.extent), &cfg.closure())
}

pub fn stability(mut cfg: RunConfig, a: StabilityArgs) -> anyhow::Result<u8> {
    if let Some(n) = a.n_max {
        cfg.stability.n_max = n;
    }
    if let Some(m) = a.m_max {
        cfg.stability.m_max = m;
    }
    if let Some(c) = a.cross_check_nodes {
        cfg.stability.cross_check_nodes = (c > 0).then_some(c);
    }
    let p = load_profile(&mut cfg, &a.profile, a.meta, a.alpha, a.k)?;
    let out = a.out.or(cfg.output.report.clone()).unwrap_or_else(|| "report.json".into());
    let report = full_verdict(&p, &cfg.verdict_options())?;
    write_json(&out, "stability", &cfg, &report)?;
    let worst = report
        .blocks
        .iter()
        .min_by(|x, y| x.eigenvalues[0].total_cmp(&y.eigenvalues[0]))
        .map(|b| format!("{} {:.6e}", b.name, b.eigenvalues[0]))
        .unwrap_or_default();
    let verdict = match report.verdict {
        Verdict::Stable => "stable",
        Verdict::Unstable => "unstable",
        Verdict::Inconclusive => "inconclusive",
    };
    println!(
        "stability: alpha={} k={} N={} verdict={verdict} lowest={worst} config={} -> {}",
        p.alpha,
        p.k,
        p.len(),
        short(&cfg.hash()),
        out.display()
    );
    Ok(if report.verdict == Verdict::Inconclusive { 2 } else { 0 })
}

#[derive(Args)]
pub struct IdentityArgs {
    /// Solved profile CSV; adds the integral identities to the ledger.
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long)]
    meta: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
    /// Coefficient and state samples for the algebraic checks.
    #[arg(long)]
    samples: Option<usize>,
    /// Random test functions per integral identity.
    #[arg(long)]
    n_eta: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Ledgers {
    all_pass: bool,
    algebraic: IdentityLedger,
    integral: Option<IdentityLedger>,
}

pub fn verify_identities(mut cfg: RunConfig, a: IdentityArgs) -> anyhow::Result<u8> {
    apply_seed(&mut cfg, &a.common);
    if let Some(s) = a.samples {
        cfg.identities.samples = s;
    }
    if let Some(n) = a.n_eta {
        cfg.identities.n_eta = n;
    }
    let profile = match &a.profile {
        Some(path) => Some(load_profile(&mut cfg, path, a.meta.clone(), None, None)?),
        None => None,
    };
    let out = a.out.or(cfg.output.ledger.clone()).unwrap_or_else(|| "ledger.json".into());
    let algebraic = run_algebraic(cfg.seed, cfg.identities.samples);
    let integral = profile.as_ref().map(|p| run_integral(p, cfg.seed, cfg.identities.n_eta));
    let all_pass = algebraic.all_pass() && integral.as_ref().map_or(true, |l| l.all_pass());
    let failed: Vec<String> = algebraic
        .entries
        .iter()
        .chain(integral.iter().flat_map(|l| &l.entries))
        .filter(|e| !e.pass)
        .map(|e| e.identity_id.clone())
        .collect();
    let total = algebraic.entries.len() + integral.as_ref().map_or(0, |l| l.entries.len());
    write_json(
        &out,
        "verify-identities",
        &cfg,
        Ledgers {
            all_pass,
            algebraic,
            integral,
        },
    )?;
    println!(
        "verify-identities: {}/{} pass{} seed={} config={} -> {}",
        total - failed.len(),
        total,
        if failed.is_empty() { String::new() } else { format!(" (failed: {})", failed.join(", ")) },
        cfg.seed,
        short(&cfg.hash()),
        out.display()
    );
    Ok(if all_pass { 0 } else { 2 })
}
