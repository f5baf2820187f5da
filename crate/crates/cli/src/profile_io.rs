//! Profile CSV (r,u,v,f,g,res_u,res_v) and its JSON sidecar.

use std::path::{Path, PathBuf};

use anyhow::Context;
use defect_forge::bulk::bulk_state;
use defect_forge::closure::ClosureOptions;
use defect_forge::profile::{ode_residual, Extent, Grading, RadialGrid, RadialProfile};
use serde::{Deserialize, Serialize};

use crate::UsageError;

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    r: f64,
    u: f64,
    v: f64,
    f: f64,
    g: f64,
    res_u: f64,
    res_v: f64,
}

pub fn write_profile(path: &Path, p: &RadialProfile) -> anyhow::Result<()> {
    let (ru, rv) = ode_residual(p);
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for i in 0..p.len() {
        w.serialize(Row {
            r: p.r()[i],
            u: p.u[i],
            v: p.v[i],
            f: p.f[i],
            g: p.g[i],
            res_u: ru[i],
            res_v: rv[i],
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Fields of the sidecar needed to rebuild a profile.
#[derive(Debug, Deserialize)]
pub struct ProfileMeta {
    pub alpha: f64,
    pub k: i32,
    pub grading: Grading,
    pub extent: Extent,
}

/// Default sidecar location: `meta.json` next to the profile.
pub fn sibling_meta(profile: &Path) -> PathBuf {
    profile.with_file_name("meta.json")
}

pub fn read_meta(path: &Path) -> anyhow::Result<ProfileMeta> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text)
        .map_err(|e| UsageError(format!("sidecar {} lacks profile metadata: {e}", path.display())).into())
}

/// Rebuilds a profile from its CSV, recomputing the closure data warm-started at the
/// stored (f, g).
pub fn read_profile(
    path: &Path,
    alpha: f64,
    k: i32,
    grading: Grading,
    extent: Option<Extent>,
    opts: &ClosureOptions,
) -> anyhow::Result<RadialProfile> {
    let mut rd = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let rows: Vec<Row> = rd
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| UsageError(format!("malformed profile {}: {e}", path.display())))?;
    if rows.is_empty() {
        return Err(UsageError(format!("profile {} has no rows", path.display())).into());
    }
    let r: Vec<f64> = rows.iter().map(|x| x.r).collect();
    let extent = extent.unwrap_or(Extent::Finite(r[r.len() - 1]));
    let grid = RadialGrid::from_nodes(r, grading, extent)?;
    let (s2, _) = bulk_state(alpha)?;
    let f: Vec<f64> = rows.iter().map(|x| x.f).collect();
    let g: Vec<f64> = rows.iter().map(|x| x.g).collect();
    let p = RadialProfile::from_fields(
        grid,
        rows.iter().map(|x| x.u).collect(),
        rows.iter().map(|x| x.v).collect(),
        Some((&f, &g)),
        alpha,
        k,
        s2,
        opts,
    )?;
    Ok(p)
}
