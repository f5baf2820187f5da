//! Block spectra and the overall stability verdict.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::RadialProfile;

use super::eigen::{dense_eigenvalues, smallest};
use super::forms::{assemble_block, ib_first_mode, BlockLabel, QuadraticFormBlock};
use super::search::{instability_search, NegativeDirection, SearchOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictOptions {
    pub n_max: u32,
    pub m_max: u32,
    /// Eigenvalues reported per block.
    pub eigen_count: usize,
    /// Node budget of the dense cross-check (None skips it).
    pub cross_check_nodes: Option<usize>,
    /// Radii at which eigenvectors are sampled.
    pub samples: usize,
    pub search: SearchOptions,
}

impl Default for VerdictOptions {
    fn default() -> Self {
        Self {
            n_max: 6,
            m_max: 6,
            eigen_count: 3,
            cross_check_nodes: Some(400),
            samples: 16,
            search: SearchOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub nodes: usize,
    pub iterative: f64,
    pub dense: f64,
    pub abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSpectrum {
    pub label: BlockLabel,
    pub name: String,
    pub components: Vec<String>,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub eps_spec: f64,
    pub nonnegative: bool,
    pub symmetry_defect: f64,
    pub mass_min: f64,
    /// Lowest eigenvector at a few radii, per component, scaled to unit max-norm.
    pub sample_r: Vec<f64>,
    pub sample_vector: Vec<Vec<f64>>,
    pub cross_check: Option<CrossCheck>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Unstable,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub family: String,
    pub index: u32,
    pub smallest: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub alpha: f64,
    pub k: i32,
    pub nodes: usize,
    pub radius: f64,
    pub blocks: Vec<BlockSpectrum>,
    pub growth: Vec<GrowthRow>,
    /// Smallest eigenvalue nondecreasing in n (I_A_n) and in m (I_B modes).
    pub growth_monotone_n: bool,
    pub growth_monotone_m: bool,
    pub verdict: Verdict,
    pub negative_direction: Option<NegativeDirection>,
    pub negative_block: Option<String>,
    pub search_error: Option<String>,
}

fn sample(block: &QuadraticFormBlock, vec: &[f64], count: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = block.r.len();
    let p = block.components();
    let count = count.min(n).max(1);
    // log-spaced in r
    let (lo, hi) = (block.r[0].ln(), block.r[n - 1].ln());
    let mut idx: Vec<usize> = (0..count)
        .map(|j| {
            let s = lo + (hi - lo) * j as f64 / (count.max(2) - 1) as f64;
            block.r.partition_point(|&r| r.ln() < s).min(n - 1)
        })
        .collect();
    idx.dedup();
    let vec = block.unpack(vec);
    let scale = vec.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1e-300);
    let r = idx.iter().map(|&i| block.r[i]).collect();
    let comps = (0..p)
        .map(|c| idx.iter().map(|&i| vec[i * p + c] / scale).collect())
        .collect();
    (r, comps)
}

/// Smallest eigenvalue of a block assembled on a coarsened copy of the profile, from both
/// the inertia-bisection solver and a dense symmetric eigensolve.
pub fn cross_check(p: &RadialProfile, label: BlockLabel, max_nodes: usize) -> CrossCheck {
    let probe = assemble_block(&p.restrict(&[0, 1, 2]), label);
    let comps = probe.components();
    let budget = max_nodes.min(1200 / comps).max(8);
    let stride = (p.len() - 1).div_ceil(budget - 1).max(1);
    let q = p.restrict(&p.grid.coarsen_indices(stride));
    let block = assemble_block(&q, label);
    let iterative = smallest(&block.stiffness, &block.mass, 1)[0].value;
    let dense = dense_eigenvalues(&block.stiffness, &block.mass)[0];
    CrossCheck {
        nodes: q.len(),
        iterative,
        dense,
        abs_diff: (iterative - dense).abs(),
    }
}

fn spectrum(p: &RadialProfile, label: BlockLabel, opts: &VerdictOptions) -> BlockSpectrum {
    let block = assemble_block(p, label);
    let pairs = smallest(&block.stiffness, &block.mass, opts.eigen_count);
    let eps = block.eps_spec();
    let (sample_r, sample_vector) = sample(&block, &pairs[0].vector, opts.samples);
    BlockSpectrum {
        label,
        name: label.to_string(),
        components: block.dof_map.clone(),
        eigenvalues: pairs.iter().map(|e| e.value).collect(),
        residuals: pairs.iter().map(|e| e.residual).collect(),
        eps_spec: eps,
        nonnegative: pairs[0].value >= -eps,
        symmetry_defect: block.stiffness.symmetry_defect(),
        mass_min: block.mass.iter().copied().fold(f64::INFINITY, f64::min),
        sample_r,
        sample_vector,
        cross_check: opts.cross_check_nodes.map(|n| cross_check(p, label, n)),
    }
}

/// Labels of every block examined for the profile.
pub fn block_labels(p: &RadialProfile, opts: &VerdictOptions) -> Vec<BlockLabel> {
    let mut labels = vec![BlockLabel::J1d, BlockLabel::IA001, BlockLabel::IA02];
    labels.extend((1..=opts.n_max).map(BlockLabel::IAn));
    let first = ib_first_mode(p);
    labels.extend((0..opts.m_max).map(|j| BlockLabel::IBMode(first + j)));
    labels.push(BlockLabel::IBTilde);
    labels.push(BlockLabel::IA1Tilde);
    labels
}

fn monotone(rows: &[&BlockSpectrum]) -> bool {
    rows.windows(2)
        .all(|w| w[1].eigenvalues[0] >= w[0].eigenvalues[0] - w[0].eps_spec.max(w[1].eps_spec))
}

pub fn full_verdict(p: &RadialProfile, opts: &VerdictOptions) -> Result<SpectralReport> {
    if p.moments.len() != p.len() || p.len() < 8 {
        return Err(Error::InvalidInput("profile lacks closure data or nodes".into()));
    }
    let labels = block_labels(p, opts);
    let blocks: Vec<BlockSpectrum> = labels.par_iter().map(|&l| spectrum(p, l, opts)).collect();

    let fam_n: Vec<&BlockSpectrum> =
        blocks.iter().filter(|b| matches!(b.label, BlockLabel::IAn(_))).collect();
    let fam_m: Vec<&BlockSpectrum> =
        blocks.iter().filter(|b| matches!(b.label, BlockLabel::IBMode(_))).collect();
    let growth = fam_n
        .iter()
        .chain(&fam_m)
        .map(|b| match b.label {
            BlockLabel::IAn(n) => GrowthRow {
                family: "I_A_n".into(),
                index: n,
                smallest: b.eigenvalues[0],
            },
            BlockLabel::IBMode(m) => GrowthRow {
                family: "I_B_mode".into(),
                index: m,
                smallest: b.eigenvalues[0],
            },
            _ => unreachable!(),
        })
        .collect();

    let negative_block = blocks
        .iter()
        .filter(|b| !b.nonnegative)
        .min_by(|a, b| a.eigenvalues[0].total_cmp(&b.eigenvalues[0]))
        .map(|b| b.name.clone());
    let (mut negative_direction, mut search_error) = (None, None);
    if p.k.unsigned_abs() > 1 {
        match instability_search(p, &opts.search) {
            Ok(d) => negative_direction = Some(d),
            Err(e) => search_error = Some(e.to_string()),
        }
    }
    let verdict = if negative_direction.is_some() || negative_block.is_some() {
        Verdict::Unstable
    } else if p.k.unsigned_abs() == 1 {
        Verdict::Stable
    } else {
        Verdict::Inconclusive
    };
    Ok(SpectralReport {
        alpha: p.alpha,
        k: p.k,
        nodes: p.len(),
        radius: p.r()[p.len() - 1],
        growth_monotone_n: monotone(&fam_n),
        growth_monotone_m: monotone(&fam_m),
        blocks,
        growth,
        verdict,
        negative_direction,
        negative_block,
        search_error,
    })
}
