use std::collections::HashMap;
use std::io::BufRead;
use std::ops::Range;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::labels::label_fragments;
use super::pairs::PairRow;
use super::CliffError;
use crate::encoder::Encoder;
use crate::molgraph::parse_smiles;
use crate::simil::McsOptions;

pub const DEFAULT_EPSILON: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionDtap {
    pub mdta: f64,
    pub msta: f64,
    pub rel_dtap_percent: f64,
    pub diff_tokens: usize,
    pub shared_tokens: usize,
}

impl RegionDtap {
    fn has_empty_class(&self) -> bool {
        self.diff_tokens == 0 || self.shared_tokens == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DtapReport {
    pub regions: Vec<RegionDtap>,
    /// All regions pooled and renormalized together.
    pub overall: RegionDtap,
    pub epsilon: f64,
}

fn region_stats(positions: impl Iterator<Item = usize> + Clone, w: &[f64], d: &[bool], eps: f64) -> RegionDtap {
    let total: f64 = positions.clone().map(|i| w[i]).sum();
    let (mut diff_sum, mut shared_sum, mut diff_n, mut shared_n) = (0.0, 0.0, 0usize, 0usize);
    for i in positions {
        let p = if total > 0.0 { w[i] / total } else { 0.0 };
        if d[i] {
            diff_sum += p;
            diff_n += 1;
        } else {
            shared_sum += p;
            shared_n += 1;
        }
    }
    // an empty class has mean 0
    let mdta = if diff_n > 0 { diff_sum / diff_n as f64 } else { 0.0 };
    let msta = if shared_n > 0 { shared_sum / shared_n as f64 } else { 0.0 };
    RegionDtap { mdta, msta, rel_dtap_percent: (mdta - msta) / (msta + eps) * 100.0, diff_tokens: diff_n, shared_tokens: shared_n }
}

/// Differential-token attention preference per region and overall.
///
/// `attention` and `diff_mask` are aligned with the full token sequence;
/// only positions inside `regions` take part, so framing tokens are
/// excluded by the region boundaries. Attention is renormalized within each
/// region (and within the union for the overall figure).
pub fn rel_dtap(
    attention: &[f64],
    diff_mask: &[bool],
    regions: &[Range<usize>],
    epsilon: f64,
) -> Result<DtapReport, CliffError> {
    if attention.len() != diff_mask.len() {
        return Err(CliffError::LengthMismatch { expected: diff_mask.len(), got: attention.len() });
    }
    if let Some(index) = attention.iter().position(|&w| !(w >= 0.0 && w.is_finite())) {
        return Err(CliffError::InvalidWeight { index });
    }
    for r in regions {
        if r.start > r.end || r.end > attention.len() {
            return Err(CliffError::RegionOutOfRange { start: r.start, end: r.end, len: attention.len() });
        }
    }
    let per_region = regions.iter().map(|r| region_stats(r.clone(), attention, diff_mask, epsilon)).collect();
    let overall = region_stats(regions.iter().flat_map(|r| r.clone()), attention, diff_mask, epsilon);
    Ok(DtapReport { regions: per_region, overall, epsilon })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttentionMode {
    /// One extra leading position for a fingerprint input, dropped before
    /// analysis.
    WithFp,
    WithoutFp,
}

/// One line of the attention file: the final-position attention row,
/// already averaged over heads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttentionRecord {
    pub molecule_id: String,
    pub mode: AttentionMode,
    pub weights: Vec<f64>,
}

pub fn attention_key(pair_id: usize, anchor: bool) -> String {
    format!("{pair_id}:{}", if anchor { "anchor" } else { "partner" })
}

pub fn read_attention_jsonl(input: impl BufRead) -> Result<Vec<AttentionRecord>, CliffError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| CliffError::Json { line: i + 1, source: serde_json::Error::io(e) })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| CliffError::Json { line: i + 1, source })?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub mdta: f64,
    pub msta: f64,
    pub rel_dtap_percent: f64,
    /// Molecules averaged into this entry.
    pub molecules: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DtapSummary {
    pub regions: Vec<RegionSummary>,
    pub overall: RegionSummary,
    pub epsilon: f64,
    pub molecule_count: usize,
    pub skipped: usize,
    pub skip_empty_class: bool,
}

fn mean_of<'a>(items: impl Iterator<Item = &'a RegionDtap>, skip_empty_class: bool) -> RegionSummary {
    let (mut mdta, mut msta, mut rel, mut n) = (0.0, 0.0, 0.0, 0usize);
    for r in items.filter(|r| !(skip_empty_class && r.has_empty_class())) {
        mdta += r.mdta;
        msta += r.msta;
        rel += r.rel_dtap_percent;
        n += 1;
    }
    let d = n.max(1) as f64;
    RegionSummary { mdta: mdta / d, msta: msta / d, rel_dtap_percent: rel / d, molecules: n }
}

/// Arithmetic mean over molecules, per region and overall. With
/// `skip_empty_class`, entries lacking differential or shared tokens are
/// left out of that entry's mean.
pub fn aggregate_dtap(reports: &[DtapReport], skip_empty_class: bool, epsilon: f64) -> DtapSummary {
    let regions = reports.iter().map(|r| r.regions.len()).max().unwrap_or(0);
    DtapSummary {
        regions: (0..regions)
            .map(|s| mean_of(reports.iter().filter_map(|r| r.regions.get(s)), skip_empty_class))
            .collect(),
        overall: mean_of(reports.iter().map(|r| &r.overall), skip_empty_class),
        epsilon,
        molecule_count: reports.len(),
        skipped: 0,
        skip_empty_class,
    }
}

#[derive(Clone, Debug)]
pub struct DtapOptions {
    pub epsilon: f64,
    pub skip_empty_class: bool,
    pub mcs: McsOptions,
}

impl Default for DtapOptions {
    fn default() -> Self {
        DtapOptions { epsilon: DEFAULT_EPSILON, skip_empty_class: false, mcs: McsOptions::default() }
    }
}

/// Labels every pair, matches attention rows by `"{pair_id}:anchor"` and
/// `"{pair_id}:partner"`, and averages Rel-DTAP over all molecules found.
/// Molecules without a row, or whose row length disagrees with the token
/// count, are skipped with a warning.
pub fn run_dtap(
    pairs: &[PairRow],
    encoder: &Encoder<'_>,
    attention: &[AttentionRecord],
    opts: &DtapOptions,
) -> Result<DtapSummary, CliffError> {
    let rows: HashMap<&str, &AttentionRecord> = attention.iter().map(|a| (a.molecule_id.as_str(), a)).collect();
    type Outcome = Vec<Option<DtapReport>>;
    let per_pair: Vec<Outcome> = pairs
        .par_iter()
        .map(|pair| {
            let (Ok(a), Ok(b)) = (parse_smiles(&pair.anchor_smiles), parse_smiles(&pair.partner_smiles)) else {
                warn!("pair {}: unreadable SMILES", pair.pair_id);
                return vec![None, None];
            };
            let (Ok(ea), Ok(eb)) = (encoder.explain(&a), encoder.explain(&b)) else {
                warn!("pair {}: encoding failed", pair.pair_id);
                return vec![None, None];
            };
            let (_, da, db) = label_fragments(&a, &b, &ea, &eb, &opts.mcs);
            [(true, &ea, da), (false, &eb, db)]
                .into_iter()
                .map(|(is_anchor, explain, mask)| {
                    let key = attention_key(pair.pair_id, is_anchor);
                    let Some(rec) = rows.get(key.as_str()) else {
                        warn!("{key}: no attention row");
                        return None;
                    };
                    let weights = match rec.mode {
                        AttentionMode::WithFp => rec.weights.get(1..).unwrap_or(&[]),
                        AttentionMode::WithoutFp => &rec.weights[..],
                    };
                    match rel_dtap(weights, &mask, &explain.region_boundaries, opts.epsilon) {
                        Ok(r) => Some(r),
                        Err(e) => {
                            warn!("{key}: {e}");
                            None
                        }
                    }
                })
                .collect()
        })
        .collect();
    let total = per_pair.iter().map(Vec::len).sum::<usize>();
    let reports: Vec<DtapReport> = per_pair.into_iter().flatten().flatten().collect();
    let mut summary = aggregate_dtap(&reports, opts.skip_empty_class, opts.epsilon);
    summary.skipped = total - reports.len();
    Ok(summary)
}
