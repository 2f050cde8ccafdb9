use std::cmp::Ordering;
use std::io::{Read, Write};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::labels::{fragment_labels, FragmentLabels};
use super::{ActivityRecord, CliffError, Split};
use crate::molgraph::{canonicalize, parse_smiles, MolGraph};
use crate::simil::{
    circular_fingerprint, generic_murcko_scaffold, levenshtein_similarity, tanimoto, FingerprintBits, McsOptions,
    DEFAULT_NBITS, DEFAULT_RADIUS,
};

#[derive(Clone, Debug, PartialEq)]
pub struct CliffConfig {
    pub tau_sim: f64,
    pub tau_fold: f64,
    pub split: Split,
    pub radius: u32,
    pub nbits: usize,
}

impl Default for CliffConfig {
    fn default() -> Self {
        CliffConfig { tau_sim: 0.9, tau_fold: 10.0, split: Split::Test, radius: DEFAULT_RADIUS, nbits: DEFAULT_NBITS }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CliffPair {
    pub pair_id: usize,
    /// Row indices into the activity table.
    pub anchor_index: usize,
    pub partner_index: usize,
    pub anchor: ActivityRecord,
    pub partner: ActivityRecord,
    pub fold_change: f64,
    /// Whole-molecule fingerprint Tanimoto.
    pub sim_full: f64,
    /// Fingerprint Tanimoto of the generic Murcko scaffolds.
    pub sim_scaffold: f64,
    /// Normalized edit similarity of the canonical SMILES.
    pub sim_string: f64,
    pub atoms_anchor: usize,
    pub atoms_partner: usize,
    pub labels: Option<FragmentLabels>,
}

/// Larger over smaller potency, guarded against zero.
pub fn fold_change(y_a: f64, y_p: f64) -> f64 {
    y_a.max(y_p) / y_a.min(y_p).max(1e-12)
}

/// Soft consensus: any one similarity reaching `tau_sim`, and the fold
/// change reaching `tau_fold`.
pub fn passes_filter(sims: [f64; 3], fc: f64, tau_sim: f64, tau_fold: f64) -> bool {
    sims.iter().any(|&s| s >= tau_sim) && fc >= tau_fold
}

struct Features {
    graph: MolGraph,
    smiles: String,
    fp: FingerprintBits,
    /// None when the molecule has no ring.
    scaffold_fp: Option<FingerprintBits>,
}

fn features(smiles: &str, cfg: &CliffConfig) -> Result<Features, String> {
    let graph = parse_smiles(smiles).map_err(|e| e.to_string())?;
    let (_, canonical) = canonicalize(&graph).map_err(|e| e.to_string())?;
    let fp = circular_fingerprint(&graph, cfg.radius, cfg.nbits).map_err(|e| e.to_string())?;
    let scaffold = generic_murcko_scaffold(&graph);
    let scaffold_fp = if scaffold.atom_count() == 0 {
        None
    } else {
        Some(circular_fingerprint(&scaffold, cfg.radius, cfg.nbits).map_err(|e| e.to_string())?)
    };
    Ok(Features { graph, smiles: canonical, fp, scaffold_fp })
}

/// Anchors are `cliff_mol == 1` rows of the configured split, partners the
/// `cliff_mol == 0` rows of the same split. Rows whose SMILES cannot be
/// read are skipped. Pairs come out ordered by (anchor row, partner row)
/// and numbered in that order.
pub fn find_cliff_pairs(records: &[ActivityRecord], cfg: &CliffConfig) -> Vec<CliffPair> {
    let in_split: Vec<usize> = (0..records.len()).filter(|&i| records[i].split == cfg.split).collect();
    let feats: Vec<Option<Features>> = records
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            if r.split != cfg.split {
                return None;
            }
            features(&r.smiles, cfg).map_err(|e| warn!("row {i} skipped: {e}")).ok()
        })
        .collect();
    let anchors: Vec<usize> = in_split.iter().copied().filter(|&i| records[i].cliff_mol == 1 && feats[i].is_some()).collect();
    let partners: Vec<usize> = in_split.iter().copied().filter(|&i| records[i].cliff_mol == 0 && feats[i].is_some()).collect();

    let found: Vec<Vec<CliffPair>> = anchors
        .par_iter()
        .map(|&a| {
            let fa = feats[a].as_ref().unwrap();
            partners
                .iter()
                .filter_map(|&p| {
                    let fp = feats[p].as_ref().unwrap();
                    let fc = fold_change(records[a].exp_mean_nm, records[p].exp_mean_nm);
                    if fc < cfg.tau_fold {
                        return None;
                    }
                    let sim_full = tanimoto(&fa.fp, &fp.fp).expect("same width");
                    let sim_scaffold = match (&fa.scaffold_fp, &fp.scaffold_fp) {
                        (Some(x), Some(y)) => tanimoto(x, y).expect("same width"),
                        _ => 0.0,
                    };
                    let sim_string = levenshtein_similarity(&fa.smiles, &fp.smiles);
                    if !passes_filter([sim_full, sim_scaffold, sim_string], fc, cfg.tau_sim, cfg.tau_fold) {
                        return None;
                    }
                    Some(CliffPair {
                        pair_id: 0,
                        anchor_index: a,
                        partner_index: p,
                        anchor: records[a].clone(),
                        partner: records[p].clone(),
                        fold_change: fc,
                        sim_full,
                        sim_scaffold,
                        sim_string,
                        atoms_anchor: fa.graph.atom_count(),
                        atoms_partner: fp.graph.atom_count(),
                        labels: None,
                    })
                })
                .collect()
        })
        .collect();
    let mut pairs: Vec<CliffPair> = found.into_iter().flatten().collect();
    for (i, p) in pairs.iter_mut().enumerate() {
        p.pair_id = i;
    }
    pairs
}

/// Computes shared/differential atoms for pairs that lack them.
pub fn attach_labels(pairs: &mut [CliffPair], opts: &McsOptions) {
    pairs.par_iter_mut().filter(|p| p.labels.is_none()).for_each(|p| {
        match (parse_smiles(&p.anchor.smiles), parse_smiles(&p.partner.smiles)) {
            (Ok(a), Ok(b)) => p.labels = Some(fragment_labels(&a, &b, opts)),
            _ => warn!("pair {}: unreadable SMILES", p.pair_id),
        }
    });
}

/// Case-study selection presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseMode {
    /// Minimal edits: ΔN ≤ 3, N_max ≤ 100, edit size ≤ 5; smallest edit
    /// first, then largest fold change.
    A,
    /// Largest fold change first.
    B,
    /// Larger molecules: N_max ≥ 40, ΔN ≤ 3; largest N_max first.
    C,
}

fn by_fold_desc(x: &CliffPair, y: &CliffPair) -> Ordering {
    y.fold_change.total_cmp(&x.fold_change).then(x.pair_id.cmp(&y.pair_id))
}

/// Filters and ranks pairs for one mode, keeping at most `limit`. Mode A
/// computes MCS labels for pairs that need them.
pub fn select_cases(pairs: &[CliffPair], mode: CaseMode, limit: usize, opts: &McsOptions) -> Vec<CliffPair> {
    let delta_n = |p: &CliffPair| p.atoms_anchor.abs_diff(p.atoms_partner);
    let n_max = |p: &CliffPair| p.atoms_anchor.max(p.atoms_partner);
    let mut chosen: Vec<CliffPair> = match mode {
        CaseMode::A => {
            let mut cand: Vec<CliffPair> =
                pairs.iter().filter(|p| delta_n(p) <= 3 && n_max(p) <= 100).cloned().collect();
            attach_labels(&mut cand, opts);
            cand.retain(|p| p.labels.as_ref().is_some_and(|l| !l.mcs_truncated && l.edit_size() <= 5));
            cand.sort_by(|x, y| {
                let ex = x.labels.as_ref().unwrap().edit_size();
                let ey = y.labels.as_ref().unwrap().edit_size();
                ex.cmp(&ey).then_with(|| by_fold_desc(x, y))
            });
            cand
        }
        CaseMode::B => {
            let mut cand = pairs.to_vec();
            cand.sort_by(by_fold_desc);
            cand
        }
        CaseMode::C => {
            let mut cand: Vec<CliffPair> =
                pairs.iter().filter(|p| n_max(p) >= 40 && delta_n(p) <= 3).cloned().collect();
            cand.sort_by(|x, y| n_max(y).cmp(&n_max(x)).then_with(|| by_fold_desc(x, y)));
            cand
        }
    };
    chosen.truncate(limit);
    chosen
}

/// Flat CSV form of a pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub pair_id: usize,
    pub anchor_index: usize,
    pub partner_index: usize,
    pub anchor_smiles: String,
    pub partner_smiles: String,
    pub anchor_nm: f64,
    pub partner_nm: f64,
    pub fold_change: f64,
    pub sim_full: f64,
    pub sim_scaffold: f64,
    pub sim_string: f64,
}

impl From<&CliffPair> for PairRow {
    fn from(p: &CliffPair) -> Self {
        PairRow {
            pair_id: p.pair_id,
            anchor_index: p.anchor_index,
            partner_index: p.partner_index,
            anchor_smiles: p.anchor.smiles.clone(),
            partner_smiles: p.partner.smiles.clone(),
            anchor_nm: p.anchor.exp_mean_nm,
            partner_nm: p.partner.exp_mean_nm,
            fold_change: p.fold_change,
            sim_full: p.sim_full,
            sim_scaffold: p.sim_scaffold,
            sim_string: p.sim_string,
        }
    }
}

pub fn write_pairs_csv(pairs: &[CliffPair], out: impl Write) -> Result<(), CliffError> {
    let mut w = csv::Writer::from_writer(out);
    for p in pairs {
        w.serialize(PairRow::from(p))?;
    }
    w.flush().map_err(|e| CliffError::Csv(e.into()))?;
    Ok(())
}

pub fn read_pairs_csv(input: impl Read) -> Result<Vec<PairRow>, CliffError> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(smiles: &str, nm: f64, cliff: u8, split: Split) -> ActivityRecord {
        ActivityRecord { smiles: smiles.into(), exp_mean_nm: nm, cliff_mol: cliff, split }
    }

    #[test]
    fn fold_change_arithmetic() {
        assert_eq!(fold_change(100.0, 1.0), 100.0);
        assert_eq!(fold_change(1.0, 100.0), 100.0);
        assert_eq!(fold_change(5.0, 0.0), 5e12);
    }

    #[test]
    fn filter_needs_both_criteria() {
        assert!(passes_filter([0.1, 0.95, 0.2], 10.0, 0.9, 10.0));
        assert!(!passes_filter([0.89, 0.5, 0.2], 1000.0, 0.9, 10.0));
        assert!(!passes_filter([1.0, 1.0, 1.0], 9.99, 0.9, 10.0));
    }

    #[test]
    fn anchors_and_partners_from_test_split() {
        let records = vec![
            rec("CCCCCCCCc1ccccc1O", 100.0, 1, Split::Test),
            rec("CCCCCCCCc1ccccc1N", 1.0, 0, Split::Test),
            rec("CCCCCCCCc1ccccc1N", 1.0, 0, Split::Train),
            rec("CCCCCCCCc1ccccc1F", 50.0, 0, Split::Test),
            rec("not a smiles", 1.0, 0, Split::Test),
            rec("CCCCCCCCc1ccccc1Cl", 1000.0, 1, Split::Test),
        ];
        let pairs = find_cliff_pairs(&records, &CliffConfig::default());
        let ids: Vec<(usize, usize)> = pairs.iter().map(|p| (p.anchor_index, p.partner_index)).collect();
        // scaffold similarity is 1 for every pair here; potency decides
        assert_eq!(ids, vec![(0, 1), (5, 1), (5, 3)]);
        assert!(pairs.iter().all(|p| p.sim_scaffold == 1.0));
        assert_eq!(pairs[2].fold_change, 20.0);
        assert_eq!(pairs.iter().map(|p| p.pair_id).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn csv_round_trip() {
        let records = vec![rec("c1ccccc1CCO", 100.0, 1, Split::Test), rec("c1ccccc1CCN", 2.0, 0, Split::Test)];
        let pairs = find_cliff_pairs(&records, &CliffConfig::default());
        let mut buf = Vec::new();
        write_pairs_csv(&pairs, &mut buf).unwrap();
        let rows = read_pairs_csv(buf.as_slice()).unwrap();
        assert_eq!(rows, pairs.iter().map(PairRow::from).collect::<Vec<_>>());
    }

    #[test]
    fn case_modes() {
        let records = vec![
            rec("c1ccccc1CCO", 1000.0, 1, Split::Test),
            rec("c1ccccc1CCN", 2.0, 0, Split::Test),
            rec("c1ccccc1CCCN", 50.0, 0, Split::Test),
        ];
        let pairs = find_cliff_pairs(&records, &CliffConfig::default());
        assert_eq!(pairs.len(), 2);
        let b = select_cases(&pairs, CaseMode::B, 10, &McsOptions::default());
        assert_eq!(b[0].partner_index, 1);
        let a = select_cases(&pairs, CaseMode::A, 10, &McsOptions::default());
        assert_eq!(a[0].labels.as_ref().unwrap().edit_size(), 1);
        assert!(select_cases(&pairs, CaseMode::C, 10, &McsOptions::default()).is_empty());
        assert_eq!(select_cases(&pairs, CaseMode::B, 1, &McsOptions::default()).len(), 1);
    }
}
