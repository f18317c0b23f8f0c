//! Partition and classification metrics: normalized mutual information over
//! team partitions, and micro/macro F1 for node classification.

use std::collections::BTreeMap;

use crate::graph::NodeId;

use super::TeamError;

/// Normalized mutual information between two clusterings of the same node
/// universe, natural log, with 0*log(0) terms treated as 0. Identical
/// partitions score 1; independent partitions tend to 0. When both
/// partitions are trivial (single cluster or all singletons on both sides)
/// the entropy denominator vanishes; the value is then 1 if the partitions
/// are equal and 0 otherwise.
pub fn nmi(a: &[Vec<NodeId>], b: &[Vec<NodeId>]) -> Result<f64, TeamError> {
    let universe_a = universe(a)?;
    let universe_b = universe(b)?;
    if universe_a != universe_b {
        return Err(TeamError::UniverseMismatch);
    }
    let n = universe_a.len() as f64;
    if universe_a.is_empty() {
        return Err(TeamError::EmptyPartition);
    }

    // Confusion matrix: m[i][j] = |a_i ∩ b_j|.
    let index_b: BTreeMap<NodeId, usize> = b
        .iter()
        .enumerate()
        .flat_map(|(j, cluster)| cluster.iter().map(move |&id| (id, j)))
        .collect();
    let mut m = vec![vec![0u64; b.len()]; a.len()];
    for (i, cluster) in a.iter().enumerate() {
        for id in cluster {
            m[i][index_b[id]] += 1;
        }
    }
    let row: Vec<u64> = m.iter().map(|r| r.iter().sum()).collect();
    let col: Vec<u64> = (0..b.len()).map(|j| m.iter().map(|r| r[j]).sum()).collect();

    let mut numerator = 0.0;
    for (i, r) in m.iter().enumerate() {
        for (j, &mij) in r.iter().enumerate() {
            if mij == 0 {
                continue;
            }
            let mij = mij as f64;
            numerator += -2.0 * mij * ((mij * n) / (row[i] as f64 * col[j] as f64)).ln();
        }
    }
    let mut denominator = 0.0;
    for &ri in &row {
        if ri > 0 {
            denominator += ri as f64 * ((ri as f64) / n).ln();
        }
    }
    for &cj in &col {
        if cj > 0 {
            denominator += cj as f64 * ((cj as f64) / n).ln();
        }
    }

    if denominator == 0.0 {
        // Both partitions carry zero entropy; they are either equal (all
        // information shared) or there is nothing to share.
        let mut sa: Vec<Vec<NodeId>> = a.iter().map(|c| sorted(c)).collect();
        let mut sb: Vec<Vec<NodeId>> = b.iter().map(|c| sorted(c)).collect();
        sa.sort();
        sb.sort();
        return Ok(if sa == sb { 1.0 } else { 0.0 });
    }
    Ok(numerator / denominator)
}

fn sorted(c: &[NodeId]) -> Vec<NodeId> {
    let mut v = c.to_vec();
    v.sort_unstable();
    v
}

fn universe(clusters: &[Vec<NodeId>]) -> Result<Vec<NodeId>, TeamError> {
    let mut all: Vec<NodeId> = clusters.iter().flatten().copied().collect();
    all.sort_unstable();
    if all.windows(2).any(|w| w[0] == w[1]) {
        return Err(TeamError::OverlappingClusters);
    }
    Ok(all)
}

/// Micro and macro F1 for single-label multiclass predictions. Micro pools
/// TP/FP/FN globally (equal to accuracy for single-label problems); macro
/// averages per-class F1 over classes present in truth or prediction.
pub fn f1_scores(predicted: &[u16], truth: &[u16]) -> Result<(f64, f64), TeamError> {
    if predicted.len() != truth.len() {
        return Err(TeamError::LengthMismatch(predicted.len(), truth.len()));
    }
    if predicted.is_empty() {
        return Err(TeamError::EmptyPartition);
    }
    let num_classes = predicted
        .iter()
        .chain(truth)
        .map(|&c| c as usize + 1)
        .max()
        .unwrap();
    let mut tp = vec![0u64; num_classes];
    let mut fp = vec![0u64; num_classes];
    let mut fn_ = vec![0u64; num_classes];
    for (&p, &t) in predicted.iter().zip(truth) {
        if p == t {
            tp[p as usize] += 1;
        } else {
            fp[p as usize] += 1;
            fn_[t as usize] += 1;
        }
    }

    let tp_total: u64 = tp.iter().sum();
    let fp_total: u64 = fp.iter().sum();
    let fn_total: u64 = fn_.iter().sum();
    let micro = f1(tp_total, fp_total, fn_total);

    let mut macro_sum = 0.0;
    let mut macro_classes = 0usize;
    for c in 0..num_classes {
        if tp[c] + fp[c] + fn_[c] == 0 {
            // Class absent from both truth and prediction.
            continue;
        }
        macro_sum += f1(tp[c], fp[c], fn_[c]);
        macro_classes += 1;
    }
    Ok((micro, macro_sum / macro_classes as f64))
}

fn f1(tp: u64, fp: u64, fn_: u64) -> f64 {
    if tp == 0 {
        return 0.0;
    }
    let tp = tp as f64;
    2.0 * tp / (2.0 * tp + fp as f64 + fn_ as f64)
}
