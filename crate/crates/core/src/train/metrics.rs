use crate::error::{Error, Result};

/// Fraction of `mask` nodes whose prediction matches the label.
pub fn accuracy(preds: &[usize], labels: &[usize], mask: &[usize]) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::Invalid("accuracy over an empty mask".into()));
    }
    let correct = mask.iter().filter(|&&u| preds[u] == labels[u]).count();
    Ok(correct as f64 / mask.len() as f64)
}

/// Area under the ROC curve for binary labels over `mask`, computed as the
/// normalized Mann–Whitney U statistic with average ranks for tied scores.
pub fn roc_auc(scores: &[f64], labels: &[usize], mask: &[usize]) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::Invalid("ROC-AUC over an empty mask".into()));
    }
    if let Some(&u) = mask.iter().find(|&&u| labels[u] > 1) {
        return Err(Error::Invalid(format!("ROC-AUC needs binary labels, node {u} has label {}", labels[u])));
    }
    let mut order: Vec<usize> = mask.to_vec();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let positives = mask.iter().filter(|&&u| labels[u] == 1).count();
    let negatives = mask.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Invalid("ROC-AUC is undefined when only one class is present".into()));
    }
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 share their average
        let avg = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += avg * order[i..=j].iter().filter(|&&u| labels[u] == 1).count() as f64;
        i = j + 1;
    }
    let p = positives as f64;
    let u = rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * negatives as f64))
}
