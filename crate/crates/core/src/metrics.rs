//! Quality metrics for recovered signals, masks and clusterings.

use crate::error::{Error, Result};
use crate::tensor::{Mask3, Tensor3};

/// Peak signal-to-noise ratio in dB; `f64::INFINITY` when the inputs agree.
pub fn psnr(xhat: &Tensor3, xref: &Tensor3, peak: f64) -> Result<f64> {
    xhat.check_same_dims(xref)?;
    if !(peak > 0.0) {
        return Err(Error::InvalidArgument(format!("PSNR peak must be positive, got {peak}")));
    }
    let mse = (xhat - xref).frobenius_norm().powi(2) / xref.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Relative error `‖xhat − xref‖_F / ‖xref‖_F`.
pub fn rse(xhat: &Tensor3, xref: &Tensor3) -> Result<f64> {
    xhat.check_same_dims(xref)?;
    let denom = xref.frobenius_norm();
    if denom == 0.0 {
        return Err(Error::InvalidArgument("RSE against a zero reference".into()));
    }
    Ok((xhat - xref).frobenius_norm() / denom)
}

/// Harmonic mean of precision and recall of `predicted` against `truth`.
/// Zero when either has no true entries in common.
pub fn f_measure(predicted: &Mask3, truth: &Mask3) -> Result<f64> {
    if predicted.dims() != truth.dims() {
        return Err(Error::DimMismatch(format!(
            "mask {:?} vs {:?}",
            predicted.dims(),
            truth.dims()
        )));
    }
    let tp = predicted
        .data()
        .iter()
        .zip(truth.data())
        .filter(|(&p, &t)| p && t)
        .count() as f64;
    let pp = predicted.count() as f64;
    let tt = truth.count() as f64;
    if tp == 0.0 {
        return Ok(0.0);
    }
    let precision = tp / pp;
    let recall = tp / tt;
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Entries with `|x| > threshold`.
pub fn support(x: &Tensor3, threshold: f64) -> Mask3 {
    let (n1, n2, n3) = x.dims();
    Mask3::new((n1, n2, n3), x.data().iter().map(|v| v.abs() > threshold).collect())
        .expect("dims taken from a valid tensor")
}

/// Largest label count for which [`cluster_accuracy`] enumerates every
/// label permutation.
pub const MAX_EXACT_CLUSTERS: usize = 8;

/// Fraction of points whose predicted label matches the truth under the best
/// one-to-one relabeling. Labels are 0-based.
pub fn cluster_accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() || truth.is_empty() {
        return Err(Error::DimMismatch(format!(
            "{} predicted vs {} true labels",
            predicted.len(),
            truth.len()
        )));
    }
    let k = predicted.iter().chain(truth).max().copied().unwrap_or(0) + 1;
    if k > MAX_EXACT_CLUSTERS {
        return Err(Error::InvalidArgument(format!(
            "{k} labels exceeds exhaustive matching limit {MAX_EXACT_CLUSTERS}"
        )));
    }
    let mut counts = vec![vec![0usize; k]; k];
    for (&p, &t) in predicted.iter().zip(truth) {
        counts[p][t] += 1;
    }
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = 0;
    permute(&mut perm, 0, &mut |p| {
        let hits: usize = p.iter().enumerate().map(|(a, &b)| counts[a][b]).sum();
        best = best.max(hits);
    });
    Ok(best as f64 / truth.len() as f64)
}

fn permute(items: &mut Vec<usize>, start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == items.len() {
        visit(items);
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permute(items, start + 1, visit);
        items.swap(start, i);
    }
}
