//! r₂ ratios and the CDF error score.

use super::ValidateError;
use crate::num::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct R2Record<T> {
    pub block: String,
    pub element: String,
    pub r2: T,
    pub tonnage: T,
}

/// A block whose prediction could not be used.
#[derive(Debug, Clone, PartialEq)]
pub struct Excluded<T> {
    pub block: String,
    pub prediction: Option<T>,
}

/// One record per block with a positive prediction; r₂ = average / prediction.
/// `inputs` are (block id, tonnage, block average, model prediction).
pub fn r2_records<T: Real>(element: &str, inputs: &[(String, T, T, Option<T>)]) -> (Vec<R2Record<T>>, Vec<Excluded<T>>) {
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (id, tonnage, avg, pred) in inputs {
        match pred {
            Some(p) if *p > T::zero() && p.is_finite() => kept.push(R2Record {
                block: id.clone(),
                element: element.to_string(),
                r2: *avg / *p,
                tonnage: *tonnage,
            }),
            _ => dropped.push(Excluded {
                block: id.clone(),
                prediction: *pred,
            }),
        }
    }
    (kept, dropped)
}

fn normalized<T: Real>(records: &[R2Record<T>]) -> Result<Vec<(T, T)>, ValidateError> {
    if records.is_empty() {
        return Err(ValidateError::EmptyRecords);
    }
    let total: T = records.iter().map(|r| r.tonnage).sum();
    if !(total > T::zero()) || records.iter().any(|r| r.tonnage < T::zero()) {
        return Err(ValidateError::Tonnage(total.to_f64_lossy()));
    }
    let hundred = T::of(100.0);
    Ok(records.iter().map(|r| (r.r2, r.tonnage / total * hundred)).collect())
}

/// Σ wᵢ |r₂ᵢ − 1| with tonnage renormalized to 100 %.
pub fn r2_error_score<T: Real>(records: &[R2Record<T>]) -> Result<T, ValidateError> {
    Ok(normalized(records)?
        .into_iter()
        .map(|(r, w)| w * (r - T::one()).abs())
        .sum())
}

/// Sorted (r₂, cumulative tonnage %) pairs of the step CDF.
pub fn cdf_points<T: Real>(records: &[R2Record<T>]) -> Result<Vec<(T, T)>, ValidateError> {
    let mut pts = normalized(records)?;
    pts.sort_by(|a, b| a.0.cmp_partial(&b.0));
    let mut cum = T::zero();
    Ok(pts
        .into_iter()
        .map(|(r, w)| {
            cum += w;
            (r, cum)
        })
        .collect())
}

/// Area under the step CDF left of r₂ = 1 plus area above it to the right,
/// integrated segment by segment.
pub fn step_cdf_area<T: Real>(records: &[R2Record<T>]) -> Result<T, ValidateError> {
    let pts = cdf_points(records)?;
    let one = T::one();
    let hundred = T::of(100.0);
    let mut breaks: Vec<T> = pts.iter().map(|p| p.0).collect();
    breaks.push(one);
    breaks.sort_by(|a, b| a.cmp_partial(b));
    let cdf_at = |r: T| {
        // F is right-continuous: mass at r counts from r onward.
        pts.iter().take_while(|p| p.0 <= r).last().map_or(T::zero(), |p| p.1)
    };
    let mut area = T::zero();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let f = cdf_at(a);
        area += if b <= one { f * (b - a) } else { (hundred - f) * (b - a) };
    }
    Ok(area)
}

/// exp(mean ln v); 0 if any value is 0.
pub fn geometric_mean<T: Real>(values: &[T]) -> Option<T> {
    if values.is_empty() || values.iter().any(|v| *v < T::zero()) {
        return None;
    }
    if values.iter().any(|v| *v == T::zero()) {
        return Some(T::zero());
    }
    let s: T = values.iter().map(|v| v.ln()).sum();
    Some((s / T::of_usize(values.len())).exp())
}
