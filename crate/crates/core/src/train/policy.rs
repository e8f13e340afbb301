//! Boltzmann policy and soft state value over a finite action set.

use rand::Rng;

use crate::error::{Error, Result};

/// Temperatures below this are clamped; `alpha <= 0` selects pure argmax.
pub const ALPHA_FLOOR: f64 = 1e-6;

fn max_of(q: &[f64]) -> f64 {
    q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// First index of the maximum.
pub fn argmax(q: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in q.iter().enumerate() {
        if best.is_none_or(|b| v > q[b]) {
            best = Some(i);
        }
    }
    best
}

/// `pi(a) ∝ exp((Q(a) - max Q) / alpha)`.
pub fn boltzmann_probs(q: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if q.is_empty() {
        return Err(Error::EmptyActions);
    }
    if alpha <= 0.0 {
        let best = argmax(q).unwrap();
        return Ok((0..q.len()).map(|i| if i == best { 1.0 } else { 0.0 }).collect());
    }
    let alpha = alpha.max(ALPHA_FLOOR);
    let qmax = max_of(q);
    let mut p: Vec<f64> = q.iter().map(|&v| ((v - qmax) / alpha).exp()).collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= z);
    Ok(p)
}

/// Samples an action index from the Boltzmann policy; returns the index and
/// the full distribution.
pub fn boltzmann_sample<R: Rng + ?Sized>(q: &[f64], alpha: f64, rng: &mut R) -> Result<(usize, Vec<f64>)> {
    let p = boltzmann_probs(q, alpha)?;
    Ok((sample_index(&p, rng), p))
}

pub(crate) fn sample_index<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the cumulative sum; take the last positive entry
    p.iter().rposition(|&x| x > 0.0).unwrap_or(p.len() - 1)
}

/// Uniform with probability `eps`, argmax otherwise.
pub fn epsilon_greedy<R: Rng + ?Sized>(q: &[f64], eps: f64, rng: &mut R) -> Result<usize> {
    if q.is_empty() {
        return Err(Error::EmptyActions);
    }
    if eps > 0.0 && rng.random::<f64>() < eps {
        Ok(rng.random_range(0..q.len()))
    } else {
        Ok(argmax(q).unwrap())
    }
}

/// `V = alpha * log sum exp(Q / alpha)`, evaluated with a max shift.
pub fn soft_value(q: &[f64], alpha: f64) -> Result<f64> {
    if q.is_empty() {
        return Err(Error::EmptyActions);
    }
    let qmax = max_of(q);
    if alpha <= 0.0 {
        return Ok(qmax);
    }
    let alpha = alpha.max(ALPHA_FLOOR);
    let s: f64 = q.iter().map(|&v| ((v - qmax) / alpha).exp()).sum();
    Ok(qmax + alpha * s.ln())
}

/// `V = max Q`, used when entropy regularisation is switched off.
pub fn hard_value(q: &[f64]) -> Result<f64> {
    if q.is_empty() {
        return Err(Error::EmptyActions);
    }
    Ok(max_of(q))
}
