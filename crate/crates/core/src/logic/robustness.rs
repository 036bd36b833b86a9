//! Min/max quantitative semantics over finite traces.

use super::formula::{Formula, Predicate, StateSample, Trace, RHO_MAX};
use super::LogicError;

pub fn predicate_robustness(sample: &StateSample, pred: &Predicate) -> Result<f64, LogicError> {
    pred.robustness(sample)
}

/// ρ(s_{t:T}, φ).
pub fn robustness(trace: &Trace, formula: &Formula, t: usize) -> Result<f64, LogicError> {
    if t >= trace.len() {
        return Err(LogicError::TimeOutOfRange { t, len: trace.len() });
    }
    Ok(robustness_signal(trace, formula)?[t])
}

/// ρ(s_{t:T}, φ) for every start index t, computed bottom-up.
pub fn robustness_signal(trace: &Trace, formula: &Formula) -> Result<Vec<f64>, LogicError> {
    let n = trace.len();
    Ok(match formula {
        Formula::True => vec![RHO_MAX; n],
        Formula::Pred(p) => trace
            .samples()
            .iter()
            .map(|s| p.robustness(s))
            .collect::<Result<_, _>>()?,
        Formula::Not(c) => robustness_signal(trace, c)?.into_iter().map(|v| -v).collect(),
        Formula::And(cs) => fold(trace, cs, f64::min)?,
        Formula::Or(cs) => fold(trace, cs, f64::max)?,
        Formula::Eventually(c) => {
            let mut sig = robustness_signal(trace, c)?;
            for t in (0..n.saturating_sub(1)).rev() {
                sig[t] = sig[t].max(sig[t + 1]);
            }
            sig
        }
        Formula::Next(c) => {
            let sig = robustness_signal(trace, c)?;
            (0..n)
                .map(|t| if t + 1 < n { sig[t + 1] } else { -RHO_MAX })
                .collect()
        }
        Formula::Until(l, r) => {
            let hold = robustness_signal(trace, l)?;
            let goal = robustness_signal(trace, r)?;
            let mut out = vec![0.0; n];
            let mut later = -RHO_MAX;
            for t in (0..n).rev() {
                later = goal[t].max(hold[t].min(later));
                out[t] = later;
            }
            out
        }
        Formula::Then(l, r) => robustness_signal(trace, &Formula::then_equivalent(l, r))?,
    })
}

fn fold(trace: &Trace, children: &[Formula], op: fn(f64, f64) -> f64) -> Result<Vec<f64>, LogicError> {
    let mut iter = children.iter();
    let first = iter.next().ok_or(LogicError::BadArity)?;
    let mut acc = robustness_signal(trace, first)?;
    for c in iter {
        let sig = robustness_signal(trace, c)?;
        acc.iter_mut().zip(sig).for_each(|(a, b)| *a = op(*a, b));
    }
    Ok(acc)
}

/// Whether the trace satisfies the formula (ρ > 0).
pub fn satisfies(trace: &Trace, formula: &Formula) -> Result<bool, LogicError> {
    Ok(robustness(trace, formula, 0)? > 0.0)
}
