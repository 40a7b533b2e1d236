//! Limit detection shared by tail-state evaluation and recovery sequences.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::Error;

/// Consecutive increments below [`DELTA_TOLERANCE`] required to accept a limit.
pub const STABLE_RUN: usize = 5;
pub const DELTA_TOLERANCE: f64 = 1e-9;
/// Running averages are sampled every `CESARO_STRIDE` terms. The stride is
/// divisible by every period up to 6, so averages of periodic sequences with
/// such periods are sampled at whole periods.
pub const CESARO_STRIDE: usize = 60;

/// How a sequence of values is turned into a limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LimitRule {
    #[default]
    Plain,
    /// Detection runs on running averages sampled every [`CESARO_STRIDE`]
    /// terms.
    Cesaro,
}

/// Returns the detected limit of `values` under `rule`.
///
/// Plain: the last value once `STABLE_RUN` consecutive increments are below
/// the tolerance. Cesàro: the same test applied to the sampled running
/// averages.
pub fn detect_limit(values: &[Complex64], rule: LimitRule) -> Result<Complex64, Error> {
    match rule {
        LimitRule::Plain => detect_plain(values),
        LimitRule::Cesaro => {
            let mut averages = Vec::with_capacity(values.len());
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, v) in values.iter().enumerate() {
                acc += v;
                if (k + 1) % CESARO_STRIDE == 0 {
                    averages.push(acc / (k + 1) as f64);
                }
            }
            detect_plain(&averages)
        }
    }
}

fn detect_plain(values: &[Complex64]) -> Result<Complex64, Error> {
    let mut run = 0;
    let mut last_delta = f64::INFINITY;
    for k in 1..values.len() {
        last_delta = (values[k] - values[k - 1]).norm();
        if last_delta < DELTA_TOLERANCE {
            run += 1;
        } else {
            run = 0;
        }
    }
    match values.last() {
        Some(&last) if run >= STABLE_RUN => Ok(last),
        _ => Err(Error::NotConverged {
            evaluated: values.len(),
            last_delta,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn constant_sequence_needs_a_full_run() {
        let values = vec![c(2.0); 6];
        assert_eq!(detect_limit(&values, LimitRule::Plain), Ok(c(2.0)));
        assert!(detect_limit(&values[..5], LimitRule::Plain).is_err());
    }

    #[test]
    fn late_jump_resets_the_run() {
        let mut values = vec![c(1.0); 10];
        values.push(c(3.0));
        assert!(detect_limit(&values, LimitRule::Plain).is_err());
    }

    #[test]
    fn oscillation_needs_cesaro() {
        let values: Vec<Complex64> = (0..400)
            .map(|k| c(if k % 2 == 0 { 1.0 } else { -1.0 }))
            .collect();
        assert!(matches!(
            detect_limit(&values, LimitRule::Plain),
            Err(Error::NotConverged { .. })
        ));
        assert_eq!(detect_limit(&values, LimitRule::Cesaro), Ok(c(0.0)));
        // six sampled averages are needed
        assert!(detect_limit(&values[..359], LimitRule::Cesaro).is_err());
    }
}
