//! Binomial probability kernels.
//!
//! Rows of binomial probabilities are built with the ratio recurrence
//! `P[i+1] / P[i] = (x - i) / (i + 1) * λ / (1 - λ)` carried in log space, so
//! large trial counts never overflow a factorial and tiny probabilities
//! underflow gracefully to zero.

use statrs::function::gamma::ln_gamma;

use crate::{Error, Result};

/// Probabilities below this are considered negligible when truncating rows.
pub const NEGLIGIBLE: f64 = 1e-300;

fn ln_choose(x: u64, i: u64) -> f64 {
    let small = i.min(x - i);
    if small <= 64 {
        // Direct product is more accurate than log-gamma differences here.
        (1..=small)
            .map(|j| ((x - small + j) as f64 / j as f64).ln())
            .sum()
    } else {
        ln_gamma(x as f64 + 1.0) - ln_gamma(i as f64 + 1.0) - ln_gamma((x - i) as f64 + 1.0)
    }
}

/// `ln Pr[Bin(x, λ) = i]`; `-inf` for impossible outcomes.
pub fn binom_log_pmf(x: u64, lambda: f64, i: u64) -> Result<f64> {
    if i > x {
        return Err(Error::param(
            "i",
            format!("successes {i} exceed trials {x}"),
        ));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::param(
            "lambda",
            format!("{lambda} is not a probability"),
        ));
    }
    let fail = x - i;
    let success_term = if i == 0 {
        0.0
    } else if lambda == 0.0 {
        return Ok(f64::NEG_INFINITY);
    } else {
        i as f64 * lambda.ln()
    };
    let fail_term = if fail == 0 {
        0.0
    } else if lambda == 1.0 {
        return Ok(f64::NEG_INFINITY);
    } else {
        fail as f64 * (-lambda).ln_1p()
    };
    Ok(ln_choose(x, i) + success_term + fail_term)
}

/// `Pr[Bin(x, λ) = i]`.
pub fn binom_pmf(x: u64, lambda: f64, i: u64) -> f64 {
    if i > x {
        return 0.0;
    }
    binom_log_pmf(x, lambda, i).map_or(0.0, f64::exp)
}

/// `Pr[Bin(x, λ) = i]` for `i = 0..=min(x, len - 1)`, computed by the running
/// product recurrence.
pub fn binom_row(x: u64, lambda: f64, len: usize) -> Vec<f64> {
    let last = (len as u64).saturating_sub(1).min(x) as usize;
    if len == 0 {
        return Vec::new();
    }
    if lambda <= 0.0 || x == 0 {
        let mut row = vec![0.0; last + 1];
        row[0] = 1.0;
        return row;
    }
    if lambda >= 1.0 {
        let mut row = vec![0.0; last + 1];
        if (x as usize) <= last {
            row[x as usize] = 1.0;
        }
        return row;
    }
    let log_odds = lambda.ln() - (-lambda).ln_1p();
    let mut log_term = x as f64 * (-lambda).ln_1p();
    let mut row = Vec::with_capacity(last + 1);
    for i in 0..=last {
        row.push(log_term.exp());
        if i < last {
            log_term += ((x - i as u64) as f64 / (i + 1) as f64).ln() + log_odds;
        }
    }
    row
}

/// Binomial row truncated once past the mean and below `cutoff` (absolute).
/// The returned vector has at least one entry.
pub fn binom_row_truncated(x: u64, lambda: f64, cutoff: f64) -> Vec<f64> {
    if lambda <= 0.0 || x == 0 {
        return vec![1.0];
    }
    if lambda >= 1.0 {
        let mut row = vec![0.0; x as usize + 1];
        row[x as usize] = 1.0;
        return row;
    }
    let mean = x as f64 * lambda;
    let log_odds = lambda.ln() - (-lambda).ln_1p();
    let mut log_term = x as f64 * (-lambda).ln_1p();
    let mut row = Vec::new();
    let mut i: u64 = 0;
    loop {
        let term = log_term.exp();
        if (i as f64) > mean && term < cutoff && !row.is_empty() {
            break;
        }
        row.push(term);
        if i == x {
            break;
        }
        log_term += ((x - i) as f64 / (i + 1) as f64).ln() + log_odds;
        i += 1;
    }
    row
}

/// Full linear convolution of two probability vectors.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Law of `Bin(near_trials, p) + Bin(far_trials, q)`, the number of infected
/// neighbours a vertex collects from `t` infected vertices per cluster.
#[derive(Clone, Debug)]
pub struct NeighborCountLaw {
    pmf: Vec<f64>,
    mean: f64,
}

impl NeighborCountLaw {
    pub fn new(near_trials: u64, p: f64, far_trials: u64, q: f64) -> Self {
        let near = binom_row_truncated(near_trials, p, 1e-24);
        let far = binom_row_truncated(far_trials, q, 1e-24);
        NeighborCountLaw {
            pmf: convolve(&near, &far),
            mean: near_trials as f64 * p + far_trials as f64 * q,
        }
    }

    /// `D_j`: probability of exactly `j` infected neighbours.
    pub fn pmf(&self, j: usize) -> f64 {
        self.pmf.get(j).copied().unwrap_or(0.0)
    }

    pub fn support_len(&self) -> usize {
        self.pmf.len()
    }

    /// `Pr[count >= r]`, summed over whichever side of the mean avoids
    /// cancellation.
    pub fn tail(&self, r: usize) -> f64 {
        let value = if (r as f64) > self.mean {
            self.pmf.iter().skip(r).sum::<f64>()
        } else {
            1.0 - self.pmf.iter().take(r).sum::<f64>()
        };
        value.clamp(0.0, 1.0)
    }

    /// `Pr[count >= r]` for `r = 0..=r_max` in one pass.
    pub fn tails(&self, r_max: usize) -> Vec<f64> {
        (0..=r_max).map(|r| self.tail(r)).collect()
    }
}
