//! Convergence diagnostics and posterior summaries over multiple chains.

use serde::{Deserialize, Serialize};

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Each chain cut into two halves (an odd trailing draw is dropped).
fn split(chains: &[Vec<f64>]) -> Vec<&[f64]> {
    let mut halves = Vec::with_capacity(chains.len() * 2);
    for chain in chains {
        let half = chain.len() / 2;
        halves.push(&chain[..half]);
        halves.push(&chain[half..2 * half]);
    }
    halves
}

/// (W, var_plus) of equal-length chains.
fn variance_components(chains: &[&[f64]]) -> (f64, f64) {
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let w = chains.iter().map(|c| sample_variance(c)).sum::<f64>() / chains.len() as f64;
    let b = n * sample_variance(&means);
    (w, (n - 1.0) / n * w + b / n)
}

/// Split R-hat. Needs at least two chains of four or more draws.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let halves = split(chains);
    if halves.len() < 4 || halves[0].len() < 2 {
        return f64::NAN;
    }
    let (w, var_plus) = variance_components(&halves);
    if w <= 0.0 {
        return if var_plus <= 0.0 { 1.0 } else { f64::INFINITY };
    }
    (var_plus / w).sqrt()
}

fn autocovariance(x: &[f64], m: f64, lag: usize) -> f64 {
    let n = x.len();
    x[..n - lag]
        .iter()
        .zip(&x[lag..])
        .map(|(a, b)| (a - m) * (b - m))
        .sum::<f64>()
        / n as f64
}

/// Multi-chain effective sample size over split chains, truncating the
/// autocorrelation sum with Geyer's initial monotone sequence.
pub fn effective_sample_size(chains: &[Vec<f64>]) -> f64 {
    let halves = split(chains);
    if halves.len() < 2 || halves[0].len() < 4 {
        return f64::NAN;
    }
    let n = halves[0].len();
    let total = (halves.len() * n) as f64;
    let (w, var_plus) = variance_components(&halves);
    if w <= 0.0 || var_plus <= 0.0 {
        return total;
    }
    let means: Vec<f64> = halves.iter().map(|c| mean(c)).collect();
    let rho = |lag: usize| {
        let acov = halves
            .iter()
            .zip(&means)
            .map(|(c, &m)| autocovariance(c, m, lag))
            .sum::<f64>()
            / halves.len() as f64;
        1.0 - (w - acov) / var_plus
    };
    let mut tau = -1.0;
    let mut previous = f64::INFINITY;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = rho(lag) + rho(lag + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(previous);
        tau += 2.0 * pair;
        previous = pair;
        lag += 2;
    }
    let tau = tau.max(1.0 / total.log10());
    total / tau
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub median: f64,
    pub mean: f64,
    /// 95% equal-tailed credible interval.
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_positive: f64,
    pub rhat: f64,
    pub ess: f64,
}

impl ParamSummary {
    pub fn from_chains(chains: &[Vec<f64>]) -> Self {
        let mut pooled: Vec<f64> = chains.iter().flatten().copied().collect();
        pooled.sort_by(f64::total_cmp);
        let positive = pooled.iter().filter(|&&x| x > 0.0).count();
        Self {
            median: quantile_sorted(&pooled, 0.5),
            mean: mean(&pooled),
            ci_low: quantile_sorted(&pooled, 0.025),
            ci_high: quantile_sorted(&pooled, 0.975),
            p_positive: positive as f64 / pooled.len() as f64,
            rhat: split_rhat(chains),
            ess: effective_sample_size(chains),
        }
    }

    pub fn ci_width(&self) -> f64 {
        self.ci_high - self.ci_low
    }
}
