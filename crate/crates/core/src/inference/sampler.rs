//! Hierarchical logistic model and its Metropolis sampler.
//!
//! Parameters live on an unconstrained scale: `log s`, one top-level bias
//! `b[g]` per group and one standardized cell effect `z[c]` per cell, with
//! cell log-odds `b[g(c)] + s * z[c]`. Binomial cell likelihoods use the
//! sufficient statistics (wins, trials).
//!
//! Each sweep updates every coordinate by random-walk Metropolis, then
//! applies two joint moves that leave all cell log-odds unchanged: a
//! shift along (b[g], z[c in g]) and a rescaling of (s, z). Step sizes
//! adapt during warmup by Robbins-Monro towards a fixed acceptance rate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McmcConfig {
    pub chains: usize,
    pub warmup: usize,
    pub samples: usize,
    pub seed: u64,
    /// Full sweeps per stored draw.
    pub thin: usize,
    pub target_acceptance: f64,
    pub prior_sd_b: f64,
    pub prior_sd_s: f64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            warmup: 1000,
            samples: 2000,
            seed: 20250101,
            thin: 5,
            target_acceptance: 0.3,
            prior_sd_b: 100.0,
            prior_sd_s: 100.0,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains < 2 {
            return Err(Error::Argument("at least 2 chains are needed for R-hat".into()));
        }
        if self.samples < 4 || self.thin == 0 {
            return Err(Error::Argument("samples must be >= 4 and thin >= 1".into()));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(Error::Argument("target_acceptance must lie in (0, 1)".into()));
        }
        if !(self.prior_sd_b > 0.0 && self.prior_sd_s > 0.0) {
            return Err(Error::Argument("prior scales must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaleMode {
    Free,
    /// Holds s at a constant; `Fixed(0.0)` collapses cells onto their group.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelCell {
    pub group: usize,
    pub wins: u32,
    pub trials: u32,
}

#[derive(Debug, Clone)]
pub struct Model {
    n_groups: usize,
    cells: Vec<ModelCell>,
    members: Vec<Vec<usize>>,
    scale: ScaleMode,
}

impl Model {
    pub fn new(n_groups: usize, cells: Vec<ModelCell>, scale: ScaleMode) -> Result<Self> {
        if n_groups == 0 {
            return Err(Error::Argument("model needs at least one group".into()));
        }
        let mut members = vec![Vec::new(); n_groups];
        for (i, cell) in cells.iter().enumerate() {
            if cell.group >= n_groups || cell.wins > cell.trials {
                return Err(Error::Argument(format!("invalid model cell {i}: {cell:?}")));
            }
            members[cell.group].push(i);
        }
        Ok(Self {
            n_groups,
            cells,
            members,
            scale,
        })
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }
}

/// Draws per chain: `b[chain][group][iteration]` and `s[chain][iteration]`.
#[derive(Debug, Clone)]
pub struct Draws {
    pub b: Vec<Vec<Vec<f64>>>,
    pub s: Vec<Vec<f64>>,
}

impl Draws {
    /// Chains of one group's bias.
    pub fn group(&self, g: usize) -> Vec<Vec<f64>> {
        self.b.iter().map(|chain| chain[g].clone()).collect()
    }
}

fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn cell_loglik(cell: &ModelCell, eta: f64) -> f64 {
    if cell.trials == 0 {
        return 0.0;
    }
    let losses = cell.trials - cell.wins;
    let mut ll = 0.0;
    if cell.wins > 0 {
        ll += cell.wins as f64 * log_sigmoid(eta);
    }
    if losses > 0 {
        ll += losses as f64 * log_sigmoid(-eta);
    }
    ll
}

/// Random-walk step with Robbins-Monro adaptation of its log scale.
#[derive(Debug, Clone, Copy)]
struct Step {
    log_scale: f64,
}

impl Step {
    fn new(scale: f64) -> Self {
        Self {
            log_scale: scale.ln(),
        }
    }

    fn scale(self) -> f64 {
        self.log_scale.exp()
    }

    fn adapt(&mut self, accepted: bool, target: f64, rate: Option<f64>) {
        if let Some(rate) = rate {
            let signal = if accepted { 1.0 } else { 0.0 } - target;
            self.log_scale = (self.log_scale + rate * signal).clamp(-12.0, 8.0);
        }
    }
}

struct Chain<'a> {
    model: &'a Model,
    config: &'a McmcConfig,
    rng: ChaCha8Rng,
    log_s: f64,
    b: Vec<f64>,
    z: Vec<f64>,
    eta: Vec<f64>,
    ll: Vec<f64>,
    step_log_s: Step,
    step_b: Vec<Step>,
    step_z: Vec<Step>,
    step_shift: Vec<Step>,
    step_rescale: Step,
}

impl<'a> Chain<'a> {
    fn new(model: &'a Model, config: &'a McmcConfig, chain: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(chain as u64);
        let mut normal = || -> f64 { rng.sample(StandardNormal) };
        let log_s = normal();
        let b: Vec<f64> = (0..model.n_groups).map(|_| 2.0 * normal()).collect();
        let z: Vec<f64> = (0..model.cells.len()).map(|_| normal()).collect();
        let mut chain = Self {
            model,
            config,
            rng,
            log_s,
            b,
            z,
            eta: vec![0.0; model.cells.len()],
            ll: vec![0.0; model.cells.len()],
            step_log_s: Step::new(0.5),
            step_b: vec![Step::new(1.0); model.n_groups],
            step_z: vec![Step::new(1.0); model.cells.len()],
            step_shift: vec![Step::new(0.5); model.n_groups],
            step_rescale: Step::new(0.2),
        };
        chain.refresh();
        chain
    }

    fn s_of(&self, log_s: f64) -> f64 {
        match self.model.scale {
            ScaleMode::Free => log_s.exp(),
            ScaleMode::Fixed(v) => v,
        }
    }

    fn s(&self) -> f64 {
        self.s_of(self.log_s)
    }

    fn refresh(&mut self) {
        let s = self.s();
        for (c, cell) in self.model.cells.iter().enumerate() {
            self.eta[c] = self.b[cell.group] + s * self.z[c];
            self.ll[c] = cell_loglik(cell, self.eta[c]);
        }
    }

    fn log_prior_b(&self, b: f64) -> f64 {
        -0.5 * (b / self.config.prior_sd_b).powi(2)
    }

    /// Half-normal density of s, plus the log-Jacobian of s = exp(log s).
    fn log_prior_log_s(&self, log_s: f64) -> f64 {
        -0.5 * (log_s.exp() / self.config.prior_sd_s).powi(2) + log_s
    }

    fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    fn accept(&mut self, log_ratio: f64) -> bool {
        log_ratio >= 0.0 || self.rng.random::<f64>().ln() < log_ratio
    }

    fn sweep(&mut self, rate: Option<f64>) {
        let target = self.config.target_acceptance;
        let cells = &self.model.cells;

        for (c, cell) in cells.iter().enumerate() {
            let s = self.s();
            let proposal = self.z[c] + self.step_z[c].scale() * self.normal();
            let eta = self.b[cell.group] + s * proposal;
            let ll = cell_loglik(cell, eta);
            let log_ratio = ll - self.ll[c] - 0.5 * (proposal * proposal - self.z[c] * self.z[c]);
            let accepted = self.accept(log_ratio);
            if accepted {
                self.z[c] = proposal;
                self.eta[c] = eta;
                self.ll[c] = ll;
            }
            self.step_z[c].adapt(accepted, target, rate);
        }

        for g in 0..self.model.n_groups {
            let delta = self.step_b[g].scale() * self.normal();
            let proposal = self.b[g] + delta;
            let mut log_ratio = self.log_prior_b(proposal) - self.log_prior_b(self.b[g]);
            let mut lls = Vec::with_capacity(self.model.members[g].len());
            for &c in &self.model.members[g] {
                let ll = cell_loglik(&cells[c], self.eta[c] + delta);
                log_ratio += ll - self.ll[c];
                lls.push(ll);
            }
            let accepted = self.accept(log_ratio);
            if accepted {
                self.b[g] = proposal;
                for (&c, ll) in self.model.members[g].iter().zip(lls) {
                    self.eta[c] += delta;
                    self.ll[c] = ll;
                }
            }
            self.step_b[g].adapt(accepted, target, rate);
        }

        // Shift b[g] by s*e and every z in g by -e: cell log-odds unchanged.
        for g in 0..self.model.n_groups {
            if self.model.members[g].is_empty() {
                continue;
            }
            let e = self.step_shift[g].scale() * self.normal();
            let proposal = self.b[g] + self.s() * e;
            let mut log_ratio = self.log_prior_b(proposal) - self.log_prior_b(self.b[g]);
            for &c in &self.model.members[g] {
                let z = self.z[c];
                log_ratio -= 0.5 * ((z - e) * (z - e) - z * z);
            }
            let accepted = self.accept(log_ratio);
            if accepted {
                self.b[g] = proposal;
                for &c in &self.model.members[g] {
                    self.z[c] -= e;
                }
            }
            self.step_shift[g].adapt(accepted, target, rate);
        }

        if self.model.scale != ScaleMode::Free {
            return;
        }

        let proposal = self.log_s + self.step_log_s.scale() * self.normal();
        let s_new = proposal.exp();
        let mut log_ratio = self.log_prior_log_s(proposal) - self.log_prior_log_s(self.log_s);
        let mut new_eta = Vec::with_capacity(cells.len());
        let mut new_ll = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let eta = self.b[cell.group] + s_new * self.z[c];
            let ll = cell_loglik(cell, eta);
            log_ratio += ll - self.ll[c];
            new_eta.push(eta);
            new_ll.push(ll);
        }
        let accepted = self.accept(log_ratio);
        if accepted {
            self.log_s = proposal;
            self.eta = new_eta;
            self.ll = new_ll;
        }
        self.step_log_s.adapt(accepted, target, rate);

        // s -> s*exp(e), z -> z*exp(-e): cell log-odds unchanged.
        if !cells.is_empty() {
            let e = self.step_rescale.scale() * self.normal();
            let factor = (-e).exp();
            let sum_sq: f64 = self.z.iter().map(|z| z * z).sum();
            let log_ratio = self.log_prior_log_s(self.log_s + e) - self.log_prior_log_s(self.log_s)
                - 0.5 * sum_sq * (factor * factor - 1.0)
                - cells.len() as f64 * e;
            let accepted = self.accept(log_ratio);
            if accepted {
                self.log_s += e;
                for z in &mut self.z {
                    *z *= factor;
                }
            }
            self.step_rescale.adapt(accepted, target, rate);
        }
    }

    fn run(mut self) -> (Vec<Vec<f64>>, Vec<f64>) {
        for t in 0..self.config.warmup {
            self.sweep(Some((t as f64 + 1.0).powf(-0.6)));
        }
        // Recompute cached state to shed accumulated rounding.
        self.refresh();
        let mut b = vec![Vec::with_capacity(self.config.samples); self.model.n_groups];
        let mut s = Vec::with_capacity(self.config.samples);
        for _ in 0..self.config.samples {
            for _ in 0..self.config.thin {
                self.sweep(None);
            }
            for (g, draws) in b.iter_mut().enumerate() {
                draws.push(self.b[g]);
            }
            s.push(self.s());
        }
        (b, s)
    }
}

/// Runs `config.chains` independent chains in parallel.
pub fn sample(model: &Model, config: &McmcConfig) -> Result<Draws> {
    config.validate()?;
    let results: Vec<(Vec<Vec<f64>>, Vec<f64>)> = (0..config.chains)
        .into_par_iter()
        .map(|chain| Chain::new(model, config, chain).run())
        .collect();
    let (b, s) = results.into_iter().unzip();
    Ok(Draws { b, s })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sigmoid_is_stable() {
        assert!((log_sigmoid(0.0) - 0.5f64.ln()).abs() < 1e-15);
        assert!((log_sigmoid(-800.0) + 800.0).abs() < 1e-9);
        assert!(log_sigmoid(800.0).abs() < 1e-300);
    }

    #[test]
    fn chains_are_reproducible() {
        let model = Model::new(1, vec![ModelCell { group: 0, wins: 7, trials: 10 }], ScaleMode::Free).unwrap();
        let config = McmcConfig { warmup: 100, samples: 50, ..McmcConfig::default() };
        let a = sample(&model, &config).unwrap();
        let b = sample(&model, &config).unwrap();
        assert_eq!(a.b, b.b);
        assert_eq!(a.s, b.s);
        assert_ne!(a.b[0], a.b[1]);
    }

    #[test]
    fn rejects_bad_cells() {
        assert!(Model::new(1, vec![ModelCell { group: 1, wins: 0, trials: 0 }], ScaleMode::Free).is_err());
        assert!(Model::new(1, vec![ModelCell { group: 0, wins: 3, trials: 2 }], ScaleMode::Free).is_err());
    }
}
