//! Exact binomial tests and the hierarchical bias model.

mod binomial;
mod data;
mod diagnostics;
mod sampler;

use std::collections::BTreeMap;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::backends::Origin;
use crate::error::{Error, Result};
use crate::lang::LanguageCode;

pub use binomial::{
    bonferroni_flag, exact_binomial_test, pairwise_tests, win_counts, BinomialTestResult,
    DirectedTest, WinCounts,
};
pub use data::{build_cells, CellDataset, CellKey};
pub use diagnostics::{effective_sample_size, quantile_sorted, split_rhat, ParamSummary};
pub use sampler::{sample, Draws, McmcConfig, Model, ModelCell, ScaleMode};

pub const RHAT_LIMIT: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Pooled,
    ByOrigin,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Pooled => "pooled",
            Variant::ByOrigin => "by-origin",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pooled" => Ok(Variant::Pooled),
            "by-origin" | "by_origin" => Ok(Variant::ByOrigin),
            other => Err(Error::Argument(format!(
                "unknown model variant `{other}` (expected pooled or by-origin)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupKey {
    pub origin: Option<Origin>,
    pub l1: LanguageCode,
    pub l2: LanguageCode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub key: GroupKey,
    pub cells: usize,
    pub wins_l1: u64,
    pub wins_l2: u64,
    pub b: ParamSummary,
}

#[derive(Debug, Clone)]
pub struct PosteriorFit {
    pub variant: Variant,
    pub groups: Vec<GroupSummary>,
    pub scale: ParamSummary,
    /// Every reported R-hat is at most [`RHAT_LIMIT`].
    pub converged: bool,
    pub draws: Draws,
}

impl PosteriorFit {
    pub fn group(&self, key: &GroupKey) -> Option<(usize, &GroupSummary)> {
        self.groups.iter().enumerate().find(|(_, g)| &g.key == key)
    }
}

/// Fits the model with top-level biases per language pair (pooled) or per
/// (origin, language pair).
pub fn fit_hierarchical(cells: &[CellDataset], variant: Variant, config: &McmcConfig) -> Result<PosteriorFit> {
    if cells.is_empty() {
        return Err(Error::Argument("no cells to fit".into()));
    }
    let mut index: BTreeMap<GroupKey, usize> = BTreeMap::new();
    for cell in cells {
        if cell.key.l1 >= cell.key.l2 {
            return Err(Error::Argument(format!(
                "cell {}/{} is not in canonical direction",
                cell.key.l1, cell.key.l2
            )));
        }
        let key = group_key(cell, variant);
        let next = index.len();
        index.entry(key).or_insert(next);
    }
    // Stable, sorted group numbering.
    let keys: Vec<GroupKey> = index.keys().cloned().collect();
    let position: BTreeMap<&GroupKey, usize> = keys.iter().enumerate().map(|(i, k)| (k, i)).collect();

    let mut totals = vec![(0usize, 0u64, 0u64); keys.len()];
    let model_cells: Vec<ModelCell> = cells
        .iter()
        .map(|cell| {
            let g = position[&group_key(cell, variant)];
            totals[g].0 += 1;
            totals[g].1 += cell.wins_l1 as u64;
            totals[g].2 += cell.wins_l2 as u64;
            ModelCell {
                group: g,
                wins: cell.wins_l1,
                trials: cell.n(),
            }
        })
        .collect();
    let model = Model::new(keys.len(), model_cells, ScaleMode::Free)?;
    let draws = sample(&model, config)?;

    let groups: Vec<GroupSummary> = keys
        .into_iter()
        .enumerate()
        .map(|(g, key)| GroupSummary {
            key,
            cells: totals[g].0,
            wins_l1: totals[g].1,
            wins_l2: totals[g].2,
            b: ParamSummary::from_chains(&draws.group(g)),
        })
        .collect();
    let scale = ParamSummary::from_chains(&draws.s);
    let converged = groups.iter().map(|g| g.b.rhat).chain([scale.rhat]).all(|r| r <= RHAT_LIMIT);
    if !converged {
        warn!("{} fit did not converge (R-hat > {RHAT_LIMIT})", variant.as_str());
    }
    Ok(PosteriorFit {
        variant,
        groups,
        scale,
        converged,
        draws,
    })
}

fn group_key(cell: &CellDataset, variant: Variant) -> GroupKey {
    GroupKey {
        origin: match variant {
            Variant::Pooled => None,
            Variant::ByOrigin => Some(cell.key.origin),
        },
        l1: cell.key.l1.clone(),
        l2: cell.key.l2.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Weak,
    Moderate,
    Strong,
}

impl Tier {
    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Weak => "weak",
            Tier::Moderate => "moderate",
            Tier::Strong => "strong",
        }
    }

    pub fn from_sign_probability(p_sign: f64) -> Self {
        if p_sign > 0.99 {
            Tier::Strong
        } else if p_sign > 0.90 {
            Tier::Moderate
        } else {
            Tier::Weak
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OriginContrast {
    pub l1: LanguageCode,
    pub l2: LanguageCode,
    /// Posterior of b[first] - b[second].
    pub difference: ParamSummary,
    pub p_sign: f64,
    pub tier: Tier,
}

/// Sample-wise difference of two origins' biases for every language pair.
/// Both origins must cover the same pairs.
pub fn origin_contrast(fit: &PosteriorFit, first: Origin, second: Origin) -> Result<Vec<OriginContrast>> {
    if fit.variant != Variant::ByOrigin {
        return Err(Error::Argument("origin contrast needs a by-origin fit".into()));
    }
    let pairs_of = |origin: Origin| -> Vec<(LanguageCode, LanguageCode)> {
        fit.groups
            .iter()
            .filter(|g| g.key.origin == Some(origin))
            .map(|g| (g.key.l1.clone(), g.key.l2.clone()))
            .collect()
    };
    let (a, b) = (pairs_of(first), pairs_of(second));
    if a != b || a.is_empty() {
        return Err(Error::Argument(format!(
            "origins {} and {} cover different language pairs ({} vs {})",
            first.as_str(),
            second.as_str(),
            a.len(),
            b.len()
        )));
    }
    a.into_iter()
        .map(|(l1, l2)| {
            let lookup = |origin| {
                fit.group(&GroupKey { origin: Some(origin), l1: l1.clone(), l2: l2.clone() })
                    .map(|(g, _)| g)
                    .ok_or_else(|| Error::Invariant("missing origin group".into()))
            };
            let (ga, gb) = (lookup(first)?, lookup(second)?);
            let chains: Vec<Vec<f64>> = fit
                .draws
                .b
                .iter()
                .map(|chain| chain[ga].iter().zip(&chain[gb]).map(|(x, y)| x - y).collect())
                .collect();
            let difference = ParamSummary::from_chains(&chains);
            let p_sign = difference.p_positive.max(1.0 - difference.p_positive);
            Ok(OriginContrast {
                l1,
                l2,
                tier: Tier::from_sign_probability(p_sign),
                p_sign,
                difference,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lang(code: &str) -> LanguageCode {
        LanguageCode::new(code).unwrap()
    }

    fn cell(l1: &str, l2: &str, p: &str, origin: Origin, w1: u32, w2: u32) -> CellDataset {
        CellDataset {
            key: CellKey {
                l1: lang(l1),
                l2: lang(l2),
                prompt_lang: lang(p),
                backend_id: format!("{}-model", origin.as_str()),
                origin,
            },
            wins_l1: w1,
            wins_l2: w2,
        }
    }

    #[test]
    fn rejects_non_canonical_cells() {
        let cells = vec![cell("rus", "cmn", "eng", Origin::West, 1, 1)];
        assert!(fit_hierarchical(&cells, Variant::Pooled, &McmcConfig::default()).is_err());
    }

    #[test]
    fn tiers() {
        assert_eq!(Tier::from_sign_probability(0.995), Tier::Strong);
        assert_eq!(Tier::from_sign_probability(0.95), Tier::Moderate);
        assert_eq!(Tier::from_sign_probability(0.90), Tier::Weak);
    }

    #[test]
    fn origin_contrast_requires_matching_pairs() {
        let cells = vec![
            cell("cmn", "rus", "eng", Origin::East, 3, 3),
            cell("cmn", "rus", "eng", Origin::West, 3, 3),
            cell("deu", "tur", "eng", Origin::West, 3, 3),
        ];
        let config = McmcConfig { warmup: 50, samples: 20, ..McmcConfig::default() };
        let fit = fit_hierarchical(&cells, Variant::ByOrigin, &config).unwrap();
        assert_eq!(fit.groups.len(), 3);
        assert!(origin_contrast(&fit, Origin::East, Origin::West).is_err());
        let pooled = fit_hierarchical(&cells, Variant::Pooled, &config).unwrap();
        assert!(origin_contrast(&pooled, Origin::East, Origin::West).is_err());
    }
}
