use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::backends::Origin;
use crate::classify::{PairResult, PairTag};
use crate::lang::LanguageCode;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    /// Canonical direction: `l1 < l2`.
    pub l1: LanguageCode,
    pub l2: LanguageCode,
    pub prompt_lang: LanguageCode,
    pub backend_id: String,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellDataset {
    pub key: CellKey,
    pub wins_l1: u32,
    pub wins_l2: u32,
}

impl CellDataset {
    pub fn n(&self) -> u32 {
        self.wins_l1 + self.wins_l2
    }

    /// The same cell with every win label flipped.
    pub fn flipped(&self) -> Self {
        Self {
            key: self.key.clone(),
            wins_l1: self.wins_l2,
            wins_l2: self.wins_l1,
        }
    }
}

/// Aggregates pair results of one size into cells. Every observed
/// (pair, prompt language, backend) combination yields a cell, even when
/// all its pairs were discarded.
pub fn build_cells(pairs: &[PairResult], size: usize) -> Vec<CellDataset> {
    let mut cells: BTreeMap<CellKey, (u32, u32)> = BTreeMap::new();
    for pair in pairs.iter().filter(|p| p.size == size) {
        let (l1, l2, flip) = if pair.l1 <= pair.l2 {
            (pair.l1.clone(), pair.l2.clone(), false)
        } else {
            (pair.l2.clone(), pair.l1.clone(), true)
        };
        let entry = cells
            .entry(CellKey {
                l1,
                l2,
                prompt_lang: pair.prompt_lang.clone(),
                backend_id: pair.backend_id.clone(),
                origin: pair.origin,
            })
            .or_default();
        match (pair.tag, flip) {
            (PairTag::L1Win, false) | (PairTag::L2Win, true) => entry.0 += 1,
            (PairTag::L2Win, false) | (PairTag::L1Win, true) => entry.1 += 1,
            _ => {}
        }
    }
    cells
        .into_iter()
        .map(|(key, (wins_l1, wins_l2))| CellDataset { key, wins_l1, wins_l2 })
        .collect()
}
