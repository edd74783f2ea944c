//! Outcome taxonomy for single answers and contrastive pairs.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::backends::Origin;
use crate::corpus::{ConfigGroup, HaystackConfig, NeedleSet};
use crate::error::{Error, Result};
use crate::lang::LanguageCode;
use crate::runner::QueryRecord;
use crate::util;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    X1,
    X2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "tag", content = "which", rename_all = "lowercase")]
pub enum Outcome {
    Both,
    None,
    One(Which),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairTag {
    L1Win,
    L2Win,
    SameSurname,
    Discard,
}

fn is_latin_letter(c: char) -> bool {
    c.is_ascii_alphabetic() || ('\u{00C0}'..='\u{024F}').contains(&c)
}

/// Case-insensitive occurrence of `variant` in `haystack` (both already
/// lowercased). Latin-script variants must stand as whole words.
fn occurs(haystack: &str, variant: &str) -> bool {
    if variant.is_empty() {
        return false;
    }
    let latin = variant.chars().all(|c| is_latin_letter(c) || c == '-' || c == ' ');
    if !latin {
        return haystack.contains(variant);
    }
    haystack.match_indices(variant).any(|(start, m)| {
        let before = haystack[..start].chars().next_back();
        let after = haystack[start + m.len()..].chars().next();
        !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
    })
}

fn any_occurs(lowered: &str, variants: &[String]) -> bool {
    variants.iter().any(|v| occurs(lowered, &v.to_lowercase()))
}

pub fn classify_output(text: &str, x1_variants: &[String], x2_variants: &[String]) -> Outcome {
    let lowered = text.to_lowercase();
    match (any_occurs(&lowered, x1_variants), any_occurs(&lowered, x2_variants)) {
        (true, true) => Outcome::Both,
        (true, false) => Outcome::One(Which::X1),
        (false, true) => Outcome::One(Which::X2),
        (false, false) => Outcome::None,
    }
}

/// `a` is the member presenting x1 in the canonical l1, `b` its swap.
pub fn classify_pair(a: Outcome, b: Outcome) -> PairTag {
    use Outcome::One;
    match (a, b) {
        (One(Which::X1), One(Which::X2)) => PairTag::L1Win,
        (One(Which::X2), One(Which::X1)) => PairTag::L2Win,
        (One(x), One(y)) if x == y => PairTag::SameSurname,
        _ => PairTag::Discard,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedRecord {
    pub run_id: String,
    pub config_id: String,
    #[serde(flatten)]
    pub config: HaystackConfig,
    pub group: ConfigGroup,
    pub prompt_lang: LanguageCode,
    pub backend_id: String,
    pub origin: Origin,
    pub outcome: Outcome,
}

impl ClassifiedRecord {
    fn sort_key(&self) -> (String, usize, String, LanguageCode) {
        (
            self.backend_id.clone(),
            self.config.size_budget,
            self.config_id.clone(),
            self.prompt_lang.clone(),
        )
    }
}

pub fn classify_record(record: &QueryRecord, needles: &NeedleSet) -> Result<ClassifiedRecord> {
    let outcome = match (&record.response_text, &record.error) {
        (Some(text), None) => {
            let x1 = needles.surname_variants(&record.config.x1)?;
            if record.config.is_conflicting() {
                let x2 = needles.surname_variants(&record.config.x2)?;
                classify_output(text, &x1, &x2)
            } else {
                classify_output(text, &x1, &[])
            }
        }
        _ => Outcome::None,
    };
    Ok(ClassifiedRecord {
        run_id: record.run_id.clone(),
        config_id: record.config_id.clone(),
        config: record.config.clone(),
        group: record.config.group(),
        prompt_lang: record.prompt_lang.clone(),
        backend_id: record.backend_id.clone(),
        origin: record.origin,
        outcome,
    })
}

/// Classifies all records, sorted by (backend, size, config, prompt language).
pub fn classify_records(records: &[QueryRecord], needles: &NeedleSet) -> Result<Vec<ClassifiedRecord>> {
    let mut out = records
        .iter()
        .map(|r| classify_record(r, needles))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by_key(ClassifiedRecord::sort_key);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairResult {
    pub pair_id: String,
    pub size: usize,
    pub prompt_lang: LanguageCode,
    pub backend_id: String,
    pub origin: Origin,
    /// Canonical (lexicographically lower) language.
    pub l1: LanguageCode,
    pub l2: LanguageCode,
    pub tag: PairTag,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PairingStats {
    pub pairs: usize,
    /// Members whose twin has no record (e.g. an interrupted run).
    pub unmatched: usize,
}

/// Reduces bilingual conflicting records to one tag per contrastive pair,
/// prompt language and backend.
pub fn build_pair_results(classified: &[ClassifiedRecord]) -> Result<(Vec<PairResult>, PairingStats)> {
    let bilingual: Vec<&ClassifiedRecord> = classified
        .iter()
        .filter(|r| r.group == ConfigGroup::BilingualConflicting)
        .collect();
    let mut index: HashMap<(&str, usize, &LanguageCode, &str), &ClassifiedRecord> = HashMap::new();
    for record in &bilingual {
        let key = (
            record.backend_id.as_str(),
            record.config.size_budget,
            &record.prompt_lang,
            record.config_id.as_str(),
        );
        if index.insert(key, record).is_some() {
            return Err(Error::Invariant(format!(
                "duplicate classified record {} / {} / {}",
                record.backend_id, record.config_id, record.prompt_lang
            )));
        }
    }
    let mut stats = PairingStats::default();
    let mut pairs = Vec::new();
    for a in &bilingual {
        if a.config.l1 > a.config.l2 {
            continue;
        }
        let twin_id = a.config.swapped().id();
        let key = (
            a.backend_id.as_str(),
            a.config.size_budget,
            &a.prompt_lang,
            twin_id.as_str(),
        );
        let Some(b) = index.get(&key) else {
            stats.unmatched += 1;
            continue;
        };
        pairs.push(PairResult {
            pair_id: a.config_id.clone(),
            size: a.config.size_budget,
            prompt_lang: a.prompt_lang.clone(),
            backend_id: a.backend_id.clone(),
            origin: a.origin,
            l1: a.config.l1.clone(),
            l2: a.config.l2.clone(),
            tag: classify_pair(a.outcome, b.outcome),
        });
    }
    stats.unmatched += bilingual.iter().filter(|r| r.config.l1 > r.config.l2).count() - pairs.len();
    if stats.unmatched > 0 {
        warn!("{} bilingual records have no language-swapped twin", stats.unmatched);
    }
    pairs.sort_by(|x, y| {
        (&x.backend_id, x.size, &x.pair_id, &x.prompt_lang).cmp(&(&y.backend_id, y.size, &y.pair_id, &y.prompt_lang))
    });
    stats.pairs = pairs.len();
    Ok((pairs, stats))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    Monolingual,
    Multilingual,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub both: usize,
    pub none: usize,
    pub one: usize,
}

impl OutcomeCounts {
    pub fn total(&self) -> usize {
        self.both + self.none + self.one
    }
}

/// Counts over conflicting records keyed by (backend, size, subset).
pub fn outcome_summary(classified: &[ClassifiedRecord]) -> BTreeMap<(String, usize, Subset), OutcomeCounts> {
    let mut out: BTreeMap<(String, usize, Subset), OutcomeCounts> = BTreeMap::new();
    for record in classified.iter().filter(|r| r.config.is_conflicting()) {
        let subset = if record.config.is_monolingual() {
            Subset::Monolingual
        } else {
            Subset::Multilingual
        };
        let counts = out
            .entry((record.backend_id.clone(), record.config.size_budget, subset))
            .or_default();
        match record.outcome {
            Outcome::Both => counts.both += 1,
            Outcome::None => counts.none += 1,
            Outcome::One(_) => counts.one += 1,
        }
    }
    out
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    util::write_atomic(path, out.as_bytes())
}

pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path, producer: &str) -> Result<Vec<T>> {
    if !path.exists() {
        return Err(Error::MissingArtifact {
            path: path.to_path_buf(),
            subcommand: producer.into(),
        });
    }
    util::read_to_string(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| Error::StoreCorrupt {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// One hand-labelled response from a fixtures file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureCase {
    pub x1: String,
    pub x2: String,
    pub text: String,
    pub expected: FixtureLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixtureLabel {
    X1,
    X2,
    Both,
    None,
}

impl FixtureLabel {
    pub fn outcome(self) -> Outcome {
        match self {
            FixtureLabel::X1 => Outcome::One(Which::X1),
            FixtureLabel::X2 => Outcome::One(Which::X2),
            FixtureLabel::Both => Outcome::Both,
            FixtureLabel::None => Outcome::None,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FixtureFile {
    case: Vec<FixtureCase>,
}

pub fn load_fixtures(path: &Path) -> Result<Vec<FixtureCase>> {
    let text = util::read_to_string(path)?;
    Ok(util::parse_toml::<FixtureFile>(path, &text)?.case)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn spec_examples() {
        let x1 = v(&["Delcroft", "Делкрофт"]);
        let x2 = v(&["Quellman", "Квеллман"]);
        assert_eq!(classify_output("John Delcroft", &x1, &x2), Outcome::One(Which::X1));
        assert_eq!(
            classify_output("Sources disagree: John Delcroft or John Quellman.", &x1, &x2),
            Outcome::Both
        );
        assert_eq!(classify_output("The text does not say.", &x1, &x2), Outcome::None);
        assert_eq!(classify_output("Джон Квеллмана", &x1, &x2), Outcome::One(Which::X2));
    }

    #[test]
    fn latin_variants_need_word_boundaries() {
        let x1 = v(&["Delcroft"]);
        let x2 = v(&["Quellman"]);
        assert_eq!(classify_output("Delcrofton Quellmann", &x1, &x2), Outcome::None);
        assert_eq!(classify_output("DELCROFT.", &x1, &x2), Outcome::One(Which::X1));
        assert_eq!(classify_output("Delcroft'un", &x1, &x2), Outcome::One(Which::X1));
        assert_eq!(classify_output("约翰·Quellman", &x1, &x2), Outcome::One(Which::X2));
    }

    #[test]
    fn bundled_fixtures_agree_with_labels() {
        let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
        let needles = NeedleSet::load(&data.join("needles.toml")).unwrap();
        let cases = load_fixtures(&data.join("classification_fixtures.toml")).unwrap();
        assert!(cases.len() >= 30);
        for case in cases {
            let x1 = needles.surname_variants(&case.x1).unwrap();
            let x2 = needles.surname_variants(&case.x2).unwrap();
            assert_eq!(classify_output(&case.text, &x1, &x2), case.expected.outcome(), "{}", case.text);
        }
    }

    #[test]
    fn pair_table() {
        use Outcome::*;
        let (x1, x2) = (One(Which::X1), One(Which::X2));
        assert_eq!(classify_pair(x1, x2), PairTag::L1Win);
        assert_eq!(classify_pair(x2, x1), PairTag::L2Win);
        assert_eq!(classify_pair(x1, x1), PairTag::SameSurname);
        assert_eq!(classify_pair(x2, x2), PairTag::SameSurname);
        assert_eq!(classify_pair(Both, x1), PairTag::Discard);
        assert_eq!(classify_pair(x2, None), PairTag::Discard);
        assert_eq!(classify_pair(None, None), PairTag::Discard);
    }

    #[test]
    fn outcome_serialization() {
        let json = serde_json::to_string(&Outcome::One(Which::X2)).unwrap();
        assert_eq!(json, r#"{"tag":"one","which":"x2"}"#);
        assert_eq!(serde_json::to_string(&Outcome::Both).unwrap(), r#"{"tag":"both"}"#);
        let back: Outcome = serde_json::from_str(r#"{"tag":"none"}"#).unwrap();
        assert_eq!(back, Outcome::None);
    }
}
