use serde::{Deserialize, Serialize};

use crate::backends::{Backend, QueryRequest, Reply};
use crate::corpus::HaystackConfig;
use crate::error::{Error, Result};
use crate::lang::LanguageCode;
use crate::rng::{fnv1a64, SplitMix64};
use crate::util::logistic;

pub const REFUSAL_TEXT: &str = "The provided documents do not say.";

/// Preference log-odds of the mock for `l1` over `l2`. The reverse
/// direction is implied as `-beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasEntry {
    pub l1: LanguageCode,
    pub l2: LanguageCode,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockBiasSpec {
    pub rng_seed: u64,
    #[serde(default)]
    pub detection_rate: f64,
    #[serde(default)]
    pub failure_rate: f64,
    #[serde(default)]
    pub bias: Vec<BiasEntry>,
}

impl MockBiasSpec {
    pub fn unbiased(rng_seed: u64) -> Self {
        Self {
            rng_seed,
            detection_rate: 0.0,
            failure_rate: 0.0,
            bias: Vec::new(),
        }
    }

    pub fn with_bias(mut self, l1: &str, l2: &str, beta: f64) -> Self {
        self.bias.push(BiasEntry {
            l1: LanguageCode::new(l1).expect("valid code"),
            l2: LanguageCode::new(l2).expect("valid code"),
            beta,
        });
        self
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        if !unit(self.detection_rate) || !unit(self.failure_rate) {
            return Err(Error::Config("mock rates must lie in [0, 1]".into()));
        }
        if self.detection_rate + self.failure_rate > 1.0 {
            return Err(Error::Config(
                "mock detection_rate + failure_rate must not exceed 1".into(),
            ));
        }
        for (i, entry) in self.bias.iter().enumerate() {
            if entry.l1 == entry.l2 {
                return Err(Error::Config(format!(
                    "mock bias[{i}]: languages must differ ({})",
                    entry.l1
                )));
            }
            if !entry.beta.is_finite() {
                return Err(Error::Config(format!("mock bias[{i}]: beta must be finite")));
            }
            for other in &self.bias[..i] {
                let same = other.l1 == entry.l1 && other.l2 == entry.l2;
                let mirrored = other.l1 == entry.l2 && other.l2 == entry.l1;
                if (same && other.beta != entry.beta) || (mirrored && other.beta != -entry.beta) {
                    return Err(Error::Config(format!(
                        "mock bias[{i}]: contradicts an earlier entry for {}/{}",
                        entry.l1, entry.l2
                    )));
                }
            }
        }
        Ok(())
    }

    /// β(l1, l2); antisymmetric by construction, 0 when unspecified.
    pub fn beta(&self, l1: &LanguageCode, l2: &LanguageCode) -> f64 {
        for entry in &self.bias {
            if &entry.l1 == l1 && &entry.l2 == l2 {
                return entry.beta;
            }
            if &entry.l1 == l2 && &entry.l2 == l1 {
                return -entry.beta;
            }
        }
        0.0
    }
}

/// Deterministic synthetic answer.
///
/// Both members of a contrastive pair read the same draw `u`, so the
/// surname presented in the lexicographically lower language is chosen in
/// both members with probability `logistic(β(lower, higher))` and the
/// pair-level log-odds of a language win equal β.
pub fn mock_answer(
    spec: &MockBiasSpec,
    config: &HaystackConfig,
    first_name: &str,
    prompt_lang: &LanguageCode,
) -> String {
    let (lo, hi) = if config.l1 <= config.l2 {
        (&config.l1, &config.l2)
    } else {
        (&config.l2, &config.l1)
    };
    let key = format!("{}|{}|{}|{}|{}", spec.rng_seed, config.seed, prompt_lang, lo, hi);
    let mut rng = SplitMix64::new(fnv1a64(&key));
    let r = rng.unit_f64();
    if r < spec.detection_rate {
        return format!(
            "The documents disagree: one names {first_name} {}, another names {first_name} {}.",
            config.x1, config.x2
        );
    }
    if r < spec.detection_rate + spec.failure_rate {
        return REFUSAL_TEXT.to_string();
    }
    let u = rng.unit_f64();
    let surname = if !config.is_conflicting() {
        &config.x1
    } else if config.is_monolingual() {
        if u < 0.5 {
            &config.x1
        } else {
            &config.x2
        }
    } else {
        let lower_wins = u < logistic(spec.beta(lo, hi));
        // x1 is presented in l1.
        if lower_wins == (&config.l1 == lo) {
            &config.x1
        } else {
            &config.x2
        }
    };
    format!("{first_name} {surname}")
}

#[derive(Debug, Clone)]
pub struct MockBackend {
    id: String,
    spec: MockBiasSpec,
}

impl MockBackend {
    pub fn new(id: String, spec: MockBiasSpec) -> Self {
        Self { id, spec }
    }
}

impl Backend for MockBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn send(&self, request: &QueryRequest<'_>) -> Result<Reply> {
        Ok(Reply {
            text: Some(mock_answer(
                &self.spec,
                request.config,
                request.first_name,
                request.prompt_lang,
            )),
            usage: None,
            attempts: 1,
            error: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lang(code: &str) -> LanguageCode {
        LanguageCode::new(code).unwrap()
    }

    fn config(l1: &str, l2: &str, x1: &str, x2: &str, seed: u64) -> HaystackConfig {
        HaystackConfig {
            category: 1,
            l1: lang(l1),
            l2: lang(l2),
            x1: x1.into(),
            x2: x2.into(),
            y: "Cinderfax".into(),
            size_budget: 1000,
            seed,
        }
    }

    fn x1_frequency(spec: &MockBiasSpec, l1: &str, l2: &str, n: usize) -> f64 {
        let mut seeds = SplitMix64::new(0xfeed);
        let prompt_langs = ["cmn", "deu", "eng", "rus", "tur"].map(lang);
        let mut hits = 0;
        for i in 0..n {
            let c = config(l1, l2, "Delcroft", "Quellman", seeds.next_u64());
            if mock_answer(spec, &c, "John", &prompt_langs[i % 5]) == "John Delcroft" {
                hits += 1;
            }
        }
        hits as f64 / n as f64
    }

    #[test]
    fn deterministic() {
        let spec = MockBiasSpec::unbiased(3).with_bias("cmn", "rus", 1.0);
        let c = config("cmn", "rus", "Delcroft", "Quellman", 99);
        let a = mock_answer(&spec, &c, "John", &lang("eng"));
        assert_eq!(a, mock_answer(&spec, &c, "John", &lang("eng")));
    }

    #[test]
    fn saturated_bias_always_picks_l1_surname() {
        let spec = MockBiasSpec::unbiased(1).with_bias("eng", "cmn", 50.0);
        for seed in 0..200 {
            let a = config("eng", "cmn", "Delcroft", "Quellman", seed);
            assert_eq!(mock_answer(&spec, &a, "John", &lang("deu")), "John Delcroft");
            // Swapped member: Quellman is now presented in eng.
            let b = a.swapped();
            assert_eq!(mock_answer(&spec, &b, "John", &lang("deu")), "John Quellman");
        }
    }

    #[test]
    fn zero_bias_is_a_fair_coin() {
        let f = x1_frequency(&MockBiasSpec::unbiased(11), "deu", "tur", 10_000);
        assert!((0.48..=0.52).contains(&f), "{f}");
    }

    #[test]
    fn beta_two_matches_logistic() {
        let spec = MockBiasSpec::unbiased(5).with_bias("deu", "tur", 2.0);
        let f = x1_frequency(&spec, "deu", "tur", 10_000);
        let expected = 1.0 / (1.0 + (-2.0f64).exp());
        assert!((expected - 0.8808).abs() < 1e-4);
        assert!((f - expected).abs() <= 0.01, "{f}");
        // Antisymmetry: presenting x1 in the other language flips to 1 - p.
        let g = x1_frequency(&spec, "tur", "deu", 10_000);
        assert!((g - (1.0 - expected)).abs() <= 0.01, "{g}");
    }

    #[test]
    fn beta_is_antisymmetric() {
        let spec = MockBiasSpec::unbiased(0).with_bias("rus", "cmn", 1.5);
        assert_eq!(spec.beta(&lang("rus"), &lang("cmn")), 1.5);
        assert_eq!(spec.beta(&lang("cmn"), &lang("rus")), -1.5);
        assert_eq!(spec.beta(&lang("cmn"), &lang("eng")), 0.0);
    }

    #[test]
    fn contradictory_entries_rejected() {
        let spec = MockBiasSpec::unbiased(0)
            .with_bias("rus", "cmn", 1.5)
            .with_bias("cmn", "rus", 1.5);
        assert!(spec.validate().is_err());
        let ok = MockBiasSpec::unbiased(0)
            .with_bias("rus", "cmn", 1.5)
            .with_bias("cmn", "rus", -1.5);
        assert!(ok.validate().is_ok());
        let mut rates = MockBiasSpec::unbiased(0);
        rates.detection_rate = 0.7;
        rates.failure_rate = 0.4;
        assert!(rates.validate().is_err());
    }

    #[test]
    fn detection_and_failure_saturate() {
        let mut spec = MockBiasSpec::unbiased(2);
        spec.detection_rate = 1.0;
        let c = config("eng", "cmn", "Delcroft", "Quellman", 4);
        let text = mock_answer(&spec, &c, "Paul", &lang("eng"));
        assert!(text.contains("Paul Delcroft") && text.contains("Paul Quellman"));
        spec.detection_rate = 0.0;
        spec.failure_rate = 1.0;
        assert_eq!(mock_answer(&spec, &c, "Paul", &lang("eng")), REFUSAL_TEXT);
    }

    #[test]
    fn non_conflicting_returns_sole_surname() {
        let spec = MockBiasSpec::unbiased(8).with_bias("eng", "cmn", -3.0);
        for seed in 0..50 {
            let c = config("eng", "cmn", "Pikehart", "Pikehart", seed);
            assert_eq!(mock_answer(&spec, &c, "George", &lang("tur")), "George Pikehart");
        }
    }
}
