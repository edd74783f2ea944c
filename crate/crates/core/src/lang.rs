use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The five languages of the reference study, in canonical order.
pub const STANDARD_LANGUAGES: [&str; 5] = ["cmn", "deu", "eng", "rus", "tur"];

/// ISO-639-3 style language identifier (lowercase ASCII letters).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LanguageCode(String);

impl LanguageCode {
    pub fn new(code: &str) -> Result<Self> {
        let valid = (2..=8).contains(&code.len()) && code.bytes().all(|b| b.is_ascii_lowercase());
        if !valid {
            return Err(Error::Config(format!(
                "invalid language code `{code}` (expected 2-8 lowercase ASCII letters)"
            )));
        }
        Ok(Self(code.to_owned()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// English display name used in rendered tables.
    pub fn display_name(&self) -> &str {
        match self.0.as_str() {
            "cmn" => "Chinese",
            "deu" => "German",
            "eng" => "English",
            "rus" => "Russian",
            "tur" => "Turkish",
            other => other,
        }
    }

    pub fn standard_set() -> Vec<LanguageCode> {
        STANDARD_LANGUAGES
            .iter()
            .map(|c| LanguageCode(c.to_string()))
            .collect()
    }
}

impl fmt::Display for LanguageCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for LanguageCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LanguageCode::new(s.trim())
    }
}

impl TryFrom<String> for LanguageCode {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        LanguageCode::new(&value)
    }
}

impl From<LanguageCode> for String {
    fn from(code: LanguageCode) -> Self {
        code.0
    }
}

/// Parses a comma-separated language list such as `cmn,deu,eng`.
pub fn parse_language_list(list: &str) -> Result<Vec<LanguageCode>> {
    let mut langs = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(LanguageCode::from_str)
        .collect::<Result<Vec<_>>>()?;
    langs.sort();
    langs.dedup();
    Ok(langs)
}

/// Checks a language set against the replication constraint: in standard
/// mode only the five reference languages are allowed.
pub fn check_language_set(langs: &[LanguageCode], paper_mode: bool) -> Result<()> {
    if langs.is_empty() {
        return Err(Error::Config("at least one language is required".into()));
    }
    if paper_mode {
        if let Some(bad) = langs.iter().find(|l| !STANDARD_LANGUAGES.contains(&l.as_str())) {
            return Err(Error::Config(format!(
                "language `{bad}` is not accepted unless the standard language check is disabled (--no-paper-mode)"
            )));
        }
    }
    Ok(())
}
