//! Needle templates, questions and the registered value sets.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::lang::LanguageCode;
use crate::util;

pub const SURNAME_PLACEHOLDER: &str = "SURNAME";
pub const ENTITY_PLACEHOLDER: &str = "ENTITY";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NeedleFile {
    entities: Vec<String>,
    languages: BTreeMap<LanguageCode, LanguageEntry>,
    surnames: Vec<SurnameEntry>,
    categories: Vec<CategoryEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LanguageEntry {
    name: Option<String>,
    separator: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SurnameEntry {
    name: String,
    #[serde(default)]
    variants: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CategoryEntry {
    id: u8,
    role: String,
    first_name: String,
    question: BTreeMap<LanguageCode, String>,
    #[serde(default)]
    strict: BTreeMap<LanguageCode, String>,
    needles: Vec<NeedleEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NeedleEntry {
    article: String,
    paragraph: usize,
    template: BTreeMap<LanguageCode, String>,
}

#[derive(Debug, Clone)]
pub struct LanguageInfo {
    pub name: String,
    /// Joins consecutive sentences (space for most scripts, empty for Chinese).
    pub separator: String,
}

#[derive(Debug, Clone)]
pub struct Surname {
    pub name: String,
    /// Display variants (transliterations) accepted when classifying output.
    pub variants: Vec<String>,
}

/// One needle sentence anchored at an article paragraph.
#[derive(Debug, Clone)]
pub struct NeedleTemplate {
    pub category: u8,
    pub target_article: String,
    /// 1-based paragraph index.
    pub target_paragraph: usize,
    pub template_per_language: BTreeMap<LanguageCode, String>,
}

#[derive(Debug, Clone)]
pub struct Category {
    pub id: u8,
    pub role_noun: String,
    pub first_name: String,
    pub question_per_language: BTreeMap<LanguageCode, String>,
    pub strict_per_language: BTreeMap<LanguageCode, String>,
    pub templates: [NeedleTemplate; 2],
}

/// Categories, surnames and entities that configurations may draw from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueSets {
    pub categories: Vec<u8>,
    pub surnames: Vec<String>,
    pub entities: Vec<String>,
}

impl ValueSets {
    /// The reference haystack configuration values.
    pub fn standard() -> Self {
        Self {
            categories: vec![1, 2, 3, 4],
            surnames: ["Delcroft", "Quellman", "Pikehart"].map(String::from).to_vec(),
            entities: [
                "Cinderfax",
                "Noiseweld",
                "Motelvine",
                "Brovencia",
                "Clevantra",
                "Teraluxis",
            ]
            .map(String::from)
            .to_vec(),
        }
    }

    pub fn check_surname(&self, surname: &str) -> Result<()> {
        if self.surnames.iter().any(|s| s == surname) {
            Ok(())
        } else {
            Err(Error::Config(format!("unknown surname `{surname}`")))
        }
    }

    pub fn check_entity(&self, entity: &str) -> Result<()> {
        if self.entities.iter().any(|e| e == entity) {
            Ok(())
        } else {
            Err(Error::Config(format!("unknown entity `{entity}`")))
        }
    }

    pub fn check_category(&self, category: u8) -> Result<()> {
        if self.categories.contains(&category) {
            Ok(())
        } else {
            Err(Error::Config(format!("unknown needle category {category}")))
        }
    }
}

#[derive(Debug, Clone)]
pub struct NeedleSet {
    pub languages: BTreeMap<LanguageCode, LanguageInfo>,
    pub surnames: Vec<Surname>,
    pub entities: Vec<String>,
    pub categories: BTreeMap<u8, Category>,
}

fn count(haystack: &str, needle: &str) -> usize {
    haystack.matches(needle).count()
}

impl NeedleSet {
    pub fn load(path: &Path) -> Result<Self> {
        let text = util::read_to_string(path)?;
        let file: NeedleFile = util::parse_toml(path, &text)?;
        Self::from_file(file)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: NeedleFile = util::parse_toml(Path::new("<inline>"), text)?;
        Self::from_file(file)
    }

    fn from_file(file: NeedleFile) -> Result<Self> {
        let languages = file
            .languages
            .into_iter()
            .map(|(code, entry)| {
                let info = LanguageInfo {
                    name: entry.name.unwrap_or_else(|| code.display_name().to_string()),
                    separator: entry.separator.unwrap_or_else(|| " ".to_string()),
                };
                (code, info)
            })
            .collect::<BTreeMap<_, _>>();
        if languages.is_empty() {
            return Err(Error::Config("needle file declares no languages".into()));
        }
        if file.entities.is_empty() || file.surnames.is_empty() {
            return Err(Error::Config(
                "needle file needs at least one entity and one surname".into(),
            ));
        }

        let surnames: Vec<Surname> = file
            .surnames
            .into_iter()
            .map(|s| Surname {
                name: s.name,
                variants: s.variants,
            })
            .collect();
        check_variants_disjoint(&surnames)?;

        let mut categories = BTreeMap::new();
        for entry in file.categories {
            let id = entry.id;
            if entry.needles.len() != 2 {
                return Err(Error::Config(format!(
                    "category {id} must define exactly 2 needle templates, found {}",
                    entry.needles.len()
                )));
            }
            for (lang, question) in &entry.question {
                if count(question, ENTITY_PLACEHOLDER) != 1 {
                    return Err(Error::Config(format!(
                        "category {id} question ({lang}) must contain {ENTITY_PLACEHOLDER} exactly once"
                    )));
                }
            }
            let mut templates = Vec::with_capacity(2);
            for needle in entry.needles {
                if needle.paragraph == 0 {
                    return Err(Error::Config(format!(
                        "category {id}: paragraph indices are 1-based"
                    )));
                }
                for (lang, text) in &needle.template {
                    if count(text, SURNAME_PLACEHOLDER) != 1 || count(text, ENTITY_PLACEHOLDER) != 1 {
                        return Err(Error::Config(format!(
                            "category {id} template for {} ({lang}) must contain {SURNAME_PLACEHOLDER} and {ENTITY_PLACEHOLDER} exactly once",
                            needle.article
                        )));
                    }
                }
                templates.push(NeedleTemplate {
                    category: id,
                    target_article: needle.article,
                    target_paragraph: needle.paragraph,
                    template_per_language: needle.template,
                });
            }
            let templates: [NeedleTemplate; 2] = templates
                .try_into()
                .map_err(|_| Error::Invariant("template count checked above".into()))?;
            if templates[0].target_article == templates[1].target_article {
                return Err(Error::Config(format!(
                    "category {id}: both needles target the same article"
                )));
            }
            let category = Category {
                id,
                role_noun: entry.role,
                first_name: entry.first_name,
                question_per_language: entry.question,
                strict_per_language: entry.strict,
                templates,
            };
            if categories.insert(id, category).is_some() {
                return Err(Error::Config(format!("duplicate category {id}")));
            }
        }
        if categories.is_empty() {
            return Err(Error::Config("needle file declares no categories".into()));
        }

        Ok(Self {
            languages,
            surnames,
            entities: file.entities,
            categories,
        })
    }

    pub fn value_sets(&self) -> ValueSets {
        ValueSets {
            categories: self.categories.keys().copied().collect(),
            surnames: self.surnames.iter().map(|s| s.name.clone()).collect(),
            entities: self.entities.clone(),
        }
    }

    pub fn registered_languages(&self) -> Vec<LanguageCode> {
        self.languages.keys().cloned().collect()
    }

    pub fn category(&self, id: u8) -> Result<&Category> {
        self.categories
            .get(&id)
            .ok_or_else(|| Error::Config(format!("unknown needle category {id}")))
    }

    pub fn separator(&self, lang: &LanguageCode) -> &str {
        self.languages
            .get(lang)
            .map(|l| l.separator.as_str())
            .unwrap_or(" ")
    }

    pub fn surname(&self, name: &str) -> Result<&Surname> {
        self.surnames
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::Config(format!("unknown surname `{name}`")))
    }

    /// Latin surname plus its registered display variants.
    pub fn surname_variants(&self, name: &str) -> Result<Vec<String>> {
        let surname = self.surname(name)?;
        let mut all = vec![surname.name.clone()];
        all.extend(surname.variants.iter().cloned());
        Ok(all)
    }

    /// Renders needle `index` (0 or 1) of a category.
    pub fn render_needle(
        &self,
        category: u8,
        index: usize,
        lang: &LanguageCode,
        surname: &str,
        entity: &str,
    ) -> Result<String> {
        let template = &self.category(category)?.templates[index];
        let text = template.template_per_language.get(lang).ok_or_else(|| {
            Error::Corpus(format!(
                "needle template for article {} has no {lang} translation",
                template.target_article
            ))
        })?;
        Ok(text
            .replace(SURNAME_PLACEHOLDER, surname)
            .replace(ENTITY_PLACEHOLDER, entity))
    }

    /// Question with the entity substituted, and the optional strict-format
    /// sentence.
    pub fn render_question(
        &self,
        category: u8,
        lang: &LanguageCode,
        entity: &str,
    ) -> Result<(String, Option<String>)> {
        let cat = self.category(category)?;
        let question = cat.question_per_language.get(lang).ok_or_else(|| {
            Error::Corpus(format!("category {category} has no {lang} question"))
        })?;
        Ok((
            question.replace(ENTITY_PLACEHOLDER, entity),
            cat.strict_per_language.get(lang).cloned(),
        ))
    }
}

fn check_variants_disjoint(surnames: &[Surname]) -> Result<()> {
    let mut seen: BTreeMap<String, &str> = BTreeMap::new();
    for surname in surnames {
        for variant in std::iter::once(&surname.name).chain(&surname.variants) {
            let key = variant.to_lowercase();
            if key.is_empty() {
                return Err(Error::Config(format!("empty variant for {}", surname.name)));
            }
            if let Some(owner) = seen.insert(key, &surname.name) {
                if owner != surname.name {
                    return Err(Error::Config(format!(
                        "variant `{variant}` is shared by {owner} and {}",
                        surname.name
                    )));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn bundled() -> NeedleSet {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/needles.toml");
        NeedleSet::load(&path).unwrap()
    }

    #[test]
    fn bundled_file_matches_reference_value_sets() {
        let needles = bundled();
        assert_eq!(needles.value_sets(), ValueSets::standard());
        assert_eq!(needles.categories.len(), 4);
        assert_eq!(needles.registered_languages(), LanguageCode::standard_set());
        for cat in needles.categories.values() {
            for template in &cat.templates {
                assert_eq!(template.template_per_language.len(), 5);
            }
        }
    }

    #[test]
    fn renders_english_needle() {
        let needles = bundled();
        let eng = LanguageCode::new("eng").unwrap();
        let text = needles
            .render_needle(1, 0, &eng, "Delcroft", "Cinderfax")
            .unwrap();
        assert_eq!(
            text,
            "John Delcroft, the original lead vocalist of Cinderfax, praised Rondell's work on the album cover picture."
        );
    }

    #[test]
    fn rejects_template_without_placeholder() {
        let text = r#"
entities = ["Cinderfax"]
[languages.eng]
[[surnames]]
name = "Delcroft"
[[categories]]
id = 1
role = "editor"
first_name = "Paul"
question = { eng = "Who edits ENTITY?" }
[[categories.needles]]
article = "a"
paragraph = 1
template = { eng = "Paul SURNAME edits it." }
[[categories.needles]]
article = "b"
paragraph = 1
template = { eng = "ENTITY is edited by Paul SURNAME." }
"#;
        let err = NeedleSet::from_toml_str(text).unwrap_err();
        assert!(err.to_string().contains("exactly once"), "{err}");
    }

    #[test]
    fn schema_errors_name_the_key() {
        let text = r#"
entities = ["Cinderfax"]
[languages.eng]
[[surnames]]
name = "Delcroft"
[[categories]]
id = "one"
"#;
        let err = NeedleSet::from_toml_str(text).unwrap_err();
        assert!(err.to_string().contains("categories[0].id"), "{err}");
    }

    #[test]
    fn overlapping_variants_are_rejected() {
        let text = r#"
entities = ["Cinderfax"]
[languages.eng]
[[surnames]]
name = "Delcroft"
variants = ["Quellman"]
[[surnames]]
name = "Quellman"
[[categories]]
id = 1
role = "editor"
first_name = "Paul"
question = { eng = "Who edits ENTITY?" }
needles = []
"#;
        assert!(NeedleSet::from_toml_str(text).is_err());
    }
}
