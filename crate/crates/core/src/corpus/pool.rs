//! Parallel article pool: `pool/<article-id>/<lang>.txt`, paragraphs
//! separated by blank lines.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lang::LanguageCode;
use crate::util;

const ENGLISH: &str = "eng";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Article {
    pub id: String,
    pub paragraphs: BTreeMap<LanguageCode, Vec<String>>,
    /// Whitespace-token count of the English version.
    pub english_word_count: usize,
    pub license: String,
}

impl Article {
    pub fn new(
        id: impl Into<String>,
        paragraphs: BTreeMap<LanguageCode, Vec<String>>,
        license: impl Into<String>,
    ) -> Result<Self> {
        let id = id.into();
        let english = paragraphs
            .iter()
            .find(|(lang, _)| lang.as_str() == ENGLISH)
            .map(|(_, p)| p)
            .ok_or_else(|| Error::Corpus(format!("article {id} has no English original")))?;
        let english_word_count = english.iter().map(|p| p.split_whitespace().count()).sum();
        if english_word_count == 0 {
            return Err(Error::Corpus(format!("article {id} has an empty English text")));
        }
        let expected = english.len();
        for (lang, paras) in &paragraphs {
            if paras.len() != expected {
                return Err(Error::Corpus(format!(
                    "article {id}: {lang} has {} paragraphs, English has {expected}",
                    paras.len()
                )));
            }
        }
        Ok(Self {
            id,
            paragraphs,
            english_word_count,
            license: license.into(),
        })
    }

    pub fn paragraphs_in(&self, lang: &LanguageCode) -> Result<&[String]> {
        self.paragraphs
            .get(lang)
            .map(Vec::as_slice)
            .ok_or_else(|| {
                Error::Corpus(format!("article {} has no {lang} translation", self.id))
            })
    }
}

/// Splits a text into paragraphs on blank lines.
pub fn split_paragraphs(text: &str) -> Vec<String> {
    let mut paragraphs = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                paragraphs.push(current.join("\n"));
                current.clear();
            }
        } else {
            current.push(line.trim_end());
        }
    }
    if !current.is_empty() {
        paragraphs.push(current.join("\n"));
    }
    paragraphs
}

/// Articles keyed (and therefore ordered) by id.
#[derive(Debug, Clone, Default)]
pub struct ArticlePool {
    articles: BTreeMap<String, Article>,
}

impl ArticlePool {
    pub fn from_articles(articles: impl IntoIterator<Item = Article>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for article in articles {
            let id = article.id.clone();
            if map.insert(id.clone(), article).is_some() {
                return Err(Error::Corpus(format!("duplicate article id {id}")));
            }
        }
        Ok(Self { articles: map })
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut articles = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(dir, e))?;
            let path = entry.path();
            if !path.is_dir() {
                continue;
            }
            let id = entry.file_name().to_string_lossy().into_owned();
            if id.starts_with('.') {
                continue;
            }
            let mut paragraphs = BTreeMap::new();
            let mut license = String::from("unknown");
            let files = fs::read_dir(&path).map_err(|e| Error::io(&path, e))?;
            for file in files {
                let file = file.map_err(|e| Error::io(&path, e))?;
                let file_path = file.path();
                let name = file.file_name().to_string_lossy().into_owned();
                let Some(stem) = name.strip_suffix(".txt") else {
                    continue;
                };
                let text = util::read_to_string(&file_path)?;
                if stem == "license" {
                    license = text.trim().to_string();
                    continue;
                }
                let lang = LanguageCode::new(stem).map_err(|_| {
                    Error::Corpus(format!("unexpected file {} in pool", file_path.display()))
                })?;
                paragraphs.insert(lang, split_paragraphs(&text));
            }
            articles.push(Article::new(id, paragraphs, license)?);
        }
        if articles.is_empty() {
            return Err(Error::Corpus(format!(
                "article pool {} contains no articles",
                dir.display()
            )));
        }
        Self::from_articles(articles)
    }

    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Article> {
        self.articles.get(id)
    }

    /// Articles in id order; this order indexes the language draws.
    pub fn articles(&self) -> impl Iterator<Item = &Article> {
        self.articles.values()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.articles.keys().position(|k| k == id)
    }

    pub fn total_english_words(&self) -> usize {
        self.articles.values().map(|a| a.english_word_count).sum()
    }
}
