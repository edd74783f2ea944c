use serde::{Deserialize, Serialize};

use crate::corpus::{HaystackConfig, NeedleSet};
use crate::error::Result;
use crate::lang::LanguageCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptMode {
    /// One user message: haystack, blank line, question.
    Chat,
    /// Plain continuation ending in `Answer:`.
    Completion,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub mode: PromptMode,
    pub prompt_lang: LanguageCode,
    pub strict_format: bool,
    pub text: String,
    /// The question alone, entity substituted, without the strict sentence.
    pub question_text: String,
}

pub fn build_prompt(
    haystack_text: &str,
    config: &HaystackConfig,
    needles: &NeedleSet,
    prompt_lang: &LanguageCode,
    mode: PromptMode,
    strict_format: bool,
) -> Result<Prompt> {
    let (question, strict) = needles.render_question(config.category, prompt_lang, &config.y)?;
    let mut asked = question.clone();
    if strict_format {
        if let Some(sentence) = strict {
            asked.push_str(needles.separator(prompt_lang));
            asked.push_str(&sentence);
        }
    }
    let text = match mode {
        PromptMode::Chat => format!("{haystack_text}\n\n{asked}"),
        PromptMode::Completion => format!("{haystack_text}\n\nQuestion: {asked}\n\nAnswer:"),
    };
    Ok(Prompt {
        mode,
        prompt_lang: prompt_lang.clone(),
        strict_format,
        text,
        question_text: question,
    })
}

#[cfg(test)]
mod tests {
    use std::path::Path;

    use super::*;

    fn needles() -> NeedleSet {
        NeedleSet::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/needles.toml")).unwrap()
    }

    fn config() -> HaystackConfig {
        HaystackConfig {
            category: 1,
            l1: LanguageCode::new("eng").unwrap(),
            l2: LanguageCode::new("cmn").unwrap(),
            x1: "Delcroft".into(),
            x2: "Quellman".into(),
            y: "Cinderfax".into(),
            size_budget: 1000,
            seed: 0,
        }
    }

    #[test]
    fn strict_chat_prompt() {
        let eng = LanguageCode::new("eng").unwrap();
        let p = build_prompt("HAY", &config(), &needles(), &eng, PromptMode::Chat, true).unwrap();
        assert_eq!(
            p.text,
            "HAY\n\nWho was the original lead vocalist of Cinderfax? \
             Answer with only the full name of the lead vocalist."
        );
        assert_eq!(p.question_text, "Who was the original lead vocalist of Cinderfax?");
    }

    #[test]
    fn completion_prompt_ends_with_answer() {
        let rus = LanguageCode::new("rus").unwrap();
        let p = build_prompt("HAY", &config(), &needles(), &rus, PromptMode::Completion, false)
            .unwrap();
        assert!(p.text.starts_with("HAY\n\nQuestion: "));
        assert!(p.text.ends_with("?\n\nAnswer:"));
    }

    #[test]
    fn open_prompt_only_drops_the_strict_sentence() {
        let n = needles();
        for code in ["cmn", "deu", "eng", "rus", "tur"] {
            let lang = LanguageCode::new(code).unwrap();
            for mode in [PromptMode::Chat, PromptMode::Completion] {
                let strict = build_prompt("HAY", &config(), &n, &lang, mode, true).unwrap();
                let open = build_prompt("HAY", &config(), &n, &lang, mode, false).unwrap();
                let (_, sentence) = n.render_question(1, &lang, "Cinderfax").unwrap();
                let removed = format!("{}{}", n.separator(&lang), sentence.unwrap());
                assert_eq!(strict.text.replacen(&removed, "", 1), open.text);
            }
        }
    }

    #[test]
    fn missing_question_translation_is_a_corpus_error() {
        let fin = LanguageCode::new("fin").unwrap();
        let err = build_prompt("HAY", &config(), &needles(), &fin, PromptMode::Chat, true)
            .unwrap_err();
        assert!(matches!(err, crate::Error::Corpus(_)));
    }
}
