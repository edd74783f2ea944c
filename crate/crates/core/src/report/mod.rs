//! Table rendering: outcome summaries, pairwise win matrices, posterior
//! bias tables and origin matrices, as TSV or Markdown.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::backends::Origin;
use crate::classify::{OutcomeCounts, Subset};
use crate::error::{Error, Result};
use crate::inference::{
    bonferroni_flag, exact_binomial_test, GroupSummary, OriginContrast, ParamSummary, PosteriorFit,
    Tier, Variant, WinCounts,
};
use crate::lang::LanguageCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Tsv,
    Markdown,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Tsv => "tsv",
            Format::Markdown => "md",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(Format::Tsv),
            "markdown" | "md" => Ok(Format::Markdown),
            other => Err(Error::Argument(format!(
                "unknown report format `{other}` (expected tsv or markdown)"
            ))),
        }
    }
}

fn markdown_row(out: &mut String, cells: &[String]) {
    out.push('|');
    for cell in cells {
        let _ = write!(out, " {cell} |");
    }
    out.push('\n');
}

fn markdown_rule(out: &mut String, n: usize) {
    out.push('|');
    for _ in 0..n {
        out.push_str(" --- |");
    }
    out.push('\n');
}

fn table(format: Format, header: &[String], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    match format {
        Format::Tsv => {
            for row in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
                out.push_str(&row.join("\t"));
                out.push('\n');
            }
        }
        Format::Markdown => {
            markdown_row(&mut out, header);
            markdown_rule(&mut out, header.len());
            for row in rows {
                markdown_row(&mut out, row);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStyle {
    WinnerBold,
    LoserPlain,
    TieGray,
}

impl CellStyle {
    fn tag(self) -> &'static str {
        match self {
            CellStyle::WinnerBold => "bold",
            CellStyle::LoserPlain => "plain",
            CellStyle::TieGray => "gray",
        }
    }
}

/// Directed win counts with significance styling; row beats column.
#[derive(Debug, Clone, PartialEq)]
pub struct WinMatrix {
    pub backend_id: String,
    pub size: usize,
    pub languages: Vec<LanguageCode>,
    /// `None` on the diagonal.
    pub cells: Vec<Vec<Option<(u64, CellStyle)>>>,
    pub row_sums: Vec<u64>,
}

impl WinMatrix {
    pub fn from_counts(backend_id: &str, size: usize, counts: &WinCounts, family: usize, alpha: f64) -> Self {
        let langs = &counts.languages;
        let mut cells = vec![vec![None; langs.len()]; langs.len()];
        for (i, row) in langs.iter().enumerate() {
            for (j, col) in langs.iter().enumerate() {
                if i == j {
                    continue;
                }
                let k = counts.get(row, col);
                let k_rev = counts.get(col, row);
                let wins = |a: u64, b: u64| {
                    let test = exact_binomial_test(a, a + b).expect("k <= n");
                    test.applicable && bonferroni_flag(test.p_value, family, alpha)
                };
                let style = if wins(k, k_rev) {
                    CellStyle::WinnerBold
                } else if wins(k_rev, k) {
                    CellStyle::LoserPlain
                } else {
                    CellStyle::TieGray
                };
                cells[i][j] = Some((k, style));
            }
        }
        let row_sums = cells
            .iter()
            .map(|row| row.iter().flatten().map(|(k, _)| k).sum())
            .collect();
        Self {
            backend_id: backend_id.to_string(),
            size,
            languages: langs.clone(),
            cells,
            row_sums,
        }
    }

    pub fn render(&self, format: Format) -> String {
        let mut header = vec![String::new()];
        header.extend(self.languages.iter().map(|l| l.to_string()));
        header.push(match format {
            Format::Tsv => "sum".into(),
            Format::Markdown => "Σ".into(),
        });
        let rows: Vec<Vec<String>> = self
            .languages
            .iter()
            .zip(&self.cells)
            .zip(&self.row_sums)
            .map(|((lang, row), sum)| {
                let mut cells = vec![lang.to_string()];
                cells.extend(row.iter().map(|cell| match (cell, format) {
                    (None, Format::Tsv) => "-".to_string(),
                    (None, Format::Markdown) => "–".to_string(),
                    (Some((k, style)), Format::Tsv) => format!("{k}:{}", style.tag()),
                    (Some((k, CellStyle::WinnerBold)), Format::Markdown) => format!("**{k}**"),
                    (Some((k, CellStyle::LoserPlain)), Format::Markdown) => k.to_string(),
                    (Some((k, CellStyle::TieGray)), Format::Markdown) => format!("_{k}_"),
                }));
                cells.push(sum.to_string());
                cells
            })
            .collect();
        table(format, &header, &rows)
    }
}

/// Summaries of one model fit restricted to one origin (or pooled).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorTable {
    pub size: usize,
    pub variant: Variant,
    pub origin: Option<Origin>,
    pub converged: bool,
    pub scale: ParamSummary,
    pub groups: Vec<GroupSummary>,
}

impl PosteriorTable {
    /// One table per origin present in the fit (a single one when pooled).
    pub fn from_fit(size: usize, fit: &PosteriorFit) -> Vec<Self> {
        let mut by_origin: BTreeMap<Option<Origin>, Vec<GroupSummary>> = BTreeMap::new();
        for group in &fit.groups {
            by_origin.entry(group.key.origin).or_default().push(group.clone());
        }
        by_origin
            .into_iter()
            .map(|(origin, groups)| Self {
                size,
                variant: fit.variant,
                origin,
                converged: fit.converged,
                scale: fit.scale.clone(),
                groups,
            })
            .collect()
    }

    /// Rows in canonical pair order, each oriented so that P(b > 0) >= 50%.
    pub fn rows(&self) -> Vec<[String; 3]> {
        let mut groups: Vec<&GroupSummary> = self.groups.iter().collect();
        groups.sort_by(|a, b| (&a.key.l1, &a.key.l2).cmp(&(&b.key.l1, &b.key.l2)));
        groups
            .into_iter()
            .map(|g| {
                let b = &g.b;
                let (first, second, p, lo, hi) = if b.p_positive < 0.5 {
                    (&g.key.l2, &g.key.l1, 1.0 - b.p_positive, -b.ci_high, -b.ci_low)
                } else {
                    (&g.key.l1, &g.key.l2, b.p_positive, b.ci_low, b.ci_high)
                };
                [
                    format!("{} vs {}", first.display_name(), second.display_name()),
                    format!("{:.1}%", p * 100.0),
                    format!("[{lo:.2}, {hi:.2}]"),
                ]
            })
            .collect()
    }

    pub fn render(&self, format: Format) -> String {
        let header = ["Language pair", "P(>0)", "95% CI"].map(String::from);
        let rows: Vec<Vec<String>> = self.rows().into_iter().map(Vec::from).collect();
        table(format, &header, &rows)
    }
}

fn tier_cell(value: f64, tier: Tier, format: Format) -> String {
    let text = format!("{value:.1}");
    match (format, tier) {
        (Format::Tsv, Tier::Strong) => format!("{text}:strong"),
        (Format::Tsv, Tier::Moderate) => format!("{text}:moderate"),
        (Format::Tsv, Tier::Weak) => format!("{text}:weak"),
        (Format::Markdown, Tier::Strong) => format!("**{text}**"),
        (Format::Markdown, Tier::Moderate) => text,
        (Format::Markdown, Tier::Weak) => format!("_{text}_"),
    }
}

/// Posterior medians of row-over-column bias with sign-confidence tiers.
#[derive(Debug, Clone, PartialEq)]
pub struct OriginMatrix {
    pub languages: Vec<LanguageCode>,
    /// Canonical (l1, l2) -> (median, P(sign)).
    pub entries: BTreeMap<(LanguageCode, LanguageCode), (f64, f64)>,
}

impl OriginMatrix {
    pub fn from_groups(groups: &[GroupSummary]) -> Self {
        let entries = groups
            .iter()
            .map(|g| {
                let p = g.b.p_positive;
                ((g.key.l1.clone(), g.key.l2.clone()), (g.b.median, p.max(1.0 - p)))
            })
            .collect();
        Self::with_entries(entries)
    }

    pub fn from_contrast(rows: &[OriginContrast]) -> Self {
        let entries = rows
            .iter()
            .map(|c| ((c.l1.clone(), c.l2.clone()), (c.difference.median, c.p_sign)))
            .collect();
        Self::with_entries(entries)
    }

    fn with_entries(entries: BTreeMap<(LanguageCode, LanguageCode), (f64, f64)>) -> Self {
        let mut languages: Vec<LanguageCode> = entries
            .keys()
            .flat_map(|(a, b)| [a.clone(), b.clone()])
            .collect();
        languages.sort();
        languages.dedup();
        Self { languages, entries }
    }

    pub fn render(&self, format: Format) -> String {
        let mut header = vec![String::new()];
        header.extend(self.languages.iter().map(|l| l.to_string()));
        let rows: Vec<Vec<String>> = self
            .languages
            .iter()
            .map(|row| {
                let mut cells = vec![row.to_string()];
                for col in &self.languages {
                    let value = if row == col {
                        None
                    } else if let Some(&(m, p)) = self.entries.get(&(row.clone(), col.clone())) {
                        Some((m, p))
                    } else {
                        self.entries.get(&(col.clone(), row.clone())).map(|&(m, p)| (-m, p))
                    };
                    cells.push(match value {
                        Some((m, p)) => tier_cell(m, Tier::from_sign_probability(p), format),
                        None => String::new(),
                    });
                }
                cells
            })
            .collect();
        table(format, &header, &rows)
    }
}

/// Both / None / One counts per backend, size and subset.
pub fn render_outcomes(summary: &BTreeMap<(String, usize, Subset), OutcomeCounts>, format: Format) -> String {
    let header = ["backend", "size", "haystacks", "both", "none", "one", "total"].map(String::from);
    let rows: Vec<Vec<String>> = summary
        .iter()
        .map(|((backend, size, subset), c)| {
            vec![
                backend.clone(),
                size.to_string(),
                match subset {
                    Subset::Monolingual => "monolingual".into(),
                    Subset::Multilingual => "multilingual".into(),
                },
                c.both.to_string(),
                c.none.to_string(),
                c.one.to_string(),
                c.total().to_string(),
            ]
        })
        .collect();
    table(format, &header, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::GroupKey;

    fn lang(code: &str) -> LanguageCode {
        LanguageCode::new(code).unwrap()
    }

    fn counts(entries: &[(&str, &str, u64)]) -> WinCounts {
        let mut wins = BTreeMap::new();
        for (w, l, k) in entries {
            wins.insert((lang(w), lang(l)), *k);
        }
        WinCounts {
            languages: ["cmn", "deu", "eng", "rus", "tur"].map(lang).to_vec(),
            wins,
        }
    }

    #[test]
    fn win_matrix_styles() {
        let c = counts(&[("cmn", "rus", 64), ("rus", "cmn", 5), ("cmn", "tur", 23), ("tur", "cmn", 11)]);
        let m = WinMatrix::from_counts("m", 25000, &c, 20, 0.05);
        assert_eq!(m.cells[0][3], Some((64, CellStyle::WinnerBold)));
        assert_eq!(m.cells[3][0], Some((5, CellStyle::LoserPlain)));
        assert_eq!(m.cells[0][4], Some((23, CellStyle::TieGray)));
        assert_eq!(m.cells[4][0], Some((11, CellStyle::TieGray)));
        assert_eq!(m.cells[1][2], Some((0, CellStyle::TieGray)));
        assert_eq!(m.cells[0][0], None);
        assert_eq!(m.row_sums[0], 87);
        let tsv = m.render(Format::Tsv);
        assert!(tsv.starts_with("\tcmn\tdeu\teng\trus\ttur\tsum\n"));
        assert!(tsv.contains("cmn\t-\t0:gray\t0:gray\t64:bold\t23:gray\t87\n"));
        let md = m.render(Format::Markdown);
        assert!(md.contains("| rus | 5 | _0_ | _0_ | – | _0_ | 5 |"));
    }

    fn summary(p: f64, lo: f64, hi: f64) -> ParamSummary {
        ParamSummary {
            median: (lo + hi) / 2.0,
            mean: (lo + hi) / 2.0,
            ci_low: lo,
            ci_high: hi,
            p_positive: p,
            rhat: 1.0,
            ess: 8000.0,
        }
    }

    fn group(l1: &str, l2: &str, b: ParamSummary) -> GroupSummary {
        GroupSummary {
            key: GroupKey { origin: None, l1: lang(l1), l2: lang(l2) },
            cells: 5,
            wins_l1: 0,
            wins_l2: 0,
            b,
        }
    }

    #[test]
    fn posterior_rows_are_oriented_towards_the_favoured_language() {
        let table = PosteriorTable {
            size: 1000,
            variant: Variant::Pooled,
            origin: None,
            converged: true,
            scale: summary(1.0, 0.1, 0.5),
            groups: vec![group("deu", "tur", summary(0.359, -0.88, 0.60)), group("cmn", "rus", summary(1.0, 2.54, 4.17))],
        };
        let tsv = table.render(Format::Tsv);
        assert_eq!(
            tsv,
            "Language pair\tP(>0)\t95% CI\n\
             Chinese vs Russian\t100.0%\t[2.54, 4.17]\n\
             Turkish vs German\t64.1%\t[-0.60, 0.88]\n"
        );
    }

    #[test]
    fn origin_matrix_is_antisymmetric() {
        let m = OriginMatrix::from_groups(&[
            group("rus", "tur", summary(0.0, -200.0, -10.0)),
            group("cmn", "rus", summary(0.95, -0.2, 2.2)),
        ]);
        let tsv = m.render(Format::Tsv);
        assert!(tsv.contains("rus\t-1.0:moderate\t\t-105.0:strong\n"), "{tsv}");
        assert!(tsv.contains("tur\t\t105.0:strong\t\n"), "{tsv}");
    }
}
