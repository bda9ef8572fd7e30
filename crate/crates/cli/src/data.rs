//! Ranking files: one ranking per line, most preferred item first, items as
//! whitespace-separated tokens. An optional `#n=<count>` header before the
//! first ranking fixes the number of items; other `#` lines and blank lines
//! are ignored.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use mallows_dpm::rankings::{ItemId, TopTRanking};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Bijection between item tokens and ids `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct ItemDict {
    tokens: Vec<String>,
    index: HashMap<String, ItemId>,
}

impl ItemDict {
    pub fn new(tokens: Vec<String>) -> Result<Self, String> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (id, tok) in tokens.iter().enumerate() {
            if !is_valid_token(tok) {
                return Err(format!("invalid item token {tok:?}"));
            }
            if index.insert(tok.clone(), id).is_some() {
                return Err(format!("item token {tok:?} listed twice"));
            }
        }
        Ok(Self { tokens, index })
    }

    /// Items named by their ids, `"0"` to `"n-1"`.
    pub fn numeric(n: usize) -> Self {
        Self::new((0..n).map(|i| i.to_string()).collect()).expect("distinct numeric tokens")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, id: ItemId) -> &str {
        &self.tokens[id]
    }

    pub fn id(&self, token: &str) -> Option<ItemId> {
        self.index.get(token).copied()
    }

    fn push(&mut self, token: &str) -> ItemId {
        let id = self.tokens.len();
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), id);
        id
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::malformed(path, e.line(), e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("string list serializes");
        fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
    }
}

impl TryFrom<Vec<String>> for ItemDict {
    type Error = String;
    fn try_from(tokens: Vec<String>) -> Result<Self, String> {
        Self::new(tokens)
    }
}

impl From<ItemDict> for Vec<String> {
    fn from(d: ItemDict) -> Self {
        d.tokens
    }
}

fn is_valid_token(tok: &str) -> bool {
    !tok.is_empty() && !tok.starts_with('#') && !tok.chars().any(char::is_whitespace)
}

/// A parsed ranking file.
#[derive(Debug, Clone)]
pub struct RankingFile {
    pub n: usize,
    pub rankings: Vec<TopTRanking>,
    /// 1-based source line of each ranking.
    pub lines: Vec<usize>,
    pub items: ItemDict,
}

impl RankingFile {
    pub fn t_max(&self) -> usize {
        self.rankings.iter().map(|r| r.len()).max().unwrap_or(0)
    }
}

/// Parses ranking-file text. With `dict`, every token must already be
/// known and `n` is the dictionary size; otherwise items get ids in order of
/// first appearance. Any bad line fails the whole parse with its line number.
pub fn parse_rankings(
    text: &str,
    path: &Path,
    dict: Option<&ItemDict>,
) -> Result<RankingFile, CliError> {
    let fixed = dict.is_some();
    let mut items = dict
        .cloned()
        .unwrap_or_else(|| ItemDict::new(Vec::new()).expect("empty"));
    let mut header: Option<(usize, usize)> = None;
    let mut raw: Vec<(usize, Vec<ItemId>)> = Vec::new();

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(value) = rest.trim_start().strip_prefix("n=") {
                if header.is_some() {
                    return Err(CliError::malformed(path, lineno, "repeated #n= header"));
                }
                if !raw.is_empty() {
                    return Err(CliError::malformed(
                        path,
                        lineno,
                        "#n= header must precede the rankings",
                    ));
                }
                let n: usize = value.trim().parse().map_err(|_| {
                    CliError::malformed(path, lineno, format!("bad item count {:?}", value.trim()))
                })?;
                if n < 2 {
                    return Err(CliError::malformed(path, lineno, "need at least two items"));
                }
                if fixed && n != items.len() {
                    return Err(CliError::malformed(
                        path,
                        lineno,
                        format!(
                            "header says n={n} but the item dictionary has {} items",
                            items.len()
                        ),
                    ));
                }
                header = Some((n, lineno));
            }
            continue;
        }
        let mut ids = Vec::new();
        for tok in line.split_whitespace() {
            let id = match items.id(tok) {
                Some(id) => id,
                None if fixed => {
                    return Err(CliError::malformed(
                        path,
                        lineno,
                        format!("unknown item {tok:?}"),
                    ));
                }
                None => {
                    if !is_valid_token(tok) {
                        return Err(CliError::malformed(
                            path,
                            lineno,
                            format!("invalid item token {tok:?}"),
                        ));
                    }
                    if let Some((n, _)) = header {
                        if items.len() == n {
                            return Err(CliError::malformed(
                                path,
                                lineno,
                                format!("item {tok:?} exceeds the declared n={n} distinct items"),
                            ));
                        }
                    }
                    items.push(tok)
                }
            };
            if ids.contains(&id) {
                return Err(CliError::malformed(
                    path,
                    lineno,
                    format!("item {tok:?} listed twice"),
                ));
            }
            ids.push(id);
        }
        raw.push((lineno, ids));
    }

    if raw.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no rankings found",
            path.display()
        )));
    }
    let n = match header {
        Some((n, _)) => {
            pad_items(&mut items, n);
            n
        }
        None => items.len(),
    };
    if n < 2 {
        return Err(CliError::Data(format!(
            "{}: need at least two distinct items, found {n}",
            path.display()
        )));
    }
    let mut rankings = Vec::with_capacity(raw.len());
    let mut lines = Vec::with_capacity(raw.len());
    for (lineno, ids) in raw {
        let r = TopTRanking::new(ids, n)
            .map_err(|e| CliError::malformed(path, lineno, e.to_string()))?;
        rankings.push(r);
        lines.push(lineno);
    }
    Ok(RankingFile {
        n,
        rankings,
        lines,
        items,
    })
}

/// Names items that a `#n=` header declares but no ranking mentions.
fn pad_items(items: &mut ItemDict, n: usize) {
    let mut k = items.len();
    while items.len() < n {
        let mut name = format!("item{k}");
        while items.id(&name).is_some() {
            name.push('_');
        }
        items.push(&name);
        k += 1;
    }
}

pub fn read_rankings(path: &Path, dict: Option<&ItemDict>) -> Result<RankingFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_rankings(&text, path, dict)
}

/// Renders rankings with a `#n=` header. Rankings of length `n - 1` are
/// written in full so that every item name appears.
pub fn format_rankings(rankings: &[TopTRanking], items: &ItemDict) -> String {
    let mut out = format!("#n={}\n", items.len());
    for r in rankings {
        let mut line: Vec<&str> = r.items().iter().map(|&i| items.token(i)).collect();
        if r.len() + 1 == r.n() {
            let last = (0..r.n())
                .find(|i| !r.items().contains(i))
                .expect("one item left");
            line.push(items.token(last));
        }
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

pub fn write_rankings(
    path: &Path,
    rankings: &[TopTRanking],
    items: &ItemDict,
) -> Result<(), CliError> {
    fs::write(path, format_rankings(rankings, items)).map_err(|e| CliError::io(path, e))
}

/// One non-negative integer label per non-blank line.
pub fn read_labels(path: &Path) -> Result<Vec<usize>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        labels.push(
            line.parse()
                .map_err(|_| CliError::malformed(path, i + 1, format!("bad label {line:?}")))?,
        );
    }
    Ok(labels)
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<(), CliError> {
    let mut out = String::with_capacity(labels.len() * 3);
    for l in labels {
        let _ = writeln!(out, "{l}");
    }
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RankingFile, CliError> {
        parse_rankings(text, Path::new("d.txt"), None)
    }

    #[test]
    fn first_appearance_ids_and_truncation() {
        let f = parse("b a c\n\n# comment\na c\n").unwrap();
        assert_eq!(f.n, 3);
        assert_eq!(f.items.token(0), "b");
        // a full ranking drops its implied last item
        assert_eq!(f.rankings[0].items(), &[0, 1]);
        assert_eq!(f.rankings[1].items(), &[1, 2]);
        assert_eq!(f.lines, vec![1, 4]);
    }

    #[test]
    fn header_fixes_n_and_pads_names() {
        let f = parse("#n=5\nx y\n").unwrap();
        assert_eq!(f.n, 5);
        assert_eq!(f.items.len(), 5);
        assert_eq!(f.items.token(2), "item2");
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let err = parse("a b\nc c\n").unwrap_err();
        assert_eq!(err.to_string(), "d.txt:2: item \"c\" listed twice");
        let err = parse("#n=2\na b\nc\n").unwrap_err();
        assert!(err.to_string().starts_with("d.txt:3:"), "{err}");
        let err = parse("a b\n#n=4\n").unwrap_err();
        assert!(err.to_string().starts_with("d.txt:2:"), "{err}");
        assert_eq!(err.exit_code(), 3);
        let dict = ItemDict::numeric(3);
        let err = parse_rankings("0 1\n1 7\n", Path::new("t.txt"), Some(&dict)).unwrap_err();
        assert_eq!(err.to_string(), "t.txt:2: unknown item \"7\"");
        assert!(matches!(
            parse("\n# only comments\n"),
            Err(CliError::Data(_))
        ));
    }

    #[test]
    fn format_round_trips() {
        let f = parse("q w e r\nw q\n").unwrap();
        let again = parse(&format_rankings(&f.rankings, &f.items)).unwrap();
        assert_eq!(again.rankings, f.rankings);
        assert_eq!(again.items, f.items);
    }

    #[test]
    fn dict_json_rejects_duplicates() {
        assert!(serde_json::from_str::<ItemDict>(r#"["a","b","a"]"#).is_err());
        let d: ItemDict = serde_json::from_str(r#"["a","b"]"#).unwrap();
        assert_eq!(d.id("b"), Some(1));
    }
}
