//! Minimal INI reader for run configurations.
//!
//! Grammar, one item per line:
//!
//! ```text
//! # comment            ; also a comment
//! [section]
//! key = value          # trailing comments need a space before '#' or ';'
//! ```
//!
//! Section and key names are `[A-Za-z0-9_-]+`, case-sensitive. Values are
//! trimmed and may be empty. Keys before the first section, repeated
//! sections and repeated keys are errors.

use std::collections::BTreeMap;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ini {
    source: String,
    sections: BTreeMap<String, (usize, BTreeMap<String, Entry>)>,
}

fn valid_name(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn strip_comment(line: &str) -> &str {
    let trimmed = line.trim_start();
    if trimmed.starts_with('#') || trimmed.starts_with(';') {
        return "";
    }
    let bytes = line.as_bytes();
    for i in 1..bytes.len() {
        if (bytes[i] == b'#' || bytes[i] == b';') && bytes[i - 1].is_ascii_whitespace() {
            return &line[..i];
        }
    }
    line
}

impl Ini {
    /// Parses `text`; `source` names the input in error messages.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut ini = Ini {
            source: source.to_string(),
            sections: BTreeMap::new(),
        };
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| HarnessError::Parse {
                path: source.to_string(),
                line: line_no,
                message,
            };
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err("unterminated section header".into()))?
                    .trim();
                if !valid_name(name) {
                    return Err(err(format!("invalid section name {name:?}")));
                }
                if ini.sections.contains_key(name) {
                    return Err(err(format!("section [{name}] appears twice")));
                }
                ini.sections
                    .insert(name.to_string(), (line_no, BTreeMap::new()));
                current = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            let key = key.trim();
            if !valid_name(key) {
                return Err(err(format!("invalid key {key:?}")));
            }
            let section = current
                .as_ref()
                .ok_or_else(|| err(format!("key {key:?} outside any section")))?;
            let entries = &mut ini.sections.get_mut(section).expect("section exists").1;
            if entries.contains_key(key) {
                return Err(err(format!("key {key:?} repeated in [{section}]")));
            }
            entries.insert(
                key.to_string(),
                Entry {
                    value: value.trim().to_string(),
                    line: line_no,
                },
            );
        }
        Ok(ini)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn sections(&self) -> impl Iterator<Item = &str> {
        self.sections.keys().map(String::as_str)
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section).and_then(|(_, s)| s.get(key))
    }

    pub fn keys(&self, section: &str) -> impl Iterator<Item = (&str, &Entry)> {
        self.sections
            .get(section)
            .into_iter()
            .flat_map(|(_, s)| s.iter().map(|(k, e)| (k.as_str(), e)))
    }

    /// Line of a section header, for error messages.
    pub fn section_line(&self, section: &str) -> Option<usize> {
        self.sections.get(section).map(|(l, _)| *l)
    }
}
