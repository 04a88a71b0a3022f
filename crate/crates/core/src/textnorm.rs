//! Text canonicalization and tokenization.
//!
//! Reference and hypothesis are always compared under one explicit
//! [`NormalizationConfig`]. The character unit everywhere is the Unicode
//! scalar value after normalization, not the grapheme cluster, so CER
//! denominators are predictable.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};

use crate::error::{Error, Result};

/// Zero Width Non-Joiner, the character separating Persian compound-word
/// parts without introducing a word boundary.
pub const ZWNJ: char = '\u{200C}';

const DIACRITICS_START: char = '\u{064B}';
const DIACRITICS_END: char = '\u{0652}';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZwnjPolicy {
    Keep,
    Drop,
    ToSpace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiacriticsPolicy {
    Keep,
    Strip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PunctuationPolicy {
    Keep,
    Strip,
}

/// Declarative text-canonicalization policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationConfig {
    /// Ordered codepoint unification pairs, applied before any other step.
    pub char_map: Vec<(char, char)>,
    pub zwnj_policy: ZwnjPolicy,
    pub diacritics_policy: DiacriticsPolicy,
    pub punctuation_policy: PunctuationPolicy,
    pub collapse_whitespace: bool,
    /// Name recorded in score artifacts for provenance.
    #[serde(default = "default_profile_name")]
    pub profile: String,
}

fn default_profile_name() -> String {
    "default".to_string()
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig {
            // Arabic Yeh -> Persian Yeh, Arabic Kaf -> Persian Kaf.
            char_map: vec![('\u{064A}', '\u{06CC}'), ('\u{0643}', '\u{06A9}')],
            zwnj_policy: ZwnjPolicy::Keep,
            diacritics_policy: DiacriticsPolicy::Strip,
            punctuation_policy: PunctuationPolicy::Strip,
            collapse_whitespace: true,
            profile: default_profile_name(),
        }
    }
}

impl NormalizationConfig {
    /// Checks that no mapping target appears as a mapping source, which
    /// guarantees the map is idempotent.
    pub fn validate(&self) -> Result<()> {
        for (_, target) in &self.char_map {
            if self.char_map.iter().any(|(src, _)| src == target) {
                return Err(Error::Config(format!(
                    "char_map target U+{:04X} also appears as a source",
                    *target as u32
                )));
            }
        }
        Ok(())
    }

    /// Resolves `--norm NAME|PATH`: the built-in `default` profile, or a
    /// key-value config file.
    pub fn from_name_or_path(spec: &str) -> Result<Self> {
        if spec == "default" {
            return Ok(Self::default());
        }
        Self::from_file(Path::new(spec))
    }

    /// Loads a config from a key-value file. Keys mirror the field names:
    ///
    /// ```text
    /// zwnj_policy = keep
    /// diacritics_policy = strip
    /// punctuation_policy = strip
    /// collapse_whitespace = true
    /// char_map = 064A:06CC, 0643:06A9
    /// ```
    pub fn from_file(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path)?;
        let mut config = Self::default();
        config.profile = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        for (idx, raw) in content.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                message: "expected 'key = value'".to_string(),
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |message: String| Error::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                message,
            };
            match key {
                "zwnj_policy" => {
                    config.zwnj_policy = match value {
                        "keep" => ZwnjPolicy::Keep,
                        "drop" => ZwnjPolicy::Drop,
                        "to_space" => ZwnjPolicy::ToSpace,
                        other => return Err(bad(format!("unknown zwnj_policy '{other}'"))),
                    }
                }
                "diacritics_policy" => {
                    config.diacritics_policy = match value {
                        "keep" => DiacriticsPolicy::Keep,
                        "strip" => DiacriticsPolicy::Strip,
                        other => return Err(bad(format!("unknown diacritics_policy '{other}'"))),
                    }
                }
                "punctuation_policy" => {
                    config.punctuation_policy = match value {
                        "keep" => PunctuationPolicy::Keep,
                        "strip" => PunctuationPolicy::Strip,
                        other => return Err(bad(format!("unknown punctuation_policy '{other}'"))),
                    }
                }
                "collapse_whitespace" => {
                    config.collapse_whitespace = match value {
                        "true" => true,
                        "false" => false,
                        other => return Err(bad(format!("expected true/false, got '{other}'"))),
                    }
                }
                "char_map" => {
                    let mut map = Vec::new();
                    for pair in value.split(',').filter(|p| !p.trim().is_empty()) {
                        let (src, dst) = pair
                            .trim()
                            .split_once(':')
                            .ok_or_else(|| bad(format!("expected SRC:DST pair, got '{pair}'")))?;
                        map.push((parse_codepoint(src).map_err(&bad)?, parse_codepoint(dst).map_err(&bad)?));
                    }
                    config.char_map = map;
                }
                other => return Err(bad(format!("unknown key '{other}'"))),
            }
        }
        config.validate()?;
        Ok(config)
    }
}

fn parse_codepoint(token: &str) -> std::result::Result<char, String> {
    let hex = token.trim().trim_start_matches("U+").trim_start_matches("u+");
    u32::from_str_radix(hex, 16)
        .ok()
        .and_then(char::from_u32)
        .ok_or_else(|| format!("invalid codepoint '{token}'"))
}

fn is_diacritic(c: char) -> bool {
    (DIACRITICS_START..=DIACRITICS_END).contains(&c)
}

/// Applies the full canonicalization policy. Total and idempotent.
pub fn normalize_text(text: &str, config: &NormalizationConfig) -> String {
    let mut out = String::with_capacity(text.len());
    for mut c in text.chars() {
        if let Some(&(_, target)) = config.char_map.iter().find(|(src, _)| *src == c) {
            c = target;
        }
        if config.diacritics_policy == DiacriticsPolicy::Strip && is_diacritic(c) {
            continue;
        }
        if c == ZWNJ {
            match config.zwnj_policy {
                ZwnjPolicy::Keep => {}
                ZwnjPolicy::Drop => continue,
                ZwnjPolicy::ToSpace => c = ' ',
            }
        } else if config.punctuation_policy == PunctuationPolicy::Strip
            && c.general_category_group() == GeneralCategoryGroup::Punctuation
        {
            continue;
        }
        out.push(c);
    }
    if config.collapse_whitespace {
        let mut collapsed = String::with_capacity(out.len());
        for word in out.split_whitespace() {
            if !collapsed.is_empty() {
                collapsed.push(' ');
            }
            collapsed.push_str(word);
        }
        collapsed
    } else {
        out
    }
}

/// Splits normalized text into word tokens. Never emits empty tokens;
/// ZWNJ does not split.
pub fn tokenize_words(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

/// The character units CER is computed over: Unicode scalar values.
/// Spaces and retained ZWNJ each count as one character.
pub fn char_sequence(text: &str) -> Vec<char> {
    text.chars().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collapses_whitespace() {
        let config = NormalizationConfig::default();
        assert_eq!(normalize_text("a   b ", &config), "a b");
    }

    #[test]
    fn zwnj_drop_policy_removes_zwnj() {
        let config = NormalizationConfig {
            zwnj_policy: ZwnjPolicy::Drop,
            ..Default::default()
        };
        assert_eq!(normalize_text("می\u{200C}خوام", &config), "میخوام");
    }

    #[test]
    fn default_map_unifies_arabic_yeh() {
        let config = NormalizationConfig::default();
        let out = normalize_text("عل\u{064A}", &config);
        assert_eq!(out.chars().last(), Some('\u{06CC}'));
        assert!(!out.contains('\u{064A}'));
    }

    #[test]
    fn default_strips_diacritics_and_punctuation() {
        let config = NormalizationConfig::default();
        assert_eq!(normalize_text("کِتاب، خوب!", &config), "کتاب خوب");
    }

    #[test]
    fn tokenize_basics() {
        assert_eq!(tokenize_words("a b c"), vec!["a", "b", "c"]);
        assert!(tokenize_words("").is_empty());
        // ZWNJ never splits a token.
        assert_eq!(tokenize_words("بی\u{200C}همتا").len(), 1);
    }

    #[test]
    fn char_sequence_counts_scalars() {
        assert_eq!(char_sequence("ab").len(), 2);
        // ZWNJ kept counts as one character.
        assert_eq!(char_sequence("می\u{200C}کردند").len(), 8);
        assert_eq!(char_sequence("به نام").len(), 6);
    }

    #[test]
    fn char_map_validation_rejects_chained_mappings() {
        let config = NormalizationConfig {
            char_map: vec![('a', 'b'), ('b', 'c')],
            ..Default::default()
        };
        assert!(config.validate().is_err());
        assert!(NormalizationConfig::default().validate().is_ok());
    }

    #[test]
    fn config_file_round_trip() {
        let dir = std::env::temp_dir().join("asreval-textnorm-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("loose.norm");
        std::fs::write(
            &path,
            "# loose profile\nzwnj_policy = drop\ndiacritics_policy = strip\n\
             punctuation_policy = keep\ncollapse_whitespace = true\nchar_map = 064A:06CC\n",
        )
        .unwrap();
        let config = NormalizationConfig::from_file(&path).unwrap();
        assert_eq!(config.zwnj_policy, ZwnjPolicy::Drop);
        assert_eq!(config.punctuation_policy, PunctuationPolicy::Keep);
        assert_eq!(config.char_map, vec![('\u{064A}', '\u{06CC}')]);
        assert_eq!(config.profile, "loose");
    }

    #[test]
    fn builtin_profile_name_resolves() {
        let config = NormalizationConfig::from_name_or_path("default").unwrap();
        assert_eq!(config, NormalizationConfig::default());
    }
}
