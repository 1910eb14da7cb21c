//! Key-value text files: one `key value`, `key = value` or `key: value`
//! pair per line, `#` comments.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    origin: PathBuf,
    entries: BTreeMap<String, (String, usize)>,
}

impl KeyValues {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let split = line
                .find(|c: char| c == '=' || c == ':' || c.is_whitespace())
                .ok_or_else(|| Error::Parse {
                    path: origin.to_path_buf(),
                    line: i + 1,
                    msg: format!("expected \"key value\", got {line:?}"),
                })?;
            let key = line[..split].trim().to_string();
            let value = line[split..]
                .trim_start_matches(|c: char| c == '=' || c == ':' || c.is_whitespace())
                .trim()
                .to_string();
            entries.insert(key, (value, i + 1));
        }
        Ok(Self {
            origin: origin.to_path_buf(),
            entries,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    /// Parsed value of `key`, if present.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|_| Error::Parse {
                path: self.origin.clone(),
                line: *line,
                msg: format!("bad value for {key}: {v:?}"),
            }),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| Error::Parse {
            path: self.origin.clone(),
            line: 0,
            msg: format!("missing key {key}"),
        })
    }

    /// Overwrites `slot` when `key` is present.
    pub fn apply<T: FromStr>(&self, key: &str, slot: &mut T) -> Result<()> {
        if let Some(v) = self.get(key)? {
            *slot = v;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separators_and_comments() {
        let kv = KeyValues::parse("# c\nfx 525.0\nfy = 526\ncx: 319.5 # trailing\n\n", Path::new("k")).unwrap();
        assert_eq!(kv.require::<f64>("fx").unwrap(), 525.0);
        assert_eq!(kv.require::<f64>("fy").unwrap(), 526.0);
        assert_eq!(kv.require::<f64>("cx").unwrap(), 319.5);
        assert!(kv.get::<f64>("cy").unwrap().is_none());
        assert!(kv.require::<f64>("cy").is_err());
        let bad = KeyValues::parse("fx abc\n", Path::new("k")).unwrap();
        assert!(matches!(bad.get::<f64>("fx"), Err(Error::Parse { line: 1, .. })));
    }
}
