//! `key = value` config files. Blank lines and `#` comments are skipped.

use std::collections::BTreeMap;
use std::path::Path;

use mbtree::{Error, Result};

/// Keys that configure the run rather than the model.
pub const GLOBAL_KEYS: &[&str] = &["seed", "format", "workers", "model"];

pub fn parse(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("config line {}: expected key = value", i + 1)))?;
        let k = k.trim().replace('-', "_");
        if k.is_empty() {
            return Err(Error::Parse(format!("config line {}: empty key", i + 1)));
        }
        out.insert(k, v.trim().to_string());
    }
    Ok(out)
}

pub fn read(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("config {}: {e}", path.display())))?;
    parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blanks() {
        let c = parse("# run\nseed = 7\n\nmodel=ford  # binary\nn-max = 50\n").unwrap();
        assert_eq!(c["seed"], "7");
        assert_eq!(c["model"], "ford");
        assert_eq!(c["n_max"], "50");
        assert!(parse("seed 7").is_err());
        assert!(parse("= 7").is_err());
    }
}
