//! Flat `key = value` config files. Section headers are ignored, `#` and
//! `;` start comments, and keys are long flag names (`roc-um` or `roc_um`).

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};

pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected 'key = value', got '{}'", n + 1, raw.trim());
        };
        let key = k.trim().trim_start_matches("--").replace('_', "-").to_ascii_lowercase();
        if key.is_empty() {
            bail!("config line {}: empty key", n + 1);
        }
        let value = v.trim().trim_matches('"').to_string();
        match pairs.iter_mut().find(|(existing, _)| *existing == key) {
            Some(slot) => slot.1 = value,
            None => pairs.push((key, value)),
        }
    }
    Ok(pairs)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

fn has_flag(args: &[OsString], key: &str) -> bool {
    let long = format!("--{key}");
    let prefixed = format!("--{key}=");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == long || s.starts_with(&prefixed)
    })
}

/// Appends config-file values for every flag not given on the command
/// line, so explicit flags take precedence.
pub fn merge_into_args(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config file {}", path.display()))?;
    let mut out = args.clone();
    for (key, value) in parse(&text)? {
        if key == "config" || has_flag(&args, &key) {
            continue;
        }
        out.push(format!("--{key}").into());
        out.push(value.into());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_keys_comments_and_sections() {
        let p = parse("[design]\nroc_um = 69.3 # mirror\n; note\n--lambda-nm=1276\nroc-um = 70\n").unwrap();
        assert_eq!(p, vec![("roc-um".into(), "70".into()), ("lambda-nm".into(), "1276".into())]);
        assert!(parse("nonsense").is_err());
    }

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.ini");
        std::fs::write(&cfg, "roc-um = 10\nlambda-nm = 1280\n").unwrap();
        let cfg = cfg.to_string_lossy().to_string();
        let merged = merge_into_args(args(&["mc", "design", "--config", &cfg, "--roc-um=69.3"])).unwrap();
        let tail: Vec<String> = merged[5..].iter().map(|s| s.to_string_lossy().into()).collect();
        assert_eq!(tail, vec!["--lambda-nm", "1280"]);
    }

    #[test]
    fn without_config_args_are_untouched() {
        let a = args(&["mc", "table1"]);
        assert_eq!(merge_into_args(a.clone()).unwrap(), a);
    }
}
