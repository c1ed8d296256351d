//! Config files: `key = value` lines or a JSON object with the same keys as
//! the long flags. File values are spliced in front of the command-line flags
//! of the subcommand, so flags given explicitly win.

use std::fs;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config line {line}: expected key = value")]
    Syntax { line: usize },
    #[error("config JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config JSON must be an object of scalars or arrays of scalars")]
    JsonShape,
    #[error("--config needs a path")]
    MissingPath,
}

/// Parses `key = value` text; `#` starts a comment. Keys may use `_` or `-`.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        return parse_json(trimmed);
    }
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(ConfigError::Syntax { line: i + 1 });
        }
        out.push((k.replace('_', "-"), v.trim().trim_matches('"').to_string()));
    }
    Ok(out)
}

fn scalar(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        serde_json::Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn parse_json(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let obj = value.as_object().ok_or(ConfigError::JsonShape)?;
    let mut out = Vec::new();
    for (k, v) in obj {
        let s = match v {
            serde_json::Value::Array(items) => items
                .iter()
                .map(scalar)
                .collect::<Option<Vec<_>>>()
                .ok_or(ConfigError::JsonShape)?
                .join(","),
            other => scalar(other).ok_or(ConfigError::JsonShape)?,
        };
        out.push((k.replace('_', "-"), s));
    }
    Ok(out)
}

/// Flag tokens for the pairs; `true` becomes a bare switch and `false` is
/// dropped.
pub fn to_flags(pairs: &[(String, String)]) -> Vec<String> {
    let mut out = Vec::new();
    for (k, v) in pairs {
        match v.as_str() {
            "true" => out.push(format!("--{k}")),
            "false" => {}
            _ => out.push(format!("--{k}={v}")),
        }
    }
    out
}

/// Removes `--config PATH` (or `--config=PATH`) from `args` and splices the
/// file's flags in right after the first token naming one of `subcommands`.
pub fn expand(args: Vec<String>, subcommands: &[&str]) -> Result<Vec<String>, ConfigError> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().ok_or(ConfigError::MissingPath)?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = fs::read_to_string(Path::new(&path)).map_err(|source| ConfigError::Io {
        path: path.clone(),
        source,
    })?;
    let flags = to_flags(&parse_pairs(&text)?);
    let sub = rest
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, a)| subcommands.contains(&a.as_str()))
        .map_or(rest.len(), |(i, _)| i + 1);
    rest.splice(sub..sub, flags);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_value_lines() {
        let p = parse_pairs("# comment\nk = -1/12\nfixed_p=2  # trailing\n\njson = true\n").unwrap();
        assert_eq!(
            p,
            vec![
                ("k".into(), "-1/12".into()),
                ("fixed-p".into(), "2".into()),
                ("json".into(), "true".into())
            ]
        );
        assert!(matches!(parse_pairs("nonsense"), Err(ConfigError::Syntax { line: 1 })));
    }

    #[test]
    fn json_mirror() {
        let p = parse_pairs(r#"{"l": "-1/2", "seeds": 5, "mu": [1, 2, 4], "json": false}"#).unwrap();
        assert_eq!(to_flags(&p), vec!["--l=-1/2", "--mu=1,2,4", "--seeds=5"]);
        assert!(parse_pairs(r#"{"a": {"b": 1}}"#).is_err());
    }

    #[test]
    fn splice_after_subcommand() {
        let dir = std::env::temp_dir().join(format!("zlab-config-{}", std::process::id()));
        std::fs::write(&dir, "l = -1/2\nfixed-p = 2\n").unwrap();
        let args: Vec<String> = ["zlab", "--output", "r.jsonl", "optimize", "--config", dir.to_str().unwrap(), "--l", "-7/12"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let out = expand(args, &["optimize"]).unwrap();
        assert_eq!(out, vec!["zlab", "--output", "r.jsonl", "optimize", "--l=-1/2", "--fixed-p=2", "--l", "-7/12"]);
        std::fs::remove_file(dir).unwrap();
    }

    proptest::proptest! {
        #[test]
        fn lines_and_json_agree(
            pairs in proptest::collection::btree_map("[a-z][a-z0-9-]{0,8}", "-?[0-9]{1,4}(/[1-9][0-9]{0,2})?", 0..6)
        ) {
            let text: String = pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
            let json = serde_json::to_string(&pairs).unwrap();
            let a = parse_pairs(&text).unwrap();
            let b = parse_pairs(&json).unwrap();
            let want: Vec<(String, String)> = pairs.into_iter().collect();
            proptest::prop_assert_eq!(&a, &want);
            proptest::prop_assert_eq!(&b, &want);
        }
    }
}
