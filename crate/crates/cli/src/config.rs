use std::collections::BTreeMap;
use std::path::Path;

/// `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value", i + 1))?;
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

pub fn load(path: &Path) -> Result<BTreeMap<String, String>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lines() {
        let m = parse("# defaults\ngamma = 7\n\nr_list=40,60 # windows\n--tol=1e-8\n").unwrap();
        assert_eq!(m["gamma"], "7");
        assert_eq!(m["r-list"], "40,60");
        assert_eq!(m["tol"], "1e-8");
        assert!(parse("gamma 7").is_err());
    }
}
