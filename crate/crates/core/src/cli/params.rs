use std::collections::BTreeMap;
use std::str::FromStr;

/// Merged experiment parameters, all kept as strings until a runner asks for a type.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
#[serde(transparent)]
pub struct Params {
    values: BTreeMap<String, String>,
}

impl Params {
    pub fn new(values: BTreeMap<String, String>) -> Self {
        Params { values }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get_opt<T: FromStr>(&self, key: &str) -> Option<Result<T, String>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| v.trim().parse::<T>().map_err(|e| format!("invalid value '{v}' for --{key}: {e}")))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, String>
    where
        T::Err: std::fmt::Display,
    {
        self.get_opt(key).unwrap_or_else(|| Err(format!("missing required parameter --{key}")))
    }

    pub fn list(&self, key: &str) -> Result<Vec<f64>, String> {
        let raw = self.raw(key).ok_or_else(|| format!("missing required parameter --{key}"))?;
        raw.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse::<f64>().map_err(|e| format!("invalid entry '{s}' in --{key}: {e}")))
            .collect()
    }
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("config line {}: expected 'key = value'", i + 1))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(format!("config line {}: empty key", i + 1));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines() {
        let kv = parse_config("# comment\nL = 5\n\nsurface=torus # trailing\n").unwrap();
        assert_eq!(kv, vec![("L".into(), "5".into()), ("surface".into(), "torus".into())]);
        assert!(parse_config("just words").is_err());
        assert!(parse_config(" = 3").is_err());
    }

    #[test]
    fn typed_lookup() {
        let p = Params::new([("L".to_string(), "5".to_string()), ("times".to_string(), "1, 2,3".to_string())].into());
        assert_eq!(p.get::<f64>("L").unwrap(), 5.0);
        assert_eq!(p.list("times").unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(p.get::<f64>("lambda").unwrap_err().contains("--lambda"));
        assert!(p.get::<usize>("times").is_err());
    }
}
