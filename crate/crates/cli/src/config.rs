//! Run configuration and the plain-text `key = value` config file format.

use crate::harness::{HarnessError, Method, Problem};
use std::path::{Path, PathBuf};

/// One benchmark run: problem, method, step count and overrides.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: Problem,
    pub method: Method,
    pub steps: usize,
    /// Integration horizon; `None` picks the problem default (20, 10, 5).
    pub t_end: Option<f64>,
    /// Ansatz degree override; `None` keeps the problem value.
    pub nu: Option<f64>,
    /// Frequency estimate override; `None` resolves the problem default.
    pub omega: Option<f64>,
    /// Machine epsilon for the truncation criteria.
    pub u: f64,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(problem: Problem, method: Method, steps: usize) -> Self {
        Self {
            problem,
            method,
            steps,
            t_end: None,
            nu: None,
            omega: None,
            u: oscil_core::DEFAULT_EPSILON,
            out: None,
        }
    }

    pub fn t_end_or_default(&self) -> f64 {
        self.t_end.unwrap_or(match self.problem {
            Problem::Duffing => 20.0,
            Problem::Fpu => 10.0,
            Problem::Nls => 5.0,
        })
    }
}

/// Values read from a `--config` file; command-line flags override them.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    pub problem: Option<String>,
    pub method: Option<String>,
    pub steps: Option<usize>,
    pub t_end: Option<f64>,
    pub nu: Option<f64>,
    pub omega: Option<String>,
    pub u: Option<f64>,
    pub out: Option<PathBuf>,
}

impl ConfigFile {
    /// Parse a plain-text file of `key = value` lines; `#` starts a comment.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = ConfigFile::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("{}:{}: expected key = value", path.display(), lineno + 1))
            })?;
            let key = key.trim().to_ascii_lowercase().replace('-', "_");
            let value = value.trim().to_string();
            let bad = |what: &str| {
                HarnessError::Config(format!(
                    "{}:{}: invalid {what} value {value:?}",
                    path.display(),
                    lineno + 1
                ))
            };
            match key.as_str() {
                "problem" => cfg.problem = Some(value),
                "method" => cfg.method = Some(value),
                "steps" => cfg.steps = Some(value.parse().map_err(|_| bad("steps"))?),
                "t_end" => cfg.t_end = Some(value.parse().map_err(|_| bad("t_end"))?),
                "nu" => cfg.nu = Some(value.parse().map_err(|_| bad("nu"))?),
                "omega" => cfg.omega = Some(value),
                "u" => cfg.u = Some(value.parse().map_err(|_| bad("u"))?),
                "out" => cfg.out = Some(PathBuf::from(value)),
                other => {
                    return Err(HarnessError::Config(format!(
                        "{}:{}: unknown key {other:?}",
                        path.display(),
                        lineno + 1
                    )))
                }
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn parses_keys_and_comments() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# benchmark setup").unwrap();
        writeln!(f, "problem = duffing").unwrap();
        writeln!(f, "method = shbvm  # spectral").unwrap();
        writeln!(f, "steps = 1000").unwrap();
        writeln!(f, "t-end = 20.0").unwrap();
        writeln!(f, "u = 1.1102230246251565e-16").unwrap();
        let cfg = ConfigFile::load(f.path()).unwrap();
        assert_eq!(cfg.problem.as_deref(), Some("duffing"));
        assert_eq!(cfg.method.as_deref(), Some("shbvm"));
        assert_eq!(cfg.steps, Some(1000));
        assert_eq!(cfg.t_end, Some(20.0));
        assert!(cfg.u.unwrap() < 2e-16);
    }

    #[test]
    fn rejects_unknown_keys() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "stepsize = 0.1").unwrap();
        assert!(ConfigFile::load(f.path()).is_err());
    }
}
