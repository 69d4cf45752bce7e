use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use hdg_core::analysis::study::ProblemId;
use hdg_core::local::MAX_SOLVER_DEGREE;
use hdg_core::MeshFamily;

/// Finest refinement level accepted (n = 2^level cells per direction).
pub const MAX_LEVEL: u32 = 10;

/// Rejected configuration; reported as a usage error.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Everything a run needs, checked before any mesh is built.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub problem: ProblemId,
    pub family: MeshFamily,
    pub ks: Vec<usize>,
    pub levels: Vec<u32>,
    pub taus: Vec<f64>,
    pub seed: u64,
    pub out: PathBuf,
    pub export_fields: bool,
}

impl RunConfig {
    pub fn validate(self) -> Result<Self, ConfigError> {
        if let Some(d) = self.problem.dim() {
            if d != self.family.dim() {
                return Err(ConfigError(format!(
                    "problem {} is {d}-dimensional but family {} is {}-dimensional",
                    self.problem,
                    self.family,
                    self.family.dim()
                )));
            }
        }
        if self.ks.is_empty() || self.levels.is_empty() || self.taus.is_empty() {
            return Err(ConfigError("empty degree, level or tau list".into()));
        }
        if let Some(k) = self.ks.iter().find(|&&k| k == 0 || k > MAX_SOLVER_DEGREE) {
            return Err(ConfigError(format!("degree k must be in 1..={MAX_SOLVER_DEGREE}, got {k}")));
        }
        if let Some(l) = self.levels.iter().find(|&&l| l > MAX_LEVEL) {
            return Err(ConfigError(format!("level must be at most {MAX_LEVEL}, got {l}")));
        }
        if let Some(t) = self.taus.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
            return Err(ConfigError(format!("tau must be positive and finite, got {t}")));
        }
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.ks[0]
    }

    pub fn level(&self) -> u32 {
        self.levels[0]
    }

    pub fn tau(&self) -> f64 {
        self.taus[0]
    }
}

/// `2`, `1,2,4`, `1..3` and `1..=3` (both range forms inclusive).
pub fn parse_list<T>(s: &str) -> Result<Vec<T>, String>
where
    T: FromStr + Copy + PartialOrd + std::ops::Add<Output = T> + From<u8>,
    T::Err: fmt::Display,
{
    let one = |v: &str| v.trim().parse::<T>().map_err(|e| format!("'{v}': {e}"));
    if let Some((a, b)) = s.split_once("..") {
        let (lo, hi) = (one(a)?, one(b.strip_prefix('=').unwrap_or(b))?);
        if hi < lo {
            return Err(format!("empty range {s}"));
        }
        let mut out = vec![lo];
        while *out.last().unwrap() < hi {
            out.push(*out.last().unwrap() + T::from(1));
        }
        return Ok(out);
    }
    s.split(',').map(one).collect()
}

pub fn parse_taus(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|v| v.trim().parse::<f64>().map_err(|e| format!("'{v}': {e}"))).collect()
}
