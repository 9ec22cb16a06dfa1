//! Plain-text key=value configuration. Every numeric default of the scan,
//! verdict and simulation machinery lives here so runs are reproducible from
//! the config file plus the seed.

use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for '{key}': {value}")]
    BadValue { line: usize, key: String, value: String },
    #[error("line {line}: expected KEY = VALUE")]
    BadSyntax { line: usize },
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Config {
    pub posdef_y_lo: f64,
    pub posdef_y_hi: f64,
    pub posdef_grid_per_decade: usize,
    pub posdef_truncation: usize,
    pub posdef_refine_budget: usize,
    pub posdef_prefilter_n: u64,
    pub posdef_prefilter_grid: usize,
    pub dirichlet_sturm_cap: u64,
    pub dihedral_trace_sample: usize,
    pub dihedral_trace_m_max: u64,
    pub dihedral_stats_primes: Vec<u64>,
    pub elliptic_primes: Vec<u64>,
    pub elliptic_verdict_cap: usize,
    pub random_v_cap: u64,
    pub random_trials: usize,
    pub stats_b_second_min: f64,
    pub stats_b_first_factor: f64,
    pub stats_ks_dihedral: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            posdef_y_lo: 1e-2,
            posdef_y_hi: 10.0,
            posdef_grid_per_decade: 64,
            posdef_truncation: 10_000,
            posdef_refine_budget: 20,
            posdef_prefilter_n: 50,
            posdef_prefilter_grid: 16,
            dirichlet_sturm_cap: 600,
            dihedral_trace_sample: 400,
            dihedral_trace_m_max: 9,
            dihedral_stats_primes: vec![3, 5, 7],
            elliptic_primes: vec![5, 7, 11, 13],
            elliptic_verdict_cap: 40,
            random_v_cap: 1_000_000,
            random_trials: 100_000,
            stats_b_second_min: 0.5,
            stats_b_first_factor: 2.0,
            stats_ks_dihedral: 0.02,
        }
    }
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str(&text)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let t = raw.split('#').next().unwrap_or("").trim();
            if t.is_empty() {
                continue;
            }
            let Some((key, value)) = t.split_once('=') else {
                return Err(ConfigError::BadSyntax { line });
            };
            let key = key.trim();
            let value = value.trim();
            let bad = || ConfigError::BadValue { line, key: key.into(), value: value.into() };
            macro_rules! set {
                ($field:ident, $ty:ty) => {
                    cfg.$field = value.parse::<$ty>().map_err(|_| bad())?
                };
            }
            match key {
                "posdef.y_lo" => set!(posdef_y_lo, f64),
                "posdef.y_hi" => set!(posdef_y_hi, f64),
                "posdef.grid_per_decade" => set!(posdef_grid_per_decade, usize),
                "posdef.truncation" => set!(posdef_truncation, usize),
                "posdef.refine_budget" => set!(posdef_refine_budget, usize),
                "posdef.prefilter_n" => set!(posdef_prefilter_n, u64),
                "posdef.prefilter_grid" => set!(posdef_prefilter_grid, usize),
                "dirichlet.sturm_cap" => set!(dirichlet_sturm_cap, u64),
                "dihedral.trace_sample" => set!(dihedral_trace_sample, usize),
                "dihedral.trace_m_max" => set!(dihedral_trace_m_max, u64),
                "dihedral.stats_primes" => {
                    cfg.dihedral_stats_primes = parse_list(value).ok_or_else(bad)?
                }
                "elliptic.primes" => cfg.elliptic_primes = parse_list(value).ok_or_else(bad)?,
                "elliptic.verdict_cap" => set!(elliptic_verdict_cap, usize),
                "random.v_cap" => set!(random_v_cap, u64),
                "random.trials" => set!(random_trials, usize),
                "stats.b_second_min" => set!(stats_b_second_min, f64),
                "stats.b_first_factor" => set!(stats_b_first_factor, f64),
                "stats.ks_dihedral" => set!(stats_ks_dihedral, f64),
                _ => return Err(ConfigError::UnknownKey { line, key: key.into() }),
            }
        }
        Ok(cfg)
    }

    /// Scan parameters derived from the posdef block.
    pub fn scan_params(&self) -> crate::posdef::ScanParams {
        let decades = (self.posdef_y_hi / self.posdef_y_lo).log10();
        crate::posdef::ScanParams {
            y_lo: self.posdef_y_lo,
            y_hi: self.posdef_y_hi,
            grid_count: ((decades * self.posdef_grid_per_decade as f64).ceil() as usize).max(16),
            truncation: self.posdef_truncation,
            refine_budget: self.posdef_refine_budget,
        }
    }
}

fn parse_list(value: &str) -> Option<Vec<u64>> {
    value.split(',').map(|s| s.trim().parse::<u64>().ok()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let cfg = Config::from_str("posdef.y_lo = 0.001\nelliptic.primes = 5, 7\n# comment\n")
            .unwrap();
        assert_eq!(cfg.posdef_y_lo, 0.001);
        assert_eq!(cfg.elliptic_primes, vec![5, 7]);
        assert!(matches!(
            Config::from_str("nope = 3"),
            Err(ConfigError::UnknownKey { line: 1, .. })
        ));
        assert!(matches!(
            Config::from_str("posdef.y_lo: 3"),
            Err(ConfigError::BadSyntax { line: 1 })
        ));
        assert!(matches!(
            Config::from_str("posdef.truncation = x"),
            Err(ConfigError::BadValue { line: 1, .. })
        ));
    }

    #[test]
    fn scan_params_reflect_grid_density() {
        let cfg = Config::default();
        let p = cfg.scan_params();
        assert_eq!(p.grid_count, 192); // 3 decades at 64 per decade
    }
}
