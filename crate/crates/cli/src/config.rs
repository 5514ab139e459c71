//! Line-oriented experiment configuration: `[section]` headers with
//! `key = value` entries, no structured-format dependency.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use absorbtk_core::algebra::{builtin_suite, InstanceSpec};

use crate::CliError;

/// Which module presentation an experiment runs on.
#[derive(Debug, Clone)]
pub enum InstanceSel {
    Builtin(InstanceSpec),
    File(PathBuf),
}

impl InstanceSel {
    pub fn parse(token: &str) -> Result<Self, CliError> {
        if let Some(path) = token.strip_prefix("file:") {
            Ok(InstanceSel::File(PathBuf::from(path)))
        } else {
            InstanceSpec::parse(token)
                .map(InstanceSel::Builtin)
                .map_err(|e| CliError::Config(e.to_string()))
        }
    }

    pub fn label(&self) -> String {
        match self {
            InstanceSel::Builtin(spec) => spec.name(),
            InstanceSel::File(path) => format!("file:{}", path.display()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub instances: Vec<InstanceSel>,
    /// Truncation levels, ascending.
    pub levels: Vec<usize>,
    /// Level range for the decay profile.
    pub decay_range: (usize, usize),
    /// Half-line domain length for the defect ladder.
    pub grid_length: f64,
    /// Interior node counts of the refinement ladder.
    pub grid_ladder: Vec<usize>,
    /// Domain length for the lift-action experiment.
    pub lift_length: f64,
    /// Level count for the lift-action experiment.
    pub lift_levels: usize,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub tolerances: Tolerances,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            instances: builtin_suite().into_iter().map(InstanceSel::Builtin).collect(),
            levels: vec![8, 16, 32, 64],
            decay_range: (16, 512),
            grid_length: 30.0,
            grid_ladder: vec![511, 1023, 2047, 4095],
            lift_length: 20.0,
            lift_levels: 4096,
            seed: 1,
            output_dir: None,
            tolerances: Tolerances::default(),
        }
    }
}

/// Named tolerances with defaults pinned to the quantitative claims.
#[derive(Debug, Clone)]
pub struct Tolerances(BTreeMap<String, f64>);

impl Default for Tolerances {
    fn default() -> Self {
        let mut m = BTreeMap::new();
        for (k, v) in [
            ("telescoping", 1e-10),
            ("defect_law_slack", 1e-9),
            ("commutation", 1e-10),
            ("density_floor", 1e-10),
            ("decay_agreement", 1e-8),
            ("decay_cap_factor", 1.1),
            ("connection_zero", 1e-12),
            ("lift_hermiticity", 1e-12),
            ("commutator_extension", 1e-10),
            ("composition", 1e-12),
            ("gns", 1e-10),
            ("minus_defect_floor", 0.9),
            ("plus_defect_cap", 0.1),
            ("asymmetry_gap", 0.7),
            ("regularized_defect_cap", 0.2),
            ("regularized_symmetry", 1e-10),
            ("lift_error", 0.01),
            ("lift_model_slack", 1.5),
        ] {
            m.insert(k.to_string(), v);
        }
        Tolerances(m)
    }
}

impl Tolerances {
    pub fn get(&self, name: &str) -> f64 {
        *self
            .0
            .get(name)
            .unwrap_or_else(|| panic!("unknown tolerance `{name}`"))
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), CliError> {
        if !self.0.contains_key(name) {
            return Err(CliError::Config(format!(
                "unknown tolerance `{name}`; known: {}",
                self.0.keys().cloned().collect::<Vec<_>>().join(", ")
            )));
        }
        if value <= 0.0 {
            return Err(CliError::Config(format!("tolerance `{name}` must be positive")));
        }
        self.0.insert(name.to_string(), value);
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = ExperimentConfig::default();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].trim().to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let here = |msg: String| CliError::Config(format!("line {}: {msg}", lineno + 1));
            match (section.as_str(), key) {
                ("experiment", "instances") => {
                    let mut sels = Vec::new();
                    for token in value.split_whitespace() {
                        sels.push(InstanceSel::parse(token)?);
                    }
                    if sels.is_empty() {
                        return Err(here("instances list is empty".into()));
                    }
                    cfg.instances = sels;
                }
                ("experiment", "levels") => {
                    cfg.levels = parse_usize_list(value).map_err(here)?;
                    if cfg.levels.is_empty() || cfg.levels.windows(2).any(|w| w[0] >= w[1]) {
                        return Err(CliError::Config(format!(
                            "line {}: levels must be non-empty and ascending",
                            lineno + 1
                        )));
                    }
                }
                ("experiment", "decay_range") => {
                    let v = parse_usize_list(value).map_err(here)?;
                    if v.len() != 2 || v[0] >= v[1] {
                        return Err(here("decay_range needs `lo hi` with lo < hi".into()));
                    }
                    cfg.decay_range = (v[0], v[1]);
                }
                ("experiment", "seed") => {
                    cfg.seed = value.parse().map_err(|_| here(format!("bad seed `{value}`")))?;
                }
                ("experiment", "output_dir") => {
                    cfg.output_dir = Some(PathBuf::from(value));
                }
                ("grid", "length") => {
                    cfg.grid_length = parse_pos_f64(value).map_err(here)?;
                }
                ("grid", "ladder") => {
                    cfg.grid_ladder = parse_usize_list(value).map_err(here)?;
                    if cfg.grid_ladder.is_empty()
                        || cfg.grid_ladder.windows(2).any(|w| w[0] >= w[1])
                    {
                        return Err(CliError::Config(format!(
                            "line {}: ladder must be non-empty and ascending",
                            lineno + 1
                        )));
                    }
                }
                ("grid", "lift_length") => {
                    cfg.lift_length = parse_pos_f64(value).map_err(here)?;
                }
                ("grid", "lift_levels") => {
                    cfg.lift_levels =
                        value.parse().map_err(|_| here(format!("bad level count `{value}`")))?;
                }
                ("tolerances", name) => {
                    let v: f64 = value
                        .parse()
                        .map_err(|_| here(format!("bad tolerance value `{value}`")))?;
                    cfg.tolerances.set(name, v)?;
                }
                (sec, k) => {
                    return Err(here(format!("unknown key `{k}` in section `[{sec}]`")));
                }
            }
        }
        Ok(cfg)
    }
}

fn parse_usize_list(value: &str) -> Result<Vec<usize>, String> {
    value
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| format!("bad integer `{t}`")))
        .collect()
}

fn parse_pos_f64(value: &str) -> Result<f64, String> {
    let v: f64 = value
        .parse()
        .map_err(|_| format!("bad number `{value}`"))?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("`{value}` must be positive"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_cover_builtin_suite() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.instances.len(), 4);
        assert_eq!(cfg.levels, vec![8, 16, 32, 64]);
    }

    #[test]
    fn parses_sections_and_overrides() {
        let cfg = ExperimentConfig::parse(
            "# comment\n[experiment]\ninstances = pauli scalar(2)\nlevels = 4 8\nseed = 7\n\
             [grid]\nlength = 10\nladder = 127 255\n[tolerances]\ntelescoping = 1e-9\n",
        )
        .unwrap();
        assert_eq!(cfg.instances.len(), 2);
        assert_eq!(cfg.levels, vec![4, 8]);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.grid_length, 10.0);
        assert_eq!(cfg.tolerances.get("telescoping"), 1e-9);
    }

    #[test]
    fn rejects_descending_levels() {
        assert!(ExperimentConfig::parse("[experiment]\nlevels = 8 4\n").is_err());
    }

    #[test]
    fn rejects_unknown_tolerance() {
        assert!(ExperimentConfig::parse("[tolerances]\nwarp = 1e-3\n").is_err());
    }

    #[test]
    fn error_carries_line_number() {
        let err = ExperimentConfig::parse("[experiment]\nlevels 4 8\n").unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }
}
