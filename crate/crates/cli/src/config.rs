//! Run configuration: flags override the file named by
//! `SUPERMODULI_CONFIG`, which overrides the defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};
use supermoduli::grassmann::{set_invert_epsilon, set_prune_epsilon};
use supermoduli::moduli::GromovConfig;

use crate::error::CliError;

pub const CONFIG_ENV: &str = "SUPERMODULI_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Number of Grassmann generators for inputs given as plain numbers.
    pub generators: usize,
    pub prune_epsilon: f64,
    pub invert_epsilon: f64,
    pub projective_tolerance: f64,
    pub convergence_tolerance: f64,
    pub radius: f64,
    pub tail: usize,
    pub grid: usize,
    pub exclusion: f64,
}

impl Default for Config {
    fn default() -> Self {
        let g = GromovConfig::default();
        Config {
            generators: 2,
            prune_epsilon: 1e-14,
            invert_epsilon: 1e-10,
            projective_tolerance: 1e-9,
            convergence_tolerance: g.tolerance,
            radius: g.radius,
            tail: g.tail,
            grid: g.grid,
            exclusion: g.exclusion,
        }
    }
}

/// Values given on the command line; `None` keeps the lower layer.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct ConfigFlags {
    /// Grassmann generators for numeric inputs.
    #[arg(long, global = true)]
    pub generators: Option<usize>,
    #[arg(long, global = true)]
    pub prune_epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub invert_epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub projective_tolerance: Option<f64>,
    #[arg(long, global = true)]
    pub convergence_tolerance: Option<f64>,
    /// Radius of the Gromov sampling disc.
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    /// Tail length of the Gromov check.
    #[arg(long, global = true)]
    pub tail: Option<usize>,
}

impl Config {
    pub fn load(flags: &ConfigFlags, env: Option<&Path>) -> Result<Config, CliError> {
        let mut cfg = match env {
            Some(path) => crate::input::read_json::<Config>(path)
                .map_err(|e| CliError::Input(format!("{CONFIG_ENV}: {e}")))?,
            None => Config::default(),
        };
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = flags.$f { cfg.$f = v; } )* };
        }
        take!(generators, prune_epsilon, invert_epsilon, projective_tolerance, convergence_tolerance, radius, tail);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let tolerances = [
            ("prune_epsilon", self.prune_epsilon),
            ("invert_epsilon", self.invert_epsilon),
            ("projective_tolerance", self.projective_tolerance),
            ("convergence_tolerance", self.convergence_tolerance),
            ("radius", self.radius),
            ("exclusion", self.exclusion),
        ];
        for (name, v) in tolerances {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Input(format!("config: {name} must be positive, got {v}")));
            }
        }
        if self.generators > 62 {
            return Err(CliError::Input(format!("config: generators must be at most 62, got {}", self.generators)));
        }
        if self.tail == 0 || self.grid == 0 {
            return Err(CliError::Input("config: tail and grid must be positive".into()));
        }
        Ok(())
    }

    /// Installs the arithmetic thresholds process-wide.
    pub fn apply(&self) {
        set_prune_epsilon(self.prune_epsilon);
        set_invert_epsilon(self.invert_epsilon);
    }

    pub fn gromov(&self) -> GromovConfig {
        GromovConfig {
            tolerance: self.convergence_tolerance,
            tail: self.tail,
            radius: self.radius,
            grid: self.grid,
            exclusion: self.exclusion,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn flags_override_file() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, r#"{{"generators": 5, "tail": 7}}"#).unwrap();
        let flags = ConfigFlags { generators: Some(3), ..Default::default() };
        let cfg = Config::load(&flags, Some(f.path())).unwrap();
        assert_eq!(cfg.generators, 3);
        assert_eq!(cfg.tail, 7);
        assert_eq!(cfg.radius, Config::default().radius);
    }

    #[test]
    fn rejects_bad_values() {
        let flags = ConfigFlags { prune_epsilon: Some(0.0), ..Default::default() };
        assert!(Config::load(&flags, None).is_err());
        let flags = ConfigFlags { generators: Some(63), ..Default::default() };
        assert!(Config::load(&flags, None).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, r#"{{"generator": 5}}"#).unwrap();
        assert!(Config::load(&ConfigFlags::default(), Some(f.path())).is_err());
    }
}
