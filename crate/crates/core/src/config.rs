//! Line-oriented `section.key = value` run configuration.

use std::path::PathBuf;
use std::str::FromStr;

use crate::environment::Environment;
use crate::equilibrium::{Model, Tolerances};
use crate::error::{Error, Result};
use crate::noise::{Family, NoiseModel};
use crate::numeric::{linspace, logspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Log,
    Linear,
}

impl FromStr for Spacing {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "log" => Ok(Spacing::Log),
            "lin" | "linear" => Ok(Spacing::Linear),
            _ => Err(format!("expected `log` or `lin`, got `{s}`")),
        }
    }
}

/// Precision grid. With `relative` set, bounds are multiples of the existence boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub spacing: Spacing,
    pub relative: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            min: 0.8,
            max: 100.0,
            points: 60,
            spacing: Spacing::Log,
            relative: true,
        }
    }
}

impl GridSpec {
    /// Parses `min:max:points[:log|lin]` with absolute bounds.
    pub fn parse_absolute(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(format!("expected min:max:points[:log|lin], got `{s}`"));
        }
        let num = |t: &str| t.parse::<f64>().map_err(|_| format!("bad number `{t}`"));
        let spec = GridSpec {
            min: num(parts[0])?,
            max: num(parts[1])?,
            points: parts[2].parse().map_err(|_| format!("bad point count `{}`", parts[2]))?,
            spacing: parts.get(3).map_or(Ok(Spacing::Log), |t| t.parse())?,
            relative: false,
        };
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.points < 2 {
            return Err("grid needs at least 2 points".into());
        }
        if !(self.min > 0.0 && self.max > self.min && self.max.is_finite()) {
            return Err(format!("grid bounds must satisfy 0 < min < max, got {} and {}", self.min, self.max));
        }
        Ok(())
    }

    /// Concrete precisions, given the existence boundary for relative grids.
    pub fn resolve(&self, rho_tilde: f64) -> Vec<f64> {
        let k = if self.relative { rho_tilde } else { 1.0 };
        match self.spacing {
            Spacing::Log => logspace(self.min * k, self.max * k, self.points),
            Spacing::Linear => linspace(self.min * k, self.max * k, self.points),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub family: Family,
    pub theta_low: f64,
    pub theta_high: f64,
    pub kappa: f64,
    pub grid: GridSpec,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            family: Family::Normal,
            theta_low: 5.0,
            theta_high: 15.0,
            kappa: 11.0,
            grid: GridSpec::default(),
            tolerances: Tolerances::default(),
            seed: 42,
            csv: None,
            svg: None,
        }
    }
}

impl RunConfig {
    pub fn environment(&self) -> Result<Environment> {
        Environment::uniform_affine(self.theta_low, self.theta_high, self.kappa)
    }

    pub fn noise(&self) -> Result<NoiseModel> {
        NoiseModel::from_family(self.family)
    }

    pub fn model(&self) -> Result<Model> {
        Model::with_tolerances(self.environment()?, self.noise()?, self.tolerances)
    }

    /// Same configuration with another noise family.
    pub fn with_family(&self, family: Family) -> Self {
        RunConfig {
            family,
            ..self.clone()
        }
    }
}

fn parse_affine(v: &str) -> Option<f64> {
    let inner = v.strip_prefix("affine(")?.strip_suffix(')')?;
    inner.trim().parse().ok()
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut bounds_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::Config {
                line,
                key: content.to_string(),
                msg: "expected `section.key = value`".into(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        let bad = |msg: String| Error::Config {
            line,
            key: key.to_string(),
            msg,
        };
        let num = |v: &str| v.parse::<f64>().map_err(|_| bad(format!("malformed number `{v}`")));
        let positive = |v: &str| {
            let x = num(v)?;
            if x > 0.0 && x.is_finite() {
                Ok(x)
            } else {
                Err(bad(format!("must be positive, got {v}")))
            }
        };
        match key {
            "noise.family" => {
                cfg.family = match value {
                    "normal" => Family::Normal,
                    "laplace" => Family::Laplace,
                    _ => return Err(bad(format!("expected `normal` or `laplace`, got `{value}`"))),
                }
            }
            "env.theta_low" => {
                cfg.theta_low = num(value)?;
                bounds_line = line;
            }
            "env.theta_high" => {
                cfg.theta_high = num(value)?;
                bounds_line = line;
            }
            "env.v" => {
                cfg.kappa = parse_affine(value)
                    .ok_or_else(|| bad(format!("expected `affine(<kappa>)`, got `{value}`")))?
            }
            "env.g" => {
                if value != "uniform" {
                    return Err(bad(format!("only `uniform` is supported, got `{value}`")));
                }
            }
            "grid.min" => cfg.grid.min = positive(value)?,
            "grid.max" => cfg.grid.max = positive(value)?,
            "grid.points" => {
                cfg.grid.points = value
                    .parse()
                    .map_err(|_| bad(format!("malformed count `{value}`")))?;
                if cfg.grid.points < 2 {
                    return Err(bad("grid needs at least 2 points".into()));
                }
            }
            "grid.spacing" => cfg.grid.spacing = value.parse().map_err(bad)?,
            "grid.relative" => {
                cfg.grid.relative = value
                    .parse()
                    .map_err(|_| bad(format!("expected `true` or `false`, got `{value}`")))?
            }
            "solver.quad_tol" => cfg.tolerances.quad = positive(value)?,
            "solver.tol" => cfg.tolerances.solver = positive(value)?,
            "run.seed" => {
                cfg.seed = value
                    .parse()
                    .map_err(|_| bad(format!("malformed seed `{value}`")))?
            }
            "output.csv" => cfg.csv = Some(PathBuf::from(value)),
            "output.svg" => cfg.svg = Some(PathBuf::from(value)),
            _ => return Err(bad("unknown key".into())),
        }
    }
    if !(cfg.theta_low < cfg.theta_high) {
        return Err(Error::Config {
            line: bounds_line,
            key: "env.theta_low".into(),
            msg: format!(
                "theta_low {} must be below theta_high {}",
                cfg.theta_low, cfg.theta_high
            ),
        });
    }
    if !(cfg.grid.max > cfg.grid.min) {
        return Err(Error::Config {
            line: 0,
            key: "grid.max".into(),
            msg: format!("grid.max {} must exceed grid.min {}", cfg.grid.max, cfg.grid.min),
        });
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.family, Family::Normal);
        assert_eq!((c.theta_low, c.theta_high, c.kappa), (5.0, 15.0, 11.0));
        assert_eq!(c.grid.points, 60);
        assert_eq!(c.grid.spacing, Spacing::Log);
    }

    #[test]
    fn reads_every_key() {
        let text = "\
# comment
noise.family = laplace
env.theta_low = 4   # trailing
env.theta_high = 16
env.v = affine(12.5)
env.g = uniform
grid.min = 1
grid.max = 50
grid.points = 10
grid.spacing = lin
solver.quad_tol = 1e-12
solver.tol = 1e-10
run.seed = 7
output.csv = out.csv
output.svg = out.svg
";
        let c = parse_config(text).unwrap();
        assert_eq!(c.family, Family::Laplace);
        assert_eq!((c.theta_low, c.theta_high, c.kappa), (4.0, 16.0, 12.5));
        assert_eq!(c.grid.spacing, Spacing::Linear);
        assert_eq!(c.grid.points, 10);
        assert_eq!(c.tolerances.quad, 1e-12);
        assert_eq!(c.seed, 7);
        assert_eq!(c.csv.as_deref(), Some(std::path::Path::new("out.csv")));
    }

    #[test]
    fn reversed_bounds_are_rejected() {
        let e = parse_config("env.theta_low = 20\nenv.theta_high = 10\n").unwrap_err();
        match e {
            Error::Config { line, key, .. } => {
                assert_eq!(line, 2);
                assert_eq!(key, "env.theta_low");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn errors_name_line_and_key() {
        let e = parse_config("\nnoise.family = cauchy\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, ref key, .. } if key == "noise.family"));
        let e = parse_config("run.colour = red").unwrap_err();
        assert!(e.to_string().contains("line 1") && e.to_string().contains("run.colour"));
        assert!(parse_config("grid.points = 1").is_err());
        assert!(parse_config("solver.tol = -1").is_err());
        assert!(parse_config("env.v = 11").is_err());
        assert!(parse_config("no equals sign").is_err());
    }

    #[test]
    fn absolute_grid_flag() {
        let g = GridSpec::parse_absolute("0.5:2:4:log").unwrap();
        let xs = g.resolve(123.0);
        assert_eq!(xs.len(), 4);
        assert_eq!((xs[0], xs[3]), (0.5, 2.0));
        assert!(GridSpec::parse_absolute("2:1:4").is_err());
        assert!(GridSpec::parse_absolute("1:2").is_err());
        assert_eq!(GridSpec::parse_absolute("1:2:3:lin").unwrap().spacing, Spacing::Linear);
    }
}
