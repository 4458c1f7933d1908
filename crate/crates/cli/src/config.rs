//! Flat `key = value` run configuration shared by the config file and the flags.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    SoeCheck,
    DerivTable,
    Solve,
    Table1,
    Table2,
    Stability,
    Timing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Markdown,
    Jsonl,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Problem {
    Example2,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    F64,
    Quad,
}

/// Bad input from the user: a malformed line, an unknown key or a value out of range.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Every setting is optional here; defaults that depend on the experiment
/// are filled by [`RunConfig::resolve`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub experiment: Option<Experiment>,
    pub alpha: Option<f64>,
    pub lambda: Option<f64>,
    pub delta: Option<f64>,
    pub r: Option<f64>,
    pub t_final: Option<f64>,
    pub length: Option<f64>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub n_max: Option<usize>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub problem: Option<Problem>,
    pub precision: Option<Precision>,
    pub input: Option<PathBuf>,
}

pub const KEYS: &[&str] = &[
    "experiment", "alpha", "lambda", "delta", "r", "T", "L", "N", "M", "n_max", "epsilon", "seed", "output", "format",
    "problem", "precision", "input",
];

fn number<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("`{value}` is not a valid value for `{key}`"))
}

fn choice<T: ValueEnum>(key: &str, value: &str) -> Result<T, String> {
    T::from_str(value, true).map_err(|_| {
        let names: Vec<String> = T::value_variants()
            .iter()
            .filter_map(|v| v.to_possible_value().map(|p| p.get_name().to_string()))
            .collect();
        format!("`{value}` is not a valid `{key}` (expected one of {})", names.join(", "))
    })
}

impl Settings {
    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "experiment" => self.experiment = Some(choice(key, value)?),
            "alpha" => self.alpha = Some(number(key, value)?),
            "lambda" => self.lambda = Some(number(key, value)?),
            "delta" => self.delta = Some(number(key, value)?),
            "r" => self.r = Some(number(key, value)?),
            "T" => self.t_final = Some(number(key, value)?),
            "L" => self.length = Some(number(key, value)?),
            "N" => self.n = Some(number(key, value)?),
            "M" => self.m = Some(number(key, value)?),
            "n_max" => self.n_max = Some(number(key, value)?),
            "epsilon" => self.epsilon = Some(number(key, value)?),
            "seed" => self.seed = Some(number(key, value)?),
            "output" => self.output = Some(PathBuf::from(value)),
            "format" => self.format = Some(choice(key, value)?),
            "problem" => self.problem = Some(choice(key, value)?),
            "precision" => self.precision = Some(choice(key, value)?),
            "input" => self.input = Some(PathBuf::from(value)),
            _ => return Err(format!("unknown key `{key}` (known keys: {})", KEYS.join(", "))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut settings = Settings::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("config line {lineno}: expected `key = value`, found `{line}`")))?;
            settings
                .set(key.trim(), value.trim())
                .map_err(|msg| invalid(format!("config line {lineno}: {msg}")))?;
        }
        Ok(settings)
    }

    /// Values present in `over` replace those in `self`.
    pub fn overlay(self, over: Settings) -> Settings {
        Settings {
            experiment: over.experiment.or(self.experiment),
            alpha: over.alpha.or(self.alpha),
            lambda: over.lambda.or(self.lambda),
            delta: over.delta.or(self.delta),
            r: over.r.or(self.r),
            t_final: over.t_final.or(self.t_final),
            length: over.length.or(self.length),
            n: over.n.or(self.n),
            m: over.m.or(self.m),
            n_max: over.n_max.or(self.n_max),
            epsilon: over.epsilon.or(self.epsilon),
            seed: over.seed.or(self.seed),
            output: over.output.or(self.output),
            format: over.format.or(self.format),
            problem: over.problem.or(self.problem),
            precision: over.precision.or(self.precision),
            input: over.input.or(self.input),
        }
    }
}

/// A validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    /// `None` runs the table experiments over α = 0.1, 0.3, 0.5
    pub alpha: Option<f64>,
    pub lambda: f64,
    pub delta: f64,
    pub r: f64,
    pub t_final: f64,
    pub length: f64,
    pub n: usize,
    pub m: usize,
    pub n_max: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub problem: Problem,
    pub precision: Precision,
    pub input: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(s: Settings) -> Result<Self, ConfigError> {
        let experiment = s
            .experiment
            .ok_or_else(|| invalid("no experiment given: pass a subcommand or set `experiment` in the config file"))?;
        let table1 = experiment == Experiment::Table1;
        let n = s.n.unwrap_or(match experiment {
            Experiment::Table1 => 80,
            Experiment::Table2 => 10,
            Experiment::SoeCheck => 160,
            Experiment::Stability | Experiment::Timing => 64,
            Experiment::Solve | Experiment::DerivTable => 40,
        });
        let m = s.m.unwrap_or(match experiment {
            Experiment::Stability | Experiment::Timing => 32,
            _ => n,
        });
        let cfg = RunConfig {
            experiment,
            alpha: s.alpha,
            lambda: s.lambda.unwrap_or(1.0),
            delta: s.delta.unwrap_or(if table1 { 1.5 } else { 1.8 }),
            r: s.r.unwrap_or(if table1 { 1.5 } else { 3.0 }),
            t_final: s.t_final.unwrap_or(2.0),
            length: s.length.unwrap_or(1.0),
            n,
            m,
            n_max: s.n_max.unwrap_or(match experiment {
                Experiment::Table1 => 640,
                Experiment::Table2 => 160,
                _ => n,
            }),
            epsilon: s.epsilon.unwrap_or(1e-10),
            seed: s.seed.unwrap_or(42),
            output: s.output,
            format: s.format.unwrap_or(Format::Csv),
            problem: s.problem.unwrap_or(Problem::Example2),
            precision: s.precision.unwrap_or(Precision::F64),
            input: s.input,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a < 1.0) {
                return Err(invalid(format!("alpha = {a} violates 0 < alpha < 1")));
            }
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid(format!("lambda = {} violates lambda >= 0", self.lambda)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(invalid(format!("delta = {} violates delta > 0", self.delta)));
        }
        if !(self.r >= 1.0 && self.r.is_finite()) {
            return Err(invalid(format!("r = {} violates r >= 1", self.r)));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(invalid(format!("T = {} violates T > 0", self.t_final)));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(invalid(format!("L = {} violates L > 0", self.length)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(invalid(format!("epsilon = {} violates 0 < epsilon < 1", self.epsilon)));
        }
        if self.n == 0 {
            return Err(invalid("N = 0 violates N >= 1"));
        }
        if self.m < 2 {
            return Err(invalid(format!("M = {} violates M >= 2", self.m)));
        }
        if self.n_max < self.n {
            return Err(invalid(format!("n_max = {} is below N = {}", self.n_max, self.n)));
        }
        let formats: &[Format] = match self.experiment {
            Experiment::Table1 | Experiment::Table2 => &[Format::Csv, Format::Markdown, Format::Jsonl],
            Experiment::Solve => &[Format::Csv, Format::Binary],
            Experiment::SoeCheck => &[Format::Csv],
            Experiment::DerivTable | Experiment::Stability | Experiment::Timing => &[Format::Csv, Format::Jsonl],
        };
        if !formats.contains(&self.format) {
            return Err(invalid(format!("format {:?} is not available for {:?}", self.format, self.experiment)));
        }
        if self.format == Format::Binary && self.output.is_none() {
            return Err(invalid("binary output needs an output path"));
        }
        if self.precision == Precision::Quad && !matches!(self.experiment, Experiment::SoeCheck | Experiment::Solve) {
            return Err(invalid("precision = quad is only available for soe-check and solve"));
        }
        if self.input.is_some() && self.experiment != Experiment::Solve {
            return Err(invalid("input (a stored kernel) is only read by solve"));
        }
        let needs_unit_domain = match self.experiment {
            Experiment::Solve => self.problem == Problem::Example2,
            Experiment::Table2 | Experiment::Stability | Experiment::Timing => true,
            _ => false,
        };
        if needs_unit_domain && self.length != 1.0 {
            return Err(invalid(format!("L = {} but the manufactured problem lives on [0, 1]", self.length)));
        }
        Ok(())
    }

    pub fn alpha_or_default(&self) -> f64 {
        self.alpha.unwrap_or(0.5)
    }

    /// N, 2N, 4N, ... up to n_max.
    pub fn doubling_ns(&self) -> Vec<usize> {
        std::iter::successors(Some(self.n), |&k| Some(k * 2))
            .take_while(|&k| k <= self.n_max)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_filled() {
        let s = Settings::parse("alpha=0.5\nN=80\nexperiment=table1").unwrap();
        let cfg = RunConfig::resolve(s).unwrap();
        assert_eq!(cfg.experiment, Experiment::Table1);
        assert_eq!(cfg.alpha, Some(0.5));
        assert_eq!(cfg.n, 80);
        assert_eq!((cfg.t_final, cfg.length, cfg.lambda), (2.0, 1.0, 1.0));
        assert_eq!((cfg.epsilon, cfg.seed), (1e-10, 42));
        assert_eq!(cfg.doubling_ns(), vec![80, 160, 320, 640]);
    }

    #[test]
    fn comments_and_spacing() {
        let s = Settings::parse("# sweep\n\n  r = 3   # graded\nT=1.5\n").unwrap();
        assert_eq!(s.r, Some(3.0));
        assert_eq!(s.t_final, Some(1.5));
    }

    #[test]
    fn alpha_out_of_range() {
        let s = Settings::parse("experiment=solve\nalpha=1.5").unwrap();
        let err = RunConfig::resolve(s).unwrap_err();
        assert!(err.0.contains("0 < alpha < 1"), "{err}");
    }

    #[test]
    fn unknown_key_names_line() {
        let err = Settings::parse("alpha=0.5\nbeta=2").unwrap_err();
        assert!(err.0.contains("line 2") && err.0.contains("`beta`"), "{err}");
        let err = Settings::parse("alpha").unwrap_err();
        assert!(err.0.contains("line 1"));
        let err = Settings::parse("N=ten").unwrap_err();
        assert!(err.0.contains("`ten`"));
    }

    #[test]
    fn later_layer_wins() {
        let file = Settings::parse("alpha=0.5\nN=20").unwrap();
        let flags = Settings {
            alpha: Some(0.3),
            ..Default::default()
        };
        let merged = file.overlay(flags);
        assert_eq!(merged.alpha, Some(0.3));
        assert_eq!(merged.n, Some(20));
    }

    #[test]
    fn format_checked_per_experiment() {
        let s = Settings::parse("experiment=table2\nformat=binary").unwrap();
        assert!(RunConfig::resolve(s).is_err());
        let s = Settings::parse("experiment=table2\nprecision=quad").unwrap();
        assert!(RunConfig::resolve(s).is_err());
        assert!(RunConfig::resolve(Settings::default()).is_err());
    }
}
