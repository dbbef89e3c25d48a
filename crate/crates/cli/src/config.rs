//! Run configuration: TOML file, flag overrides and preset defaults.

use num_complex::Complex64;
use qbaxter::kernels::ModelParams;
use qbaxter::special_functions::Periods;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Configuration problem, located by its field path.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { field: field.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error at `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Every acceptance case.
    #[default]
    Desk,
    /// Single-variable paths only.
    Quick,
}

/// Periods and coupling as `[re, im]` pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub omega1: [f64; 2],
    pub omega2: [f64; 2],
    pub g: [f64; 2],
}

impl Default for ParamsConfig {
    fn default() -> Self {
        ParamsConfig { omega1: [1.0, 0.0], omega2: [std::f64::consts::SQRT_2, 0.0], g: [0.6, 0.0] }
    }
}

impl ParamsConfig {
    pub fn model(&self) -> Result<ModelParams, ConfigError> {
        let c = |v: [f64; 2]| Complex64::new(v[0], v[1]);
        let om = Periods::new(c(self.omega1), c(self.omega2)).map_err(|e| ConfigError::new("params.omega", e.to_string()))?;
        ModelParams::new(om, c(self.g)).map_err(|e| ConfigError::new("params.g", e.to_string()))
    }
}

/// Subcommand options; unset fields take the preset defaults of each check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Real-part grid `start:stop:step` for `eval-s2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    /// Imaginary-part grid for `eval-s2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im_grid: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub preset: Preset,
    pub params: ParamsConfig,
    pub tolerances: BTreeMap<String, f64>,
    pub scenario: Scenario,
}

/// Tolerance keys and their defaults.
pub const TOLERANCES: &[(&str, f64)] = &[
    ("s2_identity", 1e-10),
    ("s2_product", 1e-9),
    ("s2_special", 1e-10),
    ("s2_residue", 1e-8),
    ("kernel_identity", 1e-11),
    ("lr_blocks", 1e-8),
    ("double_zero_slope", 0.05),
    ("series_quadrature", 1e-6),
    ("commutativity_n1", 1e-6),
    ("commutativity_n2", 1e-4),
    ("mq_n1", 1e-6),
    ("mq_n2", 1e-5),
    ("eigenfunction", 1e-5),
];

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 7,
            preset: Preset::Desk,
            params: ParamsConfig::default(),
            tolerances: TOLERANCES.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            scenario: Scenario::default(),
        }
    }
}

/// File contents before defaults are applied; every field optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialConfig {
    seed: Option<u64>,
    preset: Option<Preset>,
    params: Option<PartialParams>,
    #[serde(default)]
    tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    scenario: Scenario,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialParams {
    omega1: Option<[f64; 2]>,
    omega2: Option<[f64; 2]>,
    g: Option<[f64; 2]>,
}

/// Values given on the command line; `None` keeps the file or default value.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub preset: Option<Preset>,
    pub omega1: Option<[f64; 2]>,
    pub omega2: Option<[f64; 2]>,
    pub g: Option<[f64; 2]>,
    pub tolerances: Vec<(String, f64)>,
    pub scenario: Scenario,
}

impl RunConfig {
    /// Parses TOML text on top of the defaults.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::new("<file>", e.to_string()))?;
        let part: PartialConfig =
            serde_path_to_error::deserialize(de).map_err(|e| ConfigError::new(e.path().to_string(), e.inner().to_string()))?;
        let mut cfg = RunConfig::default();
        if let Some(s) = part.seed {
            cfg.seed = s;
        }
        if let Some(p) = part.preset {
            cfg.preset = p;
        }
        if let Some(p) = part.params {
            cfg.params.omega1 = p.omega1.unwrap_or(cfg.params.omega1);
            cfg.params.omega2 = p.omega2.unwrap_or(cfg.params.omega2);
            cfg.params.g = p.g.unwrap_or(cfg.params.g);
        }
        for (k, v) in part.tolerances {
            cfg.set_tolerance(&k, v)?;
        }
        cfg.scenario = part.scenario;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    fn set_tolerance(&mut self, key: &str, value: f64) -> Result<(), ConfigError> {
        let field = format!("tolerances.{key}");
        if !TOLERANCES.iter().any(|(k, _)| *k == key) {
            return Err(ConfigError::new(field, "unknown tolerance key"));
        }
        if !(value > 0.0 && value.is_finite()) {
            return Err(ConfigError::new(field, "tolerance must be positive and finite"));
        }
        self.tolerances.insert(key.to_string(), value);
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(p) = o.preset {
            self.preset = p;
        }
        self.params.omega1 = o.omega1.unwrap_or(self.params.omega1);
        self.params.omega2 = o.omega2.unwrap_or(self.params.omega2);
        self.params.g = o.g.unwrap_or(self.params.g);
        for (k, v) in &o.tolerances {
            self.set_tolerance(k, *v)?;
        }
        let s = &o.scenario;
        let t = &mut self.scenario;
        t.n = s.n.or(t.n);
        t.k = s.k.or(t.k);
        t.trials = s.trials.or(t.trials);
        t.grid = s.grid.clone().or(t.grid.take());
        t.im_grid = s.im_grid.clone().or(t.im_grid.take());
        t.lambda = s.lambda.or(t.lambda);
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.seed > i64::MAX as u64 {
            return Err(ConfigError::new("seed", "must fit a TOML integer (at most 2⁶³ - 1)"));
        }
        self.params.model()?;
        if let Some(n) = self.scenario.n {
            if n == 0 || n > 3 {
                return Err(ConfigError::new("scenario.n", "must be 1, 2 or 3"));
            }
        }
        if let Some(k) = self.scenario.k {
            if !(0..=8).contains(&k) {
                return Err(ConfigError::new("scenario.k", "must lie in 0..=8"));
            }
        }
        if self.scenario.trials == Some(0) {
            return Err(ConfigError::new("scenario.trials", "must be positive"));
        }
        for (field, g) in [("scenario.grid", &self.scenario.grid), ("scenario.im_grid", &self.scenario.im_grid)] {
            if let Some(g) = g {
                parse_grid(g).map_err(|m| ConfigError::new(field, m))?;
            }
        }
        Ok(())
    }

    pub fn tol(&self, key: &str) -> f64 {
        self.tolerances[key]
    }

    pub fn model(&self) -> ModelParams {
        self.params.model().expect("validated configuration")
    }
}

/// `start:stop:step`, inclusive of `stop` up to rounding; a single number is a one-point grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number"));
    match parts.as_slice() {
        [x] => Ok(vec![num(x)?]),
        [a, b, h] => {
            let (a, b, h) = (num(a)?, num(b)?, num(h)?);
            if !(h > 0.0) || !(b >= a) {
                return Err("need start ≤ stop and step > 0".into());
            }
            let count = ((b - a) / h + 1e-9).floor() as usize + 1;
            if count > 1_000_000 {
                return Err("grid has more than a million points".into());
            }
            // Rounded to the step's decimal precision, so `0.1` steps give clean values.
            Ok((0..count).map(|j| ((a + j as f64 * h) * 1e12).round() / 1e12).collect())
        }
        _ => Err("expected `start:stop:step`".into()),
    }
}

/// `re,im` or a bare real number.
pub fn parse_complex(spec: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = spec.split(',').collect();
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number"));
    match parts.as_slice() {
        [re] => Ok([num(re)?, 0.0]),
        [re, im] => Ok([num(re)?, num(im)?]),
        _ => Err(format!("`{spec}` is not `re,im`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn errors_name_the_field() {
        let e = RunConfig::from_toml("[params]\ng = [\"x\", 0.0]\n").unwrap_err();
        assert!(e.field.starts_with("params.g"), "{e}");
        let e = RunConfig::from_toml("[tolerances]\nbogus = 1e-3\n").unwrap_err();
        assert_eq!(e.field, "tolerances.bogus");
        let e = RunConfig::from_toml("[params]\ng = [5.0, 0.0]\n").unwrap_err();
        assert_eq!(e.field, "params.g");
        let e = RunConfig::from_toml("[scenario]\ngrid = \"1:0:0.1\"\n").unwrap_err();
        assert_eq!(e.field, "scenario.grid");
        let e = RunConfig::from_toml("colour = 3\n").unwrap_err();
        assert!(e.message.contains("colour"), "{e}");
    }

    #[test]
    fn flags_override_file() {
        let mut cfg = RunConfig::from_toml("seed = 3\n[params]\ng = [0.5, 0.0]\n[scenario]\nn = 2\n").unwrap();
        let o = Overrides { seed: Some(11), scenario: Scenario { n: Some(1), ..Default::default() }, ..Default::default() };
        cfg.apply(&o).unwrap();
        assert_eq!((cfg.seed, cfg.scenario.n, cfg.params.g), (11, Some(1), [0.5, 0.0]));
    }

    #[test]
    fn grids() {
        let g = parse_grid("-2:2:0.1").unwrap();
        assert_eq!(g.len(), 41);
        assert_eq!((g[0], g[20], g[40]), (-2.0, 0.0, 2.0));
        assert_eq!(parse_grid("0.5").unwrap(), vec![0.5]);
        assert!(parse_grid("1:2").is_err());
        assert_eq!(parse_complex("1,0.5").unwrap(), [1.0, 0.5]);
    }

    proptest! {
        #[test]
        fn round_trips(seed in 0u64..=i64::MAX as u64, g in 0.05f64..1.0, w in 1.0f64..2.0, n in proptest::option::of(1usize..=3),
                       tol in 1e-12f64..1e-3, lam in proptest::option::of(-1.0f64..1.0)) {
            let mut cfg = RunConfig { seed, ..Default::default() };
            cfg.params.omega2 = [w, 0.1];
            cfg.params.g = [g, -0.05];
            cfg.scenario.n = n;
            cfg.scenario.lambda = lam.map(|l| [l, 0.0]);
            cfg.scenario.grid = Some("-1:1:0.25".into());
            cfg.tolerances.insert("mq_n2".into(), tol);
            prop_assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        }
    }
}
