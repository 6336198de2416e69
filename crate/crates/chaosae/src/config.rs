//! Experiment configuration: JSON (comments allowed) layered over a scale
//! preset, then `CHAOSAE_*` environment variables, then CLI flags.

use std::io::Read;
use std::path::{Path, PathBuf};

use chaosae_core::dynamics::{IntegrationConfig, SystemSpec};
use chaosae_core::lyapunov::{FitPolicy, TwinParams};
use chaosae_core::nn::{Activation, Architecture, TrainConfig};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{HarnessError, Result};

/// Prefix of environment overrides; nested keys are joined with `__`,
/// e.g. `CHAOSAE_TRAIN__EPOCHS=20`.
pub const ENV_PREFIX: &str = "CHAOSAE_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// Full-length runs: 250000 retained steps, 7500 epochs, 10 LLE pairs.
    #[default]
    Paper,
    /// 50000 retained steps, 600 epochs, 5 LLE pairs.
    Desk,
}

/// One system column group of the LLE tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LleTarget {
    pub system: SystemSpec,
    /// Coordinates in the configured index base.
    pub coordinates: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LleConfig {
    pub displacement: f64,
    pub repeats: usize,
    pub fit: FitPolicy,
    /// Rows followed after each fork.
    pub horizon_steps: usize,
    /// Seeded offset applied to each pair's initial state before the transient.
    pub start_spread: f64,
    /// Used by the nearest-neighbour estimator.
    pub theiler_window: usize,
    /// Stride for reconstructing twin series; `None` means non-overlapping (`W`).
    pub reconstruction_stride: Option<usize>,
    pub targets: Vec<LleTarget>,
    /// Dump one divergence curve per system and coordinate as `.dat`.
    pub dump_curves: bool,
}

impl Default for LleConfig {
    fn default() -> Self {
        LleConfig {
            displacement: 1e-7,
            repeats: 10,
            fit: FitPolicy::default(),
            horizon_steps: 20_000,
            start_spread: 1.0,
            theiler_window: 50,
            reconstruction_stride: None,
            targets: vec![
                LleTarget { system: SystemSpec::rossler(), coordinates: vec![0, 1, 2] },
                LleTarget { system: SystemSpec::lorenz63(), coordinates: vec![0, 1, 2] },
                LleTarget { system: SystemSpec::lorenz96(), coordinates: vec![18, 19, 20] },
            ],
            dump_curves: true,
        }
    }
}

impl LleConfig {
    pub fn twin_params(&self) -> TwinParams {
        TwinParams {
            repeats: self.repeats,
            displacement: self.displacement,
            fit: self.fit,
            start_spread: self.start_spread,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    pub integration: IntegrationConfig,
    /// Training coordinate; `None` picks x for the 3-variable flows and the
    /// 19th site for Lorenz96.
    pub coordinate: Option<usize>,
    /// Interpret every configured coordinate as 1-based.
    pub one_based_coordinates: bool,
    pub window_size: usize,
    /// Window stride of the training and test sets.
    pub stride: usize,
    pub train_fraction: f64,
    pub train: TrainConfig,
    pub output_activation: Activation,
    pub alpha_grid: Vec<f64>,
    pub window_grid: Vec<usize>,
    pub lle: LleConfig,
    pub output_dir: PathBuf,
    pub scale: Scale,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            system: SystemSpec::lorenz63(),
            integration: IntegrationConfig::default(),
            coordinate: None,
            one_based_coordinates: false,
            window_size: 30,
            stride: 1,
            train_fraction: 0.8,
            train: TrainConfig::default(),
            output_activation: Activation::Linear,
            alpha_grid: vec![1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8],
            window_grid: vec![9, 16, 23, 30, 37],
            lle: LleConfig::default(),
            output_dir: PathBuf::from("out"),
            scale: Scale::Paper,
        }
    }
}

/// Retained steps of the desk preset.
pub const DESK_RETAINED_STEPS: usize = 50_000;
pub const DESK_EPOCHS: usize = 600;
pub const DESK_LLE_REPEATS: usize = 5;

impl ExperimentConfig {
    pub fn preset(scale: Scale) -> Self {
        let mut cfg = ExperimentConfig { scale, ..Default::default() };
        if scale == Scale::Desk {
            cfg.integration.total_steps = cfg.integration.transient_steps + DESK_RETAINED_STEPS;
            cfg.train.epochs = DESK_EPOCHS;
            cfg.lle.repeats = DESK_LLE_REPEATS;
        }
        cfg
    }

    /// Converts a configured coordinate to a 0-based index.
    pub fn index_of(&self, c: usize) -> Result<usize> {
        if self.one_based_coordinates {
            c.checked_sub(1).ok_or_else(|| HarnessError::Validation("1-based coordinates start at 1".into()))
        } else {
            Ok(c)
        }
    }

    /// 0-based training coordinate.
    pub fn training_coordinate(&self) -> Result<usize> {
        match self.coordinate {
            Some(c) => self.index_of(c),
            None => Ok(default_coordinate(&self.system)),
        }
    }

    pub fn architecture(&self, window: usize) -> Architecture {
        Architecture { output_activation: self.output_activation, ..Architecture::scaled(window) }
    }

    pub fn reconstruction_stride(&self, window: usize) -> usize {
        self.lle.reconstruction_stride.unwrap_or(window)
    }

    pub fn lle_integration(&self) -> IntegrationConfig {
        IntegrationConfig {
            total_steps: self.integration.transient_steps + self.lle.horizon_steps,
            ..self.integration.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Validation(m));
        self.integration.validate(&self.system).map_err(|e| HarnessError::Validation(e.to_string()))?;
        self.train.validate().map_err(|e| HarnessError::Validation(e.to_string()))?;
        self.lle.twin_params().validate().map_err(|e| HarnessError::Validation(e.to_string()))?;
        let coord = self.training_coordinate()?;
        if coord >= self.system.dim() {
            return bad(format!("coordinate {coord} out of range for {}", self.system.name()));
        }
        if self.window_size < 2 {
            return bad("window_size must be at least 2".into());
        }
        if self.stride == 0 {
            return bad("stride must be at least 1".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction must lie in (0, 1), got {}", self.train_fraction));
        }
        if self.lle.horizon_steps < 2 {
            return bad("lle.horizon_steps must be at least 2".into());
        }
        for t in &self.lle.targets {
            t.system.validate().map_err(|e| HarnessError::Validation(e.to_string()))?;
            for &c in &t.coordinates {
                if self.index_of(c)? >= t.system.dim() {
                    return bad(format!("lle coordinate {c} out of range for {}", t.system.name()));
                }
            }
        }
        Ok(())
    }

    pub fn validate_alpha_grid(&self) -> Result<()> {
        if self.alpha_grid.is_empty() {
            return Err(HarnessError::Validation("alpha_grid is empty".into()));
        }
        if self.alpha_grid.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
            return Err(HarnessError::Validation("alpha_grid values must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn validate_window_grid(&self) -> Result<()> {
        if self.window_grid.is_empty() {
            return Err(HarnessError::Validation("window_grid is empty".into()));
        }
        if self.window_grid.iter().any(|&w| w < 2) {
            return Err(HarnessError::Validation("window_grid values must be at least 2".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

pub fn default_coordinate(spec: &SystemSpec) -> usize {
    match spec {
        SystemSpec::Lorenz96 { n, .. } => 18.min(n - 1),
        _ => 0,
    }
}

/// Column label: X/Y/Z for the 3-variable flows, 1-based site number for Lorenz96.
pub fn coordinate_label(spec: &SystemSpec, index: usize) -> String {
    match spec {
        SystemSpec::Lorenz96 { .. } => (index + 1).to_string(),
        _ => ["X", "Y", "Z"].get(index).map_or_else(|| index.to_string(), |s| s.to_string()),
    }
}

/// Completes a partial `{"kind": ...}` object with that system's defaults.
fn fill_system_defaults(system: &mut Value) -> Result<()> {
    let Some(kind) = system.get("kind").and_then(Value::as_str) else {
        return Err(HarnessError::Validation("system needs a 'kind'".into()));
    };
    let spec = default_system(kind).ok_or_else(|| HarnessError::Validation(format!("unknown system kind '{kind}'")))?;
    let mut full = serde_json::to_value(spec).expect("system serializes");
    merge(&mut full, system.take());
    *system = full;
    Ok(())
}

fn default_system(kind: &str) -> Option<SystemSpec> {
    match kind {
        "rossler" => Some(SystemSpec::rossler()),
        "lorenz63" => Some(SystemSpec::lorenz63()),
        "lorenz96" => Some(SystemSpec::lorenz96()),
        _ => None,
    }
}

/// Flags that take precedence over everything else.
#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub scale: Option<Scale>,
}

/// Reads a JSON config, stripping `//` and `/* */` comments.
pub fn read_config_value(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_config_text(&text, path)
}

pub fn parse_config_text(text: &str, path: &Path) -> Result<Value> {
    let mut stripped = String::new();
    json_comments::StripComments::new(text.as_bytes())
        .read_to_string(&mut stripped)
        .map_err(|e| HarnessError::io(path, e))?;
    if stripped.trim().is_empty() {
        return Ok(Value::Object(Map::new()));
    }
    serde_json::from_str(&stripped).map_err(|e| crate::formats::parse_error(path, &stripped, &e))
}

/// Writes `value` at a `__`-separated lowercase key path.
fn set_path(root: &mut Value, path: &[String], value: Value) {
    let mut cur = root;
    for (i, key) in path.iter().enumerate() {
        if !cur.is_object() {
            *cur = Value::Object(Map::new());
        }
        let obj = cur.as_object_mut().unwrap();
        if i + 1 == path.len() {
            obj.insert(key.clone(), value);
            return;
        }
        cur = obj.entry(key.clone()).or_insert_with(|| Value::Object(Map::new()));
    }
}

/// Layers `CHAOSAE_A__B=v` pairs onto `overlay`; values parse as JSON and
/// fall back to plain strings.
pub fn apply_env<I: IntoIterator<Item = (String, String)>>(overlay: &mut Value, vars: I) {
    let mut vars: Vec<(String, String)> =
        vars.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX) && k.len() > ENV_PREFIX.len()).collect();
    vars.sort();
    for (k, v) in vars {
        let path: Vec<String> = k[ENV_PREFIX.len()..].split("__").map(|s| s.to_ascii_lowercase()).collect();
        let value = serde_json::from_str(&v).unwrap_or(Value::String(v));
        set_path(overlay, &path, value);
    }
}

fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Builds the effective configuration from the preset, an optional file
/// value, environment variables and CLI flags.
pub fn resolve<I>(file: Option<Value>, env: I, cli: &CliOverrides) -> Result<ExperimentConfig>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut overlay = file.unwrap_or_else(|| Value::Object(Map::new()));
    if !overlay.is_object() {
        return Err(HarnessError::Validation("config root must be a JSON object".into()));
    }
    apply_env(&mut overlay, env);

    let scale = match cli.scale {
        Some(s) => s,
        None => match overlay.get("scale") {
            Some(v) => {
                serde_json::from_value(v.clone()).map_err(|e| HarnessError::Validation(format!("scale: {e}")))?
            }
            None => Scale::Paper,
        },
    };

    let mut base = serde_json::to_value(ExperimentConfig::preset(scale)).expect("preset serializes");
    // a system given by kind starts from that system's own parameters
    if let Some(system) = overlay.get_mut("system").filter(|s| s.get("kind").is_some()) {
        fill_system_defaults(system)?;
        base["system"] = Value::Null;
    }
    if let Some(targets) = overlay.pointer_mut("/lle/targets").and_then(Value::as_array_mut) {
        for t in targets {
            if let Some(system) = t.get_mut("system").filter(|s| s.get("kind").is_some()) {
                fill_system_defaults(system)?;
            }
        }
    }
    merge(&mut base, overlay);

    let mut cfg: ExperimentConfig =
        serde_json::from_value(base).map_err(|e| HarnessError::Validation(e.to_string()))?;
    cfg.scale = scale;
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.train.seed = seed;
        cfg.integration.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Loads `path` (if any) and resolves it against the process environment.
pub fn load(path: Option<&Path>, cli: &CliOverrides) -> Result<ExperimentConfig> {
    let file = path.map(read_config_value).transpose()?;
    resolve(file, std::env::vars(), cli)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_env() -> Vec<(String, String)> {
        Vec::new()
    }

    #[test]
    fn empty_config_is_full_scale_lorenz63() {
        let cfg = resolve(None, no_env(), &CliOverrides::default()).unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.integration.total_steps, 300_000);
        assert_eq!(cfg.integration.transient_steps, 50_000);
        assert_eq!(cfg.integration.dt, 0.005);
        assert_eq!(cfg.train.epochs, 7500);
        assert_eq!(cfg.train.batch_size, 32);
        assert_eq!(cfg.train.learning_rate, 1e-3);
        assert_eq!(cfg.lle.displacement, 1e-7);
        assert_eq!(cfg.alpha_grid.len(), 6);
        assert_eq!(cfg.window_grid, vec![9, 16, 23, 30, 37]);
    }

    #[test]
    fn desk_preset_then_file_then_env_then_flags() {
        let file: Value = serde_json::json!({"scale": "desk", "train": {"epochs": 7}});
        let env = vec![
            ("CHAOSAE_TRAIN__BATCH_SIZE".to_string(), "16".to_string()),
            ("CHAOSAE_OUTPUT_DIR".to_string(), "from-env".to_string()),
            ("UNRELATED".to_string(), "1".to_string()),
        ];
        let env = [env, vec![("CHAOSAE_SYSTEM__RHO".to_string(), "30".to_string())]].concat();
        let cli = CliOverrides { seed: Some(42), ..Default::default() };
        let cfg = resolve(Some(file), env, &cli).unwrap();
        assert_eq!(cfg.scale, Scale::Desk);
        assert_eq!(cfg.integration.retained_steps(), DESK_RETAINED_STEPS);
        assert_eq!(cfg.lle.repeats, DESK_LLE_REPEATS);
        assert_eq!(cfg.train.epochs, 7);
        assert_eq!(cfg.train.batch_size, 16);
        assert_eq!(cfg.output_dir, PathBuf::from("from-env"));
        assert_eq!((cfg.train.seed, cfg.integration.seed), (42, 42));
        assert_eq!(cfg.system, SystemSpec::Lorenz63 { sigma: 10.0, rho: 30.0, beta: 8.0 / 3.0 });

        let cli = CliOverrides { scale: Some(Scale::Paper), ..Default::default() };
        let cfg = resolve(Some(serde_json::json!({"scale": "desk"})), no_env(), &cli).unwrap();
        assert_eq!(cfg.train.epochs, 7500);
    }

    #[test]
    fn switching_system_uses_its_parameters() {
        let cfg =
            resolve(Some(serde_json::json!({"system": {"kind": "rossler"}})), no_env(), &Default::default()).unwrap();
        assert_eq!(cfg.system, SystemSpec::rossler());
        let cfg = resolve(
            Some(serde_json::json!({"system": {"kind": "lorenz96", "F": 8.0},
                "lle": {"targets": [{"system": {"kind": "rossler", "c": 9.0}, "coordinates": [0]}]}})),
            no_env(),
            &Default::default(),
        )
        .unwrap();
        assert_eq!(cfg.system, SystemSpec::Lorenz96 { n: 40, forcing: 8.0 });
        assert_eq!(cfg.lle.targets[0].system, SystemSpec::Rossler { a: 0.1, b: 0.1, c: 9.0 });
        assert_eq!(cfg.training_coordinate().unwrap(), 18);
    }

    #[test]
    fn one_based_coordinates() {
        let v = serde_json::json!({"system": {"kind": "lorenz96"}, "coordinate": 19, "one_based_coordinates": true,
            "lle": {"targets": [{"system": {"kind": "lorenz96", "n": 40, "F": 8.15}, "coordinates": [19, 20, 21]}]}});
        let cfg = resolve(Some(v), no_env(), &Default::default()).unwrap();
        assert_eq!(cfg.training_coordinate().unwrap(), 18);
    }

    #[test]
    fn validation_errors() {
        let bad = serde_json::json!({"integration": {"transient_steps": 300000}});
        assert!(matches!(resolve(Some(bad), no_env(), &Default::default()), Err(HarnessError::Validation(_))));
        let bad = serde_json::json!({"system": {"kind": "duffing"}});
        assert!(resolve(Some(bad), no_env(), &Default::default()).is_err());
        let cfg = resolve(Some(serde_json::json!({"alpha_grid": []})), no_env(), &Default::default()).unwrap();
        assert!(cfg.validate_alpha_grid().is_err());
    }

    #[test]
    fn comments_are_stripped() {
        let text = "{\n // desk run\n \"scale\": \"desk\", /* short */ \"window_size\": 16\n}";
        let v = parse_config_text(text, Path::new("x.json")).unwrap();
        let cfg = resolve(Some(v), no_env(), &Default::default()).unwrap();
        assert_eq!(cfg.window_size, 16);
        assert!(parse_config_text("", Path::new("x.json")).unwrap().as_object().unwrap().is_empty());
        match parse_config_text("{\"a\": }", Path::new("x.json")) {
            Err(HarnessError::Parse { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn json_round_trip() {
        let mut cfg = ExperimentConfig::preset(Scale::Desk);
        cfg.system = SystemSpec::lorenz96();
        cfg.lle.fit = FitPolicy::Manual { start: 3, end: 900 };
        cfg.coordinate = Some(4);
        let back: ExperimentConfig = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }
}
