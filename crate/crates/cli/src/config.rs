//! Flat key=value run configuration with dotted section keys.
//!
//! A config file is a sequence of `key=value` lines; blank lines and lines
//! starting with `#` are ignored. Command-line `--set key=value` pairs are
//! applied after the file, and dedicated flags after those, so flags win.
//! Unknown keys are rejected, and every physical parameter is range-checked
//! at parse time — before any output file is touched.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use superburst_core::config::DEFAULT_GAMMA_HZ;
use superburst_core::hbt::BinningSpec;
use superburst_core::jump::DetectorModel;
use superburst_core::obe::{Pulse, PulseProfile};

use crate::CliError;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Key-value store assembled from file + overrides, with taken-key
/// tracking so leftovers can be rejected.
pub struct KeyMap {
    values: BTreeMap<String, String>,
    taken: Vec<String>,
}

impl KeyMap {
    pub fn from_sources(
        config_path: Option<&Path>,
        overrides: &[String],
    ) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        if let Some(path) = config_path {
            let text = std::fs::read_to_string(path).map_err(|e| {
                config_err(format!("cannot read config file {}: {e}", path.display()))
            })?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    config_err(format!(
                        "{}:{}: expected key=value, got {line:?}",
                        path.display(),
                        lineno + 1
                    ))
                })?;
                values.insert(key.trim().to_owned(), value.trim().to_owned());
            }
        }
        for pair in overrides {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| config_err(format!("--set expects key=value, got {pair:?}")))?;
            values.insert(key.trim().to_owned(), value.trim().to_owned());
        }
        Ok(Self {
            values,
            taken: Vec::new(),
        })
    }

    fn raw(&mut self, key: &str) -> Option<String> {
        self.taken.push(key.to_owned());
        self.values.get(key).cloned()
    }

    pub fn string(&mut self, key: &str) -> Option<String> {
        self.raw(key)
    }

    pub fn f64(&mut self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<f64>()
                .map_err(|_| config_err(format!("{key}: expected a number, got {v:?}"))),
        }
    }

    pub fn f64_opt(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| config_err(format!("{key}: expected a number, got {v:?}"))),
        }
    }

    pub fn u64(&mut self, key: &str, default: u64) -> Result<u64, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<u64>()
                .map_err(|_| config_err(format!("{key}: expected an integer, got {v:?}"))),
        }
    }

    pub fn u64_opt(&mut self, key: &str) -> Result<Option<u64>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<u64>()
                .map(Some)
                .map_err(|_| config_err(format!("{key}: expected an integer, got {v:?}"))),
        }
    }

    pub fn bool(&mut self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => match v.as_str() {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                other => Err(config_err(format!(
                    "{key}: expected true/false, got {other:?}"
                ))),
            },
        }
    }

    /// Comma-separated list of numbers.
    pub fn f64_list(&mut self, key: &str) -> Result<Vec<f64>, CliError> {
        match self.raw(key) {
            None => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| config_err(format!("{key}: bad list entry {s:?}")))
                })
                .collect(),
        }
    }

    /// Fail if any provided key was never consumed.
    pub fn reject_unknown(&self) -> Result<(), CliError> {
        for key in self.values.keys() {
            if !self.taken.iter().any(|t| t == key) {
                return Err(config_err(format!("unknown key {key:?}")));
            }
        }
        Ok(())
    }
}

/// Uniform ns-grid description shared by the simulation subcommands.
#[derive(Clone, Debug)]
pub struct GridNs {
    pub t_start_ns: f64,
    pub t_max_ns: f64,
    pub dt_ns: f64,
}

impl GridNs {
    pub fn times(&self) -> Vec<f64> {
        let n = ((self.t_max_ns - self.t_start_ns) / self.dt_ns).round() as usize;
        (0..=n).map(|i| self.t_start_ns + i as f64 * self.dt_ns).collect()
    }

    fn validate(&self, key_prefix: &str) -> Result<(), CliError> {
        if !(self.dt_ns > 0.0) {
            return Err(config_err(format!("{key_prefix}.dt_ns must be > 0")));
        }
        if self.t_max_ns <= self.t_start_ns {
            return Err(config_err(format!(
                "{key_prefix}.t_max_ns must exceed the grid start"
            )));
        }
        Ok(())
    }
}

/// Ladder-sizing parameters shared by `simulate-dicke` and `generate`.
#[derive(Clone, Debug)]
pub struct DickeParams {
    pub n_eff: u32,
    pub gamma_hz: f64,
}

impl DickeParams {
    pub fn inv_gamma_ns(&self) -> f64 {
        1.0e9 / self.gamma_hz
    }
}

fn parse_dicke_group(map: &mut KeyMap) -> Result<DickeParams, CliError> {
    let n_physical = map.u64("dicke.n_physical", 3000)?;
    let mu = map.f64("dicke.mu", 0.002)?;
    let n_eff_override = map.u64_opt("dicke.n_eff")?;
    let gamma_hz = map.f64("dicke.gamma_hz", DEFAULT_GAMMA_HZ)?;
    if !(gamma_hz > 0.0) {
        return Err(config_err("dicke.gamma_hz must be > 0"));
    }
    let n_eff = match n_eff_override {
        Some(n) => {
            let n = u32::try_from(n).map_err(|_| config_err("dicke.n_eff out of range"))?;
            if n < 1 {
                return Err(config_err("dicke.n_eff must be >= 1"));
            }
            n
        }
        None => {
            let n_physical = u32::try_from(n_physical)
                .map_err(|_| config_err("dicke.n_physical out of range"))?;
            superburst_core::config::effective_atom_number(n_physical, mu)
                .map_err(|e| config_err(e.to_string()))?
        }
    };
    Ok(DickeParams { n_eff, gamma_hz })
}

/// Initial ladder state selection.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    Inverted,
    Rung(usize),
    Populations(Vec<f64>),
}

fn parse_initial(map: &mut KeyMap) -> Result<InitialState, CliError> {
    let Some(value) = map.string("dicke.initial") else {
        return Ok(InitialState::Inverted);
    };
    if value == "inverted" {
        return Ok(InitialState::Inverted);
    }
    if let Some(rung) = value.strip_prefix("rung:") {
        let rung = rung
            .parse::<usize>()
            .map_err(|_| config_err(format!("dicke.initial: bad rung index {rung:?}")))?;
        return Ok(InitialState::Rung(rung));
    }
    if let Some(list) = value.strip_prefix("populations:") {
        let pops: Result<Vec<f64>, CliError> = list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| config_err(format!("dicke.initial: bad population {s:?}")))
            })
            .collect();
        return Ok(InitialState::Populations(pops?));
    }
    Err(config_err(format!(
        "dicke.initial: expected inverted, rung:<k>, or populations:<p0,p1,...>, got {value:?}"
    )))
}

/// Parsed configuration for `simulate-dicke`.
#[derive(Debug)]
pub struct SimulateDickeConfig {
    pub dicke: DickeParams,
    pub initial: InitialState,
    pub grid: GridNs,
    pub max_step: Option<f64>,
    pub convergence_check: bool,
    pub regression_t1_ns: Vec<f64>,
    pub out_dir: PathBuf,
}

pub fn parse_simulate_dicke(
    config_path: Option<&Path>,
    overrides: &[String],
    out_flag: Option<&Path>,
) -> Result<SimulateDickeConfig, CliError> {
    let mut map = KeyMap::from_sources(config_path, overrides)?;
    let dicke = parse_dicke_group(&mut map)?;
    let initial = parse_initial(&mut map)?;
    let grid = GridNs {
        t_start_ns: 0.0,
        t_max_ns: map.f64("grid.t_max_ns", 100.0)?,
        dt_ns: map.f64("grid.dt_ns", 0.5)?,
    };
    grid.validate("grid")?;
    let max_step = map.f64_opt("integrator.max_step")?;
    if let Some(step) = max_step {
        if !(step > 0.0) {
            return Err(config_err("integrator.max_step must be > 0"));
        }
    }
    let convergence_check = map.bool("integrator.convergence_check", false)?;
    let regression_t1_ns = map.f64_list("regression.t1_ns")?;
    for &t1 in &regression_t1_ns {
        if t1 < 0.0 || t1 >= grid.t_max_ns {
            return Err(config_err(format!(
                "regression.t1_ns: t1 = {t1} outside [0, grid.t_max_ns)"
            )));
        }
    }
    let out_dir = resolve_out(&mut map, "output.dir", out_flag)?;
    map.reject_unknown()?;
    Ok(SimulateDickeConfig {
        dicke,
        initial,
        grid,
        max_step,
        convergence_check,
        regression_t1_ns,
        out_dir,
    })
}

/// Parsed configuration for `simulate-obe`.
#[derive(Debug)]
pub struct SimulateObeConfig {
    pub pulse: Pulse,
    pub pulse_file: Option<PathBuf>,
    pub gamma_hz: f64,
    pub n_atoms: u32,
    pub initial_rho_ee: f64,
    pub grid: GridNs,
    pub out_dir: PathBuf,
}

pub fn parse_simulate_obe(
    config_path: Option<&Path>,
    overrides: &[String],
    out_flag: Option<&Path>,
) -> Result<SimulateObeConfig, CliError> {
    let mut map = KeyMap::from_sources(config_path, overrides)?;
    let pulse_file = map.string("pulse.file").map(PathBuf::from);
    let detuning = map.f64("pulse.detuning", 0.0)?;
    let profile = PulseProfile {
        omega_peak: map.f64("pulse.omega_peak", 6.5)?,
        t_on_ns: map.f64("pulse.t_on_ns", 0.0)?,
        t_off_ns: map.f64("pulse.t_off_ns", 12.0)?,
        edge_ns: map.f64("pulse.edge_ns", 1.0)?,
        detuning,
    };
    if pulse_file.is_none() {
        profile
            .validate()
            .map_err(|e| config_err(format!("pulse: {e}")))?;
    }
    let gamma_hz = map.f64("obe.gamma_hz", DEFAULT_GAMMA_HZ)?;
    if !(gamma_hz > 0.0) {
        return Err(config_err("obe.gamma_hz must be > 0"));
    }
    let n_atoms = map.u64("obe.n_atoms", 1)?;
    let n_atoms =
        u32::try_from(n_atoms).map_err(|_| config_err("obe.n_atoms out of range"))?;
    if n_atoms < 1 {
        return Err(config_err("obe.n_atoms must be >= 1"));
    }
    let initial_rho_ee = map.f64("obe.initial_rho_ee", 0.0)?;
    if !(0.0..=1.0).contains(&initial_rho_ee) {
        return Err(config_err("obe.initial_rho_ee must be in [0, 1]"));
    }
    let grid = GridNs {
        t_start_ns: map.f64("grid.t_start_ns", -1.0)?,
        t_max_ns: map.f64("grid.t_max_ns", 100.0)?,
        dt_ns: map.f64("grid.dt_ns", 0.1)?,
    };
    grid.validate("grid")?;
    let out_dir = resolve_out(&mut map, "output.dir", out_flag)?;
    map.reject_unknown()?;
    Ok(SimulateObeConfig {
        pulse: Pulse::Trapezoid(profile),
        pulse_file,
        gamma_hz,
        n_atoms,
        initial_rho_ee,
        grid,
        out_dir,
    })
}

/// Parsed configuration for `generate`.
#[derive(Debug)]
pub struct GenerateConfig {
    pub dicke: DickeParams,
    pub initial_rung: Option<usize>,
    pub n_repetitions: u64,
    pub t_max: f64,
    pub detector: DetectorModel,
    pub seed: u64,
    pub out_file: PathBuf,
}

pub fn parse_generate(
    config_path: Option<&Path>,
    overrides: &[String],
    out_flag: Option<&Path>,
    seed_flag: Option<u64>,
) -> Result<GenerateConfig, CliError> {
    let mut map = KeyMap::from_sources(config_path, overrides)?;
    let dicke = parse_dicke_group(&mut map)?;
    let initial_rung = map
        .u64_opt("dicke.initial_rung")?
        .map(|r| usize::try_from(r).map_err(|_| config_err("dicke.initial_rung out of range")))
        .transpose()?;
    let n_repetitions = map.u64("generate.n_repetitions", 30_400)?;
    if n_repetitions < 1 {
        return Err(config_err("generate.n_repetitions must be >= 1"));
    }
    let t_max = map.f64("generate.t_max", 100.0)?;
    if !(t_max > 0.0) {
        return Err(config_err("generate.t_max must be > 0"));
    }
    let detector = DetectorModel {
        efficiency: map.f64("detector.efficiency", 0.1)?,
        split_ratio: map.f64("detector.split_ratio", 0.5)?,
        time_jitter_ns: map.f64("detector.time_jitter_ns", 0.0)?,
        dead_time_ns: map.f64("detector.dead_time_ns", 0.0)?,
    };
    detector
        .validate()
        .map_err(|e| config_err(format!("detector: {e}")))?;
    let seed = resolve_seed(&mut map, seed_flag)?;
    let out_file = resolve_out(&mut map, "output.file", out_flag)?;
    map.reject_unknown()?;
    Ok(GenerateConfig {
        dicke,
        initial_rung,
        n_repetitions,
        t_max,
        detector,
        seed,
        out_file,
    })
}

/// Parsed configuration for `analyze`.
#[derive(Debug)]
pub struct AnalyzeConfig {
    pub input: PathBuf,
    pub spec: BinningSpec,
    pub out_dir: PathBuf,
}

pub fn parse_analyze(
    config_path: Option<&Path>,
    overrides: &[String],
    input_flag: Option<&Path>,
    out_flag: Option<&Path>,
) -> Result<AnalyzeConfig, CliError> {
    let mut map = KeyMap::from_sources(config_path, overrides)?;
    let input = match input_flag {
        Some(path) => path.to_path_buf(),
        None => map
            .string("input.file")
            .map(PathBuf::from)
            .ok_or_else(|| config_err("missing input.file (or --input)"))?,
    };
    if input_flag.is_some() {
        // Consume the key so a config-file value is not flagged as unknown.
        map.string("input.file");
    }
    let spec = BinningSpec {
        bin_ns: map.f64("bins.bin_ns", 1.0)?,
        t_start_ns: map.f64("bins.t_start_ns", 0.0)?,
        t_end_ns: map.f64("bins.t_end_ns", 100.0)?,
        integration_bins: {
            let n = map.u64("bins.integration_bins", 2)?;
            usize::try_from(n).map_err(|_| config_err("bins.integration_bins out of range"))?
        },
    };
    spec.validate()
        .map_err(|e| config_err(format!("bins: {e}")))?;
    let out_dir = resolve_out(&mut map, "output.dir", out_flag)?;
    map.reject_unknown()?;
    Ok(AnalyzeConfig {
        input,
        spec,
        out_dir,
    })
}

fn resolve_out(
    map: &mut KeyMap,
    key: &str,
    flag: Option<&Path>,
) -> Result<PathBuf, CliError> {
    let from_key = map.string(key);
    match flag {
        Some(path) => Ok(path.to_path_buf()),
        None => from_key
            .map(PathBuf::from)
            .ok_or_else(|| config_err(format!("missing {key} (or --out)"))),
    }
}

/// Seed precedence: `--seed` flag, then the `seed` key, then the
/// `SUPERBURST_SEED` environment variable, then 0.
fn resolve_seed(map: &mut KeyMap, seed_flag: Option<u64>) -> Result<u64, CliError> {
    let from_key = map.u64_opt("seed")?;
    if let Some(seed) = seed_flag {
        return Ok(seed);
    }
    if let Some(seed) = from_key {
        return Ok(seed);
    }
    match std::env::var("SUPERBURST_SEED") {
        Ok(v) => v
            .parse::<u64>()
            .map_err(|_| config_err(format!("SUPERBURST_SEED: expected an integer, got {v:?}"))),
        Err(_) => Ok(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn km(pairs: &[&str]) -> KeyMap {
        let overrides: Vec<String> = pairs.iter().map(|s| s.to_string()).collect();
        KeyMap::from_sources(None, &overrides).unwrap()
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut map = km(&["dicke.n_eff=6", "dicke.typo=1"]);
        parse_dicke_group(&mut map).unwrap();
        assert!(map.reject_unknown().is_err());
    }

    #[test]
    fn n_eff_override_beats_physical_parameters() {
        let mut map = km(&["dicke.n_eff=9", "dicke.n_physical=10", "dicke.mu=0.5"]);
        let d = parse_dicke_group(&mut map).unwrap();
        assert_eq!(d.n_eff, 9);
    }

    #[test]
    fn default_cloud_is_six_atoms() {
        let mut map = km(&[]);
        let d = parse_dicke_group(&mut map).unwrap();
        assert_eq!(d.n_eff, 6);
        assert!((d.inv_gamma_ns() - 26.525).abs() < 0.01);
    }

    #[test]
    fn initial_state_forms() {
        assert_eq!(parse_initial(&mut km(&[])).unwrap(), InitialState::Inverted);
        assert_eq!(
            parse_initial(&mut km(&["dicke.initial=rung:3"])).unwrap(),
            InitialState::Rung(3)
        );
        assert_eq!(
            parse_initial(&mut km(&["dicke.initial=populations:0.5,0.5"])).unwrap(),
            InitialState::Populations(vec![0.5, 0.5])
        );
        assert!(parse_initial(&mut km(&["dicke.initial=bogus"])).is_err());
    }

    #[test]
    fn bad_numbers_are_config_errors() {
        let mut map = km(&["dicke.mu=abc"]);
        let err = parse_dicke_group(&mut map).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn grid_times_are_inclusive_and_uniform() {
        let grid = GridNs {
            t_start_ns: 0.0,
            t_max_ns: 2.0,
            dt_ns: 0.5,
        };
        assert_eq!(grid.times(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn generate_defaults_mirror_the_dataset_shape() {
        let cfg = parse_generate(
            None,
            &["output.file=/tmp/x.csv".into()],
            None,
            None,
        )
        .unwrap();
        assert_eq!(cfg.n_repetitions, 30_400);
        assert_eq!(cfg.detector.efficiency, 0.1);
        assert_eq!(cfg.dicke.n_eff, 6);
    }

    #[test]
    fn analyze_requires_input() {
        let err = parse_analyze(None, &["output.dir=/tmp".into()], None, None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
