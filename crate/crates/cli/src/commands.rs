//! Subcommand implementations. Each command validates everything first,
//! renders its outputs in memory, and only then touches the filesystem, so
//! failures never leave partial output files.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use superburst_core::hbt::{
    accumulate, diagonal_g2, estimate_g2, merge, sum_rule_check, BinningSpec, CorrelationMap,
    HbtError,
};
use superburst_core::jump::{repetition_records, GenerateParams, TimeTagRecord};
use superburst_core::lindblad::{
    emission_rate, evolve, g2_equal_time, g2_two_time, IntegratorConfig, LindbladError,
};
use superburst_core::obe::{solve_obe_from, uncorrelated_rate, ObeError, Pulse};
use superburst_core::state::StateError;
use superburst_core::{build_operators, DickeState, LadderBasis};

use crate::config::{
    AnalyzeConfig, GenerateConfig, InitialState, SimulateDickeConfig, SimulateObeConfig,
};
use crate::formats;
use crate::CliError;

fn lindblad_err(e: LindbladError) -> CliError {
    match e {
        LindbladError::NumericalFailure { .. } | LindbladError::NotConverged { .. } => {
            CliError::Numerical(e.to_string())
        }
        _ => CliError::Config(e.to_string()),
    }
}

fn state_err(e: StateError) -> CliError {
    CliError::Config(e.to_string())
}

fn obe_err(e: ObeError) -> CliError {
    match e {
        ObeError::NumericalFailure { .. } => CliError::Numerical(e.to_string()),
        _ => CliError::Config(e.to_string()),
    }
}

fn hbt_err(e: HbtError) -> CliError {
    match e {
        HbtError::BadChannel { .. } => CliError::Input(e.to_string()),
        _ => CliError::Config(e.to_string()),
    }
}

fn build_initial(
    basis: &LadderBasis,
    initial: &InitialState,
) -> Result<DickeState, CliError> {
    match initial {
        InitialState::Inverted => Ok(DickeState::fully_inverted(basis)),
        InitialState::Rung(k) => DickeState::single_rung(basis, *k).map_err(state_err),
        InitialState::Populations(pops) => {
            DickeState::from_populations(basis, pops).map_err(state_err)
        }
    }
}

// ---------------------------------------------------------------------------
// simulate-dicke
// ---------------------------------------------------------------------------

pub fn simulate_dicke(cfg: &SimulateDickeConfig) -> Result<(), CliError> {
    let basis = LadderBasis::new(cfg.dicke.n_eff)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let ops = build_operators(&basis);
    let initial = build_initial(&basis, &cfg.initial)?;

    let mut int_cfg = IntegratorConfig::for_n_atoms(cfg.dicke.n_eff);
    if let Some(step) = cfg.max_step {
        int_cfg.max_step = step;
    }
    int_cfg.convergence_check = cfg.convergence_check;

    let inv_gamma_ns = cfg.dicke.inv_gamma_ns();
    let t_ns = cfg.grid.times();
    let t_gu: Vec<f64> = t_ns.iter().map(|t| t / inv_gamma_ns).collect();

    let states = evolve(&initial, &ops, &t_gu, &int_cfg).map_err(lindblad_err)?;
    let mut curve = Vec::with_capacity(states.len());
    for (s, &t) in states.iter().zip(t_ns.iter()) {
        let gamma = emission_rate(s, &ops).map_err(lindblad_err)?;
        let g2 = g2_equal_time(s, &ops).map_err(lindblad_err)?;
        curve.push((t, gamma, g2));
    }

    let mut regression_rows = Vec::new();
    for &t1_ns in &cfg.regression_t1_ns {
        let t1 = t1_ns / inv_gamma_ns;
        let state_t1 = if t1 == 0.0 {
            initial.clone()
        } else {
            evolve(&initial, &ops, &[0.0, t1], &int_cfg)
                .map_err(lindblad_err)?
                .pop()
                .expect("evolve returns one state per grid point")
        };
        let n_tau = ((cfg.grid.t_max_ns - t1_ns) / cfg.grid.dt_ns).floor() as usize;
        let tau_gu: Vec<f64> = (0..=n_tau)
            .map(|i| i as f64 * cfg.grid.dt_ns / inv_gamma_ns)
            .collect();
        let row = g2_two_time(&state_t1, &ops, &tau_gu, &int_cfg).map_err(lindblad_err)?;
        for (i, g2) in row.into_iter().enumerate() {
            regression_rows.push((t1_ns, t1_ns + i as f64 * cfg.grid.dt_ns, g2));
        }
    }

    formats::write_file(
        &cfg.out_dir.join("dicke_curve.csv"),
        &formats::render_dicke_curve(&curve),
    )?;
    if !regression_rows.is_empty() {
        formats::write_file(
            &cfg.out_dir.join("dicke_regression.csv"),
            &formats::render_regression(&regression_rows),
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate-obe
// ---------------------------------------------------------------------------

pub fn simulate_obe(cfg: &SimulateObeConfig) -> Result<(), CliError> {
    let pulse = match &cfg.pulse_file {
        Some(path) => Pulse::Tabulated(formats::read_tabulated_pulse(
            path,
            cfg.pulse.detuning(),
        )?),
        None => cfg.pulse.clone(),
    };
    let t_ns = cfg.grid.times();
    let states =
        solve_obe_from(&pulse, &t_ns, cfg.gamma_hz, cfg.initial_rho_ee).map_err(obe_err)?;
    let rates = uncorrelated_rate(&states, cfg.n_atoms);
    let rows: Vec<(f64, f64, f64)> = states
        .iter()
        .zip(rates.iter())
        .map(|(s, &rate)| (s.time_ns, s.rho_ee, rate))
        .collect();
    formats::write_file(
        &cfg.out_dir.join("obe_curve.csv"),
        &formats::render_obe_curve(&rows),
    )
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

pub fn generate(cfg: &GenerateConfig) -> Result<(), CliError> {
    let basis = LadderBasis::new(cfg.dicke.n_eff)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let initial_rung = cfg.initial_rung.unwrap_or(basis.dim() - 1);
    if initial_rung >= basis.dim() {
        return Err(CliError::Config(format!(
            "dicke.initial_rung = {initial_rung} outside ladder of dimension {}",
            basis.dim()
        )));
    }
    let params = GenerateParams {
        basis,
        initial_rung,
        t_max: cfg.t_max,
        inv_gamma_ns: cfg.dicke.inv_gamma_ns(),
        seed: cfg.seed,
    };

    // Repetitions are independent (one RNG stream each), so sharding over a
    // thread pool reproduces the sequential output exactly.
    let per_rep: Result<Vec<Vec<TimeTagRecord>>, _> = (0..cfg.n_repetitions)
        .into_par_iter()
        .map(|rep| repetition_records(&params, &cfg.detector, rep))
        .collect();
    let records: Vec<TimeTagRecord> = per_rep
        .map_err(|e| CliError::Config(e.to_string()))?
        .into_iter()
        .flatten()
        .collect();

    let text = formats::render_timetag(
        &records,
        0.0,
        cfg.n_repetitions,
        params.fixed_photon_number(),
    );
    formats::write_file(&cfg.out_file, &text)
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

/// Split records into contiguous chunks on repetition boundaries.
fn repetition_chunks(records: &[TimeTagRecord], target: usize) -> Vec<&[TimeTagRecord]> {
    if records.is_empty() {
        return Vec::new();
    }
    let target = target.max(1);
    let approx = records.len().div_ceil(target);
    let mut chunks = Vec::new();
    let mut start = 0;
    while start < records.len() {
        let mut end = (start + approx).min(records.len());
        // Extend to the end of the repetition straddling the cut.
        while end < records.len() && records[end].repetition == records[end - 1].repetition {
            end += 1;
        }
        chunks.push(&records[start..end]);
        start = end;
    }
    chunks
}

fn accumulate_sharded(
    records: &[TimeTagRecord],
    spec: &BinningSpec,
    n_repetitions: u64,
) -> Result<CorrelationMap, CliError> {
    let chunks = repetition_chunks(records, rayon::current_num_threads() * 4);
    let mut map = if chunks.is_empty() {
        CorrelationMap::empty(*spec).map_err(hbt_err)?
    } else {
        let partials: Result<Vec<CorrelationMap>, HbtError> = chunks
            .into_par_iter()
            .map(|chunk| accumulate(chunk, spec, Some(0)))
            .collect();
        let partials = partials.map_err(hbt_err)?;
        let mut iter = partials.into_iter();
        let first = iter.next().expect("at least one chunk");
        iter.try_fold(first, |acc, next| merge(&acc, &next))
            .map_err(hbt_err)?
    };
    map.n_repetitions = n_repetitions;
    Ok(map)
}

pub fn analyze(cfg: &AnalyzeConfig) -> Result<(), CliError> {
    let file = formats::read_timetag(&cfg.input)?;
    let records = formats::shifted_records(&file);
    let n_repetitions = file.n_repetitions.unwrap_or_else(|| {
        records.last().map_or(0, |r| r.repetition + 1)
    });
    let map = accumulate_sharded(&records, &cfg.spec, n_repetitions)?;
    let est = estimate_g2(&map);
    let diag = diagonal_g2(&map).map_err(hbt_err)?;
    let report = sum_rule_check(&map, file.fixed_nph);

    formats::write_file(
        &cfg.out_dir.join("g2map.csv"),
        &formats::render_g2map(&est, &map.nc, &map.n1, &map.n2),
    )?;
    formats::write_file(
        &cfg.out_dir.join("diagonal.csv"),
        &formats::render_diagonal(&diag),
    )?;
    formats::write_file(
        &cfg.out_dir.join("sum_rule.txt"),
        &formats::render_sum_rule(&report),
    )
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

pub struct CompareArgs {
    pub model: PathBuf,
    pub data: PathBuf,
    pub t1_ns: Option<f64>,
    pub out: Option<PathBuf>,
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

/// Model series as sorted `(t, g2)` pairs with NaN entries dropped.
fn load_model(path: &Path, t1_ns: Option<f64>) -> Result<Vec<(f64, f64)>, CliError> {
    let text = read_text(path)?;
    let header = text.lines().next().unwrap_or("").trim();
    let series = match header {
        "time_ns,gamma,g2" => formats::parse_dicke_curve_g2(&text, path)?,
        "t1_ns,t2_ns,g2" => {
            let t1 = t1_ns.ok_or_else(|| {
                CliError::Config("--t1-ns is required for a regression model file".into())
            })?;
            formats::parse_regression_slice(&text, path, t1)?
        }
        other => {
            return Err(CliError::Input(format!(
                "{}: unrecognized model header {other:?}",
                path.display()
            )))
        }
    };
    let mut pairs: Vec<(f64, f64)> = series
        .iter()
        .filter(|p| p.value.is_finite())
        .map(|p| (p.t_ns, p.value))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    if pairs.len() < 2 {
        return Err(CliError::Input(format!(
            "{}: fewer than two defined model points",
            path.display()
        )));
    }
    Ok(pairs)
}

/// Data series as `(t, g2, sigma)` points.
fn load_data(path: &Path, t1_ns: Option<f64>) -> Result<Vec<formats::SeriesPoint>, CliError> {
    let text = read_text(path)?;
    let header = text.lines().next().unwrap_or("").trim();
    match header {
        "t_ns,g2,sigma" => formats::parse_diagonal(&text, path),
        "#g2map-v1" => {
            let t1 = t1_ns.ok_or_else(|| {
                CliError::Config("--t1-ns is required for a g2map data file".into())
            })?;
            let rows = formats::parse_g2map(&text, path)?;
            if rows.is_empty() {
                return Err(CliError::Input(format!("{}: empty map", path.display())));
            }
            let nearest = rows
                .iter()
                .map(|r| r.t1_ns)
                .fold(rows[0].t1_ns, |best, t| {
                    if (t - t1).abs() < (best - t1).abs() {
                        t
                    } else {
                        best
                    }
                });
            Ok(rows
                .iter()
                .filter(|r| (r.t1_ns - nearest).abs() < 1e-9)
                .map(|r| formats::SeriesPoint {
                    t_ns: r.t2_ns,
                    value: r.g2,
                    sigma: r.sigma,
                })
                .collect())
        }
        other => Err(CliError::Input(format!(
            "{}: unrecognized data header {other:?}",
            path.display()
        ))),
    }
}

fn interpolate(series: &[(f64, f64)], t: f64) -> Option<f64> {
    let (t_min, t_max) = (series[0].0, series[series.len() - 1].0);
    if t < t_min || t > t_max {
        return None;
    }
    let idx = series.partition_point(|&(ts, _)| ts <= t);
    if idx == 0 {
        return Some(series[0].1);
    }
    if idx == series.len() {
        return Some(series[series.len() - 1].1);
    }
    let (t0, v0) = series[idx - 1];
    let (t1, v1) = series[idx];
    Some(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
}

/// Per-bin z-scores between a model g² curve and estimated data; returns
/// the rendered report.
pub fn compare(args: &CompareArgs) -> Result<String, CliError> {
    let model = load_model(&args.model, args.t1_ns)?;
    let data = load_data(&args.data, args.t1_ns)?;

    let mut points = Vec::new();
    for p in &data {
        if !p.value.is_finite() || !(p.sigma > 0.0) {
            continue;
        }
        let Some(model_value) = interpolate(&model, p.t_ns) else {
            continue;
        };
        let z = (p.value - model_value) / p.sigma;
        points.push((p.t_ns, model_value, p.value, p.sigma, z));
    }

    let n = points.len();
    let within = points.iter().filter(|p| p.4.abs() <= 2.0).count();
    let mean_z = points.iter().map(|p| p.4).sum::<f64>() / n.max(1) as f64;
    let rms_z = (points.iter().map(|p| p.4 * p.4).sum::<f64>() / n.max(1) as f64).sqrt();
    let max_abs_z = points.iter().map(|p| p.4.abs()).fold(0.0, f64::max);

    let mut report = String::from("#compare-v1\n");
    report.push_str(&format!("model={}\n", args.model.display()));
    report.push_str(&format!("data={}\n", args.data.display()));
    report.push_str(&format!("n_points={n}\n"));
    if n > 0 {
        report.push_str(&format!(
            "frac_within_2sigma={:.6}\n",
            within as f64 / n as f64
        ));
        report.push_str(&format!("mean_z={mean_z:.6}\n"));
        report.push_str(&format!("rms_z={rms_z:.6}\n"));
        report.push_str(&format!("max_abs_z={max_abs_z:.6}\n"));
    } else {
        report.push_str("frac_within_2sigma=nan\n");
        report.push_str("mean_z=nan\nrms_z=nan\nmax_abs_z=nan\n");
    }
    for (t, model_v, data_v, sigma, z) in &points {
        report.push_str(&format!(
            "point t_ns={t:.3} model={model_v:.6} data={data_v:.6} sigma={sigma:.6} z={z:.3}\n"
        ));
    }

    if let Some(out) = &args.out {
        formats::write_file(out, &report)?;
    }
    Ok(report)
}
