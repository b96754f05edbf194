//! Execution of validated experiments.

use std::sync::Arc;

use fblab_core::bessel::{j_eval, BesselOrder};
use fblab_core::damped_wave::{self, DampedWaveConfig, DecayModel, InitialData};
use fblab_core::inequality::{self, NtTrialConfig};
use fblab_core::measure::{self, RadialSet};
use fblab_core::pls::{self, SweepResult};
use fblab_core::transform::{band_nodes_for, plancherel_residual, BandProfile, RadialGrid};
use fblab_core::{rng, Error};
use rand::RngCore;
use serde::Serialize;
use serde_json::json;

use crate::config::*;
use crate::output::Output;

/// Failure classes with their exit codes.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Io(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numerical(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Csv(_) => Failure::Io(e.to_string()),
            e if e.is_numerical() => Failure::Numerical(e.to_string()),
            e => Failure::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> fblab_core::Result<()>) -> Outcome<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn records<T: Serialize>(rows: &[T]) -> Outcome<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Failure::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Failure::Io(e.to_string()))
}

fn bands(r: usize) -> Vec<[f64; 2]> {
    (0..r).map(|b| [b as f64, b as f64 + 1.0]).collect()
}

fn nt_set(p: &NazarovTuranParams, seed: u64) -> Outcome<RadialSet> {
    let [a, b] = p.interval;
    let t_max = b.max(1.0);
    Ok(match &p.set {
        Some(spec) => measure::generate_set(spec, t_max, seed)?,
        None => RadialSet::new(vec![[a, 0.5 * (a + b)]], None, t_max)?,
    })
}

fn damped_config(p: &DampedWaveParams, seed: u64) -> Outcome<DampedWaveConfig> {
    let config = DampedWaveConfig {
        d: p.d,
        s: p.s,
        damping: measure::generate_set(&p.damping, p.l.max(1.0), seed)?,
        c0: p.c0,
        l: p.l,
        modes: p.modes,
        t_final: p.t_final,
        output_dt: p.output_dt,
    };
    config.validate()?;
    Ok(config)
}

/// Cheap checks of everything that does not need the computation itself.
pub fn validate(params: &Params, seed: u64) -> Outcome<()> {
    let order = |alpha: f64| BesselOrder::new(alpha).map(|_| ()).map_err(Failure::from);
    match params {
        Params::KernelCheck(p) => {
            if p.m_max > 6 || !(p.s_min >= 1.0) || !(p.s_max >= p.s_min) || p.samples < 2 {
                return Err(Failure::Config(
                    "kernel-check needs m_max ≤ 6, 1 ≤ s_min ≤ s_max and samples ≥ 2".into(),
                ));
            }
        }
        Params::Density(p) => {
            order(p.alpha)?;
            measure::generate_set(&p.set, p.t_max, seed)?;
        }
        Params::TransformCheck(p) => {
            order(p.alpha)?;
            if p.r == 0 || p.profiles == 0 {
                return Err(Failure::Config("transform-check needs r ≥ 1 and profiles ≥ 1".into()));
            }
        }
        Params::PlsSweep(p) => {
            order(p.alpha)?;
            measure::generate_set(&p.set, p.set_t_max, seed)?;
        }
        Params::Multiband(p) => {
            order(p.alpha)?;
            measure::generate_set(&p.set, p.set_t_max, seed)?;
            if p.positions.is_some() == p.random.is_some() {
                return Err(Failure::Config("multiband needs exactly one of `positions`, `random`".into()));
            }
        }
        Params::NazarovTuran(p) => {
            nt_set(p, seed)?;
        }
        Params::Bernstein(p) => {
            order(p.alpha)?;
            if let Some(&k) = p.k_list.iter().find(|&&k| k > inequality::MAX_BERNSTEIN_ORDER) {
                return Err(Failure::Config(format!("derivative order {k} above 4")));
            }
        }
        Params::DampedWave(p) => {
            damped_config(p, seed)?;
        }
    }
    Ok(())
}

/// Run the experiment, writing result files. Returns the one-line summary.
pub fn execute(params: &Params, seed: u64, out: &mut Output) -> Outcome<String> {
    match params {
        Params::KernelCheck(p) => kernel_check(p, out),
        Params::Density(p) => density(p, seed, out),
        Params::TransformCheck(p) => transform_check(p, seed, out),
        Params::PlsSweep(p) => {
            let set = measure::generate_set(&p.set, p.set_t_max, seed)?;
            let result = pls::sweep_r(p.alpha, &set, &p.r_list, &p.pls, seed)?;
            write_sweep(&result, out)
        }
        Params::Multiband(p) => {
            let set = measure::generate_set(&p.set, p.set_t_max, seed)?;
            let positions = match (&p.positions, &p.random) {
                (Some(pos), None) => pos.clone(),
                (None, Some(r)) => pls::random_positions(r.n, r.count, r.max_position, seed)?,
                _ => return Err(Failure::Config("multiband needs exactly one of `positions`, `random`".into())),
            };
            let result = pls::multiband_sweep(p.alpha, &positions, &set, &p.pls, seed)?;
            write_sweep(&result, out)
        }
        Params::NazarovTuran(p) => nazarov_turan(p, seed, out),
        Params::Bernstein(p) => bernstein(p, seed, out),
        Params::DampedWave(p) => damped(p, seed, out),
    }
}

fn write_sweep(result: &SweepResult, out: &mut Output) -> Outcome<String> {
    out.write("sweep.csv", &csv_bytes(|b| result.write_csv(b))?)?;
    out.write_json("summary.json", result)?;
    let s = result.summary;
    Ok(format!(
        "min_kappa={:.6}, max_kappa={:.6}, ratio={:.6}",
        s.min_kappa, s.max_kappa, s.ratio
    ))
}

fn kernel_check(p: &KernelCheckParams, out: &mut Output) -> Outcome<String> {
    let grid: Vec<f64> = (0..p.samples)
        .map(|i| p.s_min + (p.s_max - p.s_min) * i as f64 / (p.samples - 1) as f64)
        .collect();
    #[derive(Serialize)]
    struct Row {
        m: u32,
        residual: f64,
    }
    let rows = (0..=p.m_max)
        .map(|m| Ok(Row { m, residual: inequality::decomposition_residual(m, &grid)? }))
        .collect::<Outcome<Vec<_>>>()?;
    // closed forms of the two lowest half-integer kernels
    let half = BesselOrder::new(0.5)?;
    let three_halves = BesselOrder::new(1.5)?;
    let closed_form_error = (0..2000)
        .map(|i| 0.1 * 1000f64.powf(i as f64 / 1999.0))
        .map(|x: f64| {
            let (s, c) = x.sin_cos();
            let e1 = (j_eval(&half, x) - s / x).abs() / (s / x).abs().max(half.envelope(x));
            let exact = 3.0 * (s - x * c) / (x * x * x);
            let e2 = (j_eval(&three_halves, x) - exact).abs() / exact.abs().max(three_halves.envelope(x));
            e1.max(e2)
        })
        .fold(0.0, f64::max);
    let max_residual = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    out.write("residuals.csv", &records(&rows)?)?;
    out.write_json(
        "summary.json",
        &json!({
            "s_range": [p.s_min, p.s_max],
            "samples": p.samples,
            "residuals": rows.iter().map(|r| r.residual).collect::<Vec<_>>(),
            "max_residual": max_residual,
            "closed_form_max_rel_error": closed_form_error,
        }),
    )?;
    Ok(format!(
        "max_residual={max_residual:.3e}, closed_form_max_rel_error={closed_form_error:.3e}"
    ))
}

fn density(p: &DensityParams, seed: u64, out: &mut Output) -> Outcome<String> {
    let set = measure::generate_set(&p.set, p.t_max, seed)?;
    let report = measure::density_report(p.alpha, &set, p.window)?;
    let bound = measure::density_conversion_bound(p.alpha, report.gamma_lebesgue)?;
    #[derive(Serialize)]
    struct Row {
        alpha: f64,
        window: f64,
        gamma_lebesgue: f64,
        gamma_mu: f64,
        gamma_tilde: f64,
        argmin_r: f64,
    }
    let row = Row {
        alpha: p.alpha,
        window: p.window,
        gamma_lebesgue: report.gamma_lebesgue,
        gamma_mu: report.gamma_mu,
        gamma_tilde: bound,
        argmin_r: report.argmin_r,
    };
    out.write("density.csv", &records(&[&row])?)?;
    out.write_json("summary.json", &json!({ "report": report, "gamma_tilde": bound }))?;
    Ok(format!(
        "gamma_lebesgue={:.6}, gamma_mu={:.6}, gamma_tilde={bound:.6}",
        report.gamma_lebesgue, report.gamma_mu
    ))
}

fn transform_check(p: &TransformCheckParams, seed: u64, out: &mut Output) -> Outcome<String> {
    let nodes = p.nodes_per_band.unwrap_or_else(|| band_nodes_for(p.t_max, p.degree));
    let grid = Arc::new(RadialGrid::for_frequency(p.alpha, p.t_max, p.r as f64)?);
    #[derive(Serialize)]
    struct Row {
        profile: usize,
        profile_seed: u64,
        residual: f64,
    }
    let mut rows = Vec::with_capacity(p.profiles);
    for i in 0..p.profiles {
        let profile_seed = rng::stream(seed, i as u64).next_u64();
        let profile = BandProfile::random_legendre(p.alpha, &bands(p.r), nodes, p.degree, profile_seed)?;
        let residual = plancherel_residual(&profile, grid.clone())?;
        rows.push(Row { profile: i, profile_seed, residual });
    }
    let max = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    out.write("plancherel.csv", &records(&rows)?)?;
    out.write_json(
        "summary.json",
        &json!({ "alpha": p.alpha, "R": p.r, "t_max": p.t_max, "nodes_per_band": nodes, "max_residual": max }),
    )?;
    Ok(format!("max_plancherel_residual={max:.3e}"))
}

fn nazarov_turan(p: &NazarovTuranParams, seed: u64, out: &mut Output) -> Outcome<String> {
    let config = NtTrialConfig {
        n: p.n,
        m: p.m,
        trials: p.trials,
        interval: p.interval,
        set: nt_set(p, seed)?,
        p: p.p,
        max_lambda: p.max_lambda,
        options: p.options,
    };
    let (trials, calibration) = inequality::nazarov_turan_trials(&config, seed)?;
    out.write("trials.csv", &csv_bytes(|b| inequality::write_trials_csv(b, &trials))?)?;
    out.write_json("calibration.json", &calibration)?;
    Ok(format!(
        "c0={}, max_ratio={:.6}, violations={}",
        calibration.c0, calibration.max_ratio, calibration.violations
    ))
}

fn bernstein(p: &BernsteinParams, seed: u64, out: &mut Output) -> Outcome<String> {
    let max_k = p.k_list.iter().copied().max().unwrap_or(0) as usize;
    let nodes = p.nodes_per_band.unwrap_or_else(|| band_nodes_for(p.t_max, 2 * max_k));
    let options = inequality::BernsteinOptions {
        t_max: p.t_max,
        ..Default::default()
    };
    #[derive(Serialize)]
    struct Row {
        profile_seed: u64,
        k: u32,
        ratio: f64,
        tail_share: f64,
    }
    let mut rows = Vec::new();
    for i in 0..p.profiles {
        let profile_seed = rng::stream(seed, i as u64).next_u64();
        let profile = inequality::smooth_profile(p.alpha, p.r, nodes, p.degree, profile_seed)?;
        for &k in &p.k_list {
            let rep = inequality::bernstein_ratio(&profile, p.r, k, &options)?;
            rows.push(Row { profile_seed, k, ratio: rep.ratio, tail_share: rep.tail_share });
        }
    }
    let max = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    out.write("bernstein.csv", &records(&rows)?)?;
    out.write_json(
        "summary.json",
        &json!({ "alpha": p.alpha, "R": p.r, "k_list": p.k_list, "profiles": p.profiles, "max_ratio": max }),
    )?;
    Ok(format!("max_ratio={max:.9}"))
}

fn damped(p: &DampedWaveParams, seed: u64, out: &mut Output) -> Outcome<String> {
    let config = damped_config(p, seed)?;
    let generator = damped_wave::build_generator(&config)?;
    let initial = InitialData::random(&generator, seed);
    let mut trace = damped_wave::evolve_with(&generator, &config, &initial)?;
    let model = p.model.unwrap_or(if p.s >= 2.0 { DecayModel::Exp } else { DecayModel::Poly });
    let fit = damped_wave::fit_decay(&trace, model)?;
    trace.fitted = Some(fit);
    let abscissa = if p.abscissa {
        let eig = generator.eigenvalues()?;
        Some(eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
    } else {
        None
    };
    out.write("energy.csv", &csv_bytes(|b| trace.write_csv(b))?)?;
    out.write_json(
        "summary.json",
        &json!({
            "alpha": config.alpha(),
            "horizon": trace.horizon,
            "fit": fit,
            "spectral_abscissa": abscissa,
            "initial_energy": trace.energies[0],
            "final_energy": trace.energies.last(),
        }),
    )?;
    Ok(format!(
        "model={model:?}, rate={:.6}, r_squared={:.6}, horizon={:.2}",
        fit.rate, fit.r_squared, trace.horizon
    ))
}
