use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use hypspec::covering::{build_maximal_separated, default_sample_count, intersection_bound, intersection_number, verify_covering};
use hypspec::heat::{
    doubling_check, envelope_fit, gaussian_integral, gaussian_integral_closed_form, gaussian_quotient_grid,
    necessity_pipeline, observability_table, EnvelopeGrid,
};
use hypspec::quad::QuadOptions;
use hypspec::rng::normal_vec;
use hypspec::sensor::SensorSet;
use hypspec::spectral::extension::energy_bound_check;
use hypspec::spectral::{
    extension_residual, fit_exponential, harmonic_extension, smallness_experiment, solve_modes,
    spectral_constant_profile, ModeBasis, ResidualMode, SmallnessConfig,
};
use hypspec::thickness::{thickness_profile, ProfileOptions, ProfileRegion};
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Thickness,
    Cover,
    Spectral,
    Extension,
    HeatNecessity,
    Observability,
    Gaussian,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Thickness => "thickness",
            Command::Cover => "cover",
            Command::Spectral => "spectral",
            Command::Extension => "extension",
            Command::HeatNecessity => "heat-necessity",
            Command::Observability => "observability",
            Command::Gaussian => "gaussian",
        }
    }
}

/// Writes `<name>.csv` and `<name>.json` under the output directory.
pub struct Output {
    command: &'static str,
    dir: PathBuf,
    hash: String,
    config: Value,
}

impl Output {
    pub fn new(cmd: Command, dir: &Path, cfg: &ExperimentConfig) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self { command: cmd.name(), dir: dir.to_path_buf(), hash: cfg.hash()?, config: serde_json::to_value(cfg)? })
    }

    pub fn csv<F>(&self, name: &str, body: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut dyn Write) -> hypspec::Result<()>,
    {
        let path = self.dir.join(format!("{name}.csv"));
        let mut w = BufWriter::new(File::create(&path)?);
        writeln!(w, "# config_hash = {}", self.hash)?;
        body(&mut w)?;
        w.flush()?;
        Ok(path)
    }

    pub fn json(&self, name: &str, mut summary: Value) -> Result<Value, CliError> {
        summary["command"] = self.command.into();
        summary["config_hash"] = self.hash.clone().into();
        summary["config"] = self.config.clone();
        let path = self.dir.join(format!("{name}.json"));
        let mut text = serde_json::to_string_pretty(&summary)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(summary)
    }
}

fn csv_rows<W: Write + ?Sized, S: serde::Serialize>(w: &mut W, rows: &[S]) -> hypspec::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn run(cmd: Command, cfg: &ExperimentConfig, out: &Output) -> Result<Value, CliError> {
    match cmd {
        Command::Thickness => thickness(cfg, out),
        Command::Cover => cover(cfg, out),
        Command::Spectral => spectral(cfg, out),
        Command::Extension => extension(cfg, out),
        Command::HeatNecessity => heat_necessity(cfg, out),
        Command::Observability => observability(cfg, out),
        Command::Gaussian => gaussian(cfg, out),
    }
}

fn thickness(cfg: &ExperimentConfig, out: &Output) -> Result<Value, CliError> {
    let c = &cfg.thickness;
    let opts = ProfileOptions {
        center_samples: c.center_samples,
        seed: cfg.seed,
        quad: QuadOptions::rel(c.rel_tol).with_abs(1e-300),
        adversarial: c.adversarial,
    };
    let rep = thickness_profile(&c.sensor, c.region, c.radius, opts)?;
    out.csv("thickness", |w| rep.write_csv(w))?;
    let summary: Value = serde_json::from_str(&rep.summary_json()?)?;
    out.json("thickness", summary)
}

fn cover(cfg: &ExperimentConfig, out: &Output) -> Result<Value, CliError> {
    let c = &cfg.cover;
    c.region.validate()?;
    let count = c.sample_count.unwrap_or_else(|| default_sample_count(&c.region, c.radius));
    let set = build_maximal_separated(c.region, c.radius, count, cfg.seed)?;
    let cov = verify_covering(&set, c.probes, cfg.seed.wrapping_add(1));
    let n = intersection_number(&set, 2.0 * c.radius);
    out.csv("cover", |w| set.write_csv(w))?;
    out.json(
        "cover",
        json!({
            "region": c.region,
            "radius": c.radius,
            "centers": set.centers.len(),
            "samples_used": set.samples_used,
            "refined": set.refined,
            "unresolved_vertices": set.unresolved_vertices,
            "min_separation": set.min_separation(),
            "probes": cov.probes,
            "coverage": cov.coverage,
            "intersection_number_2R": n,
            "intersection_bound": intersection_bound(c.radius),
            "packing_bound_25e2R": 25.0 * (2.0 * c.radius).exp(),
        }),
    )
}

fn basis_for(domain: &crate::config::DomainConfig, modes: usize) -> Result<ModeBasis, CliError> {
    Ok(solve_modes(&domain.build()?, modes)?)
}

fn cap_grid(basis: &ModeBasis, caps: &Option<Vec<f64>>, count: usize) -> Result<Vec<f64>, CliError> {
    if let Some(c) = caps {
        return Ok(c.clone());
    }
    if count == 0 {
        return Err(CliError::Config("cap_count must be positive".into()));
    }
    let top = basis.modes.last().map_or(0.0, |m| m.lambda);
    Ok((1..=count).map(|i| top * i as f64 / count as f64).collect())
}

fn spectral(cfg: &ExperimentConfig, out: &Output) -> Result<Value, CliError> {
    let c = &cfg.spectral;
    let basis = basis_for(&c.domain, c.modes)?;
    let caps = cap_grid(&basis, &c.caps, c.cap_count)?;
    let prof = spectral_constant_profile(&c.sensor, &caps, &basis)?;
    out.csv("spectral", |w| csv_rows(w, &prof))?;
    out.csv("modes", |w| basis.write_csv(w))?;
    let finite: Vec<_> = prof.iter().filter(|s| s.constant.is_finite() && s.modes > 0).collect();
    let fit = if finite.len() >= 3 {
        let xs: Vec<f64> = finite.iter().map(|s| s.cap).collect();
        let ys: Vec<f64> = finite.iter().map(|s| s.constant).collect();
        Some(fit_exponential(&xs, &ys)?)
    } else {
        None
    };
    let monotone = prof.windows(2).all(|w| w[1].constant >= w[0].constant * (1.0 - 1e-10));
    out.json("spectral", json!({ "profile": prof, "fit": fit, "nondecreasing": monotone }))
}

fn extension(cfg: &ExperimentConfig, out: &Output) -> Result<Value, CliError> {
    let c = &cfg.extension;
    let basis = basis_for(&c.domain, c.modes)?;
    let coeffs = normal_vec(cfg.seed, 1, basis.len());
    let window = basis.project(&coeffs, c.cap)?;
    let coarse = harmonic_extension(&basis, &window, c.t_max, c.t_points, c.n_theta)?;
    let fine = harmonic_extension(&basis, &window, c.t_max, 2 * c.t_points - 1, 2 * c.n_theta)?;
    let r_spec = extension_residual(&coarse, ResidualMode::Spectral);
    let r1 = extension_residual(&coarse, ResidualMode::FiniteDifference);
    let r2 = extension_residual(&fine, ResidualMode::FiniteDifference);
    let energy = energy_bound_check(&window, c.t_max)?;
    let mut sc = SmallnessConfig::new(c.theta_c, c.y_c, c.radius, c.cap);
    sc.eta = c.eta;
    sc.t_max = c.t_max;
    sc.trials = c.trials;
    sc.seed = cfg.seed;
    sc.omega = c.sensor.clone();
    if let Some(e) = c.e_radius {
        sc.e_radius = e;
    }
    let small = smallness_experiment(&basis, &sc)?;
    out.csv("extension", |w| csv_rows(w, &small.trials))?;
    out.json(
        "extension",
        json!({
            "window_modes": window.len(),
            "spectral_residual": r_spec,
            "fd_residual": [r1, r2],
            "fd_refinement_ratio": r1 / r2,
            "energy": energy,
            "smallness": {
                "alpha": small.alpha,
                "raw_slope": small.raw_slope,
                "c": small.c,
                "holds_on_all": small.holds_on_all,
                "skipped": small.skipped,
                "ellipticity": small.ellipticity,
                "sampled_ellipticity": small.sampled_ellipticity,
            },
        }),
    )
}

fn heat_necessity(cfg: &ExperimentConfig, out: &Output) -> Result<Value, CliError> {
    let c = &cfg.heat;
    let mut cp = c.curvature;
    let mut envelope = None;
    if c.fit_envelope {
        let fit = envelope_fit(&EnvelopeGrid::default())?;
        cp.c1 = fit.c1;
        cp.c2 = fit.c2;
        envelope = Some(json!({ "c1": fit.c1, "c2": fit.c2, "retried": fit.retried }));
    }
    let params = necessity_pipeline(&cp)?;
    let radii: Vec<f64> = (1..=20).map(|i| 0.25 * i as f64).collect();
    let doubling = doubling_check(&radii, cp.c_d)?;
    out.csv("heat-necessity", |w| csv_rows(w, &doubling.samples))?;
    let certificate = if c.certify {
        let region = ProfileRegion::Plane { x0: -0.5, x1: 0.5, y0: 0.5, y1: 2.0 };
        let opts = ProfileOptions { center_samples: c.center_samples, seed: cfg.seed, ..Default::default() };
        let rep = thickness_profile(&SensorSet::full(), region, params.r, opts)?;
        Some(json!({
            "sensor": "full",
            "centers": rep.samples.len(),
            "delta_min": rep.delta_min,
            "thick": rep.delta_min >= params.delta,
        }))
    } else {
        None
    };
    let mut v = serde_json::to_value(params)?;
    v["curvature"] = serde_json::to_value(cp)?;
    v["envelope"] = envelope.into();
    v["doubling_all_hold"] = doubling.all_hold.into();
    v["certificate"] = certificate.into();
    out.json("heat-necessity", v)
}

fn observability(cfg: &ExperimentConfig, out: &Output) -> Result<Value, CliError> {
    let c = &cfg.observability;
    let basis = basis_for(&c.domain, c.modes)?;
    let caps = cap_grid(&basis, &c.caps, c.cap_count)?;
    let table = observability_table(&c.sensor, &c.times, &caps, &basis)?;
    out.csv("observability", |w| csv_rows(w, &table))?;
    out.json("observability", json!({ "table": table }))
}

fn gaussian(cfg: &ExperimentConfig, out: &Output) -> Result<Value, CliError> {
    let c = &cfg.gaussian;
    if c.alphas.iter().chain(&c.betas).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(CliError::Config("alphas and betas must be positive".into()));
    }
    let rows = gaussian_quotient_grid(&c.alphas, &c.betas, c.c_d)?;
    out.csv("gaussian", |w| csv_rows(w, &rows))?;
    let numerator = gaussian_integral(1.0, QuadOptions::rel(1e-12).with_abs(0.0))?;
    out.json(
        "gaussian",
        json!({
            "violations": rows.iter().filter(|r| !r.holds).count(),
            "numerator_alpha_1": numerator,
            "closed_form_alpha_1": gaussian_integral_closed_form(1.0),
        }),
    )
}
