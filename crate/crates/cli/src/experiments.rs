//! Experiment drivers. Each returns its files in memory; nothing touches the
//! output directory until the whole run has succeeded.

use std::path::Path;

use anyhow::{Context, Result};
use kpz_core::basis::periodic_grid;
use kpz_core::growth::{family_vicsek_collapse, fit_exponents, fit_growth_exponent, geometric_times, run_ensemble, GrowthModel};
use kpz_core::mhfe::{convergence_study, stromatolite_run};
use kpz_core::noise::{draw_gaussian_matrix, Mollifier, NoiseRealization, RngStream};
use kpz_core::renorm::{crossover_roughness, kappa_refinement_study, run_ladder, write_comparison_csv, RenormConstants};
use kpz_core::spectral::{integrate, refinement_study, write_trajectory_csv, RefinementSetup, SemilinearProblem, SpectralField};
use serde::Serialize;

use crate::config::{ConvergenceConfig, GrowthConfig, HeatSpectralConfig, KpzMhfeConfig, RenormCompareConfig, RenormLadderConfig};
use crate::manifest::{Outputs, SeedRecord};
use crate::plot::{PlotFile, Scale};

pub struct RunOutput {
    pub files: Outputs,
    pub seeds: Vec<SeedRecord>,
}

fn csv_bytes<R: Serialize>(header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().context("flushing CSV buffer")
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

fn scheme_name(s: kpz_core::spectral::Scheme) -> String {
    serde_json::to_value(s).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
}

pub fn heat_spectral(cfg: &HeatSpectralConfig, replay: Option<&Path>) -> Result<RunOutput> {
    let mut files = Outputs::default();
    let mut seeds = Vec::new();

    if let Some(path) = replay {
        let bytes = std::fs::read(path).with_context(|| format!("reading noise {}", path.display()))?;
        let noise = NoiseRealization::read_binary(bytes.as_slice())?;
        let problem = SemilinearProblem::heat(noise.modes, cfg.nu, cfg.lambda, noise.dt)?;
        let y0 = SpectralField::constant(noise.modes, 1.0);
        let points = periodic_grid(problem.transform().grid_size());
        for &scheme in &cfg.schemes {
            let traj = integrate(&problem, scheme, &y0, &noise)?;
            let mut buf = Vec::new();
            write_trajectory_csv(&mut buf, &traj, noise.dt, &points)?;
            files.add(format!("replay_{}.csv", scheme_name(scheme)), buf);
        }
        return Ok(RunOutput { files, seeds });
    }

    let setup = RefinementSetup { steps: cfg.steps, ..RefinementSetup::heat(cfg.nu, cfg.lambda, cfg.t_final) };
    let mut rows = Vec::new();
    let mut plot = PlotFile::new("Monte Carlo error between consecutive resolutions", &["J", "error", "std_error"], Scale::LogLog);
    for &scheme in &cfg.schemes {
        let study = refinement_study(&setup, scheme, &cfg.modes, cfg.realizations, cfg.seed)?;
        plot.block(&scheme_name(scheme), study.iter().map(|r| vec![r.j_fine as f64, r.error, r.std_error]));
        rows.extend(study.into_iter().map(|r| (scheme_name(scheme), r.j_coarse, r.j_fine, r.error, r.std_error)));
    }
    files.add("refinement.csv", csv_bytes(&["scheme", "j_coarse", "j_fine", "error", "std_error"], rows)?);
    files.add("error_vs_j.dat", plot.into_bytes());
    seeds.push(SeedRecord::new("refinement", cfg.seed, cfg.realizations));

    if cfg.dump_noise {
        let j_max = *cfg.modes.last().expect("validated");
        let n_max = cfg.steps.steps(j_max);
        let noise = draw_gaussian_matrix(RngStream::new(cfg.seed, 0), n_max, j_max, cfg.t_final / n_max as f64)?;
        let mut buf = Vec::new();
        noise.write_binary(&mut buf)?;
        files.add("noise_r0.bin", buf);
    }

    if cfg.crossover_enabled {
        let report = crossover_roughness(&cfg.crossover)?;
        let s = &report.series;
        let rows = (0..s.len()).map(|i| (s.times[i], s.mean_height[i], s.roughness[i], report.roughness_stderr[i]));
        files.add("crossover.csv", csv_bytes(&["t", "mean_height", "roughness", "roughness_stderr"], rows)?);
        let mut plot = PlotFile::new("roughness of log z", &["t", "w", "std_error"], Scale::LogLog);
        plot.block("ensemble mean", (0..s.len()).map(|i| vec![s.times[i], s.roughness[i], report.roughness_stderr[i]]));
        files.add("crossover.dat", plot.into_bytes());
        #[derive(Serialize)]
        struct Fit<'a> {
            early: &'a kpz_core::stats::LineFit,
            late: &'a kpz_core::stats::LineFit,
            split_time: f64,
            slope_ratio: f64,
        }
        let fit = Fit {
            early: &report.fit.early,
            late: &report.fit.late,
            split_time: s.times[report.fit.split],
            slope_ratio: report.slope_ratio,
        };
        files.add("crossover_fit.json", json_bytes(&fit)?);
        seeds.push(SeedRecord::new("crossover", cfg.crossover.seed, cfg.crossover.realizations));
    }
    Ok(RunOutput { files, seeds })
}

pub fn kpz_mhfe(cfg: &KpzMhfeConfig) -> Result<RunOutput> {
    let mut files = Outputs::default();
    let mut profiles = Vec::new();
    let mut errors = Vec::new();
    let mut plot = PlotFile::new("benchmark profiles", &["x", "numeric", "exact"], Scale::Linear);
    for &t in &cfg.times {
        let run = stromatolite_run(&cfg.benchmark, cfg.cells, t)?;
        plot.block(&format!("t={t}"), (0..run.centers.len()).map(|i| vec![run.centers[i], run.numeric[i], run.exact[i]]));
        profiles.extend((0..run.centers.len()).map(|i| (t, run.centers[i], run.numeric[i], run.exact[i])));
        errors.push((t, run.dx, run.dt, run.max_error, run.l2_error, run.relative_l2_error, run.total_sweeps));
    }
    files.add("profiles.csv", csv_bytes(&["t", "x", "numeric", "exact"], profiles)?);
    files.add(
        "errors.csv",
        csv_bytes(&["t", "dx", "dt", "max_error", "l2_error", "relative_l2_error", "sweeps"], errors)?,
    );
    files.add("profiles.dat", plot.into_bytes());
    Ok(RunOutput { files, seeds: Vec::new() })
}

pub fn convergence(cfg: &ConvergenceConfig) -> Result<RunOutput> {
    let mut files = Outputs::default();
    let study = convergence_study(&cfg.benchmark, &cfg.cells, cfg.t_final)?;
    let rows = study.rows.iter().map(|r| (r.m, r.dx, r.dt, r.error, r.max_error, r.relative_error));
    files.add("table.csv", csv_bytes(&["m", "dx", "dt", "error", "max_error", "relative_error"], rows)?);
    let mut plot = PlotFile::new("benchmark error against mesh size", &["dx", "error"], Scale::LogLog);
    plot.block("discrete L2", study.rows.iter().map(|r| vec![r.dx, r.error]));
    files.add("convergence.dat", plot.into_bytes());
    files.add("summary.json", json_bytes(&study)?);
    Ok(RunOutput { files, seeds: Vec::new() })
}

pub fn growth(cfg: &GrowthConfig) -> Result<RunOutput> {
    let mut files = Outputs::default();
    let mut ensembles = Vec::new();
    let mut plot = PlotFile::new("ensemble roughness", &["t", "w", "std_error"], Scale::LogLog);
    for &l in &cfg.sizes {
        let times = geometric_times(cfg.t_min, cfg.horizon(l), cfg.samples_per_decade, l)?;
        let e = run_ensemble(cfg.model, l, &times, cfg.runs, cfg.seed)?;
        let s = &e.series;
        let rows = (0..s.len()).map(|i| (s.times[i], s.mean_height[i], s.roughness[i], e.roughness_stderr[i]));
        files.add(format!("roughness_L{l}.csv"), csv_bytes(&["t", "mean_height", "roughness", "roughness_stderr"], rows)?);
        plot.block(&format!("L={l}"), (0..s.len()).map(|i| vec![s.times[i], s.roughness[i], e.roughness_stderr[i]]));
        ensembles.push(e);
    }
    files.add("roughness.dat", plot.into_bytes());

    if cfg.fit {
        if cfg.model == GrowthModel::Random {
            let betas = ensembles
                .iter()
                .map(|e| {
                    let f = fit_growth_exponent(&e.series, 1.0, f64::INFINITY)?;
                    Ok((e.l, f.slope, f.slope_se))
                })
                .collect::<Result<Vec<_>>>()?;
            files.add("fit.csv", csv_bytes(&["L", "beta", "beta_se"], betas)?);
        } else if ensembles.len() >= 2 {
            let fit = fit_exponents(&ensembles)?;
            let collapse = family_vicsek_collapse(&ensembles, fit.alpha, fit.z, cfg.collapse_points)?;
            let mut buf = Vec::new();
            collapse.write_csv(&mut buf)?;
            files.add("collapse.csv", buf);
            let mut plot = PlotFile::new(
                &format!("Family-Vicsek collapse, alpha={:.4}, z={:.4}, spread={:.4}", collapse.alpha, collapse.z, collapse.spread),
                &["t/L^z", "w/L^alpha"],
                Scale::LogLog,
            );
            for (l, pts) in &collapse.curves {
                plot.block(&format!("L={l}"), pts.iter().map(|&(u, y)| vec![u, y]));
            }
            files.add("collapse.dat", plot.into_bytes());
            files.add("fit.json", json_bytes(&fit)?);
        }
    }
    let seeds = vec![SeedRecord::new("runs (shared by every size)", cfg.seed, cfg.runs)];
    Ok(RunOutput { files, seeds })
}

pub fn renorm_compare(cfg: &RenormCompareConfig) -> Result<RunOutput> {
    let mut files = Outputs::default();
    let mut rows = Vec::new();
    let mut plot = PlotFile::new("renormalization constants", &["kappa", "C_total", "C_ito", "C_grid"], Scale::LogX);
    for &kind in &cfg.mollifiers {
        let mut block = Vec::new();
        for &kappa in &cfg.kappas {
            let c = RenormConstants::compute(&Mollifier::new(kind, kappa)?, cfg.modes)?.on_grid(cfg.cells);
            let grid = c.c_grid.expect("grid constant set");
            block.push(vec![kappa, c.c_total, c.c_ito, grid]);
            rows.push((kind, kappa, c.c1, c.c2_leading, c.c2, c.c3, c.c_total, c.c_ito, grid));
        }
        plot.block(&format!("{kind:?}").to_lowercase(), block);
    }
    files.add(
        "constants.csv",
        csv_bytes(&["mollifier", "kappa", "C1", "C2_leading", "C2", "C3", "C_total", "C_ito", "C_grid"], rows)?,
    );
    files.add("constants.dat", plot.into_bytes());
    Ok(RunOutput { files, seeds: Vec::new() })
}

pub fn renorm_ladder(cfg: &RenormLadderConfig) -> Result<RunOutput> {
    let mut files = Outputs::default();
    let mut seeds = Vec::new();
    let report = run_ladder(&cfg.ladder)?;
    let mut buf = Vec::new();
    write_comparison_csv(&mut buf, &report.rows)?;
    files.add("comparison.csv", buf);

    let mut shift = PlotFile::new("empirical shift against kappa", &["kappa", "C_hat", "C_hat_se"], Scale::LogX);
    let mut means = PlotFile::new(
        "final mean height, classical and renormalized",
        &["kappa", "mean_classical", "mean_renormalized"],
        Scale::LogX,
    );
    for &kind in &cfg.ladder.mollifiers {
        let rows = report.rows_for(kind);
        let label = format!("{kind:?}").to_lowercase();
        shift.block(&label, rows.iter().map(|r| vec![r.constants.kappa, r.shift.c_hat, r.shift.c_hat_se]));
        means.block(&label, rows.iter().map(|r| vec![r.constants.kappa, r.mean_classical, r.mean_renormalized]));
    }
    files.add("shift.dat", shift.into_bytes());
    files.add("means.dat", means.into_bytes());
    let cross = cfg.ladder.kappas.iter().zip(&report.cross_distance).map(|(k, d)| (k, d));
    files.add("cross_distance.csv", csv_bytes(&["kappa", "distance"], cross)?);
    files.add("ladder.json", json_bytes(&report)?);
    seeds.push(SeedRecord::new("ladder", cfg.ladder.seed, cfg.ladder.realizations));

    if cfg.refinement_enabled {
        let rows = kappa_refinement_study(&cfg.refinement)?;
        let csv_rows =
            rows.iter().map(|r| (r.coarse.cells, r.coarse.kappa, r.fine.cells, r.fine.kappa, r.error, r.std_error));
        files.add(
            "refinement.csv",
            csv_bytes(&["coarse_cells", "coarse_kappa", "fine_cells", "fine_kappa", "error", "std_error"], csv_rows)?,
        );
        let mut plot = PlotFile::new("consecutive-level error", &["fine_kappa", "error", "std_error"], Scale::LogLog);
        plot.block("renormalized", rows.iter().map(|r| vec![r.fine.kappa, r.error, r.std_error]));
        files.add("refinement.dat", plot.into_bytes());
        seeds.push(SeedRecord::new("refinement", cfg.refinement.seed, cfg.refinement.realizations));
    }
    Ok(RunOutput { files, seeds })
}
