//! Subcommand implementations.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use levy_smooth::harness::{default_config, run_preset, PRESETS};
use levy_smooth::solver::io::{read_snapshot, write_trajectory};
use levy_smooth::{
    besov_norm, solve, symbol_for, symbol_from_kernel, symbol_lower_bound_fit,
    vanishing_viscosity_sweep, BlockDecomposition, DyadicPartition, Error, EstimateReport,
    ExperimentConfig, KernelForm, LevyKernelSpec, Result, SymbolGrid, Trajectory,
};
use rayon::prelude::*;

use crate::svg::{line_plot, Scale, Series};

/// Outcome of a subcommand that asserts something.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

fn number_label(v: f64) -> String {
    let s = format!("{v}");
    s.replace('.', "p").replace('-', "m")
}

fn symbol_grid(cfg: &ExperimentConfig, spec: &LevyKernelSpec) -> Result<SymbolGrid> {
    let grid = cfg.grid()?;
    let quad = cfg.quadrature();
    if cfg.symbol.from_kernel {
        symbol_from_kernel(spec, grid, &quad)
    } else {
        symbol_for(spec, grid, &quad)
    }
}

fn symbol_csv(sym: &SymbolGrid, hash: &str) -> String {
    let mut out = String::from("wavenumber,symbol,config_hash\n");
    for (q, v) in sym.radial_samples() {
        let _ = writeln!(out, "{q:.12e},{v:.12e},{hash}");
    }
    out
}

/// Symbol table(s), lower-bound fit and optional log-log plot.
pub fn symbol(cfg: &ExperimentConfig, out: &Path, svg: bool) -> Result<Verdict> {
    let base = cfg.operator_spec()?;
    let hash = cfg.hash();
    let variants: Vec<(Option<f64>, LevyKernelSpec)> = match (&cfg.symbol.lambdas, &base.form) {
        (Some(ls), KernelForm::LogDamped { mu, .. }) => ls
            .iter()
            .map(|&lambda| {
                let mut s = base.clone();
                s.form = KernelForm::LogDamped { mu: *mu, lambda };
                s.validate()?;
                Ok((Some(lambda), s))
            })
            .collect::<Result<_>>()?,
        (Some(_), _) => {
            return Err(Error::Config(
                "[symbol] lambdas only applies to form \"log_damped\"".into(),
            ))
        }
        (None, _) => vec![(None, base.clone())],
    };
    let mut fits = String::from(
        "lambda,constant,exponent,worst_margin,worst_wavenumber,max_wavenumber,points,config_hash\n",
    );
    let mut series = Vec::new();
    for (lambda, spec) in &variants {
        let sym = symbol_grid(cfg, spec)?;
        let name = match lambda {
            Some(l) => format!("symbol_lambda_{}.csv", number_label(*l)),
            None => "symbol.csv".to_string(),
        };
        write(&out.join(&name), &symbol_csv(&sym, &hash))?;
        let fit = symbol_lower_bound_fit(&sym, spec.alpha, spec.sigma)?;
        let _ = writeln!(
            fits,
            "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{hash}",
            lambda.map_or("".to_string(), |l| format!("{l}")),
            fit.constant,
            fit.exponent,
            fit.worst_margin,
            fit.worst_wavenumber,
            fit.max_wavenumber,
            fit.points
        );
        println!(
            "{name}: lower-bound constant C = {:.6} (binding at |xi| = {})",
            fit.constant, fit.worst_wavenumber
        );
        series.push((
            lambda.map_or("A".to_string(), |l| format!("lambda = {l}")),
            sym.radial_samples()
                .into_iter()
                .filter(|p| p.0 > 0.0)
                .collect::<Vec<_>>(),
        ));
    }
    write(&out.join("lower_bound.csv"), &fits)?;
    if svg {
        let s: Vec<Series> = series
            .iter()
            .map(|(n, p)| Series {
                name: n,
                points: p.clone(),
            })
            .collect();
        write(
            &out.join("symbol.svg"),
            &line_plot("symbol", "|xi|", "A(xi)", &s, Scale::Log, Scale::Log),
        )?;
    }
    Ok(Verdict::Pass)
}

/// Block norms, Besov norm and reconstruction residual of one field.
pub fn decompose(
    cfg: &ExperimentConfig,
    field_file: Option<&Path>,
    out: &Path,
    svg: bool,
) -> Result<Verdict> {
    let hash = cfg.hash();
    let theta = match field_file {
        Some(path) => read_snapshot(path)?.0,
        None => cfg.initial_spec().build(cfg.grid()?, &cfg.base_dir)?,
    };
    let part = DyadicPartition::new(*theta.grid())?;
    let dec = BlockDecomposition::new(&theta, &part)?;
    let d = &cfg.decompose;
    let mut blocks = String::from("j,sup_norm,lp_norm,contaminated,config_hash\n");
    let mut sups = Vec::new();
    for ((j, sup), (_, lp)) in dec.norms(f64::INFINITY).into_iter().zip(dec.norms(d.p)) {
        let _ = writeln!(
            blocks,
            "{j},{sup:.12e},{lp:.12e},{},{hash}",
            part.is_contaminated(j)
        );
        sups.push((j as f64, sup));
    }
    write(&out.join("blocks.csv"), &blocks)?;
    let besov = besov_norm(&theta, d.s, d.p, d.r, &part)?;
    let mut besov_csv = String::new();
    for (i, line) in besov.to_csv().lines().enumerate() {
        let tail = if i == 0 { "config_hash" } else { hash.as_str() };
        let _ = writeln!(besov_csv, "{line},{tail}");
    }
    write(&out.join("besov.csv"), &besov_csv)?;
    let scale = theta.sup_norm().max(f64::MIN_POSITIVE);
    let residual = dec.reconstruct().sub(&theta)?.sup_norm() / scale;
    println!("reconstruction residual: {residual:.3e}");
    println!(
        "Besov norm B^{}_{{{},{}}} = {:.6e} (dominant block {}, J_max = {})",
        d.s,
        d.p,
        d.r,
        besov.total,
        besov.dominant_block(),
        part.j_max()
    );
    if svg {
        let s = [Series {
            name: "sup |Delta_j theta|",
            points: sups,
        }];
        write(
            &out.join("blocks.svg"),
            &line_plot(
                "dyadic blocks",
                "j",
                "sup norm",
                &s,
                Scale::Linear,
                Scale::Log,
            ),
        )?;
    }
    Ok(Verdict::Pass)
}

fn trajectory_svg(traj: &Trajectory, path: &Path) -> Result<()> {
    let mut series = vec![(
        "sup theta".to_string(),
        traj.times
            .iter()
            .cloned()
            .zip(traj.sup_norms.iter().cloned())
            .collect::<Vec<_>>(),
    )];
    for j in 0..=traj.j_max {
        series.push((
            format!("block {j}"),
            traj.times
                .iter()
                .cloned()
                .zip(traj.block_series(j))
                .collect(),
        ));
    }
    let s: Vec<Series> = series
        .iter()
        .map(|(n, p)| Series {
            name: n,
            points: p.clone(),
        })
        .collect();
    write(
        path,
        &line_plot("norm history", "t", "norm", &s, Scale::Linear, Scale::Log),
    )
}

/// One solver run with its history and snapshots.
pub fn solve_cmd(cfg: &ExperimentConfig, out: &Path, svg: bool) -> Result<Verdict> {
    let traj = solve(&cfg.solver_config()?)?;
    write_trajectory(&traj, out)?;
    if svg {
        trajectory_svg(&traj, &out.join("history.svg"))?;
    }
    println!(
        "reached t = {} in {} steps; |theta(T)|_inf = {:.6e}",
        traj.final_time(),
        traj.steps,
        traj.terminal().sup_norm()
    );
    Ok(Verdict::Pass)
}

/// Checks to run: the flag wins, then the config, then every preset.
pub fn selected_checks(flag: &[String], cfg: Option<&ExperimentConfig>) -> Vec<String> {
    if !flag.is_empty() {
        return flag.to_vec();
    }
    match cfg {
        Some(c) if !c.experiment.checks.is_empty() => c.experiment.checks.clone(),
        _ => PRESETS.iter().map(|s| s.to_string()).collect(),
    }
}

/// Runs the checks and writes `reports.csv`, `summary.txt` and the tables.
pub fn verify(
    cfg: Option<&ExperimentConfig>,
    checks: &[String],
    seed: Option<u64>,
    out: &Path,
) -> Result<Verdict> {
    let configs: Vec<(String, ExperimentConfig)> = checks
        .iter()
        .map(|name| {
            let c = match cfg {
                Some(c) => c.clone(),
                None => default_config(name)?,
            };
            let c = match seed {
                Some(s) => c.with_seed(s),
                None => c,
            };
            Ok((name.clone(), c))
        })
        .collect::<Result<_>>()?;
    let outcomes: Vec<_> = configs.par_iter().map(|(n, c)| run_preset(n, c)).collect();
    let mut rows = format!("{}\n", EstimateReport::CSV_HEADER);
    let mut summary = String::new();
    let mut failed = 0usize;
    let mut total = 0usize;
    let mut first_error = None;
    for ((name, c), outcome) in configs.iter().zip(outcomes) {
        match outcome {
            Ok(o) => {
                for r in &o.reports {
                    total += 1;
                    if !r.passed() {
                        failed += 1;
                    }
                    let _ = writeln!(rows, "{}", r.csv_row());
                    let _ = writeln!(summary, "{}", r.summary_line());
                }
                for t in &o.tables {
                    write(
                        &out.join(format!("{name}_{}.csv", t.name)),
                        &t.to_csv(&c.hash()),
                    )?;
                }
            }
            Err(e) => {
                let _ = writeln!(summary, "{name}: ERROR {e}");
                first_error.get_or_insert(e);
            }
        }
    }
    let _ = writeln!(summary, "{} of {total} checks passed", total - failed);
    write(&out.join("reports.csv"), &rows)?;
    write(&out.join("summary.txt"), &summary)?;
    print!("{summary}");
    if let Some(e) = first_error {
        return Err(e);
    }
    Ok(if failed == 0 {
        Verdict::Pass
    } else {
        Verdict::Fail
    })
}

fn set_axis(cfg: &mut ExperimentConfig, axis: &str, v: f64) -> Result<()> {
    let missing = |s: &str| Error::Config(format!("sweep axis '{axis}' needs a [{s}] section"));
    let integer = || -> Result<u64> {
        if v >= 0.0 && v.fract() == 0.0 {
            Ok(v as u64)
        } else {
            Err(Error::Config(format!(
                "sweep axis '{axis}' takes nonnegative integers, got {v}"
            )))
        }
    };
    match axis {
        "epsilon" => cfg.time.as_mut().ok_or_else(|| missing("time"))?.epsilon = v,
        "dt" => cfg.time.as_mut().ok_or_else(|| missing("time"))?.dt = v,
        "t_final" => cfg.time.as_mut().ok_or_else(|| missing("time"))?.t_final = v,
        "n" => cfg.grid.as_mut().ok_or_else(|| missing("grid"))?.n = integer()? as usize,
        "alpha" => {
            cfg.operator
                .as_mut()
                .ok_or_else(|| missing("operator"))?
                .alpha = v
        }
        "sigma" => {
            cfg.operator
                .as_mut()
                .ok_or_else(|| missing("operator"))?
                .sigma = v
        }
        "seed" => cfg.experiment.seed = integer()?,
        other => {
            return Err(Error::Config(format!(
            "unknown sweep axis '{other}' (expected epsilon, dt, t_final, n, alpha, sigma or seed)"
        )))
        }
    }
    Ok(())
}

/// Cartesian runs along one axis, each in its own directory, plus a
/// summary table; an `epsilon` axis adds the convergence report.
pub fn sweep(
    cfg: &ExperimentConfig,
    axis: Option<&str>,
    values: &[f64],
    out: &Path,
) -> Result<Verdict> {
    let (axis, values) = match (axis, values.is_empty(), &cfg.sweep) {
        (Some(a), false, _) => (a.to_string(), values.to_vec()),
        (None, true, Some(s)) => (s.axis.clone(), s.values.clone()),
        (Some(a), true, Some(s)) if s.axis == a => (s.axis.clone(), s.values.clone()),
        _ => {
            return Err(Error::Config(
                "give both --axis and --values, or a [sweep] section".into(),
            ))
        }
    };
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let runs: Vec<ExperimentConfig> = values
        .iter()
        .map(|&v| {
            let mut c = cfg.clone();
            set_axis(&mut c, &axis, v)?;
            Ok(c)
        })
        .collect::<Result<_>>()?;
    let trajs: Vec<(PathBuf, Trajectory)> = runs
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let traj = solve(&c.solver_config()?)?;
            let dir = out.join(format!("run_{i:03}"));
            write_trajectory(&traj, &dir)?;
            Ok((dir, traj))
        })
        .collect::<Result<_>>()?;
    let mut table =
        format!("{axis},terminal_sup,terminal_mean,ratio_to_previous,steps,config_hash\n");
    let mut prev: Option<f64> = None;
    for (v, (_, t)) in values.iter().zip(&trajs) {
        let sup = t.terminal().sup_norm();
        let ratio = prev.map_or(f64::NAN, |p| sup / p);
        let _ = writeln!(
            table,
            "{v},{sup:.12e},{:.12e},{ratio:.12e},{},{}",
            t.terminal().mean(),
            t.steps,
            t.config_hash
        );
        prev = Some(sup);
    }
    write(&out.join("sweep.csv"), &table)?;
    print!("{table}");
    if axis == "epsilon" && values.len() >= 2 {
        let report = vanishing_viscosity_sweep(&cfg.solver_config()?, &values)?;
        let mut csv = String::from("eps,eps_next,difference,config_hash\n");
        for (w, d) in report.eps.windows(2).zip(&report.differences) {
            let _ = writeln!(csv, "{},{},{d:.12e},{}", w[0], w[1], report.config_hash);
        }
        write(&out.join("convergence.csv"), &csv)?;
        match &report.fit {
            Some(f) => println!(
                "Cauchy rate in epsilon: slope {:.4} (monotone: {})",
                f.exponent, report.monotone
            ),
            None => println!("Cauchy rate in epsilon: no fit (differences vanish)"),
        }
    }
    Ok(Verdict::Pass)
}
