//! Subcommand bodies. Each one renders its files into a [`Bundle`] first,
//! so output is written in one place and can be compared byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use discovery::macroscopic::MacroscopicProfile;
use discovery::policies::Policy;
use discovery::simulator::{monte_carlo, time_grid, AggregateReport, MonteCarloConfig};

use crate::config::{ConcentrationConfig, Experiment, ExperimentConfig, InstanceConfig, MacroConfig};
use crate::coverage::{coverage_table, CoverageCell};
use crate::error::CliError;
use crate::svg::{Chart, Series, Stroke};

/// Named output files, in the order they were produced.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bundle {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Bundle {
    pub fn add(&mut self, name: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    /// Adds every file of `other` under the subdirectory `prefix`.
    pub fn nest(&mut self, prefix: &str, other: Bundle) {
        for (name, bytes) in other.files {
            self.files.push((Path::new(prefix).join(name), bytes));
        }
    }

    pub fn files(&self) -> impl Iterator<Item = (&Path, &[u8])> {
        self.files.iter().map(|(p, b)| (p.as_path(), b.as_slice()))
    }

    pub fn get(&self, name: impl AsRef<Path>) -> Option<&[u8]> {
        self.files
            .iter()
            .find(|(p, _)| p == name.as_ref())
            .map(|(_, b)| b.as_slice())
    }

    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let mut written = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(CliError::io(parent))?;
            }
            fs::write(&path, bytes).map_err(CliError::io(&path))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Runtime(format!("csv: {e}"));
    writer.write_record(header).map_err(fail)?;
    for row in rows {
        writer.write_record(&row).map_err(fail)?;
    }
    writer
        .into_inner()
        .map_err(|e| CliError::Runtime(format!("csv: {e}")))
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn stroke_for(policy: &Policy) -> Stroke {
    match policy {
        Policy::GoodUcb { .. } => Stroke::Solid,
        Policy::Ocl => Stroke::Dashed,
        Policy::UniformCycle => Stroke::Dotted,
        Policy::OpenLoopOracle { .. } => Stroke::DashDot,
    }
}

/// Short human-readable name of an instance, for plot titles.
pub fn describe(instance: &InstanceConfig) -> String {
    match instance {
        InstanceConfig::SevenExpert { support } => format!("seven experts, N = {support}"),
        InstanceConfig::UniformDisjoint { experts } => format!("{} uniform experts", experts.len()),
        InstanceConfig::Proportions { support, q } => format!("{} uniform experts, N = {support}", q.len()),
        InstanceConfig::Primes { means } => format!("{} geometric experts, prime targets", means.len()),
        InstanceConfig::Categorical { laws, .. } => format!("{} categorical experts", laws.len()),
    }
}

/// Runs an experiment and renders its CSV files (and plot, if requested).
pub fn simulate(exp: &Experiment, title: &str, threads: usize) -> Result<(AggregateReport, Bundle), CliError> {
    let mut grid = vec![0];
    grid.extend(time_grid(exp.horizon, exp.record_every));
    let config = MonteCarloConfig {
        horizon: exp.horizon,
        replicates: exp.replicates,
        master_seed: exp.master_seed,
        lambdas: exp.lambdas.clone(),
        grid,
        threads,
        record_masses: exp.emit_mass_trace,
    };
    let report = monte_carlo(&exp.instance, &exp.policies, &config).map_err(|e| CliError::Runtime(e.to_string()))?;
    let k = exp.instance.num_experts();
    let labels: Vec<String> = exp.policies.iter().map(Policy::label).collect();
    let mut bundle = Bundle::default();

    let mut cols = header(&["t", "policy", "replicate", "F"]);
    cols.extend((1..=k).map(|i| format!("n_{i}")));
    let mut rows = Vec::new();
    for (p, label) in labels.iter().enumerate() {
        for rep in &report.replicates {
            let run = &rep.runs[p];
            for (g, &t) in report.grid.iter().enumerate() {
                let mut row = vec![t.to_string(), label.clone(), rep.replicate.to_string(), run.found[g].to_string()];
                row.extend(run.counts[g].iter().map(u64::to_string));
                rows.push(row);
            }
        }
    }
    bundle.add("trajectories.csv", csv_bytes(&cols, rows)?);

    let mut rows = Vec::new();
    let na = |w: Option<u64>| w.map_or_else(|| "NA".to_string(), |w| w.to_string());
    for (p, label) in labels.iter().enumerate() {
        for (l, lambda) in report.lambdas.iter().enumerate() {
            for rep in &report.replicates {
                rows.push(vec![label.clone(), lambda.to_string(), rep.replicate.to_string(), na(rep.runs[p].waiting[l])]);
            }
        }
    }
    for (l, lambda) in report.lambdas.iter().enumerate() {
        for rep in &report.replicates {
            if let Some(star) = &rep.omniscient {
                rows.push(vec!["omniscient".into(), lambda.to_string(), rep.replicate.to_string(), star[l].to_string()]);
            }
        }
    }
    bundle.add("summary.csv", csv_bytes(&header(&["policy", "lambda", "replicate", "T"]), rows)?);

    if exp.emit_mass_trace {
        let mut cols = header(&["t", "policy", "replicate"]);
        cols.extend((1..=k).map(|i| format!("R_{i}")));
        let mut rows = Vec::new();
        for (p, label) in labels.iter().enumerate() {
            for rep in &report.replicates {
                let masses = rep.runs[p].masses.as_ref().expect("masses recorded");
                for (g, &t) in report.grid.iter().enumerate() {
                    let mut row = vec![t.to_string(), label.clone(), rep.replicate.to_string()];
                    row.extend(masses[g].iter().map(f64::to_string));
                    rows.push(row);
                }
            }
        }
        bundle.add("masses.csv", csv_bytes(&cols, rows)?);
    }

    let averaged = exp.replicates > 1;
    if averaged {
        let mut rows = Vec::new();
        for (p, label) in labels.iter().enumerate() {
            for band in report.found_bands(p) {
                rows.push(vec![
                    band.t.to_string(),
                    label.clone(),
                    band.mean.to_string(),
                    band.median.to_string(),
                    band.q05.to_string(),
                    band.q95.to_string(),
                ]);
            }
        }
        let cols = header(&["t", "policy", "mean_F", "median_F", "q05_F", "q95_F"]);
        bundle.add("found_bands.csv", csv_bytes(&cols, rows)?);
    }

    if exp.emit_svg {
        let series = exp
            .policies
            .iter()
            .enumerate()
            .map(|(p, policy)| {
                let values: Vec<f64> = if averaged {
                    report.mean_found(p)
                } else {
                    report.replicates[0].runs[p].found.iter().map(|&f| f as f64).collect()
                };
                Series {
                    label: labels[p].clone(),
                    stroke: stroke_for(policy),
                    points: report.grid.iter().map(|&t| t as f64).zip(values).collect(),
                }
            })
            .collect();
        let which = if averaged {
            format!("mean of {} replicates", exp.replicates)
        } else {
            "single run".to_string()
        };
        let chart = Chart {
            title: format!("{title}: {which}"),
            x_label: "requests t".into(),
            y_label: "interesting items found F(t)".into(),
            series,
        };
        bundle.add("found.svg", chart.render().into_bytes());
    }
    Ok((report, bundle))
}

/// Closed-form tables: limits per lambda, the time profile and breakpoints.
pub fn macroscopic(profile: &MacroscopicProfile, lambdas: &[f64], t_grid: &[f64], emit_svg: bool) -> Result<Bundle, CliError> {
    let mut bundle = Bundle::default();
    let bad = |e: discovery::macroscopic::ProfileError| CliError::Config(e.to_string());

    let rows = lambdas
        .iter()
        .map(|&l| {
            Ok(vec![
                l.to_string(),
                profile.limit_t(l).map_err(bad)?.to_string(),
                profile.limit_t_uniform(l).map_err(bad)?.to_string(),
            ])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    bundle.add("macro_lambda.csv", csv_bytes(&header(&["lambda", "T_limit", "T_uniform_limit"]), rows)?);

    if let Some(&t) = t_grid.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(CliError::Config(format!("time {t} must be a nonnegative number")));
    }
    let rows = t_grid.iter().map(|&t| {
        vec![
            t.to_string(),
            profile.active_index(t).to_string(),
            profile.limit_f(t).to_string(),
            profile.r_star(t).to_string(),
            profile.lambda_of_t(t).to_string(),
        ]
    });
    bundle.add("macro_time.csv", csv_bytes(&header(&["t", "I", "F_limit", "r_star", "Lambda"]), rows)?);

    let rows = profile
        .breakpoints()
        .iter()
        .enumerate()
        .map(|(i, t)| vec![(i + 1).to_string(), t.to_string()]);
    bundle.add("breakpoints.csv", csv_bytes(&header(&["i", "t_i"]), rows)?);

    if emit_svg && !t_grid.is_empty() {
        let curve = |f: &dyn Fn(f64) -> f64| t_grid.iter().map(|&t| (t, f(t))).collect::<Vec<_>>();
        let chart = Chart {
            title: "macroscopic limit of found proportion".into(),
            x_label: "normalized requests t".into(),
            y_label: "F(t)".into(),
            series: vec![
                Series {
                    label: "optimal".into(),
                    stroke: Stroke::Solid,
                    points: curve(&|t| profile.limit_f(t)),
                },
                Series {
                    label: "uniform".into(),
                    stroke: Stroke::Dotted,
                    points: curve(&|t| profile.q_total() - profile.uniform_unseen(t)),
                },
            ],
        };
        bundle.add("macro.svg", chart.render().into_bytes());
    }
    Ok(bundle)
}

pub fn macroscopic_from_config(cfg: &MacroConfig) -> Result<Bundle, CliError> {
    macroscopic(&cfg.profile()?, &cfg.lambdas, &cfg.t_grid()?, cfg.emit_svg)
}

/// Coverage table and its CSV; failing cells are returned, not raised.
pub fn concentration(cfg: &ConcentrationConfig, threads: usize) -> Result<(Vec<CoverageCell>, Bundle), CliError> {
    let instance = cfg.build()?;
    let cells = coverage_table(&instance, cfg.expert, &cfg.sizes, &cfg.deltas, cfg.replicates, cfg.master_seed, threads)?;
    let rows = cells.iter().map(|c| {
        vec![
            c.n.to_string(),
            c.delta.to_string(),
            c.empirical().to_string(),
            c.replicates.to_string(),
        ]
    });
    let mut bundle = Bundle::default();
    bundle.add(
        "concentration.csv",
        csv_bytes(&header(&["n", "delta", "empirical_coverage", "replicates"]), rows)?,
    );
    Ok((cells, bundle))
}

/// Support sizes of the first reproduction preset.
pub const FIG1_SIZES: [u64; 4] = [128, 500, 1000, 10000];

/// Runs the first reproduction preset once per size, scaling the horizon
/// in proportion to the support size. Files go to `N<size>/`.
pub fn reproduce_fig1(base: &ExperimentConfig, threads: usize) -> Result<Bundle, CliError> {
    let InstanceConfig::SevenExpert { support: base_support } = base.instance else {
        return Err(CliError::Config("fig1 reproduction needs a seven_expert instance".into()));
    };
    let mut bundle = Bundle::default();
    for size in FIG1_SIZES {
        let mut cfg = base.clone();
        cfg.instance = InstanceConfig::SevenExpert { support: size };
        cfg.horizon = (base.horizon as u128 * size as u128 / base_support.max(1) as u128) as u64;
        cfg.record_every = base.record_every.map(|r| (r * size / base_support.max(1)).max(1));
        let exp = cfg.build()?;
        let (_, files) = simulate(&exp, &describe(&cfg.instance), threads)?;
        bundle.nest(&format!("N{size}"), files);
    }
    Ok(bundle)
}
