//! The five subcommands.

use std::path::{Path, PathBuf};

use bvarch::inference::{build_report, FitReport};
use bvarch::model::{Dataset, Model, SiteGroup};
use bvarch::pipeline::{aggregate_daily, build_dataset, load_dataset, load_raw, read_operations, read_sites, read_wind, save_dataset};
use bvarch::sampler::{run_chains, PosteriorDraws};
use bvarch::simulate::{demo_design, demo_params, inject_missing, simulate};

use crate::config::Loaded;
use crate::error::{CliError, Result};
use crate::output::{dataset_hash, file_names, sha256_hex, write_atomic, write_with, Manifest};

/// Progress line on stdout; a closed pipe is not an error.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

pub const DRAWS: &str = "draws.csv";
pub const REPORT: &str = "report.json";
pub const SUMMARY: &str = "summary.csv";
pub const FORECAST: &str = "forecast.csv";
pub const COMPARISON: &str = "comparison.csv";
pub const DATASET: &str = "dataset.csv";
pub const RAW_DIR: &str = "raw";

/// Shared flags: the config plus overrides.
#[derive(Clone, Debug)]
pub struct Invocation {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

struct Run {
    loaded: Loaded,
    seed: Option<u64>,
    out: PathBuf,
}

impl Run {
    fn new(inv: &Invocation) -> Result<Self> {
        let loaded = Loaded::read(&inv.config)?;
        let out = match &inv.out {
            Some(o) => o.clone(),
            None => loaded.resolve(&loaded.config.output.dir),
        };
        Ok(Run { loaded, seed: inv.seed, out })
    }

    fn manifest(&self, command: &str, dataset: Option<&Dataset>, seed: Option<u64>, outputs: &[PathBuf]) -> Result<Manifest> {
        Ok(Manifest {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_sha256: sha256_hex(&self.loaded.bytes),
            dataset_sha256: dataset.map(dataset_hash).transpose()?,
            seed,
            variant: self.loaded.config.model.as_ref().map(|m| m.variant.to_string()),
            outputs: file_names(outputs),
        })
    }

    fn dataset(&self) -> Result<Dataset> {
        let d = self.loaded.section(&self.loaded.config.data, "data")?;
        let path = self.loaded.resolve(&d.path);
        let sites = match &d.sites {
            Some(p) => Some(read_sites(std::fs::File::open(self.loaded.resolve(p))?)?),
            None => None,
        };
        Ok(load_dataset(&path, sites.as_deref())?)
    }

    fn write_report(&self, report: &FitReport) -> Result<Vec<PathBuf>> {
        let files = [REPORT, SUMMARY, FORECAST].map(|f| self.out.join(f));
        write_with(&files[0], |b| report.write_json(b))?;
        write_with(&files[1], |b| report.write_summary_csv(b))?;
        write_with(&files[2], |b| report.write_forecast_csv(b))?;
        Ok(files.to_vec())
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.4}"))
}

fn print_fit(report: &FitReport) {
    let div = report.sampler.as_ref().map_or_else(|| "n/a".into(), |s| s.divergences.to_string());
    say!(
        "{}: R-hat range [{}, {}], divergences {div}, WAIC {:.2} (se {:.2}), LOOIC {:.2} (se {:.2}), spectral radius {:.3}, coverage {:.3}",
        report.variant,
        fmt_opt(report.rhat_min),
        fmt_opt(report.rhat_max),
        report.waic.waic,
        report.waic.se,
        report.looic.looic,
        report.looic.se,
        report.spectral_radius,
        report.coverage,
    );
    if !report.looic.flagged.is_empty() {
        say!("{} points with Pareto k > 0.7", report.looic.flagged.len());
    }
}

pub fn fit(inv: &Invocation) -> Result<()> {
    let run = Run::new(inv)?;
    let mut sampler = run.loaded.config.sampler.clone();
    if let Some(s) = run.seed {
        sampler.seed = s;
    }
    sampler.validate()?;
    let spec = run.loaded.model_spec()?;
    let data = run.dataset()?;
    let model = Model::new(spec, data)?;
    let draws = run_chains(&model, &sampler)?;
    let forecast_seed = run.loaded.config.output.forecast_seed.unwrap_or(sampler.seed);
    let report = build_report(&draws, &model, forecast_seed)?;

    let draws_path = run.out.join(DRAWS);
    write_with(&draws_path, |b| draws.write_csv(b))?;
    let mut files = vec![draws_path];
    files.extend(run.write_report(&report)?);
    run.manifest("fit", Some(model.data()), Some(sampler.seed), &files)?.write(&run.out)?;
    print_fit(&report);
    Ok(())
}

pub fn diagnose(inv: &Invocation) -> Result<()> {
    let run = Run::new(inv)?;
    let spec = run.loaded.model_spec()?;
    let path = match run.loaded.config.diagnose.as_ref().and_then(|d| d.draws.as_ref()) {
        Some(p) => run.loaded.resolve(p),
        None => run.out.join(DRAWS),
    };
    let draws: PosteriorDraws = PosteriorDraws::read_csv(std::fs::File::open(&path)?)?;
    let model = Model::new(spec, run.dataset()?)?;
    let seed = run.seed.or(run.loaded.config.output.forecast_seed).unwrap_or(run.loaded.config.sampler.seed);
    let report = build_report(&draws, &model, seed)?;
    let files = run.write_report(&report)?;
    run.manifest("diagnose", Some(model.data()), Some(seed), &files)?.write(&run.out)?;
    print_fit(&report);
    Ok(())
}

/// One row of the comparison table.
#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub model: String,
    pub waic: f64,
    pub waic_se: f64,
    pub looic: f64,
    pub looic_se: f64,
    pub spectral_radius: f64,
}

pub fn compare(inv: &Invocation) -> Result<()> {
    let run = Run::new(inv)?;
    let c = run.loaded.section(&run.loaded.config.compare, "compare")?;
    if c.runs.len() < 2 {
        return Err(CliError::Config("compare needs at least two runs".into()));
    }
    let mut hash: Option<(PathBuf, String)> = None;
    let mut rows = Vec::with_capacity(c.runs.len());
    for dir in &c.runs {
        let dir = run.loaded.resolve(dir);
        let m = Manifest::read(&dir)?;
        let h = m.dataset_sha256.ok_or_else(|| CliError::Config(format!("{} has no dataset hash", dir.display())))?;
        match &hash {
            Some((first, h0)) if *h0 != h => {
                return Err(CliError::DatasetMismatch(format!("{} vs {}", first.display(), dir.display())));
            }
            Some(_) => {}
            None => hash = Some((dir.clone(), h)),
        }
        let r: FitReport = serde_json::from_slice(&std::fs::read(dir.join(REPORT))?)?;
        rows.push(Comparison {
            model: r.variant.to_string(),
            waic: r.waic.waic,
            waic_se: r.waic.se,
            looic: r.looic.looic,
            looic_se: r.looic.se,
            spectral_radius: r.spectral_radius,
        });
    }
    rows.sort_by(|a, b| a.waic.total_cmp(&b.waic));
    let mut text = String::from("model,waic,waic_se,looic,looic_se,spectral_radius\n");
    for r in &rows {
        text += &format!("{},{},{},{},{},{}\n", r.model, r.waic, r.waic_se, r.looic, r.looic_se, r.spectral_radius);
        say!(
            "{:<8} WAIC {:>10.2} ({:.2})  LOOIC {:>10.2} ({:.2})  spectral radius {:.3}",
            r.model,
            r.waic,
            r.waic_se,
            r.looic,
            r.looic_se,
            r.spectral_radius
        );
    }
    let path = run.out.join(COMPARISON);
    write_atomic(&path, text.as_bytes())?;
    let mut m = run.manifest("compare", None, None, &[path])?;
    m.dataset_sha256 = hash.map(|h| h.1);
    m.write(&run.out)?;
    Ok(())
}

pub fn simulate_cmd(inv: &Invocation) -> Result<()> {
    let run = Run::new(inv)?;
    let mut cfg = run.loaded.config.simulate.clone().unwrap_or_default();
    if let Some(s) = run.seed {
        cfg.seed = s;
    }
    let spec = bvarch::model::ModelSpec {
        variant: cfg.variant,
        priors: run.loaded.config.priors.clone(),
        covariate_roles: bvarch::model::default_roles(),
    };
    let params = match cfg.params.clone() {
        Some(p) => p.into_params()?,
        None => demo_params(cfg.variant),
    };
    let design = demo_design(cfg.n_time, cfg.seed);
    let mut data = simulate(&spec, &params, cfg.n_time, &design, cfg.seed)?;
    if let Some(scheme) = &cfg.missing {
        data = inject_missing(&data, scheme, cfg.seed)?;
    }
    let path = run.out.join(DATASET);
    let mut files = write_dataset_files(&data, &path)?;
    if cfg.raw {
        files.extend(write_raw(&data, &run.out.join(RAW_DIR))?);
    }
    let mut m = run.manifest("simulate", Some(&data), Some(cfg.seed), &files)?;
    m.variant = Some(cfg.variant.to_string());
    m.write(&run.out)?;
    say!(
        "simulated {} days x {} sites ({}, {} missing) -> {}",
        data.n_time(),
        data.n_sites(),
        cfg.variant,
        data.n_missing(),
        path.display()
    );
    Ok(())
}

fn write_dataset_files(data: &Dataset, path: &Path) -> Result<Vec<PathBuf>> {
    // Stage next to the target so the pair is renamed into place together.
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let stage = dir.join(format!(".stage{}.csv", std::process::id()));
    save_dataset(data, &stage)?;
    let sites = bvarch::pipeline::sites_path(path);
    std::fs::rename(bvarch::pipeline::sites_path(&stage), &sites)?;
    std::fs::rename(&stage, path)?;
    Ok(vec![path.to_path_buf(), sites])
}

/// Raw-format files that `ingest` turns back into `data`: one reading per
/// observed cell at noon UTC, the wind series, the operations log and the
/// site table.
fn write_raw(data: &Dataset, dir: &Path) -> Result<Vec<PathBuf>> {
    let cov = |name: &str| data.covariates().iter().find(|c| c.name == name);
    let (Some(dump), Some(dredge), Some(wind)) = (cov("dumping"), cov("dredging"), cov("wind")) else {
        return Err(CliError::Config("raw export needs dumping, dredging and wind covariates".into()));
    };
    let mut turb = String::from("timestamp,site,turbidity_ntu\n");
    for t in 0..data.n_time() {
        for s in 0..data.n_sites() {
            if let Some(v) = data.value(t, s) {
                if v < 0.0 {
                    return Err(CliError::Config(format!(
                        "raw export needs non-negative turbidity; got {v} at day {} site {}",
                        t + 1,
                        data.site_ids()[s]
                    )));
                }
                turb += &format!("{}T12:00:00Z,{},{v}\n", data.dates()[t], data.site_ids()[s]);
            }
        }
    }
    let mut wind_csv = String::from("date,wind_knots\n");
    let mut ops = String::from("date,operation\n");
    for (t, d) in data.dates().iter().enumerate() {
        wind_csv += &format!("{d},{}\n", wind.values[(t, 0)]);
        let on = |m: &bvarch::Mat64| (0..data.n_sites()).any(|s| m[(t, s)] == 1.0);
        if on(&dredge.values) {
            ops += &format!("{d},dredging\n");
        }
        if on(&dump.values) {
            ops += &format!("{d},dumping\n");
        }
    }
    let mut sites = String::from("site,group\n");
    for (id, g) in data.site_ids().iter().zip(data.site_groups()) {
        sites += &format!("{id},{}\n", g.as_str());
    }
    let files: Vec<PathBuf> = ["turbidity.csv", "wind.csv", "operations.csv", "sites.csv"].iter().map(|f| dir.join(f)).collect();
    for (f, text) in files.iter().zip([turb, wind_csv, ops, sites]) {
        write_atomic(f, text.as_bytes())?;
    }
    Ok(files)
}

pub fn ingest(inv: &Invocation) -> Result<()> {
    let run = Run::new(inv)?;
    let c = run.loaded.section(&run.loaded.config.ingest, "ingest")?;
    let open = |p: &Path| std::fs::File::open(run.loaded.resolve(p));
    let records = load_raw(&run.loaded.resolve(&c.raw))?;
    let daily = aggregate_daily(&records, c.min_readings);
    let wind = read_wind(open(&c.wind)?)?;
    let ops = read_operations(open(&c.operations)?)?;
    let sites: Vec<(String, SiteGroup)> = read_sites(open(&c.sites)?)?;
    let data = build_dataset(&daily, &wind, &ops, &sites)?;
    let path = run.out.join(DATASET);
    let files = write_dataset_files(&data, &path)?;
    run.manifest("ingest", Some(&data), None, &files)?.write(&run.out)?;
    say!(
        "ingested {} readings -> {} days x {} sites, {} missing -> {}",
        records.len(),
        data.n_time(),
        data.n_sites(),
        data.n_missing(),
        path.display()
    );
    Ok(())
}

/// Reads `dataset.csv` and its sidecar from a command's output directory.
pub fn read_output_dataset(dir: &Path) -> Result<Dataset> {
    Ok(load_dataset(&dir.join(DATASET), None)?)
}
