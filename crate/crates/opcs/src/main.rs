//! `opcs` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/precondition error.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use opcs::basis::{
    generate_baseline, generate_origami, io as basis_io, BaselineKind, PatternBasis, SwapMode,
};
use opcs::cli::{
    export_dmd, parse_config_file, resolve_scene, run_sweep, SceneSource, SweepConfig,
    SweepMethod,
};
use opcs::connectivity::cd_profile;
use opcs::forward::{measure_series, BucketSeries, MeasureMode, NoiseMode, NoiseSpec};
use opcs::imagery::{save_pgm, PhantomVariant};
use opcs::recon::operator::{DenseOperator, WalshOperator};
use opcs::recon::{
    reconstruct_ci, reconstruct_dgi, reconstruct_gi, reconstruct_tv_operator, CiPolarity,
    CiSelection, ReconResult, TvKind, TvSolverConfig,
};

#[derive(Parser)]
#[command(
    name = "opcs",
    version,
    about = "Single-pixel imaging toolkit: pattern generation, measurement \
             simulation, reconstruction, and RMSE benchmarking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Base RNG seed for anything stochastic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (or file, for single-output commands).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// key=value config file supplying defaults for unset flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a pattern basis; writes basis.opcs, profile.csv and
    /// optionally basis.txt.
    Gen {
        #[command(flatten)]
        common: Common,
        /// Pattern side in pixels (power of two).
        #[arg(long)]
        side: Option<usize>,
        /// Ordering: origami | random | hadamard | cdsh.
        #[arg(long)]
        order: Option<String>,
        /// Step-3 swap timing: post | interleaved.
        #[arg(long)]
        swap_mode: Option<String>,
        /// Also write the plain-text pattern dump.
        #[arg(long)]
        text: bool,
    },
    /// Connected-domain profile of a stored basis.
    Cd {
        #[command(flatten)]
        common: Common,
        /// Basis container produced by `gen`.
        #[arg(long)]
        basis: Option<PathBuf>,
    },
    /// Simulate a bucket series for a stored basis and a scene.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        basis: Option<PathBuf>,
        /// Scene PGM; omit to use the built-in phantom.
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Phantom variant when no scene file is given: modified | standard.
        #[arg(long)]
        phantom: Option<String>,
        /// Number of patterns to measure (default: all).
        #[arg(long)]
        m: Option<usize>,
        /// Measurement mode: pm1 | comp.
        #[arg(long)]
        mode: Option<String>,
        /// Noise model: none | poisson | gaussian.
        #[arg(long)]
        noise: Option<String>,
        /// Expected photons per unit bucket value (poisson).
        #[arg(long)]
        photon_scale: Option<f64>,
        /// Additive noise standard deviation (gaussian).
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Reconstruct an image from a stored basis and series.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        basis: Option<PathBuf>,
        /// Series CSV produced by `simulate`.
        #[arg(long)]
        series: Option<PathBuf>,
        /// gi | dgi | ci | ci-neg | tv.
        #[arg(long)]
        method: Option<String>,
        /// CI subset fraction in (0, 0.5].
        #[arg(long)]
        fraction: Option<f64>,
        /// TV data-fidelity weight.
        #[arg(long)]
        mu: Option<f64>,
        /// TV flavor: aniso | iso.
        #[arg(long)]
        tv_kind: Option<String>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        rel_tol: Option<f64>,
        /// Disable the non-negativity projection.
        #[arg(long)]
        no_nonneg: bool,
    },
    /// RMSE-vs-sampling-ratio benchmark over pattern orderings.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        side: Option<usize>,
        /// Comma-separated subset of opcs,cdsh,random,dgi,ci.
        #[arg(long)]
        methods: Option<String>,
        /// Comma-separated sampling ratios in (0, 1].
        #[arg(long)]
        ratios: Option<String>,
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long)]
        phantom: Option<String>,
        #[arg(long)]
        noise: Option<String>,
        #[arg(long)]
        photon_scale: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        /// Force a measurement mode for every cell: pm1 | comp.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        fraction: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        tv_kind: Option<String>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        rel_tol: Option<f64>,
        #[arg(long)]
        no_nonneg: bool,
        /// Record wall-clock seconds in sweep.csv (breaks byte-for-byte
        /// reproducibility of the CSV).
        #[arg(long)]
        timing: bool,
    },
    /// Export complementary DMD frame pairs for the first m patterns.
    ExportDmd {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        basis: Option<PathBuf>,
        #[arg(long)]
        m: Option<usize>,
    },
}

enum CliError {
    Usage(String),
    Data(anyhow::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl From<opcs::Error> for CliError {
    fn from(e: opcs::Error) -> Self {
        CliError::Data(e.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.into())
    }
}

type CliResult<T> = Result<T, CliError>;

/// Config-file fallback: `opt`, else parsed `map[key]`, else `default`.
fn setting<T: FromStr + Clone>(
    opt: &Option<T>,
    map: &BTreeMap<String, String>,
    key: &str,
    default: T,
) -> CliResult<T> {
    if let Some(v) = opt {
        return Ok(v.clone());
    }
    match map.get(key) {
        Some(raw) => raw
            .parse::<T>()
            .map_err(|_| usage(format!("config key '{key}': cannot parse '{raw}'"))),
        None => Ok(default),
    }
}

fn setting_opt<T: FromStr + Clone>(
    opt: &Option<T>,
    map: &BTreeMap<String, String>,
    key: &str,
) -> CliResult<Option<T>> {
    if opt.is_some() {
        return Ok(opt.clone());
    }
    match map.get(key) {
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|_| usage(format!("config key '{key}': cannot parse '{raw}'"))),
        None => Ok(None),
    }
}

fn load_config(common: &Common) -> CliResult<BTreeMap<String, String>> {
    match &common.config {
        Some(path) => Ok(parse_config_file(path)?),
        None => Ok(BTreeMap::new()),
    }
}

fn parse_phantom(name: &str) -> CliResult<PhantomVariant> {
    match name {
        "modified" => Ok(PhantomVariant::Modified),
        "standard" => Ok(PhantomVariant::Standard),
        _ => Err(usage(format!("unknown phantom variant '{name}'"))),
    }
}

fn parse_noise(
    noise: &Option<String>,
    photon_scale: Option<f64>,
    sigma: Option<f64>,
    seed: u64,
) -> CliResult<NoiseSpec> {
    let mode = match noise.as_deref().unwrap_or("none") {
        "none" => NoiseMode::None,
        "poisson" => NoiseMode::Poisson,
        "gaussian" => NoiseMode::Gaussian,
        other => return Err(usage(format!("unknown noise mode '{other}'"))),
    };
    Ok(NoiseSpec {
        mode,
        photon_scale: photon_scale.unwrap_or(1.0),
        sigma: sigma.unwrap_or(0.0),
        rng_seed: seed,
    })
}

fn parse_tv(
    mu: Option<f64>,
    tv_kind: &Option<String>,
    max_iters: Option<usize>,
    rel_tol: Option<f64>,
    no_nonneg: bool,
) -> CliResult<TvSolverConfig> {
    let mut cfg = TvSolverConfig::default();
    if let Some(mu) = mu {
        cfg.mu = mu;
    }
    if let Some(kind) = tv_kind.as_deref() {
        cfg.tv_kind = match kind {
            "aniso" | "anisotropic" => TvKind::Anisotropic,
            "iso" | "isotropic" => TvKind::Isotropic,
            _ => return Err(usage(format!("unknown tv kind '{kind}'"))),
        };
    }
    if let Some(it) = max_iters {
        cfg.max_iters = it;
    }
    if let Some(rt) = rel_tol {
        cfg.rel_tol = rt;
    }
    cfg.nonneg = !no_nonneg;
    Ok(cfg)
}

fn read_basis_file(path: &Path) -> CliResult<PatternBasis> {
    let mut r = BufReader::new(File::open(path)?);
    Ok(basis_io::read_basis(&mut r)?)
}

fn out_dir(common: &Common, map: &BTreeMap<String, String>) -> CliResult<PathBuf> {
    setting(&common.out, map, "out", PathBuf::from("."))
}

fn run_gen(
    common: &Common,
    side: &Option<usize>,
    order: &Option<String>,
    swap_mode: &Option<String>,
    text: bool,
) -> CliResult<()> {
    let map = load_config(common)?;
    let side = setting(side, &map, "side", 0usize)?;
    if side == 0 {
        return Err(usage("--side is required"));
    }
    let order = setting(order, &map, "order", "origami".to_string())?;
    let swap = match setting(swap_mode, &map, "swap_mode", "post".to_string())?.as_str() {
        "post" => SwapMode::PostReorder,
        "interleaved" => SwapMode::Interleaved,
        other => return Err(usage(format!("unknown swap mode '{other}'"))),
    };
    let seed = setting(&common.seed, &map, "seed", 0u64)?;
    let basis = match order.as_str() {
        "origami" => generate_origami(side, swap)?,
        "random" => generate_baseline(side, BaselineKind::RandomPm1, seed)?,
        "hadamard" => generate_baseline(side, BaselineKind::HadamardNatural, seed)?,
        "cdsh" => generate_baseline(side, BaselineKind::CdSortedHadamard, seed)?,
        other => return Err(usage(format!("unknown ordering '{other}'"))),
    };
    let dir = out_dir(common, &map)?;
    fs::create_dir_all(&dir)?;
    let mut w = BufWriter::new(File::create(dir.join("basis.opcs"))?);
    basis_io::write_basis(&mut w, &basis)?;
    drop(w);
    let mut w = BufWriter::new(File::create(dir.join("profile.csv"))?);
    cd_profile(&basis)?.write_csv(&mut w)?;
    drop(w);
    if text {
        let mut w = BufWriter::new(File::create(dir.join("basis.txt"))?);
        basis_io::write_basis_text(&mut w, &basis)?;
    }
    println!("wrote {} ({} patterns)", dir.join("basis.opcs").display(), basis.len());
    Ok(())
}

fn run_cd(common: &Common, basis: &Option<PathBuf>) -> CliResult<()> {
    let map = load_config(common)?;
    let basis_path =
        setting_opt(basis, &map, "basis")?.ok_or_else(|| usage("--basis is required"))?;
    let basis = read_basis_file(&basis_path)?;
    let profile = cd_profile(&basis)?;
    let dir = out_dir(common, &map)?;
    fs::create_dir_all(&dir)?;
    let path = dir.join("profile.csv");
    let mut w = BufWriter::new(File::create(&path)?);
    profile.write_csv(&mut w)?;
    println!("wrote {} ({} tied pairs)", path.display(), profile.tied_pairs().len());
    Ok(())
}

fn scene_for(
    scene: &Option<PathBuf>,
    phantom: &Option<String>,
    map: &BTreeMap<String, String>,
    side: usize,
) -> CliResult<opcs::forward::SceneImage> {
    let scene_path = setting_opt(scene, map, "scene")?;
    let source = match scene_path {
        Some(path) => SceneSource::Pgm(path),
        None => {
            let variant = setting(phantom, map, "phantom", "modified".to_string())?;
            SceneSource::Phantom(parse_phantom(&variant)?)
        }
    };
    Ok(resolve_scene(&source, side)?)
}

#[allow(clippy::too_many_arguments)]
fn run_simulate(
    common: &Common,
    basis: &Option<PathBuf>,
    scene: &Option<PathBuf>,
    phantom: &Option<String>,
    m: &Option<usize>,
    mode: &Option<String>,
    noise: &Option<String>,
    photon_scale: Option<f64>,
    sigma: Option<f64>,
) -> CliResult<()> {
    let map = load_config(common)?;
    let basis_path =
        setting_opt(basis, &map, "basis")?.ok_or_else(|| usage("--basis is required"))?;
    let basis = read_basis_file(&basis_path)?;
    let m = setting(m, &map, "m", basis.len())?;
    let scene = scene_for(scene, phantom, &map, basis.side())?;
    let seed = setting(&common.seed, &map, "seed", 0u64)?;
    let noise_name = setting_opt(noise, &map, "noise")?;
    let photon_scale = setting_opt(&photon_scale, &map, "photon_scale")?;
    let sigma = setting_opt(&sigma, &map, "sigma")?;
    let spec = parse_noise(&noise_name, photon_scale, sigma, seed)?;
    let mode_name = setting(mode, &map, "mode", "pm1".to_string())?;
    let mode = MeasureMode::parse(&mode_name)?;
    let series = measure_series(&basis, m, &scene, &spec, mode)?;
    let dir = out_dir(common, &map)?;
    fs::create_dir_all(&dir)?;
    let path = dir.join("series.csv");
    let mut w = BufWriter::new(File::create(&path)?);
    series.write_csv(&mut w)?;
    println!("wrote {} ({} measurements)", path.display(), series.len());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_reconstruct(
    common: &Common,
    basis: &Option<PathBuf>,
    series: &Option<PathBuf>,
    method: &Option<String>,
    fraction: Option<f64>,
    mu: Option<f64>,
    tv_kind: &Option<String>,
    max_iters: Option<usize>,
    rel_tol: Option<f64>,
    no_nonneg: bool,
) -> CliResult<()> {
    let map = load_config(common)?;
    let basis_path =
        setting_opt(basis, &map, "basis")?.ok_or_else(|| usage("--basis is required"))?;
    let series_path =
        setting_opt(series, &map, "series")?.ok_or_else(|| usage("--series is required"))?;
    let method = setting(method, &map, "method", String::new())?;
    if method.is_empty() {
        return Err(usage("--method is required"));
    }
    let basis = read_basis_file(&basis_path)?;
    let series = BucketSeries::read_csv(BufReader::new(File::open(&series_path)?))?;
    let m = series.len();
    if m > basis.len() {
        return Err(CliError::Data(anyhow::anyhow!(
            "series has {m} measurements but the basis holds {}",
            basis.len()
        )));
    }
    let patterns = &basis.patterns()[..m];
    let fraction = setting(&fraction, &map, "fraction", 0.1f64)?;
    let result: ReconResult = match method.as_str() {
        "gi" => reconstruct_gi(patterns, &series)?,
        "dgi" => {
            if series.mode == MeasureMode::IdealPm1 {
                // documented unsupported combination: +/-1 references are
                // (almost all) zero-sum
                return Err(opcs::Error::DegenerateReference.into());
            }
            reconstruct_dgi(patterns, &series)?
        }
        "ci" | "ci-pos" => reconstruct_ci(
            patterns,
            &series,
            &CiSelection::TopBottomFraction { fraction },
            CiPolarity::Positive,
        )?,
        "ci-neg" => reconstruct_ci(
            patterns,
            &series,
            &CiSelection::TopBottomFraction { fraction },
            CiPolarity::Negative,
        )?,
        "tv" => {
            let tv = parse_tv(mu, tv_kind, max_iters, rel_tol, no_nonneg)?;
            let b: Vec<f64> = if series.mode == MeasureMode::Complementary01 {
                series.s_b.iter().map(|v| v / series.noise.photon_scale).collect()
            } else {
                series.s_b.clone()
            };
            if let Some(op) = WalshOperator::from_patterns(patterns) {
                reconstruct_tv_operator(&op, &b, &tv)?
            } else {
                let matrix = basis.flatten(m)?;
                reconstruct_tv_operator(&DenseOperator::new(&matrix), &b, &tv)?
            }
        }
        other => return Err(usage(format!("unknown method '{other}'"))),
    };
    let dir = out_dir(common, &map)?;
    fs::create_dir_all(&dir)?;
    let stem = format!("recon_{}", method.replace('-', "_"));
    save_pgm(&result.image, &dir.join(format!("{stem}.pgm")), None)?;
    let mut w = BufWriter::new(File::create(dir.join(format!("{stem}.csv")))?);
    let (rows, cols) = result.image.dim();
    for r in 0..rows {
        let line: Vec<String> = (0..cols).map(|c| result.image[(r, c)].to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    drop(w);
    let mut w = BufWriter::new(File::create(dir.join(format!("{stem}.txt")))?);
    writeln!(w, "method={}", result.method.name())?;
    writeln!(w, "m={}", result.m_used)?;
    writeln!(w, "basis={}", series.basis_id)?;
    writeln!(w, "iterations={}", result.iterations)?;
    writeln!(w, "converged={}", result.converged)?;
    writeln!(w, "elapsed_seconds={:.6}", result.elapsed)?;
    drop(w);
    println!("wrote {}", dir.join(format!("{stem}.pgm")).display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_sweep_cmd(
    common: &Common,
    side: &Option<usize>,
    methods: &Option<String>,
    ratios: &Option<String>,
    scene: &Option<PathBuf>,
    phantom: &Option<String>,
    noise: &Option<String>,
    photon_scale: Option<f64>,
    sigma: Option<f64>,
    mode: &Option<String>,
    fraction: Option<f64>,
    mu: Option<f64>,
    tv_kind: &Option<String>,
    max_iters: Option<usize>,
    rel_tol: Option<f64>,
    no_nonneg: bool,
    timing: bool,
) -> CliResult<()> {
    let map = load_config(common)?;
    let side = setting(side, &map, "side", 0usize)?;
    if side == 0 {
        return Err(usage("--side is required"));
    }
    let dir = out_dir(common, &map)?;
    let mut cfg = SweepConfig::new(side, dir.clone());
    cfg.rng_seed = setting(&common.seed, &map, "seed", 0u64)?;
    if let Some(spec) = setting_opt(methods, &map, "methods")? {
        cfg.methods = spec
            .split(',')
            .map(SweepMethod::parse)
            .collect::<opcs::Result<Vec<_>>>()
            .map_err(|e| usage(e.to_string()))?;
    }
    if let Some(spec) = setting_opt(ratios, &map, "ratios")? {
        cfg.ratios = spec
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| usage(format!("bad ratio '{t}'")))
            })
            .collect::<CliResult<Vec<_>>>()?;
    }
    let scene_path = setting_opt(scene, &map, "scene")?;
    cfg.scene = match scene_path {
        Some(path) => SceneSource::Pgm(path),
        None => {
            let variant = setting(phantom, &map, "phantom", "modified".to_string())?;
            SceneSource::Phantom(parse_phantom(&variant)?)
        }
    };
    let noise_name = setting_opt(noise, &map, "noise")?;
    let photon_scale = setting_opt(&photon_scale, &map, "photon_scale")?;
    let sigma = setting_opt(&sigma, &map, "sigma")?;
    cfg.noise = parse_noise(&noise_name, photon_scale, sigma, cfg.rng_seed)?;
    if let Some(mode_name) = setting_opt(mode, &map, "mode")? {
        cfg.mode_override = Some(MeasureMode::parse(&mode_name)?);
    }
    cfg.ci_fraction = setting(&fraction, &map, "fraction", 0.1f64)?;
    cfg.tv = parse_tv(mu, tv_kind, max_iters, rel_tol, no_nonneg)?;
    cfg.record_timing = timing || map.get("timing").is_some_and(|v| v == "true");

    let rows = run_sweep(&cfg)?;
    let failures = rows.iter().filter(|r| r.error.is_some()).count();
    println!(
        "wrote {} ({} rows, {} failed cells)",
        dir.join("sweep.csv").display(),
        rows.len(),
        failures
    );
    Ok(())
}

fn run_export_dmd(common: &Common, basis: &Option<PathBuf>, m: &Option<usize>) -> CliResult<()> {
    let map = load_config(common)?;
    let basis_path =
        setting_opt(basis, &map, "basis")?.ok_or_else(|| usage("--basis is required"))?;
    let basis = read_basis_file(&basis_path)?;
    let m = setting(m, &map, "m", basis.len())?;
    let dir = out_dir(common, &map)?;
    fs::create_dir_all(&dir)?;
    let path = dir.join("frames.dmd");
    export_dmd(&basis, m, &path)?;
    println!("wrote {} ({} frames)", path.display(), 2 * m);
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Gen { common, side, order, swap_mode, text } => {
            run_gen(common, side, order, swap_mode, *text)
        }
        Command::Cd { common, basis } => run_cd(common, basis),
        Command::Simulate {
            common,
            basis,
            scene,
            phantom,
            m,
            mode,
            noise,
            photon_scale,
            sigma,
        } => run_simulate(
            common,
            basis,
            scene,
            phantom,
            m,
            mode,
            noise,
            *photon_scale,
            *sigma,
        ),
        Command::Reconstruct {
            common,
            basis,
            series,
            method,
            fraction,
            mu,
            tv_kind,
            max_iters,
            rel_tol,
            no_nonneg,
        } => run_reconstruct(
            common,
            basis,
            series,
            method,
            *fraction,
            *mu,
            tv_kind,
            *max_iters,
            *rel_tol,
            *no_nonneg,
        ),
        Command::Sweep {
            common,
            side,
            methods,
            ratios,
            scene,
            phantom,
            noise,
            photon_scale,
            sigma,
            mode,
            fraction,
            mu,
            tv_kind,
            max_iters,
            rel_tol,
            no_nonneg,
            timing,
        } => run_sweep_cmd(
            common,
            side,
            methods,
            ratios,
            scene,
            phantom,
            noise,
            *photon_scale,
            *sigma,
            mode,
            *fraction,
            *mu,
            tv_kind,
            *max_iters,
            *rel_tol,
            *no_nonneg,
            *timing,
        ),
        Command::ExportDmd { common, basis, m } => run_export_dmd(common, basis, m),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(msg) => eprintln!("usage error: {msg}"),
                CliError::Data(err) => eprintln!("error: {err:#}"),
            }
            ExitCode::from(e.code())
        }
    }
}
