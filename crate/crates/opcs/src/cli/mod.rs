//! Sweep orchestration, DMD frame export, and the plain-text config-file
//! format shared by the `opcs` subcommands.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::basis::io::{self as basis_io, pack_rows, pattern_bytes, unpack_rows};
use crate::basis::{
    generate_baseline_prefix, generate_origami_prefix, BaselineKind, Pattern, PatternBasis,
    SwapMode,
};
use crate::error::{Error, Result};
use crate::forward::{measure_series, MeasureMode, NoiseMode, NoiseSpec, SceneImage};
use crate::imagery::{self, PhantomVariant};
use crate::metrics;
use crate::recon::operator::{DenseOperator, WalshOperator};
use crate::recon::{
    reconstruct_ci, reconstruct_dgi, reconstruct_tv_operator, CiPolarity, CiSelection,
    ReconResult, TvSolverConfig,
};

/// Methods a sweep can benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMethod {
    /// Origami-ordered patterns + TV compressed sensing.
    Opcs,
    /// CD-sorted Hadamard patterns + TV compressed sensing.
    CdshCs,
    /// Seeded random +/-1 patterns + TV compressed sensing.
    RandomCs,
    /// Origami patterns, differential ghost imaging.
    Dgi,
    /// Origami patterns, correspondence imaging (positive image).
    Ci,
}

impl SweepMethod {
    pub fn name(&self) -> &'static str {
        match self {
            SweepMethod::Opcs => "opcs",
            SweepMethod::CdshCs => "cdsh",
            SweepMethod::RandomCs => "random",
            SweepMethod::Dgi => "dgi",
            SweepMethod::Ci => "ci",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "opcs" => Ok(SweepMethod::Opcs),
            "cdsh" | "cdsh_cs" => Ok(SweepMethod::CdshCs),
            "random" | "random_cs" => Ok(SweepMethod::RandomCs),
            "dgi" => Ok(SweepMethod::Dgi),
            "ci" => Ok(SweepMethod::Ci),
            other => Err(Error::InvalidArgument(format!("unknown sweep method '{other}'"))),
        }
    }
}

/// Where the ground-truth scene comes from.
#[derive(Debug, Clone)]
pub enum SceneSource {
    Phantom(PhantomVariant),
    Pgm(PathBuf),
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub side: usize,
    /// Sampling ratios in (0, 1], ascending.
    pub ratios: Vec<f64>,
    pub methods: Vec<SweepMethod>,
    pub noise: NoiseSpec,
    pub scene: SceneSource,
    pub out_dir: PathBuf,
    pub rng_seed: u64,
    pub tv: TvSolverConfig,
    pub ci_fraction: f64,
    /// Force a measurement mode instead of the per-method default.
    pub mode_override: Option<MeasureMode>,
    /// Record wall-clock seconds in the sweep CSV. Off by default so that
    /// identical invocations produce byte-identical CSV output.
    pub record_timing: bool,
}

impl SweepConfig {
    pub fn new(side: usize, out_dir: PathBuf) -> Self {
        SweepConfig {
            side,
            ratios: vec![0.005, 0.025, 0.045, 0.065, 0.085],
            methods: vec![SweepMethod::Opcs, SweepMethod::CdshCs, SweepMethod::RandomCs],
            noise: NoiseSpec::none(),
            scene: SceneSource::Phantom(PhantomVariant::Modified),
            out_dir,
            rng_seed: 0,
            tv: TvSolverConfig::default(),
            ci_fraction: 0.1,
            mode_override: None,
            record_timing: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.ratios.is_empty() {
            return Err(Error::InvalidArgument("ratio list is empty".into()));
        }
        if self.ratios.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("ratios must be strictly ascending".into()));
        }
        if self.ratios.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
            return Err(Error::InvalidArgument("ratios must lie in (0, 1]".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument("method list is empty".into()));
        }
        Ok(())
    }
}

/// One sweep cell result: a CSV row.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub method: SweepMethod,
    pub ratio: f64,
    pub m: usize,
    pub rmse: Option<f64>,
    pub psnr: Option<f64>,
    pub pearson: Option<f64>,
    pub seconds: f64,
    pub error: Option<String>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SweepRow {
    fn csv_line(&self, record_timing: bool) -> String {
        let seconds = if record_timing { self.seconds } else { 0.0 };
        format!(
            "{},{},{},{},{},{},{:.6},{}",
            self.method.name(),
            self.ratio,
            self.m,
            fmt_opt(self.rmse),
            fmt_opt(self.psnr),
            fmt_opt(self.pearson),
            seconds,
            self.error.as_deref().unwrap_or("").replace(',', ";"),
        )
    }
}

/// Loads or renders the configured ground-truth scene at `side`.
pub fn resolve_scene(source: &SceneSource, side: usize) -> Result<SceneImage> {
    match source {
        SceneSource::Phantom(variant) => imagery::shepp_logan_variant(side, *variant),
        SceneSource::Pgm(path) => {
            let img = imagery::load_pgm(path)?;
            if img.side() != side {
                return Err(Error::DimensionMismatch(format!(
                    "scene {} has side {}, requested side {side}",
                    path.display(),
                    img.side()
                )));
            }
            Ok(img)
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Stable per-cell seed: independent of completion order.
fn cell_seed(base: u64, method: SweepMethod, ratio_idx: usize) -> u64 {
    base ^ fnv1a(format!("{}#{ratio_idx}", method.name()).as_bytes())
}

fn build_basis(method: SweepMethod, side: usize, m: usize, seed: u64) -> Result<PatternBasis> {
    match method {
        SweepMethod::Opcs | SweepMethod::Dgi | SweepMethod::Ci => {
            generate_origami_prefix(side, m, SwapMode::PostReorder)
        }
        SweepMethod::CdshCs => {
            generate_baseline_prefix(side, BaselineKind::CdSortedHadamard, seed, m)
        }
        SweepMethod::RandomCs => {
            generate_baseline_prefix(side, BaselineKind::RandomPm1, seed, m)
        }
    }
}

fn default_mode(method: SweepMethod, noise: &NoiseSpec) -> MeasureMode {
    match method {
        SweepMethod::Dgi | SweepMethod::Ci => MeasureMode::Complementary01,
        _ => match noise.mode {
            NoiseMode::Poisson => MeasureMode::Complementary01,
            _ => MeasureMode::IdealPm1,
        },
    }
}

fn reconstruct_cell(
    method: SweepMethod,
    basis: &PatternBasis,
    series: &crate::forward::BucketSeries,
    cfg: &SweepConfig,
) -> Result<ReconResult> {
    match method {
        SweepMethod::Opcs | SweepMethod::CdshCs | SweepMethod::RandomCs => {
            let m = series.len();
            // photon-counting buckets scale with photon_scale; undo it so
            // the solver sees pattern-scene inner products
            let b: Vec<f64> = if series.mode == MeasureMode::Complementary01 {
                series.s_b.iter().map(|v| v / series.noise.photon_scale).collect()
            } else {
                series.s_b.clone()
            };
            if let Some(op) = WalshOperator::from_patterns(&basis.patterns()[..m]) {
                reconstruct_tv_operator(&op, &b, &cfg.tv)
            } else {
                let matrix = basis.flatten(m)?;
                reconstruct_tv_operator(&DenseOperator::new(&matrix), &b, &cfg.tv)
            }
        }
        SweepMethod::Dgi => reconstruct_dgi(&basis.patterns()[..series.len()], series),
        SweepMethod::Ci => reconstruct_ci(
            &basis.patterns()[..series.len()],
            series,
            &CiSelection::TopBottomFraction { fraction: cfg.ci_fraction },
            CiPolarity::Positive,
        ),
    }
}

fn run_cell(
    cfg: &SweepConfig,
    scene: &SceneImage,
    method: SweepMethod,
    ratio_idx: usize,
) -> SweepRow {
    let ratio = cfg.ratios[ratio_idx];
    let n = cfg.side * cfg.side;
    let m = ((ratio * n as f64).ceil() as usize).clamp(1, n);
    let started = Instant::now();
    let outcome = (|| -> Result<(ReconResult, metrics::MetricReport)> {
        let seed = cell_seed(cfg.rng_seed, method, ratio_idx);
        let basis = build_basis(method, cfg.side, m, seed)?;
        let mode = cfg.mode_override.unwrap_or_else(|| default_mode(method, &cfg.noise));
        if method == SweepMethod::Dgi && mode == MeasureMode::IdealPm1 {
            return Err(Error::DegenerateReference);
        }
        let noise = NoiseSpec { rng_seed: seed, ..cfg.noise };
        let series = measure_series(&basis, m, scene, &noise, mode)?;
        let recon = reconstruct_cell(method, &basis, &series, cfg)?;
        // correlation methods have arbitrary scale: score the normalized
        // image; TV reconstructions are scored raw
        let scored = match method {
            SweepMethod::Dgi | SweepMethod::Ci => recon.normalized(),
            _ => recon.image.clone(),
        };
        let report = metrics::report(&scored, scene.values(), 1.0)?;
        let stem = cell_stem(method, ratio);
        imagery::save_pgm(&recon.image, &cfg.out_dir.join(format!("{stem}.pgm")), None)?;
        write_recon_csv(&recon, &cfg.out_dir.join(format!("{stem}.csv")))?;
        write_sidecar(cfg, &recon, &report, m, ratio, seed, mode, &cfg.out_dir.join(format!("{stem}.txt")))?;
        Ok((recon, report))
    })();
    let seconds = started.elapsed().as_secs_f64();
    match outcome {
        Ok((_, report)) => SweepRow {
            method,
            ratio,
            m,
            rmse: Some(report.rmse),
            psnr: Some(report.psnr),
            pearson: Some(report.pearson),
            seconds,
            error: None,
        },
        Err(e) => SweepRow {
            method,
            ratio,
            m,
            rmse: None,
            psnr: None,
            pearson: None,
            seconds,
            error: Some(e.to_string()),
        },
    }
}

fn cell_stem(method: SweepMethod, ratio: f64) -> String {
    format!("{}_{:.4}", method.name(), ratio)
}

fn write_recon_csv(recon: &ReconResult, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let (rows, cols) = recon.image.dim();
    for r in 0..rows {
        let line: Vec<String> = (0..cols).map(|c| recon.image[(r, c)].to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn write_sidecar(
    cfg: &SweepConfig,
    recon: &ReconResult,
    report: &metrics::MetricReport,
    m: usize,
    ratio: f64,
    seed: u64,
    mode: MeasureMode,
    path: &Path,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "method={}", recon.method.name())?;
    writeln!(w, "ratio={ratio}")?;
    writeln!(w, "m={m}")?;
    writeln!(w, "side={}", cfg.side)?;
    writeln!(w, "measure_mode={}", mode.name())?;
    writeln!(w, "noise={}", cfg.noise.describe())?;
    writeln!(w, "cell_seed={seed}")?;
    writeln!(w, "base_seed={}", cfg.rng_seed)?;
    writeln!(w, "tv_mu={}", cfg.tv.mu)?;
    writeln!(w, "tv_kind={:?}", cfg.tv.tv_kind)?;
    writeln!(w, "tv_max_iters={}", cfg.tv.max_iters)?;
    writeln!(w, "tv_rel_tol={}", cfg.tv.rel_tol)?;
    writeln!(w, "tv_nonneg={}", cfg.tv.nonneg)?;
    writeln!(w, "iterations={}", recon.iterations)?;
    writeln!(w, "converged={}", recon.converged)?;
    writeln!(w, "elapsed_seconds={:.6}", recon.elapsed)?;
    writeln!(w, "rmse={}", report.rmse)?;
    writeln!(w, "psnr={}", report.psnr)?;
    writeln!(w, "pearson={}", report.pearson)?;
    Ok(())
}

/// Runs every method x ratio cell, writes `sweep.csv` plus one PGM, one
/// raw CSV and one sidecar per cell, and returns the rows in CSV order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir)?;
    let scene = resolve_scene(&cfg.scene, cfg.side)?;

    let cells: Vec<(usize, usize)> = (0..cfg.methods.len())
        .flat_map(|mi| (0..cfg.ratios.len()).map(move |ri| (mi, ri)))
        .collect();
    let mut rows: Vec<((usize, usize), SweepRow)> = cells
        .par_iter()
        .map(|&(mi, ri)| ((mi, ri), run_cell(cfg, &scene, cfg.methods[mi], ri)))
        .collect();
    rows.sort_by_key(|&((mi, ri), _)| (mi, ri));

    let mut w = BufWriter::new(File::create(cfg.out_dir.join("sweep.csv"))?);
    writeln!(w, "method,ratio,m,rmse,psnr,pearson,seconds,error")?;
    for (_, row) in &rows {
        writeln!(w, "{}", row.csv_line(cfg.record_timing))?;
    }
    drop(w);
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

/// DMD bit-plane flag byte: frames are interleaved complementary pairs.
const DMD_PAIR_FLAG: u8 = 1;

/// Writes 2m frames (positive then negative of each pattern, in display
/// order) as bit-packed planes after the standard container header, plus
/// a `<path>.manifest.txt` mapping frame index to (pattern, polarity).
pub fn export_dmd(basis: &PatternBasis, m: usize, path: &Path) -> Result<()> {
    if m == 0 || m > basis.len() {
        return Err(Error::InvalidArgument(format!(
            "frame prefix {m} out of range 1..={}",
            basis.len()
        )));
    }
    let mut w = BufWriter::new(File::create(path)?);
    basis_io::write_header(&mut w, basis.side(), 2 * m, basis.kind(), basis.swap_mode())?;
    w.write_all(&[DMD_PAIR_FLAG])?;
    for pat in &basis.patterns()[..m] {
        let pair = crate::forward::split_complementary(pat);
        let pos = pack_rows(pair.positive().iter().map(|&b| b == 1), basis.side());
        let neg = pack_rows(pair.negative().iter().map(|&b| b == 1), basis.side());
        w.write_all(&pos)?;
        w.write_all(&neg)?;
    }
    drop(w);

    let manifest_path = manifest_path_for(path);
    let mut mw = BufWriter::new(File::create(manifest_path)?);
    writeln!(mw, "frame,pattern,polarity")?;
    for k in 0..m {
        writeln!(mw, "{},{},positive", 2 * k, k + 1)?;
        writeln!(mw, "{},{},negative", 2 * k + 1, k + 1)?;
    }
    Ok(())
}

fn manifest_path_for(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.txt");
    path.with_file_name(name)
}

/// Reads a DMD export back into the +/-1 patterns it encodes, verifying
/// that each frame pair is complementary.
pub fn read_dmd(path: &Path) -> Result<(usize, Vec<Pattern>)> {
    let mut r = BufReader::new(File::open(path)?);
    let header = basis_io::read_header(&mut r)?;
    if header.count % 2 != 0 {
        return Err(Error::Format("DMD frame count must be even".into()));
    }
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    if flag[0] != DMD_PAIR_FLAG {
        return Err(Error::Format(format!("unknown DMD layout flag {}", flag[0])));
    }
    let nbytes = pattern_bytes(header.side);
    let mut buf = vec![0u8; nbytes];
    let mut patterns = Vec::with_capacity(header.count / 2);
    for _ in 0..header.count / 2 {
        r.read_exact(&mut buf)?;
        let pos = unpack_rows(&buf, header.side);
        r.read_exact(&mut buf)?;
        let neg = unpack_rows(&buf, header.side);
        if pos.iter().zip(&neg).any(|(a, b)| a == b) {
            return Err(Error::Format("DMD frame pair is not complementary".into()));
        }
        patterns.push(Pattern::from_values(
            header.side,
            pos.into_iter().map(|b| if b { 1 } else { -1 }).collect(),
        )?);
    }
    Ok((header.side, patterns))
}

/// Parses a flat key=value config file ('#' comments allowed). Values
/// supply defaults for flags the command line leaves unset.
pub fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Format(format!("config line {}: expected key=value", lineno + 1))
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}
