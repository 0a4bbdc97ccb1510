//! Measurement-chain simulation: bucket signals for displayed patterns,
//! complementary 0/1 modulation with differential photon counting, and
//! seeded noise models.

use std::io::{BufRead, Write};

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::basis::{Pattern, PatternBasis};
use crate::error::{Error, Result};

/// Non-negative square scene (transmission in [0, 1] by convention).
#[derive(Debug, Clone, PartialEq)]
pub struct SceneImage {
    side: usize,
    values: Array2<f64>,
}

impl SceneImage {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (rows, cols) = values.dim();
        if rows != cols {
            return Err(Error::InvalidDimension(format!(
                "scene is {rows}x{cols}; square required"
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(
                "scene entries must be finite and non-negative".into(),
            ));
        }
        Ok(SceneImage { side: rows, values })
    }

    pub fn from_fn(side: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        SceneImage::new(Array2::from_shape_fn((side, side), |(r, c)| f(r, c)))
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice().expect("scene storage is contiguous")
    }
}

/// Detector noise model. All randomness flows from `rng_seed`, with one
/// child stream per pattern index, so serial and parallel measurement
/// produce identical series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub mode: NoiseMode,
    /// Expected photons per unit bucket value (Poisson mode).
    pub photon_scale: f64,
    /// Additive standard deviation (Gaussian mode).
    pub sigma: f64,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    None,
    Poisson,
    Gaussian,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec { mode: NoiseMode::None, photon_scale: 1.0, sigma: 0.0, rng_seed: 0 }
    }

    pub fn poisson(photon_scale: f64, rng_seed: u64) -> Self {
        NoiseSpec { mode: NoiseMode::Poisson, photon_scale, sigma: 0.0, rng_seed }
    }

    pub fn gaussian(sigma: f64, rng_seed: u64) -> Self {
        NoiseSpec { mode: NoiseMode::Gaussian, photon_scale: 1.0, sigma, rng_seed }
    }

    fn validate(&self, mode: MeasureMode) -> Result<()> {
        match self.mode {
            NoiseMode::Poisson => {
                if !self.photon_scale.is_finite() || self.photon_scale <= 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "photon_scale {} must be positive and finite",
                        self.photon_scale
                    )));
                }
                if mode == MeasureMode::IdealPm1 {
                    return Err(Error::InvalidArgument(
                        "Poisson noise requires COMPLEMENTARY_01 measurement (\
                         +/-1 buckets have no photon rate)"
                            .into(),
                    ));
                }
            }
            NoiseMode::Gaussian => {
                if self.sigma < 0.0 || !self.sigma.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "sigma {} must be non-negative and finite",
                        self.sigma
                    )));
                }
            }
            NoiseMode::None => {}
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        match self.mode {
            NoiseMode::None => "NONE".to_string(),
            NoiseMode::Poisson => format!("POISSON photon_scale={}", self.photon_scale),
            NoiseMode::Gaussian => format!("GAUSSIAN sigma={}", self.sigma),
        }
    }
}

/// How patterns are driven onto the modulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureMode {
    /// Idealized +/-1 modulation: the bucket is the pattern-scene inner
    /// product directly.
    IdealPm1,
    /// Physical 0/1 complementary pairs with a differential bucket.
    Complementary01,
}

impl MeasureMode {
    pub fn name(&self) -> &'static str {
        match self {
            MeasureMode::IdealPm1 => "IDEAL_PM1",
            MeasureMode::Complementary01 => "COMPLEMENTARY_01",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "IDEAL_PM1" | "pm1" => Ok(MeasureMode::IdealPm1),
            "COMPLEMENTARY_01" | "comp" => Ok(MeasureMode::Complementary01),
            _ => Err(Error::Format(format!("unknown measure mode '{s}'"))),
        }
    }
}

/// The 0/1 pair of a +/-1 pattern: positive = (I+1)/2, negative its
/// complement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplementaryPair {
    side: usize,
    positive: Vec<u8>,
    negative: Vec<u8>,
}

impl ComplementaryPair {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn positive(&self) -> &[u8] {
        &self.positive
    }

    pub fn negative(&self) -> &[u8] {
        &self.negative
    }

    /// Reconstructs the source +/-1 pattern (2*positive - 1).
    pub fn to_pattern(&self) -> Result<Pattern> {
        Pattern::from_values(
            self.side,
            self.positive.iter().map(|&b| if b == 1 { 1 } else { -1 }).collect(),
        )
    }
}

/// Splits a +/-1 pattern into its complementary 0/1 pair.
pub fn split_complementary(pattern: &Pattern) -> ComplementaryPair {
    let positive: Vec<u8> = pattern.values().iter().map(|&v| u8::from(v == 1)).collect();
    let negative: Vec<u8> = positive.iter().map(|&b| 1 - b).collect();
    ComplementaryPair { side: pattern.side(), positive, negative }
}

/// Per-pattern scalar measurement records.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketSeries {
    pub mode: MeasureMode,
    /// Object-arm bucket (differential in complementary mode).
    pub s_b: Vec<f64>,
    /// Reference bucket: sum of the displayed pattern's entries.
    pub s_r: Vec<f64>,
    /// Photon counts of the complementary pair; empty in IDEAL_PM1 mode.
    pub raw_pos: Vec<f64>,
    pub raw_neg: Vec<f64>,
    pub noise: NoiseSpec,
    pub basis_id: String,
}

impl BucketSeries {
    pub fn len(&self) -> usize {
        self.s_b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_b.is_empty()
    }

    /// CSV export; header comments record mode, noise, seed and basis.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "# mode={}", self.mode.name())?;
        writeln!(w, "# noise={}", self.noise.describe())?;
        writeln!(w, "# rng_seed={}", self.noise.rng_seed)?;
        writeln!(w, "# basis={}", self.basis_id)?;
        writeln!(w, "index,s_b,s_r,raw_pos,raw_neg")?;
        for k in 0..self.len() {
            let (rp, rn) = if self.raw_pos.is_empty() {
                (String::new(), String::new())
            } else {
                (self.raw_pos[k].to_string(), self.raw_neg[k].to_string())
            };
            writeln!(w, "{},{},{},{},{}", k, self.s_b[k], self.s_r[k], rp, rn)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<BucketSeries> {
        let mut mode = None;
        let mut noise = NoiseSpec::none();
        let mut basis_id = String::new();
        let mut s_b = Vec::new();
        let mut s_r = Vec::new();
        let mut raw_pos = Vec::new();
        let mut raw_neg = Vec::new();
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(v) = rest.strip_prefix("mode=") {
                    mode = Some(MeasureMode::parse(v.trim())?);
                } else if let Some(v) = rest.strip_prefix("rng_seed=") {
                    noise.rng_seed = v
                        .trim()
                        .parse()
                        .map_err(|_| Error::Format(format!("bad rng_seed '{v}'")))?;
                } else if let Some(v) = rest.strip_prefix("noise=") {
                    noise = parse_noise_desc(v.trim(), noise.rng_seed)?;
                } else if let Some(v) = rest.strip_prefix("basis=") {
                    basis_id = v.trim().to_string();
                }
                continue;
            }
            if line.starts_with("index,") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::Format(format!("series row '{line}': expected 5 fields")));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse().map_err(|_| Error::Format(format!("bad number '{s}' in series")))
            };
            s_b.push(parse(fields[1])?);
            s_r.push(parse(fields[2])?);
            if !fields[3].is_empty() {
                raw_pos.push(parse(fields[3])?);
                raw_neg.push(parse(fields[4])?);
            }
        }
        let mode = mode.ok_or_else(|| Error::Format("series file lacks '# mode='".into()))?;
        if !raw_pos.is_empty() && raw_pos.len() != s_b.len() {
            return Err(Error::Format("partial raw photon-count columns".into()));
        }
        Ok(BucketSeries { mode, s_b, s_r, raw_pos, raw_neg, noise, basis_id })
    }
}

fn parse_noise_desc(desc: &str, rng_seed: u64) -> Result<NoiseSpec> {
    let mut parts = desc.split_whitespace();
    let head = parts.next().unwrap_or("");
    let mut spec = match head {
        "NONE" => NoiseSpec::none(),
        "POISSON" => NoiseSpec::poisson(1.0, 0),
        "GAUSSIAN" => NoiseSpec::gaussian(0.0, 0),
        _ => return Err(Error::Format(format!("unknown noise mode '{head}'"))),
    };
    for kv in parts {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("bad noise field '{kv}'")))?;
        let num: f64 = v.parse().map_err(|_| Error::Format(format!("bad number '{v}'")))?;
        match k {
            "photon_scale" => spec.photon_scale = num,
            "sigma" => spec.sigma = num,
            _ => return Err(Error::Format(format!("unknown noise field '{k}'"))),
        }
    }
    spec.rng_seed = rng_seed;
    Ok(spec)
}

/// Sums the scene over the pattern's +1 pixels and over its -1 pixels,
/// accumulated in the same row-major order for both modes, so the
/// noiseless complementary differential reproduces the ideal bucket
/// bit-for-bit.
fn arm_sums(pattern: &Pattern, scene: &SceneImage) -> (f64, f64) {
    let mut pos = 0.0;
    let mut neg = 0.0;
    for (&v, &t) in pattern.values().iter().zip(scene.as_slice()) {
        if v == 1 {
            pos += t;
        } else {
            neg += t;
        }
    }
    (pos, neg)
}

fn poisson_draw(rng: &mut ChaCha8Rng, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    Poisson::new(lambda).expect("lambda validated positive").sample(rng)
}

/// Simulates the bucket series for the first `m` patterns of a basis.
pub fn measure_series(
    basis: &PatternBasis,
    m: usize,
    scene: &SceneImage,
    noise: &NoiseSpec,
    mode: MeasureMode,
) -> Result<BucketSeries> {
    if scene.side() != basis.side() {
        return Err(Error::DimensionMismatch(format!(
            "scene side {} vs basis side {}",
            scene.side(),
            basis.side()
        )));
    }
    if m == 0 || m > basis.len() {
        return Err(Error::InvalidArgument(format!(
            "measurement count {m} out of range 1..={}",
            basis.len()
        )));
    }
    noise.validate(mode)?;

    let mut series = BucketSeries {
        mode,
        s_b: Vec::with_capacity(m),
        s_r: Vec::with_capacity(m),
        raw_pos: Vec::new(),
        raw_neg: Vec::new(),
        noise: *noise,
        basis_id: basis.id_string(),
    };

    for (k, pattern) in basis.patterns()[..m].iter().enumerate() {
        let (pos, neg) = arm_sums(pattern, scene);
        // one deterministic child stream per pattern index
        let mut rng = ChaCha8Rng::seed_from_u64(noise.rng_seed);
        rng.set_stream(k as u64);
        match mode {
            MeasureMode::IdealPm1 => {
                let mut s_b = pos - neg;
                if noise.mode == NoiseMode::Gaussian && noise.sigma > 0.0 {
                    let gauss = Normal::new(0.0, noise.sigma)
                        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
                    s_b += gauss.sample(&mut rng);
                }
                series.s_b.push(s_b);
                series.s_r.push(pattern.sum() as f64);
            }
            MeasureMode::Complementary01 => {
                let lambda_pos = noise.photon_scale * pos;
                let lambda_neg = noise.photon_scale * neg;
                let (raw_pos, raw_neg) = match noise.mode {
                    NoiseMode::None => (lambda_pos, lambda_neg),
                    NoiseMode::Poisson => (
                        poisson_draw(&mut rng, lambda_pos),
                        poisson_draw(&mut rng, lambda_neg),
                    ),
                    NoiseMode::Gaussian => {
                        let gauss = Normal::new(0.0, noise.sigma)
                            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
                        (lambda_pos + gauss.sample(&mut rng), lambda_neg + gauss.sample(&mut rng))
                    }
                };
                let ones = pattern.values().iter().filter(|&&v| v == 1).count();
                series.s_b.push(raw_pos - raw_neg);
                series.s_r.push(ones as f64);
                series.raw_pos.push(raw_pos);
                series.raw_neg.push(raw_neg);
            }
        }
    }
    Ok(series)
}
