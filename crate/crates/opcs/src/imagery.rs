//! Ground-truth scenes: the built-in head phantom and PGM file I/O.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::forward::SceneImage;

const MODIFIED_TABLE: &str = include_str!("../data/shepp_logan_modified.txt");
const STANDARD_TABLE: &str = include_str!("../data/shepp_logan_standard.txt");

/// Supersampling factor for area-averaged ellipse rendering.
const SUPERSAMPLE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub intensity: f64,
    pub semi_a: f64,
    pub semi_b: f64,
    pub center_x: f64,
    pub center_y: f64,
    pub rotation_deg: f64,
}

/// Which built-in intensity table to render.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhantomVariant {
    /// High-contrast intensities (default display variant).
    Modified,
    /// Original low-contrast intensities.
    Standard,
}

/// Renderable ellipse-phantom description.
#[derive(Debug, Clone)]
pub struct PhantomSpec {
    pub side: usize,
    pub ellipses: Vec<Ellipse>,
}

impl PhantomSpec {
    pub fn builtin(side: usize, variant: PhantomVariant) -> Result<Self> {
        let table = match variant {
            PhantomVariant::Modified => MODIFIED_TABLE,
            PhantomVariant::Standard => STANDARD_TABLE,
        };
        Ok(PhantomSpec { side, ellipses: parse_ellipse_table(table)? })
    }

    /// Parses one ellipse per line: six numeric fields
    /// (intensity a b x0 y0 rotation_deg); '#' starts a comment.
    pub fn from_table(side: usize, text: &str) -> Result<Self> {
        Ok(PhantomSpec { side, ellipses: parse_ellipse_table(text)? })
    }

    /// Area-averaged (supersampled) render, clamped to [0, 1].
    /// Pixel (0, 0) is the top-left corner; coordinates span [-1, 1]^2
    /// with y pointing up.
    pub fn render(&self) -> Result<SceneImage> {
        let p = self.side;
        if p < 16 {
            return Err(Error::InvalidDimension(format!(
                "phantom side {p} too small; need >= 16"
            )));
        }
        let ss = SUPERSAMPLE;
        let step = 2.0 / (p * ss) as f64;
        let mut img = Array2::<f64>::zeros((p, p));
        for r in 0..p {
            for c in 0..p {
                let mut acc = 0.0;
                for sr in 0..ss {
                    let y = 1.0 - ((r * ss + sr) as f64 + 0.5) * step;
                    for sc in 0..ss {
                        let x = ((c * ss + sc) as f64 + 0.5) * step - 1.0;
                        acc += self.sample(x, y);
                    }
                }
                img[(r, c)] = (acc / (ss * ss) as f64).clamp(0.0, 1.0);
            }
        }
        SceneImage::new(img)
    }

    fn sample(&self, x: f64, y: f64) -> f64 {
        let mut v = 0.0;
        for e in &self.ellipses {
            let t = e.rotation_deg.to_radians();
            let (sin, cos) = t.sin_cos();
            let dx = x - e.center_x;
            let dy = y - e.center_y;
            let xr = dx * cos + dy * sin;
            let yr = -dx * sin + dy * cos;
            if (xr / e.semi_a).powi(2) + (yr / e.semi_b).powi(2) <= 1.0 {
                v += e.intensity;
            }
        }
        v
    }
}

fn parse_ellipse_table(text: &str) -> Result<Vec<Ellipse>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|_| {
                    Error::Format(format!("ellipse table line {}: bad number '{t}'", lineno + 1))
                })
            })
            .collect::<Result<_>>()?;
        if fields.len() != 6 {
            return Err(Error::Format(format!(
                "ellipse table line {}: expected 6 fields, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        if fields[1] <= 0.0 || fields[2] <= 0.0 {
            return Err(Error::Format(format!(
                "ellipse table line {}: semi-axes must be positive",
                lineno + 1
            )));
        }
        out.push(Ellipse {
            intensity: fields[0],
            semi_a: fields[1],
            semi_b: fields[2],
            center_x: fields[3],
            center_y: fields[4],
            rotation_deg: fields[5],
        });
    }
    if out.is_empty() {
        return Err(Error::Format("ellipse table is empty".into()));
    }
    Ok(out)
}

/// Renders the built-in head phantom (modified variant) at `side`.
pub fn shepp_logan(side: usize) -> Result<SceneImage> {
    shepp_logan_variant(side, PhantomVariant::Modified)
}

pub fn shepp_logan_variant(side: usize, variant: PhantomVariant) -> Result<SceneImage> {
    PhantomSpec::builtin(side, variant)?.render()
}

/// Loads a square power-of-two PGM (binary P5 or ASCII P2), scaled to
/// [0, 1]. Mismatched sizes are an error; nothing is resampled silently.
pub fn load_pgm(path: &Path) -> Result<SceneImage> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    parse_pgm(&bytes)
}

fn parse_pgm(bytes: &[u8]) -> Result<SceneImage> {
    let magic = bytes.get(..2).ok_or_else(|| Error::Format("truncated PGM".into()))?;
    let ascii = match magic {
        b"P5" => false,
        b"P2" => true,
        b"P6" | b"P3" => {
            return Err(Error::Format(
                "PPM (3-channel) input not supported; supply a single-channel PGM".into(),
            ))
        }
        _ => return Err(Error::Format("not a PGM file (bad magic)".into())),
    };
    let mut pos = 2;
    let mut header = [0usize; 3]; // width, height, maxval
    for slot in header.iter_mut() {
        *slot = next_pgm_token(bytes, &mut pos)?;
    }
    let [width, height, maxval] = header;
    if width != height {
        return Err(Error::InvalidDimension(format!(
            "PGM is {width}x{height}; square image required"
        )));
    }
    if width == 0 || !width.is_power_of_two() {
        return Err(Error::InvalidDimension(format!(
            "PGM side {width} is not a power of two"
        )));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("PGM maxval {maxval} out of range")));
    }
    let n = width * height;
    let mut values = Vec::with_capacity(n);
    if ascii {
        for _ in 0..n {
            values.push(next_pgm_token(bytes, &mut pos)? as f64 / maxval as f64);
        }
    } else {
        // single whitespace byte after maxval, then raw samples
        pos += 1;
        let wide = maxval > 255;
        let need = n * if wide { 2 } else { 1 };
        let data = bytes
            .get(pos..pos + need)
            .ok_or_else(|| Error::Format("PGM pixel data truncated".into()))?;
        if wide {
            for ch in data.chunks_exact(2) {
                values.push(u16::from_be_bytes([ch[0], ch[1]]) as f64 / maxval as f64);
            }
        } else {
            values.extend(data.iter().map(|&b| b as f64 / maxval as f64));
        }
    }
    let img = Array2::from_shape_vec((height, width), values)
        .map_err(|e| Error::Format(format!("PGM shape: {e}")))?;
    SceneImage::new(img)
}

fn next_pgm_token(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Format("PGM header: expected a number".into()));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format("PGM header: bad number".into()))
}

/// Writes a 16-bit binary PGM. Values are min-max normalized unless a
/// fixed `(lo, hi)` range is supplied.
pub fn save_pgm(values: &Array2<f64>, path: &Path, range: Option<(f64, f64)>) -> Result<()> {
    let (lo, hi) = match range {
        Some((lo, hi)) if hi > lo => (lo, hi),
        Some(_) => return Err(Error::InvalidArgument("empty PGM range".into())),
        None => {
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                (lo, hi)
            } else {
                (0.0, 1.0) // constant image saves as all zeros
            }
        }
    };
    let (rows, cols) = values.dim();
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{cols} {rows}\n65535\n")?;
    for v in values.iter() {
        let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
        let q = (t * 65535.0).round() as u16;
        w.write_all(&q.to_be_bytes())?;
    }
    Ok(())
}
