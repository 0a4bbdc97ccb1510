//! Image-quality measures: RMSE, PSNR, Pearson correlation.

use ndarray::Array2;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct MetricReport {
    pub rmse: f64,
    pub psnr: f64,
    pub pearson: f64,
}

fn check_shapes(a: &Array2<f64>, b: &Array2<f64>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "image shapes {:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// Square root of the mean squared pixelwise difference.
pub fn rmse(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    check_shapes(a, b)?;
    let n = a.len() as f64;
    let ss: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((ss / n).sqrt())
}

/// Pearson correlation over flattened pixels. Errors on constant input.
pub fn pearson(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    check_shapes(a, b)?;
    let n = a.len() as f64;
    let ma = a.sum() / n;
    let mb = b.sum() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let dx = x - ma;
        let dy = y - mb;
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va == 0.0 || vb == 0.0 {
        return Err(Error::ConstantImage);
    }
    Ok(cov / (va.sqrt() * vb.sqrt()))
}

/// 20 log10(peak / rmse); +inf when the images are identical.
pub fn psnr(a: &Array2<f64>, b: &Array2<f64>, peak: f64) -> Result<f64> {
    let e = rmse(a, b)?;
    if e == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * (peak / e).log10())
}

pub fn report(recon: &Array2<f64>, truth: &Array2<f64>, peak: f64) -> Result<MetricReport> {
    Ok(MetricReport {
        rmse: rmse(recon, truth)?,
        psnr: psnr(recon, truth, peak)?,
        pearson: pearson(recon, truth)?,
    })
}
