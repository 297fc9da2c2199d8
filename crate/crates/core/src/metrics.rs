//! Image- and field-quality metrics: PSNR, SSIM and sign-IoU.

use crate::error::{Error, Result};
use crate::image::ImageGrid;

/// A named metric value.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricValue {
    pub name: String,
    pub value: f64,
    pub higher_better: bool,
}

impl MetricValue {
    pub fn new(name: &str, value: f64, higher_better: bool) -> Self {
        MetricValue {
            name: name.to_string(),
            value,
            higher_better,
        }
    }
}

fn check_dims(op: &'static str, a: &ImageGrid, b: &ImageGrid) -> Result<()> {
    if a.width != b.width || a.height != b.height || a.channels != b.channels {
        return Err(Error::invalid(format!(
            "{op}: image dims differ ({}x{}x{} vs {}x{}x{})",
            a.width, a.height, a.channels, b.width, b.height, b.channels
        )));
    }
    Ok(())
}

/// Peak signal-to-noise ratio in dB; `+inf` for identical images.
pub fn psnr(a: &ImageGrid, b: &ImageGrid, peak: f64) -> Result<f64> {
    check_dims("psnr", a, b)?;
    let mut mse = 0.0;
    for (x, y) in a.pixels.iter().zip(&b.pixels) {
        let d = x - y;
        mse += d * d;
    }
    mse /= a.pixels.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

fn gaussian_window() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as f64;
    let mut w: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| {
            let d = i as f64 - half;
            (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
        })
        .collect();
    let sum: f64 = w.iter().sum();
    for x in &mut w {
        *x /= sum;
    }
    w
}

fn to_luma(img: &ImageGrid) -> Vec<f64> {
    if img.channels == 1 {
        return img.pixels.clone();
    }
    // Rec. 601 luma weights
    img.pixels
        .chunks_exact(3)
        .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
        .collect()
}

/// Separable valid-mode convolution with a 1D kernel applied along x then y.
fn filter_valid(src: &[f64], w: usize, h: usize, kernel: &[f64]) -> (Vec<f64>, usize, usize) {
    let k = kernel.len();
    let ow = w - k + 1;
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            let mut s = 0.0;
            for (i, &kv) in kernel.iter().enumerate() {
                s += kv * src[y * w + x + i];
            }
            tmp[y * ow + x] = s;
        }
    }
    let oh = h - k + 1;
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            let mut s = 0.0;
            for (i, &kv) in kernel.iter().enumerate() {
                s += kv * tmp[(y + i) * ow + x];
            }
            out[y * ow + x] = s;
        }
    }
    (out, ow, oh)
}

/// Mean structural similarity with the standard 11x11 Gaussian window
/// (sigma 1.5, K1 = 0.01, K2 = 0.03, peak 1). RGB input is converted to
/// luma first. Errors if the image is smaller than the window.
pub fn ssim(a: &ImageGrid, b: &ImageGrid) -> Result<f64> {
    check_dims("ssim", a, b)?;
    if a.width < SSIM_WINDOW || a.height < SSIM_WINDOW {
        return Err(Error::invalid(format!(
            "ssim: image {}x{} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window",
            a.width, a.height
        )));
    }
    let (w, h) = (a.width, a.height);
    let la = to_luma(a);
    let lb = to_luma(b);
    let kernel = gaussian_window();

    let (mu_a, ow, oh) = filter_valid(&la, w, h, &kernel);
    let (mu_b, _, _) = filter_valid(&lb, w, h, &kernel);
    let sq_a: Vec<f64> = la.iter().map(|x| x * x).collect();
    let sq_b: Vec<f64> = lb.iter().map(|x| x * x).collect();
    let ab: Vec<f64> = la.iter().zip(&lb).map(|(x, y)| x * y).collect();
    let (e_aa, _, _) = filter_valid(&sq_a, w, h, &kernel);
    let (e_bb, _, _) = filter_valid(&sq_b, w, h, &kernel);
    let (e_ab, _, _) = filter_valid(&ab, w, h, &kernel);

    let c1 = (SSIM_K1 * 1.0) * (SSIM_K1 * 1.0);
    let c2 = (SSIM_K2 * 1.0) * (SSIM_K2 * 1.0);
    let mut total = 0.0;
    for i in 0..ow * oh {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = e_aa[i] - ma * ma;
        let vb = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        let s = ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
            / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        total += s;
    }
    Ok(total / (ow * oh) as f64)
}

/// Intersection-over-union of the inside sets (`value < 0`) of two scalar
/// fields over the same voxel enumeration. An empty union counts as 1.
pub fn sign_iou(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::invalid(format!(
            "sign_iou: field sizes differ ({} vs {})",
            pred.len(),
            truth.len()
        )));
    }
    let mut intersection = 0usize;
    let mut union = 0usize;
    for (p, t) in pred.iter().zip(truth) {
        let (ip, it) = (*p < 0.0, *t < 0.0);
        if ip && it {
            intersection += 1;
        }
        if ip || it {
            union += 1;
        }
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(intersection as f64 / union as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::synthetic_image;
    use crate::rng::Rng;

    #[test]
    fn psnr_identical_is_infinite() {
        let img = synthetic_image(16, 16, 3, 1).unwrap();
        assert_eq!(psnr(&img, &img, 1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn psnr_uniform_offset_closed_form() {
        let a = ImageGrid::new(8, 8, 1).unwrap();
        let mut b = a.clone();
        for p in &mut b.pixels {
            *p += 1.0 / 255.0;
        }
        let value = psnr(&a, &b, 1.0).unwrap();
        assert!((value - 48.130803608679103).abs() < 1e-10);
    }

    #[test]
    fn psnr_matches_direct_formula_and_is_symmetric() {
        let a = synthetic_image(12, 9, 1, 2).unwrap();
        let b = synthetic_image(12, 9, 1, 3).unwrap();
        let mse: f64 = a
            .pixels
            .iter()
            .zip(&b.pixels)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            / a.pixels.len() as f64;
        let oracle = 10.0 * (1.0 / mse).log10();
        assert!((psnr(&a, &b, 1.0).unwrap() - oracle).abs() < 1e-10);
        assert_eq!(psnr(&a, &b, 1.0).unwrap(), psnr(&b, &a, 1.0).unwrap());
    }

    #[test]
    fn psnr_rejects_dim_mismatch() {
        let a = ImageGrid::new(4, 4, 1).unwrap();
        let b = ImageGrid::new(4, 5, 1).unwrap();
        assert!(psnr(&a, &b, 1.0).is_err());
    }

    #[test]
    fn ssim_identical_is_one() {
        let img = synthetic_image(24, 24, 3, 4).unwrap();
        assert!((ssim(&img, &img).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ssim_of_negative_image_is_low() {
        // keep pixels away from mid-gray so the negative differs everywhere
        let mut rng = Rng::new(5);
        let mut img = ImageGrid::new(24, 24, 1).unwrap();
        for p in &mut img.pixels {
            let u = rng.next_f64();
            *p = if u < 0.5 { 0.4 * u } else { 0.6 + 0.4 * (u - 0.5) };
        }
        let mut neg = img.clone();
        for p in &mut neg.pixels {
            *p = 1.0 - *p;
        }
        assert!(ssim(&img, &neg).unwrap() < 0.5);
    }

    #[test]
    fn ssim_constant_offset_is_between_zero_and_one() {
        let mut a = ImageGrid::new(16, 16, 1).unwrap();
        for p in &mut a.pixels {
            *p = 0.4;
        }
        let mut b = a.clone();
        for p in &mut b.pixels {
            *p = 0.5;
        }
        let v = ssim(&a, &b).unwrap();
        assert!(v > 0.0 && v < 1.0, "{v}");
    }

    #[test]
    fn ssim_rejects_small_images() {
        let a = ImageGrid::new(8, 8, 1).unwrap();
        assert!(ssim(&a, &a).is_err());
    }

    #[test]
    fn sign_iou_cases() {
        assert_eq!(sign_iou(&[-1.0, 1.0], &[-1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(sign_iou(&[-1.0, 1.0], &[1.0, -1.0]).unwrap(), 0.0);
        assert_eq!(sign_iou(&[1.0, 1.0], &[1.0, 2.0]).unwrap(), 1.0); // empty union
        assert!(sign_iou(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn sign_iou_counts_match_brute_force_on_cubes() {
        // two half-overlapping cubes on an 8x8x8 grid
        let n = 8;
        let mut a = Vec::new();
        let mut b = Vec::new();
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    a.push(if x < 4 && y < 4 && z < 4 { -1.0 } else { 1.0 });
                    b.push(if (2..6).contains(&x) && y < 4 && z < 4 { -1.0 } else { 1.0 });
                }
            }
        }
        // brute-force voxel count: intersection 2*4*4, union 6*4*4
        let expected = (2.0 * 16.0) / (6.0 * 16.0);
        assert!((sign_iou(&a, &b).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn sign_iou_ignores_positive_rescaling() {
        let mut rng = Rng::new(6);
        let a: Vec<f64> = (0..100).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let b: Vec<f64> = (0..100).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let base = sign_iou(&a, &b).unwrap();
        let a2: Vec<f64> = a.iter().map(|x| x * 17.0).collect();
        let b2: Vec<f64> = b.iter().map(|x| x * 0.003).collect();
        assert_eq!(base, sign_iou(&a2, &b2).unwrap());
    }
}
