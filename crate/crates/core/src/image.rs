//! In-memory image grids with values in `[0, 1]`.

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Row-major image: index `(y * width + x) * channels + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    pub width: usize,
    pub height: usize,
    /// 1 (gray) or 3 (RGB).
    pub channels: usize,
    pub pixels: Vec<f64>,
}

impl ImageGrid {
    pub fn new(width: usize, height: usize, channels: usize) -> Result<Self> {
        check_channels(channels)?;
        Ok(ImageGrid {
            width,
            height,
            channels,
            pixels: vec![0.0; width * height * channels],
        })
    }

    pub fn from_pixels(width: usize, height: usize, channels: usize, pixels: Vec<f64>) -> Result<Self> {
        check_channels(channels)?;
        if pixels.len() != width * height * channels {
            return Err(Error::invalid(format!(
                "image: {width}x{height}x{channels} needs {} values, got {}",
                width * height * channels,
                pixels.len()
            )));
        }
        if pixels.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite {
                context: "image pixels".to_string(),
            });
        }
        Ok(ImageGrid {
            width,
            height,
            channels,
            pixels,
        })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.pixels[(y * self.width + x) * self.channels + c]
    }

    pub fn n_pixels(&self) -> usize {
        self.width * self.height
    }

    /// Clamp every value into `[0, 1]`.
    pub fn clamp(&mut self) {
        for p in &mut self.pixels {
            *p = p.clamp(0.0, 1.0);
        }
    }
}

fn check_channels(channels: usize) -> Result<()> {
    if channels == 1 || channels == 3 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "image: channels must be 1 or 3, got {channels}"
        )))
    }
}

/// Deterministic test image with natural-image-like statistics: a seeded
/// sum of plane waves with roughly 1/f amplitudes (so energy spans low to
/// high frequencies) plus a couple of hard disc edges. Channels are
/// decorrelated by per-channel phase jitter.
pub fn synthetic_image(width: usize, height: usize, channels: usize, seed: u64) -> Result<ImageGrid> {
    check_channels(channels)?;
    let mut rng = Rng::new(seed);
    let n_waves = 192;
    struct Wave {
        fx: f64,
        fy: f64,
        amp: f64,
        phase: [f64; 3],
    }
    let max_freq = 0.45 * width.min(height) as f64 / 2.0; // stay under Nyquist
    let waves: Vec<Wave> = (0..n_waves)
        .map(|_| {
            // log-uniform spatial frequency in cycles per unit coordinate
            let f = 0.5 * (max_freq / 0.5).powf(rng.next_f64());
            let theta = rng.uniform(0.0, std::f64::consts::TAU);
            let amp = f.powf(-0.9);
            Wave {
                fx: f * theta.cos(),
                fy: f * theta.sin(),
                amp,
                phase: [
                    rng.uniform(0.0, std::f64::consts::TAU),
                    rng.uniform(0.0, std::f64::consts::TAU),
                    rng.uniform(0.0, std::f64::consts::TAU),
                ],
            }
        })
        .collect();
    let discs: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.uniform(-0.5, 0.5),
                rng.uniform(-0.5, 0.5),
                rng.uniform(0.15, 0.4),
            )
        })
        .collect();

    let mut img = ImageGrid::new(width, height, channels)?;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for y in 0..height {
        let v = -1.0 + 2.0 * (y as f64 + 0.5) / height as f64;
        for x in 0..width {
            let u = -1.0 + 2.0 * (x as f64 + 0.5) / width as f64;
            for c in 0..channels {
                let mut s = 0.0;
                for w in &waves {
                    s += w.amp
                        * (std::f64::consts::TAU * (w.fx * u + w.fy * v) + w.phase[c]).sin();
                }
                for &(cx, cy, r) in &discs {
                    if (u - cx) * (u - cx) + (v - cy) * (v - cy) < r * r {
                        s += 1.2;
                    }
                }
                min = min.min(s);
                max = max.max(s);
                img.pixels[(y * width + x) * channels + c] = s;
            }
        }
    }
    let span = (max - min).max(1e-12);
    for p in &mut img.pixels {
        *p = (*p - min) / span;
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_pixels_validates() {
        assert!(ImageGrid::from_pixels(2, 2, 1, vec![0.0; 4]).is_ok());
        assert!(ImageGrid::from_pixels(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(ImageGrid::from_pixels(2, 2, 2, vec![0.0; 8]).is_err());
        assert!(ImageGrid::from_pixels(1, 1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn synthetic_image_is_deterministic_and_in_range() {
        let a = synthetic_image(32, 32, 3, 7).unwrap();
        let b = synthetic_image(32, 32, 3, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.pixels.iter().all(|&p| (0.0..=1.0).contains(&p)));
        let c = synthetic_image(32, 32, 3, 8).unwrap();
        assert_ne!(a, c);
    }
}
