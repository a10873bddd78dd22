//! Binary PPM output of fisheye maps. Colour modes are written as encoded
//! sRGB; scalar modes go through a colour ramp. Pixels outside the disc are
//! black.

use std::path::Path;

use clearsky_core::harness::{FisheyeImage, MapMode};

use crate::error::AppResult;
use crate::formats::write_atomic;

/// Ramp from dark blue through green to yellow, sampled at equal steps.
const RAMP: [[f64; 3]; 5] = [[0.267, 0.005, 0.329], [0.230, 0.322, 0.546], [0.128, 0.567, 0.551], [0.369, 0.789, 0.383], [0.993, 0.906, 0.144]];

/// Upper end of the relative error ramp, in percent.
pub const ERROR_RAMP_MAX_PCT: f64 = 50.0;

pub fn ramp(t: f64) -> [f64; 3] {
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) } * (RAMP.len() - 1) as f64;
    let k = (t as usize).min(RAMP.len() - 2);
    let f = t - k as f64;
    std::array::from_fn(|c| RAMP[k][c] + f * (RAMP[k + 1][c] - RAMP[k][c]))
}

/// Maps a scalar pixel to `[0, 1]` for the ramp.
fn scalar_scale(img: &FisheyeImage) -> impl Fn(f64) -> f64 {
    let vals: Vec<f64> = valid_pixels(img).map(|p| p[0]).collect();
    let max = vals.iter().cloned().fold(0.0, f64::max);
    let min_pos = vals.iter().cloned().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
    let mode = img.mode();
    move |v: f64| match mode {
        // luminance spans decades, so a log ramp
        MapMode::AbsLuminance if max > min_pos => ((v.max(min_pos)).ln() - min_pos.ln()) / (max.ln() - min_pos.ln()),
        MapMode::RelativeError => v / ERROR_RAMP_MAX_PCT,
        _ if max > 0.0 => v / max,
        _ => 0.0,
    }
}

fn valid_pixels(img: &FisheyeImage) -> impl Iterator<Item = &[f64]> {
    let n = img.size();
    (0..n * n).filter_map(move |k| img.pixel(k % n, k / n))
}

pub fn encode_ppm(img: &FisheyeImage) -> Vec<u8> {
    let n = img.size();
    let mut out = format!("P6\n{n} {n}\n255\n").into_bytes();
    let scale = scalar_scale(img);
    let byte = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    for j in 0..n {
        for i in 0..n {
            let rgb = match img.pixel(i, j) {
                None => [0.0; 3],
                Some(p) if img.channels() == 3 => [p[0], p[1], p[2]],
                Some(p) => ramp(scale(p[0])),
            };
            out.extend(rgb.map(byte));
        }
    }
    out
}

pub fn save_ppm(path: &Path, img: &FisheyeImage) -> AppResult<()> {
    write_atomic(path, &encode_ppm(img))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clearsky_core::harness::pixel_direction;
    use clearsky_core::Vec3;

    #[test]
    fn ppm_has_header_and_black_corners() {
        let img = FisheyeImage::from_pixels(4, MapMode::RelLuminance, Vec3::ZENITH, |i, j, _| {
            Ok(pixel_direction(4, i as f64 + 0.5, j as f64 + 0.5).map(|_| [100.0, 0.0, 0.0]))
        })
        .unwrap();
        let b = encode_ppm(&img);
        let head = b"P6\n4 4\n255\n";
        assert_eq!(&b[..head.len()], head);
        assert_eq!(b.len(), head.len() + 48);
        assert_eq!(&b[head.len()..head.len() + 3], &[0, 0, 0]);
        let mid = head.len() + 3 * (4 + 1);
        assert_eq!(&b[mid..mid + 3], &ramp(1.0).map(|v| (v * 255.0).round() as u8));
    }

    #[test]
    fn ramp_is_continuous_at_the_stops() {
        for k in 1..RAMP.len() - 1 {
            let t = k as f64 / (RAMP.len() - 1) as f64;
            let (a, b) = (ramp(t - 1e-9), ramp(t + 1e-9));
            assert!((0..3).all(|c| (a[c] - b[c]).abs() < 1e-6));
        }
    }
}
