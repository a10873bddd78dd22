//! Wavelength grids and sampled spectra.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::invalid;
use crate::math::{exp, ln};
use crate::Result;

/// Lowest and highest wavelength (nm) a grid may contain.
pub const GRID_LIMITS: (f64, f64) = (350.0, 2500.0);

/// Number of samples of the canonical grid.
pub const CANONICAL_LEN: usize = 40;

/// Strictly increasing list of wavelengths in nm. Cloning is cheap.
#[derive(Debug, Clone)]
pub struct WavelengthGrid {
    wavelengths: Arc<[f64]>,
}

impl PartialEq for WavelengthGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.wavelengths, &other.wavelengths) || self.wavelengths == other.wavelengths
    }
}

impl WavelengthGrid {
    pub fn new(wavelengths: Vec<f64>) -> Result<Self> {
        if wavelengths.is_empty() {
            return Err(invalid!("wavelength grid is empty"));
        }
        for (i, &w) in wavelengths.iter().enumerate() {
            if !w.is_finite() || w < GRID_LIMITS.0 || w > GRID_LIMITS.1 {
                return Err(invalid!("wavelength {w} nm at index {i} outside [350, 2500] nm"));
            }
            if i > 0 && w <= wavelengths[i - 1] {
                return Err(invalid!("wavelengths not strictly increasing at index {i}"));
            }
        }
        Ok(WavelengthGrid { wavelengths: wavelengths.into() })
    }

    /// `n` uniform samples from `min` to `max` inclusive.
    pub fn uniform(min: f64, max: f64, n: usize) -> Result<Self> {
        if n == 1 {
            return Self::new(alloc::vec![min]);
        }
        if n == 0 || max <= min {
            return Err(invalid!("bad uniform grid {min}..{max} with {n} samples"));
        }
        let step = (max - min) / (n - 1) as f64;
        let mut w: Vec<f64> = (0..n).map(|i| min + step * i as f64).collect();
        w[n - 1] = max;
        Self::new(w)
    }

    /// 40 uniform samples spanning 360..830 nm.
    pub fn canonical() -> Self {
        Self::uniform(360.0, 830.0, CANONICAL_LEN).expect("canonical grid is valid")
    }

    /// The 680, 550, 440 nm samples used by the three-sample colour shortcut.
    pub fn rgb_samples() -> Self {
        // Stored in increasing order: blue, green, red.
        Self::new(alloc::vec![440.0, 550.0, 680.0]).expect("valid grid")
    }

    pub fn is_canonical(&self) -> bool {
        *self == Self::canonical()
    }

    pub fn len(&self) -> usize {
        self.wavelengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavelengths.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.wavelengths
    }

    pub fn min(&self) -> f64 {
        self.wavelengths[0]
    }

    pub fn max(&self) -> f64 {
        self.wavelengths[self.len() - 1]
    }

    /// Indices of the samples lying inside `[lo, hi]`.
    pub fn band_indices(&self, lo: f64, hi: f64) -> core::ops::Range<usize> {
        let start = self.wavelengths.iter().position(|&w| w >= lo - 1e-9).unwrap_or(self.len());
        let end = self.wavelengths.iter().rposition(|&w| w <= hi + 1e-9).map_or(0, |i| i + 1);
        start..end.max(start)
    }

    /// Trapezoid weights so that `sum(w_i * f_i)` integrates a sampled function.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let w = &self.wavelengths;
        let n = w.len();
        let mut out = alloc::vec![0.0; n];
        for i in 0..n.saturating_sub(1) {
            let h = 0.5 * (w[i + 1] - w[i]);
            out[i] += h;
            out[i + 1] += h;
        }
        out
    }
}

/// What a spectrum measures; decides which value ranges are legal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// W m^-2 sr^-1 nm^-1.
    Radiance,
    /// W m^-2 nm^-1 (also used for the solar spectrum).
    Irradiance,
    /// Dimensionless, in [0, 1].
    Albedo,
    /// Nonnegative rates and depths (scattering coefficients, optical depths).
    Coefficient,
    /// Any real value (basis functions, colour matching functions).
    Unconstrained,
    /// Dimensionless ratio such as a transmittance, in [0, 1].
    Ratio,
}

impl Quantity {
    fn check(self, v: f64) -> bool {
        match self {
            Quantity::Unconstrained => v.is_finite(),
            Quantity::Albedo | Quantity::Ratio => (0.0..=1.0).contains(&v),
            _ => v.is_finite() && v >= 0.0,
        }
    }
}

/// Values sampled on a [`WavelengthGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: WavelengthGrid,
    values: Vec<f64>,
    quantity: Quantity,
}

impl Spectrum {
    pub fn new(grid: WavelengthGrid, values: Vec<f64>, quantity: Quantity) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid!(
                "spectrum has {} values for a grid of {} wavelengths",
                values.len(),
                grid.len()
            ));
        }
        if let Some(i) = values.iter().position(|&v| !quantity.check(v)) {
            return Err(invalid!(
                "value {} at {} nm is out of range for {:?}",
                values[i],
                grid.as_slice()[i],
                quantity
            ));
        }
        Ok(Spectrum { grid, values, quantity })
    }

    pub fn radiance(grid: WavelengthGrid, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, values, Quantity::Radiance)
    }

    pub fn zeros(grid: WavelengthGrid, quantity: Quantity) -> Self {
        let n = grid.len();
        Spectrum { grid, values: alloc::vec![0.0; n], quantity }
    }

    pub fn constant(grid: WavelengthGrid, value: f64, quantity: Quantity) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, alloc::vec![value; n], quantity)
    }

    /// Samples `f(λ)` at every grid wavelength.
    pub fn from_fn(grid: WavelengthGrid, quantity: Quantity, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.as_slice().iter().map(|&w| f(w)).collect();
        Self::new(grid, values, quantity)
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn quantity(&self) -> Quantity {
        self.quantity
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Multiplies every value by `s >= 0`.
    pub fn scaled(&self, s: f64) -> Spectrum {
        Spectrum {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
            quantity: self.quantity,
        }
    }

    /// Value at an arbitrary wavelength by linear interpolation, clamped to
    /// the end samples outside the grid.
    pub fn value_at(&self, wavelength: f64) -> f64 {
        interp_linear(self.grid.as_slice(), &self.values, wavelength, Extrapolation::Clamp)
    }

    /// Linear resampling onto another grid.
    pub fn resampled(&self, grid: &WavelengthGrid, extrapolation: Extrapolation) -> Spectrum {
        if *grid == self.grid {
            return self.clone();
        }
        let values = resample_linear(self.grid.as_slice(), &self.values, grid.as_slice(), extrapolation);
        Spectrum { grid: grid.clone(), values, quantity: self.quantity }
    }

    /// Resampling by linear interpolation of `ln(value)` against `ln(λ)`.
    /// Exact for power laws such as the Rayleigh coefficient; requires
    /// strictly positive values.
    pub fn resampled_log_log(&self, grid: &WavelengthGrid) -> Result<Spectrum> {
        if self.values.iter().any(|&v| v <= 0.0) {
            return Err(invalid!("log-log resampling needs positive values"));
        }
        let lx: Vec<f64> = self.grid.as_slice().iter().map(|&w| ln(w)).collect();
        let ly: Vec<f64> = self.values.iter().map(|&v| ln(v)).collect();
        let values = grid
            .as_slice()
            .iter()
            .map(|&w| exp(interp_linear_extrapolate(&lx, &ly, ln(w))))
            .collect();
        Ok(Spectrum { grid: grid.clone(), values, quantity: self.quantity })
    }

    /// Trapezoid integral over the whole grid.
    pub fn integral(&self) -> f64 {
        trapezoid(self.grid.as_slice(), &self.values)
    }

    /// Trapezoid integral over `[lo, hi]`, with linear interpolation at band
    /// edges falling between samples.
    pub fn band_integral(&self, lo: f64, hi: f64) -> f64 {
        band_integral(self.grid.as_slice(), &self.values, lo, hi)
    }

    /// Sum of the samples inside `[lo, hi]`.
    pub fn band_sum(&self, lo: f64, hi: f64) -> f64 {
        self.values[self.grid.band_indices(lo, hi)].iter().sum()
    }
}

/// Behaviour of linear interpolation outside the sampled range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extrapolation {
    Clamp,
    Zero,
}

/// Linear interpolation of `(xs, ys)` at `x`; `xs` increasing.
pub fn interp_linear(xs: &[f64], ys: &[f64], x: f64, extrapolation: Extrapolation) -> f64 {
    let n = xs.len();
    if n == 1 {
        return ys[0];
    }
    if x <= xs[0] || x >= xs[n - 1] {
        let (edge_x, edge_y) = if x <= xs[0] { (xs[0], ys[0]) } else { (xs[n - 1], ys[n - 1]) };
        return if x == edge_x || extrapolation == Extrapolation::Clamp { edge_y } else { 0.0 };
    }
    let i = upper_index(xs, x);
    let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    ys[i - 1] + t * (ys[i] - ys[i - 1])
}

fn interp_linear_extrapolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if n == 1 {
        return ys[0];
    }
    let i = upper_index(xs, x).clamp(1, n - 1);
    let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    ys[i - 1] + t * (ys[i] - ys[i - 1])
}

/// Smallest index `i` with `xs[i] > x` (at least 1, at most n-1).
fn upper_index(xs: &[f64], x: f64) -> usize {
    xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1)
}

pub fn resample_linear(xs: &[f64], ys: &[f64], new_xs: &[f64], extrapolation: Extrapolation) -> Vec<f64> {
    new_xs.iter().map(|&x| interp_linear(xs, ys, x, extrapolation)).collect()
}

/// Trapezoid rule on a possibly nonuniform grid.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Trapezoid integral of the piecewise-linear function `(xs, ys)` over
/// `[lo, hi]` intersected with the sampled range.
pub fn band_integral(xs: &[f64], ys: &[f64], lo: f64, hi: f64) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let lo = lo.max(xs[0]);
    let hi = hi.min(xs[n - 1]);
    if hi <= lo {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..n - 1 {
        let a = xs[i].max(lo);
        let b = xs[i + 1].min(hi);
        if b <= a {
            continue;
        }
        let fa = interp_linear(xs, ys, a, Extrapolation::Clamp);
        let fb = interp_linear(xs, ys, b, Extrapolation::Clamp);
        total += 0.5 * (b - a) * (fa + fb);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_grid_shape() {
        let g = WavelengthGrid::canonical();
        assert_eq!(g.len(), 40);
        assert_eq!(g.min(), 360.0);
        assert_eq!(g.max(), 830.0);
        assert!(g.is_canonical());
        // the 360..720 band holds 30 samples
        assert_eq!(g.band_indices(360.0, 720.0).len(), 30);
    }

    #[test]
    fn grid_validation() {
        assert!(WavelengthGrid::new(alloc::vec![400.0, 400.0]).is_err());
        assert!(WavelengthGrid::new(alloc::vec![500.0, 400.0]).is_err());
        assert!(WavelengthGrid::new(alloc::vec![300.0]).is_err());
        assert!(WavelengthGrid::new(alloc::vec![]).is_err());
    }

    #[test]
    fn spectrum_validation() {
        let g = WavelengthGrid::uniform(400.0, 500.0, 3).unwrap();
        assert!(Spectrum::radiance(g.clone(), alloc::vec![1.0, -1.0, 0.0]).is_err());
        assert!(Spectrum::new(g.clone(), alloc::vec![0.5, 1.5, 0.0], Quantity::Albedo).is_err());
        assert!(Spectrum::radiance(g, alloc::vec![1.0]).is_err());
    }

    #[test]
    fn band_integral_of_linear_function_is_exact() {
        let g = WavelengthGrid::canonical();
        let s = Spectrum::from_fn(g, Quantity::Unconstrained, |w| 2.0 * w + 1.0).unwrap();
        let exact = |a: f64, b: f64| (b * b + b) - (a * a + a);
        assert!((s.band_integral(365.0, 721.3) - exact(365.0, 721.3)).abs() < 1e-6);
        assert!((s.integral() - exact(360.0, 830.0)).abs() < 1e-6);
    }

    #[test]
    fn log_log_resampling_is_exact_for_power_laws() {
        let g = WavelengthGrid::canonical();
        let s = Spectrum::from_fn(g, Quantity::Coefficient, |w| powf(w, -4.08)).unwrap();
        let r = s.resampled_log_log(&WavelengthGrid::rgb_samples()).unwrap();
        for (&w, &v) in r.grid().as_slice().iter().zip(r.values()) {
            assert!((v / powf(w, -4.08) - 1.0).abs() < 1e-12);
        }
    }

    use crate::math::powf;
}
