//! Aerosol parameter estimation: an exhaustive grid search over
//! (alpha, beta, g) minimizing the RMSE against a reference dataset, a
//! bounded simplex refinement, and the zenith luminance turbidity fit.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cell::RefCell;

use crate::dataset::SkyDataset;
use crate::error::invalid;
use crate::harness::compare_dataset;
use crate::math::{cos, sin, to_radians};
use crate::models::SkyBuilder;
use crate::{Error, Result};

/// Angstrom exponent, turbidity coefficient and Mie asymmetry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aerosol {
    pub alpha: f64,
    pub beta: f64,
    pub g: f64,
}

impl Aerosol {
    pub fn new(alpha: f64, beta: f64, g: f64) -> Self {
        Aerosol { alpha, beta, g }
    }

    fn as_array(self) -> [f64; 3] {
        [self.alpha, self.beta, self.g]
    }

    fn from_array(a: [f64; 3]) -> Self {
        Aerosol::new(a[0], a[1], a[2])
    }

    fn key(self) -> [u64; 3] {
        self.as_array().map(f64::to_bits)
    }
}

/// `count` uniform samples over `[min, max]`, both included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn value(&self, i: usize) -> f64 {
        if self.count == 1 {
            return 0.5 * (self.min + self.max);
        }
        self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }
}

/// Search grid, also the box the refinement stays in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamGrid {
    pub alpha: Axis,
    pub beta: Axis,
    pub g: Axis,
}

impl Default for ParamGrid {
    /// 11 x 10 x 5 samples over [0, 2] x [0.02, 0.2] x [0.5, 0.9].
    fn default() -> Self {
        ParamGrid {
            alpha: Axis { min: 0.0, max: 2.0, count: 11 },
            beta: Axis { min: 0.02, max: 0.2, count: 10 },
            g: Axis { min: 0.5, max: 0.9, count: 5 },
        }
    }
}

impl ParamGrid {
    fn axes(&self) -> [Axis; 3] {
        [self.alpha, self.beta, self.g]
    }

    pub fn points(&self) -> usize {
        self.alpha.count * self.beta.count * self.g.count
    }

    fn validate(&self) -> Result<()> {
        for (name, a) in [("alpha", self.alpha), ("beta", self.beta), ("g", self.g)] {
            if a.count < 1 {
                return Err(invalid!("grid axis {name} has no samples"));
            }
            if !(a.min <= a.max) || !a.min.is_finite() || !a.max.is_finite() {
                return Err(invalid!("grid axis {name} has an empty range"));
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: Aerosol) -> bool {
        self.axes().iter().zip(p.as_array()).all(|(a, v)| v >= a.min && v <= a.max)
    }

    fn clamp(&self, p: [f64; 3]) -> [f64; 3] {
        let ax = self.axes();
        [0, 1, 2].map(|i| p[i].clamp(ax[i].min, ax[i].max))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: Aerosol,
    /// mW m^-2 sr^-1 nm^-1.
    pub rmse: f64,
    /// Every evaluated point with its RMSE, in evaluation order.
    pub surface: Vec<(Aerosol, f64)>,
}

/// RMSE of a parameter point, memoized.
pub struct Objective<'a> {
    eval: Box<dyn Fn(Aerosol) -> Result<f64> + 'a>,
    cache: RefCell<BTreeMap<[u64; 3], f64>>,
    evaluations: RefCell<usize>,
}

impl<'a> Objective<'a> {
    pub fn new(eval: impl Fn(Aerosol) -> Result<f64> + 'a) -> Self {
        Objective { eval: Box::new(eval), cache: RefCell::new(BTreeMap::new()), evaluations: RefCell::new(0) }
    }

    /// Pooled RMSE against `reference` of the models produced by `forward`.
    pub fn against(forward: &'a dyn Fn(Aerosol) -> Result<Box<dyn SkyBuilder>>, reference: &'a SkyDataset, band: [f64; 2]) -> Self {
        Objective::new(move |p| Ok(compare_dataset(forward(p)?.as_ref(), reference, band)?.rmse_mw))
    }

    pub fn value(&self, p: Aerosol) -> Result<f64> {
        if let Some(v) = self.cache.borrow().get(&p.key()) {
            return Ok(*v);
        }
        let v = (self.eval)(p)?;
        if !v.is_finite() {
            return Err(Error::Numeric(alloc::format!("non-finite RMSE at {p:?}")));
        }
        *self.evaluations.borrow_mut() += 1;
        self.cache.borrow_mut().insert(p.key(), v);
        Ok(v)
    }

    /// Distinct points evaluated so far.
    pub fn evaluations(&self) -> usize {
        *self.evaluations.borrow()
    }
}

/// Evaluates every grid point; ties go to the lexicographically smallest
/// (alpha, beta, g).
pub fn grid_search(objective: &Objective, grid: &ParamGrid) -> Result<FitResult> {
    grid.validate()?;
    let mut surface = Vec::with_capacity(grid.points());
    for a in grid.alpha.values() {
        for b in grid.beta.values() {
            for g in grid.g.values() {
                let p = Aerosol::new(a, b, g);
                surface.push((p, objective.value(p)?));
            }
        }
    }
    let (params, rmse) = best(&surface);
    Ok(FitResult { params, rmse, surface })
}

fn best(points: &[(Aerosol, f64)]) -> (Aerosol, f64) {
    let mut b = points[0];
    for &(p, v) in &points[1..] {
        let less = v < b.1 || (v == b.1 && p.as_array() < b.0.as_array());
        if less {
            b = (p, v);
        }
    }
    b
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOptions {
    /// Stop once the simplex values differ by less than this RMSE.
    pub tolerance: f64,
    pub max_evaluations: usize,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions { tolerance: 1e-3, max_evaluations: 200 }
    }
}

/// Nelder-Mead simplex descent from `start`, in coordinates scaled to the
/// box, with every trial point projected into the box. The returned RMSE is
/// never above the starting one.
pub fn refine(objective: &Objective, grid: &ParamGrid, start: &FitResult, options: RefineOptions) -> Result<FitResult> {
    grid.validate()?;
    if !grid.contains(start.params) {
        return Err(invalid!("refinement start {:?} outside the parameter box", start.params));
    }
    let ax = grid.axes();
    let span: [f64; 3] = [0, 1, 2].map(|i| (ax[i].max - ax[i].min).max(1e-12));
    let to_p = |u: [f64; 3]| Aerosol::from_array(grid.clamp([0, 1, 2].map(|i| ax[i].min + u[i] * span[i])));
    let to_u = |p: Aerosol| {
        let a = p.as_array();
        [0, 1, 2].map(|i| (a[i] - ax[i].min) / span[i])
    };
    let mut surface: Vec<(Aerosol, f64)> = Vec::new();
    let eval = |u: [f64; 3], surface: &mut Vec<(Aerosol, f64)>| -> Result<([f64; 3], f64)> {
        let p = to_p(u);
        let v = objective.value(p)?;
        surface.push((p, v));
        Ok((to_u(p), v))
    };
    // initial simplex: half a grid step along each axis, inward at bounds
    let u0 = to_u(start.params);
    let mut simplex: Vec<([f64; 3], f64)> = alloc::vec![(u0, start.rmse)];
    for i in 0..3 {
        let step = if ax[i].count > 1 { 0.5 / (ax[i].count - 1) as f64 } else { 0.0 };
        if step == 0.0 {
            continue;
        }
        let mut u = u0;
        u[i] = if u[i] + step <= 1.0 { u[i] + step } else { u[i] - step };
        simplex.push(eval(u, &mut surface)?);
    }
    let n = simplex.len() - 1;
    if n == 0 {
        return Ok(FitResult { params: start.params, rmse: start.rmse, surface });
    }
    let order = |s: &mut Vec<([f64; 3], f64)>| s.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite"));
    while surface.len() < options.max_evaluations {
        order(&mut simplex);
        if simplex[n].1 - simplex[0].1 < options.tolerance {
            break;
        }
        let mut c = [0.0; 3];
        for s in &simplex[..n] {
            for k in 0..3 {
                c[k] += s.0[k] / n as f64;
            }
        }
        let worst = simplex[n];
        let along = |t: f64| [0, 1, 2].map(|k| c[k] + t * (worst.0[k] - c[k]));
        let r = eval(along(-1.0), &mut surface)?;
        if r.1 < simplex[0].1 {
            let e = eval(along(-2.0), &mut surface)?;
            simplex[n] = if e.1 < r.1 { e } else { r };
        } else if r.1 < simplex[n - 1].1 {
            simplex[n] = r;
        } else {
            let k = if r.1 < worst.1 { eval(along(-0.5), &mut surface)? } else { eval(along(0.5), &mut surface)? };
            if k.1 < worst.1.min(r.1) {
                simplex[n] = k;
            } else {
                // shrink towards the best vertex
                let b = simplex[0].0;
                for j in 1..=n {
                    if surface.len() >= options.max_evaluations {
                        break;
                    }
                    let u = [0, 1, 2].map(|q| b[q] + 0.5 * (simplex[j].0[q] - b[q]));
                    simplex[j] = eval(u, &mut surface)?;
                }
            }
        }
    }
    order(&mut simplex);
    let (params, rmse) = if simplex[0].1 < start.rmse { (to_p(simplex[0].0), simplex[0].1) } else { (start.params, start.rmse) };
    Ok(FitResult { params, rmse, surface })
}

/// Least-squares turbidity `T` of zenith luminances (sun zenith in degrees,
/// luminance in kcd m^-2) under `L_z = (1.376 T - 1.81) cot θ + 0.38`.
pub fn fit_turbidity(zenith_luminances: &[(f64, f64)]) -> Result<f64> {
    if zenith_luminances.is_empty() {
        return Err(invalid!("turbidity fit needs at least one (sun zenith, luminance) pair"));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for &(theta, lz) in zenith_luminances {
        if !(theta > 0.0 && theta <= 90.0) || !lz.is_finite() {
            return Err(invalid!("sun zenith {theta} outside (0, 90] degrees or non-finite luminance"));
        }
        let t = to_radians(theta);
        let c = if theta == 90.0 { 0.0 } else { cos(t) / sin(t) };
        // 1.376 T c = L_z - 0.38 + 1.81 c
        num += c * (lz - 0.38 + 1.81 * c);
        den += 1.376 * c * c;
    }
    if den < 1e-12 {
        return Err(Error::IllConditioned(alloc::string::String::from("every sun zenith is 90 degrees, the relation has no slope")));
    }
    Ok(num / den)
}

/// Zenith luminance in kcd m^-2 predicted for turbidity `t`.
pub fn zenith_luminance(t: f64, sun_zenith_deg: f64) -> f64 {
    let th = to_radians(sun_zenith_deg);
    (1.376 * t - 1.81) * cos(th) / sin(th) + 0.38
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bowl(truth: Aerosol) -> impl Fn(Aerosol) -> Result<f64> {
        move |p| {
            let d = [(p.alpha - truth.alpha) / 2.0, (p.beta - truth.beta) / 0.18, (p.g - truth.g) / 0.4];
            Ok(20.0 * crate::math::sqrt(d[0] * d[0] + 4.0 * d[1] * d[1] + 2.0 * d[2] * d[2] + 0.3 * d[0] * d[1]))
        }
    }

    #[test]
    fn default_grid_has_550_points() {
        let grid = ParamGrid::default();
        assert_eq!(grid.points(), 550);
        let obj = Objective::new(bowl(Aerosol::new(0.8, 0.04, 0.7)));
        let fit = grid_search(&obj, &grid).unwrap();
        assert_eq!(fit.surface.len(), 550);
        assert_eq!(obj.evaluations(), 550);
        let p = fit.params;
        assert!((p.alpha - 0.8).abs() < 1e-12 && (p.beta - 0.04).abs() < 1e-12 && (p.g - 0.7).abs() < 1e-12);
        assert!(fit.rmse < 1e-9);
    }

    #[test]
    fn refinement_finds_off_grid_truth_inside_the_box() {
        let truth = Aerosol::new(0.75, 0.045, 0.72);
        let grid = ParamGrid::default();
        let obj = Objective::new(bowl(truth));
        let start = grid_search(&obj, &grid).unwrap();
        let before = obj.evaluations();
        let fit = refine(&obj, &grid, &start, RefineOptions::default()).unwrap();
        assert!(obj.evaluations() - before <= 200);
        assert!(fit.rmse <= start.rmse);
        assert!(fit.surface.iter().all(|(p, _)| grid.contains(*p)));
        let p = fit.params;
        assert!((p.alpha - truth.alpha).abs() < 0.05 && (p.beta - truth.beta).abs() < 0.003 && (p.g - truth.g).abs() < 0.02, "{p:?}");
    }

    #[test]
    fn ties_go_to_the_smallest_triple() {
        let obj = Objective::new(|_| Ok(1.0));
        let fit = grid_search(&obj, &ParamGrid::default()).unwrap();
        assert_eq!(fit.params, Aerosol::new(0.0, 0.02, 0.5));
    }

    #[test]
    fn degenerate_grid_is_rejected() {
        let grid = ParamGrid { g: Axis { min: 0.5, max: 0.9, count: 0 }, ..Default::default() };
        assert!(grid_search(&Objective::new(|_| Ok(0.0)), &grid).is_err());
    }

    #[test]
    fn turbidity_round_trip() {
        let data: Vec<(f64, f64)> = [25.0, 30.0, 38.0, 47.0, 60.0].iter().map(|&z| (z, zenith_luminance(2.53, z))).collect();
        assert!((fit_turbidity(&data).unwrap() - 2.53).abs() < 1e-6);
        let single = fit_turbidity(&[(45.0, 2.051)]).unwrap();
        assert!((single - ((2.051 - 0.38) / 1.0 + 1.81) / 1.376).abs() < 1e-12);
        assert!((single - 2.53).abs() < 1e-3);
        assert!(matches!(fit_turbidity(&[(90.0, 0.38), (90.0, 0.5)]), Err(Error::IllConditioned(_))));
    }

    proptest! {
        #[test]
        fn duplicated_rows_leave_t_unchanged(t in 1.5f64..6.0, noise in proptest::collection::vec(-0.2f64..0.2, 4)) {
            let zs = [20.0, 35.0, 50.0, 65.0];
            let data: Vec<(f64, f64)> = zs.iter().zip(&noise).map(|(&z, n)| (z, zenith_luminance(t, z) + n)).collect();
            let mut doubled = data.clone();
            doubled.extend(data.iter().copied());
            prop_assert!((fit_turbidity(&data).unwrap() - fit_turbidity(&doubled).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn refinement_never_leaves_the_box(a in 0.0f64..2.0, b in 0.02f64..0.2, g in 0.5f64..0.9) {
            let grid = ParamGrid { alpha: Axis { min: 0.0, max: 2.0, count: 3 }, beta: Axis { min: 0.02, max: 0.2, count: 3 }, g: Axis { min: 0.5, max: 0.9, count: 3 } };
            // truth outside the box pulls the simplex against the walls
            let obj = Objective::new(bowl(Aerosol::new(a * 2.0 - 1.0, b * 2.0 - 0.1, g + 0.3)));
            let start = grid_search(&obj, &grid).unwrap();
            let fit = refine(&obj, &grid, &start, RefineOptions::default()).unwrap();
            prop_assert!(fit.surface.iter().all(|(p, _)| grid.contains(*p)));
            prop_assert!(fit.rmse <= start.rmse);
        }
    }
}
