//! Observable probability curves along the optical axis: classical coupled
//! power, N-photon N00N coincidence probability, the distinguishable-pair
//! baseline, two-photon same-position densities, and the half-wavelength
//! classical comparison scenarios.
//!
//! All signals are built from the analytic overlaps A_p(z) of the coupling
//! module:
//!
//!   classical:  P(z) = |A_p - e^{-i theta} A_p'|^2
//!   N00N:       P(z) = 1/2 |A_p^N - e^{-i theta} A_p'^N|^2
//!
//! so the oscillatory part follows cos(N dPhi_G - theta + N phi(z)) with the
//! full complex overlap supplying both the Gouy and curvature phases.

use num_complex::Complex64;
use std::io::Write;

use crate::beamgeom::{effective_radius, lg_radial_field, BeamParams, FiberMode};
use crate::coupling::overlap_p;
use crate::error::{Error, Result};

/// Two-mode N-photon N00N configuration: reference radial index `p`, probe
/// index `p_prime`, constant phase offset `theta`, and the optics shared by
/// both arms.
#[derive(Debug, Clone, Copy)]
pub struct NoonConfig {
    /// Photon number N >= 1. N = 1 reduces to the classical curve shape.
    pub photons: u32,
    pub p: u32,
    pub p_prime: u32,
    pub theta: f64,
    pub beam: BeamParams,
    pub fiber: FiberMode,
}

impl NoonConfig {
    pub fn new(
        photons: u32,
        p: u32,
        p_prime: u32,
        theta: f64,
        beam: BeamParams,
        fiber: FiberMode,
    ) -> Result<Self> {
        if photons < 1 {
            return Err(Error::InvalidConfig("photon number N must be >= 1".into()));
        }
        if p == p_prime {
            return Err(Error::InvalidConfig(format!(
                "mode pair must be distinct, got p = p' = {p}"
            )));
        }
        Ok(Self { photons, p, p_prime, theta, beam, fiber })
    }

    fn overlaps(&self, z: f64) -> (Complex64, Complex64) {
        (
            overlap_p(self.p, &self.beam, &self.fiber, z),
            overlap_p(self.p_prime, &self.beam, &self.fiber, z),
        )
    }
}

/// One sample of a signal curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSample {
    pub z: f64,
    pub value: f64,
}

/// Classical coupled power |A_p(z) - e^{-i theta} A_p'(z)|^2 (unscaled;
/// the fitting module owns the free scale factor). N in the config is
/// ignored.
pub fn classical_signal(cfg: &NoonConfig, z: f64) -> f64 {
    let (a, b) = cfg.overlaps(z);
    (a - Complex64::from_polar(1.0, -cfg.theta) * b).norm_sqr()
}

/// N-photon N00N coincidence probability 1/2 |A_p^N - e^{-i theta} A_p'^N|^2.
pub fn noon_signal(cfg: &NoonConfig, z: f64) -> f64 {
    let (a, b) = cfg.overlaps(z);
    let n = cfg.photons as i32;
    0.5 * (a.powi(n) - Complex64::from_polar(1.0, -cfg.theta) * b.powi(n)).norm_sqr()
}

/// Coincidence probability for a distinguishable (unbunched) photon pair:
/// half the bunched N = 2 curve at every z.
pub fn distinguishable_pair_signal(cfg: &NoonConfig, z: f64) -> Result<f64> {
    if cfg.photons != 2 {
        return Err(Error::InvalidConfig(format!(
            "distinguishable-pair baseline is defined for N = 2, got N = {}",
            cfg.photons
        )));
    }
    Ok(0.5 * noon_signal(cfg, z))
}

/// Unnormalized two-photon same-position density
/// 1/2 |u_p(rho,z)^2 - e^{i theta} u_p'(rho,z)^2|^2.
pub fn twophoton_samepos_density(cfg: &NoonConfig, x: f64, y: f64, z: f64) -> f64 {
    let r = (x * x + y * y).sqrt();
    let up = lg_radial_field(cfg.p, &cfg.beam, r, z);
    let upp = lg_radial_field(cfg.p_prime, &cfg.beam, r, z);
    0.5 * (up * up - Complex64::from_polar(1.0, cfg.theta) * upp * upp).norm_sqr()
}

/// Same-position density sampled on an x-y grid at plane `z`, normalized so
/// the maximum over the grid is 1.
pub struct DensityMap {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// values[ix][iy], max = 1.
    pub values: Vec<Vec<f64>>,
}

pub fn twophoton_samepos_density_map(
    cfg: &NoonConfig,
    half_width: f64,
    samples: usize,
    z: f64,
) -> Result<DensityMap> {
    if samples < 2 {
        return Err(Error::InvalidConfig("density map needs at least 2 samples per axis".into()));
    }
    let xs = crate::numerics::linspace(-half_width, half_width, samples);
    let ys = xs.clone();
    let mut values: Vec<Vec<f64>> = xs
        .iter()
        .map(|&x| ys.iter().map(|&y| twophoton_samepos_density(cfg, x, y, z)).collect())
        .collect();
    let max = values.iter().flat_map(|row| row.iter().copied()).fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return Err(Error::DegenerateData("density is identically zero on the grid".into()));
    }
    for row in &mut values {
        for v in row.iter_mut() {
            *v /= max;
        }
    }
    Ok(DensityMap { xs, ys, values })
}

/// Half-wavelength comparison scenarios for the N = 2 curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DebroglieScenario {
    /// 405 nm classical beam whose radius at the focusing lens matches the
    /// 810 nm beam: halved wavelength at fixed lens aperture focuses to
    /// w0' = w0/2. Mode orders unchanged.
    MatchedLensRadius,
    /// 405 nm classical beam with the Rayleigh length matched to the 810 nm
    /// mode (w0' = w0/sqrt(2), since z_R = pi w0^2/lambda) and the radial
    /// orders doubled (p -> 2p, p' -> 2p').
    MatchedRayleighDoubledOrder,
}

/// A labeled signal curve.
#[derive(Debug, Clone)]
pub struct LabeledCurve {
    pub label: String,
    pub samples: Vec<CurveSample>,
}

/// Compare the two-photon N00N curve with a classical half-wavelength
/// scenario on a common z grid. In both scenarios the fiber mode-field
/// radius is scaled by the waist ratio w0'/w0. Returns the quantum reference
/// curve and the scenario curve.
pub fn debroglie_comparison(
    cfg: &NoonConfig,
    scenario: DebroglieScenario,
    z_grid: &[f64],
) -> Result<(LabeledCurve, LabeledCurve)> {
    if cfg.photons != 2 {
        return Err(Error::InvalidConfig(format!(
            "half-wavelength comparison is defined for N = 2, got N = {}",
            cfg.photons
        )));
    }
    let quantum = LabeledCurve {
        label: "quantum".into(),
        samples: z_grid.iter().map(|&z| CurveSample { z, value: noon_signal(cfg, z) }).collect(),
    };

    let (label, waist_ratio, p, p_prime) = match scenario {
        DebroglieScenario::MatchedLensRadius => ("matched-lens", 0.5, cfg.p, cfg.p_prime),
        DebroglieScenario::MatchedRayleighDoubledOrder => {
            ("matched-rayleigh", std::f64::consts::FRAC_1_SQRT_2, 2 * cfg.p, 2 * cfg.p_prime)
        }
    };
    let beam405 = BeamParams::new(
        0.5 * cfg.beam.wavelength,
        waist_ratio * cfg.beam.waist,
        cfg.beam.focal_position,
    )?;
    let fiber405 = FiberMode::new(waist_ratio * cfg.fiber.mode_field_radius)?;
    let classical405 = NoonConfig::new(1, p, p_prime, cfg.theta, beam405, fiber405)?;
    let comparison = LabeledCurve {
        label: label.into(),
        samples: z_grid
            .iter()
            .map(|&z| CurveSample { z, value: classical_signal(&classical405, z) })
            .collect(),
    };
    Ok((quantum, comparison))
}

/// Mean (non-oscillatory) part of the classical signal,
/// |A_p|^2 + |A_p'|^2. Subtracting it isolates the interference term
/// -2 |A_p||A_p'| cos(dPhi_G - theta + phi).
pub fn classical_mean(cfg: &NoonConfig, z: f64) -> f64 {
    let (a, b) = cfg.overlaps(z);
    a.norm_sqr() + b.norm_sqr()
}

/// Mean part of the N00N signal, (|A_p|^{2N} + |A_p'|^{2N}) / 2.
pub fn noon_mean(cfg: &NoonConfig, z: f64) -> f64 {
    let (a, b) = cfg.overlaps(z);
    let n = 2 * cfg.photons as i32;
    0.5 * (a.norm().powi(n) + b.norm().powi(n))
}

/// Count sign changes of `values` (zeros of the mean-subtracted oscillatory
/// part when fed signal - mean samples). Exact zeros are skipped over.
pub fn count_sign_changes(values: &[f64]) -> usize {
    let mut count = 0;
    let mut last = 0.0_f64;
    for &v in values {
        if v == 0.0 {
            continue;
        }
        if last != 0.0 && v.signum() != last.signum() {
            count += 1;
        }
        last = v;
    }
    count
}

/// Indices of strict interior local extrema of a sampled curve.
pub fn local_extrema_indices(values: &[f64]) -> Vec<usize> {
    let mut idx = Vec::new();
    for i in 1..values.len().saturating_sub(1) {
        let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
        if (b > a && b > c) || (b < a && b < c) {
            idx.push(i);
        }
    }
    idx
}

/// Indices of strict interior local minima of a sampled curve.
pub fn local_minima_indices(values: &[f64]) -> Vec<usize> {
    let mut idx = Vec::new();
    for i in 1..values.len().saturating_sub(1) {
        if values[i] < values[i - 1] && values[i] < values[i + 1] {
            idx.push(i);
        }
    }
    idx
}

/// Write a curve as CSV with header `z_m,value`, one sample per line in
/// ascending z, full-precision floats. `preamble` lines (already including
/// any `#`) are emitted before the header.
pub fn write_curve_csv<W: Write>(
    samples: &[CurveSample],
    preamble: &[String],
    mut w: W,
) -> Result<()> {
    for line in preamble {
        writeln!(w, "{line}")?;
    }
    writeln!(w, "z_m,value")?;
    for s in samples {
        writeln!(w, "{},{}", s.z, s.value)?;
    }
    Ok(())
}

/// Write a density map as CSV with header `x_m,y_m,value`.
pub fn write_density_csv<W: Write>(map: &DensityMap, preamble: &[String], mut w: W) -> Result<()> {
    for line in preamble {
        writeln!(w, "{line}")?;
    }
    writeln!(w, "x_m,y_m,value")?;
    for (ix, &x) in map.xs.iter().enumerate() {
        for (iy, &y) in map.ys.iter().enumerate() {
            writeln!(w, "{},{},{}", x, y, map.values[ix][iy])?;
        }
    }
    Ok(())
}

/// Effective transverse radius of the superposition, for sizing density
/// grids: the larger mode order wins.
pub fn superposition_radius(cfg: &NoonConfig, z: f64) -> f64 {
    let order = (2 * cfg.p + 1).max(2 * cfg.p_prime + 1);
    effective_radius(order, &cfg.beam, z)
}
