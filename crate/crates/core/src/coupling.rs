//! Fiber-coupling overlap amplitudes A_p(z) between a radial LG mode and the
//! Gaussian fiber eigenmode: a closed form and an independent numerical
//! quadrature used as its oracle.
//!
//! Closed form (radial modes, ell = 0):
//!
//!   A_p(z) = B(z) sum_{j=0}^{p} C(p,j) (-1)^j / C(z)^(j+1)
//!   B(z)   = w(z)/w_f exp(i (2p+1) atan((z-z0)/z_R))
//!   C(z)   = w(z)^2/2 (1/w_f^2 + 1/w(z)^2 + i k /(2 R(z)))
//!
//! Re C = w^2/(2 w_f^2) + 1/2 > 1/2 everywhere, which is what makes the
//! underlying integral identity int_0^inf x^n exp(-a x) dx = n!/a^(n+1)
//! applicable for every z.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::beamgeom::{
    beam_radius, fiber_field, inverse_curvature, lg_radial_field, BeamParams, FiberMode, LGModeSpec,
};
use crate::error::{Error, Result};
use crate::numerics::{adaptive_simpson_complex_panels, kahan_sum_complex};

/// Absolute error target for the quadrature oracle.
const QUAD_TOL: f64 = 1e-10;

/// A radial mode, a fiber eigenmode, and the plane where they are overlapped.
#[derive(Debug, Clone, Copy)]
pub struct OverlapConfig {
    pub mode: LGModeSpec,
    pub fiber: FiberMode,
    pub z: f64,
}

impl OverlapConfig {
    pub fn new(mode: LGModeSpec, fiber: FiberMode, z: f64) -> Result<Self> {
        if mode.ell != 0 {
            return Err(Error::NonRadialMode(mode.ell));
        }
        Ok(Self { mode, fiber, z })
    }
}

/// Closed-form overlap A_p(z).
pub fn overlap_analytic(cfg: &OverlapConfig) -> Result<Complex64> {
    if cfg.mode.ell != 0 {
        return Err(Error::NonRadialMode(cfg.mode.ell));
    }
    Ok(overlap_p(cfg.mode.p, &cfg.mode.beam, &cfg.fiber, cfg.z))
}

/// Closed-form overlap without the config wrapper; hot path for z-sweeps.
pub fn overlap_p(p: u32, beam: &BeamParams, fiber: &FiberMode, z: f64) -> Complex64 {
    let w = beam_radius(beam, z);
    let wf = fiber.mode_field_radius;
    let psi = beam.reduced_z(z).atan();

    let b = Complex64::from_polar(w / wf, (2 * p + 1) as f64 * psi);
    let c = Complex64::new(
        0.5 * w * w * (1.0 / (wf * wf) + 1.0 / (w * w)),
        0.25 * w * w * beam.wavenumber() * inverse_curvature(beam, z),
    );
    debug_assert!(c.re > 0.0);

    // term_j = C(p,j) (-1)^j / C^(j+1); compensated because the series
    // alternates and cancellation grows with p.
    let inv_c = c.inv();
    let mut term = inv_c;
    let terms = (0..=p).map(|j| {
        let current = term;
        if j < p {
            term *= -inv_c * ((p - j) as f64 / (j + 1) as f64);
        }
        current
    });
    b * kahan_sum_complex(terms)
}

/// Quadrature overlap 2 pi int_0^inf u*_{0p}(r,z) u_SMF(r) r dr, evaluated
/// with the field evaluators and adaptive Simpson integration. Independent
/// of the closed form.
pub fn overlap_numeric(cfg: &OverlapConfig) -> Result<Complex64> {
    if cfg.mode.ell != 0 {
        return Err(Error::NonRadialMode(cfg.mode.ell));
    }
    let beam = cfg.mode.beam;
    let p = cfg.mode.p;
    let w = beam_radius(&beam, cfg.z);
    let wf = cfg.fiber.mode_field_radius;
    // The integrand decays like exp(-r^2/l^2) with 1/l^2 = 1/w^2 + 1/w_f^2;
    // 8 combined scales (grown by the mode order) put the tail below 1e-25.
    let scale = 1.0 / (1.0 / (w * w) + 1.0 / (wf * wf)).sqrt();
    let rmax = 8.0 * scale * ((2 * p + 1) as f64).sqrt();
    let fiber = cfg.fiber;
    let z = cfg.z;
    adaptive_simpson_complex_panels(
        &|r| {
            let u = lg_radial_field(p, &beam, r, z);
            2.0 * PI * u.conj() * fiber_field(&fiber, r) * r
        },
        0.0,
        rmax,
        8,
        QUAD_TOL,
    )
}
