//! Analytic mode geometry: Gaussian beam parameters, Laguerre/Hermite
//! polynomials, radial Laguerre-Gaussian fields, the Gouy phase, and the
//! Gaussian fiber eigenmode.
//!
//! All lengths are SI meters. Curvature is handled as the inverse radius
//! 1/R(z), which is finite everywhere (zero at the focus), so no special
//! casing of the focal plane is needed anywhere downstream.
//!
//! Sign convention: a mode at distance z from its focus carries the phase
//! exp(i [r^2 k / (2 R) - S atan((z-z0)/z_R)]) with S the mode order. The
//! global plane-wave factor exp(-i k z) is tracked separately by callers; it
//! cancels in every observable computed in this crate.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Above this radial index the explicit binomial sum for the Laguerre
/// polynomial starts losing accuracy, so the three-term recurrence is used.
const LAGUERRE_SUM_MAX_P: u32 = 20;

/// Monochromatic Gaussian-beam geometry: wavelength, focal waist and focal
/// position along the optical axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamParams {
    /// Vacuum wavelength (m, > 0).
    pub wavelength: f64,
    /// Beam waist at the focus (m, > 0).
    pub waist: f64,
    /// Position of the focus along the optical axis (m).
    pub focal_position: f64,
}

impl BeamParams {
    pub fn new(wavelength: f64, waist: f64, focal_position: f64) -> Result<Self> {
        if !wavelength.is_finite() || wavelength <= 0.0 {
            return Err(Error::InvalidBeam(format!("wavelength must be > 0, got {wavelength}")));
        }
        if !waist.is_finite() || waist <= 0.0 {
            return Err(Error::InvalidBeam(format!("waist must be > 0, got {waist}")));
        }
        if !focal_position.is_finite() {
            return Err(Error::InvalidBeam(format!(
                "focal position must be finite, got {focal_position}"
            )));
        }
        Ok(Self { wavelength, waist, focal_position })
    }

    /// Wavenumber k = 2 pi / lambda (1/m).
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Rayleigh length z_R = k w0^2 / 2 (m).
    pub fn rayleigh_length(&self) -> f64 {
        0.5 * self.wavenumber() * self.waist * self.waist
    }

    /// Dimensionless axial coordinate (z - z0)/z_R.
    pub fn reduced_z(&self, z: f64) -> f64 {
        (z - self.focal_position) / self.rayleigh_length()
    }
}

/// Laguerre-Gaussian mode indices tied to a beam geometry. `ell` is the
/// azimuthal (OAM) index, `p` the radial index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LGModeSpec {
    pub ell: i32,
    pub p: u32,
    pub beam: BeamParams,
}

impl LGModeSpec {
    pub fn new(ell: i32, p: u32, beam: BeamParams) -> Self {
        Self { ell, p, beam }
    }

    /// Purely radial mode (ell = 0), the only kind whose field this crate
    /// evaluates.
    pub fn radial(p: u32, beam: BeamParams) -> Self {
        Self { ell: 0, p, beam }
    }

    /// Mode order S = 2p + |ell| + 1 (>= 1), which sets the Gouy-phase speed.
    pub fn order(&self) -> u32 {
        2 * self.p + self.ell.unsigned_abs() + 1
    }
}

/// Hermite-Gaussian mode indices. Used by the Fisher-information closed
/// forms, where the mode order convention is S = m + n (no +1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HGModeSpec {
    pub m: u32,
    pub n: u32,
    pub beam: BeamParams,
}

impl HGModeSpec {
    pub fn new(m: u32, n: u32, beam: BeamParams) -> Self {
        Self { m, n, beam }
    }

    /// S = m + n.
    pub fn order(&self) -> u32 {
        self.m + self.n
    }

    /// S2 = m^2 + n^2.
    pub fn order_sq(&self) -> u64 {
        (self.m as u64).pow(2) + (self.n as u64).pow(2)
    }
}

/// Gaussian eigenmode of a single-mode fiber, parameterized by its
/// mode-field radius w_f (half the mode-field diameter).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberMode {
    /// Mode-field radius w_f (m, > 0).
    pub mode_field_radius: f64,
}

impl FiberMode {
    pub fn new(mode_field_radius: f64) -> Result<Self> {
        if !mode_field_radius.is_finite() || mode_field_radius <= 0.0 {
            return Err(Error::InvalidMode(format!(
                "fiber mode-field radius must be > 0, got {mode_field_radius}"
            )));
        }
        Ok(Self { mode_field_radius })
    }

    /// Construct from the mode-field diameter (the quantity vendors quote).
    pub fn from_mode_field_diameter(mfd: f64) -> Result<Self> {
        Self::new(0.5 * mfd)
    }
}

/// Laguerre polynomial L_p(x) = sum_{j=0}^{p} C(p,j) (-1)^j / j! x^j.
///
/// The explicit binomial sum is used up to p = 20 and the three-term
/// recurrence (p+1) L_{p+1} = (2p+1-x) L_p - p L_{p-1} above that; the two
/// agree to better than 1e-12 relative where they overlap.
pub fn laguerre_poly(p: u32, x: f64) -> f64 {
    if p <= LAGUERRE_SUM_MAX_P {
        // term_{j+1} = term_j * -(p-j) / (j+1)^2 * x
        let mut term = 1.0;
        let mut sum = 1.0;
        for j in 0..p {
            term *= -x * (p - j) as f64 / ((j + 1) * (j + 1)) as f64;
            sum += term;
        }
        sum
    } else {
        let mut lm1 = 1.0; // L_0
        let mut l = 1.0 - x; // L_1
        for n in 1..p {
            let next = ((2 * n + 1) as f64 - x) * l - (n as f64) * lm1;
            lm1 = l;
            l = next / (n + 1) as f64;
        }
        l
    }
}

/// Physicists' Hermite polynomial H_n(x) via the recurrence
/// H_{n+1} = 2x H_n - 2n H_{n-1}.
pub fn hermite_poly(n: u32, x: f64) -> f64 {
    let mut hm1 = 1.0; // H_0
    if n == 0 {
        return hm1;
    }
    let mut h = 2.0 * x; // H_1
    for k in 1..n {
        let next = 2.0 * x * h - 2.0 * (k as f64) * hm1;
        hm1 = h;
        h = next;
    }
    h
}

/// Beam radius w(z) = w0 sqrt(1 + ((z - z0)/z_R)^2).
pub fn beam_radius(beam: &BeamParams, z: f64) -> f64 {
    let u = beam.reduced_z(z);
    beam.waist * (1.0 + u * u).sqrt()
}

/// Inverse wavefront curvature 1/R(z) = (z - z0) / ((z - z0)^2 + z_R^2).
///
/// Finite everywhere; zero at the focus where R itself diverges.
pub fn inverse_curvature(beam: &BeamParams, z: f64) -> f64 {
    let d = z - beam.focal_position;
    let zr = beam.rayleigh_length();
    d / (d * d + zr * zr)
}

/// Gouy phase of an LG mode: Phi_G(z) = -(2p + |ell| + 1) atan((z - z0)/z_R).
///
/// Monotone decreasing in z with range (-S pi/2, +S pi/2).
pub fn gouy_phase(mode: &LGModeSpec, z: f64) -> f64 {
    -(mode.order() as f64) * mode.beam.reduced_z(z).atan()
}

/// Normalized radial LG field u_{0p}(r, z), without the plane-wave factor
/// exp(-i k z).
///
/// u = sqrt(2/pi) / w(z) exp(-r^2/w^2) L_p(2 r^2/w^2)
///     exp(i [r^2 k / (2R) - (2p+1) atan((z-z0)/z_R)])
///
/// and satisfies 2 pi int |u|^2 r dr = 1. Rejects ell != 0: azimuthal modes
/// are out of scope for field evaluation.
pub fn lg_field(mode: &LGModeSpec, r: f64, z: f64) -> Result<Complex64> {
    if mode.ell != 0 {
        return Err(Error::NonRadialMode(mode.ell));
    }
    Ok(lg_radial_field(mode.p, &mode.beam, r, z))
}

/// Radial LG field without the ell check; callers validate the mode once.
pub(crate) fn lg_radial_field(p: u32, beam: &BeamParams, r: f64, z: f64) -> Complex64 {
    let w = beam_radius(beam, z);
    let x = 2.0 * r * r / (w * w);
    let envelope = (2.0 / PI).sqrt() / w * (-r * r / (w * w)).exp() * laguerre_poly(p, x);
    let phase = 0.5 * r * r * beam.wavenumber() * inverse_curvature(beam, z)
        - (2 * p + 1) as f64 * beam.reduced_z(z).atan();
    envelope * Complex64::new(0.0, phase).exp()
}

/// Normalized HG field u_{mn}(x, y, z), without the plane-wave factor.
/// Gouy phase -(m + n + 1) atan((z-z0)/z_R), consistent with the LG
/// convention (S_LG = 2p + 1 maps to m + n + 1).
pub fn hg_field(mode: &HGModeSpec, x: f64, y: f64, z: f64) -> Complex64 {
    let beam = &mode.beam;
    let w = beam_radius(beam, z);
    let norm = hg_axis_norm(mode.m, w) * hg_axis_norm(mode.n, w);
    let s2 = std::f64::consts::SQRT_2;
    let amp = norm
        * hermite_poly(mode.m, s2 * x / w)
        * hermite_poly(mode.n, s2 * y / w)
        * (-(x * x + y * y) / (w * w)).exp();
    let phase = 0.5 * (x * x + y * y) * beam.wavenumber() * inverse_curvature(beam, z)
        - (mode.m + mode.n + 1) as f64 * beam.reduced_z(z).atan();
    amp * Complex64::new(0.0, phase).exp()
}

/// 1D HG normalization factor (2/pi)^(1/4) / sqrt(w 2^n n!).
fn hg_axis_norm(n: u32, w: f64) -> f64 {
    let mut fact = 1.0;
    for k in 2..=n {
        fact *= k as f64;
    }
    (2.0 / PI).powf(0.25) / (w * 2.0_f64.powi(n as i32) * fact).sqrt()
}

/// Normalized fiber eigenmode u_SMF(r) = sqrt(2/pi)/w_f exp(-r^2/w_f^2);
/// real, z-independent, 2 pi int |u|^2 r dr = 1.
pub fn fiber_field(fiber: &FiberMode, r: f64) -> f64 {
    let wf = fiber.mode_field_radius;
    (2.0 / PI).sqrt() / wf * (-r * r / (wf * wf)).exp()
}

/// Radius that contains essentially all of the intensity of a radial mode of
/// order S at plane z: w(z) sqrt(S). Used to size sampling windows.
pub fn effective_radius(order: u32, beam: &BeamParams, z: f64) -> f64 {
    beam_radius(beam, z) * (order as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn beam() -> BeamParams {
        BeamParams::new(810e-9, 25e-6, 0.0).unwrap()
    }

    /// Independent oracle: three-term recurrence evaluated from scratch.
    fn laguerre_recurrence(p: u32, x: f64) -> f64 {
        let mut lm1 = 1.0;
        if p == 0 {
            return lm1;
        }
        let mut l = 1.0 - x;
        for n in 1..p {
            let next = (((2 * n + 1) as f64 - x) * l - n as f64 * lm1) / (n + 1) as f64;
            lm1 = l;
            l = next;
        }
        l
    }

    #[test]
    fn laguerre_low_orders() {
        assert_eq!(laguerre_poly(0, 7.3), 1.0);
        assert!((laguerre_poly(1, 2.0) - (-1.0)).abs() < 1e-15);
        // L_2(x) = 1 - 2x + x^2/2
        assert!((laguerre_poly(2, 3.0) - (1.0 - 6.0 + 4.5)).abs() < 1e-14);
    }

    #[test]
    fn laguerre_matches_recurrence_oracle() {
        let v = laguerre_poly(4, 2.0);
        let oracle = laguerre_recurrence(4, 2.0);
        assert!((v - oracle).abs() <= 1e-12 * oracle.abs().max(1.0));
    }

    /// Sum of |term_j| in the binomial form; its ratio to |L_p(x)| is the
    /// condition number of the alternating sum and bounds the achievable
    /// agreement in f64.
    fn laguerre_condition(p: u32, x: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for j in 0..p {
            term *= x * (p - j) as f64 / ((j + 1) * (j + 1)) as f64;
            sum += term;
        }
        sum
    }

    #[test]
    fn laguerre_sum_and_recurrence_agree_where_they_overlap() {
        // 1e-12 relative agreement wherever the alternating sum is well
        // conditioned; elsewhere the deviation must stay within the
        // conditioning floor eps * sum |terms| of either method.
        for p in 0..=20 {
            for &x in &[0.0, 0.3, 1.0, 2.7, 10.0, 35.0] {
                let sum = laguerre_poly(p, x);
                let rec = laguerre_recurrence(p, x);
                let magnitude = sum.abs().max(rec.abs()).max(1e-300);
                let floor = 8.0 * f64::EPSILON * laguerre_condition(p, x);
                let tol = (1e-12 * magnitude).max(floor);
                assert!((sum - rec).abs() <= tol, "p={p} x={x}: sum={sum} rec={rec} tol={tol}");
                if floor <= 1e-13 * magnitude {
                    assert!((sum - rec).abs() <= 1e-12 * magnitude, "p={p} x={x}");
                }
            }
        }
    }

    #[test]
    fn laguerre_high_order_uses_recurrence() {
        // p > 20 goes through the recurrence branch; check the endpoint value
        // L_p(0) = 1 survives and a known point is consistent with the oracle.
        assert!((laguerre_poly(25, 0.0) - 1.0).abs() < 1e-12);
        let v = laguerre_poly(25, 3.7);
        let oracle = laguerre_recurrence(25, 3.7);
        assert_eq!(v, oracle);
    }

    #[test]
    fn hermite_low_orders() {
        assert_eq!(hermite_poly(0, 1.3), 1.0);
        assert_eq!(hermite_poly(1, 1.3), 2.6);
        // H_2 = 4x^2 - 2, H_3 = 8x^3 - 12x
        assert!((hermite_poly(2, 0.5) - (-1.0)).abs() < 1e-14);
        assert!((hermite_poly(3, 0.5) - (1.0 - 6.0)).abs() < 1e-13);
    }

    #[test]
    fn rayleigh_length_arithmetic() {
        // z_R = pi w0^2 / lambda for 25 um / 810 nm, about 2.4241 mm.
        let zr = beam().rayleigh_length();
        let expected = PI * 25e-6 * 25e-6 / 810e-9;
        assert!((zr - expected).abs() < 1e-18);
        assert!((zr - 2.4241e-3).abs() < 1e-7);
    }

    #[test]
    fn beam_radius_at_focus_and_rayleigh() {
        let b = beam();
        assert_eq!(beam_radius(&b, 0.0), 25e-6);
        let zr = b.rayleigh_length();
        assert!((beam_radius(&b, zr) - 25e-6 * 2.0_f64.sqrt()).abs() < 1e-18);
        assert!((beam_radius(&b, zr) - 35.355e-6).abs() < 1e-9);
    }

    #[test]
    fn curvature_flat_at_focus() {
        let b = beam();
        assert_eq!(inverse_curvature(&b, b.focal_position), 0.0);
    }

    #[test]
    fn curvature_minimum_radius_at_rayleigh() {
        let b = beam();
        let zr = b.rayleigh_length();
        assert!((inverse_curvature(&b, zr) - 1.0 / (2.0 * zr)).abs() < 1e-12 / zr);
    }

    #[test]
    fn curvature_asymptote() {
        let b = beam();
        let d = 100.0 * b.rayleigh_length();
        let inv_r = inverse_curvature(&b, d);
        let rel = (inv_r - 1.0 / d).abs() * d;
        assert!(rel < 1e-4, "relative deviation {rel}");
    }

    #[test]
    fn gouy_phase_values() {
        let b = beam();
        let zr = b.rayleigh_length();
        let g0 = LGModeSpec::radial(0, b);
        assert_eq!(gouy_phase(&g0, 0.0), 0.0);
        assert!((gouy_phase(&g0, zr) - (-PI / 4.0)).abs() < 1e-15);

        let g4 = LGModeSpec::radial(4, b);
        let far = gouy_phase(&g4, 1e4 * zr);
        assert!((far + 9.0 * PI / 2.0).abs() < 1e-3);
    }

    #[test]
    fn lg_field_peak_and_zero() {
        let b = beam();
        let u0 = lg_field(&LGModeSpec::radial(0, b), 0.0, 0.0).unwrap();
        assert!((u0.re - (2.0 / PI).sqrt() / 25e-6).abs() < 1e-6);
        assert_eq!(u0.im, 0.0);

        // L_1 vanishes at x = 1, i.e. r = w0/sqrt(2).
        let u1 = lg_field(&LGModeSpec::radial(1, b), 25e-6 / 2.0_f64.sqrt(), 0.0).unwrap();
        assert!(u1.norm() < 1e-9);
    }

    #[test]
    fn lg_field_rejects_azimuthal_modes() {
        let mode = LGModeSpec::new(1, 0, beam());
        assert!(matches!(lg_field(&mode, 1e-6, 0.0), Err(Error::NonRadialMode(1))));
    }

    #[test]
    fn lg_field_normalization_by_quadrature() {
        let b = beam();
        for &z in &[0.0, 0.7 * b.rayleigh_length(), 3.0 * b.rayleigh_length()] {
            let mode = LGModeSpec::radial(2, b);
            let w = beam_radius(&b, z);
            let rmax = 8.0 * w * (mode.order() as f64).sqrt();
            let norm = crate::numerics::adaptive_simpson_panels(
                &|r| {
                    let u = lg_radial_field(2, &b, r, z);
                    2.0 * PI * u.norm_sqr() * r
                },
                0.0,
                rmax,
                16,
                1e-11,
            )
            .unwrap();
            assert!((norm - 1.0).abs() < 1e-8, "z={z}: norm={norm}");
        }
    }

    #[test]
    fn lg_modes_are_orthogonal() {
        let b = beam();
        let z = 1.3 * b.rayleigh_length();
        let w = beam_radius(&b, z);
        for (p1, p2) in [(0u32, 1u32), (0, 3), (1, 2), (2, 4)] {
            let overlap_re = crate::numerics::adaptive_simpson_panels(
                &|r| {
                    let a = lg_radial_field(p1, &b, r, z);
                    let bb = lg_radial_field(p2, &b, r, z);
                    2.0 * PI * (a.conj() * bb).re * r
                },
                0.0,
                10.0 * w * 3.0,
                16,
                1e-11,
            )
            .unwrap();
            let overlap_im = crate::numerics::adaptive_simpson_panels(
                &|r| {
                    let a = lg_radial_field(p1, &b, r, z);
                    let bb = lg_radial_field(p2, &b, r, z);
                    2.0 * PI * (a.conj() * bb).im * r
                },
                0.0,
                10.0 * w * 3.0,
                16,
                1e-11,
            )
            .unwrap();
            let mag = (overlap_re * overlap_re + overlap_im * overlap_im).sqrt();
            assert!(mag < 1e-8, "p={p1},{p2}: |overlap| = {mag}");
        }
    }

    #[test]
    fn fiber_field_values() {
        let f = FiberMode::new(2.5e-6).unwrap();
        let peak = fiber_field(&f, 0.0);
        assert!((peak - (2.0 / PI).sqrt() / 2.5e-6).abs() < 1e-4);
        assert!((fiber_field(&f, 2.5e-6) - peak * (-1.0_f64).exp()).abs() < 1e-6 * peak);

        let norm = crate::numerics::adaptive_simpson(
            &|r| 2.0 * PI * fiber_field(&f, r).powi(2) * r,
            0.0,
            10.0 * 2.5e-6,
            1e-13,
        )
        .unwrap();
        assert!((norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn hg_field_normalization() {
        // |u(x,y)|^2 separates, so the 2D norm factorizes through any
        // reference point (x0, y0) where u is nonzero:
        // int int |u|^2 = [int |u(x,y0)|^2 dx] [int |u(x0,y)|^2 dy] / |u(x0,y0)|^2.
        let b = beam();
        let mode = HGModeSpec::new(3, 1, b);
        let z = 0.8 * b.rayleigh_length();
        let w = beam_radius(&b, z);
        let (x0, y0) = (0.4 * w, 0.3 * w);
        let fx = crate::numerics::adaptive_simpson_panels(
            &|x| hg_field(&mode, x, y0, z).norm_sqr(),
            -12.0 * w,
            12.0 * w,
            24,
            1e-11 / w,
        )
        .unwrap();
        let gy = crate::numerics::adaptive_simpson_panels(
            &|y| hg_field(&mode, x0, y, z).norm_sqr(),
            -12.0 * w,
            12.0 * w,
            24,
            1e-11 / w,
        )
        .unwrap();
        let at_ref = hg_field(&mode, x0, y0, z).norm_sqr();
        let total = fx * gy / at_ref;
        assert!((total - 1.0).abs() < 1e-8, "norm = {total}");
    }

    proptest! {
        #[test]
        fn gouy_phase_is_odd_about_focus(delta in 1e-6f64..1e-1, p in 0u32..6) {
            let mode = LGModeSpec::radial(p, beam());
            let z0 = mode.beam.focal_position;
            let plus = gouy_phase(&mode, z0 + delta);
            let minus = gouy_phase(&mode, z0 - delta);
            prop_assert!((plus + minus).abs() < 1e-12 * plus.abs().max(1e-30));
        }

        #[test]
        fn gouy_phase_scales_linearly_in_order(z in -0.1f64..0.1, p in 0u32..8, ell in -4i32..4) {
            let b = beam();
            let mode = LGModeSpec::new(ell, p, b);
            let base = LGModeSpec::radial(0, b);
            let expected = mode.order() as f64 * gouy_phase(&base, z);
            prop_assert!((gouy_phase(&mode, z) - expected).abs() < 1e-12 * expected.abs().max(1e-30));
        }

        #[test]
        fn beam_radius_even_and_minimal_at_focus(delta in 0.0f64..0.1) {
            let b = beam();
            let z0 = b.focal_position;
            let plus = beam_radius(&b, z0 + delta);
            let minus = beam_radius(&b, z0 - delta);
            prop_assert!((plus - minus).abs() < 1e-12 * plus);
            prop_assert!(plus >= b.waist);
        }

        #[test]
        fn curvature_times_radius_sq_is_bounded(z in -1.0f64..1.0) {
            // |w(z)^2 / R(z)| <= w0^2 * (1+u^2) * |u| / (z_R (1+u^2)) = w0^2 |u| / z_R,
            // finite for all finite z; near the focus it vanishes.
            let b = beam();
            let v = inverse_curvature(&b, z) * beam_radius(&b, z).powi(2);
            prop_assert!(v.is_finite());
            let u = b.reduced_z(z).abs();
            prop_assert!(v.abs() <= b.waist.powi(2) * u / b.rayleigh_length() * (1.0 + 1e-12));
        }
    }
}
