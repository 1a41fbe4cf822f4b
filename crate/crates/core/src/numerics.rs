//! Small numerical building blocks: adaptive quadrature and compensated
//! summation. Shared by the coupling and metrology modules and by tests.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Maximum bisection depth for the adaptive Simpson rule. 2^50 subdivisions
/// is far beyond anything a smooth Gaussian-type integrand needs.
const MAX_DEPTH: u32 = 50;

/// Adaptive Simpson quadrature of a real integrand on [a, b].
///
/// `tol` is an absolute error target; the usual Richardson estimate
/// |S_fine - S_coarse|/15 controls subdivision. Returns an error if the
/// requested tolerance cannot be met within the depth limit.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureNonConvergence { error_estimate: delta.abs() / 15.0 });
    }
    let l = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// Adaptive Simpson over [a, b] split into `panels` equal panels first.
///
/// The plain adaptive rule can terminate spuriously when its first probe
/// points all land on zeros or tails of a localized integrand; pre-splitting
/// guards against that.
pub fn adaptive_simpson_panels<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    panels: usize,
    tol: f64,
) -> Result<f64> {
    assert!(panels >= 1);
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let lo = a + i as f64 * width;
        let hi = if i == panels - 1 { b } else { lo + width };
        total += adaptive_simpson(f, lo, hi, tol / panels as f64)?;
    }
    Ok(total)
}

/// Adaptive Simpson quadrature of a complex integrand, done per component.
pub fn adaptive_simpson_complex<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<Complex64> {
    let re = adaptive_simpson(&|x| f(x).re, a, b, tol)?;
    let im = adaptive_simpson(&|x| f(x).im, a, b, tol)?;
    Ok(Complex64::new(re, im))
}

/// Panelized complex adaptive Simpson; see [`adaptive_simpson_panels`].
pub fn adaptive_simpson_complex_panels<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    panels: usize,
    tol: f64,
) -> Result<Complex64> {
    let re = adaptive_simpson_panels(&|x| f(x).re, a, b, panels, tol)?;
    let im = adaptive_simpson_panels(&|x| f(x).im, a, b, panels, tol)?;
    Ok(Complex64::new(re, im))
}

/// Kahan-compensated sum of complex terms. The analytic overlap sum is an
/// alternating series whose cancellation grows with the radial index, so the
/// naive sum loses digits already around p ~ 8.
pub fn kahan_sum_complex<I: IntoIterator<Item = Complex64>>(terms: I) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut comp = Complex64::new(0.0, 0.0);
    for term in terms {
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Evenly spaced samples over [start, end], endpoints included.
pub fn linspace(start: f64, end: f64, samples: usize) -> Vec<f64> {
    assert!(samples >= 2, "linspace needs at least two samples");
    let step = (end - start) / (samples - 1) as f64;
    (0..samples).map(|i| if i == samples - 1 { end } else { start + step * i as f64 }).collect()
}
