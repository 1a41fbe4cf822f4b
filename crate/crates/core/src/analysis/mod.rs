//! Experimental-data pipeline: scan ingestion, accidental-coincidence
//! correction, piezo-step conversion, 4-parameter nonlinear least-squares
//! fitting of the classical and N00N models, and goodness-of-fit reporting.

mod lm;

use serde::Serialize;
use std::io::{BufRead, Write};

use crate::beamgeom::{BeamParams, FiberMode};
use crate::error::{Error, Result};
use crate::interference::{classical_signal, noon_signal, NoonConfig};

pub use lm::{LmOptions, PARAM_NAMES};

/// Piezo actuator step size quoted by the manufacturer (m/step). The real
/// step can deviate by up to 20%, so it stays configurable.
pub const DEFAULT_STEP_SIZE: f64 = 20e-9;

/// Default coincidence window tau for the accidental-rate estimate (s).
pub const DEFAULT_COINCIDENCE_WINDOW: f64 = 1e-9;

/// Nominal beam waist used to seed fits when no seed is given (m).
pub const DEFAULT_WAIST_SEED: f64 = 25e-6;

/// One measured sample of a focal scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub z: f64,
    pub signal: f64,
    /// Measurement uncertainty; 0 means unknown (unweighted).
    pub sigma: f64,
}

/// Free-form scan metadata.
#[derive(Debug, Clone, Default)]
pub struct ScanMeta {
    pub label: String,
    pub photons: Option<u32>,
    pub p: Option<u32>,
    pub p_prime: Option<u32>,
    pub integration_time_s: Option<f64>,
}

/// An ordered focal scan: strictly increasing z, nonnegative signals and
/// uncertainties.
#[derive(Debug, Clone)]
pub struct ScanCurve {
    pub points: Vec<ScanPoint>,
    pub meta: ScanMeta,
}

impl ScanCurve {
    pub fn new(points: Vec<ScanPoint>, meta: ScanMeta) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidScan("scan has no points".into()));
        }
        for pair in points.windows(2) {
            if pair[1].z <= pair[0].z {
                return Err(Error::InvalidScan(format!(
                    "z values must be strictly increasing ({} then {})",
                    pair[0].z, pair[1].z
                )));
            }
        }
        for pt in &points {
            if pt.signal.is_nan() || pt.signal < 0.0 {
                return Err(Error::InvalidScan(format!(
                    "negative signal {} at z = {}",
                    pt.signal, pt.z
                )));
            }
            if pt.sigma.is_nan() || pt.sigma < 0.0 {
                return Err(Error::InvalidScan(format!(
                    "negative sigma {} at z = {}",
                    pt.sigma, pt.z
                )));
            }
        }
        Ok(Self { points, meta })
    }

    pub fn zs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.z).collect()
    }

    pub fn signals(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.signal).collect()
    }
}

/// Accidental-corrected coincidence value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corrected {
    pub value: f64,
    /// True when the raw value fell below the accidental estimate and was
    /// clamped to zero.
    pub clamped: bool,
}

/// Subtract the accidental-coincidence estimate singles1 * singles2 * tau
/// from the measured coincidences, clamping at zero. Real data does dip
/// below the accidental floor, so the clamp is flagged, not an error.
pub fn accidental_correct(
    coincidences: f64,
    singles_1: f64,
    singles_2: f64,
    tau: f64,
) -> Result<Corrected> {
    for (name, v) in [
        ("coincidences", coincidences),
        ("singles_1", singles_1),
        ("singles_2", singles_2),
        ("tau", tau),
    ] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidScan(format!("{name} must be >= 0 and finite, got {v}")));
        }
    }
    let corrected = coincidences - singles_1 * singles_2 * tau;
    if corrected < 0.0 {
        Ok(Corrected { value: 0.0, clamped: true })
    } else {
        Ok(Corrected { value: corrected, clamped: false })
    }
}

/// Convert a piezo step count to an axial position: z = steps * step_size.
pub fn steps_to_position(steps: i64, step_size: f64) -> f64 {
    steps as f64 * step_size
}

/// Which signal shape to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalModel {
    Classical,
    Noon { photons: u32 },
}

/// Residual weighting policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// All weights 1 (the default; the source experiment does not state
    /// error-bar weighting).
    #[default]
    Unweighted,
    /// w_i = 1/sigma_i^2, falling back to 1 where sigma = 0.
    FromSigma,
}

/// Everything the fit needs besides the data: the model shape, the fixed
/// optics (wavelength and fiber mode are not fitted), and the mode pair.
#[derive(Debug, Clone, Copy)]
pub struct FitProblem {
    pub model: SignalModel,
    pub wavelength: f64,
    pub p: u32,
    pub p_prime: u32,
    pub fiber: FiberMode,
    pub weighting: Weighting,
}

/// Optional starting point for the optimizer.
#[derive(Debug, Clone, Copy)]
pub struct FitSeed {
    pub scale: f64,
    pub w0: f64,
    pub z0: f64,
    pub theta: f64,
}

/// Converged fit of signal = scale * model(z; w0, z0, theta).
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub scale: f64,
    #[serde(rename = "w0_m")]
    pub w0: f64,
    #[serde(rename = "z0_m")]
    pub z0: f64,
    #[serde(rename = "theta_rad")]
    pub theta: f64,
    pub adjusted_r2: f64,
    /// sqrt(sum w_i r_i^2) at the solution.
    pub residual_norm: f64,
    /// Parameter covariance in the order [scale, w0, z0, theta].
    pub covariance: [[f64; 4]; 4],
    pub converged: bool,
    pub weighted: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("FitResult serializes")
    }
}

/// Adjusted R-squared: 1 - (1 - R^2)(n - 1)/(n - k - 1) with
/// R^2 = 1 - SS_res/SS_tot.
pub fn adjusted_r2(residuals: &[f64], signals: &[f64], n_params: usize) -> Result<f64> {
    let n = signals.len();
    if n <= n_params + 1 {
        return Err(Error::DegenerateData(format!(
            "need more than {} points for adjusted R^2, got {n}",
            n_params + 1
        )));
    }
    let mean = signals.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = signals.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::DegenerateData("SS_tot = 0: signal is constant".into()));
    }
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let r2 = 1.0 - ss_res / ss_tot;
    Ok(1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n as f64 - n_params as f64 - 1.0))
}

/// Evaluate the fit model at a point.
pub fn model_signal(problem: &FitProblem, params: &[f64; 4], z: f64) -> f64 {
    let [scale, w0, z0, theta] = *params;
    if !w0.is_finite() || w0 <= 0.0 {
        return f64::NAN;
    }
    let beam = BeamParams { wavelength: problem.wavelength, waist: w0, focal_position: z0 };
    let cfg = NoonConfig {
        photons: match problem.model {
            SignalModel::Classical => 1,
            SignalModel::Noon { photons } => photons,
        },
        p: problem.p,
        p_prime: problem.p_prime,
        theta,
        beam,
        fiber: problem.fiber,
    };
    let value = match problem.model {
        SignalModel::Classical => classical_signal(&cfg, z),
        SignalModel::Noon { .. } => noon_signal(&cfg, z),
    };
    scale * value
}

/// Weighted nonlinear least-squares fit of the 4-parameter model to a scan.
///
/// Initialization when no seed is given is a deterministic multi-start:
/// candidates on a coarse (w0, z0, theta) grid are ranked by their
/// variable-projection cost (see [`initial_candidates`]), the best few are
/// polished briefly, and the winning basin gets the full budget. The fringe
/// structure makes the least-squares surface multimodal in (w0, z0, theta)
/// jointly — a single smoothed-argmax start lands on a fringe maximum up to
/// half a fringe from the focus and strands the optimizer in an
/// envelope-tail or waist-alias minimum. theta is reported wrapped to
/// (-pi, pi]. Non-convergence returns `Error::FitNonConvergence` carrying
/// the partial result.
pub fn fit_scan(
    curve: &ScanCurve,
    problem: &FitProblem,
    seed: Option<FitSeed>,
) -> Result<FitResult> {
    let n = curve.points.len();
    if n < 8 {
        return Err(Error::InvalidScan(format!("need at least 8 points to fit, got {n}")));
    }
    if problem.p == problem.p_prime {
        return Err(Error::InvalidConfig("mode pair must be distinct".into()));
    }
    if let SignalModel::Noon { photons } = problem.model {
        if photons < 1 {
            return Err(Error::InvalidConfig("photon number N must be >= 1".into()));
        }
    }

    let zs = curve.zs();
    let ys = curve.signals();
    let weighted = matches!(problem.weighting, Weighting::FromSigma);
    let weights: Vec<f64> = match problem.weighting {
        Weighting::Unweighted => vec![1.0; n],
        Weighting::FromSigma => curve
            .points
            .iter()
            .map(|p| if p.sigma > 0.0 { 1.0 / (p.sigma * p.sigma) } else { 1.0 })
            .collect(),
    };

    let model = |x: &[f64; 4], z: f64| model_signal(problem, x, z);
    let z_span = zs[n - 1] - zs[0];
    let scales: [f64; 4] = {
        let scale0 = ys.iter().copied().fold(0.0_f64, f64::max).max(1e-6);
        [scale0, DEFAULT_WAIST_SEED, (z_span / 10.0).max(DEFAULT_WAIST_SEED), 1.0]
    };

    let out = match seed {
        Some(s) => lm::levenberg_marquardt(
            &model,
            &zs,
            &ys,
            &weights,
            [s.scale, s.w0, s.z0, s.theta],
            scales,
            &LmOptions::default(),
        )?,
        None => {
            // Stage 1: short polish of the best-ranked starting candidates.
            let candidates = initial_candidates(&zs, &ys, &weights, &model);
            let short = LmOptions { max_iterations: 60, ..LmOptions::default() };
            let mut best: Option<lm::LmOutcome> = None;
            for x0 in candidates {
                let Ok(run) =
                    lm::levenberg_marquardt(&model, &zs, &ys, &weights, x0, scales, &short)
                else {
                    continue;
                };
                if best.as_ref().is_none_or(|b| run.cost < b.cost) {
                    best = Some(run);
                }
            }
            let stage1 =
                best.ok_or_else(|| Error::DegenerateData("no usable starting point".into()))?;
            // Stage 2: full-budget refinement from the winning basin.
            lm::levenberg_marquardt(
                &model,
                &zs,
                &ys,
                &weights,
                stage1.params,
                scales,
                &LmOptions::default(),
            )?
        }
    };

    let mut params = out.params;
    params[3] = wrap_angle(params[3]);

    let residuals: Vec<f64> = zs.iter().zip(&ys).map(|(&z, &y)| y - model(&params, z)).collect();
    let adj_r2 = adjusted_r2(&residuals, &ys, 4)?;
    let weighted_ss: f64 = residuals.iter().zip(&weights).map(|(r, w)| w * r * r).sum();

    // Covariance from the final normal matrix: (J^T W J)^-1, scaled by the
    // reduced chi-square when unweighted (sigmas unknown) and taken as-is
    // when sigmas are absolute.
    let inv = lm::invert4(out.normal_matrix)
        .ok_or(Error::RankDeficientJacobian { parameter: "covariance" })?;
    let cov_scale = if weighted { 1.0 } else { weighted_ss / (n as f64 - 4.0) };
    let mut covariance = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            covariance[i][j] = inv[i][j] * cov_scale;
        }
    }

    let result = FitResult {
        scale: params[0],
        w0: params[1],
        z0: params[2],
        theta: params[3],
        adjusted_r2: adj_r2,
        residual_norm: weighted_ss.sqrt(),
        covariance,
        converged: out.converged,
        weighted,
        iterations: out.iterations,
    };
    if !out.converged {
        return Err(Error::FitNonConvergence {
            iterations: out.iterations,
            partial: Box::new(result),
        });
    }
    Ok(result)
}

/// Residuals signal_i - scale * model(z_i) for a finished fit.
pub fn fit_residuals(curve: &ScanCurve, problem: &FitProblem, fit: &FitResult) -> Vec<(f64, f64)> {
    let params = [fit.scale, fit.w0, fit.z0, fit.theta];
    curve.points.iter().map(|pt| (pt.z, pt.signal - model_signal(problem, &params, pt.z))).collect()
}

/// Starting points ranked by variable-projection cost: the model is linear
/// in the scale, so for every (w0, z0, theta) grid node the optimal scale
/// and its residual cost are closed-form. Ranking on that cost (instead of a
/// fixed scale guess) reliably separates the true fringe basin from its
/// w0-aliases.
fn initial_candidates<F>(zs: &[f64], ys: &[f64], weights: &[f64], model: &F) -> Vec<[f64; 4]>
where
    F: Fn(&[f64; 4], f64) -> f64,
{
    // 5-point moving average locates a fringe/envelope maximum.
    let smoothed: Vec<f64> = (0..ys.len())
        .map(|i| {
            let lo = i.saturating_sub(2);
            let hi = (i + 2).min(ys.len() - 1);
            ys[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect();
    let argmax = smoothed
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(ys.len() / 2);
    // Signal centroid: insensitive to which fringe carries the maximum.
    let total: f64 = ys.iter().sum();
    let centroid = if total > 0.0 {
        zs.iter().zip(ys).map(|(&z, &y)| z * y).sum::<f64>() / total
    } else {
        zs[zs.len() / 2]
    };
    let mid = 0.5 * (zs[0] + zs[zs.len() - 1]);
    let fallback_scale = ys.iter().copied().fold(0.0_f64, f64::max).max(f64::MIN_POSITIVE);

    let theta_grid: Vec<f64> = (0..8)
        .map(|i| -std::f64::consts::PI + (i as f64 + 1.0) * std::f64::consts::FRAC_PI_4)
        .collect();
    let mut ranked: Vec<([f64; 4], f64)> = Vec::new();
    for &w0 in &[0.8 * DEFAULT_WAIST_SEED, DEFAULT_WAIST_SEED, 1.25 * DEFAULT_WAIST_SEED] {
        for &z0 in &[zs[argmax], centroid, mid] {
            for &theta in &theta_grid {
                let unit = [1.0, w0, z0, theta];
                // Optimal scale s* = sum w y m / sum w m^2 and its cost.
                let mut sym = 0.0;
                let mut smm = 0.0;
                let mut syy = 0.0;
                for ((&z, &y), &w) in zs.iter().zip(ys).zip(weights) {
                    let m = model(&unit, z);
                    sym += w * y * m;
                    smm += w * m * m;
                    syy += w * y * y;
                }
                if !sym.is_finite() || smm.is_nan() || smm <= 0.0 {
                    continue;
                }
                let s = (sym / smm).max(1e-9 * fallback_scale);
                let cost = syy - 2.0 * s * sym + s * s * smm;
                if cost.is_finite() {
                    ranked.push(([s, w0, z0, theta], cost));
                }
            }
        }
    }
    if ranked.is_empty() {
        return vec![[fallback_scale, DEFAULT_WAIST_SEED, mid, 0.0]];
    }
    ranked.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    ranked.into_iter().take(6).map(|(c, _)| c).collect()
}

/// Wrap an angle to (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut t = theta % two_pi;
    if t <= -std::f64::consts::PI {
        t += two_pi;
    } else if t > std::f64::consts::PI {
        t -= two_pi;
    }
    t
}

/// A parsed scan plus whether the file carried a sigma column.
#[derive(Debug, Clone)]
pub struct ParsedScan {
    pub curve: ScanCurve,
    pub has_sigma: bool,
}

/// Parse scan CSV: header `z_m,signal[,sigma]`, `#` comment lines allowed
/// anywhere, decimal point `.`. The curve-export header `z_m,value` is
/// accepted as a sigma-less synonym so simulated curves feed straight back
/// into the fitter.
pub fn parse_scan_csv<R: BufRead>(reader: R) -> Result<ParsedScan> {
    let mut points = Vec::new();
    let mut has_sigma = false;
    let mut header_seen = false;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !header_seen {
            match trimmed {
                "z_m,signal" | "z_m,value" => has_sigma = false,
                "z_m,signal,sigma" => has_sigma = true,
                other => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected header 'z_m,signal[,sigma]', got '{other}'"),
                    })
                }
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        let expected = if has_sigma { 3 } else { 2 };
        if fields.len() != expected {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {expected} fields, got {}", fields.len()),
            });
        }
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|e| Error::Parse {
                line: line_no,
                message: format!("bad {what} '{s}': {e}"),
            })
        };
        let z = parse(fields[0], "z_m")?;
        let signal = parse(fields[1], "signal")?;
        let sigma = if has_sigma { parse(fields[2], "sigma")? } else { 0.0 };
        points.push(ScanPoint { z, signal, sigma });
    }
    if !header_seen {
        return Err(Error::Parse { line: 0, message: "empty input".into() });
    }
    let curve = ScanCurve::new(points, ScanMeta::default())?;
    Ok(ParsedScan { curve, has_sigma })
}

/// Result of raw-counts ingestion.
#[derive(Debug, Clone)]
pub struct ParsedRawCounts {
    pub curve: ScanCurve,
    /// Number of points clamped to zero by the accidental correction.
    pub clamped: usize,
}

/// Parse raw-counts CSV (`steps,coincidences,singles1,singles2`), convert
/// steps to positions and apply the accidental correction.
pub fn parse_raw_counts_csv<R: BufRead>(
    reader: R,
    tau: f64,
    step_size: f64,
) -> Result<ParsedRawCounts> {
    let mut points = Vec::new();
    let mut clamped = 0;
    let mut header_seen = false;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !header_seen {
            if trimmed != "steps,coincidences,singles1,singles2" {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!(
                        "expected header 'steps,coincidences,singles1,singles2', got '{trimmed}'"
                    ),
                });
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let steps: i64 = fields[0].trim().parse().map_err(|e| Error::Parse {
            line: line_no,
            message: format!("bad steps '{}': {e}", fields[0]),
        })?;
        let mut nums = [0.0; 3];
        for (k, f) in fields[1..].iter().enumerate() {
            nums[k] = f.trim().parse::<f64>().map_err(|e| Error::Parse {
                line: line_no,
                message: format!("bad value '{f}': {e}"),
            })?;
        }
        let corrected = accidental_correct(nums[0], nums[1], nums[2], tau)?;
        if corrected.clamped {
            clamped += 1;
        }
        points.push(ScanPoint {
            z: steps_to_position(steps, step_size),
            signal: corrected.value,
            sigma: 0.0,
        });
    }
    if !header_seen {
        return Err(Error::Parse { line: 0, message: "empty input".into() });
    }
    let curve = ScanCurve::new(points, ScanMeta::default())?;
    Ok(ParsedRawCounts { curve, clamped })
}

/// Write residuals as CSV `z_m,residual`.
pub fn write_residuals_csv<W: Write>(residuals: &[(f64, f64)], mut w: W) -> Result<()> {
    writeln!(w, "z_m,residual")?;
    for (z, r) in residuals {
        writeln!(w, "{},{}", z, r)?;
    }
    Ok(())
}
