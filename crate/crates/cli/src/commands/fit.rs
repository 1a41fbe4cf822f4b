use clap::ValueEnum;
use std::io::BufReader;
use std::path::PathBuf;

use gouysim_core::analysis::{
    fit_residuals, fit_scan, parse_raw_counts_csv, parse_scan_csv, write_residuals_csv, FitProblem,
    ScanCurve, SignalModel, Weighting, DEFAULT_COINCIDENCE_WINDOW, DEFAULT_STEP_SIZE,
};
use gouysim_core::Error as CoreError;

use crate::commands::emit;
use crate::config::{ConfigOverrides, ScenarioConfig};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Classical,
    Noon,
}

#[derive(clap::Args)]
pub struct FitArgs {
    /// Scan CSV (z_m,signal[,sigma]) or, with --raw-counts, a raw counts CSV
    /// (steps,coincidences,singles1,singles2).
    data: PathBuf,

    /// Signal model to fit; N for the noon model comes from the config.
    #[arg(long, value_enum)]
    model: Model,

    #[command(flatten)]
    overrides: ConfigOverrides,

    /// Treat the input as raw counts: convert steps to positions and
    /// subtract accidental coincidences before fitting.
    #[arg(long)]
    raw_counts: bool,

    /// Coincidence window tau in ns for the accidental estimate.
    #[arg(long, value_name = "NS", default_value_t = DEFAULT_COINCIDENCE_WINDOW * 1e9)]
    tau_ns: f64,

    /// Piezo step size in nm.
    #[arg(long, value_name = "NM", default_value_t = DEFAULT_STEP_SIZE * 1e9)]
    step_nm: f64,

    /// Weight residuals by 1/sigma^2 (unweighted by default).
    #[arg(long)]
    weighted: bool,

    /// Use Poisson sigmas sqrt(max(signal, 1)) for count data (implies
    /// weighting).
    #[arg(long, conflicts_with = "weighted")]
    poisson_sigma: bool,

    /// Also write residuals (z_m,residual) to this file.
    #[arg(long, value_name = "FILE")]
    residuals: Option<PathBuf>,
}

pub fn run(args: FitArgs) -> Result<(), CliError> {
    let cfg = ScenarioConfig::resolve(&args.overrides)?;
    let file = std::fs::File::open(&args.data)
        .map_err(|e| CliError::Parse(format!("cannot open {}: {e}", args.data.display())))?;
    let reader = BufReader::new(file);

    let (mut curve, has_sigma, clamped) = if args.raw_counts {
        let parsed = parse_raw_counts_csv(reader, args.tau_ns * 1e-9, args.step_nm * 1e-9)
            .map_err(parse_error)?;
        (parsed.curve, false, parsed.clamped)
    } else {
        let parsed = parse_scan_csv(reader).map_err(parse_error)?;
        (parsed.curve, parsed.has_sigma, 0)
    };

    if args.poisson_sigma {
        curve = poissonized(curve)?;
    }
    let weighting = if args.poisson_sigma || (args.weighted && has_sigma) {
        Weighting::FromSigma
    } else {
        Weighting::Unweighted
    };

    let problem = FitProblem {
        model: match args.model {
            Model::Classical => SignalModel::Classical,
            Model::Noon => SignalModel::Noon { photons: cfg.photons },
        },
        wavelength: cfg.wavelength_nm * 1e-9,
        p: cfg.p,
        p_prime: cfg.p_prime,
        fiber: cfg.fiber()?,
        weighting,
    };

    let (fit, convergence_failure) = match fit_scan(&curve, &problem, None) {
        Ok(fit) => (fit, None),
        Err(CoreError::FitNonConvergence { iterations, partial }) => (*partial, Some(iterations)),
        Err(e) => return Err(e.into()),
    };

    let mut json = fit.to_json();
    let obj = json.as_object_mut().expect("fit result is an object");
    obj.insert("gouysim_config".into(), serde_json::to_value(&cfg).expect("config"));
    obj.insert("sigma_column".into(), serde_json::Value::Bool(has_sigma));
    if args.raw_counts {
        obj.insert("clamped_points".into(), serde_json::Value::from(clamped));
    }
    println!("{}", serde_json::to_string_pretty(&json).expect("json"));

    if let Some(path) = &args.residuals {
        let residuals = fit_residuals(&curve, &problem, &fit);
        let mut text = Vec::new();
        write_residuals_csv(&residuals, &mut text).map_err(CliError::from)?;
        emit(Some(path), &String::from_utf8(text).expect("utf8"))?;
    }

    match convergence_failure {
        Some(iterations) => Err(CliError::Numerical(format!(
            "fit did not converge after {iterations} iterations (partial result printed)"
        ))),
        None => Ok(()),
    }
}

fn parse_error(e: CoreError) -> CliError {
    match e {
        CoreError::InvalidScan(m) => CliError::Parse(m),
        other => CliError::from(other),
    }
}

fn poissonized(curve: ScanCurve) -> Result<ScanCurve, CliError> {
    let points = curve
        .points
        .iter()
        .map(|pt| gouysim_core::analysis::ScanPoint {
            z: pt.z,
            signal: pt.signal,
            sigma: pt.signal.max(1.0).sqrt(),
        })
        .collect();
    ScanCurve::new(points, curve.meta).map_err(|e| CliError::Parse(e.to_string()))
}
