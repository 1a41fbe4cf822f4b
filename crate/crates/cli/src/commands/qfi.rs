use std::path::PathBuf;

use gouysim_core::coupling::overlap_p;
use gouysim_core::metrology::{cfi_curve, cfi_focus, qfi_noon_numeric};

use crate::commands::emit;
use crate::config::{ConfigOverrides, ScenarioConfig};
use crate::CliError;

#[derive(clap::Args)]
pub struct QfiArgs {
    #[command(flatten)]
    overrides: ConfigOverrides,

    /// Override the fringe contrast P_max in (0, 1]; by default it is
    /// derived from the focal overlaps as min(1, 2 (|A_p||A_p'|)^N).
    #[arg(long, value_name = "P")]
    pmax: Option<f64>,

    /// Output file (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Also write the CFI curve as CSV (z_m,cfi_per_m2).
    #[arg(long, value_name = "FILE")]
    cfi_csv: Option<PathBuf>,
}

pub fn run(args: QfiArgs) -> Result<(), CliError> {
    let cfg = ScenarioConfig::resolve(&args.overrides)?;
    let beam = cfg.beam()?;
    let fiber = cfg.fiber()?;

    let qfi =
        qfi_noon_numeric(cfg.photons, cfg.p, cfg.p_prime, &beam, None).map_err(CliError::from)?;

    let p_max = match args.pmax {
        Some(p) => {
            if !(p > 0.0 && p <= 1.0) {
                return Err(CliError::Config(format!("--pmax must be in (0, 1], got {p}")));
            }
            p
        }
        None => {
            let z0 = beam.focal_position;
            let a = overlap_p(cfg.p, &beam, &fiber, z0).norm();
            let b = overlap_p(cfg.p_prime, &beam, &fiber, z0).norm();
            (2.0 * (a * b).powi(cfg.photons as i32)).clamp(f64::MIN_POSITIVE, 1.0)
        }
    };

    let delta_p = cfg.p_prime as i32 - cfg.p as i32;
    let f0 = cfi_focus(cfg.photons, delta_p, p_max, &beam).map_err(CliError::from)?;
    let samples: Vec<(f64, f64)> = cfg
        .z_grid()
        .iter()
        .map(|&z| cfi_curve(cfg.photons, delta_p, p_max, &beam, z).map(|f| (z, f)))
        .collect::<Result<_, _>>()
        .map_err(CliError::from)?;
    let curve: Vec<serde_json::Value> =
        samples.iter().map(|&(z, f)| serde_json::json!({ "z_m": z, "cfi_per_m2": f })).collect();

    if let Some(path) = &args.cfi_csv {
        let mut text = Vec::new();
        gouysim_core::metrology::write_cfi_csv(&samples, &cfg.preamble(), &mut text)
            .map_err(CliError::from)?;
        emit(Some(path), &String::from_utf8(text).expect("utf8"))?;
    }

    let report = serde_json::json!({
        "gouysim_config": cfg,
        "qfi": qfi,
        "cfi": {
            "p_max": p_max,
            "delta_p": delta_p,
            "f0_per_m2": f0,
            "curve": curve,
        },
    });
    let mut text = serde_json::to_string_pretty(&report).expect("json");
    text.push('\n');
    emit(args.out.as_deref(), &text)
}
