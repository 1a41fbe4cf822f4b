use clap::ValueEnum;
use rayon::prelude::*;
use std::path::PathBuf;

use gouysim_core::interference::{
    classical_signal, debroglie_comparison, distinguishable_pair_signal, noon_signal,
    superposition_radius, twophoton_samepos_density_map, write_curve_csv, write_density_csv,
    CurveSample, DebroglieScenario, LabeledCurve,
};

use crate::commands::{emit, suffixed_path};
use crate::config::{ConfigOverrides, ScenarioConfig};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Classical,
    Noon,
    Distinguishable,
    Density,
    CompareDebroglie,
}

#[derive(clap::Args)]
pub struct SimulateArgs {
    /// Which observable to emit.
    #[arg(long, value_enum)]
    kind: Kind,

    #[command(flatten)]
    overrides: ConfigOverrides,

    /// Output file (stdout when omitted; required for compare-debroglie,
    /// which writes three files with .quantum/.matched-lens/.matched-rayleigh
    /// inserted before the extension).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Relative Gaussian noise on each sample (requires --noise-seed).
    #[arg(long, value_name = "FRAC", requires = "noise_seed")]
    noise_rel: Option<f64>,

    /// Seed for the noise generator.
    #[arg(long, value_name = "SEED")]
    noise_seed: Option<u64>,

    /// Density plane position (mm); defaults to the focal position.
    #[arg(long, value_name = "MM")]
    density_z_mm: Option<f64>,

    /// Density grid samples per axis.
    #[arg(long, value_name = "N", default_value_t = 201)]
    density_samples: usize,
}

pub fn run(args: SimulateArgs) -> Result<(), CliError> {
    let cfg = ScenarioConfig::resolve(&args.overrides)?;
    let noon = cfg.noon()?;
    let preamble = cfg.preamble();

    match args.kind {
        Kind::Classical | Kind::Noon | Kind::Distinguishable => {
            let zs = cfg.z_grid();
            let mut samples: Vec<CurveSample> = zs
                .par_iter()
                .map(|&z| {
                    let value = match args.kind {
                        Kind::Classical => Ok(classical_signal(&noon, z)),
                        Kind::Noon => Ok(noon_signal(&noon, z)),
                        Kind::Distinguishable => distinguishable_pair_signal(&noon, z),
                        _ => unreachable!(),
                    };
                    value.map(|value| CurveSample { z, value })
                })
                .collect::<Result<_, _>>()
                .map_err(CliError::from)?;
            if let (Some(rel), Some(seed)) = (args.noise_rel, args.noise_seed) {
                apply_noise(&mut samples, rel, seed);
            }
            let mut text = Vec::new();
            write_curve_csv(&samples, &preamble, &mut text).map_err(CliError::from)?;
            emit(args.out.as_deref(), &String::from_utf8(text).expect("utf8"))
        }
        Kind::Density => {
            if args.density_samples < 2 {
                return Err(CliError::Config("density grid needs at least 2 samples".into()));
            }
            let z = args.density_z_mm.map_or(noon.beam.focal_position, |mm| mm * 1e-3);
            let half_width = 3.0 * superposition_radius(&noon, z);
            let map = twophoton_samepos_density_map(&noon, half_width, args.density_samples, z)
                .map_err(CliError::from)?;
            let mut text = Vec::new();
            write_density_csv(&map, &preamble, &mut text).map_err(CliError::from)?;
            emit(args.out.as_deref(), &String::from_utf8(text).expect("utf8"))
        }
        Kind::CompareDebroglie => {
            let out = args.out.as_deref().ok_or_else(|| {
                CliError::Config("--out is required for compare-debroglie (three files)".into())
            })?;
            let zs = cfg.z_grid();
            let (quantum, lens) =
                debroglie_comparison(&noon, DebroglieScenario::MatchedLensRadius, &zs)
                    .map_err(CliError::from)?;
            let (_, rayleigh) =
                debroglie_comparison(&noon, DebroglieScenario::MatchedRayleighDoubledOrder, &zs)
                    .map_err(CliError::from)?;
            for curve in [&quantum, &lens, &rayleigh] {
                write_labeled(curve, &preamble, out)?;
            }
            Ok(())
        }
    }
}

fn write_labeled(
    curve: &LabeledCurve,
    preamble: &[String],
    base: &std::path::Path,
) -> Result<(), CliError> {
    let mut lines = preamble.to_vec();
    lines.push(format!("# label: {}", curve.label));
    let mut text = Vec::new();
    write_curve_csv(&curve.samples, &lines, &mut text).map_err(CliError::from)?;
    let path = suffixed_path(base, &curve.label);
    emit(Some(&path), &String::from_utf8(text).expect("utf8"))
}

/// Multiplicative Gaussian noise, clamped at zero (signals are intensities).
fn apply_noise(samples: &mut [CurveSample], rel: f64, seed: u64) {
    use rand_chacha::rand_core::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = || {
        let u1 =
            ((rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)).max(f64::MIN_POSITIVE);
        let u2 = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    for s in samples {
        s.value = (s.value * (1.0 + rel * gauss())).max(0.0);
    }
}
