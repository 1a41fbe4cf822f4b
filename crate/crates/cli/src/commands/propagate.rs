use clap::ValueEnum;
use std::path::PathBuf;

use gouysim_core::beamgeom::LGModeSpec;
use gouysim_core::propagation::{asm_propagate, GridSpec, KzModel, SampledField};

use crate::commands::emit;
use crate::config::{ConfigOverrides, ScenarioConfig};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Exact,
    Paraxial,
}

#[derive(clap::Args)]
pub struct PropagateArgs {
    #[command(flatten)]
    overrides: ConfigOverrides,

    /// Azimuthal index; only ell = 0 fields can be evaluated.
    #[arg(long, default_value_t = 0)]
    ell: i32,

    /// Propagation distance from the focal plane (mm).
    #[arg(long, value_name = "MM", default_value_t = 0.0)]
    dz_mm: f64,

    /// Grid points per axis (power of two, >= 64).
    #[arg(long, value_name = "N", default_value_t = 1024)]
    grid: usize,

    /// Full window width (um); defaults to 8x the largest effective mode
    /// radius over both planes.
    #[arg(long, value_name = "UM")]
    window_um: Option<f64>,

    /// Longitudinal wavevector model.
    #[arg(long, value_enum, default_value_t = Model::Exact)]
    model: Model,

    /// Field CSV output path (the JSON sidecar gets a .meta.json suffix).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

pub fn run(args: PropagateArgs) -> Result<(), CliError> {
    let cfg = ScenarioConfig::resolve(&args.overrides)?;
    let beam = cfg.beam()?;
    if args.ell != 0 {
        return Err(CliError::Config(format!(
            "field evaluation requires ell = 0, got {}",
            args.ell
        )));
    }
    let mode = LGModeSpec::radial(cfg.p, beam);
    let z0 = beam.focal_position;
    let dz = args.dz_mm * 1e-3;

    let grid = match args.window_um {
        Some(um) => GridSpec::new(args.grid, um * 1e-6),
        None => GridSpec::for_mode_with_n(mode.order(), &beam, &[z0, z0 + dz], args.grid),
    }
    .map_err(|e| CliError::Config(e.to_string()))?;

    let field = SampledField::sample_lg(&mode, &grid, z0).map_err(CliError::from)?;
    let model = match args.model {
        Model::Exact => KzModel::Exact,
        Model::Paraxial => KzModel::Paraxial,
    };
    let propagated = asm_propagate(&field, dz, model).map_err(CliError::from)?;

    let mut text = Vec::new();
    for line in cfg.preamble() {
        use std::io::Write;
        writeln!(&mut text, "{line}").expect("in-memory write");
    }
    propagated.write_csv(&mut text).map_err(CliError::from)?;
    emit(Some(&args.out), &String::from_utf8(text).expect("utf8"))?;

    let sidecar = args.out.with_extension("meta.json");
    let mut meta = serde_json::to_value(propagated.metadata()).expect("metadata");
    meta.as_object_mut()
        .expect("object")
        .insert("gouysim_config".into(), serde_json::to_value(&cfg).expect("config"));
    let mut meta_text = serde_json::to_string_pretty(&meta).expect("json");
    meta_text.push('\n');
    emit(Some(&sidecar), &meta_text)
}
