//! Resolving model names and parameter flags into ready-to-run generators,
//! including deriving the square ratio law and rectangle perimeter law from
//! Boolean realisations when no law file is given.

use std::fmt;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use randset::imagery::{extract_components, BinaryImage, ExtractionConfig};
use randset::models::{
    empirical_ratio_distribution, simulate_boolean, simulate_ellipses, simulate_rectangles,
    simulate_reduced_boolean, simulate_squares, BooleanParams, CountLaw, EllipseParams,
    EmpiricalLaw, OrientationLaw, RadiusLaw, SemiAxesLaw, Window,
};
use randset::rng::child_seed;

use crate::config::Settings;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelName {
    Boolean,
    ReducedBoolean,
    Squares,
    Rectangles,
    Ellipses,
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ModelName::Boolean => "boolean",
            ModelName::ReducedBoolean => "reduced-boolean",
            ModelName::Squares => "squares",
            ModelName::Rectangles => "rectangles",
            ModelName::Ellipses => "ellipses",
        };
        f.write_str(name)
    }
}

/// Model parameter flags shared by `simulate` and `experiment`. Anything not
/// given falls back to the config file and then to the defaults noted here.
#[derive(Debug, Clone, Args)]
pub struct ModelOpts {
    /// Germ intensity per pixel^2 [default 55/418^2]
    #[arg(long)]
    pub intensity: Option<f64>,
    /// Lower bound of the uniform disc-radius law [default 3]
    #[arg(long)]
    pub radius_min: Option<f64>,
    /// Upper bound of the uniform disc-radius law [default 9]
    #[arg(long)]
    pub radius_max: Option<f64>,
    /// Constant disc radius; overrides the uniform law
    #[arg(long)]
    pub radius_const: Option<f64>,
    /// Component deletion probability of the reduced model [default 0.5]
    #[arg(long)]
    pub p_delete: Option<f64>,
    /// Empirical perimeter/area ratio law file (squares)
    #[arg(long)]
    pub ratio_law: Option<PathBuf>,
    /// Empirical perimeter law file (rectangles)
    #[arg(long)]
    pub perimeter_law: Option<PathBuf>,
    /// Fixed rectangle side in pixels [default 4]
    #[arg(long)]
    pub fixed_side: Option<u32>,
    /// Poisson mean of the shape count per realisation [default 40]
    #[arg(long)]
    pub count_mean: Option<f64>,
    /// Fixed shape count per realisation; overrides the Poisson law
    #[arg(long)]
    pub count_fixed: Option<usize>,
    /// Observation window as WIDTHxHEIGHT [default 400x400]
    #[arg(long)]
    pub window: Option<String>,
    /// Lower bound of the first ellipse semi-axis [default 8]
    #[arg(long)]
    pub ax_min: Option<f64>,
    /// Upper bound of the first ellipse semi-axis [default 12]
    #[arg(long)]
    pub ax_max: Option<f64>,
    /// Lower bound of the second ellipse semi-axis [default 2]
    #[arg(long)]
    pub bx_min: Option<f64>,
    /// Upper bound of the second ellipse semi-axis [default 4]
    #[arg(long)]
    pub bx_max: Option<f64>,
    /// Fixed ellipse orientation in radians; omit for uniform over [0, pi)
    #[arg(long)]
    pub orientation: Option<f64>,
}

/// A fully resolved generator.
pub enum ModelSpec {
    Boolean(BooleanParams),
    Reduced(BooleanParams, f64),
    Squares(EmpiricalLaw, CountLaw),
    Rectangles(EmpiricalLaw, CountLaw, u32),
    Ellipses(EllipseParams),
}

impl ModelSpec {
    pub fn simulate(&self, w: Window, seed: u64) -> randset::Result<BinaryImage> {
        match self {
            ModelSpec::Boolean(p) => simulate_boolean(p, w, seed),
            ModelSpec::Reduced(p, q) => simulate_reduced_boolean(p, w, seed, *q),
            ModelSpec::Squares(law, count) => simulate_squares(law, count, w, seed),
            ModelSpec::Rectangles(law, count, side) => {
                simulate_rectangles(law, count, w, seed, *side)
            }
            ModelSpec::Ellipses(p) => simulate_ellipses(p, w, seed),
        }
    }

    /// The derived law, for writing a provenance copy next to the outputs.
    pub fn law(&self) -> Option<&EmpiricalLaw> {
        match self {
            ModelSpec::Squares(law, _) | ModelSpec::Rectangles(law, _, _) => Some(law),
            _ => None,
        }
    }
}

pub fn parse_window(raw: &str) -> Result<Window, CliError> {
    let (w, h) = raw
        .split_once(['x', 'X'])
        .ok_or_else(|| CliError::Usage(format!("window `{raw}`: expected WIDTHxHEIGHT")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<u32>()
            .map_err(|_| CliError::Usage(format!("window `{raw}`: bad dimension `{s}`")))
    };
    Ok(Window::new(parse(w)?, parse(h)?))
}

pub fn resolve_window(settings: &Settings, opts: &ModelOpts) -> Result<Window, CliError> {
    let raw = settings.resolve("window", opts.window.clone(), "400x400".to_string())?;
    parse_window(&raw)
}

fn resolve_boolean(settings: &Settings, opts: &ModelOpts) -> Result<BooleanParams, CliError> {
    let intensity =
        settings.resolve("intensity", opts.intensity, 55.0 / (418.0 * 418.0))?;
    let radius_law = match settings.resolve_opt("radius-const", opts.radius_const)? {
        Some(r0) => RadiusLaw::Constant(r0),
        None => RadiusLaw::Uniform {
            min: settings.resolve("radius-min", opts.radius_min, 3.0)?,
            max: settings.resolve("radius-max", opts.radius_max, 9.0)?,
        },
    };
    Ok(BooleanParams {
        intensity,
        radius_law,
    })
}

fn resolve_count(settings: &Settings, opts: &ModelOpts) -> Result<CountLaw, CliError> {
    match settings.resolve_opt("count-fixed", opts.count_fixed)? {
        Some(n) => Ok(CountLaw::Fixed(n)),
        None => Ok(CountLaw::Poisson(settings.resolve(
            "count-mean",
            opts.count_mean,
            40.0,
        )?)),
    }
}

fn load_law(path: &PathBuf) -> Result<EmpiricalLaw, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.clone(), e))?;
    EmpiricalLaw::parse(&text).map_err(|e| CliError::InFile(path.clone(), e))
}

/// Paths resolve through their string form; `Display` is not implemented
/// for `PathBuf`.
fn resolve_path(
    settings: &Settings,
    key: &str,
    flag: &Option<PathBuf>,
) -> Result<Option<PathBuf>, CliError> {
    Ok(settings
        .resolve_opt(key, flag.as_ref().map(|p| p.display().to_string()))?
        .map(PathBuf::from))
}

/// Context for deriving laws when no file is supplied: Boolean source
/// realisations under dedicated seed streams.
pub struct LawDerivation {
    pub realisations: usize,
    pub seed: u64,
    pub window: Window,
    pub extraction: ExtractionConfig,
}

const RATIO_LAW_STREAM: u64 = 3_000_000;
const PERIMETER_LAW_STREAM: u64 = 3_100_000;

fn derive_ratio_law(
    boolean: &BooleanParams,
    ctx: &LawDerivation,
) -> Result<EmpiricalLaw, CliError> {
    let realisations: Vec<BinaryImage> = (0..ctx.realisations as u64)
        .map(|i| simulate_boolean(boolean, ctx.window, child_seed(ctx.seed, RATIO_LAW_STREAM + i)))
        .collect::<randset::Result<_>>()
        .map_err(CliError::Lib)?;
    empirical_ratio_distribution(&realisations, &ctx.extraction).map_err(CliError::Lib)
}

/// Perimeter law of the matching square model: simulate squares from the
/// ratio law, pool their boundary lengths.
fn derive_perimeter_law(
    ratio_law: &EmpiricalLaw,
    count: &CountLaw,
    ctx: &LawDerivation,
) -> Result<EmpiricalLaw, CliError> {
    let mut perims = Vec::new();
    for i in 0..ctx.realisations as u64 {
        let img = simulate_squares(
            ratio_law,
            count,
            ctx.window,
            child_seed(ctx.seed, PERIMETER_LAW_STREAM + i),
        )
        .map_err(CliError::Lib)?;
        for c in extract_components(&img, &ctx.extraction) {
            perims.push(c.boundary.len() as f64);
        }
    }
    EmpiricalLaw::new(perims).map_err(CliError::Lib)
}

/// Builds the generator for `name`. `derive` enables law construction from
/// Boolean realisations; `simulate` passes `None` and demands law files.
pub fn resolve_model(
    name: ModelName,
    settings: &Settings,
    opts: &ModelOpts,
    derive: Option<&LawDerivation>,
) -> Result<ModelSpec, CliError> {
    match name {
        ModelName::Boolean => Ok(ModelSpec::Boolean(resolve_boolean(settings, opts)?)),
        ModelName::ReducedBoolean => {
            let p = resolve_boolean(settings, opts)?;
            let q = settings.resolve("p-delete", opts.p_delete, 0.5)?;
            Ok(ModelSpec::Reduced(p, q))
        }
        ModelName::Squares => {
            let count = resolve_count(settings, opts)?;
            let law = match resolve_path(settings, "ratio-law", &opts.ratio_law)? {
                Some(path) => load_law(&path)?,
                None => match derive {
                    Some(ctx) => {
                        let boolean = resolve_boolean(settings, opts)?;
                        derive_ratio_law(&boolean, ctx)?
                    }
                    None => {
                        return Err(CliError::Usage(
                            "squares need --ratio-law FILE (empirical perimeter/area law)"
                                .into(),
                        ))
                    }
                },
            };
            Ok(ModelSpec::Squares(law, count))
        }
        ModelName::Rectangles => {
            let count = resolve_count(settings, opts)?;
            let side = settings.resolve("fixed-side", opts.fixed_side, 4)?;
            let law = match resolve_path(settings, "perimeter-law", &opts.perimeter_law)? {
                Some(path) => load_law(&path)?,
                None => match derive {
                    Some(ctx) => {
                        let ratio_law =
                            match resolve_path(settings, "ratio-law", &opts.ratio_law)? {
                                Some(path) => load_law(&path)?,
                                None => {
                                    let boolean = resolve_boolean(settings, opts)?;
                                    derive_ratio_law(&boolean, ctx)?
                                }
                            };
                        derive_perimeter_law(&ratio_law, &count, ctx)?
                    }
                    None => {
                        return Err(CliError::Usage(
                            "rectangles need --perimeter-law FILE (empirical perimeter law)"
                                .into(),
                        ))
                    }
                },
            };
            Ok(ModelSpec::Rectangles(law, count, side))
        }
        ModelName::Ellipses => {
            let intensity =
                settings.resolve("intensity", opts.intensity, 55.0 / (418.0 * 418.0))?;
            let semi_axes_law = SemiAxesLaw::Uniform {
                a_min: settings.resolve("ax-min", opts.ax_min, 8.0)?,
                a_max: settings.resolve("ax-max", opts.ax_max, 12.0)?,
                b_min: settings.resolve("bx-min", opts.bx_min, 2.0)?,
                b_max: settings.resolve("bx-max", opts.bx_max, 4.0)?,
            };
            let orientation_law =
                match settings.resolve_opt("orientation", opts.orientation)? {
                    Some(theta) => OrientationLaw::Fixed(theta),
                    None => OrientationLaw::UniformHalfCircle,
                };
            Ok(ModelSpec::Ellipses(EllipseParams {
                intensity,
                semi_axes_law,
                orientation_law,
            }))
        }
    }
}
