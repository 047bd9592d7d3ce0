//! One function per subcommand. Each resolves its settings, does the work,
//! writes its outputs plus the `effective-config.txt` echo, and maps every
//! failure onto a [`CliError`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use randset::descriptors::{describe_component, descriptors_to_csv, ShapeDescriptor};
use randset::imagery::{
    encode_pbm, extract_components, load_image_file, BinaryImage, Component, Connectivity,
    ExtractionConfig,
};
use randset::permtest::{
    bootstrap_pooled_outcomes, joint_similarity_test, outcome_csv, pairwise_matrix, pvalues_csv,
    sample_components, ImageComponents, PermutationConfig, TestOutcome,
};
use randset::rng::child_seed;
use rayon::prelude::*;

use crate::config::Settings;
use crate::models::{resolve_model, resolve_window, LawDerivation, ModelName};
use crate::{
    CliError, DescribeArgs, ExperimentArgs, ExtractOpts, HistArgs, MatrixArgs, ShapeOpts,
    SimulateArgs, TestArgs, TestOpts,
};

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn load_one(path: &Path, threshold: u8, invert: bool) -> Result<BinaryImage, CliError> {
    let img = load_image_file(path, threshold)
        .map_err(|e| CliError::InFile(path.to_path_buf(), e))?;
    Ok(if invert { img.inverted() } else { img })
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".to_string())
}

fn resolve_extraction(
    settings: &Settings,
    opts: &ExtractOpts,
) -> Result<ExtractionConfig, CliError> {
    let raw = settings.resolve("connectivity", opts.connectivity.clone(), "eight".to_string())?;
    let connectivity = match raw.as_str() {
        "four" | "4" => Connectivity::Four,
        "eight" | "8" => Connectivity::Eight,
        other => {
            return Err(CliError::Usage(format!(
                "connectivity `{other}`: expected four or eight"
            )))
        }
    };
    Ok(ExtractionConfig {
        connectivity,
        min_pixels: settings.resolve("min-pixels", opts.min_pixels, 4)?,
        discard_border: settings.resolve_bool("discard-border", opts.discard_border)?,
    })
}

fn resolve_threshold(settings: &Settings, opts: &ExtractOpts) -> Result<(u8, bool), CliError> {
    let threshold = settings.resolve("threshold", opts.threshold, 128u8)?;
    let invert = settings.resolve_bool("invert", opts.invert)?;
    Ok((threshold, invert))
}

fn resolve_restrict(settings: &Settings, opts: &ShapeOpts) -> Result<bool, CliError> {
    let raw = settings.resolve("restrict", opts.restrict.clone(), "component".to_string())?;
    match raw.as_str() {
        "component" => Ok(true),
        "image" => Ok(false),
        other => Err(CliError::Usage(format!(
            "restrict `{other}`: expected component or image"
        ))),
    }
}

struct ShapeParams {
    radius: u32,
    bins: usize,
    restrict: bool,
}

fn resolve_shape(settings: &Settings, opts: &ShapeOpts) -> Result<ShapeParams, CliError> {
    Ok(ShapeParams {
        radius: settings.resolve("radius", opts.radius, 5u32)?,
        bins: settings.resolve("bins", opts.bins, 10usize)?,
        restrict: resolve_restrict(settings, opts)?,
    })
}

fn resolve_perm_config(
    settings: &Settings,
    test: &TestOpts,
    shape: &ShapeParams,
    seed: u64,
) -> Result<PermutationConfig, CliError> {
    Ok(PermutationConfig {
        s: settings.resolve("permutations", test.permutations, 999usize)?,
        seed,
        depth: settings.resolve("depth", test.depth, 2usize)?,
        bins: shape.bins,
        radius: shape.radius,
    })
}

pub fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let settings = Settings::load(args.common.config.as_deref())?;
    let seed = settings.seed(args.common.seed)?;
    let n = settings.resolve("n", args.n, 1usize)?;
    let window = resolve_window(&settings, &args.model_opts)?;
    let spec = resolve_model(args.model, &settings, &args.model_opts, None)?;
    let out = settings.out_dir(args.common.out.clone())?;

    for i in 0..n {
        let real_seed = child_seed(seed, i as u64);
        let img = spec.simulate(window, real_seed)?;
        let stem = format!("real_{i:03}");
        write_file(&out.join(format!("{stem}.pbm")), &encode_pbm(&img))?;
        let meta = format!(
            "foreground = {}\nindex = {}\nmodel = {}\nseed = {}\nwindow = {}x{}\n",
            img.count_foreground(),
            i,
            args.model,
            real_seed,
            window.width,
            window.height,
        );
        write_file(&out.join(format!("{stem}.txt")), meta.as_bytes())?;
    }
    settings.write_echo(&out, "simulate")
}

pub fn cmd_describe(args: DescribeArgs) -> Result<(), CliError> {
    let settings = Settings::load(args.common.config.as_deref())?;
    let shape = resolve_shape(&settings, &args.shape)?;
    let extraction = resolve_extraction(&settings, &args.extract)?;
    let (threshold, invert) = resolve_threshold(&settings, &args.extract)?;
    let out = settings.out_dir(args.common.out.clone())?;

    for path in &args.images {
        let img = load_one(path, threshold, invert)?;
        let comps = extract_components(&img, &extraction);
        if comps.is_empty() {
            log::warn!(
                "{}: no components of at least {} pixels",
                path.display(),
                extraction.min_pixels
            );
        }
        let mut rows = Vec::with_capacity(comps.len());
        for comp in &comps {
            let d = describe_component(&img, comp, shape.radius, shape.bins, shape.restrict)
                .map_err(|e| CliError::InFile(path.clone(), e))?;
            rows.push((comp.id, d));
        }
        let csv = descriptors_to_csv(&rows, shape.bins);
        let name = format!("{}_descriptors.csv", file_stem(path));
        write_file(&out.join(name), csv.as_bytes())?;
    }
    settings.write_echo(&out, "describe")
}

/// Components of several images pooled into one sample space. Pool entries
/// are renumbered so `comp.id` indexes `source`, which maps back to the
/// owning image for occupancy probes.
struct ComponentPool {
    images: Vec<BinaryImage>,
    comps: Vec<Component>,
    source: Vec<usize>,
}

fn pool_side(
    paths: &[PathBuf],
    threshold: u8,
    invert: bool,
    extraction: &ExtractionConfig,
) -> Result<ComponentPool, CliError> {
    let mut pool = ComponentPool {
        images: Vec::with_capacity(paths.len()),
        comps: Vec::new(),
        source: Vec::new(),
    };
    for path in paths {
        let img = load_one(path, threshold, invert)?;
        for mut comp in extract_components(&img, extraction) {
            comp.id = pool.comps.len() as u32;
            pool.source.push(pool.images.len());
            pool.comps.push(comp);
        }
        pool.images.push(img);
    }
    Ok(pool)
}

fn describe_pooled(
    pool: &ComponentPool,
    comps: &[Component],
    shape: &ShapeParams,
) -> Result<Vec<ShapeDescriptor>, CliError> {
    comps
        .iter()
        .map(|c| {
            let img = &pool.images[pool.source[c.id as usize]];
            describe_component(img, c, shape.radius, shape.bins, shape.restrict)
                .map_err(CliError::Lib)
        })
        .collect()
}

pub fn cmd_test(args: TestArgs) -> Result<(), CliError> {
    let settings = Settings::load(args.common.config.as_deref())?;
    let seed = settings.seed(args.common.seed)?;
    let k = settings.resolve("k", args.k, 10usize)?;
    let shape = resolve_shape(&settings, &args.shape)?;
    let extraction = resolve_extraction(&settings, &args.extract)?;
    let (threshold, invert) = resolve_threshold(&settings, &args.extract)?;
    let cfg = resolve_perm_config(&settings, &args.test, &shape, child_seed(seed, 2))?;
    let out = settings.out_dir(args.common.out.clone())?;

    let pool_a = pool_side(&args.side_a, threshold, invert, &extraction)?;
    let pool_b = pool_side(&args.side_b, threshold, invert, &extraction)?;

    // k = 0 keeps every component; otherwise draw k (or all, when fewer).
    let take = |pool: &ComponentPool, stream: u64| -> Result<Vec<Component>, CliError> {
        if k == 0 {
            Ok(pool.comps.clone())
        } else {
            sample_components(&pool.comps, k, child_seed(seed, stream)).map_err(CliError::Lib)
        }
    };
    let dx = describe_pooled(&pool_a, &take(&pool_a, 0)?, &shape)?;
    let dy = describe_pooled(&pool_b, &take(&pool_b, 1)?, &shape)?;

    let outcome = joint_similarity_test(&dx, &dy, &cfg)?;
    print!("{}", outcome_report(&outcome));
    write_file(&out.join("outcome.csv"), outcome_csv(&outcome).as_bytes())?;
    settings.write_echo(&out, "test")
}

fn outcome_report(o: &TestOutcome) -> String {
    format!(
        "n_ratio_obs = {}\nn_curve_obs = {}\np_ratio = {}\np_curve = {}\np_joint = {}\ns_used = {}\n",
        o.n_ratio_obs, o.n_curve_obs, o.p_ratio, o.p_curve, o.p_joint, o.s_used
    )
}

fn law_filename(name: ModelName) -> Option<&'static str> {
    match name {
        ModelName::Squares => Some("ratio_law.txt"),
        ModelName::Rectangles => Some("perimeter_law.txt"),
        _ => None,
    }
}

pub fn cmd_experiment(args: ExperimentArgs) -> Result<(), CliError> {
    let settings = Settings::load(args.common.config.as_deref())?;
    let seed = settings.seed(args.common.seed)?;
    let pairs = settings.resolve("pairs", args.pairs, 100usize)?;
    let bootstrap = settings.resolve_bool("bootstrap", args.bootstrap)?;
    let k = settings.resolve("k", args.k, if bootstrap { 100usize } else { 10 })?;
    let shape = resolve_shape(&settings, &args.shape)?;
    let extraction = resolve_extraction(&settings, &args.extract)?;
    let window = resolve_window(&settings, &args.model_opts)?;
    let out = settings.out_dir(args.common.out.clone())?;

    let needs_law = |m: ModelName| law_filename(m).is_some();
    let ctx = if needs_law(args.model_a) || needs_law(args.model_b) {
        Some(LawDerivation {
            realisations: settings.resolve("law-realisations", args.law_realisations, 25usize)?,
            seed,
            window,
            extraction,
        })
    } else {
        None
    };
    let spec_a = resolve_model(args.model_a, &settings, &args.model_opts, ctx.as_ref())?;
    let spec_b = resolve_model(args.model_b, &settings, &args.model_opts, ctx.as_ref())?;
    for (name, spec) in [(args.model_a, &spec_a), (args.model_b, &spec_b)] {
        if let (Some(file), Some(law)) = (law_filename(name), spec.law()) {
            write_file(&out.join(file), law.to_text().as_bytes())?;
        }
    }

    let outcomes: Vec<TestOutcome> = if bootstrap {
        let realisations = settings.resolve("realisations", args.realisations, 100usize)?;
        let cfg = resolve_perm_config(&settings, &args.test, &shape, child_seed(seed, 6_000_000))?;
        let build_pool = |spec: &crate::models::ModelSpec,
                          stream: u64|
         -> Result<Vec<ShapeDescriptor>, CliError> {
            let mut pool = Vec::new();
            for i in 0..realisations as u64 {
                let img = spec.simulate(window, child_seed(seed, stream + i))?;
                for comp in extract_components(&img, &extraction) {
                    pool.push(
                        describe_component(&img, &comp, shape.radius, shape.bins, shape.restrict)
                            .map_err(CliError::Lib)?,
                    );
                }
            }
            Ok(pool)
        };
        let pool_a = build_pool(&spec_a, 4_000_000)?;
        let pool_b = build_pool(&spec_b, 5_000_000)?;
        bootstrap_pooled_outcomes(&pool_a, &pool_b, k, pairs, &cfg)?
    } else {
        let base = resolve_perm_config(&settings, &args.test, &shape, 0)?;
        (0..pairs as u64)
            .into_par_iter()
            .map(|t| -> Result<TestOutcome, CliError> {
                let ia = spec_a.simulate(window, child_seed(seed, 4 * t))?;
                let ib = spec_b.simulate(window, child_seed(seed, 4 * t + 1))?;
                let ca = extract_components(&ia, &extraction);
                let cb = extract_components(&ib, &extraction);
                let sa = if k == 0 {
                    ca
                } else {
                    sample_components(&ca, k, child_seed(seed, 4 * t + 2))?
                };
                let sb = if k == 0 {
                    cb
                } else {
                    sample_components(&cb, k, child_seed(seed, 4 * t + 3))?
                };
                let describe = |img: &BinaryImage, comps: &[Component]| {
                    comps
                        .iter()
                        .map(|c| {
                            describe_component(img, c, shape.radius, shape.bins, shape.restrict)
                        })
                        .collect::<randset::Result<Vec<_>>>()
                };
                let dx = describe(&ia, &sa)?;
                let dy = describe(&ib, &sb)?;
                let cfg = PermutationConfig {
                    seed: child_seed(seed, 1_000_000 + t),
                    ..base
                };
                joint_similarity_test(&dx, &dy, &cfg).map_err(CliError::Lib)
            })
            .collect::<Result<_, _>>()?
    };

    write_file(&out.join("pvalues.csv"), pvalues_csv(&outcomes).as_bytes())?;
    let mut pj: Vec<f64> = outcomes.iter().map(|o| o.p_joint).collect();
    pj.sort_by(f64::total_cmp);
    let median = (pj[(pj.len() - 1) / 2] + pj[pj.len() / 2]) / 2.0;
    let below = pj.iter().filter(|&&p| p < 0.05).count();
    println!("tests = {}", pj.len());
    println!("median_p_joint = {median}");
    println!(
        "frac_p_joint_below_0.05 = {}",
        below as f64 / pj.len() as f64
    );
    settings.write_echo(&out, "experiment")
}

pub fn cmd_matrix(args: MatrixArgs) -> Result<(), CliError> {
    let settings = Settings::load(args.common.config.as_deref())?;
    let seed = settings.seed(args.common.seed)?;
    let k = settings.resolve("k", args.k, 20usize)?;
    let repeats = settings.resolve("repeats", args.repeats, 100usize)?;
    let shape = resolve_shape(&settings, &args.shape)?;
    let extraction = resolve_extraction(&settings, &args.extract)?;
    let (threshold, invert) = resolve_threshold(&settings, &args.extract)?;
    let cfg = resolve_perm_config(&settings, &args.test, &shape, seed)?;
    let out = settings.out_dir(args.common.out.clone())?;

    let mut paths: Vec<PathBuf> = fs::read_dir(&args.dir)
        .map_err(|e| CliError::Io(args.dir.clone(), e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .map(|ext| {
                    let ext = ext.to_string_lossy().to_lowercase();
                    ext == "pbm" || ext == "png"
                })
                .unwrap_or(false)
        })
        .collect();
    paths.sort();

    let mut items = Vec::with_capacity(paths.len());
    for path in &paths {
        let image = load_one(path, threshold, invert)?;
        let components = extract_components(&image, &extraction);
        items.push(ImageComponents {
            label: file_stem(path),
            image,
            components,
        });
    }

    let matrix = pairwise_matrix(&items, k, repeats, &cfg, shape.restrict)?;
    write_file(&out.join("mean_p.csv"), matrix.mean_p_csv().as_bytes())?;
    write_file(
        &out.join("count_below_05.csv"),
        matrix.count_csv().as_bytes(),
    )?;
    println!("images = {}", items.len());
    settings.write_echo(&out, "matrix")
}

pub fn cmd_hist(args: HistArgs) -> Result<(), CliError> {
    let settings = Settings::load(args.common.config.as_deref())?;
    let column = args.column.unwrap_or_else(|| "p_joint".to_string());
    let bins = settings.resolve("bins", args.bins, 20usize)?;
    if bins == 0 {
        return Err(CliError::Usage("bins must be at least 1".into()));
    }
    let out = settings.out_dir(args.common.out.clone())?;

    let text =
        fs::read_to_string(&args.input).map_err(|e| CliError::Io(args.input.clone(), e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Lib(randset::Error::EmptyInput("csv".into())))?;
    let col = header
        .split(',')
        .position(|h| h.trim() == column)
        .ok_or_else(|| {
            CliError::Usage(format!("column `{column}` not in header `{header}`"))
        })?;

    let mut counts = vec![0usize; bins];
    let mut total = 0usize;
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cell = line.split(',').nth(col).unwrap_or("").trim();
        let v: f64 = cell.parse().map_err(|_| {
            CliError::InFile(
                args.input.clone(),
                randset::Error::Decode {
                    offset: None,
                    reason: format!("row {}: bad value `{cell}` in column {column}", lineno + 2),
                },
            )
        })?;
        let idx = ((v * bins as f64).floor() as isize).clamp(0, bins as isize - 1) as usize;
        counts[idx] += 1;
        total += 1;
    }
    if total == 0 {
        return Err(CliError::Lib(randset::Error::EmptyInput(format!(
            "column {column} of {}",
            args.input.display()
        ))));
    }

    let svg = render_histogram_svg(&counts, &column, total);
    write_file(&out.join("hist.svg"), svg.as_bytes())?;
    settings.write_echo(&out, "hist")
}

/// Bar chart of `counts` over the unit interval, sized 640x400.
fn render_histogram_svg(counts: &[usize], column: &str, total: usize) -> String {
    let (width, height) = (640.0, 400.0);
    let (left, right, top, bottom) = (50.0, 620.0, 40.0, 360.0);
    let max = counts.iter().copied().max().unwrap_or(1).max(1) as f64;
    let bar_w = (right - left) / counts.len() as f64;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">"
    );
    let _ = writeln!(
        svg,
        "  <rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{:.1}\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"14\">{column} ({total} values)</text>",
        (left + right) / 2.0
    );
    for (i, &c) in counts.iter().enumerate() {
        let h = (bottom - top) * c as f64 / max;
        let x = left + i as f64 * bar_w;
        let _ = writeln!(
            svg,
            "  <rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
             fill=\"#4878a8\" stroke=\"white\" stroke-width=\"0.5\"/>",
            x,
            bottom - h,
            bar_w,
            h
        );
    }
    let _ = writeln!(
        svg,
        "  <line x1=\"{left}\" y1=\"{bottom}\" x2=\"{right}\" y2=\"{bottom}\" stroke=\"black\"/>"
    );
    for (value, anchor) in [(0.0, "start"), (0.5, "middle"), (1.0, "end")] {
        let x = left + (right - left) * value;
        let _ = writeln!(
            svg,
            "  <text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"{anchor}\" \
             font-family=\"sans-serif\" font-size=\"12\">{value}</text>",
            bottom + 18.0
        );
    }
    let _ = writeln!(
        svg,
        "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" \
         font-size=\"12\">{}</text>",
        left - 6.0,
        top + 4.0,
        max as usize
    );
    svg.push_str("</svg>\n");
    svg
}
