//! Seeded simulators producing binary images of random sets.
//!
//! Four families are covered: the Boolean disc model (Poisson germs, random
//! radii), its reduced variant with independent component deletion, hard
//! packings of axis-aligned squares and rectangles whose size laws are
//! driven by empirical distributions, and a Boolean model of rotated
//! ellipses.
//!
//! Germs live in the observation window dilated by the largest possible
//! grain radius, so grains crossing the window edge appear with the right
//! frequency. Pixels are lattice points: a pixel (x, y) is foreground when
//! the point (x, y) lies inside a grain.
//!
//! Every simulator is a pure function of its parameters and a seed.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::imagery::{extract_components, label_components, BinaryImage, Connectivity, ExtractionConfig};
use crate::rng::stream_rng;

/// Observation window in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub width: u32,
    pub height: u32,
}

impl Default for Window {
    fn default() -> Self {
        Window {
            width: 400,
            height: 400,
        }
    }
}

impl Window {
    pub fn new(width: u32, height: u32) -> Self {
        Window { width, height }
    }

    fn validate(&self) -> Result<()> {
        if self.width < 1 || self.height < 1 {
            return Err(Error::InvalidParam("window must be at least 1x1".into()));
        }
        Ok(())
    }
}

/// Distribution of disc radii.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusLaw {
    Constant(f64),
    Uniform { min: f64, max: f64 },
}

impl RadiusLaw {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            RadiusLaw::Constant(r) => r.is_finite() && r >= 1.0,
            RadiusLaw::Uniform { min, max } => {
                min.is_finite() && max.is_finite() && min >= 1.0 && min <= max
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParam(format!(
                "radius law {self:?} invalid: radii must be finite and at least 1"
            )))
        }
    }

    fn upper_bound(&self) -> f64 {
        match *self {
            RadiusLaw::Constant(r) => r,
            RadiusLaw::Uniform { max, .. } => max,
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            RadiusLaw::Constant(r) => r,
            RadiusLaw::Uniform { min, max } => min + rng.gen::<f64>() * (max - min),
        }
    }
}

/// Boolean disc model parameters. `intensity` is the expected number of
/// germs per unit area of the dilated window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BooleanParams {
    pub intensity: f64,
    pub radius_law: RadiusLaw,
}

/// Number of objects to place.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CountLaw {
    Fixed(usize),
    Poisson(f64),
}

impl CountLaw {
    fn validate(&self) -> Result<()> {
        match *self {
            CountLaw::Fixed(_) => Ok(()),
            CountLaw::Poisson(mean) if mean.is_finite() && mean >= 0.0 => Ok(()),
            CountLaw::Poisson(mean) => Err(Error::InvalidParam(format!(
                "Poisson count mean {mean} must be finite and nonnegative"
            ))),
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> Result<u64> {
        match *self {
            CountLaw::Fixed(k) => Ok(k as u64),
            CountLaw::Poisson(mean) => poisson_count(mean, rng),
        }
    }
}

fn poisson_count(mean: f64, rng: &mut impl Rng) -> Result<u64> {
    if !(mean.is_finite() && mean >= 0.0) {
        return Err(Error::InvalidParam(format!(
            "Poisson mean {mean} must be finite and nonnegative"
        )));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    let law = Poisson::new(mean)
        .map_err(|e| Error::InvalidParam(format!("Poisson mean {mean}: {e}")))?;
    Ok(law.sample(rng) as u64)
}

/// Germs of one Boolean realisation: (cx, cy, radius) per disc, drawn in a
/// fixed order (count, then per germ cx, cy, radius) from stream 0 of the
/// seed.
fn boolean_germs(p: &BooleanParams, w: Window, rng: &mut impl Rng) -> Result<Vec<(f64, f64, f64)>> {
    if !(p.intensity.is_finite() && p.intensity >= 0.0) {
        return Err(Error::InvalidParam(format!(
            "intensity {} must be finite and nonnegative",
            p.intensity
        )));
    }
    p.radius_law.validate()?;
    w.validate()?;
    let margin = p.radius_law.upper_bound().ceil();
    let ext_w = w.width as f64 + 2.0 * margin;
    let ext_h = w.height as f64 + 2.0 * margin;
    let n = poisson_count(p.intensity * ext_w * ext_h, rng)?;
    let mut germs = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let cx = rng.gen::<f64>() * ext_w - margin;
        let cy = rng.gen::<f64>() * ext_h - margin;
        let r = p.radius_law.sample(rng);
        germs.push((cx, cy, r));
    }
    Ok(germs)
}

/// Simulates one Boolean disc realisation.
pub fn simulate_boolean(p: &BooleanParams, w: Window, seed: u64) -> Result<BinaryImage> {
    let mut rng = stream_rng(seed, 0);
    let germs = boolean_germs(p, w, &mut rng)?;
    let mut img = BinaryImage::new(w.width, w.height);
    for (cx, cy, r) in germs {
        stamp_disc(&mut img, cx, cy, r);
    }
    Ok(img)
}

/// Boolean realisation with independent component deletion.
///
/// The base image is generated exactly as [`simulate_boolean`] with the
/// same seed (deletion coins come from a separate stream), each connected
/// component is then kept with probability 1 − `p_delete`. With
/// `p_delete = 0` the output equals the plain Boolean realisation.
pub fn simulate_reduced_boolean(
    p: &BooleanParams,
    w: Window,
    seed: u64,
    p_delete: f64,
) -> Result<BinaryImage> {
    if !(0.0..=1.0).contains(&p_delete) {
        return Err(Error::InvalidParam(format!(
            "deletion probability {p_delete} outside [0,1]"
        )));
    }
    let base = simulate_boolean(p, w, seed)?;
    let comps = label_components(&base, Connectivity::Eight);
    let mut coins = stream_rng(seed, 1);
    let mut img = BinaryImage::new(w.width, w.height);
    for comp in &comps {
        // u in [0,1), so p_delete = 1 removes everything
        let keep = coins.gen::<f64>() >= p_delete;
        if keep {
            for px in &comp.pixels {
                img.set(px.x, px.y, true);
            }
        }
    }
    Ok(img)
}

/// Discrete empirical distribution: sampling returns one of the observed
/// values uniformly at random.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalLaw {
    values: Vec<f64>,
}

impl EmpiricalLaw {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("empirical law values".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParam(
                "empirical law values must be finite".into(),
            ));
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(EmpiricalLaw { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        self.values[rng.gen_range(0..self.values.len())]
    }

    /// New law with `f` applied to every value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        EmpiricalLaw::new(self.values.iter().map(|&v| f(v)).collect())
    }

    /// Parses one value per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| Error::Decode {
                offset: None,
                reason: format!("law file line {}: not a number: {line:?}", i + 1),
            })?;
            values.push(v);
        }
        EmpiricalLaw::new(values)
    }

    /// One value per line, round-trippable through [`EmpiricalLaw::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in &self.values {
            out.push_str(&v.to_string());
            out.push('\n');
        }
        out
    }
}

/// Pools the perimeter/area ratios of all components across realisations
/// into an empirical law.
pub fn empirical_ratio_distribution(
    realisations: &[BinaryImage],
    extraction: &ExtractionConfig,
) -> Result<EmpiricalLaw> {
    let mut ratios = Vec::new();
    for img in realisations {
        for comp in extract_components(img, extraction) {
            ratios.push(comp.boundary.len() as f64 / comp.pixels.len() as f64);
        }
    }
    if ratios.is_empty() {
        return Err(Error::EmptyInput(
            "component ratios (no components in any realisation)".into(),
        ));
    }
    EmpiricalLaw::new(ratios)
}

/// Side length whose boundary/pixel ratio (4a − 4)/a² is closest to
/// `ratio`, searched over 2..=max_side. Ties go to the smaller side.
pub fn side_from_ratio(ratio: f64, max_side: u32) -> u32 {
    debug_assert!(max_side >= 2);
    let mut best = 2u32;
    let mut best_err = f64::INFINITY;
    for a in 2..=max_side {
        let f = (4.0 * a as f64 - 4.0) / (a as f64 * a as f64);
        let err = (f - ratio).abs();
        if err < best_err {
            best_err = err;
            best = a;
        }
    }
    best
}

/// Axis-aligned boxes already placed, as (x0, y0, w, h).
type Placed = Vec<(i64, i64, i64, i64)>;

/// True when the candidate touches or overlaps an existing box, including
/// diagonally: placements keep a Chebyshev gap of at least one pixel so
/// every box stays its own connected component under 8-connectivity.
fn conflicts(placed: &Placed, x0: i64, y0: i64, wd: i64, ht: i64) -> bool {
    placed.iter().any(|&(bx, by, bw, bh)| {
        let sep_x = bx > x0 + wd || x0 > bx + bw;
        let sep_y = by > y0 + ht || y0 > by + bh;
        !(sep_x || sep_y)
    })
}

const PLACEMENT_ATTEMPTS: usize = 200;

/// Random sequential placement of one wd×ht box; returns the corner or
/// None when no free position was found.
fn place_box(
    placed: &Placed,
    w: Window,
    wd: i64,
    ht: i64,
    rng: &mut impl Rng,
) -> Option<(i64, i64)> {
    for _ in 0..PLACEMENT_ATTEMPTS {
        let x0 = rng.gen_range(0..=(w.width as i64 - wd));
        let y0 = rng.gen_range(0..=(w.height as i64 - ht));
        if !conflicts(placed, x0, y0, wd, ht) {
            return Some((x0, y0));
        }
    }
    None
}

fn stamp_box(img: &mut BinaryImage, x0: i64, y0: i64, wd: i64, ht: i64) {
    for y in y0..y0 + ht {
        for x in x0..x0 + wd {
            img.set(x as i32, y as i32, true);
        }
    }
}

/// Packs random squares whose sides realize a target perimeter/area ratio
/// law.
///
/// Each square's side is the best integer match of a ratio drawn from
/// `ratio_law`. Squares are placed by random sequential adsorption with a
/// one-pixel Chebyshev gap; squares that find no free spot within 200
/// attempts are skipped with a warning.
pub fn simulate_squares(
    ratio_law: &EmpiricalLaw,
    count_law: &CountLaw,
    w: Window,
    seed: u64,
) -> Result<BinaryImage> {
    w.validate()?;
    count_law.validate()?;
    let max_side = w.width.min(w.height);
    if max_side < 2 {
        return Err(Error::InvalidParam(
            "window too small for squares (need at least 2x2)".into(),
        ));
    }
    let mut rng = stream_rng(seed, 0);
    let n = count_law.sample(&mut rng)?;
    let mut img = BinaryImage::new(w.width, w.height);
    let mut placed: Placed = Vec::new();
    for i in 0..n {
        let side = side_from_ratio(ratio_law.sample(&mut rng), max_side) as i64;
        match place_box(&placed, w, side, side, &mut rng) {
            Some((x0, y0)) => {
                stamp_box(&mut img, x0, y0, side, side);
                placed.push((x0, y0, side, side));
            }
            None => log::warn!(
                "square {i}: no free {side}x{side} position after {PLACEMENT_ATTEMPTS} attempts, skipping"
            ),
        }
    }
    Ok(img)
}

/// Packs random rectangles with one fixed side; the free side is solved
/// from a boundary-pixel-count (perimeter) law.
///
/// A w×h box has 2w + 2h − 4 boundary pixels, so a perimeter value p gives
/// the free side b = (p − 2·fixed_side + 4)/2. Values that make b
/// fractional or smaller than 2 are skipped with a warning. Each rectangle
/// is horizontal or vertical with equal probability.
pub fn simulate_rectangles(
    perimeter_law: &EmpiricalLaw,
    count_law: &CountLaw,
    w: Window,
    seed: u64,
    fixed_side: u32,
) -> Result<BinaryImage> {
    w.validate()?;
    count_law.validate()?;
    if fixed_side < 2 {
        return Err(Error::InvalidParam(
            "rectangle fixed side must be at least 2".into(),
        ));
    }
    let mut rng = stream_rng(seed, 0);
    let n = count_law.sample(&mut rng)?;
    let mut img = BinaryImage::new(w.width, w.height);
    let mut placed: Placed = Vec::new();
    let fs = fixed_side as i64;
    for i in 0..n {
        let p = perimeter_law.sample(&mut rng);
        let p_int = p.round() as i64;
        let twice_b = p_int - 2 * fs + 4;
        if (p - p_int as f64).abs() > 1e-9 || twice_b % 2 != 0 || twice_b < 4 {
            log::warn!("rectangle {i}: perimeter {p} gives no integer free side >= 2, skipping");
            continue;
        }
        let b = twice_b / 2;
        let (wd, ht) = if rng.gen::<bool>() { (b, fs) } else { (fs, b) };
        if wd > w.width as i64 || ht > w.height as i64 {
            log::warn!("rectangle {i}: {wd}x{ht} does not fit the window, skipping");
            continue;
        }
        match place_box(&placed, w, wd, ht, &mut rng) {
            Some((x0, y0)) => {
                stamp_box(&mut img, x0, y0, wd, ht);
                placed.push((x0, y0, wd, ht));
            }
            None => log::warn!(
                "rectangle {i}: no free {wd}x{ht} position after {PLACEMENT_ATTEMPTS} attempts, skipping"
            ),
        }
    }
    Ok(img)
}

/// Distribution of ellipse semi-axes (a, b).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SemiAxesLaw {
    Constant { a: f64, b: f64 },
    Uniform { a_min: f64, a_max: f64, b_min: f64, b_max: f64 },
}

impl SemiAxesLaw {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            SemiAxesLaw::Constant { a, b } => {
                a.is_finite() && b.is_finite() && a >= 1.0 && b >= 1.0
            }
            SemiAxesLaw::Uniform { a_min, a_max, b_min, b_max } => {
                [a_min, a_max, b_min, b_max].iter().all(|v| v.is_finite())
                    && a_min >= 1.0
                    && b_min >= 1.0
                    && a_min <= a_max
                    && b_min <= b_max
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParam(format!(
                "semi-axes law {self:?} invalid: axes must be finite and at least 1"
            )))
        }
    }

    fn upper_bound(&self) -> f64 {
        match *self {
            SemiAxesLaw::Constant { a, b } => a.max(b),
            SemiAxesLaw::Uniform { a_max, b_max, .. } => a_max.max(b_max),
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> (f64, f64) {
        match *self {
            SemiAxesLaw::Constant { a, b } => (a, b),
            SemiAxesLaw::Uniform { a_min, a_max, b_min, b_max } => (
                a_min + rng.gen::<f64>() * (a_max - a_min),
                b_min + rng.gen::<f64>() * (b_max - b_min),
            ),
        }
    }
}

/// Distribution of ellipse orientations in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrientationLaw {
    Fixed(f64),
    UniformHalfCircle,
}

impl OrientationLaw {
    fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            OrientationLaw::Fixed(theta) => theta,
            OrientationLaw::UniformHalfCircle => rng.gen::<f64>() * std::f64::consts::PI,
        }
    }
}

/// Boolean ellipse model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseParams {
    pub intensity: f64,
    pub semi_axes_law: SemiAxesLaw,
    pub orientation_law: OrientationLaw,
}

/// Simulates a Boolean model with rotated elliptical grains.
pub fn simulate_ellipses(p: &EllipseParams, w: Window, seed: u64) -> Result<BinaryImage> {
    if !(p.intensity.is_finite() && p.intensity >= 0.0) {
        return Err(Error::InvalidParam(format!(
            "intensity {} must be finite and nonnegative",
            p.intensity
        )));
    }
    p.semi_axes_law.validate()?;
    w.validate()?;
    let margin = p.semi_axes_law.upper_bound().ceil();
    let ext_w = w.width as f64 + 2.0 * margin;
    let ext_h = w.height as f64 + 2.0 * margin;
    let mut rng = stream_rng(seed, 0);
    let n = poisson_count(p.intensity * ext_w * ext_h, &mut rng)?;
    let mut img = BinaryImage::new(w.width, w.height);
    for _ in 0..n {
        let cx = rng.gen::<f64>() * ext_w - margin;
        let cy = rng.gen::<f64>() * ext_h - margin;
        let (a, b) = p.semi_axes_law.sample(&mut rng);
        let theta = p.orientation_law.sample(&mut rng);
        stamp_ellipse(&mut img, cx, cy, a, b, theta);
    }
    Ok(img)
}

/// Marks every lattice point within distance `r` of (cx, cy) as foreground.
pub fn stamp_disc(img: &mut BinaryImage, cx: f64, cy: f64, r: f64) {
    let r2 = r * r;
    for y in (cy - r).ceil() as i64..=(cy + r).floor() as i64 {
        for x in (cx - r).ceil() as i64..=(cx + r).floor() as i64 {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            if dx * dx + dy * dy <= r2 {
                img.set(x as i32, y as i32, true);
            }
        }
    }
}

/// Marks every lattice point inside the rotated ellipse with semi-axes
/// (a, b) and orientation `theta` as foreground.
pub fn stamp_ellipse(img: &mut BinaryImage, cx: f64, cy: f64, a: f64, b: f64, theta: f64) {
    let e = a.max(b);
    let (sin, cos) = theta.sin_cos();
    for y in (cy - e).ceil() as i64..=(cy + e).floor() as i64 {
        for x in (cx - e).ceil() as i64..=(cx + e).floor() as i64 {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            let u = (dx * cos + dy * sin) / a;
            let v = (-dx * sin + dy * cos) / b;
            if u * u + v * v <= 1.0 {
                img.set(x as i32, y as i32, true);
            }
        }
    }
}
