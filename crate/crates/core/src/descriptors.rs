//! Per-component shape descriptors.
//!
//! For every boundary pixel z of a component, the occupancy K(z) is the
//! fraction of a small rasterized disc around z that lands on foreground.
//! 1/2 corresponds to a locally flat boundary; deviations from 1/2 scale
//! with boundary curvature (K > 1/2 in concavities, K < 1/2 on convex
//! bumps). The histogram of occupancies over `l` bins is the component's
//! testing function; together with the boundary/area pixel ratio it forms
//! the descriptor the similarity tests consume. Curvature itself can be
//! reported for diagnostics, but the test pipeline works on raw occupancies.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::imagery::{BinaryImage, Component, PixelCoord};

/// Integer offsets of the rasterized closed disc of radius `r`.
#[derive(Debug, Clone)]
pub struct DiscMask {
    radius: u32,
    offsets: Vec<(i32, i32)>,
}

impl DiscMask {
    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn offsets(&self) -> &[(i32, i32)] {
        &self.offsets
    }

    /// Number of lattice points in the disc.
    pub fn pixel_count(&self) -> usize {
        self.offsets.len()
    }
}

/// All integer (dx,dy) with dx² + dy² ≤ r².
pub fn disc_mask(r: u32) -> Result<DiscMask> {
    if r < 1 {
        return Err(Error::InvalidParam("disc radius must be >= 1".into()));
    }
    let ri = r as i32;
    let r2 = ri as i64 * ri as i64;
    let mut offsets = Vec::new();
    for dy in -ri..=ri {
        for dx in -ri..=ri {
            if (dx as i64 * dx as i64 + dy as i64 * dy as i64) <= r2 {
                offsets.push((dx, dy));
            }
        }
    }
    Ok(DiscMask { radius: r, offsets })
}

/// Fraction of `mask` offsets around `z` that land on foreground.
///
/// With `restrict_to` given, only that component's own pixels count as
/// foreground; otherwise the whole image does. Off-image positions are
/// background either way.
pub fn occupancy(
    img: &BinaryImage,
    z: PixelCoord,
    mask: &DiscMask,
    restrict_to: Option<&Component>,
) -> f64 {
    let hit = |x: i32, y: i32| match restrict_to {
        Some(comp) => comp.contains(PixelCoord::new(x, y)),
        None => img.get(x, y),
    };
    let count = mask
        .offsets
        .iter()
        .filter(|(dx, dy)| hit(z.x + dx, z.y + dy))
        .count();
    count as f64 / mask.offsets.len() as f64
}

/// Discrete curvature from an occupancy value: (3π/r)·(K − 1/2).
///
/// Diagnostics only; the similarity pipeline consumes K directly.
pub fn curvature_estimate(k: f64, r: u32) -> f64 {
    (3.0 * PI / r as f64) * (k - 0.5)
}

/// Histogram of occupancy values over `bins` equal-width bins on [0,1].
///
/// Bin k (1-based) covers [(k−1)/l, k/l); the last bin is closed so K = 1
/// is kept. `values` sum to 1; `support_size` is the number of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TestingFunction {
    pub bins: usize,
    pub values: Vec<f64>,
    pub support_size: usize,
}

/// Bins occupancy values into a [`TestingFunction`].
pub fn testing_function(ks: &[f64], l: usize) -> Result<TestingFunction> {
    if l < 2 {
        return Err(Error::InvalidParam("bin count must be >= 2".into()));
    }
    if ks.is_empty() {
        return Err(Error::EmptyInput(
            "no occupancy values to bin (empty boundary)".into(),
        ));
    }
    let mut counts = vec![0usize; l];
    for &k in ks {
        if !(0.0..=1.0).contains(&k) {
            return Err(Error::InvalidParam(format!(
                "occupancy value {k} outside [0,1]"
            )));
        }
        let idx = ((k * l as f64).floor() as usize).min(l - 1);
        counts[idx] += 1;
    }
    let n = ks.len();
    Ok(TestingFunction {
        bins: l,
        values: counts.iter().map(|&c| c as f64 / n as f64).collect(),
        support_size: n,
    })
}

/// Perimeter/area pixel ratio: |boundary| / |pixels|.
pub fn perimeter_area_ratio(comp: &Component) -> f64 {
    comp.boundary.len() as f64 / comp.pixels.len() as f64
}

/// Per-component descriptor: the ratio paired with the testing function.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeDescriptor {
    pub ratio: f64,
    pub curve: TestingFunction,
}

/// Computes the descriptor of one component.
///
/// `restrict` selects whether discs see only the component's own pixels
/// (the default pipeline behavior, making the descriptor independent of
/// neighbouring components) or the whole image.
pub fn describe_component(
    img: &BinaryImage,
    comp: &Component,
    r: u32,
    l: usize,
    restrict: bool,
) -> Result<ShapeDescriptor> {
    let mask = disc_mask(r)?;
    let ks = boundary_occupancies(img, comp, &mask, restrict);
    Ok(ShapeDescriptor {
        ratio: perimeter_area_ratio(comp),
        curve: testing_function(&ks, l)?,
    })
}

/// Occupancy at every boundary pixel, in boundary order.
pub fn boundary_occupancies(
    img: &BinaryImage,
    comp: &Component,
    mask: &DiscMask,
    restrict: bool,
) -> Vec<f64> {
    if restrict {
        // Fast path: paint the component into a bitmap over its padded
        // bounding box; occupancy against that bitmap equals occupancy
        // restricted to the component (translation invariance).
        let view = ComponentView::new(comp);
        comp.boundary
            .iter()
            .map(|z| view.occupancy(*z, mask))
            .collect()
    } else {
        comp.boundary
            .iter()
            .map(|z| occupancy(img, *z, mask, None))
            .collect()
    }
}

/// Component pixels rasterized over the bounding box, for O(1) membership.
struct ComponentView {
    min_x: i32,
    min_y: i32,
    width: i32,
    height: i32,
    bits: Vec<bool>,
}

impl ComponentView {
    fn new(comp: &Component) -> Self {
        let width = comp.bbox.width() as i32;
        let height = comp.bbox.height() as i32;
        let mut bits = vec![false; (width * height) as usize];
        for p in &comp.pixels {
            let i = (p.y - comp.bbox.min_y) * width + (p.x - comp.bbox.min_x);
            bits[i as usize] = true;
        }
        ComponentView {
            min_x: comp.bbox.min_x,
            min_y: comp.bbox.min_y,
            width,
            height,
            bits,
        }
    }

    fn occupancy(&self, z: PixelCoord, mask: &DiscMask) -> f64 {
        let (zx, zy) = (z.x - self.min_x, z.y - self.min_y);
        let count = mask
            .offsets
            .iter()
            .filter(|(dx, dy)| {
                let (x, y) = (zx + dx, zy + dy);
                x >= 0
                    && y >= 0
                    && x < self.width
                    && y < self.height
                    && self.bits[(y * self.width + x) as usize]
            })
            .count();
        count as f64 / mask.offsets.len() as f64
    }
}

/// CSV export: `component_id, ratio, t_1, …, t_l, n_boundary`.
pub fn descriptors_to_csv(items: &[(u32, ShapeDescriptor)], bins: usize) -> String {
    let mut out = String::from("component_id,ratio");
    for k in 1..=bins {
        let _ = write!(out, ",t_{k}");
    }
    out.push_str(",n_boundary\n");
    for (id, d) in items {
        let _ = write!(out, "{},{}", id, d.ratio);
        for v in &d.curve.values {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(out, ",{}", d.curve.support_size);
    }
    out
}
