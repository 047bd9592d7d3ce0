//! Binary images, connected components, and boundary extraction.
//!
//! A [`BinaryImage`] is a row-major grid of foreground/background pixels;
//! every query outside the grid answers background, which is the convention
//! all downstream geometry (boundary detection, disc occupancy) relies on.
//! Components are labeled under a configurable foreground connectivity, but
//! their boundary is always the set of foreground pixels with at least one
//! background 4-neighbour, so diagonal contact cannot hide boundary pixels.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Integer pixel position: `x` is the column, `y` the row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PixelCoord {
    pub x: i32,
    pub y: i32,
}

impl PixelCoord {
    pub fn new(x: i32, y: i32) -> Self {
        PixelCoord { x, y }
    }

    /// Row-major ordering key: row first, then column.
    fn row_major(&self) -> (i32, i32) {
        (self.y, self.x)
    }
}

/// Foreground connectivity for component labeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    fn neighbours(&self) -> &'static [(i32, i32)] {
        const FOUR: [(i32, i32); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
        const EIGHT: [(i32, i32); 8] = [
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
        ];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }
}

/// Rectangular grid of foreground booleans, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl BinaryImage {
    /// All-background image of the given dimensions.
    pub fn new(width: u32, height: u32) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be >= 1");
        BinaryImage {
            width,
            height,
            data: vec![false; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Foreground query; anything outside the grid is background.
    #[inline]
    pub fn get(&self, x: i32, y: i32) -> bool {
        if x < 0 || y < 0 || x >= self.width as i32 || y >= self.height as i32 {
            return false;
        }
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: i32, y: i32, value: bool) {
        if x < 0 || y < 0 || x >= self.width as i32 || y >= self.height as i32 {
            return;
        }
        self.data[y as usize * self.width as usize + x as usize] = value;
    }

    pub fn count_foreground(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    /// Foreground/background swap.
    pub fn inverted(&self) -> BinaryImage {
        BinaryImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| !v).collect(),
        }
    }
}

/// Inclusive pixel bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingBox {
    pub min_x: i32,
    pub min_y: i32,
    pub max_x: i32,
    pub max_y: i32,
}

impl BoundingBox {
    pub fn width(&self) -> u32 {
        (self.max_x - self.min_x + 1) as u32
    }

    pub fn height(&self) -> u32 {
        (self.max_y - self.min_y + 1) as u32
    }
}

/// One connected foreground component.
///
/// `pixels` and `boundary` are sorted row-major; `boundary` is the subset of
/// `pixels` with at least one background 4-neighbour (off-image counts as
/// background, so components touching the border have boundary pixels there
/// too).
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub id: u32,
    pub pixels: Vec<PixelCoord>,
    pub boundary: Vec<PixelCoord>,
    pub bbox: BoundingBox,
    pub touches_border: bool,
}

impl Component {
    /// Membership test against the sorted pixel list.
    pub fn contains(&self, p: PixelCoord) -> bool {
        self.pixels
            .binary_search_by_key(&p.row_major(), |q| q.row_major())
            .is_ok()
    }
}

/// Labels all foreground components of `img` under the given connectivity.
///
/// Components are numbered 1.. in row-major order of their first pixel, so
/// the output is deterministic. Boundary pixels use the 4-neighbourhood
/// regardless of `connectivity`.
pub fn label_components(img: &BinaryImage, connectivity: Connectivity) -> Vec<Component> {
    let w = img.width as i32;
    let h = img.height as i32;
    let mut seen = vec![false; img.data.len()];
    let mut comps = Vec::new();
    let neigh = connectivity.neighbours();

    for start_y in 0..h {
        for start_x in 0..w {
            let start_idx = start_y as usize * w as usize + start_x as usize;
            if seen[start_idx] || !img.data[start_idx] {
                continue;
            }
            // Flood fill from the first unvisited foreground pixel.
            let mut stack = vec![PixelCoord::new(start_x, start_y)];
            seen[start_idx] = true;
            let mut pixels = Vec::new();
            while let Some(p) = stack.pop() {
                pixels.push(p);
                for (dx, dy) in neigh {
                    let (nx, ny) = (p.x + dx, p.y + dy);
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let ni = ny as usize * w as usize + nx as usize;
                    if img.data[ni] && !seen[ni] {
                        seen[ni] = true;
                        stack.push(PixelCoord::new(nx, ny));
                    }
                }
            }
            pixels.sort_unstable_by_key(|p| p.row_major());

            let mut boundary = Vec::new();
            let mut bbox = BoundingBox {
                min_x: i32::MAX,
                min_y: i32::MAX,
                max_x: i32::MIN,
                max_y: i32::MIN,
            };
            let mut touches_border = false;
            for p in &pixels {
                bbox.min_x = bbox.min_x.min(p.x);
                bbox.min_y = bbox.min_y.min(p.y);
                bbox.max_x = bbox.max_x.max(p.x);
                bbox.max_y = bbox.max_y.max(p.y);
                if p.x == 0 || p.y == 0 || p.x == w - 1 || p.y == h - 1 {
                    touches_border = true;
                }
                let is_boundary = !img.get(p.x + 1, p.y)
                    || !img.get(p.x - 1, p.y)
                    || !img.get(p.x, p.y + 1)
                    || !img.get(p.x, p.y - 1);
                if is_boundary {
                    boundary.push(*p);
                }
            }
            comps.push(Component {
                id: comps.len() as u32 + 1,
                pixels,
                boundary,
                bbox,
                touches_border,
            });
        }
    }
    comps
}

/// Keeps components with at least `min_pixels` pixels and, when
/// `discard_border` is set, those not touching the image border. Order and
/// ids are preserved.
pub fn filter_components(
    comps: Vec<Component>,
    min_pixels: usize,
    discard_border: bool,
) -> Vec<Component> {
    comps
        .into_iter()
        .filter(|c| c.pixels.len() >= min_pixels && !(discard_border && c.touches_border))
        .collect()
}

/// Labeling followed by filtering, under one bundle of settings.
#[derive(Debug, Clone, Copy)]
pub struct ExtractionConfig {
    pub connectivity: Connectivity,
    pub min_pixels: usize,
    pub discard_border: bool,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            connectivity: Connectivity::Eight,
            min_pixels: 4,
            discard_border: false,
        }
    }
}

pub fn extract_components(img: &BinaryImage, cfg: &ExtractionConfig) -> Vec<Component> {
    filter_components(
        label_components(img, cfg.connectivity),
        cfg.min_pixels,
        cfg.discard_border,
    )
}

/// Debug dump: one row per pixel of every component.
pub fn components_to_csv(comps: &[Component]) -> String {
    let mut out = String::from("id,x,y,is_boundary\n");
    for c in comps {
        let mut b = c.boundary.iter().peekable();
        for p in &c.pixels {
            // boundary is a sorted subsequence of pixels, so one forward scan
            // classifies every pixel
            let is_b = match b.peek() {
                Some(q) if **q == *p => {
                    b.next();
                    true
                }
                _ => false,
            };
            let _ = writeln!(out, "{},{},{},{}", c.id, p.x, p.y, u8::from(is_b));
        }
    }
    out
}

/// Declared input format for [`load_image`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    /// PBM, ASCII (P1) or binary (P4). Set bits are foreground.
    Pbm,
    /// PNG, 1-bit or 8-bit grayscale. Values above the threshold are
    /// foreground (white = foreground).
    Png,
}

/// Decodes raw file content in the declared format.
///
/// `threshold` applies to grayscale PNG input only: a pixel is foreground iff
/// its value is strictly greater. PBM input has no grays; its set bits are
/// the foreground.
pub fn load_image(bytes: &[u8], format: ImageFormat, threshold: u8) -> Result<BinaryImage> {
    match format {
        ImageFormat::Pbm => decode_pbm(bytes),
        ImageFormat::Png => decode_png(bytes, threshold),
    }
}

/// Reads an image file, detecting PBM/PNG from its leading bytes.
pub fn load_image_file(path: &Path, threshold: u8) -> Result<BinaryImage> {
    let bytes = std::fs::read(path)?;
    let format = detect_format(&bytes).ok_or_else(|| {
        Error::UnsupportedFormat(format!(
            "{}: not a PBM (P1/P4) or PNG file",
            path.display()
        ))
    })?;
    load_image(&bytes, format, threshold)
}

pub fn detect_format(bytes: &[u8]) -> Option<ImageFormat> {
    const PNG_MAGIC: [u8; 8] = [0x89, b'P', b'N', b'G', b'\r', b'\n', 0x1a, b'\n'];
    if bytes.starts_with(b"P1") || bytes.starts_with(b"P4") {
        Some(ImageFormat::Pbm)
    } else if bytes.starts_with(&PNG_MAGIC) {
        Some(ImageFormat::Png)
    } else {
        None
    }
}

const MAX_DIM: u32 = 1 << 16;

struct PbmCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PbmCursor<'a> {
    fn err<T>(&self, reason: impl Into<String>) -> Result<T> {
        Err(Error::Decode {
            offset: Some(self.pos),
            reason: reason.into(),
        })
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    /// Skips whitespace and `#`-to-end-of-line comments.
    fn skip_separators(&mut self) {
        loop {
            match self.peek() {
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b'#') => {
                    while let Some(b) = self.peek() {
                        self.pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                _ => return,
            }
        }
    }

    fn parse_dimension(&mut self, what: &str) -> Result<u32> {
        self.skip_separators();
        let start = self.pos;
        while matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return self.err(format!("expected {what}"));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        match text.parse::<u32>() {
            Ok(v) if (1..=MAX_DIM).contains(&v) => Ok(v),
            _ => {
                self.pos = start;
                self.err(format!("{what} {text} out of range 1..={MAX_DIM}"))
            }
        }
    }
}

fn decode_pbm(bytes: &[u8]) -> Result<BinaryImage> {
    let mut cur = PbmCursor { bytes, pos: 0 };
    let ascii = match bytes.get(0..2) {
        Some(b"P1") => true,
        Some(b"P4") => false,
        _ => return cur.err("expected PBM magic P1 or P4"),
    };
    cur.pos = 2;
    let width = cur.parse_dimension("width")?;
    let height = cur.parse_dimension("height")?;
    let mut img = BinaryImage::new(width, height);

    if ascii {
        for i in 0..width as usize * height as usize {
            cur.skip_separators();
            match cur.peek() {
                Some(b'0') => cur.pos += 1,
                Some(b'1') => {
                    img.data[i] = true;
                    cur.pos += 1;
                }
                Some(_) => return cur.err("expected 0 or 1"),
                None => return cur.err("truncated pixel data"),
            }
        }
    } else {
        // P4: a single whitespace byte separates the header from packed rows.
        match cur.peek() {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            Some(_) => return cur.err("expected whitespace before raster data"),
            None => return cur.err("truncated header"),
        }
        let row_bytes = (width as usize).div_ceil(8);
        for y in 0..height as usize {
            for bx in 0..row_bytes {
                let Some(byte) = cur.peek() else {
                    return cur.err("truncated raster data");
                };
                cur.pos += 1;
                for bit in 0..8 {
                    let x = bx * 8 + bit;
                    if x < width as usize && byte & (0x80 >> bit) != 0 {
                        img.data[y * width as usize + x] = true;
                    }
                }
            }
        }
    }
    Ok(img)
}

fn decode_png(bytes: &[u8], threshold: u8) -> Result<BinaryImage> {
    let decoded = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::Decode {
            offset: None,
            reason: format!("PNG: {e}"),
        })?;
    let gray = match decoded {
        image::DynamicImage::ImageLuma8(buf) => buf,
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "PNG color type {:?}; only 1-bit and 8-bit grayscale are supported",
                other.color()
            )))
        }
    };
    let (width, height) = gray.dimensions();
    if width == 0 || height == 0 || width > MAX_DIM || height > MAX_DIM {
        return Err(Error::Decode {
            offset: None,
            reason: format!("PNG dimensions {width}x{height} out of range"),
        });
    }
    let mut img = BinaryImage::new(width, height);
    for (i, px) in gray.pixels().enumerate() {
        img.data[i] = px.0[0] > threshold;
    }
    Ok(img)
}

/// Encodes as binary PBM (P4); foreground pixels become set bits.
pub fn encode_pbm(img: &BinaryImage) -> Vec<u8> {
    let mut out = format!("P4\n{} {}\n", img.width, img.height).into_bytes();
    let row_bytes = (img.width as usize).div_ceil(8);
    for y in 0..img.height as usize {
        for bx in 0..row_bytes {
            let mut byte = 0u8;
            for bit in 0..8 {
                let x = bx * 8 + bit;
                if x < img.width as usize && img.data[y * img.width as usize + x] {
                    byte |= 0x80 >> bit;
                }
            }
            out.push(byte);
        }
    }
    out
}

/// Encodes as 8-bit grayscale PNG; foreground becomes 255.
pub fn encode_png(img: &BinaryImage) -> Result<Vec<u8>> {
    let pixels: Vec<u8> = img.data.iter().map(|&v| if v { 255 } else { 0 }).collect();
    let gray = image::GrayImage::from_raw(img.width, img.height, pixels)
        .expect("buffer length matches dimensions");
    let mut out = Vec::new();
    image::DynamicImage::ImageLuma8(gray)
        .write_to(
            &mut std::io::Cursor::new(&mut out),
            image::ImageOutputFormat::Png,
        )
        .map_err(|e| Error::Decode {
            offset: None,
            reason: format!("PNG encode: {e}"),
        })?;
    Ok(out)
}
