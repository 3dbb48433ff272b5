//! Dynamical-plane escape grids, basin labeling, escape-level
//! classification of the free critical orbit, and the area diagnostic.
//!
//! The basin of infinity B and the trap door T (the component of f^(−1)(B)
//! containing the pole) are approximated by flood fills on an escape-time
//! grid; the classifier reads the critical orbit against those labels.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::map::MapParams;
use crate::{Error, Result};

/// Default iteration budget for classification decisions.
pub const CLASSIFY_MAXITER: usize = 10_000;

/// Default iteration budget for rendering.
pub const RENDER_MAXITER: usize = 500;

/// Axis-aligned rectangle in the complex plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn centered_square(half_side: f64) -> Rect {
        Rect {
            re_min: -half_side,
            re_max: half_side,
            im_min: -half_side,
            im_max: half_side,
        }
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }
}

/// Per-pixel basin label.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasinLabel {
    /// Connected to the basin of infinity.
    Basin,
    /// The preimage component of the basin containing the pole.
    TrapDoor,
    /// Escaping, but in some deeper preimage component of the basin.
    OtherBasin,
    NonEscaping,
}

/// Escape-time grid over a rectangle, pixel (x, y) running left→right in
/// the real direction and top→bottom in the imaginary direction.
#[derive(Clone, Debug)]
pub struct DynGrid {
    pub bbox: Rect,
    pub width: usize,
    pub height: usize,
    /// First index k with |f^k(center)| > R, or None for survivors.
    pub escape_time: Vec<Option<u32>>,
    /// Empty until `basin_components` labels the grid.
    pub label: Vec<BasinLabel>,
    /// Whether the basin and trap-door fills merged (single basin regime).
    pub merged: bool,
}

impl DynGrid {
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn pixel_center(&self, x: usize, y: usize) -> Complex64 {
        let dx = self.bbox.width() / self.width as f64;
        let dy = self.bbox.height() / self.height as f64;
        Complex64::new(
            self.bbox.re_min + (x as f64 + 0.5) * dx,
            self.bbox.im_max - (y as f64 + 0.5) * dy,
        )
    }

    /// Pixel containing z, or None outside the rectangle.
    pub fn pixel_of(&self, z: Complex64) -> Option<(usize, usize)> {
        let dx = self.bbox.width() / self.width as f64;
        let dy = self.bbox.height() / self.height as f64;
        let x = ((z.re - self.bbox.re_min) / dx).floor();
        let y = ((self.bbox.im_max - z.im) / dy).floor();
        if x >= 0.0 && y >= 0.0 && (x as usize) < self.width && (y as usize) < self.height {
            Some((x as usize, y as usize))
        } else {
            None
        }
    }

    pub fn label_at(&self, z: Complex64) -> Option<BasinLabel> {
        self.pixel_of(z).map(|(x, y)| self.label[self.index(x, y)])
    }
}

/// Per-pixel escape times of the grid centers under f, radius R.
pub fn escape_time_grid(
    p: &MapParams,
    bbox: Rect,
    res: (usize, usize),
    maxiter: usize,
) -> Result<DynGrid> {
    let (w, h) = res;
    if w < 2 || h < 2 {
        return Err(Error::precondition("escape grids need at least 2×2 pixels"));
    }
    if !(bbox.width() > 0.0 && bbox.height() > 0.0) {
        return Err(Error::precondition("escape grids need a non-degenerate rectangle"));
    }
    let r2 = p.escape_radius * p.escape_radius;
    let dx = bbox.width() / w as f64;
    let dy = bbox.height() / h as f64;
    let mut escape_time = vec![None; w * h];
    escape_time
        .par_chunks_mut(w)
        .enumerate()
        .for_each(|(y, row)| {
            let im = bbox.im_max - (y as f64 + 0.5) * dy;
            for (x, out) in row.iter_mut().enumerate() {
                let re = bbox.re_min + (x as f64 + 0.5) * dx;
                let mut z = Complex64::new(re, im);
                for k in 0..=maxiter {
                    if !z.is_finite() || z.norm_sqr() > r2 {
                        *out = Some(k as u32);
                        break;
                    }
                    z = p.eval(z);
                }
            }
        });
    Ok(DynGrid {
        bbox,
        width: w,
        height: h,
        escape_time,
        label: Vec::new(),
        merged: false,
    })
}

/// Where a pixel center lands after one application of f.
#[derive(Clone, Copy, PartialEq, Eq)]
enum ImgTarget {
    /// Image has modulus beyond R (or is the pole's image), hence in the
    /// basin with certainty.
    DirectBasin,
    /// Image falls into the given pixel.
    Pixel(usize),
    /// Image left the rectangle without crossing the escape radius.
    Unknown,
}

fn image_targets(p: &MapParams, grid: &DynGrid) -> Vec<ImgTarget> {
    let w = grid.width;
    let mut img = vec![ImgTarget::Unknown; w * grid.height];
    img.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, out) in row.iter_mut().enumerate() {
            let z = grid.pixel_center(x, y);
            if z == Complex64::new(0.0, 0.0) {
                *out = ImgTarget::DirectBasin;
                continue;
            }
            let fz = p.eval(z);
            *out = if !fz.is_finite() || fz.norm() > p.escape_radius {
                ImgTarget::DirectBasin
            } else {
                match grid.pixel_of(fz) {
                    Some((fx, fy)) => ImgTarget::Pixel(fy * w + fx),
                    None => ImgTarget::Unknown,
                }
            };
        }
    });
    img
}

/// Grow `target`-labeled pixels from the worklist: a pixel joins when it is
/// 4-adjacent to an already labeled pixel and its f-image is certified (a
/// direct modulus escape, or a pixel already labeled basin).  Returns true
/// when the fill ran into `collide`-labeled pixels.
fn certified_fill(
    label: &mut [BasinLabel],
    img: &[ImgTarget],
    rev: &Csr,
    w: usize,
    h: usize,
    mut queue: Vec<usize>,
    target: BasinLabel,
    collide: Option<BasinLabel>,
) -> bool {
    let mut touched = false;
    let image_certified = |label: &[BasinLabel], i: usize| match img[i] {
        ImgTarget::DirectBasin => true,
        ImgTarget::Pixel(j) => label[j] == BasinLabel::Basin,
        ImgTarget::Unknown => false,
    };
    let has_labeled_neighbor = |label: &[BasinLabel], i: usize| {
        let (x, y) = (i % w, i / w);
        neighbors4(x, y, w, h).any(|(nx, ny)| label[ny * w + nx] == target)
    };
    while let Some(i) = queue.pop() {
        let (x, y) = (i % w, i / w);
        for (nx, ny) in neighbors4(x, y, w, h) {
            let j = ny * w + nx;
            if Some(label[j]) == collide {
                touched = true;
            }
            if label[j] == BasinLabel::NonEscaping && image_certified(label, j) {
                label[j] = target;
                queue.push(j);
            }
        }
        // A fresh label may certify pixels that map into this one and were
        // already adjacent to the fill when first visited.
        for &q in rev.row(i) {
            let q = q as usize;
            if label[q] == BasinLabel::NonEscaping
                && image_certified(label, q)
                && has_labeled_neighbor(label, q)
            {
                label[q] = target;
                queue.push(q);
            }
        }
    }
    touched
}

/// Compressed preimage lists: for each pixel, the pixels that map into it.
struct Csr {
    offsets: Vec<u32>,
    entries: Vec<u32>,
}

impl Csr {
    fn reverse_of(img: &[ImgTarget]) -> Csr {
        let n = img.len();
        let mut counts = vec![0u32; n + 1];
        for t in img {
            if let ImgTarget::Pixel(j) = t {
                counts[j + 1] += 1;
            }
        }
        for k in 1..=n {
            counts[k] += counts[k - 1];
        }
        let offsets = counts.clone();
        let mut entries = vec![0u32; offsets[n] as usize];
        let mut cursor = offsets.clone();
        for (i, t) in img.iter().enumerate() {
            if let ImgTarget::Pixel(j) = t {
                entries[cursor[*j] as usize] = i as u32;
                cursor[*j] += 1;
            }
        }
        Csr { offsets, entries }
    }

    fn row(&self, i: usize) -> impl Iterator<Item = &u32> {
        self.entries[self.offsets[i] as usize..self.offsets[i + 1] as usize].iter()
    }
}

/// Label the grid.  Both fills certify membership through the dynamics
/// rather than raw escape times: a pixel joins a region only when adjacent
/// to it and its f-image is already known to lie in the basin.  Expansion
/// along the Julia set confines labeling errors to a one-pixel fringe,
/// which raw escape-time flood fills cannot achieve (the separating Julia
/// curves have measure zero, so no iteration budget leaves a connected
/// wall of surviving pixels at finite resolution).
///
/// The basin fill grows from the certain region |z| > R; the trap-door
/// fill grows from the certain disk |z| ≤ r.  The grid is merged (B = T)
/// when the trap-door seeds were already swallowed by the basin fill or
/// the two regions come into contact.
pub fn basin_components(p: &MapParams, mut grid: DynGrid) -> Result<DynGrid> {
    let (w, h) = (grid.width, grid.height);
    let img = image_targets(p, &grid);
    let rev = Csr::reverse_of(&img);
    let mut label = vec![BasinLabel::NonEscaping; w * h];

    let mut basin_seeds: Vec<usize> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if grid.pixel_center(x, y).norm() > p.escape_radius {
                label[y * w + x] = BasinLabel::Basin;
                basin_seeds.push(y * w + x);
            }
        }
    }
    certified_fill(&mut label, &img, &rev, w, h, basin_seeds, BasinLabel::Basin, None);

    let mut trap_seeds: Vec<usize> = Vec::new();
    let mut seed_count = 0usize;
    let mut merged = false;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if grid.pixel_center(x, y).norm() <= p.inner_radius {
                seed_count += 1;
                match label[i] {
                    BasinLabel::Basin => merged = true,
                    BasinLabel::NonEscaping => {
                        label[i] = BasinLabel::TrapDoor;
                        trap_seeds.push(i);
                    }
                    _ => {}
                }
            }
        }
    }
    if seed_count == 0 {
        return Err(Error::Resolution(
            "no pixel center falls inside the inner disk; use a finer grid".into(),
        ));
    }
    merged |= certified_fill(
        &mut label,
        &img,
        &rev,
        w,
        h,
        trap_seeds,
        BasinLabel::TrapDoor,
        Some(BasinLabel::Basin),
    );
    if merged {
        for l in label.iter_mut() {
            if *l == BasinLabel::TrapDoor {
                *l = BasinLabel::Basin;
            }
        }
    }

    // Remaining pixels: escapers within the budget sit in deeper preimages
    // of the basin; the rest are the grid's non-escaping set.
    for (i, l) in label.iter_mut().enumerate() {
        if *l == BasinLabel::NonEscaping && grid.escape_time[i].is_some() {
            *l = BasinLabel::OtherBasin;
        }
    }

    grid.label = label;
    grid.merged = merged;
    Ok(grid)
}

fn neighbors4(x: usize, y: usize, w: usize, h: usize) -> impl Iterator<Item = (usize, usize)> {
    let mut out = [(0usize, 0usize); 4];
    let mut k = 0;
    if x > 0 {
        out[k] = (x - 1, y);
        k += 1;
    }
    if x + 1 < w {
        out[k] = (x + 1, y);
        k += 1;
    }
    if y > 0 {
        out[k] = (x, y - 1);
        k += 1;
    }
    if y + 1 < h {
        out[k] = (x, y + 1);
        k += 1;
    }
    out.into_iter().take(k)
}

/// Outcome of classifying the free critical orbit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClassKind {
    /// The parameter sits in the escape region of the given level
    /// (0 for the basin-of-infinity regime, k ≥ 2 for the holes).
    Escape(u32),
    NonEscape,
    Undetermined,
}

#[derive(Clone, Debug)]
pub struct ClassificationResult {
    pub kind: ClassKind,
    /// First index m with |f^m(v⁺)| > R, when the orbit escapes.
    pub escape_index: Option<usize>,
    pub diagnostics: String,
}

fn first_escape_index(p: &MapParams, maxiter: usize) -> (Option<usize>, Vec<Complex64>) {
    let (vp, _) = p.critical_values();
    let orbit = p.iterate_orbit(vp, maxiter);
    (orbit.escape_index, orbit.points)
}

/// Grid-backed classification of the critical orbit: walks f^j(v⁺) against
/// the labeled basin grid until it identifies the basin (level 0) or the
/// trap door (level j+2).
///
/// The grid resolution is rounded up to an odd value so one pixel center
/// coincides with the pole.
pub fn classify_oracle(p: &MapParams, res: usize, maxiter: usize) -> ClassificationResult {
    let res = if res % 2 == 0 { res + 1 } else { res };
    let half = p.escape_radius * 1.05;
    // Labels come from the certified fills and are independent of the
    // escape-time budget, so the grid itself can use a small one.
    let grid_budget = maxiter.min(64);
    let grid = match escape_time_grid(p, Rect::centered_square(half), (res, res), grid_budget)
        .and_then(|g| basin_components(p, g))
    {
        Ok(g) => g,
        Err(e) => {
            return ClassificationResult {
                kind: ClassKind::Undetermined,
                escape_index: None,
                diagnostics: format!("grid construction failed: {e}"),
            }
        }
    };
    let (escape_index, _) = first_escape_index(p, maxiter);
    let (vp, _) = p.critical_values();
    let mut w = vp;
    for j in 0..=maxiter {
        if !w.is_finite() || w.norm() > p.escape_radius {
            if j == 0 || grid.merged {
                return ClassificationResult {
                    kind: ClassKind::Escape(0),
                    escape_index,
                    diagnostics: "critical orbit beyond the escape radius".into(),
                };
            }
            return ClassificationResult {
                kind: ClassKind::Undetermined,
                escape_index,
                diagnostics: format!(
                    "orbit left the grid at iterate {j} without crossing the trap door"
                ),
            };
        }
        // The inner disk sits inside the trap door with certainty, pixel
        // labels notwithstanding — the trap door may span only a pixel.
        if w.norm() <= p.inner_radius {
            if grid.merged {
                return ClassificationResult {
                    kind: ClassKind::Escape(0),
                    escape_index,
                    diagnostics: "critical orbit reached the merged basin".into(),
                };
            }
            return ClassificationResult {
                kind: ClassKind::Escape(j as u32 + 2),
                escape_index,
                diagnostics: format!("iterate {j} inside the inner disk"),
            };
        }
        let (x, y) = match grid.pixel_of(w) {
            Some(px) => px,
            None => {
                return ClassificationResult {
                    kind: ClassKind::Undetermined,
                    escape_index,
                    diagnostics: format!("iterate {j} fell outside the grid rectangle"),
                }
            }
        };
        let here = grid.label[grid.index(x, y)];
        let boundary = near_label_change(&grid, x, y);
        match here {
            BasinLabel::Basin => {
                if boundary {
                    return ClassificationResult {
                        kind: ClassKind::Undetermined,
                        escape_index,
                        diagnostics: format!(
                            "iterate {j} lands within one pixel of a label change"
                        ),
                    };
                }
                // With B = T any basin entry certifies the level-0 regime;
                // otherwise only the critical value itself may sit in B.
                if j == 0 || grid.merged {
                    return ClassificationResult {
                        kind: ClassKind::Escape(0),
                        escape_index,
                        diagnostics: "critical orbit in the basin of infinity".into(),
                    };
                }
                return ClassificationResult {
                    kind: ClassKind::Undetermined,
                    escape_index,
                    diagnostics: format!("iterate {j} entered the basin without a trap-door hit"),
                };
            }
            BasinLabel::TrapDoor => {
                if boundary {
                    return ClassificationResult {
                        kind: ClassKind::Undetermined,
                        escape_index,
                        diagnostics: format!(
                            "iterate {j} lands within one pixel of a label change"
                        ),
                    };
                }
                return ClassificationResult {
                    kind: ClassKind::Escape(j as u32 + 2),
                    escape_index,
                    diagnostics: format!("iterate {j} inside the trap door"),
                };
            }
            BasinLabel::OtherBasin | BasinLabel::NonEscaping => {}
        }
        w = p.eval(w);
    }
    ClassificationResult {
        kind: ClassKind::NonEscape,
        escape_index,
        diagnostics: "critical orbit survived the iteration budget".into(),
    }
}

fn near_label_change(grid: &DynGrid, x: usize, y: usize) -> bool {
    let here = grid.label[grid.index(x, y)];
    let coarse = |l: BasinLabel| match l {
        BasinLabel::Basin => 0,
        BasinLabel::TrapDoor => 1,
        BasinLabel::OtherBasin | BasinLabel::NonEscaping => 2,
    };
    for dy in -1i64..=1 {
        for dx in -1i64..=1 {
            let nx = x as i64 + dx;
            let ny = y as i64 + dy;
            if nx < 0 || ny < 0 || nx >= grid.width as i64 || ny >= grid.height as i64 {
                continue;
            }
            if coarse(grid.label[grid.index(nx as usize, ny as usize)]) != coarse(here) {
                return true;
            }
        }
    }
    false
}

/// Grid-free heuristic classification from the critical orbit alone: the
/// escape level is read off from whether the last pre-escape iterate sits
/// inside the inner disk |z| ≤ r.
pub fn classify_fast(p: &MapParams, maxiter: usize) -> ClassificationResult {
    let (escape_index, points) = first_escape_index(p, maxiter);
    let m = match escape_index {
        None => {
            return ClassificationResult {
                kind: ClassKind::NonEscape,
                escape_index: None,
                diagnostics: "critical orbit survived the iteration budget".into(),
            }
        }
        Some(m) => m,
    };
    if m == 0 {
        return ClassificationResult {
            kind: ClassKind::Escape(0),
            escape_index,
            diagnostics: "critical value beyond the escape radius".into(),
        };
    }
    let dips = points[..m].iter().any(|z| z.norm() < p.inner_radius);
    if !dips {
        return ClassificationResult {
            kind: ClassKind::Escape(0),
            escape_index,
            diagnostics: "pre-escape orbit stayed outside the inner disk".into(),
        };
    }
    if points[m - 1].norm() <= p.inner_radius {
        return ClassificationResult {
            kind: ClassKind::Escape(m as u32 + 1),
            escape_index,
            diagnostics: "last pre-escape iterate inside the inner disk".into(),
        };
    }
    ClassificationResult {
        kind: ClassKind::Undetermined,
        escape_index,
        diagnostics: "orbit dipped into the inner disk but escaped from outside it".into(),
    }
}

/// Pixel-counting area bound for the set the grid cannot classify, per
/// resolution, over [−R, R]².
///
/// A pixel counts as non-classified when the potential-theoretic distance
/// estimate |w|·ln|w| / |dw| at its center (w the first far-escaped
/// iterate, dw the accumulated derivative) is below the pixel size, or
/// when its orbit fails to resolve at all.  The count concentrates on
/// pixels meeting the boundary structure, so the summed area shrinks as
/// the resolution grows — sampled escape times alone cannot see the
/// boundary at strongly expanding parameters, where the whole grid
/// escapes within a handful of steps.
pub fn julia_area_estimate(p: &MapParams, resolutions: &[usize]) -> Result<Vec<f64>> {
    const AREA_MAXITER: usize = 512;
    const FAR: f64 = 1e8;
    let bbox = Rect::centered_square(p.escape_radius);
    resolutions
        .iter()
        .map(|&res| {
            if res < 2 {
                return Err(Error::precondition("area estimates need at least 2×2 pixels"));
            }
            let px = bbox.width() / res as f64;
            let count: usize = (0..res)
                .into_par_iter()
                .map(|y| {
                    let im = bbox.im_max - (y as f64 + 0.5) * px;
                    let mut row_count = 0usize;
                    for x in 0..res {
                        let re = bbox.re_min + (x as f64 + 0.5) * px;
                        let mut z = Complex64::new(re, im);
                        let mut dz = Complex64::new(1.0, 0.0);
                        let mut near_boundary = true;
                        for _ in 0..AREA_MAXITER {
                            if !z.is_finite() || !dz.is_finite() {
                                break;
                            }
                            if z.norm() > FAR {
                                let dist = z.norm() * z.norm().ln() / dz.norm();
                                near_boundary = dist <= px;
                                break;
                            }
                            match p.deriv(z) {
                                Ok(d) => dz *= d,
                                Err(_) => break,
                            }
                            z = p.eval(z);
                        }
                        if near_boundary {
                            row_count += 1;
                        }
                    }
                    row_count
                })
                .sum();
            Ok(count as f64 * px * px)
        })
        .collect()
}

/// Packed 8-bit RGB image.
#[derive(Clone, Debug)]
pub struct ImageBuf {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl ImageBuf {
    pub fn new(width: usize, height: usize) -> ImageBuf {
        ImageBuf {
            width,
            height,
            data: vec![0; 3 * width * height],
        }
    }

    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = 3 * (y * self.width + x);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Binary PPM (P6) serialization.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }
}

pub(crate) fn shade(base: [u8; 3], t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    [
        (base[0] as f64 * t) as u8,
        (base[1] as f64 * t) as u8,
        (base[2] as f64 * t) as u8,
    ]
}

/// Colorized dynamical-plane render: basin in blues, trap door in oranges,
/// deeper preimage components in greens, survivors black.
pub fn render_julia(p: &MapParams, bbox: Rect, res: (usize, usize)) -> Result<ImageBuf> {
    let grid = basin_components(p, escape_time_grid(p, bbox, res, RENDER_MAXITER)?)?;
    let mut img = ImageBuf::new(grid.width, grid.height);
    for y in 0..grid.height {
        for x in 0..grid.width {
            let i = grid.index(x, y);
            let rgb = match (grid.label[i], grid.escape_time[i]) {
                (BasinLabel::NonEscaping, _) => [0, 0, 0],
                (l, time) => {
                    let t = match time {
                        Some(k) => 1.0 - (k as f64 / 48.0).min(0.75),
                        None => 0.25,
                    };
                    match l {
                        BasinLabel::Basin => shade([90, 140, 255], t),
                        BasinLabel::TrapDoor => shade([255, 160, 70], t),
                        _ => shade([110, 220, 140], t),
                    }
                }
            };
            img.set(x, y, rgb);
        }
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn params(n: u32, re: f64, im: f64) -> MapParams {
        MapParams::new(n, Complex64::new(re, im)).expect("valid parameters")
    }

    #[test]
    fn pixels_beyond_the_escape_radius_are_basin_with_time_zero() {
        let p = params(3, 100.0, 0.0);
        let bbox = Rect::centered_square(12.0);
        let grid = basin_components(&p, escape_time_grid(&p, bbox, (65, 65), 200).unwrap())
            .unwrap();
        let mut checked = 0;
        for y in 0..grid.height {
            for x in 0..grid.width {
                if grid.pixel_center(x, y).norm() > p.escape_radius {
                    let i = grid.index(x, y);
                    assert_eq!(grid.escape_time[i], Some(0));
                    assert_eq!(grid.label[i], BasinLabel::Basin);
                    checked += 1;
                }
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn rejects_degenerate_resolutions() {
        let p = params(3, 1.0, 0.0);
        let bbox = Rect::centered_square(2.0);
        assert!(matches!(
            escape_time_grid(&p, bbox, (1, 8), 10),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn cantor_regime_has_almost_no_survivors() {
        let p = params(3, 100.0, 0.0);
        let grid = escape_time_grid(&p, Rect::centered_square(2.0), (512, 512), 500).unwrap();
        let survivors = grid.escape_time.iter().filter(|e| e.is_none()).count();
        assert!(
            (survivors as f64) < 0.01 * (512.0 * 512.0),
            "{survivors} survivors"
        );
    }

    #[test]
    fn escape_times_respect_the_half_turn_rotation() {
        let p = params(3, 100.0, 0.0);
        let grid =
            escape_time_grid(&p, Rect::centered_square(p.escape_radius * 1.05), (256, 256), 300)
                .unwrap();
        let rot = Complex64::from_polar(1.0, std::f64::consts::PI / p.n as f64);
        // The rotated center falls between pixel centers, so times may
        // shift by one step across level-set boundaries; that is the pixel
        // quantization the agreement is measured up to.
        let mut agree = 0usize;
        let mut total = 0usize;
        for y in 0..grid.height {
            for x in 0..grid.width {
                let z = grid.pixel_center(x, y);
                if let Some((rx, ry)) = grid.pixel_of(rot * z) {
                    total += 1;
                    let here = grid.escape_time[grid.index(x, y)];
                    let there = grid.escape_time[grid.index(rx, ry)];
                    let close = match (here, there) {
                        (None, None) => true,
                        (Some(a), Some(b)) => a.abs_diff(b) <= 1,
                        _ => false,
                    };
                    if close {
                        agree += 1;
                    }
                }
            }
        }
        assert!(total > 30_000);
        assert!(
            agree as f64 >= 0.99 * total as f64,
            "{agree}/{total} rotation-symmetric pixels"
        );
    }

    #[test]
    fn small_lambda_separates_trap_door_from_basin() {
        let p = params(3, 1e-6, 0.0);
        let grid = basin_components(
            &p,
            escape_time_grid(&p, Rect::centered_square(p.escape_radius * 1.05), (513, 513), 16)
                .unwrap(),
        )
        .unwrap();
        assert!(!grid.merged);
        assert_eq!(grid.label_at(Complex64::new(0.0, 0.0)), Some(BasinLabel::TrapDoor));
        // The trap door hugs the pole and the basin stays outside the ring
        // of circles, so an annulus between them holds neither label.
        for y in 0..grid.height {
            for x in 0..grid.width {
                let z = grid.pixel_center(x, y);
                let l = grid.label[grid.index(x, y)];
                if l == BasinLabel::TrapDoor {
                    assert!(z.norm() < 0.05, "trap door pixel at |z| = {}", z.norm());
                }
                if l == BasinLabel::Basin {
                    assert!(z.norm() > 0.5, "basin pixel at |z| = {}", z.norm());
                }
            }
        }
        let counts = |want: BasinLabel| grid.label.iter().filter(|&&l| l == want).count();
        assert!(counts(BasinLabel::Basin) > 0);
        assert!(counts(BasinLabel::TrapDoor) > 0);
        assert!(counts(BasinLabel::NonEscaping) > 0, "no separating region");
    }

    #[test]
    fn large_lambda_merges_the_fills() {
        let p = params(3, 100.0, 0.0);
        let grid = basin_components(
            &p,
            escape_time_grid(&p, Rect::centered_square(p.escape_radius * 1.05), (257, 257), 500)
                .unwrap(),
        )
        .unwrap();
        assert!(grid.merged);
        assert_eq!(grid.label_at(Complex64::new(0.0, 0.0)), Some(BasinLabel::Basin));
        assert!(grid.label.iter().all(|&l| l != BasinLabel::TrapDoor));
    }

    #[test]
    fn too_coarse_a_grid_for_the_seed_disk_errors() {
        let p = params(3, 1e-6, 0.0);
        let grid = escape_time_grid(&p, Rect::centered_square(2.0), (16, 16), 100).unwrap();
        assert!(matches!(
            basin_components(&p, grid),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn oracle_identifies_the_three_reference_regimes() {
        let big = classify_oracle(&params(3, 100.0, 0.0), 256, 2000);
        assert_eq!(big.kind, ClassKind::Escape(0), "{}", big.diagnostics);
        let tiny = classify_oracle(&params(3, 1e-6, 0.0), 512, 2000);
        assert_eq!(tiny.kind, ClassKind::Escape(2), "{}", tiny.diagnostics);
        let hole = classify_oracle(&params(3, 0.0, 0.125), 512, 2000);
        assert_eq!(hole.kind, ClassKind::Escape(3), "{}", hole.diagnostics);
    }

    #[test]
    fn fast_classifier_matches_the_oracle_on_the_references() {
        for (re, im, want) in [
            (100.0, 0.0, ClassKind::Escape(0)),
            (1e-6, 0.0, ClassKind::Escape(2)),
            (0.0, 0.125, ClassKind::Escape(3)),
        ] {
            let got = classify_fast(&params(3, re, im), CLASSIFY_MAXITER);
            assert_eq!(got.kind, want, "λ = {re}+{im}i: {}", got.diagnostics);
        }
    }

    #[test]
    fn fixed_critical_orbit_never_escapes() {
        let got = classify_fast(&params(3, 0.125, 0.0), CLASSIFY_MAXITER);
        assert_eq!(got.kind, ClassKind::NonEscape);
    }

    #[test]
    fn level_one_is_never_reported() {
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..2000 {
            let lam = Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
            if lam.norm() < 1e-6 {
                continue;
            }
            let got = classify_fast(&params(3, lam.re, lam.im), 300);
            assert_ne!(got.kind, ClassKind::Escape(1), "λ = {lam}");
        }
    }

    #[test]
    fn fast_classifier_respects_conjugation_symmetry() {
        let mut rng = StdRng::seed_from_u64(37);
        for _ in 0..500 {
            let lam = Complex64::new(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4));
            if lam.norm() < 1e-6 {
                continue;
            }
            let a = classify_fast(&params(3, lam.re, lam.im), 500);
            let b = classify_fast(&params(3, lam.re, -lam.im), 500);
            assert_eq!(a.kind, b.kind, "λ = {lam}");
        }
    }

    #[test]
    fn fast_classifier_respects_the_parameter_rotation() {
        let mut rng = StdRng::seed_from_u64(41);
        let rot = Complex64::from_polar(1.0, std::f64::consts::TAU / 2.0);
        for _ in 0..500 {
            let lam = Complex64::new(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4));
            if lam.norm() < 1e-6 {
                continue;
            }
            let rl = rot * lam;
            let a = classify_fast(&params(3, lam.re, lam.im), 500);
            let b = classify_fast(&params(3, rl.re, rl.im), 500);
            assert_eq!(a.kind, b.kind, "λ = {lam}");
        }
    }

    #[test]
    fn area_estimates_shrink_under_refinement() {
        let p = params(3, 100.0, 0.0);
        let areas = julia_area_estimate(&p, &[256, 512, 1024]).unwrap();
        assert!(areas.iter().all(|&a| a > 0.0), "{areas:?}");
        assert!(areas[0] > areas[1] && areas[1] > areas[2], "{areas:?}");
        assert!(areas[1] <= 0.5 * areas[0], "{areas:?}");
        assert!(areas[2] <= 0.5 * areas[1], "{areas:?}");
    }

    #[test]
    fn render_produces_a_well_formed_ppm() {
        let p = params(3, 0.0, 0.125);
        let img = render_julia(&p, Rect::centered_square(1.6), (64, 48)).unwrap();
        let ppm = img.to_ppm();
        assert!(ppm.starts_with(b"P6\n64 48\n255\n"));
        assert_eq!(ppm.len(), b"P6\n64 48\n255\n".len() + 3 * 64 * 48);
        assert!(img.data.iter().any(|&b| b != 0), "image is all black");
    }
}
