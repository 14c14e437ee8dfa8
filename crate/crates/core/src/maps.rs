//! Dense grasp configuration maps.
//!
//! A prediction is four `H x W` grids: quality `Q` in `[0, 1]`, the rotation
//! encoded as `(sin 2phi, cos 2phi)` components in `[-1, 1]`, and the opening
//! width normalized by [`WIDTH_NORM`] into `[0, 1]`. The two-component angle
//! encoding resolves the pi-symmetry of antipodal grasps.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::geometry::{pixels_inside, Grasp, MAX_GRASP_WIDTH};
use crate::scalar::{real, Real};

/// Width normalization constant in pixels.
pub const WIDTH_NORM: f64 = MAX_GRASP_WIDTH;

/// Per-pixel grasp configuration maps.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigMaps<F> {
    pub q: Array2<F>,
    pub phi_s: Array2<F>,
    pub phi_c: Array2<F>,
    pub w: Array2<F>,
}

impl<F: Real> ConfigMaps<F> {
    /// Builds maps from the four grids, validating shapes and value ranges.
    pub fn new(
        q: Array2<F>,
        phi_s: Array2<F>,
        phi_c: Array2<F>,
        w: Array2<F>,
    ) -> Result<Self> {
        let dim = q.dim();
        for (name, grid) in [("phi_s", &phi_s), ("phi_c", &phi_c), ("w", &w)] {
            if grid.dim() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "{name} is {:?}, expected {:?}",
                    grid.dim(),
                    dim
                )));
            }
        }
        let unit = |v: &F| *v >= F::zero() && *v <= F::one();
        let signed = |v: &F| *v >= -F::one() && *v <= F::one();
        if !q.iter().all(unit) || !w.iter().all(unit) {
            return Err(Error::invalid("Q and W values must lie in [0, 1]"));
        }
        if !phi_s.iter().all(signed) || !phi_c.iter().all(signed) {
            return Err(Error::invalid("angle components must lie in [-1, 1]"));
        }
        Ok(ConfigMaps { q, phi_s, phi_c, w })
    }

    /// All-zero maps of the given shape.
    pub fn zeros(shape: (usize, usize)) -> Self {
        ConfigMaps {
            q: Array2::zeros(shape),
            phi_s: Array2::zeros(shape),
            phi_c: Array2::zeros(shape),
            w: Array2::zeros(shape),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.q.dim()
    }

    /// Grasp read off the maps at one pixel; width is denormalized.
    pub fn grasp_at(&self, row: usize, col: usize, quality: f64) -> Result<Grasp> {
        let angle = recover_angle(self.phi_s[[row, col]], self.phi_c[[row, col]]);
        let width = (self.w[[row, col]].to_f64().unwrap() * WIDTH_NORM)
            .clamp(0.0, MAX_GRASP_WIDTH);
        Grasp::new(row, col, angle.to_f64().unwrap(), width, quality.clamp(0.0, 1.0))
    }
}

/// Quadrant-aware angle recovery for one pixel: `0.5 * atan2(s, c)`.
///
/// `(0, 0)` decodes to angle 0.
#[inline]
pub fn recover_angle<F: Real>(s: F, c: F) -> F {
    if s == F::zero() && c == F::zero() {
        F::zero()
    } else {
        s.atan2(c) * real::<F>(0.5)
    }
}

/// Per-pixel angle map in `[-pi/2, pi/2]` from the component maps.
pub fn recover_angle_map<F: Real>(phi_s: &Array2<F>, phi_c: &Array2<F>) -> Result<Array2<F>> {
    if phi_s.dim() != phi_c.dim() {
        return Err(Error::ShapeMismatch(format!(
            "phi_s {:?} vs phi_c {:?}",
            phi_s.dim(),
            phi_c.dim()
        )));
    }
    let mut out = Array2::zeros(phi_s.dim());
    for ((o, s), c) in out.iter_mut().zip(phi_s.iter()).zip(phi_c.iter()) {
        *o = recover_angle(*s, *c);
    }
    Ok(out)
}

/// Angle components `(sin 2phi, cos 2phi)` for one angle.
#[inline]
pub fn encode_angle<F: Real>(angle: f64) -> (F, F) {
    let two = 2.0 * angle;
    (real(two.sin()), real(two.cos()))
}

/// One sparse supervision target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseLabel<F> {
    pub row: usize,
    pub col: usize,
    /// Row-major flat pixel index.
    pub flat_index: usize,
    pub sin2: F,
    pub cos2: F,
    pub width_norm: F,
}

/// Converts grasp labels into sparse per-pixel targets.
///
/// Only the labeled pixels appear in the result; everything else is left
/// untouched by construction.
pub fn encode_labels_sparse<F: Real>(
    labels: &[Grasp],
    shape: (usize, usize),
) -> Result<Vec<SparseLabel<F>>> {
    let (h, w) = shape;
    labels
        .iter()
        .map(|g| {
            if g.center_row >= h || g.center_col >= w {
                return Err(Error::invalid(format!(
                    "label center ({}, {}) outside {h}x{w} image",
                    g.center_row, g.center_col
                )));
            }
            let (sin2, cos2) = encode_angle(g.angle);
            Ok(SparseLabel {
                row: g.center_row,
                col: g.center_col,
                flat_index: g.center_row * w + g.center_col,
                sin2,
                cos2,
                width_norm: real((g.width / WIDTH_NORM).clamp(0.0, 1.0)),
            })
        })
        .collect()
}

/// Densifies sparse labels into full target maps.
///
/// Each label paints the central `footprint_ratio` slice of its rectangle
/// (along the closing axis, full jaw height) with quality 1 and its own
/// angle/width values; unpainted pixels stay zero, which is exactly the
/// densification used by image-wise regression baselines. Later labels
/// overwrite earlier ones where footprints overlap.
pub fn encode_labels_dense<F: Real>(
    labels: &[Grasp],
    shape: (usize, usize),
    footprint_ratio: f64,
    height_ratio: f64,
) -> Result<ConfigMaps<F>> {
    if !(footprint_ratio > 0.0 && footprint_ratio <= 1.0) {
        return Err(Error::invalid(format!(
            "footprint_ratio {footprint_ratio} outside (0, 1]"
        )));
    }
    let mut maps = ConfigMaps::zeros(shape);
    for g in labels {
        if g.width <= 0.0 {
            continue;
        }
        let rect = crate::geometry::Rect::from_center(
            g.center_xy(),
            g.angle,
            footprint_ratio * g.width,
            height_ratio * g.width,
        );
        let (sin2, cos2) = encode_angle::<F>(g.angle);
        let wn = real::<F>((g.width / WIDTH_NORM).clamp(0.0, 1.0));
        for (r, c) in pixels_inside(&rect, shape.0, shape.1) {
            maps.q[[r, c]] = F::one();
            maps.phi_s[[r, c]] = sin2;
            maps.phi_c[[r, c]] = cos2;
            maps.w[[r, c]] = wn;
        }
    }
    Ok(maps)
}

/// Peak-extraction parameters.
#[derive(Debug, Clone, Copy)]
pub struct ExtractParams {
    /// Gaussian smoothing bandwidth applied to Q before peak finding, px.
    pub smooth_sigma: f64,
    /// Minimum distance between returned peaks, px.
    pub nms_radius: f64,
}

impl Default for ExtractParams {
    fn default() -> Self {
        ExtractParams {
            smooth_sigma: 2.0,
            nms_radius: 10.0,
        }
    }
}

/// Separable Gaussian blur with kernel renormalization at the borders, so a
/// constant map stays exactly constant.
pub fn gaussian_smooth<F: Real>(grid: &Array2<F>, sigma: f64) -> Array2<F> {
    if sigma <= 0.0 {
        return grid.clone();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<F> = (-radius..=radius)
        .map(|i| real((-0.5 * (i as f64 / sigma).powi(2)).exp()))
        .collect();
    let (h, w) = grid.dim();
    let pass = |src: &Array2<F>, rows: bool| {
        let mut dst = Array2::zeros((h, w));
        for r in 0..h {
            for c in 0..w {
                let mut acc = F::zero();
                let mut norm = F::zero();
                for (ki, kv) in kernel.iter().enumerate() {
                    let off = ki as isize - radius;
                    let (rr, cc) = if rows {
                        (r as isize + off, c as isize)
                    } else {
                        (r as isize, c as isize + off)
                    };
                    if rr >= 0 && rr < h as isize && cc >= 0 && cc < w as isize {
                        acc += *kv * src[[rr as usize, cc as usize]];
                        norm += *kv;
                    }
                }
                dst[[r, c]] = acc / norm;
            }
        }
        dst
    };
    pass(&pass(grid, true), false)
}

/// Deterministic top-k grasp extraction.
///
/// Q is smoothed, local maxima are collected, and peaks are accepted greedily
/// by descending quality subject to a minimum pairwise distance. Ties are
/// broken by the lower row-major flat index. Fewer than `k` maxima simply
/// yield a shorter list.
pub fn extract_grasps<F: Real>(
    maps: &ConfigMaps<F>,
    k: usize,
    params: &ExtractParams,
) -> Result<Vec<Grasp>> {
    if k == 0 {
        return Err(Error::invalid("extraction with k = 0"));
    }
    let (h, w) = maps.shape();
    let smooth = gaussian_smooth(&maps.q, params.smooth_sigma);

    // local maxima under >= against the 8-neighborhood
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let v = smooth[[r, c]];
            let mut is_max = true;
            'scan: for dr in -1..=1isize {
                for dc in -1..=1isize {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let (rr, cc) = (r as isize + dr, c as isize + dc);
                    if rr < 0 || rr >= h as isize || cc < 0 || cc >= w as isize {
                        continue;
                    }
                    if smooth[[rr as usize, cc as usize]] > v {
                        is_max = false;
                        break 'scan;
                    }
                }
            }
            if is_max {
                candidates.push((r, c));
            }
        }
    }

    // descending quality, flat index breaks ties; both orders are total
    candidates.sort_by(|a, b| {
        let (qa, qb) = (smooth[[a.0, a.1]], smooth[[b.0, b.1]]);
        qb.partial_cmp(&qa)
            .unwrap()
            .then((a.0 * w + a.1).cmp(&(b.0 * w + b.1)))
    });

    let r2 = params.nms_radius * params.nms_radius;
    let mut picked: Vec<(usize, usize)> = Vec::new();
    for cand in candidates {
        if picked.len() >= k {
            break;
        }
        let far_enough = picked.iter().all(|p| {
            let dr = p.0 as f64 - cand.0 as f64;
            let dc = p.1 as f64 - cand.1 as f64;
            dr * dr + dc * dc >= r2
        });
        if far_enough {
            picked.push(cand);
        }
    }

    picked
        .into_iter()
        .map(|(r, c)| maps.grasp_at(r, c, smooth[[r, c]].to_f64().unwrap()))
        .collect()
}
