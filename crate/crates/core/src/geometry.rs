//! Planar grasp representation and rectangle geometry.
//!
//! A grasp is a gripper pose in image coordinates: a center pixel, a rotation
//! of the closing axis, and an opening width in pixels. Rectangle conversion,
//! intersection-over-union, and the angle metric below are what the
//! evaluation stack uses to decide whether a predicted grasp matches a label.
//!
//! Coordinate convention: `x = column`, `y = row`. Angles are measured
//! counterclockwise from the +x axis with y pointing *up*, so a direction
//! angle `phi` maps to the image-plane vector `(cos phi, -sin phi)`.

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

use std::f64::consts::{FRAC_PI_2, PI};

/// Gripper widths are expressed in pixels and capped at this value.
pub const MAX_GRASP_WIDTH: f64 = 150.0;

/// IoU threshold of the success criterion.
pub const DEFAULT_IOU_THRESHOLD: f64 = 0.25;

/// Angle threshold of the success criterion (30 degrees).
pub const DEFAULT_ANGLE_THRESHOLD: f64 = PI / 6.0;

/// Rectangle height as a fraction of grasp width when no jaw size is known.
pub const DEFAULT_HEIGHT_RATIO: f64 = 0.5;

/// One planar antipodal grasp.
///
/// `angle` is always stored normalized to `[-pi/2, pi/2]`; antipodal grasps
/// are symmetric under rotation by pi so that interval covers every gripper
/// pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grasp {
    pub center_row: usize,
    pub center_col: usize,
    pub angle: f64,
    pub width: f64,
    pub quality: f64,
}

impl Grasp {
    /// Builds a grasp, normalizing the angle and validating ranges.
    pub fn new(
        center_row: usize,
        center_col: usize,
        angle: f64,
        width: f64,
        quality: f64,
    ) -> Result<Self> {
        if !width.is_finite() || !(0.0..=MAX_GRASP_WIDTH).contains(&width) {
            return Err(Error::invalid(format!(
                "grasp width {width} outside [0, {MAX_GRASP_WIDTH}]"
            )));
        }
        if !quality.is_finite() || !(0.0..=1.0).contains(&quality) {
            return Err(Error::invalid(format!(
                "grasp quality {quality} outside [0, 1]"
            )));
        }
        Ok(Grasp {
            center_row,
            center_col,
            angle: normalize_angle(angle)?,
            width,
            quality,
        })
    }

    /// Center in (x, y) = (col, row) coordinates.
    pub fn center_xy(&self) -> [f64; 2] {
        [self.center_col as f64, self.center_row as f64]
    }

    /// Unit vector along the closing axis.
    pub fn axis_xy(&self) -> [f64; 2] {
        [self.angle.cos(), -self.angle.sin()]
    }

    /// Oriented rectangle spanned by the gripper: `width` along the closing
    /// axis, `height_ratio * width` across it.
    pub fn to_rectangle(&self, height_ratio: f64) -> Result<GraspRectangle> {
        if !(height_ratio > 0.0) {
            return Err(Error::invalid(format!(
                "height_ratio {height_ratio} must be positive"
            )));
        }
        if self.width <= 0.0 {
            return Err(Error::DegenerateGeometry(format!(
                "grasp at ({}, {}) has zero width",
                self.center_row, self.center_col
            )));
        }
        Ok(Rect::from_center(
            self.center_xy(),
            self.angle,
            self.width,
            height_ratio * self.width,
        ))
    }
}

/// Normalizes an angle into `[-pi/2, pi/2]` modulo pi.
pub fn normalize_angle(angle: f64) -> Result<f64> {
    if !angle.is_finite() {
        return Err(Error::invalid(format!("non-finite angle {angle}")));
    }
    let r = angle.rem_euclid(PI);
    Ok(if r > FRAC_PI_2 { r - PI } else { r })
}

/// Symmetry-aware angular distance in `[0, pi/2]`.
///
/// Antipodal grasps are pi-periodic, so the distance between two rotations is
/// the smaller of the direct difference and its pi-complement.
pub fn angle_diff(a: f64, b: f64) -> Result<f64> {
    let d = (normalize_angle(a)? - normalize_angle(b)?).abs();
    Ok(if d > FRAC_PI_2 { PI - d } else { d })
}

/// An oriented rectangle given by four corners in (x, y) image coordinates,
/// stored counterclockwise (positive shoelace signed area).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect<F> {
    corners: [[F; 2]; 4],
}

/// Rectangle type used by the grasp metrics.
pub type GraspRectangle = Rect<f64>;

/// Tolerance for the opposite-sides-equal rectangle check, in pixels.
const RECT_SIDE_TOL: f64 = 1e-6;

impl<F: Real> Rect<F> {
    /// Builds a rectangle from explicit corners.
    ///
    /// The corners must form a (possibly rotated) rectangle: opposite sides
    /// equal within 1e-6 px, adjacent sides perpendicular, nonzero area.
    /// Orientation is normalized to counterclockwise.
    pub fn from_corners(mut corners: [[F; 2]; 4]) -> Result<Self> {
        let side = |i: usize, j: usize| {
            let dx = corners[j][0] - corners[i][0];
            let dy = corners[j][1] - corners[i][1];
            (dx * dx + dy * dy).sqrt()
        };
        let (s01, s12, s23, s30) = (side(0, 1), side(1, 2), side(2, 3), side(3, 0));
        let tol = real::<F>(RECT_SIDE_TOL);
        if (s01 - s23).abs() > tol || (s12 - s30).abs() > tol {
            return Err(Error::DegenerateGeometry(
                "corners do not form a rectangle: opposite sides differ".into(),
            ));
        }
        let e0 = [corners[1][0] - corners[0][0], corners[1][1] - corners[0][1]];
        let e1 = [corners[2][0] - corners[1][0], corners[2][1] - corners[1][1]];
        let dot = e0[0] * e1[0] + e0[1] * e1[1];
        if dot.abs() > tol * (s01 + s12).max(F::one()) {
            return Err(Error::DegenerateGeometry(
                "corners do not form a rectangle: sides not perpendicular".into(),
            ));
        }
        let area = shoelace(&corners);
        if area.abs() <= tol * tol {
            return Err(Error::DegenerateGeometry("rectangle has zero area".into()));
        }
        if area < F::zero() {
            corners.reverse();
        }
        Ok(Rect { corners })
    }

    /// Rectangle centered at `center`, long axis along `angle`, side lengths
    /// `(len_along, len_across)`.
    pub fn from_center(center: [F; 2], angle: F, len_along: F, len_across: F) -> Self {
        let u = [angle.cos(), -angle.sin()];
        let v = [-u[1], u[0]];
        let half = real::<F>(0.5);
        let (ha, hb) = (len_along * half, len_across * half);
        let corner = |su: F, sv: F| {
            [
                center[0] + su * ha * u[0] + sv * hb * v[0],
                center[1] + su * ha * u[1] + sv * hb * v[1],
            ]
        };
        let mut corners = [
            corner(F::one(), F::one()),
            corner(-F::one(), F::one()),
            corner(-F::one(), -F::one()),
            corner(F::one(), -F::one()),
        ];
        if shoelace(&corners) < F::zero() {
            corners.reverse();
        }
        Rect { corners }
    }

    pub fn corners(&self) -> &[[F; 2]; 4] {
        &self.corners
    }

    pub fn area(&self) -> F {
        shoelace(&self.corners).abs()
    }

    pub fn center(&self) -> [F; 2] {
        let four = real::<F>(4.0);
        let mut c = [F::zero(); 2];
        for p in &self.corners {
            c[0] = c[0] + p[0];
            c[1] = c[1] + p[1];
        }
        [c[0] / four, c[1] / four]
    }

    /// Axis-aligned bounding box `(x_min, y_min, x_max, y_max)`.
    pub fn bbox(&self) -> [F; 4] {
        let mut b = [
            self.corners[0][0],
            self.corners[0][1],
            self.corners[0][0],
            self.corners[0][1],
        ];
        for p in &self.corners[1..] {
            b[0] = b[0].min(p[0]);
            b[1] = b[1].min(p[1]);
            b[2] = b[2].max(p[0]);
            b[3] = b[3].max(p[1]);
        }
        b
    }

    /// Inclusive point-in-rectangle test.
    pub fn contains(&self, p: [F; 2]) -> bool {
        for i in 0..4 {
            let a = self.corners[i];
            let b = self.corners[(i + 1) % 4];
            let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
            if cross < -real::<F>(1e-12) {
                return false;
            }
        }
        true
    }
}

fn shoelace<F: Real>(pts: &[[F; 2]; 4]) -> F {
    let mut acc = F::zero();
    for i in 0..4 {
        let a = pts[i];
        let b = pts[(i + 1) % 4];
        acc = acc + (a[0] * b[1] - b[0] * a[1]);
    }
    acc * real::<F>(0.5)
}

fn polygon_area<F: Real>(pts: &[[F; 2]]) -> F {
    if pts.len() < 3 {
        return F::zero();
    }
    let mut acc = F::zero();
    for i in 0..pts.len() {
        let a = pts[i];
        let b = pts[(i + 1) % pts.len()];
        acc = acc + (a[0] * b[1] - b[0] * a[1]);
    }
    (acc * real::<F>(0.5)).abs()
}

/// Clips `subject` against one half-plane (left of a->b).
fn clip_halfplane<F: Real>(subject: &[[F; 2]], a: [F; 2], b: [F; 2]) -> Vec<[F; 2]> {
    let inside = |p: [F; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    let mut out = Vec::with_capacity(subject.len() + 2);
    for i in 0..subject.len() {
        let cur = subject[i];
        let prev = subject[(i + subject.len() - 1) % subject.len()];
        let (dc, dp) = (inside(cur), inside(prev));
        let crossing = |p: [F; 2], q: [F; 2], dp: F, dq: F| {
            let t = dp / (dp - dq);
            [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
        };
        if dc >= F::zero() {
            if dp < F::zero() {
                out.push(crossing(prev, cur, dp, dc));
            }
            out.push(cur);
        } else if dp >= F::zero() {
            out.push(crossing(prev, cur, dp, dc));
        }
    }
    out
}

/// Intersection polygon of two convex rectangles (Sutherland-Hodgman).
fn intersect<F: Real>(a: &Rect<F>, b: &Rect<F>) -> Vec<[F; 2]> {
    let mut poly: Vec<[F; 2]> = a.corners.to_vec();
    for i in 0..4 {
        if poly.is_empty() {
            break;
        }
        poly = clip_halfplane(&poly, b.corners[i], b.corners[(i + 1) % 4]);
    }
    poly
}

/// Intersection-over-union of two oriented rectangles, in `[0, 1]`.
pub fn rect_iou<F: Real>(a: &Rect<F>, b: &Rect<F>) -> Result<F> {
    let (area_a, area_b) = (a.area(), b.area());
    if area_a <= F::zero() || area_b <= F::zero() {
        return Err(Error::DegenerateGeometry(
            "IoU of a zero-area rectangle".into(),
        ));
    }
    let inter = polygon_area(&intersect(a, b));
    let union = area_a + area_b - inter;
    Ok((inter / union).min(F::one()))
}

/// Success criterion: a prediction matches some label with IoU at least
/// `iou_threshold` and rotation within `angle_threshold`.
pub fn is_success_with(
    pred: &Grasp,
    labels: &[Grasp],
    iou_threshold: f64,
    angle_threshold: f64,
    height_ratio: f64,
) -> Result<bool> {
    if labels.is_empty() {
        return Err(Error::invalid("success test against an empty label set"));
    }
    if pred.width <= 0.0 {
        return Ok(false);
    }
    let pred_rect = pred.to_rectangle(height_ratio)?;
    for label in labels {
        if angle_diff(pred.angle, label.angle)? > angle_threshold {
            continue;
        }
        if label.width <= 0.0 {
            continue;
        }
        let label_rect = label.to_rectangle(height_ratio)?;
        if rect_iou(&pred_rect, &label_rect)? >= iou_threshold {
            return Ok(true);
        }
    }
    Ok(false)
}

/// [`is_success_with`] at the standard thresholds (IoU 0.25, angle 30 deg,
/// rectangle height half the width).
pub fn is_success(pred: &Grasp, labels: &[Grasp]) -> Result<bool> {
    is_success_with(
        pred,
        labels,
        DEFAULT_IOU_THRESHOLD,
        DEFAULT_ANGLE_THRESHOLD,
        DEFAULT_HEIGHT_RATIO,
    )
}

/// Pixels (row, col) of an `h x w` grid whose centers lie inside `rect`.
pub fn pixels_inside(rect: &Rect<f64>, h: usize, w: usize) -> Vec<(usize, usize)> {
    let [x0, y0, x1, y1] = rect.bbox();
    let c0 = x0.floor().max(0.0) as usize;
    let r0 = y0.floor().max(0.0) as usize;
    let c1 = (x1.ceil() as isize).clamp(0, w as isize - 1) as usize;
    let r1 = (y1.ceil() as isize).clamp(0, h as isize - 1) as usize;
    let mut out = Vec::new();
    if x1 < 0.0 || y1 < 0.0 || c0 >= w || r0 >= h {
        return out;
    }
    for r in r0..=r1 {
        for c in c0..=c1 {
            if rect.contains([c as f64, r as f64]) {
                out.push((r, c));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Brute-force IoU by sampling a sub-pixel grid; independent of the
    /// polygon-clipping path.
    fn raster_iou(a: &Rect<f64>, b: &Rect<f64>, step: f64) -> f64 {
        let ba = a.bbox();
        let bb = b.bbox();
        let x0 = ba[0].min(bb[0]);
        let y0 = ba[1].min(bb[1]);
        let x1 = ba[2].max(bb[2]);
        let y1 = ba[3].max(bb[3]);
        let (mut inter, mut union) = (0u64, 0u64);
        let nx = ((x1 - x0) / step).ceil() as usize + 1;
        let ny = ((y1 - y0) / step).ceil() as usize + 1;
        for iy in 0..ny {
            for ix in 0..nx {
                let p = [x0 + (ix as f64 + 0.5) * step, y0 + (iy as f64 + 0.5) * step];
                let (ia, ib) = (a.contains(p), b.contains(p));
                if ia && ib {
                    inter += 1;
                }
                if ia || ib {
                    union += 1;
                }
            }
        }
        inter as f64 / union as f64
    }

    fn grasp(row: usize, col: usize, angle: f64, width: f64) -> Grasp {
        Grasp::new(row, col, angle, width, 1.0).unwrap()
    }

    #[test]
    fn normalize_angle_identity_and_symmetry() {
        assert_eq!(normalize_angle(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(normalize_angle(PI).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(normalize_angle(2.0).unwrap(), 2.0 - PI, epsilon = 1e-12);
        assert!(normalize_angle(f64::NAN).is_err());
        assert!(normalize_angle(f64::INFINITY).is_err());
    }

    #[test]
    fn normalize_angle_idempotent_and_pi_periodic() {
        for i in 0..500 {
            let x = -7.0 + i as f64 * 0.031;
            let n = normalize_angle(x).unwrap();
            assert!((-FRAC_PI_2..=FRAC_PI_2).contains(&n));
            assert_abs_diff_eq!(normalize_angle(n).unwrap(), n, epsilon = 1e-12);
            assert_abs_diff_eq!(normalize_angle(x + PI).unwrap(), n, epsilon = 1e-9);
        }
    }

    #[test]
    fn angle_diff_examples() {
        assert_eq!(angle_diff(0.3, 0.3).unwrap(), 0.0);
        assert_abs_diff_eq!(angle_diff(FRAC_PI_2, -FRAC_PI_2).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(angle_diff(0.1, -0.4).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn axis_aligned_rectangle() {
        let r = grasp(50, 50, 0.0, 40.0).to_rectangle(0.5).unwrap();
        assert_abs_diff_eq!(r.area(), 800.0, epsilon = 1e-9);
        let b = r.bbox();
        assert_abs_diff_eq!(b[0], 30.0, epsilon = 1e-9);
        assert_abs_diff_eq!(b[1], 40.0, epsilon = 1e-9);
        assert_abs_diff_eq!(b[2], 70.0, epsilon = 1e-9);
        assert_abs_diff_eq!(b[3], 60.0, epsilon = 1e-9);
    }

    #[test]
    fn rotated_rectangle_is_ninety_degree_image() {
        let r0 = grasp(50, 50, 0.0, 40.0).to_rectangle(0.5).unwrap();
        let r90 = grasp(50, 50, FRAC_PI_2, 40.0).to_rectangle(0.5).unwrap();
        let b0 = r0.bbox();
        let b90 = r90.bbox();
        // bbox extents swap when the rectangle rotates a quarter turn
        assert_abs_diff_eq!(b0[2] - b0[0], b90[3] - b90[1], epsilon = 1e-9);
        assert_abs_diff_eq!(b0[3] - b0[1], b90[2] - b90[0], epsilon = 1e-9);
        assert_abs_diff_eq!(r90.area(), 800.0, epsilon = 1e-9);
    }

    #[test]
    fn rectangle_corners_match_direct_trigonometry() {
        // independent oracle: rotate the canonical corner offsets with an
        // explicit basis (closing axis, quarter-turn of the closing axis)
        let (cx, cy) = (20.0, 10.0);
        let phi = PI / 6.0;
        let (w, h) = (30.0, 15.0);
        let r = grasp(10, 20, phi, w).to_rectangle(0.5).unwrap();
        let axis = [phi.cos(), -phi.sin()];
        let quarter = [(phi + FRAC_PI_2).cos(), -(phi + FRAC_PI_2).sin()];
        let mut expected = Vec::new();
        for (su, sv) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            expected.push([
                cx + su * w / 2.0 * axis[0] + sv * h / 2.0 * quarter[0],
                cy + su * w / 2.0 * axis[1] + sv * h / 2.0 * quarter[1],
            ]);
        }
        // every expected corner appears among the produced corners
        for e in expected {
            assert!(
                r.corners()
                    .iter()
                    .any(|c| (c[0] - e[0]).abs() < 1e-9 && (c[1] - e[1]).abs() < 1e-9),
                "missing corner {e:?} in {:?}",
                r.corners()
            );
        }
    }

    #[test]
    fn degenerate_width_rejected() {
        let g = grasp(10, 10, 0.0, 0.0);
        assert!(g.to_rectangle(0.5).is_err());
    }

    #[test]
    fn iou_identity_and_disjoint() {
        let a = grasp(50, 50, 0.3, 40.0).to_rectangle(0.5).unwrap();
        assert_eq!(rect_iou(&a, &a).unwrap(), 1.0);
        let b = grasp(200, 200, 0.3, 40.0).to_rectangle(0.5).unwrap();
        assert_eq!(rect_iou(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn iou_offset_along_long_axis() {
        // two 40x20 rects offset by 20 px: inter 20x20, union 2*800-400
        let a = grasp(50, 50, 0.0, 40.0).to_rectangle(0.5).unwrap();
        let b = grasp(50, 70, 0.0, 40.0).to_rectangle(0.5).unwrap();
        let iou = rect_iou(&a, &b).unwrap();
        assert_abs_diff_eq!(iou, 1.0 / 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(iou, raster_iou(&a, &b, 0.1), epsilon = 0.02);
    }

    #[test]
    fn iou_symmetric_and_matches_raster_oracle() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..60 {
            let mk = |r: &mut dyn FnMut() -> f64| {
                let g = Grasp::new(
                    (20.0 + r() * 60.0) as usize,
                    (20.0 + r() * 60.0) as usize,
                    (r() - 0.5) * PI,
                    10.0 + r() * 50.0,
                    1.0,
                )
                .unwrap();
                g.to_rectangle(0.3 + r() * 0.5).unwrap()
            };
            let a = mk(&mut next);
            let b = mk(&mut next);
            let ab = rect_iou(&a, &b).unwrap();
            let ba = rect_iou(&b, &a).unwrap();
            assert_abs_diff_eq!(ab, ba, epsilon = 1e-12);
            assert_abs_diff_eq!(ab, raster_iou(&a, &b, 0.1), epsilon = 0.02);
        }
    }

    #[test]
    fn success_criterion() {
        let label = grasp(50, 50, 0.2, 40.0);
        assert!(is_success(&label, &[label]).unwrap());

        let far = grasp(200, 200, 0.2, 40.0);
        assert!(!is_success(&far, &[label]).unwrap());

        // same center, rotated 35 degrees: IoU stays above 0.25 but the
        // angle gate fails
        let rot = grasp(50, 50, 0.2 + 35.0_f64.to_radians(), 40.0);
        let iou = rect_iou(
            &rot.to_rectangle(0.5).unwrap(),
            &label.to_rectangle(0.5).unwrap(),
        )
        .unwrap();
        assert!(iou >= 0.25, "construction broke: iou = {iou}");
        assert!(!is_success(&rot, &[label]).unwrap());

        assert!(is_success(&label, &[]).is_err());
    }

    #[test]
    fn pixels_inside_counts_area() {
        let r = grasp(50, 50, 0.0, 40.0).to_rectangle(0.5).unwrap();
        let n = pixels_inside(&r, 100, 100).len() as f64;
        // 41x21 lattice points fall inside the closed 40x20 rect
        assert!((n - 800.0).abs() < 70.0, "painted {n}");
    }
}
