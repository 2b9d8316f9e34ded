//! Circle / grid-cell intersection areas.
//!
//! The analytic routine integrates the vertical extent of the disk clipped to
//! the cell over x. Breakpoints are placed where the circle crosses the
//! cell's horizontal edges, so on every piece the upper and lower bounds are
//! each either a straight edge or an arc, and the arc has the closed-form
//! antiderivative `(x·√(r²-x²) + r²·asin(x/r)) / 2`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{CellId, GridSpec, Point, Rect};

/// Intersections smaller than this (m²) are treated as empty.
pub const AREA_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) || !center.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "circle radius {radius} must be finite and >= 0"
            )));
        }
        Ok(Circle { center, radius })
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }
}

/// Antiderivative of `sqrt(r² - x²)`.
fn arc_primitive(x: f64, r: f64) -> f64 {
    let x = x.clamp(-r, r);
    0.5 * (x * (r * r - x * x).max(0.0).sqrt() + r * r * (x / r).clamp(-1.0, 1.0).asin())
}

/// Exact area of `circle ∩ rect`.
pub fn circle_rect_area(circle: &Circle, rect: &Rect) -> f64 {
    let r = circle.radius;
    if r <= 0.0 {
        return 0.0;
    }
    let x0 = rect.min.x - circle.center.x;
    let x1 = rect.max.x - circle.center.x;
    let y0 = rect.min.y - circle.center.y;
    let y1 = rect.max.y - circle.center.y;

    let lo = x0.max(-r);
    let hi = x1.min(r);
    if lo >= hi || y0 >= r || y1 <= -r {
        return 0.0;
    }

    let mut breaks = vec![lo, hi];
    for y in [y0, y1] {
        if y.abs() < r {
            let s = (r * r - y * y).sqrt();
            for b in [-s, s] {
                if b > lo && b < hi {
                    breaks.push(b);
                }
            }
        }
    }
    breaks.sort_by(f64::total_cmp);

    let mut area = 0.0;
    for w in breaks.windows(2) {
        let (u, v) = (w[0], w[1]);
        if v <= u {
            continue;
        }
        let m = 0.5 * (u + v);
        let h = (r * r - m * m).max(0.0).sqrt();
        let arc = arc_primitive(v, r) - arc_primitive(u, r);
        let (upper_at_m, upper) = if y1 < h {
            (y1, y1 * (v - u))
        } else {
            (h, arc)
        };
        let (lower_at_m, lower) = if y0 > -h {
            (y0, y0 * (v - u))
        } else {
            (-h, -arc)
        };
        if upper_at_m > lower_at_m {
            area += upper - lower;
        }
    }
    area.clamp(0.0, circle.area().min(rect.width() * rect.height()))
}

/// Exact area of intersection between `circle` and the square of `cell`.
pub fn circle_cell_area(circle: &Circle, cell: CellId, grid: &GridSpec) -> Result<f64> {
    let rect = grid.cell_bounds(cell)?;
    Ok(circle_rect_area(circle, &rect))
}

/// Monte Carlo estimate of [`circle_cell_area`]: the fraction of uniform
/// points in the disk that land in the cell, times the disk area.
pub fn mc_circle_cell_area(
    circle: &Circle,
    cell: CellId,
    grid: &GridSpec,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be >= 1".into()));
    }
    let rect = grid.cell_bounds(cell)?;
    if circle.radius == 0.0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..n_samples {
        let rho = circle.radius * rng.random::<f64>().sqrt();
        let theta = 2.0 * PI * rng.random::<f64>();
        let x = circle.center.x + rho * theta.cos();
        let y = circle.center.y + rho * theta.sin();
        if x >= rect.min.x && x < rect.max.x && y >= rect.min.y && y < rect.max.y {
            hits += 1;
        }
    }
    Ok(hits as f64 / n_samples as f64 * circle.area())
}

/// Intersection areas with every grid cell the circle reaches, dropping dust.
pub fn overlapped_cells(circle: &Circle, grid: &GridSpec) -> Vec<(CellId, f64)> {
    let r = circle.radius;
    if r <= 0.0 {
        return Vec::new();
    }
    let size = grid.cell_size();
    let origin = grid.origin();
    let span = |c: f64, o: f64, n: usize| -> Option<(usize, usize)> {
        let lo = ((c - r - o) / size).floor();
        let hi = ((c + r - o) / size).floor();
        if hi < 0.0 || lo >= n as f64 {
            return None;
        }
        Some((lo.max(0.0) as usize, (hi as usize).min(n - 1)))
    };
    let (Some((c0, c1)), Some((r0, r1))) = (
        span(circle.center.x, origin.x, grid.cols()),
        span(circle.center.y, origin.y, grid.rows()),
    ) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for row in r0..=r1 {
        for col in c0..=c1 {
            let cell = CellId(row * grid.cols() + col);
            let area = circle_cell_area(circle, cell, grid).expect("cell in range");
            if area > AREA_EPSILON {
                out.push((cell, area));
            }
        }
    }
    out
}

/// Weights `A_i / (π c²)` of every cell overlapped by the confidence circle.
///
/// The weights sum to the fraction of the disk that lies inside the grid.
pub fn assignment_weights(circle: &Circle, grid: &GridSpec) -> Result<Vec<(CellId, f64)>> {
    if !(circle.radius > 0.0) {
        return Err(Error::InvalidArgument(
            "assignment weights need a positive radius".into(),
        ));
    }
    let disk = circle.area();
    Ok(overlapped_cells(circle, grid)
        .into_iter()
        .map(|(cell, area)| (cell, area / disk))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(size: f64, cols: usize, rows: usize) -> GridSpec {
        GridSpec::new(Point::new(0.0, 0.0), size, cols, rows).unwrap()
    }

    #[test]
    fn fully_contained_circle() {
        let g = grid(4.0, 1, 1);
        let c = Circle::new(Point::new(2.0, 2.0), 1.0).unwrap();
        let a = circle_cell_area(&c, CellId(0), &g).unwrap();
        assert!((a - PI).abs() < 1e-12, "{a}");
    }

    #[test]
    fn corner_circle_splits_in_four() {
        let g = grid(1.0, 2, 2);
        let c = Circle::new(Point::new(1.0, 1.0), 0.5).unwrap();
        for cell in g.cells() {
            let a = circle_cell_area(&c, cell, &g).unwrap();
            assert!((a - PI * 0.25 / 4.0).abs() < 1e-12);
        }
        let w = assignment_weights(&c, &g).unwrap();
        assert_eq!(w.len(), 4);
        for (_, wi) in w {
            assert!((wi - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn disjoint_circle_has_zero_area() {
        let g = grid(1.0, 5, 5);
        let far = 1.0 + 2f64.sqrt() * 1.0;
        let c = Circle::new(Point::new(0.5 + far, 0.5), 1.0).unwrap();
        assert_eq!(circle_cell_area(&c, CellId(0), &g).unwrap(), 0.0);
        assert_eq!(mc_circle_cell_area(&c, CellId(0), &g, 1000, 1).unwrap(), 0.0);
    }

    #[test]
    fn invalid_inputs() {
        let g = grid(1.0, 2, 2);
        let c = Circle::new(Point::new(1.0, 1.0), 0.5).unwrap();
        assert_eq!(
            circle_cell_area(&c, CellId(4), &g),
            Err(Error::InvalidCell(CellId(4)))
        );
        assert!(matches!(
            mc_circle_cell_area(&c, CellId(0), &g, 0, 1),
            Err(Error::InvalidArgument(_))
        ));
        assert!(Circle::new(Point::new(0.0, 0.0), -1.0).is_err());
        let zero = Circle::new(Point::new(0.5, 0.5), 0.0).unwrap();
        assert!(assignment_weights(&zero, &g).is_err());
    }

    #[test]
    fn single_cell_assignment() {
        let g = grid(4.0, 3, 3);
        let c = Circle::new(Point::new(6.0, 6.0), 1.0).unwrap();
        let w = assignment_weights(&c, &g).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].0, g.cell(1, 1).unwrap());
        assert!((w[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn half_disk_on_outer_edge() {
        // Half-disk area is the oracle: weights must sum to 0.5.
        let g = grid(1.0, 6, 6);
        let c = Circle::new(Point::new(0.0, 3.3), 0.7).unwrap();
        let total: f64 = assignment_weights(&c, &g).unwrap().iter().map(|w| w.1).sum();
        assert!((total - 0.5).abs() < 1e-9, "{total}");
    }

    #[test]
    fn segment_against_closed_form() {
        // Circular segment cut by one vertical chord at distance d: r²acos(d/r) - d√(r²-d²).
        let r: f64 = 2.0;
        let d: f64 = 0.6;
        let rect = Rect::new(Point::new(d, -10.0), Point::new(10.0, 10.0)).unwrap();
        let c = Circle::new(Point::new(0.0, 0.0), r).unwrap();
        let expected = r * r * (d / r).acos() - d * (r * r - d * d).sqrt();
        assert!((circle_rect_area(&c, &rect) - expected).abs() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn interior_weights_sum_to_one(cx in 3.0f64..7.0, cy in 3.0f64..7.0,
                                       r in 0.05f64..2.9, size in 0.3f64..2.0) {
            let cols = (10.0 / size).ceil() as usize;
            let g = grid(size, cols, cols);
            let c = Circle::new(Point::new(cx, cy), r).unwrap();
            let total: f64 = assignment_weights(&c, &g).unwrap().iter().map(|w| w.1).sum();
            proptest::prop_assert!((total - 1.0).abs() < 1e-9, "sum {}", total);
        }

        #[test]
        fn area_is_monotone_in_radius(cx in -2.0f64..3.0, cy in -2.0f64..3.0,
                                      r in 0.0f64..3.0, dr in 0.0f64..1.0) {
            let g = grid(1.0, 1, 1);
            let small = Circle::new(Point::new(cx, cy), r).unwrap();
            let big = Circle::new(Point::new(cx, cy), r + dr).unwrap();
            let a = circle_cell_area(&small, CellId(0), &g).unwrap();
            let b = circle_cell_area(&big, CellId(0), &g).unwrap();
            proptest::prop_assert!(b >= a - 1e-12);
            proptest::prop_assert!(a <= (PI * r * r).min(1.0) + 1e-12);
        }

        #[test]
        fn translation_invariance(cx in -1.0f64..3.0, cy in -1.0f64..3.0, r in 0.1f64..2.0,
                                  tx in -50.0f64..50.0, ty in -50.0f64..50.0) {
            let g = grid(1.0, 2, 2);
            let moved = GridSpec::new(Point::new(tx, ty), 1.0, 2, 2).unwrap();
            let c = Circle::new(Point::new(cx, cy), r).unwrap();
            let cm = Circle::new(Point::new(cx + tx, cy + ty), r).unwrap();
            for cell in g.cells() {
                let a = circle_cell_area(&c, cell, &g).unwrap();
                let b = circle_cell_area(&cm, cell, &moved).unwrap();
                proptest::prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
            }
        }
    }
}
