//! Geometry primitives shared across the pipeline.
//!
//! Image coordinates follow the usual convention: x grows rightward,
//! y grows downward. Polar angles are measured counter-clockwise from the
//! +x axis with y negated, so "up" in the image is 90 degrees.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A continuous 2D point in image coordinates (y downward-positive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Polar angle of `x` around `pole`, in degrees in `[0, 360)`.
///
/// Measured counter-clockwise from the +x axis with image-y negated, so a
/// point directly above the pole (smaller y) is at 90 degrees.
pub fn polar_angle(pole: Point2, x: Point2) -> Result<f64> {
    let dx = x.x - pole.x;
    let dy = -(x.y - pole.y);
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::UndefinedAngle);
    }
    let mut deg = dy.atan2(dx).to_degrees();
    if deg < 0.0 {
        deg += 360.0;
    }
    // atan2 can return exactly -0.0 -> 360.0 after the wrap
    if deg >= 360.0 {
        deg -= 360.0;
    }
    Ok(deg)
}

/// A triangle given by its three vertices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triangle2 {
    pub a: Point2,
    pub b: Point2,
    pub c: Point2,
}

impl Triangle2 {
    pub fn new(a: Point2, b: Point2, c: Point2) -> Self {
        Triangle2 { a, b, c }
    }

    pub fn area(&self) -> f64 {
        0.5 * ((self.b.x - self.a.x) * (self.c.y - self.a.y)
            - (self.c.x - self.a.x) * (self.b.y - self.a.y))
            .abs()
    }

    pub fn perimeter(&self) -> f64 {
        self.a.distance(&self.b) + self.b.distance(&self.c) + self.c.distance(&self.a)
    }

    pub fn is_degenerate(&self) -> bool {
        self.area() <= f64::EPSILON
    }

    pub fn vertices(&self) -> [Point2; 3] {
        [self.a, self.b, self.c]
    }
}

/// An infinite line in implicit form `a*x + b*y + c = 0` with `a^2 + b^2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Line {
    /// Line through two distinct points.
    pub fn through(p: Point2, q: Point2) -> Result<Line> {
        let dx = q.x - p.x;
        let dy = q.y - p.y;
        let norm = dx.hypot(dy);
        if norm == 0.0 {
            return Err(Error::InvalidInput("line through identical points".into()));
        }
        // Normal is the direction rotated by 90 degrees.
        let a = dy / norm;
        let b = -dx / norm;
        let c = -(a * p.x + b * p.y);
        Ok(Line { a, b, c })
    }

    /// Perpendicular distance from a point to the line.
    pub fn distance(&self, p: Point2) -> f64 {
        (self.a * p.x + self.b * p.y + self.c).abs()
    }

    /// Orientation of the line in degrees in `[0, 180)` against the +x axis
    /// (image-y negated, matching [`polar_angle`]).
    pub fn orientation_deg(&self) -> f64 {
        // Direction vector is (-b, a); negate y for the image convention.
        let mut deg = (-self.a).atan2(-self.b).to_degrees();
        deg = deg.rem_euclid(180.0);
        if deg >= 180.0 {
            deg -= 180.0;
        }
        deg
    }

    /// Unit direction vector of the line (image coordinates, y downward).
    pub fn direction(&self) -> (f64, f64) {
        (-self.b, self.a)
    }

    /// Orthogonal projection of `p` onto the line.
    pub fn project(&self, p: Point2) -> Point2 {
        let d = self.a * p.x + self.b * p.y + self.c;
        Point2::new(p.x - d * self.a, p.y - d * self.b)
    }

    /// Intersection of two lines; `None` when parallel.
    pub fn intersect(&self, other: &Line) -> Option<Point2> {
        let det = self.a * other.b - other.a * self.b;
        if det.abs() < 1e-9 {
            return None;
        }
        let x = (self.b * other.c - other.b * self.c) / det;
        let y = (other.a * self.c - self.a * other.c) / det;
        Some(Point2::new(x, y))
    }
}

/// Smallest absolute difference between two orientations modulo 180 degrees.
pub fn orientation_diff_deg(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(180.0);
    d.min(180.0 - d)
}
