//! Upper-right convex hull of rate pairs and ray intersection with a
//! piecewise-linear boundary.

use crate::error::{Error, Result};
use crate::model::{RatePair, RateProfile};

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Vertices of the Pareto face of `conv(points ∪ axis projections)`, sorted by
/// `r1` descending. The first vertex lies on the `r1` axis and the last on
/// the `r2` axis; collinear points are dropped.
pub fn upper_right_hull(points: &[RatePair]) -> Result<Vec<RatePair>> {
    if points.is_empty() {
        return Err(Error::EmptyInput("no points for the hull"));
    }
    if points.iter().any(|p| !(p.r1.is_finite() && p.r2.is_finite()) || p.r1 < 0.0 || p.r2 < 0.0) {
        return Err(Error::InvalidConfig("hull points must be finite and nonnegative".into()));
    }
    let max1 = points.iter().map(|p| p.r1).fold(0.0, f64::max);
    let max2 = points.iter().map(|p| p.r2).fold(0.0, f64::max);

    let mut pts: Vec<[f64; 2]> = points.iter().map(|p| p.as_array()).collect();
    pts.push([max1, 0.0]);
    pts.push([0.0, max2]);
    // Upper chain of the monotone-chain algorithm, walked from the top of the
    // rightmost column towards the r2 axis.
    pts.sort_by(|a, b| b[0].total_cmp(&a[0]).then(b[1].total_cmp(&a[1])));
    pts.dedup();

    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(16);
    for p in pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    // Points after the top of the r2 axis lie below the face.
    if let Some(end) = hull.iter().position(|p| p[0] == 0.0 && p[1] == max2) {
        hull.truncate(end + 1);
    }
    if hull[0] != [max1, 0.0] {
        hull.insert(0, [max1, 0.0]);
    }
    Ok(hull.into_iter().map(RatePair::from).collect())
}

/// Largest `t >= 0` such that `t * rho` lies on the polyline through `vertices`.
/// Returns `None` if the ray misses every segment.
pub fn ray_value(vertices: &[RatePair], profile: &RateProfile) -> Option<f64> {
    let rho = profile.rho();
    if vertices.len() == 1 {
        let v = vertices[0].as_array();
        return ray_through_point(v, rho);
    }
    let mut best: Option<f64> = None;
    for w in vertices.windows(2) {
        let a = w[0].as_array();
        let b = w[1].as_array();
        let e = [b[0] - a[0], b[1] - a[1]];
        let denom = rho[0] * e[1] - rho[1] * e[0];
        let scale = e[0].abs().max(e[1].abs()).max(f64::MIN_POSITIVE);
        let t = if denom.abs() <= 1e-14 * scale {
            match ray_through_point(a, rho).or_else(|| ray_through_point(b, rho)) {
                Some(t) => t,
                None => continue,
            }
        } else {
            let s = (a[0] * rho[1] - a[1] * rho[0]) / denom;
            if !(-1e-12..=1.0 + 1e-12).contains(&s) {
                continue;
            }
            (a[0] * e[1] - a[1] * e[0]) / denom
        };
        if t >= 0.0 {
            best = Some(best.map_or(t, |x: f64| x.max(t)));
        }
    }
    best
}

fn ray_through_point(v: [f64; 2], rho: [f64; 2]) -> Option<f64> {
    if (v[0] * rho[1] - v[1] * rho[0]).abs() > 1e-12 * (v[0].abs() + v[1].abs()).max(1.0) {
        return None;
    }
    let k = if rho[0] >= rho[1] { 0 } else { 1 };
    Some(v[k] / rho[k])
}
