//! Power-law fits of the field near a corner.

use serde::{Deserialize, Serialize};

use super::solution::{barycentric, locate};
use super::{FemError, FieldSolution};
use crate::geometry::Point;

/// Fewest sample radii a fit accepts.
pub const MIN_FIT_RADII: usize = 8;
const DEFAULT_RADII: usize = 16;
const MIN_R2: f64 = 0.98;
const LOG_NOISE: f64 = 1e-3;

/// Exponent `eta` of `|E| ∝ r^eta` along the bisector of a corner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CornerFit {
    pub eta: f64,
    pub r2: f64,
    /// Opening angle of the domain at the corner, degrees.
    pub opening_deg: f64,
    /// `(r, |E|)` pairs in nm and V/nm.
    pub samples: Vec<(f64, f64)>,
}

/// Fits `log|E|` against `log r` on 16 log-spaced radii in `[r_min, r_max]`
/// along the bisector of the domain wedge at the mesh node nearest `corner`.
pub fn fit_corner_exponent(sol: &FieldSolution<'_>, corner: Point, r_min: f64, r_max: f64) -> Result<CornerFit, FemError> {
    fit_corner_exponent_n(sol, corner, r_min, r_max, DEFAULT_RADII)
}

pub fn fit_corner_exponent_n(sol: &FieldSolution<'_>, corner: Point, r_min: f64, r_max: f64, n_radii: usize) -> Result<CornerFit, FemError> {
    if n_radii < MIN_FIT_RADII {
        return Err(FemError::FitPrecondition(format!("{n_radii} radii, need at least {MIN_FIT_RADII}")));
    }
    if !(r_min > 0.0 && r_max > r_min) {
        return Err(FemError::FitPrecondition(format!("need 0 < r_min < r_max, got {r_min}, {r_max}")));
    }
    let mesh = sol.mesh;
    let v = (0..mesh.nodes.len()).min_by(|&a, &b| mesh.nodes[a].dist(corner).total_cmp(&mesh.nodes[b].dist(corner))).unwrap() as u32;
    let origin = mesh.nodes[v as usize];
    let nbr = mesh.neighbors();
    let (start, dir, opening) = wedge(mesh, &nbr, v);

    let recovered = (sol.order == 1).then(|| sol.recovered_gradients());
    let field = |p: Point, hint: usize| -> Option<(usize, f64)> {
        let t = locate(mesh, &nbr, hint, p).or_else(|| (0..mesh.triangles.len()).find(|&t| barycentric(mesh.corners(t), p).iter().all(|&l| l >= -1e-12)))?;
        let l = barycentric(mesh.corners(t), p);
        let g = match &recovered {
            Some(rg) => mesh.triangles[t].iter().zip(l).fold(Point::new(0.0, 0.0), |acc, (&n, w)| acc + rg[n as usize] * w),
            None => sol.gradient(t, l),
        };
        Some((t, g.norm()))
    };

    let mut samples = Vec::with_capacity(n_radii);
    let mut hint = start;
    for k in 0..n_radii {
        let r = r_min * (r_max / r_min).powf(k as f64 / (n_radii - 1) as f64);
        let p = origin + dir * r;
        let (t, e) = field(p, hint).ok_or_else(|| FemError::FitPrecondition(format!("radius {r} leaves the mesh")))?;
        if k == 0 {
            let c = mesh.corners(t);
            let size = (0..3).map(|i| c[i].dist(c[(i + 1) % 3])).fold(0.0, f64::max);
            if r_min < 3.0 * size {
                return Err(FemError::FitPrecondition(format!("r_min = {r_min} nm is under three element sizes ({size:.3e} nm)")));
            }
        }
        hint = t;
        samples.push((r, e));
    }
    judge(samples, opening.to_degrees())
}

fn judge(samples: Vec<(f64, f64)>, opening_deg: f64) -> Result<CornerFit, FemError> {
    let (eta, r2) = log_log_fit(&samples);
    if !(r2 >= MIN_R2) {
        return Err(FemError::PoorFit { eta, r2 });
    }
    Ok(CornerFit { eta, r2, opening_deg, samples })
}

/// The first element of the fan around boundary node `v`, the bisector of
/// the fan, and its opening angle in radians.
fn wedge(mesh: &crate::mesh::Mesh, nbr: &[[u32; 3]], v: u32) -> (usize, Point, f64) {
    // incident triangles and the local index of v in each
    let fan: Vec<(usize, usize)> = mesh.triangles.iter().enumerate().filter_map(|(t, tri)| tri.iter().position(|&x| x == v).map(|k| (t, k))).collect();
    // ccw around v goes from the edge v–a to the edge v–b, a = k+1, b = k+2;
    // the neighbour across v–a sits opposite b.
    let first = fan
        .iter()
        .copied()
        .find(|&(t, k)| {
            let u = nbr[t][(k + 2) % 3];
            u == u32::MAX || !mesh.triangles[u as usize].contains(&v)
        })
        .unwrap_or(fan[0]);
    let p = |n: u32| mesh.nodes[n as usize] - mesh.nodes[v as usize];
    let (t0, k0) = first;
    let d0 = p(mesh.triangles[t0][(k0 + 1) % 3]);
    let base = d0.y.atan2(d0.x);
    let mut opening = 0.0;
    let (mut t, mut k) = first;
    for _ in 0..fan.len() {
        let tri = mesh.triangles[t];
        let (a, b) = (p(tri[(k + 1) % 3]), p(tri[(k + 2) % 3]));
        opening += a.cross(b).atan2(a.dot(b));
        // the neighbour across v–b sits opposite a
        let u = nbr[t][(k + 1) % 3];
        if u == u32::MAX || !mesh.triangles[u as usize].contains(&v) || u as usize == t0 {
            break;
        }
        t = u as usize;
        k = mesh.triangles[t].iter().position(|&x| x == v).unwrap();
    }
    (t0, Point::polar((base + 0.5 * opening).to_degrees()), opening)
}

/// Least-squares slope of `ln y` on `ln x`, and the fit's R².
pub(crate) fn log_log_fit(samples: &[(f64, f64)]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let ss_res = (syy - slope * sxy).max(0.0);
    // total variation is floored at a 0.1% log scatter, so a flat response
    // reads as a good fit of slope zero instead of as pure noise
    let r2 = 1.0 - ss_res / syy.max(n * LOG_NOISE * LOG_NOISE);
    (slope, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_log_fit_recovers_power_law() {
        let s: Vec<(f64, f64)> = (1..10).map(|i| (i as f64, 3.0 * (i as f64).powf(-1.0 / 3.0))).collect();
        let (eta, r2) = log_log_fit(&s);
        assert!((eta + 1.0 / 3.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scattered_samples_are_a_poor_fit() {
        let s: Vec<(f64, f64)> = (1..12).map(|i| (i as f64, if i % 2 == 0 { 1.0 } else { 3.0 })).collect();
        assert!(matches!(judge(s, 270.0), Err(FemError::PoorFit { .. })));
        let flat: Vec<(f64, f64)> = (1..12).map(|i| (i as f64, 2.0 * (1.0 + 1e-6 * (i % 3) as f64))).collect();
        assert!(judge(flat, 180.0).unwrap().eta.abs() < 1e-5);
    }
}
