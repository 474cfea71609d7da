//! Obstacle-surface point clouds.
//!
//! Points are drawn on obstacle boundaries, not interiors: an obstacle is
//! selected with probability proportional to its surface measure (perimeter
//! in 2D, area in 3D), then a point is placed uniformly on that boundary.

use super::{Obstacle, Workspace};
use crate::autodiff::Tensor;
use rand::Rng;

/// Fixed-size set of points on obstacle surfaces, row-major `n x dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<f64>,
    n: usize,
    dim: usize,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    /// The cloud as an `n x dim` tensor with coordinates affinely mapped to
    /// [-1, 1] by the workspace bounds. Sentinel points (obstacle-free
    /// workspaces) map outside that range by design.
    pub fn normalized(&self, bounds: &[[f64; 2]]) -> Tensor {
        assert_eq!(bounds.len(), self.dim);
        let data = self
            .iter()
            .flat_map(|p| {
                p.iter()
                    .zip(bounds)
                    .map(|(&x, &[lo, hi])| 2.0 * (x - lo) / (hi - lo) - 1.0)
                    .collect::<Vec<_>>()
            })
            .collect();
        Tensor::from_vec(self.n, self.dim, data)
    }
}

/// Draws `n` points on obstacle boundaries. With no obstacles the cloud is
/// `n` copies of a sentinel point one full extent beyond the upper bounds,
/// so the encoder input keeps a fixed shape.
pub fn sample_surface_point_cloud<R: Rng + ?Sized>(
    workspace: &Workspace,
    n: usize,
    rng: &mut R,
) -> PointCloud {
    assert!(n >= 1, "point cloud must contain at least one point");
    let dim = workspace.ambient_dim();
    if workspace.obstacles.is_empty() {
        let sentinel: Vec<f64> = workspace.bounds.iter().map(|b| b[1] + (b[1] - b[0])).collect();
        let mut points = Vec::with_capacity(n * dim);
        for _ in 0..n {
            points.extend_from_slice(&sentinel);
        }
        return PointCloud { points, n, dim };
    }

    let measures: Vec<f64> = workspace.obstacles.iter().map(|o| o.surface_measure()).collect();
    let total: f64 = measures.iter().sum();
    let mut points = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let mut pick = rng.random_range(0.0..total);
        let mut idx = 0;
        for (i, m) in measures.iter().enumerate() {
            if pick < *m {
                idx = i;
                break;
            }
            pick -= m;
            idx = i;
        }
        let p = sample_on_boundary(&workspace.obstacles[idx], rng);
        points.extend_from_slice(&p);
    }
    PointCloud { points, n, dim }
}

fn sample_on_boundary<R: Rng + ?Sized>(obs: &Obstacle, rng: &mut R) -> Vec<f64> {
    match obs.dim() {
        2 => {
            let (a, b) = (obs.half_extents[0], obs.half_extents[1]);
            // sides: +x, -x (length 2b each), +y, -y (length 2a each)
            let lens = [2.0 * b, 2.0 * b, 2.0 * a, 2.0 * a];
            let side = pick_weighted(&lens, rng);
            let (cx, cy) = (obs.center[0], obs.center[1]);
            match side {
                0 => vec![cx + a, cy + rng.random_range(-b..=b)],
                1 => vec![cx - a, cy + rng.random_range(-b..=b)],
                2 => vec![cx + rng.random_range(-a..=a), cy + b],
                _ => vec![cx + rng.random_range(-a..=a), cy - b],
            }
        }
        3 => {
            let (a, b, c) = (
                obs.half_extents[0],
                obs.half_extents[1],
                obs.half_extents[2],
            );
            // face pairs normal to x, y, z
            let areas = [
                4.0 * b * c,
                4.0 * b * c,
                4.0 * a * c,
                4.0 * a * c,
                4.0 * a * b,
                4.0 * a * b,
            ];
            let face = pick_weighted(&areas, rng);
            let (cx, cy, cz) = (obs.center[0], obs.center[1], obs.center[2]);
            let u = rng.random_range(-1.0..=1.0);
            let v = rng.random_range(-1.0..=1.0);
            match face {
                0 => vec![cx + a, cy + u * b, cz + v * c],
                1 => vec![cx - a, cy + u * b, cz + v * c],
                2 => vec![cx + u * a, cy + b, cz + v * c],
                3 => vec![cx + u * a, cy - b, cz + v * c],
                4 => vec![cx + u * a, cy + v * b, cz + c],
                _ => vec![cx + u * a, cy + v * b, cz - c],
            }
        }
        d => panic!("unsupported obstacle dimension {d}"),
    }
}

fn pick_weighted<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut pick = rng.random_range(0.0..total);
    for (i, w) in weights.iter().enumerate() {
        if pick < *w {
            return i;
        }
        pick -= w;
    }
    weights.len() - 1
}

/// Distance from `p` to the boundary surface of `obs`.
pub fn distance_to_boundary(obs: &Obstacle, p: &[f64]) -> f64 {
    // Signed per-axis distances to the slab faces.
    let d: Vec<f64> = obs
        .center
        .iter()
        .zip(&obs.half_extents)
        .zip(p)
        .map(|((c, h), x)| (x - c).abs() - h)
        .collect();
    let max_d = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max_d <= 0.0 {
        // inside: distance to nearest face
        -max_d
    } else {
        // outside: Euclidean distance to the box
        d.iter().map(|&x| x.max(0.0).powi(2)).sum::<f64>().sqrt()
    }
}
