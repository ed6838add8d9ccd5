//! Least-squares surface reconstruction from a normal map.

use std::collections::VecDeque;

use crate::brdf::Vec3;
use crate::error::{Error, Result};
use crate::grid::{Grid, Mask, ScalarMap};

/// Floor on `n_z` when converting normals to slopes.
pub const NZ_FLOOR: f64 = 0.05;

/// Integrates a camera-space normal map into a height field along `+z`
/// (towards the camera). Columns run along `+x`, rows along `−y`, and
/// neighbouring pixels are `spacing` apart.
///
/// Each 4-connected component of `mask` is solved independently and returned
/// with zero mean; pixels outside the mask are zero. Slopes are
/// `(−n_x/n_z, −n_y/n_z)` with `n_z` floored at [`NZ_FLOOR`], and
/// neighbouring differences use the trapezoidal rule, which is exact for
/// quadratic surfaces.
pub fn integrate_normals(normals: &Grid<Vec3>, mask: &Mask, spacing: f64) -> Result<ScalarMap> {
    mask.ensure_same_dims(normals, "normals")?;
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidInput(format!("spacing {spacing} must be positive")));
    }
    let (w, h) = mask.dims();
    let slot: Vec<Option<usize>> = {
        let mut k = 0;
        mask.data()
            .iter()
            .map(|&m| {
                m.then(|| {
                    k += 1;
                    k - 1
                })
            })
            .collect()
    };
    let pixels: Vec<usize> = (0..w * h).filter(|&i| mask.data()[i]).collect();
    let n = pixels.len();
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    let slope = |i: usize| {
        let v = normals.data()[i];
        let nz = v.z.max(NZ_FLOOR);
        (-v.x / nz, -v.y / nz)
    };

    // Edges (tail, head, target) with z[head] - z[tail] ≈ target.
    let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * n);
    for &i in &pixels {
        let (x, y) = (i % w, i / w);
        let (gx, gy) = slope(i);
        if x + 1 < w {
            if let Some(j) = slot[i + 1] {
                let (gx2, _) = slope(i + 1);
                edges.push((slot[i].unwrap(), j, 0.5 * spacing * (gx + gx2)));
            }
        }
        if y + 1 < h {
            if let Some(j) = slot[i + w] {
                let (_, gy2) = slope(i + w);
                edges.push((slot[i].unwrap(), j, -0.5 * spacing * (gy + gy2)));
            }
        }
    }
    let mut degree = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(t, hd, target) in &edges {
        degree[t] += 1.0;
        degree[hd] += 1.0;
        b[hd] += target;
        b[t] -= target;
        adj[t].push(hd);
        adj[hd].push(t);
    }
    let apply = |z: &[f64], out: &mut [f64]| {
        for k in 0..n {
            out[k] = degree[k] * z[k] - adj[k].iter().map(|&j| z[j]).sum::<f64>();
        }
    };
    let z = conjugate_gradient(&apply, &b, &degree);

    let components = label_components(&adj);
    let mut out = Grid::zeros(w, h);
    let n_comp = components.iter().max().map_or(0, |m| m + 1);
    let mut sum = vec![0.0; n_comp];
    let mut count = vec![0usize; n_comp];
    for k in 0..n {
        sum[components[k]] += z[k];
        count[components[k]] += 1;
    }
    for (k, &i) in pixels.iter().enumerate() {
        let c = components[k];
        out.data_mut()[i] = z[k] - sum[c] / count[c] as f64;
    }
    Ok(out)
}

/// Jacobi-preconditioned CG for the (singular, consistent) graph Laplacian.
fn conjugate_gradient(apply: &dyn Fn(&[f64], &mut [f64]), b: &[f64], diag: &[f64]) -> Vec<f64> {
    let n = b.len();
    let dot = |a: &[f64], c: &[f64]| a.iter().zip(c).map(|(x, y)| x * y).sum::<f64>();
    let precond = |r: &[f64], out: &mut [f64]| {
        for k in 0..n {
            out[k] = if diag[k] > 0.0 { r[k] / diag[k] } else { 0.0 };
        }
    };
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return x;
    }
    let mut zr = vec![0.0; n];
    precond(&r, &mut zr);
    let mut p = zr.clone();
    let mut rz = dot(&r, &zr);
    let mut ap = vec![0.0; n];
    let max_iter = 20 * n + 100;
    for _ in 0..max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        if dot(&r, &r).sqrt() <= 1e-13 * b_norm {
            break;
        }
        precond(&r, &mut zr);
        let rz_new = dot(&r, &zr);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = zr[k] + beta * p[k];
        }
    }
    x
}

fn label_components(adj: &[Vec<usize>]) -> Vec<usize> {
    let mut label = vec![usize::MAX; adj.len()];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for s in 0..adj.len() {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = next;
        queue.push_back(s);
        while let Some(k) = queue.pop_front() {
            for &j in &adj[k] {
                if label[j] == usize::MAX {
                    label[j] = next;
                    queue.push_back(j);
                }
            }
        }
        next += 1;
    }
    label
}
