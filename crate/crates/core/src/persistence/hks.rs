//! Heat kernel signatures from the normalized graph Laplacian.
//!
//! `hks_t(v) = sum_k exp(-t lambda_k) phi_k(v)^2` where `(lambda_k, phi_k)`
//! is the full eigendecomposition of `L = I - D^{-1/2} A D^{-1/2}`. The
//! graphs in scope are tiny (tens of nodes), so the decomposition runs a
//! cyclic Jacobi iteration to machine precision.

use crate::error::{Error, Result};
use crate::persistence::graph::Graph;

/// Dense row-major normalized Laplacian. Degree-0 rows become identity rows.
pub fn normalized_laplacian(graph: &Graph) -> Vec<f64> {
    let n = graph.n_nodes();
    let deg = graph.degrees();
    let inv_sqrt: Vec<f64> = deg
        .iter()
        .map(|&d| if d == 0 { 0.0 } else { 1.0 / (d as f64).sqrt() })
        .collect();
    let mut lap = vec![0.0; n * n];
    for v in 0..n {
        lap[v * n + v] = 1.0;
    }
    for &(u, v) in graph.edges() {
        let w = inv_sqrt[u] * inv_sqrt[v];
        lap[u * n + v] = -w;
        lap[v * n + u] = -w;
    }
    lap
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns of a row-major matrix.
pub fn jacobi_eigen(matrix: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(matrix.len(), n * n);
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    if n <= 1 {
        return (a, v);
    }
    let scale: f64 = matrix.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    let tol = 1e-15 * scale;
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q] * a[p * n + q])
            .sum::<f64>()
            .sqrt();
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].partial_cmp(&a[j * n + j]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut eigenvectors = vec![0.0; n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            eigenvectors[row * n + new_col] = v[row * n + old_col];
        }
    }
    (eigenvalues, eigenvectors)
}

/// Heat kernel signature of every node at diffusion time `t > 0`.
pub fn hks(graph: &Graph, t: f64) -> Result<Vec<f64>> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveT(t));
    }
    let n = graph.n_nodes();
    if n == 0 {
        return Ok(Vec::new());
    }
    let lap = normalized_laplacian(graph);
    let (eigenvalues, eigenvectors) = jacobi_eigen(&lap, n);
    let weights: Vec<f64> = eigenvalues.iter().map(|&l| (-t * l).exp()).collect();
    let mut values = vec![0.0; n];
    for v in 0..n {
        let mut acc = 0.0;
        for k in 0..n {
            let phi = eigenvectors[v * n + k];
            acc += weights[k] * phi * phi;
        }
        values[v] = acc;
    }
    Ok(values)
}
