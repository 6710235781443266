//! Independent plane-strain reference solver: explicit B and D matrices,
//! dense storage, free-DOF reduction and an LU solve from nalgebra.

#![allow(dead_code)]

use ddmoduli::mesh::Mesh;
use nalgebra::{DMatrix, DVector};

/// Support on the bottom edge `y = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    /// `u_y = 0` on the bottom plus `u_x = 0` at `(0.5, 0)`.
    RollerPinned,
    /// `u = 0` on the bottom.
    Clamped,
}

fn element_stiffness(coords: &[[f64; 2]; 4], e: f64, nu: f64) -> [[f64; 8]; 8] {
    let f = e / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let d = [
        [f * (1.0 - nu), f * nu, 0.0],
        [f * nu, f * (1.0 - nu), 0.0],
        [0.0, 0.0, f * (1.0 - 2.0 * nu) / 2.0],
    ];
    let g = 1.0 / 3f64.sqrt();
    let mut k = [[0.0; 8]; 8];
    for (xi, eta) in [(-g, -g), (g, -g), (g, g), (-g, g)] {
        let dn_dxi = [-(1.0 - eta) / 4.0, (1.0 - eta) / 4.0, (1.0 + eta) / 4.0, -(1.0 + eta) / 4.0];
        let dn_deta = [-(1.0 - xi) / 4.0, -(1.0 + xi) / 4.0, (1.0 + xi) / 4.0, (1.0 - xi) / 4.0];
        let mut j = [[0.0; 2]; 2];
        for a in 0..4 {
            j[0][0] += dn_dxi[a] * coords[a][0];
            j[0][1] += dn_dxi[a] * coords[a][1];
            j[1][0] += dn_deta[a] * coords[a][0];
            j[1][1] += dn_deta[a] * coords[a][1];
        }
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let mut b = [[0.0; 8]; 3];
        for a in 0..4 {
            let dx = (j[1][1] * dn_dxi[a] - j[0][1] * dn_deta[a]) / det;
            let dy = (-j[1][0] * dn_dxi[a] + j[0][0] * dn_deta[a]) / det;
            b[0][2 * a] = dx;
            b[1][2 * a + 1] = dy;
            b[2][2 * a] = dy;
            b[2][2 * a + 1] = dx;
        }
        for r in 0..8 {
            for c in 0..8 {
                let mut s = 0.0;
                for p in 0..3 {
                    for q in 0..3 {
                        s += b[p][r] * d[p][q] * b[q][c];
                    }
                }
                k[r][c] += s * det;
            }
        }
    }
    k
}

/// Linear plane-strain displacement for a constant traction on `y = 1`.
pub fn classical_solve(mesh: &Mesh, e: f64, nu: f64, support: Support, traction: [f64; 2]) -> Vec<f64> {
    let nodes = mesh.nodes();
    let n = 2 * nodes.len();
    let mut k = DMatrix::<f64>::zeros(n, n);
    let mut f = DVector::<f64>::zeros(n);
    for cell in mesh.cells() {
        let coords = cell.map(|i| nodes[i]);
        let ke = element_stiffness(&coords, e, nu);
        for a in 0..8 {
            for b in 0..8 {
                k[(2 * cell[a / 2] + a % 2, 2 * cell[b / 2] + b % 2)] += ke[a][b];
            }
        }
        for s in 0..4 {
            let (p, q) = (cell[s], cell[(s + 1) % 4]);
            if nodes[p][1] == 1.0 && nodes[q][1] == 1.0 {
                let half = 0.5 * (nodes[q][0] - nodes[p][0]).abs();
                for node in [p, q] {
                    f[2 * node] += half * traction[0];
                    f[2 * node + 1] += half * traction[1];
                }
            }
        }
    }
    let mut fixed = vec![false; n];
    for (i, p) in nodes.iter().enumerate() {
        if p[1] == 0.0 {
            fixed[2 * i + 1] = true;
            if support == Support::Clamped || p[0] == 0.5 {
                fixed[2 * i] = true;
            }
        }
    }
    let free: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
    let kr = DMatrix::from_fn(free.len(), free.len(), |i, j| k[(free[i], free[j])]);
    let fr = DVector::from_fn(free.len(), |i, _| f[free[i]]);
    let x = kr.lu().solve(&fr).expect("reference system is nonsingular");
    let mut u = vec![0.0; n];
    for (i, &dof) in free.iter().enumerate() {
        u[dof] = x[i];
    }
    u
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den
}
