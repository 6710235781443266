//! Continuous Q1 (bilinear) vector-valued finite-element space.
//!
//! Degrees of freedom are numbered node-major, component-minor: node `i`
//! owns DOFs `2i` (x) and `2i + 1` (y). Crack-split node copies are distinct
//! nodes, so continuity is broken across the slit and nowhere else.

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Smallest admissible jacobian determinant.
pub const MIN_JACOBIAN: f64 = 1e-14;

/// Reference-cell corner coordinates, counterclockwise from (−1, −1).
pub const REFERENCE_NODES: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

/// Tensor-product Gauss–Legendre rule on [−1, 1]².
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// `n × n` Gauss points, `n ∈ 1..=3`.
    pub fn gauss(n: usize) -> Self {
        let (p, w) = gauss_1d(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                points.push([p[i], p[j]]);
                weights.push(w[i] * w[j]);
            }
        }
        QuadratureRule { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// 1D Gauss–Legendre points and weights on [−1, 1].
pub fn gauss_1d(n: usize) -> (Vec<f64>, Vec<f64>) {
    match n {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let a = 1.0 / 3f64.sqrt();
            (vec![-a, a], vec![1.0, 1.0])
        }
        3 => {
            let a = (3.0f64 / 5.0).sqrt();
            (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        _ => panic!("gauss rule with {n} points per direction is not tabulated"),
    }
}

pub fn shape_values(xi: [f64; 2]) -> [f64; 4] {
    REFERENCE_NODES.map(|[a, b]| 0.25 * (1.0 + a * xi[0]) * (1.0 + b * xi[1]))
}

pub fn shape_ref_gradients(xi: [f64; 2]) -> [[f64; 2]; 4] {
    REFERENCE_NODES.map(|[a, b]| {
        [
            0.25 * a * (1.0 + b * xi[1]),
            0.25 * b * (1.0 + a * xi[0]),
        ]
    })
}

/// Shape-function gradients in physical coordinates and the jacobian
/// determinant of the isoparametric map at `xi`.
pub fn physical_gradients(coords: &[[f64; 2]; 4], xi: [f64; 2]) -> Result<([[f64; 2]; 4], f64)> {
    let dref = shape_ref_gradients(xi);
    // jac[i][j] = d x_i / d xi_j
    let mut jac = [[0.0; 2]; 2];
    for (x, g) in coords.iter().zip(&dref) {
        for i in 0..2 {
            for j in 0..2 {
                jac[i][j] += x[i] * g[j];
            }
        }
    }
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    if det <= MIN_JACOBIAN || !det.is_finite() {
        return Err(Error::DegenerateCell { cell: None, det });
    }
    let inv = [
        [jac[1][1] / det, -jac[0][1] / det],
        [-jac[1][0] / det, jac[0][0] / det],
    ];
    // dN/dx_k = sum_j dN/dxi_j * dxi_j/dx_k
    let grads = dref.map(|g| {
        [
            g[0] * inv[0][0] + g[1] * inv[1][0],
            g[0] * inv[0][1] + g[1] * inv[1][1],
        ]
    });
    Ok((grads, det))
}

/// Everything needed at one quadrature point of one cell.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub values: [f64; 4],
    pub grads: [[f64; 2]; 4],
    /// Quadrature weight times jacobian determinant.
    pub jxw: f64,
    /// Physical location.
    pub x: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Mesh,
    dof_map: Vec<[usize; 8]>,
}

impl FeSpace {
    pub fn new(mesh: Mesh) -> Self {
        let dof_map = mesh
            .cells()
            .iter()
            .map(|cell| {
                let mut dofs = [0; 8];
                for (a, &node) in cell.iter().enumerate() {
                    dofs[2 * a] = 2 * node;
                    dofs[2 * a + 1] = 2 * node + 1;
                }
                dofs
            })
            .collect();
        FeSpace { mesh, dof_map }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn n_dofs(&self) -> usize {
        2 * self.mesh.n_nodes()
    }

    pub fn cell_dofs(&self, cell: usize) -> &[usize; 8] {
        &self.dof_map[cell]
    }

    /// Quadrature data for `cell` under `rule`.
    pub fn quad_points(&self, cell: usize, rule: &QuadratureRule) -> Result<Vec<QuadPoint>> {
        let coords = self.mesh.cell_coords(cell);
        rule.points
            .iter()
            .zip(&rule.weights)
            .enumerate()
            .map(|(q, (&xi, &w))| {
                let (grads, det) = physical_gradients(&coords, xi).map_err(|e| e.at(cell, q))?;
                let values = shape_values(xi);
                let mut x = [0.0; 2];
                for (v, p) in values.iter().zip(&coords) {
                    x[0] += v * p[0];
                    x[1] += v * p[1];
                }
                Ok(QuadPoint {
                    values,
                    grads,
                    jxw: w * det,
                    x,
                })
            })
            .collect()
    }

    /// Check every cell for a positive jacobian at the 2×2 Gauss points.
    pub fn check_orientation(&self) -> Result<()> {
        let rule = QuadratureRule::gauss(2);
        (0..self.mesh.n_cells()).try_for_each(|c| self.quad_points(c, &rule).map(|_| ()))
    }
}

/// Nodal displacement vector in DOF order.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    values: Vec<f64>,
}

impl NodalField {
    pub fn zeros(space: &FeSpace) -> Self {
        NodalField {
            values: vec![0.0; space.n_dofs()],
        }
    }

    /// Wrap a DOF vector; length and finiteness are checked.
    pub fn from_dofs(space: &FeSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.n_dofs() {
            return Err(Error::DimensionMismatch {
                expected: space.n_dofs(),
                found: values.len(),
            });
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation {
                field: format!("dof {bad}"),
                message: "non-finite nodal value".into(),
            });
        }
        Ok(NodalField { values })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn node(&self, node: usize) -> [f64; 2] {
        [self.values[2 * node], self.values[2 * node + 1]]
    }

    pub fn n_nodes(&self) -> usize {
        self.values.len() / 2
    }

    fn cell_values(&self, space: &FeSpace, cell: usize) -> [[f64; 2]; 4] {
        space.mesh().cells()[cell].map(|n| self.node(n))
    }

    /// `grad[i][j] = ∂u_i/∂x_j` at a quadrature point.
    pub fn gradient(&self, space: &FeSpace, cell: usize, qp: &QuadPoint) -> [[f64; 2]; 2] {
        let u = self.cell_values(space, cell);
        let mut g = [[0.0; 2]; 2];
        for (ua, ga) in u.iter().zip(&qp.grads) {
            for i in 0..2 {
                for j in 0..2 {
                    g[i][j] += ua[i] * ga[j];
                }
            }
        }
        g
    }

    /// Field value at a quadrature point.
    pub fn value(&self, space: &FeSpace, cell: usize, qp: &QuadPoint) -> [f64; 2] {
        let u = self.cell_values(space, cell);
        let mut v = [0.0; 2];
        for (ua, na) in u.iter().zip(&qp.values) {
            v[0] += na * ua[0];
            v[1] += na * ua[1];
        }
        v
    }

    /// Field value at reference point `xi` of `cell`.
    pub fn evaluate(&self, space: &FeSpace, cell: usize, xi: [f64; 2]) -> [f64; 2] {
        let u = self.cell_values(space, cell);
        let n = shape_values(xi);
        let mut v = [0.0; 2];
        for (ua, na) in u.iter().zip(&n) {
            v[0] += na * ua[0];
            v[1] += na * ua[1];
        }
        v
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Nodal interpolant of `f`.
pub fn interpolate(space: &FeSpace, f: impl Fn([f64; 2]) -> [f64; 2]) -> NodalField {
    let mut values = Vec::with_capacity(space.n_dofs());
    for &p in space.mesh().nodes() {
        values.extend(f(p));
    }
    NodalField { values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::CrackSpec;
    use proptest::prelude::*;

    #[test]
    fn dof_counts() {
        assert_eq!(FeSpace::new(Mesh::unit_square(1).unwrap()).n_dofs(), 18);
        assert_eq!(FeSpace::new(Mesh::unit_square(0).unwrap()).n_dofs(), 8);
        let cracked = Mesh::unit_square(7)
            .unwrap()
            .with_edge_crack(CrackSpec::right_edge())
            .unwrap();
        assert_eq!(FeSpace::new(cracked).n_dofs(), 2 * (129 * 129 + 64));
    }

    #[test]
    fn shape_at_corner_and_center() {
        assert_eq!(shape_values([-1.0, -1.0]), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(shape_values([0.0, 0.0]), [0.25; 4]);
    }

    #[test]
    fn jacobian_of_square_cell() {
        let h = 0.125;
        let coords = [[0.0, 0.0], [h, 0.0], [h, h], [0.0, h]];
        for xi in QuadratureRule::gauss(2).points {
            let (_, det) = physical_gradients(&coords, xi).unwrap();
            assert!((det - h * h / 4.0).abs() < 1e-16);
        }
    }

    #[test]
    fn linear_field_gradient_reproduced() {
        let space = FeSpace::new(Mesh::unit_square(2).unwrap());
        let u = interpolate(&space, |p| [p[0], 0.0]);
        let rule = QuadratureRule::gauss(2);
        for c in 0..space.mesh().n_cells() {
            for qp in space.quad_points(c, &rule).unwrap() {
                let g = u.gradient(&space, c, &qp);
                assert!((g[0][0] - 1.0).abs() < 1e-13 && g[0][1].abs() < 1e-13);
                assert!(g[1][0].abs() < 1e-13 && g[1][1].abs() < 1e-13);
            }
        }
    }

    #[test]
    fn clockwise_cell_is_degenerate() {
        let coords = [[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]];
        assert!(matches!(
            physical_gradients(&coords, [0.0, 0.0]),
            Err(Error::DegenerateCell { .. })
        ));
    }

    #[test]
    fn interpolation_examples() {
        let space = FeSpace::new(Mesh::unit_square(2).unwrap());
        assert!(interpolate(&space, |_| [0.0, 0.0]).as_slice().iter().all(|&v| v == 0.0));
        let u = interpolate(&space, |p| p);
        for (i, p) in space.mesh().nodes().iter().enumerate() {
            assert_eq!(u.node(i), *p);
        }
        let pi = std::f64::consts::PI;
        let u = interpolate(&space, |p| [(pi * p[0] / 2.0).sin(), -(pi * p[1] / 2.0).cos()]);
        let corner = space.mesh().find_node([1.0, 1.0]).unwrap();
        let v = u.node(corner);
        assert!((v[0] - 1.0).abs() < 1e-15 && v[1].abs() < 1e-15);
    }

    #[test]
    fn quadrature_weights_sum_to_four() {
        for n in 1..=3 {
            let r = QuadratureRule::gauss(n);
            assert!((r.weights.iter().sum::<f64>() - 4.0).abs() < 1e-14);
        }
    }

    #[test]
    fn quadrature_exact_for_cubics() {
        // ∫_cell x^p y^q over the cell [a, a+h] × [b, b+h]
        let (a, b, h) = (0.25, 0.5, 0.25);
        let coords = [[a, b], [a + h, b], [a + h, b + h], [a, b + h]];
        let rule = QuadratureRule::gauss(2);
        let antideriv = |lo: f64, hi: f64, p: i32| (hi.powi(p + 1) - lo.powi(p + 1)) / (p + 1) as f64;
        for p in 0..=3 {
            for q in 0..=3 {
                let mut sum = 0.0;
                for (xi, w) in rule.points.iter().zip(&rule.weights) {
                    let (_, det) = physical_gradients(&coords, *xi).unwrap();
                    let n = shape_values(*xi);
                    let x: f64 = (0..4).map(|k| n[k] * coords[k][0]).sum();
                    let y: f64 = (0..4).map(|k| n[k] * coords[k][1]).sum();
                    sum += w * det * x.powi(p) * y.powi(q);
                }
                let exact = antideriv(a, a + h, p) * antideriv(b, b + h, q);
                assert!((sum - exact).abs() < 1e-13, "p={p} q={q}");
            }
        }
    }

    proptest! {
        #[test]
        fn partition_of_unity(x in -1.0f64..1.0, y in -1.0f64..1.0) {
            let v = shape_values([x, y]);
            prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            let g = shape_ref_gradients([x, y]);
            prop_assert!(g.iter().map(|d| d[0]).sum::<f64>().abs() < 1e-14);
            prop_assert!(g.iter().map(|d| d[1]).sum::<f64>().abs() < 1e-14);
        }

        #[test]
        fn bilinear_reproduced(
            c in proptest::array::uniform4(-2.0f64..2.0),
            xi in -1.0f64..1.0,
            eta in -1.0f64..1.0,
            cell in 0usize..16,
        ) {
            let f = |p: [f64; 2]| {
                let v = c[0] + c[1] * p[0] + c[2] * p[1] + c[3] * p[0] * p[1];
                [v, -v]
            };
            let space = FeSpace::new(Mesh::unit_square(2).unwrap());
            let u = interpolate(&space, f);
            let coords = space.mesh().cell_coords(cell);
            let n = shape_values([xi, eta]);
            let x = [
                (0..4).map(|k| n[k] * coords[k][0]).sum::<f64>(),
                (0..4).map(|k| n[k] * coords[k][1]).sum::<f64>(),
            ];
            let got = u.evaluate(&space, cell, [xi, eta]);
            let want = f(x);
            prop_assert!((got[0] - want[0]).abs() < 1e-13);
            prop_assert!((got[1] - want[1]).abs() < 1e-13);
        }
    }
}
