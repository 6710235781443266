//! Global tangent, residual and traction assembly, and Dirichlet elimination.
//!
//! The residual is the out-of-balance force
//! `r_i = −∫ T(ε(u)) : ε(φ_i) + ∫_Γ g·φ_i + ∫ f·φ_i`,
//! so a Newton update solves `A δu = r` with `A` the consistent tangent.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::constitutive::{strain, Grad2, MaterialParams, Stress2};
use crate::error::{Error, Result};
use crate::fespace::{gauss_1d, FeSpace, NodalField, QuadPoint, QuadratureRule};
use crate::mesh::{BoundaryTag, Mesh};

/// Square matrix in compressed sparse row storage with a fixed pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Empty matrix with the connectivity pattern of `space`: two DOFs are
    /// coupled iff their nodes share a cell.
    pub fn with_pattern(space: &FeSpace) -> Self {
        let mesh = space.mesh();
        let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); mesh.n_nodes()];
        for cell in mesh.cells() {
            for &a in cell {
                neighbours[a].extend_from_slice(cell);
            }
        }
        let mut row_ptr = Vec::with_capacity(space.n_dofs() + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for list in &mut neighbours {
            list.sort_unstable();
            list.dedup();
            for _ in 0..2 {
                for &b in list.iter() {
                    col_idx.push(2 * b);
                    col_idx.push(2 * b + 1);
                }
                row_ptr.push(col_idx.len());
            }
        }
        let values = vec![0.0; col_idx.len()];
        SparseMatrix {
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Build from a dense row-major matrix, keeping nonzeros only.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for row in rows {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseMatrix {
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    fn position(&self, row: usize, col: usize) -> Option<usize> {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        self.col_idx[range.clone()]
            .binary_search(&col)
            .ok()
            .map(|k| range.start + k)
    }

    /// Entry `(row, col)`, zero outside the pattern.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.position(row, col).map_or(0.0, |k| self.values[k])
    }

    /// Add to an entry inside the pattern.
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        let k = self
            .position(row, col)
            .unwrap_or_else(|| panic!("entry ({row}, {col}) outside sparsity pattern"));
        self.values[k] += value;
    }

    /// Iterate `(row, col, value)` over stored entries in row order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows()).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_rows())
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .map(|k| self.values[k] * x[self.col_idx[k]])
                    .sum()
            })
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n_rows();
        let mut dense = vec![vec![0.0; n]; n];
        for (r, c, v) in self.triplets() {
            dense[r][c] += v;
        }
        dense
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Frobenius norm of `A − Aᵀ`.
    pub fn asymmetry(&self) -> f64 {
        self.triplets()
            .map(|(r, c, v)| (v - self.get(c, r)).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Prescribed displacement on a set of nodes.
#[derive(Clone)]
pub enum DirichletValue {
    Constant([f64; 2]),
    Function(Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>),
}

impl DirichletValue {
    fn at(&self, x: [f64; 2]) -> [f64; 2] {
        match self {
            DirichletValue::Constant(v) => *v,
            DirichletValue::Function(f) => f(x),
        }
    }
}

impl std::fmt::Debug for DirichletValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DirichletValue::Constant(v) => write!(f, "Constant({v:?})"),
            DirichletValue::Function(_) => write!(f, "Function(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DirichletTarget {
    Boundary(BoundaryTag),
    /// The single node closest to a point.
    NearestNode([f64; 2]),
}

#[derive(Debug, Clone)]
pub struct DirichletBc {
    pub target: DirichletTarget,
    /// Which of (x, y) are constrained.
    pub components: [bool; 2],
    pub value: DirichletValue,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeumannBc {
    pub tag: BoundaryTag,
    /// Traction in Pa.
    pub traction: [f64; 2],
}

#[derive(Debug, Clone, Default)]
pub struct BoundaryConditions {
    pub dirichlet: Vec<DirichletBc>,
    pub neumann: Vec<NeumannBc>,
}

/// Prescribed DOF values keyed by DOF index.
pub type Constraints = BTreeMap<usize, f64>;

impl BoundaryConditions {
    pub fn new() -> Self {
        Self::default()
    }

    /// `u_y = 0` on `tag`.
    pub fn roller(mut self, tag: BoundaryTag) -> Self {
        self.dirichlet.push(DirichletBc {
            target: DirichletTarget::Boundary(tag),
            components: [false, true],
            value: DirichletValue::Constant([0.0; 2]),
        });
        self
    }

    /// `u = 0` on `tag`.
    pub fn hinge(mut self, tag: BoundaryTag) -> Self {
        self.dirichlet.push(DirichletBc {
            target: DirichletTarget::Boundary(tag),
            components: [true, true],
            value: DirichletValue::Constant([0.0; 2]),
        });
        self
    }

    /// `u_x = 0` at the node nearest `point`.
    pub fn pin_x(mut self, point: [f64; 2]) -> Self {
        self.dirichlet.push(DirichletBc {
            target: DirichletTarget::NearestNode(point),
            components: [true, false],
            value: DirichletValue::Constant([0.0; 2]),
        });
        self
    }

    /// Both components prescribed by `f` on `tag`.
    pub fn prescribed(
        mut self,
        tag: BoundaryTag,
        f: impl Fn([f64; 2]) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        self.dirichlet.push(DirichletBc {
            target: DirichletTarget::Boundary(tag),
            components: [true, true],
            value: DirichletValue::Function(Arc::new(f)),
        });
        self
    }

    pub fn traction(mut self, tag: BoundaryTag, traction: [f64; 2]) -> Self {
        self.neumann.push(NeumannBc { tag, traction });
        self
    }

    /// Check well-posedness against a mesh: Dirichlet data present, every
    /// tag has edges, and no tag carries both kinds of data.
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        if self.dirichlet.is_empty() {
            return Err(Error::InvalidBoundaryConditions(
                "no Dirichlet boundary given".into(),
            ));
        }
        for bc in &self.dirichlet {
            if let DirichletTarget::Boundary(tag) = bc.target {
                mesh.boundary_edges(tag)?;
                if self.neumann.iter().any(|n| n.tag == tag) {
                    return Err(Error::InvalidBoundaryConditions(format!(
                        "boundary {tag} has both Dirichlet and traction data"
                    )));
                }
            }
            if !bc.components.iter().any(|&c| c) {
                return Err(Error::InvalidBoundaryConditions(
                    "Dirichlet condition constrains no component".into(),
                ));
            }
        }
        for n in &self.neumann {
            mesh.boundary_edges(n.tag)?;
            if !n.traction.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidBoundaryConditions(format!(
                    "non-finite traction on {}",
                    n.tag
                )));
            }
        }
        Ok(())
    }

    /// Constrained DOFs and their values. Later conditions override earlier
    /// ones on shared nodes.
    pub fn constraints(&self, space: &FeSpace) -> Result<Constraints> {
        let mesh = space.mesh();
        let mut out = Constraints::new();
        for bc in &self.dirichlet {
            let nodes: Vec<usize> = match bc.target {
                DirichletTarget::Boundary(tag) => {
                    let mut nodes: Vec<usize> = mesh
                        .boundary_edges(tag)?
                        .iter()
                        .flat_map(|e| e.nodes)
                        .collect();
                    nodes.sort_unstable();
                    nodes.dedup();
                    nodes
                }
                DirichletTarget::NearestNode(p) => vec![mesh.nearest_node(p)],
            };
            for node in nodes {
                let v = bc.value.at(mesh.nodes()[node]);
                for c in 0..2 {
                    if bc.components[c] {
                        out.insert(2 * node + c, v[c]);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Same constrained DOFs with all values zero, for Newton updates.
    pub fn homogeneous_constraints(&self, space: &FeSpace) -> Result<Constraints> {
        Ok(self
            .constraints(space)?
            .into_keys()
            .map(|k| (k, 0.0))
            .collect())
    }
}

/// `T : ∇φ` for the vector test function `φ = N e_d`, where `grad_n = ∇N`.
#[inline]
fn stress_dot_test(t: &Stress2, grad_n: [f64; 2], d: usize) -> f64 {
    if d == 0 {
        t.xx * grad_n[0] + t.xy * grad_n[1]
    } else {
        t.xy * grad_n[0] + t.yy * grad_n[1]
    }
}

/// Gradient of the vector shape function `N e_c`.
#[inline]
fn shape_gradient(grad_n: [f64; 2], c: usize) -> Grad2 {
    let mut g = [[0.0; 2]; 2];
    g[c] = grad_n;
    g
}

fn cell_strain(space: &FeSpace, u: &NodalField, cell: usize, qp: &QuadPoint) -> crate::constitutive::Strain2 {
    strain(&u.gradient(space, cell, qp))
}

/// 8×8 element tangent of `cell` at state `u`, in local DOF order.
pub fn element_tangent(
    space: &FeSpace,
    u: &NodalField,
    params: &MaterialParams,
    cell: usize,
    rule: &QuadratureRule,
) -> Result<[[f64; 8]; 8]> {
    let mut ke = [[0.0; 8]; 8];
    for (q, qp) in space.quad_points(cell, rule)?.iter().enumerate() {
        let eps = cell_strain(space, u, cell, qp);
        for j in 0..8 {
            let t = params
                .tangent_apply(&eps, &shape_gradient(qp.grads[j / 2], j % 2))
                .map_err(|e| e.at(cell, q))?;
            for i in 0..8 {
                ke[i][j] += qp.jxw * stress_dot_test(&t, qp.grads[i / 2], i % 2);
            }
        }
    }
    Ok(ke)
}

/// Consistent tangent at `u`, cells scattered in ascending order.
pub fn assemble_tangent(
    space: &FeSpace,
    u: &NodalField,
    params: &MaterialParams,
) -> Result<SparseMatrix> {
    let rule = QuadratureRule::gauss(2);
    let mut a = SparseMatrix::with_pattern(space);
    for cell in 0..space.mesh().n_cells() {
        let ke = element_tangent(space, u, params, cell, &rule)?;
        let dofs = space.cell_dofs(cell);
        for i in 0..8 {
            for j in 0..8 {
                a.add(dofs[i], dofs[j], ke[i][j]);
            }
        }
    }
    Ok(a)
}

/// Internal force `∫ T(ε(u)) : ε(φ_i)`.
pub fn internal_force(space: &FeSpace, u: &NodalField, params: &MaterialParams) -> Result<Vec<f64>> {
    let rule = QuadratureRule::gauss(2);
    let mut f = vec![0.0; space.n_dofs()];
    for cell in 0..space.mesh().n_cells() {
        let dofs = space.cell_dofs(cell);
        for (q, qp) in space.quad_points(cell, &rule)?.iter().enumerate() {
            let eps = cell_strain(space, u, cell, qp);
            let t = params.cauchy_stress(&eps).map_err(|e| e.at(cell, q))?;
            for i in 0..8 {
                f[dofs[i]] += qp.jxw * stress_dot_test(&t, qp.grads[i / 2], i % 2);
            }
        }
    }
    Ok(f)
}

/// Consistent load of a constant traction `g` on every edge tagged `tag`.
pub fn assemble_traction(space: &FeSpace, tag: BoundaryTag, g: [f64; 2]) -> Result<Vec<f64>> {
    let mut f = vec![0.0; space.n_dofs()];
    add_traction(space, tag, g, &mut f)?;
    Ok(f)
}

fn add_traction(space: &FeSpace, tag: BoundaryTag, g: [f64; 2], f: &mut [f64]) -> Result<()> {
    let (points, weights) = gauss_1d(2);
    for edge in space.mesh().boundary_edges(tag)? {
        for (s, w) in points.iter().zip(&weights) {
            // linear edge shape functions on [−1, 1]
            let n = [0.5 * (1.0 - s), 0.5 * (1.0 + s)];
            let jxw = w * 0.5 * edge.length;
            for (k, &node) in edge.nodes.iter().enumerate() {
                f[2 * node] += jxw * n[k] * g[0];
                f[2 * node + 1] += jxw * n[k] * g[1];
            }
        }
    }
    Ok(())
}

/// Sum of all traction loads in `bcs`.
pub fn external_load(space: &FeSpace, bcs: &BoundaryConditions) -> Result<Vec<f64>> {
    let mut f = vec![0.0; space.n_dofs()];
    for n in &bcs.neumann {
        add_traction(space, n.tag, n.traction, &mut f)?;
    }
    Ok(f)
}

/// `∫ f·φ_i` by 2×2 Gauss.
pub fn body_force_load(space: &FeSpace, body: &dyn Fn([f64; 2]) -> [f64; 2]) -> Result<Vec<f64>> {
    let rule = QuadratureRule::gauss(2);
    let mut f = vec![0.0; space.n_dofs()];
    for cell in 0..space.mesh().n_cells() {
        let dofs = space.cell_dofs(cell);
        for qp in space.quad_points(cell, &rule)? {
            let b = body(qp.x);
            for a in 0..4 {
                f[dofs[2 * a]] += qp.jxw * qp.values[a] * b[0];
                f[dofs[2 * a + 1]] += qp.jxw * qp.values[a] * b[1];
            }
        }
    }
    Ok(f)
}

/// Out-of-balance force vector at `u` (external minus internal).
pub fn assemble_residual(
    space: &FeSpace,
    u: &NodalField,
    params: &MaterialParams,
    bcs: &BoundaryConditions,
    body: Option<&dyn Fn([f64; 2]) -> [f64; 2]>,
) -> Result<Vec<f64>> {
    let mut r = external_load(space, bcs)?;
    if let Some(body) = body {
        for (ri, bi) in r.iter_mut().zip(body_force_load(space, body)?) {
            *ri += bi;
        }
    }
    for (ri, fi) in r.iter_mut().zip(internal_force(space, u, params)?) {
        *ri -= fi;
    }
    Ok(r)
}

/// Eliminate constrained DOFs: their rows become identity rows with the
/// prescribed value on the right-hand side, and their columns are moved to
/// the right-hand side of the remaining rows.
pub fn apply_dirichlet(matrix: &mut SparseMatrix, rhs: &mut [f64], constraints: &Constraints) {
    let n = matrix.n_rows();
    let mut fixed = vec![None; n];
    for (&dof, &v) in constraints {
        fixed[dof] = Some(v);
    }
    for r in 0..n {
        for k in matrix.row_ptr[r]..matrix.row_ptr[r + 1] {
            let c = matrix.col_idx[k];
            match (fixed[r], fixed[c]) {
                (Some(_), _) => matrix.values[k] = if r == c { 1.0 } else { 0.0 },
                (None, Some(g)) => {
                    rhs[r] -= matrix.values[k] * g;
                    matrix.values[k] = 0.0;
                }
                (None, None) => {}
            }
        }
    }
    for (&dof, &v) in constraints {
        rhs[dof] = v;
    }
}

/// Zero the constrained entries of a residual.
pub fn zero_constrained(r: &mut [f64], constraints: &Constraints) {
    for &dof in constraints.keys() {
        r[dof] = 0.0;
    }
}

/// Sum of reaction forces over constrained DOFs, `(Rx, Ry)`. The reaction
/// is the negative residual at a constrained DOF.
pub fn reaction_resultant(
    space: &FeSpace,
    u: &NodalField,
    params: &MaterialParams,
    bcs: &BoundaryConditions,
) -> Result<[f64; 2]> {
    let r = assemble_residual(space, u, params, bcs, None)?;
    let mut total = [0.0; 2];
    for &dof in bcs.constraints(space)?.keys() {
        total[dof % 2] -= r[dof];
    }
    Ok(total)
}

/// Resultant of all applied tractions.
pub fn traction_resultant(space: &FeSpace, bcs: &BoundaryConditions) -> Result<[f64; 2]> {
    let f = external_load(space, bcs)?;
    let mut total = [0.0; 2];
    for (i, v) in f.iter().enumerate() {
        total[i % 2] += v;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::SymTensor2;
    use crate::fespace::interpolate;
    use crate::mesh::CrackSpec;

    const FU: f64 = 1e4;

    fn space(n: u32) -> FeSpace {
        FeSpace::new(Mesh::unit_square(n).unwrap())
    }

    /// Classical plane-strain stiffness by 2×2 Gauss with an explicit
    /// B-matrix and D-matrix, independent of the tangent code path.
    fn classical_element_stiffness(coords: &[[f64; 2]; 4], e: f64, nu: f64) -> [[f64; 8]; 8] {
        let f = e / ((1.0 + nu) * (1.0 - 2.0 * nu));
        let d = [
            [f * (1.0 - nu), f * nu, 0.0],
            [f * nu, f * (1.0 - nu), 0.0],
            [0.0, 0.0, f * (1.0 - 2.0 * nu) / 2.0],
        ];
        let g = 1.0 / 3f64.sqrt();
        let mut k = [[0.0; 8]; 8];
        for (xi, eta) in [(-g, -g), (g, -g), (-g, g), (g, g)] {
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

    #[test]
    fn single_cell_matches_classical_stiffness() {
        let sp = space(0);
        let p = MaterialParams::new(100e6, 0.15, 0.0).unwrap();
        let a = assemble_tangent(&sp, &NodalField::zeros(&sp), &p).unwrap();
        let k = classical_element_stiffness(&sp.mesh().cell_coords(0), 100e6, 0.15);
        let dense = a.to_dense();
        let dofs = sp.cell_dofs(0);
        for i in 0..8 {
            for j in 0..8 {
                assert!((dense[dofs[i]][dofs[j]] - k[i][j]).abs() <= 1e-12 * 1e8, "{i} {j}");
            }
        }
    }

    #[test]
    fn zero_state_tangent_independent_of_beta() {
        let sp = space(2);
        let u = NodalField::zeros(&sp);
        let a0 = assemble_tangent(&sp, &u, &MaterialParams::new(100e6, 0.15, 0.0).unwrap()).unwrap();
        let a1 = assemble_tangent(&sp, &u, &MaterialParams::new(100e6, 0.15, 200.0).unwrap()).unwrap();
        assert_eq!(a0, a1);
    }

    #[test]
    fn symmetry_depends_on_beta() {
        let sp = space(1);
        let u = interpolate(&sp, |p| [1e-4 * p[0] * p[1], 2e-4 * p[1] * p[1]]);
        let lin = assemble_tangent(&sp, &u, &MaterialParams::new(100e6, 0.15, 0.0).unwrap()).unwrap();
        assert!(lin.asymmetry() <= 1e-12 * lin.norm());
        let nl = assemble_tangent(&sp, &u, &MaterialParams::new(100e6, 0.15, 200.0).unwrap()).unwrap();
        assert!(nl.asymmetry() > 1e-6 * nl.norm());
    }

    #[test]
    fn singular_factor_reports_location() {
        let sp = space(1);
        let u = interpolate(&sp, |p| [0.01 * p[0], 0.0]);
        let p = MaterialParams::new(1.0, 0.2, -100.0).unwrap();
        match assemble_tangent(&sp, &u, &p) {
            Err(Error::SingularDensityFactor { location: Some((0, 0)), .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(assemble_residual(&sp, &u, &p, &BoundaryConditions::new(), None).is_err());
    }

    #[test]
    fn residual_of_zero_state_without_load() {
        let sp = space(2);
        let p = MaterialParams::new(100e6, 0.15, 50.0).unwrap();
        let r = assemble_residual(&sp, &NodalField::zeros(&sp), &p, &BoundaryConditions::new(), None).unwrap();
        assert!(r.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn traction_loads_only_top_nodes() {
        let sp = space(1);
        let f = assemble_traction(&sp, BoundaryTag::Top, [0.0, FU]).unwrap();
        let mut total = [0.0; 2];
        for (node, p) in sp.mesh().nodes().iter().enumerate() {
            let load = [f[2 * node], f[2 * node + 1]];
            if (p[1] - 1.0).abs() > 1e-12 {
                assert_eq!(load, [0.0, 0.0]);
            }
            total[0] += load[0];
            total[1] += load[1];
        }
        assert_eq!(total[0], 0.0);
        assert!((total[1] - FU).abs() < 1e-10);
        // edge nodes get half the interior share
        let corner = sp.mesh().find_node([0.0, 1.0]).unwrap();
        let mid = sp.mesh().find_node([0.5, 1.0]).unwrap();
        assert!((f[2 * corner + 1] - FU / 4.0).abs() < 1e-10);
        assert!((f[2 * mid + 1] - FU / 2.0).abs() < 1e-10);
    }

    #[test]
    fn traction_resultants() {
        let sp = space(3);
        assert!(assemble_traction(&sp, BoundaryTag::Top, [0.0, 0.0]).unwrap().iter().all(|&v| v == 0.0));
        let bcs = BoundaryConditions::new().traction(BoundaryTag::Top, [FU, 0.0]);
        let r = traction_resultant(&sp, &bcs).unwrap();
        assert!((r[0] - FU).abs() < 1e-9 && r[1] == 0.0);
        let bcs = BoundaryConditions::new().traction(BoundaryTag::Top, [FU, FU]);
        let r = traction_resultant(&sp, &bcs).unwrap();
        assert_eq!(r[0], r[1]);
        assert!(matches!(
            assemble_traction(&sp, BoundaryTag::Crack, [1.0, 0.0]),
            Err(Error::UnknownTag(_))
        ));
    }

    #[test]
    fn roller_and_hinge_constraints() {
        let sp = space(2);
        let roller = BoundaryConditions::new().roller(BoundaryTag::Bottom).constraints(&sp).unwrap();
        assert_eq!(roller.len(), 5);
        for &dof in roller.keys() {
            assert_eq!(dof % 2, 1);
            assert_eq!(sp.mesh().nodes()[dof / 2][1], 0.0);
        }
        let hinge = BoundaryConditions::new().hinge(BoundaryTag::Bottom).constraints(&sp).unwrap();
        assert_eq!(hinge.len(), 10);
        let pinned = BoundaryConditions::new()
            .roller(BoundaryTag::Bottom)
            .pin_x([0.5, 0.0])
            .constraints(&sp)
            .unwrap();
        let mid = sp.mesh().find_node([0.5, 0.0]).unwrap();
        assert_eq!(pinned.len(), 6);
        assert!(pinned.contains_key(&(2 * mid)));
    }

    #[test]
    fn validation() {
        let mesh = Mesh::unit_square(1).unwrap();
        assert!(matches!(
            BoundaryConditions::new().traction(BoundaryTag::Top, [0.0, 1.0]).validate(&mesh),
            Err(Error::InvalidBoundaryConditions(_))
        ));
        assert!(BoundaryConditions::new()
            .hinge(BoundaryTag::Top)
            .traction(BoundaryTag::Top, [0.0, 1.0])
            .validate(&mesh)
            .is_err());
        assert!(matches!(
            BoundaryConditions::new().hinge(BoundaryTag::Crack).validate(&mesh),
            Err(Error::UnknownTag(_))
        ));
        assert!(BoundaryConditions::new()
            .hinge(BoundaryTag::Bottom)
            .traction(BoundaryTag::Top, [0.0, 1.0])
            .validate(&mesh)
            .is_ok());
    }

    #[test]
    fn dirichlet_elimination_moves_columns() {
        let mut a = SparseMatrix::from_dense(&[
            vec![4.0, 1.0, 0.0],
            vec![1.0, 3.0, 2.0],
            vec![0.0, 2.0, 5.0],
        ]);
        let mut b = vec![1.0, 2.0, 3.0];
        let c = Constraints::from([(1, 0.5)]);
        apply_dirichlet(&mut a, &mut b, &c);
        assert_eq!(
            a.to_dense(),
            vec![vec![4.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 5.0]]
        );
        assert_eq!(b, vec![0.5, 0.5, 2.0]);
    }

    #[test]
    fn all_dofs_constrained_gives_identity() {
        let sp = space(1);
        let p = MaterialParams::new(100e6, 0.15, 0.0).unwrap();
        let mut a = assemble_tangent(&sp, &NodalField::zeros(&sp), &p).unwrap();
        let mut b = vec![1.0; sp.n_dofs()];
        let c: Constraints = (0..sp.n_dofs()).map(|d| (d, 0.0)).collect();
        apply_dirichlet(&mut a, &mut b, &c);
        assert_eq!(a.matvec(&b), vec![0.0; sp.n_dofs()]);
        assert!(b.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn homogeneous_state_has_zero_interior_residual() {
        // uniaxial plane-strain state under top traction: exact in Q1
        let sp = space(3);
        let p = MaterialParams::new(100e6, 0.15, 200.0).unwrap();
        let eps = p.invert_stress(&SymTensor2::new(0.0, FU, 0.0)).unwrap();
        let u = interpolate(&sp, |x| [eps.xx * (x[0] - 0.5), eps.yy * x[1]]);
        let bcs = BoundaryConditions::new()
            .roller(BoundaryTag::Bottom)
            .pin_x([0.5, 0.0])
            .traction(BoundaryTag::Top, [0.0, FU]);
        let mut r = assemble_residual(&sp, &u, &p, &bcs, None).unwrap();
        zero_constrained(&mut r, &bcs.constraints(&sp).unwrap());
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm <= 1e-10 * FU, "{norm}");
        let reaction = reaction_resultant(&sp, &u, &p, &bcs).unwrap();
        let load = traction_resultant(&sp, &bcs).unwrap();
        assert!((reaction[0] + load[0]).abs() <= 1e-8 * FU);
        assert!((reaction[1] + load[1]).abs() <= 1e-8 * FU);
    }

    #[test]
    fn pattern_covers_cracked_mesh_element_couplings() {
        let mesh = Mesh::unit_square(2).unwrap().with_edge_crack(CrackSpec::right_edge()).unwrap();
        let sp = FeSpace::new(mesh);
        let a = SparseMatrix::with_pattern(&sp);
        let upper = sp.mesh().find_node([0.75, 0.5]).unwrap();
        let lower = sp.mesh().nodes().len() - 2;
        assert_eq!(sp.mesh().nodes()[lower], [0.75, 0.5]);
        assert!(a.position(2 * upper, 2 * lower).is_none());
        for cell in 0..sp.mesh().n_cells() {
            for &i in sp.cell_dofs(cell) {
                for &j in sp.cell_dofs(cell) {
                    assert!(a.position(i, j).is_some());
                }
            }
        }
    }

    #[test]
    fn assembly_is_sum_of_element_matrices() {
        let sp = space(1);
        let p = MaterialParams::new(100e6, 0.15, 200.0).unwrap();
        let u = interpolate(&sp, |x| [1e-4 * x[0] * x[1], -2e-4 * x[0]]);
        let a = assemble_tangent(&sp, &u, &p).unwrap();
        let n = sp.n_dofs();
        let mut dense = vec![vec![0.0; n]; n];
        let rule = QuadratureRule::gauss(2);
        for cell in 0..sp.mesh().n_cells() {
            let ke = element_tangent(&sp, &u, &p, cell, &rule).unwrap();
            let dofs = sp.cell_dofs(cell);
            for i in 0..8 {
                for j in 0..8 {
                    dense[dofs[i]][dofs[j]] += ke[i][j];
                }
            }
        }
        assert_eq!(a.to_dense(), dense);
    }
}
