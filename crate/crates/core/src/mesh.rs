//! Structured quadrilateral meshes of the unit square.
//!
//! Cells store four node indices counterclockwise, starting at the
//! bottom-left corner for axis-aligned cells. Local edge `k` joins local
//! nodes `k` and `(k + 1) % 4`, so edge 0 is the bottom, 1 the right, 2 the
//! top and 3 the left side of a cell.
//!
//! An edge crack is represented as a zero-width slit: every node strictly
//! inside the slit, plus the node where the slit meets the outer boundary,
//! is duplicated. Cells above the slit keep the original node, cells below
//! get the copy, and the tip node stays shared.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Finest supported uniform refinement level.
pub const MAX_REFINEMENTS: u32 = 12;

const COORD_TOL: f64 = 1e-12;

/// Boundary part an exterior or crack-face edge belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    /// Γ1, `y = 0`.
    Bottom,
    /// Γ2, `x = 1`.
    Right,
    /// Γ3, `y = 1`.
    Top,
    /// Γ4, `x = 0`.
    Left,
    /// ΓC, both faces of the slit.
    Crack,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 5] = [
        BoundaryTag::Bottom,
        BoundaryTag::Right,
        BoundaryTag::Top,
        BoundaryTag::Left,
        BoundaryTag::Crack,
    ];
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BoundaryTag::Bottom => "G1",
            BoundaryTag::Right => "G2",
            BoundaryTag::Top => "G3",
            BoundaryTag::Left => "G4",
            BoundaryTag::Crack => "GC",
        };
        f.write_str(s)
    }
}

impl FromStr for BoundaryTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "g1" | "bottom" => Ok(BoundaryTag::Bottom),
            "g2" | "right" => Ok(BoundaryTag::Right),
            "g3" | "top" => Ok(BoundaryTag::Top),
            "g4" | "left" => Ok(BoundaryTag::Left),
            "gc" | "crack" => Ok(BoundaryTag::Crack),
            _ => Err(Error::UnknownTag(s.to_string())),
        }
    }
}

/// A tagged cell edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryFace {
    pub cell: usize,
    pub local_edge: usize,
    pub tag: BoundaryTag,
}

/// Geometry of a tagged edge as seen from its owning cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub cell: usize,
    pub local_edge: usize,
    /// Global node indices, in the cell's counterclockwise order.
    pub nodes: [usize; 2],
    pub normal: [f64; 2],
    pub length: f64,
}

/// Horizontal edge crack from `(tip_x, y)` to `(end_x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrackSpec {
    pub y: f64,
    pub tip_x: f64,
    pub end_x: f64,
}

impl CrackSpec {
    /// The 0.5 m slit entering from the right side at mid-height.
    pub fn right_edge() -> Self {
        CrackSpec {
            y: 0.5,
            tip_x: 0.5,
            end_x: 1.0,
        }
    }

    pub fn tip(&self) -> [f64; 2] {
        [self.tip_x, self.y]
    }

    pub fn length(&self) -> f64 {
        (self.end_x - self.tip_x).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<[f64; 2]>,
    cells: Vec<[usize; 4]>,
    faces: Vec<BoundaryFace>,
    crack: Option<CrackSpec>,
    level: u32,
}

impl Mesh {
    /// Uniform `2^n × 2^n` grid of the unit square with lexicographic node
    /// numbering (row by row from the bottom).
    pub fn unit_square(n_refinements: u32) -> Result<Mesh> {
        if n_refinements > MAX_REFINEMENTS {
            return Err(Error::RefinementTooDeep(n_refinements));
        }
        let n = 1usize << n_refinements;
        let h = 1.0 / n as f64;
        let stride = n + 1;

        let mut nodes = Vec::with_capacity(stride * stride);
        for j in 0..=n {
            for i in 0..=n {
                nodes.push([i as f64 * h, j as f64 * h]);
            }
        }

        let mut cells = Vec::with_capacity(n * n);
        let mut faces = Vec::with_capacity(4 * n);
        for j in 0..n {
            for i in 0..n {
                let bl = j * stride + i;
                let cell = cells.len();
                cells.push([bl, bl + 1, bl + 1 + stride, bl + stride]);
                let mut tag = |local_edge, tag| {
                    faces.push(BoundaryFace {
                        cell,
                        local_edge,
                        tag,
                    })
                };
                if j == 0 {
                    tag(0, BoundaryTag::Bottom);
                }
                if i == n - 1 {
                    tag(1, BoundaryTag::Right);
                }
                if j == n - 1 {
                    tag(2, BoundaryTag::Top);
                }
                if i == 0 {
                    tag(3, BoundaryTag::Left);
                }
            }
        }

        Ok(Mesh {
            nodes,
            cells,
            faces,
            crack: None,
            level: n_refinements,
        })
    }

    /// Cut a slit along existing mesh edges by duplicating the nodes on it.
    pub fn with_edge_crack(&self, crack: CrackSpec) -> Result<Mesh> {
        if self.crack.is_some() {
            return Err(Error::SegmentNotOnGrid("mesh already carries a crack".into()));
        }
        if (crack.end_x - 1.0).abs() > COORD_TOL || crack.tip_x >= crack.end_x {
            return Err(Error::SegmentNotOnGrid(format!(
                "edge crack must run from an interior tip to x = 1, got [{}, {}]",
                crack.tip_x, crack.end_x
            )));
        }

        let tip = self
            .find_node(crack.tip())
            .ok_or_else(|| Error::SegmentNotOnGrid(format!("no node at tip {:?}", crack.tip())))?;

        let mut on_slit: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| {
                let [x, y] = self.nodes[i];
                (y - crack.y).abs() < COORD_TOL
                    && x > crack.tip_x + COORD_TOL
                    && x < crack.end_x + COORD_TOL
            })
            .collect();
        on_slit.sort_by(|&a, &b| self.nodes[a][0].total_cmp(&self.nodes[b][0]));

        match on_slit.last() {
            Some(&last) if (self.nodes[last][0] - crack.end_x).abs() < COORD_TOL => {}
            _ => {
                return Err(Error::SegmentNotOnGrid(format!(
                    "no node at slit end ({}, {})",
                    crack.end_x, crack.y
                )))
            }
        }

        let edges = self.edge_set();
        let mut prev = tip;
        for &next in &on_slit {
            if !edges.contains(&edge_key(prev, next)) {
                return Err(Error::SegmentNotOnGrid(format!(
                    "nodes {prev} and {next} are not joined by a mesh edge"
                )));
            }
            prev = next;
        }

        let mut mesh = self.clone();
        let mut lower_copy = HashMap::with_capacity(on_slit.len());
        for &node in &on_slit {
            lower_copy.insert(node, mesh.nodes.len());
            mesh.nodes.push(self.nodes[node]);
        }

        for cell in 0..mesh.cells.len() {
            let below = mesh.cell_center(cell)[1] < crack.y;
            if below {
                for node in mesh.cells[cell].iter_mut() {
                    if let Some(&copy) = lower_copy.get(node) {
                        *node = copy;
                    }
                }
            }
            // the face of this cell that would lie on the slit
            let face_edge = if below { 2 } else { 0 };
            let [p, q] = local_edge_nodes(&mesh.cells[cell], face_edge).map(|n| mesh.nodes[n]);
            let hits_slit = (p[1] - crack.y).abs() < COORD_TOL
                && (q[1] - crack.y).abs() < COORD_TOL
                && p[0].min(q[0]) > crack.tip_x - COORD_TOL
                && p[0].max(q[0]) < crack.end_x + COORD_TOL;
            if hits_slit {
                mesh.faces.push(BoundaryFace {
                    cell,
                    local_edge: face_edge,
                    tag: BoundaryTag::Crack,
                });
            }
        }
        mesh.faces.sort_by_key(|f| (f.cell, f.local_edge));
        mesh.crack = Some(crack);
        Ok(mesh)
    }

    /// Split every cell into four children. Edge midpoints are shared by
    /// node pair, so the two faces of a slit get distinct midpoints and the
    /// crack survives refinement without special handling.
    pub fn refine(&self) -> Result<Mesh> {
        if self.level >= MAX_REFINEMENTS {
            return Err(Error::RefinementTooDeep(self.level + 1));
        }
        let mut nodes = self.nodes.clone();
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut cells = Vec::with_capacity(4 * self.cells.len());

        for cell in &self.cells {
            let mut mid = [0usize; 4];
            for (e, m) in mid.iter_mut().enumerate() {
                let [a, b] = local_edge_nodes(cell, e);
                *m = *midpoints.entry(edge_key(a, b)).or_insert_with(|| {
                    let (pa, pb) = (self.nodes[a], self.nodes[b]);
                    nodes.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                    nodes.len() - 1
                });
            }
            let center = nodes.len();
            nodes.push(average_point(cell.map(|n| self.nodes[n])));

            let [a, b, c, d] = *cell;
            let [m_ab, m_bc, m_cd, m_da] = mid;
            cells.push([a, m_ab, center, m_da]);
            cells.push([m_ab, b, m_bc, center]);
            cells.push([center, m_bc, c, m_cd]);
            cells.push([m_da, center, m_cd, d]);
        }

        let mut faces = Vec::with_capacity(2 * self.faces.len());
        for face in &self.faces {
            for child in [face.local_edge, (face.local_edge + 1) % 4] {
                faces.push(BoundaryFace {
                    cell: 4 * face.cell + child,
                    local_edge: face.local_edge,
                    tag: face.tag,
                });
            }
        }
        faces.sort_by_key(|f| (f.cell, f.local_edge));

        Ok(Mesh {
            nodes,
            cells,
            faces,
            crack: self.crack,
            level: self.level + 1,
        })
    }

    /// Tagged edges with their outward normals. Fails with `UnknownTag` if
    /// no edge carries `tag`.
    pub fn boundary_edges(&self, tag: BoundaryTag) -> Result<Vec<BoundaryEdge>> {
        let edges: Vec<_> = self
            .faces
            .iter()
            .filter(|f| f.tag == tag)
            .map(|f| self.edge_geometry(f.cell, f.local_edge))
            .collect();
        if edges.is_empty() {
            return Err(Error::UnknownTag(tag.to_string()));
        }
        Ok(edges)
    }

    pub fn edge_geometry(&self, cell: usize, local_edge: usize) -> BoundaryEdge {
        let nodes = local_edge_nodes(&self.cells[cell], local_edge);
        let [p, q] = nodes.map(|n| self.nodes[n]);
        let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
        let length = dx.hypot(dy);
        BoundaryEdge {
            cell,
            local_edge,
            nodes,
            normal: [dy / length, -dx / length],
            length,
        }
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn cells(&self) -> &[[usize; 4]] {
        &self.cells
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.faces
    }

    pub fn crack(&self) -> Option<&CrackSpec> {
        self.crack.as_ref()
    }

    pub fn refinement_level(&self) -> u32 {
        self.level
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    /// Cell side length of the uniform grid.
    pub fn h(&self) -> f64 {
        0.5f64.powi(self.level as i32)
    }

    pub fn cell_coords(&self, cell: usize) -> [[f64; 2]; 4] {
        self.cells[cell].map(|n| self.nodes[n])
    }

    pub fn cell_center(&self, cell: usize) -> [f64; 2] {
        average_point(self.cell_coords(cell))
    }

    /// Signed (shoelace) area; positive for counterclockwise cells.
    pub fn cell_area(&self, cell: usize) -> f64 {
        let p = self.cell_coords(cell);
        0.5 * (0..4)
            .map(|k| {
                let (a, b) = (p[k], p[(k + 1) % 4]);
                a[0] * b[1] - b[0] * a[1]
            })
            .sum::<f64>()
    }

    /// Index of the node at `point` (first match), if any.
    pub fn find_node(&self, point: [f64; 2]) -> Option<usize> {
        self.nodes
            .iter()
            .position(|p| (p[0] - point[0]).abs() < COORD_TOL && (p[1] - point[1]).abs() < COORD_TOL)
    }

    /// Node closest to `point`; ties go to the lowest index.
    pub fn nearest_node(&self, point: [f64; 2]) -> usize {
        let dist = |p: &[f64; 2]| (p[0] - point[0]).powi(2) + (p[1] - point[1]).powi(2);
        let mut best = 0;
        for (i, p) in self.nodes.iter().enumerate() {
            if dist(p) < dist(&self.nodes[best]) {
                best = i;
            }
        }
        best
    }

    /// Cells sharing an edge, as an adjacency list. Crack faces never
    /// appear here because their two sides reference different nodes.
    pub fn cell_adjacency(&self) -> Vec<Vec<usize>> {
        let mut by_edge: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (c, cell) in self.cells.iter().enumerate() {
            for e in 0..4 {
                let [a, b] = local_edge_nodes(cell, e);
                by_edge.entry(edge_key(a, b)).or_default().push(c);
            }
        }
        let mut adj = vec![Vec::new(); self.cells.len()];
        for owners in by_edge.values() {
            if let [c0, c1] = owners[..] {
                adj[c0].push(c1);
                adj[c1].push(c0);
            }
        }
        adj
    }

    /// Number of cells reachable from cell 0 through shared edges.
    pub fn connected_cell_count(&self) -> usize {
        if self.cells.is_empty() {
            return 0;
        }
        let adj = self.cell_adjacency();
        let mut seen = vec![false; self.cells.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 0;
        while let Some(c) = queue.pop_front() {
            count += 1;
            for &n in &adj[c] {
                if !seen[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            }
        }
        count
    }

    fn edge_set(&self) -> HashSet<(usize, usize)> {
        self.cells
            .iter()
            .flat_map(|cell| (0..4).map(move |e| local_edge_nodes(cell, e)))
            .map(|[a, b]| edge_key(a, b))
            .collect()
    }
}

pub fn local_edge_nodes(cell: &[usize; 4], local_edge: usize) -> [usize; 2] {
    [cell[local_edge], cell[(local_edge + 1) % 4]]
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

fn average_point(p: [[f64; 2]; 4]) -> [f64; 2] {
    [
        0.25 * (p[0][0] + p[1][0] + p[2][0] + p[3][0]),
        0.25 * (p[0][1] + p[1][1] + p[2][1] + p[3][1]),
    ]
}
