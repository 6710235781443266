//! Cell-averaged derived fields, reference-line profiles, stress intensity
//! profiles and extrema.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::constitutive::{density_ratio, strain, MaterialParams, Strain2};
use crate::error::{Error, Result};
use crate::fespace::{FeSpace, NodalField, QuadratureRule};
use crate::mesh::Mesh;

const GRID_TOL: f64 = 1e-9;

/// Derived scalar quantities available per cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantity {
    T11,
    T22,
    T21,
    Eps11,
    Eps22,
    Eps21,
    StrainEnergy,
    BulkModulus,
    TraceStrain,
    DensityRatio,
}

impl Quantity {
    pub const ALL: [Quantity; 10] = [
        Quantity::T11,
        Quantity::T22,
        Quantity::T21,
        Quantity::Eps11,
        Quantity::Eps22,
        Quantity::Eps21,
        Quantity::StrainEnergy,
        Quantity::BulkModulus,
        Quantity::TraceStrain,
        Quantity::DensityRatio,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Quantity::T11 => "T11",
            Quantity::T22 => "T22",
            Quantity::T21 => "T21",
            Quantity::Eps11 => "eps11",
            Quantity::Eps22 => "eps22",
            Quantity::Eps21 => "eps21",
            Quantity::StrainEnergy => "SED",
            Quantity::BulkModulus => "K_dr",
            Quantity::TraceStrain => "tr_eps",
            Quantity::DensityRatio => "rho_ratio",
        }
    }

    /// Value at a point with strain `eps`.
    pub fn evaluate(&self, params: &MaterialParams, eps: &Strain2) -> Result<f64> {
        Ok(match self {
            Quantity::T11 => params.cauchy_stress(eps)?.xx,
            Quantity::T22 => params.cauchy_stress(eps)?.yy,
            Quantity::T21 => params.cauchy_stress(eps)?.xy,
            Quantity::Eps11 => eps.xx,
            Quantity::Eps22 => eps.yy,
            Quantity::Eps21 => eps.xy,
            Quantity::StrainEnergy => params.strain_energy_density(eps)?,
            Quantity::BulkModulus => params.bulk_modulus(eps)?,
            Quantity::TraceStrain => eps.trace(),
            Quantity::DensityRatio => density_ratio(eps)?,
        })
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim();
        Quantity::ALL
            .into_iter()
            .find(|q| q.name().eq_ignore_ascii_case(key))
            .ok_or_else(|| Error::Validation {
                field: "fields".into(),
                message: format!("unknown quantity `{key}`"),
            })
    }
}

/// One scalar per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    pub quantity: Quantity,
    pub values: Vec<f64>,
}

/// Quadrature-weighted average of `quantity` over each cell (2×2 Gauss).
pub fn cell_average(
    space: &FeSpace,
    u: &NodalField,
    params: &MaterialParams,
    quantity: Quantity,
) -> Result<CellField> {
    Ok(cell_averages(space, u, params, &[quantity])?.remove(0))
}

/// Several cell averages in one pass over the quadrature points.
pub fn cell_averages(
    space: &FeSpace,
    u: &NodalField,
    params: &MaterialParams,
    quantities: &[Quantity],
) -> Result<Vec<CellField>> {
    let rule = QuadratureRule::gauss(2);
    let n_cells = space.mesh().n_cells();
    let mut out: Vec<CellField> = quantities
        .iter()
        .map(|&quantity| CellField {
            quantity,
            values: vec![0.0; n_cells],
        })
        .collect();
    for cell in 0..n_cells {
        let mut volume = 0.0;
        let mut sums = vec![0.0; quantities.len()];
        for (q, qp) in space.quad_points(cell, &rule)?.iter().enumerate() {
            let eps = strain(&u.gradient(space, cell, qp));
            volume += qp.jxw;
            for (s, quantity) in sums.iter_mut().zip(quantities) {
                *s += qp.jxw * quantity.evaluate(params, &eps).map_err(|e| e.at(cell, q))?;
            }
        }
        for (field, s) in out.iter_mut().zip(sums) {
            field.values[cell] = s / volume;
        }
    }
    Ok(out)
}

/// Horizontal segment `y = y, x ∈ [x0, x1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub y: f64,
    pub x0: f64,
    pub x1: f64,
}

impl Segment {
    pub fn new(y: f64, x0: f64, x1: f64) -> Self {
        Segment { y, x0, x1 }
    }

    pub fn length(&self) -> f64 {
        self.x1 - self.x0
    }

    fn check_on_grid(&self, mesh: &Mesh) -> Result<()> {
        let h = mesh.h();
        let on_grid = |v: f64| ((v / h).round() * h - v).abs() < GRID_TOL && (-GRID_TOL..=1.0 + GRID_TOL).contains(&v);
        if !(self.x1 > self.x0) || ![self.y, self.x0, self.x1].into_iter().all(on_grid) {
            return Err(Error::SegmentNotOnGrid(format!(
                "y = {}, x in [{}, {}] with cell size {h}",
                self.y, self.x0, self.x1
            )));
        }
        Ok(())
    }
}

/// Samples along a segment, coordinates normalized by its length.
#[derive(Debug, Clone, PartialEq)]
pub struct LineProfile {
    /// `(x − x0)/L`, strictly increasing in [0, 1].
    pub coords: Vec<f64>,
    pub values: Vec<f64>,
    pub segment: Segment,
}

impl LineProfile {
    /// Physical x of each sample.
    pub fn x(&self) -> impl Iterator<Item = f64> + '_ {
        self.coords.iter().map(|c| self.segment.x0 + c * self.segment.length())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// CSV with header `x_over_L,value`, 17 significant digits.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "x_over_L,value")?;
        for (c, v) in self.coords.iter().zip(&self.values) {
            writeln!(out, "{c:.16e},{v:.16e}")?;
        }
        Ok(())
    }
}

/// One sample per element column crossing the segment: the mean of the
/// cells directly above and below the line (or the one that exists).
pub fn line_profile(mesh: &Mesh, field: &CellField, segment: Segment) -> Result<LineProfile> {
    segment.check_on_grid(mesh)?;
    let h = mesh.h();
    let n_cols = (segment.length() / h).round() as usize;
    let mut sums = vec![0.0; n_cols];
    let mut counts = vec![0usize; n_cols];
    for cell in 0..mesh.n_cells() {
        let c = mesh.cell_center(cell);
        if (c[1] - segment.y).abs() > 0.5 * h + GRID_TOL || (c[1] - segment.y).abs() < 0.25 * h {
            continue;
        }
        let col = (c[0] - segment.x0) / h - 0.5;
        if col < -GRID_TOL || col > n_cols as f64 - 1.0 + GRID_TOL {
            continue;
        }
        let col = col.round() as usize;
        sums[col] += field.values[cell];
        counts[col] += 1;
    }
    if counts.contains(&0) {
        return Err(Error::SegmentNotOnGrid(format!(
            "no cells adjacent to y = {} along the segment",
            segment.y
        )));
    }
    Ok(LineProfile {
        coords: (0..n_cols).map(|k| (k as f64 + 0.5) * h / segment.length()).collect(),
        values: sums.iter().zip(&counts).map(|(s, &n)| s / n as f64).collect(),
        segment,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FractureMode {
    /// Opening, from the normal stress across the line.
    I,
    /// Sliding, from the shear stress along the line.
    II,
}

impl FractureMode {
    /// Stress component driving this mode.
    pub fn stress(&self) -> Quantity {
        match self {
            FractureMode::I => Quantity::T22,
            FractureMode::II => Quantity::T21,
        }
    }
}

/// `K(r) = sqrt(2π r) T(r)` with `r = tip_x − x`, from a profile of the
/// mode's stress component.
pub fn sif_profile(stress: &LineProfile, tip_x: f64) -> LineProfile {
    let values = stress
        .x()
        .zip(&stress.values)
        .map(|(x, t)| (2.0 * std::f64::consts::PI * (tip_x - x)).sqrt() * t)
        .collect();
    LineProfile {
        coords: stress.coords.clone(),
        values,
        segment: stress.segment,
    }
}

/// `(max, min)` over cells.
pub fn field_extrema(field: &CellField) -> (f64, f64) {
    field
        .values
        .iter()
        .fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), &v| (hi.max(v), lo.min(v)))
}

/// Nodal displacement component along the segment; split node pairs on a
/// crack are averaged.
pub fn displacement_profile(
    space: &FeSpace,
    u: &NodalField,
    segment: Segment,
    component: usize,
) -> Result<LineProfile> {
    let mesh = space.mesh();
    segment.check_on_grid(mesh)?;
    let h = mesh.h();
    let n = (segment.length() / h).round() as usize + 1;
    let mut sums = vec![0.0; n];
    let mut counts = vec![0usize; n];
    for (node, p) in mesh.nodes().iter().enumerate() {
        if (p[1] - segment.y).abs() > GRID_TOL {
            continue;
        }
        let k = (p[0] - segment.x0) / h;
        if k < -GRID_TOL || k > (n - 1) as f64 + GRID_TOL {
            continue;
        }
        let k = k.round() as usize;
        sums[k] += u.node(node)[component];
        counts[k] += 1;
    }
    Ok(LineProfile {
        coords: (0..n).map(|k| k as f64 / (n - 1) as f64).collect(),
        values: sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect(),
        segment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::SymTensor2;
    use crate::fespace::interpolate;
    use crate::mesh::CrackSpec;

    fn params(beta: f64) -> MaterialParams {
        MaterialParams::new(100e6, 0.15, beta).unwrap()
    }

    #[test]
    fn zero_field_averages() {
        let space = FeSpace::new(Mesh::unit_square(2).unwrap());
        let p = params(200.0);
        let fields = cell_averages(&space, &NodalField::zeros(&space), &p, &Quantity::ALL).unwrap();
        for f in fields {
            let expect = match f.quantity {
                Quantity::BulkModulus => p.c2() + p.c1() / 3.0,
                Quantity::DensityRatio => 1.0,
                _ => 0.0,
            };
            assert!(f.values.iter().all(|&v| (v - expect).abs() <= 1e-15 * expect.abs()), "{}", f.quantity);
        }
    }

    #[test]
    fn homogeneous_state_gives_uniform_cells() {
        let space = FeSpace::new(Mesh::unit_square(3).unwrap());
        let p = params(-200.0);
        let eps = p.invert_stress(&SymTensor2::new(0.0, 1e4, 0.0)).unwrap();
        let u = interpolate(&space, |x| [eps.xx * x[0], eps.yy * x[1]]);
        let t22 = cell_average(&space, &u, &p, Quantity::T22).unwrap();
        for v in &t22.values {
            assert!((v - 1e4).abs() < 1e-8);
        }
        let t11 = cell_average(&space, &u, &p, Quantity::T11).unwrap();
        assert!(t11.values.iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn linear_field_strain() {
        let space = FeSpace::new(Mesh::unit_square(2).unwrap());
        let u = interpolate(&space, |x| [x[0], 0.0]);
        let e = cell_average(&space, &u, &params(0.0), Quantity::Eps11).unwrap();
        assert!(e.values.iter().all(|v| (v - 1.0).abs() < 1e-13));
    }

    #[test]
    fn averaged_stress_is_linear_map_of_averaged_strain() {
        let space = FeSpace::new(Mesh::unit_square(2).unwrap());
        let u = interpolate(&space, |x| [1e-3 * x[0] * x[1], -2e-3 * x[0] * x[0]]);
        let p = params(0.0);
        let f = cell_averages(&space, &u, &p, &Quantity::ALL).unwrap();
        for c in 0..space.mesh().n_cells() {
            let eps = SymTensor2::new(f[3].values[c], f[4].values[c], f[5].values[c]);
            let t = p.elasticity_apply(&eps);
            assert!((t.xx - f[0].values[c]).abs() <= 1e-9);
            assert!((t.yy - f[1].values[c]).abs() <= 1e-9);
            assert!((t.xy - f[2].values[c]).abs() <= 1e-9);
        }
    }

    #[test]
    fn uniform_field_profile() {
        let mesh = Mesh::unit_square(7).unwrap();
        let field = CellField {
            quantity: Quantity::T22,
            values: vec![3.5; mesh.n_cells()],
        };
        let prof = line_profile(&mesh, &field, Segment::new(0.5, 0.0, 0.5)).unwrap();
        assert_eq!(prof.len(), 64);
        assert!(prof.values.iter().all(|&v| v == 3.5));
        assert_eq!(prof.coords[0], 1.0 / 128.0);
        assert!(prof.coords.windows(2).all(|w| w[1] > w[0]));
        assert!(*prof.coords.last().unwrap() < 1.0);
    }

    #[test]
    fn antisymmetric_field_profile_vanishes() {
        let mesh = Mesh::unit_square(3).unwrap();
        let values = (0..mesh.n_cells())
            .map(|c| mesh.cell_center(c)[1] - 0.5)
            .collect();
        let field = CellField {
            quantity: Quantity::T21,
            values,
        };
        let prof = line_profile(&mesh, &field, Segment::new(0.5, 0.0, 1.0)).unwrap();
        assert!(prof.values.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn off_grid_segment() {
        let mesh = Mesh::unit_square(2).unwrap();
        let field = CellField {
            quantity: Quantity::T22,
            values: vec![0.0; mesh.n_cells()],
        };
        assert!(matches!(
            line_profile(&mesh, &field, Segment::new(0.3, 0.0, 0.5)),
            Err(Error::SegmentNotOnGrid(_))
        ));
        assert!(line_profile(&mesh, &field, Segment::new(0.5, 0.5, 0.5)).is_err());
        let space = FeSpace::new(mesh);
        assert!(displacement_profile(&space, &NodalField::zeros(&space), Segment::new(0.5, 0.1, 0.5), 0).is_err());
    }

    #[test]
    fn sif_of_constant_and_singular_stress() {
        let seg = Segment::new(0.5, 0.0, 0.5);
        let coords: Vec<f64> = (0..8).map(|k| (k as f64 + 0.5) / 8.0).collect();
        let stress = LineProfile {
            coords: coords.clone(),
            values: vec![2.0; 8],
            segment: seg,
        };
        let k = sif_profile(&stress, 0.5);
        for (x, v) in stress.x().zip(&k.values) {
            let r: f64 = 0.5 - x;
            assert!((v - 2.0 * (2.0 * std::f64::consts::PI * r).sqrt()).abs() < 1e-14);
        }
        let singular = LineProfile {
            values: stress.x().map(|x| 3.0 / (0.5 - x).sqrt()).collect(),
            coords,
            segment: seg,
        };
        let k = sif_profile(&singular, 0.5);
        let expect = 3.0 * (2.0 * std::f64::consts::PI).sqrt();
        assert!(k.values.iter().all(|v| (v - expect).abs() < 1e-12));
        // homogeneous of degree one
        let scaled = LineProfile {
            values: stress.values.iter().map(|v| -4.0 * v).collect(),
            ..stress.clone()
        };
        for (a, b) in sif_profile(&scaled, 0.5).values.iter().zip(&sif_profile(&stress, 0.5).values) {
            assert!((a + 4.0 * b).abs() < 1e-12);
        }
    }

    #[test]
    fn extrema() {
        let field = CellField {
            quantity: Quantity::T22,
            values: vec![1.5; 7],
        };
        assert_eq!(field_extrema(&field), (1.5, 1.5));
        let field = CellField {
            quantity: Quantity::T22,
            values: vec![1.0, -2.0, 5.0],
        };
        assert_eq!(field_extrema(&field), (5.0, -2.0));
    }

    #[test]
    fn displacement_profiles() {
        let space = FeSpace::new(Mesh::unit_square(3).unwrap());
        let seg = Segment::new(0.5, 0.0, 1.0);
        let zero = displacement_profile(&space, &NodalField::zeros(&space), seg, 1).unwrap();
        assert_eq!(zero.len(), 9);
        assert!(zero.values.iter().all(|&v| v == 0.0));
        let u = interpolate(&space, |x| x);
        let prof = displacement_profile(&space, &u, seg, 0).unwrap();
        for (c, v) in prof.coords.iter().zip(&prof.values) {
            assert!((c - v).abs() < 1e-15);
        }
        assert_eq!((prof.coords[0], prof.coords[8]), (0.0, 1.0));
    }

    #[test]
    fn displacement_profile_averages_crack_faces() {
        let mesh = Mesh::unit_square(2).unwrap().with_edge_crack(CrackSpec::right_edge()).unwrap();
        let space = FeSpace::new(mesh);
        let mut u = NodalField::zeros(&space);
        for (node, p) in space.mesh().nodes().to_vec().iter().enumerate() {
            if (p[1] - 0.5).abs() < 1e-12 && p[0] > 0.6 {
                let above = space.mesh().find_node(*p).unwrap() == node;
                u.as_mut_slice()[2 * node + 1] = if above { 1.0 } else { 3.0 };
            }
        }
        let prof = displacement_profile(&space, &u, Segment::new(0.5, 0.0, 1.0), 1).unwrap();
        assert_eq!(prof.values, vec![0.0, 0.0, 0.0, 2.0, 2.0]);
    }

    #[test]
    fn consistency_of_bulk_modulus_and_density() {
        let space = FeSpace::new(Mesh::unit_square(2).unwrap());
        let u = interpolate(&space, |x| [2e-4 * x[0], 1e-4 * x[1]]);
        let p = params(200.0);
        let f = cell_averages(&space, &u, &p, &[Quantity::BulkModulus, Quantity::TraceStrain, Quantity::DensityRatio]).unwrap();
        let k0 = p.c2() + p.c1() / 3.0;
        for c in 0..space.mesh().n_cells() {
            assert!((f[0].values[c] * (1.0 + 200.0 * f[1].values[c]) - k0).abs() <= 1e-12 * k0);
            assert!((f[2].values[c] - 1.0 / (1.0 + f[1].values[c])).abs() <= 1e-14);
        }
    }

    #[test]
    fn csv_output() {
        let prof = LineProfile {
            coords: vec![0.25, 0.75],
            values: vec![1.0, -0.1],
            segment: Segment::new(0.5, 0.0, 1.0),
        };
        let mut buf = Vec::new();
        prof.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "x_over_L,value\n2.5000000000000000e-1,1.0000000000000000e0\n7.5000000000000000e-1,-1.0000000000000001e-1\n"
        );
    }
}
