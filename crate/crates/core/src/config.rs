//! Run configuration: canned example presets and a small `key = value`
//! file format with `[mesh]`, `[material]`, `[solver]`, `[bc]` and
//! `[output]` sections.
//!
//! ```text
//! example = 3          # optional, must precede any section
//! [mesh]
//! refinements = 6
//! [material]
//! E = 100 MPa
//! beta = -200, 0, 200
//! [bc]
//! fu = 0.01 MPa
//! bottom = hinge
//! top = traction fu, 0
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::assembly::BoundaryConditions;
use crate::constitutive::MaterialParams;
use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, CrackSpec, Mesh, MAX_REFINEMENTS};
use crate::postproc::{FractureMode, Quantity, Segment};
use crate::solver::SolverConfig;

/// The five canned boundary-value problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExampleId {
    /// Uncracked, normal traction on top, roller bottom.
    Ex1a,
    /// Uncracked, shear traction on top, clamped bottom.
    Ex1b,
    /// Edge crack, normal traction, roller bottom.
    Ex2,
    /// Edge crack, shear traction, clamped bottom.
    Ex3,
    /// Edge crack, normal plus shear traction, clamped bottom.
    Ex4,
}

impl ExampleId {
    pub const ALL: [ExampleId; 5] = [
        ExampleId::Ex1a,
        ExampleId::Ex1b,
        ExampleId::Ex2,
        ExampleId::Ex3,
        ExampleId::Ex4,
    ];
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExampleId::Ex1a => "1a",
            ExampleId::Ex1b => "1b",
            ExampleId::Ex2 => "2",
            ExampleId::Ex3 => "3",
            ExampleId::Ex4 => "4",
        })
    }
}

impl FromStr for ExampleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExampleId::ALL
            .into_iter()
            .find(|id| id.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Validation {
                field: "example".into(),
                message: format!("unknown example `{}` (expected 1a, 1b, 2, 3 or 4)", s.trim()),
            })
    }
}

/// A traction component, either absolute (Pa) or a multiple of `fu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Load {
    Pa(f64),
    Fu(f64),
}

impl Load {
    pub fn resolve(&self, fu: f64) -> f64 {
        match *self {
            Load::Pa(v) => v,
            Load::Fu(k) => k * fu,
        }
    }
}

/// Boundary condition on one tagged boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BcSpec {
    /// `u_y = 0`.
    Roller,
    /// `u = 0`.
    Hinge,
    /// Traction free.
    Free,
    Traction([Load; 2]),
}

/// Line profiles written per run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Sif(FractureMode),
    Cell(Quantity),
    Displacement(usize),
}

impl ProfileKind {
    pub fn name(&self) -> String {
        match self {
            ProfileKind::Sif(FractureMode::I) => "K_I".into(),
            ProfileKind::Sif(FractureMode::II) => "K_II".into(),
            ProfileKind::Cell(q) => q.name().into(),
            ProfileKind::Displacement(0) => "ux".into(),
            ProfileKind::Displacement(_) => "uy".into(),
        }
    }
}

impl FromStr for ProfileKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            k if k.eq_ignore_ascii_case("k_i") => Ok(ProfileKind::Sif(FractureMode::I)),
            k if k.eq_ignore_ascii_case("k_ii") => Ok(ProfileKind::Sif(FractureMode::II)),
            "ux" => Ok(ProfileKind::Displacement(0)),
            "uy" => Ok(ProfileKind::Displacement(1)),
            other => other.parse().map(ProfileKind::Cell).map_err(|_| Error::Validation {
                field: "profiles".into(),
                message: format!("unknown profile `{other}`"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub example: Option<ExampleId>,
    pub refinements: u32,
    pub crack: bool,
    pub youngs: f64,
    pub poisson: f64,
    pub betas: Vec<f64>,
    /// Reference traction magnitude, Pa.
    pub fu: f64,
    /// Tags without an entry are traction free.
    pub boundary: BTreeMap<BoundaryTag, BcSpec>,
    /// Extra `u_x = 0` at the node nearest this point.
    pub pin_x: Option<[f64; 2]>,
    pub solver: SolverConfig,
    pub out_dir: PathBuf,
    pub fields: Vec<Quantity>,
    pub profiles: Vec<ProfileKind>,
    pub line: Segment,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::preset(ExampleId::Ex2)
    }
}

impl RunConfig {
    pub fn preset(id: ExampleId) -> Self {
        use BcSpec::*;
        let fu = |x: f64, y: f64| Traction([Load::Fu(x), Load::Fu(y)]);
        let (crack, bottom, top, pin) = match id {
            ExampleId::Ex1a => (false, Roller, fu(0.0, 1.0), true),
            ExampleId::Ex1b => (false, Hinge, fu(1.0, 0.0), false),
            ExampleId::Ex2 => (true, Roller, fu(0.0, 1.0), true),
            ExampleId::Ex3 => (true, Hinge, fu(1.0, 0.0), false),
            ExampleId::Ex4 => (true, Hinge, fu(1.0, 1.0), false),
        };
        let profiles = if crack {
            vec![
                ProfileKind::Sif(FractureMode::I),
                ProfileKind::Sif(FractureMode::II),
                ProfileKind::Cell(Quantity::BulkModulus),
                ProfileKind::Cell(Quantity::TraceStrain),
            ]
        } else {
            vec![
                ProfileKind::Cell(Quantity::BulkModulus),
                ProfileKind::Cell(Quantity::TraceStrain),
                ProfileKind::Displacement(0),
                ProfileKind::Displacement(1),
            ]
        };
        RunConfig {
            example: Some(id),
            refinements: 7,
            crack,
            youngs: 100e6,
            poisson: 0.15,
            betas: vec![-200.0, -50.0, 0.0, 50.0, 200.0],
            fu: 1e4,
            boundary: BTreeMap::from([(BoundaryTag::Bottom, bottom), (BoundaryTag::Top, top)]),
            pin_x: pin.then_some([0.5, 0.0]),
            solver: SolverConfig::default(),
            out_dir: PathBuf::from("out"),
            fields: Quantity::ALL.to_vec(),
            profiles,
            line: Segment::new(0.5, 0.0, if crack { 0.5 } else { 1.0 }),
        }
    }

    pub fn mesh(&self) -> Result<Mesh> {
        let mesh = Mesh::unit_square(self.refinements)?;
        if self.crack {
            mesh.with_edge_crack(CrackSpec::right_edge())
        } else {
            Ok(mesh)
        }
    }

    pub fn material(&self, beta: f64) -> Result<MaterialParams> {
        MaterialParams::new(self.youngs, self.poisson, beta).map_err(|e| match e {
            Error::InvalidMaterial { field, reason } => Error::Validation {
                field: field.into(),
                message: reason,
            },
            other => other,
        })
    }

    pub fn boundary_conditions(&self) -> BoundaryConditions {
        let mut bcs = BoundaryConditions::new();
        for (&tag, spec) in &self.boundary {
            bcs = match spec {
                BcSpec::Roller => bcs.roller(tag),
                BcSpec::Hinge => bcs.hinge(tag),
                BcSpec::Free => bcs,
                BcSpec::Traction(g) => bcs.traction(tag, g.map(|l| l.resolve(self.fu))),
            };
        }
        if let Some(p) = self.pin_x {
            bcs = bcs.pin_x(p);
        }
        bcs
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |field: &str, message: String| {
            Err(Error::Validation {
                field: field.into(),
                message,
            })
        };
        if self.betas.is_empty() {
            return invalid("beta", "at least one value required".into());
        }
        for &beta in &self.betas {
            self.material(beta)?;
        }
        if self.refinements > MAX_REFINEMENTS {
            return invalid("refinements", format!("at most {MAX_REFINEMENTS}"));
        }
        if self.crack && self.refinements < 1 {
            return invalid("refinements", "a crack needs at least one refinement".into());
        }
        if !self.fu.is_finite() {
            return invalid("fu", "must be finite".into());
        }
        if self.boundary.keys().any(|&t| t == BoundaryTag::Crack) && !self.crack {
            return invalid("crack", "crack boundary condition given without a crack".into());
        }
        if !self
            .boundary
            .values()
            .any(|s| matches!(s, BcSpec::Roller | BcSpec::Hinge))
        {
            return invalid("bc", "no Dirichlet boundary given".into());
        }
        if !self.crack && self.profiles.iter().any(|p| matches!(p, ProfileKind::Sif(_))) {
            return invalid("profiles", "stress intensity profiles need a crack".into());
        }
        let beta_set: std::collections::HashSet<String> = self.betas.iter().map(|b| b.to_string()).collect();
        if beta_set.len() != self.betas.len() {
            return invalid("beta", "duplicate values".into());
        }
        self.solver.validate()
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Number with an optional `MPa` or `Pa` suffix, in Pa.
fn parse_number(s: &str, line: usize) -> Result<f64> {
    let s = s.trim();
    let (num, scale) = if let Some(n) = s.strip_suffix("MPa") {
        (n, 1e6)
    } else if let Some(n) = s.strip_suffix("Pa") {
        (n, 1.0)
    } else {
        (s, 1.0)
    };
    num.trim()
        .parse::<f64>()
        .map(|v| v * scale)
        .map_err(|_| parse_err(line, format!("invalid number `{s}`")))
}

fn parse_list(s: &str, line: usize) -> Result<Vec<f64>> {
    s.split(',').map(|v| parse_number(v, line)).collect()
}

fn parse_bool(s: &str, line: usize) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        other => Err(parse_err(line, format!("invalid boolean `{other}`"))),
    }
}

fn parse_int<T: FromStr>(s: &str, line: usize) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| parse_err(line, format!("invalid integer `{}`", s.trim())))
}

fn parse_load(s: &str, line: usize) -> Result<Load> {
    let s = s.trim();
    let (sign, rest) = match s.strip_prefix('-') {
        Some(r) => (-1.0, r.trim()),
        None => (1.0, s.trim_start_matches('+').trim()),
    };
    if rest == "fu" {
        Ok(Load::Fu(sign))
    } else {
        parse_number(s, line).map(Load::Pa)
    }
}

fn parse_bc(s: &str, line: usize) -> Result<BcSpec> {
    let s = s.trim();
    match s {
        "roller" => return Ok(BcSpec::Roller),
        "hinge" => return Ok(BcSpec::Hinge),
        "free" => return Ok(BcSpec::Free),
        _ => {}
    }
    let rest = s
        .strip_prefix("traction")
        .ok_or_else(|| parse_err(line, format!("unknown boundary condition `{s}`")))?;
    let parts: Vec<&str> = rest.split(',').collect();
    if parts.len() != 2 {
        return Err(parse_err(line, "traction needs two components `gx, gy`"));
    }
    Ok(BcSpec::Traction([parse_load(parts[0], line)?, parse_load(parts[1], line)?]))
}

fn parse_point(s: &str, line: usize) -> Result<[f64; 2]> {
    match parse_list(s, line)?[..] {
        [x, y] => Ok([x, y]),
        _ => Err(parse_err(line, "expected `x, y`")),
    }
}

/// Parse a configuration on top of the default (Example 2) preset.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with_base(text, RunConfig::default())
}

/// Parse a configuration, starting from `base`. A leading `example = id`
/// replaces the base with that preset.
pub fn parse_config_with_base(text: &str, base: RunConfig) -> Result<RunConfig> {
    let mut cfg = base;
    let mut section: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line, "unterminated section header"))?
                .trim();
            if !["mesh", "material", "solver", "bc", "output"].contains(&name) {
                return Err(parse_err(line, format!("unknown section `[{name}]`")));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| parse_err(line, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        let unknown = || parse_err(line, format!("unknown key `{key}`"));
        match (section.as_deref(), key) {
            (None, "example") => {
                let id: ExampleId = value.parse().map_err(|e: Error| parse_err(line, e.to_string()))?;
                cfg = RunConfig::preset(id);
            }
            (None, _) => return Err(parse_err(line, format!("key `{key}` outside any section"))),
            (Some("mesh"), "refinements") => cfg.refinements = parse_int(value, line)?,
            (Some("mesh"), "crack") => cfg.crack = parse_bool(value, line)?,
            (Some("material"), "E" | "youngs") => cfg.youngs = parse_number(value, line)?,
            (Some("material"), "nu" | "poisson") => cfg.poisson = parse_number(value, line)?,
            (Some("material"), "beta") => cfg.betas = parse_list(value, line)?,
            (Some("solver"), "tol" | "newton_tol") => cfg.solver.newton_tol = parse_number(value, line)?,
            (Some("solver"), "max_newton") => cfg.solver.max_newton = parse_int(value, line)?,
            (Some("solver"), "max_line_search") => cfg.solver.max_line_search = parse_int(value, line)?,
            (Some("solver"), "line_search_factor") => {
                cfg.solver.line_search_factor = parse_number(value, line)?
            }
            (Some("solver"), "alpha_bar") => cfg.solver.alpha_bar = parse_number(value, line)?,
            (Some("bc"), "fu") => cfg.fu = parse_number(value, line)?,
            (Some("bc"), "pin_x") => {
                cfg.pin_x = if value == "none" {
                    None
                } else {
                    Some(parse_point(value, line)?)
                }
            }
            (Some("bc"), tag) => {
                let tag: BoundaryTag = tag.parse().map_err(|_| unknown())?;
                cfg.boundary.insert(tag, parse_bc(value, line)?);
            }
            (Some("output"), "dir") => cfg.out_dir = PathBuf::from(value),
            (Some("output"), "fields") => {
                cfg.fields = if value == "all" {
                    Quantity::ALL.to_vec()
                } else {
                    value
                        .split(',')
                        .map(|q| q.parse().map_err(|e: Error| parse_err(line, e.to_string())))
                        .collect::<Result<_>>()?
                }
            }
            (Some("output"), "profiles") => {
                cfg.profiles = if value == "none" {
                    Vec::new()
                } else {
                    value
                        .split(',')
                        .map(|q| q.parse().map_err(|e: Error| parse_err(line, e.to_string())))
                        .collect::<Result<_>>()?
                }
            }
            (Some("output"), "line") => match parse_list(value, line)?[..] {
                [y, x0, x1] => cfg.line = Segment::new(y, x0, x1),
                _ => return Err(parse_err(line, "expected `y, x0, x1`")),
            },
            _ => return Err(unknown()),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}
