//! Pointwise material law of the density-dependent moduli model.
//!
//! Stress is `T = 𝔼[ε] / (1 + β tr ε)` with the isotropic operator
//! `𝔼[ε] = c̄₁ ε + c̄₂ tr(ε) I`, where `c̄₁ = E/(1+ν)` and
//! `c̄₂ = νE/((1+ν)(1−2ν))`. All tensors are 2×2 and all traces are 2D.
//! With `β = 0` every function reduces to plane-strain linear elasticity.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Lower bound on the density factor `1 + β tr ε`.
pub const SINGULARITY_GUARD: f64 = 1e-8;

/// Displacement gradient, `grad[i][j] = ∂u_i/∂x_j`.
pub type Grad2 = [[f64; 2]; 2];

/// Symmetric 2×2 tensor with the shear component stored once.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymTensor2 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

pub type Strain2 = SymTensor2;
pub type Stress2 = SymTensor2;

impl SymTensor2 {
    pub const ZERO: SymTensor2 = SymTensor2 {
        xx: 0.0,
        yy: 0.0,
        xy: 0.0,
    };

    pub fn new(xx: f64, yy: f64, xy: f64) -> Self {
        SymTensor2 { xx, yy, xy }
    }

    pub fn identity() -> Self {
        SymTensor2::new(1.0, 1.0, 0.0)
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// Full contraction `A : B`.
    pub fn ddot(&self, other: &SymTensor2) -> f64 {
        self.xx * other.xx + self.yy * other.yy + 2.0 * self.xy * other.xy
    }

    /// `A : G` against a general (not necessarily symmetric) 2×2 matrix.
    pub fn ddot_full(&self, g: &Grad2) -> f64 {
        self.xx * g[0][0] + self.yy * g[1][1] + self.xy * (g[0][1] + g[1][0])
    }

    pub fn norm(&self) -> f64 {
        self.ddot(self).sqrt()
    }

    /// `Q A Qᵀ` for a rotation by `angle`.
    pub fn rotated(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        SymTensor2 {
            xx: c * c * self.xx - 2.0 * c * s * self.xy + s * s * self.yy,
            yy: s * s * self.xx + 2.0 * c * s * self.xy + c * c * self.yy,
            xy: c * s * (self.xx - self.yy) + (c * c - s * s) * self.xy,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.yy.is_finite() && self.xy.is_finite()
    }
}

impl Add for SymTensor2 {
    type Output = SymTensor2;
    fn add(self, o: SymTensor2) -> SymTensor2 {
        SymTensor2::new(self.xx + o.xx, self.yy + o.yy, self.xy + o.xy)
    }
}

impl Sub for SymTensor2 {
    type Output = SymTensor2;
    fn sub(self, o: SymTensor2) -> SymTensor2 {
        SymTensor2::new(self.xx - o.xx, self.yy - o.yy, self.xy - o.xy)
    }
}

impl Mul<SymTensor2> for f64 {
    type Output = SymTensor2;
    fn mul(self, t: SymTensor2) -> SymTensor2 {
        SymTensor2::new(self * t.xx, self * t.yy, self * t.xy)
    }
}

/// Symmetric part of a displacement gradient.
pub fn strain(grad: &Grad2) -> Strain2 {
    SymTensor2::new(grad[0][0], grad[1][1], 0.5 * (grad[0][1] + grad[1][0]))
}

/// Density ratio `ρ/ρ₀ = 1/(1 + tr ε)` from linearized mass balance.
pub fn density_ratio(eps: &Strain2) -> Result<f64> {
    let j = 1.0 + eps.trace();
    if j <= 0.0 {
        return Err(Error::NonphysicalCompaction { value: j });
    }
    Ok(1.0 / j)
}

/// Young's modulus, Poisson ratio, the nonlinear parameter β and the
/// derived Lamé-type constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    youngs: f64,
    poisson: f64,
    beta: f64,
    c1: f64,
    c2: f64,
}

impl MaterialParams {
    pub fn new(youngs: f64, poisson: f64, beta: f64) -> Result<Self> {
        if !(youngs > 0.0 && youngs.is_finite()) {
            return Err(Error::InvalidMaterial {
                field: "E",
                reason: format!("must be positive, got {youngs}"),
            });
        }
        if !(poisson > -1.0 && poisson < 0.5) {
            return Err(Error::InvalidMaterial {
                field: "nu",
                reason: format!("must lie in (-1, 0.5), got {poisson}"),
            });
        }
        if !beta.is_finite() {
            return Err(Error::InvalidMaterial {
                field: "beta",
                reason: "must be finite".into(),
            });
        }
        Ok(MaterialParams {
            youngs,
            poisson,
            beta,
            c1: youngs / (1.0 + poisson),
            c2: poisson * youngs / ((1.0 + poisson) * (1.0 - 2.0 * poisson)),
        })
    }

    /// Same E and ν with a different β.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        MaterialParams::new(self.youngs, self.poisson, beta)
    }

    pub fn youngs(&self) -> f64 {
        self.youngs
    }

    pub fn poisson(&self) -> f64 {
        self.poisson
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `c̄₁ = E/(1+ν)` (twice the shear modulus).
    pub fn c1(&self) -> f64 {
        self.c1
    }

    /// `c̄₂ = νE/((1+ν)(1−2ν))` (first Lamé constant).
    pub fn c2(&self) -> f64 {
        self.c2
    }

    /// `1 + β tr ε`, checked against the singularity guard.
    pub fn density_factor(&self, eps: &Strain2) -> Result<f64> {
        let factor = 1.0 + self.beta * eps.trace();
        if factor > SINGULARITY_GUARD {
            Ok(factor)
        } else {
            Err(Error::SingularDensityFactor {
                factor,
                location: None,
            })
        }
    }

    /// The linear isotropic operator `𝔼[ε]`.
    pub fn elasticity_apply(&self, eps: &Strain2) -> Stress2 {
        let lam_tr = self.c2 * eps.trace();
        SymTensor2::new(
            self.c1 * eps.xx + lam_tr,
            self.c1 * eps.yy + lam_tr,
            self.c1 * eps.xy,
        )
    }

    pub fn cauchy_stress(&self, eps: &Strain2) -> Result<Stress2> {
        let d = self.density_factor(eps)?;
        Ok((1.0 / d) * self.elasticity_apply(eps))
    }

    /// Exact algebraic inverse of [`cauchy_stress`](Self::cauchy_stress).
    pub fn invert_stress(&self, stress: &Stress2) -> Result<Strain2> {
        let bulk2 = self.c1 + 2.0 * self.c2;
        let tr_t = stress.trace();
        let denominator = bulk2 - self.beta * tr_t;
        if denominator.abs() <= SINGULARITY_GUARD * bulk2 {
            return Err(Error::SingularInversion { denominator });
        }
        let tr_eps = tr_t / denominator;
        let factor = 1.0 + self.beta * tr_eps;
        let vol = self.c2 * tr_t / (self.c1 * bulk2);
        Ok(SymTensor2::new(
            factor * (stress.xx / self.c1 - vol),
            factor * (stress.yy / self.c1 - vol),
            factor * stress.xy / self.c1,
        ))
    }

    /// Directional derivative of the stress at `eps_n` along a displacement
    /// increment with gradient `grad_delta`.
    pub fn tangent_apply(&self, eps_n: &Strain2, grad_delta: &Grad2) -> Result<Stress2> {
        let d = self.density_factor(eps_n)?;
        let div = grad_delta[0][0] + grad_delta[1][1];
        let linear = self.elasticity_apply(&strain(grad_delta));
        let coupling = self.beta * div / (d * d);
        Ok((1.0 / d) * linear - coupling * self.elasticity_apply(eps_n))
    }

    /// `½ T : ε`.
    pub fn strain_energy_density(&self, eps: &Strain2) -> Result<f64> {
        Ok(0.5 * self.cauchy_stress(eps)?.ddot(eps))
    }

    /// Drained bulk modulus `(c̄₂ + c̄₁/3) / (1 + β tr ε)`.
    pub fn bulk_modulus(&self, eps: &Strain2) -> Result<f64> {
        let d = self.density_factor(eps)?;
        Ok((self.c2 + self.c1 / 3.0) / d)
    }

    /// Strain-dependent Lamé coefficients `(λ, μ)`.
    pub fn lame_nonlinear(&self, eps: &Strain2) -> Result<(f64, f64)> {
        let d = self.density_factor(eps)?;
        Ok((self.c2 / d, 0.5 * self.c1 / d))
    }
}
