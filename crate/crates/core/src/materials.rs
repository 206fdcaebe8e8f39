//! Temperature-dependent density and the enthalpy change of variables.
//!
//! The density is a continuous, nonincreasing, piecewise-linear table in
//! temperature with constant extensions. Its integral
//! `E(θ) = ∫₀^θ c_v ρ(s) ds` is piecewise quadratic, so both `E` and its
//! inverse `β = E⁻¹` are evaluated in closed form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MaterialError {
    #[error("density table is empty")]
    Empty,
    #[error("density breakpoints must be strictly increasing in temperature (index {0})")]
    NotIncreasing(usize),
    #[error("density must be strictly positive and finite (index {0})")]
    NonPositive(usize),
    #[error("density must be nonincreasing in temperature (index {0})")]
    Increasing(usize),
    #[error("material constant `{0}` must be positive and finite")]
    Constant(&'static str),
}

/// Scalar material constants. All default to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialConstants {
    /// Specific heat at constant volume.
    pub cv: f64,
    /// Heat conductivity λ.
    pub conductivity: f64,
    /// Kinematic viscosity ν.
    pub viscosity: f64,
    /// Wall heat transfer coefficient α.
    pub heat_transfer: f64,
    /// Reference density ϱ₀ used outside the buoyancy and energy terms.
    pub reference_density: f64,
}

impl Default for MaterialConstants {
    fn default() -> Self {
        Self {
            cv: 1.0,
            conductivity: 1.0,
            viscosity: 1.0,
            heat_transfer: 1.0,
            reference_density: 1.0,
        }
    }
}

impl MaterialConstants {
    fn validate(&self) -> Result<(), MaterialError> {
        let check = |v: f64, name| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(MaterialError::Constant(name))
            }
        };
        check(self.cv, "cv")?;
        check(self.conductivity, "conductivity")?;
        check(self.viscosity, "viscosity")?;
        check(self.heat_transfer, "heat_transfer")?;
        check(self.reference_density, "reference_density")
    }
}

/// Piecewise-linear density ρ(θ) with constant extensions outside the table.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityLaw {
    breakpoints: Vec<(f64, f64)>,
    constants: MaterialConstants,
}

impl DensityLaw {
    pub fn new(
        breakpoints: Vec<(f64, f64)>,
        constants: MaterialConstants,
    ) -> Result<Self, MaterialError> {
        if breakpoints.is_empty() {
            return Err(MaterialError::Empty);
        }
        for (i, &(theta, rho)) in breakpoints.iter().enumerate() {
            if !(rho.is_finite() && rho > 0.0) || !theta.is_finite() {
                return Err(MaterialError::NonPositive(i));
            }
            if i > 0 {
                let (prev_theta, prev_rho) = breakpoints[i - 1];
                if theta <= prev_theta {
                    return Err(MaterialError::NotIncreasing(i));
                }
                if rho > prev_rho {
                    return Err(MaterialError::Increasing(i));
                }
            }
        }
        constants.validate()?;
        Ok(Self {
            breakpoints,
            constants,
        })
    }

    pub fn constant(rho: f64, constants: MaterialConstants) -> Result<Self, MaterialError> {
        Self::new(vec![(0.0, rho)], constants)
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn constants(&self) -> &MaterialConstants {
        &self.constants
    }

    /// Upper density bound ρ₂ (value of the left extension).
    pub fn rho_max(&self) -> f64 {
        self.breakpoints[0].1
    }

    /// Lower density bound ρ₁ (value of the right extension).
    pub fn rho_min(&self) -> f64 {
        self.breakpoints[self.breakpoints.len() - 1].1
    }

    pub fn density(&self, theta: f64) -> f64 {
        let bp = &self.breakpoints;
        if theta <= bp[0].0 {
            return bp[0].1;
        }
        let last = bp[bp.len() - 1];
        if theta >= last.0 {
            return last.1;
        }
        // first index with breakpoint temperature > theta
        let k = bp.partition_point(|&(t, _)| t <= theta);
        let (t0, r0) = bp[k - 1];
        let (t1, r1) = bp[k];
        r0 + (r1 - r0) * (theta - t0) / (t1 - t0)
    }
}

/// One quadratic piece of E, parameterized from the point of the piece
/// closest to θ = 0.
#[derive(Debug, Clone, Copy)]
struct Piece {
    theta_lo: f64,
    theta_hi: f64,
    e_hi: f64,
    anchor_theta: f64,
    anchor_e: f64,
    anchor_rho: f64,
    slope: f64,
}

/// The enthalpy map E, its inverse β, and the derived coefficients
/// ϱ(e) = ρ(β(e)) and κ(e) = λ / (c_v ϱ(e)).
#[derive(Debug, Clone)]
pub struct EnthalpyMap {
    law: DensityLaw,
    pieces: Vec<Piece>,
}

impl EnthalpyMap {
    pub fn new(law: DensityLaw) -> Self {
        let cv = law.constants.cv;
        let bp = law.breakpoints.clone();
        let n = bp.len();

        // E at every knot, integrated outward from zero so values near the
        // origin carry no cancellation error.
        let mut e_knot = vec![0.0; n];
        let first_pos = bp.partition_point(|&(t, _)| t < 0.0);
        let (mut prev_t, mut prev_e) = (0.0, 0.0);
        for k in first_pos..n {
            let (t, r) = bp[k];
            let rho_prev = law.density(prev_t);
            prev_e += cv * 0.5 * (rho_prev + r) * (t - prev_t);
            prev_t = t;
            e_knot[k] = prev_e;
        }
        let (mut prev_t, mut prev_e) = (0.0, 0.0);
        for k in (0..first_pos).rev() {
            let (t, r) = bp[k];
            let rho_prev = law.density(prev_t);
            prev_e += cv * 0.5 * (rho_prev + r) * (t - prev_t);
            prev_t = t;
            e_knot[k] = prev_e;
        }

        let mut pieces = Vec::with_capacity(n + 1);
        let mut push = |lo: f64, hi: f64, e_lo: f64, e_hi: f64, slope: f64| {
            let anchor_theta = 0.0f64.clamp(lo, hi);
            let anchor_e = if anchor_theta == 0.0 {
                0.0
            } else if anchor_theta == lo {
                e_lo
            } else {
                e_hi
            };
            pieces.push(Piece {
                theta_lo: lo,
                theta_hi: hi,
                e_hi,
                anchor_theta,
                anchor_e,
                anchor_rho: law.density(anchor_theta),
                slope,
            });
        };
        push(f64::NEG_INFINITY, bp[0].0, f64::NEG_INFINITY, e_knot[0], 0.0);
        for k in 0..n - 1 {
            let slope = (bp[k + 1].1 - bp[k].1) / (bp[k + 1].0 - bp[k].0);
            push(bp[k].0, bp[k + 1].0, e_knot[k], e_knot[k + 1], slope);
        }
        push(bp[n - 1].0, f64::INFINITY, e_knot[n - 1], f64::INFINITY, 0.0);

        Self { law, pieces }
    }

    pub fn law(&self) -> &DensityLaw {
        &self.law
    }

    pub fn constants(&self) -> &MaterialConstants {
        &self.law.constants
    }

    /// E(θ) = ∫₀^θ c_v ρ(s) ds.
    pub fn enthalpy(&self, theta: f64) -> f64 {
        let idx = self
            .pieces
            .partition_point(|p| p.theta_hi < theta)
            .min(self.pieces.len() - 1);
        let p = &self.pieces[idx];
        let d = theta - p.anchor_theta;
        p.anchor_e + self.law.constants.cv * d * (p.anchor_rho + 0.5 * p.slope * d)
    }

    /// β(e) = E⁻¹(e), by closed-form inversion of the local quadratic.
    pub fn inverse_enthalpy(&self, e: f64) -> f64 {
        let idx = self
            .pieces
            .partition_point(|p| p.e_hi < e)
            .min(self.pieces.len() - 1);
        let p = &self.pieces[idx];
        let cv = self.law.constants.cv;
        let r = e - p.anchor_e;
        let disc = (p.anchor_rho * p.anchor_rho + 2.0 * p.slope * r / cv).max(0.0);
        let d = 2.0 * r / cv / (p.anchor_rho + disc.sqrt());
        (p.anchor_theta + d).clamp(p.theta_lo, p.theta_hi)
    }

    /// Derivative β'(e) = 1 / (c_v ϱ(e)); lies in (0, C_β].
    pub fn inverse_enthalpy_derivative(&self, e: f64) -> f64 {
        1.0 / (self.law.constants.cv * self.density_of_enthalpy(e))
    }

    /// ϱ(e) = ρ(β(e)).
    pub fn density_of_enthalpy(&self, e: f64) -> f64 {
        self.law.density(self.inverse_enthalpy(e))
    }

    /// κ(e) = λ / (c_v ρ(β(e))).
    pub fn kappa(&self, e: f64) -> f64 {
        let c = &self.law.constants;
        c.conductivity / (c.cv * self.density_of_enthalpy(e))
    }

    /// (κ₁, κ₂) = (λ/(c_v ρ₂), λ/(c_v ρ₁)).
    pub fn kappa_bounds(&self) -> (f64, f64) {
        let c = &self.law.constants;
        (
            c.conductivity / (c.cv * self.law.rho_max()),
            c.conductivity / (c.cv * self.law.rho_min()),
        )
    }

    /// Lipschitz constant C_β = 1/(c_v ρ₁) of β.
    pub fn lipschitz_bound(&self) -> f64 {
        1.0 / (self.law.constants.cv * self.law.rho_min())
    }

    pub fn rho_max(&self) -> f64 {
        self.law.rho_max()
    }

    pub fn rho_min(&self) -> f64 {
        self.law.rho_min()
    }
}
