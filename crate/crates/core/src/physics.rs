//! Material models: opacity laws, Planck emission, and the implicit
//! nonlinear temperature update.

use crate::error::{Error, Result};

/// Radiation constant, speed of light, and Knudsen number.
///
/// Units follow the benchmark convention: `a` in GJ/(cm^3 keV^4),
/// `c` in cm/ns, temperatures in keV, lengths in cm, times in ns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub a: f64,
    pub c: f64,
    pub epsilon: f64,
}

impl PhysicalConstants {
    pub fn new(a: f64, c: f64, epsilon: f64) -> Self {
        assert!(a > 0.0 && c > 0.0 && epsilon > 0.0);
        PhysicalConstants { a, c, epsilon }
    }

    /// Dimensionless constants with a given Knudsen number.
    pub fn unit(epsilon: f64) -> Self {
        Self::new(1.0, 1.0, epsilon)
    }
}

/// Temperature floor applied inside power-law opacity evaluation. The
/// Marshak problems start at this temperature, where `1/T^3` would
/// otherwise blow up.
pub const OPACITY_TEMPERATURE_FLOOR: f64 = 1e-6;

/// Absorption opacity rule of one material region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OpacityLaw {
    /// Fixed macroscopic cross-section, 1/cm.
    Constant(f64),
    /// `kappa / T^3` in cm^2/g, multiplied by the region density.
    PowerLaw { kappa: f64 },
}

/// Opacity law plus the density that converts cm^2/g into 1/cm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpacityModel {
    pub law: OpacityLaw,
    /// g/cm^3; only used by the power law.
    pub rho: f64,
}

impl OpacityModel {
    pub const fn constant(sigma: f64) -> Self {
        OpacityModel {
            law: OpacityLaw::Constant(sigma),
            rho: 1.0,
        }
    }

    pub const fn power_law(kappa: f64, rho: f64) -> Self {
        OpacityModel {
            law: OpacityLaw::PowerLaw { kappa },
            rho,
        }
    }

    /// Macroscopic absorption opacity at temperature `t` (keV), 1/cm.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(Error::Setup(format!("non-finite temperature {t}")));
        }
        let sigma = match self.law {
            OpacityLaw::Constant(s) => s,
            OpacityLaw::PowerLaw { kappa } => {
                let tf = t.max(OPACITY_TEMPERATURE_FLOOR);
                kappa * self.rho / (tf * tf * tf)
            }
        };
        debug_assert!(sigma >= 0.0);
        Ok(sigma)
    }
}

/// Emitted blackbody energy rate `a c T^4`; angular factors are applied
/// by the callers.
pub fn planck_energy(t: f64, constants: &PhysicalConstants) -> f64 {
    let t2 = t * t;
    constants.a * constants.c * t2 * t2
}

/// Residual tolerance contract of [`solve_temperature_update`].
pub const TEMPERATURE_ROOT_TOL: f64 = 1e-12;

/// Unique positive root of `c1 T + c4 T^4 = r` for `c1, c4 > 0`.
///
/// Safeguarded Newton from the bracket `[0, max(r/c1, (r/c4)^{1/4})]`;
/// the quartic is monotone there so a root is guaranteed. `r = 0`
/// returns zero; `r < 0` means negative available energy and is
/// reported rather than clamped.
pub fn solve_temperature_update(c1: f64, c4: f64, r: f64) -> Result<f64> {
    debug_assert!(c1 > 0.0 && c4 > 0.0);
    if r == 0.0 {
        return Ok(0.0);
    }
    if r < 0.0 {
        return Err(Error::NegativeEnergy { r });
    }
    let mut hi = (r / c1).max((r / c4).powf(0.25));
    let mut lo = 0.0f64;
    // Newton from the upper end of the bracket: f is convex and
    // increasing, so iterates descend monotonically onto the root.
    let f = |t: f64| (c1 * t + c4 * t * t * t * t) - r;
    let mut t = hi;
    for _ in 0..200 {
        let ft = f(t);
        if ft > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let dft = c1 + 4.0 * c4 * t * t * t;
        let mut next = t - ft / dft;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 2.0 * f64::EPSILON * t.abs() {
            t = next;
            break;
        }
        t = next;
    }
    debug_assert!(f(t).abs() <= TEMPERATURE_ROOT_TOL * r.abs().max(1.0));
    Ok(t)
}
