//! Linear theory: ω(k), a(k), phase and group speeds, carrier derivatives, k_min.

use crate::error::{Error, Result};
use crate::model::IceParams;

/// ω²_k = |k|(g − 𝒫k² + 𝒟k⁴).
pub fn omega_sq(k: f64, p: &IceParams) -> f64 {
    let k2 = k * k;
    k.abs() * (p.g - p.compression * k2 + p.bending * k2 * k2)
}

/// ω_k when ω² ≥ 0.
pub fn omega(k: f64, p: &IceParams) -> Option<f64> {
    let w2 = omega_sq(k, p);
    (w2 >= 0.0).then(|| w2.sqrt())
}

/// ω_k, or an evanescent-mode error.
pub fn omega_checked(k: f64, p: &IceParams) -> Result<f64> {
    let w2 = omega_sq(k, p);
    if w2 > 0.0 || (k == 0.0 && w2 == 0.0) {
        Ok(w2.sqrt())
    } else {
        Err(Error::Evanescent { k })
    }
}

/// Linear quantities at one wavenumber. Absent values flag k = 0 or ω² < 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionSample {
    pub k: f64,
    pub omega_sq: f64,
    pub omega: Option<f64>,
    /// a_k = sqrt(ω_k/|k|).
    pub a: Option<f64>,
    /// Phase speed ω/|k|.
    pub c: Option<f64>,
    /// Group speed dω/d|k|.
    pub cg: Option<f64>,
}

pub fn sample(k: f64, p: &IceParams) -> DispersionSample {
    let w2 = omega_sq(k, p);
    let w = (w2 >= 0.0).then(|| w2.sqrt());
    let positive = w2 > 0.0 && k != 0.0;
    let k2 = k * k;
    let c = positive.then(|| w2.sqrt() / k.abs());
    DispersionSample {
        k,
        omega_sq: w2,
        omega: w,
        a: c.map(f64::sqrt),
        c,
        cg: positive.then(|| (p.g - 3.0 * p.compression * k2 + 5.0 * p.bending * k2 * k2) / (2.0 * w2.sqrt())),
    }
}

/// ω and its first three k-derivatives at the carrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarrierDerivatives {
    pub w0: f64,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

/// Analytic derivatives of ω(k) = sqrt(f(k)), f = gk − 𝒫k³ + 𝒟k⁵, for k0 > 0.
pub fn carrier_derivatives(k0: f64, p: &IceParams) -> Result<CarrierDerivatives> {
    if !(k0 > 0.0) {
        return Err(Error::InvalidParameter(format!("carrier must be positive, got {k0}")));
    }
    let (g, pc, d) = (p.g, p.compression, p.bending);
    let k2 = k0 * k0;
    let f = k0 * (g - pc * k2 + d * k2 * k2);
    if !(f > 0.0) {
        return Err(Error::Evanescent { k: k0 });
    }
    let f1 = g - 3.0 * pc * k2 + 5.0 * d * k2 * k2;
    let f2 = -6.0 * pc * k0 + 20.0 * d * k2 * k0;
    let f3 = -6.0 * pc + 60.0 * d * k2;
    let w = f.sqrt();
    let w3p = w * w * w;
    Ok(CarrierDerivatives {
        w0: w,
        w1: f1 / (2.0 * w),
        w2: f2 / (2.0 * w) - f1 * f1 / (4.0 * w3p),
        w3: f3 / (2.0 * w) - 3.0 * f1 * f2 / (4.0 * w3p) + 3.0 * f1 * f1 * f1 / (8.0 * w3p * w * w),
    })
}

/// Wavenumber of minimum phase speed, root of g + 𝒫k² − 3𝒟k⁴ = 0.
pub fn k_min(p: &IceParams) -> f64 {
    let pc = p.compression;
    ((pc + (pc * pc + 12.0 * p.g * p.bending).sqrt()) / (6.0 * p.bending)).sqrt()
}
