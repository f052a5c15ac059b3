//! Linear Benjamin-Feir predictions for the envelope models.

use std::io::Write;

use crate::dispersion::k_min;
use crate::envelope::DystheCoefficients;
use crate::error::{Error, Result};
use crate::model::IceParams;

/// Uniform wavetrain of surface amplitude A₀ perturbed by sidebands at ±λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityQuery {
    pub a0: f64,
    pub k0: f64,
    pub lam: f64,
    pub params: IceParams,
    pub coeffs: DystheCoefficients,
    /// ε = k₀A₀.
    pub eps: f64,
    /// B₀ = A₀ sqrt(ω₀/(2k₀)).
    pub b0: f64,
}

impl StabilityQuery {
    pub fn new(a0: f64, k0: f64, lam: f64, params: IceParams, coeffs: DystheCoefficients) -> Result<Self> {
        if !(a0 >= 0.0 && k0 > 0.0) {
            return Err(Error::InvalidParameter(format!("need a0 >= 0 and k0 > 0, got {a0}, {k0}")));
        }
        let w0 = coeffs.derivs.w0;
        Ok(Self { a0, k0, lam, params, coeffs, eps: k0 * a0, b0: envelope_amplitude(a0, k0, w0) })
    }

    pub fn with_lambda(mut self, lam: f64) -> Self {
        self.lam = lam;
        self
    }
}

/// B₀ = A₀ sqrt(ω₀/(2k₀)).
pub fn envelope_amplitude(a0: f64, k0: f64, w0: f64) -> f64 {
    a0 * (w0 / (2.0 * k0)).sqrt()
}

/// The bracket 2B₀²(α − m(γk₀²/2)|λ|) + (ω₀″/2)λ² with mean-flow weight `m`.
fn bracket(q: &StabilityQuery, m: f64) -> f64 {
    let c = &q.coeffs;
    let w2 = c.derivs.w2;
    2.0 * q.b0 * q.b0 * (c.alpha - m * c.gamma * q.k0 * q.k0 / 2.0 * q.lam.abs()) + w2 / 2.0 * q.lam * q.lam
}

/// α₁ = −(ω₀″/2)λ²[2B₀²(α − ε(γk₀²/2)|λ|) + (ω₀″/2)λ²].
pub fn alpha1(q: &StabilityQuery) -> f64 {
    -(q.coeffs.derivs.w2 / 2.0) * q.lam * q.lam * bracket(q, q.eps)
}

/// Normalized growth sqrt(max(α₁, 0))/ω₀.
pub fn growth_rate(q: &StabilityQuery) -> f64 {
    alpha1(q).max(0.0).sqrt() / q.coeffs.derivs.w0
}

/// Normalized growth of the envelope equation written in surface units.
///
/// Mapping the long-scale variables (λ/ε, B₀/ε, slow time) back to the fast
/// scales removes the ε in front of the mean-flow term; this is the rate that
/// a simulation of the envelope equation actually exhibits.
pub fn simulated_growth_rate(q: &StabilityQuery) -> f64 {
    let a1 = -(q.coeffs.derivs.w2 / 2.0) * q.lam * q.lam * bracket(q, 1.0);
    a1.max(0.0).sqrt() / q.coeffs.derivs.w0
}

/// Benjamin-Feir index −ω₀″α at carrier `k0` (no resonant switches active).
pub fn bfi(k0: f64, params: &IceParams) -> Result<f64> {
    Ok(DystheCoefficients::assemble(k0, params, false, 2.0)?.bfi())
}

/// Growth rate over a λ grid; λ is taken by magnitude.
pub fn scan(base: &StabilityQuery, lam_grid: &[f64]) -> Vec<(f64, f64)> {
    lam_grid.iter().map(|&l| (l.abs(), growth_rate(&base.with_lambda(l.abs())))).collect()
}

pub fn write_scan_csv<W: Write>(w: W, rows: &[(f64, f64)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["lambda", "growth"])?;
    for (l, g) in rows {
        out.write_record([l.to_string(), g.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// (𝒫, k_min, BFI) samples on an even 𝒫 grid.
pub fn bfi_curve(pmin: f64, pmax: f64, samples: usize) -> Result<Vec<(f64, f64, f64)>> {
    if samples < 2 || !(pmax > pmin) {
        return Err(Error::InvalidParameter("bfi curve needs pmax > pmin and at least two samples".into()));
    }
    (0..samples)
        .map(|i| {
            let pc = pmin + (pmax - pmin) * i as f64 / (samples - 1) as f64;
            let p = IceParams::with_compression(pc)?;
            let k = k_min(&p);
            Ok((pc, k, bfi(k, &p)?))
        })
        .collect()
}

pub fn write_bfi_csv<W: Write>(w: W, rows: &[(f64, f64, f64)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["P", "k_min", "bfi"])?;
    for (p, k, b) in rows {
        out.write_record([p.to_string(), k.to_string(), b.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Compression at which BFI(k_min(𝒫)) changes sign inside [lo, hi], by bisection.
pub fn bfi_sign_change(lo: f64, hi: f64) -> Result<f64> {
    let f = |pc: f64| -> Result<f64> {
        let p = IceParams::with_compression(pc)?;
        bfi(k_min(&p), &p)
    };
    let (mut a, mut b) = (lo, hi);
    let fa = f(a)?;
    if fa * f(b)? > 0.0 {
        return Err(Error::InvalidParameter(format!("no sign change of BFI in [{lo}, {hi}]")));
    }
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if f(m)? * fa > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}
