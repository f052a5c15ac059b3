//! Resonant triads: the divisor d̃, the curve 𝒞, its μ-tube and the χ switches.

use crate::dispersion::{omega, omega_sq};
use crate::error::{Error, Result};
use crate::model::IceParams;

/// d̃(k₁,k₃) = k₁k₃(k₁+k₃)²(3𝒫 − 5𝒟(k₁²+k₁k₃+k₃²))² − 4(g−𝒫k₁²+𝒟k₁⁴)(g−𝒫k₃²+𝒟k₃⁴).
pub fn d_tilde(k1: f64, k3: f64, p: &IceParams) -> f64 {
    let s = k1 + k3;
    let b = 3.0 * p.compression - 5.0 * p.bending * (k1 * k1 + k1 * k3 + k3 * k3);
    k1 * k3 * s * s * b * b - 4.0 * reduced_stiffness(k1, p) * reduced_stiffness(k3, p)
}

/// g − 𝒫k² + 𝒟k⁴, i.e. ω²/|k|.
fn reduced_stiffness(k: f64, p: &IceParams) -> f64 {
    let k2 = k * k;
    p.g - p.compression * k2 + p.bending * k2 * k2
}

/// Scale used to judge how close d̃ is to zero.
pub fn d_tilde_scale(k1: f64, k3: f64, p: &IceParams) -> f64 {
    (4.0 * reduced_stiffness(k1, p) * reduced_stiffness(k3, p)).abs().max(1.0)
}

/// d₁₂₃ = (ω₁+ω₂+ω₃)(ω₁+ω₂−ω₃)(ω₁−ω₂+ω₃)(ω₁−ω₂−ω₃).
pub fn full_mismatch(k1: f64, k2: f64, k3: f64, p: &IceParams) -> Result<f64> {
    let w = |k: f64| omega(k, p).ok_or(Error::Evanescent { k });
    let (w1, w2, w3) = (w(k1)?, w(k2)?, w(k3)?);
    Ok((w1 + w2 + w3) * (w1 + w2 - w3) * (w1 - w2 + w3) * (w1 - w2 - w3))
}

/// Sampled resonance curve 𝒞⁺ together with the tube width and relaxed tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceAtlas {
    pub params: IceParams,
    /// Points (k₁, k₃) on 𝒞⁺, k₁ increasing, k₃ decreasing.
    pub curve: Vec<(f64, f64)>,
    pub mu: f64,
    pub delta: f64,
}

pub const DEFAULT_DELTA: f64 = 1e-6;
pub const DEFAULT_SAMPLES: usize = 512;
pub const DEFAULT_K1_RANGE: (f64, f64) = (1e-3, 10.0);

/// Root of d̃(k₁,·) by bisection inside a sign-changing bracket.
fn bisect_k3(k1: f64, mut lo: f64, mut hi: f64, p: &IceParams) -> Option<f64> {
    let f = |k3: f64| d_tilde(k1, k3, p);
    let mut grow = 0;
    while f(lo) >= 0.0 {
        lo *= 0.5;
        grow += 1;
        if grow > 200 || lo == 0.0 {
            return None;
        }
    }
    grow = 0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
        grow += 1;
        if grow > 200 || !hi.is_finite() {
            return None;
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(if f(lo).abs() <= f(hi).abs() { lo } else { hi })
}

/// Sample 𝒞⁺ on a log-spaced k₁ grid.
pub fn build_curve(p: IceParams, k1_lo: f64, k1_hi: f64, n: usize, mu: f64, delta: f64) -> Result<ResonanceAtlas> {
    if !(k1_lo > 0.0 && k1_lo < k1_hi) {
        return Err(Error::InvalidParameter(format!("need 0 < k1_lo < k1_hi, got [{k1_lo}, {k1_hi}]")));
    }
    if n < 16 {
        return Err(Error::InvalidParameter(format!("need at least 16 curve samples, got {n}")));
    }
    if !(mu > 0.0 && delta > 0.0) {
        return Err(Error::InvalidParameter("mu and delta must be positive".into()));
    }
    p.require_admissible()?;
    let ratio = (k1_hi / k1_lo).ln() / (n - 1) as f64;
    let mut curve = Vec::with_capacity(n);
    let mut prev: Option<f64> = None;
    for i in 0..n {
        let k1 = k1_lo * (ratio * i as f64).exp();
        let (lo, hi) = match prev {
            None => {
                let asym = (4.0 * p.g / (25.0 * p.bending * k1)).cbrt();
                (0.5 * asym, 2.0 * asym)
            }
            Some(k3) => (0.5 * k3, k3 * (1.0 + 1e-9)),
        };
        let k3 = bisect_k3(k1, lo, hi, &p).ok_or(Error::CurveConstruction { k1 })?;
        if d_tilde(k1, k3, &p).abs() > 1e-10 * d_tilde_scale(k1, k3, &p) {
            return Err(Error::CurveConstruction { k1 });
        }
        if prev.is_some_and(|q| k3 >= q) {
            return Err(Error::CurveConstruction { k1 });
        }
        prev = Some(k3);
        curve.push((k1, k3));
    }
    Ok(ResonanceAtlas { params: p, curve, mu, delta })
}

fn segment_distance(q: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((q.0 - a.0) * dx + (q.1 - a.1) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let (px, py) = (a.0 + t * dx, a.1 + t * dy);
    (q.0 - px).hypot(q.1 - py)
}

impl ResonanceAtlas {
    /// Atlas with the default k₁ range and sampling density.
    pub fn with_defaults(p: IceParams, mu: f64) -> Result<Self> {
        build_curve(p, DEFAULT_K1_RANGE.0, DEFAULT_K1_RANGE.1, DEFAULT_SAMPLES, mu, DEFAULT_DELTA)
    }

    /// Distance from a first-quadrant point to the sampled curve and its mirror image.
    pub fn distance(&self, k1: f64, k3: f64) -> f64 {
        let direct = self.polyline_distance((k1, k3));
        let mirrored = self.polyline_distance((k3, k1));
        direct.min(mirrored)
    }

    fn polyline_distance(&self, q: (f64, f64)) -> f64 {
        self.curve.windows(2).map(|w| segment_distance(q, w[0], w[1])).fold(f64::INFINITY, f64::min)
    }

    /// Curve offset by `side·μ` along its unit normal (the tube boundary).
    pub fn offset_curve(&self, side: f64) -> Vec<(f64, f64)> {
        let c = &self.curve;
        (0..c.len())
            .map(|i| {
                let a = c[i.saturating_sub(1)];
                let b = c[(i + 1).min(c.len() - 1)];
                let (tx, ty) = (b.0 - a.0, b.1 - a.1);
                let norm = tx.hypot(ty);
                let (nx, ny) = (ty / norm, -tx / norm);
                (c[i].0 + side * self.mu * nx, c[i].1 + side * self.mu * ny)
            })
            .collect()
    }
}

/// Indicator of the tube 𝒩_μ: triad closes and (k₁,k₃) lies within μ of 𝒞.
pub fn chi_geometric(k1: f64, k2: f64, k3: f64, atlas: &ResonanceAtlas) -> bool {
    let scale = (k1.abs() + k2.abs() + k3.abs()).max(1.0);
    if (k1 + k2 + k3).abs() > 1e-12 * scale {
        return false;
    }
    if k1 * k3 < 0.0 {
        return false;
    }
    atlas.distance(k1.abs(), k3.abs()) <= atlas.mu
}

/// Discrete switch: triad closes on the ladder and |ω₁ − ω₂ + ω₃| < Δ.
pub fn chi_relaxed(k1: f64, k2: f64, k3: f64, delta: f64, p: &IceParams) -> bool {
    let scale = (k1.abs() + k2.abs() + k3.abs()).max(1.0);
    if (k1 + k2 + k3).abs() > 1e-12 * scale {
        return false;
    }
    match (omega(k1, p), omega(k2, p), omega(k3, p)) {
        (Some(w1), Some(w2), Some(w3)) => (w1 - w2 + w3).abs() < delta,
        _ => false,
    }
}

/// Number of probes used by [`gamma_coefficient`].
pub const GAMMA_PROBES: usize = 16;

/// Mean-flow selector: 1 when the modulational probes (δk, −k₀−δk, k₀),
/// δk = ε·j/16, all sit in the tube, 2 when none do.
pub fn gamma_coefficient(k0: f64, atlas: &ResonanceAtlas, eps: f64) -> Result<u8> {
    if !(omega_sq(k0, &atlas.params) > 0.0) || k0 <= 0.0 {
        return Err(Error::Evanescent { k: k0 });
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("steepness must be positive, got {eps}")));
    }
    let inside = (1..=GAMMA_PROBES)
        .filter(|&j| {
            let dk = eps * j as f64 / GAMMA_PROBES as f64;
            chi_geometric(dk, -k0 - dk, k0, atlas)
        })
        .count();
    match inside {
        0 => Ok(2),
        n if n == GAMMA_PROBES => Ok(1),
        n => Err(Error::AmbiguousGamma { fraction: n as f64 / GAMMA_PROBES as f64 }),
    }
}
