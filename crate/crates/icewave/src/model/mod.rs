//! Parameters, grids, state containers and unit conversion.

mod config;
mod snapshot;

pub use config::Config;
pub use snapshot::{read_snapshot, write_snapshot, Snapshot};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dimensionless physical constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IceParams {
    pub g: f64,
    /// Flexural rigidity 𝒟.
    pub bending: f64,
    /// Compression 𝒫.
    pub compression: f64,
}

impl Default for IceParams {
    fn default() -> Self {
        Self { g: 1.0, bending: 1.0, compression: 0.0 }
    }
}

impl IceParams {
    pub fn new(g: f64, bending: f64, compression: f64) -> Result<Self> {
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidParameter(format!("g must be positive, got {g}")));
        }
        if !(bending > 0.0 && bending.is_finite()) {
            return Err(Error::InvalidParameter(format!("bending must be positive, got {bending}")));
        }
        if !(compression >= 0.0 && compression.is_finite()) {
            return Err(Error::InvalidParameter(format!("compression must be non-negative, got {compression}")));
        }
        let p = Self { g, bending, compression };
        if !p.is_admissible() {
            log::warn!("compression {compression} >= 2: analysis only, time stepping will refuse");
        }
        Ok(p)
    }

    /// g = 𝒟 = 1 with the given compression.
    pub fn with_compression(compression: f64) -> Result<Self> {
        Self::new(1.0, 1.0, compression)
    }

    /// Whether ω² > 0 for every k ≠ 0, i.e. 𝒫 < 2 in the scaled form.
    pub fn is_admissible(&self) -> bool {
        self.compression * self.compression < 4.0 * self.g * self.bending
    }

    pub fn require_admissible(&self) -> Result<()> {
        if self.is_admissible() {
            Ok(())
        } else {
            Err(Error::Inadmissible(self.compression))
        }
    }
}

/// Characteristic scales returned by [`nondimensionalize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    /// ℓ = (σ/(ρg))^{1/4} in metres.
    pub length: f64,
    /// τ = (σ/(ρg⁵))^{1/8} in seconds.
    pub time: f64,
}

impl Scales {
    /// Gravity recovered from the scales, ℓ/τ².
    pub fn gravity(&self) -> f64 {
        self.length / (self.time * self.time)
    }
}

/// Map physical ice properties to dimensionless parameters.
///
/// `e` Young's modulus (Pa), `h` thickness (m), `nu` Poisson ratio,
/// `rho` water density (kg/m³), `g_phys` gravity (m/s²), `p_phys` compressive stress (Pa).
pub fn nondimensionalize(e: f64, h: f64, nu: f64, rho: f64, g_phys: f64, p_phys: f64) -> Result<(IceParams, Scales)> {
    let positive = [("E", e), ("h", h), ("rho", rho), ("g", g_phys)];
    for (name, v) in positive {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::InvalidParameter(format!("Poisson ratio must lie in (0,1), got {nu}")));
    }
    if !(p_phys >= 0.0 && p_phys.is_finite()) {
        return Err(Error::InvalidParameter(format!("compressive stress must be non-negative, got {p_phys}")));
    }
    let sigma = flexural_rigidity(e, h, nu);
    let compression = p_phys * h / (sigma * rho * g_phys).sqrt();
    let scales = Scales { length: (sigma / (rho * g_phys)).powf(0.25), time: (sigma / (rho * g_phys.powi(5))).powf(0.125) };
    Ok((IceParams::new(1.0, 1.0, compression)?, scales))
}

/// σ = Eh³/(12(1−ν²)).
pub fn flexural_rigidity(e: f64, h: f64, nu: f64) -> f64 {
    e * h.powi(3) / (12.0 * (1.0 - nu * nu))
}

/// Periodic collocation grid and its wavenumber ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralGrid {
    pub length: f64,
    pub count: usize,
    pub dk: f64,
    pub dx: f64,
}

impl SpectralGrid {
    pub fn new(length: f64, count: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter(format!("domain length must be positive, got {length}")));
        }
        if count < 4 || !count.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("point count must be even and >= 4, got {count}")));
        }
        Ok(Self { length, count, dk: 2.0 * std::f64::consts::PI / length, dx: length / count as f64 })
    }

    /// Collocation points `x_j = j·Δx`.
    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|j| j as f64 * self.dx).collect()
    }

    /// Ladder `p = −N/2 .. N/2−1` in ascending order.
    pub fn modes(&self) -> Vec<i64> {
        let h = (self.count / 2) as i64;
        (-h..h).collect()
    }

    pub fn kappa(&self, p: i64) -> f64 {
        p as f64 * self.dk
    }

    /// Ladder index of wavenumber `k` when it sits on the ladder.
    pub fn ladder_index(&self, k: f64) -> Option<i64> {
        let p = k / self.dk;
        let r = p.round();
        ((p - r).abs() < 1e-9 * p.abs().max(1.0) && r.abs() <= (self.count / 2) as f64).then_some(r as i64)
    }
}

/// Convenience constructor matching the CLI vocabulary.
pub fn make_grid(length: f64, count: usize) -> Result<SpectralGrid> {
    SpectralGrid::new(length, count)
}

/// Surface elevation and trace potential at the collocation points.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceState {
    pub eta: Vec<f64>,
    pub xi: Vec<f64>,
    pub time: f64,
}

impl SurfaceState {
    pub fn flat(n: usize) -> Self {
        Self { eta: vec![0.0; n], xi: vec![0.0; n], time: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }
}

/// Slow envelope on the long-scale grid `X = εx`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeState {
    pub u: Vec<Complex64>,
    pub carrier: f64,
    pub steepness: f64,
    pub time: f64,
}

impl EnvelopeState {
    pub fn new(u: Vec<Complex64>, carrier: f64, steepness: f64) -> Result<Self> {
        if !(carrier > 0.0) {
            return Err(Error::InvalidParameter(format!("carrier must be positive, got {carrier}")));
        }
        if !(steepness > 0.0 && steepness < 1.0) {
            return Err(Error::InvalidParameter(format!("steepness must lie in (0,1), got {steepness}")));
        }
        Ok(Self { u, carrier, steepness, time: 0.0 })
    }

    /// Slow time τ = ε²t.
    pub fn slow_time(&self) -> f64 {
        self.steepness * self.steepness * self.time
    }

    /// Envelope in surface units, `εu`, sampled at the matching fast-grid points.
    pub fn physical_envelope(&self) -> Vec<Complex64> {
        self.u.iter().map(|&v| v * self.steepness).collect()
    }
}

/// Conserved quantities of either model.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    pub hamiltonian: f64,
    pub action: f64,
    pub momentum: f64,
    pub volume: f64,
}

impl Diagnostics {
    pub fn is_finite(&self) -> bool {
        self.hamiltonian.is_finite() && self.action.is_finite() && self.momentum.is_finite() && self.volume.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Spectral;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn desk_and_full_grids() {
        let g = make_grid(200.0 * PI, 1024).unwrap();
        assert!((g.dk - 0.01).abs() < 1e-15);
        assert!((g.dx - 0.6136).abs() < 1e-4);
        let g = make_grid(20.0 * PI, 1024).unwrap();
        assert!((g.dk - 0.1).abs() < 1e-15);
        let g = make_grid(2.0 * PI, 4).unwrap();
        assert_eq!(g.modes(), vec![-2, -1, 0, 1]);
        assert_eq!(g.dk, 1.0);
    }

    #[test]
    fn bad_grids() {
        assert!(make_grid(1.0, 7).is_err());
        assert!(make_grid(1.0, 2).is_err());
        assert!(make_grid(-1.0, 8).is_err());
    }

    #[test]
    fn ladder_phase_period() {
        let g = make_grid(3.7, 16).unwrap();
        assert!((g.dk * g.dx * g.count as f64 - 2.0 * PI).abs() < 1e-12);
        assert!((g.dk * g.length - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn zero_compression() {
        let (p, _) = nondimensionalize(6e9, 1.6, 1.0 / 3.0, 1025.0, 9.81, 0.0).unwrap();
        assert_eq!(p.compression, 0.0);
        assert_eq!((p.g, p.bending), (1.0, 1.0));
    }

    #[test]
    fn unit_compression_sea_ice() {
        let sigma = 6e9 * 1.6f64.powi(3) / (12.0 * (8.0 / 9.0));
        let p_phys = (sigma * 1025.0 * 9.81).sqrt() / 1.6;
        let (p, s) = nondimensionalize(6e9, 1.6, 1.0 / 3.0, 1025.0, 9.81, p_phys).unwrap();
        assert!((p.compression - 1.0).abs() < 1e-12);
        // redimensionalize
        assert!((s.gravity() - 9.81).abs() < 1e-12 * 9.81);
        let sigma_back = s.length.powi(4) * 1025.0 * s.gravity();
        assert!((sigma_back / sigma - 1.0).abs() < 1e-12);
        let p_back = p.compression * (sigma_back * 1025.0 * s.gravity()).sqrt() / 1.6;
        assert!((p_back / p_phys - 1.0).abs() < 1e-12);
    }

    #[test]
    fn realistic_compression_order_one() {
        // 1.6 m ice, 0.5 MPa compressive stress
        let (p, s) = nondimensionalize(6e9, 1.6, 0.3, 1025.0, 9.81, 5e5).unwrap();
        assert!(p.compression > 0.1 && p.compression < 10.0, "{}", p.compression);
        assert!(s.length > 1.0 && s.length < 100.0);
    }

    #[test]
    fn nondim_rejects_bad_input() {
        assert!(nondimensionalize(0.0, 1.0, 0.3, 1025.0, 9.81, 0.0).is_err());
        assert!(nondimensionalize(6e9, 1.0, 1.0, 1025.0, 9.81, 0.0).is_err());
        assert!(nondimensionalize(6e9, -1.0, 0.3, 1025.0, 9.81, 0.0).is_err());
    }

    #[test]
    fn admissibility() {
        assert!(IceParams::with_compression(1.99).unwrap().is_admissible());
        let p = IceParams::with_compression(2.0).unwrap();
        assert!(!p.is_admissible());
        assert!(p.require_admissible().is_err());
        assert!(IceParams::new(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn envelope_invariants() {
        assert!(EnvelopeState::new(vec![], 0.9, 0.09).is_ok());
        assert!(EnvelopeState::new(vec![], 0.0, 0.09).is_err());
        assert!(EnvelopeState::new(vec![], 0.9, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn surface_roundtrip(vals in proptest::collection::vec(-1.0f64..1.0, 64)) {
            let g = make_grid(10.0, 64).unwrap();
            let s = Spectral::new(&g);
            let back = s.inverse(&s.forward(&vals));
            for (a, b) in vals.iter().zip(&back) {
                prop_assert!((a - b).abs() < 1e-14);
            }
        }
    }
}
