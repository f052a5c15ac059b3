//! Cubic Birkhoff normal form: kernels, the auxiliary s-flow and surface reconstruction.
//!
//! Fourier fields here are full spectra of series coefficients in FFT order
//! (see [`crate::spectral`]). With that normalization the continuous gradient
//! sums carry no extra `√2π` or `Δκ` factors.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::SQRT_2;

use crate::dispersion::omega_sq;
use crate::error::{Error, Result};
use crate::model::{EnvelopeState, IceParams, SpectralGrid, SurfaceState};
use crate::resonance::{d_tilde, d_tilde_scale};
use crate::spectral::{index_of, mode_of, Spectral};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Coefficients P₁₂₃, Q₁₂₃, R₁₂₃ of the cubic generating Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KernelTriple {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// s from −1 to 0: physical variables to normal-form variables.
    Forward,
    /// s from 0 to −1: reconstruction of the physical surface.
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    pub ds: f64,
    pub direction: Direction,
    pub delta: f64,
    /// Zero gradient modes with |p| > N/3.
    pub dealias: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self { ds: 0.1, direction: Direction::Backward, delta: crate::resonance::DEFAULT_DELTA, dealias: false }
    }
}

impl FlowConfig {
    pub fn steps(&self) -> Result<usize> {
        if !(self.ds > 0.0 && self.ds <= 1.0) {
            return Err(Error::Config(format!("flow step must lie in (0, 1], got {}", self.ds)));
        }
        let n = (1.0 / self.ds).round();
        if (n * self.ds - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("flow step {} does not divide the unit interval", self.ds)));
        }
        Ok(n as usize)
    }
}

/// Kernel evaluation from precomputed frequencies and a² = ω/|k|.
#[allow(clippy::too_many_arguments)]
fn kernel_from(k: [f64; 3], w: [f64; 3], asq: [f64; 3], p: &IceParams, delta: f64) -> Result<KernelTriple> {
    let [k1, k2, k3] = k;
    if k1 == 0.0 || k2 == 0.0 || k3 == 0.0 || k1.signum() != k3.signum() {
        return Ok(KernelTriple::default());
    }
    let [w1, w2, w3] = w;
    let [a1, a2, a3] = asq;
    let resonant = (w1 - w2 + w3).abs() < delta;
    if resonant {
        // (numerator ∓ Π)/d̃ with the common factor ω₁ − ω₂ + ω₃ divided out
        let pi = (w1 + w2 + w3) * (w1 + w2 - w3) * (w1 - w2 - w3);
        if pi.abs() < 1e-14 {
            return Err(Error::SmallDivisor { k1, k2, k3, value: pi });
        }
        let f = k1 * k3 / pi;
        let qp = 3.0 * w1 * w1 + 2.0 * w1 * w2 - 2.0 * w1 * w3 - w2 * w2 - 2.0 * w2 * w3 - w3 * w3;
        let qq = w1 * w1 + 2.0 * w1 * w2 - 2.0 * w1 * w3 + w2 * w2 + 2.0 * w2 * w3 + w3 * w3;
        let qr = -w1 * w1 + 2.0 * w1 * w2 + 2.0 * w1 * w3 + 3.0 * w2 * w2 + 2.0 * w2 * w3 - w3 * w3;
        Ok(KernelTriple { p: 0.5 * a1 * qp * f, q: 0.25 * a1 * a3 / a2 * qq * f, r: 0.25 / a2 * qr * f })
    } else {
        let d = d_tilde(k1, k3, p);
        if d.abs() < 1e-14 * d_tilde_scale(k1, k3, p) {
            return Err(Error::SmallDivisor { k1, k2, k3, value: d });
        }
        Ok(KernelTriple {
            p: 0.5 * a1 * 4.0 * w1 * (w1 * w1 - w2 * w2 - w3 * w3) / d,
            q: 0.25 * a1 * a3 / a2 * 8.0 * w1 * w2 * w3 / d,
            r: 0.25 / a2 * 4.0 * w2 * (w1 * w1 - w2 * w2 + w3 * w3) / d,
        })
    }
}

fn omega_asq(k: f64, p: &IceParams) -> Result<(f64, f64)> {
    if k == 0.0 {
        return Ok((0.0, 0.0));
    }
    let w2 = omega_sq(k, p);
    if !(w2 > 0.0) {
        return Err(Error::Evanescent { k });
    }
    let w = w2.sqrt();
    Ok((w, w / k.abs()))
}

/// Kernel triple for a closed triad k₁ + k₂ + k₃ = 0, with the relaxed switch of width `delta`.
pub fn kernel(k1: f64, k2: f64, k3: f64, p: &IceParams, delta: f64) -> Result<KernelTriple> {
    let scale = (k1.abs() + k2.abs() + k3.abs()).max(1.0);
    if (k1 + k2 + k3).abs() > 1e-12 * scale {
        return Err(Error::InvalidParameter(format!("triad ({k1}, {k2}, {k3}) does not close")));
    }
    let (w1, s1) = omega_asq(k1, p)?;
    let (w2, s2) = omega_asq(k2, p)?;
    let (w3, s3) = omega_asq(k3, p)?;
    kernel_from([k1, k2, k3], [w1, w2, w3], [s1, s2, s3], p, delta)
}

/// Precomputed triad tables for the gradient sums on one grid.
///
/// For output index `p` and input index `p₁` (with `p₂ = −p − p₁`):
/// `A = P₁₂ₖ + Q₁ₖ₂`, `B = R₁₂ₖ + R₂ₖ₁ + Rₖ₁₂`, `C = P₁ₖ₂ + Pₖ₁₂ + Q₁₂ₖ + Qₖ₂₁`.
#[derive(Debug, Clone)]
pub struct NormalForm {
    pub grid: SpectralGrid,
    pub params: IceParams,
    pub delta: f64,
    spectral: Spectral,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    /// Triads dropped because one member is the Nyquist mode.
    pub nyquist_dropped: usize,
}

impl NormalForm {
    pub fn new(grid: SpectralGrid, params: IceParams, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
        }
        let n = grid.count;
        let h = (n / 2) as i64;
        let dk = grid.dk;
        let freq: Vec<(f64, f64)> = (0..n)
            .map(|j| {
                let p = mode_of(j, n);
                if p == -h {
                    Ok((0.0, 0.0))
                } else {
                    omega_asq(p as f64 * dk, &params)
                }
            })
            .collect::<Result<_>>()?;
        let fr = |q: i64| freq[index_of(q, n)];
        let rows: Vec<(Vec<f64>, Vec<f64>, Vec<f64>, usize)> = (0..n)
            .into_par_iter()
            .map(|j| {
                let p = mode_of(j, n);
                let mut ra = vec![0.0; n];
                let mut rb = vec![0.0; n];
                let mut rc = vec![0.0; n];
                let mut dropped = 0;
                for (i, ((ea, eb), ec)) in ra.iter_mut().zip(rb.iter_mut()).zip(rc.iter_mut()).enumerate() {
                    let p1 = mode_of(i, n);
                    let p2 = -p - p1;
                    if p2 < -h || p2 >= h {
                        continue;
                    }
                    if p == -h || p1 == -h || p2 == -h {
                        dropped += 1;
                        continue;
                    }
                    let (k, k1, k2) = (p as f64 * dk, p1 as f64 * dk, p2 as f64 * dk);
                    let ((w, s), (w1, s1), (w2, s2)) = (fr(p), fr(p1), fr(p2));
                    let kern = |x: [usize; 3]| {
                        let kk = [k, k1, k2];
                        let ww = [w, w1, w2];
                        let ss = [s, s1, s2];
                        kernel_from(
                            [kk[x[0]], kk[x[1]], kk[x[2]]],
                            [ww[x[0]], ww[x[1]], ww[x[2]]],
                            [ss[x[0]], ss[x[1]], ss[x[2]]],
                            &params,
                            delta,
                        )
                    };
                    // index 0 = k, 1 = k1, 2 = k2
                    let t12k = kern([1, 2, 0])?;
                    let t1k2 = kern([1, 0, 2])?;
                    let t2k1 = kern([2, 0, 1])?;
                    let tk12 = kern([0, 1, 2])?;
                    let tk21 = kern([0, 2, 1])?;
                    *ea = t12k.p + t1k2.q;
                    *eb = t12k.r + t2k1.r + tk12.r;
                    *ec = t1k2.p + tk12.p + t12k.q + tk21.q;
                }
                Ok((ra, rb, rc, dropped))
            })
            .collect::<Result<_>>()?;
        let mut a = Vec::with_capacity(n * n);
        let mut b = Vec::with_capacity(n * n);
        let mut c = Vec::with_capacity(n * n);
        let mut dropped = 0;
        for (ra, rb, rc, d) in rows {
            a.extend(ra);
            b.extend(rb);
            c.extend(rc);
            dropped += d;
        }
        log::debug!("normal form tables: {dropped} Nyquist-coupled triads dropped");
        Ok(Self { grid, params, delta, spectral: Spectral::new(&grid), a, b, c, nyquist_dropped: dropped })
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    /// Gradient sums at full-spectrum index `j`: (∂K/∂ξ_k, ∂K/∂η_k).
    fn row(&self, j: usize, eta: &[Complex64], xi: &[Complex64]) -> (Complex64, Complex64) {
        let n = self.grid.count;
        let p = mode_of(j, n);
        let base = j * n;
        let (ra, rb, rc) = (&self.a[base..base + n], &self.b[base..base + n], &self.c[base..base + n]);
        let mut gxi = ZERO;
        let mut geta = ZERO;
        for i in 0..n {
            let i2 = index_of(-p - mode_of(i, n), n);
            gxi += ra[i] * eta[i] * eta[i2] + rb[i] * xi[i] * xi[i2];
            geta += rc[i] * eta[i] * xi[i2];
        }
        (gxi, geta)
    }

    /// Gradients at every ladder index, for full spectra of η and ξ.
    pub fn gradients(&self, eta: &[Complex64], xi: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        (0..self.grid.count).into_par_iter().map(|j| self.row(j, eta, xi)).unzip()
    }

    /// Gradients of K⁽³⁾ at ladder index `p` for a physical state.
    pub fn k3_gradients(&self, state: &SurfaceState, p: i64) -> (Complex64, Complex64) {
        let (e, x) = self.spectra(state);
        self.row(index_of(p, self.grid.count), &e, &x)
    }

    fn spectra(&self, state: &SurfaceState) -> (Vec<Complex64>, Vec<Complex64>) {
        let (he, hx) = self.spectral.forward2(&state.eta, &state.xi);
        (self.spectral.full_from_half(&he), self.spectral.full_from_half(&hx))
    }

    fn rhs(&self, eta: &[Complex64], xi: &[Complex64], dealias: bool) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = self.grid.count;
        let (gxi, geta) = self.gradients(eta, xi);
        let mut de = vec![ZERO; n];
        let mut dx = vec![ZERO; n];
        for j in 0..n {
            let p = mode_of(j, n);
            if dealias && 3 * p.unsigned_abs() as usize > n {
                continue;
            }
            let m = index_of(-p, n);
            de[m] = gxi[j];
            dx[m] = -geta[j];
        }
        (de, dx)
    }

    /// Integrate the auxiliary flow over a unit s-interval with classic RK4.
    pub fn flow(&self, state: &SurfaceState, cfg: &FlowConfig) -> Result<SurfaceState> {
        let steps = cfg.steps()?;
        let n = self.grid.count;
        if state.len() != n {
            return Err(Error::InvalidParameter(format!("state has {} points, grid has {n}", state.len())));
        }
        let h = match cfg.direction {
            Direction::Forward => cfg.ds,
            Direction::Backward => -cfg.ds,
        };
        let (mut e, mut x) = self.spectra(state);
        let axpy = |y: &[Complex64], a: f64, d: &[Complex64]| -> Vec<Complex64> { y.iter().zip(d).map(|(&u, &v)| u + a * v).collect() };
        for _ in 0..steps {
            let (k1e, k1x) = self.rhs(&e, &x, cfg.dealias);
            let (k2e, k2x) = self.rhs(&axpy(&e, 0.5 * h, &k1e), &axpy(&x, 0.5 * h, &k1x), cfg.dealias);
            let (k3e, k3x) = self.rhs(&axpy(&e, 0.5 * h, &k2e), &axpy(&x, 0.5 * h, &k2x), cfg.dealias);
            let (k4e, k4x) = self.rhs(&axpy(&e, h, &k3e), &axpy(&x, h, &k3x), cfg.dealias);
            for j in 0..n {
                e[j] += h / 6.0 * (k1e[j] + 2.0 * k2e[j] + 2.0 * k3e[j] + k4e[j]);
                x[j] += h / 6.0 * (k1x[j] + 2.0 * k2x[j] + 2.0 * k3x[j] + k4x[j]);
            }
            if e.iter().chain(&x).any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::BlowUp { time: state.time });
            }
        }
        let sp = &self.spectral;
        let (eta, xi) = sp.inverse2(&sp.half_from_full(&e), &sp.half_from_full(&x));
        Ok(SurfaceState { eta, xi, time: state.time })
    }

    /// Reconstruct the physical surface from an envelope on the matching long-scale grid.
    ///
    /// The envelope grid has the same point count as the surface grid and length εL,
    /// so that `z(x_j) = ε u_j e^{ik₀x_j}`.
    pub fn envelope_to_surface(&self, env: &EnvelopeState, cfg: &FlowConfig) -> Result<SurfaceState> {
        let grid = &self.grid;
        let n = grid.count;
        if env.u.len() != n {
            return Err(Error::InvalidParameter(format!("envelope has {} points, grid has {n}", env.u.len())));
        }
        if grid.ladder_index(env.carrier).is_none() {
            return Err(Error::Config(format!("carrier {} is not on the wavenumber ladder", env.carrier)));
        }
        let z: Vec<Complex64> =
            grid.points().iter().zip(&env.u).map(|(&x, &u)| env.steepness * u * Complex64::from_polar(1.0, env.carrier * x)).collect();
        let zhat = self.spectral.forward_complex(&z);
        let (eta, xi) = from_z_full(&zhat, grid, &self.params, true)?;
        let mut s = SurfaceState { eta, xi, time: env.time };
        s = self.flow(&s, cfg)?;
        Ok(s)
    }
}

/// Run the auxiliary flow once, building the tables for this call.
pub fn flow(state: &SurfaceState, cfg: &FlowConfig, grid: SpectralGrid, params: IceParams) -> Result<SurfaceState> {
    NormalForm::new(grid, params, cfg.delta)?.flow(state, cfg)
}

fn a_factors(grid: &SpectralGrid, p: &IceParams) -> Result<Vec<f64>> {
    let n = grid.count;
    (0..n)
        .map(|j| {
            let k = mode_of(j, n) as f64 * grid.dk;
            if k == 0.0 {
                return Ok(1.0);
            }
            let w2 = omega_sq(k, p);
            if !(w2 > 0.0) {
                return Err(Error::Evanescent { k });
            }
            Ok((w2.sqrt() / k.abs()).sqrt())
        })
        .collect()
}

/// Complex symplectic coordinates `z_k = (a_k η_k + i a_k⁻¹ ξ_k)/√2` (full spectrum).
///
/// The k = 0 entry uses a = 1 so that the map stays invertible on the mean level.
pub fn symplectic_map(state: &SurfaceState, grid: &SpectralGrid, p: &IceParams) -> Result<Vec<Complex64>> {
    let a = a_factors(grid, p)?;
    let sp = Spectral::new(grid);
    let (he, hx) = sp.forward2(&state.eta, &state.xi);
    let (e, x) = (sp.full_from_half(&he), sp.full_from_half(&hx));
    let i = Complex64::new(0.0, 1.0);
    Ok((0..grid.count).map(|j| (a[j] * e[j] + i * x[j] / a[j]) / SQRT_2).collect())
}

/// Inverse of [`symplectic_map`].
pub fn symplectic_inverse(z: &[Complex64], grid: &SpectralGrid, p: &IceParams, time: f64) -> Result<SurfaceState> {
    let (eta, xi) = from_z_full(z, grid, p, false)?;
    Ok(SurfaceState { eta, xi, time })
}

/// η_k = (z_k + z̄₋ₖ)/(√2 a_k), ξ_k = a_k(z_k − z̄₋ₖ)/(i√2).
fn from_z_full(z: &[Complex64], grid: &SpectralGrid, p: &IceParams, zero_mean: bool) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = grid.count;
    let a = a_factors(grid, p)?;
    let i = Complex64::new(0.0, 1.0);
    let mut he = vec![ZERO; n / 2 + 1];
    let mut hx = vec![ZERO; n / 2 + 1];
    for j in 0..=n / 2 {
        let zm = z[(n - j) % n].conj();
        he[j] = (z[j] + zm) / (SQRT_2 * a[j]);
        hx[j] = a[j] * (z[j] - zm) / (SQRT_2 * i);
    }
    if zero_mean {
        he[0] = ZERO;
        hx[0] = ZERO;
    }
    let sp = Spectral::new(grid);
    Ok(sp.inverse2(&he, &hx))
}
