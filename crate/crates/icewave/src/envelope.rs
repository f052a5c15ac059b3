//! Hamiltonian Dysthe and NLS envelope models.
//!
//! The solved equation is
//! `i u_t = ω₀u − iεω₀′u_X − (ε²ω₀″/2)u_XX + ε²α|u|²u + (iε³ω₀‴/6)u_XXX − iε³β|u|²u_X − ε³(γk₀²/2)u|D_X||u|²`
//! on the long-scale grid X = εx. The linear part is propagated exactly per mode
//! and the nonlinear part with classic RK4 (Lawson scheme).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dispersion::{carrier_derivatives, omega, CarrierDerivatives};
use crate::error::{Error, Result};
use crate::model::{Diagnostics, EnvelopeState, IceParams, SpectralGrid};
use crate::resonance::{chi_geometric, gamma_coefficient, ResonanceAtlas};
use crate::spectral::{mode_of, Spectral};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Nonlinear and dispersive coefficients of the envelope equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DystheCoefficients {
    pub k0: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub derivs: CarrierDerivatives,
    /// ω at the second harmonic 2k₀.
    pub omega_2k0: f64,
    pub c0l: f64,
    pub c0r: f64,
    pub c1l: f64,
    pub c1r: f64,
    pub c2l: f64,
    pub c2r: f64,
    /// Whether the product χ(k₀,−2k₀,k₀)² term was active.
    pub double_chi: bool,
}

impl DystheCoefficients {
    pub fn compute(k0: f64, p: &IceParams, atlas: &ResonanceAtlas, eps: f64) -> Result<Self> {
        let double_chi = chi_geometric(k0, -2.0 * k0, k0, atlas);
        if double_chi {
            log::info!("double-chi term active at k0 = {k0}: c2 contributions removed");
        }
        let gamma = gamma_coefficient(k0, atlas, eps)? as f64;
        Self::assemble(k0, p, double_chi, gamma)
    }

    /// Coefficients with explicit resonance switches instead of an atlas.
    pub fn assemble(k0: f64, p: &IceParams, double_chi: bool, gamma: f64) -> Result<Self> {
        let derivs = carrier_derivatives(k0, p)?;
        let w0 = derivs.w0;
        let w2 = omega(2.0 * k0, p).filter(|&w| w > 0.0).ok_or(Error::Evanescent { k: 2.0 * k0 })?;
        if (2.0 * w0 - w2).abs() <= 1e-12 * w0 {
            return Err(Error::DegenerateCarrier { k0 });
        }
        let (g, pc, d) = (p.g, p.compression, p.bending);
        let k2 = k0 * k0;
        let k4 = k2 * k2;
        let k6 = k4 * k2;
        let w0s = w0 * w0;
        let shift = 1.5 * pc - 5.0 * d * k2;
        let c0l = k0 * k2 / (8.0 * PI) + k6 / (16.0 * PI * w0s) * shift;
        let c0r = 3.0 * k2 / (16.0 * PI)
            + k6 / (16.0 * PI * w0s) * (shift * (2.0 / k0 + (g + pc * k2 - 3.0 * d * k4) / (2.0 * w0s)) - 5.0 * d * k0);
        let c1l = k0 * k2 * w0s / (4.0 * PI * w2 * (2.0 * w0 + w2));
        let c2l = -k0 * k2 * w0s / (4.0 * PI * w2 * (2.0 * w0 - w2));
        let a = (3.0 * g - 5.0 * pc * k2 + 7.0 * d * k4) / w0s;
        let b = (g + 4.0 * pc * k2 - 48.0 * d * k4) / (w2 * w2);
        let c = g - 12.0 * pc * k2 + 80.0 * d * k4;
        let e = g - 3.0 * pc * k2 + 5.0 * d * k4;
        let c1r = 0.5 * c1l * (a + b - c / (w2 * (2.0 * w0 + w2)) - e / (w0 * (2.0 * w0 + w2)));
        let c2r = 0.5 * c2l * (a + b + c / (w2 * (2.0 * w0 - w2)) - e / (w0 * (2.0 * w0 - w2)));
        let keep = if double_chi { 0.0 } else { 1.0 };
        let alpha = 4.0 * PI * (c0l - 0.5 * c1l - 0.5 * keep * c2l);
        let beta = 8.0 * PI * (c0r - 0.5 * c1r - 0.5 * keep * c2r);
        Ok(Self { k0, alpha, beta, gamma, derivs, omega_2k0: w2, c0l, c0r, c1l, c1r, c2l, c2r, double_chi })
    }

    /// Same coefficients with the mean-flow selector overridden.
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    /// Benjamin-Feir index −ω₀″α.
    pub fn bfi(&self) -> f64 {
        -self.derivs.w2 * self.alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Dysthe,
    Nls,
}

impl std::str::FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dysthe" => Ok(Model::Dysthe),
            "nls" => Ok(Model::Nls),
            other => Err(Error::Config(format!("unknown envelope model `{other}`"))),
        }
    }
}

/// Linear symbol used by the integrating factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol {
    /// Taylor expansion of ω(k₀+ελ) to the order of the model.
    Taylor,
    /// The full ω(k₀+ελ).
    Exact,
}

#[derive(Debug, Clone)]
pub struct EnvelopeSolver {
    pub coeffs: DystheCoefficients,
    pub model: Model,
    pub eps: f64,
    pub dt: f64,
    grid: SpectralGrid,
    spectral: Spectral,
    /// iλ with the Nyquist entry removed.
    ilam: Vec<Complex64>,
    abs_lam: Vec<f64>,
    e_half: Vec<Complex64>,
    e_full: Vec<Complex64>,
    mask: Option<Vec<f64>>,
}

impl EnvelopeSolver {
    /// Solver on the long-scale grid `grid` (length εL for a fast domain of length L).
    ///
    /// Stability guidance: keep `dt·ε²α max|u|²` and `dt·ε max|λ|·|ω₀′|` well below 1;
    /// the linear part is exact and does not restrict `dt`.
    pub fn new(grid: SpectralGrid, coeffs: DystheCoefficients, eps: f64, dt: f64, model: Model) -> Result<Self> {
        Self::with_options(grid, coeffs, eps, dt, model, Symbol::Taylor, false, None)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_options(
        grid: SpectralGrid,
        coeffs: DystheCoefficients,
        eps: f64,
        dt: f64,
        model: Model,
        symbol: Symbol,
        dealias: bool,
        params: Option<IceParams>,
    ) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!("steepness must lie in (0,1), got {eps}")));
        }
        let n = grid.count;
        let lam: Vec<f64> = (0..n).map(|j| mode_of(j, n) as f64 * grid.dk).collect();
        let d = coeffs.derivs;
        let lin: Vec<f64> = match symbol {
            Symbol::Taylor => lam
                .iter()
                .map(|&l| {
                    let mut s = d.w0 + eps * d.w1 * l + eps * eps * d.w2 * l * l / 2.0;
                    if model == Model::Dysthe {
                        s += eps.powi(3) * d.w3 * l.powi(3) / 6.0;
                    }
                    s
                })
                .collect(),
            Symbol::Exact => {
                let p = params.ok_or_else(|| Error::Config("exact symbol needs ice parameters".into()))?;
                lam.iter()
                    .map(|&l| {
                        let k = coeffs.k0 + eps * l;
                        omega(k, &p).ok_or(Error::Evanescent { k })
                    })
                    .collect::<Result<_>>()?
            }
        };
        let ilam = lam.iter().enumerate().map(|(j, &l)| if j == n / 2 { ZERO } else { Complex64::new(0.0, l) }).collect();
        let mask = dealias.then(|| (0..n).map(|j| if 4 * mode_of(j, n).unsigned_abs() as usize > n { 0.0 } else { 1.0 }).collect());
        Ok(Self {
            coeffs,
            model,
            eps,
            dt,
            grid,
            spectral: Spectral::new(&grid),
            ilam,
            abs_lam: lam.iter().map(|l| l.abs()).collect(),
            e_half: lin.iter().map(|&s| Complex64::from_polar(1.0, -s * dt / 2.0)).collect(),
            e_full: lin.iter().map(|&s| Complex64::from_polar(1.0, -s * dt)).collect(),
            mask,
        })
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    /// −i·FFT[N(u)] for spectral input.
    fn nonlinear(&self, uh: &[Complex64]) -> Vec<Complex64> {
        let sp = &self.spectral;
        let c = &self.coeffs;
        let e2 = self.eps * self.eps;
        let u = sp.inverse_complex(uh);
        let mod2: Vec<f64> = u.iter().map(|v| v.norm_sqr()).collect();
        let mut nl: Vec<Complex64> = u.iter().zip(&mod2).map(|(&v, &m)| e2 * c.alpha * m * v).collect();
        if self.model == Model::Dysthe {
            let e3 = e2 * self.eps;
            let ux = sp.inverse_complex(&uh.iter().zip(&self.ilam).map(|(a, b)| a * b).collect::<Vec<_>>());
            let mh = sp.forward_complex(&mod2.iter().map(|&m| Complex64::new(m, 0.0)).collect::<Vec<_>>());
            let dm = sp.inverse_complex(&mh.iter().zip(&self.abs_lam).map(|(a, &b)| a * b).collect::<Vec<_>>());
            let mf = c.gamma * c.k0 * c.k0 / 2.0;
            for j in 0..nl.len() {
                nl[j] += -I * e3 * c.beta * mod2[j] * ux[j] - e3 * mf * u[j] * dm[j].re;
            }
        }
        let mut out = sp.forward_complex(&nl);
        out.iter_mut().for_each(|v| *v *= -I);
        if let Some(m) = &self.mask {
            out.iter_mut().zip(m).for_each(|(v, &w)| *v *= w);
        }
        out
    }

    /// Advance by one step.
    pub fn step(&self, state: &mut EnvelopeState) -> Result<()> {
        let h = self.dt;
        let n = self.grid.count;
        if state.u.len() != n {
            return Err(Error::InvalidParameter(format!("envelope has {} points, grid has {n}", state.u.len())));
        }
        let uh = self.spectral.forward_complex(&state.u);
        let (eh, ef) = (&self.e_half, &self.e_full);
        let k1 = self.nonlinear(&uh);
        let a: Vec<Complex64> = (0..n).map(|j| eh[j] * (uh[j] + 0.5 * h * k1[j])).collect();
        let k2 = self.nonlinear(&a);
        let b: Vec<Complex64> = (0..n).map(|j| eh[j] * uh[j] + 0.5 * h * k2[j]).collect();
        let k3 = self.nonlinear(&b);
        let c: Vec<Complex64> = (0..n).map(|j| ef[j] * uh[j] + h * eh[j] * k3[j]).collect();
        let k4 = self.nonlinear(&c);
        let next: Vec<Complex64> =
            (0..n).map(|j| ef[j] * uh[j] + h / 6.0 * (ef[j] * k1[j] + 2.0 * eh[j] * (k2[j] + k3[j]) + k4[j])).collect();
        let u = self.spectral.inverse_complex(&next);
        if u.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::BlowUp { time: state.time });
        }
        state.u = u;
        state.time += h;
        Ok(())
    }

    /// H, M and I on the long-scale grid by the trapezoidal rule; volume is left at 0.
    pub fn diagnostics(&self, state: &EnvelopeState) -> Diagnostics {
        diagnostics_on(&self.spectral, &self.grid, state, &self.coeffs)
    }
}

/// Single step with a freshly built solver.
pub fn step(state: &EnvelopeState, grid: SpectralGrid, coeffs: DystheCoefficients, dt: f64, model: Model) -> Result<EnvelopeState> {
    let solver = EnvelopeSolver::new(grid, coeffs, state.steepness, dt, model)?;
    let mut s = state.clone();
    solver.step(&mut s)?;
    Ok(s)
}

/// Envelope Hamiltonian, action and momentum.
pub fn diagnostics(state: &EnvelopeState, grid: &SpectralGrid, coeffs: &DystheCoefficients) -> Diagnostics {
    diagnostics_on(&Spectral::new(grid), grid, state, coeffs)
}

fn diagnostics_on(sp: &Spectral, grid: &SpectralGrid, state: &EnvelopeState, c: &DystheCoefficients) -> Diagnostics {
    let n = grid.count;
    let eps = state.steepness;
    let u = &state.u;
    let uh = sp.forward_complex(u);
    let deriv = |order: u32| {
        let d: Vec<Complex64> =
            (0..n)
                .map(|j| {
                    if order % 2 == 1 && j == n / 2 {
                        ZERO
                    } else {
                        uh[j] * Complex64::new(0.0, mode_of(j, n) as f64 * grid.dk).powu(order)
                    }
                })
                .collect();
        sp.inverse_complex(&d)
    };
    let ux = deriv(1);
    let uxxx = deriv(3);
    let mod2: Vec<f64> = u.iter().map(|v| v.norm_sqr()).collect();
    let mh = sp.forward_complex(&mod2.iter().map(|&m| Complex64::new(m, 0.0)).collect::<Vec<_>>());
    let dm: Vec<f64> = sp
        .inverse_complex(&(0..n).map(|j| mh[j] * (mode_of(j, n) as f64 * grid.dk).abs()).collect::<Vec<_>>())
        .iter()
        .map(|v| v.re)
        .collect();
    let d = c.derivs;
    let (e2, e3, e4) = (eps * eps, eps.powi(3), eps.powi(4));
    let mut h = 0.0;
    let mut m = 0.0;
    let mut mom = 0.0;
    for j in 0..n {
        let im1 = (u[j].conj() * ux[j]).im;
        let im3 = (u[j].conj() * uxxx[j]).im;
        h += eps * d.w0 * mod2[j] + e2 * d.w1 * im1 + e3 * d.w2 / 2.0 * ux[j].norm_sqr() + e3 * c.alpha / 2.0 * mod2[j] * mod2[j]
            - e4 * d.w3 / 6.0 * im3
            + e4 * c.beta / 2.0 * mod2[j] * im1
            - e4 * c.gamma * c.k0 * c.k0 / 4.0 * mod2[j] * dm[j];
        m += mod2[j];
        mom += c.k0 * mod2[j] + eps * im1;
    }
    let dx = grid.dx;
    Diagnostics { hamiltonian: h * dx, action: eps * m * dx, momentum: mom * dx, volume: 0.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::k_min;
    use crate::resonance::build_curve;
    use rand::{Rng, SeedableRng};

    fn params(pc: f64) -> IceParams {
        IceParams::with_compression(pc).unwrap()
    }

    fn coeffs(k0: f64, pc: f64, eps: f64) -> DystheCoefficients {
        let p = params(pc);
        let atlas = build_curve(p, 1e-3, 10.0, 512, eps, 1e-6).unwrap();
        DystheCoefficients::compute(k0, &p, &atlas, eps).unwrap()
    }

    fn synthetic() -> DystheCoefficients {
        let mut c = coeffs(0.9, 1.0, 0.3);
        c.alpha = 1.0;
        c.beta = 0.7;
        c.gamma = 1.0;
        c
    }

    fn random_u(n: usize, amp: f64, modes: i64, seed: u64) -> Vec<Complex64> {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let coef: Vec<(i64, Complex64)> =
            (-modes..=modes).map(|p| (p, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))).collect();
        (0..n)
            .map(|j| {
                let x = 2.0 * PI * j as f64 / n as f64;
                amp * coef.iter().map(|&(p, c)| c * Complex64::from_polar(1.0, p as f64 * x)).sum::<Complex64>()
            })
            .collect()
    }

    #[test]
    fn bfi_at_kmin() {
        for (pc, expect) in [(0.0, -0.006), (1.0, 0.2954)] {
            let p = params(pc);
            let k = k_min(&p);
            let c = coeffs(k, pc, 0.05);
            assert!((c.bfi() - expect).abs() < 1e-3, "{pc}: {}", c.bfi());
            assert!(!c.double_chi);
        }
    }

    #[test]
    fn gravity_limit() {
        let p = IceParams::new(1.0, 1e-8, 1e-8).unwrap();
        let atlas = build_curve(p, 1e-3, 10.0, 512, 0.09, 1e-6).unwrap();
        for k0 in [0.5, 0.9, 2.0] {
            let c = DystheCoefficients::compute(k0, &p, &atlas, 0.09).unwrap();
            assert!((c.alpha / k0.powi(3) - 1.0).abs() < 1e-3);
            assert!((c.beta / (3.0 * k0 * k0) - 1.0).abs() < 1e-3);
            assert_eq!(c.gamma, 2.0);
        }
    }

    #[test]
    fn combination_invariant() {
        let c = coeffs(0.9, 1.0, 0.09);
        assert!((c.alpha / (4.0 * PI) - (c.c0l - (c.c1l + c.c2l) / 2.0)).abs() < 1e-15);
        assert!((c.beta / (8.0 * PI) - (c.c0r - (c.c1r + c.c2r) / 2.0)).abs() < 1e-15);
        assert_eq!(c.gamma, 2.0);
        assert_eq!(coeffs(2.0, 1.0, 0.05).gamma, 1.0);
    }

    #[test]
    fn degenerate_carrier_rejected() {
        // 2ω(k) = ω(2k) has a root for P = 0 near k = 0.4347; locate it and test
        let p = params(0.0);
        let f = |k: f64| 2.0 * omega(k, &p).unwrap() - omega(2.0 * k, &p).unwrap();
        let (mut lo, mut hi) = (0.1, 1.0);
        assert!(f(lo) * f(hi) < 0.0);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if f(lo) * f(m) <= 0.0 {
                hi = m
            } else {
                lo = m
            }
        }
        let atlas = build_curve(p, 1e-3, 10.0, 128, 0.01, 1e-6).unwrap();
        let root = if f(lo).abs() < f(hi).abs() { lo } else { hi };
        assert!(matches!(DystheCoefficients::compute(root, &p, &atlas, 0.01), Err(Error::DegenerateCarrier { .. })));
    }

    #[test]
    fn uniform_phase_rotation() {
        let c = coeffs(0.9, 1.0, 0.09);
        let eps = 0.09;
        let grid = SpectralGrid::new(eps * 200.0 * PI, 64).unwrap();
        let b0 = 0.7;
        let solver = EnvelopeSolver::new(grid, c, eps, 0.01, Model::Dysthe).unwrap();
        let mut s = EnvelopeState::new(vec![Complex64::new(b0, 0.0); 64], 0.9, eps).unwrap();
        for _ in 0..100 {
            solver.step(&mut s).unwrap();
        }
        let nu = c.derivs.w0 + eps * eps * c.alpha * b0 * b0;
        let expect = Complex64::from_polar(b0, -nu * 1.0);
        for v in &s.u {
            assert!((v.norm() - b0).abs() < 1e-8);
            assert!((v - expect).norm() < 1e-8, "{v} {expect}");
        }
    }

    #[test]
    fn zero_stays_zero() {
        let c = coeffs(0.9, 1.0, 0.09);
        let grid = SpectralGrid::new(10.0, 32).unwrap();
        let s0 = EnvelopeState::new(vec![ZERO; 32], 0.9, 0.09).unwrap();
        let s = step(&s0, grid, c, 0.1, Model::Dysthe).unwrap();
        assert!(s.u.iter().all(|v| v.norm() == 0.0));
        let d = diagnostics(&s, &grid, &c);
        assert_eq!(d, Diagnostics::default());
    }

    #[test]
    fn linear_sideband_phase() {
        let mut c = coeffs(0.9, 1.0, 0.09);
        c.alpha = 0.0;
        c.beta = 0.0;
        c.gamma = 0.0;
        let eps = 0.09;
        let grid = SpectralGrid::new(2.0 * PI, 32).unwrap();
        let lam = 3.0;
        let solver = EnvelopeSolver::new(grid, c, eps, 0.05, Model::Dysthe).unwrap();
        let mut s = EnvelopeState::new(grid.points().iter().map(|&x| Complex64::from_polar(0.3, lam * x)).collect(), 0.9, eps).unwrap();
        for _ in 0..200 {
            solver.step(&mut s).unwrap();
        }
        let d = c.derivs;
        let sym = d.w0 + eps * d.w1 * lam + eps * eps * d.w2 * lam * lam / 2.0 + eps.powi(3) * d.w3 * lam.powi(3) / 6.0;
        for (x, v) in grid.points().iter().zip(&s.u) {
            assert!((v - Complex64::from_polar(0.3, lam * x - sym * s.time)).norm() < 1e-12);
        }
    }

    #[test]
    fn nls_is_dysthe_without_cubic_terms() {
        let mut c = synthetic();
        c.derivs.w3 = 0.0;
        c.beta = 0.0;
        c.gamma = 0.0;
        let grid = SpectralGrid::new(2.0 * PI, 64).unwrap();
        let u = random_u(64, 0.5, 5, 1);
        let dy = EnvelopeSolver::new(grid, c, 0.3, 0.01, Model::Dysthe).unwrap();
        let nls = EnvelopeSolver::new(grid, c, 0.3, 0.01, Model::Nls).unwrap();
        let mut a = EnvelopeState::new(u.clone(), 0.9, 0.3).unwrap();
        let mut b = a.clone();
        for _ in 0..20 {
            dy.step(&mut a).unwrap();
            nls.step(&mut b).unwrap();
        }
        assert!(a.u.iter().zip(&b.u).all(|(x, y)| x == y));
    }

    #[test]
    fn phase_invariance() {
        let c = synthetic();
        let grid = SpectralGrid::new(2.0 * PI, 64).unwrap();
        let solver = EnvelopeSolver::new(grid, c, 0.3, 0.01, Model::Dysthe).unwrap();
        let u = random_u(64, 0.5, 6, 2);
        let rot = Complex64::from_polar(1.0, 0.77);
        let mut a = EnvelopeState::new(u.clone(), 0.9, 0.3).unwrap();
        let mut b = EnvelopeState::new(u.iter().map(|v| v * rot).collect(), 0.9, 0.3).unwrap();
        solver.step(&mut a).unwrap();
        solver.step(&mut b).unwrap();
        for (x, y) in a.u.iter().zip(&b.u) {
            assert!((x * rot - y).norm() < 1e-14);
        }
    }

    #[test]
    fn action_error_per_step_is_fifth_order() {
        let c = synthetic();
        let grid = SpectralGrid::new(2.0 * PI, 64).unwrap();
        let u = random_u(64, 3.0, 3, 4);
        let s0 = EnvelopeState::new(u, 0.9, 0.3).unwrap();
        let m0 = diagnostics(&s0, &grid, &c).action;
        let errs: Vec<f64> = [4e-2, 2e-2, 1e-2]
            .iter()
            .map(|&dt| {
                let s = step(&s0, grid, c, dt, Model::Dysthe).unwrap();
                (diagnostics(&s, &grid, &c).action - m0).abs()
            })
            .collect();
        let s1 = (errs[0] / errs[1]).log2();
        let s2 = (errs[1] / errs[2]).log2();
        assert!(s1 > 4.5 && s2 > 4.5, "{errs:?} {s1} {s2}");
    }

    #[test]
    fn uniform_diagnostics() {
        let c = coeffs(0.9, 1.0, 0.09);
        let eps = 0.09;
        let grid = SpectralGrid::new(eps * 200.0 * PI, 64).unwrap();
        let b0 = 0.8;
        let s = EnvelopeState::new(vec![Complex64::new(b0, 0.0); 64], 0.9, eps).unwrap();
        let d = diagnostics(&s, &grid, &c);
        let l = grid.length;
        assert!((d.hamiltonian - l * (eps * c.derivs.w0 * b0 * b0 + eps.powi(3) * c.alpha * b0.powi(4) / 2.0)).abs() < 1e-12);
        assert!((d.action - eps * l * b0 * b0).abs() < 1e-12);
        assert!((d.momentum - 0.9 * l * b0 * b0).abs() < 1e-12);
    }

    #[test]
    fn abs_d_positive() {
        let grid = SpectralGrid::new(7.0, 64).unwrap();
        let sp = Spectral::new(&grid);
        let mut rng = rand::rngs::StdRng::seed_from_u64(9);
        for _ in 0..20 {
            let f: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let g: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let df = sp.abs_d(&f);
            let dg = sp.abs_d(&g);
            let ff: f64 = f.iter().zip(&df).map(|(a, b)| a * b).sum();
            let fg: f64 = f.iter().zip(&dg).map(|(a, b)| a * b).sum();
            let gf: f64 = g.iter().zip(&df).map(|(a, b)| a * b).sum();
            assert!(ff >= 0.0);
            assert!((fg - gf).abs() < 1e-12);
        }
    }

    #[test]
    fn model_parse() {
        assert_eq!("Dysthe".parse::<Model>().unwrap(), Model::Dysthe);
        assert_eq!("nls".parse::<Model>().unwrap(), Model::Nls);
        assert!("kdv".parse::<Model>().is_err());
    }
}
