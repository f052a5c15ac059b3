//! Full Euler system for the ice-covered surface: DNO series, bending and
//! compression forces, and a Lawson RK4 integrator around the linear flow.

use num_complex::Complex64;

use crate::dispersion::omega_sq;
use crate::error::{Error, Result};
use crate::model::{Diagnostics, IceParams, SpectralGrid, SurfaceState};
use crate::spectral::{periodic_integral, Spectral};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Truncation of the Taylor series of G(η).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DnoConfig {
    pub order: usize,
}

impl Default for DnoConfig {
    fn default() -> Self {
        Self { order: 6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerOptions {
    pub dno: DnoConfig,
    /// When false only the linear flow is integrated.
    pub nonlinear: bool,
    /// Evaluate nonlinear terms on a 3× zero-padded grid.
    pub dealias: bool,
}

impl Default for EulerOptions {
    fn default() -> Self {
        Self { dno: DnoConfig::default(), nonlinear: true, dealias: false }
    }
}

fn forward_many(sp: &Spectral, fields: &[Vec<f64>]) -> Vec<Vec<Complex64>> {
    let mut out = Vec::with_capacity(fields.len());
    for pair in fields.chunks(2) {
        if pair.len() == 2 {
            let (a, b) = sp.forward2(&pair[0], &pair[1]);
            out.push(a);
            out.push(b);
        } else {
            out.push(sp.forward(&pair[0]));
        }
    }
    out
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// Physical-space terms `G⁽ᵐ⁾(η)ξ`, `m = 0..=order`.
///
/// Uses G⁽ᵐ⁾ξ = −(1/m!)|D|^{m−1}∂ₓ(ηᵐ∂ₓξ) − Σ_{j=1..m} |D|ʲ((ηʲ/j!)G⁽ᵐ⁻ʲ⁾ξ).
fn dno_orders(sp: &Spectral, eta: &[f64], xi_h: &[Complex64], order: usize) -> Vec<Vec<f64>> {
    let k = sp.half_wavenumbers();
    let nyq = k.len() - 1;
    let mut g = Vec::with_capacity(order + 1);
    let g0: Vec<Complex64> = xi_h.iter().zip(k).map(|(c, &kk)| c * kk).collect();
    if order == 0 {
        g.push(sp.inverse(&g0));
        return g;
    }
    let mut xx: Vec<Complex64> = xi_h.iter().zip(k).map(|(c, &kk)| c * Complex64::new(0.0, kk)).collect();
    xx[nyq] = ZERO;
    let (g0, xi_x) = sp.inverse2(&g0, &xx);
    g.push(g0);
    let mut powers = vec![eta.to_vec()];
    for j in 2..=order {
        let next = powers[j - 2].iter().zip(eta).map(|(p, e)| p * e / j as f64).collect();
        powers.push(next);
    }
    for m in 1..=order {
        let mut fields = Vec::with_capacity(m + 1);
        fields.push(mul(&powers[m - 1], &xi_x));
        for j in 1..=m {
            fields.push(mul(&powers[j - 1], &g[m - j]));
        }
        let spec = forward_many(sp, &fields);
        let acc: Vec<Complex64> = k
            .iter()
            .enumerate()
            .map(|(p, &kk)| {
                let mut v = if p == nyq { ZERO } else { -Complex64::new(0.0, kk) * kk.powi(m as i32 - 1) * spec[0][p] };
                let mut kj = 1.0;
                for s in &spec[1..] {
                    kj *= kk;
                    v -= kj * s[p];
                }
                v
            })
            .collect();
        g.push(sp.inverse(&acc));
    }
    g
}

/// G(η)ξ truncated at `cfg.order`.
pub fn dno_apply(eta: &[f64], xi: &[f64], cfg: DnoConfig, grid: &SpectralGrid) -> Vec<f64> {
    let sp = Spectral::new(grid);
    let g = dno_orders(&sp, eta, &sp.forward(xi), cfg.order);
    let mut out = vec![0.0; eta.len()];
    for term in &g {
        out.iter_mut().zip(term).for_each(|(o, t)| *o += t);
    }
    out
}

fn deriv(sp: &Spectral, c: &[Complex64], order: u32) -> Vec<f64> {
    let mut d = c.to_vec();
    sp.derivative_half(&mut d, order);
    sp.inverse(&d)
}

fn deriv2(sp: &Spectral, a: &[Complex64], oa: u32, b: &[Complex64], ob: u32) -> (Vec<f64>, Vec<f64>) {
    let (mut da, mut db) = (a.to_vec(), b.to_vec());
    sp.derivative_half(&mut da, oa);
    sp.derivative_half(&mut db, ob);
    sp.inverse2(&da, &db)
}

fn curvature_from(eta_x: &[f64], eta_xx: &[f64]) -> Vec<f64> {
    eta_x.iter().zip(eta_xx).map(|(a, b)| b / (1.0 + a * a).powf(1.5)).collect()
}

fn bending_from(sp: &Spectral, eta_x: &[f64], kappa: &[f64]) -> Vec<f64> {
    let s: Vec<f64> = eta_x.iter().map(|a| 1.0 / (1.0 + a * a).sqrt()).collect();
    let kx = sp.derivative(kappa, 1);
    let inner = sp.derivative(&mul(&s, &kx), 1);
    (0..s.len()).map(|j| s[j] * inner[j] + kappa[j].powi(3) / 2.0).collect()
}

/// κ = ηₓₓ/(1+ηₓ²)^{3/2}.
pub fn curvature(eta: &[f64], grid: &SpectralGrid) -> Vec<f64> {
    let sp = Spectral::new(grid);
    let c = sp.forward(eta);
    curvature_from(&deriv(&sp, &c, 1), &deriv(&sp, &c, 2))
}

/// ∂ₛ²κ + κ³/2 in the x-form (1/√(1+ηₓ²))∂ₓ[(1/√(1+ηₓ²))∂ₓκ] + κ³/2.
pub fn bending_force(eta: &[f64], grid: &SpectralGrid) -> Vec<f64> {
    let sp = Spectral::new(grid);
    let c = sp.forward(eta);
    let ex = deriv(&sp, &c, 1);
    let kappa = curvature_from(&ex, &deriv(&sp, &c, 2));
    bending_from(&sp, &ex, &kappa)
}

fn nonlinear_fields(
    sp: &Spectral,
    eta: &[f64],
    eta_h: &[Complex64],
    xi_h: &[Complex64],
    p: &IceParams,
    order: usize,
) -> (Vec<f64>, Vec<f64>) {
    let n = eta.len();
    let g = dno_orders(sp, eta, xi_h, order);
    let mut n1 = vec![0.0; n];
    for term in &g[1..] {
        n1.iter_mut().zip(term).for_each(|(o, t)| *o += t);
    }
    let (ex, exx) = deriv2(sp, eta_h, 1, eta_h, 2);
    let (e4, xx) = deriv2(sp, eta_h, 4, xi_h, 1);
    let kappa = curvature_from(&ex, &exx);
    let bend = bending_from(sp, &ex, &kappa);
    let n2 = (0..n)
        .map(|j| {
            let gxi = g[0][j] + n1[j];
            let w = gxi + ex[j] * xx[j];
            -0.5 * xx[j] * xx[j] + w * w / (2.0 * (1.0 + ex[j] * ex[j]))
                - p.bending * (bend[j] - e4[j])
                - p.compression * (kappa[j] - exx[j])
        })
        .collect();
    (n1, n2)
}

/// N₁ = (G(η) − G⁽⁰⁾)ξ and N₂, the nonlinear part of the ξ equation.
pub fn rhs_nonlinear(state: &SurfaceState, params: &IceParams, cfg: DnoConfig, grid: &SpectralGrid) -> (Vec<f64>, Vec<f64>) {
    let sp = Spectral::new(grid);
    let (eh, xh) = sp.forward2(&state.eta, &state.xi);
    nonlinear_fields(&sp, &state.eta, &eh, &xh, params, cfg.order)
}

/// Linear propagator Θ_k(t) as `[[a, b], [c, d]]`.
fn theta(k: f64, t: f64, p: &IceParams) -> [f64; 4] {
    if k == 0.0 {
        return [1.0, 0.0, -p.g * t, 1.0];
    }
    let s = p.g - p.compression * k * k + p.bending * k.powi(4);
    let w = (k * s).sqrt();
    let (sn, cs) = (w * t).sin_cos();
    [cs, (k / s).sqrt() * sn, -(s / k).sqrt() * sn, cs]
}

fn apply(th: &[[f64; 4]], eh: &[Complex64], xh: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
    th.iter().zip(eh.iter().zip(xh)).map(|(m, (&e, &x))| (m[0] * e + m[1] * x, m[2] * e + m[3] * x)).unzip()
}

fn axpy(a: &[Complex64], h: f64, b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x + h * y).collect()
}

#[derive(Debug, Clone)]
pub struct EulerSolver {
    pub params: IceParams,
    pub options: EulerOptions,
    pub dt: f64,
    grid: SpectralGrid,
    spectral: Spectral,
    fine: Option<Spectral>,
    th_half: Vec<[f64; 4]>,
    th_mhalf: Vec<[f64; 4]>,
    th_full: Vec<[f64; 4]>,
    th_mfull: Vec<[f64; 4]>,
}

impl EulerSolver {
    /// The linear flow is exact; with nonlinear terms active keep `dt·ω(k_max)`
    /// of order one or below, since the coupling oscillates at the grid frequencies.
    pub fn new(grid: SpectralGrid, params: IceParams, dt: f64, options: EulerOptions) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        let spectral = Spectral::new(&grid);
        let ks = spectral.half_wavenumbers().to_vec();
        if let Some(&k) = ks[1..].iter().find(|&&k| omega_sq(k, &params) <= 0.0) {
            return Err(Error::Evanescent { k });
        }
        let table = |t: f64| ks.iter().map(|&k| theta(k, t, &params)).collect::<Vec<_>>();
        let fine = options.dealias.then(|| Spectral::new(&SpectralGrid::new(grid.length, 3 * grid.count).expect("padded grid")));
        Ok(Self {
            params,
            options,
            dt,
            grid,
            th_half: table(dt / 2.0),
            th_mhalf: table(-dt / 2.0),
            th_full: table(dt),
            th_mfull: table(-dt),
            spectral,
            fine,
        })
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    /// Spectra of (N₁, N₂) with the Nyquist entries removed.
    fn nl(&self, eh: &[Complex64], xh: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        if !self.options.nonlinear {
            return (vec![ZERO; eh.len()], vec![ZERO; eh.len()]);
        }
        let (mut a, mut b) = self.nl_raw(eh, xh);
        let nyq = eh.len() - 1;
        a[nyq] = ZERO;
        b[nyq] = ZERO;
        (a, b)
    }

    fn nl_raw(&self, eh: &[Complex64], xh: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let order = self.options.dno.order;
        match &self.fine {
            None => {
                let sp = &self.spectral;
                let (eta, _) = sp.inverse2(eh, xh);
                let (n1, n2) = nonlinear_fields(sp, &eta, eh, xh, &self.params, order);
                sp.forward2(&n1, &n2)
            }
            Some(sp) => {
                let m = sp.len() / 2 + 1;
                let pad = |c: &[Complex64]| {
                    let mut v = c.to_vec();
                    v.resize(m, ZERO);
                    v
                };
                let (pe, px) = (pad(eh), pad(xh));
                let eta = sp.inverse(&pe);
                let (n1, n2) = nonlinear_fields(sp, &eta, &pe, &px, &self.params, order);
                let (mut a, mut b) = sp.forward2(&n1, &n2);
                a.truncate(eh.len());
                b.truncate(eh.len());
                (a, b)
            }
        }
    }

    /// One Lawson RK4 step on half spectra.
    pub fn step_spectral(&self, eh: &mut Vec<Complex64>, xh: &mut Vec<Complex64>) {
        let h = self.dt;
        let (f1e, f1x) = self.nl(eh, xh);
        let stage = |f_e: &[Complex64], f_x: &[Complex64], c: f64, fwd: &[[f64; 4]], back: &[[f64; 4]]| {
            let (a, b) = apply(fwd, &axpy(eh, c * h, f_e), &axpy(xh, c * h, f_x));
            let (ne, nx) = self.nl(&a, &b);
            apply(back, &ne, &nx)
        };
        let (f2e, f2x) = stage(&f1e, &f1x, 0.5, &self.th_half, &self.th_mhalf);
        let (f3e, f3x) = stage(&f2e, &f2x, 0.5, &self.th_half, &self.th_mhalf);
        let (f4e, f4x) = stage(&f3e, &f3x, 1.0, &self.th_full, &self.th_mfull);
        let comb = |v: &[Complex64], f1: &[Complex64], f2: &[Complex64], f3: &[Complex64], f4: &[Complex64]| {
            (0..v.len()).map(|j| v[j] + h / 6.0 * (f1[j] + 2.0 * f2[j] + 2.0 * f3[j] + f4[j])).collect::<Vec<_>>()
        };
        let (ne, nx) = apply(&self.th_full, &comb(eh, &f1e, &f2e, &f3e, &f4e), &comb(xh, &f1x, &f2x, &f3x, &f4x));
        *eh = ne;
        *xh = nx;
        eh[0] = ZERO;
    }

    /// Advance `steps` steps; on NaN the state is left at the last finite step.
    ///
    /// The Nyquist mode is inactive: odd derivatives cannot resolve it, so it is
    /// removed from the initial data and from every nonlinear evaluation.
    pub fn advance(&self, state: &mut SurfaceState, steps: usize) -> Result<()> {
        let n = self.grid.count;
        if state.eta.len() != n || state.xi.len() != n {
            return Err(Error::InvalidParameter(format!("surface has {} points, grid has {n}", state.eta.len())));
        }
        let sp = &self.spectral;
        let (mut eh, mut xh) = sp.forward2(&state.eta, &state.xi);
        eh[0] = ZERO;
        eh[n / 2] = ZERO;
        xh[n / 2] = ZERO;
        let mut done = 0;
        let mut result = Ok(());
        while done < steps {
            let (pe, px) = (eh.clone(), xh.clone());
            self.step_spectral(&mut eh, &mut xh);
            if eh.iter().chain(&xh).any(|c| !(c.re.is_finite() && c.im.is_finite())) {
                eh = pe;
                xh = px;
                result = Err(Error::BlowUp { time: state.time + done as f64 * self.dt });
                break;
            }
            done += 1;
        }
        let (eta, xi) = sp.inverse2(&eh, &xh);
        state.eta = eta;
        state.xi = xi;
        state.time += done as f64 * self.dt;
        result
    }

    pub fn step(&self, state: &mut SurfaceState) -> Result<()> {
        self.advance(state, 1)
    }

    pub fn diagnostics(&self, state: &SurfaceState) -> Diagnostics {
        diagnostics_on(&self.spectral, &self.grid, state, &self.params, self.options.dno)
    }
}

/// Single step with a freshly built solver.
pub fn step_euler(state: &SurfaceState, dt: f64, params: &IceParams, cfg: DnoConfig, grid: &SpectralGrid) -> Result<SurfaceState> {
    let solver = EulerSolver::new(*grid, *params, dt, EulerOptions { dno: cfg, ..Default::default() })?;
    let mut s = state.clone();
    solver.step(&mut s)?;
    Ok(s)
}

/// H, I = ∫ηξₓ and V = ∫η by the trapezoidal rule; `action` is unused here and set to 0.
pub fn diagnostics_euler(state: &SurfaceState, params: &IceParams, cfg: DnoConfig, grid: &SpectralGrid) -> Diagnostics {
    diagnostics_on(&Spectral::new(grid), grid, state, params, cfg)
}

fn diagnostics_on(sp: &Spectral, grid: &SpectralGrid, state: &SurfaceState, p: &IceParams, cfg: DnoConfig) -> Diagnostics {
    let (eh, xh) = sp.forward2(&state.eta, &state.xi);
    let g: Vec<f64> = dno_orders(sp, &state.eta, &xh, cfg.order)
        .into_iter()
        .reduce(|a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect())
        .unwrap_or_default();
    let ex = deriv(sp, &eh, 1);
    let exx = deriv(sp, &eh, 2);
    let xx = deriv(sp, &xh, 1);
    let dens: Vec<f64> = (0..state.eta.len())
        .map(|j| {
            let e = state.eta[j];
            let s2 = 1.0 + ex[j] * ex[j];
            0.5 * state.xi[j] * g[j]
                + 0.5 * (p.g * e * e + p.bending * exx[j] * exx[j] / s2.powf(2.5) - 2.0 * p.compression * (s2.sqrt() - 1.0))
        })
        .collect();
    Diagnostics {
        hamiltonian: periodic_integral(&dens, grid.dx),
        action: 0.0,
        momentum: periodic_integral(&mul(&state.eta, &xx), grid.dx),
        volume: periodic_integral(&state.eta, grid.dx),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::omega;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn grid(l: f64, n: usize) -> SpectralGrid {
        SpectralGrid::new(l, n).unwrap()
    }

    fn band_limited(rng: &mut rand::rngs::StdRng, g: &SpectralGrid, modes: usize, amp: f64) -> Vec<f64> {
        let coef: Vec<(f64, f64)> = (1..=modes).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        g.points()
            .iter()
            .map(|&x| {
                coef.iter()
                    .enumerate()
                    .map(|(i, (a, b))| amp * (a * ((i + 1) as f64 * g.dk * x).cos() + b * ((i + 1) as f64 * g.dk * x).sin()))
                    .sum()
            })
            .collect()
    }

    fn dot(a: &[f64], b: &[f64], dx: f64) -> f64 {
        periodic_integral(&mul(a, b), dx)
    }

    fn max_abs(v: &[f64]) -> f64 {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn flat_surface_gives_abs_d() {
        let g = grid(2.0 * PI, 64);
        let xi: Vec<f64> = g.points().iter().map(|x| (3.0 * x).cos() + 0.5 * (5.0 * x).sin()).collect();
        let got = dno_apply(&vec![0.0; 64], &xi, DnoConfig::default(), &g);
        for (x, v) in g.points().iter().zip(&got) {
            assert!((v - (3.0 * (3.0 * x).cos() + 2.5 * (5.0 * x).sin())).abs() < 1e-12);
        }
    }

    #[test]
    fn first_order_two_mode_oracle() {
        let g = grid(2.0 * PI, 64);
        let (a, k1, k2) = (0.1, 3.0, 5.0);
        let eta: Vec<f64> = g.points().iter().map(|x| a * (k1 * x).cos()).collect();
        let xi: Vec<f64> = g.points().iter().map(|x| (k2 * x).cos()).collect();
        let got = dno_apply(&eta, &xi, DnoConfig { order: 1 }, &g);
        let (sp, sm) = (k1 + k2, k1 - k2);
        for (x, v) in g.points().iter().zip(&got) {
            let g0 = k2 * (k2 * x).cos();
            let g1 = a * k2 / 2.0 * (sp * (sp * x).cos() - sm * (sm * x).cos())
                - a * k2 / 2.0 * (sp.abs() * (sp * x).cos() + sm.abs() * (sm * x).cos());
            assert!((v - g0 - g1).abs() < 1e-12, "{v} {}", g0 + g1);
        }
    }

    #[test]
    fn second_order_matches_operator_form() {
        let g = grid(2.0 * PI, 128);
        let sp = Spectral::new(&g);
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let eta = band_limited(&mut rng, &g, 4, 0.05);
        let xi = band_limited(&mut rng, &g, 6, 1.0);
        let orders = dno_orders(&sp, &eta, &sp.forward(&xi), 2);
        // −½(D²η²G₀ + G₀η²D² − 2G₀ηG₀ηG₀) with D² = −∂ₓ²
        let d2 = |f: &[f64]| sp.derivative(f, 2).iter().map(|v| -v).collect::<Vec<_>>();
        let g0 = |f: &[f64]| sp.abs_d(f);
        let e2 = mul(&eta, &eta);
        let t1 = d2(&mul(&e2, &g0(&xi)));
        let t2 = g0(&mul(&e2, &d2(&xi)));
        let t3 = g0(&mul(&eta, &g0(&mul(&eta, &g0(&xi)))));
        let explicit: Vec<f64> = (0..128).map(|j| -0.5 * (t1[j] + t2[j] - 2.0 * t3[j])).collect();
        let err: f64 = explicit.iter().zip(&orders[2]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12 * max_abs(&explicit).max(1.0), "{err}");
    }

    #[test]
    fn dno_is_self_adjoint() {
        let g = grid(2.0 * PI, 256);
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for order in 0..=6 {
            let eta = band_limited(&mut rng, &g, 4, 0.03);
            let x1 = band_limited(&mut rng, &g, 8, 1.0);
            let x2 = band_limited(&mut rng, &g, 8, 1.0);
            let cfg = DnoConfig { order };
            let a = dot(&x1, &dno_apply(&eta, &x2, cfg, &g), g.dx);
            let b = dot(&x2, &dno_apply(&eta, &x1, cfg, &g), g.dx);
            assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()), "M={order}: {a} {b}");
        }
    }

    #[test]
    fn dno_series_converges_geometrically() {
        let g = grid(2.0 * PI, 256);
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let eta = band_limited(&mut rng, &g, 3, 1.0);
        let scale = 0.25 / (max_abs(&eta) * 3.0);
        let eta: Vec<f64> = eta.iter().map(|e| e * scale).collect();
        let xi = band_limited(&mut rng, &g, 6, 1.0);
        let sp = Spectral::new(&g);
        let orders = dno_orders(&sp, &eta, &sp.forward(&xi), 8);
        let full = dno_apply(&eta, &xi, DnoConfig { order: 8 }, &g);
        let nf = dot(&full, &full, g.dx).sqrt();
        let norms: Vec<f64> = orders[1..].iter().map(|t| dot(t, t, g.dx).sqrt() / nf).collect();
        for w in norms.windows(2) {
            assert!(w[1] < 0.7 * w[0], "{norms:?}");
        }
    }

    #[test]
    fn curvature_limits() {
        let g = grid(2.0 * PI, 64);
        assert!(curvature(&vec![0.0; 64], &g).iter().all(|v| *v == 0.0));
        let a = 1e-3;
        let eta: Vec<f64> = g.points().iter().map(|x| a * (2.0 * x).cos()).collect();
        for (x, k) in g.points().iter().zip(curvature(&eta, &g)) {
            assert!((k + 4.0 * a * (2.0 * x).cos()).abs() < 10.0 * a.powi(3) * 64.0);
        }
    }

    #[test]
    fn curvature_against_finite_differences() {
        let g = grid(2.0 * PI, 256);
        let a = 0.3;
        let eta: Vec<f64> = g.points().iter().map(|x| a * x.cos()).collect();
        let h = 1e-4;
        let f = |x: f64| a * x.cos();
        for (&x, k) in g.points().iter().zip(curvature(&eta, &g)) {
            let ex = (f(x + h) - f(x - h)) / (2.0 * h);
            let exx = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
            assert!((k - exx / (1.0 + ex * ex).powf(1.5)).abs() < 1e-6);
        }
    }

    #[test]
    fn bending_linearizes_to_fourth_derivative() {
        let g = grid(2.0 * PI, 64);
        assert!(bending_force(&vec![0.0; 64], &g).iter().all(|v| *v == 0.0));
        let a = 1e-4;
        let eta: Vec<f64> = g.points().iter().map(|x| a * (3.0 * x).cos()).collect();
        for (x, b) in g.points().iter().zip(bending_force(&eta, &g)) {
            assert!((b - 81.0 * a * (3.0 * x).cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn bending_remainder_is_cubic() {
        let g = grid(2.0 * PI, 128);
        let sp = Spectral::new(&g);
        let norms: Vec<f64> = [0.01, 0.02, 0.04]
            .iter()
            .map(|&a| {
                let eta: Vec<f64> = g.points().iter().map(|x| a * (x.cos() + 0.5 * (2.0 * x).sin())).collect();
                let b = bending_force(&eta, &g);
                let e4 = sp.derivative(&eta, 4);
                max_abs(&b.iter().zip(&e4).map(|(x, y)| x - y).collect::<Vec<_>>())
            })
            .collect();
        for w in norms.windows(2) {
            let slope = (w[1] / w[0]).log2();
            assert!(slope >= 2.9, "{slope}");
        }
    }

    #[test]
    fn nonlinear_terms_basic_cases() {
        let g = grid(2.0 * PI, 64);
        let p = IceParams::with_compression(1.0).unwrap();
        let (n1, n2) = rhs_nonlinear(&SurfaceState::flat(64), &p, DnoConfig::default(), &g);
        assert!(n1.iter().chain(&n2).all(|v| *v == 0.0));
        let k = 4.0;
        let xi: Vec<f64> = g.points().iter().map(|x| (k * x).cos()).collect();
        let st = SurfaceState { eta: vec![0.0; 64], xi, time: 0.0 };
        let (n1, n2) = rhs_nonlinear(&st, &p, DnoConfig::default(), &g);
        for (x, (a, b)) in g.points().iter().zip(n1.iter().zip(&n2)) {
            let xx = -k * (k * x).sin();
            let gx = k * (k * x).cos();
            assert!(a.abs() < 1e-12);
            assert!((b - (-xx * xx / 2.0 + gx * gx / 2.0)).abs() < 1e-11);
        }
    }

    #[test]
    fn nonlinear_terms_are_at_least_quadratic() {
        let g = grid(2.0 * PI, 64);
        let p = IceParams::with_compression(1.0).unwrap();
        let norms: Vec<(f64, f64)> = [0.01, 0.02]
            .iter()
            .map(|&a| {
                let pts = g.points();
                let st = SurfaceState {
                    eta: pts.iter().map(|x| a * (2.0 * x).cos()).collect(),
                    xi: pts.iter().map(|x| a * (3.0 * x).sin()).collect(),
                    time: 0.0,
                };
                let (n1, n2) = rhs_nonlinear(&st, &p, DnoConfig::default(), &g);
                (max_abs(&n1), max_abs(&n2))
            })
            .collect();
        assert!((norms[1].0 / norms[0].0).log2() >= 1.9);
        assert!((norms[1].1 / norms[0].1).log2() >= 1.9);
    }

    fn plane_wave(g: &SpectralGrid, p: &IceParams, k: f64, a: f64, t: f64) -> SurfaceState {
        let w = omega(k, p).unwrap();
        let pts = g.points();
        SurfaceState {
            eta: pts.iter().map(|x| a * (k * x - w * t).cos()).collect(),
            xi: pts.iter().map(|x| a * w / k * (k * x - w * t).sin()).collect(),
            time: t,
        }
    }

    #[test]
    fn linear_plane_wave_phase_is_exact() {
        let p = IceParams::with_compression(1.0).unwrap();
        let k0 = 0.9;
        let g = grid(2.0 * PI / k0 * 4.0, 64);
        let opts = EulerOptions { nonlinear: false, ..Default::default() };
        let solver = EulerSolver::new(g, p, 0.05, opts).unwrap();
        let mut st = plane_wave(&g, &p, k0, 1.0, 0.0);
        solver.advance(&mut st, 1000).unwrap();
        let exact = plane_wave(&g, &p, k0, 1.0, st.time);
        let err = st.eta.iter().zip(&exact.eta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn flat_state_is_fixed() {
        let g = grid(10.0, 32);
        let next = step_euler(&SurfaceState::flat(32), 0.1, &IceParams::default(), DnoConfig::default(), &g).unwrap();
        assert!(next.eta.iter().chain(&next.xi).all(|v| *v == 0.0));
        assert!((next.time - 0.1).abs() < 1e-15);
    }

    #[test]
    fn small_wave_crest_speed() {
        let p = IceParams::with_compression(1.0).unwrap();
        let k0 = 0.9;
        let g = grid(2.0 * PI / k0, 32);
        let w = omega(k0, &p).unwrap();
        let period = 2.0 * PI / w;
        let steps = 2000;
        let solver = EulerSolver::new(g, p, period / steps as f64, EulerOptions::default()).unwrap();
        let mut st = plane_wave(&g, &p, k0, 1e-3, 0.0);
        let sp = Spectral::new(&g);
        let mut unwrapped = 0.0;
        let mut prev = sp.forward(&st.eta)[1].arg();
        for _ in 0..steps {
            solver.step(&mut st).unwrap();
            let ph = sp.forward(&st.eta)[1].arg();
            let mut d = ph - prev;
            if d > PI {
                d -= 2.0 * PI;
            } else if d < -PI {
                d += 2.0 * PI;
            }
            unwrapped += d;
            prev = ph;
        }
        let speed = -unwrapped / k0 / period;
        assert!((speed / (w / k0) - 1.0).abs() < 5e-3, "{speed}");
    }

    #[test]
    fn hamiltonian_of_flat_and_cosine() {
        let g = grid(2.0 * PI, 64);
        let p = IceParams::with_compression(1.0).unwrap();
        let d = diagnostics_euler(&SurfaceState::flat(64), &p, DnoConfig::default(), &g);
        assert_eq!((d.hamiltonian, d.momentum, d.volume), (0.0, 0.0, 0.0));
        let xi: Vec<f64> = g.points().iter().map(|x| (3.0 * x).cos()).collect();
        let d = diagnostics_euler(&SurfaceState { eta: vec![0.0; 64], xi, time: 0.0 }, &p, DnoConfig::default(), &g);
        assert!((d.hamiltonian - PI * 3.0 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn time_convergence_is_fourth_order() {
        let p = IceParams::with_compression(1.0).unwrap();
        let g = grid(4.0 * PI, 16);
        let pts = g.points();
        let init = SurfaceState {
            eta: pts.iter().map(|x| 0.05 * x.cos() + 0.02 * (0.5 * x).sin()).collect(),
            xi: pts.iter().map(|x| 0.05 * x.sin()).collect(),
            time: 0.0,
        };
        let t = 2.0;
        let run = |steps: usize| {
            let s = EulerSolver::new(g, p, t / steps as f64, EulerOptions::default()).unwrap();
            let mut st = init.clone();
            s.advance(&mut st, steps).unwrap();
            st.eta
        };
        let reference = run(800);
        let errs: Vec<f64> =
            [25, 50, 100].iter().map(|&n| run(n).iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)).collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 4.0).abs() < 0.4, "{errs:?}");
        }
    }

    #[test]
    fn conserves_energy_on_short_run() {
        let p = IceParams::with_compression(1.0).unwrap();
        let k0 = 0.9;
        let g = grid(2.0 * PI / k0 * 8.0, 64);
        let mut st = plane_wave(&g, &p, k0, 0.02, 0.0);
        let solver = EulerSolver::new(g, p, 0.05, EulerOptions::default()).unwrap();
        let h0 = solver.diagnostics(&st);
        solver.advance(&mut st, 400).unwrap();
        let h1 = solver.diagnostics(&st);
        assert!(((h1.hamiltonian - h0.hamiltonian) / h0.hamiltonian).abs() < 1e-6);
        assert!(h1.volume.abs() < 1e-12);
    }

    #[test]
    fn dealiased_run_stays_close() {
        let p = IceParams::with_compression(1.0).unwrap();
        let k0 = 0.9;
        let g = grid(2.0 * PI / k0 * 4.0, 64);
        let init = plane_wave(&g, &p, k0, 0.01, 0.0);
        let mut a = init.clone();
        let mut b = init;
        EulerSolver::new(g, p, 0.05, EulerOptions::default()).unwrap().advance(&mut a, 100).unwrap();
        EulerSolver::new(g, p, 0.05, EulerOptions { dealias: true, ..Default::default() }).unwrap().advance(&mut b, 100).unwrap();
        let d = a.eta.iter().zip(&b.eta).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(d < 1e-6, "{d}");
    }

    #[test]
    fn evanescent_grid_is_rejected() {
        let p = IceParams::new(1.0, 1.0, 2.5).unwrap();
        assert!(matches!(EulerSolver::new(grid(2.0 * PI, 16), p, 0.1, EulerOptions::default()), Err(Error::Evanescent { .. })));
    }
}
