//! Experiment orchestration: matched initial data, paired envelope/Euler runs,
//! error series, crest tracking, and the Stokes-expansion reference at 𝒫 = 0.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::dispersion::{carrier_derivatives, omega_checked};
use crate::envelope::{DystheCoefficients, EnvelopeSolver, Model};
use crate::error::{Error, Result};
use crate::euler::{DnoConfig, EulerOptions, EulerSolver};
use crate::model::{Config, Diagnostics, EnvelopeState, IceParams, Snapshot, SpectralGrid, SurfaceState};
use crate::normalform::{Direction, FlowConfig, NormalForm};
use crate::resonance::{build_curve, DEFAULT_K1_RANGE, DEFAULT_SAMPLES};
use crate::spectral::{index_of, Spectral};
use crate::stability::envelope_amplitude;

/// Number of envelope sideband modes tracked per snapshot.
pub const TRACKED_MODES: usize = 8;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKind {
    Dysthe,
    Nls,
    Euler,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Dysthe => "dysthe",
            ModelKind::Nls => "nls",
            ModelKind::Euler => "euler",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dysthe" => Ok(ModelKind::Dysthe),
            "nls" => Ok(ModelKind::Nls),
            "euler" => Ok(ModelKind::Euler),
            other => Err(Error::Config(format!("unknown model `{other}`"))),
        }
    }
}

/// Parameters of one comparison experiment (all dimensionless).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub a0: f64,
    pub k0: f64,
    pub lam: f64,
    pub pcomp: f64,
    pub length: f64,
    pub count: usize,
    pub dt: f64,
    pub ds: f64,
    pub delta: f64,
    pub tmax: f64,
    pub snapshot_interval: f64,
    pub models: Vec<ModelKind>,
    pub dno_order: usize,
    /// Tube half-width of the resonance atlas; ε when unset.
    pub mu: Option<f64>,
    pub force_gamma: Option<u8>,
    pub dealias: bool,
    /// Write `t<time>.hwav` files of the Euler surface.
    pub write_snapshots: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            a0: 0.1,
            k0: 0.9,
            lam: 0.02,
            pcomp: 1.0,
            length: 200.0 * PI,
            count: 512,
            dt: 0.01,
            ds: 0.1,
            delta: 1e-6,
            tmax: 5000.0,
            snapshot_interval: 10.0,
            models: vec![ModelKind::Dysthe, ModelKind::Nls, ModelKind::Euler],
            dno_order: 6,
            mu: None,
            force_gamma: None,
            dealias: false,
            write_snapshots: true,
        }
    }
}

/// Lengths may be written as plain numbers or as multiples of π (`200pi`, `200*pi`).
fn parse_length(s: &str) -> Result<f64> {
    let t = s.trim().to_ascii_lowercase();
    let bad = || Error::Config(format!("cannot parse length `{s}`"));
    if let Some(head) = t.strip_suffix("pi") {
        let head = head.trim().trim_end_matches('*').trim();
        let m = if head.is_empty() { 1.0 } else { head.parse::<f64>().map_err(|_| bad())? };
        Ok(m * PI)
    } else {
        t.parse().map_err(|_| bad())
    }
}

fn is_integer(v: f64) -> bool {
    (v - v.round()).abs() <= 1e-8 * v.abs().max(1.0)
}

impl ExperimentConfig {
    pub fn from_config(c: &Config) -> Result<Self> {
        let d = Self::default();
        let models = match c.raw("models") {
            None => d.models.clone(),
            Some(list) => list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect::<Result<Vec<_>>>()?,
        };
        let length = match c.raw("L") {
            None => d.length,
            Some(v) => parse_length(v)?,
        };
        let cfg = Self {
            a0: c.get_or("a0", d.a0)?,
            k0: c.get_or("k0", d.k0)?,
            lam: c.get_or("lam", d.lam)?,
            pcomp: c.get_or("pcomp", d.pcomp)?,
            length,
            count: c.get_or("N", d.count)?,
            dt: c.get_or("dt", d.dt)?,
            ds: c.get_or("ds", d.ds)?,
            delta: c.get_or("delta", d.delta)?,
            tmax: c.get_or("tmax", d.tmax)?,
            snapshot_interval: c.get_or("snapshot_interval", d.snapshot_interval)?,
            models,
            dno_order: c.get_or("dno_order", d.dno_order)?,
            mu: c.get("mu")?,
            force_gamma: c.get("force_gamma")?,
            dealias: c.get_or("dealias", d.dealias)?,
            write_snapshots: c.get_or("write_snapshots", d.write_snapshots)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every field written out explicitly; the canonical text of this is hashed into the run id.
    pub fn to_config(&self) -> Config {
        let mut c = Config::default();
        c.set("a0", self.a0);
        c.set("k0", self.k0);
        c.set("lam", self.lam);
        c.set("pcomp", self.pcomp);
        c.set("L", self.length);
        c.set("N", self.count);
        c.set("dt", self.dt);
        c.set("ds", self.ds);
        c.set("delta", self.delta);
        c.set("tmax", self.tmax);
        c.set("snapshot_interval", self.snapshot_interval);
        c.set("models", self.models.iter().map(ModelKind::as_str).collect::<Vec<_>>().join(","));
        c.set("dno_order", self.dno_order);
        if let Some(mu) = self.mu {
            c.set("mu", mu);
        }
        if let Some(g) = self.force_gamma {
            c.set("force_gamma", g);
        }
        c.set("dealias", self.dealias);
        c.set("write_snapshots", self.write_snapshots);
        c
    }

    pub fn run_id(&self) -> String {
        let digest = Sha256::digest(self.to_config().canonical().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if !(self.a0 >= 0.0 && self.a0.is_finite()) {
            return err(format!("a0 must be non-negative, got {}", self.a0));
        }
        if !(self.k0 > 0.0 && self.lam > 0.0) {
            return err("k0 and lam must be positive".into());
        }
        if self.count < 4 || !self.count.is_multiple_of(2) {
            return err(format!("N must be even and at least 4, got {}", self.count));
        }
        if !(self.length > 0.0 && self.dt > 0.0 && self.tmax >= 0.0 && self.snapshot_interval > 0.0) {
            return err("L, dt and snapshot_interval must be positive, tmax non-negative".into());
        }
        if !is_integer(self.snapshot_interval / self.dt) {
            return err("snapshot_interval must be a multiple of dt".into());
        }
        let lam_modes = self.lam * self.length / (2.0 * PI);
        if !is_integer(lam_modes) || lam_modes.round() < 1.0 {
            return err(format!("lam·L/2π = {lam_modes} is not a positive integer"));
        }
        let k_modes = self.k0 * self.length / (2.0 * PI);
        if !is_integer(k_modes) || k_modes.round() as usize >= self.count / 2 {
            return err(format!("k0·L/2π = {k_modes} is not a resolved ladder index"));
        }
        if let Some(g) = self.force_gamma {
            if g != 1 && g != 2 {
                return err(format!("force_gamma must be 1 or 2, got {g}"));
            }
        }
        if self.models.is_empty() {
            return err("no models requested".into());
        }
        Ok(())
    }

    pub fn params(&self) -> Result<IceParams> {
        let p = IceParams::with_compression(self.pcomp)?;
        p.require_admissible()?;
        Ok(p)
    }

    /// ε = k₀A₀; machine epsilon stands in for a flat wavetrain.
    pub fn steepness(&self) -> f64 {
        (self.k0 * self.a0).max(f64::EPSILON)
    }

    pub fn surface_grid(&self) -> Result<SpectralGrid> {
        SpectralGrid::new(self.length, self.count)
    }

    /// Same point count over εL, so that envelope point j sits at X = εx_j.
    pub fn envelope_grid(&self) -> Result<SpectralGrid> {
        SpectralGrid::new(self.steepness() * self.length, self.count)
    }

    pub fn flow_config(&self) -> FlowConfig {
        FlowConfig { ds: self.ds, direction: Direction::Backward, delta: self.delta, dealias: false }
    }

    pub fn has(&self, m: ModelKind) -> bool {
        self.models.contains(&m)
    }

    fn carrier_index(&self) -> i64 {
        (self.k0 * self.length / (2.0 * PI)).round() as i64
    }

    fn steps_per_snapshot(&self) -> usize {
        (self.snapshot_interval / self.dt).round() as usize
    }

    fn snapshot_count(&self) -> usize {
        (self.tmax / self.snapshot_interval + 1e-9).floor() as usize
    }

    /// Envelope coefficients with the atlas tube μ (default ε) and any forced γ.
    pub fn coefficients(&self) -> Result<DystheCoefficients> {
        let p = self.params()?;
        let eps = self.steepness();
        let mu = self.mu.unwrap_or(eps);
        let atlas = build_curve(p, DEFAULT_K1_RANGE.0, DEFAULT_K1_RANGE.1, DEFAULT_SAMPLES, mu, self.delta)?;
        let c = DystheCoefficients::compute(self.k0, &p, &atlas, mu)?;
        Ok(match self.force_gamma {
            Some(g) => c.with_gamma(g as f64),
            None => c,
        })
    }
}

/// u(x,0) = (B₀/ε)[1 + 0.1cos(λx)] on the envelope grid, so that εu = B₀[1 + 0.1cos(λx)].
pub fn stokes_ic(cfg: &ExperimentConfig) -> Result<EnvelopeState> {
    cfg.validate()?;
    let p = cfg.params()?;
    let w0 = omega_checked(cfg.k0, &p)?;
    let b0 = envelope_amplitude(cfg.a0, cfg.k0, w0);
    let eps = cfg.steepness();
    let u = cfg.surface_grid()?.points().iter().map(|&x| Complex64::new(b0 / eps * (1.0 + 0.1 * (cfg.lam * x).cos()), 0.0)).collect();
    EnvelopeState::new(u, cfg.k0, eps)
}

/// ‖a − b‖₂/‖a‖₂ on a uniform grid.
pub fn relative_l2(reference: &[f64], other: &[f64]) -> f64 {
    let num: f64 = reference.iter().zip(other).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = reference.iter().map(|a| a * a).sum();
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub x: f64,
    pub eta: f64,
}

/// Local maxima and minima of η from sign changes of the spectral slope,
/// refined by a three-point parabola.
pub fn crest_extract(eta: &[f64], grid: &SpectralGrid) -> (Vec<Extremum>, Vec<Extremum>) {
    let n = eta.len();
    let slope = Spectral::new(grid).derivative(eta, 1);
    let (mut crests, mut troughs) = (Vec::new(), Vec::new());
    let refine = |j: usize| {
        let (fm, f0, fp) = (eta[(j + n - 1) % n], eta[j], eta[(j + 1) % n]);
        let curv = fm - 2.0 * f0 + fp;
        let d = if curv != 0.0 { ((fm - fp) / (2.0 * curv)).clamp(-1.0, 1.0) } else { 0.0 };
        let x = (j as f64 + d) * grid.dx;
        Extremum { x: x.rem_euclid(grid.length), eta: f0 - (fm - fp) * d / 4.0 }
    };
    for j in 0..n {
        let (a, b) = (slope[j], slope[(j + 1) % n]);
        let next = (j + 1) % n;
        if a > 0.0 && b <= 0.0 {
            crests.push(refine(if eta[j] >= eta[next] { j } else { next }));
        } else if a < 0.0 && b >= 0.0 {
            troughs.push(refine(if eta[j] <= eta[next] { j } else { next }));
        }
    }
    crests.sort_by(|p, q| p.x.total_cmp(&q.x));
    troughs.sort_by(|p, q| p.x.total_cmp(&q.x));
    (crests, troughs)
}

/// The 𝒫 = 0 weakly nonlinear reference: η₁ from the classical NLS, plus the
/// second-harmonic Stokes correction.
#[derive(Debug, Clone, PartialEq)]
pub struct StokesReference {
    pub eta1: Vec<Complex64>,
    pub k0: f64,
    pub g: f64,
    pub w0: f64,
    pub w1: f64,
    pub w2: f64,
    /// Γ = −ω₀k₀²(4g² − 27gk₀⁴ + 44k₀⁸)/(2(g+k₀⁴)(g−14k₀⁴)).
    pub gamma_coef: f64,
    pub time: f64,
}

impl StokesReference {
    /// (ω₀, ω₀′, ω₀″, Γ) for ω² = gk + k⁵.
    pub fn coefficients(k0: f64, g: f64) -> Result<(f64, f64, f64, f64)> {
        let k4 = k0.powi(4);
        let den = 2.0 * (g + k4) * (g - 14.0 * k4);
        if (g - 14.0 * k4).abs() <= 1e-12 * g.abs().max(k4) || (g + k4).abs() <= 1e-12 * g.abs().max(k4) {
            return Err(Error::ResonantDenominator { k0 });
        }
        let w0 = (g * k0 + k0 * k4).sqrt();
        let dw2 = g + 5.0 * k4;
        let w1 = dw2 / (2.0 * w0);
        let w2 = 20.0 * k0.powi(3) / (2.0 * w0) - dw2 * dw2 / (4.0 * w0.powi(3));
        let gam = -w0 * k0 * k0 * (4.0 * g * g - 27.0 * g * k4 + 44.0 * k4 * k4) / den;
        Ok((w0, w1, w2, gam))
    }

    pub fn new(eta1: Vec<Complex64>, k0: f64, g: f64) -> Result<Self> {
        let (w0, w1, w2, gamma_coef) = Self::coefficients(k0, g)?;
        Ok(Self { eta1, k0, g, w0, w1, w2, gamma_coef, time: 0.0 })
    }

    /// η₁(x,0) = (A₀/2)[1 + 0.1cos(λx)].
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        if cfg.pcomp != 0.0 {
            return Err(Error::Config("the Stokes reference requires pcomp = 0".into()));
        }
        let eta1 =
            cfg.surface_grid()?.points().iter().map(|&x| Complex64::new(cfg.a0 / 2.0 * (1.0 + 0.1 * (cfg.lam * x).cos()), 0.0)).collect();
        Self::new(eta1, cfg.k0, cfg.params()?.g)
    }

    /// η₂ = ω₀²η₁²/(g − 14k₀⁴).
    pub fn eta2(&self) -> Vec<Complex64> {
        let d = self.g - 14.0 * self.k0.powi(4);
        self.eta1.iter().map(|&e| self.w0 * self.w0 * e * e / d).collect()
    }

    /// η = η₁e^{iθ} + η₂e^{2iθ} + c.c. and ξ = ∂ₓ⁻¹Q with θ = k₀x − ω₀t.
    pub fn surface(&self, grid: &SpectralGrid) -> SurfaceState {
        let e2 = self.eta2();
        let mut eta = Vec::with_capacity(grid.count);
        let mut q = Vec::with_capacity(grid.count);
        for (j, &x) in grid.points().iter().enumerate() {
            let ph = Complex64::from_polar(1.0, self.k0 * x - self.w0 * self.time);
            let (a, b) = (self.eta1[j] * ph, e2[j] * ph * ph);
            eta.push(2.0 * (a + b).re);
            q.push(2.0 * self.w0 * (a + 2.0 * b).re);
        }
        let sp = Spectral::new(grid);
        let mut qh = sp.forward(&q);
        qh[0] = Complex64::new(0.0, 0.0);
        for (j, c) in qh.iter_mut().enumerate().skip(1) {
            *c /= I * (j as f64 * grid.dk);
        }
        let nyq = qh.len() - 1;
        qh[nyq] = Complex64::new(0.0, 0.0);
        SurfaceState { eta, xi: sp.inverse(&qh), time: self.time }
    }
}

/// Lawson RK4 for i(∂ₜ+ω₀′∂ₓ)η₁ + (ω₀″/2)∂ₓ²η₁ + Γ|η₁|²η₁ = 0 on the surface grid.
#[derive(Debug, Clone)]
pub struct ReferenceSolver {
    pub dt: f64,
    spectral: Spectral,
    e_half: Vec<Complex64>,
    e_full: Vec<Complex64>,
    gamma_coef: f64,
}

impl ReferenceSolver {
    pub fn new(grid: &SpectralGrid, reference: &StokesReference, dt: f64) -> Self {
        let spectral = Spectral::new(grid);
        let n = grid.count;
        let sym: Vec<f64> = (0..n)
            .map(|j| {
                let k = spectral.wavenumber(j);
                reference.w1 * k + reference.w2 / 2.0 * k * k
            })
            .collect();
        Self {
            dt,
            e_half: sym.iter().map(|&s| Complex64::from_polar(1.0, -s * dt / 2.0)).collect(),
            e_full: sym.iter().map(|&s| Complex64::from_polar(1.0, -s * dt)).collect(),
            gamma_coef: reference.gamma_coef,
            spectral,
        }
    }

    fn nonlinear(&self, h: &[Complex64]) -> Vec<Complex64> {
        let u = self.spectral.inverse_complex(h);
        let nl: Vec<Complex64> = u.iter().map(|&v| I * self.gamma_coef * v.norm_sqr() * v).collect();
        self.spectral.forward_complex(&nl)
    }

    pub fn step(&self, r: &mut StokesReference) -> Result<()> {
        let h = self.dt;
        let n = r.eta1.len();
        let uh = self.spectral.forward_complex(&r.eta1);
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
        if u.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::BlowUp { time: r.time });
        }
        r.eta1 = u;
        r.time += h;
        Ok(())
    }
}

/// One row of `series.csv`; NaN marks a model that was not run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub err_dysthe: f64,
    pub err_nls: f64,
    pub dh_rel_dysthe: f64,
    pub dm_rel_dysthe: f64,
    pub dh_rel_euler: f64,
    /// Error of the Stokes reference, when it was run.
    pub err_reference: f64,
}

/// Amplitudes of envelope sidebands p = 1..=TRACKED_MODES at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeRow {
    pub t: f64,
    pub euler: Vec<f64>,
    pub dysthe: Vec<f64>,
    pub nls: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrestRow {
    pub t: f64,
    pub crest: bool,
    pub x: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Failure {
    pub model: ModelKind,
    pub time: f64,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub run_id: String,
    pub config: ExperimentConfig,
    pub coeffs: DystheCoefficients,
    pub series: Vec<SeriesRow>,
    pub modes: Vec<ModeRow>,
    pub crests: Vec<CrestRow>,
    pub failure: Option<Failure>,
    /// Directory the files were written to, if any.
    pub output: Option<PathBuf>,
}

fn drift(now: f64, start: f64) -> f64 {
    if start == 0.0 {
        now - start
    } else {
        (now - start) / start.abs()
    }
}

/// √(|c₊ₚ|² + |c₋ₚ|²) around `center` in a full spectrum.
fn sideband_amplitudes(full: &[Complex64], center: i64) -> Vec<f64> {
    let n = full.len();
    (1..=TRACKED_MODES as i64)
        .map(|p| (full[index_of(center + p, n)].norm_sqr() + full[index_of(center - p, n)].norm_sqr()).sqrt())
        .collect()
}

struct EnvelopeRun {
    solver: EnvelopeSolver,
    state: EnvelopeState,
    start: Diagnostics,
}

impl EnvelopeRun {
    fn advance(&mut self, steps: usize) -> Result<()> {
        for _ in 0..steps {
            self.solver.step(&mut self.state)?;
        }
        Ok(())
    }
}

fn blow_time(e: &Error, fallback: f64) -> f64 {
    match e {
        Error::BlowUp { time } => *time,
        _ => fallback,
    }
}

/// Paired runs from matched data; also drives the Stokes reference when requested.
fn run_inner(cfg: &ExperimentConfig, out_root: Option<&Path>, with_reference: bool) -> Result<ComparisonReport> {
    cfg.validate()?;
    let p = cfg.params()?;
    let coeffs = cfg.coefficients()?;
    let eps = cfg.steepness();
    let grid = cfg.surface_grid()?;
    let egrid = cfg.envelope_grid()?;
    let sp = Spectral::new(&grid);
    let flow = cfg.flow_config();
    let nf = NormalForm::new(grid, p, cfg.delta)?;
    let run_id = cfg.run_id();
    let output = match out_root {
        Some(root) => {
            let dir = root.join(&run_id);
            std::fs::create_dir_all(&dir)?;
            Some(dir)
        }
        None => None,
    };

    let env0 = stokes_ic(cfg)?;
    let make_env = |model: Model| -> Result<EnvelopeRun> {
        let solver = EnvelopeSolver::new(egrid, coeffs, eps, cfg.dt, model)?;
        let start = solver.diagnostics(&env0);
        Ok(EnvelopeRun { solver, state: env0.clone(), start })
    };
    let mut dysthe = if cfg.has(ModelKind::Dysthe) { Some(make_env(Model::Dysthe)?) } else { None };
    let mut nls = if cfg.has(ModelKind::Nls) { Some(make_env(Model::Nls)?) } else { None };
    let mut euler = if cfg.has(ModelKind::Euler) {
        let opts = EulerOptions { dno: DnoConfig { order: cfg.dno_order }, nonlinear: true, dealias: cfg.dealias };
        let solver = EulerSolver::new(grid, p, cfg.dt, opts)?;
        let state = nf.envelope_to_surface(&env0, &flow)?;
        let start = solver.diagnostics(&state);
        Some((solver, state, start))
    } else {
        None
    };
    let mut reference = if with_reference {
        let r = StokesReference::from_config(cfg)?;
        Some((ReferenceSolver::new(&grid, &r, cfg.dt), r))
    } else {
        None
    };

    let center = cfg.carrier_index();
    let steps = cfg.steps_per_snapshot();
    let mut series = Vec::new();
    let mut modes = Vec::new();
    let mut crests = Vec::new();
    let mut failure = None;
    let nan_modes = vec![f64::NAN; TRACKED_MODES];

    for snap in 0..=cfg.snapshot_count() {
        let t = snap as f64 * cfg.snapshot_interval;
        if snap > 0 {
            let mut fail = |m: ModelKind, e: Error| -> Result<()> {
                match e {
                    Error::BlowUp { .. } => {
                        failure = Some(Failure { model: m, time: blow_time(&e, t) });
                        Ok(())
                    }
                    other => Err(other),
                }
            };
            if let Some(r) = dysthe.as_mut() {
                if let Err(e) = r.advance(steps) {
                    fail(ModelKind::Dysthe, e)?;
                }
            }
            if let Some(r) = nls.as_mut() {
                if let Err(e) = r.advance(steps) {
                    fail(ModelKind::Nls, e)?;
                }
            }
            if let Some((s, st, _)) = euler.as_mut() {
                if let Err(e) = s.advance(st, steps) {
                    fail(ModelKind::Euler, e)?;
                }
            }
            if let Some((s, r)) = reference.as_mut() {
                for _ in 0..steps {
                    if let Err(e) = s.step(r) {
                        fail(ModelKind::Nls, e)?;
                        break;
                    }
                }
            }
            if failure.is_some() {
                log::warn!("run {run_id} stopped at t = {t}: {:?}", failure);
                break;
            }
        }

        let euler_eta = euler.as_ref().map(|(_, st, _)| st.eta.clone());
        let recon = |r: &EnvelopeRun| nf.envelope_to_surface(&r.state, &flow).map(|s| s.eta);
        let err_of = |eta: &[f64]| euler_eta.as_ref().map_or(f64::NAN, |e| relative_l2(e, eta));
        let env_err = |r: &EnvelopeRun| -> Result<f64> {
            if euler_eta.is_some() {
                Ok(err_of(&recon(r)?))
            } else {
                Ok(f64::NAN)
            }
        };
        let (err_dysthe, dh_d, dm_d, modes_d) = match &dysthe {
            Some(r) => {
                let d = r.solver.diagnostics(&r.state);
                let uh = Spectral::new(&egrid).forward_complex(&r.state.physical_envelope());
                (env_err(r)?, drift(d.hamiltonian, r.start.hamiltonian), drift(d.action, r.start.action), sideband_amplitudes(&uh, 0))
            }
            None => (f64::NAN, f64::NAN, f64::NAN, nan_modes.clone()),
        };
        let (err_nls, modes_n) = match &nls {
            Some(r) => {
                let uh = Spectral::new(&egrid).forward_complex(&r.state.physical_envelope());
                (env_err(r)?, sideband_amplitudes(&uh, 0))
            }
            None => (f64::NAN, nan_modes.clone()),
        };
        let (dh_e, modes_e) = match &euler {
            Some((s, st, start)) => {
                let full = sp.full_from_half(&sp.forward(&st.eta));
                let (c, tr) = crest_extract(&st.eta, &grid);
                crests.extend(c.iter().map(|e| CrestRow { t, crest: true, x: e.x, eta: e.eta }));
                crests.extend(tr.iter().map(|e| CrestRow { t, crest: false, x: e.x, eta: e.eta }));
                if let (Some(dir), true) = (&output, cfg.write_snapshots) {
                    Snapshot { length: grid.length, state: st.clone() }.save(dir.join(format!("t{t:.3}.hwav")))?;
                }
                (drift(s.diagnostics(st).hamiltonian, start.hamiltonian), sideband_amplitudes(&full, center))
            }
            None => (f64::NAN, nan_modes.clone()),
        };
        let err_reference = match &reference {
            Some((_, r)) => err_of(&r.surface(&grid).eta),
            None => f64::NAN,
        };
        series.push(SeriesRow { t, err_dysthe, err_nls, dh_rel_dysthe: dh_d, dm_rel_dysthe: dm_d, dh_rel_euler: dh_e, err_reference });
        modes.push(ModeRow { t, euler: modes_e, dysthe: modes_d, nls: modes_n });
    }

    let report = ComparisonReport { run_id, config: cfg.clone(), coeffs, series, modes, crests, failure, output };
    if let Some(dir) = &report.output {
        write_report(&report, dir, with_reference)?;
    }
    Ok(report)
}

/// Run the requested models from matched initial data and record the error series.
///
/// A solver blow-up ends the run early; the partial report carries the failure time.
/// With `out_root` set, files go to `<out_root>/<run-id>/`.
pub fn run_comparison(cfg: &ExperimentConfig, out_root: Option<&Path>) -> Result<ComparisonReport> {
    run_inner(cfg, out_root, false)
}

#[derive(Debug, Clone)]
pub struct ReferenceReport {
    pub comparison: ComparisonReport,
    /// sup_t |e_ref − e_nls| / sup_t ½(e_ref + e_nls).
    pub sup_gap: f64,
}

/// Euler, our NLS and the Stokes reference from the same data at 𝒫 = 0.
pub fn trichtchenko_reference(cfg: &ExperimentConfig, out_root: Option<&Path>) -> Result<ReferenceReport> {
    if cfg.pcomp != 0.0 {
        return Err(Error::Config("the Stokes reference requires pcomp = 0".into()));
    }
    StokesReference::coefficients(cfg.k0, cfg.params()?.g)?;
    let mut c = cfg.clone();
    c.models = vec![ModelKind::Nls, ModelKind::Euler];
    let comparison = run_inner(&c, out_root, true)?;
    let gap = comparison.series.iter().map(|r| (r.err_reference - r.err_nls).abs()).fold(0.0, f64::max);
    let scale = comparison.series.iter().map(|r| 0.5 * (r.err_reference + r.err_nls)).fold(0.0, f64::max);
    Ok(ReferenceReport { comparison, sup_gap: if scale > 0.0 { gap / scale } else { 0.0 } })
}

fn write_report(r: &ComparisonReport, dir: &Path, with_reference: bool) -> Result<()> {
    let mut w = csv::Writer::from_path(dir.join("series.csv"))?;
    w.write_record(["t", "err_dysthe", "err_nls", "dH_rel_dysthe", "dM_rel_dysthe", "dH_rel_euler"])?;
    for s in &r.series {
        w.write_record([s.t, s.err_dysthe, s.err_nls, s.dh_rel_dysthe, s.dm_rel_dysthe, s.dh_rel_euler].iter().map(|v| v.to_string()))?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("crests.csv"))?;
    w.write_record(["t", "kind", "x", "eta"])?;
    for c in &r.crests {
        w.write_record([c.t.to_string(), (if c.crest { "crest" } else { "trough" }).to_string(), c.x.to_string(), c.eta.to_string()])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("sidebands.csv"))?;
    w.write_record(["t", "p", "euler", "dysthe", "nls"])?;
    for m in &r.modes {
        for p in 0..TRACKED_MODES {
            w.write_record([m.t.to_string(), (p + 1).to_string(), m.euler[p].to_string(), m.dysthe[p].to_string(), m.nls[p].to_string()])?;
        }
    }
    w.flush()?;

    if with_reference {
        let mut w = csv::Writer::from_path(dir.join("reference.csv"))?;
        w.write_record(["t", "err_reference", "err_nls"])?;
        for s in &r.series {
            w.write_record([s.t.to_string(), s.err_reference.to_string(), s.err_nls.to_string()])?;
        }
        w.flush()?;
    }

    let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("report.txt"))?);
    writeln!(f, "run_id = {}", r.run_id)?;
    writeln!(f, "# envelope grid: N points over eps*L (X = eps*x), same N and dt as the surface grid")?;
    let c = &r.coeffs;
    writeln!(
        f,
        "# alpha = {} beta = {} gamma = {} w0 = {} w1 = {} w2 = {} w3 = {}",
        c.alpha, c.beta, c.gamma, c.derivs.w0, c.derivs.w1, c.derivs.w2, c.derivs.w3
    )?;
    if let Some(fl) = r.failure {
        writeln!(f, "# failure: {} at t = {}", fl.model, fl.time)?;
    }
    f.write_all(r.config.to_config().canonical().as_bytes())?;
    f.flush()?;
    Ok(())
}

/// Least-squares slope of ln(amplitude) against t over samples with t in [t0, t1].
pub fn fit_growth(samples: &[(f64, f64)], t0: f64, t1: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = samples.iter().filter(|(t, a)| *t >= t0 && *t <= t1 && *a > 0.0).map(|&(t, a)| (t, a.ln())).collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    Some(sxy / sxx)
}

/// Time-ordered (t, amplitude) of sideband `p` for one model.
pub fn sideband_series(report: &ComparisonReport, model: ModelKind, p: usize) -> Vec<(f64, f64)> {
    report
        .modes
        .iter()
        .map(|m| {
            let v = match model {
                ModelKind::Euler => &m.euler,
                ModelKind::Dysthe => &m.dysthe,
                ModelKind::Nls => &m.nls,
            };
            (m.t, v[p - 1])
        })
        .collect()
}

/// Growth rate over the window where the sideband grows from `lo` to `hi`
/// times its initial amplitude.
pub fn linear_window_growth(samples: &[(f64, f64)], lo: f64, hi: f64) -> Option<(f64, f64, f64)> {
    let a0 = samples.first()?.1;
    let t0 = samples.iter().find(|s| s.1 >= lo * a0)?.0;
    let t1 = samples.iter().find(|s| s.1 >= hi * a0)?.0;
    fit_growth(samples, t0, t1).map(|g| (g, t0, t1))
}

/// Sideband index reaching the largest amplitude over the run.
///
/// Absolute peaks, not growth factors: harmonics of the seeded sideband start
/// from zero and would otherwise win by default.
pub fn dominant_mode(samples_by_p: &[Vec<(f64, f64)>]) -> Option<usize> {
    samples_by_p
        .iter()
        .enumerate()
        .filter_map(|(i, s)| {
            let peak = s.iter().map(|v| v.1).filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
            peak.is_finite().then_some((i + 1, peak))
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(p, _)| p)
}

/// Reference ω₀″ and the carrier derivative from the dispersion module at 𝒫 = 0.
pub fn reference_consistency(k0: f64, params: &IceParams) -> Result<(f64, f64)> {
    let (_, _, w2, _) = StokesReference::coefficients(k0, params.g)?;
    Ok((w2, carrier_derivatives(k0, params)?.w2))
}
