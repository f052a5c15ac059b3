use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use icewave::dispersion::{k_min, sample};
use icewave::envelope::{EnvelopeSolver, Model};
use icewave::euler::{DnoConfig, EulerOptions, EulerSolver};
use icewave::harness::{run_comparison, stokes_ic, trichtchenko_reference, ExperimentConfig};
use icewave::model::{Config, EnvelopeState, IceParams, Snapshot, SpectralGrid, SurfaceState};
use icewave::normalform::NormalForm;
use icewave::resonance::{build_curve, DEFAULT_DELTA};
use icewave::stability::{bfi_curve, scan, write_bfi_csv, write_scan_csv, StabilityQuery};
use icewave::{Complex64, Error, Result};

#[derive(Parser)]
#[command(name = "icewave", version, about = "Hydroelastic wave toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tabulate ω², ω, phase and group speed.
    Dispersion {
        #[arg(long, default_value_t = 0.0)]
        pcomp: f64,
        #[arg(long, default_value_t = 0.01)]
        kmin: f64,
        #[arg(long, default_value_t = 3.0)]
        kmax: f64,
        #[arg(long, default_value_t = 300)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Resonance curve and tube boundaries.
    Triads {
        #[arg(long, default_value_t = 1.0)]
        pcomp: f64,
        #[arg(long, default_value_t = 0.09)]
        mu: f64,
        #[arg(long, default_value_t = 512)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reconstruct the Euler initial surface of an experiment into a snapshot.
    Reconstruct {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Integrate the Dysthe or NLS envelope model of an experiment.
    RunEnvelope {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "dysthe")]
        model: Model,
        #[arg(long)]
        force_gamma: Option<u8>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Integrate the Euler system from a snapshot.
    RunEuler {
        /// Surface snapshot, or envelope snapshot (η = Re u, ξ = Im u) with --k0/--eps.
        #[arg(long)]
        ic: PathBuf,
        #[arg(long)]
        envelope: bool,
        #[arg(long)]
        k0: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        pcomp: f64,
        #[arg(long, default_value_t = 6)]
        dno_order: usize,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long)]
        tmax: f64,
        /// Steps between snapshots.
        #[arg(long, default_value_t = 1000)]
        snap_every: usize,
        #[arg(long)]
        dealias: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Benjamin-Feir growth rate over λ.
    BfScan {
        #[arg(long, default_value_t = 0.1)]
        a0: f64,
        #[arg(long, default_value_t = 0.9)]
        k0: f64,
        #[arg(long, default_value_t = 1.0)]
        pcomp: f64,
        #[arg(long, default_value_t = 0.1)]
        lam_max: f64,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        /// Tube half-width; ε = k₀A₀ when unset.
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// BFI at k_min over a range of compression.
    BfiCurve {
        #[arg(long, default_value_t = 0.0)]
        pmin: f64,
        #[arg(long, default_value_t = 1.9)]
        pmax: f64,
        #[arg(long, default_value_t = 96)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Paired Dysthe/NLS/Euler runs from matched data.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        force_gamma: Option<u8>,
        /// Also run the 𝒫 = 0 Stokes-expansion reference.
        #[arg(long)]
        reference: bool,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), |x| x.to_string())
}

fn load_experiment(path: &Path, force_gamma: Option<u8>) -> Result<ExperimentConfig> {
    let mut c = Config::load(path)?;
    if let Some(g) = force_gamma {
        c.set("force_gamma", g);
    }
    ExperimentConfig::from_config(&c)
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Dispersion { pcomp, kmin, kmax, samples, out } => {
            let p = IceParams::with_compression(pcomp)?;
            let mut w = csv::Writer::from_writer(sink(&out)?);
            w.write_record(["k", "omega_sq", "omega", "c", "cg"])?;
            for i in 0..samples.max(2) {
                let k = kmin + (kmax - kmin) * i as f64 / (samples.max(2) - 1) as f64;
                let s = sample(k, &p);
                w.write_record([s.k.to_string(), s.omega_sq.to_string(), opt(s.omega), opt(s.c), opt(s.cg)])?;
            }
            w.flush()?;
            eprintln!("k_min = {}", k_min(&p));
        }
        Cmd::Triads { pcomp, mu, samples, out } => {
            let p = IceParams::with_compression(pcomp)?;
            let atlas = build_curve(p, 1e-3, 10.0, samples, mu, DEFAULT_DELTA)?;
            let (lo, hi) = (atlas.offset_curve(-1.0), atlas.offset_curve(1.0));
            let mut w = csv::Writer::from_writer(sink(&out)?);
            w.write_record(["k1", "k3", "k1_lo", "k3_lo", "k1_hi", "k3_hi"])?;
            for i in 0..atlas.curve.len() {
                let (c, a, b) = (atlas.curve[i], lo[i], hi[i]);
                w.write_record([c.0, c.1, a.0, a.1, b.0, b.1].iter().map(|v| v.to_string()))?;
            }
            w.flush()?;
        }
        Cmd::Reconstruct { config, out } => {
            let cfg = load_experiment(&config, None)?;
            let nf = NormalForm::new(cfg.surface_grid()?, cfg.params()?, cfg.delta)?;
            let s = nf.envelope_to_surface(&stokes_ic(&cfg)?, &cfg.flow_config())?;
            Snapshot { length: cfg.length, state: s }.save(out)?;
        }
        Cmd::RunEnvelope { config, model, force_gamma, out } => {
            let cfg = load_experiment(&config, force_gamma)?;
            let solver = EnvelopeSolver::new(cfg.envelope_grid()?, cfg.coefficients()?, cfg.steepness(), cfg.dt, model)?;
            let mut st = stokes_ic(&cfg)?;
            std::fs::create_dir_all(&out)?;
            let mut w = csv::Writer::from_path(out.join("series.csv"))?;
            w.write_record(["t", "H", "M", "I"])?;
            let steps = (cfg.snapshot_interval / cfg.dt).round() as usize;
            let count = (cfg.tmax / cfg.snapshot_interval + 1e-9).floor() as usize;
            let save = |st: &EnvelopeState| {
                let state =
                    SurfaceState { eta: st.u.iter().map(|c| c.re).collect(), xi: st.u.iter().map(|c| c.im).collect(), time: st.time };
                Snapshot { length: cfg.steepness() * cfg.length, state }.save(out.join(format!("t{:.3}.hwav", st.time)))
            };
            for i in 0..=count {
                if i > 0 {
                    for _ in 0..steps {
                        solver.step(&mut st)?;
                    }
                }
                let d = solver.diagnostics(&st);
                w.write_record([st.time, d.hamiltonian, d.action, d.momentum].iter().map(|v| v.to_string()))?;
                save(&st)?;
            }
            w.flush()?;
        }
        Cmd::RunEuler { ic, envelope, k0, eps, pcomp, dno_order, dt, tmax, snap_every, dealias, out } => {
            let p = IceParams::with_compression(pcomp)?;
            let snap = Snapshot::load(&ic)?;
            let (grid, mut st) = if envelope {
                let (k0, eps) = match (k0, eps) {
                    (Some(a), Some(b)) => (a, b),
                    _ => return Err(Error::Config("an envelope initial condition needs --k0 and --eps".into())),
                };
                let n = snap.state.len();
                let grid = SpectralGrid::new(snap.length / eps, n)?;
                let u: Vec<Complex64> = snap.state.eta.iter().zip(&snap.state.xi).map(|(&a, &b)| Complex64::new(a, b)).collect();
                let env = EnvelopeState::new(u, k0, eps)?;
                let nf = NormalForm::new(grid, p, DEFAULT_DELTA)?;
                (grid, nf.envelope_to_surface(&env, &Default::default())?)
            } else {
                (SpectralGrid::new(snap.length, snap.state.len())?, snap.state)
            };
            let opts = EulerOptions { dno: DnoConfig { order: dno_order }, nonlinear: true, dealias };
            let solver = EulerSolver::new(grid, p, dt, opts)?;
            std::fs::create_dir_all(&out)?;
            let mut w = csv::Writer::from_path(out.join("series.csv"))?;
            w.write_record(["t", "H", "I", "V", "max_eta"])?;
            let total = (tmax / dt).round() as usize;
            let mut done = 0;
            loop {
                let d = solver.diagnostics(&st);
                let m = st.eta.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                w.write_record([st.time, d.hamiltonian, d.momentum, d.volume, m].iter().map(|v| v.to_string()))?;
                Snapshot { length: grid.length, state: st.clone() }.save(out.join(format!("t{:.3}.hwav", st.time)))?;
                if done >= total {
                    break;
                }
                let n = snap_every.max(1).min(total - done);
                let r = solver.advance(&mut st, n);
                w.flush()?;
                r?;
                done += n;
            }
            w.flush()?;
        }
        Cmd::BfScan { a0, k0, pcomp, lam_max, samples, mu, out } => {
            let p = IceParams::with_compression(pcomp)?;
            let eps = k0 * a0;
            let mu = mu.unwrap_or(eps);
            let atlas = build_curve(p, 1e-3, 10.0, 512, mu, DEFAULT_DELTA)?;
            let coeffs = icewave::envelope::DystheCoefficients::compute(k0, &p, &atlas, mu)?;
            let q = StabilityQuery::new(a0, k0, 0.0, p, coeffs)?;
            let grid: Vec<f64> = (1..=samples).map(|i| lam_max * i as f64 / samples as f64).collect();
            write_scan_csv(sink(&out)?, &scan(&q, &grid))?;
        }
        Cmd::BfiCurve { pmin, pmax, samples, out } => {
            write_bfi_csv(sink(&out)?, &bfi_curve(pmin, pmax, samples)?)?;
        }
        Cmd::Compare { config, force_gamma, reference, out } => {
            let cfg = load_experiment(&config, force_gamma)?;
            let report = if reference {
                let r = trichtchenko_reference(&cfg, Some(&out))?;
                println!("sup_gap = {}", r.sup_gap);
                r.comparison
            } else {
                run_comparison(&cfg, Some(&out))?
            };
            if let Some(dir) = &report.output {
                println!("{}", dir.display());
            }
            if let Some(f) = report.failure {
                eprintln!("{} blew up at t = {}", f.model, f.time);
                std::process::exit(2);
            }
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
