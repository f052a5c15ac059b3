use icewave::dispersion::omega;
use icewave::model::{EnvelopeState, IceParams, SpectralGrid};
use icewave::normalform::{FlowConfig, NormalForm};
use icewave::spectral::Spectral;
use icewave::Complex64;
use std::f64::consts::PI;

fn harmonic_amplitudes(k0: f64, a0: f64, pc: f64) -> (f64, Complex64, Complex64) {
    let p = IceParams::with_compression(pc).unwrap();
    let grid = SpectralGrid::new(2.0 * PI * 10.0 / k0, 128).unwrap();
    let nf = NormalForm::new(grid, p, 1e-6).unwrap();
    let w0 = omega(k0, &p).unwrap();
    let eps = k0 * a0;
    let b0 = a0 * (w0 / (2.0 * k0)).sqrt();
    let env = EnvelopeState::new(vec![Complex64::new(b0 / eps, 0.0); 128], k0, eps).unwrap();
    let s = nf.envelope_to_surface(&env, &FlowConfig { ds: 0.05, ..Default::default() }).unwrap();
    let c = Spectral::new(&grid).forward(&s.eta);
    (w0, c[10], c[20])
}

#[test]
fn stokes_second_harmonic() {
    let (k0, a0) = (0.9, 0.05);
    let (w0, c1, c2) = harmonic_amplitudes(k0, a0, 0.0);
    let eta1 = a0 / 2.0;
    let eta2 = w0 * w0 * eta1 * eta1 / (1.0 - 14.0 * k0.powi(4));
    println!("c1 {c1} expected {eta1}; c2 {c2} expected {eta2}");
    assert!((c1.norm() / eta1 - 1.0).abs() < 0.05);
    assert!((c2.re / eta2 - 1.0).abs() < 0.1, "{} vs {}", c2.re, eta2);
}
