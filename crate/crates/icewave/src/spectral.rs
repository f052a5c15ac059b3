//! FFT plumbing shared by the solvers.
//!
//! Coefficients are Fourier-series coefficients: `c_p = (1/N) Σ_j f_j e^{-iκ_p x_j}`,
//! so that `f_j = Σ_p c_p e^{iκ_p x_j}`. Real fields use the half spectrum
//! `p = 0..=N/2`; complex fields use the full spectrum in FFT order.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::model::SpectralGrid;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone)]
pub struct Spectral {
    n: usize,
    dk: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    half_k: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("n", &self.n).field("dk", &self.dk).finish()
    }
}

impl Spectral {
    pub fn new(grid: &SpectralGrid) -> Self {
        let n = grid.count;
        let mut cp = FftPlanner::<f64>::new();
        Self {
            n,
            dk: grid.dk,
            fwd: cp.plan_fft_forward(n),
            inv: cp.plan_fft_inverse(n),
            half_k: (0..=n / 2).map(|j| j as f64 * grid.dk).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Non-negative wavenumbers `j·Δκ`, `j = 0..=N/2`.
    pub fn half_wavenumbers(&self) -> &[f64] {
        &self.half_k
    }

    /// Signed wavenumber of full-spectrum index `j` (FFT order).
    pub fn wavenumber(&self, j: usize) -> f64 {
        mode_of(j, self.n) as f64 * self.dk
    }

    pub fn forward(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        let s = 1.0 / self.n as f64;
        buf.truncate(self.n / 2 + 1);
        buf.iter_mut().for_each(|c| *c *= s);
        buf
    }

    pub fn inverse(&self, c: &[Complex64]) -> Vec<f64> {
        let mut buf = self.full_from_half(c);
        buf[0].im = 0.0;
        buf[self.n / 2].im = 0.0;
        self.inv.process(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// Half spectra of two real fields from one complex transform.
    pub fn forward2(&self, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = self.n;
        let mut buf: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
        self.fwd.process(&mut buf);
        let s = 0.5 / n as f64;
        let mut ha = Vec::with_capacity(n / 2 + 1);
        let mut hb = Vec::with_capacity(n / 2 + 1);
        for j in 0..=n / 2 {
            let zj = buf[j];
            let zm = buf[(n - j) % n].conj();
            ha.push((zj + zm) * s);
            hb.push(Complex64::new(0.0, -1.0) * (zj - zm) * s);
        }
        (ha, hb)
    }

    /// Inverse of [`Spectral::forward2`].
    pub fn inverse2(&self, ca: &[Complex64], cb: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let i = Complex64::new(0.0, 1.0);
        let mut buf = vec![ZERO; n];
        let real_edge = |c: Complex64| Complex64::new(c.re, 0.0);
        buf[0] = real_edge(ca[0]) + i * real_edge(cb[0]);
        buf[n / 2] = real_edge(ca[n / 2]) + i * real_edge(cb[n / 2]);
        for j in 1..n / 2 {
            buf[j] = ca[j] + i * cb[j];
            buf[n - j] = ca[j].conj() + i * cb[j].conj();
        }
        self.inv.process(&mut buf);
        buf.into_iter().map(|z| (z.re, z.im)).unzip()
    }

    pub fn forward_complex(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut buf = x.to_vec();
        self.fwd.process(&mut buf);
        let s = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= s);
        buf
    }

    pub fn inverse_complex(&self, c: &[Complex64]) -> Vec<Complex64> {
        let mut buf = c.to_vec();
        self.inv.process(&mut buf);
        buf
    }

    /// Apply a real-field Fourier multiplier `m(k)`, `k ≥ 0`. The Nyquist
    /// entry is kept only when `keep_nyquist` is set.
    pub fn multiply(&self, x: &[f64], keep_nyquist: bool, m: impl Fn(f64) -> Complex64) -> Vec<f64> {
        let mut c = self.forward(x);
        self.scale_half(&mut c, keep_nyquist, m);
        self.inverse(&c)
    }

    /// In-place multiplier on a half spectrum.
    pub fn scale_half(&self, c: &mut [Complex64], keep_nyquist: bool, m: impl Fn(f64) -> Complex64) {
        for (cj, &k) in c.iter_mut().zip(&self.half_k) {
            *cj *= m(k);
        }
        if !keep_nyquist {
            c[self.n / 2] = ZERO;
        }
    }

    /// Spectral derivative of the given order; odd orders drop the Nyquist mode.
    pub fn derivative(&self, x: &[f64], order: u32) -> Vec<f64> {
        let mut c = self.forward(x);
        self.derivative_half(&mut c, order);
        self.inverse(&c)
    }

    pub fn derivative_half(&self, c: &mut [Complex64], order: u32) {
        self.scale_half(c, order.is_multiple_of(2), |k| Complex64::new(0.0, k).powu(order));
    }

    /// `|D|` applied to a real field.
    pub fn abs_d(&self, x: &[f64]) -> Vec<f64> {
        self.multiply(x, true, |k| Complex64::new(k, 0.0))
    }

    /// Expand a half spectrum of a real field into the full FFT-order spectrum.
    pub fn full_from_half(&self, half: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut full = vec![ZERO; n];
        full[..=n / 2].copy_from_slice(half);
        for j in n / 2 + 1..n {
            full[j] = half[n - j].conj();
        }
        full
    }

    pub fn half_from_full(&self, full: &[Complex64]) -> Vec<Complex64> {
        full[..=self.n / 2].to_vec()
    }
}

/// Ladder index `p ∈ [−N/2, N/2−1]` of FFT-order position `j`.
pub fn mode_of(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// FFT-order position of ladder index `p`.
pub fn index_of(p: i64, n: usize) -> usize {
    p.rem_euclid(n as i64) as usize
}

/// Trapezoidal integral over one period: `Δx Σ f_j`.
pub fn periodic_integral(f: &[f64], dx: f64) -> f64 {
    dx * f.iter().sum::<f64>()
}
