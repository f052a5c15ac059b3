use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("compression {0} is not admissible for time stepping (requires 0 <= P < 2)")]
    Inadmissible(f64),
    #[error("evanescent mode: omega^2 <= 0 at k = {k}")]
    Evanescent { k: f64 },
    #[error("resonance curve bracketing failed at k1 = {k1}")]
    CurveConstruction { k1: f64 },
    #[error("ambiguous gamma: fraction {fraction} of probes inside the tube")]
    AmbiguousGamma { fraction: f64 },
    #[error("small divisor {value:e} at triad ({k1}, {k2}, {k3})")]
    SmallDivisor { k1: f64, k2: f64, k3: f64, value: f64 },
    #[error("degenerate carrier: 2 omega(k0) = omega(2 k0) at k0 = {k0}")]
    DegenerateCarrier { k0: f64 },
    #[error("resonant denominator in the Stokes reference at k0 = {k0}")]
    ResonantDenominator { k0: f64 },
    #[error("configuration: {0}")]
    Config(String),
    #[error("solution blew up; last valid time {time}")]
    BlowUp { time: f64 },
    #[error("snapshot format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
