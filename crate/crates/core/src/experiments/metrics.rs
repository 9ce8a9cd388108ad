//! Steady-state amplitude and attenuation.

use serde::Serialize;

use crate::error::{Error, Result};

/// Default trailing window for steady-state amplitudes [s].
pub const STEADY_STATE_WINDOW: f64 = 0.5;

/// Largest `|value|` over samples with `t ≥ t_last − window`.
pub fn steady_state_amplitude(series: &[f64], t: &[f64], window: f64) -> Result<f64> {
    if series.len() != t.len() {
        return Err(Error::invalid("series", "length differs from time grid"));
    }
    let (Some(&t0), Some(&t_last)) = (t.first(), t.last()) else {
        return Err(Error::invalid("series", "empty"));
    };
    if !(window > 0.0) {
        return Err(Error::invalid("window", "must be positive"));
    }
    let span = t_last - t0;
    let eps = 1e-9 * t_last.abs().max(1.0);
    if window > span + eps {
        return Err(Error::invalid(
            "window",
            format!("{window} s exceeds the {span} s series span"),
        ));
    }
    let start = t_last - window - eps;
    Ok(series
        .iter()
        .zip(t)
        .filter(|(_, ti)| **ti >= start)
        .fold(0.0, |m, (v, _)| m.max(v.abs())))
}

/// `20 log₁₀(y_ol / y_cl)`. A zero closed-loop amplitude yields `+∞`.
pub fn attenuation_db(y_ol: f64, y_cl: f64) -> f64 {
    if y_cl == 0.0 {
        f64::INFINITY
    } else {
        20.0 * (y_ol / y_cl).log10()
    }
}

/// Open- versus closed-loop steady-state displacement amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metric {
    pub y_ol: f64,
    pub y_cl: f64,
    pub ratio: f64,
    pub attenuation_db: f64,
    /// Set when `y_cl = 0` and the attenuation is the `+∞` sentinel.
    pub unbounded: bool,
}

impl Metric {
    pub fn new(y_ol: f64, y_cl: f64) -> Self {
        let unbounded = y_cl == 0.0;
        Metric {
            y_ol,
            y_cl,
            ratio: if unbounded {
                f64::INFINITY
            } else {
                y_ol / y_cl
            },
            attenuation_db: attenuation_db(y_ol, y_cl),
            unbounded,
        }
    }
}
