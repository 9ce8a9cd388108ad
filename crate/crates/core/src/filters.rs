//! Signal-conditioning filters mapping the sampled error `e_k` to the
//! performance variable `z_k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum FilterSpec {
    /// `z = K_g e`.
    Gain {
        #[serde(rename = "K_g")]
        gain: f64,
    },
    /// `K_g b q / (q² + a₁ q + a₂)`.
    LowPass {
        #[serde(rename = "K_g")]
        gain: f64,
        /// Cutoff [rad/s].
        omega_lp: f64,
        zeta_lp: f64,
    },
    /// HP → ∫ → HP → ∫ → HP → K_g, turning acceleration into a
    /// pseudo-displacement.
    DispEstimator {
        #[serde(rename = "K_g")]
        gain: f64,
        nu_hp: f64,
    },
}

impl FilterSpec {
    pub fn gain(&self) -> f64 {
        match *self {
            FilterSpec::Gain { gain }
            | FilterSpec::LowPass { gain, .. }
            | FilterSpec::DispEstimator { gain, .. } => gain,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.gain();
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::invalid("K_g", format!("must be positive, got {g}")));
        }
        match *self {
            FilterSpec::Gain { .. } => {}
            FilterSpec::LowPass {
                omega_lp, zeta_lp, ..
            } => {
                if !(omega_lp.is_finite() && omega_lp > 0.0) {
                    return Err(Error::invalid("omega_lp", "must be positive"));
                }
                if !(zeta_lp > 0.0 && zeta_lp < 1.0) {
                    return Err(Error::invalid(
                        "zeta_lp",
                        format!("must lie in (0, 1), got {zeta_lp}"),
                    ));
                }
            }
            FilterSpec::DispEstimator { nu_hp, .. } => {
                if !(nu_hp.is_finite() && nu_hp > 0.0) {
                    return Err(Error::invalid("nu_hp", "must be positive"));
                }
            }
        }
        Ok(())
    }
}

/// Realized coefficients of the second-order low-pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowPassCoefficients {
    pub gain: f64,
    pub a1: f64,
    pub a2: f64,
    pub b: f64,
    /// Pole radius.
    pub r: f64,
    /// Pole angle [rad/sample].
    pub theta: f64,
}

impl LowPassCoefficients {
    pub fn dc_gain(&self) -> f64 {
        self.gain * self.b / (1.0 + self.a1 + self.a2)
    }
}

pub fn lowpass_coefficients(
    gain: f64,
    omega_lp: f64,
    zeta_lp: f64,
    sample_period: f64,
) -> Result<LowPassCoefficients> {
    FilterSpec::LowPass {
        gain,
        omega_lp,
        zeta_lp,
    }
    .validate()?;
    if !(sample_period > 0.0) {
        return Err(Error::invalid("T_s", "must be positive"));
    }
    let r = (-zeta_lp * omega_lp * sample_period).exp();
    let theta = omega_lp * sample_period * (1.0 - zeta_lp * zeta_lp).sqrt();
    let a1 = -2.0 * r * theta.cos();
    let a2 = r * r;
    Ok(LowPassCoefficients {
        gain,
        a1,
        a2,
        b: 1.0 + a1 + a2,
        r,
        theta,
    })
}

/// `(q − 1)/(q − p)` with `p = ν/(ν+1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighPass {
    pole: f64,
    x_prev: f64,
    y_prev: f64,
}

impl HighPass {
    pub fn new(nu_hp: f64) -> Self {
        HighPass {
            pole: nu_hp / (nu_hp + 1.0),
            x_prev: 0.0,
            y_prev: 0.0,
        }
    }

    pub fn pole(&self) -> f64 {
        self.pole
    }

    pub fn step(&mut self, x: f64) -> f64 {
        let y = x - self.x_prev + self.pole * self.y_prev;
        self.x_prev = x;
        self.y_prev = y;
        y
    }
}

/// `(T_s/2)(q + 1)/(q − 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trapezoid {
    half_period: f64,
    x_prev: f64,
    y_prev: f64,
}

impl Trapezoid {
    pub fn new(sample_period: f64) -> Self {
        Trapezoid {
            half_period: 0.5 * sample_period,
            x_prev: 0.0,
            y_prev: 0.0,
        }
    }

    pub fn step(&mut self, x: f64) -> f64 {
        let y = self.y_prev + self.half_period * (x + self.x_prev);
        self.x_prev = x;
        self.y_prev = y;
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Biquad {
    c: LowPassCoefficients,
    x_prev: f64,
    y1: f64,
    y2: f64,
}

impl Biquad {
    // z_k = −a₁ z_{k−1} − a₂ z_{k−2} + K_g b e_{k−1}
    fn step(&mut self, x: f64) -> f64 {
        let y = -self.c.a1 * self.y1 - self.c.a2 * self.y2 + self.c.gain * self.c.b * self.x_prev;
        self.x_prev = x;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Estimator {
    hp: [HighPass; 3],
    int: [Trapezoid; 2],
    gain: f64,
}

impl Estimator {
    fn step(&mut self, e: f64) -> f64 {
        let s = self.hp[0].step(e);
        let s = self.int[0].step(s);
        let s = self.hp[1].step(s);
        let s = self.int[1].step(s);
        let s = self.hp[2].step(s);
        self.gain * s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Stages {
    Gain(f64),
    LowPass(Biquad),
    DispEstimator(Estimator),
}

/// A realized conditioning filter with zeroed delay registers.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalFilter {
    spec: FilterSpec,
    stages: Stages,
}

impl SignalFilter {
    pub fn new(spec: FilterSpec, sample_period: f64) -> Result<Self> {
        spec.validate()?;
        if !(sample_period > 0.0) {
            return Err(Error::invalid("T_s", "must be positive"));
        }
        let stages = match spec {
            FilterSpec::Gain { gain } => Stages::Gain(gain),
            FilterSpec::LowPass {
                gain,
                omega_lp,
                zeta_lp,
            } => Stages::LowPass(Biquad {
                c: lowpass_coefficients(gain, omega_lp, zeta_lp, sample_period)?,
                x_prev: 0.0,
                y1: 0.0,
                y2: 0.0,
            }),
            FilterSpec::DispEstimator { gain, nu_hp } => Stages::DispEstimator(Estimator {
                hp: [HighPass::new(nu_hp); 3],
                int: [Trapezoid::new(sample_period); 2],
                gain,
            }),
        };
        Ok(SignalFilter { spec, stages })
    }

    pub fn spec(&self) -> &FilterSpec {
        &self.spec
    }

    /// Advance one sample: `e_k ↦ z_k`.
    pub fn apply(&mut self, e: f64) -> f64 {
        match &mut self.stages {
            Stages::Gain(g) => *g * e,
            Stages::LowPass(b) => b.step(e),
            Stages::DispEstimator(est) => est.step(e),
        }
    }
}
