//! Sampled-data closed loop: the continuous beam is integrated with
//! fixed-step RK4 between controller ticks, the control is held by a
//! zero-order hold, and the output is sampled synchronously.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::beam_model::{OutputMap, SensorKind, StateSpace};
use crate::error::{Error, Result};
use crate::filters::{FilterSpec, SignalFilter};
use crate::rcac::{Rcac, RcacConfig};

/// Unit-amplitude sinusoidal disturbance force.
pub fn disturbance(t: f64, frequency_hz: f64) -> f64 {
    (2.0 * PI * frequency_hz * t).sin()
}

/// `ẋ = f(x, u, d)` for a linear time-invariant plant.
pub trait LinearDynamics {
    fn dim(&self) -> usize;
    fn derivative(&self, x: &DVector<f64>, u: f64, d: f64, out: &mut DVector<f64>);
}

impl LinearDynamics for StateSpace {
    fn dim(&self) -> usize {
        self.states()
    }

    // Top rows of A are [0 I]; only the lower block is multiplied out.
    fn derivative(&self, x: &DVector<f64>, u: f64, d: f64, out: &mut DVector<f64>) {
        let n = self.elements();
        out.rows_mut(0, n).copy_from(&x.rows(n, n));
        let mut lower = out.rows_mut(n, n);
        lower.gemv(1.0, &self.a.rows(n, n), x, 0.0);
        lower.axpy(u, &self.b_u.rows(n, n), 1.0);
        lower.axpy(d, &self.b_d.rows(n, n), 1.0);
    }
}

/// Unstructured `ẋ = A x + B_u u + B_d d`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLti {
    pub a: DMatrix<f64>,
    pub b_u: DVector<f64>,
    pub b_d: DVector<f64>,
}

impl LinearDynamics for DenseLti {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn derivative(&self, x: &DVector<f64>, u: f64, d: f64, out: &mut DVector<f64>) {
        out.gemv(1.0, &self.a, x, 0.0);
        out.axpy(u, &self.b_u, 1.0);
        out.axpy(d, &self.b_d, 1.0);
    }
}

/// Scratch vectors for [`rk4_substep`].
#[derive(Debug, Clone)]
pub struct Rk4Workspace {
    k1: DVector<f64>,
    k2: DVector<f64>,
    k3: DVector<f64>,
    k4: DVector<f64>,
    stage: DVector<f64>,
}

impl Rk4Workspace {
    pub fn new(dim: usize) -> Self {
        Rk4Workspace {
            k1: DVector::zeros(dim),
            k2: DVector::zeros(dim),
            k3: DVector::zeros(dim),
            k4: DVector::zeros(dim),
            stage: DVector::zeros(dim),
        }
    }
}

/// Classical RK4 step with `u` held and `d` evaluated at `t`, `t + h/2`,
/// `t + h`.
pub fn rk4_substep<S: LinearDynamics + ?Sized>(
    sys: &S,
    x: &mut DVector<f64>,
    u: f64,
    t: f64,
    h: f64,
    disturbance_hz: f64,
    ws: &mut Rk4Workspace,
) {
    let d0 = disturbance(t, disturbance_hz);
    let dm = disturbance(t + 0.5 * h, disturbance_hz);
    let d1 = disturbance(t + h, disturbance_hz);

    sys.derivative(x, u, d0, &mut ws.k1);

    ws.stage.copy_from(x);
    ws.stage.axpy(0.5 * h, &ws.k1, 1.0);
    sys.derivative(&ws.stage, u, dm, &mut ws.k2);

    ws.stage.copy_from(x);
    ws.stage.axpy(0.5 * h, &ws.k2, 1.0);
    sys.derivative(&ws.stage, u, dm, &mut ws.k3);

    ws.stage.copy_from(x);
    ws.stage.axpy(h, &ws.k3, 1.0);
    sys.derivative(&ws.stage, u, d1, &mut ws.k4);

    let w = h / 6.0;
    x.axpy(w, &ws.k1, 1.0);
    x.axpy(2.0 * w, &ws.k2, 1.0);
    x.axpy(2.0 * w, &ws.k3, 1.0);
    x.axpy(w, &ws.k4, 1.0);
}

/// Advance `x` across one control period of `n_sub` equal RK4 substeps.
#[allow(clippy::too_many_arguments)]
pub fn integrate_control_period<S: LinearDynamics + ?Sized>(
    sys: &S,
    x: &mut DVector<f64>,
    u_held: f64,
    t0: f64,
    period: f64,
    disturbance_hz: f64,
    n_sub: usize,
    ws: &mut Rk4Workspace,
) {
    let h = period / n_sub as f64;
    for i in 0..n_sub {
        rk4_substep(sys, x, u_held, t0 + i as f64 * h, h, disturbance_hz, ws);
    }
}

pub fn sample_output(om: &OutputMap, x: &DVector<f64>, u: f64, d: f64) -> f64 {
    om.sample(x, u, d)
}

/// `h·ρ(A)` bound kept below the RK4 real-axis stability limit (≈ 2.785).
pub const RK4_STABILITY_BOUND: f64 = 2.5;

/// Substeps per control period: the requested `T_s / T_sim`, refined
/// until `h·ρ(A) ≤` [`RK4_STABILITY_BOUND`].
pub fn substeps_for(ss: &StateSpace, t_s: f64, t_sim: f64) -> Result<usize> {
    let ratio = t_s / t_sim;
    let requested = ratio.round();
    if !(requested >= 1.0) || (ratio - requested).abs() > 1e-9 * ratio {
        return Err(Error::invalid(
            "T_sim",
            format!("T_s = {t_s} is not an integer multiple of T_sim = {t_sim}"),
        ));
    }
    let rho = ss.spectral_radius()?;
    let stable = (t_s * rho / RK4_STABILITY_BOUND).ceil();
    Ok(requested.max(stable) as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopMode {
    OpenLoop,
    ClosedLoop,
}

/// One experiment: plant, sensing, timing, controller and filter.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub state_space: StateSpace,
    pub displacement: OutputMap,
    pub acceleration: OutputMap,
    pub feedback: SensorKind,
    pub disturbance_hz: f64,
    /// Requested RK4 substep [s]; refined automatically if unstable.
    pub t_sim: f64,
    /// Controller period [s].
    pub t_s: f64,
    pub t_end: f64,
    /// Controller enable time [s]; `f64::INFINITY` never enables.
    pub t_enable: f64,
    pub controller: RcacConfig,
    pub filter: FilterSpec,
    pub mode: LoopMode,
    /// Stop once the displacement amplitude changes by < 0.5% over 1 s.
    pub early_exit: bool,
    /// Record θ every this many ticks (0 disables snapshots).
    pub theta_stride: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_s > 0.0 && self.t_s.is_finite()) {
            return Err(Error::invalid("T_s", "must be positive"));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::invalid("t_end", "must be positive"));
        }
        let late = self.t_enable.is_finite() && self.t_enable >= self.t_end;
        if self.t_enable.is_nan() || (self.mode == LoopMode::ClosedLoop && late) {
            return Err(Error::invalid("t_enable", "must precede t_end"));
        }
        if !(self.disturbance_hz >= 0.0 && self.disturbance_hz < 0.5 / self.t_s) {
            return Err(Error::invalid(
                "f_dist",
                format!("must lie in [0, {}) Hz", 0.5 / self.t_s),
            ));
        }
        if self.displacement.kind != SensorKind::Displacement
            || self.acceleration.kind != SensorKind::Acceleration
        {
            return Err(Error::invalid("i_y", "output maps swapped"));
        }
        self.filter.validate()?;
        self.controller.validate()?;
        if self.controller.input_dim != 1 {
            return Err(Error::invalid("l_u", "the beam loop is single-input"));
        }
        Ok(())
    }

    pub fn ticks(&self) -> usize {
        (self.t_end / self.t_s + 1e-9).floor() as usize
    }

    fn enable_tick(&self) -> Option<usize> {
        match self.mode {
            LoopMode::OpenLoop => None,
            LoopMode::ClosedLoop if self.t_enable.is_finite() => {
                Some((self.t_enable.max(0.0) / self.t_s - 1e-9).ceil() as usize)
            }
            LoopMode::ClosedLoop => None,
        }
    }
}

/// Trajectories sampled once per controller tick.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimRecord {
    pub t: Vec<f64>,
    pub y_disp: Vec<f64>,
    pub y_acc: Vec<f64>,
    pub u: Vec<f64>,
    pub d: Vec<f64>,
    pub z: Vec<f64>,
    /// ‖θ_{k+1} − θ_k‖ per tick (zero while disabled).
    pub theta_step: Vec<f64>,
    /// `(t, θ)` every `theta_stride` ticks once enabled.
    pub theta_snapshots: Vec<(f64, Vec<f64>)>,
    pub saturation_fraction: f64,
    pub substeps: usize,
    pub symmetrizations: usize,
}

impl SimRecord {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// `t,y_disp,y_acc,u,d,z` with round-trip float formatting.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.len() + 1));
        s.push_str("t,y_disp,y_acc,u,d,z\n");
        for i in 0..self.len() {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.t[i], self.y_disp[i], self.y_acc[i], self.u[i], self.d[i], self.z[i]
            ));
        }
        s
    }
}

fn finite(tick: usize, signal: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { tick, signal })
    }
}

const EARLY_EXIT_WINDOW: f64 = 1.0;
const EARLY_EXIT_TOL: f64 = 0.005;

fn window_peak(series: &[f64]) -> f64 {
    series.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Run one sampled-data experiment.
///
/// Each tick `k`: sample `y_k` (feedthrough uses the input currently held,
/// `u_{k−1}`), form `e_k = −y_k`, advance the conditioning filter to get
/// `z_k`, step the controller (which outputs zero until enabled), then hold
/// `u_k` over the next period.
pub fn run_simulation(cfg: &SimConfig) -> Result<SimRecord> {
    cfg.validate()?;
    let ss = &cfg.state_space;
    let n_sub = substeps_for(ss, cfg.t_s, cfg.t_sim)?;
    let n_ticks = cfg.ticks();
    let enable_tick = cfg.enable_tick();

    let mut filter = SignalFilter::new(cfg.filter, cfg.t_s)?;
    let mut ctrl = Rcac::new(cfg.controller.clone())?;
    let mut ws = Rk4Workspace::new(ss.states());
    let mut x = DVector::zeros(ss.states());
    let mut u_held = 0.0;

    let mut rec = SimRecord {
        substeps: n_sub,
        ..SimRecord::default()
    };
    let window_ticks = (EARLY_EXIT_WINDOW / cfg.t_s).round() as usize;

    for k in 0..=n_ticks {
        let t = k as f64 * cfg.t_s;
        let d = disturbance(t, cfg.disturbance_hz);
        let y_disp = finite(k, "y_disp", cfg.displacement.sample(&x, u_held, d))?;
        let y_acc = finite(k, "y_acc", cfg.acceleration.sample(&x, u_held, d))?;
        let y = match cfg.feedback {
            SensorKind::Displacement => y_disp,
            SensorKind::Acceleration => y_acc,
        };
        let z = finite(k, "z", filter.apply(-y))?;

        if Some(k) == enable_tick {
            ctrl.enable();
        }
        let u = finite(k, "u", ctrl.step_scalar(z)?)?;

        rec.t.push(t);
        rec.y_disp.push(y_disp);
        rec.y_acc.push(y_acc);
        rec.u.push(u);
        rec.d.push(d);
        rec.z.push(z);
        rec.theta_step.push(if ctrl.is_enabled() {
            ctrl.last_theta_step()
        } else {
            0.0
        });
        if ctrl.is_enabled() && cfg.theta_stride > 0 && k % cfg.theta_stride == 0 {
            rec.theta_snapshots
                .push((t, ctrl.theta().iter().copied().collect()));
        }

        if cfg.early_exit {
            if let Some(start) = enable_tick {
                let since = k.saturating_sub(start);
                if since >= 2 * window_ticks && since % window_ticks == 0 {
                    let len = rec.y_disp.len();
                    let last = window_peak(&rec.y_disp[len - window_ticks..]);
                    let prev = window_peak(&rec.y_disp[len - 2 * window_ticks..len - window_ticks]);
                    if prev > 0.0 && ((last - prev) / prev).abs() < EARLY_EXIT_TOL {
                        break;
                    }
                }
            }
        }

        if k < n_ticks {
            integrate_control_period(
                ss,
                &mut x,
                u,
                t,
                cfg.t_s,
                cfg.disturbance_hz,
                n_sub,
                &mut ws,
            );
            if !x.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite {
                    tick: k,
                    signal: "state",
                });
            }
        }
        u_held = u;
    }

    rec.saturation_fraction = ctrl.saturation_fraction();
    rec.symmetrizations = ctrl.rls().symmetrizations;
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disturbance_values() {
        assert_eq!(disturbance(0.0, 20.0), 0.0);
        assert!((disturbance(0.0125, 20.0) - 1.0).abs() < 1e-15);
        assert!(disturbance(1.0 / 160.0, 80.0).abs() < 1e-12);
    }

    #[test]
    fn zero_system_is_identity() {
        let sys = DenseLti {
            a: DMatrix::zeros(3, 3),
            b_u: DVector::zeros(3),
            b_d: DVector::zeros(3),
        };
        let mut x = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        let x0 = x.clone();
        let mut ws = Rk4Workspace::new(3);
        rk4_substep(&sys, &mut x, 5.0, 0.3, 1e-3, 20.0, &mut ws);
        assert_eq!(x, x0);
    }

    #[test]
    fn scalar_decay_matches_exponential() {
        let sys = DenseLti {
            a: DMatrix::from_element(1, 1, -1.0),
            b_u: DVector::zeros(1),
            b_d: DVector::zeros(1),
        };
        let h = 1e-4;
        let mut x = DVector::from_element(1, 1.0);
        let mut ws = Rk4Workspace::new(1);
        rk4_substep(&sys, &mut x, 0.0, 0.0, h, 0.0, &mut ws);
        // Local error of RK4 is h⁵/120.
        assert!((x[0] - (-h).exp()).abs() < h.powi(5) / 100.0);
    }

    #[test]
    fn oscillator_returns_after_one_period() {
        let w = 2.0 * PI * 10.0;
        let sys = DenseLti {
            a: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -w * w, 0.0]),
            b_u: DVector::zeros(2),
            b_d: DVector::zeros(2),
        };
        let h: f64 = 1e-4;
        let steps = (0.1 / h).round() as usize;
        let mut x = DVector::from_vec(vec![1.0, 0.0]);
        let mut ws = Rk4Workspace::new(2);
        for i in 0..steps {
            rk4_substep(&sys, &mut x, 0.0, i as f64 * h, h, 0.0, &mut ws);
        }
        assert!((x[0] - 1.0).abs() < 1e-8);
        assert!((x[1] / w).abs() < 1e-8);
    }

    #[test]
    fn zero_input_keeps_rest() {
        let sys = DenseLti {
            a: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -4.0, -0.1]),
            b_u: DVector::from_vec(vec![0.0, 1.0]),
            b_d: DVector::zeros(2),
        };
        let mut x = DVector::zeros(2);
        let mut ws = Rk4Workspace::new(2);
        integrate_control_period(&sys, &mut x, 0.0, 0.0, 2.5e-3, 20.0, 25, &mut ws);
        assert_eq!(x.amax(), 0.0);
    }
}
