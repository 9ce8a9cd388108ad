//! Retrospective cost adaptive control (RCAC).
//!
//! The controller is the strictly proper input-output law
//! `u_c,k = Σ P_i u_{k−i} + Σ Q_i z_{k−i} = φ_k θ`, whose coefficient vector
//! `θ` is re-estimated at every step by recursive least squares against a
//! retrospective cost built around the target model `G_f`.
//!
//! Dimensions are general (`l_u` inputs, `l_z` performance channels), but the
//! target model is a scalar transfer function applied entrywise, so
//! `l_u == l_z` is required.

use std::collections::VecDeque;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `G_f(q) = N / (q^{d_f} (q² − 2 α_f cos(ω_f T_s) q + α_f²))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetModel {
    pub numerator: f64,
    pub delay: usize,
    pub frequency_hz: f64,
    pub pole_radius: f64,
    pub sample_period: f64,
    a1: f64,
    a2: f64,
}

pub fn build_target_model(
    numerator: f64,
    delay: usize,
    frequency_hz: f64,
    pole_radius: f64,
    sample_period: f64,
) -> Result<TargetModel> {
    if numerator != 1.0 && numerator != -1.0 {
        return Err(Error::invalid(
            "N",
            format!("must be +1 or -1, got {numerator}"),
        ));
    }
    if !(pole_radius > 0.0 && pole_radius <= 1.0) {
        return Err(Error::invalid(
            "alpha_f",
            format!("must lie in (0, 1], got {pole_radius}"),
        ));
    }
    if !(sample_period > 0.0 && sample_period.is_finite()) {
        return Err(Error::invalid("T_s", "must be positive"));
    }
    let nyquist = 0.5 / sample_period;
    if !(frequency_hz > 0.0 && frequency_hz < nyquist) {
        return Err(Error::invalid(
            "f_f",
            format!("must lie in (0, {nyquist}) Hz, got {frequency_hz}"),
        ));
    }
    let omega = 2.0 * PI * frequency_hz;
    Ok(TargetModel {
        numerator,
        delay,
        frequency_hz,
        pole_radius,
        sample_period,
        a1: -2.0 * pole_radius * (omega * sample_period).cos(),
        a2: pole_radius * pole_radius,
    })
}

impl TargetModel {
    pub fn relative_degree(&self) -> usize {
        self.delay + 2
    }

    /// Monic denominator, highest power first; length `d_f + 3`.
    pub fn denominator(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.delay + 3];
        d[0] = 1.0;
        d[1] = self.a1;
        d[2] = self.a2;
        d
    }

    /// Linear and constant coefficients of the resonant quadratic.
    pub fn quadratic(&self) -> (f64, f64) {
        (self.a1, self.a2)
    }
}

/// Difference-equation realization of a [`TargetModel`]:
/// `y_k = −a₁ y_{k−1} − a₂ y_{k−2} + N x_{k−d_f−2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetFilter {
    numerator: f64,
    a1: f64,
    a2: f64,
    /// Past inputs, most recent first.
    inputs: VecDeque<f64>,
    y1: f64,
    y2: f64,
}

impl TargetFilter {
    pub fn new(tm: &TargetModel) -> Self {
        TargetFilter {
            numerator: tm.numerator,
            a1: tm.a1,
            a2: tm.a2,
            inputs: VecDeque::from(vec![0.0; tm.relative_degree()]),
            y1: 0.0,
            y2: 0.0,
        }
    }

    /// Output at the current step. Depends only on past inputs.
    pub fn peek(&self) -> f64 {
        let oldest = *self.inputs.back().expect("relative degree is at least 2");
        -self.a1 * self.y1 - self.a2 * self.y2 + self.numerator * oldest
    }

    /// Record the current input and the output returned by [`peek`](Self::peek).
    pub fn commit(&mut self, x: f64, y: f64) {
        self.inputs.pop_back();
        self.inputs.push_front(x);
        self.y2 = self.y1;
        self.y1 = y;
    }

    pub fn step(&mut self, x: f64) -> f64 {
        let y = self.peek();
        self.commit(x, y);
        y
    }
}

/// Fixed-length history of vector samples, most recent first.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    dim: usize,
    buf: VecDeque<DVector<f64>>,
}

impl History {
    pub fn zeros(dim: usize, window: usize) -> Self {
        History {
            dim,
            buf: std::iter::repeat_with(|| DVector::zeros(dim))
                .take(window)
                .collect(),
        }
    }

    /// Scalar history from samples ordered most recent first.
    pub fn from_scalars(recent_first: &[f64]) -> Self {
        History {
            dim: 1,
            buf: recent_first
                .iter()
                .map(|v| DVector::from_element(1, *v))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn window(&self) -> usize {
        self.buf.len()
    }

    pub fn push(&mut self, v: DVector<f64>) {
        debug_assert_eq!(v.len(), self.dim);
        self.buf.pop_back();
        self.buf.push_front(v);
    }

    pub fn iter(&self) -> impl Iterator<Item = &DVector<f64>> {
        self.buf.iter()
    }
}

/// `φ_k = [u_{k−1}ᵀ ⋯ u_{k−l_c}ᵀ z_{k−1}ᵀ ⋯ z_{k−l_c}ᵀ] ⊗ I_{l_u}`.
///
/// The matching coefficient layout is `θ = vec[P₁ ⋯ P_{l_c} Q₁ ⋯ Q_{l_c}]`.
pub fn make_regressor(u_hist: &History, z_hist: &History) -> DMatrix<f64> {
    let l_u = u_hist.dim();
    let row: Vec<f64> = u_hist
        .iter()
        .chain(z_hist.iter())
        .flat_map(|v| v.iter().copied())
        .collect();
    let mut phi = DMatrix::zeros(l_u, row.len() * l_u);
    for (j, r) in row.iter().enumerate() {
        for i in 0..l_u {
            phi[(i, j * l_u + i)] = *r;
        }
    }
    phi
}

pub fn saturate(u_c: f64, u_min: f64, u_max: f64) -> f64 {
    if u_c > u_max {
        u_max
    } else if u_c < u_min {
        u_min
    } else {
        u_c
    }
}

/// Relative asymmetry of P above which a symmetrization is logged.
const ASYMMETRY_TOL: f64 = 1e-12;

/// Coefficient estimate and covariance of the recursive least-squares
/// minimizer of the cumulative retrospective cost.
#[derive(Debug, Clone, PartialEq)]
pub struct RlsState {
    pub theta: DVector<f64>,
    pub p: DMatrix<f64>,
    /// Updates after which P had drifted measurably from symmetric.
    pub symmetrizations: usize,
}

impl RlsState {
    /// `θ₀ = 0`, `P₀ = p₀ I`.
    pub fn new(len: usize, p0: f64) -> Self {
        RlsState {
            theta: DVector::zeros(len),
            p: DMatrix::identity(len, len) * p0,
            symmetrizations: 0,
        }
    }

    /// One RLS step with stacked regressor `Φ = [φ_f; φ]` and weight
    /// `R̄ = diag(I_{l_z}, R_u)`.
    ///
    /// The gain `Γ = R̄ − R̄Φ(P⁻¹ + ΦᵀR̄Φ)⁻¹ΦᵀR̄` is evaluated as the
    /// equivalent `(I + R̄ΦPΦᵀ)⁻¹R̄`, which needs neither P⁻¹ nor R̄⁻¹.
    pub fn update(
        &mut self,
        phi_f: &DMatrix<f64>,
        phi: &DMatrix<f64>,
        u_f: &DVector<f64>,
        z: &DVector<f64>,
        r_u: &DMatrix<f64>,
    ) -> Result<()> {
        let l_z = phi_f.nrows();
        let l_u = phi.nrows();
        let q = l_z + l_u;
        let n = self.theta.len();

        let mut stacked = DMatrix::zeros(q, n);
        stacked.rows_mut(0, l_z).copy_from(phi_f);
        stacked.rows_mut(l_z, l_u).copy_from(phi);

        let mut r_bar = DMatrix::zeros(q, q);
        r_bar.view_mut((0, 0), (l_z, l_z)).fill_with_identity();
        r_bar.view_mut((l_z, l_z), (l_u, l_u)).copy_from(r_u);

        let p_phi_t = &self.p * stacked.transpose();
        let s = &stacked * &p_phi_t;
        let inner = DMatrix::identity(q, q) + &r_bar * s;
        let gamma = inner
            .lu()
            .solve(&r_bar)
            .ok_or(Error::Singular("RLS inner matrix"))?;

        let mut p_next = &self.p - &p_phi_t * gamma * p_phi_t.transpose();
        let asym = (&p_next - p_next.transpose()).amax();
        let scale = p_next.amax().max(f64::MIN_POSITIVE);
        if asym > ASYMMETRY_TOL * scale {
            log::debug!(
                "RLS covariance asymmetry {:.3e}, symmetrizing",
                asym / scale
            );
            self.symmetrizations += 1;
        }
        p_next = (&p_next + p_next.transpose()) * 0.5;

        let mut residual = DVector::zeros(q);
        residual
            .rows_mut(0, l_z)
            .copy_from(&(z - u_f + phi_f * &self.theta));
        residual.rows_mut(l_z, l_u).copy_from(&(phi * &self.theta));

        let correction = &p_next * (stacked.transpose() * (&r_bar * residual));
        self.theta -= correction;
        self.p = p_next;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RcacConfig {
    /// Controller window length `l_c`.
    pub window: usize,
    pub input_dim: usize,
    pub perf_dim: usize,
    pub p0: f64,
    /// `R_u`, `l_u × l_u` positive semidefinite.
    pub control_weight: DMatrix<f64>,
    pub u_min: f64,
    pub u_max: f64,
    pub target: TargetModel,
}

impl RcacConfig {
    pub fn siso(
        window: usize,
        p0: f64,
        control_weight: f64,
        u_min: f64,
        u_max: f64,
        target: TargetModel,
    ) -> Self {
        RcacConfig {
            window,
            input_dim: 1,
            perf_dim: 1,
            p0,
            control_weight: DMatrix::from_element(1, 1, control_weight),
            u_min,
            u_max,
            target,
        }
    }

    /// `l_θ = l_c l_u (l_u + l_z)`.
    pub fn theta_len(&self) -> usize {
        self.window * self.input_dim * (self.input_dim + self.perf_dim)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::invalid("l_c", "must be at least 1"));
        }
        if self.input_dim == 0 || self.input_dim != self.perf_dim {
            return Err(Error::invalid(
                "l_z",
                "a scalar target model needs l_z = l_u ≥ 1",
            ));
        }
        if !(self.p0 > 0.0 && self.p0.is_finite()) {
            return Err(Error::invalid("p0", "must be positive"));
        }
        if !(self.u_min < self.u_max) {
            return Err(Error::invalid("u_min", "must be below u_max"));
        }
        let r = &self.control_weight;
        if r.shape() != (self.input_dim, self.input_dim) {
            return Err(Error::invalid("R_u", "must be l_u × l_u"));
        }
        if (r - r.transpose()).amax() > 0.0 {
            return Err(Error::invalid("R_u", "must be symmetric"));
        }
        let min_eig = r.clone().symmetric_eigenvalues().min();
        if min_eig < -1e-12 * r.amax().max(1.0) {
            return Err(Error::invalid("R_u", "must be positive semidefinite"));
        }
        Ok(())
    }
}

/// Running controller: coefficient estimate, covariance, histories and
/// target-model filter states.
#[derive(Debug, Clone)]
pub struct Rcac {
    config: RcacConfig,
    rls: RlsState,
    u_hist: History,
    z_hist: History,
    phi_filters: Vec<TargetFilter>,
    u_filters: Vec<TargetFilter>,
    enabled: bool,
    adapting: bool,
    steps: u64,
    active_steps: u64,
    saturated_steps: u64,
    last_theta_step: f64,
}

impl Rcac {
    pub fn new(config: RcacConfig) -> Result<Self> {
        config.validate()?;
        let n = config.theta_len();
        let l_u = config.input_dim;
        Ok(Rcac {
            rls: RlsState::new(n, config.p0),
            u_hist: History::zeros(l_u, config.window),
            z_hist: History::zeros(config.perf_dim, config.window),
            phi_filters: vec![TargetFilter::new(&config.target); config.perf_dim * n],
            u_filters: vec![TargetFilter::new(&config.target); config.perf_dim],
            enabled: false,
            adapting: true,
            steps: 0,
            active_steps: 0,
            saturated_steps: 0,
            last_theta_step: 0.0,
            config,
        })
    }

    pub fn config(&self) -> &RcacConfig {
        &self.config
    }

    /// Start closed-loop operation. Target-model filters start from zero.
    pub fn enable(&mut self) {
        self.enabled = true;
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    /// Freeze or resume the coefficient update.
    pub fn set_adaptation(&mut self, on: bool) {
        self.adapting = on;
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.rls.theta
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.rls.p
    }

    pub fn rls(&self) -> &RlsState {
        &self.rls
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// ‖θ_{k+1} − θ_k‖ of the most recent update.
    pub fn last_theta_step(&self) -> f64 {
        self.last_theta_step
    }

    /// Fraction of enabled steps whose commanded input hit a bound.
    pub fn saturation_fraction(&self) -> f64 {
        if self.active_steps == 0 {
            0.0
        } else {
            self.saturated_steps as f64 / self.active_steps as f64
        }
    }

    /// One controller tick given the current performance sample.
    ///
    /// While disabled the output is zero and only the histories advance
    /// (zeros into the input history, `z_k` into the performance history).
    pub fn step(&mut self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let l_u = self.config.input_dim;
        self.steps += 1;
        if !self.enabled {
            let u = DVector::zeros(l_u);
            self.u_hist.push(u.clone());
            self.z_hist.push(z.clone());
            return Ok(u);
        }

        let phi = make_regressor(&self.u_hist, &self.z_hist);

        // φ_f is filtered entrywise; l_z = l_u so it has φ's shape.
        let mut phi_f = DMatrix::zeros(phi.nrows(), phi.ncols());
        for (f, (out, x)) in self
            .phi_filters
            .iter_mut()
            .zip(phi_f.iter_mut().zip(phi.iter()))
        {
            *out = f.step(*x);
        }
        let u_f = DVector::from_iterator(l_u, self.u_filters.iter().map(TargetFilter::peek));

        if self.adapting {
            let before = self.rls.theta.clone();
            self.rls
                .update(&phi_f, &phi, &u_f, z, &self.config.control_weight)?;
            self.last_theta_step = (&self.rls.theta - before).norm();
        }

        let u_c = &phi * &self.rls.theta;
        let (lo, hi) = (self.config.u_min, self.config.u_max);
        let u = u_c.map(|v| saturate(v, lo, hi));

        self.active_steps += 1;
        if u_c.iter().any(|v| *v > hi || *v < lo) {
            self.saturated_steps += 1;
        }

        for ((f, x), y) in self.u_filters.iter_mut().zip(u.iter()).zip(u_f.iter()) {
            f.commit(*x, *y);
        }
        self.u_hist.push(u.clone());
        self.z_hist.push(z.clone());
        Ok(u)
    }

    pub fn step_scalar(&mut self, z: f64) -> Result<f64> {
        Ok(self.step(&DVector::from_element(1, z))?[0])
    }
}
