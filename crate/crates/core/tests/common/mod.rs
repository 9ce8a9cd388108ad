//! Test-side oracles, written independently of the library's recursions.
#![allow(dead_code)]

use nalgebra::{Complex, DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use rcac_beam::beam_model::{
    build_beam, build_state_space, BeamParams, SecondOrderModel, StateSpace,
};
use rcac_beam::rcac::{build_target_model, Rcac, RcacConfig, TargetModel};
use rcac_beam::simulation::{rk4_substep, Rk4Workspace};

/// Impulse response of `num(q)/den(q)` (both highest power first, `den`
/// monic) by polynomial long division in `q⁻¹`.
pub fn long_division(num: &[f64], den: &[f64], terms: usize) -> Vec<f64> {
    assert_eq!(den[0], 1.0);
    let shift = den.len() - num.len();
    let mut h = vec![0.0; terms];
    for k in 0..terms {
        let mut acc = if k >= shift && k - shift < num.len() {
            num[k - shift]
        } else {
            0.0
        };
        for j in 1..den.len().min(k + 1) {
            acc -= den[j] * h[k - j];
        }
        h[k] = acc;
    }
    h
}

pub fn target_impulse(tm: &TargetModel, terms: usize) -> Vec<f64> {
    long_division(&[tm.numerator], &tm.denominator(), terms)
}

/// `Σ_k c_k z^{−k}` evaluated at `z = e^{jω}`.
pub fn eval_series_in_qinv(coeffs: &[f64], omega: f64) -> Complex<f64> {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| Complex::from_polar(*c, -omega * k as f64))
        .sum()
}

/// `num(z)/den(z)` for coefficient vectors in `z⁻¹`.
pub fn freq_response(num: &[f64], den: &[f64], omega: f64) -> Complex<f64> {
    eval_series_in_qinv(num, omega) / eval_series_in_qinv(den, omega)
}

/// Least-squares fit of `a sin ωt + b cos ωt + c`; returns amplitude and
/// phase of the sinusoid.
pub fn fit_sinusoid(y: &[f64], t: &[f64], freq_hz: f64) -> (f64, f64) {
    let w = 2.0 * std::f64::consts::PI * freq_hz;
    let n = y.len();
    let x = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => (w * t[i]).sin(),
        1 => (w * t[i]).cos(),
        _ => 1.0,
    });
    let rhs = DVector::from_column_slice(y);
    let coef = (x.transpose() * &x)
        .cholesky()
        .expect("well-posed fit")
        .solve(&(x.transpose() * rhs));
    (coef[0].hypot(coef[1]), coef[1].atan2(coef[0]))
}

/// Everything the controller saw and emitted on an open-loop drive.
pub struct RcacTrace {
    pub config: RcacConfig,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    /// θ after each step.
    pub theta: Vec<DVector<f64>>,
    pub covariance: Vec<DMatrix<f64>>,
}

pub fn random_rcac_config(rng: &mut StdRng) -> RcacConfig {
    let window = rng.random_range(1..=6);
    let d_f = rng.random_range(0..=4);
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let tm = build_target_model(sign, d_f, rng.random_range(5.0..150.0), 0.95, 2.5e-3).unwrap();
    RcacConfig::siso(
        window,
        10f64.powf(rng.random_range(-1.0..1.0)),
        10f64.powf(rng.random_range(-1.0..1.0)),
        -2.5,
        2.5,
        tm,
    )
}

pub fn drive_rcac(config: RcacConfig, z: &[f64]) -> RcacTrace {
    let mut ctrl = Rcac::new(config.clone()).unwrap();
    ctrl.enable();
    let mut u = Vec::new();
    let mut theta = Vec::new();
    let mut covariance = Vec::new();
    for &zk in z {
        u.push(ctrl.step_scalar(zk).unwrap());
        theta.push(ctrl.theta().clone());
        covariance.push(ctrl.covariance().clone());
    }
    RcacTrace {
        config,
        z: z.to_vec(),
        u,
        theta,
        covariance,
    }
}

fn past(series: &[f64], k: usize, lag: usize) -> f64 {
    if lag <= k {
        series[k - lag]
    } else {
        0.0
    }
}

/// Regressor row at step `k`: `[u_{k−1} … u_{k−l_c}, z_{k−1} … z_{k−l_c}]`.
pub fn regressor_row(u: &[f64], z: &[f64], k: usize, window: usize) -> Vec<f64> {
    (1..=window)
        .map(|i| past(u, k, i))
        .chain((1..=window).map(|i| past(z, k, i)))
        .collect()
}

/// Minimizer of the cumulative retrospective cost over steps `0..=k`,
/// solved from the normal equations.
pub fn batch_theta(trace: &RcacTrace, k: usize) -> DVector<f64> {
    let cfg = &trace.config;
    let n = cfg.theta_len();
    let r_u = cfg.control_weight[(0, 0)];
    let h = target_impulse(&cfg.target, k + 1);

    let rows: Vec<Vec<f64>> = (0..=k)
        .map(|i| regressor_row(&trace.u, &trace.z, i, cfg.window))
        .collect();
    let mut info = DMatrix::identity(n, n) / cfg.p0;
    let mut rhs = DVector::zeros(n);
    for i in 0..=k {
        let mut phi_f = DVector::zeros(n);
        let mut u_f = 0.0;
        for j in 0..=i {
            phi_f += DVector::from_column_slice(&rows[i - j]) * h[j];
            u_f += h[j] * trace.u[i - j];
        }
        let phi = DVector::from_column_slice(&rows[i]);
        info += &phi_f * phi_f.transpose() + &phi * phi.transpose() * r_u;
        rhs -= &phi_f * (trace.z[i] - u_f);
    }
    info.cholesky()
        .expect("information matrix is SPD")
        .solve(&rhs)
}

pub fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let scale = b.norm().max(a.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// Worst relative mismatch between recursive and batch θ over `cases`
/// random sequences of at most 50 steps.
pub fn rls_oracle_worst(seed: u64, cases: usize) -> f64 {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let cfg = random_rcac_config(&mut rng);
        let len = rng.random_range(10..=50);
        let z: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let trace = drive_rcac(cfg, &z);
        for k in 0..len {
            worst = worst.max(rel_err(&trace.theta[k], &batch_theta(&trace, k)));
        }
    }
    worst
}

pub fn undamped_beam() -> (SecondOrderModel, StateSpace) {
    let p = BeamParams {
        alpha: 0.0,
        beta: 0.0,
        ..BeamParams::default()
    };
    let (_, model) = build_beam(&p).unwrap();
    let ss = build_state_space(&model, 12, 5).unwrap();
    (model, ss)
}

/// Relative energy drift of the free undamped beam released from the
/// static tip-load shape, integrated with RK4 at step `h` for `t_end`.
pub fn energy_drift(h: f64, t_end: f64) -> f64 {
    let (model, ss) = undamped_beam();
    let n = model.elements();
    let mut tip = DVector::zeros(n);
    tip[n - 1] = 1.0;
    let w0 = model.stiffness.clone().cholesky().unwrap().solve(&tip);
    let w0 = &w0 * (1e-3 / w0[n - 1]);
    let mut x = DVector::zeros(2 * n);
    x.rows_mut(0, n).copy_from(&w0);

    let e0 = model.energy(&x);
    let mut ws = Rk4Workspace::new(2 * n);
    let steps = (t_end / h).round() as usize;
    let mut worst: f64 = 0.0;
    for i in 0..steps {
        rk4_substep(&ss, &mut x, 0.0, i as f64 * h, h, 0.0, &mut ws);
        worst = worst.max(((model.energy(&x) - e0) / e0).abs());
    }
    worst
}

/// Undamped natural frequencies [rad/s] and M-orthonormal mode shapes,
/// from the Cholesky-reduced symmetric eigenproblem.
pub fn undamped_modes(model: &SecondOrderModel) -> (Vec<f64>, DMatrix<f64>) {
    let l = model.mass.clone().cholesky().unwrap().l();
    let l_inv = l.clone().try_inverse().unwrap();
    let reduced = &l_inv * &model.stiffness * l_inv.transpose();
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let eig = reduced.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]));
    let omegas = order.iter().map(|&i| eig.eigenvalues[i].sqrt()).collect();
    let shapes = l_inv.transpose() * eig.eigenvectors.select_columns(&order);
    (omegas, shapes)
}

/// Undamped beam released from the mode shape closest to `omega_target`;
/// returns the state at `t_end` with RK4 step `h` and the mode frequency.
pub fn free_mode_state(h: f64, t_end: f64, omega_target: f64) -> (DVector<f64>, f64) {
    let (model, ss) = undamped_beam();
    let n = model.elements();
    let (omegas, shapes) = undamped_modes(&model);
    let k = (0..n)
        .min_by(|a, b| {
            (omegas[*a] - omega_target)
                .abs()
                .total_cmp(&(omegas[*b] - omega_target).abs())
        })
        .unwrap();
    let mut x = DVector::zeros(2 * n);
    x.rows_mut(0, n).copy_from(&shapes.column(k));
    let mut ws = Rk4Workspace::new(2 * n);
    let steps = (t_end / h).round() as usize;
    for i in 0..steps {
        rk4_substep(&ss, &mut x, 0.0, i as f64 * h, h, 0.0, &mut ws);
    }
    (x, omegas[k])
}

/// Single-mode exact solution `w(t) = v cos ωt`, `ẇ = −ω v sin ωt`.
pub fn free_mode_exact(t: f64, omega_target: f64) -> DVector<f64> {
    let (model, _) = undamped_beam();
    let n = model.elements();
    let (omegas, shapes) = undamped_modes(&model);
    let k = (0..n)
        .min_by(|a, b| {
            (omegas[*a] - omega_target)
                .abs()
                .total_cmp(&(omegas[*b] - omega_target).abs())
        })
        .unwrap();
    let w = omegas[k];
    let mut x = DVector::zeros(2 * n);
    x.rows_mut(0, n)
        .copy_from(&(shapes.column(k) * (w * t).cos()));
    x.rows_mut(n, n)
        .copy_from(&(shapes.column(k) * (-w * (w * t).sin())));
    x
}

/// Least-squares slope of `log err` against `log h`, errors measured
/// against the closed-form single-mode solution.
pub fn convergence_slope(steps: &[f64], t_end: f64) -> (f64, Vec<f64>) {
    let exact = free_mode_exact(t_end, CONVERGENCE_OMEGA);
    let errs: Vec<f64> = steps
        .iter()
        .map(|&h| (free_mode_state(h, t_end, CONVERGENCE_OMEGA).0 - &exact).norm() / exact.norm())
        .collect();
    let xs: Vec<f64> = steps.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    (num / den, errs)
}

/// Mode used by the convergence study [rad/s].
pub const CONVERGENCE_OMEGA: f64 = 5000.0;

/// Step sizes with `h·ω ≈ 0.2, 0.1, 0.05` for that mode; the largest is
/// still inside the RK4 stability region of the whole undamped beam.
pub const CONVERGENCE_STEPS: [f64; 3] = [4e-5, 2e-5, 1e-5];
