//! Lumped-parameter cantilever beam.
//!
//! The beam is cut into `n_b` rigid elements joined by rotational springs.
//! Element `i` (1-based, counted from the clamp) has tip displacement `w_i`.
//! The resulting second-order model `M ẅ + C_R ẇ + K w = f` is recast as a
//! first-order state space with `x = [w; ẇ]`.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, Schur};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest element count for which every row pattern of the stiffness
/// stencil is distinct.
pub const MIN_ELEMENTS: usize = 5;

/// Physical description of the beam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamParams {
    /// Length [m].
    #[serde(rename = "L")]
    pub length: f64,
    /// Cross-section width [m].
    #[serde(rename = "b")]
    pub width: f64,
    /// Cross-section height [m].
    #[serde(rename = "h")]
    pub height: f64,
    /// Total mass [kg].
    #[serde(rename = "m")]
    pub mass: f64,
    /// Young's modulus [N/m²].
    #[serde(rename = "E")]
    pub youngs_modulus: f64,
    /// Rayleigh mass-proportional coefficient [1/s].
    pub alpha: f64,
    /// Rayleigh stiffness-proportional coefficient [s].
    pub beta: f64,
    /// Number of lumped elements.
    #[serde(rename = "n_b")]
    pub elements: usize,
}

impl Default for BeamParams {
    /// Aluminium strip, 0.5 m × 50 mm × 1 mm, 70 g, 20 elements.
    fn default() -> Self {
        BeamParams {
            length: 0.5,
            width: 0.05,
            height: 0.001,
            mass: 0.07,
            youngs_modulus: 69e9,
            alpha: 1.5,
            beta: 2.5e-4,
            elements: 20,
        }
    }
}

impl BeamParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("L", self.length),
            ("b", self.width),
            ("h", self.height),
            ("m", self.mass),
            ("E", self.youngs_modulus),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(
                    name,
                    format!("must be non-negative, got {v}"),
                ));
            }
        }
        if self.elements < MIN_ELEMENTS {
            return Err(Error::invalid(
                "n_b",
                format!(
                    "need at least {MIN_ELEMENTS} elements, got {}",
                    self.elements
                ),
            ));
        }
        Ok(())
    }
}

/// Per-element constants derived from [`BeamParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LumpedConstants {
    /// ΔL = L / n_b [m].
    pub element_length: f64,
    /// Δm = m / n_b [kg].
    pub element_mass: f64,
    /// K_φ = E b h³ / (4 ΔL) [N·m].
    pub rotational_stiffness: f64,
    /// Diagonal inertia coefficient γ₁ [kg].
    pub gamma1: f64,
    /// Off-diagonal inertia coefficient γ₂ [kg].
    pub gamma2: f64,
}

pub fn derive_constants(p: &BeamParams) -> Result<LumpedConstants> {
    p.validate()?;
    let n = p.elements as f64;
    let dl = p.length / n;
    let dm = p.mass / n;
    let k_phi = p.youngs_modulus * p.width * p.height.powi(3) / (4.0 * dl);
    let aspect = 1.0 + (p.height / dl).powi(2);
    let gamma1 = dm / 2.0 * (1.0 + aspect / 3.0);
    let gamma2 = dm / 4.0 * (1.0 - aspect / 3.0);
    if gamma1 <= 2.0 * gamma2.abs() {
        // Only reachable for elements much thicker than long.
        return Err(Error::invalid(
            "h",
            format!(
                "element aspect h/ΔL = {} leaves M indefinite",
                p.height / dl
            ),
        ));
    }
    Ok(LumpedConstants {
        element_length: dl,
        element_mass: dm,
        rotational_stiffness: k_phi,
        gamma1,
        gamma2,
    })
}

/// `M ẅ + C_R ẇ + K w = f`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderModel {
    pub mass: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    pub damping: DMatrix<f64>,
}

impl SecondOrderModel {
    pub fn elements(&self) -> usize {
        self.mass.nrows()
    }

    /// ½ ẇᵀ M ẇ + ½ wᵀ K w for a first-order state `x = [w; ẇ]`.
    pub fn energy(&self, x: &DVector<f64>) -> f64 {
        let n = self.elements();
        let w = x.rows(0, n);
        let v = x.rows(n, n);
        0.5 * (v.dot(&(&self.mass * v)) + w.dot(&(&self.stiffness * w)))
    }
}

/// Integer stencil of the stiffness matrix before scaling by K_φ/ΔL².
pub fn stiffness_stencil(n: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for (offset, c) in [(-2i64, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)] {
            let j = i as i64 + offset;
            if (0..n as i64).contains(&j) {
                s[(i, j as usize)] = c;
            }
        }
    }
    // Free-end rows: the last two joints have fewer neighbours.
    s[(n - 2, n - 2)] = 5.0;
    s[(n - 2, n - 1)] = -2.0;
    s[(n - 1, n - 2)] = -2.0;
    s[(n - 1, n - 1)] = 1.0;
    s
}

pub fn assemble_second_order(c: &LumpedConstants, p: &BeamParams) -> Result<SecondOrderModel> {
    p.validate()?;
    let n = p.elements;

    let mut mass = DMatrix::zeros(n, n);
    for i in 0..n {
        mass[(i, i)] = c.gamma1;
        if i + 1 < n {
            mass[(i, i + 1)] = c.gamma2;
            mass[(i + 1, i)] = c.gamma2;
        }
    }
    mass[(n - 1, n - 1)] = c.gamma1 / 2.0;

    let scale = c.rotational_stiffness / c.element_length.powi(2);
    let stiffness = stiffness_stencil(n) * scale;
    let damping = &mass * p.alpha + &stiffness * p.beta;

    Ok(SecondOrderModel {
        mass,
        stiffness,
        damping,
    })
}

/// Convenience: constants and second-order model in one call.
pub fn build_beam(p: &BeamParams) -> Result<(LumpedConstants, SecondOrderModel)> {
    let c = derive_constants(p)?;
    let s = assemble_second_order(&c, p)?;
    Ok((c, s))
}

fn check_index(name: &'static str, index: usize, max: usize) -> Result<()> {
    if index == 0 || index > max {
        return Err(Error::IndexOutOfRange { name, index, max });
    }
    Ok(())
}

/// `ẋ = A x + B_u u + B_d d` with `x = [w; ẇ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b_u: DVector<f64>,
    pub b_d: DVector<f64>,
    /// 1-based element receiving the control force.
    pub input_element: usize,
    /// 1-based element receiving the disturbance force.
    pub disturbance_element: usize,
}

impl StateSpace {
    pub fn elements(&self) -> usize {
        self.a.nrows() / 2
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    /// Largest eigenvalue magnitude of `A`.
    pub fn spectral_radius(&self) -> Result<f64> {
        Ok(eigenvalues(&self.a)?
            .iter()
            .map(|l| l.norm())
            .fold(0.0, f64::max))
    }
}

const RESIDUAL_TOL: f64 = 1e-10;

fn solve_checked(
    chol: &Cholesky<f64, Dyn>,
    mass: &DMatrix<f64>,
    rhs: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let sol = chol.solve(rhs);
    for j in 0..rhs.ncols() {
        let r = mass * sol.column(j) - rhs.column(j);
        if r.norm() > RESIDUAL_TOL * rhs.column(j).norm().max(f64::MIN_POSITIVE) {
            return Err(Error::Singular("mass matrix solve residual too large"));
        }
    }
    Ok(sol)
}

pub fn build_state_space(
    s: &SecondOrderModel,
    input_element: usize,
    disturbance_element: usize,
) -> Result<StateSpace> {
    let n = s.elements();
    check_index("i_u", input_element, n)?;
    check_index("i_d", disturbance_element, n)?;

    let chol = Cholesky::new(s.mass.clone()).ok_or(Error::Singular("mass matrix"))?;

    // One factorization, one multi-column solve: [K | C_R | e_u | e_d].
    let mut rhs = DMatrix::zeros(n, 2 * n + 2);
    rhs.view_mut((0, 0), (n, n)).copy_from(&s.stiffness);
    rhs.view_mut((0, n), (n, n)).copy_from(&s.damping);
    rhs[(input_element - 1, 2 * n)] = 1.0;
    rhs[(disturbance_element - 1, 2 * n + 1)] = 1.0;
    let sol = solve_checked(&chol, &s.mass, &rhs)?;

    let mut a = DMatrix::zeros(2 * n, 2 * n);
    a.view_mut((0, n), (n, n)).fill_with_identity();
    a.view_mut((n, 0), (n, n))
        .copy_from(&(-sol.view((0, 0), (n, n))));
    a.view_mut((n, n), (n, n))
        .copy_from(&(-sol.view((0, n), (n, n))));

    let mut b_u = DVector::zeros(2 * n);
    b_u.rows_mut(n, n).copy_from(&sol.column(2 * n));
    let mut b_d = DVector::zeros(2 * n);
    b_d.rows_mut(n, n).copy_from(&sol.column(2 * n + 1));

    Ok(StateSpace {
        a,
        b_u,
        b_d,
        input_element,
        disturbance_element,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorKind {
    Displacement,
    Acceleration,
}

/// `y = C x + D_u u + D_d d` for a single sensed element.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputMap {
    pub kind: SensorKind,
    /// Output row, stored as a column vector of length 2·n_b.
    pub c: DVector<f64>,
    pub d_u: f64,
    pub d_d: f64,
    /// 1-based sensed element.
    pub sensor_element: usize,
}

impl OutputMap {
    pub fn sample(&self, x: &DVector<f64>, u: f64, d: f64) -> f64 {
        self.c.dot(x) + self.d_u * u + self.d_d * d
    }
}

pub fn output_map(ss: &StateSpace, sensor_element: usize, kind: SensorKind) -> Result<OutputMap> {
    let n = ss.elements();
    check_index("i_y", sensor_element, n)?;
    let map = match kind {
        SensorKind::Displacement => {
            let mut c = DVector::zeros(2 * n);
            c[sensor_element - 1] = 1.0;
            OutputMap {
                kind,
                c,
                d_u: 0.0,
                d_d: 0.0,
                sensor_element,
            }
        }
        SensorKind::Acceleration => {
            let row = n + sensor_element - 1;
            OutputMap {
                kind,
                c: ss.a.row(row).transpose(),
                d_u: ss.b_u[row],
                d_d: ss.b_d[row],
                sensor_element,
            }
        }
    };
    Ok(map)
}

/// One vibration mode of `A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mode {
    pub frequency_hz: f64,
    pub damping_ratio: f64,
}

/// Modes sorted by ascending frequency.
///
/// A complex-conjugate eigenvalue pair contributes one mode with
/// `ω = |λ|` and `ξ = −Re λ / |λ|`. A real eigenvalue (an overdamped
/// mode split into two real poles) is listed on its own with `ξ = 1` and
/// frequency `|λ|/2π`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModalSummary {
    pub modes: Vec<Mode>,
}

impl ModalSummary {
    pub fn min_damping_ratio(&self) -> Option<f64> {
        self.modes.iter().map(|m| m.damping_ratio).reduce(f64::min)
    }

    /// Modes that came from complex-conjugate pairs.
    pub fn oscillatory(&self) -> impl Iterator<Item = &Mode> {
        self.modes.iter().filter(|m| m.damping_ratio < 1.0)
    }
}

fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<nalgebra::Complex<f64>>> {
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 10_000).ok_or(Error::EigenFailure)?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

pub fn modal_summary(ss: &StateSpace) -> Result<ModalSummary> {
    let dim = ss.a.nrows();
    if dim == 0 || !dim.is_multiple_of(2) || ss.a.ncols() != dim {
        return Err(Error::invalid("A", "must be square with even dimension"));
    }

    let mut modes = Vec::with_capacity(dim);
    for l in eigenvalues(&ss.a)? {
        let mag = l.norm();
        // Keep the upper half-plane member of each conjugate pair.
        let imag_tol = 1e-9 * mag.max(1.0);
        if l.im < -imag_tol {
            continue;
        }
        let damping_ratio = if l.im.abs() <= imag_tol || mag == 0.0 {
            1.0
        } else {
            -l.re / mag
        };
        modes.push(Mode {
            frequency_hz: mag / (2.0 * PI),
            damping_ratio,
        });
    }
    modes.sort_by(|a, b| a.frequency_hz.total_cmp(&b.frequency_hz));
    Ok(ModalSummary { modes })
}
