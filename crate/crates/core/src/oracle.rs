//! Component Euler-Lagrange equations integrated with an adaptive
//! Dormand-Prince 5(4) pair.
//!
//! Writing `q = x + q₀ ψ̄₀ψ₀` and `ψ = a ψ₀` with `|a| = 1`, the Lagrangian
//! splits into a body equation and a linear equation for the soul:
//!
//! ```text
//! ẍ  = −V V'(x)
//! q̈₀ = −(V V')'(x) q₀ − U'(x)
//! θ̇  = U(x),   a(t) = a₀ e^{−iθ(t)}
//! ```

use num_complex::Complex64;
use thiserror::Error;

use crate::expr::ExprError;
use crate::model::SusyModel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("invalid integration window: {0}")]
    InvalidWindow(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleState {
    pub t: f64,
    pub x: f64,
    pub v: f64,
    /// Soul coefficient of `q` on `ψ̄₀ψ₀`.
    pub q0: f64,
    pub w: f64,
    /// `∫₀ᵗ U(x(τ)) dτ`
    pub theta: f64,
}

impl OracleState {
    pub fn initial(x: f64, v: f64, q0: f64, w: f64) -> Self {
        Self {
            t: 0.0,
            x,
            v,
            q0,
            w,
            theta: 0.0,
        }
    }

    fn vector(&self) -> [f64; 5] {
        [self.x, self.v, self.q0, self.w, self.theta]
    }

    fn from_vector(t: f64, y: [f64; 5]) -> Self {
        Self {
            t,
            x: y[0],
            v: y[1],
            q0: y[2],
            w: y[3],
            theta: y[4],
        }
    }

    /// Body energy `v²/2 + V²(x)/2`.
    pub fn energy(&self, model: &SusyModel) -> Result<f64, ExprError> {
        model.energy(self.x, self.v)
    }
}

/// Time derivative of `(x, v, q₀, w, θ)`.
pub fn eom_rhs(s: &OracleState, model: &SusyModel) -> Result<[f64; 5], ExprError> {
    Ok([
        s.v,
        -model.force(s.x)?,
        s.w,
        -model.force_slope(s.x)? * s.q0 - model.du(s.x)?,
        model.u(s.x)?,
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<OracleState>,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(|s| s.t)
    }

    pub fn last(&self) -> &OracleState {
        self.states.last().expect("trajectory has the initial sample")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeSettings {
    pub tol: f64,
    pub max_steps: usize,
}

impl Default for OdeSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_steps: 1_000_000,
        }
    }
}

const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order solution minus embedded fourth-order one
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

type Vec5 = [f64; 5];

fn axpy(y: &Vec5, h: f64, terms: &[(f64, &Vec5)]) -> Vec5 {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

struct Stepper<'m> {
    model: &'m SusyModel,
    tol: f64,
}

impl Stepper<'_> {
    fn rhs(&self, t: f64, y: Vec5) -> Result<Vec5, ExprError> {
        eom_rhs(&OracleState::from_vector(t, y), self.model)
    }

    /// One trial step; returns the new state, its derivative and the scaled error.
    fn trial(&self, t: f64, y: &Vec5, k1: &Vec5, h: f64) -> Result<(Vec5, Vec5, f64), ExprError> {
        let mut k: [Vec5; 7] = [*k1, [0.0; 5], [0.0; 5], [0.0; 5], [0.0; 5], [0.0; 5], [0.0; 5]];
        for stage in 0..6 {
            let terms: Vec<(f64, &Vec5)> = (0..=stage).map(|j| (A[stage][j], &k[j])).collect();
            let ys = axpy(y, h, &terms);
            k[stage + 1] = self.rhs(t + C[stage] * h, ys)?;
        }
        let terms: Vec<(f64, &Vec5)> = (0..6).map(|j| (A[5][j], &k[j])).collect();
        let y_new = axpy(y, h, &terms);
        let mut err = 0.0f64;
        for i in 0..5 {
            let e: f64 = h * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
            let scale = self.tol * (1.0 + y[i].abs().max(y_new[i].abs()));
            err = err.max((e / scale).abs());
        }
        Ok((y_new, k[6], err))
    }
}

/// Integrates from `s0` to `t_end`, sampling every `stride` (steps are
/// clipped to land on each sample time).
pub fn integrate(
    s0: &OracleState,
    model: &SusyModel,
    t_end: f64,
    stride: f64,
    settings: &OdeSettings,
) -> Result<Trajectory, OracleError> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(OracleError::InvalidWindow(format!("end time must be positive, got {t_end}")));
    }
    if !(stride > 0.0) || !stride.is_finite() {
        return Err(OracleError::InvalidWindow(format!("output stride must be positive, got {stride}")));
    }
    let n_out = sample_count(t_end, stride);
    let stepper = Stepper {
        model,
        tol: settings.tol,
    };

    let mut t = s0.t;
    let mut y = s0.vector();
    let mut k1 = stepper.rhs(t, y)?;
    let mut h = initial_step(&k1, &y, settings.tol).min(stride);
    let mut states = Vec::with_capacity(n_out + 1);
    states.push(OracleState::from_vector(t, y));
    let mut steps = 0usize;

    for n in 1..=n_out {
        let target = s0.t + n as f64 * stride;
        while t < target {
            steps += 1;
            if steps > settings.max_steps {
                return Err(OracleError::StepUnderflow { t });
            }
            let remaining = target - t;
            let clipped = remaining <= h * (1.0 + 1e-12);
            let step = if clipped { remaining } else { h };
            let (y_new, k_new, err) = stepper.trial(t, &y, &k1, step)?;
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                t = if clipped { target } else { t + step };
                y = y_new;
                k1 = k_new;
                // a clipped step says nothing about the natural step size
                if !clipped || factor < 1.0 {
                    h = step * factor;
                }
            } else {
                h = step * factor.min(1.0);
            }
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(OracleError::StepUnderflow { t });
            }
        }
        states.push(OracleState::from_vector(target, y));
    }
    Ok(Trajectory { states })
}

fn sample_count(t_end: f64, stride: f64) -> usize {
    let n = t_end / stride;
    let rounded = n.round();
    if (n - rounded).abs() <= 1e-9 * n.max(1.0) {
        rounded as usize
    } else {
        n.floor() as usize
    }
}

fn initial_step(k: &Vec5, y: &Vec5, tol: f64) -> f64 {
    let scale = |i: usize| tol * (1.0 + y[i].abs());
    let d0 = (0..5).map(|i| (y[i] / scale(i)).powi(2)).sum::<f64>().sqrt();
    let d1 = (0..5).map(|i| (k[i] / scale(i)).powi(2)).sum::<f64>().sqrt();
    if d0 < 1e-5 || d1 < 1e-5 {
        1e-3
    } else {
        (0.01 * d0 / d1).clamp(1e-6, 0.1)
    }
}

/// Fermion amplitudes `a₀ e^{−iθ(tₖ)}`.
pub fn fermion_amplitude(traj: &Trajectory, a0: Complex64) -> Vec<Complex64> {
    traj.states
        .iter()
        .map(|s| a0 * Complex64::from_polar(1.0, -s.theta))
        .collect()
}
