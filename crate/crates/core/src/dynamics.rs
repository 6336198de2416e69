//! Chaotic vector fields and fixed-step fourth-order Runge–Kutta integration.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// A chaotic flow together with its parameter values.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum SystemSpec {
    Rossler {
        a: f64,
        b: f64,
        c: f64,
    },
    Lorenz63 {
        sigma: f64,
        rho: f64,
        beta: f64,
    },
    Lorenz96 {
        n: usize,
        #[cfg_attr(feature = "serde", serde(rename = "F", alias = "forcing"))]
        forcing: f64,
    },
}

impl SystemSpec {
    pub const fn rossler() -> Self {
        SystemSpec::Rossler { a: 0.1, b: 0.1, c: 14.0 }
    }

    pub const fn lorenz63() -> Self {
        SystemSpec::Lorenz63 { sigma: 10.0, rho: 28.0, beta: 8.0 / 3.0 }
    }

    pub const fn lorenz96() -> Self {
        SystemSpec::Lorenz96 { n: 40, forcing: 8.15 }
    }

    /// Short lowercase identifier, also used for file and directory names.
    pub fn name(&self) -> &'static str {
        match self {
            SystemSpec::Rossler { .. } => "rossler",
            SystemSpec::Lorenz63 { .. } => "lorenz63",
            SystemSpec::Lorenz96 { .. } => "lorenz96",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SystemSpec::Rossler { .. } | SystemSpec::Lorenz63 { .. } => 3,
            SystemSpec::Lorenz96 { n, .. } => *n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |vals: &[f64]| vals.iter().all(|v| v.is_finite());
        let ok = match *self {
            SystemSpec::Rossler { a, b, c } => finite(&[a, b, c]),
            SystemSpec::Lorenz63 { sigma, rho, beta } => finite(&[sigma, rho, beta]),
            SystemSpec::Lorenz96 { n, forcing } => {
                if n < 4 {
                    return Err(Error::invalid(format!("lorenz96 needs n >= 4, got {n}")));
                }
                forcing.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("system parameters must be finite"))
        }
    }

    /// Start used when no initial state is configured.
    ///
    /// `(1, 1, 1)` for the three-variable flows. Lorenz96 starts at the
    /// uniform fixed point `x_i = F` with `0.01` added to component 0.
    pub fn default_initial_state(&self) -> Vec<f64> {
        match *self {
            SystemSpec::Rossler { .. } | SystemSpec::Lorenz63 { .. } => vec![1.0; 3],
            SystemSpec::Lorenz96 { n, forcing } => {
                let mut s = vec![forcing; n];
                s[0] += 0.01;
                s
            }
        }
    }

    /// Writes `f(state)` into `out`. Both slices must have length `dim()`.
    #[inline]
    pub fn derivative_into(&self, state: &[f64], out: &mut [f64]) {
        match *self {
            SystemSpec::Rossler { a, b, c } => {
                let (x, y, z) = (state[0], state[1], state[2]);
                out[0] = -y - z;
                out[1] = x + a * y;
                out[2] = b + z * (x - c);
            }
            SystemSpec::Lorenz63 { sigma, rho, beta } => {
                let (x, y, z) = (state[0], state[1], state[2]);
                out[0] = sigma * (y - x);
                out[1] = x * (rho - z) - y;
                out[2] = x * y - beta * z;
            }
            SystemSpec::Lorenz96 { n, forcing } => {
                for i in 0..n {
                    let next = state[(i + 1) % n];
                    let prev = state[(i + n - 1) % n];
                    let prev2 = state[(i + n - 2) % n];
                    out[i] = (next - prev2) * prev - state[i] + forcing;
                }
            }
        }
    }
}

/// Evaluates the vector field at `state`.
pub fn derivative(spec: &SystemSpec, state: &[f64]) -> Result<Vec<f64>> {
    check_dim(spec, state)?;
    let mut out = vec![0.0; state.len()];
    spec.derivative_into(state, &mut out);
    Ok(out)
}

fn check_dim(spec: &SystemSpec, state: &[f64]) -> Result<()> {
    if state.len() != spec.dim() {
        return Err(Error::invalid(format!(
            "state has {} components, {} expects {}",
            state.len(),
            spec.name(),
            spec.dim()
        )));
    }
    Ok(())
}

/// Reusable RK4 stepper holding the stage buffers for one system.
#[derive(Debug, Clone)]
pub struct Rk4 {
    spec: SystemSpec,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(spec: SystemSpec) -> Self {
        let d = spec.dim();
        Rk4 { spec, k: [vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]], tmp: vec![0.0; d] }
    }

    /// Advances `state` by one classical RK4 step of size `dt`.
    ///
    /// `step` is only used to label a blowup.
    pub fn step(&mut self, state: &mut [f64], dt: f64, step: usize) -> Result<()> {
        let half = 0.5 * dt;
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;

        self.spec.derivative_into(state, k1);
        for ((t, s), k) in tmp.iter_mut().zip(state.iter()).zip(k1.iter()) {
            *t = s + half * k;
        }
        self.spec.derivative_into(tmp, k2);
        for ((t, s), k) in tmp.iter_mut().zip(state.iter()).zip(k2.iter()) {
            *t = s + half * k;
        }
        self.spec.derivative_into(tmp, k3);
        for ((t, s), k) in tmp.iter_mut().zip(state.iter()).zip(k3.iter()) {
            *t = s + dt * k;
        }
        self.spec.derivative_into(tmp, k4);

        let sixth = dt / 6.0;
        for i in 0..state.len() {
            state[i] += sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }

        if let Some(i) = state.iter().position(|v| !v.is_finite()) {
            return Err(Error::Blowup {
                step,
                detail: format!("component {i} of {} became {}", self.spec.name(), state[i]),
            });
        }
        Ok(())
    }
}

/// One RK4 step from `state`.
pub fn rk4_step(spec: &SystemSpec, state: &[f64], dt: f64) -> Result<Vec<f64>> {
    check_dim(spec, state)?;
    if !(dt > 0.0) {
        return Err(Error::invalid("dt must be positive"));
    }
    let mut next = state.to_vec();
    Rk4::new(spec.clone()).step(&mut next, dt, 0)?;
    Ok(next)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntegrationConfig {
    /// Time units per step.
    pub dt: f64,
    /// Number of states generated, counting the initial state as step 0.
    pub total_steps: usize,
    /// Leading states discarded before recording.
    pub transient_steps: usize,
    /// `None` selects [`SystemSpec::default_initial_state`].
    #[cfg_attr(feature = "serde", serde(default))]
    pub initial_state: Option<Vec<f64>>,
    /// Seeds randomized starting points (Lyapunov pairs).
    #[cfg_attr(feature = "serde", serde(default))]
    pub seed: u64,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig { dt: 0.005, total_steps: 300_000, transient_steps: 50_000, initial_state: None, seed: 0 }
    }
}

impl IntegrationConfig {
    pub fn validate(&self, spec: &SystemSpec) -> Result<()> {
        spec.validate()?;
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid(format!("dt must be positive and finite, got {}", self.dt)));
        }
        if self.transient_steps >= self.total_steps {
            return Err(Error::invalid(format!(
                "transient_steps ({}) must be smaller than total_steps ({})",
                self.transient_steps, self.total_steps
            )));
        }
        if let Some(s) = &self.initial_state {
            check_dim(spec, s)?;
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("initial_state must be finite"));
            }
        }
        Ok(())
    }

    pub fn retained_steps(&self) -> usize {
        self.total_steps - self.transient_steps
    }

    pub fn initial_state_for(&self, spec: &SystemSpec) -> Vec<f64> {
        self.initial_state.clone().unwrap_or_else(|| spec.default_initial_state())
    }
}

/// Row-major `steps × dim` states sampled every `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    states: Vec<f64>,
    dim: usize,
    pub dt: f64,
    /// Absolute step index of row 0 (the number of discarded transient states).
    pub first_step: usize,
    pub system: SystemSpec,
}

impl Trajectory {
    pub fn rows(&self) -> usize {
        self.states.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.states
    }

    /// Time of row `i` in time units.
    pub fn time(&self, i: usize) -> f64 {
        (self.first_step + i) as f64 * self.dt
    }

    /// Copies one coordinate out as a scalar series.
    pub fn coordinate(&self, c: usize) -> Result<Vec<f64>> {
        if c >= self.dim {
            return Err(Error::invalid(format!("coordinate {c} out of range for dimension {}", self.dim)));
        }
        Ok(self.states.iter().skip(c).step_by(self.dim).copied().collect())
    }
}

fn run_from(spec: &SystemSpec, mut state: Vec<f64>, dt: f64, rows: usize, first_step: usize) -> Result<Trajectory> {
    let dim = spec.dim();
    let mut stepper = Rk4::new(spec.clone());
    let mut states = Vec::with_capacity(rows * dim);
    for i in 0..rows {
        if i > 0 {
            stepper.step(&mut state, dt, first_step + i)?;
        }
        states.extend_from_slice(&state);
    }
    Ok(Trajectory { states, dim, dt, first_step, system: spec.clone() })
}

fn advance(spec: &SystemSpec, state: &mut [f64], dt: f64, steps: usize) -> Result<()> {
    let mut stepper = Rk4::new(spec.clone());
    for s in 1..=steps {
        stepper.step(state, dt, s)?;
    }
    Ok(())
}

/// Integrates from the configured initial state and drops the transient.
///
/// State `k` is the result of `k` RK4 steps; rows hold states
/// `transient_steps..total_steps`.
pub fn integrate(spec: &SystemSpec, cfg: &IntegrationConfig) -> Result<Trajectory> {
    cfg.validate(spec)?;
    let mut state = cfg.initial_state_for(spec);
    advance(spec, &mut state, cfg.dt, cfg.transient_steps)?;
    run_from(spec, state, cfg.dt, cfg.retained_steps(), cfg.transient_steps)
}

/// Two trajectories forked from one post-transient attractor point.
///
/// The second starts with `displacement` added to `coordinate`; both run
/// `total_steps - transient_steps` rows with the same `dt`.
pub fn twin_trajectories(
    spec: &SystemSpec,
    cfg: &IntegrationConfig,
    displacement: f64,
    coordinate: usize,
) -> Result<(Trajectory, Trajectory)> {
    cfg.validate(spec)?;
    if !(displacement >= 0.0) || !displacement.is_finite() {
        return Err(Error::invalid("displacement must be finite and non-negative"));
    }
    if coordinate >= spec.dim() {
        return Err(Error::invalid(format!("coordinate {coordinate} out of range for {}", spec.name())));
    }
    let mut start = cfg.initial_state_for(spec);
    advance(spec, &mut start, cfg.dt, cfg.transient_steps)?;
    let mut other = start.clone();
    other[coordinate] += displacement;
    let a = run_from(spec, start, cfg.dt, cfg.retained_steps(), cfg.transient_steps)?;
    let b = run_from(spec, other, cfg.dt, cfg.retained_steps(), cfg.transient_steps)?;
    Ok((a, b))
}

/// Base initial state plus a seeded uniform offset in `[-spread, spread]` per component.
///
/// Used to obtain distinct attractor starting points after the transient.
pub fn perturbed_initial_state(spec: &SystemSpec, base: &[f64], spread: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    base.iter().take(spec.dim()).map(|v| v + spread * rng.gen_range(-1.0..=1.0)).collect()
}
