//! Reference chaotic systems and a fixed-step fourth-order Runge–Kutta integrator.
//!
//! The true systems are only used to synthesise training data and reference
//! test trajectories; the learned models never see the right-hand sides.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lorenz63Params {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
}

impl Default for Lorenz63Params {
    fn default() -> Self {
        Self { sigma: 10.0, rho: 28.0, beta: 8.0 / 3.0 }
    }
}

/// Lorenz 96 with `n` sites, forcing `F` and a linear damping coefficient.
///
/// `damping = 1` gives the standard system, `damping = 0` drops the `-x_i` term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lorenz96Params {
    pub n: usize,
    pub forcing: f64,
    #[serde(default = "default_damping")]
    pub damping: f64,
}

fn default_damping() -> f64 {
    1.0
}

impl Default for Lorenz96Params {
    fn default() -> Self {
        Self { n: 40, forcing: 8.0, damping: 1.0 }
    }
}

/// A reference system together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SystemSpec {
    Lorenz63(Lorenz63Params),
    Lorenz96(Lorenz96Params),
}

impl SystemSpec {
    pub fn lorenz63() -> Self {
        SystemSpec::Lorenz63(Lorenz63Params::default())
    }

    pub fn lorenz96(n: usize) -> Self {
        SystemSpec::Lorenz96(Lorenz96Params { n, ..Default::default() })
    }

    pub fn dim(&self) -> usize {
        match self {
            SystemSpec::Lorenz63(_) => 3,
            SystemSpec::Lorenz96(p) => p.n,
        }
    }

    pub fn labels(&self) -> Vec<String> {
        match self {
            SystemSpec::Lorenz63(_) => vec!["x".into(), "y".into(), "z".into()],
            SystemSpec::Lorenz96(p) => crate::trajectory::default_labels(p.n),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SystemSpec::Lorenz63(p) => {
                if ![p.sigma, p.rho, p.beta].iter().all(|v| v.is_finite()) {
                    return Err(Error::InvalidParameter("Lorenz 63 parameters must be finite".into()));
                }
            }
            SystemSpec::Lorenz96(p) => {
                if p.n < 4 {
                    return Err(Error::InvalidParameter(format!("Lorenz 96 needs n >= 4, got {}", p.n)));
                }
                if !p.forcing.is_finite() || !(p.damping >= 0.0 && p.damping.is_finite()) {
                    return Err(Error::InvalidParameter("Lorenz 96 forcing must be finite and damping >= 0".into()));
                }
            }
        }
        Ok(())
    }

    /// Evaluates the right-hand side into `out`.
    pub fn rhs_into(&self, state: &[f64], out: &mut [f64]) {
        match self {
            SystemSpec::Lorenz63(p) => lorenz63_rhs_into(state, p, out),
            SystemSpec::Lorenz96(p) => lorenz96_rhs_into(state, p, out),
        }
    }
}

pub fn lorenz63_rhs(state: [f64; 3], params: &Lorenz63Params) -> [f64; 3] {
    let mut out = [0.0; 3];
    lorenz63_rhs_into(&state, params, &mut out);
    out
}

fn lorenz63_rhs_into(s: &[f64], p: &Lorenz63Params, out: &mut [f64]) {
    let (x, y, z) = (s[0], s[1], s[2]);
    out[0] = p.sigma * (y - x);
    out[1] = x * (p.rho - z) - y;
    out[2] = x * y - p.beta * z;
}

/// `dx_i/dt = (x_{i+1} - x_{i-2}) x_{i-1} - damping * x_i + F`, indices cyclic.
pub fn lorenz96_rhs(state: &[f64], params: &Lorenz96Params) -> Result<Vec<f64>> {
    if state.len() != params.n {
        return Err(Error::BadShape(format!("Lorenz 96 state has length {}, expected {}", state.len(), params.n)));
    }
    let mut out = vec![0.0; params.n];
    lorenz96_rhs_into(state, params, &mut out);
    Ok(out)
}

fn lorenz96_rhs_into(x: &[f64], p: &Lorenz96Params, out: &mut [f64]) {
    let n = x.len();
    for i in 0..n {
        let ip1 = x[(i + 1) % n];
        let im1 = x[(i + n - 1) % n];
        let im2 = x[(i + n - 2) % n];
        out[i] = (ip1 - im2) * im1 - p.damping * x[i] + p.forcing;
    }
}

/// Scratch space for repeated RK4 steps of a fixed dimension.
struct Rk4Workspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Workspace {
    fn new(d: usize) -> Self {
        Self { k1: vec![0.0; d], k2: vec![0.0; d], k3: vec![0.0; d], k4: vec![0.0; d], tmp: vec![0.0; d] }
    }

    /// Advances `state` in place. Returns false if anything went non-finite.
    fn step<F: Fn(&[f64], &mut [f64])>(&mut self, rhs: &F, state: &mut [f64], dt: f64) -> bool {
        let half = 0.5 * dt;
        rhs(state, &mut self.k1);
        for (t, (s, k)) in self.tmp.iter_mut().zip(state.iter().zip(&self.k1)) {
            *t = s + half * k;
        }
        rhs(&self.tmp, &mut self.k2);
        for (t, (s, k)) in self.tmp.iter_mut().zip(state.iter().zip(&self.k2)) {
            *t = s + half * k;
        }
        rhs(&self.tmp, &mut self.k3);
        for (t, (s, k)) in self.tmp.iter_mut().zip(state.iter().zip(&self.k3)) {
            *t = s + dt * k;
        }
        rhs(&self.tmp, &mut self.k4);
        let mut finite = true;
        for (i, s) in state.iter_mut().enumerate() {
            *s += dt / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
            finite &= s.is_finite();
        }
        finite
    }
}

/// One classical RK4 step of `dx/dt = rhs(x)`.
pub fn rk4_step<F: Fn(&[f64], &mut [f64])>(rhs: F, state: &[f64], dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let mut ws = Rk4Workspace::new(state.len());
    let mut next = state.to_vec();
    if ws.step(&rhs, &mut next, dt) {
        Ok(next)
    } else {
        Err(Error::IntegrationDiverged { step: 0 })
    }
}

/// Integrates `system` from `x0`, recording every `dt` for `n_steps` steps.
///
/// Internally each recorded interval is split into `substeps` RK4 steps.
pub fn integrate(system: &SystemSpec, x0: &[f64], dt: f64, n_steps: usize, substeps: usize) -> Result<Trajectory> {
    system.validate()?;
    let d = system.dim();
    if x0.len() != d {
        return Err(Error::BadShape(format!("initial condition has length {}, expected {d}", x0.len())));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if n_steps == 0 || substeps == 0 {
        return Err(Error::InvalidParameter("n_steps and substeps must be at least 1".into()));
    }
    let h = dt / substeps as f64;
    let rhs = |x: &[f64], out: &mut [f64]| system.rhs_into(x, out);
    let mut ws = Rk4Workspace::new(d);
    let mut states = Vec::with_capacity((n_steps + 1) * d);
    states.extend_from_slice(x0);
    let mut state = x0.to_vec();
    for step in 1..=n_steps {
        for _ in 0..substeps {
            if !ws.step(&rhs, &mut state, h) {
                return Err(Error::IntegrationDiverged { step });
            }
        }
        states.extend_from_slice(&state);
    }
    Trajectory::new(dt, 0.0, d, states, system.labels())
}
