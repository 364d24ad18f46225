//! Time integration of oscillator networks.
//!
//! The Stuart-Landau network
//!
//! ```text
//! dpsi_n/dt = -[i*omega_n + |psi_n|^2] psi_n + sum_m J_{n,m} psi_m
//! ```
//!
//! is integrated in Cartesian (real/imaginary) form, which stays regular
//! through the near-vacuum start where the polar form is singular. The
//! feedback variant adds a per-oscillator pump `P_n(t)` with
//! `dP_n/dt = eps * (rho_target - rho_n)`, and the Kuramoto model drops the
//! amplitude degree of freedom entirely:
//!
//! ```text
//! dtheta_n/dt = omega_n + sum_m J_{n,m} sin(theta_m - theta_n)
//! ```
//!
//! Steady states are detected co-rotating: the residual
//! `max_n |dpsi_n/dt - i*What*psi_n|`, with `What` the amplitude-weighted
//! mean instantaneous frequency, vanishes for synchronized solutions that
//! rotate at a common frequency, where the raw derivative does not.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::graphs::NetworkSpec;
use crate::seed;

/// Integration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Classic fourth-order Runge-Kutta with a fixed step; bit-stable grids.
    FixedRk4,
    /// Dormand-Prince 5(4) with step-size control.
    AdaptiveRk45,
}

/// Integrator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Fixed step size, or the initial step for the adaptive method.
    pub dt: f64,
    /// Integration horizon.
    pub t_end: f64,
    pub method: Method,
    /// Absolute error tolerance (adaptive only).
    pub abs_tol: f64,
    /// Relative error tolerance (adaptive only).
    pub rel_tol: f64,
    /// Record every k-th accepted step (the initial and final states are
    /// always recorded).
    pub record_stride: usize,
    /// Co-rotating residual below which a sample counts as steady.
    pub steady_tol: f64,
    /// Initial oscillator amplitude for the near-vacuum start.
    pub init_amplitude: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_end: 50.0,
            method: Method::AdaptiveRk45,
            abs_tol: 1e-8,
            rel_tol: 1e-8,
            record_stride: 1,
            steady_tol: 1e-6,
            init_amplitude: 1e-3,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > self.dt) {
            return Err(Error::InvalidArgument(format!(
                "t_end must exceed dt, got dt = {}, t_end = {}",
                self.dt, self.t_end
            )));
        }
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidArgument("record_stride must be positive".into()));
        }
        if !(self.steady_tol > 0.0) {
            return Err(Error::InvalidArgument("steady_tol must be positive".into()));
        }
        if !(self.init_amplitude > 0.0) {
            return Err(Error::InvalidArgument("init_amplitude must be positive".into()));
        }
        Ok(())
    }
}

/// Feedback-pumping settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackConfig {
    /// Rate of change of the pumps.
    pub epsilon: f64,
    /// Target amplitude the pumps steer toward.
    pub rho_target: RhoTarget,
}

/// Target amplitude for the feedback pump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoTarget {
    /// A fixed externally chosen amplitude.
    Fixed(f64),
    /// The instantaneous maximum amplitude over all oscillators; causal and
    /// computable online.
    RunningMax,
}

impl FeedbackConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epsilon < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "feedback rate must be non-negative, got {}",
                self.epsilon
            )));
        }
        if let RhoTarget::Fixed(v) = self.rho_target {
            if !(v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "fixed target amplitude must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Recorded time series of one integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// One complex value per oscillator per recorded time.
    pub states: Vec<Vec<Complex64>>,
    /// Pump rates per recorded time; present for feedback runs only.
    pub pumps: Option<Vec<Vec<f64>>>,
    /// Co-rotating residual at each recorded time.
    pub residuals: Vec<f64>,
    pub reached_steady: bool,
    pub steady_index: Option<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_oscillators(&self) -> usize {
        self.states.first().map_or(0, |s| s.len())
    }

    pub fn final_state(&self) -> &[Complex64] {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn phases_at(&self, index: usize) -> Vec<f64> {
        self.states[index].iter().map(|z| z.arg()).collect()
    }

    pub fn final_phases(&self) -> Vec<f64> {
        self.phases_at(self.len() - 1)
    }

    pub fn amplitudes_at(&self, index: usize) -> Vec<f64> {
        self.states[index].iter().map(|z| z.norm()).collect()
    }

    pub fn final_amplitudes(&self) -> Vec<f64> {
        self.amplitudes_at(self.len() - 1)
    }

    /// CSV dump: `t, re_psi_0, im_psi_0, ..., [P_0, ...]`.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        let m = self.n_oscillators();
        let mut header = String::from("t");
        for n in 0..m {
            header.push_str(&format!(",re_psi_{n},im_psi_{n}"));
        }
        if self.pumps.is_some() {
            for n in 0..m {
                header.push_str(&format!(",P_{n}"));
            }
        }
        writeln!(w, "{header}")?;
        for (k, t) in self.times.iter().enumerate() {
            let mut row = format!("{t}");
            for z in &self.states[k] {
                row.push_str(&format!(",{},{}", z.re, z.im));
            }
            if let Some(pumps) = &self.pumps {
                for p in &pumps[k] {
                    row.push_str(&format!(",{p}"));
                }
            }
            writeln!(w, "{row}")?;
        }
        Ok(())
    }
}

// Symmetric coupling as an edge list; dense matrices stay O(N^2) but the
// triad graph (degree <= 3) drops to O(N).
struct EdgeList {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl EdgeList {
    fn from_network(net: &NetworkSpec) -> Self {
        Self {
            n: net.n_vertices(),
            edges: net.edges(),
        }
    }
}

const STATE_BOUND: f64 = 1e9;

fn check_finite(t: f64, y: &[f64]) -> Result<()> {
    if y.iter().all(|v| v.is_finite() && v.abs() < STATE_BOUND) {
        Ok(())
    } else {
        Err(Error::Divergence { t })
    }
}

/// Shared step driver: fixed RK4 or adaptive Dormand-Prince 5(4), recording
/// every `record_stride`-th accepted step plus the initial and final states.
fn drive<F>(rhs: F, y0: Vec<f64>, cfg: &SimConfig) -> Result<(Vec<f64>, Vec<Vec<f64>>)>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    cfg.validate()?;
    match cfg.method {
        Method::FixedRk4 => drive_rk4(rhs, y0, cfg),
        Method::AdaptiveRk45 => drive_dp45(rhs, y0, cfg),
    }
}

fn drive_rk4<F>(rhs: F, mut y: Vec<f64>, cfg: &SimConfig) -> Result<(Vec<f64>, Vec<Vec<f64>>)>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let d = y.len();
    let mut times = vec![0.0];
    let mut states = vec![y.clone()];
    let mut k1 = vec![0.0; d];
    let mut k2 = vec![0.0; d];
    let mut k3 = vec![0.0; d];
    let mut k4 = vec![0.0; d];
    let mut tmp = vec![0.0; d];

    let mut t = 0.0;
    let mut step = 0usize;
    while t < cfg.t_end - 1e-12 * cfg.t_end {
        let h = cfg.dt.min(cfg.t_end - t);
        rhs(t, &y, &mut k1);
        for i in 0..d {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        rhs(t + 0.5 * h, &tmp, &mut k2);
        for i in 0..d {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        rhs(t + 0.5 * h, &tmp, &mut k3);
        for i in 0..d {
            tmp[i] = y[i] + h * k3[i];
        }
        rhs(t + h, &tmp, &mut k4);
        for i in 0..d {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += h;
        step += 1;
        check_finite(t, &y)?;
        let at_end = t >= cfg.t_end - 1e-12 * cfg.t_end;
        if step % cfg.record_stride == 0 || at_end {
            times.push(t);
            states.push(y.clone());
        }
    }
    Ok((times, states))
}

// Dormand-Prince 5(4) coefficients.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn drive_dp45<F>(rhs: F, mut y: Vec<f64>, cfg: &SimConfig) -> Result<(Vec<f64>, Vec<Vec<f64>>)>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let d = y.len();
    let mut times = vec![0.0];
    let mut states = vec![y.clone()];
    let mut k = vec![vec![0.0; d]; 7];
    let mut tmp = vec![0.0; d];
    let mut y5 = vec![0.0; d];

    let mut t = 0.0;
    let mut h = cfg.dt.min(cfg.t_end);
    let mut accepted = 0usize;
    let h_floor = 1e-13 * cfg.t_end.max(1.0);

    while t < cfg.t_end - 1e-12 * cfg.t_end {
        h = h.min(cfg.t_end - t);
        for s in 0..7 {
            for i in 0..d {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = DP_A[s][j];
                    if a != 0.0 {
                        acc += h * a * kj[i];
                    }
                }
                tmp[i] = acc;
            }
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            rhs(t + DP_C[s] * h, &tmp, &mut tail[0]);
        }
        let mut err_sq = 0.0;
        for i in 0..d {
            let mut v5 = 0.0;
            let mut v4 = 0.0;
            for s in 0..7 {
                v5 += DP_B5[s] * k[s][i];
                v4 += DP_B4[s] * k[s][i];
            }
            y5[i] = y[i] + h * v5;
            let err = h * (v5 - v4);
            let scale = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y5[i].abs());
            err_sq += (err / scale) * (err / scale);
        }
        let err_norm = (err_sq / d as f64).sqrt();

        if err_norm <= 1.0 {
            t += h;
            y.copy_from_slice(&y5);
            accepted += 1;
            check_finite(t, &y)?;
            let at_end = t >= cfg.t_end - 1e-12 * cfg.t_end;
            if accepted % cfg.record_stride == 0 || at_end {
                if times.last().map_or(true, |&lt| lt < t) {
                    times.push(t);
                    states.push(y.clone());
                }
            }
            let factor = if err_norm == 0.0 {
                5.0
            } else {
                (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= factor;
        } else if err_norm.is_finite() {
            h *= (0.9 * err_norm.powf(-0.2)).clamp(0.2, 1.0).min(0.5);
            if h < h_floor {
                return Err(Error::Divergence { t });
            }
        } else {
            h *= 0.1;
            if h < h_floor {
                return Err(Error::Divergence { t });
            }
        }
    }
    Ok((times, states))
}

// --- Stuart-Landau right-hand side -----------------------------------------

// State layout: [re_0, im_0, re_1, im_1, ...] followed by [P_0, ..., P_{M-1}]
// when pumping is active. With pumps absent the gain is fixed at zero, so the
// plain model is the feedback model evaluated on the same code path.
fn sl_rhs(
    edges: &EdgeList,
    omega: &[f64],
    feedback: Option<&FeedbackConfig>,
    _t: f64,
    y: &[f64],
    dy: &mut [f64],
) {
    let m = edges.n;
    let with_pumps = feedback.is_some();

    let rho_t = match feedback.map(|f| f.rho_target) {
        Some(RhoTarget::Fixed(v)) => v,
        Some(RhoTarget::RunningMax) => {
            let mut best = 0.0f64;
            for n in 0..m {
                let (re, im) = (y[2 * n], y[2 * n + 1]);
                best = best.max((re * re + im * im).sqrt());
            }
            best
        }
        None => 0.0,
    };

    for n in 0..m {
        let (re, im) = (y[2 * n], y[2 * n + 1]);
        let rho2 = re * re + im * im;
        let p = if with_pumps { y[2 * m + n] } else { 0.0 };
        let gain = p - rho2;
        dy[2 * n] = omega[n] * im + gain * re;
        dy[2 * n + 1] = -omega[n] * re + gain * im;
        if with_pumps {
            let eps = feedback.unwrap().epsilon;
            dy[2 * m + n] = eps * (rho_t - rho2.sqrt());
        }
    }
    for &(i, j, w) in &edges.edges {
        dy[2 * i] += w * y[2 * j];
        dy[2 * i + 1] += w * y[2 * j + 1];
        dy[2 * j] += w * y[2 * i];
        dy[2 * j + 1] += w * y[2 * i + 1];
    }
}

// Co-rotating residual max_n |dpsi_n/dt - i*What*psi_n| with What the
// amplitude-weighted mean instantaneous frequency.
fn sl_residual(m: usize, y: &[f64], dy: &[f64]) -> f64 {
    let mut weight = 0.0;
    let mut omega_acc = 0.0;
    for n in 0..m {
        let (re, im) = (y[2 * n], y[2 * n + 1]);
        let (dre, dim) = (dy[2 * n], dy[2 * n + 1]);
        // Im(dpsi * conj(psi)) = dim*re - dre*im
        omega_acc += dim * re - dre * im;
        weight += re * re + im * im;
    }
    let what = if weight > 1e-300 { omega_acc / weight } else { 0.0 };
    let mut worst = 0.0f64;
    for n in 0..m {
        let (re, im) = (y[2 * n], y[2 * n + 1]);
        let (dre, dim) = (dy[2 * n], dy[2 * n + 1]);
        // dpsi - i*What*psi
        let rre = dre + what * im;
        let rim = dim - what * re;
        worst = worst.max((rre * rre + rim * rim).sqrt());
    }
    worst
}

fn initial_phases(m: usize, seed_value: u64) -> Vec<f64> {
    use rand::Rng;
    let mut rng = seed::rng(seed_value);
    (0..m).map(|_| rng.random_range(0.0..TAU)).collect()
}

fn steady_from_residuals(residuals: &[f64], tol: f64) -> Option<usize> {
    let last_bad = residuals.iter().rposition(|&r| !(r < tol));
    match last_bad {
        None => Some(0),
        Some(i) if i + 1 < residuals.len() => Some(i + 1),
        Some(_) => None,
    }
}

fn build_sl_trajectory(
    edges: &EdgeList,
    omega: &[f64],
    feedback: Option<&FeedbackConfig>,
    cfg: &SimConfig,
    times: Vec<f64>,
    raw: Vec<Vec<f64>>,
) -> Trajectory {
    let m = edges.n;
    let mut states = Vec::with_capacity(raw.len());
    let mut pumps = feedback.map(|_| Vec::with_capacity(raw.len()));
    let mut residuals = Vec::with_capacity(raw.len());
    let mut dy = vec![0.0; raw[0].len()];
    for (k, y) in raw.iter().enumerate() {
        states.push(
            (0..m)
                .map(|n| Complex64::new(y[2 * n], y[2 * n + 1]))
                .collect(),
        );
        if let Some(p) = pumps.as_mut() {
            p.push(y[2 * m..].to_vec());
        }
        sl_rhs(edges, omega, feedback, times[k], y, &mut dy);
        residuals.push(sl_residual(m, y, &dy));
    }
    let steady_index = steady_from_residuals(&residuals, cfg.steady_tol);
    Trajectory {
        times,
        states,
        pumps,
        residuals,
        reached_steady: steady_index.is_some(),
        steady_index,
    }
}

/// Integrate the Stuart-Landau network from a near-vacuum start.
///
/// Initial conditions are `init_amplitude * exp(i*phi_n)` with `phi_n` drawn
/// uniformly from `[0, 2*pi)`; the draw order is the oscillator order, so
/// runs that share `seed` share the leading phase draws.
pub fn integrate_sl(net: &NetworkSpec, cfg: &SimConfig, seed_value: u64) -> Result<Trajectory> {
    let edges = EdgeList::from_network(net);
    let omega = net.frequencies().to_vec();
    let m = edges.n;
    let phases = initial_phases(m, seed_value);
    let mut y0 = vec![0.0; 2 * m];
    for n in 0..m {
        y0[2 * n] = cfg.init_amplitude * phases[n].cos();
        y0[2 * n + 1] = cfg.init_amplitude * phases[n].sin();
    }
    let (times, raw) = drive(
        |t, y, dy| sl_rhs(&edges, &omega, None, t, y, dy),
        y0,
        cfg,
    )?;
    Ok(build_sl_trajectory(&edges, &omega, None, cfg, times, raw))
}

/// Integrate the feedback-pumped Stuart-Landau network; pumps start at zero.
pub fn integrate_sl_feedback(
    net: &NetworkSpec,
    cfg: &SimConfig,
    fb: &FeedbackConfig,
    seed_value: u64,
) -> Result<Trajectory> {
    fb.validate()?;
    let edges = EdgeList::from_network(net);
    let omega = net.frequencies().to_vec();
    let m = edges.n;
    let phases = initial_phases(m, seed_value);
    let mut y0 = vec![0.0; 3 * m];
    for n in 0..m {
        y0[2 * n] = cfg.init_amplitude * phases[n].cos();
        y0[2 * n + 1] = cfg.init_amplitude * phases[n].sin();
    }
    let (times, raw) = drive(
        |t, y, dy| sl_rhs(&edges, &omega, Some(fb), t, y, dy),
        y0,
        cfg,
    )?;
    Ok(build_sl_trajectory(&edges, &omega, Some(fb), cfg, times, raw))
}

fn kuramoto_rhs(edges: &EdgeList, omega: &[f64], y: &[f64], dy: &mut [f64]) {
    dy[..edges.n].copy_from_slice(&omega[..edges.n]);
    for &(i, j, w) in &edges.edges {
        let s = (y[j] - y[i]).sin();
        dy[i] += w * s;
        dy[j] -= w * s;
    }
}

/// Integrate the Kuramoto phase model. States are stored as unit-modulus
/// complex values; initial phases reuse the Stuart-Landau draw, so matched
/// seeds give matched starts.
pub fn integrate_kuramoto(
    net: &NetworkSpec,
    cfg: &SimConfig,
    seed_value: u64,
) -> Result<Trajectory> {
    let edges = EdgeList::from_network(net);
    let omega = net.frequencies().to_vec();
    let m = edges.n;
    let y0 = initial_phases(m, seed_value);
    let (times, raw) = drive(
        |_t, y, dy| kuramoto_rhs(&edges, &omega, y, dy),
        y0,
        cfg,
    )?;
    let mut states = Vec::with_capacity(raw.len());
    let mut residuals = Vec::with_capacity(raw.len());
    let mut dy = vec![0.0; m];
    for y in &raw {
        states.push(y.iter().map(|&t| Complex64::from_polar(1.0, t)).collect());
        kuramoto_rhs(&edges, &omega, y, &mut dy);
        let mean = dy.iter().sum::<f64>() / m as f64;
        residuals.push(
            dy.iter()
                .map(|v| (v - mean).abs())
                .fold(0.0f64, f64::max),
        );
    }
    let steady_index = steady_from_residuals(&residuals, cfg.steady_tol);
    Ok(Trajectory {
        times,
        states,
        pumps: None,
        residuals,
        reached_steady: steady_index.is_some(),
        steady_index,
    })
}

/// Earliest recorded index from which the co-rotating residual stays below
/// `steady_tol` through the end of the trajectory.
pub fn detect_steady(traj: &Trajectory, steady_tol: f64) -> Option<usize> {
    steady_from_residuals(&traj.residuals, steady_tol)
}
