//! Time-domain and spatial cross-checks of the transfer coefficients.
//!
//! The operator equations are linear, so c-number amplitudes obey the same
//! transfer functions. The cavity oracle integrates the Heisenberg-Langevin
//! equations with a classical seed; the spatial oracle solves the backward
//! two-point boundary-value problem by shooting.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::biphoton::PairedModes;
use crate::error::{Error, Result};
use crate::phasematch::{delta_k, CrystalSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Rk4,
    /// Dormand-Prince 5(4) with step control; `step` is the maximum step.
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeededRun {
    /// signal seed detuning from Omega_q, rad/s
    pub detuning: f64,
    pub seed_amplitude: Complex64,
    pub duration: f64,
    pub step: f64,
    pub integrator: Integrator,
}

impl SeededRun {
    /// Run length 80/min(Gamma) with step 1/(50 max(Gamma, |detuning|)).
    pub fn for_modes(modes: &PairedModes, detuning: f64, integrator: Integrator) -> Self {
        let r = &modes.rates;
        SeededRun {
            detuning,
            seed_amplitude: Complex64::new(1.0, 0.0),
            duration: 80.0 / r.min_decay(),
            step: 1.0 / (50.0 * r.max_decay().max(detuning.abs())),
            integrator,
        }
    }

    pub fn validate(&self, modes: &PairedModes) -> Result<()> {
        let r = &modes.rates;
        r.ensure_decaying()?;
        if !(self.duration >= 20.0 / r.min_decay()) {
            return Err(Error::InvalidParameter(format!(
                "run duration {} s is shorter than 20/min(Gamma)",
                self.duration
            )));
        }
        let max_step = 1.0 / (50.0 * r.max_decay().max(self.detuning.abs()));
        if !(self.step > 0.0 && self.step <= max_step * (1.0 + 1e-12)) {
            return Err(Error::InvalidParameter(format!(
                "step {} s exceeds 1/(50 max(Gamma, |detuning|)) = {max_step} s",
                self.step
            )));
        }
        if self.seed_amplitude.norm() == 0.0 {
            return Err(Error::InvalidParameter("seed amplitude is zero".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub t: f64,
    pub signal_out: Complex64,
    pub idler_out: Complex64,
}

#[derive(Debug, Clone)]
pub struct CavityOracleResult {
    /// demodulated output amplitudes at the end of the run
    pub signal_out: Complex64,
    pub idler_out: Complex64,
    /// signal out / in, compare with A1
    pub signal_ratio: Complex64,
    /// conjugate idler out / signal in, compare with C1
    pub idler_ratio: Complex64,
    /// relative envelope change over the trailing 10% of the run
    pub drift: f64,
    pub steps: usize,
    pub trace: Vec<TracePoint>,
}

const TRACE_POINTS: usize = 400;
const DRIFT_LIMIT: f64 = 1e-9;

type State = [Complex64; 2];

fn axpy(y: &State, h: f64, k: &State) -> State {
    [y[0] + k[0] * h, y[1] + k[1] * h]
}

fn rk4_step<F: Fn(f64, &State) -> State>(f: &F, t: f64, y: &State, h: f64) -> State {
    let k1 = f(t, y);
    let k2 = f(t + h / 2.0, &axpy(y, h / 2.0, &k1));
    let k3 = f(t + h / 2.0, &axpy(y, h / 2.0, &k2));
    let k4 = f(t + h, &axpy(y, h, &k3));
    [
        y[0] + (k1[0] + k2[0] * 2.0 + k3[0] * 2.0 + k4[0]) * (h / 6.0),
        y[1] + (k1[1] + k2[1] * 2.0 + k3[1] * 2.0 + k4[1]) * (h / 6.0),
    ]
}

/// One Dormand-Prince step; returns the 5th-order solution and the error
/// estimate.
fn dopri_step<F: Fn(f64, &State) -> State>(f: &F, t: f64, y: &State, h: f64) -> (State, f64) {
    const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const A: [&[f64]; 6] = [
        &[1.0 / 5.0],
        &[3.0 / 40.0, 9.0 / 40.0],
        &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
        &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
        &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
        &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    let mut k: Vec<State> = Vec::with_capacity(7);
    k.push(f(t, y));
    for (stage, row) in A.iter().enumerate() {
        let mut yi = *y;
        for (j, a) in row.iter().enumerate() {
            yi = axpy(&yi, h * a, &k[j]);
        }
        k.push(f(t + C[stage] * h, &yi));
    }
    // the last stage is evaluated at the 5th-order solution (FSAL)
    let mut y5 = *y;
    for (j, a) in A[5].iter().enumerate() {
        y5 = axpy(&y5, h * a, &k[j]);
    }
    let mut err = [Complex64::new(0.0, 0.0); 2];
    for (j, e) in E.iter().enumerate() {
        err = axpy(&err, h * e, &k[j]);
    }
    let scale = |i: usize| 1e-14 + 1e-11 * y[i].norm().max(y5[i].norm());
    let norm = ((err[0].norm() / scale(0)).powi(2) + (err[1].norm() / scale(1)).powi(2)).sqrt()
        / std::f64::consts::SQRT_2;
    (y5, norm)
}

/// Integrate the seeded cavity equations to steady state.
///
/// Signal input s e^{-i delta t}, idler input zero. In the frame of the seed
/// the system is autonomous:
///   dX_s/dt = (i delta - G_s/2) X_s - i k1 X_i + sqrt(g_s) s
///   dX_i/dt = (i (delta - eps) - G_i/2) X_i + i k1 X_s
/// with eps = omega_p - Omega_q - Omega_r and X_i the conjugate idler
/// envelope. Outputs follow b_out = sqrt(g) b - b_in.
pub fn cavity_transfer_oracle(modes: &PairedModes, run: &SeededRun) -> Result<CavityOracleResult> {
    run.validate(modes)?;
    let r = modes.rates;
    let k1 = modes.kappa1;
    let s = run.seed_amplitude;
    let delta = run.detuning;
    let eps = modes.omega_pump - modes.omega_q - modes.omega_r;
    let i = Complex64::i();
    let ls = Complex64::new(-r.decay_s / 2.0, delta);
    let li = Complex64::new(-r.decay_i / 2.0, delta - eps);
    let drive = s * r.coupling_s.sqrt();
    let rhs = move |_t: f64, y: &State| -> State {
        [ls * y[0] - i * k1 * y[1] + drive, li * y[1] + i * k1 * y[0]]
    };
    let outputs = |y: &State| (y[0] * r.coupling_s.sqrt() - s, y[1] * r.coupling_i.sqrt());

    let trace_every = run.duration / TRACE_POINTS as f64;
    let tail_start = 0.9 * run.duration;
    let mut y: State = [Complex64::new(0.0, 0.0); 2];
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut next_trace = 0.0;
    let mut tail: Option<State> = None;
    let mut trace = Vec::with_capacity(TRACE_POINTS + 2);
    let mut h = run.step;
    while t < run.duration {
        if t >= next_trace {
            let (so, io) = outputs(&y);
            trace.push(TracePoint {
                t,
                signal_out: so,
                idler_out: io,
            });
            next_trace += trace_every;
        }
        if tail.is_none() && t >= tail_start {
            tail = Some(y);
        }
        let remaining = run.duration - t;
        match run.integrator {
            Integrator::Rk4 => {
                let step = run.step.min(remaining);
                y = rk4_step(&rhs, t, &y, step);
                t += step;
            }
            Integrator::Adaptive => {
                let step = h.min(remaining).min(run.step);
                let (y_new, err) = dopri_step(&rhs, t, &y, step);
                if err <= 1.0 || step < 1e-6 * run.step {
                    y = y_new;
                    t += step;
                }
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h = step * factor;
            }
        }
        steps += 1;
    }
    let (signal_out, idler_out) = outputs(&y);
    trace.push(TracePoint {
        t,
        signal_out,
        idler_out,
    });
    let before = tail.unwrap_or([Complex64::new(0.0, 0.0); 2]);
    let env = (y[0].norm_sqr() + y[1].norm_sqr()).sqrt();
    let change = ((y[0] - before[0]).norm_sqr() + (y[1] - before[1]).norm_sqr()).sqrt();
    let drift = if env > 0.0 { change / env } else { f64::INFINITY };
    if !(drift <= DRIFT_LIMIT) {
        return Err(Error::NotConverged { drift });
    }
    Ok(CavityOracleResult {
        signal_out,
        idler_out,
        signal_ratio: signal_out / s,
        idler_ratio: idler_out / s,
        drift,
        steps,
        trace,
    })
}

/// Backward spatial problem with the propagation constants already
/// evaluated at one signal frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialProblem {
    pub length: f64,
    /// 1/m
    pub kappa: f64,
    pub delta_k: f64,
    pub k_signal: f64,
    pub k_idler: f64,
    pub steps: usize,
}

impl SpatialProblem {
    pub fn from_crystal(crystal: &CrystalSpec, kappa: f64, omega: f64, omega_pump: f64) -> Result<Self> {
        Ok(SpatialProblem {
            length: crystal.length,
            kappa,
            delta_k: delta_k(crystal, omega, omega_pump)?,
            k_signal: crystal.signal_sample(omega)?.wavenumber(),
            k_idler: crystal.idler_sample(omega_pump - omega)?.wavenumber(),
            steps: 4000,
        })
    }
}

/// Inputs at the two faces: a_s(0) and a_i^dagger(L).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySeeds {
    pub signal_in: Complex64,
    pub idler_in: Complex64,
}

/// Outputs a_s(L) and a_i^dagger(0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialOutputs {
    pub signal_out: Complex64,
    pub idler_out: Complex64,
}

fn integrate_span(p: &SpatialProblem, start: State) -> State {
    let i = Complex64::i();
    let (kappa, dk) = (p.kappa, p.delta_k);
    let rhs = move |z: f64, y: &State| -> State {
        let ph = Complex64::from_polar(1.0, dk * z);
        [i * kappa * y[1] * ph, i * kappa * y[0] * ph.conj()]
    };
    let h = p.length / p.steps as f64;
    let mut y = start;
    for n in 0..p.steps {
        y = rk4_step(&rhs, n as f64 * h, &y, h);
    }
    y
}

/// Solve the envelope equations
///   db_s/dz = i kappa b_i^dagger e^{i dk z},  db_i^dagger/dz = i kappa b_s e^{-i dk z}
/// with b_s(0) and b_i^dagger(L) prescribed, by linear shooting on
/// b_i^dagger(0).
pub fn solve_spatial(p: &SpatialProblem, seeds: BoundarySeeds) -> Result<SpatialOutputs> {
    if p.steps == 0 || !(p.length > 0.0) {
        return Err(Error::InvalidParameter("spatial problem needs length > 0 and steps > 0".into()));
    }
    // envelope boundary values; a_i^dagger(L) = b_i^dagger(L) e^{-i k_i L}
    let bs0 = seeds.signal_in;
    let bi_l = seeds.idler_in * Complex64::from_polar(1.0, p.k_idler * p.length);
    let zero = Complex64::new(0.0, 0.0);
    let base = integrate_span(p, [bs0, zero]);
    let unit = integrate_span(p, [zero, Complex64::new(1.0, 0.0)]);
    let slope = unit[1];
    if !(slope.norm() > 1e-12) || !slope.is_finite() || !base[1].is_finite() {
        return Err(Error::ShootingDiverged(format!(
            "idler end-point sensitivity {slope} is singular"
        )));
    }
    let x = (bi_l - base[1]) / slope;
    let bs_l = base[0] + unit[0] * x;
    let residual = (base[1] + slope * x - bi_l).norm();
    if !x.is_finite() || residual > 1e-12 * (1.0 + bi_l.norm()) {
        return Err(Error::ShootingDiverged(format!("end-point residual {residual}")));
    }
    Ok(SpatialOutputs {
        signal_out: bs_l * Complex64::from_polar(1.0, p.k_signal * p.length),
        idler_out: x,
    })
}

pub fn spatial_coupling_oracle(
    crystal: &CrystalSpec,
    kappa: f64,
    omega: f64,
    omega_pump: f64,
    seeds: BoundarySeeds,
) -> Result<SpatialOutputs> {
    solve_spatial(&SpatialProblem::from_crystal(crystal, kappa, omega, omega_pump)?, seeds)
}

/// Two-port map [a_s(L), a_i^dagger(0)] = [[A, B], [C, D]] [a_s(0), a_i^dagger(L)].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPort {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

pub fn spatial_two_port(p: &SpatialProblem) -> Result<TwoPort> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let s = solve_spatial(p, BoundarySeeds { signal_in: one, idler_in: zero })?;
    let i = solve_spatial(p, BoundarySeeds { signal_in: zero, idler_in: one })?;
    Ok(TwoPort {
        a: s.signal_out,
        b: i.signal_out,
        c: s.idler_out,
        d: i.idler_out,
    })
}
