//! Basis-pursuit denoising,
//!
//! ```text
//! minimize ‖x‖₁  subject to  ‖y − L·x‖₂ ≤ ε,
//! ```
//!
//! for any [`LinearOperator`] `L`, using only applications of `L` and `Lᵀ`.
//!
//! The iteration is the linearized alternating-direction method written in
//! its primal–dual form. The data-fit constraint is split off as a residual
//! variable `r = L·x` that is projected onto the ε-ball around `y` every
//! iteration, while `x` takes a linearized proximal (soft-threshold) step:
//!
//! ```text
//! x⁺ = soft(x − τ·Lᵀu, τ)
//! r  = proj_{‖r − y‖ ≤ ε}(u/σ + L(2x⁺ − x))
//! u⁺ = u + σ·(L(2x⁺ − x) − r)
//! ```
//!
//! with `τσ‖L‖² < 1`; `‖L‖²` comes from 20 power iterations on `LᵀL`
//! started at the all-ones vector.
//!
//! Every 32 iterations the running average of the iterates since the last
//! restart is compared with the current iterate, and the iteration restarts
//! from whichever takes the shorter step once that step has shrunk enough
//! since the previous restart. During a warm-up phase each restart also
//! rebalances `τ/σ` from how far the primal and dual iterates moved; after
//! warm-up the steps are frozen and a restart only ever moves to a point
//! with a shorter step, so the logged fixed-point residual is
//! non-increasing.
//!
//! The data are normalized to `‖y‖₂ = 1` before iterating and the solution
//! is scaled back, so the output is equivariant under `y → αy, ε → αε`.

use crate::operators::LinearOperator;
use crate::{Error, Result};

const POWER_ITERATIONS: usize = 20;
const STEP_PRODUCT: f64 = 0.95;
const MIN_RELATIVE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Residual bound ε, in the units of `y`.
    pub epsilon: f64,
    pub max_outer_iterations: usize,
    /// Relative stopping threshold on the optimality residuals.
    pub tolerance: f64,
    /// Iterations during which the step sizes may still be rebalanced.
    pub warmup_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            epsilon: 0.0,
            max_outer_iterations: 5000,
            tolerance: 1e-6,
            warmup_iterations: 1000,
        }
    }
}

impl SolverOptions {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon {} must be finite and non-negative",
                self.epsilon
            )));
        }
        if self.max_outer_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_outer_iterations must be at least 1".into(),
            ));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance {} must be positive",
                self.tolerance
            )));
        }
        Ok(())
    }
}

/// One entry of the per-iteration trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub l1_norm: f64,
    pub residual_norm: f64,
    /// Step length in the method's own metric; non-increasing once the
    /// step sizes are frozen.
    pub fixed_point_residual: f64,
    pub warmup: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub iterations: usize,
    pub residual_norm: f64,
    pub l1_norm: f64,
    pub converged: bool,
    pub epsilon: f64,
    pub log: Vec<IterationRecord>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<f64>,
    pub report: SolverReport,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn ensure_finite(v: &[f64], what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Estimates `‖L‖²` by power iteration on `LᵀL`.
pub fn operator_norm_squared<L: LinearOperator + ?Sized>(op: &L) -> Result<f64> {
    let n = op.cols();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut estimate = 0.0;
    for it in 0..POWER_ITERATIONS {
        let w = op.apply_adjoint(&op.apply(&v)?)?;
        let len = norm(&w);
        if len == 0.0 {
            if it == 0 {
                // All-ones lies in the null space; restart from a fixed
                // non-constant vector.
                v = (0..n)
                    .map(|i| ((i as f64 + 1.0) * 0.618_033_988_749_895).fract() - 0.5)
                    .collect();
                let l = norm(&v);
                v.iter_mut().for_each(|x| *x /= l);
                continue;
            }
            break;
        }
        ensure_finite(&w, "power iteration")?;
        estimate = len;
        v = w.into_iter().map(|x| x / len).collect();
    }
    Ok(estimate)
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn project_ball(v: &mut [f64], center: &[f64], radius: f64) {
    let dist = diff_norm(v, center);
    if dist > radius {
        let k = radius / dist;
        for (x, c) in v.iter_mut().zip(center) {
            *x = c + (*x - c) * k;
        }
    }
}

#[derive(Clone)]
struct State {
    x: Vec<f64>,
    lx: Vec<f64>,
    u: Vec<f64>,
    ltu: Vec<f64>,
}

struct StepStats {
    fixed_point: f64,
    primal: f64,
    dual: f64,
}

struct Problem<'a, L: ?Sized> {
    op: &'a L,
    target: Vec<f64>,
    radius: f64,
}

impl<L: LinearOperator + ?Sized> Problem<'_, L> {
    fn step(&self, s: &State, tau: f64, sigma: f64) -> Result<(State, StepStats)> {
        let x: Vec<f64> = s
            .x
            .iter()
            .zip(&s.ltu)
            .map(|(xi, gi)| soft_threshold(xi - tau * gi, tau))
            .collect();
        let lx = self.op.apply(&x)?;
        ensure_finite(&lx, "primal iterate")?;

        // residual split: r = proj(u/σ + L x̄), u⁺ = u + σ(L x̄ − r)
        let lxbar: Vec<f64> = lx.iter().zip(&s.lx).map(|(a, b)| 2.0 * a - b).collect();
        let mut r: Vec<f64> = s
            .u
            .iter()
            .zip(&lxbar)
            .map(|(ui, li)| ui / sigma + li)
            .collect();
        project_ball(&mut r, &self.target, self.radius);
        let u: Vec<f64> = s
            .u
            .iter()
            .zip(&lxbar)
            .zip(&r)
            .map(|((ui, li), ri)| ui + sigma * (li - ri))
            .collect();
        let ltu = self.op.apply_adjoint(&u)?;
        ensure_finite(&ltu, "dual iterate")?;

        let dx: Vec<f64> = s.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let du: Vec<f64> = s.u.iter().zip(&u).map(|(a, b)| a - b).collect();
        let ldx: Vec<f64> = s.lx.iter().zip(&lx).map(|(a, b)| a - b).collect();
        let ltdu: Vec<f64> = s.ltu.iter().zip(&ltu).map(|(a, b)| a - b).collect();
        let fixed_point = (dot(&dx, &dx) / tau + dot(&du, &du) / sigma - 2.0 * dot(&ldx, &du))
            .max(0.0)
            .sqrt();
        let primal = dx
            .iter()
            .zip(&ltdu)
            .map(|(a, b)| (a / tau - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let dual = du
            .iter()
            .zip(&ldx)
            .map(|(a, b)| (a / sigma - b).powi(2))
            .sum::<f64>()
            .sqrt();
        Ok((
            State { x, lx, u, ltu },
            StepStats {
                fixed_point,
                primal,
                dual,
            },
        ))
    }
}

/// Running mean of the iterates since the last restart.
struct Average {
    sum: State,
    count: usize,
}

impl Average {
    fn new(n: usize, m: usize) -> Self {
        Self {
            sum: State {
                x: vec![0.0; n],
                lx: vec![0.0; m],
                u: vec![0.0; m],
                ltu: vec![0.0; n],
            },
            count: 0,
        }
    }

    fn add(&mut self, s: &State) {
        let pairs = [
            (&mut self.sum.x, &s.x),
            (&mut self.sum.lx, &s.lx),
            (&mut self.sum.u, &s.u),
            (&mut self.sum.ltu, &s.ltu),
        ];
        for (acc, v) in pairs {
            acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
        }
        self.count += 1;
    }

    fn mean(&self) -> State {
        let k = 1.0 / self.count as f64;
        let scale = |v: &[f64]| v.iter().map(|a| a * k).collect::<Vec<_>>();
        State {
            x: scale(&self.sum.x),
            lx: scale(&self.sum.lx),
            u: scale(&self.sum.u),
            ltu: scale(&self.sum.ltu),
        }
    }
}

// Iterations between restart checks, and the restart thresholds on the
// fixed-point residual relative to its value at the previous restart.
const RESTART_CHECK: usize = 32;
const RESTART_SUFFICIENT: f64 = 0.2;
const RESTART_NECESSARY: f64 = 0.8;
const RESTART_ARTIFICIAL: f64 = 0.36;

/// Solves the BPDN problem for `op` and data `y`.
///
/// Returns `Ok` with `report.converged == false` if the iteration budget
/// runs out; the caller decides what to do with the estimate.
pub fn bpdn_solve<L: LinearOperator + ?Sized>(
    op: &L,
    y: &[f64],
    opts: &SolverOptions,
) -> Result<Solution> {
    opts.validate()?;
    if y.len() != op.rows() {
        return Err(Error::LengthMismatch {
            expected: op.rows(),
            actual: y.len(),
        });
    }
    ensure_finite(y, "measurements")?;
    let n = op.cols();
    let m = op.rows();
    let scale = norm(y);
    if scale == 0.0 || opts.epsilon >= scale {
        // x = 0 is feasible and has the smallest possible ℓ1 norm.
        return Ok(Solution {
            x: vec![0.0; n],
            report: SolverReport {
                iterations: 0,
                residual_norm: scale,
                l1_norm: 0.0,
                converged: true,
                epsilon: opts.epsilon,
                log: Vec::new(),
            },
        });
    }

    let problem = Problem {
        op,
        target: y.iter().map(|v| v / scale).collect(),
        radius: (opts.epsilon / scale).max(MIN_RELATIVE_EPSILON),
    };
    let lipschitz = operator_norm_squared(op)?;
    if lipschitz <= 0.0 {
        return Err(Error::InvalidParameter("operator is zero".into()));
    }

    // Initial balance: a least-norm primal of size ~1/‖L‖ against a dual
    // whose backprojection is bounded by 1 in each of n coordinates.
    let mut tau = 4.0 * (STEP_PRODUCT / lipschitz).sqrt() / (n as f64).sqrt().max(1.0);
    let mut sigma = STEP_PRODUCT / (lipschitz * tau);

    let mut state = State {
        x: vec![0.0; n],
        lx: vec![0.0; m],
        u: vec![0.0; m],
        ltu: vec![0.0; n],
    };
    let mut average = Average::new(n, m);
    let mut anchor = state.clone();
    let mut since_restart = 0;
    let mut last_restart_fp = f64::INFINITY;
    let mut last_check_fp = f64::INFINITY;
    let mut log = Vec::new();
    let mut converged = false;

    let max_iterations = opts.max_outer_iterations;
    while log.len() < max_iterations {
        let k = log.len();
        let warmup = k < opts.warmup_iterations;
        let (mut next, mut stats) = problem.step(&state, tau, sigma)?;

        average.add(&next);
        since_restart += 1;
        if since_restart % RESTART_CHECK == 0 && log.len() + 1 < max_iterations {
            // Restart from whichever of the current and averaged iterates
            // is closer to a fixed point. Switching to the average only
            // when its step is shorter keeps the logged residual
            // non-increasing.
            let (avg_next, avg_stats) = problem.step(&average.mean(), tau, sigma)?;
            let from_average = avg_stats.fixed_point < stats.fixed_point;
            let candidate_fp = stats.fixed_point.min(avg_stats.fixed_point);
            let restart = candidate_fp <= RESTART_SUFFICIENT * last_restart_fp
                || (candidate_fp <= RESTART_NECESSARY * last_restart_fp
                    && candidate_fp > last_check_fp)
                || since_restart as f64 >= RESTART_ARTIFICIAL * log.len() as f64;
            last_check_fp = candidate_fp;
            if restart {
                if from_average {
                    push_record(&mut log, &next, &stats, &problem, scale, warmup);
                    next = avg_next;
                    stats = avg_stats;
                }
                if warmup {
                    let dx = diff_norm(&next.x, &anchor.x);
                    let du = diff_norm(&next.u, &anchor.u);
                    if dx > 0.0 && du > 0.0 {
                        let eta = (tau * sigma).sqrt();
                        let omega = ((du / dx).ln() * 0.5 + (sigma / tau).sqrt().ln() * 0.5).exp();
                        tau = eta / omega;
                        sigma = eta * omega;
                    }
                }
                anchor = next.clone();
                average = Average::new(n, m);
                since_restart = 0;
                last_restart_fp = candidate_fp;
            }
        }

        state = next;
        let residual = push_record(&mut log, &state, &stats, &problem, scale, warmup);
        let k = log.len() - 1;

        // Relative optimality: primal residual against the subgradient
        // scale (√n), dual residual against the data scale (1).
        let x_norm = norm(&state.x);
        let feasible = residual <= problem.radius * (1.0 + opts.tolerance);
        let primal_ok = stats.primal <= opts.tolerance * (n as f64).sqrt();
        let dual_ok = stats.dual <= opts.tolerance * (1.0 + x_norm);
        if feasible && primal_ok && dual_ok && k > 0 {
            converged = true;
            break;
        }

    }

    let iterations = log.len();
    let residual_norm = diff_norm(&state.lx, &problem.target) * scale;
    let mut x = state.x;
    x.iter_mut().for_each(|v| *v *= scale);
    Ok(Solution {
        report: SolverReport {
            iterations,
            residual_norm,
            l1_norm: l1(&x),
            converged,
            epsilon: opts.epsilon,
            log,
        },
        x,
    })
}

// Appends a trace entry in the caller's units; returns the normalized
// residual.
fn push_record<L: LinearOperator + ?Sized>(
    log: &mut Vec<IterationRecord>,
    s: &State,
    stats: &StepStats,
    problem: &Problem<'_, L>,
    scale: f64,
    warmup: bool,
) -> f64 {
    let residual = diff_norm(&s.lx, &problem.target);
    log.push(IterationRecord {
        l1_norm: l1(&s.x) * scale,
        residual_norm: residual * scale,
        fixed_point_residual: stats.fixed_point * scale,
        warmup,
    });
    residual
}
