//! Time evolution of the factorized phase-space state, expectation values
//! under the phase-space averaging rule, and the residual of the full
//! evolution identity on recorded snapshots.
//!
//! Two propagation routes are provided.  The eigenbasis route is exact:
//! every supported state has a closed-form expansion whose levels evolve by
//! pure phases, so "evolution" is sampling the closed form at later times
//! (coherent states are first expanded over the levels).  The split-step
//! route integrates the position wavefunction numerically with a
//! fourth-order composition of kick/drift steps and exists to check the
//! exact route, not to replace it.  Phase-space distributions are always
//! rebuilt from the evolved wavefunctions at each recorded time - they are
//! never integrated forward as fields.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    apply_stencil, extended_generator, harmonic_hamiltonian, to_stencil, ExtensionMethod, Gen,
    OperatorExpr, ParamBindings, VarCase,
};
use crate::error::{Error, Result};
use crate::hamilton_jacobi::{Accumulator, ResidualReport};
use crate::numerics::{fft::freq_index, integrate_1d, ComplexField, DerivMethod, PhaseSpaceGrid};
use crate::states::{build_eps_state, EPSState, StateKind, WavefunctionSpec};
use crate::transforms::{
    build_wigner, smooth_distribution, QuasiDistribution, SmoothingParams, SmoothingRoute,
};

/// Largest phase advance `omega * dt` accepted by the split-step integrator;
/// beyond this the composition error is no longer in its asymptotic regime.
pub const SPLIT_STEP_MAX_PHASE: f64 = 0.1;

/// Coherent-state expansion coefficients below this are dropped.
pub const EXPANSION_TAIL: f64 = 1e-12;

/// `|integral conj(chi)|` below this means the averaging rule has no usable
/// normalization.
pub const NORMALIZATION_FLOOR: f64 = 1e-8;

/// How to propagate the wavefunctions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionMethod {
    /// Expand over oscillator levels and advance exact eigenphases.
    Eigenbasis,
    /// Fourth-order kick/drift composition on the position grid.
    SplitStep,
}

/// Time-stepping plan.  `t_final` must be an integer number of steps `dt`;
/// states are recorded every `record_stride` steps and at the final time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub t_final: f64,
    pub dt: f64,
    pub method: EvolutionMethod,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
}

fn default_stride() -> usize {
    1
}

impl EvolutionConfig {
    pub fn validate(&self, params: &crate::states::OscillatorParams) -> Result<()> {
        params.validate()?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.t_final.is_finite() && self.t_final >= self.dt) {
            return Err(Error::invalid(format!(
                "final time {} must be at least one step {}",
                self.t_final, self.dt
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::invalid("record stride must be at least 1"));
        }
        let steps = self.t_final / self.dt;
        if (steps - steps.round()).abs() > 1e-6 {
            return Err(Error::invalid(format!(
                "final time {} is not an integer number of steps {}",
                self.t_final, self.dt
            )));
        }
        if self.method == EvolutionMethod::SplitStep
            && self.dt * params.omega > SPLIT_STEP_MAX_PHASE * (1.0 + 1e-12)
        {
            return Err(Error::Stability(format!(
                "split-step phase advance omega*dt = {} exceeds the bound {}",
                self.dt * params.omega,
                SPLIT_STEP_MAX_PHASE
            )));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    /// Step indices at which the state is recorded: every stride-th step,
    /// always including the final one.
    pub fn recorded_steps(&self) -> Vec<usize> {
        let n = self.n_steps();
        let mut out: Vec<usize> = (0..=n).step_by(self.record_stride).collect();
        if *out.last().unwrap() != n {
            out.push(n);
        }
        out
    }
}

/// Expectation-value time series of one evolution run.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    /// Strictly increasing recorded times.
    pub times: Vec<f64>,
    /// Observable label -> `[re, im]` at each recorded time.  Labels present:
    /// `q`, `p`, `H`, `norm` (the latter real by construction).
    pub expectations: BTreeMap<String, Vec<[f64; 2]>>,
    pub method: EvolutionMethod,
    /// The recorded states themselves, for callers that need more than the
    /// standard observables.
    #[serde(skip)]
    pub snapshots: Option<Vec<EPSState>>,
}

/// Propagates a state and records snapshots plus standard expectations.
pub fn evolve_wavefunctions(
    spec: &WavefunctionSpec,
    grid: PhaseSpaceGrid,
    config: &EvolutionConfig,
) -> Result<Trajectory> {
    config.validate(&spec.params)?;
    grid.validate()?;
    let states = match config.method {
        EvolutionMethod::Eigenbasis => evolve_eigenbasis(spec, grid, config)?,
        EvolutionMethod::SplitStep => evolve_split_step(spec, grid, config)?,
    };
    trajectory_from_states(states, config.method)
}

/// Assembles the standard trajectory columns from recorded states.
pub fn trajectory_from_states(
    states: Vec<EPSState>,
    method: EvolutionMethod,
) -> Result<Trajectory> {
    if states.is_empty() {
        return Err(Error::invalid("no recorded states"));
    }
    let q_obs = monomial_observable(1, 0)?;
    let p_obs = monomial_observable(0, 1)?;
    let h_obs = harmonic_hamiltonian()?;
    let mut expectations: BTreeMap<String, Vec<[f64; 2]>> = BTreeMap::new();
    let mut times = Vec::with_capacity(states.len());
    for state in &states {
        times.push(state.t);
        for (label, obs) in [("q", &q_obs), ("p", &p_obs), ("H", &h_obs)] {
            let v = eps_expectation(state, obs)?;
            expectations.entry(label.to_string()).or_default().push([v.re, v.im]);
        }
        let norm2 = integrate_1d(
            &state.psi.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>(),
            state.grid.dq(),
        )?;
        expectations.entry("norm".to_string()).or_default().push([norm2.sqrt(), 0.0]);
    }
    for w in times.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::invalid("recorded times must be strictly increasing"));
        }
    }
    Ok(Trajectory { times, expectations, method, snapshots: Some(states) })
}

/// The state description rewritten so that its time dependence is a sum of
/// exact eigenphases: coherent states become explicit superpositions.
fn eigenbasis_form(spec: &WavefunctionSpec) -> Result<WavefunctionSpec> {
    match spec.kind {
        StateKind::Coherent { q0, p0 } => {
            let coeffs =
                WavefunctionSpec::coherent_coefficients(&spec.params, q0, p0, EXPANSION_TAIL)?;
            Ok(WavefunctionSpec {
                kind: StateKind::Superposition {
                    coefficients: coeffs.into_iter().map(|c| (c.re, c.im)).collect(),
                },
                params: spec.params,
            })
        }
        _ => Ok(spec.clone()),
    }
}

fn evolve_eigenbasis(
    spec: &WavefunctionSpec,
    grid: PhaseSpaceGrid,
    config: &EvolutionConfig,
) -> Result<Vec<EPSState>> {
    let basis_spec = eigenbasis_form(spec)?;
    config
        .recorded_steps()
        .iter()
        .map(|&i| build_eps_state(&basis_spec, grid, i as f64 * config.dt))
        .collect()
}

fn evolve_split_step(
    spec: &WavefunctionSpec,
    grid: PhaseSpaceGrid,
    config: &EvolutionConfig,
) -> Result<Vec<EPSState>> {
    let params = spec.params;
    let n = grid.n_q;
    let hbar = params.hbar;
    let k = params.k();
    let mut psi: Vec<C64> = (0..n).map(|i| spec.psi(grid.q(i), 0.0)).collect();

    // kinetic factors act in the Fourier basis of the periodized window
    let period = n as f64 * grid.dq();
    let momenta: Vec<f64> = (0..n)
        .map(|j| hbar * 2.0 * std::f64::consts::PI * freq_index(j, n) as f64 / period)
        .collect();
    let positions: Vec<f64> = (0..n).map(|i| grid.q(i)).collect();

    // fourth-order triple-jump composition of the symmetric kick/drift step
    let w1 = 1.0 / (2.0 - 2f64.powf(1.0 / 3.0));
    let w0 = 1.0 - 2.0 * w1;
    let phase = |theta: f64| C64::new(theta.cos(), theta.sin());
    let tables = |tau: f64| {
        let half_kick: Vec<C64> =
            positions.iter().map(|&q| phase(-0.5 * k * q * q * 0.5 * tau / hbar)).collect();
        let drift: Vec<C64> =
            momenta.iter().map(|&p| phase(-p * p / (2.0 * params.m) * tau / hbar)).collect();
        (half_kick, drift)
    };
    let (kick1, drift1) = tables(w1 * config.dt);
    let (kick0, drift0) = tables(w0 * config.dt);

    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let inv_n = 1.0 / n as f64;
    let strang = |psi: &mut Vec<C64>, kick: &[C64], drift: &[C64]| {
        for (v, f) in psi.iter_mut().zip(kick) {
            *v *= f;
        }
        fwd.process(psi);
        for (v, f) in psi.iter_mut().zip(drift) {
            *v *= f;
        }
        inv.process(psi);
        for (v, f) in psi.iter_mut().zip(kick) {
            *v = *v * inv_n * f;
        }
    };

    let recorded = config.recorded_steps();
    let mut out = Vec::with_capacity(recorded.len());
    let mut next = 0usize;
    for step in 0..=config.n_steps() {
        if next < recorded.len() && recorded[next] == step {
            out.push(assemble_sampled_state(spec, grid, step as f64 * config.dt, psi.clone())?);
            next += 1;
        }
        if step < config.n_steps() {
            strang(&mut psi, &kick1, &drift1);
            strang(&mut psi, &kick0, &drift0);
            strang(&mut psi, &kick1, &drift1);
        }
    }
    Ok(out)
}

/// Builds a full phase-space state from a sampled position wavefunction:
/// the momentum factor comes from direct trapezoid quadrature of the
/// Fourier integral at the grid's own momentum points, and the combined
/// function follows the usual product form.
fn assemble_sampled_state(
    spec: &WavefunctionSpec,
    grid: PhaseSpaceGrid,
    t: f64,
    psi: Vec<C64>,
) -> Result<EPSState> {
    let hbar = spec.params.hbar;
    let norm = integrate_1d(&psi.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>(), grid.dq())?;
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::DomainCoverage(format!(
            "evolved wavefunction norm drifted to {norm:.9}; the window no longer covers the state"
        )));
    }
    let scale = grid.dq() / (2.0 * std::f64::consts::PI * hbar).sqrt();
    let mut phi = Vec::with_capacity(grid.n_p);
    for ip in 0..grid.n_p {
        let p = grid.p(ip);
        let mut acc = C64::new(0.0, 0.0);
        for (iq, v) in psi.iter().enumerate() {
            let w = if iq == 0 || iq == grid.n_q - 1 { 0.5 } else { 1.0 };
            let theta = -p * grid.q(iq) / hbar;
            acc += w * v * C64::new(theta.cos(), theta.sin());
        }
        phi.push(acc * scale);
    }
    let mut chi = ComplexField::zeros(grid, "chi");
    for ip in 0..grid.n_p {
        let p = grid.p(ip);
        let phi_c = phi[ip].conj();
        for iq in 0..grid.n_q {
            let theta = -p * grid.q(iq) / hbar;
            chi.values[[ip, iq]] = psi[iq] * phi_c * C64::new(theta.cos(), theta.sin());
        }
    }
    Ok(EPSState { spec: spec.clone(), t, grid, chi, psi, phi })
}

/// `q^a p^b` as a classical observable.
pub fn monomial_observable(a: u32, b: u32) -> Result<OperatorExpr> {
    OperatorExpr::generator(Gen::Q, VarCase::Lower)
        .pow(a)?
        .mul(&OperatorExpr::generator(Gen::P, VarCase::Lower).pow(b)?)
}

/// Averages a classical observable over the phase-space state:
/// `<O> = integral O(q, p) conj(chi) dq dp / integral conj(chi) dq dp`.
///
/// For a monomial `q^a p^b` this equals the standard-ordered matrix element
/// `<psi| q-hat^a p-hat^b |psi>` (position factors to the left): integrating
/// the momentum factor against `conj(chi)` over `p` turns it into
/// derivatives acting on `psi`.  The result is complex in general; it is
/// real for pure-position and pure-momentum monomials and for the energy.
///
/// The observable must be a polynomial in the base alphabet without
/// conjugate momenta.  The width parameter `f` has no meaning here, so an
/// observable mentioning it is rejected as unbound.
pub fn eps_expectation(state: &EPSState, observable: &OperatorExpr) -> Result<C64> {
    let params = state.spec.params;
    params.validate()?;
    if observable.terms().any(|(key, _)| key.piq > 0 || key.pip > 0) {
        return Err(Error::invalid(
            "phase-space average expects a classical observable without conjugate momenta",
        ));
    }
    if observable.case() == Some(VarCase::Upper) {
        return Err(Error::invalid(
            "phase-space average expects the base alphabet q, p",
        ));
    }
    let bindings = ParamBindings::new()
        .set("hbar", params.hbar)?
        .set("m", params.m)?
        .set("k", params.k())?
        .set("omega", params.omega)?;
    let terms = to_stencil(observable, &bindings)?;
    let g = state.grid;
    let dq = g.dq();
    let dp = g.dp();
    // trapezoid in both directions with a fixed accumulation order
    let mut numerator = C64::new(0.0, 0.0);
    let mut denominator = C64::new(0.0, 0.0);
    for ip in 0..g.n_p {
        let wp = if ip == 0 || ip == g.n_p - 1 { 0.5 } else { 1.0 };
        let p = g.p(ip);
        let mut row_num = C64::new(0.0, 0.0);
        let mut row_den = C64::new(0.0, 0.0);
        for iq in 0..g.n_q {
            let wq = if iq == 0 || iq == g.n_q - 1 { 0.5 } else { 1.0 };
            let q = g.q(iq);
            let mut value = C64::new(0.0, 0.0);
            for term in &terms {
                value += term.factor * q.powi(term.q_pow as i32) * p.powi(term.p_pow as i32);
            }
            let cc = state.chi.values[[ip, iq]].conj() * wq;
            row_num += value * cc;
            row_den += cc;
        }
        numerator += row_num * wp;
        denominator += row_den * wp;
    }
    numerator *= dq * dp;
    denominator *= dq * dp;
    if denominator.norm() < NORMALIZATION_FLOOR {
        return Err(Error::Normalization(format!(
            "averaging normalization |integral conj(chi)| = {:.3e} is below {NORMALIZATION_FLOOR}",
            denominator.norm()
        )));
    }
    Ok(numerator / denominator)
}

/// Distributions rebuilt from the evolved state at each recorded time.
#[derive(Debug, Clone)]
pub struct DistributionSeries {
    pub times: Vec<f64>,
    pub wigner: Vec<QuasiDistribution>,
    pub husimi: Vec<QuasiDistribution>,
}

/// Rebuilds the phase-space distribution and its smoothing at every
/// recorded time from the exactly-evolved wavefunctions.  The distributions
/// are never themselves time-stepped, so each snapshot carries the full
/// accuracy of the underlying state, and the built-in mass and positivity
/// guards run at every time.
pub fn evolve_distributions(
    spec: &WavefunctionSpec,
    grid: PhaseSpaceGrid,
    smoothing: SmoothingParams,
    config: &EvolutionConfig,
) -> Result<DistributionSeries> {
    config.validate(&spec.params)?;
    grid.validate()?;
    let basis_spec = eigenbasis_form(spec)?;
    let mut times = Vec::new();
    let mut wigner = Vec::new();
    let mut husimi = Vec::new();
    for &step in &config.recorded_steps() {
        let t = step as f64 * config.dt;
        let w = build_wigner(&basis_spec, grid, t)?;
        let (h, _) = smooth_distribution(&w, smoothing, SmoothingRoute::Convolution)?;
        times.push(t);
        wigner.push(w);
        husimi.push(h);
    }
    Ok(DistributionSeries { times, wigner, husimi })
}

/// Residual of the full evolution identity `i hbar d chi / dt = H chi` on a
/// ladder of at least three uniformly spaced snapshots.
///
/// The generator is the lifted oscillator Hamiltonian applied as a grid
/// stencil; the time derivative is a centered difference, so the residual
/// is evaluated at the interior snapshots, masked to samples where the
/// state amplitude exceeds `threshold` times its peak.
pub fn eps_equation_residual(
    series: &[EPSState],
    threshold: f64,
    method: DerivMethod,
) -> Result<ResidualReport> {
    if series.len() < 3 {
        return Err(Error::invalid(
            "evolution-equation residual needs at least three snapshots",
        ));
    }
    let first = &series[0];
    let params = first.spec.params;
    params.validate()?;
    if !(threshold > 0.0) {
        return Err(Error::invalid("support threshold must be positive"));
    }
    for s in series {
        if s.grid != first.grid {
            return Err(Error::invalid("snapshots must share one grid"));
        }
        if s.spec.params != params {
            return Err(Error::invalid("snapshots must share oscillator constants"));
        }
    }
    let dt = series[1].t - series[0].t;
    if !(dt > 0.0) {
        return Err(Error::invalid("snapshot times must be strictly increasing"));
    }
    for w in series.windows(2) {
        if ((w[1].t - w[0].t) - dt).abs() > 1e-9 * dt {
            return Err(Error::invalid("snapshot times must be uniformly spaced"));
        }
    }
    let generator = extended_generator(&harmonic_hamiltonian()?, ExtensionMethod::Shift)?;
    let bindings = ParamBindings::full(params.hbar, params.m, params.k(), 1.0, params.omega);
    let terms = to_stencil(&generator, &bindings)?;
    let g = first.grid;
    let over_i_hbar = C64::new(0.0, -1.0 / params.hbar);
    let mut acc = Accumulator::new();
    for idx in 1..series.len() - 1 {
        let state = &series[idx];
        let action = apply_stencil(&state.chi, &terms, method)?;
        let peak = state.chi.values.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
        let cut = threshold * peak;
        let denom = 2.0 * dt;
        for ip in 0..g.n_p {
            for iq in 0..g.n_q {
                let keep = state.chi.values[[ip, iq]].norm() > cut && g.is_interior(ip, iq);
                acc.count_point(keep);
                if !keep {
                    continue;
                }
                let dchi = (series[idx + 1].chi.values[[ip, iq]]
                    - series[idx - 1].chi.values[[ip, iq]])
                    / denom;
                let res = dchi - action[[ip, iq]] * over_i_hbar;
                acc.push_sample(res.norm());
            }
        }
    }
    acc.finish("evolution-equation[centered-dt]".into(), g, params)
}
