//! Pointwise residual checks of the dynamical identities obeyed by the
//! phase-space wavefunction and by its smoothed distributions.
//!
//! Writing `chi = R e^{i S / hbar}` splits the evolution equation into a
//! real part - a Hamilton-Jacobi-type equation for the phase in which the
//! amplitude curvature enters as a quantum potential with one contribution
//! per axis - and an imaginary part, a transport equation for the amplitude.
//! Both are checked sample-by-sample on the amplitude support.
//!
//! Separately, the Gaussian-smoothed distribution obeys a closed evolution
//! equation whose generator is the classical flow conjugated by the
//! smoothing operator ([`crate::algebra::smoothed_flow_generator`]).  At the
//! width matched to the oscillator the conjugation correction vanishes and
//! the smoothed density is transported classically; at any other width the
//! mixed-derivative correction is required.  Residual statistics are
//! returned as [`ResidualReport`]s, never asserted internally: tolerances
//! belong to the caller.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::algebra::{classical_flow_generator, smoothed_flow_generator, to_stencil, ParamBindings};
use crate::error::{Error, Result};
use crate::numerics::{
    partial_derivative_real, Axis, ComplexField, DerivMethod, PhaseSpaceGrid, RealField,
};
use crate::states::{chi_derivatives, polar_decompose, EPSState, OscillatorParams, PolarData, StateKind, WavefunctionSpec};
use crate::transforms::{build_wigner, smooth_distribution, SmoothingParams, SmoothingRoute};

/// Below this mask coverage a residual statistic describes only a sliver of
/// the grid and is flagged as non-representative.
pub const MIN_REPRESENTATIVE_FRACTION: f64 = 0.1;

/// Relative spacing tolerance for a uniform time-sample ladder.
const TIME_SPACING_REL_TOL: f64 = 1e-9;

/// Summary statistics of one identity checked pointwise on a masked grid.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    /// Which identity was checked, including the evaluation mode.
    pub identity: String,
    /// Largest absolute residual over the evaluated samples.
    pub max_abs: f64,
    /// Root-mean-square residual over the evaluated samples.
    pub l2: f64,
    /// Fraction of grid samples that entered the statistics.
    pub mask_fraction: f64,
    /// Whether the mask covers enough of the grid (more than
    /// [`MIN_REPRESENTATIVE_FRACTION`]) for the statistics to characterize
    /// the state rather than a sliver of it.
    pub representative: bool,
    pub grid: PhaseSpaceGrid,
    pub params: OscillatorParams,
}

impl ResidualReport {
    /// Pass/fail against a caller-chosen tolerance on the sup norm.
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_abs.is_finite() && self.max_abs <= tolerance
    }

    /// The report together with its verdict, for serialization.
    pub fn judged(&self, tolerance: f64) -> JudgedResidual {
        JudgedResidual { report: self.clone(), tolerance, pass: self.passes(tolerance) }
    }
}

/// A [`ResidualReport`] judged against a tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct JudgedResidual {
    #[serde(flatten)]
    pub report: ResidualReport,
    pub tolerance: f64,
    pub pass: bool,
}

/// Streaming accumulator for masked residual statistics.
pub(crate) struct Accumulator {
    max_abs: f64,
    sum_sq: f64,
    samples: usize,
    kept_points: usize,
    total_points: usize,
}

impl Accumulator {
    pub(crate) fn new() -> Self {
        Accumulator { max_abs: 0.0, sum_sq: 0.0, samples: 0, kept_points: 0, total_points: 0 }
    }

    /// Record one residual sample (a point may contribute several).
    pub(crate) fn push_sample(&mut self, value: f64) {
        let a = value.abs();
        if a > self.max_abs {
            self.max_abs = a;
        }
        self.sum_sq += value * value;
        self.samples += 1;
    }

    /// Record mask membership of one grid point (per evaluation time).
    pub(crate) fn count_point(&mut self, in_mask: bool) {
        self.total_points += 1;
        if in_mask {
            self.kept_points += 1;
        }
    }

    pub(crate) fn finish(
        self,
        identity: String,
        grid: PhaseSpaceGrid,
        params: OscillatorParams,
    ) -> Result<ResidualReport> {
        if self.samples == 0 {
            return Err(Error::invalid(
                "support mask is empty: no samples to evaluate (threshold too high?)",
            ));
        }
        let mask_fraction = self.kept_points as f64 / self.total_points as f64;
        Ok(ResidualReport {
            identity,
            max_abs: self.max_abs,
            l2: (self.sum_sq / self.samples as f64).sqrt(),
            mask_fraction,
            representative: mask_fraction > MIN_REPRESENTATIVE_FRACTION,
            grid,
            params,
        })
    }
}

/// Whether the state's polar structure is time-independent.  For a single
/// eigenstate the two factor phases cancel, so both `R` and `grad S` are
/// frozen; anything with more than one populated level rotates.
/// Whether the state's density and distributions are time-independent:
/// eigenstates and single-level superpositions are; anything whose levels
/// beat against each other is not.
pub fn is_stationary(spec: &WavefunctionSpec) -> bool {
    match &spec.kind {
        StateKind::Eigenstate { .. } => true,
        StateKind::Coherent { .. } => false,
        StateKind::Superposition { coefficients } => {
            coefficients.iter().filter(|(re, im)| re * re + im * im > 0.0).count() <= 1
        }
    }
}

fn ensure_nonempty_mask(polar: &PolarData) -> Result<()> {
    if polar.mask_fraction == 0.0 {
        return Err(Error::invalid(
            "polar support mask is empty: threshold excludes every interior sample",
        ));
    }
    Ok(())
}

/// The amplitude-curvature corrections to the phase equation, one per axis.
///
/// All fields vanish outside `mask`, which is the support mask of the polar
/// decomposition they came from.
#[derive(Debug, Clone)]
pub struct QuantumPotentialFields {
    /// `-(hbar^2 / 2m) (d^2 R / dq^2) / R`
    pub qp_q: RealField,
    /// `+(hbar^2 k / 2) (d^2 R / dp^2) / R`
    pub qp_p: RealField,
    /// `qp_q + qp_p`
    pub total: RealField,
    pub mask: Array2<bool>,
    pub mask_fraction: f64,
}

/// Builds the two quantum-potential contributions from a polar decomposition.
///
/// The signs differ between the axes - the momentum-direction curvature
/// enters the phase equation with the opposite sense, mirroring the relative
/// sign of the two second-derivative terms in the evolution generator.
pub fn quantum_potential(
    polar: &PolarData,
    params: &OscillatorParams,
) -> Result<QuantumPotentialFields> {
    params.validate()?;
    ensure_nonempty_mask(polar)?;
    let g = polar.r.grid;
    let cq = -params.hbar * params.hbar / (2.0 * params.m);
    let cp = params.hbar * params.hbar * params.k() / 2.0;
    let mut qp_q = RealField::zeros(g, "quantum-potential-q");
    let mut qp_p = RealField::zeros(g, "quantum-potential-p");
    let mut total = RealField::zeros(g, "quantum-potential");
    // the curvature ratios are already zero off-mask, so plain scaling
    // preserves the support
    for ip in 0..g.n_p {
        for iq in 0..g.n_q {
            let vq = cq * polar.lap_r_over_r_q.values[[ip, iq]];
            let vp = cp * polar.lap_r_over_r_p.values[[ip, iq]];
            qp_q.values[[ip, iq]] = vq;
            qp_p.values[[ip, iq]] = vp;
            total.values[[ip, iq]] = vq + vp;
        }
    }
    Ok(QuantumPotentialFields {
        qp_q,
        qp_p,
        total,
        mask: polar.mask.clone(),
        mask_fraction: polar.mask_fraction,
    })
}

/// Evaluates the evolution generator on the phase gradients as a classical
/// observable: `g_q^2/(2m) + (p/m) g_q - (k/2) g_p^2 - k q g_p` with
/// `g_q = dS/dq`, `g_p = dS/dp`.  Zero outside the polar mask.
pub fn extended_hamiltonian_value(
    polar: &PolarData,
    params: &OscillatorParams,
) -> Result<RealField> {
    params.validate()?;
    ensure_nonempty_mask(polar)?;
    let g = polar.r.grid;
    let k = params.k();
    let m = params.m;
    let mut out = RealField::zeros(g, "hamiltonian-on-phase-gradients");
    for ip in 0..g.n_p {
        let p = g.p(ip);
        for iq in 0..g.n_q {
            if !polar.mask[[ip, iq]] {
                continue;
            }
            let q = g.q(iq);
            let gq = polar.grad_s_q.values[[ip, iq]];
            let gp = polar.grad_s_p.values[[ip, iq]];
            out.values[[ip, iq]] = gq * gq / (2.0 * m) + (p / m) * gq - 0.5 * k * gp * gp - k * q * gp;
        }
    }
    Ok(out)
}

/// How the time derivative of the phase is supplied to the phase-equation
/// residual.
pub enum PhaseRate<'a> {
    /// The phase structure does not move (single eigenstates only).
    Stationary,
    /// Sampled time derivatives of the two phase-gradient fields, e.g. from
    /// centered differences of polar decompositions at neighbouring times.
    /// The residual is then evaluated in gradient form - as the spatial
    /// gradient of the phase equation - which sidesteps the unobservable
    /// additive constant in the phase.
    GradientRates {
        d_grad_s_q_dt: &'a RealField,
        d_grad_s_p_dt: &'a RealField,
        /// Samples where the supplied rates are trustworthy (typically the
        /// intersection of the support masks at the sampling times).
        valid: &'a Array2<bool>,
    },
}

/// Residual of the phase (Hamilton-Jacobi-type) equation
/// `dS/dt + H(grad S) + QP_total = 0` on the amplitude support.
///
/// * `PhaseRate::Stationary` checks `H(grad S) + QP_total` directly and is
///   rejected for states whose phase structure moves.
/// * `PhaseRate::GradientRates` checks the gradient of the equation:
///   `d(grad S)/dt + grad [H(grad S) + QP_total] = 0`, componentwise.  The
///   outer gradient is a five-point finite difference regardless of
///   `method` (the bracketed field is zero outside the mask, so a global
///   trigonometric derivative would ring), and the mask is eroded by the
///   stencil radius so no stencil reads off-support values.
pub fn modified_hj_residual(
    state: &EPSState,
    rate: PhaseRate,
    threshold: f64,
    method: DerivMethod,
) -> Result<ResidualReport> {
    let params = state.spec.params;
    params.validate()?;
    let polar = polar_decompose(state, threshold, method)?;
    let qp = quantum_potential(&polar, &params)?;
    let h = extended_hamiltonian_value(&polar, &params)?;
    let g = state.grid;
    let mut acc = Accumulator::new();
    match rate {
        PhaseRate::Stationary => {
            if !is_stationary(&state.spec) {
                return Err(Error::invalid(
                    "phase-equation residual: this state's phase moves in time; supply gradient rates instead of the stationary flag",
                ));
            }
            for ip in 0..g.n_p {
                for iq in 0..g.n_q {
                    let keep = polar.mask[[ip, iq]];
                    acc.count_point(keep);
                    if keep {
                        acc.push_sample(qp.total.values[[ip, iq]] + h.values[[ip, iq]]);
                    }
                }
            }
            acc.finish("phase-equation[stationary]".into(), g, params)
        }
        PhaseRate::GradientRates { d_grad_s_q_dt, d_grad_s_p_dt, valid } => {
            for field in [d_grad_s_q_dt, d_grad_s_p_dt] {
                if field.grid != g {
                    return Err(Error::invalid(
                        "phase-equation residual: rate fields live on a different grid than the state",
                    ));
                }
            }
            if valid.dim() != (g.n_p, g.n_q) {
                return Err(Error::invalid(
                    "phase-equation residual: validity mask shape does not match the grid",
                ));
            }
            let mut bracket = RealField::zeros(g, "phase-equation-bracket");
            for ip in 0..g.n_p {
                for iq in 0..g.n_q {
                    bracket.values[[ip, iq]] = qp.total.values[[ip, iq]] + h.values[[ip, iq]];
                }
            }
            let dq = partial_derivative_real(&bracket, Axis::Q, 1, DerivMethod::Fd4)?;
            let dp = partial_derivative_real(&bracket, Axis::P, 1, DerivMethod::Fd4)?;
            let eroded = erode(&polar.mask, 2);
            for ip in 0..g.n_p {
                for iq in 0..g.n_q {
                    let keep = eroded[[ip, iq]] && valid[[ip, iq]];
                    acc.count_point(keep);
                    if keep {
                        acc.push_sample(
                            d_grad_s_q_dt.values[[ip, iq]] + dq.values[[ip, iq]],
                        );
                        acc.push_sample(
                            d_grad_s_p_dt.values[[ip, iq]] + dp.values[[ip, iq]],
                        );
                    }
                }
            }
            acc.finish("phase-equation[gradient-form]".into(), g, params)
        }
    }
}

/// Shrinks a mask so every kept sample has its full square neighbourhood of
/// the given radius inside the original mask.
fn erode(mask: &Array2<bool>, radius: usize) -> Array2<bool> {
    let (np, nq) = mask.dim();
    let r = radius as isize;
    let mut out = Array2::from_elem((np, nq), false);
    for ip in 0..np as isize {
        for iq in 0..nq as isize {
            if !mask[[ip as usize, iq as usize]] {
                continue;
            }
            let mut keep = true;
            'scan: for dp in -r..=r {
                for dq in -r..=r {
                    let jp = ip + dp;
                    let jq = iq + dq;
                    if jp < 0
                        || jq < 0
                        || jp >= np as isize
                        || jq >= nq as isize
                        || !mask[[jp as usize, jq as usize]]
                    {
                        keep = false;
                        break 'scan;
                    }
                }
            }
            out[[ip as usize, iq as usize]] = keep;
        }
    }
    out
}

/// Residual of the amplitude-transport equation (the imaginary part of the
/// evolution identity in polar form) for stationary states:
///
/// `R_q S_q / m + R S_qq / (2m) + (p/m) R_q - k R_p S_p - (k/2) R S_pp - k q R_p = 0`.
///
/// Every term carries a factor of the amplitude, so the expression is
/// assembled R-weighted from log-derivatives: `R_x = R Re(chi_x/chi)`,
/// `S_x = hbar Im(chi_x/chi)`, `R S_xx = R hbar Im(chi_xx/chi - (chi_x/chi)^2)`.
/// This stays finite (and keeps the finite-difference error flat) right up
/// to amplitude nodes, where the bare log-derivatives diverge.
pub fn imaginary_part_residual(
    state: &EPSState,
    threshold: f64,
    method: DerivMethod,
) -> Result<ResidualReport> {
    let params = state.spec.params;
    params.validate()?;
    if !is_stationary(&state.spec) {
        return Err(Error::invalid(
            "amplitude-transport residual covers stationary states; moving states are checked through the full evolution-equation residual",
        ));
    }
    if !(threshold > 0.0) {
        return Err(Error::invalid("support threshold must be positive"));
    }
    let d = chi_derivatives(state, method)?;
    let g = state.grid;
    let hbar = params.hbar;
    let m = params.m;
    let k = params.k();
    let r_max = state.chi.values.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    if r_max == 0.0 {
        return Err(Error::invalid("state amplitude is identically zero"));
    }
    let cut = threshold * r_max;
    let mut acc = Accumulator::new();
    for ip in 0..g.n_p {
        let p = g.p(ip);
        for iq in 0..g.n_q {
            let chi = state.chi.values[[ip, iq]];
            let r = chi.norm();
            let keep = r > cut && g.is_interior(ip, iq);
            acc.count_point(keep);
            if !keep {
                continue;
            }
            let q = g.q(iq);
            let l1q = d.d1q[[ip, iq]] / chi;
            let l1p = d.d1p[[ip, iq]] / chi;
            let l2q = d.d2q[[ip, iq]] / chi;
            let l2p = d.d2p[[ip, iq]] / chi;
            let s_q = hbar * l1q.im;
            let s_p = hbar * l1p.im;
            let r_q = r * l1q.re;
            let r_p = r * l1p.re;
            // Im(l2 - l1^2) = Im l2 - 2 Re l1 Im l1
            let r_s_qq = r * hbar * (l2q.im - 2.0 * l1q.re * l1q.im);
            let r_s_pp = r * hbar * (l2p.im - 2.0 * l1p.re * l1p.im);
            let res = r_q * s_q / m + 0.5 * r_s_qq / m + (p / m) * r_q
                - k * r_p * s_p
                - 0.5 * k * r_s_pp
                - k * q * r_p;
            acc.push_sample(res);
        }
    }
    acc.finish("amplitude-transport[stationary]".into(), g, params)
}

/// Which part of the smoothed-evolution generator to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistributionStencil {
    /// First-order classical flow only: `(P/m) dP/dQ - k Q dP/dP`.  Exact
    /// for the smoothed density only at the matched width.
    Transport,
    /// The conjugated generator for this width: classical flow plus the
    /// mixed-derivative correction with real-space coefficient
    /// `hbar^2/(2 m f) - f k / 2`.  Exact for every width.
    Full,
}

/// Residual of the evolution equation of the Gaussian-smoothed distribution,
/// `dP/dt + (P/m) dP/dQ - k Q dP/dP [+ cross term] = 0`, sampled at the
/// given times.
///
/// The generator is built symbolically (classical flow, optionally
/// conjugated by the smoothing operator), flattened to a grid stencil, and
/// applied with the requested derivative method.  For stationary states the
/// time term is dropped and every sample time is checked independently; for
/// moving states at least three uniformly spaced times are required and the
/// time derivative is a centered difference, so the residual is evaluated at
/// the interior times only.
///
/// The mask keeps samples where the density exceeds `threshold` times its
/// peak, away from the grid edges.
pub fn husimi_equation_residual(
    spec: &WavefunctionSpec,
    smoothing: SmoothingParams,
    grid: PhaseSpaceGrid,
    t_samples: &[f64],
    stencil: DistributionStencil,
    threshold: f64,
    method: DerivMethod,
) -> Result<ResidualReport> {
    let params = spec.params;
    params.validate()?;
    grid.validate()?;
    if t_samples.is_empty() {
        return Err(Error::invalid("at least one sample time is required"));
    }
    if !(threshold > 0.0) {
        return Err(Error::invalid("support threshold must be positive"));
    }
    let stationary = is_stationary(spec);
    let dt = if stationary {
        0.0
    } else {
        if t_samples.len() < 3 {
            return Err(Error::invalid(
                "time-dependent distribution residual needs at least three uniformly spaced sample times",
            ));
        }
        let dt = t_samples[1] - t_samples[0];
        if !(dt > 0.0) {
            return Err(Error::invalid("sample times must be strictly increasing"));
        }
        for w in t_samples.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > TIME_SPACING_REL_TOL * dt.abs() {
                return Err(Error::invalid("sample times must be uniformly spaced"));
            }
        }
        dt
    };

    let expr = match stencil {
        DistributionStencil::Transport => classical_flow_generator()?,
        DistributionStencil::Full => smoothed_flow_generator()?.result,
    };
    let bindings = ParamBindings::full(params.hbar, params.m, params.k(), smoothing.f, params.omega);
    let terms = to_stencil(&expr, &bindings)?;

    let fields: Vec<RealField> = t_samples
        .iter()
        .map(|&t| {
            let w = build_wigner(spec, grid, t)?;
            let (h, _) = smooth_distribution(&w, smoothing, SmoothingRoute::Convolution)?;
            Ok(h.field)
        })
        .collect::<Result<_>>()?;

    let eval_indices: Vec<usize> =
        if stationary { (0..fields.len()).collect() } else { (1..fields.len() - 1).collect() };

    let mut acc = Accumulator::new();
    for &idx in &eval_indices {
        let field = &fields[idx];
        let lifted = ComplexField::new(
            grid,
            field.values.mapv(|v| C64::new(v, 0.0)),
            "lifted-density",
        )?;
        // generator action; dividing by i hbar turns it into the advection
        // rate, whose real part is minus d/dt of the density
        let action = crate::algebra::apply_stencil(&lifted, &terms, method)?;
        let cut = threshold * field.max_abs();
        for ip in 0..grid.n_p {
            for iq in 0..grid.n_q {
                let keep = field.values[[ip, iq]] > cut && grid.is_interior(ip, iq);
                acc.count_point(keep);
                if !keep {
                    continue;
                }
                let dpdt = if stationary {
                    0.0
                } else {
                    (fields[idx + 1].values[[ip, iq]] - fields[idx - 1].values[[ip, iq]])
                        / (2.0 * dt)
                };
                // Re[(1/i hbar) * action] = Im(action)/hbar
                acc.push_sample(dpdt - action[[ip, iq]].im / params.hbar);
            }
        }
    }
    let mode = match stencil {
        DistributionStencil::Transport => "classical-flow",
        DistributionStencil::Full => "conjugated-generator",
    };
    let time_note = if stationary { "stationary" } else { "centered-dt" };
    acc.finish(
        format!("smoothed-evolution[{mode}, {time_note}, f={}]", smoothing.f),
        grid,
        params,
    )
}

/// Residual of the classical-transport reading of the matched-width
/// distribution.
///
/// At `f = hbar/(m omega)` the smoothed density is the overlap density with
/// the oscillator's own coherent states, and its evolution closes under the
/// bare classical flow - the conjugation correction vanishes identically.
/// This wrapper enforces the matched width (any other width needs the full
/// conjugated generator and is rejected) and then runs the first-order
/// transport residual.
pub fn q_representation_residual(
    spec: &WavefunctionSpec,
    smoothing: SmoothingParams,
    grid: PhaseSpaceGrid,
    t_samples: &[f64],
    threshold: f64,
    method: DerivMethod,
) -> Result<ResidualReport> {
    let f0 = spec.params.matched_f()?;
    if !smoothing.matches_ground_state(&spec.params) {
        return Err(Error::invalid(format!(
            "classical transport of the smoothed density holds only at the matched width {f0}; \
             got f={} (use the conjugated-generator residual for other widths)",
            smoothing.f
        )));
    }
    let mut report = husimi_equation_residual(
        spec,
        smoothing,
        grid,
        t_samples,
        DistributionStencil::Transport,
        threshold,
        method,
    )?;
    report.identity = format!(
        "q-distribution-transport[matched width f={}: overlap density follows the classical flow]",
        smoothing.f
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{build_eps_state, DEFAULT_POLAR_THRESHOLD};

    fn params() -> OscillatorParams {
        OscillatorParams::natural()
    }

    fn eigenstate(n: u32, grid_n: usize) -> EPSState {
        let spec = WavefunctionSpec::eigenstate(n, params()).unwrap();
        build_eps_state(&spec, PhaseSpaceGrid::square(8.0, grid_n).unwrap(), 0.0).unwrap()
    }

    /// A hand-built state on an eigenstate spec: `|chi| = e^{-(q^2+p^2)/2}`
    /// with phase `S(q, p)`.
    fn synthetic(phase: impl Fn(f64, f64) -> f64) -> EPSState {
        let spec = WavefunctionSpec::eigenstate(0, params()).unwrap();
        let grid = PhaseSpaceGrid::square(8.0, 256).unwrap();
        let chi = ComplexField::from_fn(grid, "synthetic", |p, q| {
            (C64::new(-(q * q + p * p) / 2.0, phase(q, p))).exp()
        });
        EPSState { spec, t: 0.0, grid, chi, psi: vec![C64::new(0.0, 0.0); grid.n_q], phi: vec![C64::new(0.0, 0.0); grid.n_p] }
    }

    #[test]
    fn ground_state_quantum_potential_matches_closed_form() {
        // |chi| = e^{-(q^2+p^2)/2}: curvature ratios are q^2-1 and p^2-1, so
        // the two contributions are (1-q^2)/2 and (p^2-1)/2.
        let st = eigenstate(0, 256);
        let polar = polar_decompose(&st, DEFAULT_POLAR_THRESHOLD, DerivMethod::Spectral).unwrap();
        let qp = quantum_potential(&polar, &params()).unwrap();
        let g = st.grid;
        let mut worst = 0.0f64;
        for ip in 0..g.n_p {
            let p = g.p(ip);
            for iq in 0..g.n_q {
                if !qp.mask[[ip, iq]] {
                    continue;
                }
                let q = g.q(iq);
                worst = worst.max((qp.qp_q.values[[ip, iq]] - (1.0 - q * q) / 2.0).abs());
                worst = worst.max((qp.qp_p.values[[ip, iq]] - (p * p - 1.0) / 2.0).abs());
                worst = worst
                    .max((qp.total.values[[ip, iq]] - (p * p - q * q) / 2.0).abs());
            }
        }
        assert!(worst < 1e-5, "quantum potential deviation {worst}");
    }

    #[test]
    fn constant_amplitude_has_zero_quantum_potential() {
        let st = synthetic(|_, _| 0.0);
        let spec = st.spec.clone();
        let grid = st.grid;
        let flat = EPSState {
            chi: ComplexField::from_fn(grid, "flat", |_, _| C64::new(1.0, 0.0)),
            ..EPSState { spec, t: 0.0, grid, chi: st.chi, psi: st.psi, phi: st.phi }
        };
        let polar = polar_decompose(&flat, DEFAULT_POLAR_THRESHOLD, DerivMethod::Fd4).unwrap();
        let qp = quantum_potential(&polar, &params()).unwrap();
        assert_eq!(qp.total.max_abs(), 0.0);
    }

    #[test]
    fn empty_mask_is_rejected() {
        let st = eigenstate(0, 64);
        // threshold above 1 excludes everything
        let polar = polar_decompose(&st, 2.0, DerivMethod::Fd4).unwrap();
        assert!(matches!(quantum_potential(&polar, &params()), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn ground_state_hamiltonian_value_matches_closed_form() {
        // grad S = (-p, -q): H = p^2/2 - p^2 - q^2/2 + q^2 = (q^2 - p^2)/2
        let st = eigenstate(0, 256);
        let polar = polar_decompose(&st, DEFAULT_POLAR_THRESHOLD, DerivMethod::Spectral).unwrap();
        let h = extended_hamiltonian_value(&polar, &params()).unwrap();
        let g = st.grid;
        let mut worst = 0.0f64;
        for ip in 0..g.n_p {
            let p = g.p(ip);
            for iq in 0..g.n_q {
                if !polar.mask[[ip, iq]] {
                    continue;
                }
                let q = g.q(iq);
                worst = worst.max((h.values[[ip, iq]] - (q * q - p * p) / 2.0).abs());
            }
        }
        assert!(worst < 1e-5, "hamiltonian-value deviation {worst}");
    }

    #[test]
    fn zero_phase_gives_exactly_zero_hamiltonian_value() {
        // real chi: the imaginary parts of the log-derivatives vanish
        // identically, so every term of H is exactly zero
        let st = synthetic(|_, _| 0.0);
        let polar = polar_decompose(&st, DEFAULT_POLAR_THRESHOLD, DerivMethod::Fd4).unwrap();
        let h = extended_hamiltonian_value(&polar, &params()).unwrap();
        assert_eq!(h.max_abs(), 0.0);
    }

    #[test]
    fn first_excited_energy_balance() {
        // for an eigenstate the phase equation reduces to H + QP = 0
        let st = eigenstate(1, 256);
        let polar = polar_decompose(&st, DEFAULT_POLAR_THRESHOLD, DerivMethod::Spectral).unwrap();
        let qp = quantum_potential(&polar, &params()).unwrap();
        let h = extended_hamiltonian_value(&polar, &params()).unwrap();
        let mut worst = 0.0f64;
        for (hv, qv) in h.values.iter().zip(qp.total.values.iter()) {
            worst = worst.max((hv + qv).abs());
        }
        assert!(worst < 1e-4, "energy balance deviation {worst}");
    }

    #[test]
    fn ground_state_phase_equation_residual_is_small() {
        let st = eigenstate(0, 256);
        let rep = modified_hj_residual(
            &st,
            PhaseRate::Stationary,
            DEFAULT_POLAR_THRESHOLD,
            DerivMethod::Spectral,
        )
        .unwrap();
        assert!(rep.max_abs < 1e-5, "residual {}", rep.max_abs);
        assert!(rep.representative, "mask fraction {}", rep.mask_fraction);
        assert!(rep.passes(1e-5));
    }

    #[test]
    fn excited_phase_equation_residual_is_small_off_nodes() {
        let st = eigenstate(1, 256);
        let rep = modified_hj_residual(
            &st,
            PhaseRate::Stationary,
            DEFAULT_POLAR_THRESHOLD,
            DerivMethod::Spectral,
        )
        .unwrap();
        assert!(rep.max_abs < 1e-4, "residual {}", rep.max_abs);
        assert!(rep.representative);
    }

    #[test]
    fn phase_equation_residual_contracts_under_refinement() {
        // with five-point differences the derivative error scales as the
        // fourth power of the spacing; halving the spacing must shrink the
        // residual by at least 8 (sixteen expected)
        let coarse = modified_hj_residual(
            &eigenstate(0, 129),
            PhaseRate::Stationary,
            DEFAULT_POLAR_THRESHOLD,
            DerivMethod::Fd4,
        )
        .unwrap();
        let fine = modified_hj_residual(
            &eigenstate(0, 257),
            PhaseRate::Stationary,
            DEFAULT_POLAR_THRESHOLD,
            DerivMethod::Fd4,
        )
        .unwrap();
        let ratio = coarse.max_abs / fine.max_abs;
        assert!(ratio > 8.0, "contraction ratio {ratio} (coarse {}, fine {})", coarse.max_abs, fine.max_abs);
    }

    #[test]
    fn non_solution_phase_equation_residual_is_large() {
        // zero-phase gaussian: H = 0 but QP_total = (p^2 - q^2)/2 remains
        let st = synthetic(|_, _| 0.0);
        let rep = modified_hj_residual(
            &st,
            PhaseRate::Stationary,
            DEFAULT_POLAR_THRESHOLD,
            DerivMethod::Spectral,
        )
        .unwrap();
        assert!(rep.max_abs > 1.0, "expected an order-one residual, got {}", rep.max_abs);
        assert!(rep.l2 > 0.1);
    }

    #[test]
    fn moving_state_requires_rates() {
        let spec = WavefunctionSpec::coherent(1.0, 0.0, params()).unwrap();
        let st = build_eps_state(&spec, PhaseSpaceGrid::square(8.0, 64).unwrap(), 0.0).unwrap();
        let out = modified_hj_residual(
            &st,
            PhaseRate::Stationary,
            DEFAULT_POLAR_THRESHOLD,
            DerivMethod::Fd4,
        );
        assert!(matches!(out, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn coherent_state_gradient_form_residual() {
        // rates from centered time differences of the polar phase gradients;
        // validity = intersection of the three masks so no difference
        // straddles a support boundary
        let spec = WavefunctionSpec::coherent(1.0, 0.0, params()).unwrap();
        let grid = PhaseSpaceGrid::square(8.0, 256).unwrap();
        let t0 = 0.7;
        let delta = std::f64::consts::TAU / 800.0;
        let decced = |t: f64| {
            let st = build_eps_state(&spec, grid, t).unwrap();
            polar_decompose(&st, DEFAULT_POLAR_THRESHOLD, DerivMethod::Spectral).unwrap()
        };
        let before = decced(t0 - delta);
        let after = decced(t0 + delta);
        let state = build_eps_state(&spec, grid, t0).unwrap();
        let mut rate_q = RealField::zeros(grid, "dSq/dt");
        let mut rate_p = RealField::zeros(grid, "dSp/dt");
        let mut valid = Array2::from_elem((grid.n_p, grid.n_q), false);
        for ip in 0..grid.n_p {
            for iq in 0..grid.n_q {
                if before.mask[[ip, iq]] && after.mask[[ip, iq]] {
                    valid[[ip, iq]] = true;
                    rate_q.values[[ip, iq]] = (after.grad_s_q.values[[ip, iq]]
                        - before.grad_s_q.values[[ip, iq]])
                        / (2.0 * delta);
                    rate_p.values[[ip, iq]] = (after.grad_s_p.values[[ip, iq]]
                        - before.grad_s_p.values[[ip, iq]])
                        / (2.0 * delta);
                }
            }
        }
        let rep = modified_hj_residual(
            &state,
            PhaseRate::GradientRates {
                d_grad_s_q_dt: &rate_q,
                d_grad_s_p_dt: &rate_p,
                valid: &valid,
            },
            DEFAULT_POLAR_THRESHOLD,
            DerivMethod::Spectral,
        )
        .unwrap();
        assert!(rep.max_abs < 1e-3, "gradient-form residual {}", rep.max_abs);
        assert!(rep.representative);
    }

    #[test]
    fn ground_state_amplitude_transport_residual() {
        let st = eigenstate(0, 256);
        let rep =
            imaginary_part_residual(&st, DEFAULT_POLAR_THRESHOLD, DerivMethod::Fd4).unwrap();
        assert!(rep.max_abs < 1e-5, "residual {}", rep.max_abs);
    }

    #[test]
    fn second_excited_amplitude_transport_residual() {
        // nodes are inside the support ring; the R-weighted assembly keeps
        // the expression flat across them.  The five-point stencil leaves
        // 1.4e-4 of truncation error on this state at this spacing, so the
        // trigonometric derivative is the right tool at this tolerance.
        let st = eigenstate(2, 256);
        let rep =
            imaginary_part_residual(&st, DEFAULT_POLAR_THRESHOLD, DerivMethod::Spectral).unwrap();
        assert!(rep.max_abs < 1e-4, "residual {}", rep.max_abs);
    }

    #[test]
    fn distorted_phase_fails_amplitude_transport() {
        // S = q^2/2 - pq gives residual R (1/2 - q^2), order one on the mask
        let st = synthetic(|q, p| q * q / 2.0 - p * q);
        let rep =
            imaginary_part_residual(&st, DEFAULT_POLAR_THRESHOLD, DerivMethod::Spectral).unwrap();
        assert!(rep.max_abs > 1e-2, "expected a visible residual, got {}", rep.max_abs);
    }

    #[test]
    fn moving_state_rejected_by_amplitude_transport() {
        let spec = WavefunctionSpec::coherent(1.0, 0.0, params()).unwrap();
        let st = build_eps_state(&spec, PhaseSpaceGrid::square(8.0, 64).unwrap(), 0.0).unwrap();
        assert!(matches!(
            imaginary_part_residual(&st, DEFAULT_POLAR_THRESHOLD, DerivMethod::Fd4),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn matched_width_ground_state_is_transported_classically() {
        let spec = WavefunctionSpec::eigenstate(0, params()).unwrap();
        let f0 = params().matched_f().unwrap();
        let rep = q_representation_residual(
            &spec,
            SmoothingParams::new(f0).unwrap(),
            PhaseSpaceGrid::square(8.0, 256).unwrap(),
            &[0.0],
            1e-6,
            DerivMethod::Spectral,
        )
        .unwrap();
        assert!(rep.max_abs < 1e-6, "stationarity residual {}", rep.max_abs);
        assert!(rep.identity.contains("classical flow"));
    }

    #[test]
    fn unmatched_width_is_rejected_by_the_transport_reading() {
        let spec = WavefunctionSpec::eigenstate(0, params()).unwrap();
        let out = q_representation_residual(
            &spec,
            SmoothingParams::new(2.0).unwrap(),
            PhaseSpaceGrid::square(8.0, 64).unwrap(),
            &[0.0],
            1e-6,
            DerivMethod::Fd4,
        );
        assert!(matches!(out, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn coherent_matched_width_follows_the_classical_flow() {
        // a three-sample window around an interior time of one period
        let spec = WavefunctionSpec::coherent(1.0, 0.0, params()).unwrap();
        let f0 = params().matched_f().unwrap();
        let period = std::f64::consts::TAU;
        let dt = period / 200.0;
        let t0 = period / 3.0;
        let rep = q_representation_residual(
            &spec,
            SmoothingParams::new(f0).unwrap(),
            PhaseSpaceGrid::square(8.0, 256).unwrap(),
            &[t0 - dt, t0, t0 + dt],
            1e-6,
            DerivMethod::Fd4,
        )
        .unwrap();
        assert!(rep.max_abs < 1e-4, "transport residual {}", rep.max_abs);
        assert!(rep.representative);
    }

    #[test]
    fn doubled_width_breaks_transport_but_not_the_full_generator() {
        // f = 2 f0, ground state: the smoothed density is static, yet the
        // bare flow leaves (2/3) Q P times the density; the conjugated
        // generator cancels it identically
        let spec = WavefunctionSpec::eigenstate(0, params()).unwrap();
        let grid = PhaseSpaceGrid::square(8.0, 256).unwrap();
        let smoothing = SmoothingParams::new(2.0 * params().matched_f().unwrap()).unwrap();
        let bare = husimi_equation_residual(
            &spec,
            smoothing,
            grid,
            &[0.0],
            DistributionStencil::Transport,
            1e-6,
            DerivMethod::Fd4,
        )
        .unwrap();
        assert!(bare.max_abs > 1e-2, "bare flow should miss, got {}", bare.max_abs);
        let full = husimi_equation_residual(
            &spec,
            smoothing,
            grid,
            &[0.0],
            DistributionStencil::Full,
            1e-6,
            DerivMethod::Fd4,
        )
        .unwrap();
        assert!(full.max_abs < 1e-4, "conjugated generator residual {}", full.max_abs);
    }

    #[test]
    fn time_samples_must_be_uniform() {
        let spec = WavefunctionSpec::coherent(1.0, 0.0, params()).unwrap();
        let smoothing = SmoothingParams::new(1.0).unwrap();
        let grid = PhaseSpaceGrid::square(8.0, 64).unwrap();
        let out = husimi_equation_residual(
            &spec,
            smoothing,
            grid,
            &[0.0, 0.1, 0.3],
            DistributionStencil::Full,
            1e-6,
            DerivMethod::Fd4,
        );
        assert!(matches!(out, Err(Error::InvalidInput(_))));
        let too_few = husimi_equation_residual(
            &spec,
            smoothing,
            grid,
            &[0.0, 0.1],
            DistributionStencil::Full,
            1e-6,
            DerivMethod::Fd4,
        );
        assert!(matches!(too_few, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn judged_report_serializes_with_verdict() {
        let st = eigenstate(0, 64);
        let rep = modified_hj_residual(
            &st,
            PhaseRate::Stationary,
            DEFAULT_POLAR_THRESHOLD,
            DerivMethod::Spectral,
        )
        .unwrap();
        let judged = rep.judged(1e-3);
        let json = serde_json::to_string(&judged).unwrap();
        assert!(json.contains("\"pass\":true"), "{json}");
        assert!(json.contains("\"identity\""));
        assert!(json.contains("\"mask_fraction\""));
        assert!(json.contains("\"tolerance\""));
    }

    #[test]
    fn sliver_masks_are_flagged_as_unrepresentative() {
        let st = eigenstate(0, 128);
        let rep = modified_hj_residual(
            &st,
            PhaseRate::Stationary,
            0.95,
            DerivMethod::Spectral,
        )
        .unwrap();
        assert!(!rep.representative, "mask fraction {}", rep.mask_fraction);
    }
}

