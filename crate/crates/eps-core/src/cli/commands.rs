//! The five subcommand implementations.  Everything here is a thin
//! orchestration layer: physics lives in the library modules, and these
//! functions wire configuration to computation to deterministic artifacts.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::RunConfig;
use crate::algebra::{
    classical_flow_generator, extended_generator, parse_expr, print_expr, print_expr_grouped,
    smoothed_flow_generator, smoothing_exponent, Coeff, ExtensionMethod, VarCase,
};
use crate::error::{Error, Result};
use crate::evolution::evolve_wavefunctions;
use crate::hamilton_jacobi::{
    extended_hamiltonian_value, imaginary_part_residual, is_stationary, modified_hj_residual,
    q_representation_residual, quantum_potential, JudgedResidual, PhaseRate,
};
use crate::io;
use crate::numerics::{DerivMethod, RealField};
use crate::states::{
    build_eps_state, polar_decompose, StateKind, WavefunctionSpec, DEFAULT_POLAR_THRESHOLD,
};
use crate::transforms::{
    build_wigner, smooth_distribution, DistributionKind, QuasiDistribution, SmoothingParams,
    SmoothingReport, SmoothingRoute,
};

/// Spectral derivatives are the default for single-grid residual checks:
/// on these smooth, decaying fields they sit at the noise floor.
const CHECK_METHOD: DerivMethod = DerivMethod::Spectral;

fn period(params: &crate::states::OscillatorParams) -> f64 {
    std::f64::consts::TAU / params.omega
}

fn is_zero_state(spec: &WavefunctionSpec) -> bool {
    matches!(&spec.kind, StateKind::Superposition { coefficients }
        if coefficients.iter().all(|(re, im)| *re == 0.0 && *im == 0.0))
}

/// `eps state`: build the phase-space state at `t = 0` and write its three
/// factors.
pub fn cmd_state(config: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let spec = config.spec()?;
    let state = build_eps_state(&spec, config.grid()?, 0.0)?;
    io::write_state(out_dir, &state)?;
    Ok(vec![
        out_dir.join("chi.csv"),
        out_dir.join("chi.meta.json"),
        out_dir.join("psi.csv"),
        out_dir.join("phi.csv"),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    Wigner,
    Husimi,
    QFunction,
}

impl TransformKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "wigner" => Ok(TransformKind::Wigner),
            "husimi" => Ok(TransformKind::Husimi),
            "qfunction" => Ok(TransformKind::QFunction),
            other => Err(Error::Config(format!(
                "unknown transform kind \"{other}\"; expected wigner, husimi, or qfunction"
            ))),
        }
    }

    fn file_stem(self) -> &'static str {
        match self {
            TransformKind::Wigner => "wigner",
            TransformKind::Husimi => "husimi",
            TransformKind::QFunction => "qfunction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoutePath {
    Convolution,
    DiffOp,
}

impl RoutePath {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "convolution" => Ok(RoutePath::Convolution),
            "diffop" => Ok(RoutePath::DiffOp),
            other => Err(Error::Config(format!(
                "unknown smoothing path \"{other}\"; expected convolution or diffop"
            ))),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TransformOutcome {
    pub files: Vec<PathBuf>,
    /// Smoothing diagnostics (series order, cross-path discrepancy) when a
    /// smoothing ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<SmoothingReport>,
}

/// `eps transform`: build the requested distribution and write it.  The
/// zero state short-circuits to an all-zero field, since no normalizable
/// distribution exists for it.
pub fn cmd_transform(
    config: &RunConfig,
    kind: TransformKind,
    path: RoutePath,
    order: Option<usize>,
    out_dir: &Path,
) -> Result<TransformOutcome> {
    let spec = config.spec()?;
    let grid = config.grid()?;
    let stem = kind.file_stem();
    let csv = out_dir.join(format!("{stem}.csv"));

    if is_zero_state(&spec) {
        let zero = QuasiDistribution {
            kind: DistributionKind::Wigner,
            field: RealField::zeros(grid, stem),
            source: spec,
            t: 0.0,
        };
        io::write_distribution(&csv, &zero)?;
        return Ok(TransformOutcome {
            files: vec![csv.clone(), csv.with_file_name(format!("{stem}.meta.json"))],
            report: None,
        });
    }

    let wigner = build_wigner(&spec, grid, 0.0)?;
    let (dist, report) = match kind {
        TransformKind::Wigner => (wigner, None),
        TransformKind::Husimi | TransformKind::QFunction => {
            let smoothing = match kind {
                // the Q-function is pinned to the matched width
                TransformKind::QFunction => SmoothingParams::new(config.params.matched_f()?)?,
                _ => config.smoothing()?,
            };
            let route = match path {
                RoutePath::Convolution => SmoothingRoute::Convolution,
                RoutePath::DiffOp => SmoothingRoute::OperatorSeries { order },
            };
            let (smoothed, report) = smooth_distribution(&wigner, smoothing, route)?;
            (smoothed, Some(report))
        }
    };
    io::write_distribution(&csv, &dist)?;
    let mut files = vec![csv.clone(), csv.with_file_name(format!("{stem}.meta.json"))];
    if let Some(r) = &report {
        let report_path = out_dir.join(format!("{stem}.report.json"));
        io::write_json(&report_path, r)?;
        files.push(report_path);
    }
    Ok(TransformOutcome { files, report })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifySuite {
    PhaseEquation,
    AmplitudeTransport,
    QTransport,
    EvolutionEquation,
    All,
}

impl VerifySuite {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "hj" => Ok(VerifySuite::PhaseEquation),
            "imag" => Ok(VerifySuite::AmplitudeTransport),
            "qrep" => Ok(VerifySuite::QTransport),
            "eps-eq" => Ok(VerifySuite::EvolutionEquation),
            "all" => Ok(VerifySuite::All),
            other => Err(Error::Config(format!(
                "unknown suite \"{other}\"; expected hj, imag, qrep, eps-eq, or all"
            ))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            VerifySuite::PhaseEquation => "hj",
            VerifySuite::AmplitudeTransport => "imag",
            VerifySuite::QTransport => "qrep",
            VerifySuite::EvolutionEquation => "eps-eq",
            VerifySuite::All => "all",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

/// One machine-readable line of the verification report.
#[derive(Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub status: CheckStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_abs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identity: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckOutcome {
    fn from_judged(name: &str, judged: JudgedResidual) -> Self {
        CheckOutcome {
            name: name.into(),
            status: if judged.pass { CheckStatus::Pass } else { CheckStatus::Fail },
            max_abs: Some(judged.report.max_abs),
            tolerance: Some(judged.tolerance),
            identity: Some(judged.report.identity.clone()),
            note: None,
        }
    }

    fn error(name: &str, err: &Error) -> Self {
        CheckOutcome {
            name: name.into(),
            status: CheckStatus::Fail,
            max_abs: None,
            tolerance: None,
            identity: None,
            note: Some(err.to_string()),
        }
    }

    fn skipped(name: &str, why: &str) -> Self {
        CheckOutcome {
            name: name.into(),
            status: CheckStatus::Skipped,
            max_abs: None,
            tolerance: None,
            identity: None,
            note: Some(why.into()),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub suite: String,
    pub strict: bool,
    pub checks: Vec<CheckOutcome>,
    pub all_pass: bool,
}

impl VerifyReport {
    /// Exit code policy: any failing check is a verification failure (1);
    /// under `--strict`, skipped checks count as failures too.
    pub fn exit_code(&self) -> i32 {
        let failed = self.checks.iter().any(|c| {
            c.status == CheckStatus::Fail || (self.strict && c.status == CheckStatus::Skipped)
        });
        if failed {
            1
        } else {
            0
        }
    }
}

/// `eps verify`: run the selected residual suites against the configured
/// state and write `verify.json`.
///
/// `wrong_sign` is a negative control for the verification machinery
/// itself: the phase-equation check is reassembled with the sign between
/// the quantum-potential and Hamiltonian contributions flipped, which must
/// fail for every normalizable state.  It applies to the `hj` and `all`
/// suites and needs a stationary state.
pub fn cmd_verify(
    config: &RunConfig,
    suite: VerifySuite,
    strict: bool,
    wrong_sign: bool,
    out_dir: &Path,
) -> Result<VerifyReport> {
    if wrong_sign
        && !matches!(suite, VerifySuite::PhaseEquation | VerifySuite::All)
    {
        return Err(Error::Config(
            "the negative control rewires the phase-equation check; use --suite hj or all".into(),
        ));
    }
    let spec = config.spec()?;
    if wrong_sign && !is_stationary(&spec) {
        return Err(Error::Config(
            "the negative control needs a stationary state".into(),
        ));
    }
    let mut checks = Vec::new();
    let run_hj = matches!(suite, VerifySuite::PhaseEquation | VerifySuite::All);
    let run_imag = matches!(suite, VerifySuite::AmplitudeTransport | VerifySuite::All);
    let run_qrep = matches!(suite, VerifySuite::QTransport | VerifySuite::All);
    let run_eps = matches!(suite, VerifySuite::EvolutionEquation | VerifySuite::All);

    if run_hj {
        checks.push(if wrong_sign {
            check_phase_equation_wrong_sign(config)
        } else {
            check_phase_equation(config)
        });
    }
    if run_imag {
        checks.push(check_amplitude_transport(config));
    }
    if run_qrep {
        checks.push(check_q_transport(config));
    }
    if run_eps {
        checks.push(check_evolution_equation(config));
    }

    let all_pass = checks.iter().all(|c| c.status == CheckStatus::Pass
        || (!strict && c.status == CheckStatus::Skipped));
    let report = VerifyReport { suite: suite.label().into(), strict, checks, all_pass };
    io::write_json(&out_dir.join("verify.json"), &report)?;
    Ok(report)
}

fn check_phase_equation(config: &RunConfig) -> CheckOutcome {
    let name = "phase-equation";
    let go = || -> Result<JudgedResidual> {
        let spec = config.spec()?;
        let grid = config.grid()?;
        if is_stationary(&spec) {
            let state = build_eps_state(&spec, grid, 0.0)?;
            let report = modified_hj_residual(
                &state,
                PhaseRate::Stationary,
                DEFAULT_POLAR_THRESHOLD,
                CHECK_METHOD,
            )?;
            Ok(report.judged(config.tolerances.phase_equation()))
        } else {
            // rate fields for the gradient-form reading come from a short
            // centered window around an arbitrary interior time
            let t0 = 0.7 / config.params.omega;
            let dt = period(&config.params) / 800.0;
            let before = polar_decompose(
                &build_eps_state(&spec, grid, t0 - dt)?,
                DEFAULT_POLAR_THRESHOLD,
                CHECK_METHOD,
            )?;
            let at = build_eps_state(&spec, grid, t0)?;
            let after = polar_decompose(
                &build_eps_state(&spec, grid, t0 + dt)?,
                DEFAULT_POLAR_THRESHOLD,
                CHECK_METHOD,
            )?;
            let mut rate_q = RealField::zeros(grid, "d(grad_s_q)/dt");
            let mut rate_p = RealField::zeros(grid, "d(grad_s_p)/dt");
            let denom = 2.0 * dt;
            for ip in 0..grid.n_p {
                for iq in 0..grid.n_q {
                    rate_q.values[[ip, iq]] = (after.grad_s_q.values[[ip, iq]]
                        - before.grad_s_q.values[[ip, iq]])
                        / denom;
                    rate_p.values[[ip, iq]] = (after.grad_s_p.values[[ip, iq]]
                        - before.grad_s_p.values[[ip, iq]])
                        / denom;
                }
            }
            let valid = &before.mask & &after.mask;
            let report = modified_hj_residual(
                &at,
                PhaseRate::GradientRates {
                    d_grad_s_q_dt: &rate_q,
                    d_grad_s_p_dt: &rate_p,
                    valid: &valid,
                },
                DEFAULT_POLAR_THRESHOLD,
                CHECK_METHOD,
            )?;
            Ok(report.judged(config.tolerances.phase_equation_moving()))
        }
    };
    match go() {
        Ok(judged) => CheckOutcome::from_judged(name, judged),
        Err(e) => CheckOutcome::error(name, &e),
    }
}

/// The deliberately defective phase-equation check: identical ingredients,
/// wrong relative sign.  `|QP - H|` instead of `|QP + H|` cannot vanish for
/// a normalizable stationary state, so a pass here means the verifier is
/// broken.
fn check_phase_equation_wrong_sign(config: &RunConfig) -> CheckOutcome {
    let name = "phase-equation[negative-control]";
    let go = || -> Result<(f64, f64)> {
        let spec = config.spec()?;
        let state = build_eps_state(&spec, config.grid()?, 0.0)?;
        let polar = polar_decompose(&state, DEFAULT_POLAR_THRESHOLD, CHECK_METHOD)?;
        let qp = quantum_potential(&polar, &config.params)?;
        let h = extended_hamiltonian_value(&polar, &config.params)?;
        let mut max_abs = 0.0f64;
        for ip in 0..state.grid.n_p {
            for iq in 0..state.grid.n_q {
                if qp.mask[[ip, iq]] {
                    let wrong = qp.total.values[[ip, iq]] - h.values[[ip, iq]];
                    max_abs = max_abs.max(wrong.abs());
                }
            }
        }
        Ok((max_abs, config.tolerances.phase_equation()))
    };
    match go() {
        Ok((max_abs, tol)) => CheckOutcome {
            name: name.into(),
            status: if max_abs <= tol { CheckStatus::Pass } else { CheckStatus::Fail },
            max_abs: Some(max_abs),
            tolerance: Some(tol),
            identity: Some("phase-equation[stationary, sign flipped]".into()),
            note: Some("deliberate defect: this check is supposed to fail".into()),
        },
        Err(e) => CheckOutcome::error(name, &e),
    }
}

fn check_amplitude_transport(config: &RunConfig) -> CheckOutcome {
    let name = "amplitude-transport";
    let spec = match config.spec() {
        Ok(s) => s,
        Err(e) => return CheckOutcome::error(name, &e),
    };
    if !is_stationary(&spec) {
        return CheckOutcome::skipped(name, "stationary reading; the configured state moves");
    }
    let go = || -> Result<JudgedResidual> {
        let state = build_eps_state(&spec, config.grid()?, 0.0)?;
        let report = imaginary_part_residual(&state, DEFAULT_POLAR_THRESHOLD, CHECK_METHOD)?;
        Ok(report.judged(config.tolerances.amplitude_transport()))
    };
    match go() {
        Ok(judged) => CheckOutcome::from_judged(name, judged),
        Err(e) => CheckOutcome::error(name, &e),
    }
}

fn check_q_transport(config: &RunConfig) -> CheckOutcome {
    let name = "q-distribution-transport";
    let go = || -> Result<JudgedResidual> {
        let spec = config.spec()?;
        let grid = config.grid()?;
        let smoothing = config.smoothing()?;
        let tol = config.tolerances.q_transport();
        if is_stationary(&spec) {
            let report = q_representation_residual(
                &spec,
                smoothing,
                grid,
                &[0.0],
                DEFAULT_POLAR_THRESHOLD,
                CHECK_METHOD,
            )?;
            Ok(report.judged(tol))
        } else {
            // three-point window on the orbit; the five-point derivative is
            // what the window spacing was sized for
            let t_star = period(&config.params) / 8.0;
            let dt = period(&config.params) / 200.0;
            let report = q_representation_residual(
                &spec,
                smoothing,
                grid,
                &[t_star - dt, t_star, t_star + dt],
                DEFAULT_POLAR_THRESHOLD,
                DerivMethod::Fd4,
            )?;
            Ok(report.judged(tol))
        }
    };
    match go() {
        Ok(judged) => CheckOutcome::from_judged(name, judged),
        Err(e) => CheckOutcome::error(name, &e),
    }
}

fn check_evolution_equation(config: &RunConfig) -> CheckOutcome {
    let name = "evolution-equation";
    let go = || -> Result<JudgedResidual> {
        let spec = config.spec()?;
        let grid = config.grid()?;
        let t = period(&config.params);
        // stationary states tolerate any window; moving states need a short
        // one for the centered difference to resolve the phase rotation
        let (t0, dt) =
            if is_stationary(&spec) { (t / 10.0, t / 20.0) } else { (1.0 / config.params.omega, t / 2000.0) };
        let series = [t0 - dt, t0, t0 + dt]
            .iter()
            .map(|&ti| build_eps_state(&spec, grid, ti))
            .collect::<Result<Vec<_>>>()?;
        let report = crate::evolution::eps_equation_residual(
            &series,
            DEFAULT_POLAR_THRESHOLD,
            CHECK_METHOD,
        )?;
        Ok(report.judged(config.tolerances.evolution_equation()))
    };
    match go() {
        Ok(judged) => CheckOutcome::from_judged(name, judged),
        Err(e) => CheckOutcome::error(name, &e),
    }
}

#[derive(Debug, Clone)]
pub enum AlgebraAction {
    Extend { expr: String, method: ExtensionMethod },
    Bch { wigner_harmonic: bool },
    Specialize { f: String, expr: Option<String> },
    Commutator { a: String, b: String },
}

/// `eps algebra`: exact symbolic derivations, printed in the canonical text
/// form (deterministic, parseable back).
pub fn cmd_algebra(action: &AlgebraAction) -> Result<String> {
    match action {
        AlgebraAction::Extend { expr, method } => {
            let h = parse_expr(expr)?;
            if h.case() == Some(VarCase::Upper) {
                return Err(Error::Config(
                    "extend expects a classical Hamiltonian in the base alphabet q, p".into(),
                ));
            }
            let lifted = extended_generator(&h, *method)?;
            Ok(print_expr(&lifted))
        }
        AlgebraAction::Bch { wigner_harmonic } => {
            if !wigner_harmonic {
                return Err(Error::Config(
                    "only the built-in derivation is available; pass --wigner-harmonic".into(),
                ));
            }
            let expansion = smoothed_flow_generator()?;
            Ok(format!(
                "exponent = {}\nflow = {}\nresult = {}\nterminated_at = {}",
                print_expr(&smoothing_exponent()?),
                print_expr(&classical_flow_generator()?),
                print_expr_grouped(&expansion.result),
                expansion.terminated_at
            ))
        }
        AlgebraAction::Specialize { f, expr } => {
            let target = match expr {
                Some(text) => parse_expr(text)?,
                None => smoothed_flow_generator()?.result,
            };
            let specialized = if f == "q-function" {
                // the matched width is hbar/(m omega) once k = m omega^2,
                // so both substitutions go in together
                target.substitute_params(&[
                    (3, Coeff::from_int(1), [1, -1, 0, 0, -1]),
                    (2, Coeff::from_int(1), [0, 1, 0, 0, 2]),
                ])?
            } else {
                let parsed = parse_expr(f)?;
                let mut terms = parsed.terms();
                let only = match (terms.next(), terms.next()) {
                    (Some((key, coeff)), None)
                        if !key.has_generators() && key.params == [0; 5] =>
                    {
                        coeff.clone()
                    }
                    _ => {
                        return Err(Error::Config(format!(
                            "--f must be \"q-function\" or an exact number, got \"{f}\""
                        )))
                    }
                };
                target.substitute_params(&[(3, only, [0; 5])])?
            };
            let cross = specialized.terms().any(|(key, _)| key.piq > 0 && key.pip > 0);
            Ok(format!(
                "result = {}\ncross_term = {}",
                print_expr_grouped(&specialized),
                if cross { "present" } else { "absent" }
            ))
        }
        AlgebraAction::Commutator { a, b } => {
            let left = parse_expr(a)?;
            let right = parse_expr(b)?;
            Ok(print_expr(&left.commutator(&right)?))
        }
    }
}

/// `eps evolve`: propagate the configured state and write the trajectory.
pub fn cmd_evolve(config: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let evo = config
        .evolution
        .ok_or_else(|| Error::Config("evolve needs an \"evolution\" section in the config".into()))?;
    let spec = config.spec()?;
    let traj = evolve_wavefunctions(&spec, config.grid()?, &evo)?;
    let csv = out_dir.join("trajectory.csv");
    io::write_trajectory(&csv, &traj)?;
    Ok(vec![csv.clone(), csv.with_file_name("trajectory.meta.json")])
}
