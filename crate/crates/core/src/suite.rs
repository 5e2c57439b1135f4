//! Acceptance criteria over the whole well catalog.
//!
//! Every state of every catalog well is solved, normalized and transformed
//! once into a [`Catalog`]; each criterion then reads from it and returns a
//! [`CriterionResult`] holding the individual checks.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::analysis::{
    cross_representation, divergence_verdict, ehrenfest, p2_position, tail_exponent,
    DEFAULT_CUTOFFS, DEFAULT_TAIL_WINDOW,
};
use crate::eigensolver::{solve_all, BoundState, SolverSettings};
use crate::engine::default_dx;
use crate::model::{Continuity, PotentialSpec, WellKind};
use crate::momentum::{
    parseval_residual, transform, MomentumDistribution, DEFAULT_DP, DEFAULT_P_MAX,
    PARSEVAL_TOLERANCE,
};
use crate::wavefun::{assemble, norm_residual, WaveFunction};

pub const EIGENVALUE_TOLERANCE: f64 = 2e-3;
pub const TAIL_SLOPE_TOLERANCE: f64 = 0.3;
pub const DELTA_SLOPE_TOLERANCE: f64 = 0.05;
pub const SMOOTH_SLOPE_BOUND: f64 = -12.0;
pub const SMOOTH_TAIL_WINDOW: (f64, f64) = (20.0, 60.0);
pub const DELTA_PHI_TOLERANCE: f64 = 1e-6;
pub const DELTA_P2_TOLERANCE: f64 = 1e-4;
pub const P2_CROSS_TOLERANCE: f64 = 1e-3;
pub const P4_CROSS_TOLERANCE: f64 = 0.02;
pub const EHRENFEST_TOLERANCE: f64 = 1e-3;
pub const SQUARE_WELL_EDGE_TOLERANCE: f64 = 1e-8;
pub const NORM_TOLERANCE: f64 = 1e-9;
pub const RICHARDSON_MIN_RATIO: f64 = 10.0;
pub const FAULT_DX_FACTOR: f64 = 50.0;

/// Published eigenvalues at `v0 = 15`, `a = 2`.
pub const PUBLISHED: [(WellKind, &[f64]); 4] = [
    (WellKind::HalfParabolic, &[-10.6370, -3.9894]),
    (WellKind::HalfTriangular, &[-8.1408, -1.8025]),
    (WellKind::HalfEckart, &[-10.9628, -5.8470, -2.2641, -0.3400]),
    (WellKind::HalfExponential, &[-3.9249]),
];

/// Grid spacing used for every model in a catalog run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DxChoice {
    /// `min(a/2000, 1e-3·a)` per model.
    Default,
    /// The default multiplied by a factor.
    Scaled(f64),
    /// The same spacing for every model.
    Fixed(f64),
}

impl DxChoice {
    pub fn for_spec(self, spec: &PotentialSpec) -> f64 {
        match self {
            DxChoice::Default => default_dx(spec),
            DxChoice::Scaled(f) => f * default_dx(spec),
            DxChoice::Fixed(dx) => dx,
        }
    }

    /// The same choice coarsened by `factor`.
    pub fn coarsened(self, factor: f64) -> DxChoice {
        match self {
            DxChoice::Default => DxChoice::Scaled(factor),
            DxChoice::Scaled(f) => DxChoice::Scaled(f * factor),
            DxChoice::Fixed(dx) => DxChoice::Fixed(dx * factor),
        }
    }
}

pub struct StateRun {
    pub state: BoundState,
    pub wf: Result<WaveFunction, String>,
    pub md: Result<MomentumDistribution, String>,
}

pub struct ModelRun {
    pub spec: PotentialSpec,
    pub dx: f64,
    pub states: Result<Vec<StateRun>, String>,
}

impl ModelRun {
    pub fn solve(spec: PotentialSpec, dx: f64) -> ModelRun {
        let settings = SolverSettings::for_spec(&spec).with_dx(dx);
        let states = solve_all(&spec, &settings)
            .map_err(|e| e.to_string())
            .map(|states| {
                states
                    .into_iter()
                    .map(|state| {
                        let wf = assemble(&spec, &state, dx).map_err(|e| e.to_string());
                        let md = match &wf {
                            Ok(wf) => {
                                transform(wf, DEFAULT_P_MAX, DEFAULT_DP).map_err(|e| e.to_string())
                            }
                            Err(e) => Err(e.clone()),
                        };
                        StateRun { state, wf, md }
                    })
                    .collect()
            });
        ModelRun { spec, dx, states }
    }

    pub fn ground(&self) -> Result<&StateRun, String> {
        match &self.states {
            Ok(states) => states
                .first()
                .ok_or_else(|| "no bound state found".to_string()),
            Err(e) => Err(e.clone()),
        }
    }
}

/// All catalog wells at study parameters, solved on one grid choice.
pub struct Catalog {
    pub dx: DxChoice,
    pub runs: Vec<ModelRun>,
}

impl Catalog {
    pub fn build(dx: DxChoice) -> Catalog {
        let runs = WellKind::ALL
            .iter()
            .map(|&kind| {
                let spec = PotentialSpec::study(kind);
                let h = dx.for_spec(&spec);
                ModelRun::solve(spec, h)
            })
            .collect();
        Catalog { dx, runs }
    }

    pub fn run(&self, kind: WellKind) -> &ModelRun {
        self.runs
            .iter()
            .find(|r| r.spec.kind == kind)
            .expect("catalog covers every well kind")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub label: String,
    /// Measured quantity; `None` when it could not be computed.
    pub value: Option<f64>,
    /// Human-readable requirement, e.g. `"< 1e-9"`.
    pub requirement: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Check {
    fn measured(
        label: impl Into<String>,
        value: f64,
        requirement: impl Into<String>,
        pass: bool,
    ) -> Check {
        Check {
            label: label.into(),
            value: Some(value),
            requirement: requirement.into(),
            pass: pass && value.is_finite(),
            error: None,
        }
    }

    fn failed(
        label: impl Into<String>,
        requirement: impl Into<String>,
        error: impl Into<String>,
    ) -> Check {
        Check {
            label: label.into(),
            value: None,
            requirement: requirement.into(),
            pass: false,
            error: Some(error.into()),
        }
    }

    fn below(label: impl Into<String>, value: f64, limit: f64) -> Check {
        Check::measured(label, value, format!("< {limit:e}"), value < limit)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.value, &self.error) {
            (Some(v), _) => write!(f, "{} = {v:.6e} (need {})", self.label, self.requirement),
            (None, Some(e)) => write!(f, "{}: {e} (need {})", self.label, self.requirement),
            (None, None) => write!(f, "{} (need {})", self.label, self.requirement),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl CriterionResult {
    fn new(id: u32, name: &'static str, checks: Vec<Check>) -> CriterionResult {
        let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
        CriterionResult {
            id,
            name,
            pass,
            checks,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// One line: verdict, id, name, number of checks, and the failing checks.
impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(
            f,
            "[{tag}] {:>2} {:<28} {} checks",
            self.id,
            self.name,
            self.checks.len()
        )?;
        let failed: Vec<String> = self.failures().map(|c| c.to_string()).collect();
        if !failed.is_empty() {
            write!(f, "; failed: {}", failed[..failed.len().min(3)].join("; "))?;
            if failed.len() > 3 {
                write!(f, "; (+{} more)", failed.len() - 3)?;
            }
        }
        Ok(())
    }
}

fn with_ground<F>(run: &ModelRun, label: &str, requirement: &str, f: F) -> Vec<Check>
where
    F: FnOnce(&StateRun, &WaveFunction, &MomentumDistribution) -> Vec<Check>,
{
    let ground = match run.ground() {
        Ok(g) => g,
        Err(e) => return vec![Check::failed(label, requirement, e)],
    };
    match (&ground.wf, &ground.md) {
        (Ok(wf), Ok(md)) => f(ground, wf, md),
        (Err(e), _) | (_, Err(e)) => vec![Check::failed(label, requirement, e.clone())],
    }
}

pub fn eigenvalues(cat: &Catalog) -> CriterionResult {
    let mut checks = Vec::new();
    let req = format!("|ΔE| <= {EIGENVALUE_TOLERANCE:e}");
    for (kind, published) in PUBLISHED {
        let states = match &cat.run(kind).states {
            Ok(s) => s,
            Err(e) => {
                checks.push(Check::failed(format!("{kind} spectrum"), &req, e.clone()));
                continue;
            }
        };
        for (n, &e_pub) in published.iter().enumerate() {
            let label = format!("{kind} E{n}");
            match states.get(n) {
                Some(s) => {
                    let d = (s.state.energy - e_pub).abs();
                    checks.push(Check::measured(label, d, &req, d <= EIGENVALUE_TOLERANCE));
                }
                None => checks.push(Check::failed(label, &req, "state missing")),
            }
        }
    }
    CriterionResult::new(1, "eigenvalues", checks)
}

pub fn state_counts(cat: &Catalog) -> CriterionResult {
    let checks = PUBLISHED
        .iter()
        .map(|&(kind, published)| {
            let label = format!("{kind} count");
            let req = format!("= {}", published.len());
            match &cat.run(kind).states {
                Ok(s) => Check::measured(label, s.len() as f64, req, s.len() == published.len()),
                Err(e) => Check::failed(label, req, e.clone()),
            }
        })
        .collect();
    CriterionResult::new(2, "state counts", checks)
}

pub fn delta_oracle(cat: &Catalog) -> CriterionResult {
    let run = cat.run(WellKind::DeltaWell);
    let checks = with_ground(run, "delta ground state", "exists", |_, wf, md| {
        let mut checks = Vec::new();
        for p in [0.0, 1.0, 5.0, 10.0, 50.0] {
            let exact = (2.0 / PI).sqrt() / (1.0 + p * p);
            let d = (md.phi[md.index_of(p)] - Complex64::new(exact, 0.0)).norm();
            checks.push(Check::below(format!("|Δφ({p})|"), d, DELTA_PHI_TOLERANCE));
        }
        let x = p2_position(wf, &run.spec);
        checks.push(Check::below(
            "|<p²>_x − 1|",
            (x - 1.0).abs(),
            DELTA_P2_TOLERANCE,
        ));
        match cross_representation(wf, &run.spec, md, DEFAULT_TAIL_WINDOW) {
            Ok(c) => checks.push(Check::below(
                "|<p²>_p − 1|",
                (c.p2_momentum - 1.0).abs(),
                DELTA_P2_TOLERANCE,
            )),
            Err(e) => checks.push(Check::failed("<p²>_p", "= 1", e.to_string())),
        }
        checks
    });
    CriterionResult::new(3, "delta-well oracle", checks)
}

fn slope_check(
    run: &ModelRun,
    window: (f64, f64),
    requirement: &str,
    accept: impl Fn(f64) -> bool,
) -> Check {
    let label = format!("{} slope on [{}, {}]", run.spec.kind, window.0, window.1);
    with_ground(run, &label, requirement, |_, _, md| {
        vec![match tail_exponent(md, window) {
            Ok(fit) => Check::measured(&label, fit.slope, requirement, accept(fit.slope)),
            Err(e) => Check::failed(&label, requirement, e.to_string()),
        }]
    })
    .remove(0)
}

/// Tail exponents of the jump wells and the delta well.
pub fn tail_exponents(cat: &Catalog) -> Vec<Check> {
    let mut checks: Vec<Check> = WellKind::HALF_WELLS
        .iter()
        .chain(&[WellKind::FiniteSquareWell])
        .map(|&kind| {
            slope_check(cat.run(kind), DEFAULT_TAIL_WINDOW, "−6 ± 0.3", |s| {
                (s + 6.0).abs() <= TAIL_SLOPE_TOLERANCE
            })
        })
        .collect();
    checks.push(slope_check(
        cat.run(WellKind::DeltaWell),
        DEFAULT_TAIL_WINDOW,
        "−4 ± 0.05",
        |s| (s + 4.0).abs() <= DELTA_SLOPE_TOLERANCE,
    ));
    checks
}

/// The smooth control: exponential decay seen as a very steep power law.
pub fn smooth_control_tail(cat: &Catalog) -> Check {
    slope_check(
        cat.run(WellKind::FullEckart),
        SMOOTH_TAIL_WINDOW,
        "< −12",
        |s| s < SMOOTH_SLOPE_BOUND,
    )
}

pub fn tails(cat: &Catalog) -> CriterionResult {
    let mut checks = tail_exponents(cat);
    checks.push(smooth_control_tail(cat));
    CriterionResult::new(4, "tail exponents", checks)
}

fn verdict_check(run: &ModelRun, order: u32, divergent: bool) -> Check {
    let (req, label) = if divergent {
        ("Divergent (ρ > 0.5)", format!("{} ρ{order}", run.spec.kind))
    } else {
        (
            "Convergent (ρ < 0.2)",
            format!("{} ρ{order}", run.spec.kind),
        )
    };
    with_ground(run, &label, req, |_, _, md| {
        vec![match divergence_verdict(md, order, &DEFAULT_CUTOFFS) {
            Ok(r) => {
                let ok = if divergent {
                    r.verdict.is_divergent()
                } else {
                    r.verdict.is_convergent()
                };
                Check::measured(&label, r.growth_ratio, req, ok)
            }
            Err(e) => Check::failed(&label, req, e.to_string()),
        }]
    })
    .remove(0)
}

pub fn verdicts(cat: &Catalog) -> CriterionResult {
    let mut checks = Vec::new();
    for run in &cat.runs {
        if run.spec.classify().class == Continuity::JumpDiscontinuous {
            checks.push(verdict_check(run, 6, true));
            checks.push(verdict_check(run, 4, false));
        }
    }
    checks.push(verdict_check(cat.run(WellKind::DeltaWell), 4, true));
    checks.push(verdict_check(cat.run(WellKind::FullEckart), 6, false));
    CriterionResult::new(5, "divergence verdicts", checks)
}

pub fn cross_checks(cat: &Catalog) -> CriterionResult {
    let mut checks = Vec::new();
    for run in &cat.runs {
        let kind = run.spec.kind;
        let label = format!("{kind} cross-representation");
        checks.extend(with_ground(
            run,
            &label,
            "computable",
            |_, wf, md| match cross_representation(wf, &run.spec, md, DEFAULT_TAIL_WINDOW) {
                Ok(c) => {
                    let mut v = vec![Check::below(
                        format!("{kind} <p²> relative"),
                        c.p2_relative,
                        P2_CROSS_TOLERANCE,
                    )];
                    if let Some(rel) = c.p4_relative {
                        v.push(Check::below(
                            format!("{kind} <p⁴> relative"),
                            rel,
                            P4_CROSS_TOLERANCE,
                        ));
                    }
                    v
                }
                Err(e) => vec![Check::failed(&label, "computable", e.to_string())],
            },
        ));
    }
    CriterionResult::new(6, "cross-representation", checks)
}

fn each_state<F>(run: &ModelRun, label: &str, mut f: F) -> Vec<Check>
where
    F: FnMut(&StateRun) -> Vec<Check>,
{
    match &run.states {
        Ok(states) => states.iter().flat_map(&mut f).collect(),
        Err(e) => vec![Check::failed(label, "solvable", e.clone())],
    }
}

pub fn ehrenfest_checks(cat: &Catalog) -> CriterionResult {
    let mut checks = Vec::new();
    for kind in WellKind::HALF_WELLS {
        let run = cat.run(kind);
        checks.extend(each_state(run, kind.name(), |s| {
            let label = format!("{kind} n={} Ehrenfest relative", s.state.n);
            vec![match &s.wf {
                Ok(wf) => Check::below(
                    label,
                    ehrenfest(wf, &run.spec).relative,
                    EHRENFEST_TOLERANCE,
                ),
                Err(e) => Check::failed(label, "< 1e-3", e.clone()),
            }]
        }));
    }
    let run = cat.run(WellKind::FiniteSquareWell);
    checks.extend(each_state(run, "fsw", |s| {
        let label = format!("fsw n={} |ψ²(0) − ψ²(a)|", s.state.n);
        vec![match &s.wf {
            Ok(wf) => {
                let d = (wf.psi0 * wf.psi0 - wf.evaluate(run.spec.a).powi(2)).abs();
                Check::below(label, d, SQUARE_WELL_EDGE_TOLERANCE)
            }
            Err(e) => Check::failed(label, "< 1e-8", e.clone()),
        }]
    }));
    CriterionResult::new(7, "Ehrenfest balance", checks)
}

pub fn normalization(cat: &Catalog) -> CriterionResult {
    let mut checks = Vec::new();
    for run in &cat.runs {
        let kind = run.spec.kind;
        checks.extend(each_state(run, kind.name(), |s| {
            let n = s.state.n;
            let norm = match &s.wf {
                Ok(wf) => Check::below(
                    format!("{kind} n={n} |norm − 1|"),
                    norm_residual(wf),
                    NORM_TOLERANCE,
                ),
                Err(e) => Check::failed(format!("{kind} n={n} norm"), "< 1e-9", e.clone()),
            };
            let parseval = match &s.md {
                Ok(md) => Check::below(
                    format!("{kind} n={n} Parseval"),
                    parseval_residual(md).residual,
                    PARSEVAL_TOLERANCE,
                ),
                Err(e) => Check::failed(format!("{kind} n={n} Parseval"), "< 1e-4", e.clone()),
            };
            vec![norm, parseval]
        }));
    }
    CriterionResult::new(8, "normalization", checks)
}

/// `(E(4h) − E(2h)) / (E(2h) − E(h))` per state, `h = 5·dx`; about 16 for
/// a fourth-order integrator.
pub fn richardson_ratios(spec: &PotentialSpec, dx: f64) -> Result<Vec<f64>, String> {
    let energies = |h: f64| -> Result<Vec<f64>, String> {
        let mut settings = SolverSettings::for_spec(spec).with_dx(h);
        settings.e_tol_rel = 1e-14;
        solve_all(spec, &settings)
            .map(|s| s.iter().map(|b| b.energy).collect())
            .map_err(|e| e.to_string())
    };
    let coarse = energies(20.0 * dx)?;
    let mid = energies(10.0 * dx)?;
    let fine = energies(5.0 * dx)?;
    if coarse.len() != fine.len() || mid.len() != fine.len() {
        return Err(format!(
            "state count changes with dx: {} / {} / {}",
            coarse.len(),
            mid.len(),
            fine.len()
        ));
    }
    Ok((0..fine.len())
        .map(|i| (coarse[i] - mid[i]) / (mid[i] - fine[i]))
        .collect())
}

pub fn order_of_accuracy(cat: &Catalog) -> CriterionResult {
    let mut checks = Vec::new();
    for run in &cat.runs {
        let kind = run.spec.kind;
        if kind == WellKind::DeltaWell {
            continue;
        }
        match richardson_ratios(&run.spec, run.dx) {
            Ok(ratios) => {
                for (n, q) in ratios.into_iter().enumerate() {
                    checks.push(Check::measured(
                        format!("{kind} E{n} Richardson ratio"),
                        q,
                        ">= 10",
                        q >= RICHARDSON_MIN_RATIO,
                    ));
                }
            }
            Err(e) => checks.push(Check::failed(format!("{kind} Richardson"), ">= 10", e)),
        }
    }
    CriterionResult::new(9, "order of accuracy", checks)
}

/// Criteria 1–9.
pub fn core_criteria(cat: &Catalog) -> Vec<CriterionResult> {
    vec![
        eigenvalues(cat),
        state_counts(cat),
        delta_oracle(cat),
        tails(cat),
        verdicts(cat),
        cross_checks(cat),
        ehrenfest_checks(cat),
        normalization(cat),
        order_of_accuracy(cat),
    ]
}

/// Reruns criteria 1–9 on a grid coarsened by [`FAULT_DX_FACTOR`]; passes
/// when at least one of them fails there.
pub fn fault_sensitivity(dx: DxChoice) -> CriterionResult {
    let coarse = Catalog::build(dx.coarsened(FAULT_DX_FACTOR));
    let results = core_criteria(&coarse);
    let failing: Vec<String> = results
        .iter()
        .filter(|r| !r.pass)
        .map(|r| r.id.to_string())
        .collect();
    let check = Check::measured(
        format!(
            "criteria failing at {FAULT_DX_FACTOR}x dx [{}]",
            failing.join(", ")
        ),
        failing.len() as f64,
        ">= 1",
        !failing.is_empty(),
    );
    CriterionResult::new(10, "fault sensitivity", vec![check])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub pass: bool,
    pub criteria: Vec<CriterionResult>,
}

pub fn run_suite(dx: DxChoice) -> SuiteReport {
    let catalog = Catalog::build(dx);
    let mut criteria = core_criteria(&catalog);
    criteria.push(fault_sensitivity(dx));
    SuiteReport {
        pass: criteria.iter().all(|c| c.pass),
        criteria,
    }
}
