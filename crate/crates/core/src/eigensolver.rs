//! Bound-state spectra: residual scan, bracket refinement, node-law check.
//!
//! Closed-form quantization conditions are provided for the square well, the
//! delta well and the half Eckart well; the remaining half wells rely on
//! shooting alone.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::engine::{self, default_dx};
use crate::error::{Error, Result};
use crate::model::{PotentialSpec, WellKind};
use crate::quad::brent;

pub const DEFAULT_N_SCAN: usize = 400;
pub const MAX_REFINE_ITER: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundState {
    /// Position in the energy-sorted spectrum.
    pub n: usize,
    pub energy: f64,
    pub k: f64,
    /// Absolute matching mismatch of the converged shot.
    pub residual: f64,
    pub bracket: (f64, f64),
    /// Nodes of the converged shot on `(0, x_max)`.
    pub nodes: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    pub dx: f64,
    pub n_scan: usize,
    /// Bracket width at which refinement stops, relative to `v0`.
    pub e_tol_rel: f64,
}

impl SolverSettings {
    pub fn for_spec(spec: &PotentialSpec) -> Self {
        SolverSettings {
            dx: default_dx(spec),
            n_scan: DEFAULT_N_SCAN,
            e_tol_rel: 1e-10,
        }
    }

    pub fn with_dx(mut self, dx: f64) -> Self {
        self.dx = dx;
        self
    }
}

/// Sign-change brackets of the matching residual on `n_scan` uniformly spaced
/// energies in `(floor + δ, −δ)`, `δ = 1e-6·v0`.
pub fn scan_brackets(spec: &PotentialSpec, n_scan: usize, dx: f64) -> Result<Vec<(f64, f64)>> {
    if n_scan < 100 {
        return Err(Error::InvalidParameter(
            "n_scan must be at least 100".into(),
        ));
    }
    let delta = 1e-6 * spec.v0;
    let lo = spec.energy_floor() + delta;
    let hi = -delta;
    if lo >= hi {
        return Ok(Vec::new());
    }
    let step = (hi - lo) / (n_scan - 1) as f64;
    let energies: Vec<f64> = (0..n_scan).map(|i| lo + i as f64 * step).collect();
    let residuals = energies
        .par_iter()
        .map(|&e| engine::matching_residual(spec, e, dx))
        .collect::<Result<Vec<_>>>()?;
    Ok(energies
        .windows(2)
        .zip(residuals.windows(2))
        .filter(|(_, r)| r[0].signum() != r[1].signum())
        .map(|(e, _)| (e[0], e[1]))
        .collect())
}

pub fn refine(
    spec: &PotentialSpec,
    bracket: (f64, f64),
    settings: &SolverSettings,
) -> Result<BoundState> {
    let xtol = settings.e_tol_rel * spec.v0;
    let energy = brent(
        |e| engine::matching_residual(spec, e, settings.dx),
        bracket.0,
        bracket.1,
        xtol,
        MAX_REFINE_ITER,
    )?;
    let shot = engine::shoot(spec, energy, settings.dx, false)?;
    Ok(BoundState {
        n: shot.nodes,
        energy,
        k: (-energy).sqrt(),
        residual: shot.residual().abs(),
        bracket,
        nodes: shot.nodes,
    })
}

fn delta_state(spec: &PotentialSpec) -> BoundState {
    let k = spec.lambda / 2.0;
    BoundState {
        n: 0,
        energy: -k * k,
        k,
        residual: 0.0,
        bracket: (-k * k, -k * k),
        nodes: 0,
    }
}

pub fn solve_all(spec: &PotentialSpec, settings: &SolverSettings) -> Result<Vec<BoundState>> {
    spec.validate()?;
    if spec.kind == WellKind::DeltaWell {
        return Ok(vec![delta_state(spec)]);
    }
    match solve_with_scan(spec, settings, settings.n_scan) {
        Err(Error::NodeLaw { .. }) => solve_with_scan(spec, settings, 2 * settings.n_scan),
        other => other,
    }
}

fn solve_with_scan(
    spec: &PotentialSpec,
    settings: &SolverSettings,
    n_scan: usize,
) -> Result<Vec<BoundState>> {
    let brackets = scan_brackets(spec, n_scan, settings.dx)?;
    let mut states = brackets
        .par_iter()
        .map(|&b| refine(spec, b, settings))
        .collect::<Result<Vec<_>>>()?;
    states.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    let found: Vec<usize> = states.iter().map(|s| s.nodes).collect();
    if found.iter().enumerate().any(|(i, &nodes)| nodes != i) {
        return Err(Error::NodeLaw {
            expected: states.len(),
            found,
        });
    }
    for (i, s) in states.iter_mut().enumerate() {
        s.n = i;
    }
    Ok(states)
}

/// Parameters of the special-function solutions, in `2m = ħ = 1` units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClosedFormParams {
    /// Parabolic-cylinder order `(E + V₀)/ω − ½`.
    pub nu: f64,
    pub gamma: f64,
    pub omega: f64,
    /// Airy scale `∛(V₀/a)`.
    pub g: f64,
    /// Airy argument at the junction.
    pub y0: f64,
    /// Eckart index with `s(s+1) = V₀a²`.
    pub s: f64,
    pub kappa: f64,
    pub q: f64,
}

impl ClosedFormParams {
    pub fn new(spec: &PotentialSpec, energy: f64) -> Self {
        let PotentialSpec { v0, a, .. } = *spec;
        let omega = 2.0 * v0.sqrt() / a;
        let g = (v0 / a).cbrt();
        ClosedFormParams {
            nu: (energy + v0) / omega - 0.5,
            gamma: (4.0 * v0 / (a * a)).powf(0.25),
            omega,
            g,
            y0: -(energy + v0) / (g * g),
            s: eckart_index(v0, a),
            kappa: (energy + 2.0 * v0).sqrt(),
            q: v0.sqrt(),
        }
    }
}

pub fn eckart_index(v0: f64, a: f64) -> f64 {
    0.5 * (-1.0 + (1.0 + 4.0 * v0 * a * a).sqrt())
}

fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        0.0
    } else {
        1.0 / gamma(x)
    }
}

/// Residual of the model's transcendental quantization condition, when one is
/// implemented.
///
/// * square well: `2qk cos(qa) + (k² − q²) sin(qa)`, `q = √(V₀ + E)`
/// * delta well: `k − λ/2`
/// * half Eckart: `ka + 2 Γ((1+ka−s)/2) Γ((2+ka+s)/2) / (Γ((ka−s)/2) Γ((1+ka+s)/2))`
pub fn closed_form_residual(spec: &PotentialSpec, energy: f64) -> Option<f64> {
    let k = (-energy).sqrt();
    match spec.kind {
        WellKind::FiniteSquareWell => Some(square_well_condition(spec, energy)),
        WellKind::DeltaWell => Some(k - spec.lambda / 2.0),
        WellKind::HalfEckart => {
            let eps = k * spec.a;
            let s = eckart_index(spec.v0, spec.a);
            let ratio = gamma((1.0 + eps - s) / 2.0) * gamma((2.0 + eps + s) / 2.0)
                / (gamma((eps - s) / 2.0) * gamma((1.0 + eps + s) / 2.0));
            Some(eps + 2.0 * ratio)
        }
        _ => None,
    }
}

fn square_well_condition(spec: &PotentialSpec, energy: f64) -> f64 {
    let k = (-energy).sqrt();
    let q = (spec.v0 + energy).sqrt();
    let qa = q * spec.a;
    2.0 * q * k * qa.cos() + (k * k - q * q) * qa.sin()
}

/// The half-Eckart condition multiplied through by `Γ((1+ka+s)/2) / Γ((1+ka−s)/2)`,
/// which removes its poles without moving its zeros.
fn eckart_entire(spec: &PotentialSpec, energy: f64) -> f64 {
    let eps = (-energy).sqrt() * spec.a;
    let s = eckart_index(spec.v0, spec.a);
    eps * rgamma((1.0 + eps - s) / 2.0) * gamma((1.0 + eps + s) / 2.0)
        + 2.0 * gamma((2.0 + eps + s) / 2.0) * rgamma((eps - s) / 2.0)
}

/// Roots of the closed-form condition, ascending; `None` where unsupported.
pub fn closed_form_spectrum(spec: &PotentialSpec) -> Option<Vec<f64>> {
    let f: fn(&PotentialSpec, f64) -> f64 = match spec.kind {
        WellKind::DeltaWell => return Some(vec![delta_state(spec).energy]),
        WellKind::FiniteSquareWell => square_well_condition,
        WellKind::HalfEckart => eckart_entire,
        _ => return None,
    };
    let n = 4000;
    let delta = 1e-9 * spec.v0;
    let lo = spec.energy_floor() + delta;
    let hi = -delta;
    let step = (hi - lo) / n as f64;
    let mut roots = Vec::new();
    let mut prev = (lo, f(spec, lo));
    for i in 1..=n {
        let e = lo + i as f64 * step;
        let v = f(spec, e);
        if v.signum() != prev.1.signum() {
            if let Ok(r) = brent(
                |x| Ok(f(spec, x)),
                prev.0,
                e,
                1e-14 * spec.v0,
                MAX_REFINE_ITER,
            ) {
                roots.push(r);
            }
        }
        prev = (e, v);
    }
    Some(roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(kind: WellKind) -> Vec<BoundState> {
        let spec = PotentialSpec::study(kind);
        solve_all(&spec, &SolverSettings::for_spec(&spec)).unwrap()
    }

    fn assert_levels(states: &[BoundState], expected: &[f64], tol: f64) {
        assert_eq!(states.len(), expected.len(), "{states:?}");
        for (s, e) in states.iter().zip(expected) {
            assert!((s.energy - e).abs() < tol, "{} vs {e}", s.energy);
        }
    }

    #[test]
    fn published_half_parabolic_levels() {
        assert_levels(&solve(WellKind::HalfParabolic), &[-10.6370, -3.9894], 2e-3);
    }

    #[test]
    fn published_half_eckart_levels() {
        assert_levels(
            &solve(WellKind::HalfEckart),
            &[-10.9628, -5.8470, -2.2641, -0.3400],
            2e-3,
        );
    }

    #[test]
    fn published_half_triangular_levels() {
        assert_levels(&solve(WellKind::HalfTriangular), &[-8.1408, -1.8025], 2e-3);
    }

    #[test]
    fn half_exponential_has_one_bracket() {
        let spec = PotentialSpec::study(WellKind::HalfExponential);
        let b = scan_brackets(&spec, 400, default_dx(&spec)).unwrap();
        assert_eq!(b.len(), 1);
        let s = refine(&spec, b[0], &SolverSettings::for_spec(&spec)).unwrap();
        assert!((s.energy + 3.9249).abs() < 2e-3);
    }

    #[test]
    fn shallow_eckart_does_not_crash() {
        let spec = PotentialSpec::new(WellKind::HalfEckart, 0.001, 2.0).unwrap();
        let b = scan_brackets(&spec, 400, default_dx(&spec)).unwrap();
        assert!(b.len() <= 1);
    }

    #[test]
    fn delta_bypass() {
        let s = solve(WellKind::DeltaWell);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].energy, -1.0);
        assert_eq!(s[0].n, 0);
        let spec = PotentialSpec::study(WellKind::DeltaWell);
        assert_eq!(closed_form_residual(&spec, -1.0), Some(0.0));
    }

    #[test]
    fn refined_states_obey_invariants() {
        for kind in WellKind::HALF_WELLS {
            let spec = PotentialSpec::study(kind);
            for (i, s) in solve(kind).iter().enumerate() {
                assert_eq!(s.n, i);
                assert!(s.residual < 1e-8, "{kind} {s:?}");
                assert!(s.energy > spec.energy_floor() && s.energy < 0.0);
                assert!((s.k * s.k + s.energy).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eckart_condition_at_published_ground_state() {
        let spec = PotentialSpec::study(WellKind::HalfEckart);
        let r = closed_form_residual(&spec, -10.9628).unwrap();
        assert!(r.abs() < 1e-3, "{r}");
    }

    #[test]
    fn unsupported_closed_forms() {
        for kind in [
            WellKind::HalfParabolic,
            WellKind::HalfTriangular,
            WellKind::HalfExponential,
        ] {
            assert!(closed_form_residual(&PotentialSpec::study(kind), -3.0).is_none());
            assert!(closed_form_spectrum(&PotentialSpec::study(kind)).is_none());
        }
    }

    #[test]
    fn closed_form_params_formulas() {
        let spec = PotentialSpec::study(WellKind::HalfParabolic);
        let p = ClosedFormParams::new(&spec, -10.0);
        assert!((p.omega - 15f64.sqrt()).abs() < 1e-14);
        assert!((p.nu - (5.0 / 15f64.sqrt() - 0.5)).abs() < 1e-14);
        assert!((p.g - 7.5f64.cbrt()).abs() < 1e-14);
        assert!((p.s * (p.s + 1.0) - 60.0).abs() < 1e-12);
        assert!((p.kappa - 20f64.sqrt()).abs() < 1e-14);
    }
}
