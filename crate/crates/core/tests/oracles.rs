//! Independent closed-form oracles for the numerical pipeline.

use std::f64::consts::PI;

use halfwell::analysis::{p2_position, p4_position, partial_moment};
use halfwell::eigensolver::{closed_form_spectrum, solve_all, BoundState, SolverSettings};
use halfwell::model::{PotentialSpec, Side, WellKind};
use halfwell::momentum::{transform, MomentumDistribution};
use halfwell::wavefun::{assemble, WaveFunction};
use proptest::prelude::*;

fn solved(kind: WellKind) -> (PotentialSpec, Vec<BoundState>, f64) {
    let spec = PotentialSpec::study(kind);
    let settings = SolverSettings::for_spec(&spec);
    (spec, solve_all(&spec, &settings).unwrap(), settings.dx)
}

fn ground(kind: WellKind) -> (PotentialSpec, WaveFunction, MomentumDistribution) {
    let (spec, states, dx) = solved(kind);
    let wf = assemble(&spec, &states[0], dx).unwrap();
    let md = transform(&wf, 200.0, 0.05).unwrap();
    (spec, wf, md)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Square-well levels from the textbook parity conditions
/// `q tan(qa/2) = k` (even) and `−q cot(qa/2) = k` (odd), with `q² + k² = v0`.
fn square_well_levels(v0: f64, a: f64) -> Vec<f64> {
    let h = 0.5 * a;
    let qmax = v0.sqrt();
    let mut levels = Vec::new();
    let mut branch = 0;
    loop {
        let lo = branch as f64 * PI / (2.0 * h) + 1e-12;
        if lo >= qmax {
            break;
        }
        let hi = ((branch + 1) as f64 * PI / (2.0 * h) - 1e-12).min(qmax - 1e-12);
        let k = |q: f64| (v0 - q * q).sqrt();
        let f = |q: f64| {
            if branch % 2 == 0 {
                q * (q * h).tan() - k(q)
            } else {
                -q / (q * h).tan() - k(q)
            }
        };
        if f(lo) * f(hi) < 0.0 {
            let q = bisect(f, lo, hi);
            levels.push(q * q - v0);
        }
        branch += 1;
    }
    levels.sort_by(f64::total_cmp);
    levels
}

#[test]
fn square_well_matches_parity_conditions() {
    let (spec, states, _) = solved(WellKind::FiniteSquareWell);
    let expected = square_well_levels(spec.v0, spec.a);
    assert_eq!(states.len(), expected.len());
    assert_eq!(states.len(), 3);
    for (s, e) in states.iter().zip(&expected) {
        assert!((s.energy - e).abs() < 1e-6, "{} vs {e}", s.energy);
    }
}

#[test]
fn square_well_closed_form_agrees_with_parity_conditions() {
    let spec = PotentialSpec::study(WellKind::FiniteSquareWell);
    let closed = closed_form_spectrum(&spec).unwrap();
    let expected = square_well_levels(spec.v0, spec.a);
    assert_eq!(closed.len(), expected.len());
    for (c, e) in closed.iter().zip(&expected) {
        assert!((c - e).abs() < 1e-9, "{c} vs {e}");
    }
}

/// Ground state of the square well, centred at `a/2`: amplitude and `ψ(y)`.
fn square_well_ground(v0: f64, a: f64, energy: f64) -> (f64, f64, f64, f64) {
    let q = (v0 + energy).sqrt();
    let k = (-energy).sqrt();
    let h = 0.5 * a;
    let norm = h + (2.0 * q * h).sin() / (2.0 * q) + (q * h).cos().powi(2) / k;
    (norm.sqrt().recip(), q, k, h)
}

#[test]
fn square_well_wavefunction_and_transform_match_closed_form() {
    let (spec, wf, md) = ground(WellKind::FiniteSquareWell);
    let (amp, q, k, h) = square_well_ground(spec.v0, spec.a, wf.energy());
    let psi = |x: f64| {
        let y = (x - h).abs();
        if y <= h {
            amp * (q * y).cos()
        } else {
            amp * (q * h).cos() * (-k * (y - h)).exp()
        }
    };
    for x in [-1.5, -0.2, 0.0, 0.3, 1.0, 1.7, 2.0, 2.9, 4.0] {
        assert!((wf.evaluate(x) - psi(x)).abs() < 1e-6, "x = {x}");
    }

    for p in [0.0, 0.7, 3.0, 10.0, 50.0, 150.0] {
        let inside = if (q - p).abs() < 1e-12 {
            h + (2.0 * q * h).sin() / (2.0 * q)
        } else {
            ((q - p) * h).sin() / (q - p) + ((q + p) * h).sin() / (q + p)
        };
        let outside =
            2.0 * (q * h).cos() * (k * (p * h).cos() - p * (p * h).sin()) / (k * k + p * p);
        let magnitude = amp * (inside + outside) / (2.0 * PI).sqrt();
        let phase = num_complex::Complex64::from_polar(1.0, -p * h);
        let exact = phase * magnitude;
        let got = md.phi[md.index_of(p)];
        assert!((got - exact).norm() < 1e-7, "p = {p}: {got} vs {exact}");
    }
}

#[test]
fn square_well_fourth_moment_from_region_probabilities() {
    let (spec, wf, _) = ground(WellKind::FiniteSquareWell);
    let e = wf.energy();
    let (amp, q, _, h) = square_well_ground(spec.v0, spec.a, e);
    let inside = amp * amp * (h + (2.0 * q * h).sin() / (2.0 * q));
    let exact = (e + spec.v0).powi(2) * inside + e * e * (1.0 - inside);
    assert!((p4_position(&wf, &spec).unwrap() - exact).abs() < 1e-7 * exact);
    let p2 = (e + spec.v0) * inside + e * (1.0 - inside);
    assert!((p2_position(&wf, &spec) - p2).abs() < 1e-8);
}

fn eckart_index(v0: f64, a: f64) -> f64 {
    0.5 * (-1.0 + (1.0 + 4.0 * v0 * a * a).sqrt())
}

#[test]
fn full_eckart_matches_textbook_spectrum() {
    let (spec, states, _) = solved(WellKind::FullEckart);
    let s = eckart_index(spec.v0, spec.a);
    let count = s.ceil() as usize;
    assert_eq!(count, 8);
    assert_eq!(states.len(), count);
    for (n, st) in states.iter().enumerate() {
        let exact = -((s - n as f64) / spec.a).powi(2);
        assert!(
            (st.energy - exact).abs() < 1e-6,
            "n = {n}: {} vs {exact}",
            st.energy
        );
        assert_eq!(st.nodes, n);
    }
}

#[test]
fn full_eckart_ground_state_is_sech_power() {
    let (spec, wf, _) = ground(WellKind::FullEckart);
    let s = eckart_index(spec.v0, spec.a);
    let c = spec.eckart_center();
    // ∫ sech^{2s}(u) du = √π Γ(s)/Γ(s + ½)
    let gamma = |x: f64| statrs::function::gamma::gamma(x);
    let norm = spec.a * PI.sqrt() * gamma(s) / gamma(s + 0.5);
    for dx in [-3.0, -1.0, 0.0, 0.5, 2.0, 4.0] {
        let x = c + dx;
        let exact = (1.0 / (dx / spec.a).cosh()).powf(s) / norm.sqrt();
        assert!((wf.evaluate(x) - exact).abs() < 1e-7, "x - c = {dx}");
    }
}

#[test]
fn half_eckart_closed_form_roots_match_shooting() {
    let (spec, states, _) = solved(WellKind::HalfEckart);
    let roots = closed_form_spectrum(&spec).unwrap();
    assert_eq!(roots.len(), states.len());
    for (r, s) in roots.iter().zip(&states) {
        assert!((r - s.energy).abs() < 1e-6, "{r} vs {}", s.energy);
    }
}

#[test]
fn delta_well_closed_forms() {
    let (spec, wf, md) = ground(WellKind::DeltaWell);
    assert_eq!(wf.energy(), -spec.lambda * spec.lambda / 4.0);
    for p in [0.0, 1.0, 5.0, 10.0, 50.0, 199.0] {
        let exact = (2.0 / PI).sqrt() / (1.0 + p * p);
        assert!((md.phi[md.index_of(p)].re - exact).abs() < 1e-6);
        assert!(md.phi[md.index_of(p)].im.abs() < 1e-6);
    }
    // ∫_{|p|≤P} p²(2/π)(1+p²)⁻² dp = (2/π)(atan P − P/(1+P²))
    for p in [10.0, 100.0, 200.0] {
        let exact = 2.0 / PI * (f64::atan(p) - p / (1.0 + p * p));
        assert!((partial_moment(&md, 2, p).unwrap() - exact).abs() < 1e-6);
    }
}

#[test]
fn jump_well_second_moment_converges_in_cutoff() {
    for kind in [WellKind::HalfParabolic, WellKind::FiniteSquareWell] {
        let (_, _, md) = ground(kind);
        let m100 = partial_moment(&md, 2, 100.0).unwrap();
        let m200 = partial_moment(&md, 2, 200.0).unwrap();
        assert!((m200 - m100).abs() / m200 < 1e-5, "{kind}");
    }
}

#[test]
fn doubling_pmax_leaves_second_moment_unchanged() {
    let (_, wf, md) = ground(WellKind::HalfParabolic);
    let wide = transform(&wf, 400.0, 0.05).unwrap();
    let a = partial_moment(&md, 2, 200.0).unwrap();
    let b = partial_moment(&wide, 2, 400.0).unwrap();
    assert!((a - b).abs() / b < 1e-6, "{a} vs {b}");
}

#[test]
fn smooth_control_fourth_moment_saturates() {
    let (spec, wf, md) = ground(WellKind::FullEckart);
    let m100 = partial_moment(&md, 4, 100.0).unwrap();
    let m200 = partial_moment(&md, 4, 200.0).unwrap();
    assert!((m200 - m100).abs() < 1e-6 * m200);
    let x = p4_position(&wf, &spec).unwrap();
    assert!((x - m200).abs() < 1e-6 * x);
}

fn finite_difference(spec: &PotentialSpec, x: f64) -> f64 {
    let h = 1e-5 * x.abs().max(1.0);
    (spec.potential_from(x + h, Side::Right) - spec.potential_from(x - h, Side::Right)) / (2.0 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn smooth_derivative_matches_finite_differences(
        which in 0usize..5,
        x in 0.01f64..6.0,
    ) {
        let kind = [
            WellKind::HalfParabolic,
            WellKind::HalfTriangular,
            WellKind::HalfEckart,
            WellKind::HalfExponential,
            WellKind::FullEckart,
        ][which];
        let spec = PotentialSpec::study(kind);
        let x = if kind == WellKind::FullEckart { spec.eckart_center() + x - 3.0 } else { x };
        let exact = spec.smooth_derivative(x).unwrap();
        let fd = finite_difference(&spec, x);
        prop_assert!((exact - fd).abs() <= 1e-6 * exact.abs().max(1.0), "{kind} at {x}: {exact} vs {fd}");
    }

    #[test]
    fn transform_is_conjugate_symmetric(i in 0usize..4001) {
        let md = half_parabolic_md();
        let c = md.center();
        prop_assert_eq!(md.phi[c + i], md.phi[c - i].conj());
        prop_assert_eq!(md.intensity[c + i], md.intensity[c - i]);
    }
}

fn half_parabolic_md() -> &'static MomentumDistribution {
    static MD: std::sync::OnceLock<MomentumDistribution> = std::sync::OnceLock::new();
    MD.get_or_init(|| ground(WellKind::HalfParabolic).2)
}
