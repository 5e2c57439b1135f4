//! Momentum-space wavefunction `φ(p) = (2π)^{-1/2} ∫ ψ(x) e^{-ipx} dx`.
//!
//! The left tail transforms exactly to `ψ(0)/(k − ip)`. The sampled right
//! side uses Filon–Simpson quadrature: the oscillatory weight is integrated
//! exactly against the piecewise-quadratic interpolant of `ψ`, so accuracy
//! does not degrade as `p·dx` grows toward the stability bound.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::eigensolver::BoundState;
use crate::error::{Error, Result};
use crate::quad::simpson;
use crate::wavefun::WaveFunction;

pub const DEFAULT_P_MAX: f64 = 200.0;
pub const DEFAULT_DP: f64 = 0.05;
pub const DEFAULT_FILON_BOUND: f64 = 2.0;
pub const PARSEVAL_TOLERANCE: f64 = 1e-4;

/// Round-off amplification assumed when estimating the transform noise floor.
const NOISE_FACTOR: f64 = 100.0;
/// Exact phase recomputation interval for the rotating phasor.
const RESYNC: usize = 512;

#[derive(Clone, Debug)]
pub struct MomentumDistribution {
    /// Symmetric uniform grid `[−p_max, p_max]`.
    pub p: Vec<f64>,
    pub phi: Vec<Complex64>,
    /// `|φ(p)|²`.
    pub intensity: Vec<f64>,
    pub dp: f64,
    /// Intensity below which values are indistinguishable from round-off.
    pub noise_floor: f64,
    pub state: BoundState,
}

impl MomentumDistribution {
    /// Index of `p = 0`.
    pub fn center(&self) -> usize {
        self.p.len() / 2
    }

    pub fn p_max(&self) -> f64 {
        *self.p.last().unwrap()
    }

    /// `I` with values at or below the noise floor set to zero.
    pub fn resolved(&self, i: usize) -> f64 {
        let v = self.intensity[i];
        if v > self.noise_floor {
            v
        } else {
            0.0
        }
    }

    /// Grid index of the nonnegative momentum nearest to `p`.
    pub fn index_of(&self, p: f64) -> usize {
        let j = (p.abs() / self.dp).round() as usize;
        (self.center() + j).min(self.p.len() - 1)
    }

    /// Median of `p⁶ I(p)` over `[lo, hi]`, the coefficient of a `p⁻⁶` tail.
    pub fn plateau_c6(&self, lo: f64, hi: f64) -> f64 {
        let mut vals: Vec<f64> = (self.index_of(lo)..=self.index_of(hi))
            .map(|i| self.p[i].powi(6) * self.resolved(i))
            .collect();
        median(&mut vals)
    }
}

pub(crate) fn median(vals: &mut [f64]) -> f64 {
    if vals.is_empty() {
        return 0.0;
    }
    vals.sort_by(f64::total_cmp);
    let m = vals.len() / 2;
    if vals.len() % 2 == 1 {
        vals[m]
    } else {
        0.5 * (vals[m - 1] + vals[m])
    }
}

/// Filon weights `(α, β, γ)` at `θ = p·dx`.
fn filon_weights(theta: f64) -> (f64, f64, f64) {
    if theta.abs() < 0.1 {
        filon_weights_series(theta)
    } else {
        filon_weights_closed(theta)
    }
}

fn filon_weights_series(theta: f64) -> (f64, f64, f64) {
    {
        let t2 = theta * theta;
        let t3 = t2 * theta;
        let alpha =
            t3 * (2.0 / 45.0 + t2 * (-2.0 / 315.0 + t2 * (2.0 / 4725.0 + t2 * (-8.0 / 467775.0))));
        let beta = 2.0 / 3.0
            + t2 * (2.0 / 15.0
                + t2 * (-4.0 / 105.0
                    + t2 * (2.0 / 567.0 + t2 * (-4.0 / 22275.0 + t2 * 4.0 / 675675.0))));
        let gamma = 4.0 / 3.0
            + t2 * (-2.0 / 15.0
                + t2 * (1.0 / 210.0
                    + t2 * (-1.0 / 11340.0 + t2 * (1.0 / 997920.0 - t2 / 129729600.0))));
        (alpha, beta, gamma)
    }
}

fn filon_weights_closed(theta: f64) -> (f64, f64, f64) {
    let (s, c) = theta.sin_cos();
    let t3 = theta * theta * theta;
    (
        (theta * theta + theta * s * c - 2.0 * s * s) / t3,
        2.0 * (theta * (1.0 + c * c) - 2.0 * s * c) / t3,
        4.0 * (s - theta * c) / t3,
    )
}

/// `∫₀^{x_n} f(x) e^{-ipx} dx` for samples `f` on `x_j = j·h` (even count of
/// intervals).
pub fn filon(f: &[f64], h: f64, p: f64) -> Complex64 {
    let n = f.len() - 1;
    debug_assert!(n.is_multiple_of(2) && n >= 2);
    let (alpha, beta, gamma) = filon_weights(p * h);
    let (sd, cd) = (p * h).sin_cos();
    let (mut c_even, mut c_odd, mut s_even, mut s_odd) = (0.0, 0.0, 0.0, 0.0);
    let (mut s, mut c) = (0.0, 1.0);
    for (j, &v) in f.iter().enumerate() {
        if j % RESYNC == 0 {
            (s, c) = (p * j as f64 * h).sin_cos();
        }
        if j % 2 == 0 {
            c_even += v * c;
            s_even += v * s;
        } else {
            c_odd += v * c;
            s_odd += v * s;
        }
        (s, c) = (s * cd + c * sd, c * cd - s * sd);
    }
    let (sn, cn) = (p * n as f64 * h).sin_cos();
    c_even -= 0.5 * (f[0] + f[n] * cn);
    s_even -= 0.5 * f[n] * sn;
    let cos_part = h * (alpha * f[n] * sn + beta * c_even + gamma * c_odd);
    let sin_part = h * (alpha * (f[0] - f[n] * cn) + beta * s_even + gamma * s_odd);
    Complex64::new(cos_part, -sin_part)
}

pub fn transform(wf: &WaveFunction, p_max: f64, dp: f64) -> Result<MomentumDistribution> {
    transform_with_bound(wf, p_max, dp, DEFAULT_FILON_BOUND)
}

pub fn transform_with_bound(
    wf: &WaveFunction,
    p_max: f64,
    dp: f64,
    filon_bound: f64,
) -> Result<MomentumDistribution> {
    if !(p_max.is_finite() && p_max > 0.0 && dp.is_finite() && dp > 0.0 && dp <= p_max) {
        return Err(Error::InvalidParameter(
            "p_max and dp must be positive with dp <= p_max".into(),
        ));
    }
    let product = p_max * wf.dx;
    if product > filon_bound {
        return Err(Error::FilonBound {
            product,
            bound: filon_bound,
        });
    }
    let half = (p_max / dp).round() as usize;
    let k = wf.k();
    let norm = (2.0 * PI).sqrt().recip();
    let positive: Vec<Complex64> = (0..=half)
        .into_par_iter()
        .map(|j| {
            let p = j as f64 * dp;
            let left = wf.psi0 / Complex64::new(k, -p);
            (left + filon(&wf.samples, wf.dx, p)) * norm
        })
        .collect();

    let mut p = Vec::with_capacity(2 * half + 1);
    let mut phi = Vec::with_capacity(2 * half + 1);
    for j in (1..=half).rev() {
        p.push(-(j as f64) * dp);
        phi.push(positive[j].conj());
    }
    for (j, v) in positive.iter().enumerate() {
        p.push(j as f64 * dp);
        phi.push(*v);
    }
    let intensity = phi.iter().map(|z| z.norm_sqr()).collect();

    let abs_samples: Vec<f64> = wf.samples.iter().map(|v| v.abs()).collect();
    let l1 = wf.psi0.abs() / k + simpson(&abs_samples, wf.dx);
    let phi_noise = NOISE_FACTOR * f64::EPSILON * (wf.samples.len() as f64).sqrt() * l1 * norm;

    Ok(MomentumDistribution {
        p,
        phi,
        intensity,
        dp,
        noise_floor: phi_noise * phi_noise,
        state: wf.state,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParsevalCheck {
    /// `|∫_{−p_max}^{p_max} I dp − 1|`.
    pub residual: f64,
    /// Probability beyond `±p_max` implied by a `c₆ p⁻⁶` tail.
    pub tail_estimate: f64,
}

/// Momentum-space norm by the trapezoid rule over the whole symmetric grid.
/// `I` is analytic in a strip of half-width `k` around the real axis, so the
/// rule converges like `e^{−2πk/dp}` and stays accurate for weakly bound
/// states whose peak spans only a few grid points.
pub fn parseval_residual(md: &MomentumDistribution) -> ParsevalCheck {
    let n = md.intensity.len();
    let sum: f64 = md.intensity.iter().sum();
    let mass = md.dp * (sum - 0.5 * (md.intensity[0] + md.intensity[n - 1]));
    let p_max = md.p_max();
    let c6 = md.plateau_c6(0.2 * p_max, 0.75 * p_max);
    ParsevalCheck {
        residual: (mass - 1.0).abs(),
        tail_estimate: 2.0 * c6 / (5.0 * p_max.powi(5)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedRow {
    pub p: f64,
    pub phi: Complex64,
    pub intensity: f64,
    pub p2i: f64,
    pub p4i: f64,
    pub p6i: f64,
}

/// `p^{2j} I(p)` for `j = 1, 2, 3` over the whole grid, from the resolved
/// intensity.
pub fn weighted_curves(md: &MomentumDistribution) -> Vec<WeightedRow> {
    (0..md.p.len())
        .map(|i| {
            let p = md.p[i];
            let intensity = md.resolved(i);
            let p2 = p * p;
            WeightedRow {
                p,
                phi: md.phi[i],
                intensity,
                p2i: p2 * intensity,
                p4i: p2 * p2 * intensity,
                p6i: p2 * p2 * p2 * intensity,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolver::{solve_all, SolverSettings};
    use crate::model::{PotentialSpec, WellKind};
    use crate::wavefun::assemble;

    fn ground_md(kind: WellKind) -> MomentumDistribution {
        let spec = PotentialSpec::study(kind);
        let settings = SolverSettings::for_spec(&spec);
        let states = solve_all(&spec, &settings).unwrap();
        let wf = assemble(&spec, &states[0], settings.dx).unwrap();
        transform(&wf, DEFAULT_P_MAX, DEFAULT_DP).unwrap()
    }

    #[test]
    fn filon_weights_match_closed_form_at_switch() {
        let (a, b, g) = filon_weights_series(0.1);
        let (ac, bc, gc) = filon_weights_closed(0.1);
        assert!((a - ac).abs() < 1e-12 && (b - bc).abs() < 1e-13 && (g - gc).abs() < 1e-13);
        assert_eq!(filon_weights(0.0), (0.0, 2.0 / 3.0, 4.0 / 3.0));
    }

    #[test]
    fn filon_integrates_quadratics_exactly() {
        // ∫₀² x² e^{-ipx} dx, closed form by parts
        let h = 0.25;
        let f: Vec<f64> = (0..=8).map(|j| (j as f64 * h).powi(2)).collect();
        for p in [0.0, 0.7, 3.0, 11.0] {
            let got = filon(&f, h, p);
            let exact = if p == 0.0 {
                Complex64::new(8.0 / 3.0, 0.0)
            } else {
                let i = Complex64::i();
                let e = (-i * p * 2.0).exp();
                // ∫ x² e^{-ipx} = e^{-ipx}(i x²/p + 2x/p² − 2i/p³)
                let anti = |x: f64, e: Complex64| {
                    e * (i * x * x / p + 2.0 * x / (p * p) - 2.0 * i / p.powi(3))
                };
                anti(2.0, e) - anti(0.0, Complex64::new(1.0, 0.0))
            };
            assert!((got - exact).norm() < 1e-12, "p = {p}: {got} vs {exact}");
        }
    }

    #[test]
    fn delta_transform_matches_lorentzian() {
        let md = ground_md(WellKind::DeltaWell);
        for p in [0.0, 1.0, 5.0, 10.0, 50.0] {
            let i = md.index_of(p);
            let exact = (2.0 / PI).sqrt() / (1.0 + p * p);
            assert!((md.phi[i].re - exact).abs() < 1e-6, "p = {p}");
            assert!(md.phi[i].im.abs() < 1e-6);
        }
        assert!(parseval_residual(&md).residual < 1e-6);
    }

    #[test]
    fn conjugate_symmetry_and_zero_frequency() {
        let md = ground_md(WellKind::HalfParabolic);
        let c = md.center();
        for j in [1usize, 17, 400, 3999] {
            assert_eq!(md.phi[c - j], md.phi[c + j].conj());
            assert_eq!(md.intensity[c - j], md.intensity[c + j]);
        }
        assert!(md.phi[c].im.abs() < 1e-15);
        assert!(md.phi[c].re > 0.0);
    }

    #[test]
    fn half_parabolic_has_p6_plateau() {
        let md = ground_md(WellKind::HalfParabolic);
        let at = |p: f64| {
            let i = md.index_of(p);
            md.p[i].powi(6) * md.intensity[i]
        };
        let (a, b) = (at(40.0), at(150.0));
        assert!(a > 0.0 && (a / b - 1.0).abs() < 0.1, "{a} {b}");
        assert!(parseval_residual(&md).residual < 1e-4);
    }

    #[test]
    fn doubled_intensity_fails_parseval() {
        let mut md = ground_md(WellKind::HalfTriangular);
        for v in &mut md.intensity {
            *v *= 2.0;
        }
        assert!((parseval_residual(&md).residual - 1.0).abs() < 1e-3);
    }

    #[test]
    fn filon_bound_enforced() {
        let spec = PotentialSpec::study(WellKind::HalfParabolic);
        let settings = SolverSettings::for_spec(&spec).with_dx(0.05);
        let states = solve_all(&spec, &settings).unwrap();
        let wf = assemble(&spec, &states[0], 0.05).unwrap();
        assert!(matches!(
            transform(&wf, 200.0, 0.05),
            Err(Error::FilonBound { .. })
        ));
    }
}
