//! Moments, divergence verdicts, tail exponents and the Ehrenfest balance.
//!
//! Position-space moments use `⟨p²⟩ = E − ⟨V⟩` and `⟨p⁴⟩ = ⟨(E − V)²⟩`;
//! momentum-space moments integrate `p^{2j} I(p)` up to a cutoff. A `p⁻⁶`
//! intensity tail makes the `j = 3` partial sums grow linearly while the
//! `j ≤ 2` sums converge, which is what the growth ratio detects.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{PotentialSpec, WellKind};
use crate::momentum::MomentumDistribution;
use crate::quad::simpson;
use crate::wavefun::WaveFunction;

pub const DEFAULT_CUTOFFS: [f64; 4] = [40.0, 80.0, 120.0, 160.0];
pub const DEFAULT_TAIL_WINDOW: (f64, f64) = (40.0, 150.0);
/// Lowest momentum accepted as the start of a tail window.
pub const MIN_TAIL_P: f64 = 20.0;
pub const MIN_TAIL_POINTS: usize = 50;
pub const DIVERGENT_RATIO: f64 = 0.5;
pub const CONVERGENT_RATIO: f64 = 0.2;

/// `⟨p²⟩ = E − ∫Vψ²`. The left tail sits where `V = 0`.
pub fn p2_position(wf: &WaveFunction, spec: &PotentialSpec) -> f64 {
    if spec.kind == WellKind::DeltaWell {
        return wf.energy() + spec.lambda * wf.psi0 * wf.psi0;
    }
    wf.energy() - wf.right_expectation(|x, side| spec.potential_from(x, side))
}

/// `⟨p⁴⟩ = ∫(E − V)²ψ²`. Refused for the delta well, where it is infinite.
pub fn p4_position(wf: &WaveFunction, spec: &PotentialSpec) -> Result<f64> {
    if spec.kind == WellKind::DeltaWell {
        return Err(Error::Divergent { order: 4 });
    }
    let e = wf.energy();
    let left = e * e * wf.left_mass();
    Ok(left
        + wf.right_expectation(|x, side| {
            let d = e - spec.potential_from(x, side);
            d * d
        }))
}

fn check_order(order: u32) -> Result<()> {
    if matches!(order, 2 | 4 | 6) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "moment order must be 2, 4 or 6, got {order}"
        )))
    }
}

/// `M_{2j}(P) = ∫_{|p|≤P} p^{2j} I dp`, as twice the Simpson integral over
/// `[0, P]` of the resolved intensity. `P` snaps to the momentum grid.
pub fn partial_moment(md: &MomentumDistribution, order: u32, cutoff: f64) -> Result<f64> {
    check_order(order)?;
    if !(cutoff >= 0.0 && cutoff <= md.p_max() + 0.5 * md.dp) {
        return Err(Error::InvalidParameter(format!(
            "cutoff {cutoff} outside [0, {}]",
            md.p_max()
        )));
    }
    let c = md.center();
    let vals: Vec<f64> = (c..=md.index_of(cutoff))
        .map(|i| md.p[i].powi(order as i32) * md.resolved(i))
        .collect();
    Ok(2.0 * simpson(&vals, md.dp))
}

/// `∫ p^m I dp` over the whole symmetric grid; vanishes for odd `m`.
pub fn signed_moment(md: &MomentumDistribution, m: u32) -> f64 {
    let vals: Vec<f64> = (0..md.p.len())
        .map(|i| md.p[i].powi(m as i32) * md.resolved(i))
        .collect();
    simpson(&vals, md.dp)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Verdict {
    Convergent { limit_estimate: f64 },
    Divergent { linear_rate: f64 },
    Indeterminate,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Convergent { .. } => "Convergent",
            Verdict::Divergent { .. } => "Divergent",
            Verdict::Indeterminate => "Indeterminate",
        }
    }

    pub fn is_convergent(&self) -> bool {
        matches!(self, Verdict::Convergent { .. })
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, Verdict::Divergent { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub order: u32,
    pub cutoffs: Vec<f64>,
    pub partials: Vec<f64>,
    pub growth_ratio: f64,
    pub verdict: Verdict,
}

/// Slope and intercept of the least-squares line through `(x, y)`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub fn divergence_verdict(
    md: &MomentumDistribution,
    order: u32,
    cutoffs: &[f64],
) -> Result<DivergenceReport> {
    check_order(order)?;
    if cutoffs.len() < 4 {
        return Err(Error::InvalidParameter(
            "at least four cutoffs are needed".into(),
        ));
    }
    let step = cutoffs[1] - cutoffs[0];
    let uniform = cutoffs
        .windows(2)
        .all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step.abs().max(1.0));
    if !(step > 0.0 && uniform) {
        return Err(Error::InvalidParameter(
            "cutoffs must be increasing and equally spaced".into(),
        ));
    }
    let partials = cutoffs
        .iter()
        .map(|&p| partial_moment(md, order, p))
        .collect::<Result<Vec<_>>>()?;

    let n = partials.len();
    let first = partials[1] - partials[0];
    let last = partials[n - 1] - partials[n - 2];
    let growth_ratio = if first != 0.0 {
        last / first
    } else if last == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };

    let verdict = if growth_ratio > DIVERGENT_RATIO {
        Verdict::Divergent {
            linear_rate: linear_fit(cutoffs, &partials).0,
        }
    } else if growth_ratio < CONVERGENT_RATIO {
        // Beyond p_max, a p⁻⁶ intensity adds 2c₆P^{2j−5}/(5−2j) for 2j < 5.
        let p_max = md.p_max();
        let tail = if order < 5 {
            let c6 = md.plateau_c6(0.2 * p_max, 0.75 * p_max);
            2.0 * c6 * p_max.powi(order as i32 - 5) / (5 - order) as f64
        } else {
            0.0
        };
        Verdict::Convergent {
            limit_estimate: partial_moment(md, order, p_max)? + tail,
        }
    } else {
        Verdict::Indeterminate
    };
    Ok(DivergenceReport {
        order,
        cutoffs: cutoffs.to_vec(),
        partials,
        growth_ratio,
        verdict,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailFit {
    pub window: (f64, f64),
    /// `d ln I / d ln p`.
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Median of `p⁶ I` over the window.
    pub plateau_c6: f64,
    pub points: usize,
}

impl TailFit {
    /// `∫_{|p|>P} p^m I dp` for the fitted power law; infinite when the
    /// fitted tail does not decay fast enough.
    pub fn beyond(&self, m: u32, cutoff: f64) -> f64 {
        let e = self.slope + m as f64 + 1.0;
        if e >= 0.0 {
            return f64::INFINITY;
        }
        2.0 * self.intercept.exp() * cutoff.powf(e) / -e
    }
}

/// Least-squares fit of `ln I` against `ln p` over `window`.
pub fn tail_exponent(md: &MomentumDistribution, window: (f64, f64)) -> Result<TailFit> {
    let (lo, hi) = window;
    if !(lo >= MIN_TAIL_P && hi > lo) {
        return Err(Error::Window(format!(
            "window [{lo}, {hi}] must satisfy {MIN_TAIL_P} <= lo < hi"
        )));
    }
    if hi > md.p_max() + 0.5 * md.dp {
        return Err(Error::Window(format!(
            "window end {hi} beyond p_max = {}",
            md.p_max()
        )));
    }
    let idx: Vec<usize> = (md.index_of(lo)..=md.index_of(hi)).collect();
    if idx.len() < MIN_TAIL_POINTS {
        return Err(Error::Window(format!(
            "{} points in window, need {MIN_TAIL_POINTS}",
            idx.len()
        )));
    }
    let mut lx = Vec::with_capacity(idx.len());
    let mut ly = Vec::with_capacity(idx.len());
    for &i in &idx {
        let v = md.resolved(i);
        if v <= 0.0 {
            return Err(Error::NoiseFloor { p: md.p[i] });
        }
        lx.push(md.p[i].ln());
        ly.push(v.ln());
    }
    let (slope, intercept) = linear_fit(&lx, &ly);
    let mean = ly.iter().sum::<f64>() / ly.len() as f64;
    let ss_tot: f64 = ly.iter().map(|y| (y - mean) * (y - mean)).sum();
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    Ok(TailFit {
        window,
        slope,
        intercept,
        r2: if ss_tot > 0.0 {
            1.0 - ss_res / ss_tot
        } else {
            1.0
        },
        plateau_c6: md.plateau_c6(lo, hi),
        points: idx.len(),
    })
}

/// Stationary-state force balance `⟨V′⟩ = 0`, split into the smooth part and
/// the jump contributions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EhrenfestReport {
    /// `∫U′ψ²` with `U = −V` on the smooth pieces.
    pub interior: f64,
    /// `−Σ ΔV_j ψ²(x_j)` over the jumps; `V₀ψ²(0)` for a half well.
    pub boundary: f64,
    /// `−interior − boundary = ⟨V′⟩`.
    pub residual: f64,
    /// `|residual|` relative to the larger of `∫|V′|ψ²` and `Σ|ΔV_j|ψ²(x_j)`.
    pub relative: f64,
    /// Set when the balance holds by symmetry and no quadrature was done.
    pub exact: bool,
}

pub fn ehrenfest(wf: &WaveFunction, spec: &PotentialSpec) -> EhrenfestReport {
    if spec.kind == WellKind::DeltaWell {
        return EhrenfestReport {
            interior: 0.0,
            boundary: 0.0,
            residual: 0.0,
            relative: 0.0,
            exact: true,
        };
    }
    let interior = -wf.right_expectation(|x, side| spec.derivative_from(x, side));
    let interior_scale = wf.right_expectation(|x, side| spec.derivative_from(x, side).abs());
    let (mut boundary, mut boundary_scale) = (0.0, 0.0);
    for jump in spec.jumps() {
        let psi = if jump.x == 0.0 {
            wf.psi0
        } else {
            wf.evaluate(jump.x)
        };
        boundary -= jump.size * psi * psi;
        boundary_scale += jump.size.abs() * psi * psi;
    }
    let residual = -interior - boundary;
    let scale = interior_scale.max(boundary_scale);
    EhrenfestReport {
        interior,
        boundary,
        residual,
        relative: if scale > 0.0 {
            residual.abs() / scale
        } else {
            0.0
        },
        exact: false,
    }
}

/// Agreement of position-space and momentum-space moments for one state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CrossReport {
    pub p2_position: f64,
    /// `M₂(p_max)` plus the fitted power-law tail.
    pub p2_momentum: f64,
    pub p2_relative: f64,
    /// `None` where `⟨p⁴⟩` is infinite.
    pub p4_position: Option<f64>,
    /// `M₄(p_max) + 2c₆/p_max`.
    pub p4_momentum_corrected: f64,
    pub p4_relative: Option<f64>,
    pub p1: f64,
    pub p3: f64,
    /// Tail fit used for the corrections; absent when the tail sits below
    /// the noise floor, in which case no correction is applied.
    pub tail: Option<TailFit>,
}

pub fn cross_representation(
    wf: &WaveFunction,
    spec: &PotentialSpec,
    md: &MomentumDistribution,
    window: (f64, f64),
) -> Result<CrossReport> {
    let p_max = md.p_max();
    let tail = tail_exponent(md, window).ok();
    let p2_tail = tail.map_or(0.0, |t| t.beyond(2, p_max));
    let c6 = tail.map_or(0.0, |t| t.plateau_c6);

    let p2_position = p2_position(wf, spec);
    let p2_momentum = partial_moment(md, 2, p_max)? + p2_tail;
    let p4_position = p4_position(wf, spec).ok();
    let p4_momentum_corrected = partial_moment(md, 4, p_max)? + 2.0 * c6 / p_max;
    Ok(CrossReport {
        p2_position,
        p2_momentum,
        p2_relative: (p2_position - p2_momentum).abs() / p2_position.abs(),
        p4_position,
        p4_momentum_corrected,
        p4_relative: p4_position.map(|v| (v - p4_momentum_corrected).abs() / v.abs()),
        p1: signed_moment(md, 1),
        p3: signed_moment(md, 3),
        tail,
    })
}
