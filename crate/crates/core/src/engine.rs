//! Inward shooting for `ψ'' = (V − E) ψ` on `[0, x_max]`.
//!
//! The decaying solution grows toward the well when integrated right to left,
//! so the march is stable. Models with a field-free region beyond some `x_f`
//! (square well, Eckart) start the march at `x_f`; the stretch `[x_f, x_max]`
//! is filled with the exact free solution `e^{-k(x − x_f)}`.

use crate::error::{Error, Result};
use crate::model::{PotentialSpec, Side, WellKind};

/// Seed amplitude at `x_max`.
pub const SEED: f64 = 1e-30;
/// Magnitude at which the running solution is rescaled.
pub const OVERFLOW_GUARD: f64 = 1e250;
/// Samples below this (after max-normalization) are tail noise for node counting.
pub const NODE_FLOOR: f64 = 1e-12;

/// Default spacing `min(a/2000, 1e-3·a)`.
pub fn default_dx(spec: &PotentialSpec) -> f64 {
    (spec.a / 2000.0).min(1e-3 * spec.a)
}

/// Validates a requested spacing and, for the square well, snaps it so that
/// `x = a` lands on an even grid index.
pub fn grid_spacing(spec: &PotentialSpec, dx: f64) -> Result<f64> {
    if !(dx.is_finite() && dx > 0.0) {
        return Err(Error::InvalidParameter("dx must be positive".into()));
    }
    if spec.kind == WellKind::FiniteSquareWell {
        let half_panels = (spec.a / (2.0 * dx)).ceil().max(1.0);
        return Ok(spec.a / (2.0 * half_panels));
    }
    Ok(dx)
}

#[derive(Clone, Debug)]
pub struct ShotResult {
    pub e_trial: f64,
    /// `ψ(0⁺)` in max-normalized units.
    pub psi0: f64,
    /// `ψ'(0⁺)` in max-normalized units.
    pub dpsi0: f64,
    pub dx: f64,
    /// `ψ(j·dx)` for `j = 0..=n`, scaled so that `max|ψ| = 1`.
    pub samples: Vec<f64>,
    pub nodes: usize,
    pub rescalings: usize,
    /// Mismatch of the two sides of the matching point; vanishes at an
    /// eigenvalue and changes sign across it.
    pub matching: f64,
}

impl ShotResult {
    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.samples.len() - 1)
    }

    pub fn residual(&self) -> f64 {
        self.matching
    }
}

/// Strict sign changes of `ψ` on the open interval `(0, x_max)`, ignoring
/// samples below [`NODE_FLOOR`].
pub fn count_nodes(shot: &ShotResult) -> usize {
    sign_changes(&shot.samples)
}

fn sign_changes(samples: &[f64]) -> usize {
    let n = samples.len();
    if n < 3 {
        return 0;
    }
    let mut last_sign = 0.0;
    let mut changes = 0;
    for &v in &samples[1..n - 1] {
        if v.abs() < NODE_FLOOR {
            continue;
        }
        let s = v.signum();
        if last_sign != 0.0 && s != last_sign {
            changes += 1;
        }
        last_sign = s;
    }
    changes
}

pub fn integrate_inward(spec: &PotentialSpec, energy: f64, dx: f64) -> Result<ShotResult> {
    shoot(spec, energy, dx, true)
}

/// One RK4 step of `(ψ, ψ')` from `x` to `x + h`. Potentials at the step ends
/// are taken from the side facing into the step, so a breakpoint on a grid
/// point is never straddled.
fn rk4_step(spec: &PotentialSpec, energy: f64, x: f64, h: f64, y: (f64, f64)) -> (f64, f64) {
    let (near, far) = if h > 0.0 {
        (Side::Right, Side::Left)
    } else {
        (Side::Left, Side::Right)
    };
    let v0 = spec.potential_from(x, near);
    let vm = spec.potential_from(x + 0.5 * h, near);
    let v1 = spec.potential_from(x + h, far);
    let f = |v: f64, y: (f64, f64)| (y.1, (v - energy) * y.0);
    let k1 = f(v0, y);
    let k2 = f(vm, (y.0 + 0.5 * h * k1.0, y.1 + 0.5 * h * k1.1));
    let k3 = f(vm, (y.0 + 0.5 * h * k2.0, y.1 + 0.5 * h * k2.1));
    let k4 = f(v1, (y.0 + h * k3.0, y.1 + h * k3.1));
    (
        y.0 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        y.1 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

/// Marches `y` from index `from` to index `to` (either direction), writing
/// `ψ` into `samples` and rescaling everything written so far on overflow.
/// Returns the final `(ψ, ψ')` and the number of rescalings.
fn march(
    spec: &PotentialSpec,
    energy: f64,
    dx: f64,
    (from, to): (usize, usize),
    mut y: (f64, f64),
    samples: &mut [f64],
) -> ((f64, f64), usize) {
    let mut rescalings = 0;
    samples[from] = y.0;
    let mut j = from;
    while j != to {
        let next = if to > from { j + 1 } else { j - 1 };
        let h = (next as f64 - j as f64) * dx;
        y = rk4_step(spec, energy, j as f64 * dx, h, y);
        samples[next] = y.0;
        if y.0.abs() > OVERFLOW_GUARD {
            let s = 1.0 / OVERFLOW_GUARD;
            y = (y.0 * s, y.1 * s);
            let written = if to > from { from..=next } else { next..=from };
            for v in &mut samples[written] {
                *v *= s;
            }
            rescalings += 1;
        }
        j = next;
    }
    (y, rescalings)
}

/// With `with_tail = false` the free-solution stretch beyond the field-free
/// point is not materialized; `psi0`, `dpsi0` and `nodes` are unaffected.
///
/// The full Eckart well sits far from the origin, and its left flank cannot
/// be crossed inward (the wanted solution decays in the marching direction).
/// There the left piece is marched outward from the `e^{kx}` tail at `x = 0`,
/// the two pieces meet at the well centre, and the mismatch is a normalized
/// Wronskian.
pub(crate) fn shoot(
    spec: &PotentialSpec,
    energy: f64,
    dx: f64,
    with_tail: bool,
) -> Result<ShotResult> {
    if spec.kind == WellKind::DeltaWell {
        return Err(Error::InvalidParameter(
            "the delta well is solved analytically, not by shooting".into(),
        ));
    }
    spec.check_energy(energy)?;
    let dx = grid_spacing(spec, dx)?;
    let k = (-energy).sqrt();

    let x_cut = spec.domain_cutoff(energy)?;
    let mut n = (x_cut / dx).ceil() as usize;
    n += n % 2;
    let start = match spec.flat_from() {
        Some(x_flat) => ((x_flat / dx).round() as usize).min(n),
        None => n,
    };
    let x_start = start as f64 * dx;

    let v_start = spec.potential_from(x_start, Side::Right);
    if v_start <= energy {
        return Err(Error::NotForbidden { v: v_start, energy });
    }
    let psi = SEED * (k * (n - start) as f64 * dx).exp();
    let dpsi = -(v_start - energy).sqrt() * psi;

    let len = if with_tail { n + 1 } else { start + 1 };
    let mut samples = vec![0.0; len];
    for (offset, slot) in samples[start + 1..].iter_mut().enumerate() {
        *slot = psi * (-k * (offset + 1) as f64 * dx).exp();
    }

    let meet = match spec.kind {
        WellKind::FullEckart => ((spec.eckart_center() / dx).round() as usize).min(start),
        _ => 0,
    };
    let (right, mut rescalings) = march(spec, energy, dx, (start, meet), (psi, dpsi), &mut samples);

    let (matching, dpsi0) = if meet == 0 {
        (right.1 - k * right.0, right.1)
    } else {
        let mut left_part = vec![0.0; meet + 1];
        let (left, left_rescalings) = march(spec, energy, dx, (0, meet), (1.0, k), &mut left_part);
        rescalings += left_rescalings;
        // Join the pieces by a least-squares fit of (ψ, ψ'/k) at the meeting point.
        let nl = left.0.hypot(left.1 / k);
        let nr = right.0.hypot(right.1 / k);
        let wronskian = (left.0 * right.1 - left.1 * right.0) / (k * nl * nr);
        let c = (left.0 * right.0 + left.1 * right.1 / (k * k)) / (nl * nl);
        for (s, l) in samples[..meet].iter_mut().zip(&left_part) {
            *s = c * l;
        }
        (wronskian, k * samples[0])
    };

    let scale = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for v in &mut samples {
        *v /= scale;
    }
    let nodes = sign_changes(&samples);
    Ok(ShotResult {
        e_trial: energy,
        psi0: samples[0],
        dpsi0: dpsi0 / scale,
        dx,
        samples,
        nodes,
        rescalings,
        matching: if meet == 0 {
            matching / scale
        } else {
            matching
        },
    })
}

/// `ψ'(0⁺) − k ψ(0⁺)` with `k = √(−E)`: zero exactly when the shot joins
/// smoothly onto the left tail `e^{kx}`.
pub fn matching_residual(spec: &PotentialSpec, energy: f64, dx: f64) -> Result<f64> {
    Ok(shoot(spec, energy, dx, false)?.residual())
}
