//! Normalized eigenfunctions: analytic left tail `ψ(0)e^{kx}` joined to the
//! sampled right-hand shot.

use crate::eigensolver::BoundState;
use crate::engine;
use crate::error::{Error, Result};
use crate::model::{PotentialSpec, Side, WellKind};
use crate::quad::simpson;

/// Largest tolerated `|ψ(x_max)|` (max-normalized) for a usable shot.
pub const TAIL_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct WaveFunction {
    pub state: BoundState,
    /// `ψ(0)`, positive by convention.
    pub psi0: f64,
    /// `ψ'(0⁺)`.
    pub dpsi0: f64,
    pub dx: f64,
    /// `ψ(j·dx)` on `[0, x_max]`.
    pub samples: Vec<f64>,
    /// Factor applied to the max-normalized shot.
    pub norm_constant: f64,
    /// Grid indices of interior breakpoints, where `ψ''` jumps.
    breaks: Vec<usize>,
}

impl WaveFunction {
    pub fn k(&self) -> f64 {
        self.state.k
    }

    pub fn energy(&self) -> f64 {
        self.state.energy
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.samples.len() - 1)
    }

    pub fn left_mass(&self) -> f64 {
        self.psi0 * self.psi0 / (2.0 * self.k())
    }

    /// `ψ'(0⁺) − ψ'(0⁻)`.
    pub fn derivative_jump_at_zero(&self) -> f64 {
        self.dpsi0 - self.k() * self.psi0
    }

    /// Index ranges `[lo, hi]` of the smooth pieces of the sample grid.
    fn pieces(&self) -> Vec<(usize, usize)> {
        let last = self.samples.len() - 1;
        let mut bounds = vec![0];
        bounds.extend(self.breaks.iter().copied().filter(|&b| b > 0 && b < last));
        bounds.push(last);
        bounds.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// `∫₀^{x_max} g(x) ψ(x)² dx`, piecewise so that `g` may take one-sided
    /// values at breakpoints.
    pub fn right_expectation<G>(&self, g: G) -> f64
    where
        G: Fn(f64, Side) -> f64,
    {
        self.pieces()
            .into_iter()
            .map(|(lo, hi)| {
                let vals: Vec<f64> = (lo..=hi)
                    .map(|j| {
                        let side = if j == hi && j != lo {
                            Side::Left
                        } else {
                            Side::Right
                        };
                        let psi = self.samples[j];
                        g(self.x(j), side) * psi * psi
                    })
                    .collect();
                simpson(&vals, self.dx)
            })
            .sum()
    }

    /// Normalized `ψ(x)`: analytic tail for `x < 0`, four-point interpolation
    /// of the samples inside each smooth piece, zero beyond `x_max`.
    pub fn evaluate(&self, x: f64) -> f64 {
        if x < 0.0 {
            return self.psi0 * (self.k() * x).exp();
        }
        let last = self.samples.len() - 1;
        let t = x / self.dx;
        if t > last as f64 {
            return 0.0;
        }
        let nearest = t.round();
        if (t - nearest).abs() < 1e-9 {
            return self.samples[nearest as usize];
        }
        let j = (t.floor() as usize).min(last - 1);
        let (lo, hi) = self
            .pieces()
            .into_iter()
            .find(|&(lo, hi)| j >= lo && j < hi)
            .unwrap_or((0, last));
        let width = hi - lo + 1;
        let order = width.min(4);
        let start = (j.saturating_sub(1)).clamp(lo, hi + 1 - order);
        let mut value = 0.0;
        for m in start..start + order {
            let mut basis = 1.0;
            for l in start..start + order {
                if l != m {
                    basis *= (t - l as f64) / (m as f64 - l as f64);
                }
            }
            value += basis * self.samples[m];
        }
        value
    }

    /// Copy restricted to `[0, x_cut]`, without renormalizing.
    pub fn truncated(&self, x_cut: f64) -> WaveFunction {
        let mut n = ((x_cut / self.dx).floor() as usize).min(self.samples.len() - 1);
        n -= n % 2;
        let mut wf = self.clone();
        wf.samples.truncate(n + 1);
        wf.breaks.retain(|&b| b < n);
        wf
    }
}

/// Builds the normalized eigenfunction of `state` on the grid `dx`.
pub fn assemble(spec: &PotentialSpec, state: &BoundState, dx: f64) -> Result<WaveFunction> {
    if spec.kind == WellKind::DeltaWell {
        return Ok(delta_wavefunction(spec, state, dx));
    }
    let shot = engine::integrate_inward(spec, state.energy, dx)?;
    let tail = shot.samples.last().copied().unwrap_or(0.0).abs();
    if tail >= TAIL_TOLERANCE {
        return Err(Error::TailNotDecayed { tail });
    }
    let breaks = spec
        .breakpoints()
        .into_iter()
        .filter(|&b| b > 0.0)
        .map(|b| (b / shot.dx).round() as usize)
        .collect();
    let mut wf = WaveFunction {
        state: *state,
        psi0: shot.psi0,
        dpsi0: shot.dpsi0,
        dx: shot.dx,
        samples: shot.samples,
        norm_constant: 1.0,
        breaks,
    };
    let norm = wf.left_mass() + wf.right_expectation(|_, _| 1.0);
    let c = wf.psi0.signum() / norm.sqrt();
    for v in &mut wf.samples {
        *v *= c;
    }
    wf.psi0 *= c;
    wf.dpsi0 *= c;
    wf.norm_constant = c;
    Ok(wf)
}

/// `ψ = √k e^{-k|x|}` with `k = λ/2`, sampled on the same kind of grid.
fn delta_wavefunction(spec: &PotentialSpec, state: &BoundState, dx: f64) -> WaveFunction {
    let k = state.k;
    let c = k.sqrt();
    let x_max = spec.flat_from().unwrap_or(0.0) + crate::model::WKB_MARGIN / k;
    let mut n = (x_max / dx).ceil() as usize;
    n += n % 2;
    WaveFunction {
        state: *state,
        psi0: c,
        dpsi0: -k * c,
        dx,
        samples: (0..=n).map(|j| c * (-k * j as f64 * dx).exp()).collect(),
        norm_constant: c,
        breaks: Vec::new(),
    }
}

/// `|∫ψ² − 1|` from Simpson on a grid twice as fine. Midpoints come from
/// six-point interpolation where the piece allows it.
pub fn norm_residual(wf: &WaveFunction) -> f64 {
    let h = 0.5 * wf.dx;
    let right: f64 = wf
        .pieces()
        .into_iter()
        .map(|(lo, hi)| {
            let vals: Vec<f64> = (2 * lo..=2 * hi)
                .map(|i| {
                    let j = i / 2;
                    let psi = if i % 2 == 0 {
                        wf.samples[j]
                    } else if j >= lo + 2 && j + 3 <= hi {
                        let f = &wf.samples[j - 2..=j + 3];
                        (3.0 * (f[0] + f[5]) - 25.0 * (f[1] + f[4]) + 150.0 * (f[2] + f[3])) / 256.0
                    } else {
                        wf.evaluate(i as f64 * h)
                    };
                    psi * psi
                })
                .collect();
            simpson(&vals, h)
        })
        .sum();
    (wf.left_mass() + right - 1.0).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolver::{solve_all, SolverSettings};

    fn ground(kind: WellKind) -> (PotentialSpec, WaveFunction) {
        let spec = PotentialSpec::study(kind);
        let settings = SolverSettings::for_spec(&spec);
        let states = solve_all(&spec, &settings).unwrap();
        let wf = assemble(&spec, &states[0], settings.dx).unwrap();
        (spec, wf)
    }

    #[test]
    fn delta_is_exact_exponential() {
        let (_, wf) = ground(WellKind::DeltaWell);
        for x in [-2.0, -0.5, 0.0, 0.37, 1.0, 4.0] {
            assert!(
                (wf.evaluate(x) - (-f64::abs(x)).exp()).abs() < 1e-12,
                "x = {x}"
            );
        }
        assert!(norm_residual(&wf) < 1e-14);
        assert!((wf.derivative_jump_at_zero() + 2.0).abs() < 1e-15);
    }

    #[test]
    fn half_well_ground_states() {
        for kind in WellKind::HALF_WELLS {
            let (_, wf) = ground(kind);
            let left = wf.left_mass();
            assert!(left > 0.0 && left < 1.0, "{kind}: {left}");
            assert!(wf.psi0 > 0.0);
            assert!(norm_residual(&wf) < 1e-9, "{kind}: {}", norm_residual(&wf));
            assert!(wf.derivative_jump_at_zero().abs() < 1e-8);
        }
    }

    #[test]
    fn evaluate_is_continuous_and_interpolating() {
        let (_, wf) = ground(WellKind::HalfTriangular);
        assert!((wf.evaluate(-0.0) - wf.evaluate(0.0)).abs() < 1e-10);
        assert!((wf.evaluate(-1e-14) - wf.evaluate(1e-14)).abs() < 1e-10);
        let x = -1.0 / wf.k();
        assert!((wf.evaluate(x) - wf.psi0 * (-1.0f64).exp()).abs() < 1e-14);
        assert_eq!(wf.evaluate(wf.x(137)), wf.samples[137]);
        assert_eq!(wf.evaluate(wf.x_max() + 1.0), 0.0);
        // off-knot values track a smooth function to interpolation accuracy
        let mid = wf.evaluate(wf.x(500) + 0.5 * wf.dx);
        let avg = 0.5 * (wf.samples[500] + wf.samples[501]);
        assert!((mid - avg).abs() < 1e-5);
    }

    #[test]
    fn truncated_tail_is_detected() {
        let (_, wf) = ground(WellKind::HalfParabolic);
        let cut = wf.truncated(wf.x_max() / 4.0);
        assert!(norm_residual(&cut) > 1e-6, "{}", norm_residual(&cut));
    }

    #[test]
    fn outermost_eckart_state_norm_is_tail_converged() {
        let spec = PotentialSpec::study(WellKind::HalfEckart);
        let settings = SolverSettings::for_spec(&spec);
        let states = solve_all(&spec, &settings).unwrap();
        let wf = assemble(&spec, &states[3], settings.dx).unwrap();
        let half = wf.truncated(wf.x_max() / 2.0);
        let full_norm = wf.left_mass() + wf.right_expectation(|_, _| 1.0);
        let half_norm = half.left_mass() + half.right_expectation(|_, _| 1.0);
        assert!((full_norm - half_norm).abs() < 1e-9);
    }
}
