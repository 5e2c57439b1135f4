//! Catalog of potential wells.
//!
//! All quantities use natural units with `2m = 1` and `ħ = 1`, so the
//! Schrödinger equation reads `ψ'' = (V − E) ψ` and a free decaying tail is
//! `e^{-k|x|}` with `E = −k²`.
//!
//! The four half wells vanish identically for `x < 0` and follow their
//! analytic formula for every `x ≥ 0` (the parabola and the ramp keep rising
//! past `x = a`), so each has a single jump of size `v0` at the origin.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Forbidden-region decay (in e-folds) required beyond the integration start.
pub const WKB_MARGIN: f64 = 35.0;

/// `|V| ≤ FLAT_TAIL_TOL · v0` counts as field-free for the flat-tail models.
pub const FLAT_TAIL_TOL: f64 = 1e-9;

pub const STUDY_V0: f64 = 15.0;
pub const STUDY_A: f64 = 2.0;
pub const DEFAULT_LAMBDA: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WellKind {
    HalfParabolic,
    HalfTriangular,
    HalfEckart,
    HalfExponential,
    #[serde(rename = "fsw")]
    FiniteSquareWell,
    #[serde(rename = "delta")]
    DeltaWell,
    FullEckart,
}

impl WellKind {
    pub const ALL: [WellKind; 7] = [
        WellKind::HalfParabolic,
        WellKind::HalfTriangular,
        WellKind::HalfEckart,
        WellKind::HalfExponential,
        WellKind::FiniteSquareWell,
        WellKind::DeltaWell,
        WellKind::FullEckart,
    ];

    pub const HALF_WELLS: [WellKind; 4] = [
        WellKind::HalfParabolic,
        WellKind::HalfTriangular,
        WellKind::HalfEckart,
        WellKind::HalfExponential,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WellKind::HalfParabolic => "half-parabolic",
            WellKind::HalfTriangular => "half-triangular",
            WellKind::HalfEckart => "half-eckart",
            WellKind::HalfExponential => "half-exponential",
            WellKind::FiniteSquareWell => "fsw",
            WellKind::DeltaWell => "delta",
            WellKind::FullEckart => "full-eckart",
        }
    }

    pub fn is_half_well(self) -> bool {
        Self::HALF_WELLS.contains(&self)
    }

    /// Wells whose right wall keeps rising, so the integration start is set by
    /// a WKB decay margin rather than by a field-free point.
    pub fn has_rising_wall(self) -> bool {
        matches!(
            self,
            WellKind::HalfParabolic | WellKind::HalfTriangular | WellKind::HalfExponential
        )
    }
}

impl fmt::Display for WellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WellKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        WellKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = WellKind::ALL.iter().map(|k| k.name()).collect();
                Error::InvalidParameter(format!(
                    "unknown model '{s}' (expected one of: {})",
                    names.join(", ")
                ))
            })
    }
}

/// Which one-sided limit to take at a breakpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Continuity {
    Smooth,
    JumpDiscontinuous,
    DeltaSingular,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContinuityClass {
    pub class: Continuity,
    /// Expected power law of `I(p)` at large `p`.
    pub predicted_tail_exponent: Option<i32>,
    /// Lowest even moment `⟨p^{2j}⟩` that diverges.
    pub first_divergent_even_moment: Option<u32>,
}

/// A finite step `V(x⁺) − V(x⁻)` located at `x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jump {
    pub x: f64,
    pub size: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub kind: WellKind,
    pub v0: f64,
    pub a: f64,
    pub lambda: f64,
}

impl PotentialSpec {
    pub fn new(kind: WellKind, v0: f64, a: f64) -> Result<Self> {
        Self::with_lambda(kind, v0, a, DEFAULT_LAMBDA)
    }

    pub fn with_lambda(kind: WellKind, v0: f64, a: f64, lambda: f64) -> Result<Self> {
        let spec = PotentialSpec {
            kind,
            v0,
            a,
            lambda,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The parameter set used throughout: `v0 = 15`, `a = 2`, `λ = 2`.
    pub fn study(kind: WellKind) -> Self {
        PotentialSpec {
            kind,
            v0: STUDY_V0,
            a: STUDY_A,
            lambda: DEFAULT_LAMBDA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive")))
            }
        };
        positive("v0", self.v0)?;
        positive("a", self.a)?;
        if self.kind == WellKind::DeltaWell {
            positive("lambda", self.lambda)?;
        }
        Ok(())
    }

    /// Offset of the full Eckart well's center. The well sits at `x = c` so
    /// that the half-line `x < 0` is field-free to `FLAT_TAIL_TOL · v0` and the
    /// analytic left tail applies.
    pub fn eckart_center(&self) -> f64 {
        self.a * (1.0 / FLAT_TAIL_TOL.sqrt()).acosh()
    }

    /// Abscissae where `V` or `V'` is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self.kind {
            WellKind::FiniteSquareWell => vec![0.0, self.a],
            WellKind::FullEckart => Vec::new(),
            _ => vec![0.0],
        }
    }

    pub fn jumps(&self) -> Vec<Jump> {
        match self.kind {
            k if k.is_half_well() => vec![Jump {
                x: 0.0,
                size: -self.v0,
            }],
            WellKind::FiniteSquareWell => vec![
                Jump {
                    x: 0.0,
                    size: -self.v0,
                },
                Jump {
                    x: self.a,
                    size: self.v0,
                },
            ],
            _ => Vec::new(),
        }
    }

    /// `V(x)`. The half wells and the square well take `Θ(0) = 1`.
    pub fn potential(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFinite("x"));
        }
        if self.kind == WellKind::DeltaWell && x == 0.0 {
            return Err(Error::AtDiscontinuity { x });
        }
        Ok(self.potential_from(x, Side::Right))
    }

    /// One-sided limit of `V` at `x`; identical to [`potential`](Self::potential)
    /// away from breakpoints. The delta well reports its regular part (zero).
    pub fn potential_from(&self, x: f64, side: Side) -> f64 {
        let PotentialSpec { v0, a, .. } = *self;
        let right_of = |b: f64| x > b || (x == b && side == Side::Right);
        match self.kind {
            WellKind::DeltaWell => 0.0,
            WellKind::FullEckart => {
                let s = sech((x - self.eckart_center()) / a);
                -v0 * s * s
            }
            WellKind::FiniteSquareWell => {
                if right_of(0.0) && !right_of(a) {
                    -v0
                } else {
                    0.0
                }
            }
            kind => {
                if !right_of(0.0) {
                    return 0.0;
                }
                match kind {
                    WellKind::HalfParabolic => -v0 * (1.0 - x * x / (a * a)),
                    WellKind::HalfTriangular => -v0 * (1.0 - x / a),
                    WellKind::HalfEckart => {
                        let s = sech(x / a);
                        -v0 * s * s
                    }
                    WellKind::HalfExponential => -v0 * (2.0 - (2.0 * x / a).exp()),
                    _ => unreachable!(),
                }
            }
        }
    }

    /// Derivative of the smooth part of `V`; jumps and delta terms are excluded.
    pub fn smooth_derivative(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFinite("x"));
        }
        if self.breakpoints().contains(&x) {
            return Err(Error::AtDiscontinuity { x });
        }
        Ok(self.derivative_from(x, Side::Right))
    }

    pub fn derivative_from(&self, x: f64, side: Side) -> f64 {
        let PotentialSpec { v0, a, .. } = *self;
        let right_of = |b: f64| x > b || (x == b && side == Side::Right);
        let eckart = |u: f64| {
            let s = sech(u);
            2.0 * v0 / a * s * s * u.tanh()
        };
        match self.kind {
            WellKind::DeltaWell | WellKind::FiniteSquareWell => 0.0,
            WellKind::FullEckart => eckart((x - self.eckart_center()) / a),
            _ if !right_of(0.0) => 0.0,
            WellKind::HalfParabolic => 2.0 * v0 * x / (a * a),
            WellKind::HalfTriangular => v0 / a,
            WellKind::HalfEckart => eckart(x / a),
            WellKind::HalfExponential => 2.0 * v0 / a * (2.0 * x / a).exp(),
        }
    }

    pub fn classify(&self) -> ContinuityClass {
        match self.kind {
            WellKind::DeltaWell => ContinuityClass {
                class: Continuity::DeltaSingular,
                predicted_tail_exponent: Some(-4),
                first_divergent_even_moment: Some(4),
            },
            WellKind::FullEckart => ContinuityClass {
                class: Continuity::Smooth,
                predicted_tail_exponent: None,
                first_divergent_even_moment: None,
            },
            _ => ContinuityClass {
                class: Continuity::JumpDiscontinuous,
                predicted_tail_exponent: Some(-6),
                first_divergent_even_moment: Some(6),
            },
        }
    }

    /// Lower edge of the bound-state window.
    pub fn energy_floor(&self) -> f64 {
        match self.kind {
            WellKind::DeltaWell => -self.lambda * self.lambda / 4.0,
            _ => -self.v0,
        }
    }

    /// Point beyond which the potential is field-free (to `FLAT_TAIL_TOL`),
    /// for the models that have one.
    pub fn flat_from(&self) -> Option<f64> {
        let eckart_reach = self.a * (1.0 / FLAT_TAIL_TOL.sqrt()).acosh();
        match self.kind {
            WellKind::FiniteSquareWell => Some(self.a),
            WellKind::HalfEckart => Some(eckart_reach),
            WellKind::FullEckart => Some(self.eckart_center() + eckart_reach),
            WellKind::DeltaWell => Some(0.0),
            _ => None,
        }
    }

    pub fn domain_cutoff(&self, energy: f64) -> Result<f64> {
        self.domain_cutoff_with_margin(energy, WKB_MARGIN)
    }

    /// Right end of the integration domain at energy `energy`.
    ///
    /// Rising walls: smallest `x` with `∫_{x_turn}^{x} √(V − E) ≥ margin`.
    /// Flat tails: field-free point plus `margin / k`.
    pub fn domain_cutoff_with_margin(&self, energy: f64, margin: f64) -> Result<f64> {
        self.check_energy(energy)?;
        if let Some(x_flat) = self.flat_from() {
            return Ok(x_flat + margin / (-energy).sqrt());
        }
        let x_turn = self.turning_point(energy);
        // the integrand vanishes like √(x − x_turn); trapezoid on a fine step is
        // plenty for a cutoff that only needs to be large enough
        let h = self.a * 1e-3;
        let mut acc = 0.0;
        let mut x = x_turn;
        let mut prev = 0.0;
        while acc < margin {
            let next = x + h;
            let f = (self.potential_from(next, Side::Right) - energy)
                .max(0.0)
                .sqrt();
            acc += 0.5 * h * (prev + f);
            prev = f;
            x = next;
        }
        Ok(x)
    }

    pub(crate) fn check_energy(&self, energy: f64) -> Result<()> {
        let floor = self.energy_floor();
        if !energy.is_finite() || energy <= floor || energy >= 0.0 {
            return Err(Error::EnergyOutOfRange { energy, floor });
        }
        Ok(())
    }

    fn turning_point(&self, energy: f64) -> f64 {
        let PotentialSpec { v0, a, .. } = *self;
        let r = energy / v0;
        match self.kind {
            WellKind::HalfParabolic => a * (1.0 + r).sqrt(),
            WellKind::HalfTriangular => a * (1.0 + r),
            WellKind::HalfExponential => 0.5 * a * (2.0 + r).ln(),
            _ => 0.0,
        }
    }
}

fn sech(u: f64) -> f64 {
    // 1/cosh overflows gracefully to 0 for large |u|
    1.0 / u.cosh()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn study(kind: WellKind) -> PotentialSpec {
        PotentialSpec::study(kind)
    }

    #[test]
    fn potential_values() {
        let par = study(WellKind::HalfParabolic);
        assert_eq!(par.potential(-1.0).unwrap(), 0.0);
        assert_eq!(par.potential(2.0).unwrap(), 0.0);
        assert_eq!(
            study(WellKind::HalfExponential).potential(0.0).unwrap(),
            -15.0
        );
        assert_eq!(
            study(WellKind::FiniteSquareWell).potential(1.0).unwrap(),
            -15.0
        );
        assert_eq!(
            study(WellKind::FiniteSquareWell).potential(2.5).unwrap(),
            0.0
        );
        assert!(par.potential(f64::NAN).is_err());
        assert!(study(WellKind::DeltaWell).potential(0.0).is_err());
        assert_eq!(study(WellKind::DeltaWell).potential(0.3).unwrap(), 0.0);
    }

    #[test]
    fn half_wells_jump_by_v0() {
        for kind in WellKind::HALF_WELLS {
            let spec = study(kind);
            let jump = spec.potential(1e-12).unwrap() - spec.potential(-1e-12).unwrap();
            assert!((jump.abs() - spec.v0).abs() < 1e-9, "{kind}: {jump}");
            assert_eq!(spec.jumps()[0].size, -spec.v0);
        }
    }

    #[test]
    fn one_sided_limits_at_square_well_edges() {
        let fsw = study(WellKind::FiniteSquareWell);
        assert_eq!(fsw.potential_from(0.0, Side::Left), 0.0);
        assert_eq!(fsw.potential_from(0.0, Side::Right), -15.0);
        assert_eq!(fsw.potential_from(2.0, Side::Left), -15.0);
        assert_eq!(fsw.potential_from(2.0, Side::Right), 0.0);
    }

    #[test]
    fn smooth_derivatives() {
        assert_eq!(
            study(WellKind::HalfTriangular)
                .smooth_derivative(1.0)
                .unwrap(),
            7.5
        );
        assert_eq!(
            study(WellKind::HalfParabolic)
                .smooth_derivative(1.0)
                .unwrap(),
            7.5
        );
        assert!(study(WellKind::HalfEckart).smooth_derivative(0.0).is_err());
        assert!(study(WellKind::FiniteSquareWell)
            .smooth_derivative(2.0)
            .is_err());
    }

    #[test]
    fn classification() {
        let eckart = study(WellKind::HalfEckart).classify();
        assert_eq!(eckart.class, Continuity::JumpDiscontinuous);
        assert_eq!(eckart.predicted_tail_exponent, Some(-6));
        assert_eq!(eckart.first_divergent_even_moment, Some(6));
        let delta = study(WellKind::DeltaWell).classify();
        assert_eq!(
            (
                delta.class,
                delta.predicted_tail_exponent,
                delta.first_divergent_even_moment
            ),
            (Continuity::DeltaSingular, Some(-4), Some(4))
        );
        let smooth = study(WellKind::FullEckart).classify();
        assert_eq!(
            (
                smooth.class,
                smooth.predicted_tail_exponent,
                smooth.first_divergent_even_moment
            ),
            (Continuity::Smooth, None, None)
        );
    }

    #[test]
    fn energy_floors() {
        assert_eq!(study(WellKind::HalfParabolic).energy_floor(), -15.0);
        assert_eq!(study(WellKind::DeltaWell).energy_floor(), -1.0);
        assert_eq!(study(WellKind::HalfExponential).energy_floor(), -15.0);
    }

    #[test]
    fn cutoffs() {
        let fsw = study(WellKind::FiniteSquareWell);
        assert!(fsw.domain_cutoff(-1.0).unwrap() >= 37.0);
        let eck = study(WellKind::HalfEckart);
        let x = eck.domain_cutoff(-0.34).unwrap();
        assert!(x >= 60.0);
        assert!((-(0.34f64.sqrt()) * x).exp() < 1e-15);
        let tri = study(WellKind::HalfTriangular);
        let x = tri.domain_cutoff(-8.1408).unwrap();
        // analytic WKB integral for a linear ramp: (2/3) √(v0/a) u^{3/2}
        let u = x - tri.turning_point(-8.1408);
        let integral = 2.0 / 3.0 * (7.5f64).sqrt() * u.powf(1.5);
        assert!((35.0..35.1).contains(&integral), "{integral}");
        assert!(fsw.domain_cutoff(0.5).is_err());
        assert!(fsw.domain_cutoff(-20.0).is_err());
    }

    #[test]
    fn validation_messages() {
        let err = PotentialSpec::new(WellKind::HalfParabolic, 0.0, 2.0).unwrap_err();
        assert_eq!(err.to_string(), "v0 must be positive");
        assert!(PotentialSpec::new(WellKind::HalfParabolic, 15.0, -1.0).is_err());
        assert!(PotentialSpec::with_lambda(WellKind::DeltaWell, 15.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn names_round_trip() {
        for kind in WellKind::ALL {
            assert_eq!(kind.name().parse::<WellKind>().unwrap(), kind);
        }
        assert!("square".parse::<WellKind>().is_err());
    }
}
