//! Finite-difference application of `H` and `H*` to black-box functions.
//! Used to certify that closed-form kernels are caloric.

use crate::kernel::Operator;
use crate::operator::{CoefficientMatrix, SpaceTimePoint};

/// Result of a finite-difference operator application.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorResidual {
    /// `E u -/+ u_t` (the operator applied).
    pub value: f64,
    /// `|E u| + |u_t|`, the natural scale of the two cancelling parts.
    pub scale: f64,
}

impl OperatorResidual {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.value.abs()
        } else {
            self.value.abs() / self.scale
        }
    }
}

/// Relative base step for the central differences; one Richardson step
/// `(4 D(h/2) - D(h)) / 3` removes the `h^2` error term.
pub const BASE_STEP: f64 = 1e-3;

fn shifted(p: &SpaceTimePoint, dx: &[(usize, f64)], dt: f64) -> SpaceTimePoint {
    let mut q = p.clone();
    for &(i, d) in dx {
        q.x[i] += d;
    }
    q.t += dt;
    q
}

fn second_derivative<F: Fn(&SpaceTimePoint) -> f64>(f: &F, p: &SpaceTimePoint, h: usize, k: usize, step: f64) -> f64 {
    if h == k {
        (f(&shifted(p, &[(h, step)], 0.0)) - 2.0 * f(p) + f(&shifted(p, &[(h, -step)], 0.0))) / (step * step)
    } else {
        (f(&shifted(p, &[(h, step), (k, step)], 0.0)) - f(&shifted(p, &[(h, step), (k, -step)], 0.0))
            - f(&shifted(p, &[(h, -step), (k, step)], 0.0))
            + f(&shifted(p, &[(h, -step), (k, -step)], 0.0)))
            / (4.0 * step * step)
    }
}

fn time_derivative<F: Fn(&SpaceTimePoint) -> f64>(f: &F, p: &SpaceTimePoint, step: f64) -> f64 {
    (f(&shifted(p, &[], step)) - f(&shifted(p, &[], -step))) / (2.0 * step)
}

fn richardson(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

/// Applies `H` (or `H*`) to `f` at `p` with central differences of step
/// `BASE_STEP * space_scale` in space and `BASE_STEP * time_scale` in time.
pub fn apply_operator<F: Fn(&SpaceTimePoint) -> f64>(
    f: F,
    a: &CoefficientMatrix,
    p: &SpaceTimePoint,
    which: Operator,
    space_scale: f64,
    time_scale: f64,
) -> OperatorResidual {
    let n = a.dim();
    let hs = BASE_STEP * space_scale;
    let ht = BASE_STEP * time_scale;
    let mut elliptic = 0.0;
    for h in 0..n {
        for k in 0..n {
            let coeff = a.get(h, k);
            if coeff == 0.0 {
                continue;
            }
            let d = richardson(second_derivative(&f, p, h, k, hs), second_derivative(&f, p, h, k, hs / 2.0));
            elliptic += coeff * d;
        }
    }
    let dt = richardson(time_derivative(&f, p, ht), time_derivative(&f, p, ht / 2.0));
    let value = match which {
        Operator::Heat => elliptic - dt,
        Operator::Adjoint => elliptic + dt,
    };
    OperatorResidual { value, scale: elliptic.abs() + dt.abs() }
}
