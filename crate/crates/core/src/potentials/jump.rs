use std::io::Write;

use serde::{Deserialize, Serialize};

use super::density::DensityField;
use super::{LateralKernel, LayerPotentials};
use crate::error::{CalorixError, Result};
use crate::kernel::Operator;
use crate::quadrature::extrapolate_to_zero;

/// Number of offsets `h_k = h_0 2^{-k}` per side.
pub const JUMP_LEVELS: usize = 9;
/// Levels (the finest ones) entering the extrapolation.
const EXTRAPOLATION_LEVELS: usize = 4;
/// Probe nodes must lie in `(margin T, (1 - margin) T)`.
const CORNER_MARGIN: f64 = 0.1;

/// Potential whose one-sided boundary limits are probed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JumpKind {
    /// Double layer; interior minus exterior limit is `+phi`.
    DoubleLayer,
    /// Conormal derivative of the single layer; the difference is `-phi`.
    ConormalSingleLayer,
    DoubleLayerStar,
    ConormalSingleLayerStar,
}

impl JumpKind {
    pub const ALL: [JumpKind; 4] =
        [JumpKind::DoubleLayer, JumpKind::ConormalSingleLayer, JumpKind::DoubleLayerStar, JumpKind::ConormalSingleLayerStar];

    pub fn label(self) -> &'static str {
        match self {
            JumpKind::DoubleLayer => "double-layer",
            JumpKind::ConormalSingleLayer => "conormal-single-layer",
            JumpKind::DoubleLayerStar => "double-layer-star",
            JumpKind::ConormalSingleLayerStar => "conormal-single-layer-star",
        }
    }

    pub fn operator(self) -> Operator {
        match self {
            JumpKind::DoubleLayer | JumpKind::ConormalSingleLayer => Operator::Heat,
            _ => Operator::Adjoint,
        }
    }

    /// Predicted `(interior - exterior) / phi(x0, t)`.
    pub fn jump_sign(self) -> f64 {
        match self {
            JumpKind::DoubleLayer | JumpKind::DoubleLayerStar => 1.0,
            _ => -1.0,
        }
    }
}

/// Two-sided samples of a potential along the normal line through a
/// lateral node, with the extrapolated limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpProbeReport {
    pub node: usize,
    pub kind: JumpKind,
    pub time: f64,
    /// Strictly decreasing positive offsets.
    pub offsets: Vec<f64>,
    pub interior: Vec<f64>,
    pub exterior: Vec<f64>,
    pub limit_interior: f64,
    pub limit_exterior: f64,
    pub jump: f64,
    pub predicted: f64,
    /// `|jump - predicted| / max(|predicted|, max|phi|)`.
    pub error: f64,
}

impl LayerPotentials<'_> {
    /// Samples the potential `kind` of `phi` at `y0 +- h_k nu(y0)`,
    /// `h_k = 0.05 diam(Omega) 2^{-k}`, extrapolates each side to `h = 0`
    /// from the finest levels and compares the difference with the
    /// predicted jump `+-phi(y0, s0)`.
    pub fn jump_probe(&self, phi: &DensityField, node: usize, kind: JumpKind) -> Result<JumpProbeReport> {
        let mesh = self.mesh;
        let lat = mesh
            .lateral_nodes()
            .get(node)
            .ok_or_else(|| CalorixError::InvalidArgument(format!("lateral node {node} out of range")))?;
        let t_final = mesh.final_time();
        let time = lat.point.t;
        if !(time > CORNER_MARGIN * t_final && time < (1.0 - CORNER_MARGIN) * t_final) {
            return Err(CalorixError::CornerTooClose { time });
        }
        let h0 = 0.05 * mesh.cross_section().diameter();
        let offsets: Vec<f64> = (0..JUMP_LEVELS).map(|k| h0 * 0.5f64.powi(k as i32)).collect();
        let nu0 = lat.nu.as_slice();
        let kernel = match kind {
            JumpKind::DoubleLayer | JumpKind::DoubleLayerStar => LateralKernel::Double,
            _ => LateralKernel::FixedConormal(nu0),
        };
        let side = |sign: f64| -> Result<Vec<f64>> {
            offsets
                .iter()
                .map(|h| {
                    let target = mesh.offset_point(node, sign * h)?;
                    self.lateral(phi, &target, kernel, kind.operator())
                })
                .collect()
        };
        let interior = side(1.0)?;
        let exterior = side(-1.0)?;
        let tail = JUMP_LEVELS - EXTRAPOLATION_LEVELS;
        let limit_interior = extrapolate_to_zero(&offsets[tail..], &interior[tail..]);
        let limit_exterior = extrapolate_to_zero(&offsets[tail..], &exterior[tail..]);
        let jump = limit_interior - limit_exterior;
        let predicted = kind.jump_sign() * phi.values()[node];
        let scale = predicted.abs().max(phi.max_abs());
        let error = if scale > 0.0 { (jump - predicted).abs() / scale } else { jump.abs() };
        Ok(JumpProbeReport {
            node,
            kind,
            time,
            offsets,
            interior,
            exterior,
            limit_interior,
            limit_exterior,
            jump,
            predicted,
            error,
        })
    }
}

/// Writes probe reports as CSV with columns
/// `node,kind,h,interior,exterior,extrapolated,predicted,error`, one row
/// per offset; `extrapolated` is the extrapolated jump.
pub fn write_jump_csv<W: Write>(reports: &[JumpProbeReport], mut out: W) -> std::io::Result<()> {
    writeln!(out, "node,kind,h,interior,exterior,extrapolated,predicted,error")?;
    for r in reports {
        for ((h, i), e) in r.offsets.iter().zip(&r.interior).zip(&r.exterior) {
            writeln!(out, "{},{},{:e},{:e},{:e},{:e},{:e},{:e}", r.node, r.kind.label(), h, i, e, r.jump, r.predicted, r.error)?;
        }
    }
    Ok(())
}
