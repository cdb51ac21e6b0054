use std::fmt;
use std::sync::Arc;

use crate::error::{CalorixError, Result};
use crate::geometry::{CylinderMesh, Region};
use crate::quadrature::{barycentric_eval, trig_cardinal};

/// Where a density is sampled: a boundary point, its time and, on
/// `Sigma_3`, the inward normal and conormal `A nu` there.
#[derive(Debug, Clone, Copy)]
pub struct DensityPoint<'a> {
    pub x: &'a [f64],
    pub t: f64,
    pub nu: Option<&'a [f64]>,
    pub conormal: Option<&'a [f64]>,
}

pub type DensityGenerator = Arc<dyn Fn(&DensityPoint<'_>) -> f64 + Send + Sync>;

/// Boundary density sampled at the quadrature nodes of one region, with an
/// optional closed form used for resampling off the nodes.
///
/// Without a closed form, off-node values come from trigonometric
/// interpolation in the periodic angle, barycentric Lagrange
/// interpolation on the Gauss nodes in time, polar angle and radius.
#[derive(Clone)]
pub struct DensityField {
    region: Region,
    values: Vec<f64>,
    generator: Option<DensityGenerator>,
}

impl fmt::Debug for DensityField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityField")
            .field("region", &self.region)
            .field("len", &self.values.len())
            .field("closed_form", &self.generator.is_some())
            .finish()
    }
}

impl DensityField {
    pub fn from_values(mesh: &CylinderMesh, region: Region, values: Vec<f64>) -> Result<Self> {
        let expected = mesh.region_len(region);
        if values.len() != expected {
            return Err(CalorixError::DimensionMismatch { expected, found: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CalorixError::InvalidArgument("density values must be finite".into()));
        }
        Ok(Self { region, values, generator: None })
    }

    /// Samples a closed form at the nodes and keeps it for resampling.
    pub fn from_fn<F>(mesh: &CylinderMesh, region: Region, f: F) -> Self
    where
        F: Fn(&DensityPoint<'_>) -> f64 + Send + Sync + 'static,
    {
        let values = match region {
            Region::Lateral => mesh
                .lateral_nodes()
                .iter()
                .map(|node| {
                    f(&DensityPoint {
                        x: &node.point.x,
                        t: node.point.t,
                        nu: Some(&node.nu),
                        conormal: Some(&node.conormal[..node.nu.len()]),
                    })
                })
                .collect(),
            Region::Top | Region::Bottom => {
                let t = if region == Region::Top { mesh.final_time() } else { 0.0 };
                mesh.cap_nodes().iter().map(|c| f(&DensityPoint { x: &c.y, t, nu: None, conormal: None })).collect()
            }
        };
        Self { region, values, generator: Some(Arc::new(f)) }
    }

    pub fn constant(mesh: &CylinderMesh, region: Region, c: f64) -> Self {
        Self::from_fn(mesh, region, move |_| c)
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn has_closed_form(&self) -> bool {
        self.generator.is_some()
    }

    /// Drops the closed form, forcing interpolation off the nodes.
    pub fn without_closed_form(&self) -> Self {
        Self { region: self.region, values: self.values.clone(), generator: None }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Density of the time-reflected problem `t -> T - t`. Caps swap roles.
    pub fn time_reflected(&self, mesh: &CylinderMesh) -> Self {
        let t_final = mesh.final_time();
        let region = match self.region {
            Region::Top => Region::Bottom,
            Region::Bottom => Region::Top,
            Region::Lateral => Region::Lateral,
        };
        let values = match self.region {
            Region::Lateral => {
                let m_t = mesh.time_nodes().len();
                let mut v = self.values.clone();
                for chunk in v.chunks_mut(m_t) {
                    chunk.reverse();
                }
                v
            }
            _ => self.values.clone(),
        };
        let generator = self.generator.clone().map(|g| -> DensityGenerator {
            Arc::new(move |p: &DensityPoint<'_>| g(&DensityPoint { t: t_final - p.t, ..*p }))
        });
        Self { region, values, generator }
    }

    pub(crate) fn check(&self, mesh: &CylinderMesh, region: Region) -> Result<()> {
        if self.region != region {
            return Err(CalorixError::InvalidArgument(format!(
                "density lives on {} but {} is required",
                self.region.label(),
                region.label()
            )));
        }
        let expected = mesh.region_len(region);
        if self.values.len() != expected {
            return Err(CalorixError::DimensionMismatch { expected, found: self.values.len() });
        }
        Ok(())
    }

    /// Time profile of a lateral density at a boundary parameter.
    pub(crate) fn lateral_profile<'a>(
        &'a self,
        mesh: &'a CylinderMesh,
        sample: LateralSample<'a>,
    ) -> LateralProfile<'a> {
        if let Some(g) = &self.generator {
            return LateralProfile::ClosedForm { g, sample };
        }
        let m_t = mesh.time_nodes().len();
        let samples = match sample.boundary_index {
            Some(bi) => self.values[bi * m_t..(bi + 1) * m_t].to_vec(),
            None => interpolate_angular(mesh, &self.values, m_t, sample.param),
        };
        LateralProfile::Samples { samples, nodes: mesh.time_nodes(), bary: mesh.time_barycentric() }
    }

    /// Cap density value at a spatial point of `Omega`.
    pub(crate) fn cap_value(&self, mesh: &CylinderMesh, x: &[f64]) -> f64 {
        let t = if self.region == Region::Top { mesh.final_time() } else { 0.0 };
        if let Some(g) = &self.generator {
            return g(&DensityPoint { x, t, nu: None, conormal: None });
        }
        let (rho, param) = mesh.cross_section().cap_coordinates(x);
        let per_ring = mesh.angular_grid().len();
        let ring_values: Vec<f64> = self
            .values
            .chunks(per_ring)
            .map(|ring| interpolate_angular(mesh, ring, 1, param)[0])
            .collect();
        barycentric_eval(mesh.radial_nodes(), mesh.radial_barycentric(), &ring_values, rho)
    }
}

/// Interpolates node-major data (`stride` values per boundary point) to an
/// arbitrary boundary parameter.
fn interpolate_angular(mesh: &CylinderMesh, values: &[f64], stride: usize, param: [f64; 2]) -> Vec<f64> {
    let grid = mesh.angular_grid();
    let m = grid.periodic;
    let periodic = trig_weights(m, if grid.polar_nodes.is_empty() { param[0] } else { param[1] });
    if grid.polar_nodes.is_empty() {
        return (0..stride)
            .map(|k| periodic.iter().enumerate().map(|(j, c)| c * values[j * stride + k]).sum())
            .collect();
    }
    let bary = mesh.polar_barycentric();
    let polar = barycentric_weights_at(&grid.polar_nodes, bary, param[0]);
    (0..stride)
        .map(|k| {
            let mut acc = 0.0;
            for (ip, cp) in polar.iter().enumerate() {
                if *cp == 0.0 {
                    continue;
                }
                let ring: f64 = periodic.iter().enumerate().map(|(j, c)| c * values[(ip * m + j) * stride + k]).sum();
                acc += cp * ring;
            }
            acc
        })
        .collect()
}

/// Cardinal weights of trigonometric interpolation on `m` equispaced nodes.
fn trig_weights(m: usize, theta: f64) -> Vec<f64> {
    let h = 2.0 * std::f64::consts::PI / m as f64;
    let r = theta.rem_euclid(2.0 * std::f64::consts::PI) / h;
    let nearest = r.round();
    let mut w = vec![0.0; m];
    if (r - nearest).abs() < 1e-13 {
        w[(nearest as usize) % m] = 1.0;
        return w;
    }
    for (j, c) in w.iter_mut().enumerate() {
        *c = trig_cardinal(m, theta - j as f64 * h);
    }
    w
}

/// Lagrange cardinal weights at `x` in barycentric form.
fn barycentric_weights_at(nodes: &[f64], bary: &[f64], x: f64) -> Vec<f64> {
    let mut w = vec![0.0; nodes.len()];
    if let Some(i) = nodes.iter().position(|&xn| xn == x) {
        w[i] = 1.0;
        return w;
    }
    let mut den = 0.0;
    for ((c, xn), b) in w.iter_mut().zip(nodes).zip(bary) {
        *c = b / (x - xn);
        den += *c;
    }
    w.iter_mut().for_each(|c| *c /= den);
    w
}

/// Boundary geometry handed to closed-form densities.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LateralSample<'a> {
    pub param: [f64; 2],
    pub boundary_index: Option<usize>,
    pub y: &'a [f64],
    pub nu: &'a [f64],
    pub conormal: &'a [f64],
}

pub(crate) enum LateralProfile<'a> {
    ClosedForm { g: &'a DensityGenerator, sample: LateralSample<'a> },
    Samples { samples: Vec<f64>, nodes: &'a [f64], bary: &'a [f64] },
}

impl LateralProfile<'_> {
    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        match self {
            LateralProfile::ClosedForm { g, sample } => g(&DensityPoint {
                x: sample.y,
                t,
                nu: Some(sample.nu),
                conormal: Some(sample.conormal),
            }),
            LateralProfile::Samples { samples, nodes, bary } => barycentric_eval(nodes, bary, samples, t),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            LateralProfile::ClosedForm { .. } => false,
            LateralProfile::Samples { samples, .. } => samples.iter().all(|v| *v == 0.0),
        }
    }
}
