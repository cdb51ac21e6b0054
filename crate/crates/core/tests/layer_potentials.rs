use std::sync::Arc;

use calorix_core::kernel::Operator;
use calorix_core::potentials::{
    elliptic_gauss_identity, DensityField, DensityPoint, ExponentialField, JumpKind, LayerPotentials,
    StokesRepresentation, TranslatedKernel,
};
use calorix_core::{build_mesh, CoefficientMatrix, CrossSection, CylinderMesh, FrequencyVector, Location, MeshResolution, Region, SpaceTimePoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn aniso() -> CoefficientMatrix {
    CoefficientMatrix::new(2, &[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap()
}

fn mesh(cs: CrossSection, a: &CoefficientMatrix, res: MeshResolution) -> CylinderMesh {
    build_mesh(&cs, a, 1.0, res).unwrap()
}

/// `c0 + c1 x1 + c2 x2 + c3 sin(k . x + w t) + c4 t^2`.
fn random_density(rng: &mut ChaCha8Rng) -> impl Fn(&DensityPoint<'_>) -> f64 + Send + Sync + Clone + 'static {
    let c: [f64; 5] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    let k: [f64; 3] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
    move |p: &DensityPoint<'_>| {
        c[0] + c[1] * p.x[0] + c[2] * p.x[1] + c[3] * (k[0] * p.x[0] + k[1] * p.x[1] + k[2] * p.t).sin() + c[4] * p.t * p.t
    }
}

fn probe_grid(cs: &CrossSection, t: f64) -> Vec<SpaceTimePoint> {
    let mut out = Vec::new();
    for rho in [0.0, 0.3, 0.6, 0.9] {
        for j in 0..5 {
            let (y, _) = cs.cap_point(rho, [2.0 * std::f64::consts::PI * (j as f64 + 0.25) / 5.0, 0.0]);
            out.push(SpaceTimePoint::new(&y[..2], t));
        }
    }
    out
}

#[test]
fn partition_identity_on_ellipse() {
    let cs = CrossSection::Ellipse { a: 2.0, b: 1.0 };
    for a in [CoefficientMatrix::identity(2), aniso()] {
        let m = mesh(cs.clone(), &a, MeshResolution::new(64, 16, 16));
        let pot = LayerPotentials::new(&m);
        let mut targets = probe_grid(&cs, 0.5);
        targets.extend([[2.5, 0.0], [0.0, 1.3], [-2.2, 0.6]].map(|x| SpaceTimePoint::new(x, 0.6)));
        let values = pot.evaluate_many(&targets, |p, x| p.partition_identity(x));
        for (x, v) in targets.iter().zip(values) {
            let want = if m.locate(x) == Location::Interior { 1.0 } else { 0.0 };
            let v = v.unwrap();
            assert!((v - want).abs() < 1e-6, "{x:?}: {v}");
        }
    }
}

#[test]
fn stokes_reconstruction_for_both_operators() {
    let a = aniso();
    let m = mesh(CrossSection::Disk { r: 1.0 }, &a, MeshResolution::new(64, 16, 16));
    let pot = LayerPotentials::new(&m);
    let xi = FrequencyVector(vec![0.7, -0.4]);
    let fields: Vec<Arc<dyn calorix_core::potentials::CaloricField>> = vec![
        Arc::new(ExponentialField { a: a.clone(), xi: xi.clone(), which: Operator::Heat }),
        Arc::new(ExponentialField { a: a.clone(), xi, which: Operator::Adjoint }),
        Arc::new(TranslatedKernel { a: a.clone(), pole: SpaceTimePoint::new([1.5, 0.3], -0.3), which: Operator::Heat }),
        Arc::new(TranslatedKernel { a: a.clone(), pole: SpaceTimePoint::new([-0.4, 1.6], 1.4), which: Operator::Adjoint }),
    ];
    let targets = [
        SpaceTimePoint::new([0.1, 0.2], 0.5),
        SpaceTimePoint::new([-0.6, 0.5], 0.15),
        SpaceTimePoint::new([0.0, -0.85], 0.9),
        SpaceTimePoint::new([1.4, 0.0], 0.5),
        SpaceTimePoint::new([0.2, 0.1], 1.3),
        SpaceTimePoint::new([0.2, 0.1], -0.2),
    ];
    for field in fields {
        let rep = StokesRepresentation::new(&pot, field);
        for x in &targets {
            let r = rep.check(x).unwrap();
            assert!(r.discrepancy < 1e-6, "{r:?}");
        }
    }
}

#[test]
fn jumps_of_random_densities() {
    let a = aniso();
    let coarse_res = MeshResolution::new(48, 12, 12);
    let coarse = mesh(CrossSection::Disk { r: 1.0 }, &a, coarse_res);
    let fine = mesh(CrossSection::Disk { r: 1.0 }, &a, coarse_res.refined());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let m_t = coarse.time_nodes().len();
    for _ in 0..2 {
        let f = random_density(&mut rng);
        let phi_c = DensityField::from_fn(&coarse, Region::Lateral, f.clone());
        let phi_f = DensityField::from_fn(&fine, Region::Lateral, f);
        let (bi, ti) = (rng.random_range(0..48), rng.random_range(3..m_t - 3));
        let node_c = bi * m_t + ti;
        let t0 = coarse.lateral_nodes()[node_c].point.t;
        let node_f = fine
            .lateral_nodes()
            .iter()
            .enumerate()
            .filter(|(_, l)| l.boundary_index == 2 * bi)
            .min_by(|x, y| (x.1.point.t - t0).abs().total_cmp(&(y.1.point.t - t0).abs()))
            .unwrap()
            .0;
        for kind in JumpKind::ALL {
            let rc = LayerPotentials::new(&coarse).jump_probe(&phi_c, node_c, kind).unwrap();
            assert!(rc.error < 1e-2, "{kind:?}: {rc:?}");
            if matches!(kind, JumpKind::DoubleLayer | JumpKind::ConormalSingleLayer) {
                // both errors sit at the floor of the normal-line extrapolation
                let rf = LayerPotentials::new(&fine).jump_probe(&phi_f, node_f, kind).unwrap();
                assert!(rc.error < 1e-6 && rf.error < 1e-6, "{kind:?}: {} then {}", rc.error, rf.error);
            }
        }
    }
}

#[test]
fn adjoint_conormal_derivative_is_time_reflection() {
    let m = mesh(CrossSection::Disk { r: 1.0 }, &aniso(), MeshResolution::new(48, 12, 12));
    let pot = LayerPotentials::new(&m);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let phi = DensityField::from_fn(&m, Region::Lateral, random_density(&mut rng));
    let reflected = phi.time_reflected(&m);
    let m_t = m.time_nodes().len();
    for (bi, ti) in [(3, 4), (20, 7), (41, 2)] {
        for h in [0.05, -0.02] {
            let star = pot.conormal_derivative_single_layer_star(&phi, bi * m_t + ti, h).unwrap();
            let plain = pot.conormal_derivative_single_layer(&reflected, bi * m_t + (m_t - 1 - ti), h).unwrap();
            assert!((star - plain).abs() < 1e-10 * plain.abs().max(1.0), "{star} vs {plain}");
        }
    }
}

#[test]
fn cap_potential_tends_to_the_density() {
    let a = aniso();
    let m = mesh(CrossSection::Disk { r: 1.0 }, &a, MeshResolution::new(64, 16, 16));
    let pot = LayerPotentials::new(&m);
    let f = |x: &[f64]| (x[0] - 0.5 * x[1]).sin() + 1.0 + x[1] * x[1];
    let phi = DensityField::from_fn(&m, Region::Bottom, move |p| f(p.x));
    let xs = [[0.0, 0.0], [0.3, 0.2], [-0.5, 0.4], [0.1, -0.7], [0.6, 0.6]];
    let mut previous = f64::INFINITY;
    for t in [1e-2, 1e-3, 1e-4] {
        let worst = xs
            .iter()
            .map(|x| (pot.cap_potential(&phi, &SpaceTimePoint::new(*x, t)).unwrap() - f(x)).abs())
            .fold(0.0, f64::max);
        assert!(worst < previous, "t = {t}: {worst}");
        previous = worst;
    }
    assert!(previous < 1e-3, "{previous}");
}

#[test]
fn elliptic_gauss_identity_on_ellipsoid() {
    let a = CoefficientMatrix::diagonal(&[1.0, 2.0, 3.0]).unwrap();
    let cs = CrossSection::Ellipsoid { a: 1.5, b: 1.0, c: 0.75 };
    for x in [[0.0, 0.0, 0.0], [0.7, -0.3, 0.2], [1.2, 0.1, 0.1]] {
        let v = elliptic_gauss_identity(&cs, &a, &x, 64).unwrap();
        assert!((v - 1.0).abs() < 1e-6, "{x:?}: {v}");
    }
    for x in [[2.0, 0.0, 0.0], [0.0, 1.1, 0.5], [-1.0, -1.0, -1.0]] {
        let v = elliptic_gauss_identity(&cs, &a, &x, 64).unwrap();
        assert!(v.abs() < 1e-6, "{x:?}: {v}");
    }
    // (1.5 cos 0.4, sin 0.4 cos 1.1, 0.75 sin 0.4 sin 1.1) lies on the surface
    let on = [1.5 * 0.4f64.cos(), 0.4f64.sin() * 1.1f64.cos(), 0.75 * 0.4f64.sin() * 1.1f64.sin()];
    let v = elliptic_gauss_identity(&cs, &a, &on, 64).unwrap();
    assert!((v - 0.5).abs() < 1e-3, "{v}");
}
