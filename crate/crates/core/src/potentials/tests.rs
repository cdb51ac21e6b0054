use super::*;
use crate::geometry::{build_mesh, CrossSection, MeshResolution};
use crate::operator::CoefficientMatrix;

fn aniso() -> CoefficientMatrix {
    CoefficientMatrix::new(2, &[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap()
}

fn disk_mesh(a: &CoefficientMatrix) -> CylinderMesh {
    build_mesh(&CrossSection::Disk { r: 1.0 }, a, 1.0, MeshResolution::new(64, 16, 16)).unwrap()
}

#[test]
fn zero_density_gives_zero() {
    let mesh = disk_mesh(&aniso());
    let pot = LayerPotentials::new(&mesh);
    let zero = DensityField::constant(&mesh, Region::Lateral, 0.0);
    let p = SpaceTimePoint::new([0.2, 0.1], 0.5);
    assert_eq!(pot.double_layer(&zero, &p).unwrap(), 0.0);
    assert_eq!(pot.single_layer(&zero, &p).unwrap(), 0.0);
    let cap = DensityField::constant(&mesh, Region::Bottom, 0.0);
    assert_eq!(pot.cap_potential(&cap, &p).unwrap(), 0.0);
}

#[test]
fn causality() {
    let mesh = disk_mesh(&aniso());
    let pot = LayerPotentials::new(&mesh);
    let one = DensityField::constant(&mesh, Region::Lateral, 1.0);
    for t in [-0.5, 0.0] {
        let p = SpaceTimePoint::new([0.2, 0.1], t);
        assert_eq!(pot.double_layer(&one, &p).unwrap(), 0.0);
        assert_eq!(pot.single_layer(&one, &p).unwrap(), 0.0);
    }
    for s in [1.0, 1.5] {
        let p = SpaceTimePoint::new([0.2, 0.1], s);
        assert_eq!(pot.double_layer_star(&one, &p).unwrap(), 0.0);
    }
}

#[test]
fn target_on_boundary_rejected() {
    let mesh = disk_mesh(&aniso());
    let pot = LayerPotentials::new(&mesh);
    let one = DensityField::constant(&mesh, Region::Lateral, 1.0);
    let err = pot.double_layer(&one, &SpaceTimePoint::new([1.0, 0.0], 0.5)).unwrap_err();
    assert!(matches!(err, CalorixError::TargetOnBoundary { .. }));
}

#[test]
fn partition_identity_inside_and_outside() {
    for a in [CoefficientMatrix::identity(2), aniso()] {
        let mesh = disk_mesh(&a);
        let pot = LayerPotentials::new(&mesh);
        for (x, t, want) in [
            ([0.0, 0.0], 0.5, 1.0),
            ([0.5, -0.3], 0.2, 1.0),
            ([0.0, 0.9], 0.9, 1.0),
            ([3.0, 0.0], 0.5, 0.0),
            ([1.1, 0.2], 0.7, 0.0),
            ([0.2, 0.1], 1.4, 0.0),
        ] {
            let v = pot.partition_identity(&SpaceTimePoint::new(x, t)).unwrap();
            assert!((v - want).abs() < 1e-6, "{x:?} {t}: {v}");
        }
    }
}

#[test]
fn cap_potential_of_odd_density_vanishes_at_centre() {
    let mesh = disk_mesh(&aniso());
    let pot = LayerPotentials::new(&mesh);
    let phi = DensityField::from_fn(&mesh, Region::Bottom, |p| p.x[0]);
    for t in [1e-3, 0.1, 1.0] {
        let v = pot.cap_potential(&phi, &SpaceTimePoint::new([0.0, 0.0], t)).unwrap();
        assert!(v.abs() < 1e-12, "t = {t}: {v}");
    }
}

#[test]
fn adjoint_double_layer_is_time_reflection() {
    let mesh = disk_mesh(&aniso());
    let pot = LayerPotentials::new(&mesh);
    let phi = DensityField::from_fn(&mesh, Region::Lateral, |p| (p.x[0] + 2.0 * p.x[1]).cos() * (1.0 + p.t * p.t));
    let reflected = phi.time_reflected(&mesh);
    for (x, s) in [([0.3, 0.2], 0.4), ([0.0, 0.95], 0.8), ([1.3, -0.4], 0.1)] {
        let star = pot.double_layer_star(&phi, &SpaceTimePoint::new(x, s)).unwrap();
        let plain = pot.double_layer(&reflected, &SpaceTimePoint::new(x, 1.0 - s)).unwrap();
        assert!((star - plain).abs() < 1e-10, "{star} vs {plain}");
    }
}

#[test]
fn linear_in_density() {
    let mesh = disk_mesh(&aniso());
    let pot = LayerPotentials::new(&mesh);
    let f = DensityField::from_fn(&mesh, Region::Lateral, |p| p.x[0] * p.t);
    let g = DensityField::from_fn(&mesh, Region::Lateral, |p| (p.x[1] + p.t).exp());
    let sum = DensityField::from_fn(&mesh, Region::Lateral, |p| 2.0 * p.x[0] * p.t - 3.0 * (p.x[1] + p.t).exp());
    let target = SpaceTimePoint::new([0.4, -0.5], 0.6);
    let lhs = pot.single_layer(&sum, &target).unwrap();
    let rhs = 2.0 * pot.single_layer(&f, &target).unwrap() - 3.0 * pot.single_layer(&g, &target).unwrap();
    assert!((lhs - rhs).abs() < 1e-12 * rhs.abs().max(1.0));
}

#[test]
fn double_layer_jump_of_constant_density() {
    let mesh = disk_mesh(&aniso());
    let pot = LayerPotentials::new(&mesh);
    let one = DensityField::constant(&mesh, Region::Lateral, 1.0);
    let node = mesh.lateral_nodes().iter().position(|l| l.point.t > 0.4 && l.boundary_index == 5).unwrap();
    let report = pot.jump_probe(&one, node, JumpKind::DoubleLayer).unwrap();
    assert!(report.error < 1e-3, "{report:?}");
}

#[test]
fn corner_nodes_rejected() {
    let mesh = disk_mesh(&aniso());
    let pot = LayerPotentials::new(&mesh);
    let one = DensityField::constant(&mesh, Region::Lateral, 1.0);
    let err = pot.jump_probe(&one, 0, JumpKind::DoubleLayer).unwrap_err();
    assert!(matches!(err, CalorixError::CornerTooClose { .. }));
}

#[test]
fn elliptic_gauss_identity_on_ball() {
    let a = CoefficientMatrix::identity(3);
    let ball = CrossSection::Ball { r: 1.0 };
    let inside = elliptic_gauss_identity(&ball, &a, &[0.0, 0.0, 0.0], 32).unwrap();
    let outside = elliptic_gauss_identity(&ball, &a, &[2.0, 0.0, 0.0], 32).unwrap();
    let on = elliptic_gauss_identity(&ball, &a, &[0.0, 0.6, 0.8], 32).unwrap();
    assert!((inside - 1.0).abs() < 1e-10, "{inside}");
    assert!(outside.abs() < 1e-10, "{outside}");
    assert!((on - 0.5).abs() < 1e-6, "{on}");
    let err = elliptic_gauss_identity(&CrossSection::Disk { r: 1.0 }, &CoefficientMatrix::identity(2), &[0.0, 0.0], 8);
    assert!(matches!(err, Err(CalorixError::DimensionTooSmall { n: 2 })));
}
