use narrowgap::fit::least_squares;
use narrowgap::geometry::{build_scene, BoundaryTag, SceneMode};
use narrowgap::mesh::{mesh_quality_report, triangulate_scene, GradingPolicy, Mesh, TriRegion};
use narrowgap::presets;
use proptest::prelude::*;

#[test]
fn gap_vertex_count_grows_like_inverse_root_eps() {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for eps in [1e-2, 1e-3, 1e-4] {
        let s = build_scene(&presets::strict(eps)).unwrap();
        let m = triangulate_scene(&s, &GradingPolicy::default()).unwrap();
        xs.push(f64::ln(eps));
        ys.push((m.gap.as_ref().unwrap().vertex_count() as f64).ln());
    }
    let fit = least_squares(&xs, &ys).unwrap();
    assert!((fit.slope + 0.5).abs() < 0.05, "slope {}", fit.slope);
}

#[test]
fn flat_gap_has_requested_layers() {
    let s = build_scene(&presets::flat(0.01)).unwrap();
    let m = triangulate_scene(&s, &GradingPolicy::default()).unwrap();
    let g = m.gap.as_ref().unwrap();
    assert!(g.layers >= 6);
    assert!((0..m.triangle_count()).all(|t| m.area(t) > 0.0));
}

#[test]
fn tags_survive_refinement() {
    let s = build_scene(&presets::strict(0.01)).unwrap();
    let coarse = triangulate_scene(&s, &GradingPolicy::default()).unwrap();
    let fine = triangulate_scene(&s, &GradingPolicy::default().refined()).unwrap();
    for tag in [BoundaryTag::Upper, BoundaryTag::Lower, BoundaryTag::Outer] {
        let (a, b) = (coarse.vertices_with_tag(tag), fine.vertices_with_tag(tag));
        assert!(!a.is_empty() && b.len() > a.len(), "{tag:?}");
        for v in b {
            assert!(s.boundary_distance(tag, fine.vertices[v]) < 1e-9);
        }
    }
}

#[test]
fn regions_cover_the_gap() {
    let s = build_scene(&presets::quartic(0.01)).unwrap();
    let m = triangulate_scene(&s, &GradingPolicy::default()).unwrap();
    for (t, r) in m.regions.iter().enumerate() {
        if *r == TriRegion::Gap {
            assert!(s.in_gap(m.centroid(t)), "triangle {t}");
        }
    }
}

#[test]
fn reversed_orientation_is_reported() {
    let mut m = Mesh::annulus(1.0, 2.0, 24, 4).unwrap();
    assert!(mesh_quality_report(&m, 8.0).inverted.is_empty());
    m.triangles[3].swap(1, 2);
    m.triangles[7].swap(0, 1);
    let q = mesh_quality_report(&m, 8.0);
    assert_eq!(q.inverted, vec![3, 7]);
    assert!(!q.is_clean());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn preset_meshes_are_clean(idx in 0usize..5, log_eps in -3.0f64..-1.4) {
        let eps = 10f64.powf(log_eps);
        let name = presets::NAMES[idx];
        let s = build_scene(&presets::by_name(name, eps).unwrap()).unwrap();
        let policy = GradingPolicy::default();
        let m = triangulate_scene(&s, &policy).unwrap();
        let q = mesh_quality_report(&m, policy.anisotropy_cap);
        prop_assert!(q.is_clean(), "{name} at {eps}: {:?} {:?}", q.inverted, q.cap_violations);
        prop_assert!(m.check_conformity().is_ok());
        let expected = if s.mode() == SceneMode::TwoInclusion { -1 } else { 0 };
        prop_assert_eq!(m.euler_characteristic(), expected);
        prop_assert!(m.max_boundary_deviation(&s) < 1e-9);
    }

    #[test]
    fn layer_count_is_respected(layers in 3usize..12) {
        let s = build_scene(&presets::flat(0.02)).unwrap();
        let m = triangulate_scene(&s, &GradingPolicy::new(layers, 0.1)).unwrap();
        prop_assert_eq!(m.gap.as_ref().unwrap().layers, layers);
    }
}
