use proptest::prelude::*;
use umbra_core::export::{obj_string, parse_obj, validate_mesh};
use umbra_core::geometry::{Camera, Projection, Vec3};
use umbra_core::mesh::{deform, icosphere, DisplacementField};
use umbra_core::silhouette::{dice, iou, Image};
use umbra_core::voxel::{extract_blocky_mesh, extract_isosurface, render_silhouette, RenderSettings, VoxelGrid};

fn projection() -> impl Strategy<Value = Projection> {
    prop_oneof![Just(Projection::Orthographic), Just(Projection::Perspective)]
}

fn mask_pair() -> impl Strategy<Value = (usize, usize, Vec<bool>, Vec<bool>)> {
    (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
        (
            Just(w),
            Just(h),
            prop::collection::vec(any::<bool>(), w * h),
            prop::collection::vec(any::<bool>(), w * h),
        )
    })
}

fn to_image(w: usize, h: usize, m: &[bool]) -> Image<f64> {
    Image::new(w, h, m.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pixel_rays_have_unit_directions(
        az in -3.2f64..3.2,
        el in -1.5f64..1.5,
        dist in 0.5f64..10.0,
        proj in projection(),
        px in 0.0f64..31.99,
        py in 0.0f64..23.99,
    ) {
        let cam = Camera::from_view_spec(az, el, dist, proj, 0.7, 32, 24).unwrap();
        let ray = cam.pixel_ray(px, py);
        prop_assert!((ray.direction.norm() - 1.0).abs() < 1e-12);
        let (u, v) = cam.project(ray.at(dist)).unwrap();
        prop_assert!((u - px).abs() < 1e-8 && (v - py).abs() < 1e-8);
    }

    #[test]
    fn dice_is_a_function_of_iou((w, h, a, b) in mask_pair()) {
        let (a, b) = (to_image(w, h, &a), to_image(w, h, &b));
        let i = iou(&a, &b, 0.5).unwrap();
        let d = dice(&a, &b, 0.5).unwrap();
        prop_assert!((d - 2.0 * i / (1.0 + i)).abs() <= 1e-12);
        prop_assert!(d >= i);
        prop_assert_eq!(i, iou(&b, &a, 0.5).unwrap());
        prop_assert_eq!(d, dice(&b, &a, 0.5).unwrap());
        prop_assert!((0.0..=1.0).contains(&i));
    }

    #[test]
    fn raising_logits_never_darkens_the_render(
        logits in prop::collection::vec(-6.0f64..6.0, 216),
        bumps in prop::collection::vec(0.0f64..3.0, 216),
        az in 0.0f64..std::f64::consts::TAU,
        el in -1.2f64..1.2,
    ) {
        let a = VoxelGrid::from_logits(6, 1.7, logits.clone()).unwrap();
        let raised: Vec<f64> = logits.iter().zip(&bumps).map(|(l, b)| l + b).collect();
        let b = VoxelGrid::from_logits(6, 1.7, raised).unwrap();
        let cam = Camera::from_view_spec(az, el, 3.0, Projection::Perspective, 0.8, 12, 12).unwrap();
        let s = RenderSettings::for_grid(&a);
        let ra = render_silhouette(&a, &cam, &s).unwrap();
        let rb = render_silhouette(&b, &cam, &s).unwrap();
        for (x, y) in ra.data().iter().zip(rb.data()) {
            prop_assert!(*y >= *x - 1e-12);
            prop_assert!((0.0..=1.0).contains(x));
        }
    }

    #[test]
    fn voxel_exports_are_closed_and_oriented(cells in prop::collection::vec(any::<bool>(), 64)) {
        let logits = cells.iter().map(|&c| if c { 8.0 } else { -8.0 }).collect();
        let grid = VoxelGrid::from_logits(4, 1.0, logits).unwrap();
        let blocky = extract_blocky_mesh(&grid, 0.5);
        let iso = extract_isosurface(&grid, 0.5);
        prop_assert_eq!(blocky.is_some(), cells.iter().any(|&c| c));
        for mesh in [blocky, iso].into_iter().flatten() {
            let report = validate_mesh(&mesh);
            prop_assert!(report.watertight, "{:?}", report);
            prop_assert!(report.consistent_orientation, "{:?}", report);
            prop_assert_eq!(report.degenerate_faces, 0);
        }
    }

    #[test]
    fn obj_format_is_canonical(
        level in 0u32..2,
        offsets in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 42),
    ) {
        let src = icosphere::<f64>(level, 1.3);
        let field = DisplacementField {
            offsets: offsets[..src.num_vertices()].iter().map(|&(x, y, z)| Vec3::new(x, y, z) * 0.1).collect(),
        };
        let mesh = deform(&src, &field).unwrap();
        let text = obj_string(&mesh);
        let back = parse_obj::<f64>(&text).unwrap();
        prop_assert_eq!(obj_string(&back), text);
        for (a, b) in mesh.vertices().iter().zip(back.vertices()) {
            prop_assert!((*a - *b).max_abs() <= 1e-5);
        }
    }
}
