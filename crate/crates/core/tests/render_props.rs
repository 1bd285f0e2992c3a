use deckscan::env::{
    bezier_point, generate_crack, reset, Cell, CrackKind, CrackSpec, DetectorKind, Point, Rect, ScenarioConfig,
    MAX_CRACK_EXTENT_M, MAX_CRACK_WIDTH_M, MIN_CRACK_EXTENT_M,
};
use deckscan::render::{rasterize, render_patch, render_scene, PatchLabel, RenderConfig};
use deckscan::rng::stream;
use proptest::prelude::*;

const CELL: Rect = Rect { x0: 0.0, y0: 0.0, x1: 100.0, y1: 100.0 };

fn line(a: Point, b: Point) -> CrackSpec {
    CrackSpec { kind: CrackKind::Line, points: vec![a, b], width_m: 0.5, is_false: false }
}

#[test]
fn ten_thousand_cracks_stay_in_bounds() {
    let deck = Rect { x0: 0.0, y0: 0.0, x1: 800.0, y1: 600.0 };
    let mut rng = stream(11, &[]);
    for i in 0..10_000 {
        let c = generate_crack(None, &mut rng, deck, i % 3 == 0).unwrap();
        assert!(c.points.iter().all(|&p| deck.contains(p)), "crack {i} leaves the deck: {c:?}");
        assert!(c.width_m > 0.0 && c.width_m <= MAX_CRACK_WIDTH_M);
        let e = c.extent();
        assert!((MIN_CRACK_EXTENT_M - 1e-9..=MAX_CRACK_EXTENT_M + 1e-9).contains(&e), "extent {e}");
        match c.kind {
            CrackKind::Line => assert_eq!(c.points.len(), 2),
            CrackKind::Fork => {
                assert_eq!(c.points.len(), 4);
                assert_eq!(c.points[1], c.points[2], "branch shares the trunk end");
                assert!(c.points[3].dist(c.points[0]) <= MAX_CRACK_EXTENT_M + 1e-9);
            }
            CrackKind::Bezier => assert_eq!(c.points.len(), 4),
        }
    }
}

#[test]
fn crack_kinds_are_drawn_uniformly() {
    let mut rng = stream(12, &[]);
    let mut counts = [0usize; 3];
    for _ in 0..3000 {
        let c = generate_crack(None, &mut rng, Rect { x0: 0.0, y0: 0.0, x1: 800.0, y1: 600.0 }, false).unwrap();
        counts[CrackKind::ALL.iter().position(|&k| k == c.kind).unwrap()] += 1;
    }
    // 3 sigma of a binomial(3000, 1/3) is about 77.
    assert!(counts.iter().all(|&n| (923..=1077).contains(&n)), "{counts:?}");
}

#[test]
fn reset_places_requested_cracks() {
    let cfg = ScenarioConfig { n_cracks: 5, n_false_cracks: 0, detector: DetectorKind::Oracle, ..Default::default() };
    let (w, s) = reset(&cfg, 3).unwrap();
    assert_eq!(w.cracks.len(), 5);
    assert!(w.cracks.iter().all(|c| !c.is_false));
    assert_eq!((w.cols, w.rows), (8, 6));
    assert_eq!(s.uav, Cell::new(0, 0));
    assert_eq!(s.visited_count(), 1);
    let (w2, _) = reset(&cfg, 3).unwrap();
    assert_eq!(w.cracks, w2.cracks);
}

#[test]
fn horizontal_chord_is_a_two_pixel_band() {
    let c = line(Point::new(0.0, 50.0), Point::new(100.0, 50.0));
    let m = rasterize(&c, CELL, 64, 2.0);
    for y in 0..64 {
        let row = &m[y * 64..(y + 1) * 64];
        if y == 31 || y == 32 {
            assert!(row.iter().all(|&v| v), "row {y} incomplete");
        } else {
            assert!(row.iter().all(|&v| !v), "row {y} has stray pixels");
        }
    }
}

#[test]
fn crack_free_patch_mean_stays_near_background() {
    let cfg = ScenarioConfig { n_cracks: 0, n_false_cracks: 0, n_cars: 0, ..Default::default() };
    let (world, _) = reset(&cfg, 1).unwrap();
    let rc = RenderConfig::default();
    let bound = 4.0 * rc.noise_std / rc.resolution as f64;
    let mut rng = stream(13, &[]);
    let mut worst = 0.0f64;
    let mut grand = 0.0;
    for _ in 0..1000 {
        let p = render_patch(&world, Cell::new(3, 2), &rc, &mut rng);
        assert_eq!(p.label, PatchLabel::None);
        assert_eq!(p.mask_count(), 0);
        worst = worst.max((p.mean() - rc.background_mean).abs());
        grand += p.mean() / 1000.0;
    }
    assert!(worst <= bound, "worst deviation {worst} > {bound}");
    assert!((grand - rc.background_mean).abs() <= bound / 10.0);
}

#[test]
fn zero_noise_crack_free_patch_is_constant() {
    let rc = RenderConfig { noise_std: 0.0, background_std: 0.0, ..Default::default() };
    let p = render_scene(&[], &[], CELL, 100.0, &rc, &mut stream(1, &[]));
    assert!(p.pixels.iter().all(|&v| v == rc.background_mean));
}

fn arb_point() -> impl Strategy<Value = Point> {
    (5.0..95.0f64, 5.0..95.0f64).prop_map(|(x, y)| Point::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bezier_endpoints_and_midpoint(p in proptest::array::uniform4(arb_point())) {
        let [p0, p1, p2, p3] = p;
        let at = |t| bezier_point(p0, p1, p2, p3, t).unwrap();
        prop_assert!(at(0.0).dist(p0) < 1e-12);
        prop_assert!(at(1.0).dist(p3) < 1e-12);
        let mid = Point::new((p0.x + 3.0 * p1.x + 3.0 * p2.x + p3.x) / 8.0, (p0.y + 3.0 * p1.y + 3.0 * p2.y + p3.y) / 8.0);
        prop_assert!(at(0.5).dist(mid) < 1e-9);
        prop_assert!(bezier_point(p0, p1, p2, p3, -0.1).is_none());
        prop_assert!(bezier_point(p0, p1, p2, p3, 1.1).is_none());
    }

    #[test]
    fn mask_ignores_noise_seed_and_pixels_stay_in_range(a in arb_point(), b in arb_point(), s1 in any::<u64>(), s2 in any::<u64>()) {
        prop_assume!(a.dist(b) > 1.0);
        let c = line(a, b);
        let rc = RenderConfig { noise_std: 0.3, ..Default::default() };
        let p1 = render_scene(&[&c], &[], CELL, 100.0, &rc, &mut stream(s1, &[]));
        let p2 = render_scene(&[&c], &[], CELL, 100.0, &rc, &mut stream(s2, &[]));
        prop_assert_eq!(&p1.mask, &p2.mask);
        prop_assert!(p1.mask_count() > 0);
        prop_assert!(p1.pixels.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn line_crack_darkens_a_chord_band(a in arb_point(), b in arb_point(), seed in any::<u64>()) {
        prop_assume!(a.dist(b) > 5.0);
        let c = line(a, b);
        let rc = RenderConfig::default();
        let p = render_scene(&[&c], &[], CELL, 100.0, &rc, &mut stream(seed, &[]));
        let sigma = (rc.background_std.powi(2) + rc.noise_std.powi(2)).sqrt();
        let dark = p.pixels.iter().zip(&p.mask).filter(|(&v, &m)| m && v < rc.background_mean - 2.0 * sigma).count();
        let chord_fraction = a.dist(b) / 100.0;
        prop_assert!(dark as f64 >= 2.0 * rc.resolution as f64 * chord_fraction, "{} dark pixels for chord fraction {}", dark, chord_fraction);
    }

    #[test]
    fn collinear_bezier_matches_its_line(a in arb_point(), b in arb_point()) {
        prop_assume!(a.dist(b) > 1.0);
        let lerp = |t: f64| Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
        let bez = CrackSpec { kind: CrackKind::Bezier, points: vec![a, lerp(1.0 / 3.0), lerp(2.0 / 3.0), b], width_m: 0.5, is_false: false };
        prop_assert_eq!(rasterize(&bez, CELL, 64, 2.0), rasterize(&line(a, b), CELL, 64, 2.0));
    }

    #[test]
    fn fork_mask_is_union_of_trunk_and_branch(a in arb_point(), b in arb_point(), e in arb_point(), t in 2.0..4.0f64) {
        let fork = CrackSpec { kind: CrackKind::Fork, points: vec![a, b, b, e], width_m: 0.5, is_false: false };
        let trunk = rasterize(&line(a, b), CELL, 64, t);
        let branch = rasterize(&line(b, e), CELL, 64, t);
        let union: Vec<bool> = trunk.iter().zip(&branch).map(|(x, y)| *x || *y).collect();
        prop_assert_eq!(rasterize(&fork, CELL, 64, t), union);
    }
}
