use anicode_core::codec::{
    decode, encode, is_qr_alphanumeric, quad_degenerate, Animation, AnimationSpec, Annotation, ColorShift,
    EncodeError, Interp, Keyframe, LandmarkSet, Move2D, Point, Seconds, Warp3D,
};
use anicode_core::geometry::{move2d_matrix, warp3d_matrix, warp_mask, Homography};
use anicode_core::imagecore::{dilate_elliptical, Mask};
use anicode_core::matching::{build_rois, match_segment};
use anicode_core::registration::{gate, registration_error, Corners};
use anicode_core::segmentation::{extract_features, segment, LabelMap, SegParams, SegmentFeature};
use image::Rgb;
use proptest::prelude::*;

fn mask_strategy(w: u32, h: u32) -> impl Strategy<Value = Mask> {
    proptest::collection::vec(any::<bool>(), (w * h) as usize).prop_map(move |bits| {
        // Sparse masks make dilation interesting.
        Mask::from_fn(w, h, |x, y| bits[(y * w + x) as usize] && (x * 7 + y * 3) % 5 == 0)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dilation_is_extensive_and_monotone(a in mask_strategy(24, 18), b in mask_strategy(24, 18), size in 1u32..6) {
        let mut ab = a.clone();
        ab.union_with(&b);
        let da = dilate_elliptical(&a, size);
        prop_assert!(a.is_subset_of(&da));
        prop_assert!(da.is_subset_of(&dilate_elliptical(&ab, size)));
    }
}

fn point(x: std::ops::Range<i32>, y: std::ops::Range<i32>) -> impl Strategy<Value = Point> {
    (x, y).prop_map(|(x, y)| Point::new(x, y))
}

fn quad(lo: i32, hi: i32) -> impl Strategy<Value = [Point; 4]> {
    proptest::array::uniform4(point(lo..hi, lo..hi)).prop_filter("non-degenerate", |q| !quad_degenerate(q))
}

fn interp() -> impl Strategy<Value = Interp> {
    prop_oneof![Just(Interp::Linear), Just(Interp::Quadratic)]
}

fn duration() -> impl Strategy<Value = Seconds> {
    (1u32..=6000).prop_map(Seconds::from_tenths)
}

fn animation() -> impl Strategy<Value = Animation> {
    prop_oneof![
        (-640i32..=640, -480i32..=480, -360i32..=360, duration(), interp()).prop_map(|(tx, ty, theta, duration, interp)| {
            Animation::Move2D(Move2D { tx, ty, theta, duration, interp })
        }),
        (quad(-50, 700), proptest::array::uniform4(point(-50..700, -50..700)), duration(), interp())
            .prop_map(|(src, dst, duration, interp)| Animation::Warp3D(Warp3D { src, dst, duration, interp })),
        (-360i32..=360, duration(), interp())
            .prop_map(|(dh, duration, interp)| Animation::ColorShift(ColorShift { dh, duration, interp })),
        ("[0-9A-Z $%*+./:-]{1,30}", duration()).prop_map(|(text, duration)| Animation::Annotation(Annotation { text, duration })),
    ]
}

fn keyframe() -> impl Strategy<Value = Keyframe> {
    (
        proptest::collection::vec((0u32..640, 0u32..480, 1u32..=307_200).prop_map(|(x, y, a)| SegmentFeature::new(x, y, a)), 1..4),
        animation(),
    )
        .prop_map(|(roi, animation)| Keyframe { roi, animation })
}

fn spec() -> impl Strategy<Value = AnimationSpec> {
    (
        proptest::array::uniform4(point(0..640, 0..480)).prop_filter("non-degenerate", |q| !quad_degenerate(q)),
        (1u32..=307_200, 1u32..=1000, 1u32..=5000, 1u32..=50),
        proptest::collection::vec(keyframe(), 1..5),
    )
        .prop_map(|(lm, (avg, c, m, it), keyframes)| AnimationSpec {
            landmarks: LandmarkSet(lm),
            seg: SegParams {
                avg_superpixel_size: avg,
                compactness: c,
                min_merge_size: m,
                iterations: it,
            },
            keyframes,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn codec_round_trip(s in spec()) {
        match encode(&s) {
            Ok(payload) => {
                prop_assert!(payload.chars().all(is_qr_alphanumeric));
                prop_assert!(payload.len() <= 483);
                prop_assert_eq!(decode(&payload).unwrap(), s);
            }
            Err(EncodeError::CapacityExceeded { used, .. }) => prop_assert!(used > 483),
            Err(e) => prop_assert!(false, "valid spec rejected: {}", e),
        }
    }

    #[test]
    fn decode_is_total(s in "\\PC{0,1000}") {
        let _ = decode(&s);
    }

    #[test]
    fn decode_is_total_on_payload_like_text(s in "[0-9 .:A-Z-]{0,400}") {
        if let Ok(spec) = decode(&s) {
            prop_assert!(spec.validate().is_ok());
        }
    }
}

fn feature() -> impl Strategy<Value = SegmentFeature> {
    (100u32..540, 100u32..380, 1u32..20_000).prop_map(|(x, y, a)| SegmentFeature::new(x, y, a))
}

proptest! {
    #[test]
    fn matching_ignores_common_translation(
        cands in proptest::collection::vec(feature(), 1..40),
        q in feature(),
        dx in -100i32..=100,
        dy in -100i32..=100,
    ) {
        let shift = |f: &SegmentFeature| SegmentFeature::new((f.cx as i32 + dx) as u32, (f.cy as i32 + dy) as u32, f.area);
        let moved: Vec<_> = cands.iter().map(shift).collect();
        let (a, ca) = match_segment(&q, &cands).unwrap();
        let (b, cb) = match_segment(&shift(&q), &moved).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(ca, cb);
    }

    #[test]
    fn matching_a_list_against_itself_is_identity(cands in proptest::collection::vec(feature(), 1..40)) {
        for (i, f) in cands.iter().enumerate() {
            let (id, cost) = match_segment(f, &cands).unwrap();
            // Duplicates resolve to the first copy.
            let first = cands.iter().position(|g| g == f).unwrap();
            prop_assert_eq!(id as usize, first + 1);
            prop_assert_eq!(cost, 0.0);
            prop_assert!(first <= i);
        }
    }

    #[test]
    fn registration_error_is_translation_invariant(
        r in proptest::array::uniform4((0.0f64..640.0, 0.0f64..480.0)),
        o in proptest::array::uniform4((0.0f64..640.0, 0.0f64..480.0)),
        dx in -200.0f64..200.0,
        dy in -200.0f64..200.0,
    ) {
        let r: Corners = r.map(|(x, y)| [x, y]);
        let o: Corners = o.map(|(x, y)| [x, y]);
        let shift = |c: &Corners| c.map(|[x, y]| [x + dx, y + dy]);
        let e = registration_error(&r, &o);
        prop_assert!(e >= 0.0);
        prop_assert!((e - registration_error(&shift(&r), &shift(&o))).abs() < 1e-9);
        // Brute-force mean of the paired distances.
        let brute: f64 = (0..4).map(|i| ((r[i][0] - o[i][0]).powi(2) + (r[i][1] - o[i][1]).powi(2)).sqrt()).sum::<f64>() / 4.0;
        prop_assert!((e - brute).abs() < 1e-9);
    }

    #[test]
    fn raising_threshold_never_rejects(off in 0.0f64..30.0, t1 in 0.0f64..30.0, extra in 0.0f64..30.0) {
        let img = image::RgbImage::from_pixel(64, 48, Rgb([1, 2, 3]));
        let r: Corners = [[10.0, 10.0], [50.0, 10.0], [50.0, 40.0], [10.0, 40.0]];
        let o = r.map(|[x, y]| [x + off, y]);
        let low = gate(&img, &r, &o, t1).unwrap();
        let high = gate(&img, &r, &o, t1 + extra).unwrap();
        prop_assert!(!low.is_accepted() || high.is_accepted());
    }
}

fn label_map() -> impl Strategy<Value = LabelMap> {
    (1u32..12, 1u32..12, 1u32..6).prop_flat_map(|(w, h, k)| {
        let k = k.min(w * h);
        proptest::collection::vec(1..=k, (w * h) as usize).prop_map(move |mut ids| {
            // Make sure every ID in 1..=k occurs.
            for id in 1..=k {
                ids[(id - 1) as usize] = id;
            }
            LabelMap::from_ids(w, h, ids).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn features_match_pixel_accumulation(lm in label_map()) {
        let feats = extract_features(&lm);
        prop_assert_eq!(feats.len() as u32, lm.segment_count());
        for (i, f) in feats.iter().enumerate() {
            let id = i as u32 + 1;
            let pts: Vec<(u32, u32)> = (0..lm.height())
                .flat_map(|y| (0..lm.width()).map(move |x| (x, y)))
                .filter(|&(x, y)| lm.get(x, y) == id)
                .collect();
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0 as f64).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1 as f64).sum::<f64>() / n;
            prop_assert_eq!(f.area as usize, pts.len());
            prop_assert_eq!(f.cx, (mx + 0.5).floor() as u32);
            prop_assert_eq!(f.cy, (my + 0.5).floor() as u32);
        }
        prop_assert_eq!(feats.iter().map(|f| f.area).sum::<u32>(), lm.width() * lm.height());
    }
}

/// Composes the keyframe end states in order and warps the original mask once.
fn replay(mask: &Mask, steps: &[Homography]) -> Mask {
    if steps.is_empty() {
        return mask.clone();
    }
    let h = steps.iter().fold(Homography::IDENTITY, |acc, s| *s * acc);
    warp_mask(mask, &h).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stacked_transforms_match_replay(moves in proptest::collection::vec((-20i32..=20, -20i32..=20), 1..4)) {
        // 8x6 block segments on a 64x48 canvas; keyframes move segment 10
        // and a final annotation queries it.
        let (w, h) = (64u32, 48u32);
        let ids = (0..h).flat_map(|y| (0..w).map(move |x| (y / 8) * 8 + x / 8 + 1)).collect();
        let labels = LabelMap::from_ids(w, h, ids).unwrap();
        let feats = extract_features(&labels);
        let target = feats[9];
        let mut keyframes: Vec<Keyframe> = moves
            .iter()
            .map(|&(tx, ty)| Keyframe {
                roi: vec![target],
                animation: Animation::Move2D(Move2D {
                    tx,
                    ty,
                    theta: 0,
                    duration: Seconds::from_tenths(3),
                    interp: Interp::Linear,
                }),
            })
            .collect();
        keyframes.push(Keyframe {
            roi: vec![target],
            animation: Animation::Annotation(Annotation { text: "X".into(), duration: Seconds::from_tenths(1) }),
        });
        let spec = AnimationSpec {
            landmarks: LandmarkSet([Point::new(0, 0), Point::new(10, 0), Point::new(10, 10), Point::new(0, 10)]),
            seg: SegParams::default(),
            keyframes,
        };
        let rois = build_rois(&spec, &labels, &feats).unwrap();
        // Brute force: recompute each keyframe's ROI from the original mask.
        let mut mask = labels.mask_of(10);
        let mut steps = Vec::new();
        for (k, &(tx, ty)) in moves.iter().enumerate() {
            prop_assert_eq!(&rois.keyframes[k].roi, &replay(&labels.mask_of(10), &steps));
            let kf = Move2D { tx, ty, theta: 0, duration: Seconds::from_tenths(3), interp: Interp::Linear };
            let c = mask.centroid().unwrap_or_else(|| {
                let (x, y) = labels.mask_of(10).centroid().unwrap();
                let h = steps.iter().fold(Homography::IDENTITY, |acc, s| *s * acc);
                h.apply(x, y)
            });
            steps.push(move2d_matrix(&kf, c, 1.0));
            mask = replay(&labels.mask_of(10), &steps);
        }
        prop_assert_eq!(&rois.keyframes[moves.len()].roi, &mask);
    }

    #[test]
    fn warp_hits_corners_at_end_and_is_identity_at_start(src in quad(0, 640), dst in proptest::array::uniform4(point(0..640, 0..480))) {
        let kf = Warp3D { src, dst, duration: Seconds::from_tenths(10), interp: Interp::Linear };
        prop_assert_eq!(warp3d_matrix(&kf, 0.0).unwrap(), Homography::IDENTITY);
        if let Ok(m) = warp3d_matrix(&kf, 1.0) {
            for (s, d) in src.iter().zip(&dst) {
                let (x, y) = m.apply(s.x as f64, s.y as f64);
                prop_assert!((x - d.x as f64).abs() < 1e-6 && (y - d.y as f64).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn segmentation_keeps_flat_halves_apart() {
    let img = image::RgbImage::from_fn(640, 480, |x, _| if x < 320 { Rgb([30, 60, 200]) } else { Rgb([240, 200, 20]) });
    let p = SegParams::tuned(640 * 480 / 4, 10);
    let lm = segment(&img, &p).unwrap();
    // Every segment lies on one side of the colour boundary.
    for id in 1..=lm.segment_count() {
        let m = lm.mask_of(id);
        let left = (0..480).flat_map(|y| (0..320).map(move |x| (x, y))).filter(|&(x, y)| m.get(x, y)).count();
        let right = m.count() - left;
        assert!(left == 0 || right == 0, "segment {id} spans the boundary ({left} | {right})");
    }
}
