//! Simulator, metrics, sweeps and the baseline predictor.

use occlutrack::error::Error;
use occlutrack::frame::BoundingBox;
use occlutrack::harness::io::{ResultRow, TruthRow};
use occlutrack::harness::suite::{crossing, crossing_suite, free_motion};
use occlutrack::harness::*;
use occlutrack::pipeline::{Mode, PipelineConfig};
use occlutrack::predictor::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn row(frame: u64, b: [f64; 4], mode: Mode, occluded: bool) -> ResultRow {
    ResultRow {
        frame,
        cx: b[0],
        cy: b[1],
        w: b[2],
        h: b[3],
        mode,
        epsilon: None,
        occluded,
        iou: None,
    }
}

fn truth(frame: u64, b: [f64; 4], occluded_flag: bool) -> TruthRow {
    TruthRow {
        frame,
        cx: b[0],
        cy: b[1],
        w: b[2],
        h: b[3],
        occluded_flag,
    }
}

#[test]
fn simulation_is_seeded() {
    let a = simulate(&crossing(3)).unwrap();
    let b = simulate(&crossing(3)).unwrap();
    assert_eq!(a.frames, b.frames);
    assert_eq!(a.truth, b.truth);
    let mut other = crossing(3);
    other.seed = 4;
    assert_ne!(simulate(&other).unwrap().frames, a.frames);
}

#[test]
fn still_scene_without_noise_repeats() {
    let mut spec = free_motion(1);
    spec.noise = 0.0;
    spec.target.motion = Motion::Linear {
        start: [100.0, 90.0],
        velocity: [0.0, 0.0],
    };
    let sc = simulate(&spec).unwrap();
    assert!(sc.frames.windows(2).all(|w| w[0] == w[1]));
    assert!(sc.truth.iter().all(|t| !t.occluded_flag));
}

#[test]
fn crossings_have_one_occluded_interval() {
    for spec in crossing_suite(20, 100) {
        let sc = simulate(&spec).unwrap();
        let flags: Vec<bool> = sc.truth.iter().map(|t| t.occluded_flag).collect();
        let rises = flags.windows(2).filter(|w| !w[0] && w[1]).count();
        let falls = flags.windows(2).filter(|w| w[0] && !w[1]).count();
        assert_eq!((rises, falls), (1, 1), "seed {}", spec.seed);
        // The flag agrees with a pixel count: more than half the target's
        // pixel centers lie inside the block while it is drawn above.
        let e = &spec.occlusion_episodes[0];
        for t in &sc.truth {
            let (tb, db) = (t.bbox(), spec.distractors[0].bbox(t.frame));
            let inside = |b: &BoundingBox, x: f64, y: f64| {
                x >= b.left() && x < b.right() && y >= b.top() && y < b.bottom()
            };
            let (mut own, mut hidden) = (0, 0);
            for y in 0..spec.height {
                for x in 0..spec.width {
                    let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                    if inside(&tb, px, py) {
                        own += 1;
                        hidden += inside(&db, px, py) as usize;
                    }
                }
            }
            let above = (e.start..=e.end).contains(&t.frame);
            assert_eq!(
                t.occluded_flag,
                above && 2 * hidden > own,
                "seed {} frame {}",
                spec.seed,
                t.frame
            );
        }
    }
}

#[test]
fn invalid_specs_are_rejected() {
    let mut spec = crossing(1);
    spec.target.motion = Motion::Linear {
        start: [20.0, 90.0],
        velocity: [-1.0, 0.0],
    };
    assert!(matches!(simulate(&spec), Err(Error::Validation(_))));
    let mut spec = crossing(1);
    spec.occlusion_episodes[0].end = 500;
    assert!(matches!(simulate(&spec), Err(Error::Validation(_))));
}

#[test]
fn perfect_and_disjoint_results() {
    let t: Vec<TruthRow> = (1..6)
        .map(|f| truth(f, [20.0 + f as f64, 20.0, 10.0, 10.0], false))
        .collect();
    let perfect: Vec<ResultRow> = t
        .iter()
        .map(|t| row(t.frame, [t.cx, t.cy, t.w, t.h], Mode::Tracking, false))
        .collect();
    let r = evaluate(&perfect, &t).unwrap();
    assert_eq!((r.mean_iou, r.failures, r.frames), (1.0, 0, 5));
    let far: Vec<ResultRow> = t
        .iter()
        .map(|t| row(t.frame, [90.0, 90.0, 10.0, 10.0], Mode::Tracking, false))
        .collect();
    assert_eq!(evaluate(&far, &t).unwrap().failures, 5);
}

#[test]
fn five_frame_fixture_by_hand() {
    let tb = [10.0, 10.0, 10.0, 10.0];
    let t = vec![
        truth(1, tb, false),
        truth(2, tb, true),
        truth(3, tb, true),
        truth(4, tb, false),
        truth(5, tb, true),
    ];
    let r = vec![
        // IoU 1
        row(1, tb, Mode::Tracking, false),
        // half-width overlap: 50 / 150
        row(2, [15.0, 10.0, 10.0, 10.0], Mode::Predicting, true),
        // disjoint
        row(3, [40.0, 10.0, 10.0, 10.0], Mode::Predicting, true),
        // quarter overlap: 25 / 175
        row(4, [15.0, 15.0, 10.0, 10.0], Mode::Tracking, true),
        row(5, tb, Mode::Tracking, false),
    ];
    let m = evaluate(&r, &t).unwrap();
    assert_eq!(m.frames, 5);
    assert_eq!(m.failures, 1);
    let mean = (1.0 + 1.0 / 3.0 + 1.0 / 7.0 + 1.0) / 4.0;
    assert!((m.mean_iou - mean).abs() < 1e-12);
    // Flags: TP at 2 and 3, FP at 4, FN at 5.
    assert!((m.occlusion_precision - 2.0 / 3.0).abs() < 1e-12);
    assert!((m.occlusion_recall - 2.0 / 3.0).abs() < 1e-12);
    // Predicting frames 2 and 3 are 5 and 30 px off.
    assert!((m.predictor_ade.unwrap() - 17.5).abs() < 1e-12);
    assert_eq!(post_occlusion_hits(&r, &t, 0.5).unwrap(), (0, 0));
    let mut t2 = t.clone();
    t2[4].occluded_flag = false;
    assert_eq!(post_occlusion_hits(&r, &t2, 0.5).unwrap(), (1, 2));
}

#[test]
fn empty_denominators_give_one() {
    let tb = [10.0, 10.0, 10.0, 10.0];
    let m = evaluate(&[row(1, tb, Mode::Tracking, false)], &[truth(1, tb, false)]).unwrap();
    assert_eq!(
        (m.occlusion_precision, m.occlusion_recall, m.predictor_ade),
        (1.0, 1.0, None)
    );
}

#[test]
fn misaligned_frames_fail() {
    let tb = [10.0, 10.0, 10.0, 10.0];
    let t = vec![truth(1, tb, false)];
    assert!(matches!(
        evaluate(&[row(2, tb, Mode::Tracking, false)], &t),
        Err(Error::InvalidArgument(_))
    ));
    let dup = vec![row(1, tb, Mode::Tracking, false); 2];
    assert!(evaluate(&dup, &t).is_err());
}

#[test]
fn evaluation_ignores_row_order() {
    let sc = simulate(&crossing(104)).unwrap();
    let p = ConstantVelocity::new(4, 2).unwrap();
    let mut rows = track_scenario(&sc, &p, &PipelineConfig::default()).unwrap();
    let want = evaluate(&rows, &sc.truth).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..5 {
        rows.shuffle(&mut rng);
        assert_eq!(evaluate(&rows, &sc.truth).unwrap(), want);
    }
}

#[test]
fn singleton_sweep_is_a_plain_run() {
    let specs = crossing_suite(3, 110);
    let p = ConstantVelocity::new(4, 2).unwrap();
    let base = PipelineConfig::default();
    let rows = sweep(&specs, SweepParam::EpsilonThreshold, &[0.7], &base, &p).unwrap();
    assert_eq!(rows.len(), 1);
    let cfg = SweepParam::EpsilonThreshold.apply(&base, 0.7);
    let mut acc = MetricsAccumulator::default();
    for s in &specs {
        let sc = simulate(s).unwrap();
        acc.merge(&accumulate(&track_scenario(&sc, &p, &cfg).unwrap(), &sc.truth).unwrap());
    }
    assert_eq!(rows[0].report, acc.report());
    assert_eq!(rows[0].value, 0.7);
}

#[test]
fn epsilon_grid_gives_nine_stable_rows() {
    let specs = crossing_suite(2, 120);
    let p = ConstantVelocity::new(4, 2).unwrap();
    let base = PipelineConfig {
        occlusion: occlutrack::occlusion::OcclusionConfig {
            mix_weight: 0.5,
            ..Default::default()
        },
        ..Default::default()
    };
    let values = parse_values("0.55:0.95:0.05").unwrap();
    let a = sweep(&specs, SweepParam::EpsilonThreshold, &values, &base, &p).unwrap();
    let b = sweep(&specs, SweepParam::EpsilonThreshold, &values, &base, &p).unwrap();
    assert_eq!(a.len(), 9);
    let (mut ca, mut cb) = (Vec::new(), Vec::new());
    write_sweep_csv(&mut ca, SweepParam::EpsilonThreshold, &a).unwrap();
    write_sweep_csv(&mut cb, SweepParam::EpsilonThreshold, &b).unwrap();
    assert_eq!(ca, cb);
    assert_eq!(String::from_utf8(ca).unwrap().lines().count(), 10);
    assert!(sweep(&specs, SweepParam::MixWeight, &[], &base, &p).is_err());
}

#[test]
fn baseline_examples() {
    let t = Trajectory::contiguous(vec![[0.0, 0.0], [1.0, 1.0]], 0).unwrap();
    assert_eq!(
        baseline_predictor(&t, 2).unwrap().points(),
        &[[2.0, 2.0], [3.0, 3.0]]
    );
    let still = Trajectory::contiguous(vec![[4.0, 5.0]; 3], 0).unwrap();
    assert_eq!(
        baseline_predictor(&still, 3).unwrap().points(),
        &[[4.0, 5.0]; 3]
    );
    let one = Trajectory::contiguous(vec![[0.0, 0.0]], 0).unwrap();
    assert!(matches!(
        baseline_predictor(&one, 2),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn trained_generator_beats_extrapolation_on_wobbly_paths() {
    let splits = |trajs: &[Trajectory]| -> Vec<TrajSplit> {
        trajs
            .iter()
            .flat_map(|t| {
                (0..=t.len() - 6).map(move |s| TrajSplit::from_window(t, s, 4, 2).unwrap())
            })
            .collect()
    };
    let train = splits(&datasets::sinusoidal(150, 16, 100.0, 21).unwrap());
    let test = splits(&datasets::sinusoidal(40, 16, 100.0, 22).unwrap());
    let g = train_gan(&train, &GanTrainConfig::default())
        .unwrap()
        .generator;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let gan = evaluate_ade(&g, &test, &mut rng).unwrap();
    let base: f64 = test
        .iter()
        .map(|s| {
            ade_points(
                baseline_predictor(&s.observed, 2).unwrap().points(),
                s.future.points(),
            )
            .unwrap()
        })
        .sum::<f64>()
        / test.len() as f64;
    assert!(gan < base, "generator ADE {gan} vs baseline {base}");
}

#[test]
fn scenario_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sc = simulate(&crossing(9)).unwrap();
    write_scenario(dir.path(), &sc).unwrap();
    let (frames, truth) = read_sequence(dir.path()).unwrap();
    assert_eq!(frames, sc.frames);
    assert_eq!(truth.unwrap(), sc.truth);
}

proptest! {
    #[test]
    fn iou_is_a_bounded_symmetric_overlap(
        a in (0.0f64..50.0, 0.0f64..50.0, 0.5f64..30.0, 0.5f64..30.0),
        b in (0.0f64..50.0, 0.0f64..50.0, 0.5f64..30.0, 0.5f64..30.0),
    ) {
        let a = BoundingBox::new(a.0, a.1, a.2, a.3).unwrap();
        let b = BoundingBox::new(b.0, b.1, b.2, b.3).unwrap();
        prop_assert!((a.iou(&a) - 1.0).abs() < 1e-12);
        let v = a.iou(&b);
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert_eq!(v, b.iou(&a));
    }
}
