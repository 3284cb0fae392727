use mole_core::bench::*;
use mole_core::hypervolume_2d;
use mole_core::ObjectiveVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit() -> Normalization {
    Normalization {
        ideal: ObjectiveVector::new(0.0, 0.0),
        nadir: ObjectiveVector::new(1.0, 1.0),
    }
}

#[test]
fn standard_ladder() {
    let l = TargetLadder::standard();
    let o = l.offsets();
    assert_eq!(l.len(), 58);
    assert!(o.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(o[0], -1e-4);
    assert!((o[5] + 1e-5).abs() < 1e-20);
    assert_eq!(&o[6..8], &[0.0, 1e-5]);
    assert!((o[8] - 10f64.powf(-4.9)).abs() < 1e-18);
    assert_eq!(*o.last().unwrap(), 1.0);
    assert_eq!(o.iter().filter(|v| **v < 0.0).count(), 6);
}

#[test]
fn hand_values() {
    let mut t = QualityTracker::new(unit());
    assert!(t.push(&ObjectiveVector::new(2.0, 1.0)));
    assert_eq!(t.quality(), -1.0);
    assert!(!t.push(&ObjectiveVector::new(2.0, 3.0)));
    assert!(t.push(&ObjectiveVector::new(0.5, 0.5)));
    assert_eq!(t.quality(), 0.25);
    // once inside, outside points are ignored
    assert!(!t.push(&ObjectiveVector::new(1.0, 0.0)));
    assert!(t.push(&ObjectiveVector::new(0.0, 0.75)));
    assert_eq!(t.quality(), 0.25 + 0.5 * 0.25);
    assert!(!t.push(&ObjectiveVector::new(0.5, 0.5)));
    assert!(t.push(&ObjectiveVector::new(0.0, 0.0)));
    assert_eq!(t.quality(), 1.0);
}

#[test]
fn normalization_from_points() {
    let pts = [
        ObjectiveVector::new(1.0, 9.0),
        ObjectiveVector::new(3.0, 4.0),
        ObjectiveVector::new(5.0, 1.0),
        ObjectiveVector::new(7.0, 7.0),
    ];
    let n = Normalization::from_points(&pts).unwrap();
    assert_eq!(n.ideal, ObjectiveVector::new(1.0, 1.0));
    assert_eq!(n.nadir, ObjectiveVector::new(5.0, 9.0));
    assert_eq!(n.apply(&pts[1]), [0.5, 0.375]);
    assert!(Normalization::from_points(&[]).is_none());
}

proptest! {
    #[test]
    fn incremental_hv_matches_sweep(seed in 0u64..10_000, n in 1usize..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = QualityTracker::new(unit());
        let mut seen = Vec::new();
        for _ in 0..n {
            // coarse grid values create ties and duplicates
            let p = ObjectiveVector::new(rng.gen_range(0..24) as f64 / 20.0, rng.gen_range(0..24) as f64 / 20.0);
            t.push(&p);
            seen.push(p);
            let oracle = hypervolume_2d(&seen, &ObjectiveVector::new(1.0, 1.0));
            if oracle > 0.0 {
                prop_assert!((t.quality() - oracle).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn first_hits_are_monotone(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let log: Vec<ObjectiveVector> = (0..300)
            .map(|_| ObjectiveVector::new(rng.gen_range(-0.1..1.5), rng.gen_range(-0.1..1.5)))
            .collect();
        let traj = quality_trajectory(&log, &unit());
        prop_assert!(traj.windows(2).all(|w| w[0].quality < w[1].quality && w[0].evals < w[1].evals));
        let ladder = TargetLadder::standard();
        let hits = first_hits(&traj, final_quality(&traj), &ladder);
        // offsets ascend, so hits must be non-increasing (harder targets later)
        for w in hits.windows(2) {
            match (w[0], w[1]) {
                (Some(hard), Some(easy)) => prop_assert!(easy <= hard),
                (Some(_), None) => prop_assert!(false, "easier target missed"),
                _ => {}
            }
        }
        prop_assert!(hits[6].is_some());
    }
}

#[test]
fn trajectory_tracks_distance_before_domination() {
    let log = [
        ObjectiveVector::new(4.0, 5.0),
        ObjectiveVector::new(1.0, 3.0),
        ObjectiveVector::new(1.0, 1.0),
        ObjectiveVector::new(0.5, 0.5),
    ];
    let traj = quality_trajectory(&log, &unit());
    let q: Vec<f64> = traj.iter().map(|p| p.quality).collect();
    assert_eq!(q, vec![-5.0, -2.0, 0.0, 0.25]);
    // (1, 1) is at the nadir: distance 0 but no volume yet
    assert_eq!(
        traj.iter().map(|p| p.evals).collect::<Vec<_>>(),
        vec![1, 2, 3, 4]
    );
}
