use mole_core::archive::{EfficientSetModel, SetNode, SetOrigin, SetsArchive};
use mole_core::postprocess::{eligible_gaps, normalized_gap};
use mole_core::vecops::segment_distance;
use mole_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bi_sphere() -> Mop {
    make_test_problem(TestProblem::BiSphere, &ProblemParams::default()).unwrap()
}

fn archive_from(mop: &Mop, sets: &[Vec<[f64; 2]>]) -> SetsArchive {
    let mut archive = SetsArchive::new();
    for (i, xs) in sets.iter().enumerate() {
        let mut nodes: Vec<SetNode> = xs
            .iter()
            .map(|x| SetNode::new(x.to_vec(), mop.peek(x)))
            .collect();
        nodes.sort_by(|a, b| a.f.0[0].total_cmp(&b.f.0[0]));
        archive.add_set(
            EfficientSetModel::from_nodes(0, nodes).unwrap(),
            SetOrigin::StartPoint(i),
        );
    }
    archive
}

fn three_segment_nodes(mop: &Mop) -> SetsArchive {
    archive_from(mop, &[vec![[-1.0, -1.0], [0.0, 0.0], [1.0, 1.0]]])
}

#[test]
fn theta_one_returns_without_evaluations() {
    let mut mop = bi_sphere();
    let mut archive = three_segment_nodes(&mop);
    let cfg = PostProcessConfig {
        theta: 1.0,
        ..PostProcessConfig::default()
    };
    let rep = post_process_hv(
        &mut archive,
        &mut mop,
        &cfg,
        &DescentConfig::for_diag(8f64.sqrt() * 5.0),
    )
    .unwrap();
    assert_eq!(rep.evals_used, 0);
    assert!(rep.iterations.is_empty());
    assert_eq!(archive.total_nodes(), 3);
}

#[test]
fn bi_sphere_refines_to_theta_on_the_segment() {
    let mut mop = bi_sphere();
    let mut archive = three_segment_nodes(&mop);
    let front_before = archive.nondominated().to_vec();
    let cfg = PostProcessConfig {
        theta: 1e-3,
        ..PostProcessConfig::default()
    };
    let rep = post_process_hv(
        &mut archive,
        &mut mop,
        &cfg,
        &DescentConfig::for_diag(8f64.sqrt() * 5.0),
    )
    .unwrap();
    assert!(rep.normalized_gap <= 1e-3, "{}", rep.normalized_gap);
    assert!(normalized_gap(&archive) <= 1e-3);
    assert!(rep.inserted > 0);
    for (_, n) in archive.nodes() {
        assert!(segment_distance(&n.x, &[-1.0, -1.0], &[1.0, 1.0]) < 1e-3);
    }
    // nothing removed, ordering kept
    for f in &front_before {
        assert!(archive.nodes().any(|(_, n)| n.f == *f));
    }
    assert!(archive.sets().iter().all(|s| s.is_ordered()));
    // max_hv is fixed, so the gap log must not increase
    for w in rep.iterations.windows(2) {
        assert!(w[1].total_gap <= w[0].total_gap + 1e-12);
    }
}

#[test]
fn refinement_never_lowers_hypervolume() {
    let mut mop = make_test_problem(TestProblem::BiRosenbrock, &ProblemParams::default()).unwrap();
    let dcfg = DescentConfig::for_problem(&mop);
    let ecfg = ExploreConfig::for_problem(&mop);
    let start = multi_objective_descent(&[0.0, 1.0], &mut mop, &dcfg, None).unwrap();
    let r = explore_efficient_set(&start.final_point, &mut mop, &ecfg, &dcfg).unwrap();
    let mut archive = SetsArchive::new();
    archive.add_set(r.set, SetOrigin::StartPoint(0));
    let reference = ObjectiveVector::new(1e3, 1e3);
    let hv0 = hypervolume_2d(archive.nondominated(), &reference);
    let n0 = archive.total_nodes();
    let cfg = PostProcessConfig {
        theta: 1e-4,
        ..PostProcessConfig::default()
    };
    post_process_hv(&mut archive, &mut mop, &cfg, &dcfg).unwrap();
    assert!(hypervolume_2d(archive.nondominated(), &reference) >= hv0);
    assert!(archive.total_nodes() >= n0);
    assert!(archive.sets()[0].is_ordered());
}

#[test]
fn point_outside_the_box_is_rejected_and_the_pair_dropped() {
    // two nodes of a curved "set" whose midpoint has worse objectives than both
    let mop = Mop::new("dip", 1, |x: &[f64]| {
        [x[0], 1.0 - x[0] + 10.0 * x[0] * (1.0 - x[0])]
    });
    let mut mop = mop
        .with_bounds(BoxBounds::cube(1, -1.0, 2.0).unwrap())
        .unwrap();
    let mut archive = archive_from_1d(&mop, &[0.0, 1.0]);
    let cfg = PostProcessConfig {
        theta: 1e-6,
        ..PostProcessConfig::default()
    };
    let rep = post_process_hv(&mut archive, &mut mop, &cfg, &DescentConfig::for_diag(3.0)).unwrap();
    assert_eq!(rep.rejected, 1);
    assert_eq!(rep.inserted, 0);
    assert_eq!(rep.iterations.len(), 1);
    assert_eq!(archive.total_nodes(), 2);
}

fn archive_from_1d(mop: &Mop, xs: &[f64]) -> SetsArchive {
    let nodes = xs
        .iter()
        .map(|&x| SetNode::new(vec![x], mop.peek(&[x])))
        .collect();
    let mut archive = SetsArchive::new();
    archive.add_set(
        EfficientSetModel::from_nodes(0, nodes).unwrap(),
        SetOrigin::StartPoint(0),
    );
    archive
}

#[test]
fn budget_exhaustion_is_graceful() {
    let mut mop = bi_sphere().with_budget(5);
    let mut archive = three_segment_nodes(&mop);
    let rep = post_process_hv(
        &mut archive,
        &mut mop,
        &PostProcessConfig::default(),
        &DescentConfig::default(),
    )
    .unwrap();
    assert!(rep.budget_exhausted);
    assert_eq!(mop.evaluations(), 5);
    assert!(archive.sets()[0].is_ordered());
}

/// Brute force: a pair is eligible when no node anywhere weakly dominates its ideal.
fn naive_gaps(archive: &SetsArchive) -> Vec<(usize, usize, f64)> {
    let all: Vec<ObjectiveVector> = archive.nodes().map(|(_, n)| n.f).collect();
    let mut out = Vec::new();
    for s in archive.sets() {
        for (i, w) in s.nodes().windows(2).enumerate() {
            let ideal =
                ObjectiveVector::new(w[0].f.0[0].min(w[1].f.0[0]), w[0].f.0[1].min(w[1].f.0[1]));
            if all
                .iter()
                .any(|p| p.0[0] <= ideal.0[0] && p.0[1] <= ideal.0[1])
            {
                continue;
            }
            let g = (w[0].f.0[0] - w[1].f.0[0]).abs() * (w[0].f.0[1] - w[1].f.0[1]).abs();
            out.push((s.set_id, i, g));
        }
    }
    out
}

#[test]
fn eligible_gaps_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mop = Mop::new("id", 2, |x: &[f64]| [x[0], x[1]]);
    for _ in 0..50 {
        let mut sets = Vec::new();
        for _ in 0..rng.gen_range(1..5) {
            let n = rng.gen_range(2..12);
            let shift: [f64; 2] = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let mut f1s: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            f1s.sort_by(f64::total_cmp);
            let mut f2s: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            f2s.sort_by(|a, b| b.total_cmp(a));
            sets.push(
                (0..n)
                    .map(|i| [f1s[i] + shift[0], f2s[i] + shift[1]])
                    .collect(),
            );
        }
        let archive = archive_from(&mop, &sets);
        let ours: Vec<(usize, usize, f64)> = eligible_gaps(&archive)
            .into_iter()
            .map(|e| (e.set_id, e.index, e.gap))
            .collect();
        assert_eq!(ours, naive_gaps(&archive));
    }
}

#[test]
fn skipped_midpoints_barely_move_under_descent() {
    for kind in [
        TestProblem::BiSphere,
        TestProblem::Aspar,
        TestProblem::BiRosenbrock,
    ] {
        let mut mop = make_test_problem(kind, &ProblemParams::default()).unwrap();
        let dcfg = DescentConfig::for_problem(&mop);
        let ecfg = ExploreConfig::for_problem(&mop);
        let x0 = match kind {
            TestProblem::Aspar => vec![-0.8, 1.0],
            _ => vec![0.0, 0.5],
        };
        let start = multi_objective_descent(&x0, &mut mop, &dcfg, None).unwrap();
        let r = explore_efficient_set(&start.final_point, &mut mop, &ecfg, &dcfg).unwrap();
        let mut archive = SetsArchive::new();
        archive.add_set(r.set, SetOrigin::StartPoint(0));
        let cfg = PostProcessConfig {
            theta: 1e-4,
            ..PostProcessConfig::for_descent(&dcfg)
        };
        let rep = post_process_hv(&mut archive, &mut mop, &cfg, &dcfg).unwrap();
        for s in rep.skipped.iter().take(20) {
            let d = multi_objective_descent(&s.x, &mut mop, &dcfg, None).unwrap();
            let moved = mole_core::vecops::distance(&d.final_point, &s.x);
            assert!(moved < 10.0 * dcfg.alpha_min, "{kind:?}: moved {moved:e}");
        }
    }
}
