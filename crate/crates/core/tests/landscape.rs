use mole_core::landscape::*;
use mole_core::vecops::segment_distance;
use mole_core::*;

fn landscape(kind: TestProblem, params: &ProblemParams, n: usize) -> Landscape {
    let mut mop = make_test_problem(kind, params).unwrap();
    let grid = GridSpec::new(kind.plot_bounds(), (n, n)).unwrap();
    compute_landscape(&mut mop, &grid, MogVariant::GeometricMean, DEFAULT_GRID_EPS).unwrap()
}

#[test]
fn bi_sphere_cells_on_the_segment_are_efficient_and_flat() {
    let l = landscape(TestProblem::BiSphere, &ProblemParams::default(), 100);
    let (hx, _) = l.grid.spacing();
    let mut on_segment = 0;
    for c in &l.cells {
        // the segment crosses the interior of the cell
        if segment_distance(&c.x, &[-1.0, -1.0], &[1.0, 1.0]) < 0.5 * hx * 0.999
            && c.x[0].abs() < 1.0
        {
            on_segment += 1;
            assert!(c.is_locally_efficient, "cell {:?}", c.x);
            assert_eq!(c.height, 0.0);
        }
    }
    assert_eq!(on_segment, 50);
    assert_eq!(l.efficient_components(), 1);
}

#[test]
fn heights_follow_the_recurrence_everywhere() {
    for (kind, n) in [
        (TestProblem::BiSphere, 100),
        (TestProblem::Aspar, 200),
        (TestProblem::BiRosenbrock, 120),
    ] {
        let l = landscape(kind, &ProblemParams::default(), n);
        assert!(l.height_violations().is_empty(), "{kind:?}");
        assert_eq!(l.resolved, l.cells.len());
        for c in &l.cells {
            assert!(c.height >= 0.0);
            if c.is_locally_efficient {
                assert_eq!(c.height, 0.0);
            }
        }
    }
}

#[test]
fn aspar_has_two_efficient_components_and_a_dominated_right_set() {
    let l = landscape(TestProblem::Aspar, &ProblemParams::default(), 200);
    assert_eq!(l.efficient_components(), 2);
    let right: Vec<&GridCellRecord> = l.efficient_cells().filter(|c| c.x[0] > 0.0).collect();
    let left: Vec<&GridCellRecord> = l.efficient_cells().filter(|c| c.x[0] < 0.0).collect();
    assert!(!right.is_empty() && !left.is_empty());
    assert!(right.iter().any(|c| c.domination_count > 0));
    assert!(left.iter().any(|c| c.domination_count == 0));
    // the global front lies on the left set only
    assert!(right.iter().all(|c| c.domination_count > 0));
    for c in l.efficient_cells() {
        assert_eq!(c.log_domination, (c.domination_count as f64).ln_1p());
    }
}

#[test]
fn domination_counts_ignore_objective_scaling() {
    let scaled = ProblemParams {
        scale: [100.0, 1.0],
        ..ProblemParams::default()
    };
    for kind in [TestProblem::BiSphere, TestProblem::Aspar] {
        let a = landscape(kind, &ProblemParams::default(), 100);
        let b = landscape(kind, &scaled, 100);
        assert_eq!(b.cells[7].f.f1(), 100.0 * a.cells[7].f.f1());
        let counts = |l: &Landscape| {
            l.cells
                .iter()
                .map(|c| (c.is_locally_efficient, c.domination_count))
                .collect::<Vec<_>>()
        };
        assert_eq!(counts(&a), counts(&b), "{kind:?}");
    }
}

#[test]
fn domination_counts_by_hand() {
    let o = ObjectiveVector::new;
    assert_eq!(
        domination_counts(&[o(0.0, 1.0), o(0.5, 0.5), o(1.0, 0.0)]),
        vec![0, 0, 0]
    );
    assert_eq!(
        domination_counts(&[o(0.0, 0.0), o(1.0, 1.0), o(0.5, 2.0)]),
        vec![0, 1, 1]
    );
    assert_eq!(domination_counts(&[o(1.0, 1.0), o(1.0, 1.0)]), vec![0, 0]);
}

#[test]
fn grid_needs_two_dimensions() {
    let b3 = BoxBounds::cube(3, -1.0, 1.0).unwrap();
    assert!(matches!(
        GridSpec::new(b3, (10, 10)),
        Err(MoleError::DimensionMismatch { .. })
    ));
    let params = ProblemParams {
        dimension: 3,
        ..ProblemParams::default()
    };
    let mut mop = make_test_problem(TestProblem::BiSphere, &params).unwrap();
    let grid = GridSpec::new(BoxBounds::cube(2, -1.0, 1.0).unwrap(), (10, 10)).unwrap();
    assert!(matches!(
        compute_landscape(&mut mop, &grid, MogVariant::GeometricMean, DEFAULT_GRID_EPS),
        Err(MoleError::DimensionMismatch { .. })
    ));
    assert!(GridSpec::new(BoxBounds::cube(2, -1.0, 1.0).unwrap(), (1, 10)).is_err());
}
