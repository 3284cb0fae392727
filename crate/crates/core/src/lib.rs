//! Local search toolkit for continuous bi-objective optimization.
//!
//! The crate discovers locally efficient sets with a multi-objective
//! descent, traces them by predictor-corrector continuation, keeps the
//! resulting piecewise-linear set models in an archive, and refines the
//! nondominated parts for hypervolume. A fixed-step gradient sliding baseline
//! and a landscape-grid exporter are included for comparison and plotting.

pub mod archive;
pub mod bench;
pub mod continuation;
pub mod descent;
pub mod error;
pub mod hypervolume;
pub mod landscape;
pub mod mog;
pub mod mogsa;
pub mod mole;
pub mod output;
pub mod postprocess;
pub mod problem;
pub mod vecops;

pub use archive::{find_containing_set, EfficientSetModel, SetNode, SetsArchive};
pub use continuation::{explore_efficient_set, ExploreConfig, ExploreResult};
pub use descent::{multi_objective_descent, DescentConfig, DescentResult, DescentTermination};
pub use error::{MoleError, Result};
pub use hypervolume::{hv_gap, hypervolume_2d, max_expected_descent};
pub use mog::{
    criticality, mog_convex_hull, mog_geometric_mean, mog_normalized, MogResult, MogVariant,
};
pub use mole::{run_mole, MoleConfig, MoleRunReport, StartingPoints};
pub use postprocess::{post_process_hv, PostProcessConfig};
pub use problem::{
    diag, dominates, make_test_problem, make_test_problem_by_name, BoxBounds, DecisionVector,
    Dominance, Mop, ObjectiveVector, ProblemParams, TestProblem,
};
