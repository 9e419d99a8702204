//! Classifiers written from scratch: an RBF-kernel SVM trained with SMO,
//! a Gini random forest, and majority-vote temporal smoothing.

mod forest;
mod svm;
mod vote;

pub use forest::{
    best_split, forest_predict, gini_impurity, train_random_forest, ForestModel, ForestParams,
    Node, Split, MAX_TREE_DEPTH,
};
pub use svm::{
    dual_objective, kernel_rbf, scale_gamma, solve_smo, svm_predict, train_svm_smo, SmoParams,
    SmoSolution, SvmModel,
};
pub use vote::{majority_vote, sliding_window_vote};
