//! Valence classifiers over compressed measurement vectors.

mod cv;
mod gnb;
mod knn;
mod mlp;
mod standardize;

pub use cv::{
    accuracy_of, assemble_report, confusion_matrix, cross_validate, macro_f1, run_fold,
    Classifier, ClassifierConfig, Confusion, EvalReport, FoldOutcome,
};
pub use gnb::{gnb_fit, gnb_predict, ClassGaussian, GnbModel, VAR_FLOOR};
pub use knn::{knn_predict, KnnModel};
pub use mlp::{
    mlp_predict, mlp_train, Activation, Dense, EarlyStopping, MlpConfig, MlpModel, MlpNetwork,
    MlpTrainer, Optimizer, Prediction,
};
pub use standardize::{standardize_apply, standardize_fit, Standardizer, STD_FLOOR};
