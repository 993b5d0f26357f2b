//! Trains the linear pixel classifier and reports how it separates the classes.
//!
//! `cargo run --release --example train_classifier`

use streaklite::classifier::{auc, format_model, kfold_validate, rates_at, roc_curve, train, TrainConfig};
use streaklite::dataset::{generate_rows, DatasetConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let recipe = DatasetConfig::default();
    let rows = generate_rows(40_000, &recipe, 1)?;
    let test = generate_rows(20_000, &recipe, 2)?;
    let config = TrainConfig::default();

    let folds = kfold_validate(&rows, 5, &config)?;
    let per_fold: Vec<String> = folds.accuracies.iter().map(|a| format!("{:.3}", a)).collect();
    println!("5-fold accuracy {:.4} ({})", folds.mean, per_fold.join(" "));

    let model = train(&rows, &config)?;
    let (fpr, tpr) = rates_at(&model, &test, model.threshold);
    println!("held-out FPR {fpr:.3}, TPR {tpr:.3}, AUC {:.3}", auc(&roc_curve(&model, &test)?));

    println!("\ntile weights (row-major, centre tile in the middle):");
    for row in model.weight_grid() {
        println!("{}", row.iter().map(|w| format!("{w:8.4}")).collect::<Vec<_>>().join(" "));
    }
    println!("max-gray weight {:.4}", model.weights[25]);

    println!("\nmodel file:\n{}", format_model(&model));
    Ok(())
}
