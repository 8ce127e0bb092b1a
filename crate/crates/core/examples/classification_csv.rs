//! Ingests a delimited file, writes its manifest, and plays it as a bandit:
//! each row is a round and each class an arm.
//!
//! Run with `cargo run --release --example classification_csv [FILE.csv SCHEMA]`.
//! Without arguments a small three-class file is generated first.

use std::path::PathBuf;

use banditbench::data::{ingest_csv, CsvSchema, Manifest};
use banditbench::harness::{run_grid, DataSource, DatasetRef, ExperimentConfig};
use banditbench::policies::Algorithm;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

fn toy_csv(dir: &std::path::Path) -> std::io::Result<PathBuf> {
    let mut rng = banditbench::rng::BenchRng::seed_from_u64(1);
    let mut text = String::from("x1,x2,x3,shape,label\n");
    for i in 0..600 {
        let class = i % 3;
        let mut x: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
        x[class] += 2.0;
        let shape = ["round", "square", "flat"][(class + i % 2) % 3];
        text += &format!("{:.4},{:.4},{:.4},{shape},c{class}\n", x[0], x[1], x[2]);
    }
    let path = dir.join("toy.csv");
    std::fs::write(&path, text)?;
    Ok(path)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let tmp = tempfile::tempdir()?;
    let (path, schema) = match args.as_slice() {
        [file, schema] => (PathBuf::from(file), CsvSchema::load(schema.as_ref())?),
        _ => (
            toy_csv(tmp.path())?,
            CsvSchema::parse("header = true\nlabel = label\ncategorical = shape\n")?,
        ),
    };

    let dataset = ingest_csv(&path, &schema)?;
    let manifest = Manifest::build(&dataset, &[path.clone()], true)?;
    println!(
        "{} rows, {} classes, raw dim {}, context dim {}, sha256 {}",
        manifest.n,
        manifest.num_classes,
        manifest.raw_dim,
        manifest.context_dim,
        &manifest.checksum[..12]
    );

    let source = DataSource::Classification(dataset.into());
    let horizon = manifest.n.min(500);
    for algo in [Algorithm::Uniform, Algorithm::LinUcb, Algorithm::NeuralTs] {
        let mut cfg = ExperimentConfig::new(DatasetRef::Csv { path: path.clone(), schema: None }, algo);
        cfg.horizon = horizon;
        cfg.repeats = 3;
        // The loss sums over the training set, so full-batch steps grow with
        // the history; minibatches keep the step size meaningful.
        for (k, v) in [("width", "32"), ("iters", "30"), ("lr", "0.01"), ("batch", "16"), ("lambda", "0.01")] {
            cfg.set(k, v)?;
        }
        let result = run_grid(&cfg, &source)?;
        let s = &result.best_cell().summary;
        println!("{algo:<10} mistakes over {horizon} rounds: {:.1} ± {:.1}", s.mean, s.stderr);
    }
    Ok(())
}
