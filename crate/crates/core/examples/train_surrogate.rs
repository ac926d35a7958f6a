//! Generates a 2000-row dataset, trains the MTL-DBN-DNN and the fully
//! connected baseline on it and compares their test errors. The MTL
//! checkpoint goes to `mtl.ckpt`.

use axlesim::dataset::{generate_dataset, SamplingSpec, TARGET_LABELS};
use axlesim::road::generate_profile;
use axlesim::surrogate::{
    dataset_matrices, evaluate, train_baseline_dnn, train_mtl, write_checkpoint, Architecture, TrainConfig,
};
use axlesim::{RoadSpec, SimConfig, VehicleParams};

fn main() -> axlesim::Result<()> {
    let cfg = SimConfig::default();
    let road = generate_profile(&RoadSpec {
        length: cfg.road_length_needed() + 10.0,
        ..RoadSpec::default()
    })?;
    let spec = SamplingSpec {
        sample_count: 2000,
        ..SamplingSpec::default()
    };
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let (ds, _) = generate_dataset(&spec, &VehicleParams::reference(), &road, &cfg, workers)?;

    let arch = Architecture::default();
    let tc = TrainConfig::default();
    let mtl = train_mtl(&ds, &arch, &tc)?;
    let dnn = train_baseline_dnn(&ds, &arch, &tc)?;

    let (x, y) = dataset_matrices(&ds, &mtl.split.test);
    for (name, model) in [("MTL-DBN-DNN", &mtl), ("DNN", &dnn)] {
        let e = evaluate(&model.net, x.view(), y.view())?;
        println!("{name}: test MAPE {:.4}", e.mape_avg);
        for (t, label) in TARGET_LABELS.iter().enumerate() {
            println!("  {label:<15} MAPE {:.4}  R2 {:.4}", e.mape[t], e.r2(t)?);
        }
    }
    write_checkpoint(&mtl.net, std::io::BufWriter::new(std::fs::File::create("mtl.ckpt")?))?;
    Ok(())
}
