//! Latin hypercube sample of 200 vehicles, simulated in parallel and written
//! to `dataset_small.csv`.

use axlesim::dataset::{generate_dataset, SamplingSpec};
use axlesim::road::generate_profile;
use axlesim::{RoadSpec, SimConfig, VehicleParams};

fn main() -> axlesim::Result<()> {
    let cfg = SimConfig::default();
    let road = generate_profile(&RoadSpec {
        length: cfg.road_length_needed() + 10.0,
        ..RoadSpec::default()
    })?;
    let spec = SamplingSpec {
        sample_count: 200,
        ..SamplingSpec::default()
    };
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let (ds, report) = generate_dataset(&spec, &VehicleParams::reference(), &road, &cfg, workers)?;
    print!("{}", report.render());
    ds.write_csv(std::io::BufWriter::new(std::fs::File::create("dataset_small.csv")?))?;
    Ok(())
}
