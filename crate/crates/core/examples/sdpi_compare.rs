//! SDPI of a few design variants relative to the reference vehicle. Values
//! below 1 mean better suspension performance than the baseline.

use axlesim::dataset::{apply_inputs, evaluate_vehicle, vehicle_inputs, InputParam};
use axlesim::road::generate_profile;
use axlesim::{sdpi, RoadSpec, SimConfig, VehicleParams};

fn main() -> axlesim::Result<()> {
    let cfg = SimConfig::default();
    let road = generate_profile(&RoadSpec {
        length: cfg.road_length_needed() + 10.0,
        ..RoadSpec::default()
    })?;
    let base = VehicleParams::reference();
    let base_metrics = evaluate_vehicle(&base, &road, &cfg)?;

    for p in InputParam::ALL {
        for factor in [0.8, 1.2] {
            let mut x = vehicle_inputs(&base);
            x[p as usize] *= factor;
            let v = apply_inputs(&base, &x);
            let m = evaluate_vehicle(&v, &road, &cfg)?;
            println!("{:>3} x{factor}: SDPI = {:.4}", p.label(), sdpi(&m, &base_metrics)?);
        }
    }
    Ok(())
}
