//! Reference vehicle over a class C road at 10 m/s: response metrics and SDPI
//! against itself, with the response written to `reference_response.csv`.

use std::time::Instant;

use axlesim::{response_metrics, sdpi, simulate, RoadSpec, SimConfig, VehicleParams};

fn main() -> axlesim::Result<()> {
    let vehicle = VehicleParams::reference();
    let cfg = SimConfig::default();
    let spec = RoadSpec {
        length: cfg.road_length_needed() + 10.0,
        ..RoadSpec::default()
    };
    let road = axlesim::road::generate_profile(&spec)?;

    let t = Instant::now();
    let resp = simulate(&vehicle, &road, &cfg)?;
    let elapsed = t.elapsed();
    let m = response_metrics(&resp, &cfg)?;

    println!("steps: {} ({:.1} ms)", resp.len() - 1, elapsed.as_secs_f64() * 1e3);
    println!("a_rms          {:.6} m/s^2", m.a_rms);
    println!("theta_ddot_rms {:.6} rad/s^2", m.theta_ddot_rms);
    println!("theta_rms      {:.6e} rad", m.theta_rms);
    println!("sws_max        {:?}", m.sws_max);
    println!("dtl_rms        {:?}", m.dtl_rms);
    let v = m.vector();
    println!("SDPI vs itself {}", sdpi(&v, &v)?);

    let out = std::fs::File::create("reference_response.csv")?;
    resp.write_csv(std::io::BufWriter::new(out))?;
    Ok(())
}
