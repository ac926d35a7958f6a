//! ISO 8608 road profiles for every roughness class, and a class C profile
//! written to `road_c.csv`.

use axlesim::road::generate_profile;
use axlesim::{IsoClass, RoadSpec};

fn main() -> axlesim::Result<()> {
    for class in [IsoClass::A, IsoClass::B, IsoClass::C, IsoClass::D, IsoClass::E] {
        let spec = RoadSpec {
            iso_class: class,
            length: 500.0,
            ..RoadSpec::default()
        };
        let road = generate_profile(&spec)?;
        println!(
            "class {class}: Gd(n0) = {:.1e} m^3, rms = {:.2} mm",
            spec.psd_at_reference(),
            road.rms() * 1e3
        );
    }

    let road = generate_profile(&RoadSpec::default())?;
    println!("height at 12.34 m: {:.5} m", road.height_at(12.34)?);
    road.write_csv(std::io::BufWriter::new(std::fs::File::create("road_c.csv")?))?;
    println!("wrote road_c.csv ({} samples)", road.elevations.len());
    Ok(())
}
