//! Mass, damping and stiffness matrices of the reference vehicle, plus the
//! static axle loads under gravity.

use axlesim::vehicle::{assemble_matrices, force_vector, static_axle_loads};
use axlesim::VehicleParams;

fn main() -> axlesim::Result<()> {
    let v = VehicleParams::reference();
    println!("axles: {}, offsets from CG: {:?} m", v.axle_count, v.axle_offsets);
    let m = assemble_matrices(&v)?;
    println!("M = {:.1}", m.mass);
    println!("C = {:.1}", m.damping);
    println!("K = {:.1}", m.stiffness);

    let f = force_vector(&v, &[0.01, 0.0, 0.0, 0.0])?;
    println!("F for a 10 mm bump under axle 1 = {:.1}", f);

    let loads = static_axle_loads(&v, 9.81)?;
    let total: f64 = loads.iter().sum();
    println!(
        "static axle loads [N]: {loads:.1?} (sum {total:.1}, weight {:.1})",
        v.total_mass() * 9.81
    );
    Ok(())
}
