//! Magic-formula force curves of the benchmark and plant tires at one load.
//!
//! Prints CSV on stdout: slip, then longitudinal and lateral force per model.
//!
//!     cargo run --example pacejka_curves > curves.csv

use simloop::dynamics::{pacejka_force, VehicleConfig};

fn main() -> anyhow::Result<()> {
    let fz = 4000.0;
    let bench = VehicleConfig::default_benchmark().tires;
    let plant = VehicleConfig::default_plant().tires;

    println!("slip,fx_benchmark,fx_plant,fy_benchmark,fy_plant");
    for i in -50..=50 {
        let s = f64::from(i) * 0.01;
        println!(
            "{s:.2},{},{},{},{}",
            pacejka_force(s, fz, &bench.longitudinal)?,
            pacejka_force(s, fz, &plant.longitudinal)?,
            pacejka_force(s, fz, &bench.lateral)?,
            pacejka_force(s, fz, &plant.lateral)?,
        );
    }

    // Peak friction: the curve saturates near F_z * D.
    let peak = (0..=1000)
        .map(|i| pacejka_force(f64::from(i) * 1e-3, fz, &bench.lateral).unwrap())
        .fold(0.0, f64::max);
    eprintln!("benchmark lateral peak {peak:.0} N, F_z * D = {:.0} N", fz * bench.lateral.d);
    Ok(())
}
