//! A seeded random walk; the same seed always gives the same run.

use dynrbac::corpus;
use dynrbac::dsl::compile;
use dynrbac::engine::simulate::Simulation;

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let m = compile(&corpus::machine("rms_ref2")).unwrap();
    let mut sim = Simulation::new(&m, seed).unwrap();
    println!("init => {}", sim.state().render(&m));
    for _ in 0..12 {
        match sim.step().unwrap() {
            Some(step) => println!("{}", step.line(&m)),
            None => break,
        }
    }
    println!("final => {}", sim.state().render(&m));
}
