//! Exhaustive invariant checking, before and after breaking an event.

use dynrbac::checker::{check_invariants, CheckOptions};
use dynrbac::corpus;
use dynrbac::dsl::compile;

fn main() {
    let m = compile(&corpus::machine("rms_ref1")).unwrap();
    let report = check_invariants(&m, CheckOptions::default()).unwrap();
    println!(
        "{}: {} obligations, all discharged: {}, {} states",
        report.machine,
        report.obligations.len(),
        report.all_discharged(),
        report.reachable_count
    );

    // SubmitReport without its permission update leaves the Reporter able
    // to write a submitted report.
    let mut broken = corpus::machine("rms_ref1");
    broken
        .event_mut("SubmitReport")
        .unwrap()
        .actions
        .retain(|a| a.target != "permissions");
    let m = compile(&broken).unwrap();
    let report = check_invariants(&m, CheckOptions::default()).unwrap();
    print!("{}", report.to_text(&m));
}
