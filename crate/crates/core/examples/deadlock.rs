//! Deadlock analysis: a final predicate marks the states allowed to be stuck.

use dynrbac::checker::{check_deadlock, CheckOptions};
use dynrbac::corpus;
use dynrbac::dsl::{compile, parse_expr};

fn main() {
    let final_pred = parse_expr("!rp in reports . report_state(rp) = ARCHIVED").unwrap();

    let mut abs = corpus::machine("rms_abs");
    corpus::with_reports(&mut abs, 1);
    let m = compile(&abs).unwrap();
    let report = check_deadlock(&m, &final_pred, CheckOptions::default()).unwrap();
    println!("rms_abs, one report: deadlock free = {}", report.all_discharged());

    // Without Approve and Return a submitted report can never move on.
    let mut ref1 = corpus::machine("rms_ref1");
    corpus::with_reports(&mut ref1, 1);
    ref1.events
        .retain(|e| e.name != "ApproveReport" && e.name != "ReturnReport");
    let m = compile(&ref1).unwrap();
    let report = check_deadlock(&m, &final_pred, CheckOptions::default()).unwrap();
    print!("{}", report.to_text(&m));
}
