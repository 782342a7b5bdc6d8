//! Refinement checking along the corpus chain, then with a weakened guard.

use dynrbac::checker::{check_refinement, CheckOptions};
use dynrbac::corpus;
use dynrbac::dsl::ast::Expr;
use dynrbac::dsl::compile;

fn main() {
    let abs = compile(&corpus::machine("rms_abs")).unwrap();
    let ref1 = compile(&corpus::machine("rms_ref1")).unwrap();
    let ref2 = compile(&corpus::machine("rms_ref2")).unwrap();
    for (a, c) in [(&abs, &ref1), (&ref1, &ref2)] {
        let r = check_refinement(a, c, CheckOptions::default()).unwrap();
        println!("{} refines {}: {}", c.name(), a.name(), r.all_discharged());
    }

    let mut weak = corpus::machine("rms_ref1");
    weak.event_mut("SubmitReport").unwrap().guard = Expr::Bool(true);
    let weak = compile(&weak).unwrap();
    let r = check_refinement(&abs, &weak, CheckOptions::default()).unwrap();
    for v in r.violations() {
        println!("violated: {} ({} steps)", v.kind, v.trace().map_or(0, |t| t.len()));
    }
}
