//! Parse a machine, print its canonical form, and show what validation
//! reports for a typo.

use dynrbac::corpus;
use dynrbac::dsl::{parse_policy, pretty_print, validate};

fn main() {
    let abs = corpus::machine("rms_abs");
    let ref1 = corpus::machine("rms_ref1");
    println!("{}", pretty_print(&abs));
    println!(
        "{} refines {:?}: {} diagnostic(s)",
        ref1.name,
        ref1.refines,
        validate(&ref1, Some(&abs)).len()
    );

    let typo =
        corpus::lookup("rms_abs")
            .unwrap()
            .text
            .replacen("report_state(rp) = CREATED", "report_state(rp) = CRETED", 1);
    let m = parse_policy(&typo).expect("still parses");
    for d in validate(&m, None) {
        println!("{d}");
    }

    match parse_policy("machine M\ninit\n  x := \nend end") {
        Ok(_) => unreachable!(),
        Err(e) => println!("{e} (line {})", e.pos().line),
    }
}
