//! Access decisions as a report moves through its lifecycle.

use dynrbac::corpus;
use dynrbac::dsl::compile;
use dynrbac::engine::access::{decide_access, overlay_owner};
use dynrbac::engine::{apply_event, initial_state, Binding, Value};
use dynrbac::model::{DataId, Right, UserId};

fn main() {
    let m = compile(&corpus::machine("rms_ref2")).unwrap();
    let mut ctx = corpus::context();
    let r1 = DataId::new("r1");
    let mut s = initial_state(&m).unwrap();

    for (event, user) in [
        ("CreateReport", "u1"),
        ("SubmitReport", "u1"),
        ("ReturnReport", "c1"),
        ("SubmitReport", "u1"),
        ("ApproveReport", "c1"),
        ("RegisterReport", "a1"),
    ] {
        let b = Binding(vec![("u".into(), Value::elem(user)), ("rp".into(), Value::elem("r1"))]);
        s = apply_event(&m, &s, event, &b, &[]).unwrap();
        overlay_owner(&mut ctx, &m, &s);
        println!("after {event} by {user}:");
        for who in ["u1", "u2", "c1", "a1"] {
            let allowed: Vec<&str> = Right::ALL
                .iter()
                .filter(|&&r| {
                    let d = decide_access(&m, &s, &ctx, &UserId::new(who), r, &r1).unwrap();
                    d.verdict == dynrbac::engine::access::Verdict::Allow
                })
                .map(|r| r.name())
                .collect();
            println!("  {who}: {{{}}}", allowed.join(", "));
        }
    }

    let d = decide_access(&m, &s, &ctx, &UserId::new("u1"), Right::W, &r1).unwrap();
    println!("u1 W r1 => {} ({})", d.verdict, d.justification);
}
