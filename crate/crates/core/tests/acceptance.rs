//! One test per acceptance criterion. Each prints a single `PASS`/`FAIL`
//! line; run with `--nocapture` to see them.

mod common;

use std::collections::HashSet;
use std::io;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{abstract_view, lifecycle_states, rights_of, sized, St};
use dynrbac::checker::{
    check, check_invariants, check_refinement, reachable_states, CheckOptions, CheckReport, ObligationKind,
};
use dynrbac::cli::{run, EXIT_OK};
use dynrbac::corpus::{self, FileKind};
use dynrbac::dsl::ast::{Expr, PolicyMachine};
use dynrbac::dsl::{compile, parse_policy, pretty_print};
use dynrbac::engine::access::{context_from_machine, decide_access, Verdict};
use dynrbac::engine::{apply_event, eval_invariant, successors, Machine, SystemState, Value};
use dynrbac::model::{DataId, Right, UserId};

fn criterion(id: u32, title: &str, body: impl FnOnce()) {
    let outcome = panic::catch_unwind(AssertUnwindSafe(body));
    match &outcome {
        Ok(()) => println!("PASS  criterion {id}: {title}"),
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            println!("FAIL  criterion {id}: {title}: {msg}");
        }
    }
    if let Err(e) = outcome {
        panic::resume_unwind(e);
    }
}

fn opts() -> CheckOptions {
    CheckOptions::default()
}

fn compiled(name: &str) -> Machine {
    compile(&corpus::machine(name)).unwrap()
}

fn cli(args: &[&str]) -> (i32, String) {
    let argv: Vec<String> = std::iter::once("dynrbac")
        .chain(args.iter().copied())
        .map(String::from)
        .collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(&argv, &mut io::empty(), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap() + &String::from_utf8(err).unwrap())
}

fn without_submit_override() -> PolicyMachine {
    let mut pm = corpus::machine("rms_ref1");
    pm.event_mut("SubmitReport")
        .unwrap()
        .actions
        .retain(|a| a.target != "permissions");
    pm
}

fn weak_submit_guard() -> PolicyMachine {
    let mut pm = corpus::machine("rms_ref1");
    pm.event_mut("SubmitReport").unwrap().guard = Expr::Bool(true);
    pm
}

#[test]
fn c1_corpus_verification() {
    criterion(1, "corpus machines discharge every obligation", || {
        for name in ["rms_abs", "rms_ref1", "rms_ref2"] {
            let started = Instant::now();
            let (code, out) = cli(&["check", &format!("corpus:{name}")]);
            let took = started.elapsed();
            assert_eq!(code, EXIT_OK, "{name}: {out}");
            assert!(took < Duration::from_secs(5), "{name} took {took:?}");

            let r = check_invariants(&compiled(name), opts()).unwrap();
            assert!(r.all_discharged(), "{name}");
            assert!(r.find(&ObligationKind::Init).is_some());
            assert!(r
                .obligations
                .iter()
                .any(|o| matches!(o.kind, ObligationKind::Inv { .. })));
        }
    });
}

#[test]
fn c2_reachability_oracle() {
    criterion(
        2,
        "rms_abs reaches 5, 25, 125 states, matching the brute-force enumerator",
        || {
            for (n, expected) in [(1, 5), (2, 25), (3, 125)] {
                let m = sized(corpus::machine("rms_abs"), n);
                let states = reachable_states(&m, opts()).unwrap();
                let oracle = lifecycle_states(n);
                assert_eq!(states.len(), expected, "{n} report(s)");
                assert_eq!(oracle.len(), expected, "oracle, {n} report(s)");
                let seen: HashSet<_> = states.iter().map(|s| abstract_view(&m, s, n)).collect();
                assert_eq!(seen, oracle, "{n} report(s)");
            }
        },
    );
}

#[test]
fn c3_state_permission_invariants() {
    criterion(
        3,
        "state to permission equalities hold in every reachable rms_ref1 state",
        || {
            let labels = ["inv_CREATED", "inv_SUBMITTED", "inv_APPROVED", "inv_ARCHIVED"];
            for n in [2, 3] {
                let m = sized(corpus::machine("rms_ref1"), n);
                let r = check_invariants(&m, opts()).unwrap();
                assert!(r.all_discharged());
                for l in labels {
                    assert!(
                        r.obligations
                            .iter()
                            .any(|o| matches!(&o.kind, ObligationKind::Inv { invariant, .. } if invariant == l)),
                        "{l} not checked"
                    );
                }

                let idx: Vec<usize> = labels
                    .iter()
                    .map(|l| m.invariants.iter().position(|i| i.label == *l).unwrap())
                    .collect();
                for s in reachable_states(&m, opts()).unwrap() {
                    for &i in &idx {
                        assert!(eval_invariant(&m, &s, i).unwrap());
                    }
                    for (k, (st, _)) in abstract_view(&m, &s, n).into_iter().enumerate() {
                        let rp = format!("r{}", k + 1);
                        let got = ["Reporter", "Controller", "Administrator"].map(|role| rights_of(&m, &s, role, &rp));
                        assert_eq!(got, st.rights().map(String::from), "{rp} in {}", st.name());
                    }
                }
            }
        },
    );
}

#[test]
fn c4_mutation_sensitivity() {
    criterion(
        4,
        "dropped submit override and weakened submit guard are both caught",
        || {
            let m = compile(&without_submit_override()).unwrap();
            let r = check_invariants(&m, opts()).unwrap();
            let kind = ObligationKind::Inv {
                invariant: "inv_SUBMITTED".into(),
                event: "SubmitReport".into(),
            };
            let o = r.find(&kind).expect("obligation listed");
            let events: Vec<&str> = o
                .trace()
                .expect("violated")
                .steps
                .iter()
                .map(|s| s.event.as_str())
                .collect();
            assert_eq!(events, ["CreateReport", "SubmitReport"]);

            let abs = compiled("rms_abs");
            let weak = compile(&weak_submit_guard()).unwrap();
            let r = check_refinement(&abs, &weak, opts()).unwrap();
            let grd = r
                .find(&ObligationKind::GuardStrengthening {
                    event: "SubmitReport".into(),
                })
                .unwrap();
            assert!(!grd.is_discharged());
        },
    );
}

#[test]
fn c5_refinement_chain() {
    criterion(5, "rms_abs <- rms_ref1 <- rms_ref2 refinements discharge", || {
        let (abs, ref1, ref2) = (compiled("rms_abs"), compiled("rms_ref1"), compiled("rms_ref2"));
        for (a, c) in [(&abs, &ref1), (&ref1, &ref2)] {
            let r = check_refinement(a, c, opts()).unwrap();
            assert!(r.all_discharged(), "{}", r.to_text(c));
            for ev in &c.events {
                let grd = ObligationKind::GuardStrengthening { event: ev.name.clone() };
                let sim = ObligationKind::Simulation { event: ev.name.clone() };
                assert!(r.find(&grd).is_some(), "GRD {}", ev.name);
                assert!(r.find(&sim).is_some(), "SIM {}", ev.name);
            }
        }
        for (a, c) in [
            ("corpus:rms_abs", "corpus:rms_ref1"),
            ("corpus:rms_ref1", "corpus:rms_ref2"),
        ] {
            let (code, out) = cli(&["refine", a, c]);
            assert_eq!(code, EXIT_OK, "{out}");
        }
    });
}

fn owner(m: &Machine, s: &SystemState, rp: &str) -> Option<String> {
    let o = s.get(m, "owner")?.apply(&Value::elem(rp))?;
    o.as_elem().map(str::to_string)
}

fn allowed(m: &Machine, s: &SystemState, user: &str, rp: &str) -> Vec<Right> {
    let ctx = context_from_machine(m, s).unwrap();
    Right::ALL
        .into_iter()
        .filter(|&r| {
            let d = decide_access(m, s, &ctx, &UserId::new(user), r, &DataId::new(rp)).unwrap();
            d.verdict == Verdict::Allow
        })
        .collect()
}

#[test]
fn c6_access_policy_conformance() {
    criterion(
        6,
        "owners cannot alter submitted reports and regain W, D on return",
        || {
            let mut returns = 0;
            let mut checked = 0;
            for (n, users) in [(2, 2), (3, 2), (2, 3)] {
                let mut pm = corpus::machine("rms_ref2");
                corpus::with_users(&mut pm, users).unwrap();
                let m = sized(pm, n);
                let states = reachable_states(&m, opts()).unwrap();
                for s in &states {
                    for (k, (st, _)) in abstract_view(&m, s, n).into_iter().enumerate() {
                        let rp = format!("r{}", k + 1);
                        let Some(u) = owner(&m, s, &rp) else { continue };
                        let rights = allowed(&m, s, &u, &rp);
                        match st {
                            St::Created => assert_eq!(rights, [Right::R, Right::W, Right::D], "{rp} owned by {u}"),
                            St::Submitted | St::Approved | St::Archived => {
                                assert!(
                                    !rights.contains(&Right::W) && !rights.contains(&Right::D),
                                    "{rp}: {rights:?}"
                                )
                            }
                            St::Void => {}
                        }
                        checked += 1;
                    }
                    for (step, post) in successors(&m, s).unwrap() {
                        if m.events[step.event].name != "ReturnReport" {
                            continue;
                        }
                        let rp = step.binding.get("rp").and_then(Value::as_elem).unwrap().to_string();
                        let u = owner(&m, &post, &rp).unwrap();
                        let rights = allowed(&m, &post, &u, &rp);
                        assert!(
                            rights.contains(&Right::W) && rights.contains(&Right::D),
                            "{rp}: {rights:?}"
                        );
                        returns += 1;
                    }
                }
            }
            assert!(returns > 0 && checked > 0);
        },
    );
}

fn replays_with_apply_event(m: &Machine, r: &CheckReport) -> usize {
    let mut n = 0;
    for o in r.violations() {
        let t = o.trace().expect("violations carry traces");
        for (i, step) in t.steps.iter().enumerate() {
            let next = apply_event(m, &t.states[i], &step.event, &step.binding, &step.choice).unwrap();
            assert_eq!(next, t.states[i + 1], "{} step {i}", o.kind);
        }
        if let ObligationKind::Inv { invariant, .. } = &o.kind {
            let idx = m.invariants.iter().position(|v| &v.label == invariant).unwrap();
            assert!(!eval_invariant(m, t.last_state().unwrap(), idx).unwrap(), "{}", o.kind);
        }
        n += 1;
    }
    n
}

#[test]
fn c7_determinism_and_replay() {
    criterion(
        7,
        "violated traces replay and worker count does not change reports",
        || {
            let mutant = compile(&without_submit_override()).unwrap();
            let mut pm = corpus::machine("rms_ref1");
            pm.event_mut("ReturnReport").unwrap().actions.pop();
            pm.event_mut("DeleteReport").unwrap().actions.pop();
            let second = compile(&pm).unwrap();
            let weak = compile(&weak_submit_guard()).unwrap();
            let abs = compiled("rms_abs");

            let mut replayed = 0;
            for m in [&mutant, &second] {
                replayed += replays_with_apply_event(m, &check_invariants(m, opts()).unwrap());
            }
            replayed += replays_with_apply_event(&weak, &check_refinement(&abs, &weak, opts()).unwrap());
            assert!(replayed >= 3, "{replayed}");

            let with = |workers| CheckOptions { workers, ..opts() };
            let mut machines: Vec<Machine> = ["rms_abs", "rms_ref1", "rms_ref2"].map(compiled).into();
            machines.push(mutant);
            for m in &machines {
                let one = check(m, None, with(1)).unwrap();
                let four = check(m, None, with(4)).unwrap();
                assert_eq!(one, four, "{}", m.name());
                assert_eq!(one.to_text(m), four.to_text(m));
            }
            let one = check_refinement(&abs, &weak, with(1)).unwrap();
            let four = check_refinement(&abs, &weak, with(4)).unwrap();
            assert_eq!(one, four);

            let (c1, o1) = cli(&["check", "corpus:rms_ref2", "--workers", "1", "--format", "records"]);
            let (c4, o4) = cli(&["check", "corpus:rms_ref2", "--workers", "4", "--format", "records"]);
            assert_eq!(c1, c4);
            let strip = |s: &str| {
                s.lines()
                    .filter(|l| !l.starts_with("elapsed"))
                    .collect::<Vec<_>>()
                    .join("\n")
            };
            assert_eq!(strip(&o1), strip(&o4));
        },
    );
}

/// Byte offsets of `needle` standing alone as a token, outside comments.
fn token_sites(text: &str, needle: &str) -> Vec<usize> {
    let word = needle.chars().all(char::is_alphanumeric);
    let mut sites = Vec::new();
    let mut base = 0;
    for line in text.split_inclusive('\n') {
        let code = line.find("--").map_or(line, |c| &line[..c]);
        for (i, _) in code.match_indices(needle) {
            let before = code[..i].chars().next_back();
            let after = code[i + needle.len()..].chars().next();
            let boundary = |c: Option<char>| c.is_none_or(|c| !(c.is_alphanumeric() || c == '_'));
            if !word || (boundary(before) && boundary(after)) {
                sites.push(base + i);
            }
        }
        base += line.len();
    }
    sites
}

fn mutate(text: &str, rng: &mut ChaCha8Rng) -> String {
    loop {
        let (needle, kind) = match rng.gen_range(0..6) {
            0 => (["(", ")", "{", "}", "[", "]"][rng.gen_range(0..6)], "delete"),
            1 => (" ", "insert )"),
            2 => (":=", "delete"),
            3 => ("then", "delete"),
            4 => ("where", "delete"),
            _ => (":=", "duplicate"),
        };
        let sites = token_sites(text, needle);
        if sites.is_empty() {
            continue;
        }
        let at = sites[rng.gen_range(0..sites.len())];
        let mut out = text.to_string();
        match kind {
            "delete" => out.replace_range(at..at + needle.len(), " "),
            "insert )" => out.insert_str(at, " )"),
            _ => out.insert_str(at, ":= "),
        }
        return out;
    }
}

#[test]
fn c8_parser_round_trip_and_fuzzing() {
    criterion(
        8,
        "pretty-print round trip is a fixpoint and 200 mutants give positioned errors",
        || {
            let machines: Vec<&str> = corpus::corpus_manifest()
                .into_iter()
                .filter(|f| f.kind == FileKind::Machine)
                .map(|f| f.text)
                .collect();
            for text in &machines {
                let m = parse_policy(text).unwrap();
                let printed = pretty_print(&m);
                let again = parse_policy(&printed).unwrap();
                assert_eq!(again, m);
                assert_eq!(pretty_print(&again), printed);
            }

            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            for i in 0..200 {
                let text = machines[i % machines.len()];
                let mutant = mutate(text, &mut rng);
                let caught = panic::catch_unwind(|| parse_policy(&mutant));
                let result = caught.unwrap_or_else(|_| panic!("mutant {i} crashed the parser"));
                let err = result.expect_err(&format!("mutant {i} parsed:\n{mutant}"));
                let p = err.pos();
                assert!(
                    p.line >= 1 && p.line as usize <= mutant.lines().count() + 1,
                    "mutant {i}: {err}"
                );
                assert!(p.col >= 1, "mutant {i}: {err}");
            }
        },
    );
}
