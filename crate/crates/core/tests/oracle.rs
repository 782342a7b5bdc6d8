mod common;

use std::collections::HashSet;

use common::{abstract_view, lifecycle_states, owned_states, rights_of, sized};
use dynrbac::checker::{reachable_states, CheckOptions};
use dynrbac::corpus;
use dynrbac::dsl::compile;

#[test]
fn oracle_counts_follow_report_independence() {
    for n in 1..=3 {
        assert_eq!(lifecycle_states(n).len(), 5usize.pow(n as u32));
        assert_eq!(owned_states(n, 2).len(), 9usize.pow(n as u32));
    }
}

#[test]
fn role_level_machines_match_oracle() {
    for name in ["rms_abs", "rms_ref1"] {
        for n in 1..=3 {
            let m = sized(corpus::machine(name), n);
            let states = reachable_states(&m, CheckOptions::default()).unwrap();
            let seen: HashSet<_> = states.iter().map(|s| abstract_view(&m, s, n)).collect();
            assert_eq!(states.len(), seen.len(), "{name}: distinct engine states collapse");
            assert_eq!(seen, lifecycle_states(n), "{name} with {n} report(s)");
        }
    }
}

#[test]
fn user_level_machine_matches_oracle() {
    for n in 1..=2 {
        for users in 1..=3 {
            let mut pm = corpus::machine("rms_ref2");
            corpus::with_users(&mut pm, users).unwrap();
            let m = sized(pm, n);
            let states = reachable_states(&m, CheckOptions::default()).unwrap();
            let seen: HashSet<_> = states.iter().map(|s| abstract_view(&m, s, n)).collect();
            assert_eq!(states.len(), seen.len());
            assert_eq!(seen, owned_states(n, users), "{n} report(s), {users} reporter(s)");
        }
    }
}

#[test]
fn three_reports_of_user_level_machine() {
    let m = sized(corpus::machine("rms_ref2"), 3);
    let states = reachable_states(&m, CheckOptions::default()).unwrap();
    assert_eq!(states.len(), 729);
}

#[test]
fn permissions_follow_the_state_table() {
    for name in ["rms_ref1", "rms_ref2"] {
        let m = compile(&corpus::machine(name)).unwrap();
        for s in reachable_states(&m, CheckOptions::default()).unwrap() {
            for (i, (st, _)) in abstract_view(&m, &s, 2).into_iter().enumerate() {
                let r = format!("r{}", i + 1);
                let got = ["Reporter", "Controller", "Administrator"].map(|role| rights_of(&m, &s, role, &r));
                assert_eq!(got, st.rights().map(String::from), "{name} {r} in {}", st.name());
            }
        }
    }
}

#[test]
fn no_events_means_only_the_initial_state() {
    let pm = dynrbac::dsl::parse_policy("machine M set S = {a} variable x : set of S init x := {} end end").unwrap();
    let m = compile(&pm).unwrap();
    assert_eq!(reachable_states(&m, CheckOptions::default()).unwrap().len(), 1);
}
