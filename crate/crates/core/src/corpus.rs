//! The reporting management system, shipped as embedded fixtures.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::dsl::ast::{ConstDecl, PolicyMachine};
use crate::dsl::{parse_expr, parse_policy};
use crate::model::AccessContext;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Machine,
    Context,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExpectedOutcome {
    AllDischarged,
    /// Obligations (as displayed) expected to be violated.
    Violations(Vec<String>),
    /// Not a machine; nothing to check.
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusFile {
    pub path: &'static str,
    pub kind: FileKind,
    pub text: &'static str,
    pub outcome: ExpectedOutcome,
    /// (number of reports, reachable states) at the default population.
    pub reachable: Vec<(usize, usize)>,
}

const RMS_ABS: &str = include_str!("../corpus/rms_abs.pol");
const RMS_REF1: &str = include_str!("../corpus/rms_ref1.pol");
const RMS_REF2: &str = include_str!("../corpus/rms_ref2.pol");
const RMS_USERS: &str = include_str!("../corpus/rms_users.ctx");

pub fn corpus_manifest() -> Vec<CorpusFile> {
    // One report ranges over 5 lifecycle states; in RMS_ref2 each of the 4
    // non-VOID states also records one of the two reporters as owner.
    vec![
        CorpusFile {
            path: "rms_abs.pol",
            kind: FileKind::Machine,
            text: RMS_ABS,
            outcome: ExpectedOutcome::AllDischarged,
            reachable: vec![(1, 5), (2, 25), (3, 125)],
        },
        CorpusFile {
            path: "rms_ref1.pol",
            kind: FileKind::Machine,
            text: RMS_REF1,
            outcome: ExpectedOutcome::AllDischarged,
            reachable: vec![(1, 5), (2, 25), (3, 125)],
        },
        CorpusFile {
            path: "rms_ref2.pol",
            kind: FileKind::Machine,
            text: RMS_REF2,
            outcome: ExpectedOutcome::AllDischarged,
            reachable: vec![(1, 9), (2, 81), (3, 729)],
        },
        CorpusFile {
            path: "rms_users.ctx",
            kind: FileKind::Context,
            text: RMS_USERS,
            outcome: ExpectedOutcome::NotApplicable,
            reachable: Vec::new(),
        },
    ]
}

/// Finds a fixture by file name, with or without its extension.
pub fn lookup(name: &str) -> Option<CorpusFile> {
    corpus_manifest()
        .into_iter()
        .find(|f| f.path == name || f.path.rsplit_once('.').is_some_and(|(stem, _)| stem == name))
}

/// Parses an embedded machine. Panics only if the shipped fixture is broken.
pub fn machine(name: &str) -> PolicyMachine {
    let file = lookup(name).unwrap_or_else(|| panic!("no corpus file `{name}`"));
    parse_policy(file.text).unwrap_or_else(|e| panic!("corpus file {} does not parse: {e}", file.path))
}

pub fn context() -> AccessContext {
    AccessContext::parse(RMS_USERS).expect("corpus context parses")
}

/// Writes every fixture into `dir`, creating it if needed.
pub fn export(dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for f in corpus_manifest() {
        let p = dir.join(f.path);
        fs::write(&p, f.text)?;
        written.push(p);
    }
    Ok(written)
}

/// Rewrites `REPORTS` to `{r1, ..., rN}`; false if the machine has no such set.
pub fn with_reports(m: &mut PolicyMachine, n: usize) -> bool {
    m.rewrite_set("REPORTS", (1..=n).map(|i| format!("r{i}")).collect())
}

/// Rewrites the RMS_ref2 population to `n` reporters `u1..uN`, all
/// supervised by `c1`, who is supervised by `a1`.
pub fn with_users(m: &mut PolicyMachine, n: usize) -> Result<(), String> {
    let reporters: Vec<String> = (1..=n).map(|i| format!("u{i}")).collect();
    let mut users = reporters.clone();
    users.extend(["c1".to_string(), "a1".to_string()]);
    if !m.rewrite_set("USERS", users) {
        return Err(format!("machine `{}` declares no USERS set", m.name));
    }
    let mut roles: Vec<String> = reporters.iter().map(|u| format!("{u} |-> Reporter")).collect();
    roles.push("c1 |-> Controller".into());
    roles.push("a1 |-> Administrator".into());
    let supervision: Vec<String> = reporters.iter().map(|u| format!("{u} |-> c1")).collect();
    for (name, items) in [("user_roles", roles), ("reporter_supervisor", supervision)] {
        let value = parse_expr(&format!("{{{}}}", items.join(", "))).map_err(|e| e.to_string())?;
        match m.constants.iter_mut().find(|c| c.name == name) {
            Some(c) => c.value = value,
            None => m.constants.push(ConstDecl {
                name: name.to_string(),
                value,
            }),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_accepts_stem_and_file_name() {
        assert_eq!(lookup("rms_abs").unwrap().path, "rms_abs.pol");
        assert_eq!(lookup("rms_users.ctx").unwrap().kind, FileKind::Context);
        assert!(lookup("rms").is_none());
    }

    #[test]
    fn report_rewrite() {
        let mut m = machine("rms_abs");
        assert!(with_reports(&mut m, 3));
        assert_eq!(m.set("REPORTS").unwrap().elements, ["r1", "r2", "r3"]);
    }

    #[test]
    fn user_rewrite_needs_users() {
        let mut m = machine("rms_abs");
        assert!(with_users(&mut m, 3).is_err());
        let mut m = machine("rms_ref2");
        with_users(&mut m, 3).unwrap();
        assert_eq!(m.set("USERS").unwrap().elements, ["u1", "u2", "u3", "c1", "a1"]);
    }

    #[test]
    fn context_matches_population() {
        let ctx = context();
        assert!(ctx.check().is_empty(), "{:?}", ctx.check());
        assert_eq!(ctx.user_roles.len(), 4);
    }
}
