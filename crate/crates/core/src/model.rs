//! RBAC primitives: users, roles, rights, data, and the relations between them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// A basic access right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Right {
    C,
    R,
    W,
    D,
}

impl Right {
    pub const ALL: [Right; 4] = [Right::C, Right::R, Right::W, Right::D];

    pub fn name(self) -> &'static str {
        match self {
            Right::C => "C",
            Right::R => "R",
            Right::W => "W",
            Right::D => "D",
        }
    }
}

impl fmt::Display for Right {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Right {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "C" => Ok(Right::C),
            "R" => Ok(Right::R),
            "W" => Ok(Right::W),
            "D" => Ok(Right::D),
            other => Err(ModelError::UnknownIdentifier(other.to_string())),
        }
    }
}

pub type RightsSet = BTreeSet<Right>;

macro_rules! name_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                $name(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }
    };
}

name_type!(
    /// Role name from a machine's ROLES set.
    Role
);
name_type!(UserId);
name_type!(DataId);

/// Lifecycle state of a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ObjectState {
    Void,
    Created,
    Submitted,
    Approved,
    Archived,
}

impl ObjectState {
    pub const ALL: [ObjectState; 5] = [
        ObjectState::Void,
        ObjectState::Created,
        ObjectState::Submitted,
        ObjectState::Approved,
        ObjectState::Archived,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ObjectState::Void => "VOID",
            ObjectState::Created => "CREATED",
            ObjectState::Submitted => "SUBMITTED",
            ObjectState::Approved => "APPROVED",
            ObjectState::Archived => "ARCHIVED",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|st| st.name() == s)
    }
}

impl fmt::Display for ObjectState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

/// Who holds which roles, and who is associated with whom.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AccessContext {
    /// UR_Rel: total over declared users.
    pub user_roles: BTreeMap<UserId, BTreeSet<Role>>,
    /// RR_Rel: static upper bound on each role's rights.
    pub role_rights: BTreeMap<Role, RightsSet>,
    pub owner: BTreeMap<DataId, UserId>,
    pub reporter_supervisor: BTreeMap<UserId, UserId>,
    pub controller_supervisor: BTreeMap<UserId, UserId>,
}

pub const REPORTER: &str = "Reporter";
pub const CONTROLLER: &str = "Controller";
pub const ADMINISTRATOR: &str = "Administrator";

impl AccessContext {
    pub fn roles_of(&self, u: &UserId) -> Result<&BTreeSet<Role>, ModelError> {
        self.user_roles
            .get(u)
            .ok_or_else(|| ModelError::UnknownIdentifier(u.to_string()))
    }

    pub fn static_rights(&self, r: &Role) -> Result<&RightsSet, ModelError> {
        self.role_rights
            .get(r)
            .ok_or_else(|| ModelError::UnknownIdentifier(r.to_string()))
    }

    pub fn has_role(&self, u: &UserId, role: &str) -> bool {
        self.user_roles
            .get(u)
            .is_some_and(|rs| rs.iter().any(|r| r.as_str() == role))
    }

    /// Violations of the context's structural rules; empty when well-formed.
    pub fn check(&self) -> Vec<String> {
        let mut problems = Vec::new();
        for (u, roles) in &self.user_roles {
            for r in roles {
                if !self.role_rights.contains_key(r) {
                    problems.push(format!("user {u} holds undeclared role {r}"));
                }
            }
        }
        for u in self.user_roles.keys() {
            if self.has_role(u, REPORTER) {
                match self.reporter_supervisor.get(u) {
                    Some(c) if self.has_role(c, CONTROLLER) => {}
                    Some(c) => problems.push(format!("supervisor {c} of reporter {u} is not a controller")),
                    None => problems.push(format!("reporter {u} has no supervising controller")),
                }
            }
            if self.has_role(u, CONTROLLER) {
                match self.controller_supervisor.get(u) {
                    Some(a) if self.has_role(a, ADMINISTRATOR) => {}
                    Some(a) => problems.push(format!("supervisor {a} of controller {u} is not an administrator")),
                    None => problems.push(format!("controller {u} has no supervising administrator")),
                }
            }
        }
        for (d, u) in &self.owner {
            if !self.user_roles.contains_key(u) {
                problems.push(format!("owner {u} of {d} is not a declared user"));
            }
        }
        problems
    }

    /// Parses the `.ctx` format:
    ///
    /// ```text
    /// rights Reporter {C, R, W, D}
    /// user u1 roles {Reporter}
    /// owner r1 = u1
    /// supervisor u1 = c1
    /// ```
    ///
    /// `supervisor` lines are filed under the reporter or controller map by the
    /// supervised user's role, so `user` lines must come first.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut ctx = AccessContext::default();
        let mut supervisors = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split("--").next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: &str| ModelError::Syntax {
                line: line_no,
                message: message.to_string(),
            };
            let (head, rest) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| err("incomplete line"))?;
            let rest = rest.trim();
            match head {
                "user" => {
                    let (name, rest) = rest
                        .split_once(char::is_whitespace)
                        .ok_or_else(|| err("expected `user <name> roles {..}`"))?;
                    let rest = rest
                        .trim()
                        .strip_prefix("roles")
                        .ok_or_else(|| err("expected `roles`"))?;
                    let roles = parse_braced(rest).ok_or_else(|| err("expected `{role, ...}`"))?;
                    ctx.user_roles
                        .insert(UserId::new(name), roles.into_iter().map(Role::new).collect());
                }
                "rights" => {
                    let (name, rest) = rest
                        .split_once(char::is_whitespace)
                        .ok_or_else(|| err("expected `rights <role> {..}`"))?;
                    let rights = parse_braced(rest).ok_or_else(|| err("expected `{right, ...}`"))?;
                    let rights = rights
                        .iter()
                        .map(|r| r.parse::<Right>())
                        .collect::<Result<RightsSet, _>>()?;
                    ctx.role_rights.insert(Role::new(name), rights);
                }
                "owner" | "supervisor" => {
                    let (lhs, rhs) = rest.split_once('=').ok_or_else(|| err("expected `<a> = <b>`"))?;
                    let (lhs, rhs) = (lhs.trim(), rhs.trim());
                    if lhs.is_empty() || rhs.is_empty() {
                        return Err(err("expected `<a> = <b>`"));
                    }
                    if head == "owner" {
                        ctx.owner.insert(DataId::new(lhs), UserId::new(rhs));
                    } else {
                        supervisors.push((line_no, UserId::new(lhs), UserId::new(rhs)));
                    }
                }
                _ => return Err(err(&format!("unknown directive `{head}`"))),
            }
        }
        for (line, u, sup) in supervisors {
            if ctx.has_role(&u, REPORTER) {
                ctx.reporter_supervisor.insert(u, sup);
            } else if ctx.has_role(&u, CONTROLLER) {
                ctx.controller_supervisor.insert(u, sup);
            } else {
                return Err(ModelError::Syntax {
                    line,
                    message: format!("{u} is neither a reporter nor a controller"),
                });
            }
        }
        Ok(ctx)
    }
}

fn parse_braced(s: &str) -> Option<Vec<String>> {
    let inner = s.trim().strip_prefix('{')?.strip_suffix('}')?;
    Some(
        inner
            .split(',')
            .map(str::trim)
            .filter(|x| !x.is_empty())
            .map(str::to_string)
            .collect(),
    )
}
