//! Access decisions over a machine state's `permissions` relation.
//!
//! A role grants a right on a report when the state's permissions for that
//! (role, report) pair contain it and the acting user is in scope: the owner
//! for Reporter, the owner's supervising controller for Controller, and that
//! controller's administrator for Administrator. Other roles are unscoped.

use std::fmt;

use super::machine::Machine;
use super::value::Value;
use super::{EngineError, SystemState};
use crate::model::{
    AccessContext, DataId, ModelError, Right, RightsSet, Role, UserId, ADMINISTRATOR, CONTROLLER, REPORTER,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Allow,
    Deny,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Allow => "Allow",
            Verdict::Deny => "Deny",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Justification {
    /// `role` holds the right in `permissions` and the user is in scope.
    Granted {
        role: Role,
        permissions: RightsSet,
    },
    NoRoles,
    /// No role of the user holds the right; each consulted role with its permissions.
    NotPermitted {
        consulted: Vec<(Role, RightsSet)>,
    },
    /// The first role that holds the right, and the scope condition it failed.
    OutOfScope {
        role: Role,
        condition: String,
    },
}

impl fmt::Display for Justification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |s: &RightsSet| {
            let names: Vec<&str> = s.iter().map(|r| r.name()).collect();
            format!("{{{}}}", names.join(", "))
        };
        match self {
            Justification::Granted { role, permissions } => {
                write!(f, "role {role} holds permissions {}", show(permissions))
            }
            Justification::NoRoles => f.write_str("user holds no roles"),
            Justification::NotPermitted { consulted } => {
                f.write_str("right not in permissions of ")?;
                for (i, (r, p)) in consulted.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{r} {}", show(p))?;
                }
                Ok(())
            }
            Justification::OutOfScope { role, condition } => {
                write!(f, "role {role} out of scope: {condition}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessDecision {
    pub verdict: Verdict,
    pub justification: Justification,
    /// Set when the verdict was reached without a user-level scope check.
    pub note: Option<String>,
}

/// Rights the state grants `role` on `d`.
pub fn permissions_of(m: &Machine, s: &SystemState, role: &Role, d: &DataId) -> Result<RightsSet, EngineError> {
    let perms = s.get(m, "permissions").ok_or_else(|| {
        EngineError::UnsupportedQuery(format!("machine `{}` has no `permissions` variable", m.name()))
    })?;
    let key = Value::pair(Value::elem(role.as_str()), Value::elem(d.as_str()));
    let mut out = RightsSet::new();
    if let Some(rights) = perms.apply(&key) {
        for name in rights.elem_names() {
            out.insert(name.parse()?);
        }
    }
    Ok(out)
}

fn scope(ctx: &AccessContext, role: &Role, u: &UserId, d: &DataId) -> Result<(), Option<String>> {
    let owner = || ctx.owner.get(d).ok_or_else(|| Some(format!("{d} has no owner")));
    match role.as_str() {
        REPORTER => {
            let o = owner()?;
            if o == u {
                Ok(())
            } else {
                Err(Some(format!("owner({d}) = {o}, not {u}")))
            }
        }
        CONTROLLER => {
            let o = owner()?;
            match ctx.reporter_supervisor.get(o) {
                Some(c) if c == u => Ok(()),
                Some(c) => Err(Some(format!("reporter_supervisor({o}) = {c}, not {u}"))),
                None => Err(Some(format!("{o} has no supervising controller"))),
            }
        }
        ADMINISTRATOR => {
            let o = owner()?;
            let c = ctx
                .reporter_supervisor
                .get(o)
                .ok_or_else(|| Some(format!("{o} has no supervising controller")))?;
            match ctx.controller_supervisor.get(c) {
                Some(a) if a == u => Ok(()),
                Some(a) => Err(Some(format!("controller_supervisor({c}) = {a}, not {u}"))),
                None => Err(Some(format!("{c} has no supervising administrator"))),
            }
        }
        _ => Err(None),
    }
}

pub fn decide_access(
    m: &Machine,
    s: &SystemState,
    ctx: &AccessContext,
    u: &UserId,
    right: Right,
    d: &DataId,
) -> Result<AccessDecision, EngineError> {
    if m.var_index("permissions").is_none() {
        return Err(EngineError::UnsupportedQuery(format!(
            "machine `{}` has no `permissions` variable",
            m.name()
        )));
    }
    let declared = m.carriers.iter().any(|c| c.elements.iter().any(|e| &**e == d.as_str()));
    if !declared {
        return Err(ModelError::UnknownIdentifier(d.to_string()).into());
    }
    let roles = ctx.roles_of(u)?;
    if roles.is_empty() {
        return Ok(AccessDecision {
            verdict: Verdict::Deny,
            justification: Justification::NoRoles,
            note: None,
        });
    }

    let mut consulted = Vec::new();
    let mut first_failure = None;
    for role in roles {
        let perms = permissions_of(m, s, role, d)?;
        if !perms.contains(&right) {
            consulted.push((role.clone(), perms));
            continue;
        }
        match scope(ctx, role, u, d) {
            Ok(()) => {
                return Ok(AccessDecision {
                    verdict: Verdict::Allow,
                    justification: Justification::Granted {
                        role: role.clone(),
                        permissions: perms,
                    },
                    note: None,
                })
            }
            Err(None) => {
                return Ok(AccessDecision {
                    verdict: Verdict::Allow,
                    justification: Justification::Granted {
                        role: role.clone(),
                        permissions: perms,
                    },
                    note: Some(format!("role {role} is answered at role granularity")),
                })
            }
            Err(Some(condition)) => {
                if first_failure.is_none() {
                    first_failure = Some(Justification::OutOfScope {
                        role: role.clone(),
                        condition,
                    });
                }
            }
        }
    }
    Ok(AccessDecision {
        verdict: Verdict::Deny,
        justification: first_failure.unwrap_or(Justification::NotPermitted { consulted }),
        note: None,
    })
}

/// Builds a context from a machine's own declarations: users from `USERS`,
/// roles from the `user_roles` relation, bounds from `static_rights`,
/// supervision from `reporter_supervisor`/`controller_supervisor`, and
/// ownership from the `owner` variable in `s`.
pub fn context_from_machine(m: &Machine, s: &SystemState) -> Result<AccessContext, EngineError> {
    let mut ctx = AccessContext::default();
    if let Some(users) = m.carrier("USERS") {
        for u in &users.elements {
            ctx.user_roles.insert(UserId::new(&**u), Default::default());
        }
    }
    if let Some(rel) = m.constant("user_roles") {
        for p in rel.as_set().into_iter().flatten() {
            if let Value::Pair(u, r) = p {
                if let (Some(u), Some(r)) = (u.as_elem(), r.as_elem()) {
                    ctx.user_roles.entry(UserId::new(u)).or_default().insert(Role::new(r));
                }
            }
        }
    }
    if let Some(roles) = m.carrier("ROLES") {
        for r in &roles.elements {
            ctx.role_rights.insert(Role::new(&**r), RightsSet::new());
        }
    }
    if let Some(bounds) = m.constant("static_rights") {
        for p in bounds.as_set().into_iter().flatten() {
            if let Value::Pair(r, rights) = p {
                if let Some(r) = r.as_elem() {
                    let mut set = RightsSet::new();
                    for name in rights.elem_names() {
                        set.insert(name.parse()?);
                    }
                    ctx.role_rights.insert(Role::new(r), set);
                }
            }
        }
    }
    for (name, target) in [
        ("reporter_supervisor", &mut ctx.reporter_supervisor),
        ("controller_supervisor", &mut ctx.controller_supervisor),
    ] {
        if let Some(rel) = m.constant(name) {
            for p in rel.as_set().into_iter().flatten() {
                if let Value::Pair(a, b) = p {
                    if let (Some(a), Some(b)) = (a.as_elem(), b.as_elem()) {
                        target.insert(UserId::new(a), UserId::new(b));
                    }
                }
            }
        }
    }
    overlay_owner(&mut ctx, m, s);
    Ok(ctx)
}

/// Replaces `ctx.owner` with the state's `owner` map when the machine tracks ownership.
pub fn overlay_owner(ctx: &mut AccessContext, m: &Machine, s: &SystemState) {
    if let Some(owner) = s.get(m, "owner") {
        ctx.owner.clear();
        for p in owner.as_set().into_iter().flatten() {
            if let Value::Pair(d, u) = p {
                if let (Some(d), Some(u)) = (d.as_elem(), u.as_elem()) {
                    ctx.owner.insert(DataId::new(d), UserId::new(u));
                }
            }
        }
    }
}
