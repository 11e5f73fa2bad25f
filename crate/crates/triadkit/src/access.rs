//! Session-scoped access profiles derived from the org hierarchy.
//!
//! A profile is computed once, when the session opens, from the user's
//! position in the hierarchy at that moment; later org changes never affect
//! an open session. Read scope is the position's unit subtree, write scope
//! defaults to the position's own unit, and both can be widened by declared
//! grants. Metadata is readable by everyone in scope and writable only by
//! administrative users. Decisions are pure functions of the profile, the
//! target and the operation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::appraisal::OrgStructure;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AccessError {
    #[error("org unit `{0}` does not exist")]
    UnknownUnit(String),
    #[error("role `{0}` is not a declared scenario role")]
    UnknownRole(String),
    #[error("session is already closed")]
    AlreadyClosed,
}

/// A user's place in the hierarchy for one session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrgPosition {
    pub user: String,
    pub unit: String,
    pub role: String,
    pub admin: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MetadataRights {
    None,
    Read,
    ReadWrite,
}

/// Extra per-user scope and mandatory-field policy, as declared on the
/// `user` statement.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Grants {
    pub read_units: BTreeSet<String>,
    pub write_units: BTreeSet<String>,
    /// Per concept, the attributes this profile must supply on every write.
    pub required_attributes: BTreeMap<String, BTreeSet<String>>,
}

/// Capability snapshot valid for one data-exchange session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessProfile {
    pub session: u64,
    pub read_scope: BTreeSet<String>,
    pub write_scope: BTreeSet<String>,
    pub metadata: MetadataRights,
    pub required_attributes: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionState {
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub id: u64,
    pub position: OrgPosition,
    pub state: SessionState,
}

impl Session {
    pub fn is_open(&self) -> bool {
        self.state == SessionState::Open
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    Data,
    Metadata,
}

/// What an operation wants to touch: a data object or a meta-predicate,
/// together with the org unit it is filed under.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessTarget {
    pub kind: TargetKind,
    pub unit: String,
}

impl AccessTarget {
    pub fn data(unit: impl Into<String>) -> Self {
        AccessTarget {
            kind: TargetKind::Data,
            unit: unit.into(),
        }
    }

    pub fn metadata(unit: impl Into<String>) -> Self {
        AccessTarget {
            kind: TargetKind::Metadata,
            unit: unit.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessOp {
    Read,
    Write,
}

impl fmt::Display for AccessOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AccessOp::Read => f.write_str("read"),
            AccessOp::Write => f.write_str("write"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenyReason {
    SessionClosed,
    OutOfScope,
    MetadataForbidden,
}

impl fmt::Display for DenyReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DenyReason::SessionClosed => f.write_str("SessionClosed"),
            DenyReason::OutOfScope => f.write_str("OutOfScope"),
            DenyReason::MetadataForbidden => f.write_str("MetadataForbidden"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Allow,
    Deny(DenyReason),
}

impl Decision {
    pub fn is_allow(self) -> bool {
        self == Decision::Allow
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decision::Allow => f.write_str("allow"),
            Decision::Deny(reason) => write!(f, "deny {reason}"),
        }
    }
}

/// Issues session ids and knows the declared scenario roles.
#[derive(Debug, Clone, Default)]
pub struct SessionManager {
    next_id: u64,
    roles: BTreeSet<String>,
}

impl SessionManager {
    pub fn new(roles: impl IntoIterator<Item = String>) -> Self {
        SessionManager {
            next_id: 0,
            roles: roles.into_iter().collect(),
        }
    }

    pub fn declare_role(&mut self, role: impl Into<String>) {
        self.roles.insert(role.into());
    }

    /// Open a session and compute its profile from the hierarchy as it is
    /// right now.
    pub fn open_session(
        &mut self,
        org: &OrgStructure,
        position: OrgPosition,
        grants: &Grants,
    ) -> Result<(Session, AccessProfile), AccessError> {
        let subtree = org
            .subtree(&position.unit)
            .ok_or_else(|| AccessError::UnknownUnit(position.unit.clone()))?;
        if !self.roles.contains(&position.role) {
            return Err(AccessError::UnknownRole(position.role.clone()));
        }
        for unit in grants.read_units.iter().chain(&grants.write_units) {
            if !org.contains_unit(unit) {
                return Err(AccessError::UnknownUnit(unit.clone()));
            }
        }
        let id = self.next_id;
        self.next_id += 1;

        let mut read_scope = subtree;
        read_scope.extend(grants.read_units.iter().cloned());
        let mut write_scope: BTreeSet<String> = [position.unit.clone()].into();
        write_scope.extend(grants.write_units.iter().cloned());
        // Writes are also reads.
        read_scope.extend(write_scope.iter().cloned());

        let profile = AccessProfile {
            session: id,
            read_scope,
            write_scope,
            metadata: if position.admin {
                MetadataRights::ReadWrite
            } else {
                MetadataRights::Read
            },
            required_attributes: grants.required_attributes.clone(),
        };
        let session = Session {
            id,
            position,
            state: SessionState::Open,
        };
        Ok((session, profile))
    }
}

/// Close the session; every later `authorize` denies.
pub fn close_session(session: Session) -> Result<Session, AccessError> {
    if !session.is_open() {
        return Err(AccessError::AlreadyClosed);
    }
    Ok(Session {
        state: SessionState::Closed,
        ..session
    })
}

/// Decide one operation. Depends only on the session state and the profile
/// snapshot, never on the current org structure.
pub fn authorize(
    session: &Session,
    profile: &AccessProfile,
    target: &AccessTarget,
    op: AccessOp,
) -> Decision {
    if !session.is_open() {
        return Decision::Deny(DenyReason::SessionClosed);
    }
    let scope = match op {
        AccessOp::Read => &profile.read_scope,
        AccessOp::Write => &profile.write_scope,
    };
    if !scope.contains(&target.unit) {
        return Decision::Deny(DenyReason::OutOfScope);
    }
    if target.kind == TargetKind::Metadata {
        let allowed = match op {
            AccessOp::Read => profile.metadata >= MetadataRights::Read,
            AccessOp::Write => profile.metadata == MetadataRights::ReadWrite,
        };
        if !allowed {
            return Decision::Deny(DenyReason::MetadataForbidden);
        }
    }
    Decision::Allow
}

/// A `user` declaration as written in a document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserDecl {
    pub name: String,
    pub unit: String,
    pub role: String,
    pub admin: bool,
    pub grants: Grants,
}

impl UserDecl {
    pub fn position(&self) -> OrgPosition {
        OrgPosition {
            user: self.name.clone(),
            unit: self.unit.clone(),
            role: self.role.clone(),
            admin: self.admin,
        }
    }
}
