use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::LazyLock;

use chrono::NaiveDate;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{IngestError, Result};

pub const UNKNOWN_IDENTITY: &str = "unknown";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    Mentor,
    Committer,
    Contributor,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Mentor, Role::Committer, Role::Contributor];

    pub(crate) fn precedence(self) -> u8 {
        match self {
            Role::Mentor => 2,
            Role::Committer => 1,
            Role::Contributor => 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Mentor => "mentor",
            Role::Committer => "committer",
            Role::Contributor => "contributor",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mentor" => Ok(Role::Mentor),
            "committer" => Ok(Role::Committer),
            "contributor" => Ok(Role::Contributor),
            other => Err(format!("unknown role {other:?}")),
        }
    }
}

/// One roster line. `since` marks the first day the role applies; entries
/// without it hold for the whole incubation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub identity_key: String,
    pub role: Role,
    #[serde(default)]
    pub since: Option<NaiveDate>,
}

/// Alias merging plus per-project static roles.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentityMap {
    aliases: BTreeMap<String, String>,
    roles: BTreeMap<String, BTreeMap<String, Role>>,
}

impl IdentityMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register `alias → canonical`. Rejects an alias already bound to a
    /// different canonical key.
    pub fn add_alias(&mut self, alias: &str, canonical: &str) -> std::result::Result<(), String> {
        let alias = alias.trim().to_lowercase();
        let canonical = canonical.trim().to_lowercase();
        if alias == canonical {
            return Ok(());
        }
        match self.aliases.get(&alias) {
            Some(existing) if *existing != canonical => Err(format!(
                "alias {alias} maps to both {existing} and {canonical}"
            )),
            _ => {
                self.aliases.insert(alias, canonical);
                Ok(())
            }
        }
    }

    pub fn set_role(&mut self, project_id: &str, identity_key: &str, role: Role) {
        let slot = self
            .roles
            .entry(project_id.to_string())
            .or_default()
            .entry(identity_key.to_lowercase())
            .or_insert(role);
        if role.precedence() > slot.precedence() {
            *slot = role;
        }
    }

    pub fn canonical(&self, key: &str) -> String {
        let mut cur = key.to_lowercase();
        // alias chains are short; the bound stops cycles
        for _ in 0..8 {
            match self.aliases.get(&cur) {
                Some(next) if *next != cur => cur = next.clone(),
                _ => break,
            }
        }
        cur
    }

    pub fn role(&self, project_id: &str, identity_key: &str) -> Role {
        self.roles
            .get(project_id)
            .and_then(|m| m.get(identity_key))
            .copied()
            .unwrap_or(Role::Contributor)
    }

    /// Load an alias CSV with header `alias,canonical`.
    pub fn load_aliases(&mut self, path: &Path) -> Result<()> {
        let err = |message: String| IngestError::Csv {
            path: path.to_path_buf(),
            message,
        };
        let mut reader = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
        for rec in reader.records() {
            let rec = rec.map_err(|e| err(e.to_string()))?;
            let (Some(alias), Some(canonical)) = (rec.get(0), rec.get(1)) else {
                return Err(err(format!("short row {rec:?}")));
            };
            self.add_alias(alias, canonical).map_err(err)?;
        }
        Ok(())
    }
}

/// Result of resolving a raw `From` value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedIdentity {
    pub key: String,
    pub role: Role,
    /// False when no address could be extracted and `key` is `"unknown"`.
    pub parsed: bool,
}

static PLAIN_ADDR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[A-Za-z0-9._%+\-]+@[A-Za-z0-9.\-]+\.[A-Za-z]{2,}").unwrap());
// archive obfuscations: "alice at apache dot org", "alice () apache ! org"
static OBFUSCATED_ADDR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)([A-Za-z0-9._%+\-]+)\s*(?:\(\)|\bat\b|\[at\])\s*([A-Za-z0-9\-]+(?:\s*(?:!|\.|\bdot\b)\s*[A-Za-z0-9\-]+)+)")
        .unwrap()
});
static DOMAIN_SEP: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\s*(?:!|\.|\bdot\b)\s*").unwrap());

/// Extract the bare lowercase address from an RFC-5322 `From` value.
pub fn extract_address(raw_from: &str) -> Option<String> {
    if let Ok(list) = mailparse::addrparse(raw_from) {
        for addr in list.iter() {
            let single = match addr {
                mailparse::MailAddr::Single(s) => Some(s.addr.clone()),
                mailparse::MailAddr::Group(g) => g.addrs.first().map(|s| s.addr.clone()),
            };
            if let Some(a) = single {
                if let Some(m) = PLAIN_ADDR.find(&a) {
                    return Some(m.as_str().to_lowercase());
                }
            }
        }
    }
    if let Some(m) = PLAIN_ADDR.find(raw_from) {
        return Some(m.as_str().to_lowercase());
    }
    OBFUSCATED_ADDR.captures(raw_from).map(|c| {
        let domain = DOMAIN_SEP.replace_all(&c[2], ".");
        format!("{}@{}", &c[1], domain).to_lowercase()
    })
}

/// Canonical identity and static role for a `From` value within a project.
/// Unknown identities default to [`Role::Contributor`].
pub fn resolve_identity(raw_from: &str, map: &IdentityMap, project_id: &str) -> ResolvedIdentity {
    match extract_address(raw_from) {
        Some(addr) => {
            let key = map.canonical(&addr);
            let role = map.role(project_id, &key);
            ResolvedIdentity { key, role, parsed: true }
        }
        None => ResolvedIdentity {
            key: UNKNOWN_IDENTITY.to_string(),
            role: Role::Contributor,
            parsed: false,
        },
    }
}
