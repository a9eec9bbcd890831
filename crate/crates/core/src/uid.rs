//! Persistent identifiers shared by every modality.
//!
//! A [`Uid`] renders as `<namespace>-<serial>`. Serials are handed out by the
//! [`UidRegistry`] from per-namespace counters and are never reused, even after
//! the identifier is tombstoned.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::HubError;

/// Namespaces a project may issue identifiers in.
pub const NAMESPACES: &[&str] = &["cmp", "cst", "doc", "geo", "req", "sm"];

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Uid {
    namespace: String,
    serial: u64,
}

impl Uid {
    /// Builds a uid without consulting a registry. Used by parsers and tests;
    /// issuing new identifiers goes through [`UidRegistry::register`].
    pub fn new(namespace: &str, serial: u64) -> Result<Self, HubError> {
        if !is_namespace_token(namespace) {
            return Err(HubError::InvalidUid(format!("{namespace}-{serial}")));
        }
        Ok(Self {
            namespace: namespace.to_string(),
            serial,
        })
    }

    pub fn namespace(&self) -> &str {
        &self.namespace
    }

    pub fn serial(&self) -> u64 {
        self.serial
    }
}

fn is_namespace_token(s: &str) -> bool {
    !s.is_empty() && s.len() <= 8 && s.bytes().all(|b| b.is_ascii_lowercase())
}

impl fmt::Display for Uid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.namespace, self.serial)
    }
}

impl FromStr for Uid {
    type Err = HubError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (ns, serial) = s.rsplit_once('-').ok_or_else(|| HubError::InvalidUid(s.to_string()))?;
        // reject "+1", "01" and friends so that rendering round-trips
        if serial.is_empty()
            || !serial.bytes().all(|b| b.is_ascii_digit())
            || (serial.len() > 1 && serial.starts_with('0'))
        {
            return Err(HubError::InvalidUid(s.to_string()));
        }
        let serial = serial.parse::<u64>().map_err(|_| HubError::InvalidUid(s.to_string()))?;
        Uid::new(ns, serial).map_err(|_| HubError::InvalidUid(s.to_string()))
    }
}

impl Serialize for Uid {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Uid {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Issues and tracks identifiers.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UidRegistry {
    /// Next serial per namespace.
    counters: BTreeMap<String, u64>,
    live: BTreeSet<Uid>,
    tombstoned: BTreeSet<Uid>,
}

impl UidRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, namespace: &str) -> Result<Uid, HubError> {
        if !NAMESPACES.contains(&namespace) {
            return Err(HubError::UnknownNamespace(namespace.to_string()));
        }
        let next = self.counters.entry(namespace.to_string()).or_insert(0);
        let uid = Uid {
            namespace: namespace.to_string(),
            serial: *next,
        };
        *next += 1;
        self.live.insert(uid.clone());
        Ok(uid)
    }

    pub fn is_live(&self, uid: &Uid) -> bool {
        self.live.contains(uid)
    }

    pub fn is_tombstoned(&self, uid: &Uid) -> bool {
        self.tombstoned.contains(uid)
    }

    /// Retires a uid. Its serial stays consumed.
    pub fn tombstone(&mut self, uid: &Uid) -> Result<(), HubError> {
        if !self.live.remove(uid) {
            return Err(HubError::Unregistered(uid.clone()));
        }
        self.tombstoned.insert(uid.clone());
        Ok(())
    }

    pub fn live(&self) -> impl Iterator<Item = &Uid> {
        self.live.iter()
    }

    pub fn tombstones(&self) -> impl Iterator<Item = &Uid> {
        self.tombstoned.iter()
    }

    /// Checks that counters cover every known serial. Used after loading a file.
    pub(crate) fn check_consistent(&self) -> Result<(), String> {
        for uid in self.live.iter().chain(self.tombstoned.iter()) {
            let next = self.counters.get(uid.namespace()).copied().unwrap_or(0);
            if uid.serial() >= next {
                return Err(format!("{uid} is not below its namespace counter {next}"));
            }
        }
        if let Some(uid) = self.live.intersection(&self.tombstoned).next() {
            return Err(format!("{uid} is both live and tombstoned"));
        }
        Ok(())
    }
}
