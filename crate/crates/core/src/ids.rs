//! Opaque identifiers shared across the workspace.
//!
//! All ids are URL-safe strings. Freshly minted ids are UUIDv4 in simple
//! (hyphen-free) form, but any non-empty URL-safe string is accepted when
//! parsing, so imported archives keep their original ids.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid identifier {0:?}: expected non-empty [A-Za-z0-9_-]")]
pub struct InvalidId(pub String);

fn is_url_safe(s: &str) -> bool {
    !s.is_empty()
        && s
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

macro_rules! opaque_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub struct $name(String);

        impl $name {
            pub fn new() -> Self {
                Self(uuid::Uuid::new_v4().simple().to_string())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl Default for $name {
            fn default() -> Self {
                Self::new()
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl FromStr for $name {
            type Err = InvalidId;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                if is_url_safe(s) {
                    Ok(Self(s.to_owned()))
                } else {
                    Err(InvalidId(s.to_owned()))
                }
            }
        }

        impl TryFrom<String> for $name {
            type Error = InvalidId;

            fn try_from(s: String) -> Result<Self, Self::Error> {
                if is_url_safe(&s) {
                    Ok(Self(s))
                } else {
                    Err(InvalidId(s))
                }
            }
        }

        impl From<$name> for String {
            fn from(id: $name) -> String {
                id.0
            }
        }
    };
}

opaque_id!(
    /// Identifies a page in the workspace.
    DocumentId
);
opaque_id!(
    /// Identifies a block. Unique across the workspace, not only its page.
    BlockId
);
opaque_id!(TaskId);
opaque_id!(JobId);
opaque_id!(
    /// Identifies a provenance record.
    RecordId
);
