//! Opaque, URL-safe identifiers.
//!
//! Ids are minted from per-kind counters (`PTW-000042`) so that zero-padded
//! lexical order matches creation order and replaying a journal reproduces
//! the same ids.

use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub const PREFIX: &'static str = $prefix;

            pub fn new(value: impl Into<String>) -> Self {
                Self(value.into())
            }

            /// Mints the id for the `ordinal`-th entity of this kind (1-based).
            pub fn from_ordinal(ordinal: u64) -> Self {
                Self(format!("{}-{:06}", $prefix, ordinal))
            }

            /// Inverse of [`Self::from_ordinal`]; `None` for ids minted elsewhere.
            pub fn ordinal(&self) -> Option<u64> {
                self.0
                    .strip_prefix($prefix)
                    .and_then(|rest| rest.strip_prefix('-'))
                    .and_then(|digits| digits.parse().ok())
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
            fn from(value: &str) -> Self {
                Self(value.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(value: String) -> Self {
                Self(value)
            }
        }
    };
}

id_type!(UserId, "U");
id_type!(MachineId, "M");
id_type!(RecordId, "MR");
id_type!(FaultId, "FLT");
id_type!(WorkId, "MW");
id_type!(ContractorId, "C");
id_type!(PermitId, "PTW");
id_type!(IncidentId, "INC");
id_type!(
    /// Zone ids come from the layout file, not from a counter.
    ZoneId,
    "Z"
);
