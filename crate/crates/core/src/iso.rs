use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// ISO 3166 alpha-2 country code, stored as two uppercase ASCII letters.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Iso2([u8; 2]);

impl Iso2 {
    pub fn new(code: &str) -> Result<Self, Error> {
        code.parse()
    }

    pub fn as_str(&self) -> &str {
        // Always two ASCII letters by construction.
        std::str::from_utf8(&self.0).unwrap()
    }
}

impl FromStr for Iso2 {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let b = s.trim().as_bytes();
        if b.len() != 2 || !b.iter().all(|c| c.is_ascii_uppercase()) {
            return Err(Error::Data(format!(
                "`{s}` is not an ISO 3166 alpha-2 code"
            )));
        }
        Ok(Iso2([b[0], b[1]]))
    }
}

impl TryFrom<String> for Iso2 {
    type Error = Error;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<Iso2> for String {
    fn from(value: Iso2) -> Self {
        value.as_str().to_string()
    }
}

impl fmt::Display for Iso2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for Iso2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Iso2({})", self.as_str())
    }
}
