use std::fmt;
use std::str::FromStr;

/// Geological domain label.
///
/// `u16::MAX` is reserved for the exterior sentinel: space outside the
/// modelled footprint, which carries a uniform chemistry likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ZoneId(pub u16);

impl ZoneId {
    pub const EXTERIOR: ZoneId = ZoneId(u16::MAX);

    pub fn is_exterior(self) -> bool {
        self == Self::EXTERIOR
    }
}

impl fmt::Display for ZoneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exterior() {
            f.write_str("exterior")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for ZoneId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "exterior" {
            return Ok(Self::EXTERIOR);
        }
        match s.parse::<u16>() {
            Ok(v) if v != u16::MAX => Ok(ZoneId(v)),
            _ => Err(format!("invalid geozone id '{s}' (expected 0..=65534)")),
        }
    }
}
