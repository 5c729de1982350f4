//! The three independent axes that distinguish s-batch problem variations.

use serde::{Deserialize, Serialize};
use std::fmt;

/// When a job counts as completed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Availability {
    /// At the end of its own processing.
    Item,
    /// At the end of the batch that contains it.
    Batch,
}

/// Whether idle time may occur between jobs of the same batch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preemption {
    Allowed,
    /// The batch runs as one contiguous block.
    Forbidden,
}

/// Whether a batch may start before all of its jobs are released.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initiation {
    Flexible,
    /// The batch starts no earlier than the latest release among its jobs.
    Complete,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VariationConfig {
    pub availability: Availability,
    pub preemption: Preemption,
    pub initiation: Initiation,
}

impl VariationConfig {
    /// Item availability, preemptive processing, flexible initiation.
    pub const IPF: Self = Self::new(Availability::Item, Preemption::Allowed, Initiation::Flexible);

    /// Batch availability with complete initiation. Preemption is irrelevant
    /// once every job of a batch is released at its start.
    pub const BC: Self = Self::new(Availability::Batch, Preemption::Allowed, Initiation::Complete);

    pub const fn new(availability: Availability, preemption: Preemption, initiation: Initiation) -> Self {
        Self {
            availability,
            preemption,
            initiation,
        }
    }

    pub fn is_ipf(&self) -> bool {
        *self == Self::IPF
    }

    pub fn is_bc(&self) -> bool {
        self.availability == Availability::Batch && self.initiation == Initiation::Complete
    }

    /// All eight combinations, in a fixed order.
    pub fn all() -> [Self; 8] {
        use Availability::*;
        use Initiation::*;
        use Preemption::*;
        [
            Self::new(Item, Allowed, Flexible),
            Self::new(Item, Allowed, Complete),
            Self::new(Item, Forbidden, Flexible),
            Self::new(Item, Forbidden, Complete),
            Self::new(Batch, Allowed, Flexible),
            Self::new(Batch, Allowed, Complete),
            Self::new(Batch, Forbidden, Flexible),
            Self::new(Batch, Forbidden, Complete),
        ]
    }
}

impl Default for VariationConfig {
    fn default() -> Self {
        Self::IPF
    }
}

impl fmt::Display for VariationConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = match self.availability {
            Availability::Item => 'I',
            Availability::Batch => 'B',
        };
        let p = match self.preemption {
            Preemption::Allowed => 'P',
            Preemption::Forbidden => 'N',
        };
        let i = match self.initiation {
            Initiation::Flexible => 'F',
            Initiation::Complete => 'C',
        };
        write!(f, "{a}{p}{i}")
    }
}

/// Parses the three-letter code produced by `Display` (`IPF`, `BNC`, ...),
/// case-insensitively. `BC` is accepted for [`VariationConfig::BC`].
impl std::str::FromStr for VariationConfig {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let code = s.to_ascii_uppercase();
        if code == "BC" {
            return Ok(Self::BC);
        }
        let c: Vec<char> = code.chars().collect();
        let bad = || format!("unknown variation `{s}` (expected a code such as IPF, BPC or BNC)");
        if c.len() != 3 {
            return Err(bad());
        }
        let availability = match c[0] {
            'I' => Availability::Item,
            'B' => Availability::Batch,
            _ => return Err(bad()),
        };
        let preemption = match c[1] {
            'P' => Preemption::Allowed,
            'N' => Preemption::Forbidden,
            _ => return Err(bad()),
        };
        let initiation = match c[2] {
            'F' => Initiation::Flexible,
            'C' => Initiation::Complete,
            _ => return Err(bad()),
        };
        Ok(Self::new(availability, preemption, initiation))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_variations() {
        assert!(VariationConfig::IPF.is_ipf());
        assert!(VariationConfig::BC.is_bc());
        assert!(!VariationConfig::IPF.is_bc());
        assert_eq!(VariationConfig::IPF.to_string(), "IPF");
        assert_eq!(VariationConfig::BC.to_string(), "BPC");
        assert_eq!(VariationConfig::all().iter().filter(|v| v.is_bc()).count(), 2);
    }

    #[test]
    fn codes_round_trip() {
        for v in VariationConfig::all() {
            assert_eq!(v.to_string().parse::<VariationConfig>(), Ok(v));
        }
        assert_eq!("bc".parse::<VariationConfig>(), Ok(VariationConfig::BC));
        assert!("XYZ".parse::<VariationConfig>().is_err());
    }
}
