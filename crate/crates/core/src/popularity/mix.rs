//! Traffic mixes: several content types, each with its own share of
//! requests, catalog size, object size in chunks, and Zipf exponent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::popularity::PopularityLaw;

const SHARE_TOLERANCE: f64 = 1e-9;

/// One content type of a traffic mix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrafficClass {
    pub name: String,
    /// Fraction of downloaded traffic this type accounts for.
    pub share: f64,
    /// Number of distinct objects.
    pub population: u64,
    /// Object size in chunks.
    pub chunk_count: u64,
    /// Zipf exponent of the type's object popularity.
    pub zipf_alpha: f64,
}

/// A list of content types whose shares sum to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrafficMix {
    pub types: Vec<TrafficClass>,
}

impl TrafficMix {
    pub fn new(types: Vec<TrafficClass>) -> Result<Self> {
        let mix = TrafficMix { types };
        mix.validate()?;
        Ok(mix)
    }

    pub fn validate(&self) -> Result<()> {
        if self.types.is_empty() {
            return Err(Error::InvalidParameter("traffic mix has no types".into()));
        }
        for t in &self.types {
            if !(t.share.is_finite() && 0.0 < t.share && t.share <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "traffic share of '{}' must lie in (0, 1], got {}",
                    t.name, t.share
                )));
            }
            if t.population == 0 || t.chunk_count == 0 {
                return Err(Error::InvalidParameter(format!(
                    "'{}' needs a positive population and chunk count",
                    t.name
                )));
            }
            if !(t.zipf_alpha.is_finite() && t.zipf_alpha > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "'{}' needs a positive zipf exponent, got {}",
                    t.name, t.zipf_alpha
                )));
            }
        }
        let total: f64 = self.types.iter().map(|t| t.share).sum();
        if (total - 1.0).abs() > SHARE_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "traffic shares must sum to 1, got {total}"
            )));
        }
        Ok(())
    }

    /// Total catalog size in chunks.
    pub fn total_chunks(&self) -> u64 {
        self.types.iter().map(|t| t.population * t.chunk_count).sum()
    }

    /// The chunk-level popularity law of the whole mix: the item universe
    /// runs over all (type, object, chunk) triples, every chunk of an
    /// object shares the object's weight, and the law's total mass is 1.
    pub fn chunk_law(&self) -> Result<PopularityLaw> {
        self.validate()?;
        let components = self
            .types
            .iter()
            .map(|t| {
                let objects = PopularityLaw::zipf(t.zipf_alpha, t.population)?;
                Ok((t.share, objects.chunked(t.chunk_count)?))
            })
            .collect::<Result<Vec<_>>>()?;
        PopularityLaw::mixture(components)
    }
}
