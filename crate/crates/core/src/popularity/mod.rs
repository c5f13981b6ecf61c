//! Popularity laws: construction, combination, filtering and querying of
//! per-object request weights, including catalogs far too large to
//! enumerate.
//!
//! Weights are kept unnormalized throughout; consumers divide by
//! [`PopularityLaw::total_mass`] wherever request probabilities are needed.
//! Internally a law is a sequence of monotone blocks (one per mixture
//! component), each with an analytic shape, a scale factor, an optional
//! chunk multiplicity and an optional stack of survival factors from
//! upstream cache filtering.

mod mix;
mod segment;

pub use mix::{TrafficClass, TrafficMix};
pub use segment::{RankSegmentation, Segment};

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::lru::{HitProfile, ProfileKind};
use crate::numeric::KahanSum;

/// Largest catalog (counted in object entries, not chunks) that is
/// materialized as a dense weight table; beyond this everything goes
/// through segmentation.
pub const DENSE_LIMIT: u64 = 2_000_000;

/// Default relative accuracy for segmented sums over parametric laws.
pub const DEFAULT_SUM_EPSILON: f64 = 1e-6;

#[derive(Clone, Debug)]
pub(crate) enum Shape {
    Zipf { alpha: f64 },
    Geometric { rho: f64 },
    Uniform,
    Explicit { weights: Arc<[f64]>, monotone: bool },
}

impl Shape {
    #[inline]
    fn base(&self, j: u64) -> f64 {
        match self {
            Shape::Zipf { alpha } => (j as f64).powf(-alpha),
            Shape::Geometric { rho } => rho.powi(j as i32),
            Shape::Uniform => 1.0,
            Shape::Explicit { weights, .. } => weights[(j - 1) as usize],
        }
    }

    /// Bound on |d ln q / d ln rank|, used to report the effective weight
    /// ratio of a sum-targeted segmentation. Shapes segmented per item are
    /// exact and contribute nothing.
    pub(crate) fn log_slope_bound(&self) -> f64 {
        match self {
            Shape::Zipf { alpha } => *alpha,
            _ => 0.0,
        }
    }

    fn is_monotone(&self) -> bool {
        match self {
            Shape::Explicit { monotone, .. } => *monotone,
            _ => true,
        }
    }
}

/// Multiplicative survival factor left behind by an upstream cache.
#[derive(Clone, Debug)]
pub(crate) enum SurvivalStage {
    /// LRU/Che filtering: factor `exp(-w t_C)` where `w` is the weight
    /// seen by the filtering cache.
    CheExp { t_c: f64 },
    /// Random/FIFO filtering: factor `(S - w) / (S - w + w tau)`.
    RandomFp { tau: f64, total: f64 },
}

impl SurvivalStage {
    #[inline]
    fn apply(&self, w: f64) -> f64 {
        match *self {
            SurvivalStage::CheExp { t_c } => w * (-w * t_c).exp(),
            SurvivalStage::RandomFp { tau, total } => {
                let rest = total - w;
                w * rest / (rest + w * tau)
            }
        }
    }
}

/// A run of ranks sharing one analytic weight profile.
#[derive(Clone, Debug)]
pub(crate) struct Block {
    /// Global rank of the block's first item (1-based, chunk-level).
    pub(crate) start: u64,
    /// Number of distinct objects in the block.
    pub(crate) items: u64,
    /// Chunks per object; chunks inherit the object weight.
    pub(crate) copies: u64,
    pub(crate) scale: f64,
    pub(crate) shape: Shape,
    pub(crate) survival: Vec<SurvivalStage>,
}

impl Block {
    /// Weight of the `j`-th object of the block (1-based).
    #[inline]
    pub(crate) fn object_weight(&self, j: u64) -> f64 {
        let mut w = self.scale * self.shape.base(j);
        for stage in &self.survival {
            w = stage.apply(w);
        }
        w
    }

    fn object_entries(&self) -> u64 {
        self.items
    }

    fn chunk_count(&self) -> u64 {
        self.items * self.copies
    }
}

/// An unnormalized popularity law over ranks `1..=population`.
///
/// Immutable once built; cheap to clone and safe to share across threads.
#[derive(Clone, Debug)]
pub struct PopularityLaw {
    blocks: Arc<Vec<Block>>,
    population: u64,
    dense: OnceLock<Option<Arc<Vec<(f64, f64)>>>>,
    grid: OnceLock<Arc<RankSegmentation>>,
    mass: OnceLock<f64>,
}

impl PopularityLaw {
    fn from_blocks(blocks: Vec<Block>) -> Self {
        let population = blocks.iter().map(Block::chunk_count).sum();
        PopularityLaw {
            blocks: Arc::new(blocks),
            population,
            dense: OnceLock::new(),
            grid: OnceLock::new(),
            mass: OnceLock::new(),
        }
    }

    fn single_block(shape: Shape, items: u64) -> Result<Self> {
        if items == 0 {
            return Err(Error::InvalidParameter("population must be positive".into()));
        }
        Ok(Self::from_blocks(vec![Block {
            start: 1,
            items,
            copies: 1,
            scale: 1.0,
            shape,
            survival: Vec::new(),
        }]))
    }

    /// Zipf weights `q(n) = 1 / n^alpha`.
    pub fn zipf(alpha: f64, population: u64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "zipf exponent must be positive, got {alpha}"
            )));
        }
        Self::single_block(Shape::Zipf { alpha }, population)
    }

    /// Geometric weights `q(n) = rho^n`.
    pub fn geometric(rho: f64, population: u64) -> Result<Self> {
        if !(rho.is_finite() && 0.0 < rho && rho < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "geometric ratio must lie in (0,1), got {rho}"
            )));
        }
        // The tail must stay clear of the subnormal range or the positivity
        // invariant breaks.
        if population as f64 * (1.0 / rho).ln() > 700.0 {
            return Err(Error::InvalidParameter(format!(
                "geometric law with rho={rho} underflows beyond rank {}",
                (700.0 / (1.0 / rho).ln()) as u64
            )));
        }
        Self::single_block(Shape::Geometric { rho }, population)
    }

    /// Constant weights `q(n) = 1`.
    pub fn uniform(population: u64) -> Result<Self> {
        Self::single_block(Shape::Uniform, population)
    }

    /// Arbitrary positive per-item weights, unsorted allowed.
    pub fn explicit(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("explicit law needs at least one weight".into()));
        }
        if let Some(bad) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "explicit weights must be positive and finite, got {bad}"
            )));
        }
        let monotone = weights.windows(2).all(|w| w[0] >= w[1]);
        let items = weights.len() as u64;
        Self::single_block(
            Shape::Explicit {
                weights: weights.into(),
                monotone,
            },
            items,
        )
    }

    /// Weighted combination of laws over disjoint rank universes. Each
    /// component is rescaled so its total mass equals its share of the
    /// grand total `sum(shares)`.
    pub fn mixture(components: Vec<(f64, PopularityLaw)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter("mixture needs at least one component".into()));
        }
        let mut blocks = Vec::new();
        for (share, law) in &components {
            if !(share.is_finite() && *share > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "mixture shares must be positive, got {share}"
                )));
            }
            if law.population == 0 {
                return Err(Error::InvalidParameter("mixture component is empty".into()));
            }
            let factor = share / law.total_mass();
            for b in law.blocks.iter() {
                blocks.push(Block {
                    scale: b.scale * factor,
                    ..b.clone()
                });
            }
        }
        rebase(&mut blocks);
        Ok(Self::from_blocks(blocks))
    }

    /// Splits every object into `chunks_per_object` equal-popularity chunks;
    /// the chunk universe is represented implicitly, never materialized.
    pub fn chunked(&self, chunks_per_object: u64) -> Result<Self> {
        if chunks_per_object == 0 {
            return Err(Error::InvalidParameter("chunk count must be positive".into()));
        }
        let mut blocks: Vec<Block> = self.blocks.as_ref().clone();
        for b in &mut blocks {
            b.copies = b.copies.checked_mul(chunks_per_object).ok_or_else(|| {
                Error::InvalidParameter("chunked population overflows u64".into())
            })?;
        }
        rebase(&mut blocks);
        Ok(Self::from_blocks(blocks))
    }

    pub(crate) fn empty() -> Self {
        Self::from_blocks(Vec::new())
    }

    /// Number of ranked items (chunks when the law is chunk-level).
    pub fn population(&self) -> u64 {
        self.population
    }

    pub fn is_empty(&self) -> bool {
        self.population == 0
    }

    pub(crate) fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Unnormalized weight `q(rank)`.
    pub fn weight(&self, rank: u64) -> Result<f64> {
        if rank == 0 || rank > self.population {
            return Err(Error::RankOutOfRange {
                rank,
                population: self.population,
            });
        }
        let i = self.blocks.partition_point(|b| b.start + b.chunk_count() <= rank);
        let b = &self.blocks[i];
        let object = (rank - b.start) / b.copies + 1;
        Ok(b.object_weight(object))
    }

    /// Total object entries across blocks (chunk multiplicity not counted).
    fn entry_count(&self) -> u64 {
        self.blocks.iter().map(Block::object_entries).sum()
    }

    /// Dense `(weight, multiplicity)` table, available for catalogs of up
    /// to [`DENSE_LIMIT`] object entries.
    fn dense_entries(&self) -> Option<Arc<Vec<(f64, f64)>>> {
        self.dense
            .get_or_init(|| {
                if self.entry_count() > DENSE_LIMIT {
                    return None;
                }
                let mut v = Vec::with_capacity(self.entry_count() as usize);
                for b in self.blocks.iter() {
                    let copies = b.copies as f64;
                    for j in 1..=b.items {
                        v.push((b.object_weight(j), copies));
                    }
                }
                Some(Arc::new(v))
            })
            .clone()
    }

    /// The cached segmentation used for default-accuracy sums.
    pub(crate) fn sum_grid(&self) -> Arc<RankSegmentation> {
        self.grid
            .get_or_init(|| {
                Arc::new(RankSegmentation::build(
                    self,
                    segment::Grouping::SumTarget(DEFAULT_SUM_EPSILON),
                ))
            })
            .clone()
    }

    /// Evaluation path for `sum f(q(n))`: exact dense table when the
    /// catalog is small enough, segmentation otherwise.
    pub(crate) fn sum_path(&self) -> SumPath {
        match self.dense_entries() {
            Some(d) => SumPath::Dense(d),
            None => SumPath::Grid(self.sum_grid()),
        }
    }

    /// Same, at a non-default segmentation accuracy.
    pub(crate) fn sum_path_with(&self, sum_epsilon: f64) -> SumPath {
        match self.dense_entries() {
            Some(d) => SumPath::Dense(d),
            None if sum_epsilon == DEFAULT_SUM_EPSILON => SumPath::Grid(self.sum_grid()),
            None => SumPath::Grid(Arc::new(RankSegmentation::build(
                self,
                segment::Grouping::SumTarget(sum_epsilon),
            ))),
        }
    }

    /// `sum f(q(n))` over the whole catalog at default accuracy.
    pub fn sum<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.sum_path().sum(f)
    }

    /// Total weight mass `sum q(n)`.
    pub fn total_mass(&self) -> f64 {
        *self.mass.get_or_init(|| self.sum(|q| q))
    }

    /// Partition the catalog into segments whose weights agree to within
    /// `1 + epsilon` (parametric shapes) or exactly (per-item fallback for
    /// unsorted explicit laws).
    pub fn segmentation(&self, epsilon: f64) -> Result<RankSegmentation> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "segmentation tolerance must be positive, got {epsilon}"
            )));
        }
        Ok(RankSegmentation::build(self, segment::Grouping::Ratio(epsilon)))
    }

    /// Mass of the `budget` largest weights; divided by `total_mass` this
    /// is the request fraction a statically provisioned top-`budget` cache
    /// captures. `budget` is real-valued (a byte capacity rarely lands on a
    /// whole number of chunks); the marginal item is pro-rated.
    pub fn sorted_top_mass(&self, budget: f64) -> Result<f64> {
        if !(budget.is_finite() && budget > 0.0) || budget > self.population as f64 {
            return Err(Error::InvalidParameter(format!(
                "budget must lie in (0, population]; got {budget} with population {}",
                self.population
            )));
        }
        if budget == self.population as f64 {
            return Ok(self.total_mass());
        }
        if let Some(entries) = self.dense_entries() {
            let mut sorted: Vec<(f64, f64)> = entries.as_ref().clone();
            sorted.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));
            let mut remaining = budget;
            let mut mass = KahanSum::new();
            for (w, count) in sorted {
                let take = count.min(remaining);
                mass.add(take * w);
                remaining -= take;
                if remaining <= 0.0 {
                    break;
                }
            }
            return Ok(mass.value());
        }
        self.top_mass_by_threshold(budget)
    }

    /// Threshold search over per-block weight cutoffs; needs every block
    /// rank-monotone (true for all parametric shapes and their mixtures).
    fn top_mass_by_threshold(&self, budget: f64) -> Result<f64> {
        for b in self.blocks.iter() {
            if !b.shape.is_monotone() || !b.survival.is_empty() {
                return Err(Error::InvalidParameter(
                    "top-mass selection requires rank-monotone, unfiltered blocks at this catalog size"
                        .into(),
                ));
            }
        }
        let grid = self.sum_grid();
        let count_and_mass = |w: f64| -> (f64, f64) {
            let mut count = 0.0;
            let mut mass = KahanSum::new();
            for b in self.blocks.iter() {
                let j = block_cutoff(b, w);
                if j > 0 {
                    count += j as f64 * b.copies as f64;
                    mass.add(grid.prefix_mass(b.start + j * b.copies - 1) - grid.prefix_mass(b.start - 1));
                }
            }
            (count, mass.value())
        };

        let mut w_hi = self.blocks.iter().map(|b| b.object_weight(1)).fold(0.0, f64::max) * (1.0 + 1e-12);
        let mut w_lo = self
            .blocks
            .iter()
            .map(|b| b.object_weight(b.items))
            .fold(f64::INFINITY, f64::min)
            * (1.0 - 1e-12);
        for _ in 0..200 {
            if w_hi / w_lo - 1.0 < 1e-13 {
                break;
            }
            let mid = (w_lo * w_hi).sqrt();
            let (count, _) = count_and_mass(mid);
            if count >= budget {
                w_lo = mid;
            } else {
                w_hi = mid;
            }
        }
        let (count_hi, mass_hi) = count_and_mass(w_hi);
        Ok(mass_hi + (budget - count_hi).max(0.0) * w_hi)
    }

    /// The filtered law `q'(n) = q(n) (1 - h(n))`: the request stream seen
    /// by the next cache level. Items with `h(n) = 1` are dropped from the
    /// filtered population.
    pub fn filtered(&self, hits: &HitProfile) -> Result<PopularityLaw> {
        if hits.population() != self.population {
            return Err(Error::MismatchedUniverse {
                law: self.population,
                profile: hits.population(),
            });
        }
        match hits.kind() {
            ProfileKind::Che { t_c } => {
                let mut blocks = self.blocks.as_ref().clone();
                for b in &mut blocks {
                    b.survival.push(SurvivalStage::CheExp { t_c: *t_c });
                }
                Ok(Self::from_blocks(blocks))
            }
            ProfileKind::RandomFp { tau_c, total_mass } => {
                let mut blocks = self.blocks.as_ref().clone();
                for b in &mut blocks {
                    b.survival.push(SurvivalStage::RandomFp {
                        tau: *tau_c,
                        total: *total_mass,
                    });
                }
                Ok(Self::from_blocks(blocks))
            }
            ProfileKind::PerRank(rates) => {
                if self.blocks.iter().any(|b| b.copies != 1) {
                    return Err(Error::InvalidParameter(
                        "per-rank filtering is only defined for object-level laws".into(),
                    ));
                }
                let entries = self.dense_entries().ok_or(Error::PopulationTooLarge {
                    population: self.population,
                    limit: DENSE_LIMIT,
                })?;
                let survivors: Vec<f64> = entries
                    .iter()
                    .zip(rates.iter())
                    .filter_map(|(&(w, _), &h)| {
                        let kept = w * (1.0 - h);
                        (kept > 0.0).then_some(kept)
                    })
                    .collect();
                if survivors.is_empty() {
                    Ok(Self::empty())
                } else {
                    Self::explicit(survivors)
                }
            }
        }
    }

    /// Materialize per-item weights (chunk-level) for the simulator and
    /// other exact consumers.
    pub fn to_explicit_weights(&self, limit: u64) -> Result<Vec<f64>> {
        if self.population > limit {
            return Err(Error::PopulationTooLarge {
                population: self.population,
                limit,
            });
        }
        let mut v = Vec::with_capacity(self.population as usize);
        for b in self.blocks.iter() {
            for j in 1..=b.items {
                let w = b.object_weight(j);
                for _ in 0..b.copies {
                    v.push(w);
                }
            }
        }
        Ok(v)
    }
}

fn rebase(blocks: &mut [Block]) {
    let mut next = 1u64;
    for b in blocks {
        b.start = next;
        next += b.chunk_count();
    }
}

fn block_cutoff(b: &Block, w: f64) -> u64 {
    let j = match &b.shape {
        Shape::Zipf { alpha } => {
            if b.scale < w {
                0
            } else {
                ((b.scale / w).powf(1.0 / alpha)).floor() as u64
            }
        }
        Shape::Geometric { rho } => {
            if b.scale * rho < w {
                0
            } else {
                ((b.scale / w).ln() / (1.0 / rho).ln()).floor() as u64
            }
        }
        Shape::Uniform => {
            if b.scale >= w {
                b.items
            } else {
                0
            }
        }
        Shape::Explicit { weights, .. } => weights.partition_point(|&q| b.scale * q >= w) as u64,
    };
    j.min(b.items)
}

/// Evaluation route for catalog-wide sums.
#[derive(Clone)]
pub(crate) enum SumPath {
    Dense(Arc<Vec<(f64, f64)>>),
    Grid(Arc<RankSegmentation>),
}

impl SumPath {
    pub(crate) fn sum<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        match self {
            SumPath::Dense(entries) => {
                let mut acc = KahanSum::new();
                for &(w, count) in entries.iter() {
                    acc.add(count * f(w));
                }
                acc.value()
            }
            SumPath::Grid(grid) => grid.sum(f),
        }
    }

    /// Two sums sharing one pass over the catalog (solvers need the map and
    /// its derivative at every iterate).
    pub(crate) fn sum_pair<F: Fn(f64) -> (f64, f64)>(&self, f: F) -> (f64, f64) {
        match self {
            SumPath::Dense(entries) => {
                let mut a = KahanSum::new();
                let mut b = KahanSum::new();
                for &(w, count) in entries.iter() {
                    let (x, y) = f(w);
                    a.add(count * x);
                    b.add(count * y);
                }
                (a.value(), b.value())
            }
            SumPath::Grid(grid) => grid.sum_pair(f),
        }
    }
}

#[cfg(test)]
mod tests;
