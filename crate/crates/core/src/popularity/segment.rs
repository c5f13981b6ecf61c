//! Rank segmentation: grouping runs of nearly-equal weights so that sums
//! over catalogs of 10^11+ items cost a few hundred thousand terms instead.

use std::sync::OnceLock;

use crate::numeric::KahanSum;
use crate::popularity::{Block, PopularityLaw};

/// One run of consecutive ranks whose weights agree to within the grouping
/// tolerance. `count` is the number of catalog items covered (objects times
/// chunk multiplicity); `q_first`/`q_last` are the exact weights at the two
/// boundary objects.
#[derive(Clone, Copy, Debug)]
pub struct Segment {
    pub first_rank: u64,
    pub last_rank: u64,
    pub count: f64,
    pub q_first: f64,
    pub q_last: f64,
}

impl Segment {
    pub fn q_lo(&self) -> f64 {
        self.q_first.min(self.q_last)
    }

    pub fn q_hi(&self) -> f64 {
        self.q_first.max(self.q_last)
    }
}

/// A partition of `[1, N]` into weight-homogeneous segments.
///
/// Sums of any smooth per-item function are evaluated segment by segment
/// with the trapezoid of the two boundary weights, which is exact for
/// single-item segments and second-order accurate in the rank step
/// otherwise.
#[derive(Debug)]
pub struct RankSegmentation {
    epsilon: f64,
    population: u64,
    segments: Vec<Segment>,
    prefix: OnceLock<Prefix>,
}

#[derive(Debug)]
struct Prefix {
    /// Trapezoid mass up to and including segment i.
    mass: Vec<f64>,
}

/// How aggressively segments are grouped.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Grouping {
    /// Weight ratio within a segment bounded by `1 + epsilon`.
    Ratio(f64),
    /// Target relative error for trapezoid sums; translated into a rank
    /// step of `sqrt(target)/2` per segment, which the second-order
    /// accuracy of the trapezoid turns into sums well inside the target.
    SumTarget(f64),
}

impl Grouping {
    fn recorded_epsilon(&self, blocks: &[Block]) -> f64 {
        match *self {
            Grouping::Ratio(e) => e,
            Grouping::SumTarget(t) => {
                let step = t.sqrt() / 2.0;
                blocks
                    .iter()
                    .map(|b| b.shape.log_slope_bound() * step)
                    .fold(0.0, f64::max)
                    .max(t)
            }
        }
    }
}

impl RankSegmentation {
    pub(crate) fn build(law: &PopularityLaw, grouping: Grouping) -> Self {
        let mut segments = Vec::new();
        for block in law.blocks() {
            push_block_segments(block, grouping, &mut segments);
        }
        RankSegmentation {
            epsilon: grouping.recorded_epsilon(law.blocks()),
            population: law.population(),
            segments,
            prefix: OnceLock::new(),
        }
    }

    /// Grouping tolerance the segmentation was built with.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn population(&self) -> u64 {
        self.population
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Segment boundaries as the strictly increasing rank list
    /// `1 = n_0 < n_1 < ... < n_J = N + 1`.
    pub fn breakpoints(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.segments.len() + 1);
        out.push(1);
        for s in &self.segments {
            out.push(s.last_rank + 1);
        }
        out
    }

    /// `sum f(q(n))` over all ranks, one trapezoid per segment.
    pub fn sum<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let mut acc = KahanSum::new();
        for s in &self.segments {
            let term = if s.q_first == s.q_last {
                s.count * f(s.q_first)
            } else {
                s.count * 0.5 * (f(s.q_first) + f(s.q_last))
            };
            acc.add(term);
        }
        acc.value()
    }

    /// Two sums in one pass; see `SumPath::sum_pair`.
    pub(crate) fn sum_pair<F: Fn(f64) -> (f64, f64)>(&self, f: F) -> (f64, f64) {
        let mut a = KahanSum::new();
        let mut b = KahanSum::new();
        for s in &self.segments {
            if s.q_first == s.q_last {
                let (x, y) = f(s.q_first);
                a.add(s.count * x);
                b.add(s.count * y);
            } else {
                let (x0, y0) = f(s.q_first);
                let (x1, y1) = f(s.q_last);
                a.add(s.count * 0.5 * (x0 + x1));
                b.add(s.count * 0.5 * (y0 + y1));
            }
        }
        (a.value(), b.value())
    }

    fn prefix(&self) -> &Prefix {
        self.prefix.get_or_init(|| {
            let mut mass = Vec::with_capacity(self.segments.len());
            let mut m = KahanSum::new();
            for s in &self.segments {
                m.add(s.count * 0.5 * (s.q_first + s.q_last));
                mass.push(m.value());
            }
            Prefix { mass }
        })
    }

    /// Total weight mass over all ranks.
    pub fn total_mass(&self) -> f64 {
        self.prefix().mass.last().copied().unwrap_or(0.0)
    }

    /// Weight mass of ranks `1..=rank`. Partial segments are pro-rated,
    /// which is accurate to the grouping tolerance of one segment.
    pub(crate) fn prefix_mass(&self, rank: u64) -> f64 {
        if rank == 0 {
            return 0.0;
        }
        let p = self.prefix();
        let i = self.segments.partition_point(|s| s.last_rank < rank);
        if i >= self.segments.len() {
            return self.total_mass();
        }
        let s = &self.segments[i];
        let before = if i == 0 { 0.0 } else { p.mass[i - 1] };
        let seg_mass = p.mass[i] - before;
        let take = (rank - s.first_rank + 1) as f64;
        before + seg_mass * (take / s.count).min(1.0)
    }
}

fn push_block_segments(block: &Block, grouping: Grouping, out: &mut Vec<Segment>) {
    let items = block.items;
    let copies = block.copies as f64;
    let mut emit = |a: u64, b: u64| {
        out.push(Segment {
            first_rank: block.start + (a - 1) * block.copies,
            last_rank: block.start + b * block.copies - 1,
            count: (b - a + 1) as f64 * copies,
            q_first: block.object_weight(a),
            q_last: block.object_weight(b),
        });
    };

    if block.survival.is_empty() {
        match plain_step(block, grouping) {
            Step::Single => emit(1, items),
            Step::PerItem => {
                for j in 1..=items {
                    emit(j, j);
                }
            }
            Step::Geometric(growth) => {
                let mut a = 1u64;
                while a <= items {
                    let b = grown_end(a, growth, items);
                    emit(a, b);
                    a = b + 1;
                }
            }
            Step::Fixed(len) => {
                let mut a = 1u64;
                while a <= items {
                    let b = (a + len - 1).min(items);
                    emit(a, b);
                    a = b + 1;
                }
            }
        }
    } else {
        // Filtered blocks: survival can bend or even un-sort the weights,
        // so segments are refined until the boundary and midpoint weights
        // agree to the tolerance.
        let ratio = match grouping {
            Grouping::Ratio(e) => 1.0 + e,
            Grouping::SumTarget(t) => 1.0 + t.sqrt() / 2.0,
        };
        let growth = match plain_step(block, grouping) {
            Step::Geometric(g) => g,
            _ => 1.0, // forces per-item start; refinement cannot widen
        };
        let mut a = 1u64;
        while a <= items {
            let mut b = grown_end(a, growth.max(1.0), items);
            while b > a && !span_uniform(block, a, b, ratio) {
                b = a + (b - a) / 2;
            }
            emit(a, b);
            a = b + 1;
        }
    }
}

enum Step {
    Single,
    PerItem,
    /// Rank grows by this factor per segment.
    Geometric(f64),
    /// Fixed run length in items.
    Fixed(u64),
}

fn plain_step(block: &Block, grouping: Grouping) -> Step {
    use crate::popularity::Shape;
    match (&block.shape, grouping) {
        (Shape::Uniform, _) => Step::Single,
        (Shape::Zipf { alpha }, Grouping::Ratio(e)) => Step::Geometric((1.0 + e).powf(1.0 / alpha)),
        (Shape::Zipf { .. }, Grouping::SumTarget(t)) => Step::Geometric(1.0 + t.sqrt() / 2.0),
        (Shape::Geometric { rho }, Grouping::Ratio(e)) => {
            let run = ((1.0 + e).ln() / (1.0 / rho).ln()).floor();
            if run >= 2.0 {
                Step::Fixed(run as u64)
            } else {
                Step::PerItem
            }
        }
        // Geometric tails decay a constant factor per rank, so grouping only
        // ever pays off for rho close to 1; per-item is exact and cheap at
        // the populations where geometric laws are used.
        (Shape::Geometric { .. }, Grouping::SumTarget(_)) => Step::PerItem,
        (Shape::Explicit { .. }, _) => Step::PerItem,
    }
}

fn grown_end(a: u64, growth: f64, items: u64) -> u64 {
    let target = (a as f64 * growth).floor();
    if target <= a as f64 {
        a.min(items)
    } else if target >= items as f64 {
        items
    } else {
        target as u64
    }
}

/// True when the weights at the span's ends and midpoint all agree to
/// within `ratio`.
fn span_uniform(block: &Block, a: u64, b: u64, ratio: f64) -> bool {
    let wa = block.object_weight(a);
    let wb = block.object_weight(b);
    let wm = block.object_weight(a + (b - a) / 2);
    let lo = wa.min(wb).min(wm);
    let hi = wa.max(wb).max(wm);
    lo > 0.0 && hi <= lo * ratio
}
