//! Parameter-space searches that turn a scheme into a frontier.
//!
//! [`grid_search`] evaluates every point of a rectangular grid;
//! [`random_refine_search`] draws seeded uniform samples and then samples
//! shrinking boxes around the frontier found so far. Both evaluate in
//! parallel on the current rayon pool and return the same frontier for any
//! number of threads.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frontier::Frontier;
use crate::model::{ChannelParams, RatePair, SchemeId};
use crate::quadrature::FixedRule;
use crate::schemes::{param_specs, Evaluator, ModeWeighting, ParamSupport};

/// Default step for `[0, 1]` parameters.
pub const UNIT_STEP: f64 = 0.01;
/// Default step for `(−1, 1)` parameters.
pub const OPEN_STEP: f64 = 0.02;
/// Open intervals are clipped to `±OPEN_CLIP`.
pub const OPEN_CLIP: f64 = 0.99;
/// Largest grid [`grid_search`] accepts by default.
pub const DEFAULT_MAX_GRID_POINTS: u128 = 500_000_000;

fn round12(x: f64) -> f64 {
    let r = (x * 1e12).round() / 1e12;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// One dimension of a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Axis {
    Fixed(f64),
    /// `origin + k·step` for every integer `k` landing in `[lo, hi]`, plus
    /// both endpoints.
    Range {
        lo: f64,
        hi: f64,
        step: f64,
        origin: f64,
    },
}

impl Axis {
    pub fn range(lo: f64, hi: f64, step: f64) -> Self {
        let origin = if lo <= 0.0 && 0.0 <= hi { 0.0 } else { lo };
        Axis::Range { lo, hi, step, origin }
    }

    pub fn default_for(support: ParamSupport) -> Self {
        match support {
            ParamSupport::Unit => Axis::range(0.0, 1.0, UNIT_STEP),
            ParamSupport::Open => Axis::range(-OPEN_CLIP, OPEN_CLIP, OPEN_STEP),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match *self {
            Axis::Fixed(v) => vec![v],
            Axis::Range { lo, hi, step, origin } => {
                let k0 = ((lo - origin) / step - 1e-9).ceil() as i64;
                let k1 = ((hi - origin) / step + 1e-9).floor() as i64;
                let mut v: Vec<f64> = (k0..=k1).map(|k| round12(origin + k as f64 * step)).collect();
                v.retain(|x| *x >= lo && *x <= hi);
                v.push(lo);
                v.push(hi);
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            }
        }
    }

    pub fn len(&self) -> usize {
        self.values().len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Closed interval the axis spans.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Axis::Fixed(v) => (v, v),
            Axis::Range { lo, hi, .. } => (lo, hi),
        }
    }

    fn validate(&self, name: &str, support: ParamSupport) -> Result<()> {
        let (lo, hi) = self.bounds();
        if let Axis::Range { step, origin, .. } = *self {
            if !(step > 0.0 && step.is_finite() && origin.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name}: step must be positive and finite")));
            }
            if lo > hi {
                return Err(Error::InvalidArgument(format!("{name}: empty range {lo}..{hi}")));
            }
        }
        if !(support.contains(lo) && support.contains(hi)) {
            return Err(Error::InvalidArgument(format!("{name}: {lo}..{hi} leaves the parameter's support")));
        }
        Ok(())
    }
}

impl FromStr for Axis {
    type Err = Error;

    /// `value`, `lo:hi:step` or `lo:hi:step:origin`.
    fn from_str(s: &str) -> Result<Self> {
        let num = |t: &str| -> Result<f64> {
            t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("not a number: '{t}' in '{s}'")))
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [v] => Ok(Axis::Fixed(num(v)?)),
            [lo, hi, step] => Ok(Axis::range(num(lo)?, num(hi)?, num(step)?)),
            [lo, hi, step, origin] => {
                Ok(Axis::Range { lo: num(lo)?, hi: num(hi)?, step: num(step)?, origin: num(origin)? })
            }
            _ => Err(Error::Parse(format!("expected value or lo:hi:step, got '{s}'"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::Fixed(v) => write!(f, "{v}"),
            Axis::Range { lo, hi, step, origin } => write!(f, "{lo}:{hi}:{step}:{origin}"),
        }
    }
}

/// One axis per scheme parameter, in flat parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    scheme: SchemeId,
    names: Vec<String>,
    supports: Vec<ParamSupport>,
    axes: Vec<Axis>,
}

impl GridSpec {
    pub fn default_for(scheme: SchemeId, cos_order: usize) -> Self {
        let specs = param_specs(scheme, cos_order);
        GridSpec {
            scheme,
            names: specs.iter().map(|s| s.name.clone()).collect(),
            supports: specs.iter().map(|s| s.support).collect(),
            axes: specs.iter().map(|s| Axis::default_for(s.support)).collect(),
        }
    }

    /// Default grid with every range axis set to `step`.
    pub fn with_step(scheme: SchemeId, cos_order: usize, unit_step: f64, open_step: f64) -> Self {
        let mut g = GridSpec::default_for(scheme, cos_order);
        for (axis, support) in g.axes.iter_mut().zip(&g.supports) {
            *axis = match support {
                ParamSupport::Unit => Axis::range(0.0, 1.0, unit_step),
                ParamSupport::Open => Axis::range(-OPEN_CLIP, OPEN_CLIP, open_step),
            };
        }
        g
    }

    pub fn scheme(&self) -> SchemeId {
        self.scheme
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names.iter().position(|n| n == name).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "scheme {} has no parameter '{name}' (parameters: {})",
                self.scheme,
                self.names.join(", ")
            ))
        })
    }

    pub fn set(&mut self, name: &str, axis: Axis) -> Result<()> {
        let i = self.index_of(name)?;
        axis.validate(name, self.supports[i])?;
        self.axes[i] = axis;
        Ok(())
    }

    pub fn fix(&mut self, name: &str, value: f64) -> Result<()> {
        self.set(name, Axis::Fixed(value))
    }

    pub fn validate(&self) -> Result<()> {
        for ((n, a), s) in self.names.iter().zip(&self.axes).zip(&self.supports) {
            a.validate(n, *s)?;
        }
        Ok(())
    }

    /// Number of grid points.
    pub fn size(&self) -> u128 {
        self.axes.iter().map(|a| a.len() as u128).product()
    }

    /// `name = axis` pairs, for manifests.
    pub fn describe(&self) -> Vec<(String, String)> {
        self.names.iter().zip(&self.axes).map(|(n, a)| (n.clone(), a.to_string())).collect()
    }
}

/// Evaluation settings shared by both searches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Trapezoid points on the full circle for every `phi` evaluation.
    pub rule_points: usize,
    pub weighting: ModeWeighting,
    pub max_grid_points: u128,
    /// Parameter points per parallel work item.
    pub chunk_size: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            rule_points: 4096,
            weighting: ModeWeighting::Derivation,
            max_grid_points: DEFAULT_MAX_GRID_POINTS,
            chunk_size: 2048,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SearchBudget {
    pub max_evaluations: u64,
    pub seed: u64,
    pub refinement_rounds: u32,
}

impl SearchBudget {
    pub fn new(max_evaluations: u64, seed: u64, refinement_rounds: u32) -> Result<Self> {
        if max_evaluations == 0 {
            return Err(Error::InvalidArgument("search budget must be positive".into()));
        }
        Ok(SearchBudget { max_evaluations, seed, refinement_rounds })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub frontier: Frontier,
    /// Parameter points evaluated, including skipped ones.
    pub evaluations: u64,
    /// Points whose filters were unstable or whose spectra went negative.
    pub skipped: u64,
}

/// Builds one evaluator per worker; evaluators hold a non-shared cache.
#[derive(Clone)]
struct Factory {
    ch: ChannelParams,
    scheme: SchemeId,
    rule: Arc<FixedRule>,
    weighting: ModeWeighting,
}

impl Factory {
    fn new(ch: &ChannelParams, scheme: SchemeId, rule_points: usize, weighting: ModeWeighting) -> Result<Self> {
        Ok(Factory { ch: *ch, scheme, rule: Arc::new(FixedRule::new(rule_points)?), weighting })
    }

    fn make(&self) -> Evaluator {
        Evaluator::new(self.ch, self.scheme, self.rule.clone()).with_weighting(self.weighting)
    }
}

fn make_evaluator(ch: &ChannelParams, scheme: SchemeId, opts: &SearchOptions) -> Result<Factory> {
    Factory::new(ch, scheme, opts.rule_points, opts.weighting)
}

struct Partial {
    frontier: Frontier,
    skipped: u64,
}

fn eval_point(ev: &Evaluator, seq: u64, values: &[f64], acc: &mut Partial) -> Result<()> {
    match ev.evaluate(values) {
        Ok(pts) => {
            for mut p in pts {
                p.provenance.seq = seq;
                acc.frontier.insert(p);
            }
            Ok(())
        }
        Err(Error::UnstableFilter | Error::NegativeDensity { .. }) => {
            acc.skipped += 1;
            Ok(())
        }
        Err(e) => Err(e),
    }
}

/// Evaluates `count` points `point(i)` for `i` in `start..start + count`,
/// with sequence numbers `start + i`.
fn evaluate_range(
    ev: &Factory,
    start: u64,
    count: u64,
    chunk: u64,
    point: impl Fn(u64) -> Vec<f64> + Sync,
) -> Result<Partial> {
    let chunks = count.div_ceil(chunk);
    let parts: Vec<Partial> = (0..chunks)
        .into_par_iter()
        .map_init(
            || ev.make(),
            |ev, c| {
                let mut acc = Partial { frontier: Frontier::new(), skipped: 0 };
                let lo = c * chunk;
                let hi = (lo + chunk).min(count);
                for i in lo..hi {
                    eval_point(ev, start + i, &point(i), &mut acc)?;
                }
                Ok(acc)
            },
        )
        .collect::<Result<_>>()?;
    let skipped = parts.iter().map(|p| p.skipped).sum();
    let frontier = Frontier::from_points(parts.into_iter().flat_map(|p| p.frontier.into_points()));
    Ok(Partial { frontier, skipped })
}

/// Evaluates the scheme at every grid point and returns the Pareto frontier
/// of all resulting vertices. The first axes vary fastest, so consecutive
/// points share filter coefficients.
pub fn grid_search(ch: &ChannelParams, grid: &GridSpec, opts: &SearchOptions) -> Result<SearchResult> {
    grid.validate()?;
    let size = grid.size();
    if size == 0 {
        return Err(Error::Empty("grid"));
    }
    if size > opts.max_grid_points {
        return Err(Error::GridTooLarge(size, opts.max_grid_points));
    }
    let ev = make_evaluator(ch, grid.scheme, opts)?;
    let values: Vec<Vec<f64>> = grid.axes.iter().map(|a| a.values()).collect();
    let point = |mut i: u64| -> Vec<f64> {
        values
            .iter()
            .map(|v| {
                let n = v.len() as u64;
                let x = v[(i % n) as usize];
                i /= n;
                x
            })
            .collect()
    };
    let part = evaluate_range(&ev, 0, size as u64, opts.chunk_size.max(1) as u64, point)?;
    Ok(SearchResult { frontier: part.frontier, evaluations: size as u64, skipped: part.skipped })
}

const SAMPLE_BATCH: u64 = 1 << 16;
const REFINE_HALF_WIDTH: f64 = 0.2;
const ANCHOR_HALF_WIDTH: f64 = 0.5;

fn clip_open(v: f64, lo: f64, hi: f64) -> f64 {
    v.clamp(lo, hi)
}

/// Seeded random search within the grid's bounds: fixed axes stay fixed,
/// range axes are sampled continuously. Round 0 samples the whole box (or a
/// box of half the range around `anchor`); each later round samples boxes
/// around the current frontier's parameter points, halving the box width
/// every round. The budget is shared equally between rounds.
pub fn random_refine_search(
    ch: &ChannelParams,
    space: &GridSpec,
    budget: &SearchBudget,
    anchor: Option<&[f64]>,
    opts: &SearchOptions,
) -> Result<SearchResult> {
    space.validate()?;
    if budget.max_evaluations == 0 {
        return Err(Error::InvalidArgument("search budget must be positive".into()));
    }
    let dim = space.axes.len();
    if let Some(a) = anchor {
        if a.len() != dim {
            return Err(Error::DimensionMismatch(format!("anchor has {} values, expected {dim}", a.len())));
        }
    }
    let bounds: Vec<(f64, f64)> = space.axes.iter().map(|a| a.bounds()).collect();
    let ev = make_evaluator(ch, space.scheme, opts)?;
    let rounds = budget.refinement_rounds as u64 + 1;
    let per_round = budget.max_evaluations / rounds;
    let first_round = budget.max_evaluations - per_round * (rounds - 1);

    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut frontier = Frontier::new();
    let mut skipped = 0;
    let mut seq = 0u64;
    for round in 0..rounds {
        let n = if round == 0 { first_round } else { per_round };
        let centers: Vec<Vec<f64>> = if round == 0 {
            anchor.map(|a| vec![a.to_vec()]).unwrap_or_default()
        } else {
            frontier.points().iter().map(|p| p.provenance.params.clone()).collect()
        };
        let half = match (round, centers.is_empty()) {
            (0, _) => ANCHOR_HALF_WIDTH,
            _ => REFINE_HALF_WIDTH * 0.5f64.powi(round as i32 - 1),
        };
        let mut done = 0;
        while done < n {
            let batch = (n - done).min(SAMPLE_BATCH);
            let samples: Vec<Vec<f64>> = (0..batch)
                .map(|j| {
                    let center = (!centers.is_empty()).then(|| &centers[((done + j) % centers.len() as u64) as usize]);
                    bounds
                        .iter()
                        .enumerate()
                        .map(|(d, &(lo, hi))| {
                            if lo == hi {
                                return lo;
                            }
                            let (a, b) = match center {
                                Some(c) => {
                                    let w = half * (hi - lo);
                                    ((c[d] - w).max(lo), (c[d] + w).min(hi))
                                }
                                None => (lo, hi),
                            };
                            clip_open(rng.gen_range(a..=b), lo, hi)
                        })
                        .collect()
                })
                .collect();
            let part = evaluate_range(&ev, seq, batch, opts.chunk_size.max(1) as u64, |i| samples[i as usize].clone())?;
            frontier = frontier.merge(&part.frontier);
            skipped += part.skipped;
            seq += batch;
            done += batch;
        }
    }
    Ok(SearchResult { frontier, evaluations: budget.max_evaluations, skipped })
}

/// Re-evaluates every frontier point with a finer rule and rebuilds the
/// frontier from the refreshed values.
pub fn polish(
    ch: &ChannelParams,
    frontier: &Frontier,
    rule_points: usize,
    weighting: ModeWeighting,
) -> Result<Frontier> {
    let Some(first) = frontier.points().first() else {
        return Ok(Frontier::new());
    };
    let ev = Factory::new(ch, first.provenance.scheme, rule_points, weighting)?;
    let pts: Vec<RatePair> = frontier
        .points()
        .par_iter()
        .map_init(
            || ev.make(),
            |ev, p| {
                let mut q = ev.replay(&p.provenance)?;
                q.provenance.seq = p.provenance.seq;
                Ok(q)
            },
        )
        .collect::<Result<_>>()?;
    Ok(Frontier::from_points(pts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{sason_rates, SasonParams};

    fn ch() -> ChannelParams {
        ChannelParams::new(6.0, 1.0, 3.0, 0.1).unwrap()
    }

    fn small_opts() -> SearchOptions {
        SearchOptions { rule_points: 256, chunk_size: 7, ..SearchOptions::default() }
    }

    #[test]
    fn axis_values() {
        let a = Axis::default_for(ParamSupport::Unit).values();
        assert_eq!(a.len(), 101);
        assert_eq!((a[0], a[37], a[100]), (0.0, 0.37, 1.0));
        let o = Axis::default_for(ParamSupport::Open).values();
        assert_eq!(o.len(), 101);
        assert_eq!((o[0], o[1], o[50], o[100]), (-0.99, -0.98, 0.0, 0.99));
        assert_eq!("0:1:0.3".parse::<Axis>().unwrap().values(), [0.0, 0.3, 0.6, 0.9, 1.0]);
        assert_eq!("0.25".parse::<Axis>().unwrap(), Axis::Fixed(0.25));
        assert_eq!("0.1:0.5:0.2:0".parse::<Axis>().unwrap().values(), [0.1, 0.2, 0.4, 0.5]);
        assert!("0:1".parse::<Axis>().is_err());
        assert!("a:1:0.1".parse::<Axis>().is_err());
    }

    #[test]
    fn grid_spec_validation() {
        let mut g = GridSpec::default_for(SchemeId::Arma, 0);
        assert_eq!(g.size(), 101u128.pow(7));
        assert!(g.fix("kappa1", 0.2605).is_ok());
        assert!(g.fix("kappa1", 1.0).is_err());
        assert!(g.fix("alpha", 1.5).is_err());
        assert!(g.fix("nope", 0.0).is_err());
        assert!(g.set("lambda", "0:1:0".parse().unwrap()).is_err());
        let opts = SearchOptions { max_grid_points: 1000, ..small_opts() };
        assert!(matches!(grid_search(&ch(), &g, &opts), Err(Error::GridTooLarge(..))));
    }

    #[test]
    fn single_point_grid() {
        let mut g = GridSpec::default_for(SchemeId::Sason, 0);
        for (n, v) in [("alpha", 0.3), ("beta", 0.6), ("lambda", 0.4)] {
            g.fix(n, v).unwrap();
        }
        let r = grid_search(&ch(), &g, &small_opts()).unwrap();
        let want = sason_rates(&ch(), &SasonParams::new(0.3, 0.6, 0.4).unwrap());
        assert_eq!(r.frontier.len(), 1);
        assert_eq!((r.frontier.points()[0].r1, r.frontier.points()[0].r2), (want.r1, want.r2));
    }

    #[test]
    fn sub_grid_is_dominated() {
        let fine = GridSpec::with_step(SchemeId::Sason, 0, 0.05, 0.1);
        let coarse = GridSpec::with_step(SchemeId::Sason, 0, 0.1, 0.1);
        let a = grid_search(&ch(), &fine, &small_opts()).unwrap().frontier;
        let b = grid_search(&ch(), &coarse, &small_opts()).unwrap().frontier;
        assert!(a.dominates(&b, 0.0));
    }

    #[test]
    fn parallel_grid_is_deterministic() {
        let mut g = GridSpec::with_step(SchemeId::Arma, 0, 0.25, 0.5);
        g.fix("kappa2", 0.3).unwrap();
        let opts = small_opts();
        let a = grid_search(&ch(), &g, &opts).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| grid_search(&ch(), &g, &SearchOptions { chunk_size: 1, ..opts })).unwrap();
        assert_eq!(a, b);
        let ev = make_evaluator(&ch(), SchemeId::Arma, &opts).unwrap().make();
        for p in a.frontier.points() {
            let q = ev.replay(&p.provenance).unwrap();
            assert!((q.r1 - p.r1).abs() <= 1e-12 && (q.r2 - p.r2).abs() <= 1e-12);
        }
    }

    #[test]
    fn random_search_is_reproducible() {
        let g = GridSpec::default_for(SchemeId::HkCorollary, 0);
        let budget = SearchBudget::new(1, 42, 0).unwrap();
        let a = random_refine_search(&ch(), &g, &budget, None, &small_opts()).unwrap();
        let b = random_refine_search(&ch(), &g, &budget, None, &small_opts()).unwrap();
        assert_eq!(a, b);
        assert!(!a.frontier.is_empty() && a.frontier.len() <= 3);
        let budget = SearchBudget::new(300, 7, 2).unwrap();
        let a = random_refine_search(&ch(), &g, &budget, None, &small_opts()).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
        let b = pool.install(|| random_refine_search(&ch(), &g, &budget, None, &small_opts())).unwrap();
        assert_eq!(a, b);
        assert!(SearchBudget::new(0, 1, 0).is_err());
    }

    #[test]
    fn doubling_budget_never_shrinks() {
        let g = GridSpec::default_for(SchemeId::Arma, 0);
        let small = SearchBudget::new(200, 11, 0).unwrap();
        let large = SearchBudget::new(400, 11, 0).unwrap();
        let a = random_refine_search(&ch(), &g, &small, None, &small_opts()).unwrap().frontier;
        let b = random_refine_search(&ch(), &g, &large, None, &small_opts()).unwrap().frontier;
        assert!(b.dominates(&a, 0.0));
    }

    #[test]
    fn anchored_search_respects_fixed_axes() {
        let mut g = GridSpec::default_for(SchemeId::Arma, 0);
        for (n, v) in [("rho_x1", 0.7425), ("rho_x2", 0.495), ("kappa1", 0.2605), ("kappa2", 0.9801)] {
            g.fix(n, v).unwrap();
        }
        let anchor = [0.9, 0.3, 0.8, 0.7425, 0.495, 0.2605, 0.9801];
        let budget = SearchBudget::new(64, 3, 1).unwrap();
        let r = random_refine_search(&ch(), &g, &budget, Some(&anchor), &small_opts()).unwrap();
        for p in r.frontier.points() {
            assert_eq!(&p.provenance.params[3..], &anchor[3..]);
        }
        assert!(random_refine_search(&ch(), &g, &budget, Some(&anchor[..3]), &small_opts()).is_err());
    }

    #[test]
    fn invalid_spectra_are_skipped() {
        let mut g = GridSpec::with_step(SchemeId::Theorem2, 1, 0.5, 0.5);
        g.set("r11_1", Axis::range(-0.9, 0.9, 0.9)).unwrap();
        let r = grid_search(&ch(), &g, &small_opts()).unwrap();
        assert!(r.skipped > 0);
        assert!(!r.frontier.is_empty());
    }
}
