//! Value-function oracles and their continuous extensions.
//!
//! Agent sets are boolean membership masks indexed by agent. The multilinear
//! extension `V(q)` is the expected value when each agent joins
//! independently with probability `q_i`; it is exact for additive and
//! symmetric functions and Monte Carlo otherwise.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::rng;

pub const DEFAULT_SAMPLES: usize = 10_000;

/// Largest agent count accepted by exhaustive (exponential-time) routines.
pub const EXHAUSTIVE_LIMIT: usize = 16;

type SetFn<T> = Arc<dyn Fn(&[bool]) -> T + Send + Sync>;

#[derive(Clone)]
pub enum ValueFunction<T> {
    Additive(Vec<T>),
    /// `g(|S|)` tabulated for sizes `0..=n`.
    Symmetric(Vec<T>),
    Coverage(Coverage<T>),
    Oracle {
        n: usize,
        f: SetFn<T>,
    },
}

impl<T: fmt::Debug> fmt::Debug for ValueFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Additive(v) => f.debug_tuple("Additive").field(v).finish(),
            Self::Symmetric(g) => f.debug_tuple("Symmetric").field(g).finish(),
            Self::Coverage(c) => f.debug_tuple("Coverage").field(c).finish(),
            Self::Oracle { n, .. } => f.debug_struct("Oracle").field("n", n).finish(),
        }
    }
}

/// Weighted coverage: `v(S)` is the total weight of elements covered by
/// some agent in `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coverage<T> {
    weights: Vec<T>,
    covers: Vec<Vec<usize>>,
}

impl<T: Real> Coverage<T> {
    pub fn new(weights: Vec<T>, covers: Vec<Vec<usize>>) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) {
            return Err(Error::InvalidValueFunction(
                "coverage weights must be finite and nonnegative".into(),
            ));
        }
        if covers.iter().flatten().any(|&e| e >= weights.len()) {
            return Err(Error::InvalidValueFunction(
                "agent covers an element outside the universe".into(),
            ));
        }
        let covers = covers
            .into_iter()
            .map(|mut c| {
                c.sort_unstable();
                c.dedup();
                c
            })
            .collect();
        Ok(Self { weights, covers })
    }

    /// Parses the text format: one line per agent, whitespace-separated
    /// `element:weight` pairs. Blank lines and `#` comments are skipped; an
    /// agent covering nothing is written as `-`. An element must carry the
    /// same weight everywhere it appears.
    pub fn parse(text: &str) -> Result<Self> {
        let mut ids: HashMap<String, usize> = HashMap::new();
        let mut weights: Vec<T> = Vec::new();
        let mut covers = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut agent = Vec::new();
            for tok in line.split_whitespace() {
                if tok == "-" {
                    continue;
                }
                let (name, w) = tok.split_once(':').ok_or_else(|| {
                    Error::InvalidValueFunction(format!(
                        "line {}: expected element:weight, got {tok:?}",
                        lineno + 1
                    ))
                })?;
                let w: f64 = w.parse().map_err(|_| {
                    Error::InvalidValueFunction(format!("line {}: bad weight {w:?}", lineno + 1))
                })?;
                let w = T::of(w);
                let id = match ids.get(name) {
                    Some(&id) => {
                        if weights[id] != w {
                            return Err(Error::InvalidValueFunction(format!(
                                "line {}: element {name:?} has conflicting weights",
                                lineno + 1
                            )));
                        }
                        id
                    }
                    None => {
                        ids.insert(name.to_string(), weights.len());
                        weights.push(w);
                        weights.len() - 1
                    }
                };
                agent.push(id);
            }
            covers.push(agent);
        }
        Self::new(weights, covers)
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn covers(&self) -> &[Vec<usize>] {
        &self.covers
    }

    fn value(&self, members: &[bool], scratch: &mut Vec<bool>) -> T {
        scratch.clear();
        scratch.resize(self.weights.len(), false);
        let mut total = T::zero();
        for (agent, _) in members.iter().enumerate().filter(|(_, &m)| m) {
            for &e in &self.covers[agent] {
                if !scratch[e] {
                    scratch[e] = true;
                    total = total + self.weights[e];
                }
            }
        }
        total
    }
}

/// Point estimate with its standard error (zero for exact evaluations).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub stderr: T,
}

impl<T: Real> Estimate<T> {
    pub fn exact(value: T) -> Self {
        Self {
            value,
            stderr: T::zero(),
        }
    }

    /// Sample mean and standard error of the mean.
    pub fn from_samples(xs: &[T]) -> Self {
        let n = T::of_usize(xs.len());
        let mean = xs.iter().copied().sum::<T>() / n;
        if xs.len() < 2 {
            return Self {
                value: mean,
                stderr: T::zero(),
            };
        }
        let ss: T = xs.iter().map(|&x| (x - mean) * (x - mean)).sum();
        let var = ss / (n - T::one());
        Self {
            value: mean,
            stderr: (var / n).sqrt(),
        }
    }
}

pub fn mask_of(n: usize, members: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &i in members {
        m[i] = true;
    }
    m
}

impl<T: Real> ValueFunction<T> {
    pub fn additive(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidValueFunction("no agents".into()));
        }
        if values.iter().any(|v| !(*v >= T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidValueFunction(
                "additive values must be finite and nonnegative".into(),
            ));
        }
        Ok(Self::Additive(values))
    }

    /// `g` tabulated on sizes `0..=n`. Requires `g(0) = 0` and `g`
    /// nondecreasing; concavity (submodularity) is checked separately by
    /// [`ValueFunction::check_submodular`] or [`ValueFunction::is_concave_sizes`].
    pub fn symmetric(g: Vec<T>) -> Result<Self> {
        if g.len() < 2 {
            return Err(Error::InvalidValueFunction(
                "symmetric table needs sizes 0..=n with n >= 1".into(),
            ));
        }
        if g[0] != T::zero() {
            return Err(Error::InvalidValueFunction("g(0) must be 0".into()));
        }
        if g.iter().any(|x| !x.is_finite()) || g.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidValueFunction(
                "g must be finite and nondecreasing".into(),
            ));
        }
        Ok(Self::Symmetric(g))
    }

    pub fn coverage(c: Coverage<T>) -> Result<Self> {
        if c.covers.is_empty() {
            return Err(Error::InvalidValueFunction("no agents".into()));
        }
        Ok(Self::Coverage(c))
    }

    pub fn oracle<F>(n: usize, f: F) -> Self
    where
        F: Fn(&[bool]) -> T + Send + Sync + 'static,
    {
        Self::Oracle { n, f: Arc::new(f) }
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Additive(v) => v.len(),
            Self::Symmetric(g) => g.len() - 1,
            Self::Coverage(c) => c.covers.len(),
            Self::Oracle { n, .. } => *n,
        }
    }

    pub fn additive_values(&self) -> Option<&[T]> {
        match self {
            Self::Additive(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_additive(&self) -> bool {
        matches!(self, Self::Additive(_))
    }

    pub fn is_symmetric(&self) -> bool {
        matches!(self, Self::Symmetric(_))
    }

    /// Whether `V(q)` has a closed form here (no sampling needed).
    pub fn has_exact_extension(&self) -> bool {
        matches!(self, Self::Additive(_) | Self::Symmetric(_))
    }

    pub fn evaluate(&self, members: &[bool]) -> T {
        match self {
            Self::Additive(v) => v
                .iter()
                .zip(members)
                .filter(|(_, &m)| m)
                .map(|(x, _)| *x)
                .sum(),
            Self::Symmetric(g) => g[members.iter().filter(|&&m| m).count()],
            Self::Coverage(c) => c.value(members, &mut Vec::new()),
            Self::Oracle { f, .. } => f(members),
        }
    }

    pub fn evaluate_set(&self, members: &[usize]) -> T {
        self.evaluate(&mask_of(self.n(), members))
    }

    /// `v(S + i) - v(S)` for `i` not in `S`.
    pub fn marginal(&self, members: &[bool], i: usize) -> T {
        match self {
            Self::Additive(v) => v[i],
            Self::Symmetric(g) => {
                let s = members.iter().filter(|&&m| m).count();
                g[s + 1] - g[s]
            }
            _ => {
                let mut with = members.to_vec();
                with[i] = true;
                self.evaluate(&with) - self.evaluate(members)
            }
        }
    }

    fn check_quantiles(&self, q: &[T]) -> Result<()> {
        if q.len() != self.n() {
            return Err(Error::Dimension(format!(
                "{} quantiles for {} agents",
                q.len(),
                self.n()
            )));
        }
        if q.iter().any(|x| !(*x >= T::zero() && *x <= T::one())) {
            return Err(Error::InvalidParameter(
                "quantiles must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Multilinear extension `V(q)`: exact for additive and symmetric
    /// functions, otherwise the mean of `samples` independent draws.
    pub fn multilinear(&self, q: &[T], samples: usize, seed: u64) -> Result<Estimate<T>> {
        self.check_quantiles(q)?;
        match self {
            Self::Additive(v) => Ok(Estimate::exact(v.iter().zip(q).map(|(a, b)| *a * *b).sum())),
            Self::Symmetric(g) => Ok(Estimate::exact(expected_over_sizes(g, q))),
            _ => {
                if samples == 0 {
                    return Err(Error::ZeroSamples);
                }
                if q.iter().all(|x| *x == T::zero()) {
                    return Ok(Estimate::exact(self.evaluate(&vec![false; q.len()])));
                }
                let mut r = rng::stream(seed, 0);
                let mut mask = vec![false; q.len()];
                let mut scratch = Vec::new();
                let draws: Vec<T> = (0..samples)
                    .map(|_| {
                        for (m, qi) in mask.iter_mut().zip(q) {
                            *m = T::of(r.gen::<f64>()) < *qi;
                        }
                        self.eval_with(&mask, &mut scratch)
                    })
                    .collect();
                Ok(Estimate::from_samples(&draws))
            }
        }
    }

    fn eval_with(&self, mask: &[bool], scratch: &mut Vec<bool>) -> T {
        match self {
            Self::Coverage(c) => c.value(mask, scratch),
            _ => self.evaluate(mask),
        }
    }

    /// Exact `V(q)` by summing over all `2^n` sets. Exponential; `n <= 16`.
    pub fn multilinear_exhaustive(&self, q: &[T]) -> Result<T> {
        self.check_quantiles(q)?;
        let n = self.n();
        if n > EXHAUSTIVE_LIMIT {
            return Err(Error::TooLarge {
                n,
                limit: EXHAUSTIVE_LIMIT,
            });
        }
        let mut mask = vec![false; n];
        let mut total = T::zero();
        for bits in 0u32..(1u32 << n) {
            let mut p = T::one();
            for i in 0..n {
                mask[i] = bits >> i & 1 == 1;
                p = p * if mask[i] { q[i] } else { T::one() - q[i] };
            }
            if p > T::zero() {
                total = total + p * self.evaluate(&mask);
            }
        }
        Ok(total)
    }

    /// `∂V/∂q_i = E[v(S + i) - v(S - i)]` with `S` drawn from `q`.
    ///
    /// The extension is linear in each coordinate, so this times a step
    /// gives the exact change in `V`. Closed form for additive and symmetric
    /// functions; otherwise both terms are evaluated on the same draws.
    pub fn partial(&self, q: &[T], i: usize, samples: usize, seed: u64) -> Result<Estimate<T>> {
        self.check_quantiles(q)?;
        if i >= q.len() {
            return Err(Error::Dimension(format!("agent {i} out of range")));
        }
        match self {
            Self::Additive(v) => Ok(Estimate::exact(v[i])),
            Self::Symmetric(g) => {
                let mut rest = q.to_vec();
                rest[i] = T::zero();
                let lift: T = poisson_binomial(&rest)
                    .iter()
                    .enumerate()
                    .filter(|(s, _)| s + 1 < g.len())
                    .map(|(s, p)| *p * (g[s + 1] - g[s]))
                    .sum();
                Ok(Estimate::exact(lift))
            }
            _ => {
                if samples == 0 {
                    return Err(Error::ZeroSamples);
                }
                let mut r = rng::stream(seed, 0);
                let mut mask = vec![false; q.len()];
                let mut scratch = Vec::new();
                let draws: Vec<T> = (0..samples)
                    .map(|_| {
                        for (m, qj) in mask.iter_mut().zip(q) {
                            *m = T::of(r.gen::<f64>()) < *qj;
                        }
                        mask[i] = false;
                        let without = self.eval_with(&mask, &mut scratch);
                        mask[i] = true;
                        self.eval_with(&mask, &mut scratch) - without
                    })
                    .collect();
                Ok(Estimate::from_samples(&draws))
            }
        }
    }

    /// Exact `∂V/∂q_i` by enumeration over the other agents (`n <= 16`).
    pub fn partial_exhaustive(&self, q: &[T], i: usize) -> Result<T> {
        let mut hi = q.to_vec();
        let mut lo = q.to_vec();
        hi[i] = T::one();
        lo[i] = T::zero();
        Ok(self.multilinear_exhaustive(&hi)? - self.multilinear_exhaustive(&lo)?)
    }

    /// `V(q + delta e_i) - V(q)`, with `q_i + delta` capped at 1.
    pub fn marginal_gain(
        &self,
        q: &[T],
        i: usize,
        delta: T,
        samples: usize,
        seed: u64,
    ) -> Result<Estimate<T>> {
        let step = (q[i] + delta).min(T::one()) - q[i];
        let d = self.partial(q, i, samples, seed)?;
        Ok(Estimate {
            value: d.value * step,
            stderr: d.stderr * step,
        })
    }

    /// Exact marginal gain by exhaustive enumeration (`n <= 16`).
    pub fn marginal_gain_exhaustive(&self, q: &[T], i: usize, delta: T) -> Result<T> {
        let mut raised = q.to_vec();
        raised[i] = (q[i] + delta).min(T::one());
        Ok(self.multilinear_exhaustive(&raised)? - self.multilinear_exhaustive(q)?)
    }

    /// Upper concave hull of `{(s, g(s))}` for symmetric functions.
    pub fn concave_hull_sizes(&self) -> Result<SizeHull<T>> {
        match self {
            Self::Symmetric(g) => Ok(SizeHull::new(g)),
            _ => Err(Error::WrongVariant {
                expected: "symmetric",
            }),
        }
    }

    /// Concave closure at the symmetric marginal vector `(q, ..., q)`:
    /// `ḡ(n q)`, attained by mixing sets of size `floor(nq)` and `ceil(nq)`.
    pub fn concave_closure_symmetric(&self, q: T) -> Result<T> {
        let hull = self.concave_hull_sizes()?;
        if !(q >= T::zero() && q <= T::one()) {
            return Err(Error::InvalidParameter(format!(
                "quantile {q} outside [0, 1]"
            )));
        }
        Ok(hull.eval(T::of_usize(self.n()) * q))
    }

    /// Whether a symmetric table has nonincreasing increments.
    pub fn is_concave_sizes(&self) -> Option<bool> {
        match self {
            Self::Symmetric(g) => Some(g.windows(3).all(|w| {
                let tol = T::contact_tol(w[2]);
                w[2] - w[1] <= w[1] - w[0] + tol
            })),
            _ => None,
        }
    }

    /// Exhaustive check of monotonicity and diminishing returns.
    ///
    /// Uses the local form `v(S+i) - v(S) >= v(S+i+j) - v(S+j)` over all
    /// `S` and `i, j` outside `S`, which is equivalent to the `T ⊆ S` form.
    pub fn check_submodular(&self) -> Result<bool> {
        let n = self.n();
        if n > EXHAUSTIVE_LIMIT {
            return Err(Error::TooLarge {
                n,
                limit: EXHAUSTIVE_LIMIT,
            });
        }
        let size = 1usize << n;
        let mut table = Vec::with_capacity(size);
        let mut mask = vec![false; n];
        for bits in 0..size {
            for (i, m) in mask.iter_mut().enumerate() {
                *m = bits >> i & 1 == 1;
            }
            table.push(self.evaluate(&mask));
        }
        let scale = table.iter().fold(T::one(), |a, &b| a.max(b.abs()));
        let tol = T::contact_tol(scale);
        for s in 0..size {
            for i in (0..n).filter(|&i| s >> i & 1 == 0) {
                let gain_i = table[s | 1 << i] - table[s];
                if gain_i < -tol {
                    return Ok(false);
                }
                for j in (0..n).filter(|&j| j != i && s >> j & 1 == 0) {
                    let gain_after_j = table[s | 1 << i | 1 << j] - table[s | 1 << j];
                    if gain_after_j > gain_i + tol {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }
}

/// Distribution of `|S|` when each agent joins independently with
/// probability `q_i`.
pub fn poisson_binomial<T: Real>(q: &[T]) -> Vec<T> {
    let mut dist = vec![T::zero(); q.len() + 1];
    dist[0] = T::one();
    for (k, &p) in q.iter().enumerate() {
        for s in (1..=k + 1).rev() {
            dist[s] = dist[s] * (T::one() - p) + dist[s - 1] * p;
        }
        dist[0] = dist[0] * (T::one() - p);
    }
    dist
}

fn expected_over_sizes<T: Real>(g: &[T], q: &[T]) -> T {
    poisson_binomial(q)
        .iter()
        .zip(g)
        .map(|(p, v)| *p * *v)
        .sum()
}

/// Piecewise-linear upper concave hull over set sizes `[0, n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeHull<T> {
    vertices: Vec<(T, T)>,
}

impl<T: Real> SizeHull<T> {
    fn new(g: &[T]) -> Self {
        let pts: Vec<(T, T)> = g
            .iter()
            .enumerate()
            .map(|(s, &v)| (T::of_usize(s), v))
            .collect();
        let mut hull: Vec<(T, T)> = Vec::with_capacity(pts.len());
        for p in pts {
            while hull.len() >= 2 {
                let o = hull[hull.len() - 2];
                let a = hull[hull.len() - 1];
                let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
                if cross >= T::zero() {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        Self { vertices: hull }
    }

    pub fn vertices(&self) -> &[(T, T)] {
        &self.vertices
    }

    pub fn slopes(&self) -> Vec<T> {
        self.vertices
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect()
    }

    /// `ḡ(x)`, clamped to `[0, n]`.
    pub fn eval(&self, x: T) -> T {
        let last = self.vertices[self.vertices.len() - 1];
        let x = x.max(T::zero()).min(last.0);
        let k = self.vertices.partition_point(|v| v.0 <= x);
        if k >= self.vertices.len() {
            return last.1;
        }
        let (x0, y0) = self.vertices[k - 1];
        let (x1, y1) = self.vertices[k];
        y0 + (x - x0) / (x1 - x0) * (y1 - y0)
    }
}
