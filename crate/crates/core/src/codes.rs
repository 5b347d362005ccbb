//! Binary rate codes: place cells, grid cells, the extreme dyadic code and
//! general unions of arcs.
//!
//! A code is a list of modules. Module `i` has scale `lambda_i` (with
//! `1 / lambda_i` an integer) and holds neurons whose receptive field is a
//! half-open arc on `S^{lambda_i}`; neuron `j` of module `i` fires at rate
//! `mu` on stimulus `s` iff its arc contains `s mod lambda_i`. Place cell
//! codes are the one-module case `lambda_1 = 1`.
//!
//! Neurons are numbered from `0` in module order. A neuron normally owns one
//! arc; general binary codes give a neuron several arcs (the neuron fires
//! when any of them contains the stimulus).

use std::collections::HashMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{wrap, Arc, CirclePoint};
use crate::{Error, Result, EPS};

/// Default cap on raw breakpoints (`sum 2 / lambda` over all arcs).
pub const DEFAULT_BREAKPOINT_CAP: usize = 1 << 22;

/// Neuron indices firing at rate `mu`, as a fixed-width bitset.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ActiveSet {
    words: Vec<u64>,
    n: usize,
}

impl ActiveSet {
    pub fn empty(n: usize) -> Self {
        ActiveSet {
            words: vec![0; n.div_ceil(64)],
            n,
        }
    }

    pub fn from_indices(n: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut set = Self::empty(n);
        for i in indices {
            set.insert(i);
        }
        set
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.n, "neuron index {i} out of range {}", self.n);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.n && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Number of neurons in the code (the bitset width).
    pub fn universe(&self) -> usize {
        self.n
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&i| self.contains(i))
    }

    /// `|self \ other|`.
    pub fn minus_count(&self, other: &ActiveSet) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & !b).count_ones() as usize)
            .sum()
    }

    /// `max(|self \ other|, |other \ self|)`.
    pub fn delta(&self, other: &ActiveSet) -> usize {
        let (mut ab, mut ba) = (0u32, 0u32);
        for (a, b) in self.words.iter().zip(&other.words) {
            ab += (a & !b).count_ones();
            ba += (b & !a).count_ones();
        }
        ab.max(ba) as usize
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl fmt::Debug for ActiveSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Discrimination statistic between two stimuli.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeltaReport {
    /// `max(only_in_1, only_in_2)`.
    pub delta: usize,
    /// `|I_{s1} \ I_{s2}|`.
    pub only_in_1: usize,
    /// `|I_{s2} \ I_{s1}|`.
    pub only_in_2: usize,
    /// The same statistic restricted to each module.
    pub per_module: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
struct Module {
    lambda: f64,
    periods: u64,
    /// Arcs on `S^lambda`, each tagged with its neuron index.
    fields: Vec<(usize, Arc)>,
}

/// A binary code: modules of periodic neurons sharing one high rate `mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct Code {
    mu: f64,
    modules: Vec<Module>,
    neuron_module: Vec<usize>,
}

/// Size and scale of one grid module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModuleSpec {
    pub n: usize,
    pub lambda: f64,
}

/// How the arcs inside each grid module are laid out.
#[derive(Debug, Clone, PartialEq)]
pub enum Inner {
    /// Neuron `j` of a module with `n_i` cells covers
    /// `[[j lambda / 2 n_i, (j + n_i) lambda / 2 n_i[[`.
    Adaptive,
    /// Endpoints drawn independently and uniformly on `S^lambda`.
    Random { seed: u64 },
    /// Explicit `(start, end)` arguments per module, at the module's scale.
    Explicit(Vec<Vec<(f64, f64)>>),
}

fn check_mu(mu: f64) -> Result<()> {
    if mu.is_finite() && mu > 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidCode(format!("firing rate mu must exceed 1, got {mu}")))
    }
}

/// Returns `round(x)` when `x` is within tolerance of a positive integer.
fn as_positive_integer(x: f64) -> Option<u64> {
    let r = x.round();
    (r >= 1.0 && (x - r).abs() <= 1e-9 * r.max(1.0)).then_some(r as u64)
}

fn validate_scales(lambdas: &[f64]) -> Result<Vec<u64>> {
    let Some(&first) = lambdas.first() else {
        return Err(Error::IncoherentScales("a code needs at least one module".into()));
    };
    if (first - 1.0).abs() > EPS {
        return Err(Error::IncoherentScales(format!("lambda_1 must be 1, got {first}")));
    }
    let mut periods = Vec::with_capacity(lambdas.len());
    for (i, &l) in lambdas.iter().enumerate() {
        if !(l.is_finite() && l > 0.0 && l <= 1.0) {
            return Err(Error::IncoherentScales(format!("lambda_{} = {l} outside (0, 1]", i + 1)));
        }
        let q = as_positive_integer(1.0 / l).ok_or_else(|| {
            Error::IncoherentScales(format!("1/lambda_{} = {} is not an integer", i + 1, 1.0 / l))
        })?;
        if i > 0 {
            let prev = lambdas[i - 1];
            match as_positive_integer(prev / l) {
                Some(r) if r >= 2 => {}
                _ => {
                    return Err(Error::IncoherentScales(format!(
                        "lambda_{}/lambda_{} = {} must be an integer >= 2",
                        i,
                        i + 1,
                        prev / l
                    )))
                }
            }
        }
        periods.push(q);
    }
    Ok(periods)
}

impl Code {
    /// Assembles a code from modules given as `(lambda, arcs)` where each arc
    /// is `(neuron_label, start, end)` on `S^lambda`. Labels are local to the
    /// module; arcs sharing a label belong to one neuron.
    fn assemble(mu: f64, modules: Vec<(f64, Vec<(usize, f64, f64)>)>) -> Result<Code> {
        check_mu(mu)?;
        let lambdas: Vec<f64> = modules.iter().map(|(l, _)| *l).collect();
        let periods = validate_scales(&lambdas)?;
        let mut out = Vec::with_capacity(modules.len());
        let mut neuron_module = Vec::new();
        for (mi, ((lambda, arcs), periods)) in modules.into_iter().zip(periods).enumerate() {
            let mut label_to_neuron: HashMap<usize, usize> = HashMap::new();
            let mut fields = Vec::with_capacity(arcs.len());
            for (label, a, b) in arcs {
                for x in [a, b] {
                    if !x.is_finite() {
                        return Err(Error::InvalidCode(format!("non-finite arc endpoint {x}")));
                    }
                }
                let id = *label_to_neuron.entry(label).or_insert_with(|| {
                    neuron_module.push(mi);
                    neuron_module.len() - 1
                });
                fields.push((id, Arc::from_angles(a, b, lambda)?));
            }
            out.push(Module {
                lambda,
                periods,
                fields,
            });
        }
        if neuron_module.is_empty() {
            return Err(Error::InvalidCode("a code needs at least one neuron".into()));
        }
        Ok(Code {
            mu,
            modules: out,
            neuron_module,
        })
    }

    /// Place cells code: neuron `i` covers `[[a_i, b_i[[` on `S^1`.
    pub fn place(mu: f64, fields: &[(f64, f64)]) -> Result<Code> {
        let arcs = fields.iter().enumerate().map(|(i, &(a, b))| (i, a, b)).collect();
        Self::assemble(mu, vec![(1.0, arcs)])
    }

    /// General binary code on `S^1`: neuron `i` responds on the union of the
    /// arcs in `fields[i]`.
    pub fn general(mu: f64, fields: &[Vec<(f64, f64)>]) -> Result<Code> {
        let arcs = fields
            .iter()
            .enumerate()
            .flat_map(|(i, arcs)| arcs.iter().map(move |&(a, b)| (i, a, b)))
            .collect();
        let code = Self::assemble(mu, vec![(1.0, arcs)])?;
        if code.n() != fields.len() {
            return Err(Error::InvalidCode("every neuron needs at least one arc".into()));
        }
        Ok(code)
    }

    /// The d-uniform code: `d` arcs `[[(k-1)/d, k/d[[`, the first `d - 1`
    /// shared by `floor(n/d)` neurons each and the last by the remainder.
    pub fn uniform_place(n: usize, d: usize, mu: f64) -> Result<Code> {
        if d == 0 || d > n {
            return Err(Error::InvalidCode(format!("need 1 <= d <= n, got d={d}, n={n}")));
        }
        let group = n / d;
        let fields: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let k = (i / group).min(d - 1);
                (k as f64 / d as f64, (k + 1) as f64 / d as f64)
            })
            .collect();
        Self::place(mu, &fields)
    }

    /// Half-circle fields rotating by `1/2n`: neuron `i` (1-based) covers
    /// `[[i/2n, i/2n + 1/2[[`.
    pub fn adaptive_place(n: usize, mu: f64) -> Result<Code> {
        if n == 0 {
            return Err(Error::InvalidCode("n must be positive".into()));
        }
        let fields: Vec<(f64, f64)> = (1..=n)
            .map(|i| {
                let a = i as f64 / (2 * n) as f64;
                (a, a + 0.5)
            })
            .collect();
        Self::place(mu, &fields)
    }

    /// Place code with all `2n` endpoints i.i.d. uniform on `S^1`.
    pub fn random_place(n: usize, mu: f64, seed: u64) -> Result<Code> {
        if n == 0 {
            return Err(Error::InvalidCode("n must be positive".into()));
        }
        Self::grid(&[ModuleSpec { n, lambda: 1.0 }], &Inner::Random { seed }, mu)
    }

    /// Grid cells code with the given module sizes and scales.
    pub fn grid(spec: &[ModuleSpec], inner: &Inner, mu: f64) -> Result<Code> {
        check_mu(mu)?;
        validate_scales(&spec.iter().map(|m| m.lambda).collect::<Vec<_>>())?;
        let mut rng = match inner {
            Inner::Random { seed } => Some(ChaCha8Rng::seed_from_u64(*seed)),
            _ => None,
        };
        if let Inner::Explicit(arcs) = inner {
            if arcs.len() != spec.len() {
                return Err(Error::InvalidCode("one arc list per module expected".into()));
            }
        }
        let mut modules = Vec::with_capacity(spec.len());
        for (mi, m) in spec.iter().enumerate() {
            let lambda = m.lambda;
            let arcs: Vec<(usize, f64, f64)> = match inner {
                Inner::Adaptive => (1..=m.n)
                    .map(|j| {
                        let a = j as f64 / (2 * m.n) as f64 * lambda;
                        let b = (j + m.n) as f64 / (2 * m.n) as f64 * lambda;
                        (j - 1, a, b)
                    })
                    .collect(),
                Inner::Random { .. } => {
                    let rng = rng.as_mut().expect("seeded above");
                    (0..m.n)
                        .map(|j| {
                            let a = rng.random::<f64>() * lambda;
                            let b = rng.random::<f64>() * lambda;
                            (j, a, b)
                        })
                        .collect()
                }
                Inner::Explicit(all) => {
                    let arcs = &all[mi];
                    if arcs.len() != m.n {
                        return Err(Error::InvalidCode(format!(
                            "module {} declares {} neurons but lists {} arcs",
                            mi + 1,
                            m.n,
                            arcs.len()
                        )));
                    }
                    arcs.iter().enumerate().map(|(j, &(a, b))| (j, a, b)).collect()
                }
            };
            modules.push((lambda, arcs));
        }
        Self::assemble(mu, modules)
    }

    /// Module sizes and scales of the balanced class `G_{b,m}`:
    /// `lambda_i = 2^-(i-1)`, `n_i = floor(n/m)`, the last module also taking
    /// `n mod m`.
    pub fn balanced_spec(n: usize, m: usize) -> Result<Vec<ModuleSpec>> {
        if m == 0 || m > n || m > 60 {
            return Err(Error::InvalidCode(format!("need 1 <= m <= min(n, 60), got m={m}")));
        }
        Ok((0..m)
            .map(|i| ModuleSpec {
                n: n / m + if i + 1 == m { n % m } else { 0 },
                lambda: 0.5f64.powi(i as i32),
            })
            .collect())
    }

    /// Balanced grid code with `m` modules.
    pub fn balanced_grid(n: usize, m: usize, inner: &Inner, mu: f64) -> Result<Code> {
        Self::grid(&Self::balanced_spec(n, m)?, inner, mu)
    }

    /// Extreme dyadic code: module `i` holds one neuron with scale
    /// `2^-(i-1)` and field `[[0, 2^-i[[`, so neuron `i` fires iff the `i`-th
    /// binary digit of `theta_s` is zero.
    pub fn extreme_dyadic(n: usize, mu: f64) -> Result<Code> {
        if n == 0 {
            return Err(Error::InvalidCode("n must be positive".into()));
        }
        if n > 52 {
            return Err(Error::PrecisionExhausted(n));
        }
        let modules = (0..n)
            .map(|i| {
                let lambda = 0.5f64.powi(i as i32);
                (lambda, vec![(0, 0.0, lambda / 2.0)])
            })
            .collect();
        Self::assemble(mu, modules)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Number of neurons.
    pub fn n(&self) -> usize {
        self.neuron_module.len()
    }

    /// Number of modules.
    pub fn m(&self) -> usize {
        self.modules.len()
    }

    pub fn scales(&self) -> Vec<f64> {
        self.modules.iter().map(|m| m.lambda).collect()
    }

    /// Module index of every neuron.
    pub fn module_of(&self, neuron: usize) -> usize {
        self.neuron_module[neuron]
    }

    /// `(n_i, lambda_i)` per module.
    pub fn module_specs(&self) -> Vec<ModuleSpec> {
        let mut counts = vec![0; self.m()];
        for &mi in &self.neuron_module {
            counts[mi] += 1;
        }
        self.modules
            .iter()
            .zip(counts)
            .map(|(m, n)| ModuleSpec { n, lambda: m.lambda })
            .collect()
    }

    /// All arcs of the code as `(neuron, arc on S^lambda)`.
    pub fn fields(&self) -> impl Iterator<Item = (usize, &Arc)> + '_ {
        self.modules.iter().flat_map(|m| m.fields.iter().map(|(i, a)| (*i, a)))
    }

    /// Returns a copy with a different high rate.
    pub fn with_mu(&self, mu: f64) -> Result<Code> {
        check_mu(mu)?;
        Ok(Code { mu, ..self.clone() })
    }

    fn active_at(&self, theta: f64) -> ActiveSet {
        let mut set = ActiveSet::empty(self.n());
        for m in &self.modules {
            let t = wrap(theta, m.lambda);
            for (i, arc) in &m.fields {
                if arc.contains_theta(t) {
                    set.insert(*i);
                }
            }
        }
        set
    }

    /// `I_s`: neurons firing at rate `mu` on stimulus `s` (a point of `S^1`).
    pub fn active_set(&self, s: &CirclePoint) -> Result<ActiveSet> {
        unit_point(s)?;
        Ok(self.active_at(s.theta()))
    }

    /// Firing rate of every neuron on stimulus `s`.
    pub fn rates(&self, s: &CirclePoint) -> Result<Vec<f64>> {
        let set = self.active_set(s)?;
        Ok((0..self.n()).map(|i| if set.contains(i) { self.mu } else { 1.0 }).collect())
    }

    /// `Delta_{s1,s2}` with its two set differences and per-module split.
    pub fn delta(&self, s1: &CirclePoint, s2: &CirclePoint) -> Result<DeltaReport> {
        let a = self.active_set(s1)?;
        let b = self.active_set(s2)?;
        Ok(self.delta_between(&a, &b))
    }

    pub(crate) fn delta_between(&self, a: &ActiveSet, b: &ActiveSet) -> DeltaReport {
        let mut one = vec![0usize; self.m()];
        let mut two = vec![0usize; self.m()];
        for i in 0..self.n() {
            match (a.contains(i), b.contains(i)) {
                (true, false) => one[self.neuron_module[i]] += 1,
                (false, true) => two[self.neuron_module[i]] += 1,
                _ => {}
            }
        }
        let only_in_1: usize = one.iter().sum();
        let only_in_2: usize = two.iter().sum();
        DeltaReport {
            delta: only_in_1.max(only_in_2),
            only_in_1,
            only_in_2,
            per_module: one.iter().zip(&two).map(|(x, y)| *x.max(y)).collect(),
        }
    }

    /// Number of raw breakpoints before deduplication: every arc endpoint
    /// lifted to `S^1` by periodicity.
    pub fn raw_breakpoint_count(&self) -> usize {
        self.modules
            .iter()
            .map(|m| {
                let arcs = m.fields.iter().filter(|(_, a)| !a.is_empty()).count() as u128;
                (2 * arcs * m.periods as u128).min(usize::MAX as u128) as usize
            })
            .fold(0usize, |acc, x| acc.saturating_add(x))
    }

    /// Sorted, deduplicated arguments on `S^1` where some neuron switches
    /// rate. The active set is constant on each half-open cell between
    /// consecutive breakpoints.
    pub fn breakpoints(&self, cap: usize) -> Result<Vec<f64>> {
        let raw = self.raw_breakpoint_count();
        if raw > cap {
            return Err(Error::CellBudgetExceeded {
                needed: raw,
                budget: cap,
            });
        }
        let mut points = Vec::with_capacity(raw);
        for m in &self.modules {
            for (_, arc) in m.fields.iter().filter(|(_, a)| !a.is_empty()) {
                for end in [arc.start().theta(), arc.end().theta()] {
                    for k in 0..m.periods {
                        points.push(wrap(end + k as f64 * m.lambda, 1.0));
                    }
                }
            }
        }
        points.sort_by(f64::total_cmp);
        let mut out: Vec<f64> = Vec::with_capacity(points.len());
        for p in points {
            match out.last() {
                Some(&last) if p - last <= EPS => {}
                _ => out.push(p),
            }
        }
        if out.len() > 1 && out[0] + 1.0 - out[out.len() - 1] <= EPS {
            out.pop();
        }
        Ok(out)
    }

    /// Partition of `S^1` into maximal-by-breakpoint cells with their
    /// active sets.
    pub fn cells(&self, cap: usize) -> Result<Cells> {
        let starts = self.breakpoints(cap)?;
        Ok(Cells::build(self, starts))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&CodeJson::from(self)).expect("code serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&CodeJson::from(self)).expect("code serializes")
    }

    pub fn from_json(text: &str) -> Result<Code> {
        let parsed: CodeJson = serde_json::from_str(text)
            .map_err(|e| Error::InvalidCode(format!("malformed code JSON: {e}")))?;
        parsed.try_into()
    }
}

fn unit_point(s: &CirclePoint) -> Result<()> {
    if (s.radius() - 1.0).abs() > EPS {
        return Err(Error::ScaleMismatch {
            left: s.radius(),
            right: 1.0,
        });
    }
    Ok(())
}

/// Cells `[start_k, start_{k+1}[` of `S^1` (the last one wrapping) on which
/// the active set is constant.
#[derive(Debug, Clone)]
pub struct Cells {
    pub starts: Vec<f64>,
    pub lengths: Vec<f64>,
    /// Index into `sets` for every cell.
    pub set_of: Vec<usize>,
    /// Distinct active sets.
    pub sets: Vec<ActiveSet>,
}

impl Cells {
    fn build(code: &Code, mut starts: Vec<f64>) -> Cells {
        if starts.is_empty() {
            starts.push(0.0);
        }
        let k = starts.len();
        let lengths: Vec<f64> = (0..k)
            .map(|i| {
                if k == 1 {
                    1.0
                } else if i + 1 < k {
                    starts[i + 1] - starts[i]
                } else {
                    starts[0] + 1.0 - starts[i]
                }
            })
            .collect();
        let mut index: HashMap<ActiveSet, usize> = HashMap::new();
        let mut sets = Vec::new();
        let set_of = starts
            .iter()
            .zip(&lengths)
            .map(|(s, l)| {
                // Midpoints sit far from every switching point.
                let set = code.active_at(wrap(s + l / 2.0, 1.0));
                *index.entry(set.clone()).or_insert_with(|| {
                    sets.push(set);
                    sets.len() - 1
                })
            })
            .collect();
        Cells {
            starts,
            lengths,
            set_of,
            sets,
        }
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    /// Index of the cell containing `theta` on `S^1`.
    pub fn locate(&self, theta: f64) -> usize {
        let t = wrap(theta, 1.0);
        match self.starts.partition_point(|&s| s <= t + EPS) {
            0 => self.len() - 1,
            i => i - 1,
        }
    }

    pub fn active(&self, cell: usize) -> &ActiveSet {
        &self.sets[self.set_of[cell]]
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ModuleJson {
    lambda: f64,
    fields: Vec<[f64; 2]>,
    /// Neuron label per field when a neuron owns several arcs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    neurons: Option<Vec<usize>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CodeJson {
    mu: f64,
    modules: Vec<ModuleJson>,
}

impl From<&Code> for CodeJson {
    fn from(code: &Code) -> Self {
        let mut next = 0usize;
        let modules = code
            .modules
            .iter()
            .map(|m| {
                let first = next;
                let labels: Vec<usize> = m.fields.iter().map(|(i, _)| i - first).collect();
                next += labels.iter().max().map_or(0, |x| x + 1);
                let simple = labels.iter().enumerate().all(|(k, &l)| k == l);
                ModuleJson {
                    lambda: m.lambda,
                    fields: m
                        .fields
                        .iter()
                        .map(|(_, a)| [a.start().theta(), a.end().theta()])
                        .collect(),
                    neurons: (!simple).then_some(labels),
                }
            })
            .collect();
        CodeJson { mu: code.mu, modules }
    }
}

impl TryFrom<CodeJson> for Code {
    type Error = Error;

    fn try_from(json: CodeJson) -> Result<Code> {
        let modules = json
            .modules
            .into_iter()
            .map(|m| {
                let labels = match m.neurons {
                    Some(l) if l.len() != m.fields.len() => {
                        return Err(Error::InvalidCode("neurons must label every field".into()))
                    }
                    Some(l) => l,
                    None => (0..m.fields.len()).collect(),
                };
                let arcs = labels
                    .into_iter()
                    .zip(m.fields)
                    .map(|(l, [a, b])| (l, a, b))
                    .collect();
                Ok((m.lambda, arcs))
            })
            .collect::<Result<Vec<_>>>()?;
        Code::assemble(json.mu, modules)
    }
}
