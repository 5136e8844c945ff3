//! Boxes, grids, separated densities and assembly of the cubature.
//!
//! The approximate potential at a grid node `h k` is
//!
//! ```text
//! sum_{m in interior} a_{k-m} f(h m) + sum_{m in collar} b_{k,m} f~(h m)
//! ```
//!
//! and both sums factor over axes for every heat-time node once the
//! density is separated. Axes with identical geometry, evaluation index and
//! factor share one one-dimensional convolution, which is what makes the
//! cost of a test density grow only linearly with the dimension.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;

use crate::coeffquad::{axis_factor, trapezoid_weights, LambdaSquared, NodeTable, QuadratureParams};
use crate::error::{Error, Result};
use crate::exec::{map_ordered, ExecutionMode};
use crate::extension::{hestenes_extend, HestenesScheme};
use crate::oracle::Profile;
use crate::phi_kernel::PhiKernel;
use crate::specfun::{eta_basis, PolynomialOrder};

// Contributions with log-magnitude below this are dropped (about 1e-320).
const LOG_UNDERFLOW: f64 = -736.8;
const INDEX_EPS: f64 = 1e-9;

/// Axis-parallel box `prod_j [lo_j, hi_j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxDomain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::domain(format!(
                "box bounds have lengths {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        for (j, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(Error::domain(format!("box axis {j}: need lo < hi, got [{a}, {b}]")));
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; n], vec![hi; n])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().enumerate().all(|(j, v)| self.lo[j] <= *v && *v <= self.hi[j])
    }
}

/// Grid steps, shape parameter `D` and truncation radius `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    h: Vec<f64>,
    d: f64,
    r: f64,
}

impl Grid {
    pub fn new(h: Vec<f64>, d: f64, r: f64) -> Result<Self> {
        if h.is_empty() || h.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::domain("grid steps must be positive and finite"));
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::domain(format!("shape parameter D = {d} must be positive")));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::domain(format!("truncation radius r = {r} must be positive")));
        }
        Ok(Self { h, d, r })
    }

    pub fn isotropic(n: usize, h: f64, d: f64, r: f64) -> Result<Self> {
        Self::new(vec![h; n], d, r)
    }

    pub fn steps(&self) -> &[f64] {
        &self.h
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }
}

/// Inclusive node index ranges along one axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AxisRange {
    /// Nodes within distance `r h sqrt(D)` of the interval (closed).
    pub outer: (i64, i64),
    /// Nodes farther than `r h sqrt(D)` inside the interval (open), if any.
    pub interior: Option<(i64, i64)>,
}

fn axis_range(lo: f64, hi: f64, h: f64, d: f64, r: f64) -> AxisRange {
    let w = r * h * d.sqrt();
    let outer = (
        ((lo - w) / h - INDEX_EPS).ceil() as i64,
        ((hi + w) / h + INDEX_EPS).floor() as i64,
    );
    let i_lo = ((lo + w) / h + INDEX_EPS).floor() as i64 + 1;
    let i_hi = ((hi - w) / h - INDEX_EPS).ceil() as i64 - 1;
    AxisRange { outer, interior: (i_lo <= i_hi).then_some((i_lo, i_hi)) }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeClass {
    Interior,
    Collar,
    Outside,
}

/// Per-axis split of the grid into interior and collar nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPartition {
    axes: Vec<AxisRange>,
}

impl GridPartition {
    pub fn new(domain: &BoxDomain, grid: &Grid) -> Result<Self> {
        if domain.dim() != grid.dim() {
            return Err(Error::domain("box and grid dimensions differ"));
        }
        let axes = (0..domain.dim())
            .map(|j| axis_range(domain.lo[j], domain.hi[j], grid.h[j], grid.d, grid.r))
            .collect();
        Ok(Self { axes })
    }

    pub fn axes(&self) -> &[AxisRange] {
        &self.axes
    }

    pub fn classify(&self, m: &[i64]) -> NodeClass {
        let mut interior = true;
        for (ax, &mj) in self.axes.iter().zip(m) {
            if mj < ax.outer.0 || mj > ax.outer.1 {
                return NodeClass::Outside;
            }
            interior &= matches!(ax.interior, Some((a, b)) if a <= mj && mj <= b);
        }
        if interior {
            NodeClass::Interior
        } else {
            NodeClass::Collar
        }
    }
}

/// Univariate factor of a separated density.
pub type Factor = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone, Debug, PartialEq)]
struct Term {
    weight: Complex64,
    base: usize,
    // (axis, factor), sorted by axis.
    overrides: Vec<(usize, usize)>,
}

/// `f(x) = sum_p w_p prod_j f_j^(p)(x_j)`.
///
/// Each term uses one base factor on every axis except a short list of
/// overridden axes, which keeps high-dimensional test densities compact.
#[derive(Clone)]
pub struct SeparatedDensity {
    dim: usize,
    factors: Vec<Factor>,
    terms: Vec<Term>,
}

impl std::fmt::Debug for SeparatedDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SeparatedDensity")
            .field("dim", &self.dim)
            .field("factors", &self.factors.len())
            .field("terms", &self.terms)
            .finish()
    }
}

impl SeparatedDensity {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("density dimension must be at least 1"));
        }
        Ok(Self { dim, factors: Vec::new(), terms: Vec::new() })
    }

    /// Registers a factor and returns its id.
    pub fn add_factor<F>(&mut self, f: F) -> usize
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.factors.push(Arc::new(f));
        self.factors.len() - 1
    }

    /// Adds `weight * prod_j f_{base or override}(x_j)`.
    pub fn push_term(
        &mut self,
        weight: Complex64,
        base: usize,
        mut overrides: Vec<(usize, usize)>,
    ) -> Result<()> {
        if base >= self.factors.len() {
            return Err(Error::domain(format!("unknown factor {base}")));
        }
        overrides.sort_unstable();
        for (i, &(axis, f)) in overrides.iter().enumerate() {
            if axis >= self.dim || f >= self.factors.len() {
                return Err(Error::domain(format!("override ({axis}, {f}) out of range")));
            }
            if i > 0 && overrides[i - 1].0 == axis {
                return Err(Error::domain(format!("axis {axis} overridden twice")));
            }
        }
        overrides.retain(|&(_, f)| f != base);
        self.terms.push(Term { weight, base, overrides });
        Ok(())
    }

    /// Adds a term given as a full row of factor ids, one per axis.
    pub fn push_row(&mut self, weight: Complex64, row: &[usize]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::domain(format!("row has {} entries for dimension {}", row.len(), self.dim)));
        }
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for &f in row {
            *counts.entry(f).or_default() += 1;
        }
        let base = counts
            .into_iter()
            .max_by_key(|&(f, c)| (c, std::cmp::Reverse(f)))
            .map(|(f, _)| f)
            .unwrap_or(0);
        let overrides = row.iter().enumerate().filter(|(_, &f)| f != base).map(|(j, &f)| (j, f)).collect();
        self.push_term(weight, base, overrides)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    /// All terms share one base factor.
    pub fn is_shared(&self) -> bool {
        self.terms.windows(2).all(|w| w[0].base == w[1].base)
    }

    fn factor_at(&self, term: &Term, axis: usize) -> usize {
        term.overrides
            .binary_search_by_key(&axis, |&(a, _)| a)
            .map(|i| term.overrides[i].1)
            .unwrap_or(term.base)
    }

    /// Pointwise value.
    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|t| {
                let prod: f64 = (0..self.dim).map(|j| (self.factors[self.factor_at(t, j)])(x[j])).product();
                t.weight * prod
            })
            .sum()
    }

    /// `wa * a + wb * b` as one density of merged rank.
    pub fn combine(a: &Self, wa: Complex64, b: &Self, wb: Complex64) -> Result<Self> {
        if a.dim != b.dim {
            return Err(Error::domain("cannot combine densities of different dimension"));
        }
        let shift = a.factors.len();
        let mut out = Self { dim: a.dim, factors: a.factors.clone(), terms: Vec::new() };
        out.factors.extend(b.factors.iter().cloned());
        for t in &a.terms {
            out.terms.push(Term { weight: wa * t.weight, ..t.clone() });
        }
        for t in &b.terms {
            out.terms.push(Term {
                weight: wb * t.weight,
                base: t.base + shift,
                overrides: t.overrides.iter().map(|&(j, f)| (j, f + shift)).collect(),
            });
        }
        Ok(out)
    }
}

/// `(-Laplace + lambda^2) prod_j u(x_j)` as a separated density.
///
/// For real `lambda^2` the rank is `n`, with factor `-u'' + lambda^2 u / n`
/// on the distinguished axis. Complex `lambda^2` adds one term
/// `lambda^2 prod_j u(x_j)` so that all factors stay real.
pub fn test_density(profile: Profile, lambda2: LambdaSquared, n: usize) -> SeparatedDensity {
    let mut density = SeparatedDensity::new(n.max(1)).expect("positive dimension");
    let lam = lambda2.value();
    let u = density.add_factor(move |x| profile.u(x));
    if lambda2.is_real() {
        let share = lam.re / n as f64;
        let g = density.add_factor(move |x| -profile.d2u(x) + share * profile.u(x));
        for p in 0..n {
            density.push_term(Complex64::new(1.0, 0.0), u, vec![(p, g)]).expect("valid term");
        }
    } else {
        let g = density.add_factor(move |x| -profile.d2u(x));
        for p in 0..n {
            density.push_term(Complex64::new(1.0, 0.0), u, vec![(p, g)]).expect("valid term");
        }
        density.push_term(lam, u, Vec::new()).expect("valid term");
    }
    density
}

/// How collar nodes outside the box obtain density values.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum ExtensionKind {
    /// Use the factors' own continuation.
    #[default]
    None,
    Hestenes(HestenesScheme),
}

/// How per-axis sums are combined into the rank-`R` product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Assembly {
    /// Log-domain products grouped by base factor and axis class.
    #[default]
    Shared,
    /// Plain per-term products over every axis.
    Direct,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialParts {
    pub interior: Complex64,
    pub collar: Complex64,
    pub total: Complex64,
}

// Axes with equal geometry and evaluation coordinate.
struct AxisClass {
    lo: f64,
    hi: f64,
    h: f64,
    at: f64,
    range: AxisRange,
    count: usize,
}

struct BaseGroup {
    // slot of (class, base) for each class
    slots: Vec<usize>,
}

struct PlannedTerm {
    weight: Complex64,
    group: usize,
    ov: std::ops::Range<usize>,
}

struct Layout {
    classes: Vec<AxisClass>,
    class_of: Vec<usize>,
    // (class, factor) per slot
    slots: Vec<(usize, usize)>,
    slot_index: HashMap<(usize, usize), usize>,
    class_slots: Vec<Vec<usize>>,
    samples: Vec<Vec<f64>>,
    groups: Vec<BaseGroup>,
    terms: Vec<PlannedTerm>,
    // (base slot, override slot)
    ov: Vec<(usize, usize)>,
}

impl Layout {
    fn build(
        density: &SeparatedDensity,
        geom: impl Fn(usize) -> (f64, f64, f64, f64),
        grid: &Grid,
        extension: &ExtensionKind,
    ) -> Result<Self> {
        let n = density.dim;
        let mut key_map: HashMap<[u64; 4], usize> = HashMap::new();
        let mut classes: Vec<AxisClass> = Vec::new();
        let mut class_of = Vec::with_capacity(n);
        for j in 0..n {
            let (lo, hi, h, at) = geom(j);
            let key = [lo.to_bits(), hi.to_bits(), h.to_bits(), at.to_bits()];
            let c = *key_map.entry(key).or_insert_with(|| {
                classes.push(AxisClass {
                    lo,
                    hi,
                    h,
                    at,
                    range: axis_range(lo, hi, h, grid.d, grid.r),
                    count: 0,
                });
                classes.len() - 1
            });
            classes[c].count += 1;
            class_of.push(c);
        }

        let mut slots = Vec::new();
        let mut slot_index = HashMap::new();
        let mut slot_for = |c: usize, f: usize, slots: &mut Vec<(usize, usize)>| {
            *slot_index.entry((c, f)).or_insert_with(|| {
                slots.push((c, f));
                slots.len() - 1
            })
        };

        let mut group_of_base: HashMap<usize, usize> = HashMap::new();
        let mut groups = Vec::new();
        let mut terms = Vec::with_capacity(density.terms.len());
        let mut ov = Vec::new();
        for t in &density.terms {
            let g = *group_of_base.entry(t.base).or_insert_with(|| {
                let s = (0..classes.len()).map(|c| slot_for(c, t.base, &mut slots)).collect();
                groups.push(BaseGroup { slots: s });
                groups.len() - 1
            });
            let start = ov.len();
            for &(axis, f) in &t.overrides {
                let c = class_of[axis];
                ov.push((groups[g].slots[c], slot_for(c, f, &mut slots)));
            }
            terms.push(PlannedTerm { weight: t.weight, group: g, ov: start..ov.len() });
        }

        let mut class_slots = vec![Vec::new(); classes.len()];
        let mut samples = Vec::with_capacity(slots.len());
        for (s, &(c, f)) in slots.iter().enumerate() {
            class_slots[c].push(s);
            let cls = &classes[c];
            let func = &density.factors[f];
            let (a, b) = cls.range.outer;
            let mut row = Vec::with_capacity((b - a + 1).max(0) as usize);
            for m in a..=b {
                let y = cls.h * m as f64;
                let v = if y < cls.lo || y > cls.hi {
                    match extension {
                        ExtensionKind::None => func(y),
                        ExtensionKind::Hestenes(scheme) => {
                            hestenes_extend(|z| func(z), cls.lo, cls.hi, scheme, y)?
                        }
                    }
                } else {
                    func(y)
                };
                row.push(v);
            }
            samples.push(row);
        }
        let slot_index = slots.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        Ok(Self { classes, class_of, slots, slot_index, class_slots, samples, groups, terms, ov })
    }

    /// `sum_p w_p prod_j S_{p,j}` scaled by `exp(log_w + i phase)`, in the
    /// log domain.
    fn assemble_shared(&self, sums: &[f64], log_w: f64, phase: f64) -> Complex64 {
        struct Acc {
            log: f64,
            comp: f64,
            zeros: usize,
            neg: bool,
        }
        let mut base: Vec<Acc> = Vec::with_capacity(self.groups.len());
        for g in &self.groups {
            let mut acc = Acc { log: 0.0, comp: 0.0, zeros: 0, neg: false };
            for (c, &s) in g.slots.iter().enumerate() {
                let v = sums[s];
                let cnt = self.classes[c].count;
                if v == 0.0 {
                    acc.zeros += cnt;
                } else {
                    neumaier_add(&mut acc.log, &mut acc.comp, cnt as f64 * v.abs().ln());
                    acc.neg ^= v < 0.0 && cnt % 2 == 1;
                }
            }
            acc.log += acc.comp;
            base.push(acc);
        }

        let mut logs: Vec<(f64, Complex64)> = Vec::with_capacity(self.terms.len());
        let mut top = f64::NEG_INFINITY;
        for t in &self.terms {
            let b = &base[t.group];
            let mut log = b.log;
            let mut comp = 0.0;
            let mut zeros = b.zeros;
            let mut neg = b.neg;
            let mut dead = false;
            for &(bs, os) in &self.ov[t.ov.clone()] {
                let vb = sums[bs];
                if vb == 0.0 {
                    zeros -= 1;
                } else {
                    neumaier_add(&mut log, &mut comp, -vb.abs().ln());
                    neg ^= vb < 0.0;
                }
                let vo = sums[os];
                if vo == 0.0 {
                    dead = true;
                    break;
                }
                neumaier_add(&mut log, &mut comp, vo.abs().ln());
                neg ^= vo < 0.0;
            }
            if dead || zeros > 0 {
                continue;
            }
            let log = log + comp;
            top = top.max(log);
            logs.push((log, if neg { -t.weight } else { t.weight }));
        }
        if logs.is_empty() || top + log_w < LOG_UNDERFLOW {
            return Complex64::new(0.0, 0.0);
        }
        let mut re = (0.0, 0.0);
        let mut im = (0.0, 0.0);
        for (log, w) in logs {
            let v = w * (log - top).exp();
            neumaier_add(&mut re.0, &mut re.1, v.re);
            neumaier_add(&mut im.0, &mut im.1, v.im);
        }
        Complex64::new(re.0 + re.1, im.0 + im.1) * Complex64::from_polar((top + log_w).exp(), phase)
    }

    fn assemble_direct(&self, density: &SeparatedDensity, sums: &[f64], log_w: f64, phase: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &density.terms {
            let mut prod = 1.0;
            for j in 0..density.dim {
                let slot = self.slot_index[&(self.class_of[j], density.factor_at(t, j))];
                prod *= sums[slot];
            }
            acc += t.weight * prod;
        }
        acc * Complex64::from_polar(log_w.exp(), phase)
    }
}

fn neumaier_add(sum: &mut f64, comp: &mut f64, v: f64) {
    let t = *sum + v;
    if sum.abs() >= v.abs() {
        *comp += (*sum - t) + v;
    } else {
        *comp += (v - t) + *sum;
    }
    *sum = t;
}

/// Cubature for one box, grid, order, `lambda^2` and time quadrature.
#[derive(Clone, Debug)]
pub struct Cubature {
    domain: BoxDomain,
    grid: Grid,
    kernel: PhiKernel,
    lambda2: LambdaSquared,
    table: NodeTable,
    extension: ExtensionKind,
    mode: ExecutionMode,
    assembly: Assembly,
}

impl Cubature {
    pub fn new(
        domain: BoxDomain,
        grid: Grid,
        order: PolynomialOrder,
        lambda2: LambdaSquared,
        quad: QuadratureParams,
        extension: ExtensionKind,
    ) -> Result<Self> {
        if domain.dim() != grid.dim() {
            return Err(Error::domain(format!(
                "box has dimension {} but grid has {}",
                domain.dim(),
                grid.dim()
            )));
        }
        lambda2.validate_for_dim(domain.dim())?;
        let table = trapezoid_weights(&quad)?;
        Ok(Self {
            domain,
            grid,
            kernel: PhiKernel::new(order),
            lambda2,
            table,
            extension,
            mode: ExecutionMode::default(),
            assembly: Assembly::default(),
        })
    }

    pub fn with_mode(mut self, mode: ExecutionMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_assembly(mut self, assembly: Assembly) -> Self {
        self.assembly = assembly;
        self
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn partition(&self) -> GridPartition {
        GridPartition::new(&self.domain, &self.grid).expect("dimensions checked on construction")
    }

    /// Index `k` with `h_j k_j = x_j`, if `x` is a grid node.
    pub fn grid_index(&self, x: &[f64]) -> Result<Vec<i64>> {
        if x.len() != self.grid.dim() {
            return Err(Error::domain(format!("point has {} coordinates, expected {}", x.len(), self.grid.dim())));
        }
        x.iter()
            .zip(&self.grid.h)
            .map(|(&xj, &h)| {
                let k = (xj / h).round();
                if (k * h - xj).abs() <= 1e-9 * xj.abs().max(1.0) {
                    Ok(k as i64)
                } else {
                    Err(Error::domain(format!("coordinate {xj} is not a multiple of step {h}")))
                }
            })
            .collect()
    }

    /// Potential at the grid node `h k`, split into interior and collar parts.
    pub fn evaluate(&self, density: &SeparatedDensity, k: &[i64]) -> Result<PotentialParts> {
        let n = self.domain.dim();
        if density.dim() != n || k.len() != n {
            return Err(Error::domain(format!(
                "density dimension {} and index length {} must equal box dimension {n}",
                density.dim(),
                k.len()
            )));
        }
        let layout = Layout::build(
            density,
            |j| (self.domain.lo[j], self.domain.hi[j], self.grid.h[j], k[j] as f64),
            &self.grid,
            &self.extension,
        )?;
        let d = self.grid.d;
        let r = self.grid.r;
        let lam = self.lambda2.value();
        let log_norm = (self.table.tau() / 4.0).ln() - 0.5 * n as f64 * d.ln();

        let per_node = map_ordered(self.table.nodes(), self.mode, |node| {
            let mut full = vec![0.0; layout.slots.len()];
            let mut inner = vec![0.0; layout.slots.len()];
            let mut beta = Vec::new();
            for (c, cls) in layout.classes.iter().enumerate() {
                let (a, b) = cls.range.outer;
                beta.clear();
                beta.extend(
                    (a..=b).map(|m| axis_factor(&self.kernel, cls.at as i64, m, cls.lo, cls.hi, cls.h, d, node.t, r)),
                );
                let int = cls.range.interior.map(|(i0, i1)| ((i0 - a) as usize, (i1 - a) as usize));
                for &s in &layout.class_slots[c] {
                    let row = &layout.samples[s];
                    full[s] = beta.iter().zip(row).map(|(x, y)| x * y).sum();
                    if let Some((i0, i1)) = int {
                        inner[s] = beta[i0..=i1].iter().zip(&row[i0..=i1]).map(|(x, y)| x * y).sum();
                    }
                }
            }
            let log_w = log_norm + node.dt.ln() - lam.re * node.t / 4.0;
            let phase = -lam.im * node.t / 4.0;
            match self.assembly {
                Assembly::Shared => (
                    layout.assemble_shared(&full, log_w, phase),
                    layout.assemble_shared(&inner, log_w, phase),
                ),
                Assembly::Direct => (
                    layout.assemble_direct(density, &full, log_w, phase),
                    layout.assemble_direct(density, &inner, log_w, phase),
                ),
            }
        });

        let mut acc = [(0.0, 0.0); 4];
        for (tot, int) in per_node {
            for (slot, v) in acc.iter_mut().zip([tot.re, tot.im, int.re, int.im]) {
                neumaier_add(&mut slot.0, &mut slot.1, v);
            }
        }
        let total = Complex64::new(acc[0].0 + acc[0].1, acc[1].0 + acc[1].1);
        let interior = Complex64::new(acc[2].0 + acc[2].1, acc[3].0 + acc[3].1);
        Ok(PotentialParts { interior, collar: total - interior, total })
    }

    /// Potential at a point that must be a grid node.
    pub fn evaluate_at(&self, density: &SeparatedDensity, x: &[f64]) -> Result<Complex64> {
        let k = self.grid_index(x)?;
        Ok(self.evaluate(density, &k)?.total)
    }

    /// Interior discrete convolution `sum_{m in interior} a_{k-m} f(h m)`.
    pub fn interior_convolution(&self, density: &SeparatedDensity, k: &[i64]) -> Result<Complex64> {
        Ok(self.evaluate(density, k)?.interior)
    }

    /// Quasi-interpolant of the (extended) density over the outer node set.
    pub fn quasi_interpolant(&self, density: &SeparatedDensity, x: &[f64]) -> Result<Complex64> {
        let n = self.domain.dim();
        if density.dim() != n || x.len() != n {
            return Err(Error::domain("density, point and box dimensions differ"));
        }
        let layout = Layout::build(
            density,
            |j| (self.domain.lo[j], self.domain.hi[j], self.grid.h[j], x[j]),
            &self.grid,
            &self.extension,
        )?;
        let order = self.kernel.order();
        let sd = self.grid.d.sqrt();
        let mut sums = vec![0.0; layout.slots.len()];
        for (s, &(c, _)) in layout.slots.iter().enumerate() {
            let cls = &layout.classes[c];
            let a = cls.range.outer.0;
            sums[s] = layout.samples[s]
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let node = cls.h * (a + i as i64) as f64;
                    v * eta_basis(order, (cls.at - node) / (cls.h * sd))
                })
                .sum();
        }
        let log_w = -0.5 * n as f64 * self.grid.d.ln();
        Ok(match self.assembly {
            Assembly::Shared => layout.assemble_shared(&sums, log_w, 0.0),
            Assembly::Direct => layout.assemble_direct(density, &sums, log_w, 0.0),
        })
    }
}

/// One row of a convergence table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub h_inv: f64,
    pub error: f64,
    /// Observed order against the previous row; `None` on the first row or
    /// when an error is zero.
    pub rate: Option<f64>,
    pub seconds: f64,
}

/// Runs `error_at(h_inv)` for each step and attaches observed rates.
pub fn convergence_table<F>(h_inv: &[f64], mut error_at: F) -> Result<Vec<ConvergenceRow>>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(h_inv.len());
    for &hi in h_inv {
        let start = Instant::now();
        let error = error_at(hi)?;
        let seconds = start.elapsed().as_secs_f64();
        let rate = rows.last().and_then(|prev| {
            let ok = prev.error > 0.0 && error > 0.0 && hi != prev.h_inv;
            ok.then(|| (prev.error / error).ln() / (hi / prev.h_inv).ln())
        });
        rows.push(ConvergenceRow { h_inv: hi, error, rate, seconds });
    }
    Ok(rows)
}

/// Test-density experiment on `[-1, 1]^n` with an exact product reference.
#[derive(Clone, Debug)]
pub struct TableSetup {
    pub dim: usize,
    pub profile: Profile,
    pub order: PolynomialOrder,
    pub lambda2: LambdaSquared,
    pub extension: ExtensionKind,
    pub d: f64,
    pub r: f64,
    pub quad: QuadratureParams,
    pub point: Vec<f64>,
    pub mode: ExecutionMode,
}

impl TableSetup {
    /// Absolute error of the cubature at step `1 / h_inv`.
    pub fn error(&self, h_inv: f64) -> Result<f64> {
        if !(h_inv > 0.0 && h_inv.is_finite()) {
            return Err(Error::domain(format!("inverse step {h_inv} must be positive")));
        }
        let domain = BoxDomain::cube(self.dim, -1.0, 1.0)?;
        if !domain.contains(&self.point) {
            return Err(Error::domain("evaluation point must lie in [-1, 1]^n"));
        }
        let grid = Grid::isotropic(self.dim, 1.0 / h_inv, self.d, self.r)?;
        let cubature = Cubature::new(domain, grid, self.order, self.lambda2, self.quad, self.extension.clone())?
            .with_mode(self.mode);
        let density = test_density(self.profile, self.lambda2, self.dim);
        let value = cubature.evaluate_at(&density, &self.point)?;
        let exact = crate::oracle::exact_potential_product(self.profile, &self.point)?;
        Ok((value - exact).norm())
    }

    pub fn run(&self, h_inv: &[f64]) -> Result<Vec<ConvergenceRow>> {
        convergence_table(h_inv, |hi| self.error(hi))
    }
}
