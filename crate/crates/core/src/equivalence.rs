//! Equivalence of PDE systems: direct verification for a given point
//! transformation, rule-based verdicts, and the necessary-condition gate.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;

use crate::algebra::{Field, Matrix, Poly, Rational};
use crate::error::{Error, Result};
use crate::jet::{conjugate_jet, enumerate_multi_indices, total_derivative, InvertiblePolyMap, JetChart, JetOfMap, MultiIndex};
use crate::pde::{generic_dimension, prolong, regularity_check, sample_points, PdeSystem, Regularity};
use crate::pfaffian::{derived_system, frobenius_test, rank_corank, PfaffSystem};
use crate::spencer::{spencer_cohomology, symbol, At, SpencerReport};

/// Wording attached to every passing gate report.
pub const NECESSARY_CAVEAT: &str = "necessary conditions only: concluding local equivalence needs Cartan's \
existence theorem, which requires real-analytic data and transitive actions on the prolonged equations; \
for smooth (C-infinity) data these conditions are not sufficient";

/// A point transformation `(x, u) ↦ (φ̄(x), φ(x, u))` with a polynomial inverse.
///
/// Variables are numbered `x_0..x_{n−1}, u_0..u_{m−1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberedMap {
    n: usize,
    m: usize,
    base: Vec<Poly>,
    fiber: Vec<Poly>,
    inv_base: Vec<Poly>,
    inv_fiber: Vec<Poly>,
}

impl FiberedMap {
    /// Checks `Φ⁻¹∘Φ = id` and `Φ∘Φ⁻¹ = id` as polynomial identities.
    pub fn new(n: usize, m: usize, base: Vec<Poly>, fiber: Vec<Poly>, inv_base: Vec<Poly>, inv_fiber: Vec<Poly>) -> Result<Self> {
        if base.len() != n || inv_base.len() != n || fiber.len() != m || inv_fiber.len() != m {
            return Err(Error::Shape(format!("map needs {n} base and {m} fiber components each way")));
        }
        for p in base.iter().chain(&inv_base) {
            if p.max_var().is_some_and(|v| v >= n) {
                return Err(Error::Shape("base components may only use base variables".into()));
            }
        }
        for p in fiber.iter().chain(&inv_fiber) {
            if p.max_var().is_some_and(|v| v >= n + m) {
                return Err(Error::Shape("fiber component uses an unknown variable".into()));
            }
        }
        let map = FiberedMap { n, m, base, fiber, inv_base, inv_fiber };
        let id: Vec<Poly> = (0..n + m).map(Poly::var).collect();
        if map.inverse().compose_full(&map) != id {
            return Err(Error::InverseCheck("inverse ∘ map is not the identity".into()));
        }
        if map.compose_full(&map.inverse()) != id {
            return Err(Error::InverseCheck("map ∘ inverse is not the identity".into()));
        }
        Ok(map)
    }

    pub fn identity(n: usize, m: usize) -> Self {
        let base: Vec<Poly> = (0..n).map(Poly::var).collect();
        let fiber: Vec<Poly> = (n..n + m).map(Poly::var).collect();
        FiberedMap { n, m, base: base.clone(), fiber: fiber.clone(), inv_base: base, inv_fiber: fiber }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn base(&self) -> &[Poly] {
        &self.base
    }

    pub fn fiber(&self) -> &[Poly] {
        &self.fiber
    }

    pub fn inverse_base(&self) -> &[Poly] {
        &self.inv_base
    }

    pub fn inverse_fiber(&self) -> &[Poly] {
        &self.inv_fiber
    }

    pub fn inverse(&self) -> FiberedMap {
        FiberedMap {
            n: self.n,
            m: self.m,
            base: self.inv_base.clone(),
            fiber: self.inv_fiber.clone(),
            inv_base: self.base.clone(),
            inv_fiber: self.fiber.clone(),
        }
    }

    /// Components of `self ∘ inner` on `(x, u)`.
    fn compose_full(&self, inner: &FiberedMap) -> Vec<Poly> {
        let full: Vec<Poly> = inner.base.iter().chain(&inner.fiber).cloned().collect();
        let sub = |v: usize| full.get(v).cloned();
        self.base.iter().chain(&self.fiber).map(|p| p.substitute(&sub)).collect()
    }

    /// The base map as a map of `ℝⁿ`.
    pub fn base_map(&self) -> InvertiblePolyMap {
        use crate::jet::PolyMap;
        InvertiblePolyMap { forward: PolyMap::new(self.base.clone()), inverse: PolyMap::new(self.inv_base.clone()) }
    }
}

/// The prolonged action `p_kφ` on `chart`: for each target coordinate, a
/// polynomial in the source coordinates.
///
/// With `ψ = φ̄⁻¹` and `G_ij(x) = ∂ψ_i/∂y_j(φ̄(x))`, the transformed jet is
/// `U_0 = φ(x, u)`, `U_{β+1_j} = Σ_i G_ij D_i U_β`.
pub fn prolonged_action(phi: &FiberedMap, chart: &JetChart) -> Result<Vec<Poly>> {
    let (n, m) = (chart.n(), chart.m());
    if phi.n != n || phi.m != m {
        return Err(Error::Shape("map and chart have different fibrations".into()));
    }
    // (x, u) of the map are the first n + m chart coordinates
    let to_chart = |p: &Poly| p.remap(&|v| if v < n { chart.x(v) } else { chart.u(v - n, &MultiIndex::zero(n)) });
    let base_sub = |v: usize| phi.base.get(v).cloned();
    let g: Vec<Vec<Poly>> = (0..n)
        .map(|i| (0..n).map(|j| to_chart(&phi.inv_base[i].partial(j).substitute(&base_sub))).collect())
        .collect();
    let mut images = vec![Poly::zero(); chart.dimension()];
    for i in 0..n {
        images[chart.x(i)] = to_chart(&phi.base[i]);
    }
    let mut values: BTreeMap<(usize, MultiIndex), Poly> = BTreeMap::new();
    for beta in enumerate_multi_indices(n, chart.order()) {
        for a in 0..m {
            let value = match (0..n).rev().find(|&j| beta.exponents()[j] > 0) {
                None => to_chart(&phi.fiber[a]),
                Some(j) => {
                    let prev = &values[&(a, beta.lowered(j).expect("positive exponent"))];
                    (0..n).fold(Poly::zero(), |acc, i| acc + &g[i][j] * &total_derivative(chart, prev, i))
                }
            };
            images[chart.u(a, &beta)] = value.clone();
            values.insert((a, beta.clone()), value);
        }
    }
    Ok(images)
}

/// Evidence attached to a negative verdict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    /// An on-locus point whose image violates the other system.
    Point { coords: Vec<(String, Rational)>, equation: String, value: Rational },
    /// Two numbers that an equivalence would have to make equal.
    Dimensions { what: String, left: usize, right: usize },
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Point { coords, equation, value } => {
                let pt = coords.iter().map(|(n, v)| format!("{n}={v}")).collect::<Vec<_>>().join(", ");
                write!(f, "point ({pt}) maps to where `{equation}` = {value}")
            }
            Witness::Dimensions { what, left, right } => write!(f, "{what}: {left} vs {right}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    AbsoluteEquivalent,
    MerihedricEquivalent { level: usize },
    NotEquivalent { witness: Witness },
    RuleEquivalent { rule: String },
    /// No counterexample among sampled points; not a proof.
    SampledNoCounterexample { samples: usize },
    /// The available rules do not decide the question.
    Inconclusive { reason: String },
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::AbsoluteEquivalent => f.write_str("ABSOLUTE_EQUIVALENT"),
            Verdict::MerihedricEquivalent { level } => write!(f, "MERIHEDRIC_EQUIVALENT({level})"),
            Verdict::NotEquivalent { witness } => write!(f, "NOT_EQUIVALENT({witness})"),
            Verdict::RuleEquivalent { rule } => write!(f, "RULE_EQUIVALENT({rule})"),
            Verdict::SampledNoCounterexample { samples } => write!(f, "NO_COUNTEREXAMPLE({samples} samples)"),
            Verdict::Inconclusive { reason } => write!(f, "INCONCLUSIVE({reason})"),
        }
    }
}

fn named_point(chart: &JetChart, p: &[Rational]) -> Vec<(String, Rational)> {
    p.iter().enumerate().map(|(i, v)| (chart.coord_name(i), v.clone())).collect()
}

/// Searches for an on-locus point of `s` whose image violates `target`.
fn find_witness(s: &PdeSystem, target: &PdeSystem, action: &[Poly], rng: &mut impl Rng, tries: usize) -> Result<Option<Witness>> {
    let mut candidates = Vec::new();
    if let Some(form) = s.explicit_form() {
        let mut p = vec![<Rational as Field>::zero(); s.chart().dimension()];
        for (lead, expr) in form.rules() {
            p[*lead] = expr.eval(&p)?;
        }
        candidates.push(p);
    }
    candidates.extend(sample_points(s, tries, rng));
    for p in candidates {
        if s.check_on_locus(&p).is_err() {
            continue;
        }
        let image: Vec<Rational> = action.iter().map(|a| a.eval(&p)).collect::<Result<_>>()?;
        for (i, f) in target.equations().iter().enumerate() {
            let v = f.eval(&image)?;
            if !Field::is_zero(&v) {
                return Ok(Some(Witness::Point {
                    coords: named_point(s.chart(), &p),
                    equation: target.display_equation(i),
                    value: v,
                }));
            }
        }
    }
    Ok(None)
}

/// Whether `φ` maps `s` into `target`, exactly via the solved form of `s`.
fn maps_into(s: &PdeSystem, target: &PdeSystem, phi: &FiberedMap, rng: &mut impl Rng) -> Result<std::result::Result<bool, Witness>> {
    let action = prolonged_action(phi, s.chart())?;
    let sub = |v: usize| action.get(v).cloned();
    match s.explicit_form() {
        Some(form) => {
            let clean = target.equations().iter().all(|f| form.reduce(&f.substitute(&sub)).is_zero());
            if clean {
                return Ok(Ok(true));
            }
            match find_witness(s, target, &action, rng, 50)? {
                Some(w) => Ok(Err(w)),
                None => Ok(Ok(false)),
            }
        }
        None => match find_witness(s, target, &action, rng, 50)? {
            Some(w) => Ok(Err(w)),
            None => Ok(Ok(false)),
        },
    }
}

/// Definition of absolute equivalence checked for a given `φ`.
///
/// Solved systems are decided exactly. Otherwise only sampled
/// counterexamples are sought and success is reported as sampled.
pub fn verify_absolute(s: &PdeSystem, target: &PdeSystem, phi: &FiberedMap, rng: &mut impl Rng) -> Result<Verdict> {
    if !s.chart().same_shape(target.chart()) || s.order() != target.order() {
        return Err(Error::Shape("systems live on different jet charts".into()));
    }
    let exact = s.explicit_form().is_some() && target.explicit_form().is_some();
    let forward = maps_into(s, target, phi, rng)?;
    if let Err(w) = forward {
        return Ok(Verdict::NotEquivalent { witness: w });
    }
    let backward = maps_into(target, s, &phi.inverse(), rng)?;
    if let Err(w) = backward {
        return Ok(Verdict::NotEquivalent { witness: w });
    }
    if !exact {
        return Ok(Verdict::SampledNoCounterexample { samples: 50 });
    }
    match (forward, backward) {
        (Ok(true), Ok(true)) => Ok(Verdict::AbsoluteEquivalent),
        _ => Ok(Verdict::Inconclusive {
            reason: "residual equations do not reduce to zero but vanish at every sampled point".into(),
        }),
    }
}

/// Absolute equivalence of the `ℓ`-th prolongations.
pub fn verify_merihedric(s: &PdeSystem, target: &PdeSystem, phi: &FiberedMap, level: usize, rng: &mut impl Rng) -> Result<Verdict> {
    let v = verify_absolute(&prolong(s, level), &prolong(target, level), phi, rng)?;
    Ok(match v {
        Verdict::AbsoluteEquivalent if level > 0 => Verdict::MerihedricEquivalent { level },
        other => other,
    })
}

/// Unknown count of an explicit first-order ODE system `u' = f(x, u)`.
fn ode_unknowns(s: &PdeSystem) -> Result<usize> {
    let c = s.chart();
    let form = s.explicit_form();
    let ok = c.n() == 1
        && c.order() == 1
        && form.is_some_and(|f| {
            (0..c.m()).all(|a| f.is_lead(c.u(a, &MultiIndex::new(vec![1])))) && f.rules().len() == c.m()
        });
    if ok {
        Ok(c.m())
    } else {
        Err(Error::UnsupportedForm("expected an explicit first-order ODE system".into()))
    }
}

/// Explicit first-order ODE systems with equally many unknowns are locally
/// equivalent near any of their points, since `(1, f)` never vanishes.
pub fn ode_nonsingular_rule(v: &PdeSystem, w: &PdeSystem, p: Option<&[Rational]>, q: Option<&[Rational]>) -> Result<Verdict> {
    let (mv, mw) = (ode_unknowns(v)?, ode_unknowns(w)?);
    if let Some(p) = p {
        v.check_on_locus(p)?;
    }
    if let Some(q) = q {
        w.check_on_locus(q)?;
    }
    if mv != mw {
        return Ok(Verdict::NotEquivalent {
            witness: Witness::Dimensions { what: "number of unknowns".into(), left: mv, right: mw },
        });
    }
    Ok(Verdict::RuleEquivalent { rule: "ode-nonsingular".into() })
}

/// Rank-based verdicts for Pfaffian systems.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PfaffRules {
    pub left: (usize, usize),
    pub right: (usize, usize),
    pub left_integrable: bool,
    pub right_integrable: bool,
    /// Verdict of the integrable-systems rule.
    pub integrable: Verdict,
    /// Equal rank and corank, the first-order invariant.
    pub first_order_equivalent: bool,
}

pub fn pfaff_rules(s: &PfaffSystem, t: &PfaffSystem) -> PfaffRules {
    let (left, right) = (rank_corank(s), rank_corank(t));
    let (li, ri) = (frobenius_test(s), frobenius_test(t));
    let integrable = if li && ri {
        if left == right {
            Verdict::RuleEquivalent { rule: "integrable".into() }
        } else if left.0 != right.0 {
            Verdict::NotEquivalent { witness: Witness::Dimensions { what: "rank".into(), left: left.0, right: right.0 } }
        } else {
            Verdict::NotEquivalent {
                witness: Witness::Dimensions { what: "corank".into(), left: left.1, right: right.1 },
            }
        }
    } else if li != ri {
        Verdict::NotEquivalent {
            witness: Witness::Dimensions {
                what: "rank of the derived system".into(),
                left: derived_system(s).independent().generators().len(),
                right: derived_system(t).independent().generators().len(),
            },
        }
    } else {
        Verdict::Inconclusive { reason: "neither system is integrable".into() }
    };
    PfaffRules {
        left,
        right,
        left_integrable: li,
        right_integrable: ri,
        integrable,
        first_order_equivalent: left == right,
    }
}

/// The five conditions checked by the gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Condition {
    Differentiability,
    Dimension,
    Transitivity,
    Symbols,
    DeltaCohomology,
}

impl Condition {
    pub const ALL: [Condition; 5] = [
        Condition::Differentiability,
        Condition::Dimension,
        Condition::Transitivity,
        Condition::Symbols,
        Condition::DeltaCohomology,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Condition::Differentiability => "DIFFERENTIABILITY",
            Condition::Dimension => "DIMENSION",
            Condition::Transitivity => "TRANSITIVITY",
            Condition::Symbols => "SYMBOLS",
            Condition::DeltaCohomology => "DELTA_COHOMOLOGY",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Undetermined,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Undetermined => "UNDETERMINED",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionResult {
    pub condition: Condition,
    pub status: Status,
    pub detail: String,
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderRow {
    pub level: usize,
    pub order: usize,
    pub results: Vec<ConditionResult>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GateVerdict {
    Fail { level: usize, condition: Condition, witness: Option<Witness>, detail: String },
    PassNecessary { q0: usize },
    Undetermined { reasons: Vec<String> },
}

impl fmt::Display for GateVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateVerdict::Fail { level, condition, .. } => write!(f, "FAIL({}, order {level})", condition.name()),
            GateVerdict::PassNecessary { q0 } => write!(f, "PASS_NECESSARY(q0 = {q0})"),
            GateVerdict::Undetermined { .. } => f.write_str("UNDETERMINED"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GateReport {
    pub rows: Vec<OrderRow>,
    pub verdict: GateVerdict,
    pub left_spencer: Option<SpencerReport>,
    pub right_spencer: Option<SpencerReport>,
    pub caveat: Option<&'static str>,
}

fn result(condition: Condition, status: Status, detail: String, witness: Option<Witness>) -> ConditionResult {
    ConditionResult { condition, status, detail, witness }
}

/// Rank of the projection of `ker J(p)` onto `(x, u)`.
fn projection_rank(s: &PdeSystem, p: &[Rational]) -> Result<usize> {
    let c = s.chart();
    let base = c.n() + c.m();
    if s.equations().is_empty() {
        return Ok(base);
    }
    let kernel = s.jacobian().eval(p)?.kernel_basis();
    let rows: Vec<Vec<Rational>> = kernel.iter().map(|v| v[..base].to_vec()).collect();
    Ok(Matrix::from_rows(base, rows).rank())
}

struct Side {
    system: PdeSystem,
    dimension: Result<usize>,
    points: Vec<Vec<Rational>>,
}

fn side(s: &PdeSystem, level: usize, samples: usize, rng: &mut impl Rng) -> Side {
    let system = prolong(s, level);
    let dimension = generic_dimension(&system);
    let points = if dimension.is_ok() { sample_points(&system, samples, rng) } else { Vec::new() };
    Side { system, dimension, points }
}

fn differentiability(side: &Side, samples: usize) -> Result<(Status, String, Option<Witness>)> {
    match &side.dimension {
        Err(Error::EmptyLocus(msg)) => return Ok((Status::Fail, format!("empty locus: {msg}"), None)),
        Err(e) => return Err(e.clone()),
        Ok(_) => {}
    }
    if side.points.is_empty() && !side.system.equations().is_empty() {
        return Ok((Status::Undetermined, format!("no on-locus points among {samples} draws"), None));
    }
    match regularity_check(&side.system, &side.points)? {
        Regularity::Regular => Ok((Status::Pass, format!("constant rank at {} points", side.points.len()), None)),
        Regularity::Singular { point, rank, generic_rank } => Ok((
            Status::Fail,
            format!("Jacobian rank {rank} below generic rank {generic_rank}"),
            Some(Witness::Point {
                coords: named_point(side.system.chart(), &point),
                equation: "Jacobian rank".into(),
                value: Rational::from_integer(rank.into()),
            }),
        )),
    }
}

fn transitivity(side: &Side) -> Result<(bool, usize)> {
    let c = side.system.chart();
    let full = c.n() + c.m();
    if side.system.equations().is_empty() {
        return Ok((true, full));
    }
    if side.points.is_empty() {
        return Ok((false, 0));
    }
    let mut worst = full;
    for p in &side.points {
        worst = worst.min(projection_rank(&side.system, p)?);
    }
    Ok((worst == full, worst))
}

/// Necessary conditions for local equivalence of `a` and `b`, order by order
/// for `ℓ = 0..=q_max`. Sampled checks use `samples` points per system.
pub fn gate(a: &PdeSystem, b: &PdeSystem, q_max: usize, samples: usize, rng: &mut impl Rng) -> Result<GateReport> {
    let (ca, cb) = (a.chart(), b.chart());
    if ca.n() != cb.n() || ca.m() != cb.m() || ca.order() != cb.order() {
        let witness = Witness::Dimensions { what: "jet space dimension".into(), left: ca.dimension(), right: cb.dimension() };
        let detail = format!(
            "charts (n, m, k) = ({}, {}, {}) vs ({}, {}, {})",
            ca.n(),
            ca.m(),
            ca.order(),
            cb.n(),
            cb.m(),
            cb.order()
        );
        return Ok(GateReport {
            rows: vec![OrderRow {
                level: 0,
                order: ca.order(),
                results: vec![result(Condition::Dimension, Status::Fail, detail.clone(), Some(witness.clone()))],
            }],
            verdict: GateVerdict::Fail { level: 0, condition: Condition::Dimension, witness: Some(witness), detail },
            left_spencer: None,
            right_spencer: None,
            caveat: None,
        });
    }
    let k = ca.order();
    let n = ca.n();
    let spencer = |s: &PdeSystem| spencer_cohomology(s, k..=k + q_max, 0..=n, &At::Generic).ok();
    let mut rows = Vec::new();
    let mut fail: Option<GateVerdict> = None;
    let mut undetermined = Vec::new();
    let (mut sa, mut sb) = (None, None);
    let mut spencer_done = false;
    for level in 0..=q_max {
        let left = side(a, level, samples, rng);
        let right = side(b, level, samples, rng);
        let mut results = Vec::new();

        let (stl, dl, wl) = differentiability(&left, samples)?;
        let (str_, dr, wr) = differentiability(&right, samples)?;
        let status = if stl == Status::Fail || str_ == Status::Fail {
            Status::Fail
        } else if stl == Status::Undetermined || str_ == Status::Undetermined {
            Status::Undetermined
        } else {
            Status::Pass
        };
        results.push(result(Condition::Differentiability, status, format!("left: {dl}; right: {dr}"), wl.or(wr)));
        let consistent = left.dimension.is_ok() && right.dimension.is_ok();

        if consistent {
            let (dl, dr) = (*left.dimension.as_ref().unwrap(), *right.dimension.as_ref().unwrap());
            let w = Witness::Dimensions { what: "generic dimension".into(), left: dl, right: dr };
            let st = if dl == dr { Status::Pass } else { Status::Fail };
            results.push(result(Condition::Dimension, st, format!("dims {dl} vs {dr}"), (st == Status::Fail).then_some(w)));

            let (tl, rl) = transitivity(&left)?;
            let (tr, rr) = transitivity(&right)?;
            let full = n + ca.m();
            let st = if tl && tr { Status::Pass } else { Status::Undetermined };
            results.push(result(
                Condition::Transitivity,
                st,
                format!("projection to (x, u) has rank {rl} and {rr} of {full} at sampled points"),
                None,
            ));

            let gl = symbol(a, k + level, &At::Generic)?.dim();
            let gr = symbol(b, k + level, &At::Generic)?.dim();
            let st = if gl == gr { Status::Pass } else { Status::Fail };
            let w = Witness::Dimensions { what: format!("symbol dimension at order {}", k + level), left: gl, right: gr };
            results.push(result(Condition::Symbols, st, format!("dim g_{} = {gl} vs {gr}", k + level), (st == Status::Fail).then_some(w)));

            if !spencer_done {
                sa = spencer(a);
                sb = spencer(b);
                spencer_done = true;
            }
            let q = k + level;
            let row = |r: &Option<SpencerReport>| {
                r.as_ref().map(|r| (0..=n).map(|p| r.cohomology[&(q, p)]).collect::<Vec<_>>())
            };
            let (hl, hr) = (row(&sa), row(&sb));
            let (st, detail, w) = match (&hl, &hr) {
                (Some(hl), Some(hr)) if hl == hr => (Status::Pass, format!("H^({q},p) = {hl:?} on both sides"), None),
                (Some(hl), Some(hr)) => {
                    let p = (0..=n).find(|&p| hl[p] != hr[p]).expect("rows differ");
                    (
                        Status::Fail,
                        format!("H^({q},p) = {hl:?} vs {hr:?}"),
                        Some(Witness::Dimensions { what: format!("dim H^({q},{p})"), left: hl[p], right: hr[p] }),
                    )
                }
                _ => (Status::Undetermined, "cohomology unavailable beyond an inconsistent prolongation".into(), None),
            };
            results.push(result(Condition::DeltaCohomology, st, detail, w));
        }

        for r in &results {
            match r.status {
                Status::Fail if fail.is_none() => {
                    fail = Some(GateVerdict::Fail {
                        level,
                        condition: r.condition,
                        witness: r.witness.clone(),
                        detail: r.detail.clone(),
                    })
                }
                Status::Undetermined => undetermined.push(format!("order {level}: {} {}", r.condition.name(), r.detail)),
                _ => {}
            }
        }
        rows.push(OrderRow { level, order: k + level, results });
        if !consistent {
            break;
        }
    }
    let verdict = match fail {
        Some(f) => f,
        None => {
            let q0 = match (&sa, &sb) {
                (Some(x), Some(y)) => match (x.acyclic_from, y.acyclic_from) {
                    (Some(p), Some(q)) => Some(p.max(q)),
                    _ => None,
                },
                _ => None,
            };
            if q0.is_none() {
                undetermined.push(format!("no common 2-acyclicity order up to {}", k + q_max));
            }
            match (undetermined.is_empty(), q0) {
                (true, Some(q0)) => GateVerdict::PassNecessary { q0 },
                _ => GateVerdict::Undetermined { reasons: undetermined },
            }
        }
    };
    let caveat = matches!(verdict, GateVerdict::PassNecessary { .. }).then_some(NECESSARY_CAVEAT);
    Ok(GateReport { rows, verdict, left_spencer: sa, right_spencer: sb, caveat })
}

/// Outcome of sampled conjugation tests.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MembershipReport {
    pub tested: usize,
    pub passed: usize,
    /// First sampled element whose conjugate leaves the second groupoid:
    /// its coordinates and those of the conjugate.
    pub counterexample: Option<(Vec<Rational>, Vec<Rational>)>,
    pub undetermined: Option<String>,
}

/// Samples elements `A` of `gamma` (a system on `J_k(ℝⁿ×ℝⁿ)`) and checks
/// whether `j_k(X) ∘ A ∘ j_k(X⁻¹)` satisfies `gamma2`.
pub fn conjugation_membership(
    x: &InvertiblePolyMap,
    gamma: &PdeSystem,
    gamma2: &PdeSystem,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<MembershipReport> {
    let chart = gamma.chart();
    if chart.n() != chart.m() || !chart.same_shape(gamma2.chart()) || chart.order() != gamma2.order() {
        return Err(Error::Shape("groupoid systems need matching charts with n = m".into()));
    }
    let points = sample_points(gamma, samples, rng);
    let mut report = MembershipReport { tested: 0, passed: 0, counterexample: None, undetermined: None };
    for p in points {
        let Ok(jet) = JetOfMap::from_jet_coordinates(chart, &p) else { continue };
        let conj = conjugate_jet(x, &jet)?;
        let image = conj.to_jet_coordinates(chart)?;
        report.tested += 1;
        if gamma2.check_on_locus(&image).is_ok() {
            report.passed += 1;
        } else if report.counterexample.is_none() {
            report.counterexample = Some((p, image));
        }
    }
    if report.tested == 0 {
        report.undetermined = Some(format!("no invertible on-locus jets among {samples} draws"));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rat;
    use crate::pde::jet_index;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn riccati(c: Rational) -> PdeSystem {
        let ch = JetChart::standard(1, 1, 1);
        let u = Poly::var(1);
        PdeSystem::explicit(ch.clone(), vec![(jet_index(&ch, 0, &[1]), (&u * &u).scale(&c))]).unwrap()
    }

    fn doubling() -> FiberedMap {
        let x = Poly::var(0);
        let u = Poly::var(1);
        FiberedMap::new(1, 1, vec![x.clone()], vec![u.scale(&rat(2, 1))], vec![x], vec![u.scale(&rat(1, 2))]).unwrap()
    }

    #[test]
    fn prolonged_action_of_a_scaling() {
        let ch = JetChart::standard(1, 1, 2);
        let a = prolonged_action(&doubling(), &ch).unwrap();
        assert_eq!(a[2], Poly::var(2).scale(&rat(2, 1)));
        assert_eq!(a[3], Poly::var(3).scale(&rat(2, 1)));
        // x ↦ 2x halves first derivatives
        let x = Poly::var(0);
        let u = Poly::var(1);
        let stretch = FiberedMap::new(1, 1, vec![x.scale(&rat(2, 1))], vec![u.clone()], vec![x.scale(&rat(1, 2))], vec![u]).unwrap();
        let a = prolonged_action(&stretch, &ch).unwrap();
        assert_eq!(a[2], Poly::var(2).scale(&rat(1, 2)));
        assert_eq!(a[3], Poly::var(3).scale(&rat(1, 4)));
    }

    #[test]
    fn absolute_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let v = verify_absolute(&riccati(rat(1, 1)), &riccati(rat(1, 2)), &doubling(), &mut rng).unwrap();
        assert_eq!(v, Verdict::AbsoluteEquivalent);
        let id = FiberedMap::identity(1, 1);
        let s = riccati(rat(1, 1));
        assert_eq!(verify_absolute(&s, &s, &id, &mut rng).unwrap(), Verdict::AbsoluteEquivalent);

        let ch = JetChart::standard(1, 1, 1);
        let u1 = jet_index(&ch, 0, &[1]);
        let a = PdeSystem::explicit(ch.clone(), vec![(u1, Poly::var(1))]).unwrap();
        let b = PdeSystem::explicit(ch, vec![(u1, &Poly::var(1) + &Poly::one())]).unwrap();
        match verify_absolute(&a, &b, &id, &mut rng).unwrap() {
            Verdict::NotEquivalent { witness: Witness::Point { coords, .. } } => {
                assert!(coords.iter().all(|(_, v)| Field::is_zero(v)));
            }
            other => panic!("unexpected {other:?}"),
        }
        let m = verify_merihedric(&riccati(rat(1, 1)), &riccati(rat(1, 2)), &doubling(), 1, &mut rng).unwrap();
        assert_eq!(m, Verdict::MerihedricEquivalent { level: 1 });
    }

    #[test]
    fn bad_inverse_is_rejected() {
        let x = Poly::var(0);
        let u = Poly::var(1);
        let r = FiberedMap::new(1, 1, vec![x.clone()], vec![u.scale(&rat(2, 1))], vec![x], vec![u]);
        assert!(matches!(r, Err(Error::InverseCheck(_))));
    }

    #[test]
    fn ode_rule() {
        let ch = JetChart::standard(1, 1, 1);
        let u1 = jet_index(&ch, 0, &[1]);
        let lin = PdeSystem::explicit(ch.clone(), vec![(u1, Poly::var(1))]).unwrap();
        let sq = PdeSystem::explicit(ch, vec![(u1, Poly::var(1).pow(2))]).unwrap();
        let origin = vec![rat(0, 1); 3];
        assert!(matches!(
            ode_nonsingular_rule(&lin, &sq, Some(&origin), Some(&origin)).unwrap(),
            Verdict::RuleEquivalent { .. }
        ));
        let ch2 = JetChart::standard(1, 2, 1);
        let two = PdeSystem::explicit(
            ch2.clone(),
            vec![(jet_index(&ch2, 0, &[1]), Poly::zero()), (jet_index(&ch2, 1, &[1]), Poly::zero())],
        )
        .unwrap();
        assert!(matches!(ode_nonsingular_rule(&lin, &two, None, None).unwrap(), Verdict::NotEquivalent { .. }));
    }

    #[test]
    fn membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        use crate::jet::PolyMap;
        let x = Poly::var(0);
        let dbl = InvertiblePolyMap { forward: PolyMap::new(vec![x.scale(&rat(2, 1))]), inverse: PolyMap::new(vec![x.scale(&rat(1, 2))]) };
        let ch = JetChart::standard(1, 1, 1);
        let lin = Poly::var(jet_index(&ch, 0, &[1]));
        let unit = PdeSystem::new(ch.clone(), vec![&lin - &Poly::one()]).unwrap();
        let two = PdeSystem::new(ch.clone(), vec![&lin - &Poly::int(2)]).unwrap();
        let r = conjugation_membership(&dbl, &unit, &unit, 10, &mut rng).unwrap();
        assert_eq!((r.tested, r.passed), (10, 10));
        let r = conjugation_membership(&dbl, &unit, &two, 10, &mut rng).unwrap();
        assert!(r.counterexample.is_some() && r.passed == 0);
        let full = PdeSystem::free(ch);
        let r = conjugation_membership(&dbl, &full, &full, 10, &mut rng).unwrap();
        assert_eq!(r.tested, r.passed);
    }

    fn second_order(sign: i64) -> PdeSystem {
        let c = JetChart::standard(2, 1, 2);
        let eq = Poly::var(jet_index(&c, 0, &[2, 0])) + Poly::var(jet_index(&c, 0, &[0, 2])).scale(&rat(sign, 1));
        PdeSystem::new(c, vec![eq]).unwrap()
    }

    #[test]
    fn gate_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let l = second_order(1);
        let r = gate(&l, &l, 2, 3, &mut rng).unwrap();
        assert_eq!(r.verdict, GateVerdict::PassNecessary { q0: 2 });
        assert!(r.caveat.is_some());
        let w = second_order(-1);
        let r = gate(&l, &w, 2, 3, &mut rng).unwrap();
        assert_eq!(r.verdict, GateVerdict::PassNecessary { q0: 2 });

        let c = JetChart::standard(2, 1, 1);
        let ux = Poly::var(jet_index(&c, 0, &[1, 0]));
        let uy = Poly::var(jet_index(&c, 0, &[0, 1]));
        let fin = PdeSystem::new(c.clone(), vec![ux.clone(), uy]).unwrap();
        let one = PdeSystem::new(c, vec![ux]).unwrap();
        let r = gate(&fin, &one, 1, 3, &mut rng).unwrap();
        match r.verdict {
            GateVerdict::Fail { level: 0, condition: Condition::Dimension, witness: Some(Witness::Dimensions { left: 3, right: 4, .. }), .. } => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
