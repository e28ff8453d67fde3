//! Command dispatch for the `plab` binary.
//!
//! Declarations are taken in file order across all inputs: a command that
//! needs two systems uses the first two `system` declarations it finds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{Field, Rational};
use crate::dsl::{self, Decl, MapDecl, PfaffDecl, PointDecl, SourceFile, SystemDecl};
use crate::equivalence::{
    gate, ode_nonsingular_rule, pfaff_rules, prolonged_action, verify_absolute, verify_merihedric, GateVerdict, Verdict,
};
use crate::error::{Error, Result};
use crate::jet::{enumerate_multi_indices, jet_compose, JetChart, JetOfMap, PolyMap};
use crate::pde::{generic_dimension, prolong, prolongation_report, PdeSystem, Regularity};
use crate::pfaffian::{derived_flag, flag_classify, frobenius_test, rank_corank, FlagVerdict};
use crate::report::{inputs_digest, Report};
use crate::spencer::{cartan_characters, spencer_cohomology, symbol, At};

pub const COMMANDS: [&str; 13] = [
    "prolong",
    "dimension",
    "symbol",
    "spencer",
    "cartan",
    "derived-flag",
    "classify-pfaff",
    "frobenius",
    "pfaff-equiv",
    "ode-equiv",
    "equiv-gate",
    "equiv-verify",
    "jet-compose",
];

/// Points sampled per system for regularity and transitivity checks.
pub const SAMPLES: usize = 5;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Args {
    pub command: String,
    pub files: Vec<String>,
    pub order: Option<usize>,
    pub orders: Option<usize>,
    pub point: Option<String>,
    pub levels: Option<usize>,
    pub seed: u64,
    pub json: bool,
}

impl Args {
    pub fn new(command: &str, files: &[&str]) -> Self {
        Args { command: command.into(), files: files.iter().map(|f| f.to_string()).collect(), ..Args::default() }
    }

    fn echo(&self) -> String {
        let mut parts = vec![self.command.clone()];
        parts.extend(self.files.iter().cloned());
        let mut flag = |name: &str, v: Option<String>| {
            if let Some(v) = v {
                parts.push(format!("--{name} {v}"));
            }
        };
        flag("order", self.order.map(|v| v.to_string()));
        flag("orders", self.orders.map(|v| v.to_string()));
        flag("point", self.point.as_ref().map(|p| format!("\"{p}\"")));
        flag("levels", self.levels.map(|v| v.to_string()));
        flag("seed", Some(self.seed.to_string()));
        if self.json {
            parts.push("--json".into());
        }
        parts.join(" ")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub report: Report,
    pub output: String,
    pub exit: i32,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Invariant(_) => 2,
        _ => 1,
    }
}

/// Reads `args.files` from disk and runs the command.
pub fn run_files(args: &Args) -> Outcome {
    let mut inputs = Vec::new();
    for f in &args.files {
        match std::fs::read_to_string(f) {
            Ok(text) => inputs.push((f.clone(), text)),
            Err(e) => return failure(args, &inputs, Error::Usage(format!("cannot read {f}: {e}"))),
        }
    }
    run(args, &inputs)
}

fn failure(args: &Args, inputs: &[(String, String)], e: Error) -> Outcome {
    let mut report = Report::new(args.echo(), inputs_digest(inputs), args.seed);
    report.field("error", &e);
    report.exit_status = exit_code(&e);
    Outcome { output: report.render(args.json), exit: report.exit_status, report }
}

/// Runs a command on `(path, text)` inputs.
pub fn run(args: &Args, inputs: &[(String, String)]) -> Outcome {
    if !COMMANDS.contains(&args.command.as_str()) {
        return failure(args, inputs, Error::Usage(format!("unknown command `{}`", args.command)));
    }
    let mut files = Vec::new();
    for (path, text) in inputs {
        match dsl::parse_named(text, Some(path)) {
            Ok(f) => files.push(f),
            Err(e) => return failure(args, inputs, Error::Usage(format!("{path}:{e}"))),
        }
    }
    let mut report = Report::new(args.echo(), inputs_digest(inputs), args.seed);
    let mut ctx = Ctx { args, files: &files, rng: ChaCha8Rng::seed_from_u64(args.seed) };
    let result = match args.command.as_str() {
        "prolong" => ctx.prolong(&mut report),
        "dimension" => ctx.dimension(&mut report),
        "symbol" => ctx.symbol(&mut report),
        "spencer" => ctx.spencer(&mut report),
        "cartan" => ctx.cartan(&mut report),
        "derived-flag" => ctx.derived_flag(&mut report),
        "classify-pfaff" => ctx.classify_pfaff(&mut report),
        "frobenius" => ctx.frobenius(&mut report),
        "pfaff-equiv" => ctx.pfaff_equiv(&mut report),
        "ode-equiv" => ctx.ode_equiv(&mut report),
        "equiv-gate" => ctx.equiv_gate(&mut report),
        "equiv-verify" => ctx.equiv_verify(&mut report),
        "jet-compose" => ctx.jet_compose(&mut report),
        _ => unreachable!("checked above"),
    };
    match result {
        Ok(()) => {}
        Err(Error::EmptyLocus(msg)) => report.verdict(&args.command, "LOCUS", "EMPTY_LOCUS", msg),
        Err(e) => {
            report.field("error", &e);
            report.exit_status = exit_code(&e);
        }
    }
    Outcome { output: report.render(args.json), exit: report.exit_status, report }
}

struct Ctx<'a> {
    args: &'a Args,
    files: &'a [SourceFile],
    rng: ChaCha8Rng,
}

/// A system with the point attached to it, if any.
struct Loaded<'a> {
    decl: &'a SystemDecl,
    system: PdeSystem,
    point: Option<Vec<(String, Rational)>>,
}

impl<'a> Ctx<'a> {
    fn systems(&self, count: usize) -> Result<Vec<Loaded<'a>>> {
        let mut out: Vec<Loaded<'a>> = Vec::new();
        for f in self.files {
            let point = f.points().next().map(|p: &PointDecl| p.values.clone());
            for d in f.systems() {
                out.push(Loaded { decl: d, system: d.to_system()?, point: point.clone() });
            }
        }
        if out.len() < count {
            return Err(Error::Usage(format!("`{}` needs {count} system declaration(s), found {}", self.args.command, out.len())));
        }
        out.truncate(count);
        if let Some(p) = &self.args.point {
            out[0].point = Some(parse_point(p)?);
        }
        Ok(out)
    }

    fn pfaffians(&self, count: usize) -> Result<Vec<&'a PfaffDecl>> {
        let out: Vec<&'a PfaffDecl> = self.files.iter().flat_map(|f| f.pfaffians()).take(count).collect();
        if out.len() < count {
            return Err(Error::Usage(format!("`{}` needs {count} pfaffian declaration(s), found {}", self.args.command, out.len())));
        }
        Ok(out)
    }

    fn maps(&self) -> Vec<&'a MapDecl> {
        self.files.iter().flat_map(|f| f.maps()).collect()
    }

    fn at(&self, l: &Loaded, s: &PdeSystem) -> Result<At> {
        match &l.point {
            None => Ok(At::Generic),
            Some(values) => Ok(At::Point(resolve_point(s, values)?)),
        }
    }

    fn prolong(&mut self, r: &mut Report) -> Result<()> {
        let sys = self.systems(1)?;
        let s = &sys[0].system;
        let levels = self.args.levels.unwrap_or(1);
        let rows = prolongation_report(s, levels, SAMPLES, &mut self.rng);
        r.field("system", &sys[0].decl.name);
        r.field("levels", levels);
        let mut table = Vec::new();
        for row in &rows {
            let (dim, reg, verdict) = match (&row.dimension, &row.regularity) {
                (Err(Error::EmptyLocus(_)), _) => ("empty".to_string(), "-".to_string(), "EMPTY_LOCUS"),
                (Err(e), _) | (Ok(_), Err(e)) => return Err(e.clone()),
                (Ok(d), Ok(Regularity::Regular)) if row.sampled_points == 0 && row.equations > 0 => {
                    (d.to_string(), "unsampled".to_string(), "UNDETERMINED")
                }
                (Ok(d), Ok(Regularity::Regular)) => (d.to_string(), "regular".to_string(), "REGULAR"),
                (Ok(d), Ok(Regularity::Singular { rank, generic_rank, .. })) => {
                    (d.to_string(), format!("rank {rank} < {generic_rank}"), "SINGULAR")
                }
            };
            r.verdict("prolong", &format!("REGULARITY(level {})", row.level), verdict, "");
            table.push(vec![
                row.level.to_string(),
                row.order.to_string(),
                row.equations.to_string(),
                dim,
                reg,
                row.sampled_points.to_string(),
            ]);
        }
        r.table("prolongation", &["level", "order", "equations", "dimension", "regularity", "points"], table);
        let p = prolong(s, levels);
        let eqs = (0..p.equations().len()).map(|i| vec![i.to_string(), p.display_equation(i)]).collect();
        r.table(format!("equations at level {levels}"), &["#", "equation"], eqs);
        if let Some(form) = p.explicit_form() {
            let c = p.chart();
            let rules = form.rules().iter().map(|(l, e)| vec![c.coord_name(*l), c.display(e)]).collect();
            r.table(format!("solved form at level {levels}"), &["lead", "expression"], rules);
        }
        r.warn(format!("regularity is checked at up to {SAMPLES} sampled points per level"));
        Ok(())
    }

    fn dimension(&mut self, r: &mut Report) -> Result<()> {
        let sys = self.systems(1)?;
        let levels = self.args.levels.unwrap_or(0);
        let p = prolong(&sys[0].system, levels);
        r.field("system", &sys[0].decl.name);
        r.field("level", levels);
        r.field("order", p.order());
        r.field("jet space dimension", p.chart().dimension());
        let d = generic_dimension(&p)?;
        r.field("dimension", d);
        r.verdict("dimension", "LOCUS", "NONEMPTY", format!("generic dimension {d}"));
        Ok(())
    }

    fn symbol(&mut self, r: &mut Report) -> Result<()> {
        let sys = self.systems(1)?;
        let s = &sys[0].system;
        let q = self.args.order.unwrap_or(s.order());
        let at = self.at(&sys[0], &prolong(s, q.saturating_sub(s.order())))?;
        let g = symbol(s, q, &at)?;
        r.field("system", &sys[0].decl.name);
        r.field("order", q);
        r.field("at", describe_at(&at));
        r.field("ambient dimension", g.ambient_dim());
        r.field("dimension", g.dim());
        Ok(())
    }

    fn spencer(&mut self, r: &mut Report) -> Result<()> {
        let sys = self.systems(1)?;
        let s = &sys[0].system;
        let (k, n) = (s.order(), s.chart().n());
        let span = self.args.orders.unwrap_or(2);
        let at = self.at(&sys[0], &prolong(s, span + 1))?;
        let rep = spencer_cohomology(s, k..=k + span, 0..=n, &at)?;
        r.field("system", &sys[0].decl.name);
        r.field("orders", format!("{k}..{}", k + span));
        r.field("at", describe_at(&at));
        let dims = rep.symbol_dims.iter().map(|(q, d)| vec![q.to_string(), d.to_string()]).collect();
        r.table("symbol dimensions", &["q", "dim g_q"], dims);
        let rows = rep.cohomology.iter().map(|((q, p), h)| vec![q.to_string(), p.to_string(), h.to_string()]).collect();
        r.table("cohomology", &["q", "p", "dim H^{q,p}"], rows);
        match rep.acyclic_from {
            Some(q0) => r.verdict("spencer", "2-ACYCLICITY", format!("ACYCLIC_FROM({q0})"), format!("H^{{q,1}} = H^{{q,2}} = 0 for q = {q0}..{}", k + span)),
            None => r.verdict("spencer", "2-ACYCLICITY", "UNDETERMINED", format!("not 2-acyclic at q = {}", k + span)),
        }
        Ok(())
    }

    fn cartan(&mut self, r: &mut Report) -> Result<()> {
        let sys = self.systems(1)?;
        let s = &sys[0].system;
        let at = self.at(&sys[0], &prolong(s, 1))?;
        let c = cartan_characters(s, &at, &mut self.rng)?;
        let weighted: usize = c.characters.iter().enumerate().map(|(i, a)| (i + 1) * a).sum();
        r.field("system", &sys[0].decl.name);
        r.field("order", c.order);
        r.field("at", describe_at(&at));
        r.field("characters", format!("({})", join(&c.characters)));
        r.field(format!("dim g_{}", c.order + 1), c.next_symbol_dim);
        r.field("weighted sum", weighted);
        let flag = c.flag.iter().enumerate().map(|(i, row)| vec![i.to_string(), join(row)]).collect();
        r.table("flag", &["row", "coefficients"], flag);
        let v = if c.involutive { "INVOLUTIVE" } else { "NOT_INVOLUTIVE" };
        r.verdict("cartan", "INVOLUTIVITY", v, format!("dim g_{} = {} vs sum of j*alpha_j = {weighted}", c.order + 1, c.next_symbol_dim));
        r.warn("characters are taken from the best of 5 seeded random flags");
        Ok(())
    }

    fn derived_flag(&mut self, r: &mut Report) -> Result<()> {
        let p = self.pfaffians(1)?[0];
        let s = p.to_system()?;
        let flag = derived_flag(&s);
        r.field("system", &p.name);
        r.field("ranks", join(&flag.ranks));
        r.field("length", flag.length);
        let rows = flag
            .systems
            .iter()
            .enumerate()
            .map(|(i, sys)| {
                let g: Vec<String> = sys.generators().iter().map(|w| sys.display_form(w)).collect();
                vec![i.to_string(), flag.ranks[i].to_string(), g.join("; ")]
            })
            .collect();
        r.table("derived flag", &["step", "rank", "generators"], rows);
        let last = *flag.ranks.last().expect("flag is nonempty");
        r.verdict("derived-flag", "STABILIZATION", format!("RANK({last})"), format!("after {} step(s)", flag.length));
        Ok(())
    }

    fn classify_pfaff(&mut self, r: &mut Report) -> Result<()> {
        let p = self.pfaffians(1)?[0];
        let s = p.to_system()?;
        let (rank, corank) = rank_corank(&s);
        r.field("system", &p.name);
        r.field("rank", rank);
        r.field("corank", corank);
        match flag_classify(&s, SAMPLES, &mut self.rng) {
            FlagVerdict::Flag { length } => r.verdict("classify-pfaff", "FLAG", format!("FLAG({length})"), ""),
            FlagVerdict::NotFlag { reason } => r.verdict("classify-pfaff", "FLAG", "NOT_FLAG", reason),
        }
        r.warn(format!("characteristics are checked at {SAMPLES} sampled points"));
        Ok(())
    }

    fn frobenius(&mut self, r: &mut Report) -> Result<()> {
        let p = self.pfaffians(1)?[0];
        let s = p.to_system()?;
        let (rank, corank) = rank_corank(&s);
        r.field("system", &p.name);
        r.field("rank", rank);
        r.field("corank", corank);
        let v = if frobenius_test(&s) { "INTEGRABLE" } else { "NOT_INTEGRABLE" };
        r.verdict("frobenius", "INTEGRABILITY", v, "");
        Ok(())
    }

    fn pfaff_equiv(&mut self, r: &mut Report) -> Result<()> {
        let ps = self.pfaffians(2)?;
        let (a, b) = (ps[0].to_system()?, ps[1].to_system()?);
        let rules = pfaff_rules(&a, &b);
        r.field("left", &ps[0].name);
        r.field("right", &ps[1].name);
        r.table(
            "invariants",
            &["system", "rank", "corank", "integrable"],
            vec![
                vec![ps[0].name.clone(), rules.left.0.to_string(), rules.left.1.to_string(), rules.left_integrable.to_string()],
                vec![ps[1].name.clone(), rules.right.0.to_string(), rules.right.1.to_string(), rules.right_integrable.to_string()],
            ],
        );
        r.verdict("pfaff-equiv", "INTEGRABLE_RULE", &rules.integrable, "");
        let v = if rules.first_order_equivalent { "EQUIVALENT" } else { "NOT_EQUIVALENT" };
        r.verdict(
            "pfaff-equiv",
            "FIRST_ORDER",
            v,
            format!("(rank, corank) = ({}, {}) vs ({}, {})", rules.left.0, rules.left.1, rules.right.0, rules.right.1),
        );
        Ok(())
    }

    fn ode_equiv(&mut self, r: &mut Report) -> Result<()> {
        let sys = self.systems(2)?;
        let mut pts = Vec::new();
        for l in &sys {
            pts.push(match &l.point {
                Some(v) => Some(resolve_point(&l.system, v)?),
                None => None,
            });
        }
        r.field("left", &sys[0].decl.name);
        r.field("right", &sys[1].decl.name);
        for (l, p) in sys.iter().zip(&pts) {
            if let Some(p) = p {
                r.field(format!("point of {}", l.decl.name), describe_point(l.system.chart(), p));
            }
        }
        let v = match ode_nonsingular_rule(&sys[0].system, &sys[1].system, pts[0].as_deref(), pts[1].as_deref()) {
            Err(Error::UnsupportedForm(msg)) => Verdict::Inconclusive { reason: msg },
            other => other?,
        };
        r.verdict("ode-equiv", "NONSINGULAR_RULE", &v, "");
        Ok(())
    }

    fn equiv_gate(&mut self, r: &mut Report) -> Result<()> {
        let sys = self.systems(2)?;
        let q_max = self.args.orders.unwrap_or(2);
        let g = gate(&sys[0].system, &sys[1].system, q_max, SAMPLES, &mut self.rng)?;
        r.field("left", &sys[0].decl.name);
        r.field("right", &sys[1].decl.name);
        r.field("levels", format!("0..{q_max}"));
        let mut rows = Vec::new();
        for row in &g.rows {
            for c in &row.results {
                rows.push(vec![row.level.to_string(), row.order.to_string(), c.condition.name().into(), c.status.name().into(), c.detail.clone()]);
            }
        }
        r.table("conditions", &["level", "order", "condition", "status", "detail"], rows);
        for (side, rep) in [("left", &g.left_spencer), ("right", &g.right_spencer)] {
            if let Some(rep) = rep {
                let rows = rep.cohomology.iter().map(|((q, p), h)| vec![q.to_string(), p.to_string(), h.to_string()]).collect();
                r.table(format!("{side} cohomology"), &["q", "p", "dim H^{q,p}"], rows);
            }
        }
        match &g.verdict {
            GateVerdict::Fail { level, condition, witness, detail } => {
                let d = match witness {
                    Some(w) => format!("order {level}: {detail}; witness {w}"),
                    None => format!("order {level}: {detail}"),
                };
                r.verdict("equiv-gate", condition.name(), "FAIL", d);
            }
            GateVerdict::PassNecessary { q0 } => {
                r.field("q0", q0);
                r.verdict("equiv-gate", "ALL", "PASS_NECESSARY", format!("common 2-acyclicity from order {q0}"));
            }
            GateVerdict::Undetermined { reasons } => r.verdict("equiv-gate", "ALL", "UNDETERMINED", reasons.join("; ")),
        }
        if let Some(c) = g.caveat {
            r.warn(c);
        }
        r.warn(format!("differentiability and transitivity are checked at {SAMPLES} sampled points per system"));
        Ok(())
    }

    fn equiv_verify(&mut self, r: &mut Report) -> Result<()> {
        let sys = self.systems(2)?;
        let maps = self.maps();
        let m = maps.first().ok_or_else(|| Error::Usage("`equiv-verify` needs a map declaration".into()))?;
        let phi = m.to_fibered()?;
        let level = self.args.levels.unwrap_or(0);
        r.field("left", &sys[0].decl.name);
        r.field("right", &sys[1].decl.name);
        r.field("map", &m.name);
        r.field("level", level);
        let chart = prolong(&sys[0].system, level).chart().clone();
        let action = prolonged_action(&phi, &chart)?;
        let rows = action.iter().enumerate().map(|(i, p)| vec![chart.coord_name(i), chart.display(p)]).collect();
        r.table("prolonged action", &["coordinate", "image"], rows);
        let (condition, v) = if level == 0 {
            ("ABSOLUTE", verify_absolute(&sys[0].system, &sys[1].system, &phi, &mut self.rng)?)
        } else {
            ("MERIHEDRIC", verify_merihedric(&sys[0].system, &sys[1].system, &phi, level, &mut self.rng)?)
        };
        if let Verdict::SampledNoCounterexample { .. } = v {
            r.warn("systems are not both solved: only sampled counterexamples were sought");
        }
        r.verdict("equiv-verify", condition, &v, "");
        Ok(())
    }

    fn jet_compose(&mut self, r: &mut Report) -> Result<()> {
        let maps = self.maps();
        if maps.is_empty() {
            return Err(Error::Usage("`jet-compose` needs at least one map declaration".into()));
        }
        let k = self.args.order.unwrap_or(2);
        let vars: Vec<String> = maps[0].base_vars.iter().chain(&maps[0].fiber_vars).cloned().collect();
        let full = |m: &MapDecl| PolyMap::new(m.base.iter().chain(&m.fiber).cloned().collect());
        let dim = vars.len();
        if let Some(bad) = maps.iter().find(|m| m.base_vars.len() + m.fiber_vars.len() != dim) {
            return Err(Error::Shape(format!("map `{}` does not act on {dim} variables", bad.name)));
        }
        let mut source = vec![<Rational as Field>::zero(); dim];
        if let Some(p) = &self.args.point {
            for (name, v) in parse_point(p)? {
                let i = vars.iter().position(|w| *w == name).ok_or(Error::ChartMismatch(name))?;
                source[i] = v;
            }
        }
        r.field("maps", maps.iter().map(|m| m.name.as_str()).collect::<Vec<_>>().join(" then "));
        r.field("order", k);
        let mut jet = JetOfMap::of_map(&full(maps[0]), &source, k)?;
        let mut direct = full(maps[0]);
        for m in &maps[1..] {
            let next = JetOfMap::of_map(&full(m), jet.target(), k)?;
            jet = jet_compose(&next, &jet)?;
            direct = full(m).compose(&direct);
        }
        if JetOfMap::of_map(&direct, &source, k)? != jet {
            return Err(Error::Invariant("composed jet differs from the jet of the composed map".into()));
        }
        r.field("source", format!("({})", join(jet.source())));
        r.field("target", format!("({})", join(jet.target())));
        let mut rows = Vec::new();
        for (i, var) in vars.iter().enumerate() {
            for beta in enumerate_multi_indices(dim, k).into_iter().skip(1) {
                let v = jet.derivative(i, &beta);
                if !Field::is_zero(&v) {
                    rows.push(vec![var.clone(), beta.to_string(), v.to_string()]);
                }
            }
        }
        r.table("derivatives", &["component", "multi-index", "value"], rows);
        let inv = crate::jet::jet_invert(&jet);
        let back = jet_compose(&inv, &jet)?;
        if back != JetOfMap::identity(source.clone(), k) {
            return Err(Error::Invariant("inverse jet does not compose to the identity".into()));
        }
        r.field("inverse", &inv);
        r.verdict("jet-compose", "CONSISTENCY", "AGREES", "composed jets match the jet of the composed map");
        Ok(())
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn describe_at(at: &At) -> String {
    match at {
        At::Generic => "generic".into(),
        At::Point(p) => format!("({})", join(p)),
    }
}

fn describe_point(c: &JetChart, p: &[Rational]) -> String {
    p.iter().enumerate().map(|(i, v)| format!("{}={v}", c.coord_name(i))).collect::<Vec<_>>().join(", ")
}

/// Parses `"x=1/2, u=0"`.
pub fn parse_point(text: &str) -> Result<Vec<(String, Rational)>> {
    let f = dsl::parse(&format!("point P {{ {text}; }}")).map_err(|e| Error::Usage(format!("--point: {}", e.message)))?;
    match f.decls.into_iter().next() {
        Some(Decl::Point(p)) => Ok(p.values),
        _ => Err(Error::Usage("--point: expected assignments".into())),
    }
}

/// Point on the chart of `s`; unassigned leading coordinates of a solved
/// system are filled in from its rules.
pub fn resolve_point(s: &PdeSystem, values: &[(String, Rational)]) -> Result<Vec<Rational>> {
    let c = s.chart();
    let mut p: Vec<Option<Rational>> = vec![None; c.dimension()];
    for (name, v) in values {
        let i = (0..c.dimension()).find(|&i| c.coord_name(i) == *name).ok_or_else(|| Error::ChartMismatch(name.clone()))?;
        p[i] = Some(v.clone());
    }
    if let Some(form) = s.explicit_form() {
        let params: Vec<Rational> = p.iter().map(|v| v.clone().unwrap_or_else(<Rational as Field>::zero)).collect();
        for (lead, expr) in form.rules() {
            if p[*lead].is_none() && expr.vars().iter().all(|v| p[*v].is_some()) {
                p[*lead] = Some(expr.eval(&params)?);
            }
        }
    }
    let point = p
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| Error::IncompletePoint(c.coord_name(i))))
        .collect::<Result<Vec<_>>>()?;
    s.check_on_locus(&point)?;
    Ok(point)
}
